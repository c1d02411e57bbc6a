//! Acceptance criteria. Each prints one PASS/FAIL line; any failure fails the target.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use backscatter_core::channel::{
    ampdu_capacity, apply_channel, check_frequency_plan, generate_carrier, stf_detect, stf_waveform, ChannelConfig,
    FrequencyPlan, PlanVerdict, AMPDU_BUDGET,
};
use backscatter_core::harness::{
    ber_sweep, constellation_capture, range_search, run_link, ConstellationSpec, LinkSpec, RangeSearch, SweepAxis,
    XtechSetup,
};
use backscatter_core::impedance::{apply_element, gamma_from_impedance, optimize_matching, LogGrid, MatchingSearch};
use backscatter_core::modem::{lora_demodulate, lora_modulate, ChirpParams, Constellation, LoraParams, OfdmParams};
use backscatter_core::tag::{compile_bias, reflect};
use backscatter_core::{CarrierSource, Gamma, Impedance, IqStream, ProtocolConfig, TagConfig, TagModel};
use num_complex::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_reflection_example() -> Outcome {
    let g = gamma_from_impedance(Impedance::new(100.0, 50.0), 50.0).map_err(err)?;
    ensure!((g.0 - Complex64::new(0.4, 0.2)).norm() < 1e-12, "gamma = {g}");
    let (mag, ang) = (g.norm(), g.angle_deg());
    ensure!((mag - 0.447).abs() <= 1e-3, "|gamma| = {mag}");
    ensure!((ang - 26.57).abs() <= 0.01, "angle = {ang}");
    Ok(format!("gamma = {g}, |gamma| = {mag:.4}, angle = {ang:.3} deg"))
}

fn c2_chirp_phase_law() -> Outcome {
    let p = ChirpParams::new(7, 125e3);
    let os = 4.0;
    let fs = p.bw * os;
    let t_sym = p.symbol_time();
    let expected = std::f64::consts::PI * (1u64 << p.sf) as f64;
    let gain = p.phase(0, t_sym) - p.phase(0, 0.0) - std::f64::consts::TAU * p.f0 * t_sym;
    ensure!(
        ((gain - expected) / expected).abs() <= 1e-6,
        "phase gain {gain} vs {expected}"
    );

    let wave = lora_modulate(&[0], &p, fs).map_err(err)?;
    let phase = wave.unwrapped_phase();
    let mut worst_phase = 0.0f64;
    for (n, ph) in phase.iter().enumerate() {
        let model = p.phase(0, n as f64 / fs) - p.phase(0, 0.0);
        worst_phase = worst_phase.max((ph - phase[0] - model).abs());
    }
    ensure!(
        worst_phase < 1e-6,
        "sampled phase departs from the law by {worst_phase} rad"
    );
    let mut worst_freq = 0.0f64;
    for n in 0..phase.len() - 1 {
        let f_fd = (phase[n + 1] - phase[n]) * fs / std::f64::consts::TAU;
        let t_mid = (n as f64 + 0.5) / fs;
        let f_law = p.f0 + p.chirp_rate() * t_mid;
        worst_freq = worst_freq.max((f_fd - f_law).abs());
    }
    ensure!(worst_freq <= p.bw / 1000.0, "frequency error {worst_freq} Hz");
    Ok(format!(
        "gain = {gain:.6} rad (pi*2^7 = {expected:.6}), max |df| = {worst_freq:.3e} Hz at {os}x oversampling"
    ))
}

fn c3_symbol_35_through_tag() -> Outcome {
    let p = ChirpParams::new(7, 125e3);
    let fs = p.bw * 2.0;
    let target = lora_modulate(&[35], &p, fs).map_err(err)?;
    let tag = TagModel::default();
    let space = tag.modulation_space(4096).map_err(err)?;
    let bias = compile_bias(&tag, &target, &space).map_err(err)?;
    let mut errors = 0;
    for run in 0..100 {
        let theta = run as f64 * 0.0628;
        let carrier = IqStream::new(vec![Complex64::from_polar(1.0, theta); target.len()], fs).map_err(err)?;
        let mut rx = reflect(&tag, &carrier, &bias).map_err(err)?;
        for (n, s) in rx.samples.iter_mut().enumerate() {
            *s *= tag.config.shift_sample(n, fs).conj();
        }
        let got = lora_demodulate(&rx, &p).map_err(err)?;
        if got != [35] {
            errors += 1;
        }
    }
    ensure!(errors == 0, "{errors} of 100 runs misdecoded");
    Ok(format!(
        "symbol 35 (100011) recovered in 100/100 runs, radius {:.4}",
        space.effective_radius
    ))
}

fn c4_frequency_plans() -> Outcome {
    let v = |b, m, s| {
        FrequencyPlan::new(b, m, s)
            .map(|p| check_frequency_plan(&p))
            .map_err(err)
    };
    ensure!(v(1e6, 500e3, 1e6)? == PlanVerdict::Valid, "valid plan misclassified");
    ensure!(
        v(40e3, 1e6, 2e6)? == PlanVerdict::SpinningConstellation,
        "spinning plan misclassified"
    );
    ensure!(
        v(2e6, 250e3, 24e6)? == PlanVerdict::ConcentricCircles,
        "concentric plan misclassified"
    );

    let (valid, points) = constellation_capture(&ConstellationSpec::default(), 4).map_err(err)?;
    let clusters: std::collections::BTreeSet<u8> = points.iter().map(|p| p.cluster).collect();
    ensure!(clusters.len() == 4, "{} clusters", clusters.len());
    let worst = valid.angular_std_deg.iter().cloned().fold(0.0, f64::max);
    ensure!(worst < 5.0, "angular std {worst} deg");

    let spin = ConstellationSpec {
        plan: FrequencyPlan::new(40e3, 1e6, 2e6).map_err(err)?,
        ..Default::default()
    };
    let (s, _) = constellation_capture(&spin, 4).map_err(err)?;
    let predicted = (360.0f64 * 40e3 * 4.0 / 1e6) % 360.0;
    let off = (s.group_rotation_deg - predicted).abs();
    ensure!(off <= 2.0, "rotation {} deg vs {predicted}", s.group_rotation_deg);
    Ok(format!(
        "verdicts match; valid plan std <= {worst:.2e} deg; rotation {:.3} deg vs {predicted:.1}",
        s.group_rotation_deg
    ))
}

fn protocols() -> Vec<ProtocolConfig> {
    vec![
        ProtocolConfig::Lora(LoraParams::new(7, 125e3)),
        ProtocolConfig::Zigbee(Default::default()),
        ProtocolConfig::Ble(Default::default()),
        ProtocolConfig::Wifi11b(Default::default()),
        ProtocolConfig::WifiOfdm(OfdmParams {
            constellation: Constellation::Qam16,
            ..Default::default()
        }),
    ]
}

fn c5_modem_roundtrips() -> Outcome {
    let mut lines = Vec::new();
    for (i, p) in protocols().into_iter().enumerate() {
        let g = p.bit_granularity();
        let n = 10_000usize.div_ceil(g) * g;
        let bits: Vec<u8> = (0..n).map(|k| ((k * 2654435761 + i) >> 7 & 1) as u8).collect();
        let rx = p.demodulate(&p.modulate(&bits).map_err(err)?).map_err(err)?;
        let errors = rx.iter().zip(&bits).filter(|(a, b)| a != b).count();
        ensure!(
            errors == 0 && rx.len() >= n,
            "{}: {errors} errors without a channel",
            p.name()
        );

        let snrs: [f64; 5] = match p {
            ProtocolConfig::Lora(_) => [-16.0, -13.0, -10.0, -7.0, -4.0],
            ProtocolConfig::Zigbee(_) | ProtocolConfig::Wifi11b(_) => [-9.0, -6.0, -3.0, 0.0, 3.0],
            ProtocolConfig::Ble(_) => [0.0, 3.0, 6.0, 9.0, 12.0],
            ProtocolConfig::WifiOfdm(_) => [6.0, 9.0, 12.0, 15.0, 18.0],
        };
        let spec = LinkSpec {
            protocol: p,
            trials: 50,
            ..LinkSpec::default()
        };
        let rows = ber_sweep(&spec, SweepAxis::Snr, &snrs, 11 + i as u64).map_err(err)?;
        let ber: Vec<f64> = rows
            .iter()
            .map(|r| r.report.as_ref().map(|r| r.ber).map_err(Clone::clone))
            .collect::<Result<_, _>>()?;
        let rises: Vec<f64> = ber.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).collect();
        ensure!(
            rises.len() <= 1 && rises.iter().all(|d| *d <= 0.1),
            "{}: BER not monotone over {snrs:?}: {ber:?}",
            p.name()
        );
        let shown: Vec<String> = ber.iter().map(|b| format!("{b:.4}")).collect();
        lines.push(format!("{} [{}]", p.name(), shown.join(" ")));
    }
    Ok(format!(
        "10^4 bits clean for all five; BER vs SNR: {}",
        lines.join("; ")
    ))
}

fn lora_at(sf: u8, bw: f64, d: f64) -> Result<backscatter_core::LinkReport, String> {
    let spec = LinkSpec {
        protocol: ProtocolConfig::Lora(LoraParams::new(sf, bw)),
        d_tag_rx: d,
        trials: 50,
        ..LinkSpec::default()
    };
    run_link(&spec, 2024).map_err(err)
}

fn c6_sf_bw_trends() -> Outcome {
    let d = 2200.0;
    let sf7 = lora_at(7, 125e3, d)?;
    let sf12 = lora_at(12, 125e3, d)?;
    let narrow = lora_at(10, 125e3, d)?;
    let wide = lora_at(10, 500e3, d)?;
    ensure!((0.01..=0.10).contains(&sf7.ber), "SF7 BER {} outside 1-10%", sf7.ber);
    ensure!(
        sf12.ber_ci.high < sf7.ber_ci.low,
        "SF12 {:?} not below SF7 {:?}",
        sf12.ber_ci,
        sf7.ber_ci
    );
    ensure!(
        wide.ber_ci.low > narrow.ber_ci.high,
        "BW500 {:?} not above BW125 {:?}",
        wide.ber_ci,
        narrow.ber_ci
    );
    Ok(format!(
        "at {d} m: SF7 {:.4} [{:.4},{:.4}], SF12 {:.4} [{:.4},{:.4}], SF10/125k {:.4} [{:.4},{:.4}], SF10/500k {:.4} [{:.4},{:.4}]",
        sf7.ber, sf7.ber_ci.low, sf7.ber_ci.high,
        sf12.ber, sf12.ber_ci.low, sf12.ber_ci.high,
        narrow.ber, narrow.ber_ci.low, narrow.ber_ci.high,
        wide.ber, wide.ber_ci.low, wide.ber_ci.high,
    ))
}

fn c7_range_ordering() -> Outcome {
    let search = RangeSearch::default();
    let mut los = Vec::new();
    let mut walled = Vec::new();
    for p in protocols() {
        let payload = if matches!(p, ProtocolConfig::WifiOfdm(_)) {
            768
        } else {
            640
        };
        let spec = LinkSpec {
            protocol: p,
            payload_bits: payload,
            trials: 20,
            ..LinkSpec::default()
        };
        let a = range_search(&spec, &search, 77).map_err(err)?;
        let mut wall = spec.clone();
        wall.channel.n_walls = 1;
        let b = range_search(&wall, &search, 77).map_err(err)?;
        los.push((p.name(), a.range_m));
        walled.push(b.range_m);
    }
    let r: Vec<f64> = los.iter().map(|x| x.1).collect();
    ensure!(
        r[0] > r[1] && r[1] > r[3] && r[3] > r[2] && r[2] >= r[4],
        "ordering broken: {los:?}"
    );
    for ((name, a), b) in los.iter().zip(&walled) {
        ensure!(b < a, "{name}: wall range {b} not below {a}");
    }
    let shown: Vec<String> = los
        .iter()
        .zip(&walled)
        .map(|((n, a), b)| format!("{n} {a:.1}/{b:.1} m"))
        .collect();
    Ok(format!("range line-of-sight/one wall: {}", shown.join(", ")))
}

fn c8_nominal_rates() -> Outcome {
    let lora = ProtocolConfig::Lora(LoraParams::new(7, 500e3)).nominal_rate();
    let zigbee = ProtocolConfig::Zigbee(Default::default()).nominal_rate();
    let ble = ProtocolConfig::Ble(Default::default()).nominal_rate();
    ensure!((lora - 27_343.75).abs() < 1.0, "LoRa {lora}");
    ensure!((zigbee - 250e3).abs() < 1e-6, "ZigBee {zigbee}");
    ensure!((ble - 1e6).abs() < 1e-6, "BLE {ble}");
    for (name, ours, measured) in [
        ("LoRa", lora, 27.3e3),
        ("ZigBee", zigbee, 247.1e3),
        ("BLE", ble, 986.5e3),
    ] {
        let rel = (ours - measured).abs() / measured;
        ensure!(
            rel <= 0.02,
            "{name}: {ours} vs measured {measured} ({:.2}%)",
            rel * 100.0
        );
    }
    Ok(format!(
        "LoRa {:.2} kbps, ZigBee {:.0} kbps, BLE {:.0} kbps",
        lora / 1e3,
        zigbee / 1e3,
        ble / 1e3
    ))
}

fn c9_cross_technology() -> Outcome {
    let x = XtechSetup::default();
    let fs = x.lora.sample_rate();
    let src = CarrierSource::WifiAmpdu {
        stf_duration: x.stf_duration,
        subframe_duration: x.subframe_duration,
        n_subframes: 4,
        tone_offset: x.tone_offset,
    };
    let (carrier, _) = generate_carrier(&src, x.stf_duration + 4.0 * x.subframe_duration, fs).map_err(err)?;
    let template = stf_waveform(x.stf_duration, fs).samples;
    let mut worst = 0usize;
    for trial in 0..100u64 {
        let offset = ((trial * 37) % 200) as usize;
        let mut samples = vec![Complex64::new(0.0, 0.0); offset];
        samples.extend_from_slice(&carrier.samples);
        let cfg = ChannelConfig {
            fixed_snr_db: Some(10.0),
            rng_seed: trial,
            ..ChannelConfig::default()
        };
        let rx = apply_channel(&IqStream::new(samples, fs).map_err(err)?, 0.0, &cfg).map_err(err)?;
        let lag = stf_detect(&rx, &template, x.stf_threshold).map_err(err)?;
        worst = worst.max(lag.abs_diff(offset));
    }
    ensure!(worst <= 1, "STF located {worst} samples off");

    let cap = ampdu_capacity(7, 125e3, AMPDU_BUDGET);
    ensure!(cap == 70, "capacity {cap}");
    ensure!(
        cap as f64 * 128.0 / 125e3 <= AMPDU_BUDGET,
        "capacity overruns the budget"
    );

    let ampdu = run_link(&x.link_spec(true, 9).map_err(err)?, 9).map_err(err)?;
    let bursts = run_link(&x.link_spec(false, 9).map_err(err)?, 9).map_err(err)?;
    ensure!(ampdu.prr >= 0.85, "A-MPDU PRR {}", ampdu.prr);
    ensure!(ampdu.sync_misses == Some(0), "sync misses {:?}", ampdu.sync_misses);
    Ok(format!(
        "STF within {worst} sample(s) in 100 trials at 10 dB; capacity {cap} symbols; PRR {:.3} over A-MPDU vs {:.3} over separate bursts at {} dB per-sample SNR",
        ampdu.prr,
        bursts.prr,
        x.channel.fixed_snr_db.unwrap_or(f64::NAN)
    ))
}

fn c10_matching_optimization() -> Outcome {
    let tag = TagModel {
        config: TagConfig {
            fixed_offset: Gamma::new(0.3, 0.1),
            space_rotation: 20f64.to_radians(),
            ..TagConfig::default()
        },
        ..TagModel::default()
    };
    let search = MatchingSearch {
        inductors: LogGrid {
            min: 0.1e-9,
            max: 100e-9,
            points: 40,
        },
        capacitors: LogGrid {
            min: 0.05e-12,
            max: 50e-12,
            points: 40,
        },
        boundary_samples: 1024,
        ..MatchingSearch::default()
    };
    let choice = optimize_matching(&tag.curve, &tag.config, &search).map_err(err)?;
    ensure!(
        choice.effective_radius > choice.baseline_radius,
        "radius {} not above empty-network {}",
        choice.effective_radius,
        choice.baseline_radius
    );

    let mut worst = 0.0f64;
    for e in &choice.network.elements {
        for k in 0..200 {
            let z = Impedance::new(1.0 + k as f64 * 2.5, -250.0 + k as f64 * 2.5);
            let out = apply_element(e, z, choice.network.frequency).map_err(err)?;
            let drift = if e.kind.is_series() {
                (out.0.re - z.0.re).abs() / z.0.re
            } else {
                (out.0.inv().re - z.0.inv().re).abs() / z.0.inv().re
            };
            worst = worst.max(drift);
        }
    }
    ensure!(worst <= 1e-12, "series/shunt invariant drift {worst}");
    let elements: Vec<String> = choice
        .network
        .elements
        .iter()
        .map(|e| format!("{:?} {:.3e}", e.kind, e.value))
        .collect();
    Ok(format!(
        "radius {:.4} -> {:.4} with [{}], invariant drift {worst:.1e}",
        choice.baseline_radius,
        choice.effective_radius,
        elements.join(", ")
    ))
}

fn run_cli(dir: &Path, tag: &str, args: &[&str]) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = dir.join(tag);
    std::fs::create_dir_all(&out).map_err(err)?;
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_backscatter"));
    cmd.args(args).current_dir(&out);
    let res = cmd.output().map_err(err)?;
    ensure!(
        res.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let mut files = vec![("stdout".to_string(), res.stdout)];
    let mut names: Vec<_> = std::fs::read_dir(&out)
        .map_err(err)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for n in names {
        files.push((n.clone(), std::fs::read(out.join(&n)).map_err(err)?));
    }
    Ok(files)
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let commands: &[(&str, &[&str])] = &[
        (
            "link",
            &["link", "--seed", "5", "--trials", "8", "--snr", "-8", "-o", "out.json"],
        ),
        (
            "sweep",
            &[
                "sweep",
                "--seed",
                "5",
                "--trials",
                "4",
                "--axis",
                "snr",
                "--values=-14,-10,-6",
                "-o",
                "out.csv",
            ],
        ),
        (
            "range",
            &[
                "range",
                "--seed",
                "5",
                "--trials",
                "4",
                "--set",
                "protocol.kind=zigbee",
                "-o",
                "out.json",
            ],
        ),
        (
            "constellation",
            &[
                "constellation",
                "--seed",
                "5",
                "--set",
                "constellation.snr_db=20",
                "-o",
                "pts.csv",
                "--stats",
                "stats.json",
            ],
        ),
        ("xtech", &["xtech", "--seed", "5", "--trials", "6", "-o", "out.json"]),
        (
            "synth",
            &[
                "synth",
                "--bits",
                "c0ffee",
                "--set",
                "protocol.kind=zigbee",
                "-o",
                "out.iq",
            ],
        ),
        (
            "modspace",
            &[
                "modspace",
                "--grid-step",
                "0.05",
                "-o",
                "space.csv",
                "--summary",
                "summary.json",
            ],
        ),
    ];
    let mut checked = 0;
    for (name, args) in commands {
        let first = run_cli(dir.path(), &format!("{name}-a"), args)?;
        let second = run_cli(dir.path(), &format!("{name}-b"), args)?;
        ensure!(first.len() == second.len(), "{name}: different file sets");
        for ((fa, a), (fb, b)) in first.iter().zip(&second) {
            ensure!(fa == fb && a == b, "{name}: {fa} differs between runs");
            checked += 1;
        }
        ensure!(
            first
                .iter()
                .any(|(_, b)| String::from_utf8_lossy(b).contains("config_sha256")),
            "{name}: no output carries a provenance header"
        );
    }
    Ok(format!(
        "{} commands, {checked} outputs byte-identical across reruns",
        commands.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 reflection coefficient example", c1_reflection_example),
        ("2 chirp phase law", c2_chirp_phase_law),
        ("3 LoRa symbol 35 through the tag", c3_symbol_35_through_tag),
        ("4 frequency plans and constellations", c4_frequency_plans),
        ("5 modem roundtrips and SNR monotonicity", c5_modem_roundtrips),
        ("6 SF and bandwidth trends", c6_sf_bw_trends),
        ("7 range ordering and walls", c7_range_ordering),
        ("8 nominal rates", c8_nominal_rates),
        ("9 cross-technology over A-MPDU", c9_cross_technology),
        ("10 matching optimization", c10_matching_optimization),
        ("11 determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
