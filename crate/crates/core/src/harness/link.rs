//! End-to-end link: carrier, source-to-tag loss, tag synthesis, tag-to-receiver
//! loss, noise, receiver and framing metrics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{derive_seed, wilson, Interval};
use crate::channel::{
    apply_channel, check_frequency_plan, generate_carrier, path_loss_db, stf_detect, stf_waveform, CarrierSource,
    ChannelConfig, FrequencyPlan, PlanVerdict,
};
use crate::error::{invalid, Error, Result};
use crate::impedance::{ModulationSpace, DEFAULT_BOUNDARY_SAMPLES};
use crate::iq::{tone_sample, IqStream};
use crate::modem::{LoraParams, ProtocolConfig};
use crate::tag::{compile_bias, reflect, TagModel};

pub const CHECKSUM_BITS: usize = 16;

/// How the tag finds the start of its transmit window.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TagSync {
    /// The tag starts exactly where the carrier's payload part begins.
    #[default]
    Ideal,
    /// The tag cross-correlates the incident carrier against the STF; the
    /// incident signal is observed at `snr_db`.
    Stf { snr_db: f64, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkSpec {
    pub protocol: ProtocolConfig,
    /// `None` is a tone at the protocol sample rate, which is DC after sampling.
    pub carrier: Option<CarrierSource>,
    pub tag: TagModel,
    pub tag_sync: TagSync,
    pub d_source_tag: f64,
    pub d_tag_rx: f64,
    pub channel: ChannelConfig,
    pub payload_bits: usize,
    pub frame_bits: usize,
    pub trials: usize,
    pub boundary_samples: usize,
    pub allow_invalid_plan: bool,
}

impl Default for LinkSpec {
    fn default() -> Self {
        Self {
            protocol: ProtocolConfig::Lora(LoraParams::new(7, 125e3)),
            carrier: None,
            tag: TagModel::default(),
            tag_sync: TagSync::Ideal,
            d_source_tag: 0.2,
            d_tag_rx: 1.0,
            channel: ChannelConfig::default(),
            payload_bits: 640,
            frame_bits: 64,
            trials: 50,
            boundary_samples: DEFAULT_BOUNDARY_SAMPLES,
            allow_invalid_plan: false,
        }
    }
}

impl LinkSpec {
    pub fn carrier_source(&self) -> CarrierSource {
        self.carrier.unwrap_or(CarrierSource::Tone {
            f_b: self.protocol.sample_rate(),
        })
    }

    /// Plan implied by the carrier, the protocol's modulation bandwidth and
    /// the receiver sampling rate.
    pub fn plan(&self) -> FrequencyPlan {
        FrequencyPlan {
            f_b: self.carrier_source().tone_frequency().abs(),
            f_m: self.protocol.modulation_frequency(),
            f_s: self.protocol.sample_rate(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.protocol.validate()?;
        self.carrier_source().validate()?;
        self.tag.validate()?;
        self.channel.validate()?;
        for (what, d) in [("d_source_tag", self.d_source_tag), ("d_tag_rx", self.d_tag_rx)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(invalid(format!("{what} must be positive, got {d}")));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.frame_bits == 0 || self.frame_bits % 16 != 0 {
            return Err(invalid("frame_bits must be a non-zero multiple of 16"));
        }
        if self.payload_bits == 0 || self.payload_bits % self.frame_bits != 0 {
            return Err(invalid(format!(
                "payload_bits {} must be a non-zero multiple of frame_bits {}",
                self.payload_bits, self.frame_bits
            )));
        }
        let verdict = check_frequency_plan(&self.plan());
        if verdict != PlanVerdict::Valid && !self.allow_invalid_plan {
            return Err(invalid(format!(
                "frequency plan {:?} is {verdict:?}; set allow_invalid_plan for a violation demo",
                self.plan()
            )));
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.payload_bits / self.frame_bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub protocol: String,
    pub d_source_tag: f64,
    pub d_tag_rx: f64,
    pub ber: f64,
    pub ber_ci: Interval,
    pub prr: f64,
    pub prr_ci: Interval,
    pub throughput_bps: f64,
    pub nominal_rate_bps: f64,
    /// `None` for a noiseless channel.
    pub snr_db: Option<f64>,
    pub bit_errors: u64,
    pub payload_bits: u64,
    pub frames_ok: u64,
    pub frames: u64,
    pub effective_radius: f64,
    pub plan_verdict: PlanVerdict,
    /// Trials whose STF estimate was off by more than one sample.
    pub sync_misses: Option<u64>,
    pub seeds: Vec<u64>,
}

/// 16-bit additive checksum over the big-endian 16-bit words of `bits`.
pub fn frame_checksum(bits: &[u8]) -> u16 {
    bits.chunks(16).fold(0u16, |acc, word| {
        let w = word.iter().fold(0u16, |a, &b| (a << 1) | u16::from(b & 1));
        acc.wrapping_add(w)
    })
}

fn push_word(bits: &mut Vec<u8>, w: u16) {
    bits.extend((0..16).rev().map(|i| ((w >> i) & 1) as u8));
}

/// Payload split into frames of `frame_bits`, each followed by its checksum.
pub fn frame_payload(payload: &[u8], frame_bits: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() / frame_bits * (frame_bits + CHECKSUM_BITS));
    for frame in payload.chunks(frame_bits) {
        out.extend_from_slice(frame);
        push_word(&mut out, frame_checksum(frame));
    }
    out
}

struct Prepared<'a> {
    spec: &'a LinkSpec,
    space: ModulationSpace,
    fs: f64,
    tx_bits: usize,
    target_len: usize,
    carrier: IqStream,
    /// Where the tag should start (end of any preamble).
    payload_start: usize,
    template: Vec<Complex64>,
    loss_up: f64,
    loss_down: f64,
}

struct Trial {
    bit_errors: u64,
    frames_ok: u64,
    signal_power: f64,
    noise_variance: f64,
    sync_miss: bool,
}

fn prepare(spec: &LinkSpec) -> Result<Prepared<'_>> {
    spec.validate()?;
    let fs = spec.protocol.sample_rate();
    let framed = spec.frames() * (spec.frame_bits + CHECKSUM_BITS);
    let g = spec.protocol.bit_granularity();
    let tx_bits = framed.div_ceil(g) * g;
    let target_len = spec.protocol.modulate(&vec![0; tx_bits])?.len();
    let space = spec.tag.modulation_space(spec.boundary_samples)?;
    let src = spec.carrier_source();
    let (payload_start, template, duration) = match src {
        CarrierSource::Tone { .. } => (0, Vec::new(), target_len as f64 / fs),
        CarrierSource::WifiAmpdu { stf_duration, .. } | CarrierSource::WifiBursts { stf_duration, .. } => {
            let stf = stf_waveform(stf_duration, fs).samples;
            let n = stf.len();
            // room for a late STF estimate
            (n, stf, (2 * n + target_len) as f64 / fs)
        }
    };
    let (carrier, _) = generate_carrier(&src, duration, fs)?;
    let amplitude = 10f64.powf(spec.channel.tx_power_dbm / 20.0);
    // walls sit on the tag-to-receiver hop only
    let line_of_sight = ChannelConfig {
        n_walls: 0,
        ..spec.channel.clone()
    };
    let loss_up = path_loss_db(spec.d_source_tag, spec.channel.carrier_freq, &line_of_sight)?;
    let loss_down = path_loss_db(spec.d_tag_rx, spec.channel.carrier_freq, &spec.channel)?;
    Ok(Prepared {
        spec,
        space,
        fs,
        tx_bits,
        target_len,
        carrier: carrier.scaled(amplitude),
        payload_start,
        template,
        loss_up,
        loss_down,
    })
}

fn run_trial(p: &Prepared<'_>, seed: u64) -> Result<Trial> {
    let spec = p.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payload: Vec<u8> = (0..spec.payload_bits).map(|_| rng.random_range(0..=1u8)).collect();
    let mut tx_bits = frame_payload(&payload, spec.frame_bits);
    tx_bits.resize(p.tx_bits, 0);

    let target = spec.protocol.modulate(&tx_bits)?;
    let incident = apply_channel(&p.carrier, p.loss_up, &ChannelConfig::noiseless())?;

    let (start, sync_miss) = match spec.tag_sync {
        TagSync::Ideal => (p.payload_start, false),
        TagSync::Stf { snr_db, threshold } => {
            if p.template.is_empty() {
                (p.payload_start, false)
            } else {
                let window = IqStream {
                    samples: incident.samples[..2 * p.template.len()].to_vec(),
                    sample_rate: p.fs,
                };
                let cfg = ChannelConfig {
                    fixed_snr_db: Some(snr_db),
                    rng_seed: seed ^ 0x5354_4600,
                    ..ChannelConfig::default()
                };
                let observed = apply_channel(&window, 0.0, &cfg)?;
                let lag = stf_detect(&observed, &p.template, threshold)?;
                (lag + p.template.len(), lag > 1)
            }
        }
    };
    if start + p.target_len > incident.len() {
        return Err(Error::TooShort {
            need: start + p.target_len,
            got: incident.len(),
        });
    }

    let bias = compile_bias(&spec.tag, &target, &p.space)?;
    let slice = IqStream {
        samples: incident.samples[start..start + p.target_len].to_vec(),
        sample_rate: p.fs,
    };
    let reflected = reflect(&spec.tag, &slice, &bias)?;

    // receiver timeline: ideal timing at the true payload start
    let rx_start = p.payload_start;
    let mut timeline = vec![Complex64::new(0.0, 0.0); p.target_len];
    for (n, s) in reflected.samples.iter().enumerate() {
        if let Some(slot) = (start + n).checked_sub(rx_start).and_then(|k| timeline.get_mut(k)) {
            *slot = *s;
        }
    }
    let clean = IqStream::new(timeline, p.fs)?.scaled(10f64.powf(-p.loss_down / 20.0));
    let signal_power = clean.power();
    let channel = ChannelConfig {
        rng_seed: derive_seed(seed, 1, 0),
        ..spec.channel.clone()
    };
    let mut rx = apply_channel(&clean, 0.0, &channel)?;
    let noise_variance = match channel.fixed_snr_db {
        Some(snr) => signal_power / 10f64.powf(snr / 10.0),
        None => channel.noise_variance(p.fs),
    };

    let f_tone = spec.carrier_source().tone_frequency();
    for (n, s) in rx.samples.iter_mut().enumerate() {
        *s *= spec.tag.config.shift_sample(n, p.fs).conj() * tone_sample(f_tone, n, p.fs).conj();
    }

    let mut got = spec.protocol.demodulate(&rx)?;
    got.resize(tx_bits.len(), 2);
    let block = spec.frame_bits + CHECKSUM_BITS;
    let mut bit_errors = 0;
    let mut frames_ok = 0;
    for (sent, recv) in tx_bits.chunks(block).zip(got.chunks(block)).take(spec.frames()) {
        let (sp, rp) = (&sent[..spec.frame_bits], &recv[..spec.frame_bits]);
        bit_errors += sp.iter().zip(rp).filter(|(a, b)| a != b).count() as u64;
        let recv_sum = recv[spec.frame_bits..]
            .iter()
            .fold(0u16, |a, &b| (a << 1) | u16::from(b & 1));
        let valid_bits = recv.iter().all(|&b| b <= 1);
        if valid_bits && frame_checksum(rp) == recv_sum {
            frames_ok += 1;
        }
    }
    Ok(Trial {
        bit_errors,
        frames_ok,
        signal_power,
        noise_variance,
        sync_miss,
    })
}

/// One Monte-Carlo point; trials run in parallel with seeds derived from
/// `(seed, row, trial)`.
pub fn run_link_row(spec: &LinkSpec, seed: u64, row: u64) -> Result<LinkReport> {
    let p = prepare(spec).map_err(|e| e.context(format!("preparing {} link", spec.protocol.name())))?;
    let seeds: Vec<u64> = (0..spec.trials as u64).map(|t| derive_seed(seed, row, t)).collect();
    let trials: Vec<Trial> = seeds
        .par_iter()
        .map(|&s| run_trial(&p, s).map_err(|e| e.context(format!("trial seed {s:#018x}"))))
        .collect::<Result<_>>()?;

    let n = trials.len() as u64;
    let bits = n * spec.payload_bits as u64;
    let frames = n * spec.frames() as u64;
    let bit_errors: u64 = trials.iter().map(|t| t.bit_errors).sum();
    let frames_ok: u64 = trials.iter().map(|t| t.frames_ok).sum();
    let airtime = p.target_len as f64 / p.fs * n as f64;
    let signal: f64 = trials.iter().map(|t| t.signal_power).sum::<f64>() / n as f64;
    let noise: f64 = trials.iter().map(|t| t.noise_variance).sum::<f64>() / n as f64;
    let sync_misses = match (spec.tag_sync, p.template.is_empty()) {
        (TagSync::Stf { .. }, false) => Some(trials.iter().filter(|t| t.sync_miss).count() as u64),
        _ => None,
    };
    Ok(LinkReport {
        protocol: spec.protocol.name().to_string(),
        d_source_tag: spec.d_source_tag,
        d_tag_rx: spec.d_tag_rx,
        ber: bit_errors as f64 / bits as f64,
        ber_ci: wilson(bit_errors, bits),
        prr: frames_ok as f64 / frames as f64,
        prr_ci: wilson(frames_ok, frames),
        throughput_bps: (bits - bit_errors) as f64 / airtime,
        nominal_rate_bps: spec.protocol.nominal_rate(),
        snr_db: (noise > 0.0).then(|| 10.0 * (signal / noise).log10()),
        bit_errors,
        payload_bits: bits,
        frames_ok,
        frames,
        effective_radius: p.space.effective_radius,
        plan_verdict: check_frequency_plan(&spec.plan()),
        sync_misses,
        seeds,
    })
}

pub fn run_link(spec: &LinkSpec, seed: u64) -> Result<LinkReport> {
    run_link_row(spec, seed, 0)
}
