mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use backscatter_core::channel::{check_frequency_plan, FrequencyPlan};
use backscatter_core::harness::{ber_sweep, constellation_capture, range_search, run_link, write_sweep_csv, SweepAxis};
use backscatter_core::impedance::{optimize_matching, reachable_space};
use backscatter_core::tag::{compile_bias, reflect};
use backscatter_core::IqStream;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use config::{load, parse_assignment, parse_hex_bits, Loaded, SweepConfig};

const TOOL: &str = "backscatter";

#[derive(Parser)]
#[command(name = TOOL, version, about = "Backscatter radio baseband simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set channel.n_walls=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct LinkFlags {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    payload_bits: Option<usize>,
    #[arg(long)]
    d_source_tag: Option<f64>,
    #[arg(long)]
    d_tag_rx: Option<f64>,
    /// Fixed receiver SNR in dB, replacing the noise density.
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    noise_psd: Option<f64>,
    #[arg(long)]
    walls: Option<u32>,
}

impl LinkFlags {
    fn overrides(&self) -> Vec<(String, Value)> {
        let mut o = Vec::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        put("trials", self.trials.map(Value::from));
        put("payload_bits", self.payload_bits.map(Value::from));
        put("d_source_tag", self.d_source_tag.map(Value::from));
        put("d_tag_rx", self.d_tag_rx.map(Value::from));
        put("channel.fixed_snr_db", self.snr.map(Value::from));
        put("channel.noise_psd_dbm_hz", self.noise_psd.map(Value::from));
        put("channel.n_walls", self.walls.map(Value::from));
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a protocol waveform through the tag: IQ file plus bias CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Payload as hex, most significant bit first.
        #[arg(long)]
        bits: Option<String>,
        /// Bias waveform CSV; defaults to `<out>.bias.csv`.
        #[arg(long)]
        bias: Option<PathBuf>,
    },
    /// Modulation space point cloud (CSV) and summary (JSON).
    Modspace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid_step: Option<f64>,
        /// Search for the matching ladder that maximizes the effective radius.
        #[arg(long)]
        optimize: bool,
        /// Summary JSON path; standard error when omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Classify a carrier / modulation / sampling frequency plan.
    PlanCheck {
        #[arg(long)]
        f_b: f64,
        #[arg(long)]
        f_m: f64,
        #[arg(long)]
        f_s: f64,
    },
    /// One Monte-Carlo link point as JSON.
    Link {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: LinkFlags,
    },
    /// Sweep one axis and write CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: LinkFlags,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
    },
    /// Farthest tag-to-receiver distance meeting the BER target, as JSON.
    Range {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: LinkFlags,
        #[arg(long)]
        ber_target: Option<f64>,
    },
    /// 4-QAM capture under a frequency plan: point CSV plus stats JSON.
    Constellation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Stats JSON path; standard error when omitted.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// LoRa over an emulated Wi-Fi A-MPDU carrier, compared with separate bursts.
    Xtech {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AxisArg {
    DTagRx,
    DSourceTag,
    Sf,
    Bw,
    Snr,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::DTagRx => SweepAxis::DTagRx,
            AxisArg::DSourceTag => SweepAxis::DSourceTag,
            AxisArg::Sf => SweepAxis::Sf,
            AxisArg::Bw => SweepAxis::Bw,
            AxisArg::Snr => SweepAxis::Snr,
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    tool: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: Provenance<'a>,
    #[serde(flatten)]
    body: T,
}

fn provenance_line(digest: &str, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(String::new, |s| format!(" seed={s}"));
    format!("# {TOOL} {} config_sha256={digest}{seed}\n", env!("CARGO_PKG_VERSION"))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, loaded: &Loaded, seed: Option<u64>, body: T) -> Result<()> {
    let doc = WithProvenance {
        provenance: Provenance {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: &loaded.digest,
            seed,
        },
        body,
    };
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn json_to_stderr_or<T: Serialize>(path: Option<&Path>, loaded: &Loaded, seed: Option<u64>, body: T) -> Result<()> {
    match path {
        Some(_) => write_json(path, loaded, seed, body),
        None => {
            let mut buf = Vec::new();
            serde_json::to_writer_pretty(&mut buf, &body)?;
            eprintln!("{}", String::from_utf8_lossy(&buf));
            Ok(())
        }
    }
}

fn csv_sink(path: Option<&Path>, loaded: &Loaded, seed: Option<u64>) -> Result<Box<dyn Write>> {
    let mut w = sink(path)?;
    w.write_all(provenance_line(&loaded.digest, seed).as_bytes())?;
    Ok(w)
}

fn overrides(common: &Common, extra: Vec<(String, Value)>) -> Result<Vec<(String, Value)>> {
    let mut o: Vec<(String, Value)> = common.set.iter().map(|s| parse_assignment(s)).collect::<Result<_>>()?;
    o.extend(extra);
    Ok(o)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PlanCheck { f_b, f_m, f_s } => {
            let plan = FrequencyPlan::new(f_b, f_m, f_s)?;
            let verdict = check_frequency_plan(&plan);
            println!(
                "{}",
                serde_json::to_string(&serde_json::json!({"plan": plan, "verdict": verdict}))?
            );
        }
        Command::Synth { common, bits, bias } => {
            let mut extra = Vec::new();
            if let Some(b) = bits {
                extra.push(("bits".to_string(), Value::String(b)));
            }
            let loaded = load(common.config.as_deref(), &overrides(&common, extra)?)?;
            let cfg = &loaded.config;
            let Some(hex) = cfg.bits.as_deref() else {
                bail!("synth needs a payload: pass --bits or set `bits` in the config");
            };
            let Some(out) = common.out.as_deref() else {
                bail!("synth writes an IQ file and needs --out");
            };
            let mut payload = parse_hex_bits(hex)?;
            let g = cfg.link.protocol.bit_granularity();
            payload.resize(payload.len().div_ceil(g) * g, 0);
            let tag = &cfg.link.tag;
            let target = cfg.link.protocol.modulate(&payload)?;
            let space = tag.modulation_space(cfg.link.boundary_samples)?;
            let waveform = compile_bias(tag, &target, &space)?;
            let unit = IqStream::new(vec![Complex64::new(1.0, 0.0); target.len()], target.sample_rate)?;
            let reflected = reflect(tag, &unit, &waveform)?;
            let description = format!(
                "{} reflection, {} payload bits; {}",
                cfg.link.protocol.name(),
                payload.len(),
                provenance_line(&loaded.digest, None)
                    .trim_start_matches("# ")
                    .trim_end()
            );
            reflected.write(out, &description)?;
            let bias_path = bias.unwrap_or_else(|| out.with_extension("bias.csv"));
            let mut w = csv_sink(Some(&bias_path), &loaded, None)?;
            waveform.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Modspace {
            common,
            grid_step,
            optimize,
            summary,
        } => {
            let mut extra = Vec::new();
            if let Some(s) = grid_step {
                extra.push(("modspace.grid_step".to_string(), Value::from(s)));
            }
            if optimize {
                extra.push(("modspace.optimize".to_string(), Value::Bool(true)));
            }
            let loaded = load(common.config.as_deref(), &overrides(&common, extra)?)?;
            let cfg = &loaded.config;
            let mut tag = cfg.link.tag.clone();
            let choice = if cfg.modspace.optimize {
                let c = optimize_matching(&tag.curve, &tag.config, &cfg.modspace.search)?;
                tag.matching = c.network.clone();
                Some(c)
            } else {
                None
            };
            let mut space = reachable_space(&tag.curve, &tag.config, &tag.matching, cfg.modspace.grid_step)?;
            let boundary = tag.modulation_space(cfg.modspace.boundary_samples)?;
            space.boundary = boundary.boundary;
            space.effective_radius = boundary.effective_radius;
            let mut w = csv_sink(common.out.as_deref(), &loaded, None)?;
            {
                let mut c = csv::Writer::from_writer(&mut w);
                c.write_record(["gamma_re", "gamma_im", "kind"])?;
                for (kind, pts) in [("point", &space.points), ("boundary", &space.boundary)] {
                    for g in pts.iter() {
                        c.write_record([format!("{:.9}", g.re()), format!("{:.9}", g.im()), kind.to_string()])?;
                    }
                }
                c.write_record([
                    format!("{:.9}", space.fixed_offset.re()),
                    format!("{:.9}", space.fixed_offset.im()),
                    "fixed-offset".to_string(),
                ])?;
                c.flush()?;
            }
            w.flush()?;
            let body = serde_json::json!({
                "effective_radius": space.effective_radius,
                "network": tag.matching,
                "baseline_radius": choice.as_ref().map(|c| c.baseline_radius),
                "grid_points": space.points.len(),
            });
            json_to_stderr_or(summary.as_deref(), &loaded, None, body)?;
        }
        Command::Link { common, flags } => {
            let loaded = load(common.config.as_deref(), &overrides(&common, flags.overrides())?)?;
            let report = run_link(&loaded.config.link, flags.seed)?;
            write_json(common.out.as_deref(), &loaded, Some(flags.seed), report)?;
        }
        Command::Sweep {
            common,
            flags,
            axis,
            values,
        } => {
            let mut extra = flags.overrides();
            if let Some(a) = axis {
                extra.push(("sweep.axis".into(), serde_json::to_value(SweepAxis::from(a))?));
            }
            if let Some(v) = values {
                extra.push(("sweep.values".into(), serde_json::to_value(v)?));
            }
            let loaded = load(common.config.as_deref(), &overrides(&common, extra)?)?;
            let Some(SweepConfig { axis, values }) = loaded.config.sweep.clone() else {
                bail!("sweep needs an axis and values: pass --axis/--values or set `sweep` in the config");
            };
            let rows = ber_sweep(&loaded.config.link, axis, &values, flags.seed)?;
            let mut w = csv_sink(common.out.as_deref(), &loaded, Some(flags.seed))?;
            write_sweep_csv(axis, &rows, &mut w)?;
            w.flush()?;
        }
        Command::Range {
            common,
            flags,
            ber_target,
        } => {
            let mut extra = flags.overrides();
            if let Some(t) = ber_target {
                extra.push(("range.ber_target".into(), Value::from(t)));
            }
            let loaded = load(common.config.as_deref(), &overrides(&common, extra)?)?;
            let report = range_search(&loaded.config.link, &loaded.config.range, flags.seed)?;
            write_json(common.out.as_deref(), &loaded, Some(flags.seed), report)?;
        }
        Command::Constellation { common, seed, stats } => {
            let loaded = load(common.config.as_deref(), &overrides(&common, Vec::new())?)?;
            let (s, points) = constellation_capture(&loaded.config.constellation, seed)?;
            let mut w = csv_sink(common.out.as_deref(), &loaded, Some(seed))?;
            {
                let mut c = csv::Writer::from_writer(&mut w);
                c.write_record(["index", "symbol", "i", "q", "cluster"])?;
                for p in &points {
                    c.write_record([
                        p.index.to_string(),
                        p.symbol.to_string(),
                        format!("{:.9}", p.re),
                        format!("{:.9}", p.im),
                        p.cluster.to_string(),
                    ])?;
                }
                c.flush()?;
            }
            w.flush()?;
            match stats {
                Some(path) => write_json(Some(&path), &loaded, Some(seed), s)?,
                None => json_to_stderr_or(None, &loaded, Some(seed), s)?,
            }
        }
        Command::Xtech {
            common,
            seed,
            trials,
            snr,
        } => {
            let mut extra = Vec::new();
            if let Some(t) = trials {
                extra.push(("xtech.trials".into(), Value::from(t)));
            }
            if let Some(s) = snr {
                extra.push(("xtech.channel.fixed_snr_db".into(), Value::from(s)));
            }
            let loaded = load(common.config.as_deref(), &overrides(&common, extra)?)?;
            let x = &loaded.config.xtech;
            let ampdu = run_link(&x.link_spec(true, seed)?, seed)?;
            let bursts = run_link(&x.link_spec(false, seed)?, seed)?;
            let body = serde_json::json!({
                "capacity_symbols": x.capacity(),
                "budget_s": x.budget,
                "ampdu": ampdu,
                "bursts": bursts,
            });
            write_json(common.out.as_deref(), &loaded, Some(seed), body)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
