//! Axis sweeps and BER-target range search.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::link::{run_link_row, LinkReport, LinkSpec};
use super::stats::Interval;
use crate::error::{invalid, Error, Result};
use crate::modem::ProtocolConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    DTagRx,
    DSourceTag,
    Sf,
    Bw,
    Snr,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DTagRx => "d_tag_rx",
            SweepAxis::DSourceTag => "d_source_tag",
            SweepAxis::Sf => "sf",
            SweepAxis::Bw => "bw",
            SweepAxis::Snr => "snr",
        }
    }

    /// Copy of `spec` with this axis set to `value`.
    pub fn apply(self, spec: &LinkSpec, value: f64) -> Result<LinkSpec> {
        let mut s = spec.clone();
        match self {
            SweepAxis::DTagRx => s.d_tag_rx = value,
            SweepAxis::DSourceTag => s.d_source_tag = value,
            SweepAxis::Snr => s.channel.fixed_snr_db = Some(value),
            SweepAxis::Sf | SweepAxis::Bw => {
                let ProtocolConfig::Lora(ref mut p) = s.protocol else {
                    return Err(invalid(format!("{} sweeps need a LoRa protocol", self.name())));
                };
                if self == SweepAxis::Sf {
                    if value.fract() != 0.0 || !(0.0..=255.0).contains(&value) {
                        return Err(invalid(format!("spreading factor must be an integer, got {value}")));
                    }
                    p.sf = value as u8;
                } else {
                    p.bw = value;
                }
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub report: std::result::Result<LinkReport, String>,
}

/// One link report per value; a failing row records its error and the sweep continues.
pub fn ber_sweep(spec: &LinkSpec, axis: SweepAxis, values: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    if values.len() < 2 {
        return Err(invalid("a sweep needs at least two axis values"));
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(row, &value)| SweepRow {
            value,
            report: axis
                .apply(spec, value)
                .and_then(|s| run_link_row(&s, seed, row as u64))
                .map_err(|e| e.to_string()),
        })
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

pub fn write_sweep_csv<W: Write>(axis: SweepAxis, rows: &[SweepRow], writer: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "axis",
        "value",
        "protocol",
        "ber",
        "ber_low",
        "ber_high",
        "prr",
        "throughput_bps",
        "nominal_rate_bps",
        "snr_db",
        "trials",
        "error",
    ])?;
    for row in rows {
        let value = format!("{}", row.value);
        let record: Vec<String> = match &row.report {
            Ok(r) => vec![
                axis.name().into(),
                value,
                r.protocol.clone(),
                format!("{:.8}", r.ber),
                format!("{:.8}", r.ber_ci.low),
                format!("{:.8}", r.ber_ci.high),
                format!("{:.6}", r.prr),
                format!("{:.3}", r.throughput_bps),
                format!("{:.3}", r.nominal_rate_bps),
                fmt_opt(r.snr_db),
                r.seeds.len().to_string(),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec![axis.name().into(), value];
                v.extend(std::iter::repeat_n(String::new(), 9));
                v.push(e.clone());
                v
            }
        };
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RangeSearch {
    pub ber_target: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub steps: usize,
}

impl Default for RangeSearch {
    fn default() -> Self {
        Self {
            ber_target: 0.01,
            d_min: 0.1,
            d_max: 100e3,
            steps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub protocol: String,
    pub range_m: f64,
    pub ber: f64,
    pub ber_ci: Interval,
    pub ber_target: f64,
    /// Every evaluated `(d_tag_rx, ber)` in evaluation order.
    pub probes: Vec<(f64, f64)>,
}

/// Log-space bisection over `d_tag_rx` for the farthest point with BER below
/// target. Every probe reuses the same trial seeds.
pub fn range_search(spec: &LinkSpec, search: &RangeSearch, seed: u64) -> Result<RangeReport> {
    if !(search.d_min > 0.0 && search.d_max > search.d_min) {
        return Err(invalid("range search needs 0 < d_min < d_max"));
    }
    if !(search.ber_target > 0.0 && search.ber_target < 1.0) {
        return Err(invalid("BER target must lie in (0, 1)"));
    }
    let mut probes = Vec::new();
    let mut probe = |d: f64| -> Result<LinkReport> {
        let r = run_link_row(
            &LinkSpec {
                d_tag_rx: d,
                ..spec.clone()
            },
            seed,
            0,
        )?;
        probes.push((d, r.ber));
        Ok(r)
    };
    let at_min = probe(search.d_min)?;
    if at_min.ber >= search.ber_target {
        return Err(Error::FailingAtMinDistance {
            ber: at_min.ber,
            target: search.ber_target,
            distance: search.d_min,
        });
    }
    let at_max = probe(search.d_max)?;
    let best = if at_max.ber < search.ber_target {
        at_max
    } else {
        let (mut lo, mut hi, mut best) = (search.d_min, search.d_max, at_min);
        for _ in 0..search.steps {
            let mid = (lo * hi).sqrt();
            let r = probe(mid)?;
            if r.ber < search.ber_target {
                lo = mid;
                best = r;
            } else {
                hi = mid;
            }
        }
        best
    };
    Ok(RangeReport {
        protocol: best.protocol,
        range_m: best.d_tag_rx,
        ber: best.ber,
        ber_ci: best.ber_ci,
        ber_target: search.ber_target,
        probes,
    })
}
