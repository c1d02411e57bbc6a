//! 4-QAM capture under a frequency plan: the tag switches symbols at `f_m`,
//! the carrier rotates at `f_b` and the receiver samples at `f_s` with no
//! carrier recovery.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_channel, check_frequency_plan, ChannelConfig, FrequencyPlan, PlanVerdict};
use crate::error::{invalid, Result};
use crate::impedance::DEFAULT_BOUNDARY_SAMPLES;
use crate::iq::{tone_sample, IqStream};
use crate::tag::{compile_bias, reflect, TagModel};

/// Gray-ordered corners: 00, 01, 10, 11.
pub const QAM4: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstellationSpec {
    pub plan: FrequencyPlan,
    /// Symbol indices into [`QAM4`]; the length must be a multiple of 4.
    pub pattern: Vec<u8>,
    /// Number of tag symbols to capture.
    pub symbols: usize,
    pub tag: TagModel,
    /// `None` is noiseless.
    pub snr_db: Option<f64>,
}

impl Default for ConstellationSpec {
    fn default() -> Self {
        Self {
            plan: FrequencyPlan::default(),
            pattern: vec![0, 1, 2, 3],
            symbols: 400,
            tag: TagModel::default(),
            snr_db: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapturedPoint {
    pub index: usize,
    pub symbol: u8,
    pub re: f64,
    pub im: f64,
    pub cluster: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationStats {
    pub verdict: PlanVerdict,
    pub centers: [(f64, f64); 4],
    pub angular_std_deg: [f64; 4],
    /// Mean rotation between consecutive 4-symbol groups, in `(−180, 180]`.
    pub group_rotation_deg: f64,
    /// Carrier phase advance over one group, `360·f_b·4/f_m` wrapped.
    pub predicted_rotation_deg: f64,
}

pub fn wrap_deg(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

pub fn constellation_capture(spec: &ConstellationSpec, seed: u64) -> Result<(ConstellationStats, Vec<CapturedPoint>)> {
    let p = spec.plan;
    p.validate()?;
    if spec.pattern.is_empty() || spec.pattern.len() % 4 != 0 || spec.pattern.iter().any(|&s| s > 3) {
        return Err(invalid("pattern must be a non-empty multiple of 4 symbols in 0..=3"));
    }
    if spec.symbols < 8 {
        return Err(invalid("capture needs at least two 4-symbol groups"));
    }
    let symbols = spec.symbols - spec.symbols % 4;
    let samples_total = (symbols as f64 * p.f_s / p.f_m).ceil() as usize;
    let symbol_at = |n: usize| ((n as f64 * p.f_m / p.f_s).floor() as usize).min(symbols - 1);
    let target = IqStream::new(
        (0..samples_total)
            .map(|n| QAM4[spec.pattern[symbol_at(n) % spec.pattern.len()] as usize])
            .collect(),
        p.f_s,
    )?;
    let carrier = IqStream::new(
        (0..samples_total).map(|n| tone_sample(p.f_b, n, p.f_s)).collect(),
        p.f_s,
    )?;
    let mut tag = spec.tag.clone();
    tag.config.shift_freq = 0.0;
    let space = tag.modulation_space(DEFAULT_BOUNDARY_SAMPLES)?;
    let bias = compile_bias(&tag, &target, &space)?;
    let mut rx = reflect(&tag, &carrier, &bias)?;
    if let Some(snr) = spec.snr_db {
        let cfg = ChannelConfig {
            fixed_snr_db: Some(snr),
            rng_seed: seed,
            ..ChannelConfig::default()
        };
        rx = apply_channel(&rx, 0.0, &cfg)?;
    }

    let picks: Vec<(usize, u8, Complex64)> = (0..symbols)
        .map(|k| {
            let n = (((k as f64 + 0.5) * p.f_s / p.f_m).floor() as usize).min(samples_total - 1);
            (k, spec.pattern[k % spec.pattern.len()], rx.samples[n])
        })
        .collect();

    let scale = picks.iter().map(|(_, _, x)| x.norm()).sum::<f64>() / picks.len() as f64;
    let mut centers: [Complex64; 4] = QAM4.map(|c| c * scale);
    let mut labels = vec![0u8; picks.len()];
    for _ in 0..50 {
        let mut changed = false;
        for (label, (_, _, x)) in labels.iter_mut().zip(&picks) {
            let best = (0..4)
                .min_by(|&a, &b| (x - centers[a]).norm_sqr().total_cmp(&(x - centers[b]).norm_sqr()))
                .unwrap_or(0) as u8;
            changed |= *label != best;
            *label = best;
        }
        for (c, centre) in centers.iter_mut().enumerate() {
            let members: Vec<Complex64> = picks
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l as usize == c)
                .map(|((_, _, x), _)| *x)
                .collect();
            if !members.is_empty() {
                *centre = members.iter().sum::<Complex64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }

    let angular_std_deg: [f64; 4] = std::array::from_fn(|c| {
        let devs: Vec<f64> = picks
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l as usize == c)
            .map(|((_, _, x), _)| (x * centers[c].conj()).arg().to_degrees())
            .collect();
        if devs.is_empty() {
            return 0.0;
        }
        let mean = devs.iter().sum::<f64>() / devs.len() as f64;
        (devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / devs.len() as f64).sqrt()
    });

    let groups: Vec<&[(usize, u8, Complex64)]> = picks.chunks_exact(4).collect();
    let acc: Complex64 = groups
        .windows(2)
        .flat_map(|w| w[1].iter().zip(w[0]).map(|(b, a)| b.2 * a.2.conj()))
        .sum();
    let group_rotation_deg = if acc.norm() > 0.0 {
        wrap_deg(acc.arg().to_degrees())
    } else {
        0.0
    };

    let points = picks
        .iter()
        .zip(&labels)
        .map(|(&(index, symbol, x), &cluster)| CapturedPoint {
            index,
            symbol,
            re: x.re,
            im: x.im,
            cluster,
        })
        .collect();
    let stats = ConstellationStats {
        verdict: check_frequency_plan(&p),
        centers: centers.map(|c| (c.re, c.im)),
        angular_std_deg,
        group_rotation_deg,
        predicted_rotation_deg: wrap_deg(360.0 * (p.f_b * 4.0 / p.f_m).fract()),
    };
    Ok((stats, points))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_plan_is_stable_and_centred_on_corners() {
        let (s, pts) = constellation_capture(&ConstellationSpec::default(), 0).unwrap();
        assert_eq!(s.verdict, PlanVerdict::Valid);
        assert!(s.group_rotation_deg.abs() < 1e-6);
        assert!(s.angular_std_deg.iter().all(|d| *d < 1e-6));
        let gain = (s.centers[0].0.powi(2) + s.centers[0].1.powi(2)).sqrt();
        for (c, q) in s.centers.iter().zip(QAM4) {
            let got = Complex64::new(c.0, c.1);
            assert!((got - q * gain).norm() < 0.01 * gain);
        }
        assert!(pts.iter().all(|p| p.cluster == p.symbol));
    }

    #[test]
    fn spinning_plan_rotates_by_carrier_advance() {
        let spec = ConstellationSpec {
            plan: FrequencyPlan {
                f_b: 40e3,
                f_m: 1e6,
                f_s: 2e6,
            },
            ..Default::default()
        };
        let (s, _) = constellation_capture(&spec, 0).unwrap();
        assert_eq!(s.verdict, PlanVerdict::SpinningConstellation);
        assert!((s.predicted_rotation_deg - 57.6).abs() < 1e-9);
        assert!((s.group_rotation_deg - s.predicted_rotation_deg).abs() < 2.0);
    }
}
