use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::iq::{tone_sample, IqStream};

pub const STF_SYMBOL_LEN: usize = 16;
pub const STF_REPETITIONS: usize = 16;
const STF_SEED: u64 = 0x0053_5446;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CarrierSource {
    Tone {
        f_b: f64,
    },
    /// STF followed by back-to-back tone subframes whose phase restarts at
    /// every subframe boundary.
    WifiAmpdu {
        stf_duration: f64,
        subframe_duration: f64,
        n_subframes: usize,
        tone_offset: f64,
    },
    /// Separate frames: like `WifiAmpdu` but every subframe is preceded by a
    /// silent gap drawn uniformly from `[gap_min, gap_max]`.
    WifiBursts {
        stf_duration: f64,
        subframe_duration: f64,
        n_subframes: usize,
        tone_offset: f64,
        gap_min: f64,
        gap_max: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Tone,
    Stf,
    Subframe,
    Gap,
    Idle,
}

/// Half-open sample range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub kind: SegmentKind,
}

impl CarrierSource {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CarrierSource::Tone { f_b } => {
                if !f_b.is_finite() {
                    return Err(invalid("tone frequency must be finite"));
                }
            }
            CarrierSource::WifiAmpdu {
                stf_duration,
                subframe_duration,
                n_subframes,
                ..
            } => check_frames(stf_duration, subframe_duration, n_subframes)?,
            CarrierSource::WifiBursts {
                stf_duration,
                subframe_duration,
                n_subframes,
                gap_min,
                gap_max,
                ..
            } => {
                check_frames(stf_duration, subframe_duration, n_subframes)?;
                if !(gap_min >= 0.0 && gap_max >= gap_min) {
                    return Err(invalid("burst gaps need 0 <= gap_min <= gap_max"));
                }
            }
        }
        Ok(())
    }

    /// Frequency of the carrier's tone part.
    pub fn tone_frequency(&self) -> f64 {
        match *self {
            CarrierSource::Tone { f_b } => f_b,
            CarrierSource::WifiAmpdu { tone_offset, .. } | CarrierSource::WifiBursts { tone_offset, .. } => tone_offset,
        }
    }
}

fn check_frames(stf: f64, sub: f64, n: usize) -> Result<()> {
    if !(stf > 0.0 && sub > 0.0) || n == 0 {
        return Err(invalid("A-MPDU durations must be positive with at least one subframe"));
    }
    Ok(())
}

/// One 16-sample unit-modulus short symbol repeated 16 times.
pub fn stf_template() -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(STF_SEED);
    let symbol: Vec<Complex64> = (0..STF_SYMBOL_LEN)
        .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
        .collect();
    symbol
        .iter()
        .copied()
        .cycle()
        .take(STF_SYMBOL_LEN * STF_REPETITIONS)
        .collect()
}

/// The STF as transmitted: the template repeated cyclically to `stf_duration`.
pub fn stf_waveform(stf_duration: f64, sample_rate: f64) -> IqStream {
    let n = (stf_duration * sample_rate).round() as usize;
    IqStream {
        samples: stf_template().into_iter().cycle().take(n).collect(),
        sample_rate,
    }
}

/// Carrier of `duration` seconds at `sample_rate` plus a map of its segments.
/// A-MPDU subframes that do not fit are truncated; unused time is silent idle.
pub fn generate_carrier(src: &CarrierSource, duration: f64, sample_rate: f64) -> Result<(IqStream, Vec<Segment>)> {
    src.validate()?;
    if !(sample_rate > 0.0 && duration > 0.0) {
        return Err(invalid("duration and sample rate must be positive"));
    }
    let f = src.tone_frequency();
    if !matches!(src, CarrierSource::Tone { .. }) && sample_rate <= 2.0 * f.abs() {
        return Err(invalid(format!(
            "sample rate {sample_rate} Hz must exceed twice the tone offset {f} Hz"
        )));
    }
    let total = (duration * sample_rate).round() as usize;
    let zero = Complex64::new(0.0, 0.0);
    let (stf_duration, sub_duration, n_sub, gaps) = match *src {
        CarrierSource::Tone { f_b } => {
            let samples = (0..total).map(|n| tone_sample(f_b, n, sample_rate)).collect();
            let seg = vec![Segment {
                start: 0,
                end: total,
                kind: SegmentKind::Tone,
            }];
            return Ok((IqStream::new(samples, sample_rate)?, seg));
        }
        CarrierSource::WifiAmpdu {
            stf_duration,
            subframe_duration,
            n_subframes,
            ..
        } => (stf_duration, subframe_duration, n_subframes, vec![0; n_subframes]),
        CarrierSource::WifiBursts {
            stf_duration,
            subframe_duration,
            n_subframes,
            gap_min,
            gap_max,
            seed,
            ..
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let gaps = (0..n_subframes)
                .map(|_| (rng.random_range(gap_min..=gap_max) * sample_rate).round() as usize)
                .collect();
            (stf_duration, subframe_duration, n_subframes, gaps)
        }
    };
    let stf = stf_waveform(stf_duration, sample_rate);
    if total < stf.len() {
        return Err(Error::DurationTooShort {
            duration,
            required: stf_duration,
        });
    }
    let sub_len = (sub_duration * sample_rate).round() as usize;
    let mut samples = Vec::with_capacity(total);
    let mut segments = Vec::new();
    let mut push = |samples: &mut Vec<Complex64>, kind, chunk: &mut dyn Iterator<Item = Complex64>| {
        let start = samples.len();
        samples.extend(chunk.take(total - start));
        if samples.len() > start {
            segments.push(Segment {
                start,
                end: samples.len(),
                kind,
            });
        }
    };
    push(&mut samples, SegmentKind::Stf, &mut stf.samples.iter().copied());
    for gap in gaps.iter().take(n_sub) {
        if *gap > 0 {
            push(&mut samples, SegmentKind::Gap, &mut std::iter::repeat_n(zero, *gap));
        }
        push(
            &mut samples,
            SegmentKind::Subframe,
            &mut (0..sub_len).map(|n| tone_sample(f, n, sample_rate)),
        );
    }
    let rest = total - samples.len();
    push(&mut samples, SegmentKind::Idle, &mut std::iter::repeat_n(zero, rest));
    Ok((IqStream::new(samples, sample_rate)?, segments))
}

/// Whole LoRa symbols of `2^sf / bw` seconds that fit in `budget` seconds.
pub fn ampdu_capacity(sf: u8, bw: f64, budget: f64) -> usize {
    let t = (1u64 << sf) as f64 / bw;
    (budget / t * (1.0 + 1e-12)).floor() as usize
}

/// Default A-MPDU airtime budget in seconds.
pub const AMPDU_BUDGET: f64 = 72e-3;

/// Lag of the best normalized cross-correlation between `template` and `rx`.
pub fn stf_detect(rx: &IqStream, template: &[Complex64], threshold: f64) -> Result<usize> {
    let (n, l) = (rx.len(), template.len());
    if l == 0 || l > n {
        return Err(Error::TooShort { need: l.max(1), got: n });
    }
    let t_norm = template.iter().map(|t| t.norm_sqr()).sum::<f64>().sqrt();
    let x = &rx.samples;
    let mut window: f64 = x[..l].iter().map(|s| s.norm_sqr()).sum();
    let mut best = (0usize, f64::NEG_INFINITY);
    for lag in 0..=n - l {
        if lag > 0 {
            window += x[lag + l - 1].norm_sqr() - x[lag - 1].norm_sqr();
        }
        let denom = t_norm * window.max(0.0).sqrt();
        if denom <= 0.0 {
            continue;
        }
        let c: Complex64 = x[lag..lag + l].iter().zip(template).map(|(a, b)| a * b.conj()).sum();
        let score = c.norm() / denom;
        if score > best.1 {
            best = (lag, score);
        }
    }
    if best.1 < threshold {
        return Err(Error::NoDetection {
            peak: best.1.max(0.0),
            threshold,
        });
    }
    Ok(best.0)
}
