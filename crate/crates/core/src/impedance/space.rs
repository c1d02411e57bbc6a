//! Reachable reflection-coefficient region of the tag and its effective
//! (inscribed, origin-centred) radius, plus the matching-ladder search that
//! maximizes that radius.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gamma::Gamma;
use super::matching::{apply_matching, ElementKind, MatchingElement, MatchingNetwork};
use crate::error::{invalid, Result};
use crate::tag::{gamma_of_bias, TagConfig, TransistorCurve};

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 4096;

/// Radii within this distance are treated as equal when ranking networks.
const RADIUS_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpace {
    /// Images of the bias grid (empty for boundary-only spaces).
    pub points: Vec<Gamma>,
    /// Closed polyline: image of the bias rectangle's boundary, starting at
    /// the (v_min, v_min) corner where the two single-arm borderlines meet.
    pub boundary: Vec<Gamma>,
    pub fixed_offset: Gamma,
    pub effective_radius: f64,
}

fn bias_grid(curve: &TransistorCurve, step: f64) -> Result<Vec<f64>> {
    let (lo, hi) = (curve.v_min(), curve.v_max());
    let span = hi - lo;
    if !(step > 0.0 && step <= span) {
        return Err(invalid(format!("grid step {step} V must be in (0, {span}] V")));
    }
    let n = (span / step + 1e-9).floor() as usize + 1;
    let mut grid: Vec<f64> = (0..n).map(|k| (lo + k as f64 * step).min(hi)).collect();
    if hi - grid[n - 1] > 1e-12 * span.max(1.0) {
        grid.push(hi);
    }
    Ok(grid)
}

/// Combine-model boundary before matching, sampled uniformly in ρ so the
/// spacing in Γ is uniform along every edge.
fn raw_boundary(curve: &TransistorCurve, tag: &TagConfig, samples: usize) -> Vec<Gamma> {
    let per_edge = (samples / 4).max(1);
    let (lo, hi) = curve.rho_range(tag.z0);
    let corners = [(hi, hi), (lo, hi), (lo, lo), (hi, lo)];
    let mut out = Vec::with_capacity(per_edge * 4);
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            out.push(tag.gamma_of_rho(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

/// Boundary image and effective radius without the interior point cloud.
pub fn boundary_space(
    curve: &TransistorCurve,
    tag: &TagConfig,
    net: &MatchingNetwork,
    boundary_samples: usize,
) -> Result<ModulationSpace> {
    tag.validate()?;
    let boundary = raw_boundary(curve, tag, boundary_samples)
        .into_iter()
        .map(|g| apply_matching(net, g, tag.z0))
        .collect::<Result<Vec<_>>>()?;
    let mut space = ModulationSpace {
        points: Vec::new(),
        boundary,
        fixed_offset: tag.fixed_offset,
        effective_radius: 0.0,
    };
    space.effective_radius = effective_radius(&space);
    Ok(space)
}

/// Sweeps both gate voltages over the curve's range with `grid_step` and maps
/// every point through the matching ladder.
pub fn reachable_space(
    curve: &TransistorCurve,
    tag: &TagConfig,
    net: &MatchingNetwork,
    grid_step: f64,
) -> Result<ModulationSpace> {
    let grid = bias_grid(curve, grid_step)?;
    let points = grid
        .par_iter()
        .map(|&v_q| {
            grid.iter()
                .map(|&v_i| apply_matching(net, gamma_of_bias(tag, curve, v_i, v_q)?, tag.z0))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut space = boundary_space(curve, tag, net, DEFAULT_BOUNDARY_SAMPLES)?;
    space.points = points;
    Ok(space)
}

fn segment_distance(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.re * d.re + a.im * d.im) / len2).clamp(0.0, 1.0);
    (a + d * t).norm()
}

/// Winding number of the closed polyline around the origin.
fn winding_number(boundary: &[Gamma]) -> i64 {
    let mut total = 0.0;
    for (i, a) in boundary.iter().enumerate() {
        let b = boundary[(i + 1) % boundary.len()];
        total += (b.0 * a.0.conj()).arg();
    }
    (total / std::f64::consts::TAU).round() as i64
}

/// Radius of the largest origin-centred disk inside the region, or 0 when the
/// origin is not strictly interior.
pub fn effective_radius(space: &ModulationSpace) -> f64 {
    radius_of_boundary(&space.boundary)
}

pub(crate) fn radius_of_boundary(boundary: &[Gamma]) -> f64 {
    if boundary.len() < 3 {
        return 0.0;
    }
    let on_edge = boundary
        .iter()
        .enumerate()
        .map(|(i, a)| segment_distance(a.0, boundary[(i + 1) % boundary.len()].0))
        .fold(f64::INFINITY, f64::min);
    if on_edge < 1e-12 || winding_number(boundary) == 0 {
        return 0.0;
    }
    boundary.iter().map(|b| b.norm()).fold(f64::INFINITY, f64::min)
}

/// Log-spaced component values, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let (a, b) = (self.min.ln(), self.max.ln());
        (0..self.points)
            .map(|k| (a + (b - a) * k as f64 / (self.points - 1) as f64).exp())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite() && self.points > 0) {
            return Err(invalid(format!("bad value grid {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchingSearch {
    /// Ladder shapes to try, each with one or two elements.
    pub topologies: Vec<Vec<ElementKind>>,
    pub inductors: LogGrid,
    pub capacitors: LogGrid,
    pub frequency: f64,
    pub boundary_samples: usize,
}

impl Default for MatchingSearch {
    fn default() -> Self {
        Self {
            topologies: Self::all_ladders(),
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
            frequency: 2.45e9,
            boundary_samples: DEFAULT_BOUNDARY_SAMPLES,
        }
    }
}

impl MatchingSearch {
    /// Every one- and two-element ladder.
    pub fn all_ladders() -> Vec<Vec<ElementKind>> {
        let mut out: Vec<Vec<ElementKind>> = ElementKind::ALL.iter().map(|&k| vec![k]).collect();
        for &a in &ElementKind::ALL {
            for &b in &ElementKind::ALL {
                out.push(vec![a, b]);
            }
        }
        out
    }

    fn candidates(&self) -> Result<Vec<Vec<MatchingElement>>> {
        self.inductors.validate()?;
        self.capacitors.validate()?;
        let l = self.inductors.values();
        let c = self.capacitors.values();
        let grid = |k: ElementKind| if k.is_inductor() { &l } else { &c };
        let mut out = vec![Vec::new()];
        for topo in &self.topologies {
            match topo.as_slice() {
                [a] => {
                    for &va in grid(*a) {
                        out.push(vec![MatchingElement { kind: *a, value: va }]);
                    }
                }
                [a, b] => {
                    for &va in grid(*a) {
                        for &vb in grid(*b) {
                            out.push(vec![
                                MatchingElement { kind: *a, value: va },
                                MatchingElement { kind: *b, value: vb },
                            ]);
                        }
                    }
                }
                _ => {
                    return Err(invalid(format!(
                        "topologies must have one or two elements, got {}",
                        topo.len()
                    )))
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingChoice {
    pub network: MatchingNetwork,
    pub effective_radius: f64,
    /// Effective radius with no matching ladder.
    pub baseline_radius: f64,
}

fn better(a: (f64, usize, f64), b: (f64, usize, f64)) -> bool {
    if (a.0 - b.0).abs() > RADIUS_TIE_TOL {
        return a.0 > b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    a.2 < b.2
}

/// Exhaustive grid search for the ladder maximizing the effective radius.
///
/// Ties go to fewer elements, then to the smaller summed element value. The
/// empty ladder is always a candidate.
pub fn optimize_matching(curve: &TransistorCurve, tag: &TagConfig, search: &MatchingSearch) -> Result<MatchingChoice> {
    tag.validate()?;
    if search.topologies.is_empty() {
        return Err(invalid("at least one candidate topology is required"));
    }
    if !(search.frequency > 0.0) {
        return Err(invalid("search frequency must be positive"));
    }
    let raw = raw_boundary(curve, tag, search.boundary_samples);
    let candidates = search.candidates()?;
    let radii: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|elements| {
            let net = MatchingNetwork {
                elements: elements.clone(),
                frequency: search.frequency,
            };
            let mapped = raw
                .iter()
                .map(|&g| apply_matching(&net, g, tag.z0))
                .collect::<Result<Vec<_>>>()
                .ok()?;
            Some(radius_of_boundary(&mapped))
        })
        .collect();

    let key = |i: usize, r: f64| {
        let els = &candidates[i];
        (r, els.len(), els.iter().map(|e| e.value).sum::<f64>())
    };
    let baseline = radii[0].unwrap_or(0.0);
    let mut best = 0usize;
    for (i, r) in radii.iter().enumerate().skip(1) {
        if let Some(r) = *r {
            if better(key(i, r), key(best, radii[best].unwrap_or(0.0))) {
                best = i;
            }
        }
    }
    Ok(MatchingChoice {
        network: MatchingNetwork {
            elements: candidates[best].clone(),
            frequency: search.frequency,
        },
        effective_radius: radii[best].unwrap_or(0.0),
        baseline_radius: baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tag::rho_of_resistance;

    fn space_of(boundary: Vec<Complex64>) -> ModulationSpace {
        let mut s = ModulationSpace {
            points: vec![],
            boundary: boundary.into_iter().map(Gamma).collect(),
            fixed_offset: Gamma::default(),
            effective_radius: 0.0,
        };
        s.effective_radius = effective_radius(&s);
        s
    }

    /// Square of half-side 0.5 sampled with edge midpoints included.
    fn square(center: Complex64) -> Vec<Complex64> {
        let corners = [(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)];
        let mut out = vec![];
        for e in 0..4 {
            let a = Complex64::new(corners[e].0, corners[e].1);
            let b = Complex64::new(corners[(e + 1) % 4].0, corners[(e + 1) % 4].1);
            for k in 0..64 {
                out.push(center + a + (b - a) * (k as f64 / 64.0));
            }
        }
        out
    }

    #[test]
    fn concentric_circle() {
        let s = space_of(
            (0..4096)
                .map(|k| Complex64::from_polar(0.4, std::f64::consts::TAU * k as f64 / 4096.0))
                .collect(),
        );
        assert!((s.effective_radius - 0.4).abs() < 1e-12);
    }

    #[test]
    fn centred_square_inscribed_disk() {
        let s = space_of(square(Complex64::new(0.0, 0.0)));
        assert!((s.effective_radius - 0.5).abs() < 1e-12);
    }

    #[test]
    fn origin_on_edge_gives_zero() {
        let s = space_of(square(Complex64::new(0.5, 0.0)));
        assert_eq!(s.effective_radius, 0.0);
        let s = space_of(square(Complex64::new(2.0, 0.0)));
        assert_eq!(s.effective_radius, 0.0);
    }

    #[test]
    fn grid_counts() {
        let c = TransistorCurve::default();
        assert_eq!(bias_grid(&c, 1e-3).unwrap().len(), 901);
        assert_eq!(bias_grid(&c, 0.4).unwrap(), vec![0.0, 0.4, 0.8, 0.9]);
        assert!(bias_grid(&c, 0.0).is_err());
        assert!(bias_grid(&c, 2.0).is_err());
    }

    #[test]
    fn ideal_curve_boundary_is_half_square() {
        let curve = TransistorCurve::log_linear(0.0, 1.0, 50.0 * 1e10, 50.0 * 1e-10, 64).unwrap();
        let tag = TagConfig::ideal();
        let s = boundary_space(&curve, &tag, &MatchingNetwork::empty(1e9), 4096).unwrap();
        // oracle: combine model evaluated directly at the four corner voltages
        for (vi, vq) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)] {
            let g = gamma_of_bias(&tag, &curve, vi, vq).unwrap();
            assert!((g.re().abs() - 0.5).abs() < 1e-9 && (g.im().abs() - 0.5).abs() < 1e-9);
        }
        for b in &s.boundary {
            let m = b.re().abs().max(b.im().abs());
            assert!((m - 0.5).abs() < 1e-9, "{b} off the square");
        }
        assert!((s.effective_radius - 0.5).abs() < 1e-9);
    }

    #[test]
    fn borderlines_meet_at_offset_plus_max_resistance_corner() {
        let curve = TransistorCurve::default();
        let tag = TagConfig::default();
        let s = boundary_space(&curve, &tag, &MatchingNetwork::empty(1e9), 4096).unwrap();
        let rho = rho_of_resistance(curve.r_max(), tag.z0);
        let corner = tag.fixed_offset.0 + Complex64::from_polar(0.5, tag.space_rotation) * Complex64::new(rho, rho);
        assert!((s.boundary[0].0 - corner).norm() < 1e-12);
    }

    #[test]
    fn log_grid_is_inclusive() {
        let v = LogGrid {
            min: 1.0,
            max: 1000.0,
            points: 4,
        }
        .values();
        for (a, b) in v.iter().zip([1.0, 10.0, 100.0, 1000.0]) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn tie_break_prefers_fewer_then_smaller() {
        assert!(better((0.3, 1, 5.0), (0.3, 2, 1.0)));
        assert!(better((0.3, 2, 1.0), (0.3, 2, 2.0)));
        assert!(better((0.31, 2, 9.0), (0.3, 0, 0.0)));
    }

    #[test]
    fn centred_symmetric_space_keeps_empty_network() {
        // ρ range symmetric about zero: the region is a centred square
        let curve = TransistorCurve::log_linear(0.0, 0.9, 50.0 * 30.0, 50.0 / 30.0, 16).unwrap();
        let tag = TagConfig::ideal();
        let search = MatchingSearch {
            inductors: LogGrid {
                min: 0.1e-9,
                max: 100e-9,
                points: 12,
            },
            capacitors: LogGrid {
                min: 0.05e-12,
                max: 50e-12,
                points: 12,
            },
            boundary_samples: 1024,
            ..MatchingSearch::default()
        };
        let choice = optimize_matching(&curve, &tag, &search).unwrap();
        assert!(choice.network.is_empty(), "chose {}", choice.network);
        assert_eq!(choice.effective_radius, choice.baseline_radius);
    }

    #[test]
    fn rejects_bad_topologies() {
        let search = MatchingSearch {
            topologies: vec![vec![ElementKind::ShuntCapacitor; 3]],
            ..MatchingSearch::default()
        };
        assert!(optimize_matching(&TransistorCurve::default(), &TagConfig::ideal(), &search).is_err());
        let search = MatchingSearch {
            topologies: vec![],
            ..MatchingSearch::default()
        };
        assert!(optimize_matching(&TransistorCurve::default(), &TagConfig::ideal(), &search).is_err());
    }
}
