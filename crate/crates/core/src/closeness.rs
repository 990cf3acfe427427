//! Closeness of hybrid arcs: (τ,ε)-closeness, graph distance and sequence diagnostics.

use serde::{Deserialize, Serialize};

use crate::arc::{ArcInterval, HybridArc};
use crate::exec::Exec;
use crate::geom::{dist, geometric, norm};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScheduleError {
    #[error("schedule levels differ in length")]
    Length,
    #[error("{0} must be positive and strictly decreasing")]
    NotDecreasing(&'static str),
}

/// Radii `r_k`, perturbation sizes `δ_k`, per-level sample counts and a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSchedule {
    pub radii: Vec<f64>,
    pub deltas: Vec<f64>,
    pub samples: Vec<usize>,
    pub tol: f64,
}

impl Default for ProbeSchedule {
    /// `r_k = 0.2·2^{-k}`, `δ_k = r_k²`, `k = 0..6`, 8 samples per level.
    fn default() -> Self {
        let radii = geometric(0.2, 0.5, 7);
        let deltas = radii.iter().map(|r| r * r).collect();
        ProbeSchedule { radii, deltas, samples: vec![8; 7], tol: 1e-2 }
    }
}

fn decreasing(v: &[f64]) -> bool {
    v.iter().all(|a| *a > 0.0) && v.windows(2).all(|w| w[1] < w[0])
}

impl ProbeSchedule {
    pub fn new(radii: Vec<f64>, deltas: Vec<f64>, samples: Vec<usize>, tol: f64) -> Result<Self, ScheduleError> {
        let s = ProbeSchedule { radii, deltas, samples, tol };
        s.validate()?;
        Ok(s)
    }

    /// Same radii for δ and r, with `samples` points per level.
    pub fn from_radii(radii: Vec<f64>, samples: usize, tol: f64) -> Result<Self, ScheduleError> {
        let n = radii.len();
        ProbeSchedule::new(radii.clone(), radii, vec![samples; n], tol)
    }

    /// All radii and deltas zero. Exempt from validation; used for sanity probes.
    pub fn zero(levels: usize, samples: usize) -> Self {
        ProbeSchedule { radii: vec![0.0; levels], deltas: vec![0.0; levels], samples: vec![samples; levels], tol: 1e-2 }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.deltas.len() != self.radii.len() || self.samples.len() != self.radii.len() {
            return Err(ScheduleError::Length);
        }
        if self.is_zero() {
            return Ok(());
        }
        if !decreasing(&self.radii) {
            return Err(ScheduleError::NotDecreasing("radii"));
        }
        if !decreasing(&self.deltas) {
            return Err(ScheduleError::NotDecreasing("deltas"));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.radii.iter().chain(&self.deltas).all(|v| *v == 0.0)
    }

    pub fn levels(&self) -> usize {
        self.radii.len()
    }
}

/// Minimizer tolerance of the per-segment refinement.
pub const MARGIN_RESOLUTION: f64 = 1e-10;

/// Least `max(|t - s|, |p - y(s)|)` over `s` in interval `iv`.
fn need_at(iv: &ArcInterval, t: f64, p: &[f64]) -> f64 {
    let times = &iv.times;
    let states = &iv.states;
    if times.len() == 1 {
        return (t - times[0]).abs().max(dist(p, &states[0]));
    }
    let mut best = f64::INFINITY;
    let eval = |k: usize, s: f64| -> f64 {
        let (t0, t1) = (times[k], times[k + 1]);
        let w = if t1 > t0 { (s - t0) / (t1 - t0) } else { 0.0 };
        let d = states[k].iter().zip(&states[k + 1]).zip(p).map(|((a, b), q)| (a + w * (b - a) - q).powi(2)).sum::<f64>();
        (t - s).abs().max(d.sqrt())
    };
    let piece = |k: usize, best: &mut f64| {
        let (t0, t1) = (times[k], times[k + 1]);
        let (mut a, mut b) = (t0, t1);
        *best = best.min(eval(k, a)).min(eval(k, b));
        if (t0..=t1).contains(&t) {
            *best = best.min(eval(k, t));
        }
        // The objective is convex in s.
        const G: f64 = 0.618_033_988_749_894_8;
        let mut c = b - G * (b - a);
        let mut d = a + G * (b - a);
        let (mut fc, mut fd) = (eval(k, c), eval(k, d));
        while b - a > MARGIN_RESOLUTION {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - G * (b - a);
                fc = eval(k, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + G * (b - a);
                fd = eval(k, d);
            }
        }
        *best = best.min(fc).min(fd);
    };
    // Scan outward from the piece containing `t`; pieces farther than `best`
    // in time cannot improve it.
    let n = times.len() - 1;
    let c = times.partition_point(|s| *s < t).saturating_sub(1).min(n - 1);
    piece(c, &mut best);
    for k in (0..c).rev() {
        if t - times[k + 1] >= best {
            break;
        }
        piece(k, &mut best);
    }
    for k in c + 1..n {
        if times[k] - t >= best {
            break;
        }
        piece(k, &mut best);
    }
    best
}

/// Least ε such that every sample of `x` with `t + j <= τ` is matched by `y`.
fn directed_need(x: &HybridArc, y: &HybridArc, tau: f64) -> f64 {
    let xs = x.truncate(tau);
    let mut worst: f64 = 0.0;
    for iv in &xs.intervals {
        let Some(yv) = y.intervals.get(iv.j) else { return f64::INFINITY };
        for (t, p) in iv.times.iter().zip(&iv.states) {
            worst = worst.max(need_at(yv, *t, p));
        }
    }
    worst
}

/// The two bullets of (τ,ε)-closeness with strict inequalities; `y` is
/// refined by linear interpolation between its samples.
pub fn tau_eps_close(x: &HybridArc, y: &HybridArc, tau: f64, eps: f64) -> bool {
    assert_eq!(x.dim, y.dim, "arcs of different dimension");
    directed_need(x, y, tau) < eps && directed_need(y, x, tau) < eps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    /// Infimum of the ε for which the arcs are (τ,ε)-close; infinite if no ε works.
    pub value: f64,
    pub resolution: f64,
}

/// Least ε making `tau_eps_close` true, computed pointwise rather than by bisection.
pub fn closeness_margin(x: &HybridArc, y: &HybridArc, tau: f64) -> Margin {
    assert_eq!(x.dim, y.dim, "arcs of different dimension");
    Margin { value: directed_need(x, y, tau).max(directed_need(y, x, tau)), resolution: MARGIN_RESOLUTION }
}

/// Graph sample `(t, j·w, x)`, grouped by `j` and sorted by `t`.
struct Graph {
    by_j: Vec<(usize, Vec<(f64, Vec<f64>)>)>,
}

impl Graph {
    fn new(a: &HybridArc, tau: f64) -> Graph {
        let a = a.truncate(tau);
        Graph {
            by_j: a
                .intervals
                .iter()
                .map(|iv| (iv.j, iv.times.iter().copied().zip(iv.states.iter().cloned()).collect()))
                .collect(),
        }
    }

    fn points(&self) -> impl Iterator<Item = (usize, f64, &[f64])> + '_ {
        self.by_j.iter().flat_map(|(j, v)| v.iter().map(move |(t, x)| (*j, *t, x.as_slice())))
    }

    fn nearest(&self, j: usize, t: f64, x: &[f64], w: f64) -> f64 {
        let mut best = f64::INFINITY;
        for (jb, pts) in &self.by_j {
            let dj = (*jb as f64 - j as f64) * w;
            if dj.abs() >= best {
                continue;
            }
            let k = pts.partition_point(|(s, _)| *s < t);
            let d2 = |i: usize| -> f64 {
                let (s, y) = &pts[i];
                ((s - t).powi(2) + dj * dj + x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt()
            };
            for i in k..pts.len() {
                if pts[i].0 - t >= best {
                    break;
                }
                best = best.min(d2(i));
            }
            for i in (0..k).rev() {
                if t - pts[i].0 >= best {
                    break;
                }
                best = best.min(d2(i));
            }
        }
        best
    }
}

fn directed_graph(a: &Graph, b: &Graph, w: f64) -> f64 {
    let pts: Vec<(usize, f64, &[f64])> = a.points().collect();
    Exec::default().map(&pts, |(j, t, x)| b.nearest(*j, *t, x, w)).into_iter().fold(0.0, f64::max)
}

/// Hausdorff distance between the sampled graphs `{(t, j·j_weight, x(t, j)) : t + j <= τ}`.
pub fn graph_distance(x: &HybridArc, y: &HybridArc, tau: f64, j_weight: f64) -> f64 {
    assert_eq!(x.dim, y.dim, "arcs of different dimension");
    let (gx, gy) = (Graph::new(x, tau), Graph::new(y, tau));
    directed_graph(&gx, &gy, j_weight).max(directed_graph(&gy, &gx, j_weight))
}

/// `sup_{a ∈ A} inf_{b ∈ B} |a - b|`; infinite if `B` is empty and `A` is not.
pub fn directed_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().map(|p| b.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between point sets; infinite if either is empty.
pub fn hausdorff_points(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Jump entry `(t_j, x(t_j, j))` across a sequence, against the target's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEntry {
    pub j: usize,
    pub target_time: f64,
    pub target_state: Vec<f64>,
    pub times: Vec<Option<f64>>,
    pub states: Vec<Option<Vec<f64>>>,
    /// `max(|t - t_j|, |x - x(t_j, j)|)`, infinite where the arc lacks index `j`.
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub tau: f64,
    pub entries: Vec<JumpEntry>,
    pub graph_distances: Vec<f64>,
    pub margins: Vec<f64>,
    /// `sup |x_i(t, j)|` over `t + j <= τ` across the second half of the sequence.
    pub tail_bound: f64,
    pub bounded: bool,
    pub consistent: bool,
    pub summary: String,
}

/// Tail bounds above this count as unbounded.
pub const BOUND_LIMIT: f64 = 1e6;

fn sup_norm(a: &HybridArc, tau: f64) -> f64 {
    a.truncate(tau).samples().map(|(_, _, x)| norm(x)).fold(0.0, f64::max)
}

/// Finite-sample evidence for graphical convergence of `arcs` to `target`
/// with local eventual boundedness. The verdict holds when the tail is
/// bounded, the last graph distance is below `tol`, and the last jump-entry
/// gaps shrank relative to the first.
pub fn sequence_diagnostics(arcs: &[HybridArc], target: &HybridArc, tau: f64, tol: f64) -> SequenceReport {
    assert!(arcs.len() >= 2, "need at least two arcs");
    let tt = target.truncate(tau);
    let mut entries = Vec::new();
    for iv in tt.intervals.iter().skip(1) {
        let j = iv.j;
        let (target_time, target_state) = (iv.t_lo(), iv.states[0].clone());
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut gaps = Vec::new();
        for a in arcs {
            match a.intervals.get(j) {
                Some(ai) => {
                    let (t, x) = (ai.t_lo(), ai.states[0].clone());
                    gaps.push((t - target_time).abs().max(dist(&x, &target_state)));
                    times.push(Some(t));
                    states.push(Some(x));
                }
                None => {
                    gaps.push(f64::INFINITY);
                    times.push(None);
                    states.push(None);
                }
            }
        }
        entries.push(JumpEntry { j, target_time, target_state, times, states, gaps });
    }
    let graph_distances: Vec<f64> = arcs.iter().map(|a| graph_distance(a, target, tau, 1.0)).collect();
    let margins: Vec<f64> = arcs.iter().map(|a| closeness_margin(a, target, tau).value).collect();
    let tail_bound = arcs[arcs.len() / 2..].iter().map(|a| sup_norm(a, tau)).fold(0.0, f64::max);
    let bounded = tail_bound.is_finite() && tail_bound < BOUND_LIMIT;
    let last = *graph_distances.last().unwrap();
    let gaps_shrink = entries.iter().all(|e| {
        let (f, l) = (e.gaps[0], *e.gaps.last().unwrap());
        l.is_finite() && (l <= f || l <= tol)
    });
    let consistent = bounded && last <= tol && gaps_shrink;
    let summary = format!(
        "{} with graphical convergence and local eventual boundedness (last graph distance {last:.3e}, tail bound {tail_bound:.3e})",
        if consistent { "consistent" } else { "inconsistent" }
    );
    SequenceReport { tau, entries, graph_distances, margins, tail_bound, bounded, consistent, summary }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(offset: f64, t1: f64, n: usize) -> HybridArc {
        let mut a = HybridArc::start(vec![offset]);
        for k in 1..=n {
            let t = t1 * k as f64 / n as f64;
            a.push_flow(t, vec![offset + t]);
        }
        a
    }

    #[test]
    fn identical_arcs_have_zero_margin() {
        let a = line(0.0, 1.0, 10);
        assert!(closeness_margin(&a, &a, 2.0).value <= MARGIN_RESOLUTION);
        assert!(tau_eps_close(&a, &a, 2.0, 1e-9));
        assert_eq!(graph_distance(&a, &a, 2.0, 1.0), 0.0);
    }

    #[test]
    fn constant_offset() {
        let (a, b) = (line(0.0, 1.0, 10), line(0.25, 1.0, 10));
        assert!((graph_distance(&a, &b, 2.0, 1.0) - 0.25).abs() < 0.25 * 0.3);
        // Time shifts trade against state gaps on a unit-slope line.
        let m = closeness_margin(&a, &b, 2.0).value;
        assert!(m > 0.1 && m <= 0.25 + 1e-9, "{m}");
    }

    #[test]
    fn missing_interval_is_infinitely_far() {
        let a = line(0.0, 1.0, 4);
        let mut b = a.clone();
        b.push_jump(vec![0.0]);
        assert!(closeness_margin(&a, &b, 5.0).value.is_infinite());
        assert!(closeness_margin(&a, &b, 0.5).value < 1e-9);
    }

    #[test]
    fn schedule_defaults() {
        let s = ProbeSchedule::default();
        s.validate().unwrap();
        assert_eq!(s.levels(), 7);
        assert!((s.deltas[1] - 0.01).abs() < 1e-15);
        assert!(ProbeSchedule::from_radii(vec![0.1, 0.2], 4, 1e-2).is_err());
        ProbeSchedule::zero(3, 2).validate().unwrap();
    }

    #[test]
    fn point_hausdorff() {
        assert_eq!(hausdorff_points(&[vec![0.0]], &[vec![3.0]]), 3.0);
        assert!(hausdorff_points(&[], &[vec![1.0]]).is_infinite());
    }
}
