//! Hybrid time domains and hybrid arcs stored as dense per-interval samples.

use serde::{Deserialize, Serialize};

/// Times within this distance of an interval endpoint count as inside it.
pub const TIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInterval {
    pub j: usize,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HybridTimeDomain {
    pub intervals: Vec<DomainInterval>,
    /// Set when a budget, not the dynamics, ended the domain.
    #[serde(default)]
    pub complete: bool,
}

impl HybridTimeDomain {
    pub fn from_triples(triples: &[(usize, f64, f64)]) -> HybridTimeDomain {
        HybridTimeDomain {
            intervals: triples.iter().map(|&(j, t_lo, t_hi)| DomainInterval { j, t_lo, t_hi }).collect(),
            complete: false,
        }
    }

    pub fn contains(&self, t: f64, j: usize) -> bool {
        self.intervals.get(j).is_some_and(|i| t >= i.t_lo - TIME_TOL && t <= i.t_hi + TIME_TOL)
    }
}

/// Interval structure check: indices `0, 1, 2, …`, `t_lo(0) = 0`,
/// `t_lo <= t_hi`, and `t_hi(j) = t_lo(j + 1)`.
pub fn validate_domain(e: &HybridTimeDomain) -> bool {
    let Some(first) = e.intervals.first() else { return false };
    if first.t_lo != 0.0 {
        return false;
    }
    for (k, i) in e.intervals.iter().enumerate() {
        if i.j != k || !(i.t_lo <= i.t_hi) || !i.t_lo.is_finite() || !i.t_hi.is_finite() {
            return false;
        }
        if let Some(next) = e.intervals.get(k + 1) {
            if (next.t_lo - i.t_hi).abs() > TIME_TOL {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// `τ_max`, `T_max` or `J_max` reached.
    Budget,
    /// Neither flow nor jump possible at this resolution.
    Stuck,
    /// `|x|` exceeded the escape threshold near this hybrid time.
    Escape { t: f64, j: usize },
    /// Reached a terminal constraint.
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcInterval {
    pub j: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl ArcInterval {
    pub fn t_lo(&self) -> f64 {
        self.times[0]
    }

    pub fn t_hi(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Piecewise-linear value at `t`, if `t` lies in the interval.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        if t < self.t_lo() - TIME_TOL || t > self.t_hi() + TIME_TOL {
            return None;
        }
        let k = self.times.partition_point(|s| *s <= t);
        if k == 0 {
            return Some(self.states[0].clone());
        }
        if k == self.times.len() {
            return Some(self.states[k - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        if t == t0 {
            return Some(self.states[k - 1].clone());
        }
        let s = (t - t0) / (t1 - t0);
        Some(self.states[k - 1].iter().zip(&self.states[k]).map(|(a, b)| a + s * (b - a)).collect())
    }
}

/// A function on a hybrid time domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridArc {
    pub dim: usize,
    pub intervals: Vec<ArcInterval>,
    pub termination: Termination,
    /// Canonical branch id within a solution tree (`"0"` for single solutions).
    pub branch: String,
}

impl HybridArc {
    /// The trivial arc `{(0, 0)} ↦ x0`.
    pub fn start(x0: Vec<f64>) -> HybridArc {
        HybridArc {
            dim: x0.len(),
            intervals: vec![ArcInterval { j: 0, times: vec![0.0], states: vec![x0] }],
            termination: Termination::Stuck,
            branch: "0".into(),
        }
    }

    /// Extends the current interval by flowing to `(t, x)`; `t` must exceed the last time.
    pub fn push_flow(&mut self, t: f64, x: Vec<f64>) {
        let last = self.intervals.last_mut().unwrap();
        debug_assert!(t > last.t_hi());
        last.times.push(t);
        last.states.push(x);
    }

    /// Appends a jump to `x` at the current time.
    pub fn push_jump(&mut self, x: Vec<f64>) {
        let (t, j) = self.end_time();
        self.intervals.push(ArcInterval { j: j + 1, times: vec![t], states: vec![x] });
    }

    pub fn domain(&self) -> HybridTimeDomain {
        HybridTimeDomain {
            intervals: self
                .intervals
                .iter()
                .map(|i| DomainInterval { j: i.j, t_lo: i.t_lo(), t_hi: i.t_hi() })
                .collect(),
            complete: self.is_complete(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Budget
    }

    /// Domain is the single point `(0, 0)`.
    pub fn is_trivial(&self) -> bool {
        self.intervals.len() == 1 && self.intervals[0].times.len() == 1
    }

    pub fn initial(&self) -> &[f64] {
        &self.intervals[0].states[0]
    }

    pub fn end_state(&self) -> &[f64] {
        self.intervals.last().unwrap().states.last().unwrap()
    }

    /// The last stored hybrid time.
    pub fn end_time(&self) -> (f64, usize) {
        let last = self.intervals.last().unwrap();
        (last.t_hi(), last.j)
    }

    /// `x(t, j)`; `None` outside the domain.
    pub fn eval(&self, t: f64, j: usize) -> Option<Vec<f64>> {
        self.intervals.get(j)?.eval(t)
    }

    /// All `(t, j)` with `(t, j)` and `(t, j + 1)` in the domain.
    pub fn jump_times(&self) -> Vec<(f64, usize)> {
        self.intervals.iter().take(self.intervals.len().saturating_sub(1)).map(|i| (i.t_hi(), i.j)).collect()
    }

    /// `(T, J)` bounding the domain; absent for arcs flagged complete.
    pub fn terminal_time(&self) -> Option<(f64, usize)> {
        (!self.is_complete()).then(|| self.end_time())
    }

    /// Every stored sample as `(t, j, x)`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, usize, &[f64])> + '_ {
        self.intervals
            .iter()
            .flat_map(|i| i.times.iter().zip(&i.states).map(move |(t, x)| (*t, i.j, x.as_slice())))
    }

    pub fn sample_count(&self) -> usize {
        self.intervals.iter().map(|i| i.times.len()).sum()
    }

    /// Restriction to `t + j <= tau`, with an interpolated endpoint.
    pub fn truncate(&self, tau: f64) -> HybridArc {
        let mut out = HybridArc { intervals: Vec::new(), ..self.clone() };
        for i in &self.intervals {
            let budget = tau - i.j as f64;
            if budget < i.t_lo() - TIME_TOL {
                break;
            }
            let mut iv = ArcInterval { j: i.j, times: Vec::new(), states: Vec::new() };
            for (t, x) in i.times.iter().zip(&i.states) {
                if *t <= budget {
                    iv.times.push(*t);
                    iv.states.push(x.clone());
                }
            }
            if iv.times.is_empty() {
                iv.times.push(i.t_lo());
                iv.states.push(i.states[0].clone());
            } else if budget < i.t_hi() && *iv.times.last().unwrap() < budget {
                iv.states.push(i.eval(budget).unwrap());
                iv.times.push(budget);
            }
            out.intervals.push(iv);
        }
        if out.end_time() != self.end_time() {
            out.termination = Termination::Budget;
        }
        out
    }

    /// CSV with columns `j,t,x1..xn`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,t");
        for k in 1..=self.dim {
            s.push_str(&format!(",x{k}"));
        }
        s.push('\n');
        for (t, j, x) in self.samples() {
            s.push_str(&format!("{j},{t:?}"));
            for v in x {
                s.push_str(&format!(",{v:?}"));
            }
            s.push('\n');
        }
        s
    }

    /// Inverse of [`HybridArc::to_csv`]. The termination reason is not
    /// recorded in CSV and reads back as `Stuck`.
    pub fn from_csv(text: &str) -> Result<HybridArc, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty arc file")?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 3 || cols[0] != "j" || cols[1] != "t" {
            return Err(format!("bad header `{header}`; expected j,t,x1,..."));
        }
        let dim = cols.len() - 2;
        let mut arc: Option<HybridArc> = None;
        for (n, line) in lines.enumerate() {
            let row = n + 2;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != dim + 2 {
                return Err(format!("line {row}: expected {} fields", dim + 2));
            }
            let j: usize = f[0].parse().map_err(|_| format!("line {row}: bad j `{}`", f[0]))?;
            let t: f64 = f[1].parse().map_err(|_| format!("line {row}: bad t `{}`", f[1]))?;
            let x = f[2..]
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| format!("line {row}: bad value `{v}`")))
                .collect::<Result<Vec<_>, _>>()?;
            match arc.as_mut() {
                None if j == 0 && t == 0.0 => arc = Some(HybridArc::start(x)),
                None => return Err("arc must start at t = 0, j = 0".into()),
                Some(a) => {
                    let (t0, j0) = a.end_time();
                    if j == j0 && t > t0 {
                        a.push_flow(t, x);
                    } else if j == j0 + 1 && t == t0 {
                        a.push_jump(x);
                    } else {
                        return Err(format!("line {row}: ({t}, {j}) does not follow ({t0}, {j0})"));
                    }
                }
            }
        }
        arc.ok_or_else(|| "arc file has no samples".into())
    }
}
