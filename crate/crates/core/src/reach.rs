//! Sampled reachable sets and empirical probes of their semicontinuity.
//!
//! A [`ReachCloud`] is a finite set of values `x(T, J)` of solution-tree
//! leaves, each tagged with its initial condition and branch id so it can be
//! replayed. Probes compare clouds of perturbed systems to the nominal cloud
//! along a [`ProbeSchedule`].

use serde::{Deserialize, Serialize};

use crate::arc::HybridArc;
use crate::closeness::{directed_hausdorff, hausdorff_points, ProbeSchedule, BOUND_LIMIT};
use crate::cones::Cone;
use crate::exec::Exec;
use crate::expr::Expr;
use crate::geom::{self, dist, norm};
use crate::hybrid::{rho_inflate, HybridSystem, PerturbationFamily};
use crate::sets::{SetSpec, DEFAULT_TOL};
use crate::simulate::{flows_possible, solve_tree, FlowsPossibleConfig, SolveError, SolvePolicy};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReachError {
    #[error("invalid query: {0}")]
    Query(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("nominal reachable set is empty")]
    EmptyNominal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReachConfig {
    pub branch_budget: usize,
    pub policy: SolvePolicy,
    /// Grid points of `[T_lo, T_hi]` for interval queries, endpoints included.
    pub time_grid: usize,
    /// A query time this close past the end of a flow interval reads its endpoint.
    pub time_tol: f64,
    /// Initial conditions drawn when the query is a set.
    pub set_samples: usize,
    pub exec: Exec,
}

impl Default for ReachConfig {
    fn default() -> Self {
        ReachConfig {
            branch_budget: 4,
            policy: SolvePolicy::default(),
            time_grid: 21,
            time_tol: 1e-9,
            set_samples: 32,
            exec: Exec::default(),
        }
    }
}

/// Initial conditions of a reach query.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Points(Vec<Vec<f64>>),
    /// Seeded samples of `set` inside the box `[lo, hi]`.
    Set { set: SetSpec, lo: Vec<f64>, hi: Vec<f64> },
}

impl From<Vec<f64>> for Initial {
    fn from(x: Vec<f64>) -> Self {
        Initial::Points(vec![x])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachPoint {
    pub x: Vec<f64>,
    /// Index into [`ReachCloud::sources`].
    pub source: usize,
    pub t: f64,
    pub j: usize,
    pub branch: String,
    /// The witnessing leaf flows strictly past `t` at index `j`.
    pub flows_past: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachQuery {
    pub t_lo: f64,
    pub t_hi: f64,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachCloud {
    pub dim: usize,
    pub query: ReachQuery,
    pub sources: Vec<Vec<f64>>,
    pub points: Vec<ReachPoint>,
    /// Some leaf stopped on a budget before reaching the query time.
    pub partial: bool,
    pub seed: u64,
    /// The `t + j` horizon the trees were built with.
    pub tau: f64,
}

impl ReachCloud {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.x.clone()).collect()
    }

    pub fn bounded(&self) -> bool {
        self.points.iter().all(|p| norm(&p.x) <= BOUND_LIMIT)
    }

    /// Columns `x1..xn, T, J, source, branch`, one row per point.
    pub fn to_csv(&self) -> String {
        let mut s: String = (1..=self.dim).map(|i| format!("x{i},")).collect();
        s.push_str("T,J,source,branch\n");
        for p in &self.points {
            for v in &p.x {
                s.push_str(&format!("{v:?},"));
            }
            s.push_str(&format!("{:?},{},{},{}\n", p.t, p.j, p.source, p.branch));
        }
        s
    }
}

fn tree_seed(seed: u64, source: usize) -> u64 {
    geom::mix_seed(seed, &[source as u64])
}

/// `x(t, j)`, reading the nearer interval endpoint when `t` misses the
/// interval by at most `tol`.
fn eval_near(arc: &HybridArc, t: f64, j: usize, tol: f64) -> Option<(Vec<f64>, bool)> {
    let iv = arc.intervals.get(j)?;
    let past = iv.t_hi() > t + tol;
    if let Some(x) = iv.eval(t) {
        return Some((x, past));
    }
    if t > iv.t_hi() && t <= iv.t_hi() + tol {
        return Some((iv.states.last().unwrap().clone(), false));
    }
    (t < iv.t_lo() && t >= iv.t_lo() - tol).then(|| (iv.states[0].clone(), past))
}

fn check_times(times: &[f64]) -> Result<(), ReachError> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ReachError::Query("times must be finite and nonnegative".into()));
    }
    Ok(())
}

fn initial_points(x0: &Initial, cfg: &ReachConfig, seed: u64) -> Result<Vec<Vec<f64>>, ReachError> {
    match x0 {
        Initial::Points(p) => Ok(p.clone()),
        Initial::Set { set, lo, hi } => set
            .sample_in_box(lo, hi, cfg.set_samples, geom::mix_seed(seed, &[u64::MAX]))
            .map_err(|e| ReachError::Query(e.to_string())),
    }
}

/// Per source, per time: the values of all leaves whose domain contains `(t, j)`.
struct Sweep {
    sources: Vec<Vec<f64>>,
    /// `values[source][time]`.
    values: Vec<Vec<Vec<ReachPoint>>>,
    partial: bool,
    tau: f64,
}

fn sweep(h: &HybridSystem, sources: Vec<Vec<f64>>, times: &[f64], j: usize, cfg: &ReachConfig, seed: u64) -> Result<Sweep, ReachError> {
    check_times(times)?;
    cfg.policy.validate()?;
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let tau = t_max + j as f64 + 10.0 * cfg.policy.h;
    let policy = cfg.policy.clone().with_tau(tau).with_exec(Exec::Sequential);
    let idx: Vec<usize> = (0..sources.len()).collect();
    let per = cfg.exec.map(&idx, |&s| {
        let tree = match solve_tree(h, &sources[s], &policy, cfg.branch_budget, tree_seed(seed, s)) {
            Ok(t) => t,
            Err(SolveError::Outside(_)) => return Ok((vec![Vec::new(); times.len()], false)),
            Err(e) => return Err(e),
        };
        let mut partial = false;
        let mut out = vec![Vec::new(); times.len()];
        for arc in &tree.arcs {
            let (te, je) = arc.end_time();
            if arc.termination == crate::arc::Termination::Budget && te + je as f64 + 1e-9 < t_max + j as f64 {
                partial = true;
            }
            for (k, &t) in times.iter().enumerate() {
                if let Some((x, past)) = eval_near(arc, t, j, cfg.time_tol) {
                    out[k].push(ReachPoint { x, source: s, t, j, branch: arc.branch.clone(), flows_past: past });
                }
            }
        }
        Ok((out, partial))
    });
    let mut values = Vec::with_capacity(per.len());
    let mut partial = false;
    for r in per {
        let (v, p) = r?;
        values.push(v);
        partial |= p;
    }
    Ok(Sweep { sources, values, partial, tau })
}

fn cloud_from(h: &HybridSystem, sw: Sweep, query: ReachQuery, seed: u64) -> ReachCloud {
    let mut points: Vec<ReachPoint> = sw.values.into_iter().flatten().flatten().collect();
    points.sort_by(|a, b| (a.source, &a.branch).cmp(&(b.source, &b.branch)).then(a.t.total_cmp(&b.t)));
    ReachCloud { dim: h.dim, query, sources: sw.sources, points, partial: sw.partial, seed, tau: sw.tau }
}

/// `R_H(x0, T, J)` over the sampled initial conditions and tree leaves.
pub fn reach(h: &HybridSystem, x0: &Initial, t: f64, j: usize, cfg: &ReachConfig, seed: u64) -> Result<ReachCloud, ReachError> {
    let sources = initial_points(x0, cfg, seed)?;
    let sw = sweep(h, sources, &[t], j, cfg, seed)?;
    Ok(cloud_from(h, sw, ReachQuery { t_lo: t, t_hi: t, j }, seed))
}

fn grid(t_lo: f64, t_hi: f64, n: usize) -> Vec<f64> {
    if t_hi == t_lo || n < 2 {
        return if t_hi == t_lo { vec![t_lo] } else { vec![t_lo, t_hi] };
    }
    (0..n).map(|k| if k == n - 1 { t_hi } else { t_lo + (t_hi - t_lo) * k as f64 / (n - 1) as f64 }).collect()
}

/// Union of `R_H(x0, T, J)` over a grid of `[T_lo, T_hi]`.
pub fn reach_interval(
    h: &HybridSystem,
    x0: &Initial,
    t_lo: f64,
    t_hi: f64,
    j: usize,
    cfg: &ReachConfig,
    seed: u64,
) -> Result<ReachCloud, ReachError> {
    if !(0.0 <= t_lo && t_lo <= t_hi) {
        return Err(ReachError::Query(format!("need 0 <= T_lo <= T_hi, got [{t_lo}, {t_hi}]")));
    }
    let sources = initial_points(x0, cfg, seed)?;
    let sw = sweep(h, sources, &grid(t_lo, t_hi, cfg.time_grid), j, cfg, seed)?;
    Ok(cloud_from(h, sw, ReachQuery { t_lo, t_hi, j }, seed))
}

/// Re-simulates every point from its source and branch id; returns the
/// largest deviation (infinite when a branch or time is missing).
pub fn replay(h: &HybridSystem, cloud: &ReachCloud, cfg: &ReachConfig) -> f64 {
    let policy = cfg.policy.clone().with_tau(cloud.tau).with_exec(Exec::Sequential);
    let mut worst = 0.0f64;
    let mut cache: std::collections::BTreeMap<usize, Vec<HybridArc>> = Default::default();
    for p in &cloud.points {
        let arcs = cache.entry(p.source).or_insert_with(|| {
            solve_tree(h, &cloud.sources[p.source], &policy, cfg.branch_budget, tree_seed(cloud.seed, p.source))
                .map(|t| t.arcs)
                .unwrap_or_default()
        });
        let d = arcs
            .iter()
            .find(|a| a.branch == p.branch)
            .and_then(|a| eval_near(a, p.t, p.j, cfg.time_tol))
            .map_or(f64::INFINITY, |(x, _)| dist(&x, &p.x));
        worst = worst.max(d);
    }
    worst
}

/// Hausdorff distance between clouds; infinite when either is empty.
pub fn hausdorff(a: &ReachCloud, b: &ReachCloud) -> f64 {
    hausdorff_points(&a.states(), &b.states())
}

/// `sup_{a ∈ A} dist(a, B)`; zero for empty `A`, infinite for empty `B` otherwise.
pub fn directed(a: &ReachCloud, b: &ReachCloud) -> f64 {
    directed_hausdorff(&a.states(), &b.states())
}

// ---------------------------------------------------------------------------
// Probes.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    Osc,
    Isc,
    Inflate,
    Double,
}

impl std::str::FromStr for ProbeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "osc" => Ok(ProbeKind::Osc),
            "isc" => Ok(ProbeKind::Isc),
            "inflate" => Ok(ProbeKind::Inflate),
            "double" => Ok(ProbeKind::Double),
            _ => Err(format!("unknown probe kind `{s}` (osc, isc, inflate, double)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub reach: ReachConfig,
    /// Initial-condition radius is `gauge_scale · ε^gauge_power`.
    pub gauge_power: f64,
    pub gauge_scale: f64,
    /// Sampled initial conditions per level.
    pub initial_samples: usize,
    /// Time grid per level for `osc` and `inflate`.
    pub time_grid: usize,
    /// Nonincreasing allowance between consecutive levels.
    pub slack: f64,
    /// A query time this close to a jump or terminal time counts as one.
    pub hyp_time_tol: f64,
    /// Samples of `D` for the `G(D) ⊂ C̃` check.
    pub hyp_samples: usize,
    /// Half-width of the box around `x0` in which `D` is sampled.
    pub hyp_box: f64,
    pub flows: FlowsPossibleConfig,
    /// Store each level's cloud in the report (for replay).
    pub keep_clouds: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            reach: ReachConfig::default(),
            gauge_power: 1.0,
            gauge_scale: 1.0,
            initial_samples: 8,
            time_grid: 9,
            slack: 0.1,
            hyp_time_tol: 1e-5,
            hyp_samples: 50,
            hyp_box: 5.0,
            flows: FlowsPossibleConfig::default(),
            keep_clouds: false,
        }
    }
}

impl ProbeConfig {
    fn gauge(&self, eps: f64) -> f64 {
        self.gauge_scale * eps.powf(self.gauge_power)
    }

    fn gauge_text(&self) -> String {
        format!("x0 radius {}·ε^{}", self.gauge_scale, self.gauge_power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    /// `r_k` for osc/isc, `ε_k` for inflate/double.
    pub radius: f64,
    pub delta: f64,
    pub x0_radius: f64,
    pub times: Vec<f64>,
    /// Sampled initial conditions in `cl C_δ ∪ D_δ` (pairs `(x0', T')` for osc and isc).
    pub initial: usize,
    pub points: usize,
    /// Sampled `(x0', T')` with an empty perturbed cloud.
    pub empty_clouds: usize,
    pub distance: f64,
    pub bounded: bool,
    /// The level's perturbed cloud, kept when `ProbeConfig::keep_clouds` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<ReachCloud>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub x0: Vec<f64>,
    pub t: f64,
    pub j: usize,
    pub nominal: Vec<Vec<f64>>,
    pub levels: Vec<ProbeLevel>,
    pub hypotheses: Vec<Hypothesis>,
    /// False when a theorem hypothesis needed to run the probe fails.
    pub applicable: bool,
    pub consistent: bool,
    pub gauge: String,
    pub summary: String,
}

impl ProbeReport {
    pub fn distances(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.distance).collect()
    }

    /// Distances are finite and nonincreasing up to the relative slack.
    pub fn nonincreasing(&self, slack: f64) -> bool {
        let d = self.distances();
        d.iter().all(|v| v.is_finite()) && d.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack) + 1e-12)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("probe {:?} at x0={:?}, T={}, J={} ({})\n", self.kind, self.x0, self.t, self.j, self.gauge);
        for h in &self.hypotheses {
            s.push_str(&format!("  hypothesis {}: {}\n", if h.holds { "holds" } else { "fails" }, h.detail));
        }
        for l in &self.levels {
            s.push_str(&format!(
                "  r={:<10.4e} delta={:<10.4e} x0r={:<10.4e} initial={:<3} points={:<5} empty={:<3} dist={:.4e}{}\n",
                l.radius,
                l.delta,
                l.x0_radius,
                l.initial,
                l.points,
                l.empty_clouds,
                l.distance,
                if l.bounded { "" } else { " unbounded" }
            ));
        }
        s.push_str(&format!("  {}\n", self.summary));
        s
    }
}

fn dedup(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in v.drain(..) {
        if !out.iter().any(|q| q == &p) {
            out.push(p);
        }
    }
    out
}

fn perturbed_initials(h: &HybridSystem, x0: &[f64], r: f64, cfg: &ProbeConfig, seed: u64) -> Vec<Vec<f64>> {
    let dom = SetSpec::Union(vec![h.c.clone(), h.d.clone()]);
    dedup(dom.sample_near(x0, r, cfg.initial_samples, seed).unwrap_or_default())
}

/// Sampled `(x0', T')` in `(x0, T) + rB` with `x0' ∈ cl C ∪ D`: the probe
/// pattern in `R^{n+1}`, with outside states projected when the pair stays
/// in the ball.
fn joint_pairs(h: &HybridSystem, x0: &[f64], t: f64, r: f64, cfg: &ProbeConfig, seed: u64) -> Vec<(Vec<f64>, f64)> {
    let n = x0.len();
    let dom = SetSpec::Union(vec![h.c.clone(), h.d.clone()]);
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for u in geom::ball_pattern(n + 1, cfg.initial_samples, seed) {
        let dt = r * u[n];
        let mut x = geom::axpy(x0, r, &u[..n]);
        if !dom.contains(&x, DEFAULT_TOL).unwrap_or(false) {
            match dom.project(&x).ok().flatten() {
                Some(p) => x = p,
                None => continue,
            }
        }
        let gap = (dist(&x, x0).powi(2) + dt * dt).sqrt();
        let tp = t + dt;
        if gap <= r * (1.0 + 1e-12) && tp >= 0.0 && !out.iter().any(|(y, s)| *y == x && *s == tp) {
            out.push((x, tp));
        }
    }
    out
}

/// One perturbed cloud per sampled pair, and their union with provenance.
fn pair_clouds(
    h: &HybridSystem,
    pairs: &[(Vec<f64>, f64)],
    j: usize,
    cfg: &ReachConfig,
    seed: u64,
) -> Result<(Vec<Vec<Vec<f64>>>, ReachCloud), ReachError> {
    let mut sources: Vec<Vec<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for (x, t) in pairs {
        if !sources.contains(x) {
            sources.push(x.clone());
        }
        if !times.contains(t) {
            times.push(*t);
        }
    }
    let sw = sweep(h, sources.clone(), &times, j, cfg, seed)?;
    let clouds = pairs
        .iter()
        .map(|(x, t)| {
            let s = sources.iter().position(|y| y == x).unwrap();
            let k = times.iter().position(|u| u == t).unwrap();
            sw.values[s][k].iter().map(|p| p.x.clone()).collect()
        })
        .collect();
    let t_lo = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_hi = times.iter().cloned().fold(0.0, f64::max);
    let query = ReachQuery { t_lo: if t_lo.is_finite() { t_lo } else { 0.0 }, t_hi, j };
    Ok((clouds, cloud_from(h, sw, query, seed)))
}

fn level_seed(seed: u64, k: usize) -> u64 {
    geom::mix_seed(seed, &[0x5eed, k as u64])
}

fn nominal(h: &HybridSystem, x0: &[f64], t: f64, j: usize, cfg: &ProbeConfig, seed: u64) -> Result<ReachCloud, ReachError> {
    reach(h, &Initial::from(x0.to_vec()), t, j, &cfg.reach, seed)
}

fn verdict(levels: &[ProbeLevel], tol: f64, slack: f64) -> (bool, String) {
    let d: Vec<f64> = levels.iter().map(|l| l.distance).collect();
    let mono = d.iter().all(|v| v.is_finite()) && d.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack) + 1e-12);
    let last = d.last().copied().unwrap_or(f64::INFINITY);
    let ok = mono && last <= tol;
    let seq: Vec<String> = d.iter().map(|v| format!("{v:.3e}")).collect();
    let text = format!(
        "{} (distances [{}], tol {tol:.1e})",
        if ok { "consistent with the theorem's conclusion" } else { "inconsistent at this resolution" },
        seq.join(", ")
    );
    (ok, text)
}

fn report(
    kind: ProbeKind,
    x0: &[f64],
    t: f64,
    j: usize,
    nom: &ReachCloud,
    levels: Vec<ProbeLevel>,
    hypotheses: Vec<Hypothesis>,
    sched: &ProbeSchedule,
    cfg: &ProbeConfig,
) -> ProbeReport {
    let (consistent, summary) = verdict(&levels, sched.tol, cfg.slack);
    ProbeReport {
        kind,
        x0: x0.to_vec(),
        t,
        j,
        nominal: nom.states(),
        levels,
        hypotheses,
        applicable: true,
        consistent,
        gauge: cfg.gauge_text(),
        summary,
    }
}

fn level(radius: f64, delta: f64, x0_radius: f64, pairs: &[(Vec<f64>, f64)], clouds: &[Vec<Vec<f64>>], distance: f64, cloud: Option<ReachCloud>) -> ProbeLevel {
    let mut times: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    ProbeLevel {
        radius,
        delta,
        x0_radius,
        times,
        initial: pairs.len(),
        points: clouds.iter().map(Vec::len).sum(),
        empty_clouds: clouds.iter().filter(|c| c.is_empty()).count(),
        distance,
        bounded: clouds.iter().flatten().all(|x| norm(x) <= BOUND_LIMIT),
        cloud,
    }
}

fn window(t: f64, r: f64) -> (f64, f64) {
    ((t - r).max(0.0), t + r)
}

/// Outer semicontinuity: perturbed clouds of `H^{δ_k ρ}` from
/// `(x0, T, J) + r_k B` against the nominal cloud, by directed distance
/// perturbed → nominal.
#[allow(clippy::too_many_arguments)]
pub fn osc_probe(
    h: &HybridSystem,
    rho: &Expr,
    x0: &[f64],
    t: f64,
    j: usize,
    sched: &ProbeSchedule,
    seed: u64,
    cfg: &ProbeConfig,
) -> Result<ProbeReport, ReachError> {
    sched.validate().map_err(|e| ReachError::Query(e.to_string()))?;
    let nom = nominal(h, x0, t, j, cfg, seed)?;
    if nom.is_empty() {
        return Err(ReachError::EmptyNominal);
    }
    let mut levels = Vec::new();
    for k in 0..sched.levels() {
        let (r, delta) = (sched.radii[k], sched.deltas[k]);
        let hk = rho_inflate(h, rho, delta);
        let pairs = joint_pairs(&hk, x0, t, r, cfg, level_seed(seed, k));
        let (clouds, merged) = pair_clouds(&hk, &pairs, j, &cfg.reach, level_seed(seed, k))?;
        let kept = cfg.keep_clouds.then_some(merged);
        let cloud: Vec<Vec<f64>> = clouds.iter().flatten().cloned().collect();
        levels.push(level(r, delta, r, &pairs, &clouds, directed_hausdorff(&cloud, &nom.states()), kept));
    }
    let bounded = levels.iter().all(|l| l.bounded);
    let hyp = Hypothesis { holds: bounded, detail: "perturbed clouds bounded".into() };
    Ok(report(ProbeKind::Osc, x0, t, j, &nom, levels, vec![hyp], sched, cfg))
}

/// Inner semicontinuity: for every sampled `(x0', T')` near `(x0, T)`,
/// directed distance nominal → perturbed cloud of `H_{δ_k}`; the level
/// distance is the worst case, infinite when some perturbed cloud is empty.
#[allow(clippy::too_many_arguments)]
pub fn isc_probe(
    fam: &PerturbationFamily,
    h: &HybridSystem,
    x0: &[f64],
    t: f64,
    j: usize,
    sched: &ProbeSchedule,
    seed: u64,
    cfg: &ProbeConfig,
) -> Result<ProbeReport, ReachError> {
    sched.validate().map_err(|e| ReachError::Query(e.to_string()))?;
    let nom = nominal(h, x0, t, j, cfg, seed)?;
    let hyp = isc_hypothesis(h, &nom, x0, t, j, cfg, seed)?;
    let mut levels = Vec::new();
    let nom_states = nom.states();
    for k in 0..sched.levels() {
        let (r, delta) = (sched.radii[k], sched.deltas[k]);
        let hk = fam.at(delta);
        let pairs = joint_pairs(&hk, x0, t, r, cfg, level_seed(seed, k));
        let (clouds, merged) = pair_clouds(&hk, &pairs, j, &cfg.reach, level_seed(seed, k))?;
        let kept = cfg.keep_clouds.then_some(merged);
        let worst = if nom_states.is_empty() {
            0.0
        } else {
            clouds.iter().map(|c| directed_hausdorff(&nom_states, c)).fold(0.0, f64::max)
        };
        levels.push(level(r, delta, r, &pairs, &clouds, worst, kept));
    }
    Ok(report(ProbeKind::Isc, x0, t, j, &nom, levels, vec![hyp], sched, cfg))
}

fn isc_hypothesis(
    h: &HybridSystem,
    nom: &ReachCloud,
    x0: &[f64],
    t: f64,
    j: usize,
    cfg: &ProbeConfig,
    seed: u64,
) -> Result<Hypothesis, ReachError> {
    if nom.is_empty() {
        return Ok(Hypothesis { holds: true, detail: "nominal reachable set empty".into() });
    }
    // Flowing past T + tol rules out T being a jump or terminal time at this resolution.
    let later = reach(h, &Initial::from(x0.to_vec()), t + cfg.hyp_time_tol, j, &cfg.reach, seed)?;
    let witnessed = |p: &ReachPoint| later.points.iter().any(|q| q.branch == p.branch && q.source == p.source && q.flows_past);
    let bad: Vec<&ReachPoint> = nom.points.iter().filter(|p| !witnessed(p)).collect();
    Ok(if bad.is_empty() {
        Hypothesis { holds: true, detail: "T is not a jump or terminal time of any witnessing solution".into() }
    } else {
        Hypothesis {
            holds: false,
            detail: format!(
                "T is a jump or terminal time (within {:.0e}) of the solution reaching {:?}",
                cfg.hyp_time_tol, bad[0].x
            ),
        }
    })
}

/// Continuous-time inflation: clouds over `[T - ε_k, T + ε_k]` of `H_{δ_k}`
/// from `x0 + gauge(ε_k)B`, by Hausdorff distance to the nominal cloud.
#[allow(clippy::too_many_arguments)]
pub fn inflation_approx(
    fam: &PerturbationFamily,
    h: &HybridSystem,
    x0: &[f64],
    t: f64,
    j: usize,
    sched: &ProbeSchedule,
    seed: u64,
    cfg: &ProbeConfig,
) -> Result<ProbeReport, ReachError> {
    sched.validate().map_err(|e| ReachError::Query(e.to_string()))?;
    let nom = nominal(h, x0, t, j, cfg, seed)?;
    let mut levels = Vec::new();
    let mut nonempty = true;
    for k in 0..sched.levels() {
        let (eps, delta) = (sched.radii[k], sched.deltas[k]);
        let hk = fam.at(delta);
        let r0 = cfg.gauge(eps);
        let ics = perturbed_initials(&hk, x0, r0, cfg, level_seed(seed, k));
        nonempty &= !ics.is_empty();
        let (lo, hi) = window(t, eps);
        let rc = ReachConfig { time_grid: cfg.time_grid, ..cfg.reach.clone() };
        let cloud = reach_interval(&hk, &Initial::Points(ics.clone()), lo, hi, j, &rc, level_seed(seed, k))?;
        let distance = if nom.is_empty() && cloud.is_empty() { 0.0 } else { hausdorff(&cloud, &nom) };
        levels.push(ProbeLevel {
            radius: eps,
            delta,
            x0_radius: r0,
            times: grid(lo, hi, cfg.time_grid),
            initial: ics.len(),
            points: cloud.len(),
            empty_clouds: usize::from(cloud.is_empty()),
            distance,
            bounded: cloud.bounded(),
            cloud: cfg.keep_clouds.then_some(cloud.clone()),
        });
    }
    let hyp = Hypothesis {
        holds: nonempty,
        detail: "(x0 + gauge·B) ∩ (cl C_δ ∪ D_δ) nonempty at every level".into(),
    };
    Ok(report(ProbeKind::Inflate, x0, t, j, &nom, levels, vec![hyp], sched, cfg))
}

/// Samples `G(D) ⊂ C̃`: images of sampled points of `D` must admit flows.
pub fn jump_images_can_flow(h: &HybridSystem, x0: &[f64], cfg: &ProbeConfig, seed: u64) -> Hypothesis {
    let lo: Vec<f64> = x0.iter().map(|v| v - cfg.hyp_box).collect();
    let hi: Vec<f64> = x0.iter().map(|v| v + cfg.hyp_box).collect();
    let pts = h.d.sample_in_box(&lo, &hi, cfg.hyp_samples, geom::mix_seed(seed, &[0xd])).unwrap_or_default();
    let mut checked = 0;
    for (k, x) in pts.iter().enumerate() {
        let ys = h.g.sample_points(x, 2, geom::mix_seed(seed, &[0x9, k as u64])).unwrap_or_default();
        for y in ys {
            checked += 1;
            if flows_possible(h, &y, &cfg.flows).cone != Cone::Inside {
                return Hypothesis { holds: false, detail: format!("G({x:?}) ∋ {y:?} not in C̃") };
            }
        }
    }
    Hypothesis { holds: true, detail: format!("G(D) ⊂ C̃ on {} sampled points of D ({checked} images)", pts.len()) }
}

/// Continuous-time doubling: `S⁻ ∪ S⁺` with `S⁻` the cloud of `H_{δ_k}` at
/// `max(0, T - ε_k)` and `S⁺` at `T + ε_k`, by Hausdorff distance to the
/// nominal cloud.
#[allow(clippy::too_many_arguments)]
pub fn doubling_approx(
    fam: &PerturbationFamily,
    h: &HybridSystem,
    x0: &[f64],
    t: f64,
    j: usize,
    sched: &ProbeSchedule,
    seed: u64,
    cfg: &ProbeConfig,
) -> Result<ProbeReport, ReachError> {
    sched.validate().map_err(|e| ReachError::Query(e.to_string()))?;
    let nom = nominal(h, x0, t, j, cfg, seed)?;
    let gd = jump_images_can_flow(h, x0, cfg, seed);
    let starts = t + j as f64 > 0.0 || flows_possible(h, x0, &cfg.flows).cone == Cone::Inside;
    let start_hyp = Hypothesis { holds: starts, detail: "T + J > 0 or x0 ∈ C̃".into() };
    if !starts {
        return Ok(ProbeReport {
            kind: ProbeKind::Double,
            x0: x0.to_vec(),
            t,
            j,
            nominal: nom.states(),
            levels: Vec::new(),
            hypotheses: vec![start_hyp, gd],
            applicable: false,
            consistent: false,
            gauge: cfg.gauge_text(),
            summary: "not applicable: T + J = 0 and x0 ∉ C̃".into(),
        });
    }
    let mut levels = Vec::new();
    for k in 0..sched.levels() {
        let (eps, delta) = (sched.radii[k], sched.deltas[k]);
        let hk = fam.at(delta);
        let r0 = cfg.gauge(eps);
        let ics = perturbed_initials(&hk, x0, r0, cfg, level_seed(seed, k));
        let mut times = vec![(t - eps).max(0.0), t + eps];
        times.dedup();
        let sw = sweep(&hk, ics.clone(), &times, j, &cfg.reach, level_seed(seed, k))?;
        let cloud: Vec<Vec<f64>> = sw.values.iter().flatten().flatten().map(|p| p.x.clone()).collect();
        let query = ReachQuery { t_lo: times[0], t_hi: times[times.len() - 1], j };
        let kept = cfg.keep_clouds.then(|| cloud_from(&hk, sw, query, level_seed(seed, k)));
        let distance = if nom.is_empty() && cloud.is_empty() { 0.0 } else { hausdorff_points(&cloud, &nom.states()) };
        levels.push(ProbeLevel {
            radius: eps,
            delta,
            x0_radius: r0,
            times,
            initial: ics.len(),
            points: cloud.len(),
            empty_clouds: usize::from(cloud.is_empty()),
            distance,
            bounded: cloud.iter().all(|x| norm(x) <= BOUND_LIMIT),
            cloud: kept,
        });
    }
    let mut rep = report(ProbeKind::Double, x0, t, j, &nom, levels, vec![start_hyp, gd], sched, cfg);
    if !rep.hypotheses[1].holds {
        rep.summary.push_str("; warning: G(D) ⊂ C̃ violated");
    }
    Ok(rep)
}

/// Membership of `x` in `cl C ∪ D` at the default tolerance.
pub fn in_domain(h: &HybridSystem, x: &[f64]) -> bool {
    h.in_domain(x, DEFAULT_TOL).unwrap_or(false)
}
