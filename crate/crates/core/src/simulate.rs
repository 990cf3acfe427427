//! Solutions of hybrid systems: single solutions under a selection policy,
//! solution trees, solutions to a terminal constraint, and the classifier for
//! points where flows are possible.
//!
//! Flows are integrated by fixed-step RK4 on a single-valued selection of `F`
//! held for the whole flow phase. Events (leaving `C`, entering `D`) are
//! located by bisection on the length of a single RK4 sub-step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arc::{HybridArc, Termination};
use crate::cones::{bouligand_contains, Cone, ConeConfig, ConePath, ConeVerdict, ConeWitness};
use crate::exec::Exec;
use crate::geom::{self, axpy, dist, norm};
use crate::hybrid::HybridSystem;
use crate::maps::{Map, MapError};
use crate::sets::{SetError, SetSpec, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Vertex `i` of the hull (indices wrap around).
    Vertex(usize),
    /// Fixed convex weights on the vertices.
    Weights(Vec<f64>),
    /// Fresh seeded convex weights and ball offset at every step.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Priority {
    FlowFirst,
    JumpFirst,
    Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolvePolicy {
    pub flow_selection: Selection,
    pub jump_selection: Selection,
    pub priority: Priority,
    /// RK4 step.
    pub h: f64,
    /// Bisection stops when the bracket is shorter than this.
    pub event_tol: f64,
    /// Membership tolerance for `C` along flows.
    pub flow_tol: f64,
    /// Membership tolerance for `D`.
    pub jump_tol: f64,
    /// Flows shorter than this do not count as flows.
    pub min_flow_time: f64,
    pub t_max: f64,
    pub j_max: usize,
    /// Budget on `t + j`.
    pub tau_max: f64,
    pub escape: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for SolvePolicy {
    fn default() -> Self {
        SolvePolicy {
            flow_selection: Selection::Vertex(0),
            jump_selection: Selection::Vertex(0),
            priority: Priority::Branch,
            h: 1e-3,
            event_tol: 1e-14,
            flow_tol: 1e-11,
            jump_tol: 1e-9,
            min_flow_time: 1e-9,
            t_max: 1e9,
            j_max: 100_000,
            tau_max: 10.0,
            escape: 1e8,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl SolvePolicy {
    pub fn with_priority(mut self, p: Priority) -> Self {
        self.priority = p;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau_max = tau;
        self
    }

    pub fn with_budgets(mut self, t_max: f64, j_max: usize) -> Self {
        self.t_max = t_max;
        self.j_max = j_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::Policy(m.into()));
        if !(self.h > 0.0) {
            return bad("h must be positive");
        }
        if !(self.event_tol > 0.0 && self.flow_tol >= 0.0 && self.jump_tol >= 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.t_max >= 0.0 && self.tau_max >= 0.0) {
            return bad("budgets must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("initial condition {0:?} is outside cl(C) ∪ D")]
    Outside(Vec<f64>),
    #[error("both flow and jump possible at t={t}, j={j}, x={x:?}; choose a priority")]
    Ambiguous { t: f64, j: usize, x: Vec<f64> },
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// How a single-valued selection is drawn from a map value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Choice {
    Vertex(usize),
    Weights(Vec<f64>),
    Barycenter,
    /// Barycenter plus `radius · dir`.
    Offset(Vec<f64>),
    /// Seeded random weights and offset, redrawn per step.
    Random(u64),
}

impl Choice {
    fn from_selection(s: &Selection, seed: u64) -> Choice {
        match s {
            Selection::Vertex(i) => Choice::Vertex(*i),
            Selection::Weights(w) => Choice::Weights(w.clone()),
            Selection::Random => Choice::Random(seed),
        }
    }
}

/// Evaluates the selection at `x`. `None` when the (restricted) value is empty.
pub fn pick(m: &Map, x: &[f64], choice: &Choice, step: u64) -> Result<Option<Vec<f64>>, MapError> {
    let value = m.value(x)?;
    let Some(first) = value.pieces.first() else { return Ok(None) };
    let bary = |p: &crate::maps::HullPiece| p.barycenter();
    let y = match choice {
        Choice::Vertex(i) => {
            let all: Vec<&Vec<f64>> = value.pieces.iter().flat_map(|p| &p.vertices).collect();
            all[i % all.len()].clone()
        }
        Choice::Weights(w) if w.len() == first.vertices.len() => {
            let mut y = vec![0.0; first.vertices[0].len()];
            for (wi, v) in w.iter().zip(&first.vertices) {
                y = axpy(&y, *wi, v);
            }
            y
        }
        Choice::Weights(_) | Choice::Barycenter => bary(first),
        Choice::Offset(dir) => axpy(&bary(first), first.radius, dir),
        Choice::Random(seed) => {
            let mut r = geom::rng(geom::mix_seed(*seed, &[step]));
            use rand::Rng;
            let p = &value.pieces[r.gen_range(0..value.pieces.len())];
            let w = geom::simplex_weights(&mut r, p.vertices.len());
            let mut y = vec![0.0; p.vertices[0].len()];
            for (wi, v) in w.iter().zip(&p.vertices) {
                y = axpy(&y, *wi, v);
            }
            if p.radius > 0.0 {
                geom::ball_point(&mut r, &y, p.radius)
            } else {
                y
            }
        }
    };
    if let Some(rs) = m.restrict_to() {
        if !rs.contains(&y, DEFAULT_TOL)? {
            return match m.sample_points(x, 8, step) {
                Ok(v) => Ok(v.into_iter().next()),
                Err(MapError::EmptyImage) => Ok(None),
                Err(e) => Err(e),
            };
        }
    }
    Ok(Some(y))
}

struct Ctx<'a> {
    h: &'a HybridSystem,
    p: &'a SolvePolicy,
}

enum FlowEnd {
    Exited,
    EnteredD,
    Budget,
    Escape,
}

impl Ctx<'_> {
    fn in_c(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite()) && self.h.c.contains(x, self.p.flow_tol).unwrap_or(false)
    }

    fn in_d(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite()) && self.h.d.contains(x, self.p.jump_tol).unwrap_or(false)
    }

    fn rk4(&self, x: &[f64], s: f64, choice: &Choice, step: u64) -> Option<Vec<f64>> {
        let f = |y: &[f64]| pick(&self.h.f, y, choice, step).ok().flatten();
        let k1 = f(x)?;
        let k2 = f(&axpy(x, s / 2.0, &k1))?;
        let k3 = f(&axpy(x, s / 2.0, &k2))?;
        let k4 = f(&axpy(x, s, &k3))?;
        let out: Vec<f64> =
            (0..x.len()).map(|i| x[i] + s / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn remaining(&self, t: f64, j: usize) -> f64 {
        (self.p.t_max - t).min(self.p.tau_max - j as f64 - t)
    }

    /// Largest `s` in `[0, dt]` with the sub-step ending in `C`, given that
    /// the full step does not.
    fn exit_length(&self, x: &[f64], dt: f64, choice: &Choice, step: u64) -> (f64, Option<Vec<f64>>) {
        let (mut lo, mut hi) = (0.0, dt);
        let mut best = None;
        for _ in 0..200 {
            if hi - lo <= self.p.event_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.rk4(x, mid, choice, step) {
                Some(y) if self.in_c(&y) => {
                    lo = mid;
                    best = Some(y);
                }
                _ => hi = mid,
            }
        }
        (lo, best)
    }

    /// Smallest `s` in `(0, dt]` with the sub-step ending in `D`.
    fn entry_length(&self, x: &[f64], dt: f64, choice: &Choice, step: u64) -> (f64, Vec<f64>) {
        let (mut lo, mut hi) = (0.0, dt);
        let mut best = self.rk4(x, dt, choice, step).unwrap();
        for _ in 0..200 {
            if hi - lo <= self.p.event_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.rk4(x, mid, choice, step) {
                Some(y) if self.in_d(&y) => {
                    hi = mid;
                    best = y;
                }
                _ => lo = mid,
            }
        }
        (hi, best)
    }

    /// Length of feasible flow from `x` within one step, capped at `h`.
    fn flow_probe(&self, x: &[f64], choice: &Choice, step: u64, cap: f64) -> f64 {
        let dt = self.p.h.min(cap);
        if dt <= 0.0 {
            return 0.0;
        }
        match self.rk4(x, dt, choice, step) {
            Some(y) if self.in_c(&y) => dt,
            _ => self.exit_length(x, dt, choice, step).0,
        }
    }

    fn can_flow(&self, x: &[f64], t: f64, j: usize, choice: &Choice, step: u64) -> bool {
        if !self.in_c(x) {
            return false;
        }
        let cap = self.remaining(t, j);
        cap > 0.0 && self.flow_probe(x, choice, step, cap) > self.p.min_flow_time.min(cap)
    }

    fn flow_phase(&self, arc: &mut HybridArc, choice: &Choice, step: &mut u64) -> FlowEnd {
        let watch_d = self.p.priority != Priority::FlowFirst;
        let mut was_in_d = self.in_d(arc.end_state());
        loop {
            let (t, j) = arc.end_time();
            let x = arc.end_state().to_vec();
            let rem = self.remaining(t, j);
            if rem <= 0.0 {
                return FlowEnd::Budget;
            }
            let dt = self.p.h.min(rem);
            *step += 1;
            match self.rk4(&x, dt, choice, *step) {
                Some(y) if self.in_c(&y) => {
                    if watch_d && !was_in_d && self.in_d(&y) {
                        let (s, ys) = self.entry_length(&x, dt, choice, *step);
                        if s > 0.0 {
                            arc.push_flow(t + s, ys);
                        }
                        return FlowEnd::EnteredD;
                    }
                    was_in_d = self.in_d(&y);
                    let big = norm(&y) > self.p.escape;
                    let t_next = if dt == rem { t + rem } else { t + dt };
                    arc.push_flow(t_next, y);
                    if big {
                        return FlowEnd::Escape;
                    }
                    if dt == rem {
                        return FlowEnd::Budget;
                    }
                }
                _ => {
                    let (s, ys) = self.exit_length(&x, dt, choice, *step);
                    if let (true, Some(ys)) = (s > 0.0, ys) {
                        arc.push_flow(t + s, ys);
                    }
                    return FlowEnd::Exited;
                }
            }
        }
    }

    fn budget_reached(&self, arc: &HybridArc) -> bool {
        let (t, j) = arc.end_time();
        self.remaining(t, j) <= 0.0
    }
}

/// One option at a decision point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Flow(Choice),
    Jump(Vec<f64>),
}

const RANDOM_OPTIONS: u64 = 2;

fn path_hash(path: &str) -> u64 {
    path.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Selections worth branching on at `x`: the policy default, each vertex,
/// the barycenter, axis offsets of the radius ball, and seeded draws, deduped
/// by their value at `x`.
fn candidate_choices(m: &Map, x: &[f64], default: Choice, seed: u64) -> Vec<(Choice, Vec<f64>)> {
    let mut cands = vec![default];
    if let Ok(v) = m.value(x) {
        if !v.is_point() || m.restrict_to().is_some() {
            let nv: usize = v.pieces.iter().map(|p| p.vertices.len()).sum();
            cands.extend((0..nv).map(Choice::Vertex));
            cands.push(Choice::Barycenter);
            if v.pieces.iter().any(|p| p.radius > 0.0) {
                for i in 0..x.len() {
                    for s in [1.0, -1.0] {
                        let mut e = vec![0.0; x.len()];
                        e[i] = s;
                        cands.push(Choice::Offset(e));
                    }
                }
            }
            cands.extend((0..RANDOM_OPTIONS).map(|k| Choice::Random(geom::mix_seed(seed, &[k]))));
        }
    }
    let mut out: Vec<(Choice, Vec<f64>)> = Vec::new();
    for c in cands {
        if let Ok(Some(y)) = pick(m, x, &c, 0) {
            if !out.iter().any(|(_, z)| dist(z, &y) <= 1e-12) {
                out.push((c, y));
            }
        }
    }
    out
}

impl Ctx<'_> {
    /// Options at the current end of `arc`, ordered by the priority.
    fn options(&self, arc: &HybridArc, path: &str, decision: u64, branching: bool) -> Vec<Action> {
        let (t, j) = arc.end_time();
        let x = arc.end_state();
        let seed = geom::mix_seed(self.p.seed, &[path_hash(path), decision]);
        let default_flow = Choice::from_selection(&self.p.flow_selection, seed);
        let default_jump = Choice::from_selection(&self.p.jump_selection, seed ^ 1);
        let flows: Vec<Action> = if branching {
            candidate_choices(&self.h.f, x, default_flow, seed)
                .into_iter()
                .filter(|(c, _)| self.can_flow(x, t, j, c, 0))
                .map(|(c, _)| Action::Flow(c))
                .collect()
        } else if self.can_flow(x, t, j, &default_flow, 0) {
            vec![Action::Flow(default_flow)]
        } else {
            vec![]
        };
        let jumps: Vec<Action> = if self.in_d(x) && j < self.p.j_max {
            if branching {
                candidate_choices(&self.h.g, x, default_jump, seed ^ 1).into_iter().map(|(_, y)| Action::Jump(y)).collect()
            } else {
                pick(&self.h.g, x, &default_jump, 0).ok().flatten().map(Action::Jump).into_iter().collect()
            }
        } else {
            vec![]
        };
        match (flows.is_empty(), jumps.is_empty(), self.p.priority) {
            (false, false, Priority::FlowFirst) => flows,
            (false, false, Priority::JumpFirst) => jumps,
            _ => flows.into_iter().chain(jumps).collect(),
        }
    }

    /// Applies one action; returns `false` when the arc terminated.
    fn apply(&self, arc: &mut HybridArc, action: &Action, step: &mut u64) -> bool {
        match action {
            Action::Jump(y) => {
                arc.push_jump(y.clone());
                if norm(y) > self.p.escape {
                    let (t, j) = arc.end_time();
                    arc.termination = Termination::Escape { t, j };
                    return false;
                }
                true
            }
            Action::Flow(c) => {
                let before = arc.end_time();
                match self.flow_phase(arc, c, step) {
                    FlowEnd::Budget => {
                        arc.termination = Termination::Budget;
                        false
                    }
                    FlowEnd::Escape => {
                        let (t, j) = arc.end_time();
                        arc.termination = Termination::Escape { t, j };
                        false
                    }
                    FlowEnd::Exited | FlowEnd::EnteredD => {
                        if arc.end_time() == before {
                            arc.termination = Termination::Stuck;
                            return false;
                        }
                        true
                    }
                }
            }
        }
    }
}

fn check_start(h: &HybridSystem, x0: &[f64], p: &SolvePolicy) -> Result<(), SolveError> {
    p.validate()?;
    if x0.len() != h.dim {
        return Err(SolveError::Set(SetError::Dimension { expected: h.dim, found: x0.len() }));
    }
    if !(h.c.contains(x0, p.flow_tol)? || h.d.contains(x0, p.jump_tol)?) {
        return Err(SolveError::Outside(x0.to_vec()));
    }
    Ok(())
}

/// A single solution under the policy. With `Priority::Branch` an error is
/// returned where both a flow and a jump are possible.
pub fn solve(h: &HybridSystem, x0: &[f64], policy: &SolvePolicy) -> Result<HybridArc, SolveError> {
    check_start(h, x0, policy)?;
    let ctx = Ctx { h, p: policy };
    let mut arc = HybridArc::start(x0.to_vec());
    let mut step = 0u64;
    let mut decision = 0u64;
    loop {
        if ctx.budget_reached(&arc) {
            arc.termination = Termination::Budget;
            return Ok(arc);
        }
        let opts = ctx.options(&arc, "0", decision, false);
        decision += 1;
        let action = match opts.as_slice() {
            [] => {
                let (_, j) = arc.end_time();
                arc.termination =
                    if ctx.in_d(arc.end_state()) && j >= policy.j_max { Termination::Budget } else { Termination::Stuck };
                return Ok(arc);
            }
            [a] => a.clone(),
            _ => {
                let (t, j) = arc.end_time();
                return Err(SolveError::Ambiguous { t, j, x: arc.end_state().to_vec() });
            }
        };
        if !ctx.apply(&mut arc, &action, &mut step) {
            return Ok(arc);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub path: String,
    pub t: f64,
    pub j: usize,
    pub x: Vec<f64>,
    pub options: usize,
    pub taken: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTree {
    /// Leaves sorted by branch id.
    pub arcs: Vec<HybridArc>,
    pub branch_points: Vec<BranchPoint>,
}

struct Node {
    arc: HybridArc,
    pending: Option<Action>,
    step: u64,
    decision: u64,
}

enum Advance {
    Done(HybridArc),
    Split(Node, Vec<Action>),
}

impl Ctx<'_> {
    fn advance(&self, mut n: Node) -> Advance {
        if let Some(a) = n.pending.take() {
            if !self.apply(&mut n.arc, &a, &mut n.step) {
                return Advance::Done(n.arc);
            }
        }
        loop {
            if self.budget_reached(&n.arc) {
                n.arc.termination = Termination::Budget;
                return Advance::Done(n.arc);
            }
            let opts = self.options(&n.arc, &n.arc.branch, n.decision, true);
            n.decision += 1;
            match opts.len() {
                0 => {
                    let (_, j) = n.arc.end_time();
                    n.arc.termination = if self.in_d(n.arc.end_state()) && j >= self.p.j_max {
                        Termination::Budget
                    } else {
                        Termination::Stuck
                    };
                    return Advance::Done(n.arc);
                }
                1 => {
                    if !self.apply(&mut n.arc, &opts[0], &mut n.step) {
                        return Advance::Done(n.arc);
                    }
                }
                _ => return Advance::Split(n, opts),
            }
        }
    }
}

/// Explores flow/jump alternatives and map selections breadth-first, up to
/// `branch_budget` leaves. Children are numbered in option order, so the
/// result does not depend on scheduling.
pub fn solve_tree(
    h: &HybridSystem,
    x0: &[f64],
    policy: &SolvePolicy,
    branch_budget: usize,
    seed: u64,
) -> Result<SolutionTree, SolveError> {
    check_start(h, x0, policy)?;
    let p = SolvePolicy { seed, ..policy.clone() };
    let ctx = Ctx { h, p: &p };
    let budget = branch_budget.max(1);
    let mut done: Vec<HybridArc> = Vec::new();
    let mut branch_points = Vec::new();
    let mut active = vec![Node { arc: HybridArc::start(x0.to_vec()), pending: None, step: 0, decision: 0 }];
    while !active.is_empty() {
        let nodes: Vec<std::sync::Mutex<Option<Node>>> =
            active.drain(..).map(|n| std::sync::Mutex::new(Some(n))).collect();
        let results = p.exec.map(&nodes, |m| ctx.advance(m.lock().unwrap().take().unwrap()));
        let mut splits = Vec::new();
        for r in results {
            match r {
                Advance::Done(a) => done.push(a),
                Advance::Split(n, opts) => splits.push((n, opts)),
            }
        }
        let mut leaves = done.len() + splits.len();
        for (n, opts) in splits {
            let extra = budget.saturating_sub(leaves).min(opts.len() - 1);
            leaves += extra;
            let (t, j) = n.arc.end_time();
            let kinds: Vec<&str> =
                opts.iter().map(|a| if matches!(a, Action::Flow(_)) { "flow" } else { "jump" }).collect();
            branch_points.push(BranchPoint {
                path: n.arc.branch.clone(),
                t,
                j,
                x: n.arc.end_state().to_vec(),
                options: opts.len(),
                taken: extra + 1,
                reason: kinds.join(","),
            });
            for (k, a) in opts.into_iter().take(extra + 1).enumerate() {
                let mut arc = n.arc.clone();
                arc.branch = format!("{}.{}", n.arc.branch, k);
                active.push(Node { arc, pending: Some(a), step: n.step, decision: n.decision });
            }
        }
    }
    done.sort_by(|a, b| a.branch.cmp(&b.branch));
    Ok(SolutionTree { arcs: done, branch_points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetMode {
    /// Truncate at the first sample in `X`.
    First,
    /// One truncation per sample in `X`.
    Every,
}

/// Tree arcs truncated on the terminal constraint `X`. Arcs never reaching
/// `X` are dropped; the result need not consist of maximal solutions.
pub fn solve_to_target(
    h: &HybridSystem,
    x0: &[f64],
    x_set: &SetSpec,
    policy: &SolvePolicy,
    branch_budget: usize,
    seed: u64,
    mode: TargetMode,
) -> Result<Vec<HybridArc>, SolveError> {
    let tree = solve_tree(h, x0, policy, branch_budget, seed)?;
    let mut out: Vec<HybridArc> = Vec::new();
    for arc in &tree.arcs {
        let hits: Vec<(usize, usize)> = arc
            .intervals
            .iter()
            .enumerate()
            .flat_map(|(ji, iv)| iv.states.iter().enumerate().map(move |(k, x)| (ji, k, x)))
            .filter(|(_, _, x)| x_set.contains(x, policy.jump_tol).unwrap_or(false))
            .map(|(ji, k, _)| (ji, k))
            .collect();
        let take = match mode {
            TargetMode::First => hits.into_iter().take(1).collect::<Vec<_>>(),
            TargetMode::Every => hits,
        };
        for (ji, k) in take {
            let mut a = arc.clone();
            a.intervals.truncate(ji + 1);
            a.intervals[ji].times.truncate(k + 1);
            a.intervals[ji].states.truncate(k + 1);
            a.termination = Termination::Target;
            if !out.iter().any(|o| o.intervals == a.intervals) {
                out.push(a);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowsPossibleConfig {
    pub cone: ConeConfig,
    /// Radii for the local side condition, largest first.
    pub radii: Vec<f64>,
    pub boundary_samples: usize,
    pub map_samples: usize,
    pub interior_margin: f64,
    /// Flow length required by the simulation fallback.
    pub probe_time: f64,
    pub seed: u64,
}

impl Default for FlowsPossibleConfig {
    fn default() -> Self {
        FlowsPossibleConfig {
            cone: ConeConfig::default(),
            radii: geom::geometric(1e-2, 0.1, 5),
            boundary_samples: 12,
            map_samples: 8,
            interior_margin: 1e-9,
            probe_time: 1e-4,
            seed: 0,
        }
    }
}

fn some_tangent(c: &SetSpec, f: &Map, x: &[f64], cfg: &FlowsPossibleConfig) -> Result<(bool, bool, Option<ConeWitness>), SetError> {
    let vs = match f.sample_points(x, cfg.map_samples, cfg.seed) {
        Ok(v) => v,
        Err(MapError::EmptyImage) => return Ok((false, true, None)),
        Err(MapError::Set(e)) => return Err(e),
        Err(_) => return Ok((false, false, None)),
    };
    let mut all_out = true;
    let mut witness = None;
    for v in &vs {
        let verdict = bouligand_contains(c, x, v, &cfg.cone)?;
        match verdict.cone {
            Cone::Inside => return Ok((true, false, None)),
            Cone::Outside => {
                if witness.is_none() {
                    witness = verdict.witness;
                }
            }
            Cone::Inconclusive => all_out = false,
        }
    }
    Ok((false, all_out, witness))
}

/// Classifies `x` with respect to `C̃`, the set of points from which a
/// nontrivial flow exists.
///
/// Interior points are inside; points outside `C` or where every sampled
/// velocity leaves the tangent cone are outside. A tangent velocity counts
/// when every sampled boundary point within some radius also has one; when no
/// radius works, a short simulation from `x` decides.
pub fn flows_possible(h: &HybridSystem, x: &[f64], cfg: &FlowsPossibleConfig) -> ConeVerdict {
    let analytic = |cone| ConeVerdict { cone, path: ConePath::Analytic, witness: None };
    let numeric = |cone| ConeVerdict { cone, path: ConePath::Numeric, witness: None };
    match h.c.contains(x, DEFAULT_TOL) {
        Ok(false) => return analytic(Cone::Outside),
        Err(_) => return numeric(Cone::Inconclusive),
        Ok(true) => {}
    }
    if h.c.interior_contains(x, cfg.interior_margin).unwrap_or(false) {
        return analytic(Cone::Inside);
    }
    let (tangent, all_out, witness) = match some_tangent(&h.c, &h.f, x, cfg) {
        Ok(r) => r,
        Err(_) => return numeric(Cone::Inconclusive),
    };
    if all_out {
        return ConeVerdict { cone: Cone::Outside, path: ConePath::Analytic, witness };
    }
    if tangent {
        for (k, &r) in cfg.radii.iter().enumerate() {
            let seed = geom::mix_seed(cfg.seed, &[k as u64]);
            let Ok(bd) = h.c.sample_boundary_near(x, r, cfg.boundary_samples, seed) else { continue };
            let ok = bd.iter().all(|xp| matches!(some_tangent(&h.c, &h.f, xp, cfg), Ok((true, _, _))));
            if ok {
                return analytic(Cone::Inside);
            }
        }
    }
    let policy = SolvePolicy { h: cfg.probe_time / 4.0, t_max: cfg.probe_time, ..SolvePolicy::default() };
    let ctx = Ctx { h, p: &policy };
    let seed = geom::mix_seed(cfg.seed, &[0xf10]);
    for (c, _) in candidate_choices(&h.f, x, Choice::Vertex(0), seed) {
        let mut a = HybridArc::start(x.to_vec());
        let mut step = 0;
        loop {
            let before = a.end_time().0;
            let end = ctx.flow_phase(&mut a, &c, &mut step);
            if matches!(end, FlowEnd::Budget | FlowEnd::Escape) || a.end_time().0 == before {
                break;
            }
        }
        if a.end_time().0 >= cfg.probe_time * (1.0 - 1e-9) {
            return numeric(Cone::Inside);
        }
    }
    numeric(Cone::Outside)
}

/// Solution check: flow samples in `C`, difference quotients in the hull of
/// `F` at the midpoint (with an `O(dt²)` allowance), jumps from `D` into `G`.
pub fn validate_solution(h: &HybridSystem, arc: &HybridArc, tol: f64) -> Result<(), String> {
    if !crate::arc::validate_domain(&arc.domain()) {
        return Err("invalid hybrid time domain".into());
    }
    for (k, iv) in arc.intervals.iter().enumerate() {
        for w in iv.times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(format!("time grid not increasing in interval {k}"));
            }
        }
        if iv.times.len() > 1 {
            for (t, x) in iv.times.iter().zip(&iv.states) {
                if !h.c.contains(x, tol).map_err(|e| e.to_string())? {
                    return Err(format!("flow sample at t={t}, j={} outside C", iv.j));
                }
            }
        }
        for i in 0..iv.times.len().saturating_sub(1) {
            let dt = iv.times[i + 1] - iv.times[i];
            let q: Vec<f64> = iv.states[i + 1].iter().zip(&iv.states[i]).map(|(a, b)| (a - b) / dt).collect();
            let mid: Vec<f64> = iv.states[i].iter().zip(&iv.states[i + 1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let d = h.f.distance(&mid, &q).map_err(|e| e.to_string())?;
            let allowance = tol + 10.0 * dt * dt * (1.0 + norm(&q));
            if d > allowance {
                return Err(format!("flow residual {d:.3e} at t={}, j={}", iv.times[i], iv.j));
            }
        }
        if k + 1 < arc.intervals.len() {
            let pre = iv.states.last().unwrap();
            let post = &arc.intervals[k + 1].states[0];
            if !h.d.contains(pre, tol.max(1e-9)).map_err(|e| e.to_string())? {
                return Err(format!("jump {k} from outside D"));
            }
            if !h.g.contains(pre, post, tol).map_err(|e| e.to_string())? {
                return Err(format!("jump {k} image not in G"));
            }
        }
    }
    Ok(())
}
