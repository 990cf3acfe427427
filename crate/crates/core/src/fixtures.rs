//! Builders and closed-form oracles for the worked examples.

use std::collections::BTreeMap;

use crate::expr::{Expr, VecExpr};
use crate::geom::{dist, norm, sub};
use crate::hybrid::{HybridSystem, PerturbationFamily, SystemError, DELTA};
use crate::maps::MapSpec;
use crate::report::Verdict;
use crate::sets::SetSpec;

fn ex(text: &str, dim: usize) -> Expr {
    Expr::parse(text, dim, &[DELTA]).unwrap_or_else(|e| panic!("fixture expression `{text}`: {e}"))
}

fn vx(texts: &[&str], dim: usize) -> VecExpr {
    VecExpr::new(texts.iter().map(|t| ex(t, dim)).collect()).expect("fixture vector")
}

fn single(texts: &[&str], dim: usize) -> MapSpec {
    MapSpec::single(vx(texts, dim))
}

fn f(v: f64) -> String {
    format!("{v:?}")
}

/// A known verdict the checkers are expected to reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub checker: &'static str,
    pub condition: &'static str,
    pub verdict: Verdict,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleFixture {
    pub name: &'static str,
    pub params: BTreeMap<String, f64>,
    pub system: HybridSystem,
    pub family: Option<PerturbationFamily>,
    pub oracle: Option<Oracle>,
    pub expectations: Vec<Expectation>,
    /// Maximal solutions are unique.
    pub unique: bool,
}

/// Closed-form solutions, jump-first at states in `C ∩ D`.
#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    BouncingBall { gamma: f64, lambda: f64 },
    Thermostat { z_min: f64, z_max: f64, z_o: f64, z_delta: f64 },
    /// `r' = r(1 - r²)`, angle decreasing at unit rate.
    Oscillator,
    /// Flow along the `x1` axis; trivial elsewhere.
    Planar,
    Waypoint { points: Vec<Vec<f64>> },
}

enum Next {
    JumpNow,
    FlowFor(f64),
    FlowForever,
    Stop,
}

/// One flow interval of an oracle solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSegment {
    pub j: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub start: Vec<f64>,
}

impl Oracle {
    fn next(&self, x: &[f64]) -> Next {
        match self {
            Oracle::BouncingBall { gamma, .. } => {
                let (h, v) = (x[0], x[1]);
                if h < 0.0 {
                    Next::Stop
                } else if h == 0.0 && v <= 0.0 {
                    Next::JumpNow
                } else {
                    Next::FlowFor((v + (v * v + 2.0 * gamma * h).sqrt()) / gamma)
                }
            }
            Oracle::Thermostat { z_min, z_max, z_o, z_delta } => {
                let (z, q) = (x[0], x[1]);
                if q == 0.0 {
                    if z <= *z_min {
                        Next::JumpNow
                    } else {
                        Next::FlowFor(((z - z_o) / (z_min - z_o)).ln())
                    }
                } else if z >= *z_max {
                    Next::JumpNow
                } else {
                    let top = z_o + z_delta;
                    Next::FlowFor(((top - z) / (top - z_max)).ln())
                }
            }
            Oracle::Oscillator => Next::FlowForever,
            Oracle::Planar => {
                if x[1] == 0.0 && x[0] >= 0.0 {
                    Next::FlowForever
                } else {
                    Next::Stop
                }
            }
            Oracle::Waypoint { points } => {
                let m = points[0].len();
                let q = x[m] as usize;
                if q + 1 >= points.len() {
                    return Next::Stop;
                }
                let d = dist(&x[..m], &points[q + 1]);
                if d == 0.0 {
                    Next::JumpNow
                } else {
                    Next::FlowFor(d)
                }
            }
        }
    }

    fn flow(&self, x: &[f64], s: f64) -> Vec<f64> {
        match self {
            Oracle::BouncingBall { gamma, .. } => vec![x[0] + x[1] * s - gamma * s * s / 2.0, x[1] - gamma * s],
            Oracle::Thermostat { z_o, z_delta, .. } => {
                let eq = z_o + x[1] * z_delta;
                vec![eq + (x[0] - eq) * (-s).exp(), x[1]]
            }
            Oracle::Oscillator => {
                let r0 = norm(x);
                let th = x[1].atan2(x[0]) - s;
                let r = (1.0 / (1.0 + (1.0 / (r0 * r0) - 1.0) * (-2.0 * s).exp())).sqrt();
                vec![r * th.cos(), r * th.sin()]
            }
            Oracle::Planar => vec![x[0] + s, x[1]],
            Oracle::Waypoint { points } => {
                let m = points[0].len();
                let q = x[m] as usize;
                let u = sub(&points[q + 1], &points[q]);
                let l = norm(&u);
                let mut y: Vec<f64> = (0..m).map(|i| x[i] + s * u[i] / l).collect();
                y.push(x[m]);
                y
            }
        }
    }

    /// Exact state at the end of a `FlowFor` interval.
    fn land(&self, x: &[f64], s: f64) -> Vec<f64> {
        match self {
            Oracle::BouncingBall { gamma, .. } => vec![0.0, x[1] - gamma * s],
            Oracle::Thermostat { z_min, z_max, .. } => vec![if x[1] == 0.0 { *z_min } else { *z_max }, x[1]],
            Oracle::Waypoint { points } => {
                let m = points[0].len();
                let q = x[m] as usize;
                let mut y = points[q + 1].clone();
                y.push(x[m]);
                y
            }
            _ => self.flow(x, s),
        }
    }

    fn jump(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Oracle::BouncingBall { lambda, .. } => vec![0.0, -lambda * x[1]],
            Oracle::Thermostat { .. } => vec![x[0], 1.0 - x[1]],
            Oracle::Waypoint { points } => {
                let m = points[0].len();
                let mut y = x.to_vec();
                y[m] += 1.0;
                y
            }
            _ => x.to_vec(),
        }
    }

    /// Flow intervals and jumps of the oracle solution with `t + j <= tau`.
    pub fn segments(&self, x0: &[f64], tau: f64) -> Vec<OracleSegment> {
        let mut out = Vec::new();
        let (mut x, mut t, mut j) = (x0.to_vec(), 0.0, 0usize);
        while t + j as f64 <= tau {
            let budget = tau - j as f64;
            match self.next(&x) {
                Next::Stop => {
                    out.push(OracleSegment { j, t_lo: t, t_hi: t, start: x });
                    break;
                }
                Next::FlowForever => {
                    out.push(OracleSegment { j, t_lo: t, t_hi: budget, start: x });
                    break;
                }
                Next::JumpNow => {
                    out.push(OracleSegment { j, t_lo: t, t_hi: t, start: x.clone() });
                    x = self.jump(&x);
                    j += 1;
                }
                Next::FlowFor(s) => {
                    if t + s > budget {
                        out.push(OracleSegment { j, t_lo: t, t_hi: budget, start: x });
                        break;
                    }
                    out.push(OracleSegment { j, t_lo: t, t_hi: t + s, start: x.clone() });
                    x = self.jump(&self.land(&x, s));
                    t += s;
                    j += 1;
                }
            }
        }
        out
    }

    /// `x(t, j)` of the oracle solution from `x0`, if `(t, j)` is within
    /// `slack` of its domain; flows are extended past the ends of intervals.
    pub fn state_near(&self, x0: &[f64], t: f64, j: usize, slack: f64) -> Option<Vec<f64>> {
        let segs = self.segments(x0, t + j as f64 + slack + 1e-9);
        let seg = segs.iter().find(|s| s.j == j && t >= s.t_lo - slack && t <= s.t_hi + slack)?;
        Some(self.flow(&seg.start, t - seg.t_lo))
    }

    /// `x(t, j)` of the oracle solution from `x0`, if `(t, j)` is in its domain.
    pub fn state(&self, x0: &[f64], t: f64, j: usize) -> Option<Vec<f64>> {
        let segs = self.segments(x0, t + j as f64 + 1e-9);
        let seg = segs.iter().find(|s| s.j == j && t >= s.t_lo - 1e-12 && t <= s.t_hi + 1e-12)?;
        let s = (t - seg.t_lo).max(0.0);
        let full = matches!(self.next(&seg.start), Next::FlowFor(d) if (d - s).abs() <= 1e-15);
        Some(if full { self.land(&seg.start, s) } else { self.flow(&seg.start, s) })
    }

    /// Jump times `(t, j)` with `t + j <= tau`.
    pub fn jump_times(&self, x0: &[f64], tau: f64) -> Vec<(f64, usize)> {
        let segs = self.segments(x0, tau);
        segs.windows(2).map(|w| (w[0].t_hi, w[0].j)).collect()
    }
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn expect(checker: &'static str, condition: &'static str, verdict: Verdict, note: &'static str) -> Expectation {
    Expectation { checker, condition, verdict, note }
}

fn ball_sets(dim: usize) -> (SetSpec, SetSpec) {
    let c = SetSpec::Sublevel(ex("-x1", dim));
    let d = SetSpec::Intersection(vec![SetSpec::Zero(ex("x1", dim)), SetSpec::Sublevel(ex("x2", dim))]);
    (c, d)
}

/// `C = {x1 >= 0}`, `F = (x2, -γ)`, `D = {x1 = 0, x2 <= 0}`, `G = (0, -λ x2)`.
pub fn bouncing_ball(gamma: f64, lambda: f64) -> Result<ExampleFixture, SystemError> {
    if !(gamma > 0.0) || !(0.0..=1.0).contains(&lambda) {
        return Err(SystemError::Parameter(format!("need gamma > 0 and lambda in [0,1], got {gamma}, {lambda}")));
    }
    let (c, d) = ball_sets(2);
    let fm = single(&["x2", &format!("-{}", f(gamma))], 2);
    let g = single(&["0", &format!("-{} * x2", f(lambda))], 2);
    let system = HybridSystem::new(c, fm, d, g)?;
    Ok(ExampleFixture {
        name: "bouncing_ball",
        params: params(&[("gamma", gamma), ("lambda", lambda)]),
        system,
        family: None,
        oracle: Some(Oracle::BouncingBall { gamma, lambda }),
        expectations: vec![
            expect("hbc", "A1", Verdict::StructuralPass, "basic conditions hold"),
            expect("hbc", "A2", Verdict::StructuralPass, "basic conditions hold"),
            expect("hbc", "A3", Verdict::StructuralPass, "basic conditions hold"),
            expect("B", "B1", Verdict::Pass, "nominally inner well-posed"),
            expect("B", "B2", Verdict::Pass, "nominally inner well-posed"),
            expect("B", "B5", Verdict::Pass, "G continuous"),
            expect("B", "B6", Verdict::Pass, "restricted G equals G on D"),
            expect("V", "V2", Verdict::Fail, "violated at the origin"),
        ],
        unique: true,
    })
}

/// Thermostat with state `(z, q)`.
pub fn thermostat(z_min: f64, z_max: f64, z_o: f64, z_delta: f64) -> Result<ExampleFixture, SystemError> {
    if !(z_o < z_min && z_min < z_max && z_max < z_o + z_delta) {
        return Err(SystemError::Parameter("need z_o < z_min < z_max < z_o + z_delta".into()));
    }
    let n = 2;
    let c = SetSpec::Union(vec![
        SetSpec::Intersection(vec![SetSpec::Zero(ex("x2", n)), SetSpec::Sublevel(ex(&format!("{} - x1", f(z_min)), n))]),
        SetSpec::Intersection(vec![SetSpec::Zero(ex("x2 - 1", n)), SetSpec::Sublevel(ex(&format!("x1 - {}", f(z_max)), n))]),
    ]);
    let d = SetSpec::Union(vec![
        SetSpec::Intersection(vec![SetSpec::Zero(ex("x2", n)), SetSpec::Sublevel(ex(&format!("x1 - {}", f(z_min)), n))]),
        SetSpec::Intersection(vec![SetSpec::Zero(ex("x2 - 1", n)), SetSpec::Sublevel(ex(&format!("{} - x1", f(z_max)), n))]),
    ]);
    let fm = single(&[&format!("-x1 + {} + x2 * {}", f(z_o), f(z_delta)), "0"], n);
    let g = single(&["x1", "1 - x2"], n);
    Ok(ExampleFixture {
        name: "thermostat",
        params: params(&[("z_min", z_min), ("z_max", z_max), ("z_o", z_o), ("z_delta", z_delta)]),
        system: HybridSystem::new(c, fm, d, g)?,
        family: None,
        oracle: Some(Oracle::Thermostat { z_min, z_max, z_o, z_delta }),
        expectations: vec![
            expect("hbc", "A1", Verdict::StructuralPass, "basic conditions hold"),
            expect("hbc", "A2", Verdict::StructuralPass, "basic conditions hold"),
            expect("hbc", "A3", Verdict::StructuralPass, "basic conditions hold"),
            expect("iwp", "star", Verdict::Pass, "graphically convergent sequences"),
        ],
        unique: true,
    })
}

/// Default thermostat parameters used across the test suites.
pub fn thermostat_default() -> ExampleFixture {
    thermostat(1.0, 2.0, 0.0, 2.2).expect("valid defaults")
}

fn planar_c(n: usize) -> SetSpec {
    SetSpec::Union(vec![
        SetSpec::Intersection(vec![SetSpec::Zero(ex("x2", n)), SetSpec::Sublevel(ex("-x1", n))]),
        SetSpec::Zero(ex("x1", n)),
    ])
}

/// `C = {x1 x2 = 0, x1 >= 0}`, `F = (1, 0)`, no jumps; with the family
/// `C_δ = {x1 >= 0, |x2| <= δ}`, `F_δ = (1, -δ x2)`.
pub fn planar_system() -> ExampleFixture {
    let n = 2;
    let system = HybridSystem::new(planar_c(n), single(&["1", "0"], n), SetSpec::Empty(n), single(&["x1", "x2"], n))
        .expect("planar");
    let cd = SetSpec::Intersection(vec![
        SetSpec::Sublevel(ex("-x1", n)),
        SetSpec::Sublevel(ex("x2 - delta", n)),
        SetSpec::Sublevel(ex("-x2 - delta", n)),
    ]);
    let template =
        HybridSystem::new(cd, single(&["1", "-delta * x2"], n), SetSpec::Empty(n), single(&["x1", "x2"], n)).expect("planar family");
    ExampleFixture {
        name: "planar",
        params: BTreeMap::new(),
        system,
        family: Some(PerturbationFamily::new(template, None).expect("planar family")),
        oracle: Some(Oracle::Planar),
        expectations: vec![
            expect("iwp", "star", Verdict::Fail, "not nominally inner well-posed at the origin"),
            expect("pert-iwp", "diamond", Verdict::Pass, "inner well-posed perturbation"),
        ],
        unique: true,
    }
}

/// Harmonic oscillator on the unit circle, with the annulus family
/// `C_δ = {1 - δ <= |x|² <= 1 + δ}` and `F_δ = (x2, -x1) + (1 - |x|²) x`.
pub fn oscillator_family() -> ExampleFixture {
    let n = 2;
    let c = SetSpec::Zero(ex("x1^2 + x2^2 - 1", n));
    let system = HybridSystem::new(c, single(&["x2", "-x1"], n), SetSpec::Empty(n), single(&["x1", "x2"], n)).expect("osc");
    let cd = SetSpec::Intersection(vec![
        SetSpec::Sublevel(ex("x1^2 + x2^2 - 1 - delta", n)),
        SetSpec::Sublevel(ex("1 - delta - x1^2 - x2^2", n)),
    ]);
    let fd = single(&["x2 + (1 - (x1^2 + x2^2)) * x1", "-x1 + (1 - (x1^2 + x2^2)) * x2"], n);
    let template = HybridSystem::new(cd, fd, SetSpec::Empty(n), single(&["x1", "x2"], n)).expect("osc family");
    ExampleFixture {
        name: "oscillator",
        params: BTreeMap::new(),
        system,
        family: Some(PerturbationFamily::new(template, Some(Expr::constant(3.0, n))).expect("osc family")),
        oracle: Some(Oracle::Oscillator),
        expectations: vec![
            expect("V", "V2", Verdict::Fail, "F tangent to the circle at every point"),
            expect("W", "P1", Verdict::Pass, "basic conditions of the family"),
            expect("W", "P2", Verdict::Pass, "C_δ contains C"),
            expect("W", "P3", Verdict::Pass, "F_δ extends F on C"),
            expect("W", "W1", Verdict::Pass, "F_δ independent of δ and locally Lipschitz"),
            expect("W", "W2", Verdict::Pass, "radial term points into the annulus"),
        ],
        unique: true,
    }
}

/// The perturbed bouncing-ball family. `F_δ` is written with `step` selectors
/// for its three cases; no component depends on δ.
pub fn perturbed_ball_family(r: f64, c1: f64, c2: f64, gamma: f64, lambda: f64) -> Result<ExampleFixture, SystemError> {
    if !(r > 0.0 && c1 > 0.0 && c2 > 0.0) {
        return Err(SystemError::Parameter("need r, c1, c2 > 0".into()));
    }
    let nominal = bouncing_ball(gamma, lambda)?;
    let n = 2;
    let (c, d) = ball_sets(n);
    let line = format!("{} * x2 - {} * x1", f(c1), f(c2));
    let cd = SetSpec::Union(vec![
        c,
        SetSpec::Intersection(vec![SetSpec::Sublevel(ex(&format!("-x2 - {}", f(c2)), n)), SetSpec::Sublevel(ex(&line, n))]),
    ]);
    let dd = SetSpec::Intersection(vec![SetSpec::Inflate { set: Box::new(d), radius: Expr::constant(r, n) }, cd.clone()]);
    let a = format!("step({line}) * (1 - step(x2))");
    let b = format!("(1 - step({line})) * (1 - step(x1))");
    let f1 = format!("x2 - {a} * x2 - {b} * ({} * x1 / {})", f(c2), f(c1));
    let fd = single(&[&f1, &format!("-{}", f(gamma))], n);
    let g = single(&["0", &format!("-{} * x2", f(lambda))], n);
    let template = HybridSystem::new(cd, fd, dd, g)?;
    Ok(ExampleFixture {
        name: "perturbed_ball",
        params: params(&[("r", r), ("c1", c1), ("c2", c2), ("gamma", gamma), ("lambda", lambda)]),
        system: nominal.system,
        family: Some(PerturbationFamily::new(template, None)?),
        oracle: nominal.oracle,
        expectations: vec![expect(
            "C",
            "C6-flow",
            if lambda * r < c2 { Verdict::Pass } else { Verdict::Fail },
            "post-jump states can flow iff λr < c2",
        )],
        unique: true,
    })
}

pub fn perturbed_ball_default() -> ExampleFixture {
    perturbed_ball_family(0.1, 1.0, 0.1, 1.0, 0.5).expect("valid defaults")
}

/// Straight-line waypoint following in the plane with unit-speed fields.
/// State `(z1, z2, q)`; `C_q` is the segment `[p_q, p_{q+1}]` and `D_q = {p_{q+1}}`.
pub fn waypoint(points: &[[f64; 2]]) -> Result<ExampleFixture, SystemError> {
    if points.len() < 2 {
        return Err(SystemError::Parameter("need at least two waypoints".into()));
    }
    let n = 3;
    let mut cs = Vec::new();
    let mut ds = Vec::new();
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    let (mut g1, mut g2) = (Vec::new(), Vec::new());
    for q in 0..points.len() - 1 {
        let (a, b) = (points[q], points[q + 1]);
        let u = [b[0] - a[0], b[1] - a[1]];
        let l = (u[0] * u[0] + u[1] * u[1]).sqrt();
        if l == 0.0 {
            return Err(SystemError::Parameter(format!("repeated waypoint {q}")));
        }
        let (ux, uy) = (u[0] / l, u[1] / l);
        let along = format!("({}) * (x1 - {}) + ({}) * (x2 - {})", f(ux), f(a[0]), f(uy), f(a[1]));
        let across = format!("({}) * (x1 - {}) + ({}) * (x2 - {})", f(-uy), f(a[0]), f(ux), f(a[1]));
        cs.push(SetSpec::Intersection(vec![
            SetSpec::Zero(ex(&across, n)),
            SetSpec::Sublevel(ex(&format!("-({along})"), n)),
            SetSpec::Sublevel(ex(&format!("{along} - {}", f(l)), n)),
            SetSpec::Zero(ex(&format!("x3 - {q}"), n)),
        ]));
        ds.push(SetSpec::Ball { center: vec![b[0], b[1], q as f64], radius: 0.0 });
        let ind = format!("(step(x3 - {}) - step(x3 - {}))", f(q as f64 - 0.5), f(q as f64 + 0.5));
        v1.push(format!("{} * {ind}", f(ux)));
        v2.push(format!("{} * {ind}", f(uy)));
        g1.push(format!("{} * {ind}", f(b[0])));
        g2.push(format!("{} * {ind}", f(b[1])));
    }
    let fm = single(&[&v1.join(" + "), &v2.join(" + "), "0"], n);
    // On D the position equals the waypoint, so G writes it exactly.
    let g = single(&[&g1.join(" + "), &g2.join(" + "), "x3 + 1"], n);
    let system = HybridSystem::new(SetSpec::Union(cs), fm, SetSpec::Union(ds), g)?;
    let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    let mut kv = Vec::new();
    for (i, p) in points.iter().enumerate() {
        kv.push((format!("p{i}_1"), p[0]));
        kv.push((format!("p{i}_2"), p[1]));
    }
    Ok(ExampleFixture {
        name: "waypoint",
        params: kv.into_iter().collect(),
        system,
        family: None,
        oracle: Some(Oracle::Waypoint { points: pts }),
        expectations: vec![],
        unique: true,
    })
}

/// `F(x) = 1` for `x > 0`, `-1` for `x < 0`, `[-1, 1]` at `0`; no jumps.
pub fn sign_system() -> ExampleFixture {
    let n = 1;
    let fm = MapSpec::new(vec![vx(&["1 - 2 * step(-x1)"], n), vx(&["2 * step(x1) - 1"], n)], Expr::constant(0.0, n), None)
        .expect("sign map");
    let system = HybridSystem::new(SetSpec::All(n), fm, SetSpec::Empty(n), single(&["x1"], n)).expect("sign");
    ExampleFixture {
        name: "sign",
        params: BTreeMap::new(),
        system,
        family: None,
        oracle: None,
        expectations: vec![],
        unique: false,
    }
}

/// `C = [0, 1/2]`, `D = [-1/2, 1/2]`, `F = -1`, `G(x) = x` for `x <= 0` and `1` otherwise.
pub fn discontinuous_jump() -> ExampleFixture {
    let n = 1;
    let system = HybridSystem::new(
        SetSpec::Box { lo: vec![0.0], hi: vec![0.5] },
        single(&["-1"], n),
        SetSpec::Box { lo: vec![-0.5], hi: vec![0.5] },
        single(&["x1 * (1 - step(x1)) + step(x1)"], n),
    )
    .expect("discontinuous jump");
    ExampleFixture {
        name: "discontinuous_jump",
        params: BTreeMap::new(),
        system,
        family: None,
        oracle: None,
        expectations: vec![expect("B", "B5", Verdict::Fail, "G discontinuous at 0")],
        unique: true,
    }
}

/// Every shipped fixture with default parameters.
pub fn all() -> Vec<ExampleFixture> {
    vec![
        bouncing_ball(1.0, 0.5).expect("defaults"),
        thermostat_default(),
        planar_system(),
        oscillator_family(),
        perturbed_ball_default(),
        waypoint(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).expect("defaults"),
        sign_system(),
        discontinuous_jump(),
    ]
}

pub fn by_name(name: &str) -> Option<ExampleFixture> {
    all().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_oracle_kinematics() {
        let o = Oracle::BouncingBall { gamma: 1.0, lambda: 0.5 };
        let x = o.state(&[1.0, 0.0], 1.0, 0).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] + 1.0).abs() < 1e-15);
        let jt = o.jump_times(&[1.0, 0.0], 10.0);
        assert!((jt[0].0 - 2f64.sqrt()).abs() < 1e-15);
        let post = o.state(&[1.0, 0.0], jt[0].0, 1).unwrap();
        assert!((post[1] - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn thermostat_oracle_jumps_immediately_from_z_min() {
        let o = thermostat_default().oracle.unwrap();
        assert_eq!(o.jump_times(&[1.0, 0.0], 3.0)[0], (0.0, 0));
        let z = o.state(&[1.0, 0.0], 0.5, 1).unwrap()[0];
        assert!((z - (2.2 + (1.0 - 2.2) * (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn oscillator_family_extends_f_on_circle() {
        let fx = oscillator_family();
        let fam = fx.family.unwrap().at(0.1);
        for k in 0..8 {
            let th = k as f64 * 0.7;
            let x = [th.cos(), th.sin()];
            let a = fam.f.value(&x).unwrap().pieces[0].vertices[0].clone();
            let b = fx.system.f.value(&x).unwrap().pieces[0].vertices[0].clone();
            assert!(dist(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn parameter_ranges() {
        assert!(bouncing_ball(0.0, 0.5).is_err());
        assert!(thermostat(1.0, 1.0, 0.0, 2.0).is_err());
        assert!(perturbed_ball_family(0.0, 1.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn perturbed_ball_flow_cases() {
        let fam = perturbed_ball_default().family.unwrap().at(0.5);
        let v = |x: [f64; 2]| fam.f.value(&x).unwrap().pieces[0].vertices[0].clone();
        assert_eq!(v([-1.0, -0.05]), vec![0.0, -1.0]);
        assert!((v([-0.5, -0.06])[0] - (-0.06 + 0.05)).abs() < 1e-12);
        assert_eq!(v([1.0, 0.3]), vec![0.3, -1.0]);
    }
}
