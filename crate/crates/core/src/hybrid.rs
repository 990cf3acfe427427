//! Hybrid systems `(C, F, D, G)`, δ-families, ρ-perturbations, and sampled
//! checks of the basic conditions and of domination.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::geom::{self, norm};
use crate::maps::{Map, MapError};
use crate::report::{aggregate, ConditionEntry, ConditionReport, PointOutcome, Verdict, Witness};
use crate::sets::{SetError, SetSpec, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("dimension mismatch in {what}: expected {expected}, got {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("unbound symbols {0:?}")]
    Unbound(Vec<String>),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSystem {
    pub dim: usize,
    pub c: SetSpec,
    pub f: Map,
    pub d: SetSpec,
    pub g: Map,
}

impl HybridSystem {
    pub fn new(c: SetSpec, f: impl Into<Map>, d: SetSpec, g: impl Into<Map>) -> Result<HybridSystem, SystemError> {
        let (f, g) = (f.into(), g.into());
        let dim = c.dim();
        c.validate()?;
        d.validate()?;
        if let Map::Hull(m) = &f {
            m.validate()?;
        }
        if let Map::Hull(m) = &g {
            m.validate()?;
        }
        for (what, n) in [("D", d.dim()), ("F input", f.in_dim()), ("F output", f.out_dim()), ("G input", g.in_dim()), ("G output", g.out_dim())] {
            if n != dim {
                return Err(SystemError::Dimension { what, expected: dim, found: n });
            }
        }
        Ok(HybridSystem { dim, c, f, d, g })
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut v = self.c.symbols();
        v.extend(self.f.symbols());
        v.extend(self.d.symbols());
        v.extend(self.g.symbols());
        v.sort();
        v.dedup();
        v
    }

    pub fn bind(&self, env: &BTreeMap<String, f64>) -> HybridSystem {
        HybridSystem {
            dim: self.dim,
            c: self.c.bind(env),
            f: self.f.bind(env),
            d: self.d.bind(env),
            g: self.g.bind(env),
        }
    }

    /// `x ∈ C ∪ D` to tolerance (sets are closed, so `cl C = C`).
    pub fn in_domain(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        Ok(self.c.contains(x, tol)? || self.d.contains(x, tol)?)
    }
}

pub const DELTA: &str = "delta";

/// `δ ↦ H_δ`, carried as one system whose expressions mention `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFamily {
    pub template: HybridSystem,
    pub rho: Option<Expr>,
}

impl PerturbationFamily {
    pub fn new(template: HybridSystem, rho: Option<Expr>) -> Result<PerturbationFamily, SystemError> {
        let extra: Vec<String> = template.symbols().into_iter().filter(|s| s != DELTA).collect();
        if !extra.is_empty() {
            return Err(SystemError::Unbound(extra));
        }
        Ok(PerturbationFamily { template, rho })
    }

    /// The family `H_δ = H` for all δ.
    pub fn degenerate(h: &HybridSystem) -> PerturbationFamily {
        PerturbationFamily { template: h.clone(), rho: None }
    }

    /// No member depends on δ.
    pub fn is_constant(&self) -> bool {
        self.template.symbols().is_empty()
    }

    pub fn at(&self, delta: f64) -> HybridSystem {
        let env = BTreeMap::from([(DELTA.to_string(), delta)]);
        self.template.bind(&env)
    }
}

/// Default number of probe points used by sampled inflations.
pub const INFLATION_SAMPLES: usize = 16;

/// The ρ-perturbation `H^{δρ}`: sets inflated by `δρ(x)B`, `F` replaced by the
/// closed convex hull of its values on `(x + δρ(x)B) ∩ C` plus `δρ(x)B`, and
/// `G` by the union of `δρ(y)`-balls around its values on `(x + δρ(x)B) ∩ D`.
/// With `δ = 0` the system is returned unchanged.
pub fn rho_inflate(h: &HybridSystem, rho: &Expr, delta: f64) -> HybridSystem {
    rho_inflate_with(h, rho, delta, INFLATION_SAMPLES)
}

pub fn rho_inflate_with(h: &HybridSystem, rho: &Expr, delta: f64, samples: usize) -> HybridSystem {
    if delta == 0.0 {
        return h.clone();
    }
    let radius = rho.scaled(delta);
    HybridSystem {
        dim: h.dim,
        c: SetSpec::Inflate { set: Box::new(h.c.clone()), radius: radius.clone() },
        f: Map::FlowInflation { base: Box::new(h.f.clone()), set: h.c.clone(), rho: rho.clone(), delta, samples },
        d: SetSpec::Inflate { set: Box::new(h.d.clone()), radius },
        g: Map::JumpInflation { base: Box::new(h.g.clone()), set: h.d.clone(), rho: rho.clone(), delta, samples },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbcConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
    pub radii: Vec<f64>,
    pub neighbors: usize,
    pub map_samples: usize,
    /// Outer-semicontinuity gap allowed at the smallest radius.
    pub osc_tol: f64,
    pub seed: u64,
}

impl HbcConfig {
    pub fn for_dim(n: usize) -> HbcConfig {
        HbcConfig {
            lo: vec![-2.0; n],
            hi: vec![2.0; n],
            points: 40,
            radii: geom::geometric(1e-2, 0.1, 3),
            neighbors: 8,
            map_samples: 8,
            osc_tol: 1e-2,
            seed: 0,
        }
    }
}

fn structural_map(m: &Map) -> bool {
    matches!(m, Map::Hull(s) if s.restrict_to.is_none() && !s.is_discontinuous())
}

/// Outer semicontinuity and local boundedness of `m` at `x` relative to
/// `dom`, probed by the gap `sup dist(M(x'), M(x))` over `x' ∈ (x + rB) ∩ dom`
/// at the smallest radius. Points where the map is empty fail.
pub fn map_osc_at(m: &Map, dom: &SetSpec, x: &[f64], cfg: &HbcConfig) -> PointOutcome {
    let base = match m.value(x) {
        Ok(v) if !v.is_empty() => v,
        Ok(_) | Err(MapError::EmptyImage) => {
            return PointOutcome::Fail(Witness {
                point: x.to_vec(),
                data: None,
                violated: "x in dom M".into(),
                margin: f64::INFINITY,
            })
        }
        Err(_) => return PointOutcome::Inconclusive(x.to_vec()),
    };
    let restrict = m.restrict_to();
    if restrict.is_some() && m.sample(x, 1, 0).is_err() {
        return PointOutcome::Fail(Witness {
            point: x.to_vec(),
            data: None,
            violated: "x in dom M".into(),
            margin: f64::INFINITY,
        });
    }
    let mut gap = 0.0f64;
    let mut worst = None;
    let Some(&r) = cfg.radii.last() else { return PointOutcome::Pass };
    let seed = geom::mix_seed(cfg.seed, &[x.len() as u64]);
    let near = match dom.sample_near(x, r, cfg.neighbors, seed) {
        Ok(v) => v,
        Err(_) => return PointOutcome::Inconclusive(x.to_vec()),
    };
    for xp in near {
        let Ok(ys) = m.sample_points(&xp, cfg.map_samples, seed) else { continue };
        for y in ys {
            let mut g = base.distance(&y);
            if let Some(rs) = restrict {
                g = g.max(rs.distance(&y).map(|d| d.value).unwrap_or(0.0));
            }
            if !g.is_finite() || norm(&y) > 1e12 {
                return PointOutcome::Fail(Witness {
                    point: xp,
                    data: Some(y),
                    violated: "local boundedness".into(),
                    margin: f64::INFINITY,
                });
            }
            if g > gap {
                gap = g;
                worst = Some((xp.clone(), y));
            }
        }
    }
    if gap <= cfg.osc_tol {
        PointOutcome::Pass
    } else {
        let (xp, y) = worst.unwrap();
        PointOutcome::Fail(Witness {
            point: xp,
            data: Some(y),
            violated: format!("dist(M(x'), M(x)) <= {} near {:?}", cfg.osc_tol, x),
            margin: gap - cfg.osc_tol,
        })
    }
}

fn sampled_points(s: &SetSpec, cfg: &HbcConfig, stream: u64) -> Vec<Vec<f64>> {
    s.sample_in_box(&cfg.lo, &cfg.hi, cfg.points, geom::mix_seed(cfg.seed, &[stream])).unwrap_or_default()
}

/// Checks of (A1)–(A3). Structural verdicts come from the construction of the
/// sets and maps; restricted or discontinuous maps are probed by sampling.
pub fn hbc_check(h: &HybridSystem, cfg: &HbcConfig) -> ConditionReport {
    let mut r = ConditionReport::default();
    let a1 = if h.c.is_discontinuous() || h.d.is_discontinuous() {
        ConditionEntry::new("A1", Verdict::Inconclusive).note("set expression uses step(); closedness not guaranteed")
    } else {
        ConditionEntry::new("A1", Verdict::StructuralPass).note("closed by construction")
    };
    r.push(a1);
    for (id, m, dom, stream) in [("A2", &h.f, &h.c, 2u64), ("A3", &h.g, &h.d, 3u64)] {
        if structural_map(m) {
            r.push(
                ConditionEntry::new(id, Verdict::StructuralPass)
                    .note("continuous convex-valued hull map, total on R^n"),
            );
            continue;
        }
        let pts = sampled_points(dom, cfg, stream);
        let outcomes = pts.iter().map(|x| map_osc_at(m, dom, x, cfg)).collect();
        let mut e = aggregate(id, outcomes);
        e.notes.push("sampled: map is restricted, discontinuous, or an inflation".into());
        if m.restrict_to().is_some() {
            e.notes.push("convexity of restricted values not guaranteed".into());
        }
        r.push(e);
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationConfig {
    pub tol: f64,
    pub map_samples: usize,
    pub inflation_samples: usize,
    pub seed: u64,
}

impl Default for DominationConfig {
    fn default() -> Self {
        DominationConfig { tol: 1e-6, map_samples: 8, inflation_samples: 32, seed: 0 }
    }
}

/// Sampled check that `H_δ` is dominated by `H^{δρ}` at the given points.
pub fn domination_check(
    fam: &PerturbationFamily,
    h: &HybridSystem,
    rho: &Expr,
    deltas: &[f64],
    pts: &[Vec<f64>],
    cfg: &DominationConfig,
) -> ConditionReport {
    let mut outs: [Vec<PointOutcome>; 4] = Default::default();
    for &delta in deltas {
        let hd = fam.at(delta);
        let hr = rho_inflate_with(h, rho, delta, cfg.inflation_samples);
        for x in pts {
            let pairs = [(&hd.c, &hr.c, &hd.f, &hr.f), (&hd.d, &hr.d, &hd.g, &hr.g)];
            for (k, (sd, sr, md, mr)) in pairs.into_iter().enumerate() {
                match sd.contains(x, DEFAULT_TOL) {
                    Ok(false) => {
                        outs[2 * k].push(PointOutcome::Vacuous);
                        outs[2 * k + 1].push(PointOutcome::Vacuous);
                        continue;
                    }
                    Err(_) => {
                        outs[2 * k].push(PointOutcome::Inconclusive(x.clone()));
                        continue;
                    }
                    Ok(true) => {}
                }
                let set_ok = sr.contains(x, cfg.tol);
                outs[2 * k].push(match set_ok {
                    Ok(true) => PointOutcome::Pass,
                    Ok(false) => PointOutcome::Fail(Witness {
                        point: x.clone(),
                        data: Some(vec![delta]),
                        violated: format!("{} at delta={delta}", if k == 0 { "C_δ ⊂ C^{δρ}" } else { "D_δ ⊂ D^{δρ}" }),
                        margin: sr.distance(x).map(|d| d.value).unwrap_or(f64::NAN),
                    }),
                    Err(_) => PointOutcome::Inconclusive(x.clone()),
                });
                outs[2 * k + 1].push(map_domination(md, mr, x, delta, k, cfg));
            }
        }
    }
    let ids = ["dom-C", "dom-F", "dom-D", "dom-G"];
    let mut r = ConditionReport::default();
    for (id, o) in ids.iter().zip(outs) {
        r.push(aggregate(id, o));
    }
    r
}

fn map_domination(md: &Map, mr: &Map, x: &[f64], delta: f64, k: usize, cfg: &DominationConfig) -> PointOutcome {
    let seed = geom::mix_seed(cfg.seed, &[delta.to_bits(), k as u64]);
    let ys = match md.sample_points(x, cfg.map_samples, seed) {
        Ok(ys) => ys,
        Err(MapError::EmptyImage) => return PointOutcome::Vacuous,
        Err(_) => return PointOutcome::Inconclusive(x.to_vec()),
    };
    let value = match mr.value(x) {
        Ok(v) => v,
        Err(_) => return PointOutcome::Inconclusive(x.to_vec()),
    };
    for y in ys {
        let d = value.distance(&y);
        if !(d <= cfg.tol) {
            let what = if k == 0 { "F_δ(x) ⊂ F^{δρ}(x)" } else { "G_δ(x) ⊂ G^{δρ}(x)" };
            return PointOutcome::Fail(Witness {
                point: x.to_vec(),
                data: Some(y),
                violated: format!("{what} at delta={delta}"),
                margin: d,
            });
        }
    }
    PointOutcome::Pass
}
