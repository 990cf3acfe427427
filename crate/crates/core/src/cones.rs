//! Membership tests for the Bouligand tangent cone `T_S(x)` and the
//! Dubovitsky–Miliutin cone `M_S(x)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::geom::{self, dot, norm};
use crate::sets::{ConstraintKind, SetError, SetSpec, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cone {
    Inside,
    Outside,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConePath {
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub delta: f64,
    pub w: Vec<f64>,
    /// Normalized `∇g·v` on the analytic path, `dist/δ` on the numeric path.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeVerdict {
    pub cone: Cone,
    pub path: ConePath,
    pub witness: Option<ConeWitness>,
}

impl ConeVerdict {
    pub fn inside(&self) -> bool {
        self.cone == Cone::Inside
    }

    pub fn outside(&self) -> bool {
        self.cone == Cone::Outside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeConfig {
    pub tol: f64,
    pub margin: f64,
    /// Constraints with `g(x) >= -active_tol` count as active.
    pub active_tol: f64,
    pub delta_grid: Vec<f64>,
    pub ball_samples: usize,
    /// Numeric Bouligand path: inside when the final `dist/(δ|v|)` is at most this.
    pub numeric_tol: f64,
    /// Numeric Bouligand path: outside when every `dist/(δ|v|)` is at least this.
    pub numeric_margin: f64,
    pub seed: u64,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            tol: 1e-7,
            margin: 1e-4,
            active_tol: 1e-7,
            delta_grid: geom::geometric(1e-2, 0.1, 5),
            ball_samples: 24,
            numeric_tol: 1e-3,
            numeric_margin: 1e-2,
            seed: 0,
        }
    }
}

enum Analytic {
    Verdict(Cone, Option<ConeWitness>),
    Inapplicable,
}

struct ActiveRow {
    eq: bool,
    /// `∇g·v / (|∇g| max(|v|, 1))`
    s: f64,
}

/// Active rows for every piece containing `x`; `None` when some containing
/// piece violates linear independence of active gradients.
fn active_rows(s: &SetSpec, x: &[f64], v: &[f64], cfg: &ConeConfig) -> Result<Option<Vec<Vec<ActiveRow>>>, SetError> {
    let Some(pieces) = s.smooth_pieces() else { return Ok(None) };
    let vn = norm(v).max(1.0);
    let mut out = Vec::new();
    for piece in &pieces {
        let mut member = true;
        let mut rows = Vec::new();
        let mut grads = Vec::new();
        for c in piece {
            let g = c.value(x)?;
            let eq = c.kind() == ConstraintKind::Eq;
            let within = if eq { g.abs() <= DEFAULT_TOL } else { g <= DEFAULT_TOL };
            if !within {
                member = false;
                break;
            }
            if eq || g >= -cfg.active_tol {
                let gr = c.grad(x)?;
                let gn = norm(&gr);
                if gn < 1e-10 {
                    return Ok(None);
                }
                rows.push(ActiveRow { eq, s: dot(&gr, v) / (gn * vn) });
                grads.push(geom::scale(&gr, 1.0 / gn));
            }
        }
        if !member {
            continue;
        }
        if grads.len() > 1 {
            let m = grads.len();
            let gram = DMatrix::from_fn(m, m, |i, j| dot(&grads[i], &grads[j]));
            let min_eig = gram.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig < 1e-8 {
                return Ok(None);
            }
        }
        out.push(rows);
    }
    if out.is_empty() {
        return Ok(None);
    }
    Ok(Some(out))
}

fn analytic_bouligand(s: &SetSpec, x: &[f64], v: &[f64], cfg: &ConeConfig) -> Result<Analytic, SetError> {
    let Some(pieces) = active_rows(s, x, v, cfg)? else { return Ok(Analytic::Inapplicable) };
    let mut any_inconclusive = false;
    let mut worst: Option<f64> = None;
    for rows in &pieces {
        let mut piece = Cone::Inside;
        for r in rows {
            let val = if r.eq { r.s.abs() } else { r.s };
            let c = if val <= cfg.tol {
                Cone::Inside
            } else if val >= cfg.margin {
                Cone::Outside
            } else {
                Cone::Inconclusive
            };
            worst = Some(worst.map_or(val, |w: f64| w.max(val)));
            piece = match (piece, c) {
                (Cone::Outside, _) | (_, Cone::Outside) => Cone::Outside,
                (Cone::Inconclusive, _) | (_, Cone::Inconclusive) => Cone::Inconclusive,
                _ => Cone::Inside,
            };
        }
        match piece {
            Cone::Inside => return Ok(Analytic::Verdict(Cone::Inside, None)),
            Cone::Inconclusive => any_inconclusive = true,
            Cone::Outside => {}
        }
    }
    let witness = worst.map(|value| ConeWitness { delta: 0.0, w: v.to_vec(), value });
    Ok(Analytic::Verdict(if any_inconclusive { Cone::Inconclusive } else { Cone::Outside }, witness))
}

fn analytic_dm(s: &SetSpec, x: &[f64], v: &[f64], cfg: &ConeConfig) -> Result<Analytic, SetError> {
    let Some(pieces) = active_rows(s, x, v, cfg)? else { return Ok(Analytic::Inapplicable) };
    let mut verdicts = Vec::new();
    let mut worst: Option<f64> = None;
    for rows in &pieces {
        let mut piece = Cone::Inside;
        for r in rows {
            let c = if r.eq {
                Cone::Outside
            } else if r.s <= -cfg.margin {
                Cone::Inside
            } else if r.s >= -cfg.tol {
                Cone::Outside
            } else {
                Cone::Inconclusive
            };
            worst = Some(worst.map_or(r.s, |w: f64| w.max(r.s)));
            piece = match (piece, c) {
                (Cone::Outside, _) | (_, Cone::Outside) => Cone::Outside,
                (Cone::Inconclusive, _) | (_, Cone::Inconclusive) => Cone::Inconclusive,
                _ => Cone::Inside,
            };
        }
        verdicts.push(piece);
    }
    let witness = worst.map(|value| ConeWitness { delta: 0.0, w: v.to_vec(), value });
    if verdicts.contains(&Cone::Inside) {
        return Ok(Analytic::Verdict(Cone::Inside, None));
    }
    if verdicts.len() > 1 {
        // The cone of a union can exceed the union of cones.
        return Ok(Analytic::Inapplicable);
    }
    Ok(Analytic::Verdict(verdicts[0], witness))
}

/// Membership of `v` in the Bouligand tangent cone `T_S(x)`.
pub fn bouligand_contains(s: &SetSpec, x: &[f64], v: &[f64], cfg: &ConeConfig) -> Result<ConeVerdict, SetError> {
    if v.len() != s.dim() {
        return Err(SetError::Dimension { expected: s.dim(), found: v.len() });
    }
    if let Analytic::Verdict(cone, witness) = analytic_bouligand(s, x, v, cfg)? {
        return Ok(ConeVerdict { cone, path: ConePath::Analytic, witness });
    }
    let vn = norm(v);
    if vn == 0.0 {
        return Ok(ConeVerdict { cone: Cone::Inside, path: ConePath::Numeric, witness: None });
    }
    let pattern = geom::ball_pattern(x.len(), cfg.ball_samples, cfg.seed);
    let mut qs = Vec::with_capacity(cfg.delta_grid.len());
    let mut witness = None;
    for &delta in &cfg.delta_grid {
        let mut best = f64::INFINITY;
        let mut best_w = v.to_vec();
        for u in &pattern {
            let w = geom::axpy(v, 0.05 * vn, u);
            let d = s.distance(&geom::axpy(x, delta, &w))?.value;
            let q = d / (delta * vn);
            if q < best {
                best = q;
                best_w = w;
            }
        }
        qs.push(best);
        witness = Some(ConeWitness { delta, w: best_w, value: best });
    }
    let last = *qs.last().unwrap_or(&f64::INFINITY);
    let cone = if last <= cfg.numeric_tol {
        Cone::Inside
    } else if qs.iter().all(|q| *q >= cfg.numeric_margin) {
        Cone::Outside
    } else {
        Cone::Inconclusive
    };
    Ok(ConeVerdict { cone, path: ConePath::Numeric, witness })
}

/// Membership of `v` in the Dubovitsky–Miliutin cone of the interior of `S`.
pub fn dm_contains(s: &SetSpec, x: &[f64], v: &[f64], cfg: &ConeConfig) -> Result<ConeVerdict, SetError> {
    if v.len() != s.dim() {
        return Err(SetError::Dimension { expected: s.dim(), found: v.len() });
    }
    if let Analytic::Verdict(cone, witness) = analytic_dm(s, x, v, cfg)? {
        return Ok(ConeVerdict { cone, path: ConePath::Analytic, witness });
    }
    let vn = norm(v);
    let pattern = geom::ball_pattern(x.len(), cfg.ball_samples, cfg.seed);
    let mut witness = None;
    for frac in [0.1, 0.05, 0.01] {
        let r = frac * vn;
        // Largest δ̄ such that every tested δ <= δ̄ succeeds for all w.
        let mut ok_from = None;
        for (k, &delta) in cfg.delta_grid.iter().enumerate().rev() {
            let mut all = true;
            for u in &pattern {
                let w = geom::axpy(v, r, u);
                if !s.interior_contains(&geom::axpy(x, delta, &w), 0.0)? {
                    all = false;
                    witness = Some(ConeWitness { delta, w, value: r });
                    break;
                }
            }
            if !all {
                break;
            }
            ok_from = Some(k);
        }
        if let Some(k) = ok_from {
            let w = ConeWitness { delta: cfg.delta_grid[k], w: v.to_vec(), value: r };
            return Ok(ConeVerdict { cone: Cone::Inside, path: ConePath::Numeric, witness: Some(w) });
        }
    }
    Ok(ConeVerdict { cone: Cone::Outside, path: ConePath::Numeric, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn set(text: &str) -> SetSpec {
        SetSpec::Sublevel(parse_expr(text, 2).unwrap())
    }

    #[test]
    fn half_space_cones() {
        let s = set("-x1");
        let cfg = ConeConfig::default();
        assert!(bouligand_contains(&s, &[0.0, 5.0], &[1.0, 0.0], &cfg).unwrap().inside());
        assert!(bouligand_contains(&s, &[0.0, 5.0], &[-1.0, 0.0], &cfg).unwrap().outside());
        assert!(dm_contains(&s, &[0.0, 1.0], &[1.0, 0.0], &cfg).unwrap().inside());
        assert!(dm_contains(&s, &[0.0, 1.0], &[0.0, 1.0], &cfg).unwrap().outside());
        assert!(bouligand_contains(&s, &[0.0, 1.0], &[0.0, 1.0], &cfg).unwrap().inside());
    }

    #[test]
    fn band_is_inconclusive() {
        let s = set("-x1");
        let cfg = ConeConfig::default();
        let v = bouligand_contains(&s, &[0.0, 0.0], &[-1e-5, 1.0], &cfg).unwrap();
        assert_eq!(v.cone, Cone::Inconclusive);
    }

    #[test]
    fn cross_uses_numeric_path() {
        let s = SetSpec::Intersection(vec![SetSpec::Zero(parse_expr("x1*x2", 2).unwrap()), set("-x1")]);
        let cfg = ConeConfig::default();
        let v = bouligand_contains(&s, &[0.0, 0.0], &[1.0, 0.0], &cfg).unwrap();
        assert_eq!((v.cone, v.path), (Cone::Inside, ConePath::Numeric));
        let v = bouligand_contains(&s, &[0.0, 0.5], &[1.0, 0.0], &cfg).unwrap();
        assert!(v.outside());
    }

    #[test]
    fn circle_tangent_and_normal() {
        let s = SetSpec::Zero(parse_expr("x1^2 + x2^2 - 1", 2).unwrap());
        let cfg = ConeConfig::default();
        assert!(bouligand_contains(&s, &[1.0, 0.0], &[0.0, -1.0], &cfg).unwrap().inside());
        assert!(bouligand_contains(&s, &[1.0, 0.0], &[1.0, 0.0], &cfg).unwrap().outside());
        assert!(dm_contains(&s, &[1.0, 0.0], &[0.0, -1.0], &cfg).unwrap().outside());
    }
}
