//! Computable descriptions of closed subsets of R^n.

use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geom::{self, dist, dot, norm, sub};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("set is empty")]
    Empty,
    #[error("invalid set: {0}")]
    Invalid(String),
}

/// A tree of closed primitives and closedness-preserving combinators.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    /// `{x : g(x) <= 0}`
    Sublevel(Expr),
    /// `{x : g(x) = 0}`
    Zero(Expr),
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Intersection(Vec<SetSpec>),
    Union(Vec<SetSpec>),
    /// Cartesian product; factor `i` acts on the next `factor.dim()` coordinates.
    Product(Vec<SetSpec>),
    /// `{x : dist(x, set) <= radius(x)}`
    Inflate { set: Box<SetSpec>, radius: Expr },
    All(usize),
    Empty(usize),
}

/// Result of a distance query. `exact` is false for sampled upper bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub exact: bool,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Ineq,
    Eq,
}

/// One smooth constraint `g(x) <= 0` or `g(x) = 0` in full coordinates.
#[derive(Debug, Clone)]
pub enum Constraint<'a> {
    Expr { expr: &'a Expr, offset: usize, eq: bool },
    /// `|y - c|^2 - r^2 <= 0`
    Ball { center: &'a [f64], radius: f64, offset: usize },
    /// `sign * (x_i - value) <= 0`
    Coord { index: usize, value: f64, sign: f64 },
}

impl Constraint<'_> {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Expr { eq: true, .. } => ConstraintKind::Eq,
            _ => ConstraintKind::Ineq,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, ExprError> {
        match self {
            Constraint::Expr { expr, offset, .. } => expr.eval(&x[*offset..*offset + expr.dim()]),
            Constraint::Ball { center, radius, offset } => {
                let y = &x[*offset..*offset + center.len()];
                Ok(dist(y, center).powi(2) - radius * radius)
            }
            Constraint::Coord { index, value, sign } => Ok(sign * (x[*index] - value)),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, ExprError> {
        let mut g = vec![0.0; x.len()];
        match self {
            Constraint::Expr { expr, offset, .. } => {
                let local = expr.grad(&x[*offset..*offset + expr.dim()], None)?;
                g[*offset..*offset + local.len()].copy_from_slice(&local);
            }
            Constraint::Ball { center, offset, .. } => {
                for (i, c) in center.iter().enumerate() {
                    g[offset + i] = 2.0 * (x[offset + i] - c);
                }
            }
            Constraint::Coord { index, sign, .. } => g[*index] = *sign,
        }
        Ok(g)
    }
}

const MAX_PIECES: usize = 64;

impl SetSpec {
    pub fn sublevel(g: Expr) -> SetSpec {
        SetSpec::Sublevel(g)
    }

    pub fn zero(g: Expr) -> SetSpec {
        SetSpec::Zero(g)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> SetSpec {
        SetSpec::Ball { center, radius }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> SetSpec {
        SetSpec::Box { lo, hi }
    }

    /// Substitutes bound symbols in every expression.
    pub fn bind(&self, env: &std::collections::BTreeMap<String, f64>) -> SetSpec {
        match self {
            SetSpec::Sublevel(g) => SetSpec::Sublevel(g.bind(env)),
            SetSpec::Zero(g) => SetSpec::Zero(g.bind(env)),
            SetSpec::Intersection(s) => SetSpec::Intersection(s.iter().map(|c| c.bind(env)).collect()),
            SetSpec::Union(s) => SetSpec::Union(s.iter().map(|c| c.bind(env)).collect()),
            SetSpec::Product(s) => SetSpec::Product(s.iter().map(|c| c.bind(env)).collect()),
            SetSpec::Inflate { set, radius } => SetSpec::Inflate { set: Box::new(set.bind(env)), radius: radius.bind(env) },
            other => other.clone(),
        }
    }

    /// Free symbols in any expression of the tree.
    pub fn symbols(&self) -> Vec<String> {
        let mut out = match self {
            SetSpec::Sublevel(g) | SetSpec::Zero(g) => g.symbols(),
            SetSpec::Intersection(s) | SetSpec::Union(s) | SetSpec::Product(s) => {
                s.iter().flat_map(|c| c.symbols()).collect()
            }
            SetSpec::Inflate { set, radius } => {
                let mut v = set.symbols();
                v.extend(radius.symbols());
                v
            }
            _ => vec![],
        };
        out.sort();
        out.dedup();
        out
    }

    /// True when some expression uses a discontinuous primitive.
    pub fn is_discontinuous(&self) -> bool {
        match self {
            SetSpec::Sublevel(g) | SetSpec::Zero(g) => g.is_discontinuous(),
            SetSpec::Intersection(s) | SetSpec::Union(s) | SetSpec::Product(s) => s.iter().any(|c| c.is_discontinuous()),
            SetSpec::Inflate { set, radius } => set.is_discontinuous() || radius.is_discontinuous(),
            _ => false,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Sublevel(g) | SetSpec::Zero(g) => g.dim(),
            SetSpec::Ball { center, .. } => center.len(),
            SetSpec::Box { lo, .. } => lo.len(),
            SetSpec::Intersection(s) | SetSpec::Union(s) => s.first().map(|s| s.dim()).unwrap_or(0),
            SetSpec::Product(s) => s.iter().map(|s| s.dim()).sum(),
            SetSpec::Inflate { set, .. } => set.dim(),
            SetSpec::All(n) | SetSpec::Empty(n) => *n,
        }
    }

    /// Structural validation: dimensions agree, radii and boxes well formed.
    pub fn validate(&self) -> Result<(), SetError> {
        match self {
            SetSpec::Ball { radius, .. } if !(*radius >= 0.0 && radius.is_finite()) => {
                Err(SetError::Invalid(format!("ball radius {radius}")))
            }
            SetSpec::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(SetError::Dimension { expected: lo.len(), found: hi.len() });
                }
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Err(SetError::Invalid("box with lo > hi".into()));
                }
                Ok(())
            }
            SetSpec::Intersection(s) | SetSpec::Union(s) => {
                if s.is_empty() {
                    return Err(SetError::Invalid("empty combinator".into()));
                }
                let d = s[0].dim();
                for c in s {
                    c.validate()?;
                    if c.dim() != d {
                        return Err(SetError::Dimension { expected: d, found: c.dim() });
                    }
                }
                Ok(())
            }
            SetSpec::Product(s) => {
                if s.is_empty() {
                    return Err(SetError::Invalid("empty product".into()));
                }
                s.iter().try_for_each(|c| c.validate())
            }
            SetSpec::Inflate { set, radius } => {
                set.validate()?;
                if radius.dim() != set.dim() {
                    return Err(SetError::Dimension { expected: set.dim(), found: radius.dim() });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), SetError> {
        if x.len() != self.dim() {
            return Err(SetError::Dimension { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    /// Membership to tolerance `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        self.check_dim(x)?;
        self.contains_unchecked(x, tol)
    }

    fn contains_unchecked(&self, x: &[f64], tol: f64) -> Result<bool, SetError> {
        Ok(match self {
            SetSpec::Sublevel(g) => g.eval(x)? <= tol,
            SetSpec::Zero(g) => g.eval(x)?.abs() <= tol,
            SetSpec::Ball { center, radius } => dist(x, center) <= radius + tol,
            SetSpec::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
            }
            SetSpec::Intersection(s) => {
                for c in s {
                    if !c.contains_unchecked(x, tol)? {
                        return Ok(false);
                    }
                }
                true
            }
            SetSpec::Union(s) => {
                for c in s {
                    if c.contains_unchecked(x, tol)? {
                        return Ok(true);
                    }
                }
                false
            }
            SetSpec::Product(s) => {
                let mut off = 0;
                for c in s {
                    let d = c.dim();
                    if !c.contains_unchecked(&x[off..off + d], tol)? {
                        return Ok(false);
                    }
                    off += d;
                }
                true
            }
            SetSpec::Inflate { set, radius } => {
                let r = radius.eval(x)?;
                if r < 0.0 {
                    return Err(SetError::Invalid(format!("negative inflation radius {r}")));
                }
                set.distance(x)?.value <= r + tol
            }
            SetSpec::All(_) => true,
            SetSpec::Empty(_) => false,
        })
    }

    /// Strict membership in the interior, with clearance `margin`.
    pub fn interior_contains(&self, x: &[f64], margin: f64) -> Result<bool, SetError> {
        self.check_dim(x)?;
        self.interior_unchecked(x, margin)
    }

    fn interior_unchecked(&self, x: &[f64], margin: f64) -> Result<bool, SetError> {
        Ok(match self {
            SetSpec::Sublevel(g) => match g.affine() {
                Some((a, b)) => {
                    let n = norm(&a);
                    n > 0.0 && (dot(&a, x) + b) / n < -margin || n == 0.0 && b < 0.0
                }
                None => {
                    let v = g.eval(x)?;
                    let gn = norm(&g.grad(x, None)?).max(1e-300);
                    v < 0.0 && v / gn < -margin
                }
            },
            SetSpec::Zero(_) | SetSpec::Empty(_) => false,
            SetSpec::Ball { center, radius } => dist(x, center) < radius - margin,
            SetSpec::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v > a + margin && *v < b - margin)
            }
            SetSpec::Intersection(s) => {
                for c in s {
                    if !c.interior_unchecked(x, margin)? {
                        return Ok(false);
                    }
                }
                true
            }
            SetSpec::Union(s) => {
                for c in s {
                    if c.interior_unchecked(x, margin)? {
                        return Ok(true);
                    }
                }
                false
            }
            SetSpec::Product(s) => {
                let mut off = 0;
                for c in s {
                    let d = c.dim();
                    if !c.interior_unchecked(&x[off..off + d], margin)? {
                        return Ok(false);
                    }
                    off += d;
                }
                true
            }
            SetSpec::Inflate { set, radius } => set.distance(x)?.value < radius.eval(x)? - margin,
            SetSpec::All(_) => true,
        })
    }

    /// Distance from `x` to the set, exact where a closed-form projection is
    /// available and a sampled upper bound otherwise.
    pub fn distance(&self, x: &[f64]) -> Result<Distance, SetError> {
        self.check_dim(x)?;
        match self {
            SetSpec::Empty(_) => Err(SetError::Empty),
            SetSpec::Union(s) => {
                let mut best: Option<Distance> = None;
                let mut exact = true;
                for c in s {
                    match c.distance(x) {
                        Ok(d) => {
                            exact &= d.exact;
                            if best.as_ref().map_or(true, |b| d.value < b.value) {
                                best = Some(d);
                            }
                        }
                        Err(SetError::Empty) => {}
                        Err(e) => return Err(e),
                    }
                }
                let mut d = best.ok_or(SetError::Empty)?;
                d.exact = exact;
                Ok(d)
            }
            SetSpec::Product(s) => {
                let mut off = 0;
                let mut total = 0.0;
                let mut exact = true;
                let mut witness = Vec::with_capacity(x.len());
                for c in s {
                    let d = c.dim();
                    let r = c.distance(&x[off..off + d])?;
                    total += r.value * r.value;
                    exact &= r.exact;
                    match r.witness {
                        Some(w) if witness.len() == off => witness.extend(w),
                        _ => witness.clear(),
                    }
                    off += d;
                }
                let witness = (witness.len() == x.len()).then_some(witness);
                Ok(Distance { value: total.sqrt(), exact, witness })
            }
            SetSpec::Inflate { set, radius } => {
                let base = set.distance(x)?;
                let r = radius.eval(x)?;
                let constant = radius.as_constant().is_some();
                if base.value <= r {
                    return Ok(Distance { value: 0.0, exact: base.exact && constant, witness: Some(x.to_vec()) });
                }
                let witness = self.project(x)?;
                let value = match &witness {
                    Some(w) => dist(w, x),
                    None => base.value - r,
                };
                Ok(Distance { value, exact: base.exact && constant, witness })
            }
            _ => {
                let exact = self.exact_projection_available();
                let p = self.project(x)?;
                match p {
                    Some(p) if exact => Ok(Distance { value: dist(&p, x), exact: true, witness: Some(p) }),
                    _ => self.sampled_distance(x, p),
                }
            }
        }
    }

    /// True when the set is a convex intersection of primitives with exact
    /// projections (affine half-spaces, hyperplanes, balls, boxes).
    pub fn exact_projection_available(&self) -> bool {
        match self {
            SetSpec::Sublevel(g) | SetSpec::Zero(g) => g.affine().is_some(),
            SetSpec::Ball { .. } | SetSpec::Box { .. } | SetSpec::All(_) => true,
            SetSpec::Intersection(s) => s.iter().all(|c| c.exact_projection_available() && !c.is_compound()),
            SetSpec::Product(s) => s.iter().all(|c| c.exact_projection_available()),
            _ => false,
        }
    }

    fn is_compound(&self) -> bool {
        matches!(self, SetSpec::Union(_) | SetSpec::Product(_) | SetSpec::Inflate { .. } | SetSpec::Intersection(_))
    }

    fn sampled_distance(&self, x: &[f64], start: Option<Vec<f64>>) -> Result<Distance, SetError> {
        if self.contains(x, DEFAULT_TOL)? {
            return Ok(Distance { value: 0.0, exact: true, witness: Some(x.to_vec()) });
        }
        let mut best = start.filter(|p| self.contains(p, DEFAULT_TOL).unwrap_or(false));
        let mut best_d = best.as_ref().map_or(f64::INFINITY, |p| dist(p, x));
        let mut r = geom::rng(geom::mix_seed(0x5eed, &[x.len() as u64]));
        let radius0 = if best_d.is_finite() { best_d } else { 1.0 };
        for round in 0..4 {
            let rad = radius0 * 2f64.powi(round - 1);
            for _ in 0..16 {
                let c = geom::ball_point(&mut r, x, rad);
                if let Some(p) = self.project(&c)? {
                    if self.contains(&p, DEFAULT_TOL)? {
                        let d = dist(&p, x);
                        if d < best_d {
                            best_d = d;
                            best = Some(p);
                        }
                    }
                }
            }
        }
        Ok(Distance { value: best_d, exact: false, witness: best })
    }

    /// Best-effort projection onto the set: exact for convex primitives,
    /// Newton or alternating projections otherwise. `None` when nothing found.
    pub fn project(&self, x: &[f64]) -> Result<Option<Vec<f64>>, SetError> {
        Ok(match self {
            SetSpec::All(_) => Some(x.to_vec()),
            SetSpec::Empty(_) => None,
            SetSpec::Sublevel(g) => project_level(g, x, false)?,
            SetSpec::Zero(g) => project_level(g, x, true)?,
            SetSpec::Ball { center, radius } => {
                let d = dist(x, center);
                if d <= *radius {
                    Some(x.to_vec())
                } else {
                    Some(geom::axpy(center, radius / d, &sub(x, center)))
                }
            }
            SetSpec::Box { lo, hi } => {
                Some(x.iter().zip(lo.iter().zip(hi)).map(|(v, (a, b))| v.clamp(*a, *b)).collect())
            }
            SetSpec::Union(s) => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for c in s {
                    if let Some(p) = c.project(x)? {
                        let d = dist(&p, x);
                        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                            best = Some((d, p));
                        }
                    }
                }
                best.map(|(_, p)| p)
            }
            SetSpec::Product(s) => {
                let mut out = Vec::with_capacity(x.len());
                let mut off = 0;
                for c in s {
                    let d = c.dim();
                    match c.project(&x[off..off + d])? {
                        Some(p) => out.extend(p),
                        None => return Ok(None),
                    }
                    off += d;
                }
                Some(out)
            }
            SetSpec::Intersection(s) => {
                if self.exact_projection_available() {
                    dykstra(s, x)?
                } else {
                    alternating(s, x)?
                }
            }
            SetSpec::Inflate { set, radius } => {
                if self.contains(x, 0.0)? {
                    return Ok(Some(x.to_vec()));
                }
                let Some(p) = set.project(x)? else { return Ok(None) };
                let d = dist(&p, x);
                if radius.as_constant().is_some() {
                    let r = radius.eval(x)?.max(0.0);
                    return Ok(Some(geom::axpy(&p, (r / d).min(1.0), &sub(x, &p))));
                }
                // Farthest point toward x on the segment [p, x] that is in the set.
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let y = geom::axpy(&p, mid, &sub(x, &p));
                    if self.contains(&y, 0.0)? {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(geom::axpy(&p, lo, &sub(x, &p)))
            }
        })
    }

    /// Disjunctive decomposition into conjunctions of smooth constraints, or
    /// `None` when some part has no analytic description (inflations).
    pub fn smooth_pieces(&self) -> Option<Vec<Vec<Constraint<'_>>>> {
        self.pieces_at(0)
    }

    fn pieces_at(&self, offset: usize) -> Option<Vec<Vec<Constraint<'_>>>> {
        Some(match self {
            SetSpec::Sublevel(g) => vec![vec![Constraint::Expr { expr: g, offset, eq: false }]],
            SetSpec::Zero(g) => vec![vec![Constraint::Expr { expr: g, offset, eq: true }]],
            SetSpec::Ball { center, radius } => vec![vec![Constraint::Ball { center, radius: *radius, offset }]],
            SetSpec::Box { lo, hi } => {
                let mut c = Vec::new();
                for i in 0..lo.len() {
                    c.push(Constraint::Coord { index: offset + i, value: lo[i], sign: -1.0 });
                    c.push(Constraint::Coord { index: offset + i, value: hi[i], sign: 1.0 });
                }
                vec![c]
            }
            SetSpec::All(_) => vec![vec![]],
            SetSpec::Empty(_) => vec![],
            SetSpec::Union(s) => {
                let mut out = Vec::new();
                for c in s {
                    out.extend(c.pieces_at(offset)?);
                }
                if out.len() > MAX_PIECES {
                    return None;
                }
                out
            }
            SetSpec::Intersection(s) => {
                let mut acc: Vec<Vec<Constraint>> = vec![vec![]];
                for c in s {
                    acc = cross(acc, c.pieces_at(offset)?)?;
                }
                acc
            }
            SetSpec::Product(s) => {
                let mut acc: Vec<Vec<Constraint>> = vec![vec![]];
                let mut off = offset;
                for c in s {
                    acc = cross(acc, c.pieces_at(off)?)?;
                    off += c.dim();
                }
                acc
            }
            SetSpec::Inflate { .. } => return None,
        })
    }

    /// Sampled points of `S ∩ (x + rB)`: the probe pattern around `x`, kept
    /// when inside and projected onto the set otherwise.
    pub fn sample_near(&self, x: &[f64], r: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, SetError> {
        let mut out = Vec::new();
        if self.contains(x, DEFAULT_TOL)? {
            out.push(x.to_vec());
        } else if let Some(p) = self.project(x)? {
            if dist(&p, x) <= r * (1.0 + 1e-12) && self.contains(&p, DEFAULT_TOL)? {
                out.push(p);
            }
        }
        for u in geom::ball_pattern(x.len(), n, seed).into_iter().skip(1) {
            let c = geom::axpy(x, r, &u);
            if self.contains(&c, DEFAULT_TOL)? {
                out.push(c);
            } else if let Some(p) = self.project(&c)? {
                if dist(&p, x) <= r * (1.0 + 1e-12) && self.contains(&p, DEFAULT_TOL)? {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    /// Sampled points of `∂S ∩ (x + rB)`: projections of outside pattern
    /// points, members that are not interior, and bisection between interior
    /// members and outside points.
    pub fn sample_boundary_near(&self, x: &[f64], r: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, SetError> {
        let pattern: Vec<Vec<f64>> =
            geom::ball_pattern(x.len(), n, seed).iter().map(|u| geom::axpy(x, r, u)).collect();
        let mut inside = Vec::new();
        let mut outside = Vec::new();
        let mut out = Vec::new();
        let within = |p: &[f64]| dist(p, x) <= r * (1.0 + 1e-12);
        for c in pattern {
            if self.contains(&c, DEFAULT_TOL)? {
                if self.interior_contains(&c, 0.0)? {
                    inside.push(c);
                } else {
                    out.push(c);
                }
            } else {
                if let Some(p) = self.project(&c)? {
                    if within(&p) && self.contains(&p, DEFAULT_TOL)? && !self.interior_contains(&p, 0.0)? {
                        out.push(p);
                    }
                }
                outside.push(c);
            }
        }
        for (k, b) in outside.iter().enumerate() {
            if inside.is_empty() {
                break;
            }
            let a = &inside[k % inside.len()];
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if self.contains(&geom::axpy(a, mid, &sub(b, a)), 0.0)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let p = geom::axpy(a, lo, &sub(b, a));
            if within(&p) && !self.interior_contains(&p, 0.0)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Seeded samples of the set inside the box `[lo, hi]`.
    pub fn sample_in_box(&self, lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>, SetError> {
        use rand::Rng;
        let mut r = geom::rng(seed);
        let mut out = Vec::new();
        let mut attempts = 0;
        while out.len() < n && attempts < 50 * n.max(1) {
            attempts += 1;
            let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + (b - a) * r.gen::<f64>()).collect();
            let p = if self.contains(&c, DEFAULT_TOL)? { Some(c) } else { self.project(&c)? };
            if let Some(p) = p {
                let inside_box = p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= *a && *v <= *b);
                if inside_box && self.contains(&p, DEFAULT_TOL)? {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }
}

fn cross<'a>(acc: Vec<Vec<Constraint<'a>>>, next: Vec<Vec<Constraint<'a>>>) -> Option<Vec<Vec<Constraint<'a>>>> {
    if acc.len() * next.len() > MAX_PIECES {
        return None;
    }
    let mut out = Vec::new();
    for a in &acc {
        for b in &next {
            let mut c = a.clone();
            c.extend(b.iter().cloned());
            out.push(c);
        }
    }
    Some(out)
}

fn project_level(g: &Expr, x: &[f64], equality: bool) -> Result<Option<Vec<f64>>, SetError> {
    if let Some((a, b)) = g.affine() {
        let n2 = dot(&a, &a);
        let v = dot(&a, x) + b;
        if n2 == 0.0 {
            let ok = if equality { b == 0.0 } else { b <= 0.0 };
            return Ok(ok.then(|| x.to_vec()));
        }
        if !equality && v <= 0.0 {
            return Ok(Some(x.to_vec()));
        }
        return Ok(Some(geom::axpy(x, -v / n2, &a)));
    }
    let mut y = x.to_vec();
    for _ in 0..100 {
        let v = match g.eval(&y) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        if (!equality && v <= 0.0) || v.abs() <= 1e-14 {
            return Ok(Some(y));
        }
        let gr = match g.grad(&y, None) {
            Ok(gr) => gr,
            Err(_) => return Ok(None),
        };
        let n2 = dot(&gr, &gr);
        if n2 < 1e-24 {
            return Ok(None);
        }
        y = geom::axpy(&y, -v / n2, &gr);
    }
    let ok = g.eval(&y).map(|v| if equality { v.abs() <= DEFAULT_TOL } else { v <= DEFAULT_TOL }).unwrap_or(false);
    Ok(ok.then_some(y))
}

/// Dykstra's alternating projection onto an intersection of convex sets with
/// exact projections; converges to the Euclidean projection.
fn dykstra(sets: &[SetSpec], x: &[f64]) -> Result<Option<Vec<f64>>, SetError> {
    let m = sets.len();
    let mut y = x.to_vec();
    let mut incr = vec![vec![0.0; x.len()]; m];
    for _ in 0..20_000 {
        let prev = y.clone();
        for (i, s) in sets.iter().enumerate() {
            let z = geom::add(&y, &incr[i]);
            let Some(p) = s.project(&z)? else { return Ok(None) };
            incr[i] = sub(&z, &p);
            y = p;
        }
        if dist(&prev, &y) <= 1e-15 * (1.0 + norm(&y)) {
            break;
        }
    }
    Ok(Some(y))
}

fn alternating(sets: &[SetSpec], x: &[f64]) -> Result<Option<Vec<f64>>, SetError> {
    let mut y = x.to_vec();
    for _ in 0..500 {
        let mut all = true;
        for s in sets {
            if !s.contains(&y, DEFAULT_TOL * 0.1)? {
                all = false;
                let Some(p) = s.project(&y)? else { return Ok(None) };
                y = p;
            }
        }
        if all {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn half(text: &str) -> SetSpec {
        SetSpec::Sublevel(parse_expr(text, 2).unwrap())
    }

    #[test]
    fn orthant_distance_is_exact() {
        let s = SetSpec::Intersection(vec![half("-x1"), half("-x2")]);
        let d = s.distance(&[-3.0, -4.0]).unwrap();
        assert!(d.exact);
        assert!((d.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn circle_distance_is_approximate_but_tight() {
        let s = SetSpec::Zero(parse_expr("x1^2 + x2^2 - 1", 2).unwrap());
        let d = s.distance(&[0.0, 2.0]).unwrap();
        assert!(!d.exact);
        assert!((d.value - 1.0).abs() < 1e-6);
        let d = s.distance(&[0.3, 0.4]).unwrap();
        assert!((d.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn union_and_product() {
        let u = SetSpec::Union(vec![SetSpec::ball(vec![0.0, 0.0], 1.0), SetSpec::ball(vec![5.0, 0.0], 1.0)]);
        assert!((u.distance(&[3.5, 0.0]).unwrap().value - 0.5).abs() < 1e-12);
        let p = SetSpec::Product(vec![
            SetSpec::boxed(vec![0.0], vec![1.0]),
            SetSpec::Zero(parse_expr("x1 - 1", 1).unwrap()),
        ]);
        assert!(p.contains(&[0.5, 1.0], 1e-9).unwrap());
        assert!((p.distance(&[2.0, 2.0]).unwrap().value - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn inflation_membership() {
        let s = SetSpec::Inflate { set: Box::new(half("-x1")), radius: Expr::constant(0.1, 2) };
        assert!(s.contains(&[-0.05, 0.0], 1e-9).unwrap());
        assert!(!s.contains(&[-0.2, 0.0], 1e-9).unwrap());
        assert!((s.distance(&[-0.3, 0.0]).unwrap().value - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(SetSpec::Empty(2).distance(&[0.0, 0.0]), Err(SetError::Empty));
        assert!(matches!(half("-x1").contains(&[0.0], 1e-9), Err(SetError::Dimension { .. })));
    }

    #[test]
    fn boundary_samples_lie_on_boundary() {
        let s = half("-x1");
        let pts = s.sample_boundary_near(&[0.0, 1.0], 0.1, 16, 3).unwrap();
        assert!(!pts.is_empty());
        for p in pts {
            assert!(p[0].abs() < 1e-9);
            assert!(dist(&p, &[0.0, 1.0]) <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn cross_samples_include_both_axes() {
        let s = SetSpec::Intersection(vec![
            SetSpec::Zero(parse_expr("x1*x2", 2).unwrap()),
            half("-x1"),
        ]);
        let pts = s.sample_near(&[0.0, 0.0], 0.1, 24, 1).unwrap();
        assert!(pts.iter().any(|p| p[0] > 0.05));
        assert!(pts.iter().any(|p| p[1].abs() > 0.05));
        for p in &pts {
            assert!(s.contains(p, 1e-9).unwrap());
        }
    }
}
