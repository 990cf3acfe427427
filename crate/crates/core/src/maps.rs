//! Set-valued maps of the form `conv{v_1(x),…,v_k(x)} + r(x)·B`, optionally
//! restricted to a set, and their sampled ρ-inflations.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{Expr, ExprError, VecExpr};
use crate::geom::{self, dist, norm, sub};
use crate::sets::{SetError, SetSpec, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("map image is empty at this point")]
    EmptyImage,
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("invalid map: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub vertices: Vec<VecExpr>,
    pub radius: Expr,
    pub restrict_to: Option<SetSpec>,
}

impl MapSpec {
    pub fn new(vertices: Vec<VecExpr>, radius: Expr, restrict_to: Option<SetSpec>) -> Result<MapSpec, MapError> {
        let m = MapSpec { vertices, radius, restrict_to };
        m.validate()?;
        Ok(m)
    }

    /// Single-valued map `x ↦ {v(x)}`.
    pub fn single(v: VecExpr) -> MapSpec {
        let dim = v.dim();
        MapSpec { vertices: vec![v], radius: Expr::constant(0.0, dim), restrict_to: None }
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let first = self.vertices.first().ok_or_else(|| MapError::Invalid("no vertices".into()))?;
        for v in &self.vertices {
            if v.dim() != first.dim() || v.len() != first.len() {
                return Err(MapError::Invalid("vertex dimensions disagree".into()));
            }
        }
        if self.radius.dim() != first.dim() {
            return Err(MapError::Invalid("radius dimension disagrees".into()));
        }
        if let Some(r) = &self.restrict_to {
            r.validate()?;
            if r.dim() != first.len() {
                return Err(MapError::Invalid("restrict_to dimension disagrees with output".into()));
            }
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn bind(&self, env: &std::collections::BTreeMap<String, f64>) -> MapSpec {
        MapSpec {
            vertices: self.vertices.iter().map(|v| v.bind(env)).collect(),
            radius: self.radius.bind(env),
            restrict_to: self.restrict_to.as_ref().map(|r| r.bind(env)),
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self.vertices.iter().flat_map(|v| v.symbols()).collect();
        out.extend(self.radius.symbols());
        if let Some(r) = &self.restrict_to {
            out.extend(r.symbols());
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn out_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn is_discontinuous(&self) -> bool {
        self.vertices.iter().any(VecExpr::is_discontinuous) || self.radius.is_discontinuous()
    }
}

/// `conv(vertices) + radius·B`
#[derive(Debug, Clone, PartialEq)]
pub struct HullPiece {
    pub vertices: Vec<Vec<f64>>,
    pub radius: f64,
}

impl HullPiece {
    pub fn barycenter(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        let mut c = vec![0.0; self.vertices[0].len()];
        for v in &self.vertices {
            for (a, b) in c.iter_mut().zip(v) {
                *a += b / k;
            }
        }
        c
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        (hull_distance(y, &self.vertices) - self.radius).max(0.0)
    }

    /// True when the piece is a single point.
    pub fn is_point(&self) -> bool {
        self.radius == 0.0 && self.vertices.iter().all(|v| dist(v, &self.vertices[0]) <= 1e-14)
    }
}

/// A map value as a finite union of hull pieces (one piece for convex maps).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapValue {
    pub pieces: Vec<HullPiece>,
}

impl MapValue {
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn distance(&self, y: &[f64]) -> f64 {
        self.pieces.iter().map(|p| p.distance(y)).fold(f64::INFINITY, f64::min)
    }

    pub fn is_point(&self) -> bool {
        match self.pieces.as_slice() {
            [p] => p.is_point(),
            _ => false,
        }
    }
}

/// A sampled point of a map value with the data needed to re-check it.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSample {
    pub point: Vec<f64>,
    pub piece: usize,
    pub weights: Vec<f64>,
    pub offset: Vec<f64>,
}

/// Set-valued maps used by hybrid systems.
#[derive(Debug, Clone, PartialEq)]
pub enum Map {
    Hull(MapSpec),
    /// `cl conv M((x + δρ(x)B) ∩ S) + δρ(x)B`, sampled.
    FlowInflation { base: Box<Map>, set: SetSpec, rho: Expr, delta: f64, samples: usize },
    /// `∪ { y + δρ(y)B : y ∈ M((x + δρ(x)B) ∩ S) }`, sampled.
    JumpInflation { base: Box<Map>, set: SetSpec, rho: Expr, delta: f64, samples: usize },
}

impl From<MapSpec> for Map {
    fn from(m: MapSpec) -> Map {
        Map::Hull(m)
    }
}

const INFLATION_SEED: u64 = 0x1f1a7e;

impl Map {
    pub fn in_dim(&self) -> usize {
        match self {
            Map::Hull(m) => m.in_dim(),
            Map::FlowInflation { base, .. } | Map::JumpInflation { base, .. } => base.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Map::Hull(m) => m.out_dim(),
            Map::FlowInflation { base, .. } | Map::JumpInflation { base, .. } => base.out_dim(),
        }
    }

    pub fn bind(&self, env: &std::collections::BTreeMap<String, f64>) -> Map {
        match self {
            Map::Hull(m) => Map::Hull(m.bind(env)),
            Map::FlowInflation { base, set, rho, delta, samples } => Map::FlowInflation {
                base: Box::new(base.bind(env)),
                set: set.bind(env),
                rho: rho.bind(env),
                delta: *delta,
                samples: *samples,
            },
            Map::JumpInflation { base, set, rho, delta, samples } => Map::JumpInflation {
                base: Box::new(base.bind(env)),
                set: set.bind(env),
                rho: rho.bind(env),
                delta: *delta,
                samples: *samples,
            },
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        match self {
            Map::Hull(m) => m.symbols(),
            Map::FlowInflation { base, set, rho, .. } | Map::JumpInflation { base, set, rho, .. } => {
                let mut v = base.symbols();
                v.extend(set.symbols());
                v.extend(rho.symbols());
                v.sort();
                v.dedup();
                v
            }
        }
    }

    pub fn as_spec(&self) -> Option<&MapSpec> {
        match self {
            Map::Hull(m) => Some(m),
            _ => None,
        }
    }

    pub fn restrict_to(&self) -> Option<&SetSpec> {
        match self {
            Map::Hull(m) => m.restrict_to.as_ref(),
            _ => None,
        }
    }

    pub fn is_discontinuous(&self) -> bool {
        match self {
            Map::Hull(m) => m.is_discontinuous(),
            Map::FlowInflation { base, .. } | Map::JumpInflation { base, .. } => base.is_discontinuous(),
        }
    }

    /// The unrestricted value at `x`.
    pub fn value(&self, x: &[f64]) -> Result<MapValue, MapError> {
        match self {
            Map::Hull(m) => {
                let vertices = m.vertices.iter().map(|v| v.eval(x)).collect::<Result<Vec<_>, _>>()?;
                let radius = m.radius.eval(x)?;
                if radius < 0.0 {
                    return Err(MapError::NegativeRadius(radius));
                }
                Ok(MapValue { pieces: vec![HullPiece { vertices, radius }] })
            }
            Map::FlowInflation { base, set, rho, delta, samples } => {
                let r = inflation_radius(rho, *delta, x)?;
                let mut vertices = Vec::new();
                let mut base_r: f64 = 0.0;
                for y in inflation_points(set, x, r, *samples)? {
                    for p in base.value(&y)?.pieces {
                        base_r = base_r.max(p.radius);
                        vertices.extend(p.vertices);
                    }
                }
                if vertices.is_empty() {
                    return Ok(MapValue::default());
                }
                Ok(MapValue { pieces: vec![HullPiece { vertices: dedup(vertices), radius: base_r + r }] })
            }
            Map::JumpInflation { base, set, rho, delta, samples } => {
                let r = inflation_radius(rho, *delta, x)?;
                let mut pieces = Vec::new();
                for xi in inflation_points(set, x, r, *samples)? {
                    for p in base.value(&xi)?.pieces {
                        let mut extra: f64 = 0.0;
                        for v in &p.vertices {
                            extra = extra.max(inflation_radius(rho, *delta, v)?);
                        }
                        let piece = HullPiece { vertices: p.vertices, radius: p.radius + extra };
                        if !pieces.contains(&piece) {
                            pieces.push(piece);
                        }
                    }
                }
                Ok(MapValue { pieces })
            }
        }
    }

    /// Membership of `y` in the value at `x`, to tolerance.
    pub fn contains(&self, x: &[f64], y: &[f64], tol: f64) -> Result<bool, MapError> {
        if let Some(r) = self.restrict_to() {
            if !r.contains(y, tol)? {
                return Ok(false);
            }
        }
        Ok(self.value(x)?.distance(y) <= tol)
    }

    /// Distance from `y` to the value at `x` (ignores `restrict_to`).
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64, MapError> {
        Ok(self.value(x)?.distance(y))
    }

    /// All vertices, plus seeded convex combinations perturbed inside the
    /// radius ball, filtered by `restrict_to`. Exact duplicates are merged.
    pub fn sample(&self, x: &[f64], n: usize, seed: u64) -> Result<Vec<MapSample>, MapError> {
        let value = self.value(x)?;
        if value.is_empty() {
            return Err(MapError::EmptyImage);
        }
        let mut out: Vec<MapSample> = Vec::new();
        let push = |out: &mut Vec<MapSample>, s: MapSample| {
            if !out.iter().any(|o| o.point == s.point) {
                out.push(s);
            }
        };
        let total_vertices: usize = value.pieces.iter().map(|p| p.vertices.len()).sum();
        for (pi, p) in value.pieces.iter().enumerate() {
            for (i, v) in p.vertices.iter().enumerate() {
                let mut w = vec![0.0; p.vertices.len()];
                w[i] = 1.0;
                push(&mut out, MapSample { point: v.clone(), piece: pi, weights: w, offset: vec![0.0; v.len()] });
            }
        }
        let mut r = geom::rng(seed);
        for k in 0..n.saturating_sub(total_vertices) {
            let pi = k % value.pieces.len();
            let p = &value.pieces[pi];
            let w = geom::simplex_weights(&mut r, p.vertices.len());
            let mut point = vec![0.0; p.vertices[0].len()];
            for (wi, v) in w.iter().zip(&p.vertices) {
                for (a, b) in point.iter_mut().zip(v) {
                    *a += wi * b;
                }
            }
            let offset = if p.radius > 0.0 {
                geom::ball_point(&mut r, &vec![0.0; point.len()], p.radius)
            } else {
                vec![0.0; point.len()]
            };
            let point = geom::add(&point, &offset);
            push(&mut out, MapSample { point, piece: pi, weights: w, offset });
        }
        if let Some(rs) = self.restrict_to() {
            let mut kept = Vec::new();
            for s in out {
                if rs.contains(&s.point, DEFAULT_TOL)? {
                    kept.push(s);
                }
            }
            out = kept;
        }
        if out.is_empty() {
            return Err(MapError::EmptyImage);
        }
        Ok(out)
    }

    /// Sampled points only.
    pub fn sample_points(&self, x: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>, MapError> {
        Ok(self.sample(x, n, seed)?.into_iter().map(|s| s.point).collect())
    }
}

/// Re-checks a sample against the recorded barycentric data.
pub fn sample_is_consistent(value: &MapValue, s: &MapSample, tol: f64) -> bool {
    let Some(p) = value.pieces.get(s.piece) else { return false };
    if s.weights.len() != p.vertices.len() {
        return false;
    }
    let wsum: f64 = s.weights.iter().sum();
    if s.weights.iter().any(|w| *w < -tol) || (wsum - 1.0).abs() > tol {
        return false;
    }
    if norm(&s.offset) > p.radius + tol {
        return false;
    }
    let mut q = s.offset.clone();
    for (w, v) in s.weights.iter().zip(&p.vertices) {
        for (a, b) in q.iter_mut().zip(v) {
            *a += w * b;
        }
    }
    dist(&q, &s.point) <= tol * (1.0 + norm(&s.point))
}

fn inflation_radius(rho: &Expr, delta: f64, x: &[f64]) -> Result<f64, MapError> {
    let r = rho.eval(x)?;
    if r < 0.0 {
        return Err(MapError::NegativeRadius(r));
    }
    Ok(delta * r)
}

/// Deterministic sample of `(x + rB) ∩ S`, including the nearest point of `S`.
pub fn inflation_points(set: &SetSpec, x: &[f64], r: f64, samples: usize) -> Result<Vec<Vec<f64>>, MapError> {
    if r == 0.0 {
        return Ok(if set.contains(x, DEFAULT_TOL)? { vec![x.to_vec()] } else { vec![] });
    }
    let mut out = Vec::new();
    for u in geom::ball_pattern(x.len(), samples, INFLATION_SEED) {
        let y = geom::axpy(x, r, &u);
        if set.contains(&y, DEFAULT_TOL)? {
            out.push(y);
        }
    }
    match set.distance(x) {
        Ok(d) => {
            if let Some(w) = d.witness {
                if d.value > 0.0 && d.value <= r * (1.0 + 1e-12) {
                    out.push(w);
                }
            }
        }
        Err(SetError::Empty) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

fn dedup(v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(v.len());
    for p in v {
        if !out.iter().any(|q| dist(q, &p) <= 1e-14) {
            out.push(p);
        }
    }
    out
}

const MAX_SUBSETS: usize = 20_000;

/// Euclidean distance from `y` to the convex hull of `vertices`.
///
/// Exact: the nearest point lies in the relative interior of a face spanned by
/// at most `n + 1` affinely independent vertices, so it suffices to project
/// onto the affine hull of every such subset and keep feasible projections.
pub fn hull_distance(y: &[f64], vertices: &[Vec<f64>]) -> f64 {
    let verts = dedup(vertices.to_vec());
    let k = verts.len();
    if k == 1 {
        return dist(y, &verts[0]);
    }
    let n = y.len();
    if n == 1 {
        let lo = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        return (lo - y[0]).max(y[0] - hi).max(0.0);
    }
    let max_size = k.min(n + 1);
    let mut count = 0usize;
    let mut binom = 1usize;
    for s in 1..=max_size {
        binom = binom * (k + 1 - s) / s;
        count = count.saturating_add(binom);
    }
    if count > MAX_SUBSETS {
        return frank_wolfe(y, &verts);
    }
    let mut best = verts.iter().map(|v| dist(y, v)).fold(f64::INFINITY, f64::min);
    let mut idx = Vec::with_capacity(max_size);
    for size in 2..=max_size {
        subsets(k, size, 0, &mut idx, &mut |s| {
            if let Some(d) = affine_projection_distance(y, &verts, s) {
                best = best.min(d);
            }
        });
    }
    best
}

fn subsets(k: usize, size: usize, start: usize, idx: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if idx.len() == size {
        f(idx);
        return;
    }
    for i in start..k {
        if k - i < size - idx.len() {
            break;
        }
        idx.push(i);
        subsets(k, size, i + 1, idx, f);
        idx.pop();
    }
}

fn affine_projection_distance(y: &[f64], verts: &[Vec<f64>], s: &[usize]) -> Option<f64> {
    let n = y.len();
    let m = s.len() - 1;
    let v0 = &verts[s[0]];
    let a = DMatrix::from_fn(n, m, |r, c| verts[s[c + 1]][r] - v0[r]);
    let b = DVector::from_iterator(n, y.iter().zip(v0).map(|(p, q)| p - q));
    let g = a.transpose() * &a;
    let scale = g.diagonal().max().max(1e-300);
    let mu = g.clone().lu().solve(&(a.transpose() * &b))?;
    if (g.determinant() / scale.powi(m as i32)).abs() < 1e-12 {
        return None;
    }
    let l0 = 1.0 - mu.sum();
    if l0 < -1e-12 || mu.iter().any(|v| *v < -1e-12) {
        return None;
    }
    let p = &a * &mu;
    Some((b - p).norm())
}

fn frank_wolfe(y: &[f64], verts: &[Vec<f64>]) -> f64 {
    let mut p = verts[0].clone();
    for _ in 0..5000 {
        let gvec = sub(&p, y);
        let (best, _) = verts
            .iter()
            .enumerate()
            .map(|(i, v)| (i, geom::dot(&gvec, v)))
            .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
        let d = sub(&verts[best], &p);
        let dd = geom::dot(&d, &d);
        if dd == 0.0 {
            break;
        }
        let t = (-geom::dot(&gvec, &d) / dd).clamp(0.0, 1.0);
        if t <= 1e-15 {
            break;
        }
        p = geom::axpy(&p, t, &d);
    }
    dist(&p, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn constant_map(points: &[&[f64]]) -> Map {
        let dim = points[0].len();
        let vertices = points
            .iter()
            .map(|p| VecExpr::new(p.iter().map(|v| Expr::constant(*v, 1)).collect()).unwrap())
            .collect();
        let _ = dim;
        Map::Hull(MapSpec::new(vertices, Expr::constant(0.0, 1), None).unwrap())
    }

    #[test]
    fn hull_distance_square() {
        let sq = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        assert!((hull_distance(&[0.5, 0.5], &sq)).abs() < 1e-12);
        assert!((hull_distance(&[2.0, 0.5], &sq) - 1.0).abs() < 1e-12);
        assert!((hull_distance(&[2.0, 2.0], &sq) - 2f64.sqrt()).abs() < 1e-12);
        assert!((hull_distance(&[0.5, -3.0], &sq) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn segment_map_samples() {
        let m = constant_map(&[&[-1.0], &[1.0]]);
        let s = m.sample_points(&[0.0], 3, 7).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains(&vec![-1.0]) && s.contains(&vec![1.0]));
        assert!(s.iter().all(|p| p[0].abs() <= 1.0));
    }

    #[test]
    fn singleton_with_zero_radius() {
        let g = Map::Hull(MapSpec::single(VecExpr::parse(&["0", "-0.5*x2"], 2, &[]).unwrap()));
        for n in [1, 4, 9] {
            assert_eq!(g.sample_points(&[0.0, -2.0], n, n as u64).unwrap(), vec![vec![0.0, 1.0]]);
        }
    }

    #[test]
    fn restrict_to_can_empty_the_image() {
        let v = VecExpr::parse(&["x1"], 1, &[]).unwrap();
        let m = Map::Hull(
            MapSpec::new(vec![v], Expr::constant(0.0, 1), Some(SetSpec::Sublevel(parse_expr("x1", 1).unwrap())))
                .unwrap(),
        );
        assert!(m.sample(&[-1.0], 2, 0).is_ok());
        assert_eq!(m.sample(&[1.0], 2, 0), Err(MapError::EmptyImage));
    }

    #[test]
    fn samples_are_consistent_with_barycentric_records() {
        let v1 = VecExpr::parse(&["x1", "1"], 2, &[]).unwrap();
        let v2 = VecExpr::parse(&["-1", "x2"], 2, &[]).unwrap();
        let m = Map::Hull(MapSpec::new(vec![v1, v2], parse_expr("0.1", 2).unwrap(), None).unwrap());
        let x = [0.3, -0.2];
        let value = m.value(&x).unwrap();
        for s in m.sample(&x, 20, 5).unwrap() {
            assert!(sample_is_consistent(&value, &s, 1e-12));
            assert!(value.distance(&s.point) <= 1e-12);
        }
    }
}
