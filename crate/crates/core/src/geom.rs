//! Small vector and sampling utilities shared across modules.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with stream identifiers (splitmix64 finalizer).
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|p| p * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + s * q).collect()
}

pub fn unit_direction(rng: &mut Rng8, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return scale(&v, 1.0 / r);
        }
    }
}

/// Uniform point in the closed ball of radius `r` around `c`.
pub fn ball_point(rng: &mut Rng8, c: &[f64], r: f64) -> Vec<f64> {
    let u = unit_direction(rng, c.len());
    let s: f64 = rng.gen::<f64>().powf(1.0 / c.len() as f64);
    axpy(c, r * s, &u)
}

/// Uniform weights on the simplex (flat Dirichlet).
pub fn simplex_weights(rng: &mut Rng8, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

/// Deterministic probe pattern in the unit ball: the center, the `±e_i`
/// axis points, then `extra` seeded points (half on the sphere).
pub fn ball_pattern(n: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            out.push(e);
        }
    }
    let mut r = rng(seed);
    for k in 0..extra {
        if k % 2 == 0 {
            out.push(unit_direction(&mut r, n));
        } else {
            out.push(ball_point(&mut r, &vec![0.0; n], 1.0));
        }
    }
    out
}

/// Geometric sequence `start * ratio^k`, `k = 0..count`.
pub fn geometric(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}
