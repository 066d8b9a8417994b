//! Points of the probability simplex, uniform sampling, and the small amount
//! of polygon geometry needed for three-strategy games.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest negative component that construction silently clamps to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Allowed deviation of the component sum from one at construction.
pub const SUM_TOL: f64 = 1e-12;

/// A nonnegative vector whose components sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates `x` as a simplex point.
    ///
    /// Components in `[-1e-12, 0)` are clamped to zero and the vector is
    /// rescaled to sum to one; anything more negative, non-finite, or with a
    /// component sum further than `1e-12` from one is rejected.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        let x = clamp_components(x)?;
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotOnSimplex(format!(
                "components sum to {sum}, expected 1 within {SUM_TOL:e}"
            )));
        }
        Ok(Self::rescaled(x, sum))
    }

    /// Projects an integrator state back onto the simplex: clamps round-off
    /// negatives and rescales by the component sum.
    pub fn renormalized(x: Vec<f64>) -> Result<Self> {
        let x = clamp_components(x)?;
        let sum: f64 = x.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::NotOnSimplex("state has zero mass".into()));
        }
        Ok(Self::rescaled(x, sum))
    }

    fn rescaled(mut x: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            x.iter_mut().for_each(|v| *v /= sum);
        }
        SimplexPoint(x)
    }

    pub(crate) fn from_vec_unchecked(x: Vec<f64>) -> Self {
        SimplexPoint(x)
    }

    /// The unit vector `e_i` (0-based index).
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        SimplexPoint(x)
    }

    pub fn barycenter(n: usize) -> Self {
        SimplexPoint(vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Indices with component above `tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > tol).collect()
    }

    pub fn distance(&self, other: &SimplexPoint) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

fn clamp_components(mut x: Vec<f64>) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::NotOnSimplex("empty vector".into()));
    }
    for (i, v) in x.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::NotOnSimplex(format!("component x{} is not finite", i + 1)));
        }
        if *v < -CLAMP_TOL {
            return Err(Error::NotOnSimplex(format!(
                "component x{} = {} is negative",
                i + 1,
                v
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(x)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Draws `count` i.i.d. uniform points of the `(n-1)`-simplex.
///
/// Uses normalized i.i.d. standard exponentials, which is exactly uniform in
/// any dimension. The generator is seeded per call, so the output depends only
/// on `(n, count, seed)`.
pub fn sample_simplex(n: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let sum: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= sum);
            SimplexPoint(x)
        })
        .collect()
}

/// Mixes a base seed with a stream index (splitmix64 finalizer), giving
/// independent per-partition seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Clips a convex polygon (vertices in simplex coordinates) to the half-space
/// `sign * (coeffs . x) >= 0`. Consecutive duplicate vertices are dropped.
pub fn clip_polygon(poly: &[Vec<f64>], coeffs: &[f64], sign: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(poly.len() + 1);
    let m = poly.len();
    for k in 0..m {
        let p = &poly[k];
        let q = &poly[(k + 1) % m];
        let fp = sign * dot(coeffs, p);
        let fq = sign * dot(coeffs, q);
        if fp >= 0.0 {
            push_distinct(&mut out, p.clone());
        }
        if (fp > 0.0 && fq < 0.0) || (fp < 0.0 && fq > 0.0) {
            let t = fp / (fp - fq);
            let r: Vec<f64> = p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect();
            push_distinct(&mut out, r);
        }
    }
    if out.len() > 1 && euclidean(&out[0], &out[out.len() - 1]) < 1e-12 {
        out.pop();
    }
    out
}

fn push_distinct(out: &mut Vec<Vec<f64>>, p: Vec<f64>) {
    if out.last().is_none_or(|l| euclidean(l, &p) >= 1e-12) {
        out.push(p);
    }
}

/// The segment `{x in simplex : coeffs . x = 0}` for three strategies, as its
/// two endpoints. `None` when the line misses the simplex or touches it in a
/// single point.
pub fn line_segment_in_triangle(coeffs: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    debug_assert_eq!(coeffs.len(), 3);
    let verts: Vec<Vec<f64>> = (0..3).map(|i| SimplexPoint::vertex(3, i).into_vec()).collect();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for k in 0..3 {
        let p = &verts[k];
        let q = &verts[(k + 1) % 3];
        let fp = dot(coeffs, p);
        let fq = dot(coeffs, q);
        let cand = if fp == 0.0 {
            Some(p.clone())
        } else if fp * fq < 0.0 {
            let t = fp / (fp - fq);
            Some(p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect())
        } else {
            None
        };
        if let Some(c) = cand {
            if pts.iter().all(|e| euclidean(e, &c) > 1e-12) {
                pts.push(c);
            }
        }
    }
    if pts.len() >= 2 {
        let b = pts.swap_remove(1);
        let a = pts.swap_remove(0);
        Some((a, b))
    } else {
        None
    }
}
