//! Nash equilibria by exhaustive support enumeration, and their local
//! stability under the replicator flow.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::game::{indifference_form, indifference_forms, payoffs_unchecked, vertex_condition, GameMatrix};
use crate::simplex::{dot, SimplexPoint};

/// Relative tolerance on `Re(lambda)` for hyperbolicity (scaled by the matrix max-norm).
pub const STABILITY_TOL: f64 = 1e-7;
/// Relative tolerance on `|Im(lambda)|` for declaring a complex pair.
pub const CYCLIC_TOL: f64 = 1e-9;
/// Relative feasibility tolerance for the support systems.
pub const NASH_TOL: f64 = 1e-9;
/// Equilibria closer than this are the same point.
pub const DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Nonhyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Pure,
    /// Mixed but not fully mixed: lies on the boundary of the simplex.
    Edge,
    Interior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub point: SimplexPoint,
    /// 0-based strategies with positive weight.
    pub support: Vec<usize>,
    /// Eigenvalues of the replicator Jacobian on the tangent space, sorted by
    /// real then imaginary part.
    pub eigenvalues: Vec<Complex<f64>>,
    pub stability: Stability,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    /// `e1` for pure, `e1_3` for boundary mixtures, `interior` for fully mixed.
    pub fn label(&self) -> String {
        label_for_support(&self.support, self.point.dim())
    }

    /// Some eigenvalue has positive real part.
    pub fn some_unstable(&self, tol: f64) -> bool {
        self.eigenvalues.iter().any(|l| l.re > tol)
    }

    /// Every eigenvalue has positive real part (a source).
    pub fn all_unstable(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|l| l.re > tol)
    }

    pub fn report(&self) -> EquilibriumReport {
        EquilibriumReport {
            label: self.label(),
            point: self.point.as_slice().to_vec(),
            support: self.support.iter().map(|i| i + 1).collect(),
            eigenvalues: self.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
            stability: self.stability,
            kind: self.kind,
        }
    }
}

pub fn label_for_support(support: &[usize], n: usize) -> String {
    if support.len() == n && n > 1 {
        "interior".to_string()
    } else {
        let parts: Vec<String> = support.iter().map(|i| (i + 1).to_string()).collect();
        format!("e{}", parts.join("_"))
    }
}

/// Serialized form of an equilibrium. Strategies are numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub label: String,
    pub point: Vec<f64>,
    pub support: Vec<usize>,
    /// `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub stability: Stability,
    pub kind: EquilibriumKind,
}

/// Result of support enumeration, including the supports whose linear system
/// was singular.
#[derive(Debug, Clone)]
pub struct NashEnumeration {
    pub equilibria: Vec<Equilibrium>,
    /// Skipped supports (0-based strategy lists).
    pub singular_supports: Vec<Vec<usize>>,
}

/// All Nash equilibria of a diagonal-normalized game. Singular supports are
/// skipped with a warning; see [`enumerate_nash_detailed`].
pub fn enumerate_nash(a: &GameMatrix, tol: f64) -> Vec<Equilibrium> {
    enumerate_nash_detailed(a, tol).equilibria
}

pub fn enumerate_nash_detailed(a: &GameMatrix, tol: f64) -> NashEnumeration {
    let n = a.n();
    let scale = a.max_norm();
    let ftol = tol * scale;

    // Smallest supports first, so a degenerate larger support that reproduces
    // a smaller one is dropped by deduplication.
    let mut supports: Vec<Vec<usize>> = (1u64..(1u64 << n))
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    supports.sort_by(|s, t| s.len().cmp(&t.len()).then_with(|| s.cmp(t)));

    let mut equilibria: Vec<Equilibrium> = Vec::new();
    let mut singular = Vec::new();
    for s in supports {
        let Some((x, value)) = solve_support(a, &s) else {
            log::debug!("singular support system for strategies {:?}", one_based(&s));
            singular.push(s);
            continue;
        };
        if s.iter().any(|&i| x[i] < -ftol.max(tol)) {
            continue;
        }
        let Ok(point) = SimplexPoint::renormalized(x) else {
            continue;
        };
        let pay = payoffs_unchecked(a, point.as_slice());
        if (0..n).any(|j| !s.contains(&j) && pay[j] > value + ftol) {
            continue;
        }
        if equilibria.iter().any(|e| e.point.distance(&point) < DEDUP_TOL) {
            continue;
        }
        equilibria.push(build_equilibrium(a, point, tol));
    }
    NashEnumeration {
        equilibria,
        singular_supports: singular,
    }
}

/// All rest points of the replicator flow: solutions of the support systems
/// with nonnegative components, Nash or not.
pub fn rest_points(a: &GameMatrix) -> Vec<SimplexPoint> {
    let n = a.n();
    let tol = NASH_TOL * a.max_norm();
    let mut out: Vec<SimplexPoint> = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let Some((x, _)) = solve_support(a, &s) else { continue };
        if s.iter().any(|&i| x[i] < -tol) {
            continue;
        }
        if let Ok(p) = SimplexPoint::renormalized(x) {
            if out.iter().all(|q| q.distance(&p) >= DEDUP_TOL) {
                out.push(p);
            }
        }
    }
    out
}

fn one_based(s: &[usize]) -> Vec<usize> {
    s.iter().map(|i| i + 1).collect()
}

/// Solves `(A x)_i = v` for `i` in the support, `x_j = 0` off it, `sum x = 1`.
fn solve_support(a: &GameMatrix, s: &[usize]) -> Option<(Vec<f64>, f64)> {
    let k = s.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for (r, &i) in s.iter().enumerate() {
        for (c, &j) in s.iter().enumerate() {
            m[(r, c)] = a.entry(i, j);
        }
        m[(r, k)] = -1.0;
    }
    for c in 0..k {
        m[(k, c)] = 1.0;
    }
    rhs[k] = 1.0;

    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smax > 0.0) || smin <= 1e-12 * smax {
        return None;
    }
    let sol = m.lu().solve(&rhs)?;
    let mut x = vec![0.0; a.n()];
    for (r, &i) in s.iter().enumerate() {
        x[i] = sol[r];
    }
    Some((x, sol[k]))
}

fn build_equilibrium(a: &GameMatrix, point: SimplexPoint, tol: f64) -> Equilibrium {
    let n = a.n();
    let support = point.support(tol);
    let kind = match support.len() {
        1 => EquilibriumKind::Pure,
        s if s == n => EquilibriumKind::Interior,
        _ => EquilibriumKind::Edge,
    };
    let eigenvalues = tangent_eigenvalues(&rd_jacobian(a, &point));
    let stability = classify_stability(&eigenvalues, STABILITY_TOL * a.max_norm());
    Equilibrium {
        point,
        support,
        eigenvalues,
        stability,
        kind,
    }
}

/// Jacobian of the replicator field in the tangent coordinates
/// `(x_1, ..., x_{n-1})` with `x_n = 1 - sum`, i.e. in the basis
/// `{e_i - e_n : i < n}`.
pub fn rd_jacobian(a: &GameMatrix, x: &SimplexPoint) -> DMatrix<f64> {
    let full = rd_jacobian_full(a, x.as_slice());
    let n = a.n();
    DMatrix::from_fn(n - 1, n - 1, |i, k| full[(i, k)] - full[(i, n - 1)])
}

/// Jacobian of `x_i ((Ax)_i - x.Ax)` with respect to all `n` coordinates.
pub(crate) fn rd_jacobian_full(a: &GameMatrix, x: &[f64]) -> DMatrix<f64> {
    let n = a.n();
    let ax = payoffs_unchecked(a, x);
    let mean = dot(x, &ax);
    // d(x.Ax)/dx_k = (Ax)_k + (A^T x)_k
    let grad_mean: Vec<f64> = (0..n)
        .map(|k| ax[k] + (0..n).map(|i| a.entry(i, k) * x[i]).sum::<f64>())
        .collect();
    DMatrix::from_fn(n, n, |i, k| {
        let diag = if i == k { ax[i] - mean } else { 0.0 };
        diag + x[i] * (a.entry(i, k) - grad_mean[k])
    })
}

/// Eigenvalues of a real square matrix, sorted by `(re, im)`.
///
/// Conjugate pairs whose imaginary part is within the rounding error of a
/// double real root are reported as real: a defective double eigenvalue is
/// only determined to `O(sqrt(eps))` by any floating-point method, which
/// would otherwise show up as a spurious complex pair.
pub fn tangent_eigenvalues(j: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let m = j.nrows();
    let mut out: Vec<Complex<f64>> = match m {
        0 => Vec::new(),
        1 => vec![Complex::new(j[(0, 0)], 0.0)],
        2 => eig2(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]).to_vec(),
        _ => {
            let scale = j.iter().fold(0.0_f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
            let snap = 8.0 * f64::EPSILON.sqrt() * scale;
            j.complex_eigenvalues()
                .iter()
                .map(|l| if l.im.abs() <= snap { Complex::new(l.re, 0.0) } else { *l })
                .collect()
        }
    };
    out.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    out
}

fn eig2(a: f64, b: f64, c: f64, d: f64) -> [Complex<f64>; 2] {
    let half_tr = 0.5 * (a + d);
    let diff = a - d;
    let disc = diff * diff + 4.0 * b * c;
    // Rounding error bound on the computed discriminant.
    let noise = 16.0 * f64::EPSILON * (diff * diff + 4.0 * (b * c).abs());
    if disc.abs() <= noise {
        [Complex::new(half_tr, 0.0), Complex::new(half_tr, 0.0)]
    } else if disc > 0.0 {
        let r = 0.5 * disc.sqrt();
        [Complex::new(half_tr - r, 0.0), Complex::new(half_tr + r, 0.0)]
    } else {
        let r = 0.5 * (-disc).sqrt();
        [Complex::new(half_tr, -r), Complex::new(half_tr, r)]
    }
}

/// `Stable` iff every `Re(lambda) < -tol`; `Unstable` iff some `Re(lambda) > tol`.
pub fn classify_stability(eigenvalues: &[Complex<f64>], tol: f64) -> Stability {
    if eigenvalues.iter().all(|l| l.re < -tol) {
        Stability::Stable
    } else if eigenvalues.iter().any(|l| l.re > tol) {
        Stability::Unstable
    } else {
        Stability::Nonhyperbolic
    }
}

/// Whether the replicator flow spirals around the interior equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CyclicReport {
    pub interior_exists: bool,
    pub cyclic: bool,
    pub interior_eigenvalues: Vec<[f64; 2]>,
    /// At least `n - 2` indifference sets contain every vertex outside their pair.
    pub sufficient_condition_met: bool,
    /// Pairs meeting the vertex condition (1-based).
    pub invariant_pairs: Vec<(usize, usize)>,
    /// The no-cycling implication holds: not (sufficient condition and cyclic).
    pub consistent: bool,
}

pub fn detect_cyclic(a: &GameMatrix) -> CyclicReport {
    let n = a.n();
    let invariant_pairs: Vec<(usize, usize)> = indifference_forms(a)
        .iter()
        .filter(|f| vertex_condition(a, f.pair.0, f.pair.1))
        .map(|f| (f.pair.0 + 1, f.pair.1 + 1))
        .collect();
    let sufficient = invariant_pairs.len() >= n.saturating_sub(2);
    let interior = enumerate_nash(a, NASH_TOL)
        .into_iter()
        .find(|e| e.kind == EquilibriumKind::Interior);
    let (exists, cyclic, eigs) = match interior {
        None => (false, false, Vec::new()),
        Some(eq) => {
            let tol = CYCLIC_TOL * a.max_norm();
            let cyclic = eq.eigenvalues.iter().any(|l| l.im.abs() > tol);
            (true, cyclic, eq.eigenvalues.iter().map(|l| [l.re, l.im]).collect())
        }
    };
    CyclicReport {
        interior_exists: exists,
        cyclic,
        interior_eigenvalues: eigs,
        sufficient_condition_met: sufficient,
        invariant_pairs,
        consistent: !(sufficient && cyclic),
    }
}

/// A point on an edge of the simplex where the two edge strategies tie.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySingularity {
    pub pair: (usize, usize),
    pub point: SimplexPoint,
}

/// For each pair `(i, j)`, the solutions of `Z_{i,j}` on the edge spanned by
/// `e_i` and `e_j`. These are the rest points of best-response dynamics on the
/// boundary.
pub fn brd_boundary_singularities(a: &GameMatrix) -> Vec<BoundarySingularity> {
    let n = a.n();
    let tol = 1e-12 * a.max_norm();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let f = indifference_form(a, i, j).expect("valid pair");
            let (ci, cj) = (f.coeffs[i], f.coeffs[j]);
            if ci.abs() <= tol && cj.abs() <= tol {
                log::warn!("degenerate game: Z{},{} vanishes on its whole edge", i + 1, j + 1);
                continue;
            }
            if (cj - ci).abs() <= tol {
                continue;
            }
            // ci * s + cj * (1 - s) = 0 with x_i = s, x_j = 1 - s
            let s = cj / (cj - ci);
            if !(-1e-15..=1.0 + 1e-15).contains(&s) {
                continue;
            }
            let s = s.clamp(0.0, 1.0);
            let mut x = vec![0.0; n];
            x[i] = s;
            x[j] = 1.0 - s;
            out.push(BoundarySingularity {
                pair: (i, j),
                point: SimplexPoint::from_vec_unchecked(x),
            });
        }
    }
    out
}
