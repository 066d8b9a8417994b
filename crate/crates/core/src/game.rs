//! Payoff algebra for symmetric single-population games.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{dot, SimplexPoint};

/// An `n x n` payoff matrix. `payoffs[(i, j)]` is the payoff to strategy `i`
/// against strategy `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameMatrix {
    payoffs: DMatrix<f64>,
}

impl GameMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidMatrix(format!("need at least 2 strategies, got {n}")));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    r.len()
                )));
            }
            if let Some(j) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!("entry ({}, {}) is not finite", i + 1, j + 1)));
            }
        }
        Ok(GameMatrix {
            payoffs: DMatrix::from_fn(n, n, |i, j| rows[i][j]),
        })
    }

    pub fn n(&self) -> usize {
        self.payoffs.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.payoffs[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.payoffs.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.payoffs
    }

    /// Largest absolute entry; used to make tolerances scale-free. Never zero.
    pub fn max_norm(&self) -> f64 {
        let m = self.payoffs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    pub fn is_normalized(&self) -> bool {
        (0..self.n()).all(|i| self.payoffs[(i, i)] == 0.0)
    }

    pub fn negated(&self) -> GameMatrix {
        GameMatrix {
            payoffs: -&self.payoffs,
        }
    }
}

/// Subtracts `a_jj` from every entry of column `j`.
///
/// Adding a constant to a column shifts every strategy's payoff against `j`
/// equally, so payoff differences (and with them both dynamics and every
/// indifference set) are unchanged.
pub fn normalize_diagonal(a: &GameMatrix) -> GameMatrix {
    normalize_with_shift(a).0
}

/// Like [`normalize_diagonal`], also returning the per-column shift that was
/// subtracted.
pub fn normalize_with_shift(a: &GameMatrix) -> (GameMatrix, Vec<f64>) {
    let n = a.n();
    let shift: Vec<f64> = (0..n).map(|j| a.payoffs[(j, j)]).collect();
    let payoffs = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { a.payoffs[(i, j)] - shift[j] });
    (GameMatrix { payoffs }, shift)
}

fn check_dim(a: &GameMatrix, x: &SimplexPoint) -> Result<()> {
    if x.dim() != a.n() {
        return Err(Error::InvalidArgument(format!(
            "state has {} components, game has {} strategies",
            x.dim(),
            a.n()
        )));
    }
    Ok(())
}

/// `A x`: the payoff of each pure strategy against the population state.
pub fn payoff_vector(a: &GameMatrix, x: &SimplexPoint) -> Result<Vec<f64>> {
    check_dim(a, x)?;
    Ok(payoffs_unchecked(a, x.as_slice()))
}

pub(crate) fn payoffs_unchecked(a: &GameMatrix, x: &[f64]) -> Vec<f64> {
    let n = a.n();
    (0..n)
        .map(|i| (0..n).map(|j| a.payoffs[(i, j)] * x[j]).sum())
        .collect()
}

/// `x . A x`: the population's mean payoff.
pub fn average_payoff(a: &GameMatrix, x: &SimplexPoint) -> Result<f64> {
    let p = payoff_vector(a, x)?;
    Ok(dot(x.as_slice(), &p))
}

/// The linear form `coeffs . x = (A x)_i - (A x)_j` whose zero set in the
/// simplex is the indifference set of the pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub pair: (usize, usize),
    pub coeffs: Vec<f64>,
}

impl LinearForm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x)
    }

    /// Norm of the coefficient vector projected onto the tangent space of the
    /// simplex (`sum v = 0`). Zero when the form is constant on the simplex.
    pub fn tangent_norm(&self) -> f64 {
        let mean = self.coeffs.iter().sum::<f64>() / self.coeffs.len() as f64;
        self.coeffs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>().sqrt()
    }

    /// Euclidean distance from `x` to the hyperplane `{coeffs . y = 0}` inside
    /// the affine hull of the simplex.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let t = self.tangent_norm();
        if t == 0.0 {
            if self.eval(x).abs() == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.eval(x).abs() / t
        }
    }

    /// Renders the equation with 1-based variable names, e.g. `x1 - 3x2 + 2x3 = 0`.
    pub fn equation(&self) -> String {
        let mut s = String::new();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mag = c.abs();
            let sign = if c < 0.0 { "-" } else { "+" };
            if s.is_empty() {
                if c < 0.0 {
                    s.push('-');
                }
            } else {
                s.push_str(&format!(" {sign} "));
            }
            if (mag - 1.0).abs() > 1e-12 {
                s.push_str(&format_coefficient(mag));
            }
            s.push_str(&format!("x{}", k + 1));
        }
        if s.is_empty() {
            s.push('0');
        }
        s.push_str(" = 0");
        s
    }
}

fn format_coefficient(v: f64) -> String {
    if (v - v.round()).abs() < 1e-12 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v}")
    }
}

/// `row_i(A) - row_j(A)`, the form vanishing exactly on `Z_{i,j}`.
pub fn indifference_form(a: &GameMatrix, i: usize, j: usize) -> Result<LinearForm> {
    let n = a.n();
    if i == j {
        return Err(Error::InvalidArgument(format!("indifference pair needs distinct strategies, got ({}, {})", i + 1, j + 1)));
    }
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!("strategy index out of range for n = {n}")));
    }
    Ok(LinearForm {
        pair: (i, j),
        coeffs: (0..n).map(|k| a.payoffs[(i, k)] - a.payoffs[(j, k)]).collect(),
    })
}

/// All forms `Z_{i,j}` with `i < j`, in lexicographic pair order.
pub fn indifference_forms(a: &GameMatrix) -> Vec<LinearForm> {
    let n = a.n();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(indifference_form(a, i, j).expect("valid pair"));
        }
    }
    out
}

/// Outcome of the non-degeneracy check on indifference sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub holds: bool,
    /// Pairs of pairs whose forms are proportional (1-based strategies).
    pub violating_pairs: Vec<((usize, usize), (usize, usize))>,
}

/// Residual below which two unit-normalized forms count as proportional.
pub const PROPORTIONALITY_TOL: f64 = 1e-9;

/// Checks that no two distinct indifference sets coincide, i.e. no two forms
/// are proportional. A form that vanishes identically is proportional to
/// everything.
pub fn check_assumption_a(a: &GameMatrix, tol: f64) -> AssumptionReport {
    let forms = indifference_forms(a);
    let mut violating = Vec::new();
    for p in 0..forms.len() {
        for q in p + 1..forms.len() {
            if proportional(&forms[p].coeffs, &forms[q].coeffs, tol) {
                let one = |f: &LinearForm| (f.pair.0 + 1, f.pair.1 + 1);
                violating.push((one(&forms[p]), one(&forms[q])));
            }
        }
    }
    AssumptionReport {
        holds: violating.is_empty(),
        violating_pairs: violating,
    }
}

/// Unit-normalizes both vectors and measures the residual of projecting one
/// onto the span of the other.
pub fn proportional(u: &[f64], v: &[f64], tol: f64) -> bool {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return true;
    }
    let uh: Vec<f64> = u.iter().map(|c| c / nu).collect();
    let vh: Vec<f64> = v.iter().map(|c| c / nv).collect();
    let proj = dot(&uh, &vh);
    let residual = uh
        .iter()
        .zip(&vh)
        .map(|(a, b)| (a - proj * b).powi(2))
        .sum::<f64>()
        .sqrt();
    residual < tol
}

/// Whether `e_k` lies on `Z_{i,j}`, decided by evaluating the payoff
/// difference at the vertex.
pub fn vertex_on_indifference_by_evaluation(a: &GameMatrix, i: usize, j: usize, k: usize) -> Result<bool> {
    let e = SimplexPoint::vertex(a.n(), k);
    let p = payoff_vector(a, &e)?;
    Ok((p[i] - p[j]).abs() <= vertex_tol(a))
}

/// Whether `e_k` lies on `Z_{i,j}`, decided by the coefficient of `x_k` in the
/// form (a vertex lies on a homogeneous linear set iff that coefficient is 0).
pub fn vertex_on_indifference_by_coefficient(a: &GameMatrix, i: usize, j: usize, k: usize) -> Result<bool> {
    let f = indifference_form(a, i, j)?;
    Ok(f.coeffs[k].abs() <= vertex_tol(a))
}

fn vertex_tol(a: &GameMatrix) -> f64 {
    1e-12 * a.max_norm()
}

/// Whether `e_k` lies on `Z_{i,j}`. Both criteria are evaluated and must agree.
pub fn vertex_on_indifference(a: &GameMatrix, i: usize, j: usize, k: usize) -> Result<bool> {
    let by_eval = vertex_on_indifference_by_evaluation(a, i, j, k)?;
    let by_coeff = vertex_on_indifference_by_coefficient(a, i, j, k)?;
    if by_eval != by_coeff {
        return Err(Error::Numerical(format!(
            "vertex test disagrees for e{} on Z{},{}",
            k + 1,
            i + 1,
            j + 1
        )));
    }
    Ok(by_eval)
}

/// Whether every vertex other than `e_i`, `e_j` lies on `Z_{i,j}`, the
/// sufficient condition for the set to be invariant under the replicator flow.
pub fn vertex_condition(a: &GameMatrix, i: usize, j: usize) -> bool {
    (0..a.n())
        .filter(|&k| k != i && k != j)
        .all(|k| vertex_on_indifference(a, i, j, k).unwrap_or(false))
}

/// On-disk game description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub name: String,
    pub n: usize,
    pub payoffs: Vec<Vec<f64>>,
}

/// A game read from disk, diagonal-normalized.
#[derive(Debug, Clone)]
pub struct LoadedGame {
    pub name: String,
    pub matrix: GameMatrix,
    /// Column shifts subtracted by normalization (the original diagonal).
    pub shift: Vec<f64>,
}

impl GameFile {
    pub fn new(name: impl Into<String>, matrix: &GameMatrix) -> Self {
        GameFile {
            name: name.into(),
            n: matrix.n(),
            payoffs: matrix.rows(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serializes")
    }

    /// Validates the matrix and normalizes its diagonal.
    pub fn load(&self) -> Result<LoadedGame> {
        if self.payoffs.len() != self.n {
            return Err(Error::InvalidMatrix(format!(
                "declared n = {} but {} rows given",
                self.n,
                self.payoffs.len()
            )));
        }
        let raw = GameMatrix::from_rows(&self.payoffs)?;
        let (matrix, shift) = normalize_with_shift(&raw);
        Ok(LoadedGame {
            name: self.name.clone(),
            matrix,
            shift,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::sample_simplex;

    fn m(rows: &[[f64; 3]]) -> GameMatrix {
        GameMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn class_5_1() -> GameMatrix {
        m(&[[0., -3., 1.], [-1., 0., -1.], [-3., 1., 0.]])
    }

    fn class_10_1() -> GameMatrix {
        m(&[[0., -1., -1.], [-1., 0., -1.], [-1., -1., 0.]])
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(GameMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0]]).is_err());
        assert!(GameMatrix::from_rows(&[vec![0.0]]).is_err());
        assert!(GameMatrix::from_rows(&[vec![0.0, f64::INFINITY], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn golman_page_raw_normalizes_to_stated_family() {
        for &n in &[2.0_f64, 3.5, 10.0] {
            let raw = m(&[
                [1.0, -n, -1.0 / n],
                [2.0 - n.powi(3), 2.0, 2.0],
                [0.0, 0.0, 0.0],
            ]);
            let got = normalize_diagonal(&raw);
            let want = m(&[
                [0.0, -n - 2.0, -1.0 / n],
                [1.0 - n.powi(3), 0.0, 2.0],
                [-1.0, -2.0, 0.0],
            ]);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn zero_matrix_is_a_fixed_point() {
        let z = m(&[[0.0; 3]; 3]);
        assert_eq!(normalize_diagonal(&z), z);
    }

    #[test]
    fn payoff_examples() {
        let a = class_10_1();
        let p = payoff_vector(&a, &SimplexPoint::barycenter(3)).unwrap();
        for v in &p {
            assert!((v + 2.0 / 3.0).abs() < 1e-15);
        }
        assert!((average_payoff(&a, &SimplexPoint::barycenter(3)).unwrap() + 2.0 / 3.0).abs() < 1e-15);

        let p = payoff_vector(&class_5_1(), &SimplexPoint::vertex(3, 1)).unwrap();
        assert_eq!(p, vec![-3.0, 0.0, 1.0]);

        let wrong = SimplexPoint::barycenter(4);
        assert!(payoff_vector(&a, &wrong).is_err());
        assert!(average_payoff(&a, &wrong).is_err());
    }

    #[test]
    fn unit_vectors_extract_columns() {
        let a = class_5_1();
        for j in 0..3 {
            let p = payoff_vector(&a, &SimplexPoint::vertex(3, j)).unwrap();
            assert_eq!(p, (0..3).map(|i| a.entry(i, j)).collect::<Vec<_>>());
            assert_eq!(average_payoff(&a, &SimplexPoint::vertex(3, j)).unwrap(), 0.0);
        }
    }

    #[test]
    fn form_examples() {
        assert_eq!(indifference_form(&class_5_1(), 0, 1).unwrap().coeffs, vec![1.0, -3.0, 2.0]);
        assert_eq!(indifference_form(&class_10_1(), 0, 1).unwrap().coeffs, vec![1.0, -1.0, 0.0]);
        let n = 4.0;
        let gp = m(&[[0.0, -n - 2.0, -1.0 / n], [1.0 - n * n * n, 0.0, 2.0], [-1.0, -2.0, 0.0]]);
        assert_eq!(indifference_form(&gp, 0, 2).unwrap().coeffs, vec![1.0, -n, -1.0 / n]);
        assert!(indifference_form(&gp, 1, 1).is_err());
        assert_eq!(indifference_form(&class_5_1(), 0, 1).unwrap().equation(), "x1 - 3x2 + 2x3 = 0");
    }

    #[test]
    fn assumption_a() {
        let six_two = m(&[[0., -1., -3.], [1., 0., -5.], [-1., -3., 0.]]);
        assert!(check_assumption_a(&six_two, PROPORTIONALITY_TOL).holds);
        let zero = m(&[[0.0; 3]; 3]);
        let rep = check_assumption_a(&zero, PROPORTIONALITY_TOL);
        assert!(!rep.holds);
        assert_eq!(rep.violating_pairs.len(), 3);
    }

    #[test]
    fn vertex_tests() {
        assert!(vertex_on_indifference(&class_10_1(), 0, 1, 2).unwrap());
        assert!(!vertex_on_indifference(&class_5_1(), 0, 1, 2).unwrap());
    }

    #[test]
    fn normalization_preserves_forms_against_payoff_oracle() {
        let raw = m(&[[2.0, -1.5, 0.3], [0.7, -4.0, 1.1], [-2.2, 0.4, 3.3]]);
        let a = normalize_diagonal(&raw);
        assert!(a.is_normalized());
        // Oracle: payoff differences computed directly from the raw matrix.
        for x in sample_simplex(3, 100, 5) {
            let xs = x.as_slice();
            let raw_pay: Vec<f64> = (0..3).map(|i| (0..3).map(|j| raw.entry(i, j) * xs[j]).sum()).collect();
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    let f = indifference_form(&a, i, j).unwrap();
                    assert!((f.eval(xs) - (raw_pay[i] - raw_pay[j])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn game_file_loader_records_shift() {
        let gf = GameFile::parse(r#"{"name":"t","n":2,"payoffs":[[1,2],[3,5]]}"#).unwrap();
        let g = gf.load().unwrap();
        assert_eq!(g.shift, vec![1.0, 5.0]);
        assert_eq!(g.matrix.rows(), vec![vec![0.0, -3.0], vec![2.0, 0.0]]);
        let bad = GameFile::parse(r#"{"name":"t","n":3,"payoffs":[[1,2],[3,5]]}"#).unwrap();
        assert!(bad.load().is_err());
    }
}
