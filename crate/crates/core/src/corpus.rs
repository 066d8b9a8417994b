//! Reference games: eight Zeeman classes with their expected indifference
//! equations, and two parametric families.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameFile, GameMatrix, LinearForm};

/// Qualitative facts a fixture is expected to exhibit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    pub num_equilibria: usize,
    pub stable: &'static [&'static str],
    /// Pairs satisfying the vertex condition, 1-based.
    pub invariant_pairs: &'static [(usize, usize)],
    pub cyclic: bool,
    /// Vertices (1-based) at which the sector theorem's hypotheses hold.
    pub theorem1: &'static [usize],
    /// `(i, j)` (1-based) at which the invariant-set theorem's hypotheses hold.
    pub theorem2: &'static [(usize, usize)],
    /// RD and BRD basins are expected to coincide for every stable equilibrium.
    pub basins_coincide: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassFixture {
    pub label: &'static str,
    pub rows: [[f64; 3]; 3],
    pub sign_reversal: bool,
    /// Reference equations for `Z_{1,2}`, `Z_{1,3}`, `Z_{2,3}` as integer coefficients.
    pub reference_forms: [[i64; 3]; 3],
    /// Pairs (1-based) whose reference equation is known to be inconsistent
    /// with the reference matrix.
    pub known_misprints: &'static [(usize, usize)],
    pub signature: Signature,
}

impl ClassFixture {
    pub fn matrix(&self) -> GameMatrix {
        GameMatrix::from_rows(&self.rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("fixture is valid")
    }

    /// The reference equation for pair `(i, j)` (0-based, `i < j`).
    pub fn reference_form(&self, i: usize, j: usize) -> Option<[i64; 3]> {
        match (i, j) {
            (0, 1) => Some(self.reference_forms[0]),
            (0, 2) => Some(self.reference_forms[1]),
            (1, 2) => Some(self.reference_forms[2]),
            _ => None,
        }
    }

    pub fn game_file(&self) -> GameFile {
        GameFile::new(format!("class {}", self.label), &self.matrix())
    }
}

pub const LABELS: [&str; 8] = ["5_1", "6_1", "7_1", "10_1", "4_1", "6_2", "7_2", "9_1"];

static FIXTURES: [ClassFixture; 8] = [
    ClassFixture {
        label: "5_1",
        rows: [[0., -3., 1.], [-1., 0., -1.], [-3., 1., 0.]],
        sign_reversal: true,
        reference_forms: [[1, -3, 2], [3, -4, 1], [2, -1, -1]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 3,
            stable: &["e1"],
            invariant_pairs: &[],
            cyclic: true,
            theorem1: &[],
            theorem2: &[],
            basins_coincide: false,
        },
    },
    ClassFixture {
        label: "6_1",
        rows: [[0., -1., -1.], [1., 0., -3.], [-1., -1., 0.]],
        sign_reversal: true,
        reference_forms: [[1, 1, -2], [1, 0, -1], [2, 1, -3]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 5,
            stable: &["e2", "e3"],
            invariant_pairs: &[(1, 3)],
            cyclic: false,
            theorem1: &[3],
            theorem2: &[(3, 1)],
            basins_coincide: false,
        },
    },
    ClassFixture {
        label: "7_1",
        rows: [[0., 6., -4.], [-3., 0., 5.], [-1., 3., 0.]],
        sign_reversal: false,
        reference_forms: [[3, 6, -9], [1, 3, -4], [2, 3, -5]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 3,
            stable: &["e1", "interior"],
            invariant_pairs: &[],
            cyclic: true,
            theorem1: &[],
            theorem2: &[],
            basins_coincide: false,
        },
    },
    ClassFixture {
        label: "10_1",
        rows: [[0., -1., -1.], [-1., 0., -1.], [-1., -1., 0.]],
        sign_reversal: true,
        reference_forms: [[1, -1, 0], [1, 0, -1], [0, 1, -1]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 7,
            stable: &["e1", "e2", "e3"],
            invariant_pairs: &[(1, 2), (1, 3), (2, 3)],
            cyclic: false,
            theorem1: &[1, 2, 3],
            theorem2: &[(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)],
            basins_coincide: true,
        },
    },
    ClassFixture {
        label: "4_1",
        rows: [[0., -3., 1.], [-3., 0., 1.], [-1., -1., 0.]],
        sign_reversal: true,
        reference_forms: [[1, -1, 0], [1, -2, 1], [2, -1, -1]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 3,
            stable: &["e1", "e2"],
            invariant_pairs: &[(1, 2)],
            cyclic: false,
            theorem1: &[1, 2],
            theorem2: &[(1, 2), (2, 1)],
            basins_coincide: true,
        },
    },
    ClassFixture {
        label: "6_2",
        rows: [[0., -1., -3.], [1., 0., -5.], [-1., -3., 0.]],
        sign_reversal: true,
        reference_forms: [[1, 1, -2], [1, 2, -3], [2, 3, -5]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 3,
            stable: &["e2", "e3"],
            invariant_pairs: &[],
            cyclic: false,
            theorem1: &[2, 3],
            theorem2: &[],
            basins_coincide: false,
        },
    },
    ClassFixture {
        label: "7_2",
        rows: [[0., 1., -1.], [-1., 0., 1.], [-1., 1., 0.]],
        sign_reversal: false,
        // Z_{1,2} is row 1 minus row 2 = (1, 1, -2); the table prints x1 + x2 - x3.
        reference_forms: [[1, 1, -1], [1, 0, -1], [0, 1, -1]],
        known_misprints: &[(1, 2)],
        signature: Signature {
            num_equilibria: 3,
            stable: &["e1", "e2_3"],
            invariant_pairs: &[(1, 3), (2, 3)],
            cyclic: false,
            theorem1: &[1],
            theorem2: &[(1, 3)],
            basins_coincide: true,
        },
    },
    ClassFixture {
        label: "9_1",
        rows: [[0., -1., 3.], [-1., 0., 3.], [1., 1., 0.]],
        sign_reversal: false,
        reference_forms: [[1, -1, 0], [1, 2, -3], [2, 1, -3]],
        known_misprints: &[],
        signature: Signature {
            num_equilibria: 3,
            stable: &["e1_3", "e2_3"],
            invariant_pairs: &[(1, 2)],
            cyclic: false,
            theorem1: &[],
            theorem2: &[],
            basins_coincide: true,
        },
    },
];

pub fn all_fixtures() -> &'static [ClassFixture] {
    &FIXTURES
}

/// Canonical label: accepts `6_1`, `6₁`, `61` and a leading `C`.
pub fn canonical_label(label: &str) -> String {
    let mut out = String::new();
    for ch in label.trim().trim_start_matches(['C', 'c']).chars() {
        match ch {
            '₀'..='₉' => {
                if !out.contains('_') {
                    out.push('_');
                }
                out.push(char::from_digit(ch as u32 - '₀' as u32, 10).unwrap());
            }
            _ => out.push(ch),
        }
    }
    if !out.contains('_') && out.len() >= 2 {
        let (head, tail) = out.split_at(out.len() - 1);
        out = format!("{head}_{tail}");
    }
    out
}

pub fn zeeman_fixture(label: &str) -> Result<&'static ClassFixture> {
    let key = canonical_label(label);
    FIXTURES
        .iter()
        .find(|f| f.label == key)
        .ok_or_else(|| Error::NotFound(format!("unknown class '{label}'; expected one of {}", LABELS.join(", "))))
}

/// The normalized game of Golman and Page for `N > 1`.
pub fn golman_page(n: f64) -> Result<GameMatrix> {
    if !(n > 1.0) || !n.is_finite() {
        return Err(Error::Domain(format!("family parameter must exceed 1, got {n}")));
    }
    GameMatrix::from_rows(&[
        vec![0.0, -n - 2.0, -1.0 / n],
        vec![1.0 - n * n * n, 0.0, 2.0],
        vec![-1.0, -2.0, 0.0],
    ])
}

/// The reference `Z_{1,3}` equation of the Golman-Page family.
pub fn golman_page_z13(n: f64) -> [f64; 3] {
    [1.0, -n, -1.0 / n]
}

/// `A_n`; `n = 1` is class 7_1.
pub fn a_n_family(n: i64) -> Result<GameMatrix> {
    if n < 1 {
        return Err(Error::Domain(format!("family index must be at least 1, got {n}")));
    }
    let m = n as f64;
    GameMatrix::from_rows(&[
        vec![0.0, 6.0, -(3.0 * m + 1.0) / m],
        vec![-(2.0 * m + 1.0) / m, 0.0, 5.0],
        vec![-1.0 / m, 3.0, 0.0],
    ])
}

/// `((3n + 1) / (3n + 2), 0, 1 / (3n + 2))`.
pub fn a_n_edge_equilibrium(n: i64) -> [f64; 3] {
    let m = n as f64;
    [(3.0 * m + 1.0) / (3.0 * m + 2.0), 0.0, 1.0 / (3.0 * m + 2.0)]
}

/// How a computed form relates to a reference equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormMatch {
    PositiveMultiple,
    NegativeMultiple,
    NotProportional,
}

impl FormMatch {
    /// Same equation: the zero sets coincide.
    pub fn same_set(self) -> bool {
        self != FormMatch::NotProportional
    }
}

/// Compares a computed form to reference integer coefficients. Integer-valued
/// forms are compared exactly through 2x2 cross products; others with a
/// relative tolerance.
pub fn compare_form(computed: &LinearForm, reference: &[i64]) -> FormMatch {
    let c = &computed.coeffs;
    if c.len() != reference.len() {
        return FormMatch::NotProportional;
    }
    let integral = c.iter().all(|v| v.fract() == 0.0 && v.abs() < 1e15);
    let mut dot = 0.0;
    for a in 0..c.len() {
        dot += c[a] * reference[a] as f64;
        for b in a + 1..c.len() {
            let cross = if integral {
                (c[a] as i128) * reference[b] as i128 - (c[b] as i128) * reference[a] as i128
            } else {
                let x = c[a] * reference[b] as f64 - c[b] * reference[a] as f64;
                let scale = (c[a].abs() + c[b].abs()) * (reference[a].abs() + reference[b].abs()) as f64;
                if x.abs() <= 1e-12 * scale.max(1.0) {
                    0
                } else {
                    1
                }
            };
            if cross != 0 {
                return FormMatch::NotProportional;
            }
        }
    }
    if reference.iter().all(|v| *v == 0) || c.iter().all(|v| *v == 0.0) {
        FormMatch::NotProportional
    } else if dot > 0.0 {
        FormMatch::PositiveMultiple
    } else {
        FormMatch::NegativeMultiple
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::indifference_form;

    #[test]
    fn labels_resolve() {
        for l in ["5_1", "5₁", "51", "C5_1"] {
            assert_eq!(zeeman_fixture(l).unwrap().label, "5_1");
        }
        assert_eq!(zeeman_fixture("10₁").unwrap().label, "10_1");
        assert!(matches!(zeeman_fixture("3_1"), Err(Error::NotFound(_))));
    }

    #[test]
    fn reference_matrices() {
        assert_eq!(zeeman_fixture("5_1").unwrap().rows, [[0., -3., 1.], [-1., 0., -1.], [-3., 1., 0.]]);
        assert_eq!(zeeman_fixture("7_2").unwrap().rows, [[0., 1., -1.], [-1., 0., 1.], [-1., 1., 0.]]);
        assert!(!zeeman_fixture("7_2").unwrap().sign_reversal);
        for f in all_fixtures() {
            assert!(f.matrix().is_normalized());
        }
    }

    #[test]
    fn families() {
        let g = golman_page(2.0).unwrap();
        assert_eq!(g.rows(), vec![vec![0., -4., -0.5], vec![-7., 0., 2.], vec![-1., -2., 0.]]);
        assert!(golman_page(1.0).is_err());
        assert_eq!(a_n_family(1).unwrap(), zeeman_fixture("7_1").unwrap().matrix());
        assert!(a_n_family(0).is_err());
        let e = a_n_edge_equilibrium(100);
        assert!((e[0] - 1.0).abs() < 0.01);
    }

    #[test]
    fn form_comparison() {
        let f = LinearForm { pair: (0, 1), coeffs: vec![-1.0, -1.0, 2.0] };
        assert_eq!(compare_form(&f, &[1, 1, -2]), FormMatch::NegativeMultiple);
        assert_eq!(compare_form(&f, &[-2, -2, 4]), FormMatch::PositiveMultiple);
        assert_eq!(compare_form(&f, &[1, 1, -1]), FormMatch::NotProportional);
        for n in [2.0, 5.0, 10.0] {
            let z = indifference_form(&golman_page(n).unwrap(), 0, 2).unwrap();
            assert_eq!(z.coeffs, golman_page_z13(n).to_vec());
        }
    }
}
