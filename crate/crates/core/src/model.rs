//! SISO state-space systems, the degree-2 Kronecker lift, and the
//! S-procedure constraint structure that ties the lifted input `w = u·x`
//! back to the unit-peak input bound.
//!
//! Lifted coordinates follow row-major Kronecker ordering: the entry of
//! `ζ = x ⊗ x` holding `x_p·x_q` has 1-based index `(p-1)·n + q`. The two
//! copies of each cross product (`x_p x_q` and `x_q x_p`) stay separate
//! coordinates.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::linalg::{eigenvalues, kron, kron_power, kron_sum, Matrix, Spectrum};

/// Systems whose spectral abscissa is not below this are rejected.
pub const STABILITY_MARGIN: f64 = -1e-9;

/// A vector given either flat or as a single row/column of nested arrays.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum VectorSpec {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl VectorSpec {
    fn flatten(&self, field: &'static str) -> Result<Vec<f64>, Error> {
        match self {
            VectorSpec::Flat(v) => Ok(v.clone()),
            VectorSpec::Nested(rows) => {
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if r == 1 {
                    Ok(rows[0].clone())
                } else if rows.iter().all(|row| row.len() == 1) {
                    Ok(rows.iter().map(|row| row[0]).collect())
                } else {
                    Err(Error::Dimension {
                        field,
                        expected: (r, 1),
                        found: (r, c),
                    })
                }
            }
        }
    }
}

impl From<Vec<f64>> for VectorSpec {
    fn from(v: Vec<f64>) -> Self {
        VectorSpec::Flat(v)
    }
}

/// Plain-data description of a system as read from a file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemRecord {
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub name: Option<String>,
    #[cfg_attr(feature = "serde", serde(rename = "A"))]
    pub a: Vec<Vec<f64>>,
    #[cfg_attr(feature = "serde", serde(rename = "B"))]
    pub b: VectorSpec,
    #[cfg_attr(feature = "serde", serde(rename = "C"))]
    pub c: VectorSpec,
}

/// A Hurwitz-stable single-input single-output system `ẋ = Ax + Bu, y = Cx`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    spectrum: Spectrum,
}

impl LtiSystem {
    /// Validates shapes (A n×n, B n×1, C 1×n) and stability.
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self, Error> {
        let n = a.rows();
        if n == 0 || !a.is_square() {
            return Err(Error::Dimension {
                field: "A",
                expected: (n.max(1), n.max(1)),
                found: a.shape(),
            });
        }
        if b.shape() != (n, 1) {
            return Err(Error::Dimension {
                field: "B",
                expected: (n, 1),
                found: b.shape(),
            });
        }
        if c.shape() != (1, n) {
            return Err(Error::Dimension {
                field: "C",
                expected: (1, n),
                found: c.shape(),
            });
        }
        for (field, m) in [("A", &a), ("B", &b), ("C", &c)] {
            if !m.is_finite() {
                return Err(Error::InvalidArgument {
                    name: field,
                    reason: String::from("entries must be finite"),
                });
            }
        }
        let spectrum = eigenvalues(&a)?;
        if !(spectrum.max_real_part < STABILITY_MARGIN) {
            return Err(Error::Unstable {
                max_real_part: spectrum.max_real_part,
            });
        }
        Ok(LtiSystem { a, b, c, spectrum })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Upper end of the α range for the degree-1 ellipsoid LMI,
    /// `-2·max Re λ(A)`.
    pub fn kappa(&self) -> f64 {
        -2.0 * self.spectrum.max_real_part
    }

    /// Same A and C with a different input matrix.
    pub fn with_input(&self, b: Matrix) -> Result<Self, Error> {
        if b.shape() != (self.n(), 1) {
            return Err(Error::Dimension {
                field: "B",
                expected: (self.n(), 1),
                found: b.shape(),
            });
        }
        Ok(LtiSystem {
            a: self.a.clone(),
            b,
            c: self.c.clone(),
            spectrum: self.spectrum.clone(),
        })
    }
}

/// Builds a validated system from a file record.
pub fn load_system(record: &SystemRecord) -> Result<LtiSystem, Error> {
    let n = record.a.len();
    if let Some(bad) = record.a.iter().find(|row| row.len() != n) {
        return Err(Error::Dimension {
            field: "A",
            expected: (n, n),
            found: (n, bad.len()),
        });
    }
    let a = Matrix::from_rows(&record.a)?;
    let b = record.b.flatten("B")?;
    let c = record.c.flatten("C")?;
    if b.len() != n {
        return Err(Error::Dimension {
            field: "B",
            expected: (n, 1),
            found: (b.len(), 1),
        });
    }
    if c.len() != n {
        return Err(Error::Dimension {
            field: "C",
            expected: (1, n),
            found: (1, c.len()),
        });
    }
    let b = Matrix::new(n, 1, b)?;
    let c = Matrix::new(1, n, c)?;
    LtiSystem::new(a, b, c)
}

/// Degree-2 lift: `ζ̇ = A^{⊕2} ζ + B^{⊕2} w`, `η = C^{⊗2} ζ` with `ζ = x⊗x`,
/// `w = u·x` and `η = y²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    pub a_lift: Matrix,
    pub b_lift: Matrix,
    pub c_lift: Matrix,
    pub base_dim: usize,
}

impl LiftedSystem {
    pub const DEGREE: usize = 2;

    pub fn degree(&self) -> usize {
        Self::DEGREE
    }

    /// `-2·max Re λ(A^{⊕2})`.
    pub fn kappa(&self) -> Result<f64, Error> {
        Ok(-2.0 * eigenvalues(&self.a_lift)?.max_real_part)
    }
}

pub fn lift(sys: &LtiSystem) -> Result<LiftedSystem, Error> {
    let n = sys.n();
    if n < 2 {
        return Err(Error::LiftingNeedsTwoStates { n });
    }
    Ok(LiftedSystem {
        a_lift: kron_sum(sys.a(), 2),
        b_lift: kron_sum(sys.b(), 2),
        c_lift: kron_power(sys.c(), 2),
        base_dim: n,
    })
}

/// 1-based index of `x_p·x_q` inside `x ⊗ x` (p, q are 1-based).
pub fn zeta_index(n: usize, p: usize, q: usize) -> usize {
    (p - 1) * n + q
}

/// Constraint data linking the lifted input `w = u·x` to `ζ = x ⊗ x`.
///
/// * `w_i² ≤ ζ[inequality_indices[i]]` follows from `u² ≤ 1`.
/// * `ζᵀ E w = 0` for every `E` in `equality_matrices` follows from
///   `w_i x_j = w_j x_i`, multiplied through by each `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SProcedureStructure {
    pub n: usize,
    /// 1-based ζ index of `x_i²`, for i = 1..n.
    pub inequality_indices: Vec<usize>,
    /// n²×n matrices, ordered by pair (i, j), i < j, then k = 1..n.
    pub equality_matrices: Vec<Matrix>,
}

pub fn sprocedure_structure(n: usize) -> Result<SProcedureStructure, Error> {
    if n < 2 {
        return Err(Error::LiftingNeedsTwoStates { n });
    }
    let inequality_indices = (1..=n).map(|i| zeta_index(n, i, i)).collect();
    let mut equality_matrices = Vec::with_capacity(n * n * (n - 1) / 2);
    for i in 1..=n {
        for j in i + 1..=n {
            for k in 1..=n {
                // w_i x_j x_k - w_j x_i x_k
                let mut e = Matrix::zeros(n * n, n);
                e[(zeta_index(n, j, k) - 1, i - 1)] = 1.0;
                e[(zeta_index(n, i, k) - 1, j - 1)] = -1.0;
                equality_matrices.push(e);
            }
        }
    }
    Ok(SProcedureStructure {
        n,
        inequality_indices,
        equality_matrices,
    })
}

/// Residual of the lifted dynamics at state `x` and input `u`:
/// `‖ d/dt(x⊗x) − (A^{⊕2}(x⊗x) + B^{⊕2}(u·x)) ‖₂` with the derivative taken
/// by the chain rule under `ẋ = Ax + Bu`.
pub fn verify_lift(sys: &LtiSystem, lifted: &LiftedSystem, x: &[f64], u: f64) -> f64 {
    assert_eq!(x.len(), sys.n(), "state has wrong length");
    let xv = Matrix::column(x);
    let xdot = &(sys.a() * &xv) + &sys.b().scale(u);
    let chain = &kron(&xdot, &xv) + &kron(&xv, &xdot);
    let zeta = kron(&xv, &xv);
    let w = xv.scale(u);
    let lifted_rhs = &(&lifted.a_lift * &zeta) + &(&lifted.b_lift * &w);
    (&chain - &lifted_rhs).norm_fro()
}

/// `x ⊗ x` as a flat vector.
pub fn lift_state(x: &[f64]) -> Vec<f64> {
    let mut z = vec![0.0; x.len() * x.len()];
    for (p, xp) in x.iter().enumerate() {
        for (q, xq) in x.iter().enumerate() {
            z[p * x.len() + q] = xp * xq;
        }
    }
    z
}
