//! Dense row-major real matrices, Kronecker products and the small set of
//! factorizations used by the bound computations.
//!
//! Everything here works on tiny dense matrices (the largest lifted
//! state matrix in practice is 9×9), so there are no blocked or sparse
//! code paths.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

/// Relative symmetry tolerance used by [`cholesky`] and friends.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Errors raised by the linear algebra layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Data length does not match `rows * cols`.
    DataLength { expected: usize, found: usize },
    /// A NaN or infinite entry at (row, col).
    NonFinite { row: usize, col: usize },
    /// Operand shapes are not compatible.
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// The operation needs a square matrix.
    NotSquare { rows: usize, cols: usize },
    /// Relative asymmetry above [`SYMMETRY_TOL`].
    NotSymmetric { asymmetry: f64 },
    /// Cholesky broke down at this 1-based pivot.
    NotPositiveDefinite { pivot: usize },
    /// LU elimination found a zero pivot (1-based).
    Singular { pivot: usize },
    /// An iterative eigenvalue routine hit its iteration cap.
    NoConvergence { dim: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DataLength { expected, found } => {
                write!(f, "expected {expected} entries, found {found}")
            }
            LinalgError::NonFinite { row, col } => {
                write!(f, "non-finite entry at ({row}, {col})")
            }
            LinalgError::ShapeMismatch { expected, found } => write!(
                f,
                "shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            LinalgError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            LinalgError::NotSymmetric { asymmetry } => {
                write!(f, "matrix is not symmetric (relative asymmetry {asymmetry:e})")
            }
            LinalgError::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite (pivot {pivot})")
            }
            LinalgError::Singular { pivot } => write!(f, "matrix is singular (pivot {pivot})"),
            LinalgError::NoConvergence { dim } => {
                write!(f, "eigenvalue iteration did not converge for a {dim}x{dim} matrix")
            }
        }
    }
}

/// Dense real matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::ShapeMismatch {
                    expected: (1, cols),
                    found: (1, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Column vector (n×1).
    pub fn column(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Row vector (1×n).
    pub fn row(values: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise difference; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    pub fn dot(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrize(&self) -> Matrix {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    /// `max |a_ij - a_ji| / max(1, max |a_ij|)`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / self.max_abs().max(1.0)
    }

    /// Copy of the `rows × cols` block starting at (r0, c0).
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut b = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                b[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        b
    }

    /// Writes `src` into self with its top-left corner at (r0, c0).
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Matrix) {
        for i in 0..src.rows {
            for j in 0..src.cols {
                self[(r0 + i, c0 + j)] = src[(i, j)];
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_same_shape(&self, other: &Matrix) {
        assert_eq!(
            self.shape(),
            other.shape(),
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "cannot multiply {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.check_same_shape(rhs);
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.check_same_shape(rhs);
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.6e}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// `a ⊗ b`: block (i, j) of the result is `a[i, j] * b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = b.shape();
    let mut out = Matrix::zeros(a.rows * p, a.cols * q);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker power `a ⊗ a ⊗ … ⊗ a` (`d` factors); `d = 0` gives `[[1]]`.
pub fn kron_power(a: &Matrix, d: usize) -> Matrix {
    let mut out = Matrix::identity(1);
    for _ in 0..d {
        out = kron(a, &out);
    }
    out
}

/// Kronecker sum `Σ_k I^{⊗(k-1)} ⊗ a ⊗ I^{⊗(d-k)}`.
///
/// The identity factors are sized by the row dimension of `a`, so a
/// non-square (column) input is allowed: for `d = 2` and an n×1 input
/// this gives the n²×n lifted input matrix.
///
/// # Panics
/// If `d == 0`.
pub fn kron_sum(a: &Matrix, d: usize) -> Matrix {
    assert!(d >= 1, "kron_sum needs d >= 1");
    let eye = Matrix::identity(a.rows);
    let mut total: Option<Matrix> = None;
    for k in 1..=d {
        let left = kron_power(&eye, k - 1);
        let right = kron_power(&eye, d - k);
        let term = kron(&kron(&left, a), &right);
        total = Some(match total {
            None => term,
            Some(t) => &t + &term,
        });
    }
    total.expect("d >= 1")
}

/// Minimal complex number for eigenvalue output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

/// Eigenvalues of a square matrix together with the spectral abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex>,
    pub max_real_part: f64,
}

impl Spectrum {
    fn from_eigenvalues(eigenvalues: Vec<Complex>) -> Self {
        let max_real_part = eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        Spectrum {
            eigenvalues,
            max_real_part,
        }
    }

    /// Eigenvalues ordered by (real, imaginary) part.
    pub fn sorted(&self) -> Vec<Complex> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(core::cmp::Ordering::Equal))
        });
        v
    }
}

fn require_square(a: &Matrix) -> Result<usize, LinalgError> {
    if a.is_square() {
        Ok(a.rows)
    } else {
        Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        })
    }
}

/// Eigenvalues by Householder reduction to upper Hessenberg form followed
/// by Francis double-shift QR iteration.
pub fn eigenvalues(a: &Matrix) -> Result<Spectrum, LinalgError> {
    let n = require_square(a)?;
    if n == 0 {
        return Ok(Spectrum::from_eigenvalues(Vec::new()));
    }
    let mut h = hessenberg(a);
    let eig = hessenberg_qr(&mut h)?;
    Ok(Spectrum::from_eigenvalues(eig))
}

fn hessenberg(a: &Matrix) -> Matrix {
    let n = a.rows;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let alpha_norm = libm::sqrt((k + 1..n).map(|i| h[(i, k)] * h[(i, k)]).sum());
        if alpha_norm == 0.0 {
            continue;
        }
        let alpha = if h[(k + 1, k)] > 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2vvᵀ/vᵀv) H
        for j in 0..n {
            let s: f64 = (0..v.len()).map(|i| v[i] * h[(k + 1 + i, j)]).sum();
            let f = 2.0 * s / vnorm2;
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= f * v[i];
            }
        }
        // H <- H (I - 2vvᵀ/vᵀv)
        for i in 0..n {
            let s: f64 = (0..v.len()).map(|j| h[(i, k + 1 + j)] * v[j]).sum();
            let f = 2.0 * s / vnorm2;
            for j in 0..v.len() {
                h[(i, k + 1 + j)] -= f * v[j];
            }
        }
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

/// Francis double-shift QR on an upper Hessenberg matrix (EISPACK `hqr`
/// structure, 1-based indices internally).
fn hessenberg_qr(h: &mut Matrix) -> Result<Vec<Complex>, LinalgError> {
    let n = h.rows;
    // 1-based view
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let sign = |a: f64, b: f64| if b >= 0.0 { a.abs() } else { -a.abs() };
    let total_cap = 100 * n;
    let mut total_its = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[nn - 1][nn - 1];
                let mut w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = libm::sqrt(q.abs());
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == 30 || total_its >= total_cap {
                        return Err(LinalgError::NoConvergence { dim: n });
                    }
                    if its == 10 || its == 20 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    total_its += 1;
                    let mut m = nn - 2;
                    let (mut p, mut q, mut r);
                    let mut z;
                    loop {
                        z = a[m][m];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - rr - ss;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign(libm::sqrt(p * p + q * q + r * r), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    pp += r * a[k + 2][j];
                                    a[k + 2][j] -= pp * z;
                                }
                                a[k + 1][j] -= pp * y;
                                a[k][j] -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * a[i][k] + y * a[i][k + 1];
                                if k != nn - 1 {
                                    pp += z * a[i][k + 2];
                                    a[i][k + 2] -= pp * r;
                                }
                                a[i][k + 1] -= pp * q;
                                a[i][k] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. The input is symmetrized first.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), LinalgError> {
    let n = require_square(a)?;
    let mut m = a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = m.max_abs();
    if n <= 1 || scale == 0.0 {
        return Ok(((0..n).map(|i| m[(i, i)]).collect(), v));
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off <= (f64::EPSILON * scale) * (f64::EPSILON * scale) {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = {
                    let tt = 1.0 / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    if theta < 0.0 {
                        -tt
                    } else {
                        tt
                    }
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, col)] = v[(k, i)];
        }
    }
    Ok((values, vecs))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Matrix) -> Result<f64, LinalgError> {
    let (vals, _) = symmetric_eigen(a)?;
    Ok(vals.first().copied().unwrap_or(f64::INFINITY))
}

/// One-sided Jacobi SVD of a square matrix: `a = u · diag(s) · vᵀ`.
pub fn svd_square(a: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix), LinalgError> {
    let n = require_square(a)?;
    let mut u = a.clone();
    let mut v = Matrix::identity(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    alpha += u[(i, p)] * u[(i, p)];
                    beta += u[(i, q)] * u[(i, q)];
                    gamma += u[(i, p)] * u[(i, q)];
                }
                if gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = {
                    let tt = 1.0 / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                    if zeta < 0.0 {
                        -tt
                    } else {
                        tt
                    }
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..n {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma = vec![0.0; n];
    for j in 0..n {
        let norm = libm::sqrt((0..n).map(|i| u[(i, j)] * u[(i, j)]).sum());
        sigma[j] = norm;
        if norm > 0.0 {
            for i in 0..n {
                u[(i, j)] /= norm;
            }
        }
    }
    Ok((u, sigma, v))
}

/// Cholesky factor of a symmetric positive definite matrix.
///
/// The input must be symmetric to [`SYMMETRY_TOL`] (relative); it is
/// symmetrized before factoring. On breakdown the 1-based pivot index is
/// reported.
pub fn cholesky(a: &Matrix) -> Result<Matrix, LinalgError> {
    require_square(a)?;
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(LinalgError::NotSymmetric { asymmetry: asym });
    }
    cholesky_symmetrized(&a.symmetrize())
}

pub(crate) fn cholesky_symmetrized(a: &Matrix) -> Result<Matrix, LinalgError> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j + 1 });
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `l lᵀ x = rhs` given a lower-triangular Cholesky factor.
pub fn cholesky_solve(l: &Matrix, rhs: &Matrix) -> Matrix {
    let n = l.rows;
    assert_eq!(rhs.rows, n, "right-hand side has wrong row count");
    let mut x = rhs.clone();
    for c in 0..rhs.cols {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `a x = rhs` for symmetric positive definite `a`.
pub fn solve_spd(a: &Matrix, rhs: &Matrix) -> Result<Matrix, LinalgError> {
    if rhs.rows != a.rows {
        return Err(LinalgError::ShapeMismatch {
            expected: (a.rows, rhs.cols),
            found: rhs.shape(),
        });
    }
    let l = cholesky(a)?;
    Ok(cholesky_solve(&l, rhs))
}

/// Solves `a x = rhs` by LU with partial pivoting.
pub fn solve(a: &Matrix, rhs: &Matrix) -> Result<Matrix, LinalgError> {
    let n = require_square(a)?;
    if rhs.rows != n {
        return Err(LinalgError::ShapeMismatch {
            expected: (n, rhs.cols),
            found: rhs.shape(),
        });
    }
    let mut lu = a.clone();
    let mut x = rhs.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= scale * f64::EPSILON * 1e-3 {
            return Err(LinalgError::Singular { pivot: k + 1 });
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            for j in 0..x.cols {
                let tmp = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..x.cols {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    for c in 0..x.cols {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
///
/// # Panics
/// If `a` is not square.
pub fn expm(a: &Matrix) -> Matrix {
    let n = a.rows;
    assert!(a.is_square(), "expm needs a square matrix");
    let norm = a.norm_one();
    if norm == 0.0 {
        return Matrix::identity(n);
    }
    let s = if norm > THETA13 {
        libm::ceil(libm::log2(norm / THETA13)) as i32
    } else {
        0
    };
    let a = a.scale(libm::pow(2.0, -(s as f64)));
    let b = &PADE13;
    let eye = Matrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Matrix {
        let mut m = a6.scale(c6);
        m = &m + &a4.scale(c4);
        m = &m + &a2.scale(c2);
        &m + &eye.scale(c0)
    };
    let u_inner = {
        let hi = {
            let mut m = a6.scale(b[13]);
            m = &m + &a4.scale(b[11]);
            m = &m + &a2.scale(b[9]);
            &a6 * &m
        };
        &hi + &lin(b[7], b[5], b[3], b[1])
    };
    let u = &a * &u_inner;
    let v = {
        let hi = {
            let mut m = a6.scale(b[12]);
            m = &m + &a4.scale(b[10]);
            m = &m + &a2.scale(b[8]);
            &a6 * &m
        };
        &hi + &lin(b[6], b[4], b[2], b[0])
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p).expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0; 3]),
            Err(LinalgError::DataLength { expected: 4, found: 3 })
        ));
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0, f64::NAN, 0.0, 1.0]),
            Err(LinalgError::NonFinite { row: 0, col: 1 })
        ));
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn kron_identity_and_blocks() {
        let b = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        assert_eq!(kron(&Matrix::identity(1), &b), b);

        let k = kron(&m(&[&[1.0, 2.0], &[3.0, 4.0]]), &m(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k.block(0, 0, 2, 2), m(&[&[0.0, 1.0], &[1.0, 0.0]]));
        assert_eq!(k.block(0, 2, 2, 2), m(&[&[0.0, 2.0], &[2.0, 0.0]]));
        assert_eq!(k.block(2, 0, 2, 2), m(&[&[0.0, 3.0], &[3.0, 0.0]]));
        assert_eq!(k.block(2, 2, 2, 2), m(&[&[0.0, 4.0], &[4.0, 0.0]]));
    }

    #[test]
    fn kron_power_cases() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(kron_power(&a, 0), Matrix::identity(1));
        assert_eq!(kron_power(&a, 1), a);
        assert_eq!(kron_power(&m(&[&[2.0]]), 3), m(&[&[8.0]]));
        assert_eq!(kron_power(&a, 2), kron(&a, &a));
    }

    #[test]
    fn kron_sum_cases() {
        let a = m(&[&[0.0, 1.0], &[-4.0, -4.0]]);
        assert_eq!(kron_sum(&a, 1), a);
        let expected = m(&[
            &[0.0, 1.0, 1.0, 0.0],
            &[-4.0, -4.0, 0.0, 1.0],
            &[-4.0, 0.0, -4.0, 1.0],
            &[0.0, -4.0, -4.0, -8.0],
        ]);
        assert_eq!(kron_sum(&a, 2), expected);

        let (b1, b2) = (0.7, -1.3);
        let b = Matrix::column(&[b1, b2]);
        let expected = m(&[&[2.0 * b1, 0.0], &[b2, b1], &[b2, b1], &[0.0, 2.0 * b2]]);
        assert_eq!(kron_sum(&b, 2), expected);

        // three-term sum has n^3 rows
        assert_eq!(kron_sum(&a, 3).shape(), (8, 8));
    }

    #[test]
    fn eigenvalues_small_cases() {
        let s = eigenvalues(&m(&[&[0.0, 1.0], &[-4.0, -4.0]])).unwrap();
        for z in &s.eigenvalues {
            assert!((z.re + 2.0).abs() < 1e-7 && z.im.abs() < 1e-7, "{z:?}");
        }
        assert!((s.max_real_part + 2.0).abs() < 1e-7);

        let s = eigenvalues(&Matrix::identity(2)).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!(s.eigenvalues.iter().all(|z| (z.re - 1.0).abs() < 1e-14 && z.im == 0.0));

        // complex pair: -0.25 ± i sqrt(7)/4
        let s = eigenvalues(&m(&[&[0.0, 1.0], &[-0.5, -0.5]])).unwrap();
        let sorted = s.sorted();
        let w = libm::sqrt(7.0) / 4.0;
        assert!((sorted[0].re + 0.25).abs() < 1e-12 && (sorted[0].im + w).abs() < 1e-12);
        assert!((sorted[1].re + 0.25).abs() < 1e-12 && (sorted[1].im - w).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_rejects_non_square() {
        assert!(matches!(
            eigenvalues(&Matrix::zeros(2, 3)),
            Err(LinalgError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn eigenvalues_companion_matrix() {
        // roots 1, 2, 3, 4, 5
        let coeffs = [-120.0, 274.0, -225.0, 85.0, -15.0];
        let mut c = Matrix::zeros(5, 5);
        for i in 0..4 {
            c[(i + 1, i)] = 1.0;
        }
        for i in 0..5 {
            c[(i, 4)] = -coeffs[i];
        }
        let s = eigenvalues(&c).unwrap().sorted();
        for (k, z) in s.iter().enumerate() {
            assert!((z.re - (k as f64 + 1.0)).abs() < 1e-8, "{z:?}");
        }
    }

    #[test]
    fn expm_cases() {
        assert_eq!(expm(&Matrix::zeros(3, 3)), Matrix::identity(3));
        let e = expm(&Matrix::diag(&[-1.0, -100.0]));
        assert!((e[(0, 0)] / libm::exp(-1.0) - 1.0).abs() < 1e-12);
        assert!((e[(1, 1)] / libm::exp(-100.0) - 1.0).abs() < 1e-12);
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(e[(1, 0)], 0.0);

        // rotation generator
        let r = expm(&m(&[&[0.0, -1.0], &[1.0, 0.0]]));
        assert!((r[(0, 0)] - libm::cos(1.0)).abs() < 1e-14);
        assert!((r[(1, 0)] - libm::sin(1.0)).abs() < 1e-14);
    }

    #[test]
    fn cholesky_cases() {
        assert_eq!(cholesky(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
        let l = cholesky(&m(&[&[4.0, 2.0], &[2.0, 3.0]])).unwrap();
        assert!(l.max_abs_diff(&m(&[&[2.0, 0.0], &[1.0, libm::sqrt(2.0)]])) < 1e-15);
        assert_eq!(
            cholesky(&m(&[&[1.0, 2.0], &[2.0, 1.0]])),
            Err(LinalgError::NotPositiveDefinite { pivot: 2 })
        );
        assert!(matches!(
            cholesky(&m(&[&[1.0, 2.0], &[0.0, 1.0]])),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn solve_spd_cases() {
        let b = Matrix::column(&[3.0, -1.0, 2.0]);
        assert_eq!(solve_spd(&Matrix::identity(3), &b).unwrap(), b);
        let x = solve_spd(&Matrix::diag(&[2.0, 4.0]), &Matrix::column(&[2.0, 4.0])).unwrap();
        assert!(x.max_abs_diff(&Matrix::column(&[1.0, 1.0])) < 1e-15);
        assert!(matches!(
            solve_spd(&Matrix::diag(&[1.0, -1.0]), &Matrix::column(&[1.0, 1.0])),
            Err(LinalgError::NotPositiveDefinite { pivot: 2 })
        ));
    }

    #[test]
    fn lu_solve_and_singular() {
        let a = m(&[&[0.0, 2.0], &[3.0, 1.0]]);
        let x = solve(&a, &Matrix::column(&[4.0, 5.0])).unwrap();
        assert!(x.max_abs_diff(&Matrix::column(&[1.0, 2.0])) < 1e-15);
        assert!(matches!(
            solve(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), &Matrix::column(&[1.0, 1.0])),
            Err(LinalgError::Singular { pivot: 2 })
        ));
    }

    #[test]
    fn symmetric_eigen_and_svd() {
        let a = m(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 2.0]]);
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        let r2 = libm::sqrt(2.0);
        for (v, e) in vals.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((v - e).abs() < 1e-13);
        }
        let recon = &(&vecs * &Matrix::diag(&vals)) * &vecs.transpose();
        assert!(recon.max_abs_diff(&a) < 1e-13);

        let b = m(&[&[3.0, 1.0, -2.0], &[0.5, -4.0, 1.0], &[2.0, 2.0, 0.1]]);
        let (u, s, v) = svd_square(&b).unwrap();
        let recon = &(&u * &Matrix::diag(&s)) * &v.transpose();
        assert!(recon.max_abs_diff(&b) < 1e-13);
        assert!((&u.transpose() * &u).max_abs_diff(&Matrix::identity(3)) < 1e-13);
    }
}
