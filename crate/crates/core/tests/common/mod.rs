#![allow(dead_code)]

use peakgain_core::linalg::{eigenvalues, Matrix};
use peakgain_core::LtiSystem;
use rand::rngs::StdRng;
use rand::Rng;

pub fn system(a: &[[f64; 2]; 2], b: [f64; 2], c: [f64; 2]) -> LtiSystem {
    LtiSystem::new(Matrix::from_rows(a).unwrap(), Matrix::column(&b), Matrix::row(&c)).unwrap()
}

pub fn high_damping() -> LtiSystem {
    system(&[[0.0, 1.0], [-4.0, -4.0]], [0.0, 1.0], [1.0, 1.0])
}

pub fn low_damping() -> LtiSystem {
    system(&[[0.0, 1.0], [-0.5, -0.5]], [0.0, 1.0], [1.0, 1.0])
}

pub fn stiff() -> LtiSystem {
    system(&[[-1.0, 0.0], [0.0, -100.0]], [1.0, 100.0], [1.0, -2.0])
}

pub fn reference_systems() -> Vec<(&'static str, LtiSystem)> {
    vec![
        ("high-damping", high_damping()),
        ("low-damping", low_damping()),
        ("stiff", stiff()),
    ]
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Random n-state system with spectral abscissa in [-2, -0.3] and B, C of
/// norm at least 0.3.
pub fn random_stable(rng: &mut StdRng, n: usize) -> LtiSystem {
    loop {
        let m = random_matrix(rng, n, n).scale(2.0);
        let abscissa = eigenvalues(&m).unwrap().max_real_part;
        let shift = abscissa + rng.gen_range(0.3..2.0);
        let a = &m - &Matrix::identity(n).scale(shift);
        let b = random_matrix(rng, n, 1);
        let c = random_matrix(rng, 1, n);
        if b.norm_fro() < 0.3 || c.norm_fro() < 0.3 {
            continue;
        }
        if let Ok(sys) = LtiSystem::new(a, b, c) {
            return sys;
        }
    }
}

/// Kronecker product straight from the index formula.
pub fn naive_kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = b.shape();
    let mut out = Matrix::zeros(a.rows() * p, a.cols() * q);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}
