//! Small dense semidefinite programs in LMI form:
//!
//! ```text
//! minimize    cᵀy
//! subject to  F0_k + Σ_i y_i F_ik ⪰ 0   for every block k
//!             y_i ≥ 0                   for i in sign_constraints
//! ```
//!
//! Solved by an infeasible-start primal-dual interior-point method with
//! Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The LMI
//! problem is treated as the dual of the standard form
//! `min ⟨C, X⟩ s.t. ⟨A_i, X⟩ = b_i, X ⪰ 0` with `C = F0`, `A_i = -F_i`,
//! `b = -c`; `-⟨F0, X⟩` is then a lower bound on the optimal `cᵀy`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error};
use crate::linalg::{cholesky_solve, cholesky_symmetrized, min_eigenvalue, svd_square, Matrix};

/// Feasibility slack used when judging a returned `y`.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Iterations without a significant decrease of the best feasible
/// objective before the solver gives up. Problems whose infimum is not
/// attained converge in objective while the iterates grow without bound.
const STALL_PATIENCE: usize = 25;
const STALL_FRACTION: f64 = 1e-2;

/// One LMI block `constant + Σ y_i · coefficient_i ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiBlock {
    pub size: usize,
    pub constant: Matrix,
    pub terms: Vec<(usize, Matrix)>,
}

impl LmiBlock {
    pub fn new(size: usize) -> Self {
        LmiBlock {
            size,
            constant: Matrix::zeros(size, size),
            terms: Vec::new(),
        }
    }

    /// Adds `coef` to the coefficient of scalar `index`, merging repeats.
    pub fn add_term(&mut self, index: usize, coef: Matrix) {
        if let Some((_, existing)) = self.terms.iter_mut().find(|(i, _)| *i == index) {
            *existing = &*existing + &coef;
        } else {
            self.terms.push((index, coef));
        }
    }

    /// Block value at `y`.
    pub fn evaluate(&self, y: &[f64]) -> Matrix {
        let mut m = self.constant.clone();
        for (i, f) in &self.terms {
            m = &m + &f.scale(y[*i]);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub num_scalars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    pub sign_constraints: Vec<usize>,
}

impl SdpProblem {
    pub fn new(num_scalars: usize) -> Self {
        SdpProblem {
            num_scalars,
            objective: vec![0.0; num_scalars],
            blocks: Vec::new(),
            sign_constraints: Vec::new(),
        }
    }

    /// Checks shapes, symmetry (1e-12 relative) and index ranges.
    pub fn validate(&self) -> Result<(), Error> {
        if self.objective.len() != self.num_scalars {
            return Err(invalid("objective", "length differs from num_scalars"));
        }
        for block in &self.blocks {
            let check = |m: &Matrix| -> Result<(), Error> {
                if m.shape() != (block.size, block.size) {
                    return Err(invalid("block", "coefficient does not match block size"));
                }
                if m.asymmetry() > 1e-12 {
                    return Err(invalid("block", "coefficient matrix is not symmetric"));
                }
                if !m.is_finite() {
                    return Err(invalid("block", "coefficient matrix has non-finite entries"));
                }
                Ok(())
            };
            check(&block.constant)?;
            for (i, f) in &block.terms {
                if *i >= self.num_scalars {
                    return Err(invalid("block", "term refers to an unknown scalar"));
                }
                check(f)?;
            }
        }
        if self.sign_constraints.iter().any(|&i| i >= self.num_scalars) {
            return Err(invalid("sign_constraints", "index out of range"));
        }
        Ok(())
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::Unbounded => "unbounded",
            SdpStatus::MaxIterations => "max_iterations",
        })
    }
}

/// Per-iteration diagnostics, recorded when [`SdpSettings::record_iterations`] is set.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub dual_bound: f64,
    pub mu: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub step_primal: f64,
    pub step_dual: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// Best iterate (or the certificate direction for `Unbounded`).
    pub y: Vec<f64>,
    /// `y` satisfies every block to within [`FEASIBILITY_TOL`]. Always true
    /// for `Optimal`; for `MaxIterations` it marks a usable feasible point.
    pub feasible: bool,
    pub objective_value: f64,
    /// Lower bound `-⟨F0, X⟩` from the dual iterate.
    pub dual_bound: f64,
    /// Relative gap `|obj − bound| / (1 + |obj| + |bound|)`.
    pub duality_gap: f64,
    pub iterations: usize,
    /// Relative residual of the equality side `⟨A_i, X⟩ = b_i`.
    pub primal_infeasibility: f64,
    /// Relative residual of the LMI side `C − Z − Σ y_i A_i`.
    pub dual_infeasibility: f64,
    /// Ratio of largest to smallest diagonal of the last Schur complement
    /// factor, squared. Large values flag an ill-conditioned Newton system.
    pub schur_condition: f64,
    /// Normalized primal matrix for `Infeasible` (one per block, including
    /// the 1×1 sign blocks last).
    pub infeasibility_certificate: Option<Vec<Matrix>>,
    pub log: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
    pub record_iterations: bool,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            tolerance: 1e-8,
            max_iterations: 200,
            step_fraction: 0.98,
            record_iterations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub min_eigenvalues: Vec<f64>,
    /// `(index, value)` for every sign-constrained scalar below zero.
    pub sign_violations: Vec<(usize, f64)>,
}

impl Feasibility {
    pub fn worst_eigenvalue(&self) -> f64 {
        self.min_eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self, slack: f64) -> bool {
        self.worst_eigenvalue() >= -slack && self.sign_violations.iter().all(|(_, v)| *v >= -slack)
    }
}

/// Evaluates every block at `y` and reports its smallest eigenvalue.
pub fn check_feasibility(problem: &SdpProblem, y: &[f64]) -> Result<Feasibility, Error> {
    if y.len() != problem.num_scalars {
        return Err(invalid("y", "length differs from num_scalars"));
    }
    let mut min_eigenvalues = Vec::with_capacity(problem.blocks.len());
    for block in &problem.blocks {
        min_eigenvalues.push(min_eigenvalue(&block.evaluate(y))?);
    }
    let sign_violations = problem
        .sign_constraints
        .iter()
        .filter(|&&i| y[i] < 0.0)
        .map(|&i| (i, y[i]))
        .collect();
    Ok(Feasibility {
        min_eigenvalues,
        sign_violations,
    })
}

/// Standard-form data: for each block the constant `C` and the sparse
/// list of `(i, A_i)` with `A_i = -F_i`, all scaled.
struct Scaled {
    m: usize,
    sizes: Vec<usize>,
    c: Vec<Matrix>,
    a: Vec<Vec<(usize, Matrix)>>,
    b: Vec<f64>,
    /// y_original[i] = y_scaled[i] * var_scale[i] * c_scale
    var_scale: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
}

fn to_standard_form(problem: &SdpProblem) -> Scaled {
    let m = problem.num_scalars;
    let mut sizes = Vec::new();
    let mut c = Vec::new();
    let mut a: Vec<Vec<(usize, Matrix)>> = Vec::new();
    for block in &problem.blocks {
        sizes.push(block.size);
        c.push(block.constant.symmetrize());
        a.push(
            block
                .terms
                .iter()
                .map(|(i, f)| (*i, f.symmetrize().scale(-1.0)))
                .collect(),
        );
    }
    for &i in &problem.sign_constraints {
        sizes.push(1);
        c.push(Matrix::zeros(1, 1));
        a.push(vec![(i, Matrix::from_rows(&[[-1.0]]).expect("finite"))]);
    }
    // column-normalize the variables
    let mut norms = vec![0.0f64; m];
    for terms in &a {
        for (i, ai) in terms {
            norms[*i] += ai.dot(ai);
        }
    }
    let var_scale: Vec<f64> = norms
        .iter()
        .map(|n| if *n > 0.0 { 1.0 / libm::sqrt(*n) } else { 1.0 })
        .collect();
    for terms in a.iter_mut() {
        for (i, ai) in terms.iter_mut() {
            *ai = ai.scale(var_scale[*i]);
        }
    }
    let mut b: Vec<f64> = problem
        .objective
        .iter()
        .zip(&var_scale)
        .map(|(ci, s)| -ci * s)
        .collect();
    let b_scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let b_scale = if b_scale > 0.0 { b_scale } else { 1.0 };
    for v in b.iter_mut() {
        *v /= b_scale;
    }
    let c_norm = libm::sqrt(c.iter().map(|ck| ck.dot(ck)).sum::<f64>());
    let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
    for ck in c.iter_mut() {
        *ck = ck.scale(1.0 / c_scale);
    }
    Scaled {
        m,
        sizes,
        c,
        a,
        b,
        var_scale,
        b_scale,
        c_scale,
    }
}

/// Nesterov-Todd scaling of one block: `Tᵀ Z T = T⁻¹ X T⁻ᵀ = diag(lambda)`.
struct NtScaling {
    t: Matrix,
    /// `T⁻ᵀ`
    t_inv_t: Matrix,
    lambda: Vec<f64>,
}

fn nt_scaling(x: &Matrix, z: &Matrix) -> Option<NtScaling> {
    let l = cholesky_symmetrized(&x.symmetrize()).ok()?;
    let r = cholesky_symmetrized(&z.symmetrize()).ok()?;
    let (u, sigma, v) = svd_square(&(&r.transpose() * &l)).ok()?;
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return None;
    }
    let inv_sqrt: Vec<f64> = sigma.iter().map(|s| 1.0 / libm::sqrt(*s)).collect();
    let t = &(&l * &v) * &Matrix::diag(&inv_sqrt);
    let t_inv_t = &(&r * &u) * &Matrix::diag(&inv_sqrt);
    Some(NtScaling {
        t,
        t_inv_t,
        lambda: sigma,
    })
}

/// Largest step `a ≤ 1/fraction` keeping `diag(lambda) + a·d ⪰ 0`.
fn max_step(lambda: &[f64], d: &Matrix) -> f64 {
    let n = lambda.len();
    let mut s = d.clone();
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] /= libm::sqrt(lambda[i] * lambda[j]);
        }
    }
    match min_eigenvalue(&s) {
        Ok(e) if e < 0.0 => -1.0 / e,
        Ok(_) => f64::INFINITY,
        Err(_) => 0.0,
    }
}

/// Jordan product `(ab + ba)/2`.
fn jordan(a: &Matrix, b: &Matrix) -> Matrix {
    (&(a * b) + &(b * a)).scale(0.5)
}

struct Direction {
    dy: Vec<f64>,
    dx: Vec<Matrix>,
    dz: Vec<Matrix>,
}

struct Iterate {
    x: Vec<Matrix>,
    z: Vec<Matrix>,
    y: Vec<f64>,
}

/// Solves the problem. Fails only on malformed input; numerical trouble is
/// reported through the status.
pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution, Error> {
    problem.validate()?;
    if !(settings.tolerance > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    let sc = to_standard_form(problem);
    let m = sc.m;
    let nblocks = sc.sizes.len();
    let total_dim: usize = sc.sizes.iter().sum();

    // initial point
    let b_norm = libm::sqrt(sc.b.iter().map(|v| v * v).sum::<f64>());
    let mut it = Iterate {
        x: Vec::with_capacity(nblocks),
        z: Vec::with_capacity(nblocks),
        y: vec![0.0; m],
    };
    for k in 0..nblocks {
        let s = sc.sizes[k] as f64;
        let mut xi = 10f64.max(libm::sqrt(s));
        let mut a_max = 0.0f64;
        for (i, ai) in &sc.a[k] {
            let an = ai.norm_fro();
            a_max = a_max.max(an);
            xi = xi.max(s * (1.0 + sc.b[*i].abs()) / (1.0 + an));
        }
        let eta = 10f64
            .max(libm::sqrt(s))
            .max((1.0 + a_max.max(sc.c[k].norm_fro())) / libm::sqrt(s));
        it.x.push(Matrix::identity(sc.sizes[k]).scale(xi));
        it.z.push(Matrix::identity(sc.sizes[k]).scale(eta));
    }
    let c_norm = libm::sqrt(sc.c.iter().map(|c| c.dot(c)).sum::<f64>());

    let mut log = Vec::new();
    let mut status = SdpStatus::MaxIterations;
    let mut certificate = None;
    let mut schur_condition = 1.0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut stalled = 0usize;
    let mut iterations = 0;
    let mut last = (0.0, 0.0, 0.0, 0.0, 0.0); // obj, bound, gap, pinf, dinf

    for iter in 0..=settings.max_iterations {
        iterations = iter;
        // residuals
        let ax: Vec<f64> = (0..m)
            .map(|i| {
                let mut s = 0.0;
                for k in 0..nblocks {
                    for (j, aj) in &sc.a[k] {
                        if *j == i {
                            s += aj.dot(&it.x[k]);
                        }
                    }
                }
                s
            })
            .collect();
        let rp: Vec<f64> = sc.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut rd = Vec::with_capacity(nblocks);
        for k in 0..nblocks {
            let mut r = &sc.c[k] - &it.z[k];
            for (i, ai) in &sc.a[k] {
                r = &r - &ai.scale(it.y[*i]);
            }
            rd.push(r);
        }
        let pinf = libm::sqrt(rp.iter().map(|v| v * v).sum::<f64>()) / (1.0 + b_norm);
        let dinf = libm::sqrt(rd.iter().map(|r| r.dot(r)).sum::<f64>()) / (1.0 + c_norm);
        let cx: f64 = (0..nblocks).map(|k| sc.c[k].dot(&it.x[k])).sum();
        let by: f64 = sc.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        let xz: f64 = (0..nblocks).map(|k| it.x[k].dot(&it.z[k])).sum();
        let mu = xz / total_dim as f64;
        // in LMI terms: objective = -by, bound = -cx
        let gap = (cx - by).abs() / (1.0 + cx.abs() + by.abs());
        let comp = xz / (1.0 + cx.abs() + by.abs());
        let scale = sc.b_scale * sc.c_scale;
        last = (-by * scale, -cx * scale, gap, pinf, dinf);

        let y_orig: Vec<f64> = it
            .y
            .iter()
            .zip(&sc.var_scale)
            .map(|(v, s)| v * s * sc.c_scale)
            .collect();
        if !y_orig.iter().all(|v| v.is_finite()) {
            break;
        }

        if gap.max(comp) <= settings.tolerance && pinf <= settings.tolerance && dinf <= settings.tolerance {
            let feas = check_feasibility(problem, &y_orig)?;
            if feas.is_feasible(FEASIBILITY_TOL) {
                status = SdpStatus::Optimal;
                best = Some((problem.objective_value(&y_orig), y_orig));
                break;
            }
        }
        if dinf <= settings.tolerance.max(1e-9) {
            let obj = problem.objective_value(&y_orig);
            let improves = best.as_ref().is_none_or(|(b, _)| obj < *b);
            if improves && check_feasibility(problem, &y_orig)?.is_feasible(FEASIBILITY_TOL) {
                let significant = best.as_ref().is_none_or(|(b, _)| {
                    b - obj > STALL_FRACTION * settings.tolerance * (1.0 + b.abs())
                });
                if significant {
                    stalled = 0;
                }
                best = Some((obj, y_orig.clone()));
            }
            if best.is_some() {
                stalled += 1;
                if stalled > STALL_PATIENCE {
                    break;
                }
            }
        }
        // infeasibility of the LMI side: X with A(X) ≈ 0 and ⟨C, X⟩ < 0
        if cx < 0.0 {
            let ax_norm = libm::sqrt(ax.iter().map(|v| v * v).sum::<f64>());
            if ax_norm / (-cx) < settings.tolerance && pinf > settings.tolerance {
                status = SdpStatus::Infeasible;
                certificate = Some(it.x.iter().map(|x| x.scale(1.0 / (-cx))).collect());
                break;
            }
        }
        // unboundedness: direction y with Σ y_i A_i ⪯ 0 and bᵀy > 0
        if by > 0.0 {
            let mut resid = 0.0;
            for k in 0..nblocks {
                let r = &sc.c[k] - &rd[k];
                resid += r.dot(&r);
            }
            if libm::sqrt(resid) / by < settings.tolerance {
                status = SdpStatus::Unbounded;
                let norm = by;
                best = Some((f64::NEG_INFINITY, y_orig.iter().map(|v| v / norm).collect()));
                break;
            }
        }
        if iter == settings.max_iterations {
            break;
        }

        // scaling
        let mut nts = Vec::with_capacity(nblocks);
        for k in 0..nblocks {
            match nt_scaling(&it.x[k], &it.z[k]) {
                Some(s) => nts.push(s),
                None => break,
            }
        }
        if nts.len() != nblocks {
            break;
        }
        let at: Vec<Vec<(usize, Matrix)>> = (0..nblocks)
            .map(|k| {
                let t = &nts[k].t;
                let tt = t.transpose();
                sc.a[k]
                    .iter()
                    .map(|(i, ai)| (*i, &(&tt * ai) * t))
                    .collect()
            })
            .collect();
        let rdt: Vec<Matrix> = (0..nblocks)
            .map(|k| {
                let t = &nts[k].t;
                &(&t.transpose() * &rd[k]) * t
            })
            .collect();
        let mut schur = Matrix::zeros(m, m);
        for terms in &at {
            for (i, ai) in terms {
                for (j, aj) in terms {
                    schur[(*i, *j)] += ai.dot(aj);
                }
            }
        }
        let chol = match cholesky_symmetrized(&schur) {
            Ok(l) => l,
            Err(_) => {
                // nudge the diagonal once before giving up
                let mut reg = schur.clone();
                let d = (0..m).map(|i| schur[(i, i)]).fold(0.0, f64::max);
                for i in 0..m {
                    reg[(i, i)] += 1e-14 * d.max(1.0);
                }
                match cholesky_symmetrized(&reg) {
                    Ok(l) => l,
                    Err(_) => {
                        schur_condition = f64::INFINITY;
                        break;
                    }
                }
            }
        };
        let dmax = (0..m).map(|i| chol[(i, i)]).fold(0.0, f64::max);
        let dmin = (0..m).map(|i| chol[(i, i)]).fold(f64::INFINITY, f64::min);
        schur_condition = (dmax / dmin) * (dmax / dmin);

        let solve_dir = |kmats: &[Matrix]| -> Direction {
            let mut rhs = rp.clone();
            for k in 0..nblocks {
                let diff = &kmats[k] - &rdt[k];
                for (i, ai) in &at[k] {
                    rhs[*i] -= ai.dot(&diff);
                }
            }
            let rhs_m = Matrix::column(&rhs);
            let mut dy_m = cholesky_solve(&chol, &rhs_m);
            // one step of iterative refinement against the unfactored matrix
            let resid = &rhs_m - &(&schur * &dy_m);
            dy_m = &dy_m + &cholesky_solve(&chol, &resid);
            let dy: Vec<f64> = dy_m.into_vec();
            let mut dx = Vec::with_capacity(nblocks);
            let mut dz = Vec::with_capacity(nblocks);
            for k in 0..nblocks {
                let mut dzt = rdt[k].clone();
                for (i, ai) in &at[k] {
                    dzt = &dzt - &ai.scale(dy[*i]);
                }
                let dxt = &kmats[k] - &dzt;
                dx.push(dxt);
                dz.push(dzt);
            }
            Direction { dy, dx, dz }
        };

        // predictor
        let k_aff: Vec<Matrix> = nts
            .iter()
            .map(|s| Matrix::diag(&s.lambda.iter().map(|l| -l).collect::<Vec<_>>()))
            .collect();
        let aff = solve_dir(&k_aff);
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for k in 0..nblocks {
            ap = ap.min(max_step(&nts[k].lambda, &aff.dx[k]));
            ad = ad.min(max_step(&nts[k].lambda, &aff.dz[k]));
        }
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..nblocks {
            let lam = Matrix::diag(&nts[k].lambda);
            let xa = &lam + &aff.dx[k].scale(ap);
            let za = &lam + &aff.dz[k].scale(ad);
            mu_aff += xa.dot(&za);
        }
        mu_aff /= total_dim as f64;
        let sigma = if mu > 0.0 {
            let r = (mu_aff / mu).clamp(0.0, 1.0);
            r * r * r
        } else {
            0.0
        };

        // corrector
        let k_cor: Vec<Matrix> = (0..nblocks)
            .map(|k| {
                let lam = &nts[k].lambda;
                let n = lam.len();
                let second = jordan(&aff.dx[k], &aff.dz[k]);
                let mut rc = second.scale(-1.0);
                for i in 0..n {
                    rc[(i, i)] += sigma * mu - lam[i] * lam[i];
                }
                let mut km = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        km[(i, j)] = 2.0 * rc[(i, j)] / (lam[i] + lam[j]);
                    }
                }
                km
            })
            .collect();
        let dir = solve_dir(&k_cor);
        let mut ap = f64::INFINITY;
        let mut ad = f64::INFINITY;
        for k in 0..nblocks {
            ap = ap.min(max_step(&nts[k].lambda, &dir.dx[k]));
            ad = ad.min(max_step(&nts[k].lambda, &dir.dz[k]));
        }
        let ap = (settings.step_fraction * ap).min(1.0);
        let ad = (settings.step_fraction * ad).min(1.0);
        if !(ap > 0.0 && ad > 0.0) {
            break;
        }
        for i in 0..m {
            it.y[i] += ad * dir.dy[i];
        }
        for k in 0..nblocks {
            let t = &nts[k].t;
            let tinv_t = &nts[k].t_inv_t;
            let dx = &(t * &dir.dx[k]) * &t.transpose();
            it.x[k] = (&it.x[k] + &dx.scale(ap)).symmetrize();
            // Z from the residual identity C − Z − Σ y A = (1 − ad) R_d, which
            // keeps the LMI residual from drifting when T is badly scaled
            let mut z = &sc.c[k] - &rd[k].scale(1.0 - ad);
            for (i, ai) in &sc.a[k] {
                z = &z - &ai.scale(it.y[*i]);
            }
            let z = z.symmetrize();
            if cholesky_symmetrized(&z).is_ok() {
                it.z[k] = z;
            } else {
                let dz = &(tinv_t * &dir.dz[k]) * &tinv_t.transpose();
                it.z[k] = (&it.z[k] + &dz.scale(ad)).symmetrize();
            }
        }
        {
            // Pull X back toward A(X) = b − (1 − ap) r_p. The correction
            // X·A*(λ)·X is weighted by X itself so that it stays small
            // relative to X along nearly singular directions.
            let mut r = sc.b.clone();
            for k in 0..nblocks {
                for (i, ai) in &sc.a[k] {
                    r[*i] -= ai.dot(&it.x[k]);
                }
            }
            for i in 0..m {
                r[i] -= (1.0 - ap) * rp[i];
            }
            let weighted: Vec<Vec<(usize, Matrix)>> = (0..nblocks)
                .map(|k| {
                    sc.a[k]
                        .iter()
                        .map(|(i, ai)| (*i, &(&it.x[k] * ai) * &it.x[k]))
                        .collect()
                })
                .collect();
            let mut h = Matrix::zeros(m, m);
            for k in 0..nblocks {
                for (i, ai) in &sc.a[k] {
                    for (j, wj) in &weighted[k] {
                        h[(*i, *j)] += ai.dot(wj);
                    }
                }
            }
            if let Ok(hc) = cholesky_symmetrized(&h) {
                let lam = cholesky_solve(&hc, &Matrix::column(&r)).into_vec();
                let projected: Vec<Matrix> = (0..nblocks)
                    .map(|k| {
                        let mut x = it.x[k].clone();
                        for (j, wj) in &weighted[k] {
                            x = &x + &wj.scale(lam[*j]);
                        }
                        x.symmetrize()
                    })
                    .collect();
                if projected.iter().all(|x| cholesky_symmetrized(x).is_ok()) {
                    it.x = projected;
                }
            }
        }
        if settings.record_iterations {
            log.push(IterationRecord {
                iteration: iter,
                objective: last.0,
                dual_bound: last.1,
                mu,
                primal_infeasibility: pinf,
                dual_infeasibility: dinf,
                step_primal: ap,
                step_dual: ad,
                sigma,
            });
        }
    }

    let (objective_value, y) = match best {
        Some((obj, y)) => (obj, y),
        None => {
            let y: Vec<f64> = it
                .y
                .iter()
                .zip(&sc.var_scale)
                .map(|(v, s)| v * s * sc.c_scale)
                .collect();
            (problem.objective_value(&y), y)
        }
    };
    let feasible = status != SdpStatus::Unbounded
        && check_feasibility(problem, &y)?.is_feasible(FEASIBILITY_TOL);
    Ok(SdpSolution {
        status,
        y,
        feasible,
        objective_value,
        dual_bound: last.1,
        duality_gap: last.2,
        iterations,
        primal_infeasibility: last.3,
        dual_infeasibility: last.4,
        schur_condition,
        infeasibility_certificate: certificate,
        log,
    })
}
