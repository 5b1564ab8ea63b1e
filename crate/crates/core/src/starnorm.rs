//! Inescapable ellipsoids and the star norm.
//!
//! For a fixed S-procedure scalar α the ellipsoid `{x : xᵀPx ≤ 1}` (or
//! `{x : (x⊗x)ᵀP(x⊗x) ≤ 1}` at degree 2) is inescapable under unit-peak
//! inputs when an LMI in `P` holds. The output bound on that set is
//! `N_α = sqrt(C P⁻¹ Cᵀ)`, and the star norm is the smallest `N_α` over
//! `α ∈ (0, κ)`.

use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::linalg::{kron, solve_spd, Matrix};
use crate::model::{lift, sprocedure_structure, LiftedSystem, LtiSystem, SProcedureStructure};
use crate::sdp::{check_feasibility, solve, LmiBlock, SdpProblem, SdpSettings, SdpSolution, SdpStatus};

/// Lower bound on the eigenvalues of `P` in every SDP.
pub const P_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Degree {
    One,
    Two,
}

impl Degree {
    pub fn as_u32(self) -> u32 {
        match self {
            Degree::One => 1,
            Degree::Two => 2,
        }
    }
}

impl TryFrom<u32> for Degree {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self, Error> {
        match d {
            1 => Ok(Degree::One),
            2 => Ok(Degree::Two),
            _ => Err(invalid("degree", "must be 1 or 2")),
        }
    }
}

/// How the constraints `w_i w_j` vs `x_i x_j` enter the degree-2 LMI.
///
/// `Diagonal` uses one multiplier `β_i ≥ 0` per constraint `w_i² ≤ ζ_ii`.
/// `Full` uses a PSD matrix `G` and the valid inequality
/// `(1 − u²) xᵀGx ≥ 0`, which contains the diagonal form as `G = diag β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Multiplier {
    Diagonal,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub grid_points: usize,
    pub refine_iterations: usize,
    pub multiplier: Multiplier,
    pub sdp: SdpSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            grid_points: 64,
            refine_iterations: 40,
            multiplier: Multiplier::Full,
            sdp: SdpSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    /// Ellipsoid matrix in the original (unnormalized) coordinates.
    pub p: Option<Matrix>,
    /// Output bound for this α: on `|y|` at degree 1, on `y²` at degree 2.
    pub n_alpha: Option<f64>,
    /// `p` comes from an iterate that passed an independent eigenvalue
    /// check of every LMI block, so `n_alpha` is a valid bound even when
    /// the solver stopped short of `Optimal`.
    pub feasible: bool,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Relative duality gap at exit; NaN when the solver rejected the
    /// problem.
    pub duality_gap: f64,
    /// Smallest eigenvalue over all LMI blocks at the returned `y`, in the
    /// normalized problem the solver saw.
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub degree: Degree,
    pub kappa: f64,
    /// Grid points in increasing α, followed by refinement points in
    /// evaluation order.
    pub points: Vec<SweepPoint>,
    pub best: SweepPoint,
    pub star_norm: f64,
}

/// Number of scalars for a symmetric `m × m` matrix.
fn sym_len(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Symmetric basis matrices in the order (0,0), (0,1), ..., (1,1), ...
fn sym_basis(m: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(sym_len(m));
    for i in 0..m {
        for j in i..m {
            let mut e = Matrix::zeros(m, m);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

fn sym_from_vec(m: usize, y: &[f64]) -> Matrix {
    let mut p = Matrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            p[(i, j)] = y[k];
            p[(j, i)] = y[k];
            k += 1;
        }
    }
    p
}

/// `P − εI ⪰ 0` and `[[P, Cᵀ], [C, t]] ⪰ 0`, sharing the first `sym_len(m)`
/// scalars for `P` and scalar `t_index` for `t`.
fn push_p_blocks(problem: &mut SdpProblem, basis: &[Matrix], c: &Matrix, t_index: usize) {
    let m = c.cols();
    let mut pos = LmiBlock::new(m);
    pos.constant = Matrix::identity(m).scale(-P_MARGIN);
    for (k, e) in basis.iter().enumerate() {
        pos.add_term(k, e.clone());
    }
    problem.blocks.push(pos);

    let mut epi = LmiBlock::new(m + 1);
    let mut f0 = Matrix::zeros(m + 1, m + 1);
    for j in 0..m {
        f0[(m, j)] = c[(0, j)];
        f0[(j, m)] = c[(0, j)];
    }
    epi.constant = f0;
    for (k, e) in basis.iter().enumerate() {
        let mut f = Matrix::zeros(m + 1, m + 1);
        f.set_block(0, 0, e);
        epi.add_term(k, f);
    }
    let mut ft = Matrix::zeros(m + 1, m + 1);
    ft[(m, m)] = 1.0;
    epi.add_term(t_index, ft);
    problem.blocks.push(epi);
    problem.objective[t_index] = 1.0;
}

fn check_alpha(alpha: f64, kappa: f64) -> Result<(), Error> {
    if alpha.is_finite() && alpha > 0.0 && alpha < kappa {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { alpha, kappa })
    }
}

/// Degree-1 SDP. Scalars: the upper triangle of `P` row by row, then `t`.
pub fn build_sdp_d1(sys: &LtiSystem, alpha: f64) -> Result<SdpProblem, Error> {
    check_alpha(alpha, sys.kappa())?;
    Ok(d1_problem(sys.a(), sys.b(), sys.c(), alpha))
}

fn d1_problem(a: &Matrix, b: &Matrix, c: &Matrix, alpha: f64) -> SdpProblem {
    let n = a.rows();
    let basis = sym_basis(n);
    let np = basis.len();
    let mut problem = SdpProblem::new(np + 1);

    // −[[AᵀP + PA + αP, PB], [BᵀP, −α]] ⪰ 0
    let mut lmi = LmiBlock::new(n + 1);
    let mut f0 = Matrix::zeros(n + 1, n + 1);
    f0[(n, n)] = alpha;
    lmi.constant = f0;
    let at = a.transpose();
    for (k, e) in basis.iter().enumerate() {
        let mut f = Matrix::zeros(n + 1, n + 1);
        let top = &(&(&at * e) + &(e * a)) + &e.scale(alpha);
        let eb = e * b;
        f.set_block(0, 0, &top);
        f.set_block(0, n, &eb);
        f.set_block(n, 0, &eb.transpose());
        lmi.add_term(k, f.scale(-1.0));
    }
    problem.blocks.push(lmi);
    push_p_blocks(&mut problem, &basis, c, np);
    problem
}

/// Degree-2 SDP on the lifted system.
///
/// Scalars: the upper triangle of `P` (`n² × n²`), then the inequality
/// multipliers (`β`, or the upper triangle of `G` for [`Multiplier::Full`]),
/// then one `γ` per equality matrix, then `t`. The main block acts on
/// `[ζ; w; 1]`.
pub fn build_sdp_d2(
    lifted: &LiftedSystem,
    structure: &SProcedureStructure,
    alpha: f64,
    multiplier: Multiplier,
) -> Result<SdpProblem, Error> {
    check_alpha(alpha, lifted.kappa()?)?;
    if structure.n != lifted.base_dim {
        return Err(invalid("structure", "state dimension differs from the lifted system"));
    }
    Ok(d2_problem(
        &lifted.a_lift,
        &lifted.b_lift,
        &lifted.c_lift,
        structure,
        alpha,
        multiplier,
    ))
}

fn d2_problem(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    structure: &SProcedureStructure,
    alpha: f64,
    multiplier: Multiplier,
) -> SdpProblem {
    let n = structure.n;
    let m = n * n;
    let size = m + n + 1;
    let basis = sym_basis(m);
    let np = basis.len();
    let nmult = match multiplier {
        Multiplier::Diagonal => n,
        Multiplier::Full => sym_len(n),
    };
    let ngamma = structure.equality_matrices.len();
    let t_index = np + nmult + ngamma;
    let mut problem = SdpProblem::new(t_index + 1);

    let mut lmi = LmiBlock::new(size);
    let mut f0 = Matrix::zeros(size, size);
    f0[(size - 1, size - 1)] = alpha;
    lmi.constant = f0;
    let at = a.transpose();
    for (k, e) in basis.iter().enumerate() {
        let mut f = Matrix::zeros(size, size);
        let top = &(&(&at * e) + &(e * a)) + &e.scale(alpha);
        let eb = e * b;
        f.set_block(0, 0, &top);
        f.set_block(0, m, &eb);
        f.set_block(m, 0, &eb.transpose());
        lmi.add_term(k, f.scale(-1.0));
    }
    let corner = m + n;
    match multiplier {
        Multiplier::Diagonal => {
            for (i, &idx) in structure.inequality_indices.iter().enumerate() {
                let mut f = Matrix::zeros(size, size);
                f[(idx - 1, corner)] = 0.5;
                f[(corner, idx - 1)] = 0.5;
                f[(m + i, m + i)] = -1.0;
                lmi.add_term(np + i, f.scale(-1.0));
                problem.sign_constraints.push(np + i);
            }
        }
        Multiplier::Full => {
            let mut k = np;
            let mut g_block = LmiBlock::new(n);
            for i in 0..n {
                for j in i..n {
                    // G_ij multiplies (ζ_idx(i,j) + ζ_idx(j,i))/2 - w_i w_j
                    // (counted twice off the diagonal)
                    let mut f = Matrix::zeros(size, size);
                    let ij = i * n + j;
                    let ji = j * n + i;
                    let w = 0.5;
                    f[(ij, corner)] += w;
                    f[(corner, ij)] += w;
                    if i != j {
                        f[(ji, corner)] += w;
                        f[(corner, ji)] += w;
                        f[(m + i, m + j)] = -1.0;
                        f[(m + j, m + i)] = -1.0;
                    } else {
                        f[(m + i, m + i)] = -1.0;
                    }
                    lmi.add_term(k, f.scale(-1.0));
                    let mut e = Matrix::zeros(n, n);
                    e[(i, j)] = 1.0;
                    e[(j, i)] = 1.0;
                    g_block.add_term(k, e);
                    k += 1;
                }
            }
            problem.blocks.push(g_block);
        }
    }
    for (j, e) in structure.equality_matrices.iter().enumerate() {
        let mut f = Matrix::zeros(size, size);
        f.set_block(0, m, e);
        f.set_block(m, 0, &e.transpose());
        lmi.add_term(np + nmult + j, f.scale(-1.0));
    }
    problem.blocks.insert(0, lmi);
    push_p_blocks(&mut problem, &basis, c, t_index);
    problem
}

/// `sqrt(C P⁻¹ Cᵀ)` for a row vector `c`.
pub fn n_alpha(p: &Matrix, c: &Matrix) -> Result<f64, Error> {
    let x = solve_spd(p, &c.transpose())?;
    let v: f64 = c.as_slice().iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
    Ok(libm::sqrt(v.max(0.0)))
}

/// Problem data in normalized coordinates plus the scale to undo.
struct Prepared {
    degree: Degree,
    multiplier: Multiplier,
    a: Matrix,
    b: Matrix,
    c: Matrix,
    structure: Option<SProcedureStructure>,
    kappa: f64,
    /// `‖B‖`, `‖C‖` of the original system
    b_norm: f64,
    c_norm: f64,
}

fn prepare(
    sys: &LtiSystem,
    degree: Degree,
    multiplier: Multiplier,
    settings: &SdpSettings,
) -> Result<Prepared, Error> {
    let b_norm = sys.b().norm_fro();
    let mut c_norm = sys.c().norm_fro();
    if b_norm == 0.0 || c_norm == 0.0 {
        return Err(invalid("system", "B and C must be nonzero"));
    }
    let b_unit = sys.b().scale(1.0 / b_norm);
    // One mid-range degree-1 solve gives the size of the gain; dividing C by
    // it keeps the epigraph value near 1 so the relative gap test is
    // meaningful.
    let probe = d1_problem(sys.a(), &b_unit, &sys.c().scale(1.0 / c_norm), 0.5 * sys.kappa());
    if let Ok(sol) = solve(&probe, settings) {
        let gain = sol.objective_value;
        if sol.status == SdpStatus::Optimal && gain > 0.0 && gain.is_finite() {
            c_norm *= libm::sqrt(gain);
        }
    }
    let unit = LtiSystem::new(sys.a().clone(), b_unit, sys.c().scale(1.0 / c_norm))?;
    match degree {
        Degree::One => Ok(Prepared {
            degree,
            multiplier,
            a: unit.a().clone(),
            b: unit.b().clone(),
            c: unit.c().clone(),
            structure: None,
            kappa: unit.kappa(),
            b_norm,
            c_norm,
        }),
        Degree::Two => {
            let lifted = lift(&unit)?;
            let structure = sprocedure_structure(unit.n())?;
            Ok(Prepared {
                degree,
                multiplier,
                kappa: lifted.kappa()?,
                a: lifted.a_lift,
                b: lifted.b_lift,
                c: lifted.c_lift,
                structure: Some(structure),
                b_norm,
                c_norm,
            })
        }
    }
}

impl Prepared {
    fn problem(&self, alpha: f64) -> SdpProblem {
        match &self.structure {
            None => d1_problem(&self.a, &self.b, &self.c, alpha),
            Some(s) => d2_problem(&self.a, &self.b, &self.c, s, alpha, self.multiplier),
        }
    }

    /// Solves at α and maps the result back to original coordinates.
    fn evaluate(&self, alpha: f64, settings: &SdpSettings) -> SweepPoint {
        let problem = self.problem(alpha);
        let m = self.a.rows();
        let failed = |status, iterations, duality_gap, min_eigenvalue| SweepPoint {
            alpha,
            p: None,
            n_alpha: None,
            feasible: false,
            status,
            iterations,
            duality_gap,
            min_eigenvalue,
        };
        let sol = match solve(&problem, settings) {
            Ok(s) => s,
            Err(_) => return failed(SdpStatus::MaxIterations, 0, f64::NAN, f64::NAN),
        };
        let min_eig = check_feasibility(&problem, &sol.y)
            .map_or(f64::NAN, |f| f.worst_eigenvalue());
        // a feasible y certifies the ellipsoid whether or not optimality
        // was proven
        if !sol.feasible {
            return failed(sol.status, sol.iterations, sol.duality_gap, min_eig);
        }
        let p_unit = sym_from_vec(m, &sol.y);
        let (p_scale, n_scale) = match self.degree {
            Degree::One => (self.b_norm * self.b_norm, self.b_norm * self.c_norm),
            Degree::Two => {
                let s = self.b_norm * self.b_norm;
                let g = self.b_norm * self.c_norm;
                (s * s, g * g)
            }
        };
        match n_alpha(&p_unit, &self.c) {
            Ok(nu) => SweepPoint {
                alpha,
                p: Some(p_unit.scale(1.0 / p_scale)),
                n_alpha: Some(nu * n_scale),
                feasible: true,
                status: sol.status,
                iterations: sol.iterations,
                duality_gap: sol.duality_gap,
                min_eigenvalue: min_eig,
            },
            Err(_) => failed(SdpStatus::MaxIterations, sol.iterations, sol.duality_gap, min_eig),
        }
    }
}

fn value(p: &SweepPoint) -> f64 {
    p.n_alpha.unwrap_or(f64::INFINITY)
}

#[cfg(feature = "std")]
fn evaluate_grid(prep: &Prepared, alphas: &[f64], settings: &SdpSettings) -> Vec<SweepPoint> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(alphas.len())
        .max(1);
    let chunk = alphas.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = alphas
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&a| prep.evaluate(a, settings)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

#[cfg(not(feature = "std"))]
fn evaluate_grid(prep: &Prepared, alphas: &[f64], settings: &SdpSettings) -> Vec<SweepPoint> {
    alphas.iter().map(|&a| prep.evaluate(a, settings)).collect()
}

/// Solves the normalized SDP at one α exactly as the sweep does, for
/// inspecting iteration logs. Objective and `y` are in normalized units.
pub fn solve_point(
    sys: &LtiSystem,
    degree: Degree,
    settings: &SweepSettings,
    alpha: f64,
) -> Result<SdpSolution, Error> {
    let prep = prepare(sys, degree, settings.multiplier, &settings.sdp)?;
    check_alpha(alpha, prep.kappa)?;
    solve(&prep.problem(alpha), &settings.sdp)
}

/// Evaluates `N_α` on a log-spaced grid over `(0.01κ, 0.99κ)`, refines the
/// best grid point by golden-section search in `log α`, and returns the
/// star norm. At degree 2 the reported star norm is `sqrt(min N_α)`.
pub fn sweep(sys: &LtiSystem, degree: Degree, settings: &SweepSettings) -> Result<SweepResult, Error> {
    if settings.grid_points < 8 {
        return Err(invalid("grid_points", "must be at least 8"));
    }
    let prep = prepare(sys, degree, settings.multiplier, &settings.sdp)?;
    let kappa = prep.kappa;
    let lo = libm::log(0.01 * kappa);
    let hi = libm::log(0.99 * kappa);
    let g = settings.grid_points;
    let grid: Vec<f64> = (0..g)
        .map(|i| libm::exp(lo + (hi - lo) * i as f64 / (g - 1) as f64))
        .collect();
    let mut points = evaluate_grid(&prep, &grid, &settings.sdp);

    let best_grid = (0..g)
        .filter(|&i| points[i].feasible)
        .min_by(|&i, &j| value(&points[i]).total_cmp(&value(&points[j])));
    let Some(ib) = best_grid else {
        return Err(Error::SweepInfeasible {
            kappa,
            statuses: points.iter().map(|p| p.status).collect(),
        });
    };

    // golden section on log α within the neighbouring grid cells
    let mut best = points[ib].clone();
    let mut a = libm::log(grid[ib.saturating_sub(1)]);
    let mut b = libm::log(grid[(ib + 1).min(g - 1)]);
    let ratio = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1: Option<f64> = None;
    let mut f2: Option<f64> = None;
    for _ in 0..settings.refine_iterations {
        let (probe, first) = match (f1, f2) {
            (None, _) => (x1, true),
            (_, None) => (x2, false),
            _ => unreachable!(),
        };
        let pt = prep.evaluate(libm::exp(probe), &settings.sdp);
        let v = value(&pt);
        if v < value(&best) {
            best = pt.clone();
        }
        points.push(pt);
        if first {
            f1 = Some(v);
        } else {
            f2 = Some(v);
        }
        if let (Some(v1), Some(v2)) = (f1, f2) {
            if v1 <= v2 {
                b = x2;
                x2 = x1;
                f2 = Some(v1);
                x1 = b - ratio * (b - a);
                f1 = None;
            } else {
                a = x1;
                x1 = x2;
                f1 = Some(v2);
                x2 = a + ratio * (b - a);
                f2 = None;
            }
        }
    }

    let h = value(&best);
    let star_norm = match degree {
        Degree::One => h,
        Degree::Two => libm::sqrt(h),
    };
    Ok(SweepResult {
        degree,
        kappa,
        points,
        best,
        star_norm,
    })
}

/// Samples the boundary of the certified set of a planar system along
/// `directions` equally spaced angles. Returns `(theta, x1, x2)` rows.
pub fn ellipsoid_boundary(
    point: &SweepPoint,
    degree: Degree,
    directions: usize,
) -> Result<Vec<(f64, f64, f64)>, Error> {
    let p = point
        .p
        .as_ref()
        .filter(|_| point.feasible)
        .ok_or_else(|| invalid("point", "sweep point is not feasible"))?;
    let n = match degree {
        Degree::One => p.rows(),
        Degree::Two => libm::round(libm::sqrt(p.rows() as f64)) as usize,
    };
    if n != 2 {
        return Err(Error::NotPlanar { n });
    }
    if directions == 0 {
        return Err(invalid("directions", "must be positive"));
    }
    let mut out = Vec::with_capacity(directions);
    for k in 0..directions {
        let theta = 2.0 * core::f64::consts::PI * k as f64 / directions as f64;
        let v = Matrix::column(&[libm::cos(theta), libm::sin(theta)]);
        let r = match degree {
            Degree::One => 1.0 / libm::sqrt(quad(p, &v)),
            Degree::Two => libm::pow(quad(p, &kron(&v, &v)), -0.25),
        };
        out.push((theta, r * v[(0, 0)], r * v[(1, 0)]));
    }
    Ok(out)
}

/// `vᵀ P v` for a column vector.
pub fn quad(p: &Matrix, v: &Matrix) -> f64 {
    let pv = p * v;
    v.as_slice().iter().zip(pv.as_slice()).map(|(a, b)| a * b).sum()
}

/// Value of the certified Lyapunov function at `x`.
pub fn lyapunov_value(p: &Matrix, degree: Degree, x: &[f64]) -> f64 {
    let v = Matrix::column(x);
    match degree {
        Degree::One => quad(p, &v),
        Degree::Two => quad(p, &kron(&v, &v)),
    }
}
