//! Ground truth for the bounds: the ℓ1 norm `∫₀^∞ |h(t)| dt` by adaptive
//! quadrature with a certified tail, and a bang-bang trajectory whose peak
//! output is a lower bound.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error};
use crate::linalg::{expm, Matrix};
use crate::model::LtiSystem;
use crate::starnorm::{sweep, Degree, SweepSettings};
use crate::tailsplit::shifted_system;

/// Largest number of sign-change samples taken on one interval.
const MAX_SAMPLES: usize = 1 << 20;
/// Horizon doublings allowed while certifying the tail.
const MAX_DOUBLINGS: usize = 40;
/// Depth cap for adaptive Simpson bisection.
const MAX_DEPTH: u32 = 50;

/// `h(t) = C e^{At} B` for a fixed system.
#[derive(Debug, Clone)]
pub struct ImpulseResponse<'a> {
    pub sys: &'a LtiSystem,
}

impl<'a> ImpulseResponse<'a> {
    pub fn new(sys: &'a LtiSystem) -> Self {
        ImpulseResponse { sys }
    }

    pub fn eval(&self, t: f64) -> f64 {
        impulse(self.sys, t)
    }
}

/// `C e^{At} B`.
pub fn impulse(sys: &LtiSystem, t: f64) -> f64 {
    if t == 0.0 {
        return dot(sys.c().as_slice(), sys.b().as_slice());
    }
    let x = &expm(&sys.a().scale(t)) * sys.b();
    dot(sys.c().as_slice(), x.as_slice())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of integrating `|h|` over a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    /// Zeros of `h` found inside the interval, in increasing order.
    pub sign_changes: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct L1Estimate {
    /// `∫₀^T |h|`. The true ℓ1 norm lies in `[value − quadrature_error,
    /// value + tail_bound + quadrature_error]`.
    pub value: f64,
    pub truncation_time: f64,
    pub tail_bound: f64,
    pub quadrature_error: f64,
    pub tolerance: f64,
}

/// Sampling step fine enough to see every sign change of `h`.
fn sample_step(sys: &LtiSystem, length: f64) -> f64 {
    let rho = sys
        .spectrum()
        .eigenvalues
        .iter()
        .map(|l| libm::sqrt(l.re * l.re + l.im * l.im))
        .fold(0.0, f64::max);
    let by_spectrum = if rho > 0.0 { 0.25 / rho } else { length };
    by_spectrum.min(length / 512.0).max(length / MAX_SAMPLES as f64)
}

/// Zeros of `h` on `[a, b]`, located by sampling then bisection.
fn sign_changes(sys: &LtiSystem, a: f64, b: f64, evaluations: &mut usize) -> Vec<f64> {
    let step = sample_step(sys, b - a);
    let count = libm::ceil((b - a) / step) as usize;
    let step = (b - a) / count as f64;
    let prop = expm(&sys.a().scale(step));
    let mut x = &expm(&sys.a().scale(a)) * sys.b();
    let c = sys.c().as_slice();
    let mut prev = dot(c, x.as_slice());
    let mut roots = Vec::new();
    for k in 1..=count {
        x = &prop * &x;
        let cur = dot(c, x.as_slice());
        *evaluations += 1;
        if (prev < 0.0 && cur > 0.0) || (prev > 0.0 && cur < 0.0) {
            let mut lo = a + (k - 1) as f64 * step;
            let mut hi = a + k as f64 * step;
            let mut flo = prev;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = impulse(sys, mid);
                *evaluations += 1;
                if (fm < 0.0) == (flo < 0.0) && fm != 0.0 {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    roots
}

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// Adaptive Simpson of `|h|` on an interval where `h` keeps one sign.
fn simpson_abs(sys: &LtiSystem, a: f64, b: f64, tol: f64, evaluations: &mut usize) -> (f64, f64) {
    let f = |t: f64| libm::fabs(impulse(sys, t));
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    *evaluations += 3;
    let mut stack = vec![Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        depth: 0,
    }];
    let mut total = 0.0;
    let mut error = 0.0;
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let lm = 0.5 * (s.a + m);
        let rm = 0.5 * (m + s.b);
        let flm = f(lm);
        let frm = f(rm);
        *evaluations += 2;
        let left = (m - s.a) / 6.0 * (s.fa + 4.0 * flm + s.fm);
        let right = (s.b - m) / 6.0 * (s.fm + 4.0 * frm + s.fb);
        let delta = left + right - s.whole;
        if libm::fabs(delta) <= 15.0 * s.tol || s.depth >= MAX_DEPTH {
            total += left + right + delta / 15.0;
            error += libm::fabs(delta) / 15.0;
        } else {
            stack.push(Segment {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: frm,
                fb: s.fb,
                whole: right,
                tol: 0.5 * s.tol,
                depth: s.depth + 1,
            });
            stack.push(Segment {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: flm,
                fb: s.fm,
                whole: left,
                tol: 0.5 * s.tol,
                depth: s.depth + 1,
            });
        }
    }
    (total, error)
}

/// `∫_a^b |h(t)| dt` to absolute accuracy `abs_tol`, split at the zeros of
/// `h` so that each Simpson piece is smooth.
pub fn integrate_abs(sys: &LtiSystem, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature, Error> {
    if !(a >= 0.0 && b > a && a.is_finite() && b.is_finite()) {
        return Err(invalid("interval", "need 0 <= a < b, both finite"));
    }
    if !(abs_tol > 0.0) {
        return Err(invalid("tolerance", "must be positive"));
    }
    let mut evaluations = 0;
    let roots = sign_changes(sys, a, b, &mut evaluations);
    let mut knots = Vec::with_capacity(roots.len() + 2);
    knots.push(a);
    knots.extend_from_slice(&roots);
    knots.push(b);
    let mut value = 0.0;
    let mut error = 0.0;
    for w in knots.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let share = abs_tol * (w[1] - w[0]) / (b - a);
        let (v, e) = simpson_abs(sys, w[0], w[1], share, &mut evaluations);
        value += v;
        error += e;
    }
    Ok(Quadrature {
        value,
        error_estimate: error,
        sign_changes: roots,
        evaluations,
    })
}

/// Settings for the sweep that certifies a tail. Any α gives a valid
/// bound, so a coarse sweep suffices.
pub fn tail_sweep_settings() -> SweepSettings {
    SweepSettings {
        grid_points: 16,
        refine_iterations: 20,
        ..SweepSettings::default()
    }
}

/// Certified bound on `∫_T^∞ |h|`: the degree-1 star norm of the system
/// driven through `e^{AT} B`.
pub fn tail_bound(sys: &LtiSystem, t: f64, settings: &SweepSettings) -> Result<f64, Error> {
    let shifted = shifted_system(sys, t)?;
    if shifted.b().max_abs() < f64::MIN_POSITIVE {
        return Ok(0.0);
    }
    Ok(sweep(&shifted, Degree::One, settings)?.star_norm)
}

/// `∫₀^∞ |h|` to relative accuracy `tolerance`. The horizon starts at ten
/// slowest time constants and doubles until the certified tail is below
/// `tolerance · value / 2`.
pub fn l1_exact(sys: &LtiSystem, tolerance: f64) -> Result<L1Estimate, Error> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(invalid("tolerance", "must lie in (0, 1)"));
    }
    let settings = tail_sweep_settings();
    let mut horizon = 10.0 / libm::fabs(sys.spectrum().max_real_part);
    // coarse pass to size the absolute quadrature tolerance
    let coarse = integrate_abs(sys, 0.0, horizon, 1e-3 * (1.0 + sys.b().norm_fro() * sys.c().norm_fro()))?;
    let scale = coarse.value.max(f64::MIN_POSITIVE);
    let quad_tol = 0.25 * tolerance * scale;

    let first = integrate_abs(sys, 0.0, horizon, quad_tol)?;
    let mut value = first.value;
    let mut quad_err = first.error_estimate;
    let mut tail = tail_bound(sys, horizon, &settings)?;
    let mut doublings = 0;
    while tail >= 0.5 * tolerance * value {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::TailNotShrinking {
                horizon,
                tail_bound: tail,
            });
        }
        // the extra piece is small, so its share of the budget can be too
        let extra = integrate_abs(sys, horizon, 2.0 * horizon, 0.25 * quad_tol)?;
        value += extra.value;
        quad_err += extra.error_estimate;
        horizon *= 2.0;
        let next = tail_bound(sys, horizon, &settings)?;
        if !(next < tail) {
            return Err(Error::TailNotShrinking {
                horizon,
                tail_bound: next,
            });
        }
        tail = next;
        doublings += 1;
    }
    Ok(L1Estimate {
        value,
        truncation_time: horizon,
        tail_bound: tail,
        quadrature_error: quad_err,
        tolerance,
    })
}

/// `∫₀^∞ |e^{−t} − 200 e^{−100t}| dt` in closed form.
pub fn stiff_closed_form() -> f64 {
    let root = libm::log(200.0) / 99.0;
    1.0 + 2.0 * libm::exp(-root) - 4.0 * libm::exp(-100.0 * root)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseRun {
    pub p: Matrix,
    pub dt: f64,
    pub horizon: f64,
    pub trajectory: Vec<TrajectorySample>,
    pub peak_output: f64,
    pub peak_time: f64,
}

impl WorstCaseRun {
    /// The peak sits in the last 1% of the run, so a longer horizon may
    /// find a larger one.
    pub fn peak_near_end(&self) -> bool {
        self.peak_time >= 0.99 * self.horizon
    }
}

/// Default horizon: ten slowest time constants.
pub fn default_horizon(sys: &LtiSystem) -> f64 {
    10.0 / libm::fabs(sys.spectrum().max_real_part)
}

/// `sign(v)` with `sign(0) = +1`.
fn bang(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Simulates `ẋ = Ax + Bu` from the origin with `u = sign(xᵀPB)` held over
/// each RK4 step, and records the peak `|Cx|`.
pub fn worst_case(sys: &LtiSystem, p: &Matrix, dt: f64, horizon: f64) -> Result<WorstCaseRun, Error> {
    let n = sys.n();
    if p.shape() != (n, n) {
        return Err(Error::Dimension {
            field: "P",
            expected: (n, n),
            found: p.shape(),
        });
    }
    crate::linalg::cholesky(p)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", "must be positive"));
    }
    let a = sys.a();
    let b = sys.b().as_slice();
    let c = sys.c().as_slice();
    let pb = (p * sys.b()).into_vec();
    let steps = libm::ceil(horizon / dt) as usize;
    let deriv = |x: &[f64], u: f64| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() + b[i] * u)
            .collect()
    };
    let mut x = vec![0.0; n];
    let mut trajectory = Vec::with_capacity(steps + 1);
    let mut peak = 0.0;
    let mut peak_time = 0.0;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let u = bang(dot(&x, &pb));
        let y = dot(c, &x);
        if libm::fabs(y) > peak {
            peak = libm::fabs(y);
            peak_time = t;
        }
        trajectory.push(TrajectorySample {
            t,
            x: x.clone(),
            u,
            y,
        });
        if k == steps {
            break;
        }
        let k1 = deriv(&x, u);
        let x2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1[i]).collect();
        let k2 = deriv(&x2, u);
        let x3: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k2[i]).collect();
        let k3 = deriv(&x3, u);
        let x4: Vec<f64> = (0..n).map(|i| x[i] + dt * k3[i]).collect();
        let k4 = deriv(&x4, u);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(WorstCaseRun {
        p: p.clone(),
        dt,
        horizon: steps as f64 * dt,
        trajectory,
        peak_output: peak,
        peak_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(a: &[[f64; 2]; 2], b: [f64; 2], c: [f64; 2]) -> LtiSystem {
        LtiSystem::new(Matrix::from_rows(a).unwrap(), Matrix::column(&b), Matrix::row(&c)).unwrap()
    }

    fn stiff() -> LtiSystem {
        sys(&[[-1.0, 0.0], [0.0, -100.0]], [1.0, 100.0], [1.0, -2.0])
    }

    #[test]
    fn impulse_values() {
        let hi = sys(&[[0.0, 1.0], [-4.0, -4.0]], [0.0, 1.0], [1.0, 1.0]);
        assert_eq!(impulse(&hi, 0.0), 1.0);
        let s = stiff();
        for t in [0.0, 0.01, 0.0535, 0.3, 2.0] {
            let exact = libm::exp(-t) - 200.0 * libm::exp(-100.0 * t);
            assert!((impulse(&s, t) - exact).abs() < 1e-12 * (1.0 + exact.abs()) * 200.0);
        }
        let scalar = LtiSystem::new(
            Matrix::from_rows(&[[-1.0]]).unwrap(),
            Matrix::from_rows(&[[1.0]]).unwrap(),
            Matrix::from_rows(&[[1.0]]).unwrap(),
        )
        .unwrap();
        let h = ImpulseResponse::new(&scalar);
        assert!((h.eval(1.5) - libm::exp(-1.5)).abs() < 1e-14);
    }

    #[test]
    fn stiff_sign_change_located() {
        let q = integrate_abs(&stiff(), 0.0, 1.0, 1e-10).unwrap();
        assert_eq!(q.sign_changes.len(), 1);
        assert!((q.sign_changes[0] - libm::log(200.0) / 99.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let est = l1_exact(&stiff(), 1e-7).unwrap();
        assert!((est.value - stiff_closed_form()).abs() < 1e-6, "{est:?}");
        assert!(est.tail_bound + est.quadrature_error <= 1e-7 * est.value);
        assert!((stiff_closed_form() - 2.876_82).abs() < 1e-5);
    }

    #[test]
    fn worst_case_departs_with_plus_one() {
        let hi = sys(&[[0.0, 1.0], [-4.0, -4.0]], [0.0, 1.0], [1.0, 1.0]);
        let run = worst_case(&hi, &Matrix::identity(2), 1e-3, 1.0).unwrap();
        assert_eq!(run.trajectory[0].u, 1.0);
        assert!(run.trajectory[1].x[1] > 0.0);
        assert!(run.trajectory.iter().all(|s| s.u.abs() == 1.0));
        assert!(worst_case(&hi, &Matrix::identity(3), 1e-3, 1.0).is_err());
        assert!(worst_case(&hi, &Matrix::identity(2), 0.0, 1.0).is_err());
    }
}
