mod common;

use common::{high_damping, low_damping, reference_systems, stiff};
use peakgain_core::oracle::{default_horizon, impulse, integrate_abs, l1_exact, stiff_closed_form, worst_case};
use peakgain_core::starnorm::{build_sdp_d1, sweep, Degree, SweepSettings};
use peakgain_core::tailsplit::{shifted_system, tail_split};
use peakgain_core::Error;

#[test]
fn tolerance_tightening_stays_within_budgets() {
    for (name, sys) in reference_systems() {
        let loose = l1_exact(&sys, 1e-4).unwrap();
        let tight = l1_exact(&sys, 1e-8).unwrap();
        for e in [&loose, &tight] {
            assert!(e.tail_bound + e.quadrature_error <= e.tolerance * e.value, "{name}: {e:?}");
        }
        let budget = (1e-4 + 1e-8) * tight.value;
        assert!((loose.value - tight.value).abs() <= budget, "{name}");
        let h_end = impulse(&sys, tight.truncation_time).abs();
        assert!(h_end < 1e-6 * impulse(&sys, 0.0).abs().max(1.0), "{name}: h(T) = {h_end}");
    }
}

#[test]
fn stiff_quadrature_matches_closed_form() {
    let e = l1_exact(&stiff(), 1e-9).unwrap();
    assert!((e.value - stiff_closed_form()).abs() <= 1e-8 * e.value);
}

#[test]
fn quadrature_rejects_bad_intervals() {
    let s = high_damping();
    assert!(integrate_abs(&s, 1.0, 1.0, 1e-8).is_err());
    assert!(integrate_abs(&s, -1.0, 1.0, 1e-8).is_err());
    assert!(integrate_abs(&s, 0.0, 1.0, 0.0).is_err());
    assert!(l1_exact(&s, 0.0).is_err());
}

#[test]
fn oscillating_response_splits_at_every_zero() {
    // low damping: h changes sign every half period of ω = sqrt(7)/4
    let q = integrate_abs(&low_damping(), 0.0, 40.0, 1e-10).unwrap();
    let half_period = std::f64::consts::PI / (7.0f64.sqrt() / 4.0);
    assert_eq!(q.sign_changes.len(), (40.0 / half_period) as usize);
    for w in q.sign_changes.windows(2) {
        assert!(((w[1] - w[0]) - half_period).abs() < 1e-9);
    }
}

#[test]
fn worst_case_converges_and_stays_below_bounds() {
    let settings = SweepSettings::default();
    for (name, sys) in reference_systems() {
        let r = sweep(&sys, Degree::One, &settings).unwrap();
        let p = r.best.p.clone().unwrap();
        let h = default_horizon(&sys);
        let a = worst_case(&sys, &p, 1e-3, h).unwrap();
        let b = worst_case(&sys, &p, 0.5e-3, h).unwrap();
        assert!((a.peak_output - b.peak_output).abs() < 1e-3 * a.peak_output, "{name}");
        let exact = l1_exact(&sys, 1e-7).unwrap();
        assert!(a.peak_output <= exact.value, "{name}");
        assert!(a.peak_output <= r.star_norm, "{name}");
        assert!(!a.peak_near_end(), "{name}");
        assert!(a.trajectory.iter().all(|s| s.u.abs() == 1.0));
    }
}

#[test]
fn tail_split_is_an_upper_bound() {
    let settings = SweepSettings::default();
    let exact = stiff_closed_form();
    for t0 in [0.02, 0.05, 0.2, 1.0] {
        let r = tail_split(&stiff(), t0, Degree::One, 1e-10, &settings).unwrap();
        assert!(r.total >= exact, "t0 = {t0}: {r:?}");
        assert_eq!(r.total, r.head + r.tail_bound);
    }
    let s = shifted_system(&high_damping(), 3.0).unwrap();
    assert_eq!(s.spectrum(), high_damping().spectrum());
}

#[test]
fn alpha_outside_range_is_rejected() {
    let s = high_damping();
    let kappa = s.kappa();
    for alpha in [0.0, kappa, -1.0, 2.0 * kappa] {
        assert!(matches!(build_sdp_d1(&s, alpha), Err(Error::AlphaOutOfRange { .. })), "{alpha}");
    }
    assert!(build_sdp_d1(&s, 0.5 * kappa).is_ok());
}
