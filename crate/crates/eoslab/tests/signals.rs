use approx::{assert_abs_diff_eq, assert_relative_eq};
use eoslab::numerics::integrate;
use eoslab::signals::{calibrate_coupling, cat_moments, vacuum_moments, MomentSequence, SignalSpec};
use proptest::prelude::*;

#[test]
fn vacuum_moment_values() {
    let g = 0.03;
    let m = vacuum_moments(g, 6).unwrap();
    assert_eq!(m.get(0), 1.0);
    assert_eq!(m.get(1), 0.0);
    assert_relative_eq!(m.get(2), g * g, max_relative = 1e-14);
    assert_eq!(m.get(3), 0.0);
    assert_relative_eq!(m.get(4), 3.0 * g.powi(4), max_relative = 1e-14);
    assert_relative_eq!(m.get(6), 15.0 * g.powi(6), max_relative = 1e-14);
    assert!(vacuum_moments(0.0, 6).is_err());
    assert!(vacuum_moments(0.1, 1).is_err());
}

#[test]
fn vacuum_m4_matches_gaussian_quadrature() {
    // independent oracle: integrate x^4 against a unit-variance Gaussian
    let density = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let m4 = integrate(&|x| x.powi(4) * density(x), -40.0, 40.0, 1e-12).unwrap();
    let g = 0.5;
    assert_relative_eq!(vacuum_moments(g, 4).unwrap().get(4), m4 * g.powi(4), max_relative = 1e-9);
}

#[test]
fn cat_moment_basics() {
    let m = cat_moments(std::f64::consts::SQRT_2, 0.02, 6).unwrap();
    assert_eq!(m.get(0), 1.0);
    assert_eq!(m.get(1), 0.0);
    assert_eq!(m.get(3), 0.0);
    assert_eq!(m.get(5), 0.0);
    // non-Gaussian shape: fourth-over-second-squared differs from 3
    let ratio = m.get(4) / (m.get(2) * m.get(2));
    assert!(ratio > 1.0);
    assert!((ratio - 3.0).abs() > 0.1);
}

#[test]
fn cat_moments_against_fixed_grid_oracle() {
    // trapezoid on a dense fixed grid as an independent integrator
    let alpha = std::f64::consts::SQRT_2;
    let x0 = 2.0 * alpha;
    let n = 800_001;
    let (lo, hi) = (-x0 - 12.0, x0 + 12.0);
    let h = (hi - lo) / (n - 1) as f64;
    let density = |x: f64| {
        let phi = |u: f64| (-u * u / 4.0f64).exp();
        let psi = phi(x - x0) + phi(x + x0);
        psi * psi
    };
    let mut z = 0.0;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for i in 0..n {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let d = w * density(x);
        z += d;
        m2 += d * x * x;
        m4 += d * x.powi(4);
    }
    let g = 0.1;
    let m = cat_moments(alpha, g, 4).unwrap();
    assert_relative_eq!(m.get(2), m2 / z * g * g, max_relative = 1e-8);
    assert_relative_eq!(m.get(4), m4 / z * g.powi(4), max_relative = 1e-8);
}

#[test]
fn cat_converges_to_vacuum_for_small_amplitude() {
    let g = 0.01;
    let cat = cat_moments(1e-3, g, 6).unwrap();
    let vac = vacuum_moments(g, 6).unwrap();
    for k in 0..=6 {
        assert_abs_diff_eq!(cat.get(k), vac.get(k), epsilon = 1e-6);
    }
}

#[test]
fn moment_sequence_validation() {
    assert!(MomentSequence::new(vec![]).is_err());
    assert!(MomentSequence::new(vec![0.9, 0.0, 1.0]).is_err());
    assert!(MomentSequence::new(vec![1.0, 0.0, -0.5]).is_err());
    // m4 < m2^2 is not a valid state
    assert!(MomentSequence::new(vec![1.0, 0.0, 1.0, 0.0, 0.5]).is_err());
    assert!(MomentSequence::new(vec![1.0, 0.0, 1.0, 0.0, 3.0]).is_ok());
}

#[test]
fn calibrate_coupling_examples() {
    let g0 = 0.004;
    let spec = SignalSpec::Vacuum { g: g0 };
    // identity calibration
    assert_relative_eq!(calibrate_coupling(&spec, g0 * g0).unwrap(), g0, max_relative = 1e-12);
    // doubling the target m2 scales g by sqrt(2)
    let g2 = calibrate_coupling(&spec, 2.0 * g0 * g0).unwrap();
    assert_relative_eq!(g2, g0 * 2.0f64.sqrt(), max_relative = 1e-12);
    // cat calibrated to the vacuum m2 reproduces it
    let cat = SignalSpec::Cat { alpha_cat: std::f64::consts::SQRT_2, g: 1.0 };
    let g_cat = calibrate_coupling(&cat, g0 * g0).unwrap();
    let m2 = cat.with_coupling(g_cat).unwrap().moments(2).unwrap().get(2);
    assert_relative_eq!(m2, g0 * g0, max_relative = 1e-10);
}

#[test]
fn custom_signals_validate_against_invariants() {
    let ok = SignalSpec::Custom { moments: vec![1.0, 0.0, 0.04, 0.0, 0.01] };
    assert!(ok.moments(4).is_ok());
    let bad = SignalSpec::Custom { moments: vec![1.0, 0.0, 1.0, 0.0, 0.2] };
    assert!(bad.moments(4).is_err());
    assert!(ok.coupling().is_none());
    assert!(ok.with_coupling(0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Replacing g by lambda g multiplies m_k by lambda^k.
    #[test]
    fn moment_scaling_law(g in 0.001f64..0.5, lambda in 0.1f64..5.0) {
        let base = vacuum_moments(g, 6).unwrap();
        let scaled = vacuum_moments(lambda * g, 6).unwrap();
        for k in (2..=6).step_by(2) {
            let expect = base.get(k) * lambda.powi(k as i32);
            prop_assert!((scaled.get(k) - expect).abs() <= 1e-12 * expect.abs());
        }
    }

    #[test]
    fn cat_scaling_law(lambda in 0.5f64..2.0) {
        let g = 0.05;
        let base = cat_moments(1.0, g, 4).unwrap();
        let scaled = cat_moments(1.0, lambda * g, 4).unwrap();
        for k in (2..=4).step_by(2) {
            let expect = base.get(k) * lambda.powi(k as i32);
            prop_assert!(((scaled.get(k) - expect) / expect).abs() < 1e-9);
        }
    }
}
