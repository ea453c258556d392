use fracsep::specfun::{gamma, ml_eval, ml_term, MLParams};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// ln Γ by upward shift and the Stirling series; independent of the library path.
fn ln_gamma_oracle(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 20.0 {
        shift += x.ln();
        x += 1.0;
    }
    let b = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0];
    let mut s = 0.0;
    let mut p = 1.0 / x;
    for c in b {
        s += c * p;
        p /= x * x;
    }
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + s - shift
}

/// Σ (−1)^k / Γ((k+1)/2) with Γ at integers and half-integers built by recurrence.
fn ml_half_half_minus_one_oracle() -> f64 {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut gamma_half = sqrt_pi; // Γ(n + 1/2), n = 0
    let mut gamma_int = 1.0; // Γ(n + 1), n = 0
    let mut sum = 0.0;
    let mut comp = 0.0;
    for n in 0..150 {
        for term in [1.0 / gamma_half, -1.0 / gamma_int] {
            let t = sum + term;
            comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
            sum = t;
        }
        gamma_half *= n as f64 + 0.5;
        gamma_int *= n as f64 + 1.0;
    }
    sum + comp
}

#[test]
fn gamma_examples() {
    assert_eq!(gamma(5.0).unwrap(), 24.0);
    assert!(rel(gamma(0.5).unwrap(), 1.7724538509055159) < 1e-15);
    assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-15);
}

#[test]
fn gamma_matches_factorials_and_half_integers() {
    let mut fact = 1.0f64;
    let mut half = std::f64::consts::PI.sqrt();
    for n in 1..170 {
        assert!(rel(gamma(n as f64).unwrap(), fact) < 1e-12, "Γ({n})");
        assert!(rel(gamma(n as f64 - 0.5).unwrap(), half) < 1e-12, "Γ({n} - 1/2)");
        fact *= n as f64;
        half *= n as f64 - 0.5;
    }
}

#[test]
fn ml_half_half_at_minus_one() {
    let oracle = ml_half_half_minus_one_oracle();
    assert!(rel(oracle, 0.13660600739194928) < 1e-14);
    let v = ml_eval(MLParams::new(0.5, 0.5).unwrap(), -1.0).unwrap();
    assert!(rel(v, oracle) < 1e-10);
}

#[test]
fn ml_two_one_is_cosh() {
    let v = ml_eval(MLParams::new(2.0, 1.0).unwrap(), 1.0).unwrap();
    assert!(rel(v, 1.0f64.cosh()) < 1e-15);
    assert!(rel(v, 1.5430806348152437) < 1e-15);
}

#[test]
fn ml_is_safe_across_threads() {
    let p = MLParams::new(0.8, 1.3).unwrap();
    let serial: Vec<f64> = (0..64).map(|i| ml_eval(p, -3.0 + 0.1 * i as f64).unwrap()).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|_| s.spawn(|| (0..64).map(|i| ml_eval(p, -3.0 + 0.1 * i as f64).unwrap()).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), serial);
        }
    });
}

proptest! {
    #[test]
    fn gamma_relative_error(x in 0.05f64..170.0) {
        let oracle = ln_gamma_oracle(x).exp();
        prop_assert!(rel(gamma(x).unwrap(), oracle) < 1e-12);
    }

    #[test]
    fn gamma_reflection(x in -30.0f64..-0.01) {
        prop_assume!((x - x.round()).abs() > 1e-3);
        let direct = gamma(x).unwrap();
        let reflected = std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x).unwrap());
        prop_assert!(rel(direct, reflected) < 1e-10);
    }

    #[test]
    fn ml_at_zero_is_reciprocal_gamma(a in 0.4f64..3.0, b in 0.05f64..6.0) {
        let v = ml_eval(MLParams::new(a, b).unwrap(), 0.0).unwrap();
        prop_assert!(rel(v, 1.0 / gamma(b).unwrap()) < 1e-12);
    }

    #[test]
    fn ml_one_one_is_exp(z in -20.0f64..20.0) {
        let v = ml_eval(MLParams::new(1.0, 1.0).unwrap(), z).unwrap();
        prop_assert!(rel(v, z.exp()) < 1e-10);
    }

    #[test]
    fn ml_one_two_is_expm1_over_z(z in -10.0f64..10.0) {
        prop_assume!(z != 0.0);
        let v = ml_eval(MLParams::new(1.0, 2.0).unwrap(), z).unwrap();
        prop_assert!(rel(v, z.exp_m1() / z) < 1e-10);
    }

    #[test]
    fn ml_term_recurrence(a in 0.4f64..2.5, b in 0.1f64..3.0, z in -5.0f64..5.0, k in 0u32..40) {
        prop_assume!(z.abs() > 1e-3);
        let p = MLParams::new(a, b).unwrap();
        let next = ml_term(p, z, k + 1);
        let from_prev = ml_term(p, z, k) * z * gamma(a * k as f64 + b).unwrap()
            / gamma(a * (k + 1) as f64 + b).unwrap();
        prop_assert!(rel(next, from_prev) < 1e-12);
    }
}
