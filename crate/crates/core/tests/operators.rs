use fracsep::basis::{Atom, Expansion, ProductBasisFunction};
use fracsep::operators::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bilinear_span() -> Vec<ProductBasisFunction> {
    let b = |a: &[Atom]| ProductBasisFunction::new(2, a).unwrap();
    vec![b(&[]), b(&[Atom::monomial(0, 1)]), b(&[Atom::monomial(1, 1)]), b(&[Atom::monomial(0, 1), Atom::monomial(1, 1)])]
}

fn random_params(rng: &mut ChaCha8Rng) -> CubicOperatorParams {
    let mut p = CubicOperatorParams::zero();
    for prefix in FAMILY_PREFIXES {
        for s in 1..=2 {
            for i in 0..6 {
                p.set(&format!("{prefix}{s}{i}"), rng.random_range(-1.0..1.0)).unwrap();
            }
        }
    }
    p
}

fn random_bilinear(rng: &mut ChaCha8Rng) -> Expansion {
    Expansion::new(bilinear_span(), (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Central differences of the flux plus the convection terms, all from point values.
fn f_by_differences(p: &CubicOperatorParams, s: usize, u1: &Expansion, u2: &Expansion, x: &[f64]) -> f64 {
    let h = 1e-5;
    let mut total = 0.0;
    for i in 0..2 {
        let (mut a, mut b) = (x.to_vec(), x.to_vec());
        a[i] += h;
        b[i] -= h;
        total += (flux(p, s, i, u1, u2, &a) - flux(p, s, i, u1, u2, &b)) / (2.0 * h);
        let d1 = (u1.eval(&a) - u1.eval(&b)) / (2.0 * h);
        let d2 = (u2.eval(&a) - u2.eval(&b)) / (2.0 * h);
        let c = &p.components[s];
        let (z, y) = if i == 0 { (&c.zeta1, &c.upsilon1) } else { (&c.zeta2, &c.upsilon2) };
        let (v1, v2) = (u1.eval(x), u2.eval(x));
        total += coefficient_eval(z, v1, v2) * d1 + coefficient_eval(y, v1, v2) * d2;
    }
    total
}

#[test]
fn chain_rule_matches_flux_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let p = random_params(&mut rng);
        for _ in 0..10 {
            let (u1, u2) = (random_bilinear(&mut rng), random_bilinear(&mut rng));
            for _ in 0..25 {
                let x = [rng.random_range(0.1..1.9), rng.random_range(0.1..1.9)];
                let (f1, f2) = apply_f(&p, &u1, &u2, &x).unwrap();
                for (s, f) in [(0, f1), (1, f2)] {
                    let fd = f_by_differences(&p, s, &u1, &u2, &x);
                    assert!((f - fd).abs() <= 1e-6 * f.abs().max(1.0), "{f} vs {fd}");
                }
            }
        }
    }
}

#[test]
fn chain_rule_matches_differences_on_transcendental_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let b = |a: &[Atom]| ProductBasisFunction::new(2, a).unwrap();
    let span = vec![b(&[Atom::sin(0, 1.3), Atom::exp(1, -0.4)]), b(&[Atom::cos(1, 0.7).with_degree(1)]), b(&[])];
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let u1 = Expansion::new(span.clone(), (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let u2 = Expansion::new(span.clone(), (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let x = [rng.random_range(0.1..1.9), rng.random_range(0.1..1.9)];
        let (f1, f2) = apply_f(&p, &u1, &u2, &x).unwrap();
        assert!((f1 - f_by_differences(&p, 0, &u1, &u2, &x)).abs() <= 1e-6 * f1.abs().max(1.0));
        assert!((f2 - f_by_differences(&p, 1, &u1, &u2, &x)).abs() <= 1e-6 * f2.abs().max(1.0));
    }
}

#[test]
fn cubic_in_amplitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let (u1, u2) = (random_bilinear(&mut rng), random_bilinear(&mut rng));
        let x = [rng.random_range(0.1..1.9), rng.random_range(0.1..1.9)];
        let taus = [-1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let vals: Vec<(f64, f64)> = taus.iter().map(|&t| apply_f(&p, &u1.scaled(t), &u2.scaled(t), &x).unwrap()).collect();
        for s in 0..2 {
            let y: Vec<f64> = vals.iter().map(|v| if s == 0 { v.0 } else { v.1 }).collect();
            // Least-squares cubic through the first five samples predicts the sixth.
            let m = DMatrix::from_fn(5, 4, |r, c| taus[r].powi(c as i32));
            let coef = m.svd(true, true).solve(&DVector::from_column_slice(&y[..5]), 0.0).unwrap();
            let pred: f64 = (0..4).map(|c| coef[c] * taus[5].powi(c as i32)).sum();
            assert!((pred - y[5]).abs() <= 1e-9 * y[5].abs().max(1.0), "{pred} vs {}", y[5]);
        }
    }
}

#[test]
fn heat_specialization_on_a_sine() {
    let a10: f64 = 2.3;
    let k10 = 0.7;
    let p = CubicOperatorParams::zero()
        .with("k10", k10).unwrap()
        .with("p10", 1.1).unwrap()
        .with("q20", 0.4).unwrap()
        .with("c20", 0.9).unwrap();
    let b = |a: &[Atom]| ProductBasisFunction::new(2, a).unwrap();
    let u1 = Expansion::new(vec![b(&[Atom::sin(0, a10.sqrt())])], vec![1.0]).unwrap();
    let u2 = Expansion::new(vec![b(&[Atom::cos(1, 1.2)])], vec![0.5]).unwrap();
    for x in [[0.3, 0.2], [1.1, 1.7], [1.9, 0.4]] {
        let (f1, _) = apply_f(&p, &u1, &u2, &x).unwrap();
        assert!((f1 + k10 * a10 * u1.eval(&x)).abs() < 1e-13);
    }
}

#[test]
fn bilinear_fields_see_only_convection() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let b = |a: &[Atom]| ProductBasisFunction::new(2, a).unwrap();
    let xy = b(&[Atom::monomial(0, 1), Atom::monomial(1, 1)]);
    for _ in 0..20 {
        let mut p = CubicOperatorParams::zero();
        let mut r = |name: &str| {
            let v = rng.random_range(-1.0..1.0);
            p.set(name, v).unwrap();
            v
        };
        let mut coupled = |s: u8| {
            for name in ["k", "q", "p", "c", "eta", "g", "d", "h"] {
                r(&format!("{name}{s}0"));
            }
            let q1 = r(&format!("q{s}1"));
            let c1 = r(&format!("c{s}1"));
            (q1, c1)
        };
        let (q11, c11) = coupled(1);
        let (q21, c21) = coupled(2);
        for (s, q, c) in [(1, q11, c11), (2, q21, c21)] {
            p.set(&format!("k{s}2"), -q).unwrap();
            p.set(&format!("p{s}2"), -c).unwrap();
        }
        let (a14, a24) = (1.3, -0.6);
        let u1 = Expansion::new(vec![xy.clone()], vec![a14]).unwrap();
        let u2 = Expansion::new(vec![xy.clone()], vec![a24]).unwrap();
        let x = [rng.random_range(0.1..1.9), rng.random_range(0.1..1.9)];
        let (f1, f2) = apply_f(&p, &u1, &u2, &x).unwrap();
        for (s, f) in [(1, f1), (2, f2)] {
            let g = |n: &str| p.get(&format!("{n}{s}0")).unwrap();
            let x1_coef = g("h") * a24 + g("d") * a14;
            let x2_coef = g("g") * a24 + g("eta") * a14;
            assert!((f - (x1_coef * x[0] + x2_coef * x[1])).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn heat_moisture_system_is_linear(
        kappa in prop::array::uniform2(0.1f64..2.0),
        tau in prop::array::uniform3(-1.0f64..1.0),
        c in prop::collection::vec(-1.0f64..1.0, 8),
        a in -2.0f64..2.0, b in -2.0f64..2.0,
        x in prop::array::uniform2(0.1f64..1.9),
    ) {
        let p = CubicOperatorParams::heat_moisture(kappa, tau);
        let bb = |at: &[Atom]| ProductBasisFunction::new(2, at).unwrap();
        let span = vec![bb(&[Atom::sin(0, 1.1)]), bb(&[Atom::exp(1, -0.5)]), bb(&[Atom::monomial(0, 2)]), bb(&[])];
        let e = |k: usize| Expansion::new(span.clone(), c[k..k + 4].to_vec()).unwrap();
        let (u1, u2, v1, v2) = (e(0), e(4), e(2), e(1));
        let w1 = Expansion::new(span.clone(), u1.coefficients().iter().zip(v1.coefficients()).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let w2 = Expansion::new(span.clone(), u2.coefficients().iter().zip(v2.coefficients()).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let (f1, f2) = apply_f(&p, &w1, &w2, &x).unwrap();
        let (g1, g2) = apply_f(&p, &u1, &u2, &x).unwrap();
        let (h1, h2) = apply_f(&p, &v1, &v2, &x).unwrap();
        prop_assert!((f1 - (a * g1 + b * h1)).abs() <= 1e-12 * (1.0 + f1.abs()));
        prop_assert!((f2 - (a * g2 + b * h2)).abs() <= 1e-12 * (1.0 + f2.abs()));
        // κ_s Δ(τ·u) directly.
        let lap = |u: &Expansion| u.partial(&[2, 0], &x) + u.partial(&[0, 2], &x);
        prop_assert!((g1 - kappa[0] * (tau[0] * lap(&u1) + tau[1] * lap(&u2))).abs() <= 1e-12 * (1.0 + g1.abs()));
        prop_assert!((g2 - kappa[1] * (tau[2] * lap(&u1) + tau[0] * lap(&u2))).abs() <= 1e-12 * (1.0 + g2.abs()));
    }
}
