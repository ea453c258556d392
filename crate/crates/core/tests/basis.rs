use fracsep::basis::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pbf(atoms: &[Atom]) -> ProductBasisFunction {
    ProductBasisFunction::new(2, atoms).unwrap()
}

fn uniform_grid(n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).flat_map(|i| (0..n).map(move |j| vec![lo + i as f64 * h, lo + j as f64 * h])).collect()
}

fn residual_on(grid: &[Vec<f64>], f: impl Fn(&[f64]) -> f64, span: &[ProductBasisFunction]) -> (f64, f64) {
    let samples: Vec<_> = grid.iter().map(|p| (p.clone(), f(p))).collect();
    let values = DMatrix::from_fn(grid.len(), span.len(), |j, i| span[i].eval(&grid[j]));
    membership_residual(&samples, span, &values).unwrap()
}

/// Two-column least squares by the normal equations and Cramer's rule.
fn two_column_residual(f: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let (aa, ab, bb, af, bf) = (dot(a, a), dot(a, b), dot(b, b), dot(a, f), dot(b, f));
    let det = aa * bb - ab * ab;
    let (ca, cb) = ((af * bb - bf * ab) / det, (aa * bf - ab * af) / det);
    let r: f64 = f.iter().zip(a.iter().zip(b)).map(|(fi, (ai, bi))| (fi - ca * ai - cb * bi).powi(2)).sum();
    r.sqrt() / dot(f, f).sqrt().max(1.0)
}

fn random_atom(rng: &mut ChaCha8Rng) -> Atom {
    let trig = match rng.random_range(0..3) {
        0 => Trig::None,
        1 => Trig::Sin(rng.random_range(0.1..3.0)),
        _ => Trig::Cos(rng.random_range(0.1..3.0)),
    };
    Atom::new(0, rng.random_range(0..4), rng.random_range(-2.0..2.0), trig).unwrap()
}

#[test]
fn derivative_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    for _ in 0..1000 {
        let a = random_atom(&mut rng);
        let x: f64 = rng.random_range(0.2..1.8);
        let d = combination_eval(&atom_derivative(&a), x);
        let fd = (atom_eval(&a, x + h) - atom_eval(&a, x - h)) / (2.0 * h);
        let scale = d.abs().max(atom_eval(&a, x).abs()).max(1.0);
        assert!((d - fd).abs() <= 1e-7 * scale, "{a:?} at {x}: {d} vs {fd}");
    }
}

#[test]
fn member_examples() {
    let grid = tensor_grid(2, 12, GRID_LO, GRID_HI);
    let span = vec![
        pbf(&[]),
        pbf(&[Atom::monomial(0, 1)]),
        pbf(&[Atom::monomial(1, 1)]),
        pbf(&[Atom::monomial(0, 1), Atom::monomial(1, 1)]),
    ];
    assert!(residual_on(&grid, |p| p[0] * p[1], &span).0 <= 1e-12);
    assert_eq!(residual_on(&grid, |_| 0.0, &span).0, 0.0);
}

#[test]
fn product_of_sine_and_cosine_is_not_in_their_span() {
    let grid = uniform_grid(20, 0.0, 1.0);
    let f = |p: &[f64]| p[0].sin() * p[0].cos();
    let fs: Vec<f64> = grid.iter().map(|p| f(p)).collect();
    let sa: Vec<f64> = grid.iter().map(|p| p[0].sin()).collect();
    let ca: Vec<f64> = grid.iter().map(|p| p[0].cos()).collect();
    let oracle = two_column_residual(&fs, &sa, &ca);
    assert!(oracle > 0.1);
    let span = vec![pbf(&[Atom::sin(0, 1.0)]), pbf(&[Atom::cos(0, 1.0)])];
    let (r, _) = residual_on(&grid, f, &span);
    assert!((r - oracle).abs() < 1e-10);
    assert_eq!(test_membership(&f, &span).unwrap().verdict, Membership::NonMember);
}

#[test]
fn membership_verdicts() {
    let span = vec![pbf(&[]), pbf(&[Atom::exp(0, -0.8)]), pbf(&[Atom::exp(1, -0.8)])];
    let member = |p: &[f64]| 2.0 - (-0.8 * p[0]).exp() + 0.3 * (-0.8 * p[1]).exp();
    let r = test_membership(&member, &span).unwrap();
    assert_eq!(r.verdict, Membership::Member);
    assert_eq!(r.points_per_axis, 12);
    let outsider = |p: &[f64]| p[0] * p[1];
    assert_eq!(test_membership(&outsider, &span).unwrap().verdict, Membership::NonMember);
    // A tiny off-span component sits between the thresholds on every grid.
    let faint = |p: &[f64]| member(p) + 1e-6 * p[0] * p[1];
    assert_eq!(test_membership(&faint, &span).unwrap().verdict, Membership::Indeterminate);
}

#[test]
fn classification_thresholds() {
    assert_eq!(classify(1e-8), Membership::Member);
    assert_eq!(classify(1e-4), Membership::NonMember);
    assert_eq!(classify(1e-6), Membership::Indeterminate);
}

#[test]
fn grid_schedule_grows_with_span() {
    assert_eq!(grid_schedule(2, 8)[0], 12);
    assert!(grid_schedule(2, 60)[0].pow(2) >= 180);
    assert!(grid_schedule(3, 7)[0].pow(3) >= 21);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_invariant_under_recombination(
        m in prop::collection::vec(-1.0f64..1.0, 9),
        c in prop::collection::vec(-2.0f64..2.0, 3),
        w in 0.3f64..2.0,
    ) {
        let mut t = DMatrix::from_row_slice(3, 3, &m);
        t += DMatrix::identity(3, 3) * 3.0;
        let base = vec![pbf(&[Atom::sin(0, w)]), pbf(&[Atom::cos(0, w)]), pbf(&[Atom::monomial(1, 1)])];
        let grid = tensor_grid(2, 12, GRID_LO, GRID_HI);
        let f = |p: &[f64]| c[0] * (w * p[0]).sin() + c[1] * p[1] + c[2] * p[0] * p[1];
        let samples: Vec<_> = grid.iter().map(|p| (p.clone(), f(p))).collect();
        let v = DMatrix::from_fn(grid.len(), 3, |j, i| base[i].eval(&grid[j]));
        let (r0, _) = membership_residual(&samples, &base, &v).unwrap();
        let (r1, _) = membership_residual(&samples, &base, &(&v * &t)).unwrap();
        prop_assert!((r0 - r1).abs() <= 1e-10);
    }

    #[test]
    fn second_partials_match_differences(
        c in prop::collection::vec(-2.0f64..2.0, 3), x in 0.2f64..1.8, y in 0.2f64..1.8,
    ) {
        let e = Expansion::new(
            vec![
                pbf(&[Atom::exp(0, -0.5).with_degree(1), Atom::cos(1, 1.3)]),
                pbf(&[Atom::sin(0, 2.0), Atom::monomial(1, 2)]),
                pbf(&[Atom::exp(1, 0.7)]),
            ],
            c,
        ).unwrap();
        let h = 1e-4;
        for i in 0..2 {
            let mut p = [x, y];
            let mut q = [x, y];
            p[i] += h;
            q[i] -= h;
            let fd = (e.eval(&p) - 2.0 * e.eval(&[x, y]) + e.eval(&q)) / (h * h);
            prop_assert!((expansion_partial(&e, i, 2, &[x, y]).unwrap() - fd).abs() < 1e-5);
        }
        let fd = (e.eval(&[x + h, y + h]) - e.eval(&[x + h, y - h]) - e.eval(&[x - h, y + h]) + e.eval(&[x - h, y - h])) / (4.0 * h * h);
        prop_assert!((e.partial(&[1, 1], &[x, y]) - fd).abs() < 1e-5);
    }
}
