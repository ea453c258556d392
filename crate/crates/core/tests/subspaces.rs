use fracsep::basis::{Atom, Expansion, ProductBasisFunction};
use fracsep::operators::{apply_f, CubicOperatorParams};
use fracsep::subspaces::*;
use fracsep::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::sync::OnceLock;

const SEED: u64 = 20240601;

fn corpus() -> &'static Corpus {
    static C: OnceLock<Corpus> = OnceLock::new();
    C.get_or_init(|| load_table_corpus(&default_corpus_path()).unwrap())
}

/// Multi-indices e with e_i < k_i and at most `max_nonzero` nonzero entries.
fn brute_force_count(k: &[usize], max_nonzero: usize) -> usize {
    let total: usize = k.iter().product();
    (0..total)
        .filter(|&start| {
            let mut idx = start;
            let mut nonzero = 0;
            for &ki in k {
                if idx % ki != 0 {
                    nonzero += 1;
                }
                idx /= ki;
            }
            nonzero <= max_nonzero
        })
        .count()
}

#[test]
fn dimension_formulas() {
    let all2 = vec![vec![2, 2], vec![2, 2]];
    assert_eq!(type1_dimension(&all2).unwrap(), 8);
    assert_eq!(typep_dimension(&all2, 1).unwrap(), 6);
    assert_eq!(typep_dimension(&[vec![2, 2, 2]], 2).unwrap(), brute_force_count(&[2, 2, 2], 1));
    assert_eq!(typep_dimension(&[vec![2, 2, 2]], 2).unwrap(), 4);
    assert_eq!(type1_dimension(&vec![vec![1, 1]; 4]).unwrap(), 4);
    assert_eq!(typep_dimension(&vec![vec![1, 1, 1]; 4], 2).unwrap(), 4);
}

#[test]
fn type1_space_examples() {
    let a10: f64 = 2.5;
    let ode = LinearODESpec::second_order(&[vec![(a10, 0.0), (0.0, 0.0)], vec![(0.0, 0.7), (0.0, 0.0)]]).unwrap();
    let w = build_type1_space(&ode).unwrap();
    let b = |atoms: &[Atom]| ProductBasisFunction::new(2, atoms).unwrap();
    let s = a10.sqrt();
    assert_eq!(
        w.spans()[0],
        vec![
            b(&[Atom::sin(0, s)]),
            b(&[Atom::sin(0, s), Atom::monomial(1, 1)]),
            b(&[Atom::cos(0, s)]),
            b(&[Atom::cos(0, s), Atom::monomial(1, 1)]),
        ]
    );
    assert_eq!(w.spans()[1][..2], [b(&[]), b(&[Atom::monomial(1, 1)])]);
    assert_eq!(w.spans()[1][2], b(&[Atom::exp(0, -0.7)]));
    assert_eq!(w.total_dimension(), type1_dimension(&ode.orders()).unwrap());
    assert!(kernel_residual(&w).unwrap() < 1e-12);
    let third = LinearODESpec::new(1, vec![vec![vec![1.0, 0.0, 2.0]]]).unwrap();
    assert!(matches!(build_type1_space(&third), Err(Error::Capability(_))));
}

#[test]
fn type2_space_examples() {
    let c = 0.6;
    let ode = LinearODESpec::second_order(&[vec![(0.0, c), (0.0, c)], vec![(0.0, 0.0), (0.0, 0.0)]]).unwrap();
    let w = build_type2_space(&ode).unwrap();
    let b = |atoms: &[Atom]| ProductBasisFunction::new(2, atoms).unwrap();
    assert_eq!(w.spans()[0], vec![b(&[]), b(&[Atom::exp(0, -c)]), b(&[Atom::exp(1, -c)])]);
    assert_eq!(w.spans()[1], vec![b(&[]), b(&[Atom::monomial(0, 1)]), b(&[Atom::monomial(1, 1)])]);
    assert_eq!(w.total_dimension(), 6);
    let bad = LinearODESpec::second_order(&[vec![(1.0, 0.0), (0.0, 0.0)]]).unwrap();
    assert!(build_type2_space(&bad).is_err());

    // Three coordinates, all y'' = 0: the constant, the coordinates, and their pairwise products.
    let flat = LinearODESpec::new(3, vec![vec![vec![0.0, 0.0]; 3]]).unwrap();
    let w3 = build_typep_space(&flat, 1).unwrap();
    let x = |i| Atom::monomial(i, 1);
    let b3 = |atoms: &[Atom]| ProductBasisFunction::new(3, atoms).unwrap();
    let expected = vec![
        b3(&[]),
        b3(&[x(0)]),
        b3(&[x(1)]),
        b3(&[x(2)]),
        b3(&[x(0), x(1)]),
        b3(&[x(0), x(2)]),
        b3(&[x(1), x(2)]),
    ];
    assert_eq!(w3.spans()[0], expected);
    assert_eq!(build_typep_space(&flat, 2).unwrap().total_dimension(), typep_dimension(&[vec![2, 2, 2]], 2).unwrap());
}

#[test]
fn corpus_shape() {
    let c = corpus();
    assert_eq!(c.cases.len(), 40);
    assert_eq!(c.cases.iter().map(|k| k.case_id).collect::<Vec<_>>(), (1..=40).collect::<Vec<_>>());
    for k in &c.cases {
        let orders = k.subspace.ode().unwrap().orders();
        assert_eq!(k.subspace.spans()[0].len(), 4, "case {}", k.case_id);
        assert_eq!(k.subspace.spans()[1].len(), 4, "case {}", k.case_id);
        assert_eq!(type1_dimension(&orders).unwrap(), k.subspace.total_dimension());
    }
    let case1 = c.case(1).unwrap();
    let theta = case1.scenario["b10"] - case1.scenario["b11"].powi(2);
    let s = theta.sqrt();
    let b = |atoms: &[Atom]| ProductBasisFunction::new(2, atoms).unwrap();
    let x2 = Atom::monomial(1, 1);
    let expected = [b(&[Atom::sin(0, s)]), b(&[Atom::cos(0, s)]), b(&[Atom::sin(0, s), x2]), b(&[Atom::cos(0, s), x2])];
    assert!(expected.iter().all(|e| case1.subspace.spans()[0].contains(e)));
    let r40 = &c.case(40).unwrap().blocks[0].restrictions;
    assert!(r40.contains(&("p12".into(), "d12/a21".into())));
    assert!(r40.contains(&("c11".into(), "-d12/a21".into())));
    assert_eq!(c.case(24).unwrap().blocks.len(), 2);
}

#[test]
fn corpus_spans_solve_their_odes() {
    for k in &corpus().cases {
        let r = kernel_residual(&k.subspace).unwrap();
        if k.erratum.is_none() {
            assert!(r <= 1e-8, "case {}: {r}", k.case_id);
        }
    }
    // The mixed √a20 / √b20 span is flagged exactly because it fails this check.
    assert!(kernel_residual(&corpus().case(12).unwrap().subspace).unwrap() > 1e-2);
}

#[test]
fn case_39_passes_and_its_perturbation_fails() {
    let c = corpus().case(39).unwrap();
    let r = verify_case(c, 16, SEED, None).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.max_residual <= 1e-8);
    let p = verify_case(c, 16, SEED, Some(("p12", 0.1))).unwrap();
    assert_eq!(p.verdict, Verdict::Fail);
    let w = p.witness.unwrap();
    // One span element per component already exposes the violation.
    assert!(w.draw < 8);
    for c in &w.coefficients {
        assert_eq!(c.iter().filter(|v| **v != 0.0).count(), 1);
    }
}

#[test]
fn zero_operator_preserves_every_space() {
    for k in corpus().cases.iter().step_by(7) {
        let r = verify_invariance(&CubicOperatorParams::zero(), &k.subspace, 8, SEED).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.max_residual, 0.0);
    }
}

/// Residual of F_s(u) against W_s on a uniform grid, by a QR fit independent of the library's.
fn independent_residual(params: &CubicOperatorParams, space: &ProductSubspaceSpec, w: &Witness) -> f64 {
    let u: Vec<Expansion> =
        (0..2).map(|s| Expansion::new(space.spans()[s].clone(), w.coefficients[s].clone()).unwrap()).collect();
    let n = 17;
    let pts: Vec<[f64; 2]> = (0..n * n).map(|j| [0.15 + 1.7 * (j / n) as f64 / (n - 1) as f64, 0.15 + 1.7 * (j % n) as f64 / (n - 1) as f64]).collect();
    let span = &space.spans()[w.component];
    let a = DMatrix::from_fn(pts.len(), span.len(), |j, i| span[i].eval(&pts[j]));
    let f = DVector::from_iterator(
        pts.len(),
        pts.iter().map(|p| {
            let (f1, f2) = apply_f(params, &u[0], &u[1], p).unwrap();
            if w.component == 0 { f1 } else { f2 }
        }),
    );
    let qr = a.clone().qr();
    let c = qr.r().solve_upper_triangular(&(qr.q().transpose() * &f)).unwrap();
    (&f - &a * c).norm() / f.norm().max(1.0)
}

#[test]
fn fail_witnesses_reproduce_on_a_fresh_grid() {
    let mut checked = 0;
    for k in &corpus().cases {
        let names = k.restricted_names();
        let perturb = names.first().map(|n| (n.as_str(), 0.1));
        let r = verify_case(k, 16, SEED, perturb).unwrap();
        if r.verdict != Verdict::Fail {
            continue;
        }
        let w = r.witness.expect("FAIL carries a witness");
        let params = (0..k.blocks.len())
            .map(|b| k.params(b, perturb).unwrap())
            .find(|p| verify_invariance(p, &k.subspace, 16, SEED).unwrap().verdict == Verdict::Fail)
            .unwrap();
        let fresh = independent_residual(&params, &k.subspace, &w);
        assert!(fresh >= 1e-4, "case {}: {fresh}", k.case_id);
        checked += 1;
    }
    assert!(checked >= 35);
}

#[test]
fn every_printed_restriction_is_necessary() {
    for k in corpus().cases.iter().filter(|k| k.erratum.is_none()) {
        assert_eq!(verify_case(k, 16, SEED, None).unwrap().verdict, Verdict::Pass, "case {}", k.case_id);
        for n in k.restricted_names() {
            let r = verify_case(k, 16, SEED, Some((&n, 0.1))).unwrap();
            assert_eq!(r.verdict, Verdict::Fail, "case {} with {n} perturbed", k.case_id);
            assert!(r.witness.is_some());
        }
    }
}

#[test]
fn errata_cases_fail_as_tabulated() {
    let c = corpus();
    assert_eq!(c.errata.keys().copied().collect::<Vec<_>>(), vec![2, 12, 14, 15, 19, 23, 38]);
    for id in c.errata.keys() {
        let r = verify_case(c.case(*id).unwrap(), 16, SEED, None).unwrap();
        assert_eq!(r.verdict, Verdict::Fail, "case {id}");
        assert!(r.erratum.is_some());
    }
}

#[test]
fn doubling_draws_keeps_pass() {
    let base = verify_corpus(corpus(), None, 16, SEED, None, 4).unwrap();
    let doubled = verify_corpus(corpus(), None, 32, SEED, None, 4).unwrap();
    for (a, b) in base.iter().zip(&doubled) {
        if a.verdict == Verdict::Pass {
            assert_eq!(b.verdict, Verdict::Pass, "case {}", a.case_id);
        }
    }
}

#[test]
fn reports_are_deterministic_across_threads() {
    let one = verify_corpus(corpus(), None, 16, SEED, None, 1).unwrap();
    let many = verify_corpus(corpus(), None, 16, SEED, None, 6).unwrap();
    let csv = |r: &[CaseReport]| {
        let mut v = Vec::new();
        write_report_csv(r, &mut v).unwrap();
        String::from_utf8(v).unwrap()
    };
    assert_eq!(csv(&one), csv(&many));
    let text = csv(&one);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("table,case,verdict,max_residual,draws,seed"));
    assert_eq!(lines.count(), 40);
    assert!(text.contains("\n5,39,PASS,"));
    let single = verify_corpus(corpus(), Some(39), 16, SEED, None, 1).unwrap();
    assert_eq!(single.len(), 1);
    assert!(verify_corpus(corpus(), Some(41), 16, SEED, None, 1).is_err());
}

#[test]
fn type2_checks_include_the_mixed_derivative() {
    let c = 0.6;
    let ode = LinearODESpec::second_order(&[vec![(0.0, c), (0.0, c)], vec![(0.0, 0.0), (0.0, 0.0)]]).unwrap();
    let w = build_type2_space(&ode).unwrap();
    let linear = CubicOperatorParams::zero()
        .with("k10", 1.2).unwrap()
        .with("p10", 0.7).unwrap()
        .with("eta10", -0.4).unwrap()
        .with("d10", 0.3).unwrap()
        .with("q20", 0.9).unwrap()
        .with("h20", 0.5).unwrap();
    let r = verify_invariance(&linear, &w, 16, SEED).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.max_mixed <= MIXED_TOL);
    // u₁∂₁u₁-type flux couples e^{-cx₁} with e^{-cx₂}.
    let r = verify_invariance(&linear.with("k11", 0.8).unwrap(), &w, 16, SEED).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.max_mixed > 1e-4);
}

#[test]
fn loader_errors_name_the_case() {
    let text = std::fs::read_to_string(default_corpus_path()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["cases"][2]["scenario"]["a10"] = "-1".into();
    match parse_table_corpus(&v.to_string()) {
        Err(Error::Load { case, msg }) => {
            assert_eq!(case, "case 3");
            assert!(msg.contains("a10 > 0"), "{msg}");
        }
        other => panic!("{other:?}"),
    }
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["cases"][6]["span2"][0] = "sin(sqrt(zz)*x2)".into();
    assert!(matches!(parse_table_corpus(&v.to_string()), Err(Error::Load { case, .. }) if case == "case 7"));
    assert!(matches!(load_table_corpus(std::path::Path::new("/nonexistent/corpus.json")), Err(Error::Io(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn typep_dimension_matches_enumeration(k in prop::collection::vec(1usize..4, 2..5), p_raw in 0usize..4) {
        let n = k.len();
        let p = 1 + p_raw % (n - 1);
        let orders = vec![k.clone(), k.iter().rev().copied().collect()];
        let expect = brute_force_count(&orders[0], n - p) + brute_force_count(&orders[1], n - p);
        prop_assert_eq!(typep_dimension(&orders, p).unwrap(), expect);
        prop_assert_eq!(type1_dimension(&orders).unwrap(), 2 * k.iter().product::<usize>());
    }

    #[test]
    fn built_spaces_solve_their_odes(phi in prop::collection::vec((-3.0f64..3.0, -2.0f64..2.0), 4)) {
        let ode = LinearODESpec::second_order(&[vec![phi[0], phi[1]], vec![phi[2], phi[3]]]).unwrap();
        let w = build_type1_space(&ode).unwrap();
        prop_assert_eq!(w.total_dimension(), 8);
        prop_assert!(kernel_residual(&w).unwrap() <= 1e-8);
        let flat = LinearODESpec::second_order(&[vec![(0.0, phi[0].1), (0.0, phi[1].1)], vec![(0.0, phi[2].1), (0.0, phi[3].1)]]).unwrap();
        let w2 = build_type2_space(&flat).unwrap();
        prop_assert_eq!(w2.total_dimension(), 6);
        prop_assert!(kernel_residual(&w2).unwrap() <= 1e-8);
    }
}
