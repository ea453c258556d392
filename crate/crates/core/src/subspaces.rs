//! Product linear spaces generated by constant-coefficient linear ODEs, their
//! dimension formulas, the tabulated invariant-space corpus, and a randomized
//! collocation check that the cubic operator maps a space into itself.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use exmex::prelude::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::basis::{
    classify, grid_schedule, membership_residual, tensor_grid, Atom, Expansion, Membership, ProductBasisFunction, Trig,
    GRID_HI, GRID_LO, MEMBER_TOL, NON_MEMBER_TOL,
};
use crate::operators::{apply_f, CubicOperatorParams};
use crate::{Error, Real, Result};

/// Per component s and coordinate i, the monic ODE
/// y^{(k)} + φ_{k−1} y^{(k−1)} + … + φ_0 y = 0, stored lowest coefficient first.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearODESpec {
    dim: usize,
    coefficients: Vec<Vec<Vec<Real>>>,
}

impl LinearODESpec {
    /// `coefficients[s][i]` holds φ_0 … φ_{k−1}; its length is the order k.
    pub fn new(dim: usize, coefficients: Vec<Vec<Vec<Real>>>) -> Result<Self> {
        if dim == 0 || coefficients.is_empty() {
            return Err(Error::Argument("an ODE system needs at least one component and one coordinate".into()));
        }
        for (s, comp) in coefficients.iter().enumerate() {
            if comp.len() != dim {
                return Err(Error::Argument(format!("component {} has {} coordinates, expected {dim}", s + 1, comp.len())));
            }
            for (i, phi) in comp.iter().enumerate() {
                if phi.is_empty() {
                    return Err(Error::Argument(format!("order of L for component {} in x{} must be ≥ 1", s + 1, i + 1)));
                }
                if phi.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Argument(format!("non-finite coefficient for component {} in x{}", s + 1, i + 1)));
                }
            }
        }
        Ok(Self { dim, coefficients })
    }

    /// Second-order operators y'' + φ_1 y' + φ_0 y, given as (φ_0, φ_1) per component and coordinate.
    pub fn second_order(pairs: &[Vec<(Real, Real)>]) -> Result<Self> {
        let dim = pairs.first().map_or(0, Vec::len);
        Self::new(dim, pairs.iter().map(|c| c.iter().map(|&(p0, p1)| vec![p0, p1]).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self, s: usize, i: usize) -> &[Real] {
        &self.coefficients[s][i]
    }

    pub fn orders(&self) -> Vec<Vec<usize>> {
        self.coefficients.iter().map(|c| c.iter().map(Vec::len).collect()).collect()
    }

    /// L^i_s applied to a basis function at a point.
    pub fn apply(&self, s: usize, i: usize, f: &ProductBasisFunction, x: &[Real]) -> Real {
        let phi = &self.coefficients[s][i];
        let mut orders = vec![0u32; self.dim];
        let mut total = 0.0;
        for j in 0..=phi.len() {
            orders[i] = j as u32;
            let c = phi.get(j).copied().unwrap_or(1.0);
            if c != 0.0 {
                total += c * f.partial(&orders, x);
            }
        }
        total
    }
}

/// Fundamental solutions of one constant-coefficient ODE of order ≤ 2 in one coordinate.
pub fn fundamental_set(phi: &[Real], coordinate: usize) -> Result<Vec<Atom>> {
    match *phi {
        [p0] => Ok(vec![Atom::exp(coordinate, -p0)]),
        [p0, p1] => {
            let disc = p1 * p1 - 4.0 * p0;
            let scale = (p1 * p1).max(p0.abs()).max(1.0);
            if disc.abs() <= 1e-14 * scale {
                let l = -0.5 * p1;
                Ok(vec![Atom::exp(coordinate, l), Atom::exp(coordinate, l).with_degree(1)])
            } else if disc > 0.0 {
                let r = disc.sqrt();
                let (hi, lo) = (0.5 * (-p1 + r), 0.5 * (-p1 - r));
                // Root 0 is kept exact so type ≥ 2 spans see a true constant.
                let clean = |l: Real| if l.abs() <= 1e-15 * scale { 0.0 } else { l };
                Ok(vec![Atom::exp(coordinate, clean(hi)), Atom::exp(coordinate, clean(lo))])
            } else {
                let (sigma, omega) = (-0.5 * p1, 0.5 * (-disc).sqrt());
                Ok(vec![
                    Atom::new(coordinate, 0, sigma, Trig::Sin(omega))?,
                    Atom::new(coordinate, 0, sigma, Trig::Cos(omega))?,
                ])
            }
        }
        _ => Err(Error::Capability(format!("fundamental sets are built for orders 1 and 2, not {}", phi.len()))),
    }
}

/// Σ_s ∏_i k_{s,i}.
pub fn type1_dimension(orders: &[Vec<usize>]) -> Result<usize> {
    check_orders(orders)?;
    Ok(orders.iter().map(|k| k.iter().product::<usize>()).sum())
}

/// Σ_s [1 + Σ_{|S|=1} ∏(k−1) + … + Σ_{|S|=N−p} ∏(k−1)], the type-(p+1) dimension.
pub fn typep_dimension(orders: &[Vec<usize>], p: usize) -> Result<usize> {
    let n = check_orders(orders)?;
    if p == 0 || p >= n.max(1) {
        return Err(Error::Argument(format!("p = {p} outside 1..{}", n.saturating_sub(1))));
    }
    Ok(orders
        .iter()
        .map(|k| {
            subsets_up_to(n, n - p).iter().map(|set| set.iter().map(|&i| k[i] - 1).product::<usize>()).sum::<usize>()
        })
        .sum())
}

fn check_orders(orders: &[Vec<usize>]) -> Result<usize> {
    let n = orders.first().map_or(0, Vec::len);
    if orders.is_empty() || n == 0 || orders.iter().any(|k| k.len() != n || k.contains(&0)) {
        return Err(Error::Argument("orders must be a nonempty rectangular list of positive integers".into()));
    }
    Ok(n)
}

/// All subsets of 0..n with at most `max` elements, ordered by size then lexicographically.
fn subsets_up_to(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Per-component spans of a product linear space of a given type.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSubspaceSpec {
    type_tag: usize,
    spans: Vec<Vec<ProductBasisFunction>>,
    ode: Option<LinearODESpec>,
}

impl ProductSubspaceSpec {
    pub fn new(type_tag: usize, spans: Vec<Vec<ProductBasisFunction>>, ode: Option<LinearODESpec>) -> Result<Self> {
        let dim = spans.first().and_then(|s| s.first()).map(ProductBasisFunction::dim).unwrap_or(0);
        if spans.is_empty() || spans.iter().any(Vec::is_empty) {
            return Err(Error::Argument("every component needs a nonempty span".into()));
        }
        if spans.iter().flatten().any(|b| b.dim() != dim) {
            return Err(Error::Argument("span elements disagree on the number of coordinates".into()));
        }
        if type_tag == 0 || type_tag > dim {
            return Err(Error::Argument(format!("type {type_tag} outside 1..{dim}")));
        }
        let one = ProductBasisFunction::one(dim);
        if type_tag >= 2 && spans.iter().any(|s| !s.contains(&one)) {
            return Err(Error::Argument("spans of type ≥ 2 must contain the constant function".into()));
        }
        if let Some(o) = &ode {
            if o.dim() != dim || o.components() != spans.len() {
                return Err(Error::Argument("generating ODE does not match the spans".into()));
            }
        }
        Ok(Self { type_tag, spans, ode })
    }

    pub fn type_tag(&self) -> usize {
        self.type_tag
    }

    pub fn spans(&self) -> &[Vec<ProductBasisFunction>] {
        &self.spans
    }

    pub fn ode(&self) -> Option<&LinearODESpec> {
        self.ode.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.spans[0][0].dim()
    }

    pub fn total_dimension(&self) -> usize {
        self.spans.iter().map(Vec::len).sum()
    }
}

/// Tensor products of the fundamental sets in every coordinate.
pub fn build_type1_space(ode: &LinearODESpec) -> Result<ProductSubspaceSpec> {
    let spans = (0..ode.components())
        .map(|s| {
            let sets = (0..ode.dim()).map(|i| fundamental_set(ode.coefficients(s, i), i)).collect::<Result<Vec<_>>>()?;
            let mut out: Vec<Vec<Atom>> = vec![Vec::new()];
            for set in &sets {
                out = out.into_iter().flat_map(|p| set.iter().map(move |a| [p.clone(), vec![*a]].concat())).collect();
            }
            out.iter().map(|atoms| ProductBasisFunction::new(ode.dim(), atoms)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ProductSubspaceSpec::new(1, spans, Some(ode.clone()))
}

/// The type-2 space: the constant plus products of at most N−1 nonconstant factors.
pub fn build_type2_space(ode: &LinearODESpec) -> Result<ProductSubspaceSpec> {
    build_typep_space(ode, 1)
}

/// The type-(p+1) space: the constant plus products of at most N−p nonconstant factors.
/// Requires φ_0 = 0 in every coordinate.
pub fn build_typep_space(ode: &LinearODESpec, p: usize) -> Result<ProductSubspaceSpec> {
    let n = ode.dim();
    if p == 0 || p >= n {
        return Err(Error::Argument(format!("p = {p} outside 1..{}", n.saturating_sub(1))));
    }
    let mut spans = Vec::new();
    for s in 0..ode.components() {
        let mut nonconstant = Vec::with_capacity(n);
        for i in 0..n {
            if ode.coefficients(s, i)[0] != 0.0 {
                return Err(Error::Argument(format!("type-{} spaces need φ_0 = 0 (component {}, x{})", p + 1, s + 1, i + 1)));
            }
            let set = fundamental_set(ode.coefficients(s, i), i)?;
            nonconstant.push(set.into_iter().filter(|a| !a.is_one()).collect::<Vec<_>>());
        }
        let mut span = Vec::new();
        for subset in subsets_up_to(n, n - p) {
            let mut combos: Vec<Vec<Atom>> = vec![Vec::new()];
            for &i in &subset {
                combos = combos.into_iter().flat_map(|c| nonconstant[i].iter().map(move |a| [c.clone(), vec![*a]].concat())).collect();
            }
            for atoms in combos {
                span.push(ProductBasisFunction::new(n, &atoms)?);
            }
        }
        spans.push(span);
    }
    ProductSubspaceSpec::new(p + 1, spans, Some(ode.clone()))
}

/// Outcome of an invariance check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Indeterminate,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Indeterminate => "INDETERMINATE",
            Verdict::Fail => "FAIL",
        })
    }
}

/// The draw that produced a violation.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub draw: usize,
    /// Zero-based component whose image left its span.
    pub component: usize,
    /// Expansion coefficients of u₁ and u₂.
    pub coefficients: [Vec<Real>; 2],
    pub residual: Real,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub verdict: Verdict,
    pub max_residual: Real,
    /// Largest |∂²F_s/∂x₁∂x₂| on the grid; zero for type-1 spaces.
    pub max_mixed: Real,
    pub draws: usize,
    pub seed: u64,
    pub witness: Option<Witness>,
    pub diagnostics: Vec<String>,
}

/// Absolute bound on the mixed derivative of F_s for type-2 spaces.
pub const MIXED_TOL: Real = 1e-7;
/// Stencil half-width for the mixed derivative; the stencil vanishes exactly on additively separable functions.
const MIXED_STEP: Real = 0.05;

/// Coefficients of draw `d`. The first half pairs one span element of u₁ with one of u₂,
/// cycling the pairing so cross terms are exercised; the rest are uniform on [−1, 1].
pub fn draw_coefficients(space: &ProductSubspaceSpec, draws: usize, seed: u64, d: usize) -> [Vec<Real>; 2] {
    let (k1, k2) = (space.spans[0].len(), space.spans[1].len());
    let structured = (draws / 2).min(k1 * k2);
    let mut c = [vec![0.0; k1], vec![0.0; k2]];
    if d < structured {
        c[0][d % k1] = 1.0;
        c[1][(d + d / k1) % k2] = 1.0;
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(d as u64);
        for v in c.iter_mut().flatten() {
            *v = rng.random_range(-1.0..=1.0);
        }
    }
    c
}

/// Image of (u₁, u₂) under F on a grid, one vector per component.
fn image_on(params: &CubicOperatorParams, u: &[Expansion; 2], grid: &[Vec<Real>]) -> Result<[Vec<Real>; 2]> {
    let mut out = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
    for x in grid {
        let (f1, f2) = apply_f(params, &u[0], &u[1], x)?;
        out[0].push(f1);
        out[1].push(f2);
    }
    Ok(out)
}

/// Residual of F_s(u) against W_s, refining the grid while the result is intermediate.
fn draw_residuals(params: &CubicOperatorParams, space: &ProductSubspaceSpec, u: &[Expansion; 2]) -> Result<[Real; 2]> {
    let dim = space.dim();
    let longest = space.spans.iter().map(Vec::len).max().unwrap_or(1);
    let mut last = [Real::NAN; 2];
    for n in grid_schedule(dim, longest) {
        let grid = tensor_grid(dim, n, GRID_LO, GRID_HI);
        let image = image_on(params, u, &grid)?;
        for s in 0..2 {
            let span = &space.spans[s];
            let samples: Vec<(Vec<Real>, Real)> = grid.iter().cloned().zip(image[s].iter().copied()).collect();
            let values = DMatrix::from_fn(grid.len(), span.len(), |j, i| span[i].eval(&grid[j]));
            last[s] = membership_residual(&samples, span, &values)?.0;
        }
        if last.iter().all(|&r| classify(r) != Membership::Indeterminate) {
            break;
        }
    }
    Ok(last)
}

/// Largest |∂²F_s/∂x₁∂x₂| over a coarse grid, by the four-point stencil.
fn mixed_derivative(params: &CubicOperatorParams, u: &[Expansion; 2]) -> Result<Real> {
    let h = MIXED_STEP;
    let mut worst: Real = 0.0;
    for x in tensor_grid(2, 8, GRID_LO, GRID_HI) {
        let mut acc = [0.0; 2];
        for (sx, sy, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            let (f1, f2) = apply_f(params, &u[0], &u[1], &[x[0] + sx * h, x[1] + sy * h])?;
            acc[0] += w * f1;
            acc[1] += w * f2;
        }
        worst = worst.max(acc[0].abs().max(acc[1].abs()) / (4.0 * h * h));
    }
    Ok(worst)
}

/// Randomized collocation check that F maps the space into itself.
pub fn verify_invariance(
    params: &CubicOperatorParams,
    space: &ProductSubspaceSpec,
    draws: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    if draws < 8 {
        return Err(Error::Argument(format!("need at least 8 draws, got {draws}")));
    }
    if space.spans.len() != 2 || space.dim() != 2 {
        return Err(Error::Capability("the cubic operator acts on two components in two coordinates".into()));
    }
    let mut report = InvarianceReport {
        verdict: Verdict::Pass,
        max_residual: 0.0,
        max_mixed: 0.0,
        draws,
        seed,
        witness: None,
        diagnostics: Vec::new(),
    };
    for d in 0..draws {
        let c = draw_coefficients(space, draws, seed, d);
        let u = [Expansion::new(space.spans[0].clone(), c[0].clone())?, Expansion::new(space.spans[1].clone(), c[1].clone())?];
        let residuals = match draw_residuals(params, space, &u) {
            Ok(r) => r,
            Err(Error::Conditioning(msg)) => {
                report.verdict = report.verdict.max(Verdict::Indeterminate);
                report.diagnostics.push(format!("draw {d}: {msg}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        for (s, &r) in residuals.iter().enumerate() {
            report.max_residual = report.max_residual.max(r);
            match classify(r) {
                Membership::Member => {}
                Membership::Indeterminate => {
                    report.verdict = report.verdict.max(Verdict::Indeterminate);
                    report.diagnostics.push(format!("draw {d}: component {} residual {r:.3e} between thresholds", s + 1));
                }
                Membership::NonMember => {
                    report.verdict = Verdict::Fail;
                    // The earliest failing draw is kept, so a single-element draw is preferred.
                    let better = report.witness.as_ref().is_none_or(|w| w.draw == d && r > w.residual);
                    if better {
                        report.witness = Some(Witness { draw: d, component: s, coefficients: c.clone(), residual: r });
                    }
                }
            }
        }
        if space.type_tag >= 2 {
            let m = mixed_derivative(params, &u)?;
            report.max_mixed = report.max_mixed.max(m);
            if m > MIXED_TOL {
                let v = if m >= NON_MEMBER_TOL { Verdict::Fail } else { Verdict::Indeterminate };
                report.verdict = report.verdict.max(v);
                report.diagnostics.push(format!("draw {d}: mixed derivative {m:.3e}"));
            }
        }
    }
    debug_assert!(report.verdict != Verdict::Pass || report.max_residual <= MEMBER_TOL);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Corpus

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    common: CommonBlock,
    #[serde(default)]
    errata: Vec<ErratumRecord>,
    cases: Vec<CaseRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommonBlock {
    /// Operator parameters free in every case.
    free: Vec<String>,
    /// ODE symbols fixed to zero in every case.
    zero: Vec<String>,
    scenario: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ErratumRecord {
    case: u32,
    reason: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseRecord {
    table: u32,
    case: u32,
    free: Vec<String>,
    /// Symbols the printed restrictions use without listing them as free.
    #[serde(default)]
    implicit: Vec<String>,
    #[serde(default)]
    params: BTreeMap<String, String>,
    #[serde(default)]
    constraints: Vec<String>,
    #[serde(default)]
    derived: BTreeMap<String, String>,
    #[serde(default)]
    ode: BTreeMap<String, String>,
    span1: Vec<String>,
    span2: Vec<String>,
    scenario: BTreeMap<String, String>,
    #[serde(default)]
    alternatives: Vec<AlternativeRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlternativeRecord {
    label: String,
    #[serde(default)]
    free: Vec<String>,
    #[serde(default)]
    params: BTreeMap<String, String>,
}

/// One block of printed parameter restrictions.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionBlock {
    pub label: String,
    /// Free operator parameters, including the ones common to every case.
    pub free: Vec<String>,
    /// Printed equalities `name = expression`.
    pub restrictions: Vec<(String, String)>,
}

/// One tabulated invariant space with its operator restrictions and a concrete scenario.
#[derive(Clone, Debug)]
pub struct TableCase {
    pub table: u32,
    pub case_id: u32,
    pub blocks: Vec<RestrictionBlock>,
    pub constraints: Vec<String>,
    /// Values of every symbol: free parameters, ODE coefficients, derived quantities.
    pub scenario: BTreeMap<String, Real>,
    pub subspace: ProductSubspaceSpec,
    /// Raw span strings as printed, per component.
    pub span_text: [Vec<String>; 2],
    /// Reason this case is on the errata whitelist, if it is.
    pub erratum: Option<String>,
}

impl TableCase {
    /// Operator parameters of one restriction block, optionally with `name` shifted by `delta`.
    pub fn params(&self, block: usize, perturb: Option<(&str, Real)>) -> Result<CubicOperatorParams> {
        let b = self.blocks.get(block).ok_or_else(|| Error::Argument(format!("case {} has no block {block}", self.case_id)))?;
        let mut p = CubicOperatorParams::zero();
        for name in &b.free {
            let v = self.scenario.get(name).copied().ok_or_else(|| load_err(self.case_id, format!("no scenario value for {name}")))?;
            p.set(name, v)?;
        }
        for (name, expr) in &b.restrictions {
            p.set(name, eval_expr(expr, &self.scenario).map_err(|m| load_err(self.case_id, m))?)?;
        }
        if let Some((name, delta)) = perturb {
            p.set(name, p.get(name)? + delta)?;
        }
        Ok(p)
    }

    /// Names of all printed restrictions across blocks, without repeats.
    pub fn restricted_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for b in &self.blocks {
            for (n, _) in &b.restrictions {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
        out
    }
}

/// The tabulated cases plus the errata whitelist.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub cases: Vec<TableCase>,
    pub errata: BTreeMap<u32, String>,
}

impl Corpus {
    pub fn case(&self, id: u32) -> Option<&TableCase> {
        self.cases.iter().find(|c| c.case_id == id)
    }
}

/// The corpus file shipped with the crate.
pub fn default_corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus.json")
}

fn load_err(case: u32, msg: impl Into<String>) -> Error {
    Error::Load { case: format!("case {case}"), msg: msg.into() }
}

/// Whether a unary minus is applied directly to a power, which exmex reads as (−x)^n.
fn negated_power(expr: &str) -> bool {
    let b = expr.as_bytes();
    (0..b.len()).any(|i| {
        let unary = b[i] == b'-' && expr[..i].trim_end().chars().last().is_none_or(|c| "(*/,^+-".contains(c));
        let operand = b[i + 1..].iter().position(|c| !(c.is_ascii_alphanumeric() || *c == b'_' || *c == b'.'));
        unary && operand.is_some_and(|n| n > 0 && b[i + 1 + n] == b'^')
    })
}

fn eval_expr(expr: &str, env: &BTreeMap<String, Real>) -> std::result::Result<Real, String> {
    if negated_power(expr) {
        return Err(format!("`{expr}` negates a power; write -(x^n)"));
    }
    let e = exmex::parse::<Real>(expr).map_err(|e| format!("cannot parse `{expr}`: {e}"))?;
    let vals = e
        .var_names()
        .iter()
        .map(|n| env.get(n).copied().ok_or_else(|| format!("`{expr}` uses unknown symbol {n}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let v = e.eval(&vals).map_err(|e| format!("cannot evaluate `{expr}`: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{expr}` is not finite"))
    }
}

/// Whether a constraint such as `theta > 0` or `b11 != 0` holds.
fn check_constraint(c: &str, env: &BTreeMap<String, Real>) -> std::result::Result<bool, String> {
    for op in ["!=", ">=", "<=", ">", "<"] {
        if let Some((l, r)) = c.split_once(op) {
            let (a, b) = (eval_expr(l.trim(), env)?, eval_expr(r.trim(), env)?);
            return Ok(match op {
                "!=" => a != b,
                ">=" => a >= b,
                "<=" => a <= b,
                ">" => a > b,
                _ => a < b,
            });
        }
    }
    Err(format!("constraint `{c}` has no comparison"))
}

/// Split at `sep` outside parentheses.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let (mut depth, mut start, mut out) = (0i32, 0, Vec::new());
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn coordinate(s: &str) -> Option<usize> {
    match s.trim() {
        "x1" => Some(0),
        "x2" => Some(1),
        _ => None,
    }
}

/// Parse a span element such as `x2*sin(sqrt(a10)*x1)` or `exp(-b11*x1)*cos(w*x2)`.
pub fn parse_span_element(text: &str, env: &BTreeMap<String, Real>) -> std::result::Result<ProductBasisFunction, String> {
    let mut atoms: [Option<Atom>; 2] = [None, None];
    for factor in split_top(text.trim(), '*') {
        let f = factor.trim();
        if f == "1" {
            continue;
        }
        let (i, degree, rate, trig) = if let Some(i) = coordinate(f) {
            (i, 1, 0.0, Trig::None)
        } else if let Some((base, pow)) = f.split_once('^').filter(|(b, _)| coordinate(b).is_some()) {
            let d: u32 = pow.trim().parse().map_err(|_| format!("bad power in `{f}`"))?;
            (coordinate(base).unwrap_or(0), d, 0.0, Trig::None)
        } else {
            let open = f.find('(').filter(|_| f.ends_with(')')).ok_or_else(|| format!("cannot read factor `{f}`"))?;
            let (func, arg) = (&f[..open], &f[open + 1..f.len() - 1]);
            let parts = split_top(arg, '*');
            let last = parts.last().copied().unwrap_or("");
            let i = coordinate(last).ok_or_else(|| format!("argument of `{f}` must end in *x1 or *x2"))?;
            let k = if parts.len() == 1 { 1.0 } else { eval_expr(&arg[..arg.len() - last.len() - 1], env)? };
            match func {
                "exp" => (i, 0, k, Trig::None),
                "sin" => (i, 0, 0.0, Trig::Sin(k)),
                "cos" => (i, 0, 0.0, Trig::Cos(k)),
                _ => return Err(format!("unknown function `{func}`")),
            }
        };
        let slot = &mut atoms[i];
        let mut a = slot.unwrap_or(Atom::one(i));
        a.degree += degree;
        a.rate += rate;
        if trig != Trig::None {
            if a.trig != Trig::None {
                return Err(format!("two trigonometric factors in x{} of `{text}`", i + 1));
            }
            a.trig = trig;
        }
        *slot = Some(Atom::new(i, a.degree, a.rate, a.trig).map_err(|e| format!("`{text}`: {e}"))?);
    }
    let atoms: Vec<Atom> = atoms.into_iter().flatten().collect();
    ProductBasisFunction::new(2, &atoms).map_err(|e| e.to_string())
}

const ODE_SYMBOLS: [[[&str; 2]; 2]; 2] = [[["a10", "a11"], ["a20", "a21"]], [["b10", "b11"], ["b20", "b21"]]];

fn build_case(rec: CaseRecord, common: &CommonBlock, errata: &BTreeMap<u32, String>) -> Result<TableCase> {
    let id = rec.case;
    let err = |m: String| load_err(id, m);
    if !(1..=5).contains(&rec.table) {
        return Err(err(format!("table {} outside 1..5", rec.table)));
    }
    let mut env: BTreeMap<String, Real> = common.zero.iter().map(|z| (z.clone(), 0.0)).collect();
    for (k, v) in common.scenario.iter().chain(rec.scenario.iter()) {
        if common.zero.contains(k) {
            return Err(err(format!("{k} is fixed to zero for every case")));
        }
        env.insert(k.clone(), eval_expr(v, &BTreeMap::new()).map_err(err)?);
    }
    let mut pending: Vec<(&String, &String)> = rec.derived.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for (k, v) in pending {
            match eval_expr(v, &env) {
                Ok(x) => {
                    env.insert(k.clone(), x);
                }
                Err(m) if m.contains("unknown symbol") => rest.push((k, v)),
                Err(m) => return Err(err(format!("derived {k}: {m}"))),
            }
        }
        if rest.len() == before {
            return Err(err(format!("cannot resolve derived symbols {:?}", rest.iter().map(|r| r.0).collect::<Vec<_>>())));
        }
        pending = rest;
    }
    for c in &rec.constraints {
        if !check_constraint(c, &env).map_err(err)? {
            return Err(err(format!("scenario violates constraint `{c}`")));
        }
    }
    // ODE coefficients: an explicit override, else the same-named symbol, else zero.
    let mut pairs = Vec::new();
    for comp in ODE_SYMBOLS {
        let mut row = Vec::new();
        for [n0, n1] in comp {
            let get = |n: &str| match rec.ode.get(n) {
                Some(e) => eval_expr(e, &env),
                None => Ok(env.get(n).copied().unwrap_or(0.0)),
            };
            row.push((get(n0).map_err(err)?, get(n1).map_err(err)?));
        }
        pairs.push(row);
    }
    let ode = LinearODESpec::second_order(&pairs)?;
    let parse = |list: &[String]| {
        list.iter().map(|t| parse_span_element(t, &env).map_err(|m| err(format!("span element: {m}")))).collect::<Result<Vec<_>>>()
    };
    let spans = vec![parse(&rec.span1)?, parse(&rec.span2)?];
    let subspace = ProductSubspaceSpec::new(1, spans, Some(ode)).map_err(|e| err(e.to_string()))?;

    let block = |label: &str, free: &[String], params: &BTreeMap<String, String>| -> Result<RestrictionBlock> {
        let mut all_free: Vec<String> = Vec::new();
        for n in common.free.iter().chain(free) {
            if !all_free.contains(n) {
                all_free.push(n.clone());
            }
        }
        for name in params.keys() {
            if all_free.contains(name) {
                return Err(err(format!("{name} is both restricted and free")));
            }
        }
        let b = RestrictionBlock {
            label: label.into(),
            free: all_free,
            restrictions: params.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        Ok(b)
    };
    let base_free: Vec<String> = rec.free.iter().chain(&rec.implicit).cloned().collect();
    let mut blocks = vec![block("", &base_free, &rec.params)?];
    for alt in &rec.alternatives {
        let free: Vec<String> = base_free.iter().chain(&alt.free).cloned().collect();
        let params: BTreeMap<String, String> = rec.params.iter().chain(&alt.params).map(|(k, v)| (k.clone(), v.clone())).collect();
        blocks.push(block(&alt.label, &free, &params)?);
    }
    let case = TableCase {
        table: rec.table,
        case_id: id,
        blocks,
        constraints: rec.constraints,
        scenario: env,
        subspace,
        span_text: [rec.span1, rec.span2],
        erratum: errata.get(&id).cloned(),
    };
    for b in 0..case.blocks.len() {
        case.params(b, None)?;
    }
    Ok(case)
}

/// Load and validate the corpus; schema errors name the offending case.
pub fn load_table_corpus(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_table_corpus(&text)
}

pub fn parse_table_corpus(text: &str) -> Result<Corpus> {
    let file: CorpusFile =
        serde_json::from_str(text).map_err(|e| Error::Load { case: "corpus".into(), msg: e.to_string() })?;
    let errata: BTreeMap<u32, String> = file.errata.into_iter().map(|e| (e.case, e.reason)).collect();
    let mut cases = Vec::with_capacity(file.cases.len());
    for rec in file.cases {
        if cases.iter().any(|c: &TableCase| c.case_id == rec.case) {
            return Err(load_err(rec.case, "duplicate case id"));
        }
        cases.push(build_case(rec, &file.common, &errata)?);
    }
    cases.sort_by_key(|c| c.case_id);
    Ok(Corpus { cases, errata })
}

/// Largest |L^i_s b| over span elements and sample points; zero when every element solves its ODEs.
pub fn kernel_residual(space: &ProductSubspaceSpec) -> Result<Real> {
    let ode = space.ode().ok_or_else(|| Error::Argument("space has no generating ODE".into()))?;
    let pts = tensor_grid(space.dim(), 7, GRID_LO, GRID_HI);
    let mut worst: Real = 0.0;
    for (s, span) in space.spans().iter().enumerate() {
        for b in span {
            for x in &pts {
                let scale = b.eval(x).abs().max(1.0);
                for i in 0..space.dim() {
                    worst = worst.max(ode.apply(s, i, b, x).abs() / scale);
                }
            }
        }
    }
    Ok(worst)
}

/// Verification result for one corpus case, worst over its restriction blocks.
#[derive(Clone, Debug)]
pub struct CaseReport {
    pub table: u32,
    pub case_id: u32,
    pub verdict: Verdict,
    pub max_residual: Real,
    pub draws: usize,
    pub seed: u64,
    pub witness: Option<Witness>,
    pub diagnostics: Vec<String>,
    pub erratum: Option<String>,
}

pub fn verify_case(case: &TableCase, draws: usize, seed: u64, perturb: Option<(&str, Real)>) -> Result<CaseReport> {
    let mut out = CaseReport {
        table: case.table,
        case_id: case.case_id,
        verdict: Verdict::Pass,
        max_residual: 0.0,
        draws,
        seed,
        witness: None,
        diagnostics: Vec::new(),
        erratum: case.erratum.clone(),
    };
    for (b, block) in case.blocks.iter().enumerate() {
        let r = verify_invariance(&case.params(b, perturb)?, &case.subspace, draws, seed)?;
        let tag = if block.label.is_empty() { String::new() } else { format!("block {}: ", block.label) };
        out.diagnostics.extend(r.diagnostics.iter().map(|d| format!("{tag}{d}")));
        out.max_residual = out.max_residual.max(r.max_residual);
        if r.verdict > out.verdict || (r.verdict == Verdict::Fail && out.witness.is_none()) {
            out.witness = r.witness.clone();
        }
        out.verdict = out.verdict.max(r.verdict);
    }
    Ok(out)
}

/// Verify the selected cases on `threads` workers; reports come back ordered by case id.
pub fn verify_corpus(
    corpus: &Corpus,
    only: Option<u32>,
    draws: usize,
    seed: u64,
    perturb: Option<(&str, Real)>,
    threads: usize,
) -> Result<Vec<CaseReport>> {
    let cases: Vec<&TableCase> = corpus.cases.iter().filter(|c| only.is_none_or(|id| c.case_id == id)).collect();
    if let Some(id) = only {
        if cases.is_empty() {
            return Err(Error::Argument(format!("no case {id} in the corpus")));
        }
    }
    let threads = threads.max(1).min(cases.len().max(1));
    let mut results: Vec<(u32, Result<CaseReport>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let cases = &cases;
                scope.spawn(move || {
                    cases.iter().skip(t).step_by(threads).map(|c| (c.case_id, verify_case(c, draws, seed, perturb))).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("verifier thread panicked")).collect()
    });
    results.sort_by_key(|r| r.0);
    results.into_iter().map(|r| r.1).collect()
}

/// Header of the corpus report.
pub const REPORT_HEADER: &str = "table,case,verdict,max_residual,draws,seed";

/// 17 significant digits, so reports round-trip and diff byte for byte.
pub fn format_real(x: Real) -> String {
    format!("{x:.16e}")
}

pub fn write_report_csv(reports: &[CaseReport], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(w, "{},{},{},{},{},{}", r.table, r.case_id, r.verdict, format_real(r.max_residual), r.draws, r.seed)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_examples() {
        assert_eq!(type1_dimension(&[vec![2, 2], vec![2, 2]]).unwrap(), 8);
        assert_eq!(type1_dimension(&[vec![3, 2]]).unwrap(), 6);
        assert_eq!(type1_dimension(&[vec![1, 1], vec![1, 1], vec![1, 1]]).unwrap(), 3);
        assert_eq!(typep_dimension(&[vec![2, 2], vec![2, 2]], 1).unwrap(), 6);
        assert_eq!(typep_dimension(&[vec![2, 2, 2]], 2).unwrap(), 4);
        assert_eq!(typep_dimension(&[vec![1, 1, 1], vec![1, 1, 1]], 1).unwrap(), 2);
        assert!(typep_dimension(&[vec![2, 2]], 2).is_err());
        assert!(type1_dimension(&[vec![0, 2]]).is_err());
    }

    #[test]
    fn fundamental_set_examples() {
        let w = 2.0f64.sqrt();
        assert_eq!(fundamental_set(&[2.0, 0.0], 0).unwrap(), vec![Atom::sin(0, w), Atom::cos(0, w)]);
        assert_eq!(fundamental_set(&[0.0, 0.0], 0).unwrap(), vec![Atom::one(0), Atom::monomial(0, 1)]);
        assert_eq!(fundamental_set(&[0.0, 0.7], 1).unwrap(), vec![Atom::one(1), Atom::exp(1, -0.7)]);
        assert!(matches!(fundamental_set(&[1.0, 2.0, 3.0], 0), Err(Error::Capability(_))));
    }

    #[test]
    fn span_parser() {
        let env: BTreeMap<String, Real> = [("a10".to_string(), 4.0), ("b11".to_string(), 0.5)].into();
        let b = parse_span_element("x2*sin(sqrt(a10)*x1)", &env).unwrap();
        assert_eq!(b.factors(), &[Atom::sin(0, 2.0), Atom::monomial(1, 1)]);
        let b = parse_span_element("exp(-b11/2*x1)*cos(x1)*x1", &env).unwrap();
        assert_eq!(b.factors()[0], Atom::new(0, 1, -0.25, Trig::Cos(1.0)).unwrap());
        assert_eq!(parse_span_element("1", &env).unwrap(), ProductBasisFunction::one(2));
        assert!(parse_span_element("sin(x1)*cos(x1)", &env).is_err());
        assert!(parse_span_element("exp(q*x1)", &env).is_err());
    }

    #[test]
    fn constraints() {
        let env: BTreeMap<String, Real> = [("t".to_string(), 0.5)].into();
        assert!(check_constraint("t > 0", &env).unwrap());
        assert!(!check_constraint("t^2 >= 1", &env).unwrap());
        assert!(check_constraint("t != 1", &env).unwrap());
        assert!(check_constraint("t = 1", &env).is_err());
        assert!(eval_expr("-t^2", &env).is_err());
        assert_eq!(eval_expr("-(t^2)", &env).unwrap(), -0.25);
        assert_eq!(eval_expr("1-t^2", &env).unwrap(), 0.75);
    }
}
