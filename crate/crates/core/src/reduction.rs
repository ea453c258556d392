//! Reduced time-fractional ODE systems of the five worked examples, their
//! closed-form time coefficients, a fractional Adams predictor-corrector oracle,
//! and the initial, boundary and PDE checks applied to assembled solutions.
//!
//! Example ids:
//! 1. polynomial space {1, x₁, x₂, x₁x₂}² with the full quadratic operator;
//! 2. exponential-polynomial × polynomial space, with convolution terms in δ₁₃;
//! 3. linear trigonometric system on a rectangle with Dirichlet data;
//! 4. trigonometric-polynomial × exponential-polynomial space;
//! 5. trigonometric-polynomial system on a rectangle with Dirichlet data.
//!
//! Time coefficients are indexed flat: δ_{si} ↦ 4(s−1) + (i−1).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::basis::{tensor_grid, Atom, Expansion, ProductBasisFunction, GRID_HI, GRID_LO};
use crate::fracderiv::{caputo_path, caputo_time_coefficient, CaputoPath, FractionalOrder, Term, TimeCoefficient};
use crate::operators::{apply_f, CubicOperatorParams};
use crate::specfun::rgamma;
use crate::subspaces::{format_real, ProductSubspaceSpec, Verdict};
use crate::{Error, Real, Result};

/// Which text of the closed forms, bases and boundary data to use.
///
/// `Printed` follows the formulas literally. `Derived` replaces the handful of
/// printed expressions that contradict the operator (see [`errata`]).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Reading {
    Printed,
    #[default]
    Derived,
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reading::Printed => "printed",
            Reading::Derived => "derived",
        })
    }
}

impl FromStr for Reading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Reading::Printed),
            "derived" => Ok(Reading::Derived),
            _ => Err(Error::Argument(format!("unknown reading '{s}' (expected printed or derived)"))),
        }
    }
}

/// Where the printed and derived readings differ, by example id.
pub fn errata(example_id: u8) -> &'static [&'static str] {
    match example_id {
        1 => &["δ₁₁ for α₁, α₂ ∈ (1,2]: l₁t^{α₁} is divided by Γ(α₂+1); the FODE requires Γ(α₁+1)"],
        3 => &[
            "δ₂₁, δ₂₂ for α₂ ∈ (1,2]: rate −c₁₀b₂₀; the operator has no c₁₀ term and the FODE rate is −c₂₀b₂₀",
            "ξ₁₁, ξ₁₃, ξ₁₄, ξ₂₁, ξ₂₃, ξ₂₄ pair δ₁₂ and δ₁₃ in span order, not with the printed u₁",
        ],
        4 => &["space factor e^{b₁₁x₁}: the operator and γ₀ = q₂₀b₁₁² − g₂₀b₁₁ require e^{−b₁₁x₁}"],
        5 => &["δ₂ᵢ for α₂ ∈ (1,2]: rate −c₁₀b₂₀; the operator has no c₁₀ term and the FODE rate is −c₂₀b₂₀"],
        _ => &[],
    }
}

/// Time behaviour selected by an order: (0,1] or (1,2].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    Diffusion,
    Wave,
}

impl Regime {
    pub fn of(alpha: FractionalOrder) -> Self {
        if alpha.alpha() > 1.0 {
            Regime::Wave
        } else {
            Regime::Diffusion
        }
    }
}

/// Integration constants A_{si} = δ_{si}(0) and B_{si} = δ'_{si}(0).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Constants {
    pub a: [[Real; 4]; 2],
    pub b: [[Real; 4]; 2],
}

impl Constants {
    /// All sixteen names A11 … B24.
    pub fn names() -> Vec<String> {
        let mut out = Vec::with_capacity(16);
        for letter in ['A', 'B'] {
            for s in 1..=2 {
                for i in 1..=4 {
                    out.push(format!("{letter}{s}{i}"));
                }
            }
        }
        out
    }

    fn slot(name: &str) -> Option<(bool, usize, usize)> {
        let mut ch = name.chars();
        let letter = ch.next()?;
        let s = ch.next()?.to_digit(10)? as usize;
        let i = ch.next()?.to_digit(10)? as usize;
        if ch.next().is_some() || !(1..=2).contains(&s) || !(1..=4).contains(&i) {
            return None;
        }
        match letter {
            'A' => Some((false, s - 1, i - 1)),
            'B' => Some((true, s - 1, i - 1)),
            _ => None,
        }
    }

    pub fn get(&self, name: &str) -> Result<Real> {
        let (is_b, s, i) = Self::slot(name).ok_or_else(|| Error::Argument(format!("unknown constant '{name}'")))?;
        Ok(if is_b { self.b[s][i] } else { self.a[s][i] })
    }

    pub fn set(&mut self, name: &str, value: Real) -> Result<()> {
        let (is_b, s, i) = Self::slot(name).ok_or_else(|| Error::Argument(format!("unknown constant '{name}'")))?;
        if !value.is_finite() {
            return Err(Error::Argument(format!("constant {name} = {value} is not finite")));
        }
        if is_b {
            self.b[s][i] = value;
        } else {
            self.a[s][i] = value;
        }
        Ok(())
    }

    fn flat_a(&self) -> Vec<Real> {
        self.a.iter().flatten().copied().collect()
    }

    fn flat_b(&self) -> Vec<Real> {
        self.b.iter().flatten().copied().collect()
    }
}

/// Named parameters of each example's PDE, as they appear in its equation.
pub fn example_parameter_names(example_id: u8) -> Result<&'static [&'static str]> {
    Ok(match example_id {
        1 => &[
            "k10", "q10", "q11", "p10", "c10", "c11", "eta10", "g10", "d10", "h10", "k20", "q20", "q21", "p20", "c20",
            "c21", "eta20", "g20", "d20", "h20",
        ],
        2 => &[
            "k10", "q10", "q11", "p10", "c10", "d12", "a21", "eta10", "d10", "h10", "k20", "q20", "q21", "c20", "g20", "h20",
        ],
        3 => &["k10", "q10", "p10", "b11", "q20", "c20", "g20", "a10", "b20"],
        4 => &[
            "k10", "g10", "b11", "p10", "c10", "c11", "eta10", "d10", "q20", "p20", "c20", "c21", "g20", "h20", "a10",
        ],
        5 => &["k10", "q10", "q11", "p10", "eta10", "d10", "k20", "q20", "q21", "c20", "g20", "h20", "a20", "b20"],
        _ => return Err(Error::Argument(format!("example id {example_id} outside 1..5"))),
    })
}

/// One worked example with its orders, parameters, constants and domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleScenario {
    pub example_id: u8,
    pub alphas: (FractionalOrder, FractionalOrder),
    /// The example's named parameters, including space symbols such as a₁₀ or b₁₁.
    pub symbols: BTreeMap<String, Real>,
    /// The full operator the example's PDE specializes to.
    pub params: CubicOperatorParams,
    pub constants: Constants,
    /// (σ₁, σ₂) of the rectangle [0, σ₁] × [0, σ₂].
    pub domain: Option<(Real, Real)>,
    pub note: Option<String>,
}

impl ExampleScenario {
    pub fn new(
        example_id: u8,
        alphas: (Real, Real),
        symbols: BTreeMap<String, Real>,
        constants: Constants,
        domain: Option<(Real, Real)>,
    ) -> Result<Self> {
        let names = example_parameter_names(example_id)?;
        for n in names {
            match symbols.get(*n) {
                Some(v) if v.is_finite() => {}
                Some(v) => return Err(Error::Argument(format!("parameter {n} = {v} is not finite"))),
                None => return Err(Error::Argument(format!("example {example_id} needs parameter {n}"))),
            }
        }
        if let Some(extra) = symbols.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::Argument(format!("example {example_id} has no parameter '{extra}'")));
        }
        let sym = |n: &str| symbols[n];
        match example_id {
            2 if sym("a21") == 0.0 => return Err(Error::Argument("a21 must be nonzero".into())),
            3 if !(sym("a10") > 0.0 && sym("b20") > 0.0) => {
                return Err(Error::Argument("a10 and b20 must be positive".into()))
            }
            4 if !(sym("a10") > 0.0) || sym("b11") == 0.0 => {
                return Err(Error::Argument("a10 must be positive and b11 nonzero".into()))
            }
            5 if !(sym("a20") > 0.0 && sym("b20") > 0.0) => {
                return Err(Error::Argument("a20 and b20 must be positive".into()))
            }
            _ => {}
        }
        match domain {
            Some((s1, s2)) if !(s1 > 0.0 && s2 > 0.0 && s1.is_finite() && s2.is_finite()) => {
                return Err(Error::Argument(format!("domain sides ({s1}, {s2}) must be positive")));
            }
            None if has_boundary_data(example_id) => {
                return Err(Error::Argument(format!("example {example_id} needs a domain (sigma1, sigma2)")));
            }
            _ => {}
        }
        let params = example_operator(example_id, &symbols)?;
        Ok(Self {
            example_id,
            alphas: (FractionalOrder::new(alphas.0)?, FractionalOrder::new(alphas.1)?),
            symbols,
            params,
            constants,
            domain,
            note: None,
        })
    }

    pub fn with_alphas(&self, a1: Real, a2: Real) -> Result<Self> {
        let mut s = self.clone();
        s.alphas = (FractionalOrder::new(a1)?, FractionalOrder::new(a2)?);
        Ok(s)
    }

    pub fn with_constant(&self, name: &str, value: Real) -> Result<Self> {
        let mut s = self.clone();
        s.constants.set(name, value)?;
        Ok(s)
    }

    pub fn with_parameter(&self, name: &str, value: Real) -> Result<Self> {
        let mut symbols = self.symbols.clone();
        symbols.insert(name.to_string(), value);
        let mut s = Self::new(self.example_id, (self.alpha(0), self.alpha(1)), symbols, self.constants, self.domain)?;
        s.note = self.note.clone();
        Ok(s)
    }

    pub fn regimes(&self) -> [Regime; 2] {
        [Regime::of(self.alphas.0), Regime::of(self.alphas.1)]
    }

    fn alpha(&self, s: usize) -> Real {
        if s == 0 {
            self.alphas.0.alpha()
        } else {
            self.alphas.1.alpha()
        }
    }

    fn order(&self, s: usize) -> FractionalOrder {
        if s == 0 {
            self.alphas.0
        } else {
            self.alphas.1
        }
    }

    fn sym(&self, name: &str) -> Real {
        self.symbols[name]
    }

    /// Spatial box used for grids: the domain when present, else [0, 2]².
    pub fn domain_box(&self) -> (Real, Real) {
        self.domain.unwrap_or((2.0, 2.0))
    }
}

fn has_boundary_data(example_id: u8) -> bool {
    matches!(example_id, 3 | 5)
}

/// The operator of each example's PDE, expressed in the general cubic family.
fn example_operator(example_id: u8, symbols: &BTreeMap<String, Real>) -> Result<CubicOperatorParams> {
    let mut p = CubicOperatorParams::zero();
    // Names shared with the general family are set directly; the rest are space symbols.
    for (k, &v) in symbols {
        let _ = p.set(k, v);
    }
    let s = |n: &str| symbols[n];
    match example_id {
        1 => {
            for c in ["1", "2"] {
                p.set(&format!("k{c}2"), -s(&format!("q{c}1")))?;
                p.set(&format!("p{c}2"), -s(&format!("c{c}1")))?;
            }
        }
        2 => {
            let r = s("d12") / s("a21");
            p.set("k12", -s("q11"))?;
            p.set("p12", r)?;
            p.set("c11", -r)?;
            p.set("k22", -s("q21"))?;
        }
        3 => p.set("g10", s("q10") * s("b11"))?,
        4 => {
            p.set("q10", s("g10") / s("b11"))?;
            p.set("p12", -s("c11"))?;
            p.set("p22", -s("c21"))?;
        }
        5 => {
            p.set("k12", -s("q11"))?;
            p.set("k22", -s("q21"))?;
        }
        _ => return Err(Error::Argument(format!("example id {example_id} outside 1..5"))),
    }
    Ok(p)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    example: u8,
    alpha1: Real,
    alpha2: Real,
    params: BTreeMap<String, Real>,
    #[serde(default)]
    constants: BTreeMap<String, Real>,
    #[serde(default)]
    domain: Option<DomainFile>,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    sigma1: Real,
    sigma2: Real,
}

/// Parse a scenario file. Constants that are not listed are zero.
pub fn parse_scenario(text: &str) -> Result<ExampleScenario> {
    let load = |msg: String| Error::Load { case: "scenario".into(), msg };
    let f: ScenarioFile = serde_json::from_str(text).map_err(|e| load(e.to_string()))?;
    let ctx = |e: Error| Error::Load { case: format!("example {}", f.example), msg: e.to_string() };
    let mut constants = Constants::default();
    for (k, &v) in &f.constants {
        constants.set(k, v).map_err(ctx)?;
    }
    let domain = f.domain.as_ref().map(|d| (d.sigma1, d.sigma2));
    let mut sc = ExampleScenario::new(f.example, (f.alpha1, f.alpha2), f.params.clone(), constants, domain).map_err(ctx)?;
    sc.note = f.note.clone();
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<ExampleScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

/// data/scenarios/example{id}.json in the source tree.
pub fn default_scenario_path(example_id: u8) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/scenarios/example{example_id}.json"))
}

/// Accumulates c·t^e/Γ(g) terms, dropping zero coefficients.
#[derive(Default)]
struct Terms(Vec<Term>);

impl Terms {
    /// c·t^e/Γ(e+1).
    fn pw(&mut self, c: Real, e: Real) -> &mut Self {
        self.pw_g(c, e, e + 1.0)
    }

    fn pw_g(&mut self, c: Real, e: Real, g: Real) -> &mut Self {
        if c != 0.0 {
            // Integer arguments use exact factorials so polynomial terms carry no rounding.
            let r = if g.fract() == 0.0 && (1.0..=20.0).contains(&g) {
                1.0 / (1..g as u64).product::<u64>() as Real
            } else {
                rgamma(g)
            };
            self.0.push(Term::power(c * r, e));
        }
        self
    }

    /// A·E_{α,1}(λt^α) + B·t·E_{α,2}(λt^α).
    fn relax(&mut self, a: Real, b: Real, lambda: Real, alpha: Real) -> Result<&mut Self> {
        if a != 0.0 {
            self.0.push(Term::ml(a, 0.0, lambda, alpha, 1.0)?);
        }
        if b != 0.0 {
            self.0.push(Term::ml(b, 1.0, lambda, alpha, 2.0)?);
        }
        Ok(self)
    }

    fn done(&mut self) -> Result<TimeCoefficient> {
        TimeCoefficient::new(std::mem::take(&mut self.0))
    }
}

/// The eight δ_{si} of the scenario, branch chosen by its orders.
pub fn closed_form_deltas(sc: &ExampleScenario, reading: Reading) -> Result<Vec<TimeCoefficient>> {
    branch_deltas(sc, sc.regimes(), reading)
}

/// The δ's of a named branch; the branch must match the scenario's orders.
pub fn closed_form_deltas_in(sc: &ExampleScenario, regimes: [Regime; 2], reading: Reading) -> Result<Vec<TimeCoefficient>> {
    if regimes != sc.regimes() {
        return Err(Error::Argument(format!(
            "branch {regimes:?} does not match orders ({}, {})",
            sc.alpha(0),
            sc.alpha(1)
        )));
    }
    branch_deltas(sc, regimes, reading)
}

/// The δ's of a named branch evaluated at the scenario's orders, without
/// checking that the branch matches them. Used for negative controls.
pub fn branch_deltas(sc: &ExampleScenario, regimes: [Regime; 2], reading: Reading) -> Result<Vec<TimeCoefficient>> {
    let wave = [regimes[0] == Regime::Wave, regimes[1] == Regime::Wave];
    let al = [sc.alpha(0), sc.alpha(1)];
    let a = sc.constants.a;
    // B_{si} is consumed only in the (1,2] branch of component s.
    let mut b = sc.constants.b;
    for s in 0..2 {
        if !wave[s] {
            b[s] = [0.0; 4];
        }
    }
    let p = |n: &str| sc.sym(n);
    let mut out = Vec::with_capacity(8);
    let mut tb = Terms::default();
    match sc.example_id {
        1 => {
            let g = [p("g10"), p("g20")];
            let h = [p("h10"), p("h20")];
            let et = [p("eta10"), p("eta20")];
            let d = [p("d10"), p("d20")];
            let gam: Vec<Real> = (0..2).map(|s| g[s] * a[1][3] + et[s] * a[0][3]).collect();
            let kap: Vec<Real> = (0..2).map(|s| g[s] * b[1][3] + et[s] * b[0][3]).collect();
            let mu: Vec<Real> = (0..2).map(|s| h[s] * a[1][3] + d[s] * a[0][3]).collect();
            let nu: Vec<Real> = (0..2).map(|s| h[s] * b[1][3] + d[s] * b[0][3]).collect();
            let mut rows: [Vec<TimeCoefficient>; 2] = [Vec::new(), Vec::new()];
            for s in 0..2 {
                let l = g[s] * a[1][1] + h[s] * a[1][2] + d[s] * a[0][2] + et[s] * a[0][1];
                let vs = g[s] * b[1][1] + h[s] * b[1][2] + d[s] * b[0][2] + et[s] * b[0][1];
                let rho = [d[s] * gam[0] + et[s] * mu[0], g[s] * mu[1] + h[s] * gam[1]];
                let lam = [d[s] * kap[0] + et[s] * nu[0], g[s] * nu[1] + h[s] * kap[1]];
                let l_gamma = if reading == Reading::Printed && s == 0 && wave[0] && wave[1] { al[1] + 1.0 } else { al[s] + 1.0 };
                tb.pw(a[s][0], 0.0).pw(b[s][0], 1.0).pw_g(l, al[s], l_gamma).pw(vs, al[s] + 1.0);
                for i in 0..2 {
                    tb.pw(rho[i], al[s] + al[i]).pw(lam[i], al[s] + al[i] + 1.0);
                }
                rows[s].push(tb.done()?);
                rows[s].push(tb.pw(a[s][1], 0.0).pw(b[s][1], 1.0).pw(mu[s], al[s]).pw(nu[s], al[s] + 1.0).done()?);
                rows[s].push(tb.pw(a[s][2], 0.0).pw(b[s][2], 1.0).pw(gam[s], al[s]).pw(kap[s], al[s] + 1.0).done()?);
                rows[s].push(tb.pw(a[s][3], 0.0).pw(b[s][3], 1.0).done()?);
            }
            let [r1, r2] = rows;
            out.extend(r1);
            out.extend(r2);
        }
        2 => {
            let (a1, a2) = (al[0], al[1]);
            let (h10, eta10, g20, h20) = (p("h10"), p("eta10"), p("g20"), p("h20"));
            let gamma0 = p("p10") * p("a21").powi(2) - p("d10") * p("a21");
            let l1 = eta10 * a[0][1] + h10 * a[1][2];
            let l2 = eta10 * b[0][1] + h10 * b[1][2];
            tb.pw(a[0][0], 0.0).pw(b[0][0], 1.0).pw(l1, a1).pw(l2, a1 + 1.0);
            tb.pw(h10 * eta10 * a[1][3], 2.0 * a1).pw(h10 * eta10 * b[1][3], 2.0 * a1 + 1.0);
            tb.pw(h10 * g20 * a[1][3], a1 + a2).pw(h10 * g20 * b[1][3], a1 + a2 + 1.0);
            out.push(tb.done()?);
            out.push(tb.pw(a[0][1], 0.0).pw(b[0][1], 1.0).pw(h10 * a[1][3], a1).pw(h10 * b[1][3], a1 + 1.0).done()?);
            tb.relax(a[0][2], b[0][2], gamma0, a1)?;
            // η₁₀ t^{α₁−1}E_{α₁,α₁}(γ₀t^{α₁}) ∗ δ₁₄
            if eta10 != 0.0 {
                let kernel = Term::ml(eta10, a1 - 1.0, gamma0, a1, a1)?;
                if a[0][3] != 0.0 {
                    tb.0.push(Term::conv(kernel.clone(), Term::ml(a[0][3], 0.0, gamma0, a1, 1.0)?)?);
                }
                if b[0][3] != 0.0 {
                    tb.0.push(Term::conv(kernel, Term::ml(b[0][3], 1.0, gamma0, a1, 2.0)?)?);
                }
            }
            out.push(tb.done()?);
            out.push(tb.relax(a[0][3], b[0][3], gamma0, a1)?.done()?);
            let rho21 = h20 * a[1][2] + g20 * a[1][1];
            let rho22 = 2.0 * h20 * g20 * a[1][3];
            let lam21 = h20 * b[1][2] + g20 * b[1][1];
            let lam22 = 2.0 * h20 * g20 * b[1][3];
            tb.pw(a[1][0], 0.0).pw(b[1][0], 1.0).pw(rho21, a2).pw(lam21, a2 + 1.0).pw(rho22, 2.0 * a2).pw(lam22, 2.0 * a2 + 1.0);
            out.push(tb.done()?);
            out.push(tb.pw(a[1][1], 0.0).pw(b[1][1], 1.0).pw(h20 * a[1][3], a2).pw(h20 * b[1][3], a2 + 1.0).done()?);
            out.push(tb.pw(a[1][2], 0.0).pw(b[1][2], 1.0).pw(g20 * a[1][3], a2).pw(g20 * b[1][3], a2 + 1.0).done()?);
            out.push(tb.pw(a[1][3], 0.0).pw(b[1][3], 1.0).done()?);
        }
        3 => {
            let gamma0 = -p("k10") * p("a10") - p("p10") * p("b20");
            let gamma1 = p("q20") * p("b11").powi(2) - p("c20") * p("b20") - p("g20") * p("b11");
            // The printed (1,2] branch uses c₁₀, which this operator does not contain (zero).
            let c_wave = if reading == Reading::Printed { 0.0 } else { p("c20") };
            let rate2 = if wave[1] { -c_wave * p("b20") } else { -p("c20") * p("b20") };
            for i in 0..4 {
                out.push(tb.relax(a[0][i], b[0][i], gamma0, al[0])?.done()?);
            }
            for i in 0..4 {
                let rate = if i < 2 { rate2 } else { gamma1 };
                out.push(tb.relax(a[1][i], b[1][i], rate, al[1])?.done()?);
            }
        }
        4 => {
            for n in ["eta10", "d10", "h20"] {
                if p(n) != 0.0 {
                    return Err(Error::Argument(format!("example 4 closed forms require {n} = 0")));
                }
            }
            let rate1 = -p("k10") * p("a10");
            let gamma0 = p("q20") * p("b11").powi(2) - p("g20") * p("b11");
            for i in 0..4 {
                out.push(tb.relax(a[0][i], b[0][i], rate1, al[0])?.done()?);
            }
            for i in 0..4 {
                if i < 2 {
                    out.push(tb.pw(a[1][i], 0.0).pw(b[1][i], 1.0).done()?);
                } else {
                    out.push(tb.relax(a[1][i], b[1][i], gamma0, al[1])?.done()?);
                }
            }
        }
        5 => {
            for n in ["eta10", "d10", "h20", "g20"] {
                if p(n) != 0.0 {
                    return Err(Error::Argument(format!("example 5 closed forms require {n} = 0")));
                }
            }
            let rate1 = -p("p10") * p("a20");
            let c_wave = if reading == Reading::Printed { 0.0 } else { p("c20") };
            let rate2 = if wave[1] { -c_wave * p("b20") } else { -p("c20") * p("b20") };
            for i in 0..4 {
                out.push(tb.relax(a[0][i], b[0][i], rate1, al[0])?.done()?);
            }
            for i in 0..4 {
                out.push(tb.relax(a[1][i], b[1][i], rate2, al[1])?.done()?);
            }
        }
        id => return Err(Error::Argument(format!("example id {id} outside 1..5"))),
    }
    Ok(out)
}

/// The basis functions multiplying δ_{s1} … δ_{s4}, per component.
pub fn example_basis(sc: &ExampleScenario, reading: Reading) -> Result<[Vec<ProductBasisFunction>; 2]> {
    let b = |atoms: &[Atom]| ProductBasisFunction::new(2, atoms);
    let x1 = Atom::monomial(0, 1);
    let x2 = Atom::monomial(1, 1);
    let p = |n: &str| sc.sym(n);
    Ok(match sc.example_id {
        1 => {
            let span = vec![b(&[])?, b(&[x1])?, b(&[x2])?, b(&[x1, x2])?];
            [span.clone(), span]
        }
        2 => {
            let e = Atom::exp(1, -p("a21"));
            [vec![b(&[])?, b(&[x1])?, b(&[e])?, b(&[x1, e])?], vec![b(&[])?, b(&[x1])?, b(&[x2])?, b(&[x1, x2])?]]
        }
        3 => {
            let (w1, w2) = (p("a10").sqrt(), p("b20").sqrt());
            let (s1, c1, s2, c2) = (Atom::sin(0, w1), Atom::cos(0, w1), Atom::sin(1, w2), Atom::cos(1, w2));
            let e = Atom::exp(0, -p("b11"));
            [
                vec![b(&[s1, s2])?, b(&[s1, c2])?, b(&[c1, s2])?, b(&[c1, c2])?],
                vec![b(&[s2])?, b(&[c2])?, b(&[e, s2])?, b(&[e, c2])?],
            ]
        }
        4 => {
            let w = p("a10").sqrt();
            let (s, c) = (Atom::sin(0, w), Atom::cos(0, w));
            let rate = if reading == Reading::Printed { p("b11") } else { -p("b11") };
            let e = Atom::exp(0, rate);
            [vec![b(&[s])?, b(&[s, x2])?, b(&[c])?, b(&[c, x2])?], vec![b(&[])?, b(&[x2])?, b(&[e])?, b(&[e, x2])?]]
        }
        5 => {
            let mut spans = [Vec::new(), Vec::new()];
            for (s, name) in ["a20", "b20"].iter().enumerate() {
                let w = p(name).sqrt();
                let (sn, cs) = (Atom::sin(1, w), Atom::cos(1, w));
                spans[s] = vec![b(&[sn])?, b(&[cs])?, b(&[x1, sn])?, b(&[x1, cs])?];
            }
            spans
        }
        id => return Err(Error::Argument(format!("example id {id} outside 1..5"))),
    })
}

/// The example's invariant space as a type-1 product space.
pub fn example_space(sc: &ExampleScenario, reading: Reading) -> Result<ProductSubspaceSpec> {
    let [s1, s2] = example_basis(sc, reading)?;
    ProductSubspaceSpec::new(1, vec![s1, s2], None)
}

/// The reduced system D^{α}δ = Mδ of each example, derived by hand from its PDE.
pub fn example_fode_system(sc: &ExampleScenario) -> Result<LinearFodeSystem> {
    let p = |n: &str| sc.sym(n);
    let mut m = DMatrix::zeros(8, 8);
    let ix = |s: usize, i: usize| 4 * s + i;
    match sc.example_id {
        1 => {
            for s in 0..2 {
                let c = |n: &str| p(&format!("{n}{}0", s + 1));
                m[(ix(s, 0), ix(1, 1))] += c("g");
                m[(ix(s, 0), ix(1, 2))] += c("h");
                m[(ix(s, 0), ix(0, 1))] += c("eta");
                m[(ix(s, 0), ix(0, 2))] += c("d");
                m[(ix(s, 1), ix(1, 3))] += c("h");
                m[(ix(s, 1), ix(0, 3))] += c("d");
                m[(ix(s, 2), ix(1, 3))] += c("g");
                m[(ix(s, 2), ix(0, 3))] += c("eta");
            }
        }
        2 => {
            let gamma0 = p("p10") * p("a21").powi(2) - p("d10") * p("a21");
            m[(0, 1)] = p("eta10");
            m[(0, 6)] = p("h10");
            m[(1, 7)] = p("h10");
            m[(2, 2)] = gamma0;
            m[(2, 3)] = p("eta10");
            m[(3, 3)] = gamma0;
            m[(4, 5)] = p("g20");
            m[(4, 6)] = p("h20");
            m[(5, 7)] = p("h20");
            m[(6, 7)] = p("g20");
        }
        3 => {
            let gamma0 = -p("k10") * p("a10") - p("p10") * p("b20");
            let gamma1 = p("q20") * p("b11").powi(2) - p("c20") * p("b20") - p("g20") * p("b11");
            let diag = [gamma0, gamma0, gamma0, gamma0, -p("c20") * p("b20"), -p("c20") * p("b20"), gamma1, gamma1];
            m.set_diagonal(&DVector::from_column_slice(&diag));
        }
        4 | 5 => {
            let zeros: &[&str] = if sc.example_id == 4 { &["eta10", "d10", "h20"] } else { &["eta10", "d10", "h20", "g20"] };
            if let Some(n) = zeros.iter().find(|n| p(n) != 0.0) {
                return Err(Error::Argument(format!("example {} reduces to a diagonal system only with {n} = 0", sc.example_id)));
            }
        }
        id => return Err(Error::Argument(format!("example id {id} outside 1..5"))),
    }
    match sc.example_id {
        4 => {
            let r = -p("k10") * p("a10");
            let gamma0 = p("q20") * p("b11").powi(2) - p("g20") * p("b11");
            m.set_diagonal(&DVector::from_column_slice(&[r, r, r, r, 0.0, 0.0, gamma0, gamma0]));
        }
        5 => {
            let r1 = -p("p10") * p("a20");
            let r2 = -p("c20") * p("b20");
            m.set_diagonal(&DVector::from_column_slice(&[r1, r1, r1, r1, r2, r2, r2, r2]));
        }
        _ => {}
    }
    let orders = (0..8).map(|j| sc.order(j / 4)).collect();
    Ok(LinearFodeSystem { matrix: m, orders })
}

/// D^{α_j} y_j = Σ_k M_{jk} y_k.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFodeSystem {
    pub matrix: DMatrix<Real>,
    pub orders: Vec<FractionalOrder>,
}

/// Numerically recovered right sides Φ_j(λ) of the reduced system.
#[derive(Clone, Debug)]
pub struct FodeReduction {
    /// Exponent vectors over the K = k₁ + k₂ expansion coefficients, total degree ≤ 3.
    pub monomials: Vec<Vec<u8>>,
    /// Row m, column j: coefficient of monomial m in Φ_j.
    pub coefficients: DMatrix<Real>,
    /// Worst relative misfit on draws not used in the fit.
    pub holdout_residual: Real,
    /// Worst relative distance of F_s from its span over all draws.
    pub projection_residual: Real,
}

impl FodeReduction {
    fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.monomials.iter().position(|m| m.as_slice() == exps)
    }

    /// ∂Φ_j/∂λ_k at λ = 0.
    pub fn linear_matrix(&self) -> DMatrix<Real> {
        let k = self.coefficients.ncols();
        let mut m = DMatrix::zeros(k, k);
        for c in 0..k {
            let mut e = vec![0u8; k];
            e[c] = 1;
            if let Some(row) = self.index_of(&e) {
                for j in 0..k {
                    m[(j, c)] = self.coefficients[(row, j)];
                }
            }
        }
        m
    }

    /// Largest |coefficient| over the constant and degree ≥ 2 monomials.
    pub fn max_nonlinear(&self) -> Real {
        let mut worst: Real = 0.0;
        for (r, m) in self.monomials.iter().enumerate() {
            let deg: u32 = m.iter().map(|&e| e as u32).sum();
            if deg != 1 {
                for j in 0..self.coefficients.ncols() {
                    worst = worst.max(self.coefficients[(r, j)].abs());
                }
            }
        }
        worst
    }
}

fn monomials_up_to(vars: usize, degree: u8) -> Vec<Vec<u8>> {
    fn go(start: usize, left: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in start..cur.len() {
            cur[v] += 1;
            go(v, left - 1, cur, out);
            cur[v] -= 1;
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        go(0, d, &mut vec![0u8; vars], &mut out);
    }
    out
}

fn monomial_value(e: &[u8], x: &[Real]) -> Real {
    e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product()
}

/// Held-out misfit allowed before the fit is declared inconsistent.
pub const REDUCTION_TOL: Real = 1e-8;

/// Recover Φ_{s,i}(λ) by projecting F_s of random span elements onto the span
/// and fitting the projections with polynomials of total degree ≤ 3 in λ.
pub fn reduce_to_fodes(params: &CubicOperatorParams, space: &ProductSubspaceSpec, seed: u64) -> Result<FodeReduction> {
    let spans = space.spans();
    if spans.len() != 2 || space.dim() != 2 {
        return Err(Error::Capability("reduction is implemented for two components in two coordinates".into()));
    }
    let (k1, k2) = (spans[0].len(), spans[1].len());
    let kk = k1 + k2;
    let grid = tensor_grid(2, 7, GRID_LO, GRID_HI);
    let mut pinv = Vec::with_capacity(2);
    let mut gmat = Vec::with_capacity(2);
    for span in spans {
        let g = DMatrix::from_fn(grid.len(), span.len(), |r, c| span[c].eval(&grid[r]));
        let svd = g.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() <= 1e-10 * smax {
            return Err(Error::Conditioning("span is numerically dependent on the reduction grid".into()));
        }
        pinv.push(svd.pseudo_inverse(0.0).map_err(|e| Error::Conditioning(e.to_string()))?);
        gmat.push(g);
    }
    let monomials = monomials_up_to(kk, 3);
    let n_fit = 2 * monomials.len();
    let n_hold = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lambdas = DMatrix::zeros(n_fit + n_hold, kk);
    let mut phi = DMatrix::zeros(n_fit + n_hold, kk);
    let mut projection_residual: Real = 0.0;
    for d in 0..n_fit + n_hold {
        let lam: Vec<Real> = (0..kk).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u1 = Expansion::new(spans[0].clone(), lam[..k1].to_vec())?;
        let u2 = Expansion::new(spans[1].clone(), lam[k1..].to_vec())?;
        let mut f = [DVector::zeros(grid.len()), DVector::zeros(grid.len())];
        for (r, x) in grid.iter().enumerate() {
            let (f1, f2) = apply_f(params, &u1, &u2, x)?;
            f[0][r] = f1;
            f[1][r] = f2;
        }
        let mut col = 0;
        for s in 0..2 {
            let c = &pinv[s] * &f[s];
            let resid = (&f[s] - &gmat[s] * &c).norm() / f[s].norm().max(1.0);
            projection_residual = projection_residual.max(resid);
            for v in c.iter() {
                phi[(d, col)] = *v;
                col += 1;
            }
        }
        for (k, v) in lam.iter().enumerate() {
            lambdas[(d, k)] = *v;
        }
    }
    if projection_residual > REDUCTION_TOL {
        return Err(Error::Structural(format!("F leaves the span (relative residual {projection_residual:.3e})")));
    }
    let vand = |rows: std::ops::Range<usize>| {
        DMatrix::from_fn(rows.len(), monomials.len(), |r, m| {
            let lam: Vec<Real> = lambdas.row(rows.start + r).iter().copied().collect();
            monomial_value(&monomials[m], &lam)
        })
    };
    let v_fit = vand(0..n_fit);
    let coefficients = v_fit
        .svd(true, true)
        .solve(&phi.rows(0, n_fit).into_owned(), 0.0)
        .map_err(|e| Error::Conditioning(e.to_string()))?;
    let pred = vand(n_fit..n_fit + n_hold) * &coefficients;
    let actual = phi.rows(n_fit, n_hold);
    let scale = phi.amax().max(1.0);
    let holdout_residual = (pred - actual).amax() / scale;
    if holdout_residual > REDUCTION_TOL {
        return Err(Error::Structural(format!(
            "projections are not cubic in the coefficients (held-out misfit {holdout_residual:.3e})"
        )));
    }
    Ok(FodeReduction { monomials, coefficients, holdout_residual, projection_residual })
}

/// Uniform-mesh trajectory of a linear FODE system.
#[derive(Clone, Debug)]
pub struct OracleTrajectory {
    pub h: Real,
    /// values[n][j] = y_j(n·h).
    pub values: Vec<Vec<Real>>,
}

impl OracleTrajectory {
    /// y(t) at a mesh point.
    pub fn at(&self, t: Real) -> Result<&[Real]> {
        let k = t / self.h;
        let n = k.round();
        if (k - n).abs() > 1e-9 * k.max(1.0) || n < 0.0 || n as usize >= self.values.len() {
            return Err(Error::Argument(format!("t = {t} is not a mesh point")));
        }
        Ok(&self.values[n as usize])
    }
}

/// Smallest step count the oracle accepts.
pub const ORACLE_MIN_STEPS: usize = 64;

/// How the product-trapezoid corrector is applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Corrector {
    /// One evaluation of the corrector at the predicted value.
    Pece,
    /// The corrector equation solved exactly; the limit of repeated correction.
    #[default]
    Implicit,
}

/// Fractional Adams predictor-corrector on n uniform steps of [0, t_end],
/// with the corrector solved exactly.
pub fn fode_oracle(system: &LinearFodeSystem, y0: &[Real], dy0: &[Real], t_end: Real, n: usize) -> Result<OracleTrajectory> {
    fode_oracle_with(system, y0, dy0, t_end, n, Corrector::Implicit)
}

/// Fractional Adams predictor-corrector on n uniform steps of [0, t_end].
///
/// Each equation uses the product-rectangle predictor and product-trapezoid
/// corrector weights of its own order; `dy0` is read only for orders above 1.
pub fn fode_oracle_with(
    system: &LinearFodeSystem,
    y0: &[Real],
    dy0: &[Real],
    t_end: Real,
    n: usize,
    corrector: Corrector,
) -> Result<OracleTrajectory> {
    let k = system.matrix.nrows();
    if system.matrix.ncols() != k || system.orders.len() != k || y0.len() != k || dy0.len() != k {
        return Err(Error::Argument("system, orders and initial data disagree in size".into()));
    }
    if n < ORACLE_MIN_STEPS {
        return Err(Error::Precision(format!("{n} steps is below the minimum of {ORACLE_MIN_STEPS}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Argument(format!("end time {t_end} must be positive")));
    }
    let h = t_end / n as Real;
    struct Weights {
        alpha: Real,
        wave: bool,
        pred_scale: Real,
        corr_scale: Real,
        b: Vec<Real>,
        a: Vec<Real>,
    }
    let weights: Vec<Weights> = system
        .orders
        .iter()
        .map(|o| {
            let al = o.alpha();
            let b = (0..=n).map(|j| (j as Real + 1.0).powf(al) - (j as Real).powf(al)).collect();
            let a = (0..=n)
                .map(|j| {
                    let j = j as Real;
                    (j + 2.0).powf(al + 1.0) + j.powf(al + 1.0) - 2.0 * (j + 1.0).powf(al + 1.0)
                })
                .collect();
            Weights {
                alpha: al,
                wave: al > 1.0,
                pred_scale: h.powf(al) * rgamma(al + 1.0),
                corr_scale: h.powf(al) * rgamma(al + 2.0),
                b,
                a,
            }
        })
        .collect();
    let rhs = |y: &[Real]| -> Vec<Real> { (0..k).map(|j| (0..k).map(|c| system.matrix[(j, c)] * y[c]).sum()).collect() };
    // f[j][i] = (My_i)_j, stored per equation for contiguous sums.
    let mut f: Vec<Vec<Real>> = vec![Vec::with_capacity(n + 1); k];
    let mut values = Vec::with_capacity(n + 1);
    values.push(y0.to_vec());
    for (j, v) in rhs(y0).into_iter().enumerate() {
        f[j].push(v);
    }
    let mut taylor = vec![0.0; k];
    let mut corr = vec![0.0; k];
    let mut pred = vec![0.0; k];
    // (I − diag(h^α/Γ(α+2))·M) y_{n+1} = taylor + diag(h^α/Γ(α+2))·history
    let implicit = match corrector {
        Corrector::Pece => None,
        Corrector::Implicit => {
            let a = DMatrix::from_fn(k, k, |j, c| {
                (if j == c { 1.0 } else { 0.0 }) - weights[j].corr_scale * system.matrix[(j, c)]
            });
            let lu = a.lu();
            if !lu.is_invertible() {
                return Err(Error::Conditioning("corrector matrix is singular at this step size".into()));
            }
            Some(lu)
        }
    };
    for step in 0..n {
        let t1 = (step + 1) as Real * h;
        for j in 0..k {
            let w = &weights[j];
            taylor[j] = y0[j] + if w.wave { t1 * dy0[j] } else { 0.0 };
            let fj = &f[j];
            let mut ps = 0.0;
            for (i, fv) in fj.iter().enumerate() {
                ps += w.b[step - i] * fv;
            }
            pred[j] = taylor[j] + w.pred_scale * ps;
            let ns = step as Real;
            let mut cs = (ns.powf(w.alpha + 1.0) - (ns - w.alpha) * (ns + 1.0).powf(w.alpha)) * fj[0];
            for (i, fv) in fj.iter().enumerate().skip(1) {
                cs += w.a[step - i] * fv;
            }
            corr[j] = cs;
        }
        let y: Vec<Real> = match (corrector, &implicit) {
            (Corrector::Pece, _) | (_, None) => {
                let fp = rhs(&pred);
                (0..k).map(|j| taylor[j] + weights[j].corr_scale * (fp[j] + corr[j])).collect()
            }
            (Corrector::Implicit, Some(lu)) => {
                let b = DVector::from_fn(k, |j, _| taylor[j] + weights[j].corr_scale * corr[j]);
                lu.solve(&b).expect("factor checked invertible").iter().copied().collect()
            }
        };
        for (j, v) in rhs(&y).into_iter().enumerate() {
            f[j].push(v);
        }
        values.push(y);
    }
    Ok(OracleTrajectory { h, values })
}

/// Leading exponents of the oracle's error expansion in h.
///
/// Interpolating a right side that behaves like t^μ near 0 costs h^{1+μ}; the
/// exponents μ = j + Σ k_i α_i (j ∈ {0, 1}) are those the solution can contain.
/// Integer μ contribute through the smooth h², h³, … terms instead.
pub fn oracle_error_exponents(orders: &[FractionalOrder], count: usize) -> Vec<Real> {
    let mut alphas: Vec<Real> = orders.iter().map(|o| o.alpha()).collect();
    alphas.sort_by(Real::total_cmp);
    alphas.dedup();
    let mut sums = vec![0.0];
    for _ in 0..4 {
        let mut next = sums.clone();
        for s in &sums {
            next.extend(alphas.iter().map(|a| s + a));
        }
        sums = next;
    }
    let mut out: Vec<Real> = sums
        .iter()
        .flat_map(|s| [*s, s + 1.0])
        .filter(|m| (m - m.round()).abs() > 1e-9)
        .map(|m| 1.0 + m)
        .chain([2.0, 3.0, 4.0])
        .collect();
    out.sort_by(Real::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    out.truncate(count);
    out
}

/// Richardson levels used by certification: meshes n, n/2 and n/4.
pub const ORACLE_LEVELS: usize = 3;

/// The oracle on meshes n, n/2, …, n/2^{levels−1}, combined on the coarsest mesh
/// so that the first levels − 1 terms of the error expansion cancel.
pub fn fode_oracle_extrapolated(
    system: &LinearFodeSystem,
    y0: &[Real],
    dy0: &[Real],
    t_end: Real,
    n: usize,
    levels: usize,
) -> Result<OracleTrajectory> {
    if levels == 0 || !n.is_multiple_of(1 << (levels - 1)) {
        return Err(Error::Argument(format!("{n} steps cannot be halved {} times", levels.saturating_sub(1))));
    }
    let coarse = n >> (levels - 1);
    if coarse < ORACLE_MIN_STEPS {
        return Err(Error::Precision(format!("coarsest mesh of {coarse} steps is below {ORACLE_MIN_STEPS}")));
    }
    let trajs = (0..levels).map(|l| fode_oracle(system, y0, dy0, t_end, n >> l)).collect::<Result<Vec<_>>>()?;
    let exps = oracle_error_exponents(&system.orders, levels - 1);
    // v_l = y + Σ_i c_i (2^l h)^{e_i}; the h^{e_i} factors are absorbed into c_i.
    let m = DMatrix::from_fn(levels, levels, |r, c| if c == 0 { 1.0 } else { (2.0 as Real).powi(r as i32).powf(exps[c - 1]) });
    let lu = m.lu();
    let k = y0.len();
    let mut values = Vec::with_capacity(coarse + 1);
    for step in 0..=coarse {
        let mut row = Vec::with_capacity(k);
        for j in 0..k {
            let v = DVector::from_fn(levels, |l, _| trajs[l].values[step << (levels - 1 - l)][j]);
            let sol = lu.solve(&v).ok_or_else(|| Error::Conditioning("extrapolation matrix is singular".into()))?;
            row.push(sol[0]);
        }
        values.push(row);
    }
    Ok(OracleTrajectory { h: t_end / coarse as Real, values })
}

/// Σ_i δ_{si}(t)·w_{si}(x) for both components.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableSolution {
    pub components: [Vec<(TimeCoefficient, ProductBasisFunction)>; 2],
}

impl SeparableSolution {
    /// Pair the eight δ's with the two spans in order.
    pub fn from_parts(deltas: Vec<TimeCoefficient>, basis: [Vec<ProductBasisFunction>; 2]) -> Result<Self> {
        let k1 = basis[0].len();
        if deltas.len() != k1 + basis[1].len() {
            return Err(Error::Argument("number of time coefficients does not match the spans".into()));
        }
        let mut it = deltas.into_iter();
        let [b1, b2] = basis;
        let c1 = b1.into_iter().map(|w| (it.next().expect("sized above"), w)).collect();
        let c2 = b2.into_iter().map(|w| (it.next().expect("sized above"), w)).collect();
        Ok(Self { components: [c1, c2] })
    }

    pub fn eval(&self, s: usize, x: &[Real], t: Real) -> Result<Real> {
        let mut v = 0.0;
        for (d, w) in &self.components[s] {
            v += d.value(t)? * w.eval(x);
        }
        Ok(v)
    }

    /// ∂u_s/∂t at t → 0⁺ from the term-wise derivative of every δ.
    pub fn time_derivative_at_zero(&self, s: usize, x: &[Real]) -> Result<Real> {
        let mut v = 0.0;
        for (d, w) in &self.components[s] {
            v += d.derivative_at_zero()? * w.eval(x);
        }
        Ok(v)
    }

    /// All δ's, component 1 first.
    pub fn deltas(&self) -> Vec<&TimeCoefficient> {
        self.components.iter().flatten().map(|(d, _)| d).collect()
    }
}

pub fn assemble_solution(sc: &ExampleScenario, reading: Reading) -> Result<SeparableSolution> {
    SeparableSolution::from_parts(closed_form_deltas(sc, reading)?, example_basis(sc, reading)?)
}

/// ω_s (derivative = false) or ϑ_s (derivative = true) as displayed with each example.
pub fn initial_profile(sc: &ExampleScenario, reading: Reading, s: usize, derivative: bool, x: &[Real]) -> Real {
    let c = if derivative { sc.constants.b[s] } else { sc.constants.a[s] };
    let (x1, x2) = (x[0], x[1]);
    let p = |n: &str| sc.sym(n);
    match sc.example_id {
        1 => c[0] + c[1] * x1 + c[2] * x2 + c[3] * x1 * x2,
        2 if s == 0 => c[0] + c[1] * x1 + (c[2] + c[3] * x1) * (-p("a21") * x2).exp(),
        2 => c[0] + c[1] * x1 + (c[2] + c[3] * x1) * x2,
        3 if s == 0 => {
            let (w1, w2) = (p("a10").sqrt(), p("b20").sqrt());
            (c[0] * (w1 * x1).sin() + c[2] * (w1 * x1).cos()) * (w2 * x2).sin()
                + (c[1] * (w1 * x1).sin() + c[3] * (w1 * x1).cos()) * (w2 * x2).cos()
        }
        3 => {
            let w2 = p("b20").sqrt();
            let e = (-p("b11") * x1).exp();
            (c[0] + c[2] * e) * (w2 * x2).sin() + (c[1] + c[3] * e) * (w2 * x2).cos()
        }
        4 if s == 0 => {
            let w = p("a10").sqrt();
            (c[0] + c[1] * x2) * (w * x1).sin() + (c[2] + c[3] * x2) * (w * x1).cos()
        }
        4 => {
            let rate = if reading == Reading::Printed { p("b11") } else { -p("b11") };
            c[0] + c[1] * x2 + (c[2] + c[3] * x2) * (rate * x1).exp()
        }
        _ => {
            let w = p(if s == 0 { "a20" } else { "b20" }).sqrt();
            (c[0] + c[2] * x1) * (w * x2).sin() + (c[1] + c[3] * x1) * (w * x2).cos()
        }
    }
}

/// One row of a certification report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub example: u8,
    pub alpha1: Real,
    pub alpha2: Real,
    pub check: String,
    pub max_error: Real,
    pub tolerance: Real,
    pub worst_point: String,
    pub verdict: Verdict,
}

impl CheckRow {
    fn new(sc: &ExampleScenario, check: impl Into<String>, max_error: Real, tolerance: Real, worst_point: String) -> Self {
        let verdict = if max_error <= tolerance { Verdict::Pass } else { Verdict::Fail };
        Self {
            example: sc.example_id,
            alpha1: sc.alpha(0),
            alpha2: sc.alpha(1),
            check: check.into(),
            max_error,
            tolerance,
            worst_point,
            verdict,
        }
    }

    fn failed(sc: &ExampleScenario, check: impl Into<String>, tolerance: Real, err: &Error) -> Self {
        let mut row = Self::new(sc, check, Real::INFINITY, tolerance, err.to_string().replace(',', ";"));
        row.verdict = Verdict::Fail;
        row
    }
}

fn point_label(x: &[Real], t: Option<Real>) -> String {
    match t {
        Some(t) => format!("x1={};x2={};t={}", x[0], x[1], t),
        None => format!("x1={};x2={}", x[0], x[1]),
    }
}

fn linspace(lo: Real, hi: Real, n: usize) -> Vec<Real> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|j| lo + (hi - lo) * j as Real / (n - 1) as Real).collect()
}

/// Initial data on a 15×15 grid must match to this absolute error.
pub const IC_TOL: Real = 1e-12;
/// Boundary traces must match to this absolute error.
pub const BC_TOL: Real = 1e-10;

/// u_s(·, 0) against ω_s, and ∂u_s/∂t(·, 0) against ϑ_s for every α_s ∈ (1,2].
pub fn check_initial_conditions(sol: &SeparableSolution, sc: &ExampleScenario, reading: Reading) -> Result<Vec<CheckRow>> {
    let (s1, s2) = sc.domain_box();
    let xs = linspace(0.0, s1, 15);
    let ys = linspace(0.0, s2, 15);
    let mut rows = Vec::new();
    let mut targets = vec![(false, "ic")];
    if sc.regimes().contains(&Regime::Wave) {
        targets.push((true, "ic_dt"));
    }
    for (derivative, name) in targets {
        let mut worst = (0.0, String::new());
        for s in 0..2 {
            if derivative && sc.regimes()[s] != Regime::Wave {
                continue;
            }
            for &x1 in &xs {
                for &x2 in &ys {
                    let x = [x1, x2];
                    let u = if derivative { sol.time_derivative_at_zero(s, &x)? } else { sol.eval(s, &x, 0.0)? };
                    let err = (u - initial_profile(sc, reading, s, derivative, &x)).abs();
                    if err > worst.0 || worst.1.is_empty() {
                        worst = (err, format!("u{};{}", s + 1, point_label(&x, None)));
                    }
                }
            }
        }
        rows.push(CheckRow::new(sc, name, worst.0, IC_TOL, worst.1));
    }
    Ok(rows)
}

/// Spatial shape of a boundary trace term along the free coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Shape {
    One,
    Linear,
    Sin(Real),
    Cos(Real),
    Exp(Real),
}

impl Shape {
    fn eval(self, y: Real) -> Real {
        match self {
            Shape::One => 1.0,
            Shape::Linear => y,
            Shape::Sin(w) => (w * y).sin(),
            Shape::Cos(w) => (w * y).cos(),
            Shape::Exp(r) => (r * y).exp(),
        }
    }
}

/// u_s on one edge: Σ_terms (Σ c·δ_k(t))·shape(y).
struct BoundaryLine {
    label: String,
    component: usize,
    fixed: usize,
    value: Real,
    terms: Vec<(Vec<(Real, usize)>, Shape)>,
}

/// The printed ξ_{ij}, f_{ij} combinations of each boundary example.
fn boundary_lines(sc: &ExampleScenario, reading: Reading) -> Result<Vec<BoundaryLine>> {
    let (s1, s2) = sc.domain.ok_or_else(|| Error::Argument("scenario has no domain".into()))?;
    let p = |n: &str| sc.sym(n);
    let one = |k: usize| vec![(1.0, k)];
    let two = |a: Real, i: usize, b: Real, j: usize| vec![(a, i), (b, j)];
    // Flat indices δ_{1i} ↦ i−1, δ_{2i} ↦ 3+i.
    let (d11, d12, d13, d14, d21, d22, d23, d24) = (0, 1, 2, 3, 4, 5, 6, 7);
    let line = |label: &str, component, fixed, value, terms| BoundaryLine {
        label: format!("bc_u{}_{label}", component + 1),
        component,
        fixed,
        value,
        terms,
    };
    match sc.example_id {
        3 => {
            let (wa, wb) = (p("a10").sqrt(), p("b20").sqrt());
            let (c1, c2, c3, c4) = ((s1 * wa).sin(), (s1 * wa).cos(), (s2 * wb).sin(), (s2 * wb).cos());
            let e = (-p("b11") * s1).exp();
            let xi = if reading == Reading::Printed {
                [
                    one(d12),
                    one(d14),
                    two(c1, d11, c2, d12),
                    two(c1, d13, c2, d14),
                    one(d13),
                    one(d14),
                    two(c3, d11, c4, d13),
                    two(c3, d12, c4, d14),
                ]
            } else {
                [
                    one(d13),
                    one(d14),
                    two(c1, d11, c2, d13),
                    two(c1, d12, c2, d14),
                    one(d12),
                    one(d14),
                    two(c3, d11, c4, d12),
                    two(c3, d13, c4, d14),
                ]
            };
            let [x11, x12, x13, x14, x21, x22, x23, x24] = xi;
            let (sb, cb, sa, ca) = (Shape::Sin(wb), Shape::Cos(wb), Shape::Sin(wa), Shape::Cos(wa));
            let ex = Shape::Exp(-p("b11"));
            Ok(vec![
                line("x1=0", 0, 0, 0.0, vec![(x11, sb), (x12, cb)]),
                line("x1=sigma1", 0, 0, s1, vec![(x13, sb), (x14, cb)]),
                line("x2=0", 0, 1, 0.0, vec![(x21, sa), (x22, ca)]),
                line("x2=sigma2", 0, 1, s2, vec![(x23, sa), (x24, ca)]),
                line("x1=0", 1, 0, 0.0, vec![(two(1.0, d21, 1.0, d23), sb), (two(1.0, d22, 1.0, d24), cb)]),
                line("x1=sigma1", 1, 0, s1, vec![(two(1.0, d21, e, d23), sb), (two(1.0, d22, e, d24), cb)]),
                line("x2=0", 1, 1, 0.0, vec![(one(d22), Shape::One), (one(d24), ex)]),
                line("x2=sigma2", 1, 1, s2, vec![(two(c3, d21, c4, d22), Shape::One), (two(c3, d23, c4, d24), ex)]),
            ])
        }
        5 => {
            let (wa, wb) = (p("a20").sqrt(), p("b20").sqrt());
            let (c1, c2, c3, c4) = ((s2 * wa).sin(), (s2 * wa).cos(), (s2 * wb).sin(), (s2 * wb).cos());
            let (sa, ca, sb, cb) = (Shape::Sin(wa), Shape::Cos(wa), Shape::Sin(wb), Shape::Cos(wb));
            let lin = Shape::Linear;
            Ok(vec![
                line("x1=0", 0, 0, 0.0, vec![(one(d11), sa), (one(d12), ca)]),
                line("x1=sigma1", 0, 0, s1, vec![(two(1.0, d11, s1, d13), sa), (two(1.0, d12, s1, d14), ca)]),
                line("x2=0", 0, 1, 0.0, vec![(one(d12), Shape::One), (one(d14), lin)]),
                line("x2=sigma2", 0, 1, s2, vec![(two(c1, d11, c2, d12), Shape::One), (two(c1, d13, c2, d14), lin)]),
                line("x1=0", 1, 0, 0.0, vec![(one(d21), sb), (one(d22), cb)]),
                line("x1=sigma1", 1, 0, s1, vec![(two(1.0, d21, s1, d23), sb), (two(1.0, d22, s1, d24), cb)]),
                line("x2=0", 1, 1, 0.0, vec![(one(d22), Shape::One), (one(d24), lin)]),
                line("x2=sigma2", 1, 1, s2, vec![(two(c3, d21, c4, d22), Shape::One), (two(c3, d23, c4, d24), lin)]),
            ])
        }
        id => Err(Error::Argument(format!("example {id} has no boundary data"))),
    }
}

/// Traces of u_s on the four edges against the printed boundary functions,
/// which are built from the scenario's own closed-form δ's; ten times in [0, 2].
pub fn check_boundary_conditions(sol: &SeparableSolution, sc: &ExampleScenario, reading: Reading) -> Result<Vec<CheckRow>> {
    let lines = boundary_lines(sc, reading)?;
    let deltas = closed_form_deltas(sc, reading)?;
    let (s1, s2) = sc.domain_box();
    let times = linspace(0.0, 2.0, 10);
    let mut dvals = Vec::with_capacity(times.len());
    for &t in &times {
        dvals.push(deltas.iter().map(|d| d.value(t)).collect::<Result<Vec<Real>>>()?);
    }
    let mut rows = Vec::with_capacity(lines.len());
    for l in &lines {
        let free_len = if l.fixed == 0 { s2 } else { s1 };
        let mut worst = (0.0, String::new());
        for (ti, &t) in times.iter().enumerate() {
            for y in linspace(0.0, free_len, 15) {
                let mut x = [0.0; 2];
                x[l.fixed] = l.value;
                x[1 - l.fixed] = y;
                let prescribed: Real = l
                    .terms
                    .iter()
                    .map(|(comb, shape)| comb.iter().map(|&(c, k)| c * dvals[ti][k]).sum::<Real>() * shape.eval(y))
                    .sum();
                let err = (sol.eval(l.component, &x, t)? - prescribed).abs();
                if err > worst.0 || worst.1.is_empty() {
                    worst = (err, point_label(&x, Some(t)));
                }
            }
        }
        rows.push(CheckRow::new(sc, l.label.clone(), worst.0, BC_TOL, worst.1));
    }
    Ok(rows)
}

/// Spatial points × positive times.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualGrid {
    pub points: Vec<[Real; 2]>,
    pub times: Vec<Real>,
}

impl ResidualGrid {
    /// nx × ny uniform points on [0, σ₁] × [0, σ₂] and times T·j/nt, j = 1..nt.
    pub fn uniform(domain: (Real, Real), nx: usize, ny: usize, nt: usize, t_end: Real) -> Self {
        let mut points = Vec::with_capacity(nx * ny);
        for x1 in linspace(0.0, domain.0, nx) {
            for x2 in linspace(0.0, domain.1, ny) {
                points.push([x1, x2]);
            }
        }
        let times = (1..=nt).map(|j| t_end * j as Real / nt as Real).collect();
        Self { points, times }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeResidual {
    pub max: [Real; 2],
    /// (x₁, x₂, t) of each maximum.
    pub worst: [[Real; 3]; 2],
    /// Weakest Caputo evaluation path used by any δ.
    pub path: CaputoPath,
}

/// R_s = D^{α_s}u_s − F_s(u₁, u₂) with D^{α_s} applied term-wise to the δ's.
pub fn pde_residual(
    sol: &SeparableSolution,
    params: &CubicOperatorParams,
    alphas: (FractionalOrder, FractionalOrder),
    grid: &ResidualGrid,
) -> Result<PdeResidual> {
    let orders = [alphas.0, alphas.1];
    let mut path = CaputoPath::Exact;
    for (component, order) in sol.components.iter().zip(orders) {
        for (d, _) in component {
            path = path.max(caputo_path(d, order));
        }
    }
    let mut max = [0.0; 2];
    let mut worst = [[Real::NAN; 3]; 2];
    for &t in &grid.times {
        if !(t > 0.0) {
            return Err(Error::Argument(format!("residual times must be positive, got {t}")));
        }
        let mut vals = [Vec::new(), Vec::new()];
        let mut ders = [Vec::new(), Vec::new()];
        for s in 0..2 {
            for (d, _) in &sol.components[s] {
                vals[s].push(d.value(t)?);
                ders[s].push(caputo_time_coefficient(d, orders[s], t)?);
            }
        }
        let basis = |s: usize| sol.components[s].iter().map(|(_, w)| w.clone()).collect::<Vec<_>>();
        let u1 = Expansion::new(basis(0), vals[0].clone())?;
        let u2 = Expansion::new(basis(1), vals[1].clone())?;
        for x in &grid.points {
            let f = apply_f(params, &u1, &u2, x)?;
            for s in 0..2 {
                let du: Real = sol.components[s].iter().zip(&ders[s]).map(|((_, w), dv)| dv * w.eval(x)).sum();
                let r = (du - if s == 0 { f.0 } else { f.1 }).abs();
                if r > max[s] || worst[s][0].is_nan() {
                    max[s] = r;
                    worst[s] = [x[0], x[1], t];
                }
            }
        }
    }
    Ok(PdeResidual { max, worst, path })
}

/// PDE residual tolerance for the weakest Caputo path.
pub fn residual_tolerance(path: CaputoPath) -> Real {
    match path {
        CaputoPath::Exact => 1e-10,
        CaputoPath::Eigen => 1e-6,
        CaputoPath::Quadrature => 1e-4,
    }
}

/// FODE substitution tolerance for the weakest Caputo path.
pub fn fode_tolerance(path: CaputoPath) -> Real {
    match path {
        CaputoPath::Exact => 1e-12,
        CaputoPath::Eigen => 1e-6,
        CaputoPath::Quadrature => 1e-4,
    }
}

/// max over times and rows of |D^{α_j}δ_j(t) − Σ_k M_{jk}δ_k(t)| / max(1, |Σ_k M_{jk}δ_k(t)|),
/// with the time of the maximum.
pub fn fode_residual(deltas: &[TimeCoefficient], system: &LinearFodeSystem, times: &[Real]) -> Result<(Real, Real, CaputoPath)> {
    let k = deltas.len();
    if system.matrix.nrows() != k || system.orders.len() != k {
        return Err(Error::Argument("system size does not match the time coefficients".into()));
    }
    let path = deltas.iter().zip(&system.orders).map(|(d, o)| caputo_path(d, *o)).max().unwrap_or(CaputoPath::Exact);
    let mut worst = (0.0, Real::NAN);
    for &t in times {
        let vals = deltas.iter().map(|d| d.value(t)).collect::<Result<Vec<Real>>>()?;
        for (j, (dj, order)) in deltas.iter().zip(&system.orders).enumerate() {
            let lhs = caputo_time_coefficient(dj, *order, t)?;
            let rhs: Real = (0..k).map(|c| system.matrix[(j, c)] * vals[c]).sum();
            let r = (lhs - rhs).abs() / rhs.abs().max(1.0);
            if r > worst.0 || worst.1.is_nan() {
                worst = (r, t);
            }
        }
    }
    Ok((worst.0, worst.1, path))
}

/// Closed forms against the oracle must agree to this absolute error on (0, 2].
pub const ORACLE_TOL: Real = 1e-5;
/// Fitted linear coefficients against the hand-derived system.
pub const SYSTEM_TOL: Real = 1e-9;

/// Settings of one certification run.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub reading: Reading,
    pub oracle_steps: usize,
    /// (nx, ny, nt) of the PDE residual grid.
    pub grid: (usize, usize, usize),
    pub seed: u64,
    /// Per-check tolerance overrides by check name.
    pub tolerances: BTreeMap<String, Real>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { reading: Reading::Derived, oracle_steps: 4096, grid: (9, 9, 6), seed: 20240601, tolerances: BTreeMap::new() }
    }
}

/// Closed-form δ's against the extrapolated oracle for the hand-derived system,
/// compared at 64 evenly spaced mesh times in (0, 2].
pub fn oracle_comparison(sc: &ExampleScenario, reading: Reading, steps: usize) -> Result<(Real, Real)> {
    let system = example_fode_system(sc)?;
    let deltas = closed_form_deltas(sc, reading)?;
    let traj = fode_oracle_extrapolated(&system, &sc.constants.flat_a(), &sc.constants.flat_b(), 2.0, steps, ORACLE_LEVELS)?;
    let coarse = traj.values.len() - 1;
    let stride = (coarse / 64).max(1);
    let mut worst = (0.0, Real::NAN);
    for n in (stride..=coarse).step_by(stride) {
        let t = n as Real * traj.h;
        for (j, d) in deltas.iter().enumerate() {
            let e = (d.value(t)? - traj.values[n][j]).abs();
            if e > worst.0 || worst.1.is_nan() {
                worst = (e, t);
            }
        }
    }
    Ok(worst)
}

/// Every check of one example: reduction, oracle, FODE substitution, initial
/// and boundary data, and the PDE residual.
pub fn certify_example(sc: &ExampleScenario, opts: &CertifyOptions) -> Result<Vec<CheckRow>> {
    let reading = opts.reading;
    let tol = |name: &str, default: Real| opts.tolerances.get(name).copied().unwrap_or(default);
    let mut rows = Vec::new();
    let system = example_fode_system(sc)?;
    // Closed forms only exist under the example's structural zeros; that is an argument error.
    let sol = assemble_solution(sc, reading)?;

    match example_space(sc, reading).and_then(|space| reduce_to_fodes(&sc.params, &space, opts.seed)) {
        Ok(red) => {
            rows.push(CheckRow::new(sc, "reduce_fit", red.holdout_residual, tol("reduce_fit", REDUCTION_TOL), String::new()));
            let diff = (red.linear_matrix() - &system.matrix).amax().max(red.max_nonlinear());
            rows.push(CheckRow::new(sc, "reduce_system", diff, tol("reduce_system", SYSTEM_TOL), String::new()));
        }
        Err(e) => {
            rows.push(CheckRow::failed(sc, "reduce_fit", tol("reduce_fit", REDUCTION_TOL), &e));
            rows.push(CheckRow::failed(sc, "reduce_system", tol("reduce_system", SYSTEM_TOL), &e));
        }
    }

    let (err, t) = oracle_comparison(sc, reading, opts.oracle_steps)?;
    rows.push(CheckRow::new(sc, "oracle", err, tol("oracle", ORACLE_TOL), format!("t={t}")));

    let deltas = closed_form_deltas(sc, reading)?;
    let times: Vec<Real> = (1..=20).map(|k| 0.1 * k as Real).collect();
    let (err, t, path) = fode_residual(&deltas, &system, &times)?;
    rows.push(CheckRow::new(sc, "fode", err, tol("fode", fode_tolerance(path)), format!("t={t}")));

    rows.extend(check_initial_conditions(&sol, sc, reading)?);
    if has_boundary_data(sc.example_id) {
        rows.extend(check_boundary_conditions(&sol, sc, reading)?);
    }

    let (nx, ny, nt) = opts.grid;
    let grid = ResidualGrid::uniform(sc.domain_box(), nx, ny, nt, 2.0);
    let res = pde_residual(&sol, &sc.params, sc.alphas, &grid)?;
    for s in 0..2 {
        let name = format!("pde_u{}", s + 1);
        let w = res.worst[s];
        let t = tol(&name, residual_tolerance(res.path));
        rows.push(CheckRow::new(sc, name, res.max[s], t, point_label(&w[..2], Some(w[2]))));
    }
    Ok(rows)
}

/// Perturb each of the sixteen constants of the assembled solution by `delta`
/// and report the worst initial/boundary verdict against the unperturbed data.
pub fn mutation_outcomes(sc: &ExampleScenario, reading: Reading, delta: Real) -> Result<Vec<(String, Verdict)>> {
    let mut out = Vec::with_capacity(16);
    for name in Constants::names() {
        let mutated = sc.with_constant(&name, sc.constants.get(&name)? + delta)?;
        let sol = assemble_solution(&mutated, reading)?;
        let mut rows = check_initial_conditions(&sol, sc, reading)?;
        if has_boundary_data(sc.example_id) {
            rows.extend(check_boundary_conditions(&sol, sc, reading)?);
        }
        let verdict = rows.iter().map(|r| r.verdict).max().unwrap_or(Verdict::Pass);
        out.push((name, verdict));
    }
    Ok(out)
}

/// Header of certification reports.
pub const CHECK_HEADER: &str = "example,alpha1,alpha2,check,max_error,tolerance,worst_point,verdict";

pub fn write_check_csv(rows: &[CheckRow], mut w: impl std::io::Write) -> std::io::Result<()> {
    writeln!(w, "{CHECK_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.example,
            format_real(r.alpha1),
            format_real(r.alpha2),
            r.check,
            format_real(r.max_error),
            format_real(r.tolerance),
            r.worst_point,
            r.verdict
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1(a1: Real, a2: Real) -> ExampleScenario {
        load_scenario(&default_scenario_path(1)).unwrap().with_alphas(a1, a2).unwrap()
    }

    #[test]
    fn constant_names_round_trip() {
        let mut c = Constants::default();
        for (k, n) in Constants::names().iter().enumerate() {
            c.set(n, k as Real).unwrap();
        }
        assert_eq!(c.get("A11").unwrap(), 0.0);
        assert_eq!(c.get("B24").unwrap(), 15.0);
        assert!(c.get("C11").is_err() && c.get("A15").is_err() && c.get("A31").is_err());
    }

    #[test]
    fn monomial_count() {
        assert_eq!(monomials_up_to(8, 3).len(), 165);
        assert_eq!(monomials_up_to(2, 2).len(), 6);
    }

    #[test]
    fn diffusion_branch_of_the_polynomial_example() {
        let sc = ex1(0.8, 0.9);
        let d = closed_form_deltas(&sc, Reading::Derived).unwrap();
        let c = sc.constants;
        for s in 0..2 {
            let d4 = &d[4 * s + 3];
            assert!((d4.value(1.7).unwrap() - c.a[s][3]).abs() < 1e-15);
        }
        let (h10, d10) = (sc.sym("h10"), sc.sym("d10"));
        let mu1 = h10 * c.a[1][3] + d10 * c.a[0][3];
        let t: Real = 1.3;
        let expect = c.a[0][1] + mu1 * t.powf(0.8) / crate::specfun::gamma(1.8).unwrap();
        assert!((d[1].value(t).unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn regime_mismatch_is_an_argument_error() {
        let sc = ex1(0.8, 0.9);
        let e = closed_form_deltas_in(&sc, [Regime::Wave, Regime::Diffusion], Reading::Derived);
        assert!(matches!(e, Err(Error::Argument(_))));
        assert!(closed_form_deltas_in(&sc, [Regime::Diffusion, Regime::Diffusion], Reading::Derived).is_ok());
    }

    #[test]
    fn oracle_rejects_short_meshes() {
        let sys = LinearFodeSystem { matrix: DMatrix::zeros(1, 1), orders: vec![FractionalOrder::new(0.5).unwrap()] };
        assert!(matches!(fode_oracle(&sys, &[1.0], &[0.0], 1.0, 32), Err(Error::Precision(_))));
        let tr = fode_oracle(&sys, &[2.5], &[0.0], 1.0, 64).unwrap();
        assert!(tr.values.iter().all(|v| v[0] == 2.5));
    }
}
