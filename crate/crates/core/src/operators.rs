//! The cubic operator F(u₁, u₂) of the two-component system and the linear
//! diffusion-convection operator, evaluated pointwise on expansions.
//!
//! F_s = Σ_i ∂_i(β_si ∂_i u₁ + ρ_si ∂_i u₂) + Σ_i (ζ_si ∂_i u₁ + υ_si ∂_i u₂) in two
//! space dimensions, where every coefficient is a quadratic form in (u₁, u₂).

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::basis::Expansion;
use crate::{Error, Real, Result};

/// c5·u₁² + c4·u₂² + c3·u₁u₂ + c2·u₂ + c1·u₁ + c0, stored as `c[i]` = c_i.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoefficientFamily {
    pub c: [Real; 6],
}

impl CoefficientFamily {
    pub fn constant(c0: Real) -> Self {
        let mut c = [0.0; 6];
        c[0] = c0;
        Self { c }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }
}

pub fn coefficient_eval(f: &CoefficientFamily, u1: Real, u2: Real) -> Real {
    let c = &f.c;
    c[5] * u1 * u1 + c[4] * u2 * u2 + c[3] * u1 * u2 + c[2] * u2 + c[1] * u1 + c[0]
}

/// (∂f/∂u₁, ∂f/∂u₂).
pub fn coefficient_partials(f: &CoefficientFamily, u1: Real, u2: Real) -> (Real, Real) {
    let c = &f.c;
    (2.0 * c[5] * u1 + c[3] * u2 + c[1], 2.0 * c[4] * u2 + c[3] * u1 + c[2])
}

/// Letter prefixes of the eight families, in field order.
pub const FAMILY_PREFIXES: [&str; 8] = ["k", "q", "p", "c", "eta", "g", "d", "h"];

/// The eight coefficient families of one component.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComponentParams {
    /// β_s1 (k), multiplies ∂₁u₁ inside ∂₁.
    pub beta1: CoefficientFamily,
    /// ρ_s1 (q), multiplies ∂₁u₂ inside ∂₁.
    pub rho1: CoefficientFamily,
    /// β_s2 (p).
    pub beta2: CoefficientFamily,
    /// ρ_s2 (c).
    pub rho2: CoefficientFamily,
    /// ζ_s1 (η), convection of u₁ along x₁.
    pub zeta1: CoefficientFamily,
    /// υ_s1 (g).
    pub upsilon1: CoefficientFamily,
    /// ζ_s2 (d).
    pub zeta2: CoefficientFamily,
    /// υ_s2 (h).
    pub upsilon2: CoefficientFamily,
}

impl ComponentParams {
    fn family(&self, j: usize) -> &CoefficientFamily {
        [&self.beta1, &self.rho1, &self.beta2, &self.rho2, &self.zeta1, &self.upsilon1, &self.zeta2, &self.upsilon2][j]
    }

    fn family_mut(&mut self, j: usize) -> &mut CoefficientFamily {
        match j {
            0 => &mut self.beta1,
            1 => &mut self.rho1,
            2 => &mut self.beta2,
            3 => &mut self.rho2,
            4 => &mut self.zeta1,
            5 => &mut self.upsilon1,
            6 => &mut self.zeta2,
            _ => &mut self.upsilon2,
        }
    }
}

/// All 96 coefficients of F₁ and F₂.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CubicOperatorParams {
    pub components: [ComponentParams; 2],
}

/// Resolve a flat name like "k10" or "eta25" to (family, component, index).
fn parse_name(name: &str) -> Option<(usize, usize, usize)> {
    let (j, rest) = FAMILY_PREFIXES
        .iter()
        .enumerate()
        .filter_map(|(j, p)| name.strip_prefix(p).map(|r| (j, r)))
        .find(|(_, r)| r.len() == 2)?;
    let mut digits = rest.chars().map(|ch| ch.to_digit(10));
    let s = digits.next()??;
    let i = digits.next()??;
    ((1..=2).contains(&s) && i <= 5).then_some((j, s as usize - 1, i as usize))
}

impl CubicOperatorParams {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Result<Real> {
        let (j, s, i) = parse_name(name).ok_or_else(|| Error::Argument(format!("unknown parameter name '{name}'")))?;
        Ok(self.components[s].family(j).c[i])
    }

    pub fn set(&mut self, name: &str, value: Real) -> Result<()> {
        let (j, s, i) = parse_name(name).ok_or_else(|| Error::Argument(format!("unknown parameter name '{name}'")))?;
        if !value.is_finite() {
            return Err(Error::Argument(format!("parameter {name} = {value} is not finite")));
        }
        self.components[s].family_mut(j).c[i] = value;
        Ok(())
    }

    pub fn with(mut self, name: &str, value: Real) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }

    /// Nonzero coefficients keyed by flat name, in a fixed order.
    pub fn to_map(&self) -> BTreeMap<String, Real> {
        let mut m = BTreeMap::new();
        for (j, prefix) in FAMILY_PREFIXES.iter().enumerate() {
            for s in 0..2 {
                for i in 0..6 {
                    let v = self.components[s].family(j).c[i];
                    if v != 0.0 {
                        m.insert(format!("{prefix}{}{i}", s + 1), v);
                    }
                }
            }
        }
        m
    }

    pub fn from_map<'a>(m: impl IntoIterator<Item = (&'a String, &'a Real)>) -> Result<Self> {
        let mut p = Self::zero();
        for (k, &v) in m {
            p.set(k, v)?;
        }
        Ok(p)
    }

    /// The decoupled linear diffusion system κ_s Δ(τ·u) obtained from the
    /// coupled heat-moisture model; both directions share the coefficients.
    pub fn heat_moisture(kappa: [Real; 2], tau: [Real; 3]) -> Self {
        let mut p = Self::zero();
        let c1 = CoefficientFamily::constant(kappa[0] * tau[0]);
        let r1 = CoefficientFamily::constant(kappa[0] * tau[1]);
        let c2 = CoefficientFamily::constant(kappa[1] * tau[2]);
        let r2 = CoefficientFamily::constant(kappa[1] * tau[0]);
        p.components[0].beta1 = c1;
        p.components[0].beta2 = c1;
        p.components[0].rho1 = r1;
        p.components[0].rho2 = r1;
        p.components[1].beta1 = c2;
        p.components[1].beta2 = c2;
        p.components[1].rho1 = r2;
        p.components[1].rho2 = r2;
        p
    }
}

impl Serialize for CubicOperatorParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CubicOperatorParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<String, Real>::deserialize(deserializer)?;
        Self::from_map(&m).map_err(serde::de::Error::custom)
    }
}

/// Values and first/second partials of one field at a point.
#[derive(Clone, Copy, Debug)]
struct Jet {
    v: Real,
    d: [Real; 2],
    dd: [Real; 2],
}

fn jet(u: &Expansion, point: &[Real]) -> Jet {
    Jet {
        v: u.eval(point),
        d: [u.partial(&[1, 0], point), u.partial(&[0, 1], point)],
        dd: [u.partial(&[2, 0], point), u.partial(&[0, 2], point)],
    }
}

fn component_value(c: &ComponentParams, a: &Jet, b: &Jet) -> Real {
    let mut total = 0.0;
    let diffusion = [(&c.beta1, &c.rho1), (&c.beta2, &c.rho2)];
    let convection = [(&c.zeta1, &c.upsilon1), (&c.zeta2, &c.upsilon2)];
    for i in 0..2 {
        let (beta, rho) = diffusion[i];
        let (zeta, upsilon) = convection[i];
        let (b1, b2) = coefficient_partials(beta, a.v, b.v);
        let (r1, r2) = coefficient_partials(rho, a.v, b.v);
        total += (b1 * a.d[i] + b2 * b.d[i]) * a.d[i] + coefficient_eval(beta, a.v, b.v) * a.dd[i];
        total += (r1 * a.d[i] + r2 * b.d[i]) * b.d[i] + coefficient_eval(rho, a.v, b.v) * b.dd[i];
        total += coefficient_eval(zeta, a.v, b.v) * a.d[i] + coefficient_eval(upsilon, a.v, b.v) * b.d[i];
    }
    total
}

/// (F₁, F₂) at a point, with the divergence terms expanded by the chain rule.
pub fn apply_f(params: &CubicOperatorParams, u1: &Expansion, u2: &Expansion, point: &[Real]) -> Result<(Real, Real)> {
    if u1.dim() != 2 || u2.dim() != 2 || point.len() != 2 {
        return Err(Error::Argument("the cubic operator acts on functions of two variables".into()));
    }
    let (a, b) = (jet(u1, point), jet(u2, point));
    Ok((component_value(&params.components[0], &a, &b), component_value(&params.components[1], &a, &b)))
}

/// Flux β ∂_i u₁ + ρ ∂_i u₂ of component s along x_i; exposed for difference checks.
pub fn flux(params: &CubicOperatorParams, s: usize, i: usize, u1: &Expansion, u2: &Expansion, point: &[Real]) -> Real {
    let c = &params.components[s];
    let (beta, rho) = if i == 0 { (&c.beta1, &c.rho1) } else { (&c.beta2, &c.rho2) };
    let mut orders = [0u32; 2];
    orders[i] = 1;
    let (v1, v2) = (u1.eval(point), u2.eval(point));
    coefficient_eval(beta, v1, v2) * u1.partial(&orders, point) + coefficient_eval(rho, v1, v2) * u2.partial(&orders, point)
}

/// κΔu − v·∇u in any dimension.
pub fn apply_general_linear_dcw(kappa: Real, v: &[Real], u: &Expansion, point: &[Real]) -> Result<Real> {
    let n = u.dim();
    if v.len() != n || point.len() != n {
        return Err(Error::Argument(format!("velocity and point must have {n} components")));
    }
    let mut total = 0.0;
    let mut orders = vec![0u32; n];
    for i in 0..n {
        orders[i] = 2;
        let second = u.partial(&orders, point);
        orders[i] = 1;
        let first = u.partial(&orders, point);
        orders[i] = 0;
        total += kappa * second - v[i] * first;
    }
    Ok(total)
}
