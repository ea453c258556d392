//! Exponential-polynomial-trigonometric atoms, their products over coordinates,
//! exact differentiation, and least-squares membership of sampled functions in a span.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Real, Result};

/// Trigonometric factor of an atom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Trig {
    None,
    Sin(Real),
    Cos(Real),
}

/// x^m e^{λx} trig(ωx) in one coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub coordinate: usize,
    pub degree: u32,
    pub rate: Real,
    pub trig: Trig,
}

/// Σ c_j · atom_j.
pub type AtomCombination = Vec<(Real, Atom)>;

impl Atom {
    pub fn new(coordinate: usize, degree: u32, rate: Real, trig: Trig) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::Argument(format!("atom rate {rate} is not finite")));
        }
        match trig {
            Trig::Sin(w) | Trig::Cos(w) if !(w > 0.0 && w.is_finite()) => {
                Err(Error::Argument(format!("trigonometric frequency {w} must be positive")))
            }
            _ => Ok(Self { coordinate, degree, rate, trig }),
        }
    }

    pub fn one(coordinate: usize) -> Self {
        Self { coordinate, degree: 0, rate: 0.0, trig: Trig::None }
    }

    pub fn monomial(coordinate: usize, degree: u32) -> Self {
        Self { coordinate, degree, rate: 0.0, trig: Trig::None }
    }

    pub fn exp(coordinate: usize, rate: Real) -> Self {
        Self { coordinate, degree: 0, rate, trig: Trig::None }
    }

    pub fn sin(coordinate: usize, omega: Real) -> Self {
        Self { coordinate, degree: 0, rate: 0.0, trig: Trig::Sin(omega) }
    }

    pub fn cos(coordinate: usize, omega: Real) -> Self {
        Self { coordinate, degree: 0, rate: 0.0, trig: Trig::Cos(omega) }
    }

    pub fn with_degree(mut self, degree: u32) -> Self {
        self.degree = degree;
        self
    }

    pub fn with_rate(mut self, rate: Real) -> Self {
        self.rate = rate;
        self
    }

    pub fn is_one(&self) -> bool {
        self.degree == 0 && self.rate == 0.0 && self.trig == Trig::None
    }
}

pub fn atom_eval(a: &Atom, x: Real) -> Real {
    let mut v = if a.degree == 0 { 1.0 } else { x.powi(a.degree as i32) };
    if a.rate != 0.0 {
        v *= (a.rate * x).exp();
    }
    match a.trig {
        Trig::None => v,
        Trig::Sin(w) => v * (w * x).sin(),
        Trig::Cos(w) => v * (w * x).cos(),
    }
}

/// Exact d/dx by the product rule; the result has at most three terms.
pub fn atom_derivative(a: &Atom) -> AtomCombination {
    let mut out = Vec::with_capacity(3);
    if a.degree > 0 {
        out.push((a.degree as Real, Atom { degree: a.degree - 1, ..*a }));
    }
    if a.rate != 0.0 {
        out.push((a.rate, *a));
    }
    match a.trig {
        Trig::None => {}
        Trig::Sin(w) => out.push((w, Atom { trig: Trig::Cos(w), ..*a })),
        Trig::Cos(w) => out.push((-w, Atom { trig: Trig::Sin(w), ..*a })),
    }
    out
}

/// Exact derivative of a combination, with like atoms merged.
pub fn combination_derivative(c: &[(Real, Atom)]) -> AtomCombination {
    let mut out: AtomCombination = Vec::new();
    for &(k, a) in c {
        for (d, b) in atom_derivative(&a) {
            match out.iter_mut().find(|(_, x)| *x == b) {
                Some(slot) => slot.0 += k * d,
                None => out.push((k * d, b)),
            }
        }
    }
    out.retain(|(k, _)| *k != 0.0);
    out
}

pub fn combination_eval(c: &[(Real, Atom)], x: Real) -> Real {
    c.iter().map(|(k, a)| k * atom_eval(a, x)).sum()
}

/// n-th derivative of an atom evaluated at x.
pub fn atom_derivative_eval(a: &Atom, n: u32, x: Real) -> Real {
    let mut c: AtomCombination = vec![(1.0, *a)];
    for _ in 0..n {
        c = combination_derivative(&c);
    }
    combination_eval(&c, x)
}

/// ∏_i atom_i(x_i), one atom per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductBasisFunction {
    factors: Vec<Atom>,
}

impl ProductBasisFunction {
    /// Factors are placed by their coordinate index; missing coordinates get the constant 1.
    pub fn new(dim: usize, atoms: &[Atom]) -> Result<Self> {
        let mut factors: Vec<Option<Atom>> = vec![None; dim];
        for a in atoms {
            if a.coordinate >= dim {
                return Err(Error::Argument(format!("atom coordinate {} outside 0..{dim}", a.coordinate)));
            }
            if factors[a.coordinate].replace(*a).is_some() {
                return Err(Error::Argument(format!("two factors for coordinate {}", a.coordinate)));
            }
        }
        Ok(Self { factors: factors.into_iter().enumerate().map(|(i, f)| f.unwrap_or(Atom::one(i))).collect() })
    }

    pub fn one(dim: usize) -> Self {
        Self { factors: (0..dim).map(Atom::one).collect() }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Atom] {
        &self.factors
    }

    pub fn eval(&self, x: &[Real]) -> Real {
        self.factors.iter().zip(x).map(|(a, &xi)| atom_eval(a, xi)).product()
    }

    /// ∂^{|orders|} / ∏ ∂x_i^{orders_i}, exact.
    pub fn partial(&self, orders: &[u32], x: &[Real]) -> Real {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, a)| atom_derivative_eval(a, orders.get(i).copied().unwrap_or(0), x[i]))
            .product()
    }
}

/// Σ c_j b_j over pairwise distinct product basis functions.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    basis: Vec<ProductBasisFunction>,
    coefficients: Vec<Real>,
}

impl Expansion {
    pub fn new(basis: Vec<ProductBasisFunction>, coefficients: Vec<Real>) -> Result<Self> {
        if basis.is_empty() || basis.len() != coefficients.len() {
            return Err(Error::Argument(format!(
                "expansion needs matching nonempty basis and coefficients, got {} and {}",
                basis.len(),
                coefficients.len()
            )));
        }
        let dim = basis[0].dim();
        for (i, b) in basis.iter().enumerate() {
            if b.dim() != dim {
                return Err(Error::Argument("basis functions of different dimension".into()));
            }
            if basis[..i].contains(b) {
                return Err(Error::Argument(format!("basis function {i} repeats an earlier one")));
            }
        }
        Ok(Self { basis, coefficients })
    }

    pub fn dim(&self) -> usize {
        self.basis[0].dim()
    }

    pub fn basis(&self) -> &[ProductBasisFunction] {
        &self.basis
    }

    pub fn coefficients(&self) -> &[Real] {
        &self.coefficients
    }

    pub fn scaled(&self, s: Real) -> Self {
        Self { basis: self.basis.clone(), coefficients: self.coefficients.iter().map(|c| c * s).collect() }
    }

    pub fn eval(&self, x: &[Real]) -> Real {
        self.basis.iter().zip(&self.coefficients).map(|(b, c)| c * b.eval(x)).sum()
    }

    /// Mixed partial derivative with per-coordinate orders.
    pub fn partial(&self, orders: &[u32], x: &[Real]) -> Real {
        self.basis.iter().zip(&self.coefficients).map(|(b, c)| c * b.partial(orders, x)).sum()
    }
}

/// ∂u/∂x_i or ∂²u/∂x_i² at a point.
pub fn expansion_partial(e: &Expansion, coordinate: usize, order: u32, point: &[Real]) -> Result<Real> {
    if coordinate >= e.dim() || !(1..=2).contains(&order) {
        return Err(Error::Argument(format!("partial of order {order} in coordinate {coordinate} is not available")));
    }
    let mut orders = vec![0; e.dim()];
    orders[coordinate] = order;
    Ok(e.partial(&orders, point))
}

/// Singular-value ratio above which the sample matrix counts as rank deficient.
pub const MAX_CONDITION: Real = 1e11;

/// Relative least-squares residual of sampled f against a span.
///
/// `grid_values[(j, i)]` is span element i at sample j. Columns are scaled to
/// unit norm before the fit; the condition estimate is the singular-value
/// ratio of the scaled matrix.
pub fn membership_residual(
    samples: &[(Vec<Real>, Real)],
    span: &[ProductBasisFunction],
    grid_values: &DMatrix<Real>,
) -> Result<(Real, Real)> {
    let (rows, cols) = grid_values.shape();
    if rows != samples.len() || cols != span.len() {
        return Err(Error::Argument(format!(
            "grid values are {rows}x{cols} but there are {} samples and {} span elements",
            samples.len(),
            span.len()
        )));
    }
    if rows < 3 * cols {
        return Err(Error::Argument(format!("{rows} samples for a span of {cols}; need at least {}", 3 * cols)));
    }
    let f = DVector::from_iterator(rows, samples.iter().map(|s| s.1));
    if f.iter().any(|v| !v.is_finite()) || grid_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Conditioning("non-finite sample values; redraw the grid".into()));
    }
    let fnorm = f.norm();
    if cols == 0 {
        return Ok((fnorm / fnorm.max(1.0), 1.0));
    }
    let mut a = grid_values.clone();
    for mut col in a.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            return Err(Error::Conditioning("a span element vanishes on the whole grid; redraw the grid".into()));
        }
        col /= n;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { Real::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Conditioning(format!(
            "sample matrix is numerically rank deficient (condition {cond:.3e}); redraw the grid"
        )));
    }
    let coef = svd.solve(&f, 0.0).map_err(|e| Error::Conditioning(e.to_string()))?;
    let r = &f - &a * coef;
    Ok((r.norm() / fnorm.max(1.0), cond))
}

/// n Chebyshev points of the first kind mapped to [lo, hi], ascending.
pub fn chebyshev_points(n: usize, lo: Real, hi: Real) -> Vec<Real> {
    (0..n)
        .map(|j| {
            let c = -((2 * j + 1) as Real * std::f64::consts::PI / (2 * n) as Real).cos();
            0.5 * (lo + hi) + 0.5 * (hi - lo) * c
        })
        .collect()
}

/// Tensor grid of n Chebyshev points per coordinate.
pub fn tensor_grid(dim: usize, n: usize, lo: Real, hi: Real) -> Vec<Vec<Real>> {
    let pts = chebyshev_points(n, lo, hi);
    let mut grid: Vec<Vec<Real>> = vec![Vec::new()];
    for _ in 0..dim {
        grid = grid.into_iter().flat_map(|p| pts.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    grid
}

pub const GRID_LO: Real = 0.1;
pub const GRID_HI: Real = 1.9;
pub const MEMBER_TOL: Real = 1e-8;
pub const NON_MEMBER_TOL: Real = 1e-4;

/// Outcome of a membership test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    Indeterminate,
}

/// Membership verdict with the residual and condition of the deciding grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipReport {
    pub verdict: Membership,
    pub residual: Real,
    pub condition: Real,
    pub points_per_axis: usize,
}

pub fn classify(residual: Real) -> Membership {
    if residual <= MEMBER_TOL {
        Membership::Member
    } else if residual >= NON_MEMBER_TOL {
        Membership::NonMember
    } else {
        Membership::Indeterminate
    }
}

/// Grid sizes tried in turn: the base grid, then refinements while the residual is intermediate.
pub fn grid_schedule(dim: usize, span_len: usize) -> Vec<usize> {
    let mut n: usize = if dim <= 2 { 12 } else { 6 };
    while n.pow(dim as u32) < 3 * span_len.max(1) {
        n += 1;
    }
    vec![n, n + n / 2, 2 * n]
}

/// Evaluate f on Chebyshev grids and classify its membership in the span.
pub fn test_membership(f: &dyn Fn(&[Real]) -> Real, span: &[ProductBasisFunction]) -> Result<MembershipReport> {
    let dim = span.first().map_or(2, |b| b.dim());
    let mut last = None;
    for n in grid_schedule(dim, span.len()) {
        let grid = tensor_grid(dim, n, GRID_LO, GRID_HI);
        let samples: Vec<(Vec<Real>, Real)> = grid.iter().map(|p| (p.clone(), f(p))).collect();
        let values = DMatrix::from_fn(grid.len(), span.len(), |j, i| span[i].eval(&grid[j]));
        let (residual, condition) = membership_residual(&samples, span, &values)?;
        let report = MembershipReport { verdict: classify(residual), residual, condition, points_per_axis: n };
        if report.verdict != Membership::Indeterminate {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("schedule is nonempty"))
}
