//! Construction inputs and the per-axis closed forms derived from them.
//!
//! For a sum-form generating function `φ = Σ φ_i(x_i)` the exponent of the
//! nodeless state separates as `F = Σ f_i(x_i) + f̃` with
//!
//! ```text
//! f_i' = (φ_i'' + 2εφ_i + λ_i) / (2φ_i'),          χ_i' = 1 / φ_i'
//! ```
//!
//! and for a product form `φ = Π φ_i(x_i)`
//!
//! ```text
//! f_i' = (φ_i'' + (2ε/n + λ_i) φ_i) / (2φ_i'),     χ_i' = φ_i / φ_i'
//! ```
//!
//! where the separation constants satisfy `Σ λ_i = 0`.

mod quadrature;
pub mod roots;

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, Expression};

pub use quadrature::{antiderivative, integrate};

/// Tolerance on `Σ λ_i = 0`.
pub const LAMBDA_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("separation constants must sum to zero, got {0:e}")]
    LambdaSumNonzero(f64),
    #[error("energy gap must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("phi for axis {0} depends on another axis variable")]
    MultivariatePhi(usize),
    #[error("phi for axis {0} has identically vanishing derivative")]
    DegeneratePhi(usize),
    #[error("dimension must be at least 2, got {0}")]
    TooFewAxes(usize),
    #[error("expected {expected} {what}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("axis {axis}: zero at {first_zero} demands lambda = {first_lambda}, zero at {second_zero} demands {second_lambda}")]
    InconsistentZeros {
        axis: usize,
        first_zero: f64,
        first_lambda: f64,
        second_zero: f64,
        second_lambda: f64,
    },
    #[error("forced separation constants sum to {0:e} with no free axis left")]
    ConstraintViolated(f64),
    #[error("axis {axis}: phi' has a non-simple zero at {zero}")]
    NonsimpleZero { axis: usize, zero: f64 },
    #[error("axis {axis}: phi vanishes at the critical point {zero}, no lambda can cancel the pole")]
    CriticalPointOnNode { axis: usize, zero: f64 },
    #[error("axis {axis}: cannot locate zeros of phi' ({reason})")]
    ZeroSearch { axis: usize, reason: String },
    #[error("non-integrable singularity near {location}")]
    NonintegrableSingularity { location: f64 },
    #[error("pole at {location}")]
    Pole { location: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl GeneratorError {
    pub(crate) fn location(&self) -> Option<f64> {
        match self {
            GeneratorError::NonintegrableSingularity { location }
            | GeneratorError::Pole { location } => Some(*location),
            _ => None,
        }
    }
}

/// Which generating-function form is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// `φ = Σ φ_i(x_i)`
    Sum,
    /// `φ = Π φ_i(x_i)`
    Product,
}

/// Conventional axis variable names: `x, y, z` up to three axes, `x1..xn`
/// beyond.
pub fn axis_variable_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

/// The construction inputs. `phi[i]` is bound to the full axis variable list
/// but may only reference variable `i`.
#[derive(Debug, Clone)]
pub struct GeneratingSet {
    case: Case,
    phi: Vec<Expression>,
    lambda: Vec<f64>,
    epsilon: f64,
}

impl GeneratingSet {
    /// Builds and validates a generating set.
    pub fn new(
        case: Case,
        phi: Vec<Expression>,
        lambda: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, GeneratorError> {
        let set = Self::unchecked(case, phi, lambda, epsilon);
        set.validate()?;
        Ok(set)
    }

    /// Builds a set without validation; the invariants may not hold.
    pub fn unchecked(case: Case, phi: Vec<Expression>, lambda: Vec<f64>, epsilon: f64) -> Self {
        Self {
            case,
            phi,
            lambda,
            epsilon,
        }
    }

    /// Parses one source string per axis against the conventional axis names.
    pub fn parse(
        case: Case,
        phi_sources: &[&str],
        lambda: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, crate::Error> {
        let names = axis_variable_names(phi_sources.len());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let phi = phi_sources
            .iter()
            .map(|src| Expression::parse(src, &refs))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(case, phi, lambda, epsilon)?)
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let n = self.phi.len();
        if n < 2 {
            return Err(GeneratorError::TooFewAxes(n));
        }
        if self.lambda.len() != n {
            return Err(GeneratorError::DimensionMismatch {
                what: "lambda values",
                expected: n,
                got: self.lambda.len(),
            });
        }
        for (i, phi) in self.phi.iter().enumerate() {
            if phi.variables().len() != n {
                return Err(GeneratorError::DimensionMismatch {
                    what: "phi variables",
                    expected: n,
                    got: phi.variables().len(),
                });
            }
            if phi.referenced_variables().iter().any(|&v| v != i) {
                return Err(GeneratorError::MultivariatePhi(i));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(GeneratorError::NonpositiveEpsilon(self.epsilon));
        }
        let sum: f64 = self.lambda.iter().sum();
        if sum.abs() > LAMBDA_SUM_TOL {
            return Err(GeneratorError::LambdaSumNonzero(sum));
        }
        Ok(())
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn dimension(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[Expression] {
        &self.phi
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Same set with replaced separation constants, re-validated.
    pub fn with_lambdas(&self, lambda: Vec<f64>) -> Result<Self, GeneratorError> {
        Self::new(self.case, self.phi.clone(), lambda, self.epsilon)
    }

    pub fn variables(&self) -> Arc<[String]> {
        self.phi[0].variables().iter().cloned().collect()
    }

    /// `φ_i` rebound to its own single variable.
    pub fn phi_axis(&self, i: usize) -> Expression {
        univariate(&self.phi[i], i)
    }

    /// The full generating function over all axes.
    pub fn phi_total(&self) -> Expression {
        let mut it = self.phi.iter();
        let first = it.next().expect("at least one axis").clone();
        let total = it.fold(first, |acc, p| match self.case {
            Case::Sum => acc + p,
            Case::Product => acc * p,
        });
        total.simplify()
    }
}

/// Rebinds an expression that only references variable `i` onto a list
/// holding just that variable's name.
pub(crate) fn univariate(e: &Expression, i: usize) -> Expression {
    let name: Arc<[String]> = vec![e.variables()[i].clone()].into();
    let map: Vec<usize> = (0..e.variables().len()).map(|_| 0).collect();
    e.remap(name, &map)
}

/// Evaluates a univariate expression; at a point where direct evaluation
/// hits a domain error the symmetric limit `(e(z-h) + e(z+h)) / 2` with
/// `h = 1e-6 (1 + |z|)` is used, provided the point looks removable.
pub fn eval_regular(e: &Expression, z: f64) -> Result<f64, GeneratorError> {
    match e.eval(&[z]) {
        Ok(v) => Ok(v),
        Err(EvalError::Domain { .. }) => {
            let h = 1e-6 * (1.0 + z.abs());
            let pole = || GeneratorError::Pole { location: z };
            let near = |d: f64| -> Result<(f64, f64), GeneratorError> {
                let a = e.eval(&[z - d]).map_err(|_| pole())?;
                let b = e.eval(&[z + d]).map_err(|_| pole())?;
                Ok((a, b))
            };
            let (a, b) = near(h)?;
            let (a10, b10) = near(10.0 * h)?;
            let mean = 0.5 * (a + b);
            let mean10 = 0.5 * (a10 + b10);
            let scale = 1.0 + mean.abs();
            if (a - b).abs() <= 1e-3 * scale && (mean - mean10).abs() <= 1e-3 * scale {
                Ok(mean)
            } else {
                Err(pole())
            }
        }
        Err(other) => Err(other.into()),
    }
}

fn is_identically_zero(e: &Expression) -> bool {
    e.as_constant() == Some(0.0)
}

/// The integrand of the separated part `f_i` of the exponent, as an exact
/// univariate expression in axis `i`'s variable.
pub fn f_prime(set: &GeneratingSet, i: usize) -> Result<Expression, GeneratorError> {
    let phi = set.phi_axis(i);
    let d1 = phi.derivative(0);
    if is_identically_zero(&d1) {
        return Err(GeneratorError::DegeneratePhi(i));
    }
    let d2 = d1.derivative(0);
    let vars = phi.vars_arc();
    let eps = set.epsilon;
    let lambda = set.lambda[i];
    let numerator = match set.case {
        Case::Sum => d2 + phi.scale(2.0 * eps) + Expression::constant(lambda, vars),
        Case::Product => {
            let n = set.dimension() as f64;
            d2 + phi.scale(2.0 * eps / n + lambda)
        }
    };
    Ok((numerator / d1.scale(2.0)).simplify())
}

/// `φ_i = c x^k` recognized structurally.
fn monomial(e: &Expression) -> Option<(f64, i32)> {
    use crate::expr::{BinaryOp, Node, UnaryOp};
    fn go(node: &Node) -> Option<(f64, i32)> {
        match node {
            Node::Const(c) => Some((*c, 0)),
            Node::Var(_) => Some((1.0, 1)),
            Node::Unary(UnaryOp::Neg, a) => go(a).map(|(c, k)| (-c, k)),
            Node::Pow(a, n) => go(a).map(|(c, k)| (c.powi(*n), k * n)),
            Node::Binary(BinaryOp::Mul, a, b) => {
                let (ca, ka) = go(a)?;
                let (cb, kb) = go(b)?;
                Some((ca * cb, ka + kb))
            }
            Node::Binary(BinaryOp::Div, a, b) => {
                let (ca, ka) = go(a)?;
                let (cb, kb) = go(b)?;
                (cb != 0.0).then_some((ca / cb, ka - kb))
            }
            _ => None,
        }
    }
    go(e.root()).filter(|&(c, k)| c != 0.0 && c.is_finite() && k >= 1)
}

/// Per-axis closed forms.
#[derive(Debug, Clone)]
pub struct AxisClosedForms {
    pub axis: usize,
    /// Integrand of `f_i`.
    pub f_prime: Expression,
    /// `d/dx f_i'`, used for the Laplacian of the exponent.
    pub f_second: Expression,
    /// Closed-form antiderivative of `f_prime` when `φ_i` is a monomial.
    pub f_closed: Option<Expression>,
    /// `1/φ_i'` (sum form) or `φ_i/φ_i'` (product form).
    pub chi_prime: Expression,
    /// Closed-form `χ_i` when `φ_i` is a monomial.
    pub chi: Option<Expression>,
    /// Base point of the `f_i` antiderivative; never a pole of `f_prime`.
    pub anchor: f64,
    /// Base point of the `χ_i` antiderivative; never a pole of `chi_prime`.
    pub chi_anchor: f64,
}

impl AxisClosedForms {
    /// `f_i(x) = ∫_anchor^x f_prime`.
    pub fn f_value(&self, x: f64) -> Result<f64, GeneratorError> {
        match &self.f_closed {
            Some(g) => Ok(g.eval(&[x])? - g.eval(&[self.anchor])?),
            None => antiderivative(&self.f_prime, self.anchor, x),
        }
    }

    /// `f_i` by quadrature only, ignoring any closed form.
    pub fn f_value_quadrature(&self, x: f64) -> Result<f64, GeneratorError> {
        antiderivative(&self.f_prime, self.anchor, x)
    }

    pub fn chi_value(&self, x: f64) -> Result<f64, GeneratorError> {
        match &self.chi {
            Some(c) => Ok(c.eval(&[x])? - c.eval(&[self.chi_anchor])?),
            None => antiderivative(&self.chi_prime, self.chi_anchor, x),
        }
    }

    pub fn with_anchor(mut self, anchor: f64) -> Self {
        self.anchor = anchor;
        self
    }
}

/// `ln|x|` written in the grammar.
fn ln_abs(vars: &Arc<[String]>) -> Expression {
    let x = Expression::variable(0, Arc::clone(vars));
    x.powi(2).unary(crate::expr::UnaryOp::Ln).scale(0.5)
}

fn closed_antiderivatives(
    set: &GeneratingSet,
    i: usize,
    vars: &Arc<[String]>,
) -> Option<(Expression, Expression)> {
    let (c, k) = monomial(&set.phi_axis(i))?;
    let x = Expression::variable(0, Arc::clone(vars));
    let kf = k as f64;
    let eps = set.epsilon;
    let lambda = set.lambda[i];
    let zero = Expression::constant(0.0, Arc::clone(vars));
    let (f, chi) = match set.case {
        Case::Sum => {
            // f' = (k-1)/(2x) + εx/k + λ/(2ck) x^(1-k)
            let mut log_coef = 0.5 * (kf - 1.0);
            let mut f = x.powi(2).scale(eps / (2.0 * kf));
            let lc = lambda / (2.0 * c * kf);
            match k {
                1 => f = f + x.scale(lc),
                2 => log_coef += lc,
                _ => f = f + x.powi(2 - k).scale(lc / (2.0 - kf)),
            }
            if log_coef != 0.0 {
                f = f + ln_abs(vars).scale(log_coef);
            }
            // χ' = 1/(c k x^(k-1))
            let chi = match k {
                1 => x.scale(1.0 / c),
                2 => ln_abs(vars).scale(1.0 / (2.0 * c)),
                _ => x.powi(2 - k).scale(1.0 / (c * kf * (2.0 - kf))),
            };
            (f, chi)
        }
        Case::Product => {
            // f' = (k-1)/(2x) + (2ε/n + λ) x/(2k);  χ' = x/k
            let n = set.dimension() as f64;
            let mut f = x.powi(2).scale((2.0 * eps / n + lambda) / (4.0 * kf));
            if k != 1 {
                f = f + ln_abs(vars).scale(0.5 * (kf - 1.0));
            }
            (f, x.powi(2).scale(1.0 / (2.0 * kf)))
        }
    };
    Some(((f + zero.clone()).simplify(), (chi + zero).simplify()))
}

/// Default base point: 0 unless 0 is a pole of `integrand`, in which case
/// `0.5 (1 + |nearest pole|)`, repeated until a regular point is found.
fn anchor_for(integrand: &Expression) -> f64 {
    let mut anchor = 0.0_f64;
    for _ in 0..8 {
        match eval_regular(integrand, anchor) {
            Ok(v) if v.is_finite() => return anchor,
            _ => anchor = 0.5 * (1.0 + anchor.abs()),
        }
    }
    anchor
}

/// All closed forms of axis `i`: the `f_i` integrand, `χ_i'`, closed-form
/// antiderivatives for monomial `φ_i`, and quadrature anchors.
pub fn chi(set: &GeneratingSet, i: usize) -> Result<AxisClosedForms, GeneratorError> {
    let f_prime = f_prime(set, i)?;
    let phi = set.phi_axis(i);
    let d1 = phi.derivative(0);
    let chi_prime = match set.case {
        Case::Sum => Expression::constant(1.0, phi.vars_arc()) / d1,
        Case::Product => &phi / &d1,
    }
    .simplify();
    let vars = phi.vars_arc();
    let (f_closed, chi_closed) = match closed_antiderivatives(set, i, &vars) {
        Some((f, c)) => (Some(f), Some(c)),
        None => (None, None),
    };
    let f_second = f_prime.derivative(0);
    Ok(AxisClosedForms {
        axis: i,
        anchor: anchor_for(&f_prime),
        chi_anchor: anchor_for(&chi_prime),
        f_prime,
        f_second,
        f_closed,
        chi_prime,
        chi: chi_closed,
    })
}

/// Where to look for zeros of `φ_i'` that are not polynomial.
#[derive(Debug, Clone)]
pub struct ZeroSearch {
    /// User-declared real zeros per axis; take precedence over any search.
    pub declared: Vec<Option<Vec<f64>>>,
    /// Half-width of the bracketing window for non-polynomial `φ_i'`.
    pub scan_half_width: f64,
    pub scan_samples: usize,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self {
            declared: Vec::new(),
            scan_half_width: 10.0,
            scan_samples: 4000,
        }
    }
}

fn zeros_of_derivative(
    set: &GeneratingSet,
    i: usize,
    search: &ZeroSearch,
) -> Result<Vec<f64>, GeneratorError> {
    let phi = set.phi_axis(i);
    let d1 = phi.derivative(0);
    let d2 = d1.derivative(0);
    if is_identically_zero(&d1) {
        return Err(GeneratorError::DegeneratePhi(i));
    }
    let simple = |z: f64| -> Result<f64, GeneratorError> {
        let curvature = eval_regular(&d2, z)?;
        let scale = 1.0 + eval_regular(&phi, z).map(f64::abs).unwrap_or(0.0);
        if curvature.abs() <= 1e-10 * scale {
            Err(GeneratorError::NonsimpleZero { axis: i, zero: z })
        } else {
            Ok(z)
        }
    };
    if let Some(Some(declared)) = search.declared.get(i) {
        return declared.iter().map(|&z| simple(z)).collect();
    }
    if let Some(coeffs) = roots::polynomial_coefficients(&d1, 0) {
        let zeros = roots::real_polynomial_roots(&coeffs).map_err(|e| {
            GeneratorError::ZeroSearch {
                axis: i,
                reason: format!("{e:?}"),
            }
        })?;
        return zeros
            .into_iter()
            .map(|z| {
                if z.repeated {
                    Err(GeneratorError::NonsimpleZero { axis: i, zero: z.at })
                } else {
                    simple(z.at)
                }
            })
            .collect();
    }
    let w = search.scan_half_width;
    roots::bracket_zeros(|x| eval_regular(&d1, x).ok(), -w, w, search.scan_samples)
        .into_iter()
        .map(simple)
        .collect()
}

/// Chooses separation constants so that every simple real zero of `φ_i'`
/// is cancelled by the numerator of `f_i'`. Axes without zeros share the
/// remaining slack equally so that `Σ λ_i = 0`.
pub fn regularize_lambdas(set: &GeneratingSet) -> Result<Vec<f64>, GeneratorError> {
    regularize_lambdas_with(set, &ZeroSearch::default())
}

pub fn regularize_lambdas_with(
    set: &GeneratingSet,
    search: &ZeroSearch,
) -> Result<Vec<f64>, GeneratorError> {
    let n = set.dimension();
    let eps = set.epsilon;
    let mut forced: Vec<Option<f64>> = vec![None; n];
    for (i, slot) in forced.iter_mut().enumerate() {
        let phi = set.phi_axis(i);
        let d2 = phi.derivative(0).derivative(0);
        let mut first: Option<(f64, f64)> = None;
        for z in zeros_of_derivative(set, i, search)? {
            let phi_z = eval_regular(&phi, z)?;
            let curv = eval_regular(&d2, z)?;
            let lambda = match set.case {
                Case::Sum => -(curv + 2.0 * eps * phi_z),
                Case::Product => {
                    if phi_z == 0.0 {
                        return Err(GeneratorError::CriticalPointOnNode { axis: i, zero: z });
                    }
                    -curv / phi_z - 2.0 * eps / n as f64
                }
            };
            match first {
                None => first = Some((z, lambda)),
                Some((z0, l0)) if (l0 - lambda).abs() > 1e-9 * (1.0 + l0.abs()) => {
                    return Err(GeneratorError::InconsistentZeros {
                        axis: i,
                        first_zero: z0,
                        first_lambda: l0,
                        second_zero: z,
                        second_lambda: lambda,
                    })
                }
                Some(_) => {}
            }
        }
        *slot = first.map(|(_, l)| l);
    }
    let forced_sum: f64 = forced.iter().flatten().sum();
    let free = forced.iter().filter(|l| l.is_none()).count();
    let scale = 1.0 + forced.iter().flatten().fold(0.0_f64, |m, l| m.max(l.abs()));
    let lambdas: Vec<f64> = if free == 0 {
        if forced_sum.abs() > 1e-10 * scale {
            return Err(GeneratorError::ConstraintViolated(forced_sum));
        }
        forced.into_iter().flatten().collect()
    } else {
        let share = -forced_sum / free as f64;
        forced.into_iter().map(|l| l.unwrap_or(share)).collect()
    };
    let sum: f64 = lambdas.iter().sum();
    if sum.abs() > LAMBDA_SUM_TOL * scale {
        return Err(GeneratorError::ConstraintViolated(sum));
    }
    Ok(lambdas)
}
