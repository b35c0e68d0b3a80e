//! The assembled model: exponent `F`, its exact derivatives, the potential
//! `V = ½[(∇F)² − ΔF]` and the two eigenfunctions `ψ0 = e^{−F}` and
//! `ψ1 = φ e^{−F}`, with `E0 = 0` and `E1 = ε`.

use std::sync::Arc;

use thiserror::Error;

use crate::expr::{EvalError, Expression, ParseError};
use crate::generators::{chi, eval_regular, AxisClosedForms, GeneratingSet, GeneratorError};
use crate::sampling::halton;

/// Number of quasi-random points used to validate a tie function.
pub const TIE_SAMPLES: usize = 200;
/// Tolerance on the normalized `(∇f̃, ∇φ)` at the sample points.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("tie function is not orthogonal to grad phi: violation {max_violation:e} at {point:?}")]
    TieNotOrthogonal { max_violation: f64, point: Vec<f64> },
    #[error("F is singular at {point:?}")]
    SingularF { point: Vec<f64> },
    #[error("phi has no sign change or zero in the domain box")]
    NoNode,
    #[error("expected {expected} axes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid domain box: {0}")]
    InvalidDomain(String),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ModelError> {
        if lo.len() != hi.len() {
            return Err(ModelError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(ModelError::InvalidDomain(format!("axis {i}: [{a}, {b}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[-L_i, L_i]` on every axis.
    pub fn symmetric(half: &[f64]) -> Result<Self, ModelError> {
        Self::new(half.iter().map(|l| -l).collect(), half.to_vec())
    }

    pub fn dimension(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }
}

/// A solution `f̃` of `(∇f̃, ∇φ) = 0`, given directly in Cartesian form.
#[derive(Debug, Clone)]
pub struct TieFunction {
    pub expr: Expression,
    pub grad: Vec<Expression>,
    pub hessian_diag: Vec<Expression>,
}

impl TieFunction {
    pub fn new(expr: Expression) -> Self {
        let n = expr.variables().len();
        let grad: Vec<Expression> = (0..n).map(|i| expr.derivative(i)).collect();
        let hessian_diag = grad.iter().enumerate().map(|(i, g)| g.derivative(i)).collect();
        Self {
            expr,
            grad,
            hessian_diag,
        }
    }

    pub fn zero(vars: Arc<[String]>) -> Self {
        Self::new(Expression::constant(0.0, vars))
    }

    pub fn parse(source: &str, vars: &[String]) -> Result<Self, ParseError> {
        let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        Ok(Self::new(Expression::parse(source, &refs)?))
    }

    pub fn is_zero(&self) -> bool {
        self.expr.as_constant() == Some(0.0)
    }
}

/// Build switches that are not part of the mathematical input.
#[derive(Debug, Clone, Default)]
pub struct ModelOptions {
    /// Accept ties that are singular inside the box; evaluation failures are
    /// then skipped during tie validation.
    pub allow_singular_tie: bool,
    /// Integrate every axis numerically even when a closed form exists.
    pub force_quadrature: bool,
    /// Replace the default quadrature anchors.
    pub anchors: Option<Vec<f64>>,
    /// Accept a generating set that violates its invariants, for fault
    /// injection.
    pub skip_set_validation: bool,
}

#[derive(Debug, Clone)]
pub struct QesModel {
    set: GeneratingSet,
    tie: TieFunction,
    axes: Vec<AxisClosedForms>,
    domain: DomainBox,
    phi: Expression,
    phi_grad: Vec<Expression>,
    phi_laplacian: Expression,
    options: ModelOptions,
    tie_violation: f64,
}

impl QesModel {
    pub fn set(&self) -> &GeneratingSet {
        &self.set
    }

    pub fn tie(&self) -> &TieFunction {
        &self.tie
    }

    pub fn axes(&self) -> &[AxisClosedForms] {
        &self.axes
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.set.dimension()
    }

    pub fn epsilon(&self) -> f64 {
        self.set.epsilon()
    }

    pub fn e0(&self) -> f64 {
        0.0
    }

    pub fn e1(&self) -> f64 {
        self.set.epsilon()
    }

    pub fn allows_singular_tie(&self) -> bool {
        self.options.allow_singular_tie
    }

    /// Largest normalized tie violation seen while building.
    pub fn tie_violation(&self) -> f64 {
        self.tie_violation
    }

    /// The point made of every axis anchor.
    pub fn anchor_point(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.anchor).collect()
    }

    pub fn phi_expr(&self) -> &Expression {
        &self.phi
    }

    pub fn phi_grad_exprs(&self) -> &[Expression] {
        &self.phi_grad
    }

    pub fn phi_laplacian_expr(&self) -> &Expression {
        &self.phi_laplacian
    }

    /// `F` as one expression, available when every axis has a closed-form
    /// antiderivative.
    pub fn f_expression(&self) -> Option<Expression> {
        let vars = self.set.variables();
        let mut total = self.tie.expr.clone();
        for (i, a) in self.axes.iter().enumerate() {
            let closed = a.f_closed.as_ref()?;
            let offset = eval_regular(closed, a.anchor).ok()?;
            total = total + closed.remap(Arc::clone(&vars), &[i]).add_const(-offset);
        }
        Some(total.simplify())
    }

    /// `V = E0 + ½[(∇F)² − ΔF]` as one expression, when `F` has one.
    pub fn potential_expression(&self) -> Option<Expression> {
        let f = self.f_expression()?;
        let n = self.dimension();
        let mut grad2 = Expression::constant(0.0, self.set.variables());
        let mut lap = grad2.clone();
        for i in 0..n {
            let g = f.derivative(i);
            lap = lap + g.derivative(i);
            grad2 = grad2 + g.powi(2);
        }
        Some((grad2 - lap).scale(0.5).add_const(self.e0()).simplify())
    }

    /// Whether `V` can couple different axes, i.e. the tie depends on more
    /// than one variable.
    pub fn is_separable(&self) -> bool {
        self.tie.expr.simplify().referenced_variables().len() <= 1
    }

    /// `f_i(x)`, the separated part of `F` on axis `i`.
    pub fn f_axis(&self, i: usize, x: f64) -> Result<f64, ModelError> {
        let a = &self.axes[i];
        Ok(if self.options.force_quadrature {
            a.f_value_quadrature(x)?
        } else {
            a.f_value(x)?
        })
    }

    pub fn tie_value(&self, p: &[f64]) -> Result<f64, ModelError> {
        Ok(self.tie.expr.eval(p)?)
    }

    pub fn f(&self, p: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(p)?;
        let mut sum = self.tie_value(p)?;
        for (i, &x) in p.iter().enumerate() {
            sum += self.f_axis(i, x)?;
        }
        Ok(sum)
    }

    pub fn grad_f(&self, p: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_dim(p)?;
        p.iter()
            .enumerate()
            .map(|(i, &x)| Ok(eval_regular(&self.axes[i].f_prime, x)? + self.tie.grad[i].eval(p)?))
            .collect()
    }

    pub fn laplacian_f(&self, p: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(p)?;
        let mut sum = 0.0;
        for (i, &x) in p.iter().enumerate() {
            sum += eval_regular(&self.axes[i].f_second, x)? + self.tie.hessian_diag[i].eval(p)?;
        }
        Ok(sum)
    }

    pub fn potential(&self, p: &[f64]) -> Result<f64, ModelError> {
        let g = self.grad_f(p)?;
        let norm2: f64 = g.iter().map(|v| v * v).sum();
        Ok(self.e0() + 0.5 * (norm2 - self.laplacian_f(p)?))
    }

    pub fn phi(&self, p: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(p)?;
        Ok(self.phi.eval(p)?)
    }

    pub fn psi0(&self, p: &[f64]) -> Result<f64, ModelError> {
        Ok((-self.f(p)?).exp())
    }

    pub fn psi1(&self, p: &[f64]) -> Result<f64, ModelError> {
        Ok(self.phi(p)? * (-self.f(p)?).exp())
    }

    /// `2(∇F, ∇φ) − Δφ − 2εφ` normalized by `1 + |2εφ|`.
    pub fn master_residual(&self, p: &[f64]) -> Result<f64, ModelError> {
        let grad_f = self.grad_f(p)?;
        let mut dot = 0.0;
        for (gf, gp) in grad_f.iter().zip(&self.phi_grad) {
            dot += gf * gp.eval(p)?;
        }
        let two_eps_phi = 2.0 * self.epsilon() * self.phi(p)?;
        let lap = self.phi_laplacian.eval(p)?;
        Ok((2.0 * dot - lap - two_eps_phi).abs() / (1.0 + two_eps_phi.abs()))
    }

    /// `|(∇f̃, ∇φ)| / (1 + |∇f̃| |∇φ|)`.
    pub fn tie_residual(&self, p: &[f64]) -> Result<f64, ModelError> {
        tie_residual(&self.tie, &self.phi_grad, p)
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), ModelError> {
        if p.len() != self.dimension() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dimension(),
                got: p.len(),
            });
        }
        Ok(())
    }
}

fn tie_residual(tie: &TieFunction, phi_grad: &[Expression], p: &[f64]) -> Result<f64, ModelError> {
    let (mut dot, mut nt, mut np) = (0.0, 0.0, 0.0);
    for (gt, gp) in tie.grad.iter().zip(phi_grad) {
        let (a, b) = (gt.eval(p)?, gp.eval(p)?);
        dot += a * b;
        nt += a * a;
        np += b * b;
    }
    Ok(dot.abs() / (1.0 + (nt * np).sqrt()))
}

/// Assembles the model and validates the tie and the axis antiderivatives
/// inside `domain`.
pub fn build_model(
    set: &GeneratingSet,
    tie: TieFunction,
    domain: DomainBox,
    options: ModelOptions,
) -> Result<QesModel, ModelError> {
    if !options.skip_set_validation {
        set.validate()?;
    }
    let n = set.dimension();
    if domain.dimension() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: domain.dimension(),
        });
    }
    if tie.expr.variables() != set.phi()[0].variables() {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            got: tie.expr.variables().len(),
        });
    }
    let mut axes = (0..n).map(|i| chi(set, i)).collect::<Result<Vec<_>, _>>()?;
    if let Some(anchors) = &options.anchors {
        if anchors.len() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: anchors.len(),
            });
        }
        axes = axes
            .into_iter()
            .zip(anchors)
            .map(|(a, &x)| a.with_anchor(x))
            .collect();
    }

    // A divergent antiderivative anywhere on an axis shows up on the way
    // from the anchor to one of the two ends.
    for (i, a) in axes.iter().enumerate() {
        for end in [domain.lo[i], domain.hi[i]] {
            let value = if options.force_quadrature {
                a.f_value_quadrature(end)
            } else {
                a.f_value(end).and_then(|v| {
                    // a closed form can hide a pole that quadrature would hit
                    a.f_value_quadrature(end).map(|_| v)
                })
            };
            if let Err(err) = value {
                let mut point: Vec<f64> = axes.iter().map(|a| a.anchor).collect();
                point[i] = err_location(&err).unwrap_or(end);
                return Err(ModelError::SingularF { point });
            }
        }
    }

    let phi = set.phi_total();
    let phi_grad: Vec<Expression> = (0..n).map(|i| phi.derivative(i)).collect();
    let phi_laplacian = phi_grad
        .iter()
        .enumerate()
        .map(|(i, g)| g.derivative(i))
        .reduce(|a, b| a + b)
        .expect("n >= 2")
        .simplify();

    let samples = halton(&domain.lo, &domain.hi, TIE_SAMPLES, 0);
    let mut worst = (0.0_f64, Vec::new());
    let (mut phi_min, mut phi_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &samples {
        match tie_residual(&tie, &phi_grad, p).and_then(|r| Ok((r, tie.expr.eval(p)?))) {
            Ok((r, value)) if value.is_finite() => {
                if r > worst.0 {
                    worst = (r, p.clone());
                }
            }
            _ if options.allow_singular_tie => continue,
            _ => return Err(ModelError::SingularF { point: p.clone() }),
        }
        if let Ok(v) = phi.eval(p) {
            phi_min = phi_min.min(v);
            phi_max = phi_max.max(v);
        }
    }
    if worst.0 > TIE_TOL {
        return Err(ModelError::TieNotOrthogonal {
            max_violation: worst.0,
            point: worst.1,
        });
    }
    if !(phi_min <= 0.0 && phi_max >= 0.0) {
        return Err(ModelError::NoNode);
    }

    Ok(QesModel {
        set: set.clone(),
        tie,
        axes,
        domain,
        phi,
        phi_grad,
        phi_laplacian,
        options,
        tie_violation: worst.0,
    })
}

fn err_location(err: &GeneratorError) -> Option<f64> {
    match err {
        GeneratorError::NonintegrableSingularity { location } | GeneratorError::Pole { location } => {
            Some(*location)
        }
        _ => None,
    }
}
