//! Real zeros of univariate functions: companion-matrix eigenvalues for
//! polynomials, sign-change bracketing otherwise.

use nalgebra::DMatrix;

use crate::expr::{BinaryOp, Expression, Node, UnaryOp};

/// Largest polynomial degree handed to the companion-matrix solver.
pub const MAX_DEGREE: usize = 16;
const IMAG_TOL: f64 = 1e-9;

/// A located zero together with whether it looked like a repeated root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub at: f64,
    pub repeated: bool,
}

/// Coefficients (ascending order) if `node` is a polynomial in `var`.
pub fn polynomial_coefficients(e: &Expression, var: usize) -> Option<Vec<f64>> {
    let mut c = poly(e.root(), var)?;
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    Some(c)
}

fn poly(node: &Node, var: usize) -> Option<Vec<f64>> {
    match node {
        Node::Const(c) => Some(vec![*c]),
        Node::Var(i) if *i == var => Some(vec![0.0, 1.0]),
        Node::Var(_) => None,
        Node::Unary(UnaryOp::Neg, a) => Some(poly(a, var)?.into_iter().map(|c| -c).collect()),
        Node::Unary(..) => None,
        Node::Binary(op, a, b) => {
            let pa = poly(a, var)?;
            match op {
                BinaryOp::Add => Some(add(&pa, &poly(b, var)?, 1.0)),
                BinaryOp::Sub => Some(add(&pa, &poly(b, var)?, -1.0)),
                BinaryOp::Mul => Some(mul(&pa, &poly(b, var)?)),
                BinaryOp::Div => match &**b {
                    Node::Const(d) if *d != 0.0 => Some(pa.into_iter().map(|c| c / d).collect()),
                    _ => None,
                },
            }
        }
        Node::Pow(a, n) if *n >= 0 => {
            let base = poly(a, var)?;
            if base.len().saturating_sub(1) * (*n as usize) > 4 * MAX_DEGREE {
                return None;
            }
            let mut out = vec![1.0];
            for _ in 0..*n {
                out = mul(&out, &base);
            }
            Some(out)
        }
        Node::Pow(..) => None,
    }
}

fn add(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += sign * c;
    }
    out
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &ci in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ci;
    }
    (p, dp)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    DegreeTooHigh(usize),
    ZeroPolynomial,
}

/// Real roots of the polynomial with ascending coefficients `c`, sorted.
/// Roots at the origin are found exactly by factoring out powers of `x`.
pub fn real_polynomial_roots(c: &[f64]) -> Result<Vec<Zero>, RootError> {
    let mut c: Vec<f64> = c.to_vec();
    while c.len() > 1 && c.last() == Some(&0.0) {
        c.pop();
    }
    if c.iter().all(|&v| v == 0.0) {
        return Err(RootError::ZeroPolynomial);
    }
    let zero_mult = c.iter().take_while(|&&v| v == 0.0).count();
    let reduced = &c[zero_mult..];
    let degree = reduced.len() - 1;
    if degree + zero_mult > MAX_DEGREE {
        return Err(RootError::DegreeTooHigh(degree + zero_mult));
    }
    let mut zeros = Vec::new();
    if zero_mult > 0 {
        zeros.push(Zero {
            at: 0.0,
            repeated: zero_mult > 1,
        });
    }
    let scale = reduced.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    match degree {
        0 => {}
        1 => zeros.push(Zero {
            at: -reduced[0] / reduced[1],
            repeated: false,
        }),
        _ => {
            let lead = reduced[degree];
            let mut companion = DMatrix::<f64>::zeros(degree, degree);
            for i in 1..degree {
                companion[(i, i - 1)] = 1.0;
            }
            for i in 0..degree {
                companion[(i, degree - 1)] = -reduced[i] / lead;
            }
            let eig = companion.complex_eigenvalues();
            let mut candidates: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (re, im) in candidates {
                let mut x = re;
                // Newton polish; a near-real conjugate pair signals a double root
                for _ in 0..8 {
                    let (p, dp) = horner(reduced, x);
                    if dp == 0.0 {
                        break;
                    }
                    let step = p / dp;
                    x -= step;
                    if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                        break;
                    }
                }
                let (_, dp) = horner(reduced, x);
                let repeated = dp.abs() <= 1e-7 * scale * (1.0 + x.abs()).powi(degree as i32);
                if im.abs() <= IMAG_TOL * (1.0 + re.abs()) || (repeated && im.abs() <= 1e-5) {
                    if let Some(z) = zeros
                        .iter_mut()
                        .find(|z| (z.at - x).abs() <= 1e-7 * (1.0 + x.abs()))
                    {
                        z.repeated = true;
                        continue;
                    }
                    zeros.push(Zero { at: x, repeated });
                }
            }
        }
    }
    zeros.sort_by(|a, b| a.at.total_cmp(&b.at));
    Ok(zeros)
}

/// Zeros of `f` on `[lo, hi]` located by sign changes over `samples`
/// subintervals and refined by bisection. Exact zeros at sample points are
/// reported as is.
pub fn bracket_zeros<F>(f: F, lo: f64, hi: f64, samples: usize) -> Vec<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    let mut out: Vec<f64> = Vec::new();
    let step = (hi - lo) / samples as f64;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=samples {
        let x = lo + step * i as f64;
        let Some(fx) = f(x) else {
            prev = None;
            continue;
        };
        if fx == 0.0 {
            out.push(x);
        } else if let Some((xp, fp)) = prev {
            if fp != 0.0 && fp.signum() != fx.signum() {
                let (mut a, mut b, mut fa) = (xp, x, fp);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    match f(m) {
                        Some(fm) if fm == 0.0 => {
                            a = m;
                            b = m;
                            break;
                        }
                        Some(fm) if fm.signum() == fa.signum() => {
                            a = m;
                            fa = fm;
                        }
                        Some(_) => b = m,
                        None => break,
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        prev = Some((x, fx));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_coefficients() {
        let e = Expression::parse("3*(x - 1)^2 - x/2", &["x"]).unwrap();
        assert_eq!(polynomial_coefficients(&e, 0).unwrap(), vec![3.0, -6.5, 3.0]);
        let s = Expression::parse("sin(x)", &["x"]).unwrap();
        assert!(polynomial_coefficients(&s, 0).is_none());
    }

    #[test]
    fn companion_roots() {
        // (x - 1)(x + 2)(x - 3) = x^3 - 2x^2 - 5x + 6
        let z = real_polynomial_roots(&[6.0, -5.0, -2.0, 1.0]).unwrap();
        let at: Vec<f64> = z.iter().map(|z| z.at).collect();
        assert_eq!(at.len(), 3);
        for (got, want) in at.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(z.iter().all(|z| !z.repeated));
        // x^2 + 1 has no real roots
        assert!(real_polynomial_roots(&[1.0, 0.0, 1.0]).unwrap().is_empty());
    }

    #[test]
    fn origin_roots_are_exact() {
        let z = real_polynomial_roots(&[0.0, 2.5]).unwrap();
        assert_eq!(z, vec![Zero { at: 0.0, repeated: false }]);
        let z = real_polynomial_roots(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(z, vec![Zero { at: 0.0, repeated: true }]);
    }

    #[test]
    fn double_root_away_from_origin() {
        // (x - 1)^2 (x + 1)
        let z = real_polynomial_roots(&[1.0, -1.0, -1.0, 1.0]).unwrap();
        assert_eq!(z.len(), 2);
        assert!(z.iter().any(|z| (z.at - 1.0).abs() < 1e-6 && z.repeated));
        assert!(z.iter().any(|z| (z.at + 1.0).abs() < 1e-12 && !z.repeated));
    }

    #[test]
    fn bracketing_finds_cosine_zeros() {
        let z = bracket_zeros(|x| Some(x.cos()), -4.0, 4.0, 400);
        assert_eq!(z.len(), 2);
        assert!((z[0] + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((z[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
