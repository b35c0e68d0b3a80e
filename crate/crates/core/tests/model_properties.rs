use proptest::prelude::*;

use qes_core::generators::{
    antiderivative, axis_variable_names, chi, regularize_lambdas, Case, GeneratingSet, LAMBDA_SUM_TOL,
};
use qes_core::model::{build_model, DomainBox, ModelOptions, QesModel, TieFunction};

fn regularized(case: Case, phi: &[String], eps: f64) -> GeneratingSet {
    let refs: Vec<&str> = phi.iter().map(String::as_str).collect();
    let set = GeneratingSet::parse(case, &refs, vec![0.0; phi.len()], eps).unwrap();
    let lambda = regularize_lambdas(&set).unwrap();
    set.with_lambdas(lambda).unwrap()
}

fn model(set: &GeneratingSet, tie: &str, half: f64, anchors: Option<Vec<f64>>) -> QesModel {
    let n = set.dimension();
    let tie = TieFunction::parse(tie, &axis_variable_names(n)).unwrap();
    let options = ModelOptions {
        anchors,
        ..ModelOptions::default()
    };
    build_model(set, tie, DomainBox::symmetric(&vec![half; n]).unwrap(), options).unwrap()
}

fn example1(beta: f64, half: f64) -> QesModel {
    let phi = ["x^2/2".to_string(), "-y^2/2".to_string()];
    model(&regularized(Case::Sum, &phi, 2.0), &format!("{beta:?}*(x*y)^2"), half, None)
}

fn example2(alpha: f64, half: f64) -> QesModel {
    let set = GeneratingSet::parse(Case::Product, &["x", "y", "z"], vec![0.0; 3], 3.0).unwrap();
    model(&set, &format!("{alpha:?}*(2*x^2 - y^2 - z^2)^2"), half, None)
}

fn points(n: usize, half: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-half..half, n), 20)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn regularized_numerator_vanishes_at_critical_points(
        a in prop::collection::vec(0.2..3.0f64, 2..4),
        shifts in prop::collection::vec(-1.5..1.5f64, 4),
        eps in 0.5..4.0f64,
    ) {
        // phi_i = a_i (x - s_i)^2 / 2 on all but the last axis, which is linear
        let names = axis_variable_names(a.len() + 1);
        let mut phi: Vec<String> = a
            .iter()
            .zip(&shifts)
            .zip(&names)
            .map(|((ai, s), x)| format!("{ai:?}*({x} - {s:?})^2/2"))
            .collect();
        phi.push(format!("{}", names[a.len()]));
        let set = regularized(Case::Sum, &phi, eps);
        for (i, s) in shifts.iter().take(a.len()).enumerate() {
            let p = set.phi_axis(i);
            let d2 = p.derivative(0).derivative(0);
            let numerator = d2.eval(&[*s]).unwrap() + 2.0 * eps * p.eval(&[*s]).unwrap() + set.lambda()[i];
            let scale = 1.0 + d2.eval(&[*s]).unwrap().abs() + set.lambda()[i].abs();
            prop_assert!(numerator.abs() <= 1e-10 * scale, "axis {}: {}", i, numerator);
        }
        let sum: f64 = set.lambda().iter().sum();
        prop_assert!(sum.abs() <= LAMBDA_SUM_TOL * (1.0 + set.lambda().iter().fold(0.0, |m: f64, l| m.max(l.abs()))));
    }

    #[test]
    fn explicit_lambdas_keep_zero_sum(l in prop::collection::vec(-3.0..3.0f64, 2..5), bump in 1e-6..1.0f64) {
        let n = l.len();
        let phi: Vec<String> = axis_variable_names(n).iter().map(|x| format!("{x}^2")).collect();
        let refs: Vec<&str> = phi.iter().map(String::as_str).collect();
        let mut balanced = l.clone();
        balanced[n - 1] = -l[..n - 1].iter().sum::<f64>();
        let set = GeneratingSet::parse(Case::Sum, &refs, balanced.clone(), 1.0).unwrap();
        let mut shifted = balanced;
        shifted[0] += bump;
        prop_assert!(set.with_lambdas(shifted).is_err());
    }

    #[test]
    fn antiderivative_is_additive(mut cuts in [-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64], w in 0.5..4.0f64) {
        cuts.sort_by(f64::total_cmp);
        let [a, b, c] = cuts;
        let e = qes_core::expr::Expression::parse(&format!("exp(-x^2) + cos({w:?}*x) / (1 + x^2)"), &["x"]).unwrap();
        let whole = antiderivative(&e, a, c).unwrap();
        let parts = antiderivative(&e, a, b).unwrap() + antiderivative(&e, b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 3e-10, "{} vs {}", whole, parts);
    }

    #[test]
    fn monomial_closed_forms_match_quadrature(
        c in 0.3..2.0f64,
        k in 1..5i32,
        eps in 0.5..3.0f64,
        lambda in -2.0..2.0f64,
        product in any::<bool>(),
        xs in prop::collection::vec(0.3..3.0f64, 50),
    ) {
        let case = if product { Case::Product } else { Case::Sum };
        let phi = [format!("{c:?}*x^{k}"), format!("{c:?}*y^{k}")];
        let refs: Vec<&str> = phi.iter().map(String::as_str).collect();
        let set = GeneratingSet::parse(case, &refs, vec![lambda, -lambda], eps).unwrap();
        let forms = chi(&set, 0).unwrap();
        let closed = forms.f_closed.as_ref().expect("monomial has a closed form");
        let base = 1.0;
        for x in xs {
            let exact = closed.eval(&[x]).unwrap() - closed.eval(&[base]).unwrap();
            let quad = antiderivative(&forms.f_prime, base, x).unwrap();
            prop_assert!((exact - quad).abs() <= 1e-9 * (1.0 + exact.abs()), "x = {}: {} vs {}", x, exact, quad);
        }
    }

    #[test]
    fn anchor_shift_leaves_potential_and_state_ratios(
        beta in 0.0..1.0f64,
        anchors in [-2.0..2.0f64, -2.0..2.0f64],
        pts in points(2, 2.5),
    ) {
        let phi = ["x^2/2".to_string(), "-y^2/2".to_string()];
        let set = regularized(Case::Sum, &phi, 2.0);
        let tie = format!("{beta:?}*(x*y)^2");
        let base = model(&set, &tie, 3.0, None);
        let shifted = model(&set, &tie, 3.0, Some(anchors.to_vec()));
        let q = [0.3, -0.2];
        for p in &pts {
            let (v, w) = (base.potential(p).unwrap(), shifted.potential(p).unwrap());
            prop_assert!((v - w).abs() <= 1e-9, "V {} vs {}", v, w);
            let r0 = base.psi0(p).unwrap() / base.psi0(&q).unwrap();
            let s0 = shifted.psi0(p).unwrap() / shifted.psi0(&q).unwrap();
            prop_assert!((r0 - s0).abs() <= 1e-9 * r0.abs().max(1e-300), "psi0 ratio {} vs {}", r0, s0);
            let r1 = base.psi1(p).unwrap() / base.psi1(&q).unwrap();
            let s1 = shifted.psi1(p).unwrap() / shifted.psi1(&q).unwrap();
            prop_assert!((r1 - s1).abs() <= 1e-9 * r1.abs().max(1e-300), "psi1 ratio {} vs {}", r1, s1);
        }
    }

    #[test]
    fn master_equation_holds_exactly(beta in 0.0..1.0f64, alpha in 0.0..0.1f64, seed in any::<u64>()) {
        let mut rng = qes_core::sampling::Lcg::new(seed);
        for (m, half) in [(example1(beta, 5.0), 5.0), (example2(alpha, 4.0), 4.0)] {
            for _ in 0..500 {
                let p: Vec<f64> = (0..m.dimension()).map(|_| half * rng.next_signed()).collect();
                let r = m.master_residual(&p).unwrap();
                prop_assert!(r <= 1e-9, "residual {} at {:?}", r, p);
            }
        }
    }

    #[test]
    fn no_tie_means_separable(eps in 0.5..4.0f64, a in 0.3..2.0f64, pts in points(2, 3.0)) {
        let phi = [format!("{a:?}*x^2/2"), format!("-{a:?}*y^2/2")];
        let m = model(&regularized(Case::Sum, &phi, eps), "0", 4.0, None);
        let h = 1e-3;
        for p in &pts {
            let v = |dx: f64, dy: f64| m.potential(&[p[0] + dx, p[1] + dy]).unwrap();
            let mixed = (v(h, h) - v(h, -h) - v(-h, h) + v(-h, -h)) / (4.0 * h * h);
            prop_assert!(mixed.abs() <= 1e-6, "mixed derivative {} at {:?}", mixed, p);
        }
    }

    #[test]
    fn ground_state_is_positive(beta in 0.0..1.0f64, alpha in 0.0..0.1f64, pts in points(3, 2.5)) {
        let (m1, m2) = (example1(beta, 3.0), example2(alpha, 3.0));
        for p in &pts {
            prop_assert!(m1.psi0(&p[..2]).unwrap() > 0.0);
            prop_assert!(m2.psi0(p).unwrap() > 0.0);
        }
    }
}

/// `E + ½ Δ_h ψ / ψ` with a five-point (or seven-point) Laplacian.
fn local_energy(m: &QesModel, state: u8, e: f64, p: &[f64], h: f64) -> f64 {
    let psi = |q: &[f64]| if state == 0 { m.psi0(q).unwrap() } else { m.psi1(q).unwrap() };
    let centre = psi(p);
    let mut lap = 0.0;
    for i in 0..p.len() {
        let mut q = p.to_vec();
        q[i] = p[i] + h;
        let up = psi(&q);
        q[i] = p[i] - h;
        let down = psi(&q);
        lap += (up - 2.0 * centre + down) / (h * h);
    }
    e + 0.5 * lap / centre
}

#[test]
fn both_states_see_the_same_potential() {
    // the two local energies differ only by the O(h²) stencil errors
    let mut rng = qes_core::sampling::Lcg::new(5);
    for m in [example1(0.5, 3.0), example2(0.02, 3.0)] {
        let mut checked = 0;
        while checked < 20 {
            let p: Vec<f64> = (0..m.dimension()).map(|_| 2.0 * rng.next_signed()).collect();
            if m.phi(&p).unwrap().abs() < 0.2 {
                continue;
            }
            let gap = |h: f64| local_energy(&m, 0, m.e0(), &p, h) - local_energy(&m, 1, m.e1(), &p, h);
            let (coarse, fine) = (gap(0.02), gap(0.01));
            let v = m.potential(&p).unwrap();
            assert!(coarse.abs() <= 1e-2 * (1.0 + v.abs()), "{coarse} at {p:?}");
            if coarse.abs() > 1e-7 {
                let ratio = coarse / fine;
                assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} at {p:?}");
            }
            checked += 1;
        }
    }
}
