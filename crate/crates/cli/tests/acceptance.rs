//! End-to-end acceptance runs on the worked examples. Each test prints one
//! `PASS`/`FAIL` line; run with `--nocapture` to see them.

use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use qes_cli::presets;
use qes_core::generators::{axis_variable_names, regularize_lambdas, Case, GeneratingSet, GeneratorError};
use qes_core::hamiltonian::{discretize, Grid, GridSpec};
use qes_core::model::{build_model, DomainBox, ModelOptions, QesModel, TieFunction};
use qes_core::sampling::Lcg;
use qes_core::spectral::{dense_eigen_oracle, lowest_eigenpairs, subspace_overlap};
use qes_core::verify::{check_orthogonality, full_report, sample_states, spectral_verify, Verdict, VerifySettings};

// one core runs the heavy criteria one at a time so their timings are honest
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report_line(criterion: &str, ok: bool, detail: &str) {
    println!("criterion {criterion}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn preset_model(name: &str) -> (QesModel, VerifySettings) {
    let config = presets::find(name).expect("known preset").config();
    let (model, _) = config.build().expect("preset builds");
    (model, config.verify_settings())
}

fn random_points(model: &QesModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Lcg::new(seed);
    let hi = &model.domain().hi;
    (0..count)
        .map(|_| hi.iter().map(|h| h * rng.next_signed()).collect())
        .collect()
}

fn within(values: &[f64], want: &[f64], tol: f64) -> bool {
    values.len() >= want.len() && values.iter().zip(want).all(|(v, w)| (v - w).abs() <= tol)
}

#[test]
fn criterion_1_oscillator_calibration() {
    let _guard = serial();
    let start = Instant::now();
    let (model, settings) = preset_model("ex1-oscillator");
    assert_eq!(model.set().lambda(), &[-1.0, 1.0]);
    let grid = Grid::new(settings.grid.clone()).unwrap();
    let a = discretize(&model, &grid).unwrap();
    let states = sample_states(&model, &grid).unwrap();
    let out = spectral_verify(&model, &a, Some(&states), &settings).unwrap();
    let target = grid
        .sample(|p| Ok::<_, ()>((p[0] * p[0] - p[1] * p[1]) * (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp()))
        .unwrap();
    let half = out.half_width;
    let projection = subspace_overlap(&target, &out.pairs, (2.0 - half, 2.0 + half)).unwrap();
    let elapsed = start.elapsed();

    let values: Vec<f64> = out.pairs.iter().take(6).map(|p| p.value).collect();
    let levels_ok = within(&values, &[0.0, 1.0, 1.0, 2.0, 2.0, 2.0], 2e-2);
    let ok = levels_ok && projection >= 0.999 && elapsed <= Duration::from_secs(30);
    report_line(
        "1",
        ok,
        &format!("six lowest {values:?}, projection {projection:.9}, {:.1} s", elapsed.as_secs_f64()),
    );
    assert!(levels_ok, "levels {values:?}");
    assert!(projection >= 0.999, "projection {projection}");
    assert!(elapsed <= Duration::from_secs(30), "took {elapsed:?}");
}

/// The printed closed form for `f̃ = β(xy)²`.
fn printed_potential(x: f64, y: f64, eps: f64, beta: f64) -> f64 {
    let t = x * y;
    let fp = 2.0 * beta * t;
    let fpp = 2.0 * beta;
    0.5 * (fp * fp - fpp + eps * eps / 4.0) * (x * x + y * y) + eps * t * fp - eps / 2.0
}

#[test]
fn criterion_2_nonseparable_2d() {
    let _guard = serial();
    let start = Instant::now();
    let (model, settings) = preset_model("ex1-qes");
    assert!(settings.refine.is_some());
    let r = full_report(&model, &settings).unwrap();
    let elapsed = start.elapsed();

    let master = r.master_eq_residual.unwrap_or(f64::INFINITY);
    let a_ok = master <= 1e-9;

    let fd = [r.fd_residual0, r.fd_residual1].map(|v| v.unwrap_or(f64::INFINITY));
    let ratio = [r.fd_ratio0, r.fd_ratio1].map(|v| v.unwrap_or(f64::NAN));
    let b_ok = fd.iter().all(|v| *v <= 5e-3) && ratio.iter().all(|q| (3.0..=5.0).contains(q));

    let e = [r.spectral_e0, r.spectral_e1].map(|v| v.unwrap_or(f64::NAN));
    let o = [r.overlap0, r.overlap1].map(|v| v.unwrap_or(0.0));
    let c_ok = (e[0] - 0.0).abs() <= 2e-2 && (e[1] - 2.0).abs() <= 2e-2 && o.iter().all(|v| *v >= 0.999);

    assert_eq!(printed_potential(1.0, 1.0, 2.0, 0.5), 2.0);
    assert_eq!(model.potential(&[1.0, 1.0]).unwrap(), 2.0);
    let worst_v = random_points(&model, 100, 7)
        .iter()
        .map(|p| {
            let want = printed_potential(p[0], p[1], 2.0, 0.5);
            (model.potential(p).unwrap() - want).abs() / want.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    let d_ok = worst_v <= 1e-10;
    let time_ok = elapsed <= Duration::from_secs(120);

    report_line("2a", a_ok, &format!("master residual {master:e}"));
    report_line("2b", b_ok, &format!("fd residuals {fd:?}, ratios {ratio:?}"));
    report_line("2c", c_ok, &format!("levels {e:?}, overlaps {o:?}"));
    report_line("2d", d_ok, &format!("worst relative deviation from printed V {worst_v:e}"));
    report_line("2 runtime", time_ok, &format!("{:.1} s", elapsed.as_secs_f64()));
    assert!(a_ok && c_ok && d_ok && time_ok);
    assert!(b_ok, "fd residuals {fd:?}, ratios {ratio:?}");
}

#[test]
fn criterion_3_nonseparable_3d() {
    let _guard = serial();
    let start = Instant::now();
    let (model, settings) = preset_model("ex2-qes");
    assert_eq!(model.set().lambda(), &[0.0, 0.0, 0.0]);
    assert_eq!(settings.k, 10);
    let r = full_report(&model, &settings).unwrap();
    let elapsed = start.elapsed();

    let master = r.master_eq_residual.unwrap_or(f64::INFINITY);
    let tie = r.tie_orthogonality_residual.unwrap_or(f64::INFINITY);
    let e = [r.spectral_e0, r.spectral_e1].map(|v| v.unwrap_or(f64::NAN));
    let o = [r.overlap0, r.overlap1].map(|v| v.unwrap_or(0.0));
    let ok = master <= 1e-9
        && tie <= 1e-9
        && e[0].abs() <= 5e-2
        && (e[1] - 3.0).abs() <= 5e-2
        && o.iter().all(|v| *v >= 0.99)
        && elapsed <= Duration::from_secs(600);
    report_line(
        "3",
        ok,
        &format!(
            "master {master:e}, tie {tie:e}, levels {e:?}, overlaps {o:?}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_oscillator_limit_3d() {
    let _guard = serial();
    let start = Instant::now();
    let (model, settings) = preset_model("ex2-oscillator");
    let grid = Grid::new(settings.grid.clone()).unwrap();
    let a = discretize(&model, &grid).unwrap();
    let out = spectral_verify(&model, &a, None, &settings).unwrap();
    let target = grid
        .sample(|p| {
            let r2: f64 = p.iter().map(|x| x * x).sum();
            Ok::<_, ()>(p[0] * p[1] * p[2] * (-r2 / 2.0).exp())
        })
        .unwrap();
    let half = out.half_width;
    let projection = subspace_overlap(&target, &out.pairs, (3.0 - half, 3.0 + half)).unwrap();
    let elapsed = start.elapsed();

    let values: Vec<f64> = out.pairs.iter().take(5).map(|p| p.value).collect();
    let levels_ok = within(&values, &[0.0, 1.0, 1.0, 1.0, 2.0], 5e-2);
    let third = out.index1.level == 3;
    let ok = levels_ok && third && projection >= 0.999;
    report_line(
        "4",
        ok,
        &format!(
            "lowest {values:?}, xyz state in level {} with projection {projection:.9}, {:.1} s",
            out.index1.level,
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

fn quadratic_set(a: &[f64], eps: f64) -> GeneratingSet {
    let names = axis_variable_names(a.len());
    let sources: Vec<String> = a
        .iter()
        .zip(&names)
        .map(|(ai, x)| format!("{ai:?}*{x}^2/2"))
        .collect();
    let refs: Vec<&str> = sources.iter().map(String::as_str).collect();
    GeneratingSet::parse(Case::Sum, &refs, vec![0.0; a.len()], eps).unwrap()
}

#[test]
fn criterion_5_regularization() {
    let mut runner = runner(128);
    let balanced = (prop::collection::vec(-4.0..4.0f64, 1..4), 0.5..5.0f64).prop_filter_map(
        "nonzero coefficients",
        |(mut a, eps)| {
            let last = -a.iter().sum::<f64>();
            a.push(last);
            a.iter().all(|v| v.abs() > 1e-3).then_some((a, eps))
        },
    );
    let exact = runner.run(&balanced, |(a, eps)| {
        let lambda = regularize_lambdas(&quadratic_set(&a, eps)).unwrap();
        let expected: Vec<f64> = a.iter().map(|v| -v).collect();
        prop_assert_eq!(lambda, expected);
        Ok(())
    });

    let unbalanced = (prop::collection::vec(-4.0..4.0f64, 2..5), 0.5..5.0f64)
        .prop_filter("sum away from zero", |(a, _)| a.iter().sum::<f64>().abs() > 1e-6);
    let rejected = runner.run(&unbalanced, |(a, eps)| {
        let result = regularize_lambdas(&quadratic_set(&a, eps));
        prop_assert!(matches!(result, Err(GeneratorError::ConstraintViolated(_))), "{:?}", result);
        Ok(())
    });

    let quadratic = regularize_lambdas(&quadratic_set(&[1.0, -1.0], 2.0)).unwrap();
    let explicit = GeneratingSet::parse(Case::Sum, &["x^2/2", "-y^2/2"], vec![1.0, 1.0], 2.0);
    let explicit_ok = matches!(
        explicit,
        Err(qes_core::Error::Generator(GeneratorError::LambdaSumNonzero(_)))
    );

    let ok = exact.is_ok() && rejected.is_ok() && quadratic == [-1.0, 1.0] && explicit_ok;
    report_line(
        "5",
        ok,
        &format!("exact {exact:?}, rejection {rejected:?}, quadratic lambda {quadratic:?}, explicit (1,1) rejected {explicit_ok}"),
    );
    assert!(ok);
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn qes_models() -> Vec<(&'static str, QesModel)> {
    ["ex1-qes", "ex2-qes"]
        .into_iter()
        .map(|n| (n, preset_model(n).0))
        .collect()
}

fn with_anchors(model: &QesModel, anchors: Vec<f64>) -> QesModel {
    build_model(
        model.set(),
        model.tie().clone(),
        model.domain().clone(),
        ModelOptions {
            anchors: Some(anchors),
            ..ModelOptions::default()
        },
    )
    .unwrap()
}

fn anchor_invariance() -> Result<(), String> {
    for (name, model) in qes_models() {
        let n = model.dimension();
        let points = random_points(&model, 20, 3);
        runner(32)
            .run(&prop::collection::vec(-3.0..3.0f64, n), |anchors| {
                let shifted = with_anchors(&model, anchors);
                for p in &points {
                    let (a, b) = (model.potential(p).unwrap(), shifted.potential(p).unwrap());
                    prop_assert!((a - b).abs() <= 1e-9, "{}: V {} vs {} at {:?}", name, a, b, p);
                }
                Ok(())
            })
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn tie_residuals() -> Result<(), String> {
    for (name, model) in qes_models() {
        let n = model.dimension();
        let hi = model.domain().hi[0];
        runner(256)
            .run(&prop::collection::vec(-hi..hi, n), |p| {
                let r = model.tie_residual(&p).unwrap();
                prop_assert!(r <= 1e-12, "{}: residual {} at {:?}", name, r, p);
                Ok(())
            })
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn gradient_agreement() -> Result<(), String> {
    let h = 1e-5;
    for (name, model) in qes_models() {
        for p in random_points(&model, 100, 11) {
            let g = model.grad_f(&p).unwrap();
            let mut diff2 = 0.0;
            for i in 0..p.len() {
                let (mut up, mut down) = (p.clone(), p.clone());
                up[i] += h;
                down[i] -= h;
                let fd = (model.f(&up).unwrap() - model.f(&down).unwrap()) / (2.0 * h);
                diff2 += (fd - g[i]).powi(2);
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            let rel = diff2.sqrt() / norm;
            if rel > 1e-6 {
                return Err(format!("{name}: relative gradient error {rel:e} at {p:?}"));
            }
        }
    }
    Ok(())
}

fn small_model(case: Case, tie: &str, n: usize, half: f64) -> QesModel {
    let (phi, eps): (&[&str], f64) = match case {
        Case::Sum => (&["x^2/2", "-y^2/2"], 2.0),
        Case::Product => (&["x", "y", "z"], 3.0),
    };
    let set = GeneratingSet::parse(case, phi, vec![0.0; n], eps).unwrap();
    let set = set.with_lambdas(regularize_lambdas(&set).unwrap()).unwrap();
    let tie = TieFunction::parse(tie, &axis_variable_names(n)).unwrap();
    build_model(&set, tie, DomainBox::symmetric(&vec![half; n]).unwrap(), ModelOptions::default()).unwrap()
}

fn dense_agreement() -> Result<(), String> {
    let plane = (0.0..0.5f64, 14usize..=32, 3.0..5.0f64).prop_map(|(beta, points, half)| {
        (small_model(Case::Sum, &format!("{beta:?}*(x*y)^2"), 2, half), GridSpec::uniform(2, half, points))
    });
    let space = (0.0..0.05f64, 8usize..=11, 3.0..4.0f64).prop_map(|(alpha, points, half)| {
        let tie = format!("{alpha:?}*(2*x^2 - y^2 - z^2)^2");
        (small_model(Case::Product, &tie, 3, half), GridSpec::uniform(3, half, points))
    });
    let check = |(model, spec): (QesModel, GridSpec)| {
        let grid = Grid::new(spec).unwrap();
        prop_assert!(grid.len() <= 900);
        let a = discretize(&model, &grid).unwrap();
        let dense = dense_eigen_oracle(&a).unwrap();
        let iterative = lowest_eigenpairs(&a, 8, 1e-10).unwrap();
        for (i, p) in iterative.iter().enumerate() {
            prop_assert!(
                (p.value - dense[i]).abs() <= 1e-10,
                "m = {}: eigenvalue {} iterative {} dense {} residual {} tie {} half {:?}",
                grid.len(),
                i,
                p.value,
                dense[i], p.residual, model.tie().expr, model.domain().hi
            );
        }
        Ok(())
    };
    runner(12).run(&plane, check).map_err(|e| e.to_string())?;
    runner(12).run(&space, check).map_err(|e| e.to_string())
}

fn separability() -> Result<(), String> {
    let h = 1e-3;
    for name in ["ex1-oscillator", "ex2-oscillator"] {
        let (model, _) = preset_model(name);
        let v = |p: &[f64]| model.potential(p).unwrap();
        for p in random_points(&model, 100, 5) {
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    let at = |si: f64, sj: f64| {
                        let mut q = p.clone();
                        q[i] += si * h;
                        q[j] += sj * h;
                        v(&q)
                    };
                    let mixed = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
                    if mixed.abs() > 1e-6 {
                        return Err(format!("{name}: mixed derivative {mixed:e} on axes {i},{j} at {p:?}"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn parity_orthogonality() -> Result<(), String> {
    for name in ["ex1-oscillator", "ex1-qes", "ex2-oscillator", "ex2-qes", "ex1-singular-tie"] {
        let (model, settings) = preset_model(name);
        let grid = Grid::new(settings.grid).unwrap();
        let o = check_orthogonality(&model, &grid).unwrap();
        if o > 1e-12 {
            return Err(format!("{name}: <psi0, psi1> = {o:e}"));
        }
    }
    Ok(())
}

#[test]
fn criterion_6_property_suites() {
    let _guard = serial();
    let suites: [(&str, fn() -> Result<(), String>); 6] = [
        ("anchor-shift invariance of V", anchor_invariance),
        ("tie orthogonality residual", tie_residuals),
        ("symbolic vs finite-difference gradient", gradient_agreement),
        ("dense vs iterative eigenvalues", dense_agreement),
        ("separability without a tie", separability),
        ("parity orthogonality", parity_orthogonality),
    ];
    let mut failed = Vec::new();
    for (what, suite) in suites {
        let result = suite();
        report_line("6", result.is_ok(), &format!("{what}: {}", result.as_ref().err().map_or("ok", |e| e)));
        if result.is_err() {
            failed.push(what);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}

#[test]
fn criterion_7_bottomless_rejection() {
    let _guard = serial();
    let output = Command::new(env!("CARGO_BIN_EXE_qes"))
        .args(["preset", "ex1-bottomless"])
        .output()
        .unwrap();
    let code = output.status.code();
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let verdicts = &report["verdicts"];
    let skipped = ["groundState", "levels", "overlap0", "overlap1"]
        .iter()
        .all(|k| verdicts[k] == "skipped");
    let empty = report["spectrum"].as_array().is_some_and(|s| s.is_empty());
    let normalizability = serde_json::from_value::<Verdict>(verdicts["normalizability"].clone()).unwrap();
    let ok = code == Some(1) && normalizability == Verdict::Fail && skipped && empty;
    report_line(
        "7",
        ok,
        &format!(
            "exit {code:?}, normalizability {normalizability:?}, spectral skipped {skipped}, boundary decay {}",
            report["boundaryDecay"]
        ),
    );
    assert!(ok);
}
