use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use qes_core::hamiltonian::Grid;
use qes_core::model::QesModel;
use qes_core::verify::{full_report, VerificationReport};

use crate::config::{LambdaSource, Overrides, RunConfig};
use crate::presets::{self, Comparison};
use crate::{CliError, EXIT_CHECK_FAILED, EXIT_OK};

/// Grid quantities that `export` can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Potential,
    Psi0,
    Psi1,
    F,
}

fn value_or_nan(v: Result<f64, impl std::fmt::Debug>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Shortest round-trip text of `v`, with `-0` written as `0`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:?}")
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(", ")
}

/// Model summary with values at the origin and at half the box corner.
pub fn construct(config: &RunConfig) -> Result<String, CliError> {
    let (model, source) = config.build()?;
    let mut out = String::new();
    let set = model.set();
    let vars = set.variables();
    let _ = writeln!(out, "case: {:?}", set.case());
    let _ = writeln!(out, "dimension: {}", model.dimension());
    let _ = writeln!(out, "variables: {}", vars.join(", "));
    for (i, phi) in set.phi().iter().enumerate() {
        let _ = writeln!(out, "phi.{} = {phi}", i + 1);
    }
    let _ = writeln!(out, "E0 = {}", format_number(model.e0()));
    let _ = writeln!(out, "E1 = {}", format_number(model.e1()));
    let how = match source {
        LambdaSource::Given => "given",
        LambdaSource::Regularized => "regularized",
    };
    let _ = writeln!(out, "lambda = [{}] ({how})", join(set.lambda()));
    if model.tie().is_zero() {
        let _ = writeln!(out, "tie = none");
    } else {
        let _ = writeln!(out, "tie = {}", model.tie().expr);
    }
    let _ = writeln!(out, "separable: {}", if model.is_separable() { "yes" } else { "no" });
    match model.f_expression() {
        Some(f) => {
            let _ = writeln!(out, "F = {f}");
        }
        None => {
            let _ = writeln!(out, "F = (by quadrature)");
        }
    }
    if let Some(v) = model.potential_expression() {
        let _ = writeln!(out, "V = {v}");
    }
    let origin = vec![0.0; model.dimension()];
    let corner: Vec<f64> = model.domain().hi.iter().map(|h| 0.5 * h).collect();
    for p in [origin, corner] {
        let _ = writeln!(
            out,
            "at ({}): F = {}, V = {}, psi0 = {}, psi1 = {}",
            join(&p),
            format_number(value_or_nan(model.f(&p))),
            format_number(value_or_nan(model.potential(&p))),
            format_number(value_or_nan(model.psi0(&p))),
            format_number(value_or_nan(model.psi1(&p))),
        );
    }
    Ok(out)
}

/// Runs every check and returns the report with its exit status.
pub fn verify(config: &RunConfig) -> Result<(VerificationReport, i32), CliError> {
    let (model, _) = config.build()?;
    let report = full_report(&model, &config.verify_settings())?;
    let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok((report, code))
}

fn field_value(model: &QesModel, field: Field, p: &[f64]) -> f64 {
    match field {
        Field::Potential => value_or_nan(model.potential(p)),
        Field::Psi0 => value_or_nan(model.psi0(p)),
        Field::Psi1 => value_or_nan(model.psi1(p)),
        Field::F => value_or_nan(model.f(p)),
    }
}

/// CSV of `field` at every grid node, boundary included, in grid order.
pub fn export(config: &RunConfig, field: Field) -> Result<String, CliError> {
    let (model, _) = config.build()?;
    let grid = Grid::new(config.grid_spec()).map_err(qes_core::Error::from)?;
    let n = model.dimension();
    let mut out = String::new();
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let _ = writeln!(out, "{},value", header.join(","));
    grid.for_each_full_node(|p, _| {
        for x in p {
            out.push_str(&format_number(*x));
            out.push(',');
        }
        out.push_str(&format_number(field_value(&model, field, p)));
        out.push('\n');
    });
    Ok(out)
}

/// Names and descriptions of the built-in presets.
pub fn preset_list() -> String {
    let mut out = String::new();
    for p in presets::presets() {
        let _ = writeln!(out, "{:<18} {}", p.name, p.description);
    }
    out
}

pub struct PresetOutcome {
    pub report: VerificationReport,
    pub exit_code: i32,
    pub comparisons: Vec<Comparison>,
}

/// Verifies a preset, with command-line overrides, and compares the result
/// with its expected outcome.
pub fn run_preset(name: &str, overrides: &Overrides) -> Result<PresetOutcome, CliError> {
    let preset = presets::find(name).ok_or_else(|| CliError::UnknownPreset {
        name: name.to_string(),
        known: presets::names(),
    })?;
    let mut config = preset.config();
    config.apply(overrides)?;
    let (report, exit_code) = verify(&config)?;
    let comparisons = presets::compare(&preset.expected, &report, exit_code);
    Ok(PresetOutcome {
        report,
        exit_code,
        comparisons,
    })
}

/// Writes `text` to `path`, or to stdout when there is none.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

pub fn report_json(report: &VerificationReport) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(tie: &str, n: usize) -> RunConfig {
        let src = format!(
            "dimension = 2\ncase = \"sum\"\nphi.1 = \"x^2/2\"\nphi.2 = \"-y^2/2\"\nepsilon = 2\ntie = \"{tie}\"\n\
             domain.1 = 4\ndomain.2 = 4\ngrid.1 = {n}\ngrid.2 = {n}\n"
        );
        RunConfig::parse(&src, "test").unwrap()
    }

    #[test]
    fn construct_reports_the_oscillator() {
        let text = construct(&small("none", 5)).unwrap();
        assert!(text.contains("F = 0.5 * x^2 + 0.5 * y^2"), "{text}");
        assert!(text.contains("at (0, 0): F = 0, V = -1.0, psi0 = 1.0, psi1 = 0"), "{text}");
        assert!(text.contains("lambda = [-1.0, 1.0] (regularized)"), "{text}");
        assert!(text.contains("separable: yes"));
    }

    #[test]
    fn export_has_one_row_per_node() {
        let csv = export(&small("none", 5), Field::Potential).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 26);
        assert_eq!(lines[1], "-4.0,-4.0,15.0");
        assert_eq!(lines[13], "0,0,-1.0");
    }

    #[test]
    fn exported_psi1_vanishes_on_the_diagonals() {
        let csv = export(&small("0.5*(x*y)^2", 9), Field::Psi1).unwrap();
        for line in csv.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            if v[0].abs() == v[1].abs() {
                assert_eq!(v[2], 0.0, "{line}");
            } else {
                assert_ne!(v[2], 0.0, "{line}");
            }
        }
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = run_preset("ex9", &Overrides::default()).err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("ex1-oscillator") && msg.contains("ex1-singular-tie"), "{msg}");
    }
}
