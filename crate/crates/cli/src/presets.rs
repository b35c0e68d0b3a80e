//! Named configurations for the worked examples and their oscillator limits,
//! each with the outcome it is expected to reproduce.

use qes_core::verify::{VerificationReport, Verdict};

use crate::config::RunConfig;

/// What a preset run should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    /// Lowest computed eigenvalues, in order.
    pub levels: Vec<f64>,
    pub level_tolerance: f64,
    /// Whether 0 and ε must both be found among the computed levels.
    pub known_levels: bool,
    /// Minimum projection of the sampled states onto their windows.
    pub overlap: Option<f64>,
    pub exit_code: i32,
    /// Checks that must report a failure.
    pub failing: Vec<&'static str>,
    /// Checks that must report not-applicable.
    pub not_applicable: Vec<&'static str>,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    source: &'static str,
    pub expected: Expected,
}

impl Preset {
    pub fn config(&self) -> RunConfig {
        RunConfig::parse(self.source, self.name).expect("embedded presets parse")
    }

    pub fn source(&self) -> &'static str {
        self.source
    }
}

const EX1_OSCILLATOR: &str = r#"
dimension = 2
case = "sum"
phi.1 = "x^2/2"
phi.2 = "-y^2/2"
lambda = "auto"
epsilon = 2
tie = "none"
domain.1 = 7
domain.2 = 7
grid.1 = 201
grid.2 = 201
k = 6
"#;

const EX1_QES: &str = r#"
dimension = 2
case = "sum"
phi.1 = "x^2/2"
phi.2 = "-y^2/2"
lambda = "auto"
epsilon = 2
tie = "0.5*(x*y)^2"
domain.1 = 7
domain.2 = 7
grid.1 = 201
grid.2 = 201
refine.1 = 401
refine.2 = 401
k = 8
"#;

const EX1_BOTTOMLESS: &str = r#"
dimension = 2
case = "sum"
phi.1 = "x^2/2"
phi.2 = "-y^2/2"
lambda = "auto"
epsilon = 2
tie = "-0.5*(x*y)^2"
domain.1 = 7
domain.2 = 7
grid.1 = 201
grid.2 = 201
k = 8
"#;

// psi0 only reaches exp(-18) on the box faces at this size
const EX2_OSCILLATOR: &str = r#"
dimension = 3
case = "product"
phi.1 = "x"
phi.2 = "y"
phi.3 = "z"
lambda = "auto"
epsilon = 3
tie = "none"
domain.1 = 6
domain.2 = 6
domain.3 = 6
grid.1 = 61
grid.2 = 61
grid.3 = 61
k = 20
threshold.boundary_decay = 10
threshold.fd_residual = 0.05
threshold.level = 0.05
"#;

const EX2_QES: &str = r#"
dimension = 3
case = "product"
phi.1 = "x"
phi.2 = "y"
phi.3 = "z"
lambda.1 = 0
lambda.2 = 0
lambda.3 = 0
epsilon = 3
tie = "0.02*(2*x^2 - y^2 - z^2)^2"
domain.1 = 5
domain.2 = 5
domain.3 = 5
grid.1 = 61
grid.2 = 61
grid.3 = 61
k = 10
threshold.boundary_decay = 10
threshold.fd_residual = 0.05
threshold.level = 0.05
threshold.overlap0 = 0.99
threshold.overlap1 = 0.99
"#;

// -ln|xy| keeps F real in every quadrant; an even point count keeps the
// axes, where it diverges, off the grid
const EX1_SINGULAR_TIE: &str = r#"
dimension = 2
case = "sum"
phi.1 = "x^2/2"
phi.2 = "-y^2/2"
lambda = "auto"
epsilon = 2
tie = "-0.5*ln(x^2*y^2)"
allow_singular_tie = true
domain.1 = 7
domain.2 = 7
grid.1 = 200
grid.2 = 200
k = 12
"#;

pub fn presets() -> Vec<Preset> {
    vec![
        Preset {
            name: "ex1-oscillator",
            description: "2D sum case with no tie: the isotropic oscillator shifted so that E0 = 0",
            source: EX1_OSCILLATOR,
            expected: Expected {
                levels: vec![0.0, 1.0, 1.0, 2.0, 2.0, 2.0],
                level_tolerance: 2e-2,
                known_levels: true,
                overlap: Some(0.999),
                exit_code: 0,
                failing: vec![],
                not_applicable: vec![],
            },
        },
        Preset {
            name: "ex1-qes",
            description: "2D sum case with tie 0.5*(x*y)^2: nonseparable, levels 0 and 2 known",
            source: EX1_QES,
            expected: Expected {
                levels: vec![0.0],
                level_tolerance: 2e-2,
                known_levels: true,
                overlap: Some(0.999),
                exit_code: 0,
                failing: vec![],
                not_applicable: vec![],
            },
        },
        Preset {
            name: "ex1-bottomless",
            description: "2D sum case with tie -0.5*(x*y)^2: V is unbounded below and psi0 is not normalizable",
            source: EX1_BOTTOMLESS,
            expected: Expected {
                levels: vec![],
                level_tolerance: 2e-2,
                known_levels: false,
                overlap: None,
                exit_code: 1,
                failing: vec!["normalizability"],
                not_applicable: vec![],
            },
        },
        Preset {
            name: "ex2-oscillator",
            description: "3D product case phi = xyz with no tie: psi1 sits in the third excited level",
            source: EX2_OSCILLATOR,
            expected: Expected {
                levels: vec![0.0, 1.0, 1.0, 1.0, 2.0],
                level_tolerance: 5e-2,
                known_levels: true,
                overlap: Some(0.999),
                exit_code: 0,
                failing: vec![],
                not_applicable: vec![],
            },
        },
        Preset {
            name: "ex2-qes",
            description: "3D product case with tie 0.02*(2x^2-y^2-z^2)^2: nonseparable, levels 0 and 3 known",
            source: EX2_QES,
            expected: Expected {
                levels: vec![0.0],
                level_tolerance: 5e-2,
                known_levels: true,
                overlap: Some(0.99),
                exit_code: 0,
                failing: vec![],
                not_applicable: vec![],
            },
        },
        Preset {
            name: "ex1-singular-tie",
            description: "2D sum case with tie -ln|xy|: V = r^2/2 - 3 and psi0 = |xy| exp(-r^2/2) is an excited state",
            source: EX1_SINGULAR_TIE,
            expected: Expected {
                levels: vec![-2.0, -1.0, -1.0, 0.0, 0.0, 0.0],
                level_tolerance: 2e-2,
                known_levels: true,
                overlap: None,
                exit_code: 0,
                failing: vec![],
                not_applicable: vec!["nodeless", "normalizability"],
            },
        },
    ]
}

pub fn names() -> Vec<&'static str> {
    presets().iter().map(|p| p.name).collect()
}

pub fn find(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

/// One line of the comparison against the expected outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub what: String,
    pub ok: bool,
}

/// Compares a finished run with the preset's expectations.
pub fn compare(expected: &Expected, report: &VerificationReport, exit_code: i32) -> Vec<Comparison> {
    let mut out = Vec::new();
    for (i, want) in expected.levels.iter().enumerate() {
        let got = report.spectrum.get(i).copied();
        out.push(Comparison {
            what: format!("level {i}: expected {want}, got {}", got.map_or("none".into(), |g| g.to_string())),
            ok: got.is_some_and(|g| (g - want).abs() <= expected.level_tolerance),
        });
    }
    if expected.known_levels {
        for (name, got, want) in [("E0", report.spectral_e0, report.e0), ("E1", report.spectral_e1, report.e1)] {
            out.push(Comparison {
                what: format!("{name}: expected {want}, got {}", got.map_or("none".into(), |g| g.to_string())),
                ok: got.is_some_and(|g| (g - want).abs() <= expected.level_tolerance),
            });
        }
    }
    if let Some(min) = expected.overlap {
        for (name, got) in [("overlap0", report.overlap0), ("overlap1", report.overlap1)] {
            out.push(Comparison {
                what: format!("{name}: expected >= {min}, got {}", got.map_or("none".into(), |g| g.to_string())),
                ok: got.is_some_and(|g| g >= min),
            });
        }
    }
    for name in &expected.failing {
        let v = report.verdicts.get(name);
        out.push(Comparison {
            what: format!("{name}: expected fail, got {v:?}"),
            ok: v == Some(Verdict::Fail),
        });
    }
    for name in &expected.not_applicable {
        let v = report.verdicts.get(name);
        out.push(Comparison {
            what: format!("{name}: expected not applicable, got {v:?}"),
            ok: v == Some(Verdict::NotApplicable),
        });
    }
    out.push(Comparison {
        what: format!("exit code: expected {}, got {exit_code}", expected.exit_code),
        ok: expected.exit_code == exit_code,
    });
    out
}
