//! Independent numerical checks of a constructed model and the JSON report
//! that aggregates them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{discretize, Grid, GridError, GridSpec, SparseOperator};
use crate::model::{ModelError, QesModel};
use crate::sampling::halton;
use crate::spectral::{
    clusters, lowest_eigenpairs_with, subspace_overlap, EigenPair, LanczosOptions, SpectralError,
    SymmetricOperator, Target, MAX_PAIRS,
};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("grid has {grid} axes but the model has {model}")]
    DimensionMismatch { grid: usize, model: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
    NotApplicable,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Thresholds {
    pub master_equation: f64,
    pub tie_orthogonality: f64,
    /// Minimum of `F − F(anchor)` on the box boundary.
    pub boundary_decay: f64,
    pub fd_residual: f64,
    pub fd_ratio_min: f64,
    pub fd_ratio_max: f64,
    pub orthogonality: f64,
    /// Allowed distance of the computed levels from 0 and ε.
    pub level: f64,
    pub overlap0: f64,
    pub overlap1: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            master_equation: 1e-9,
            tie_orthogonality: 1e-9,
            boundary_decay: 1e10_f64.ln(),
            fd_residual: 5e-3,
            fd_ratio_min: 3.0,
            fd_ratio_max: 5.0,
            orthogonality: 1e-4,
            level: 2e-2,
            overlap0: 0.999,
            overlap1: 0.999,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub grid: GridSpec,
    /// Finer grid for the two-level convergence check of the FD residuals.
    pub refine: Option<GridSpec>,
    /// Minimum number of eigenpairs; the solver continues past ε anyway.
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    pub block: usize,
    /// Half-width of the eigenvalue windows around 0 and ε.
    pub window: f64,
    pub master_samples: usize,
    pub thresholds: Thresholds,
}

impl VerifySettings {
    pub fn new(grid: GridSpec) -> Self {
        let block = 2 * grid.points.len();
        Self {
            grid,
            refine: None,
            k: 8,
            tol: 1e-8,
            seed: 1,
            block,
            window: 5e-2,
            master_samples: 500,
            thresholds: Thresholds::default(),
        }
    }
}

/// Sampled exponent and states on a grid, with per-axis caching.
pub struct SampledStates {
    /// `F` at every interior node.
    pub f: Vec<f64>,
    pub psi0: Vec<f64>,
    pub psi1: Vec<f64>,
}

fn axis_values(model: &QesModel, grid: &Grid) -> Result<Vec<Vec<f64>>, ModelError> {
    (0..grid.dimension())
        .map(|axis| {
            (0..grid.spec().points[axis])
                .map(|j| model.f_axis(axis, grid.node(axis, j)))
                .collect()
        })
        .collect()
}

/// Samples `F`, `ψ0` and `ψ1` at the interior nodes. Points where `F`
/// cannot be evaluated (singular ties) get `F = +∞` and zero states.
pub fn sample_states(model: &QesModel, grid: &Grid) -> Result<SampledStates, ModelError> {
    let axes = axis_values(model, grid)?;
    let n = grid.dimension();
    let mut mi = vec![0usize; n];
    let mut p = vec![0.0; n];
    let m = grid.len();
    let mut out = SampledStates {
        f: Vec::with_capacity(m),
        psi0: Vec::with_capacity(m),
        psi1: Vec::with_capacity(m),
    };
    for idx in 0..m {
        grid.multi_index(idx, &mut mi);
        let mut f = 0.0;
        for axis in 0..n {
            p[axis] = grid.node(axis, mi[axis] + 1);
            f += axes[axis][mi[axis] + 1];
        }
        let f = match model.tie_value(&p) {
            Ok(t) if t.is_finite() => f + t,
            Ok(_) | Err(_) if model.allows_singular_tie() => f64::INFINITY,
            Ok(_) => return Err(ModelError::SingularF { point: p.clone() }),
            Err(e) => return Err(e),
        };
        let psi0 = (-f).exp();
        out.f.push(f);
        out.psi0.push(psi0);
        out.psi1.push(if psi0 == 0.0 { 0.0 } else { model.phi(&p)? * psi0 });
    }
    Ok(out)
}

/// Master-equation residual `max |2(∇F,∇φ) − Δφ − 2εφ| / (1 + |2εφ|)`.
/// Points where evaluation fails are skipped for singular ties.
pub fn check_master_equation(model: &QesModel, samples: &[Vec<f64>]) -> Result<f64, ModelError> {
    max_over(model, samples, |p| model.master_residual(p))
}

/// `max |(∇f̃, ∇φ)| / (1 + |∇f̃||∇φ|)` over the samples.
pub fn check_tie_orthogonality(model: &QesModel, samples: &[Vec<f64>]) -> Result<f64, ModelError> {
    max_over(model, samples, |p| model.tie_residual(p))
}

fn max_over(
    model: &QesModel,
    samples: &[Vec<f64>],
    f: impl Fn(&[f64]) -> Result<f64, ModelError>,
) -> Result<f64, ModelError> {
    let mut worst = 0.0_f64;
    for p in samples {
        match f(p) {
            Ok(r) => worst = worst.max(r),
            Err(_) if model.allows_singular_tie() => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(worst)
}

/// Quasi-random validation points inside the model's domain box.
pub fn validation_samples(model: &QesModel, count: usize) -> Vec<Vec<f64>> {
    let d = model.domain();
    halton(&d.lo, &d.hi, count, 7)
}

/// `‖(A − E)ψ‖_∞ / ‖ψ‖_∞` for the sampled analytic state.
pub fn fd_residual(a: &SparseOperator, psi: &[f64], energy: f64) -> f64 {
    let mut y = vec![0.0; psi.len()];
    a.apply(psi, &mut y);
    let num = y
        .iter()
        .zip(psi)
        .map(|(y, x)| (y - energy * x).abs())
        .fold(0.0, f64::max);
    let den = psi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    num / den
}

/// FD residual of state 0 or 1 on `grid`.
pub fn check_fd_residual(model: &QesModel, grid: &Grid, state: u8) -> Result<f64, VerifyError> {
    let a = discretize(model, grid)?;
    let s = sample_states(model, grid)?;
    Ok(match state {
        0 => fd_residual(&a, &s.psi0, model.e0()),
        _ => fd_residual(&a, &s.psi1, model.e1()),
    })
}

/// `|⟨ψ0, ψ1⟩| / (‖ψ0‖ ‖ψ1‖)` by grid quadrature.
pub fn orthogonality(psi0: &[f64], psi1: &[f64]) -> f64 {
    let dot: f64 = psi0.iter().zip(psi1).map(|(a, b)| a * b).sum();
    let n0: f64 = psi0.iter().map(|a| a * a).sum();
    let n1: f64 = psi1.iter().map(|a| a * a).sum();
    dot.abs() / (n0 * n1).sqrt()
}

pub fn check_orthogonality(model: &QesModel, grid: &Grid) -> Result<f64, ModelError> {
    let s = sample_states(model, grid)?;
    Ok(orthogonality(&s.psi0, &s.psi1))
}

/// Minimum of `F − F(anchor)` over the boundary nodes of `grid`.
pub fn check_normalizability(model: &QesModel, grid: &Grid) -> Result<f64, ModelError> {
    let axes = axis_values(model, grid)?;
    let base = model.f(&model.anchor_point())?;
    let n = grid.dimension();
    let points = &grid.spec().points;
    let mut j = vec![0usize; n];
    let mut p = vec![0.0; n];
    let mut worst = f64::INFINITY;
    loop {
        if j.iter().zip(points).any(|(&ji, &ni)| ji == 0 || ji == ni - 1) {
            let mut f = 0.0;
            for axis in 0..n {
                p[axis] = grid.node(axis, j[axis]);
                f += axes[axis][j[axis]];
            }
            let f = f + model.tie_value(&p)?;
            worst = worst.min(f - base);
        }
        let mut axis = n;
        loop {
            if axis == 0 {
                return Ok(worst);
            }
            axis -= 1;
            j[axis] += 1;
            if j[axis] < points[axis] {
                break;
            }
            j[axis] = 0;
        }
    }
}

/// `ψ0 = e^{−F} > 0` at every interior node, decided from `F` being finite
/// so that deep decay does not read as a node.
pub fn check_nodeless(model: &QesModel, grid: &Grid) -> bool {
    let mut ok = true;
    let _ = grid.sample(|p| {
        match model.f(p) {
            Ok(f) if f.is_finite() => {}
            _ => ok = false,
        }
        Ok::<f64, ()>(0.0)
    });
    ok
}

/// Position of a level in the computed spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelIndex {
    /// Eigenvalues below the window.
    pub state: usize,
    /// Distinct levels below the window.
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralOutcome {
    pub pairs: Vec<EigenPair>,
    pub e0: Option<f64>,
    pub e1: Option<f64>,
    pub overlap0: Option<f64>,
    pub overlap1: Option<f64>,
    pub index0: LevelIndex,
    pub index1: LevelIndex,
    pub half_width: f64,
    pub notes: Vec<String>,
}

fn nearest(pairs: &[EigenPair], target: f64, half: f64) -> Option<f64> {
    pairs
        .iter()
        .map(|p| p.value)
        .filter(|v| (v - target).abs() <= half)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

fn level_index(values: &[f64], target: f64, half: f64) -> LevelIndex {
    let below: Vec<f64> = values.iter().copied().filter(|v| *v < target - half).collect();
    // levels closer than the window are counted once
    let mut level = 0;
    let mut last: Option<f64> = None;
    for v in &below {
        if last.map_or(true, |l| v - l > half) {
            level += 1;
        }
        last = Some(*v);
    }
    LevelIndex {
        state: below.len(),
        level,
    }
}

/// Lowest eigenpairs up to `ε + window`, the computed levels nearest 0 and ε,
/// and the projections of the sampled states onto the windows around them.
pub fn spectral_verify(
    model: &QesModel,
    a: &SparseOperator,
    states: Option<&SampledStates>,
    settings: &VerifySettings,
) -> Result<SpectralOutcome, SpectralError> {
    let eps = model.epsilon();
    let tol_abs = settings.tol * a.norm_estimate();
    let half = (5.0 * tol_abs).max(settings.window);
    let opts = LanczosOptions {
        tol: settings.tol,
        seed: settings.seed,
        block: settings.block,
        ..LanczosOptions::default()
    };
    let max = MAX_PAIRS.min(a.dimension());
    let target = Target::Below {
        ceiling: eps + half,
        min: settings.k.min(max),
        max,
    };
    let pairs = lowest_eigenpairs_with(a, target, &opts)?;
    let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    let mut notes = Vec::new();
    let top = values.last().copied().unwrap_or(f64::NEG_INFINITY);
    let e0 = nearest(&pairs, model.e0(), half);
    let e1 = nearest(&pairs, eps, half);
    if e1.is_none() && top < eps - half {
        notes.push(format!(
            "spectrum computed only up to {top}, below the window around {eps}"
        ));
    }
    let (mut overlap0, mut overlap1) = (None, None);
    if let Some(s) = states {
        for (slot, psi, center) in [(&mut overlap0, &s.psi0, 0.0), (&mut overlap1, &s.psi1, eps)] {
            match subspace_overlap(psi, &pairs, (center - half, center + half)) {
                Ok(o) => *slot = Some(o),
                Err(SpectralError::EmptyWindow { lo, hi }) => {
                    notes.push(format!("missing level: no eigenvalue in [{lo}, {hi}]"))
                }
                Err(e) => notes.push(e.to_string()),
            }
        }
    }
    log::info!("lowest eigenvalues {:?}", &values);
    log::debug!("clusters {:?}", clusters(&values));
    Ok(SpectralOutcome {
        index0: level_index(&values, 0.0, half),
        index1: level_index(&values, eps, half),
        pairs,
        e0,
        e1,
        overlap0,
        overlap1,
        half_width: half,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdicts {
    pub master_equation: Verdict,
    pub tie_orthogonality: Verdict,
    pub normalizability: Verdict,
    pub nodeless: Verdict,
    pub fd_residual0: Verdict,
    pub fd_residual1: Verdict,
    pub fd_convergence: Verdict,
    pub orthogonality: Verdict,
    pub ground_state: Verdict,
    pub levels: Verdict,
    pub overlap0: Verdict,
    pub overlap1: Verdict,
}

impl Verdicts {
    fn all(v: Verdict) -> Self {
        Self {
            master_equation: v,
            tie_orthogonality: v,
            normalizability: v,
            nodeless: v,
            fd_residual0: v,
            fd_residual1: v,
            fd_convergence: v,
            orthogonality: v,
            ground_state: v,
            levels: v,
            overlap0: v,
            overlap1: v,
        }
    }

    fn iter(&self) -> impl Iterator<Item = Verdict> {
        [
            self.master_equation,
            self.tie_orthogonality,
            self.normalizability,
            self.nodeless,
            self.fd_residual0,
            self.fd_residual1,
            self.fd_convergence,
            self.orthogonality,
            self.ground_state,
            self.levels,
            self.overlap0,
            self.overlap1,
        ]
        .into_iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub dimension: usize,
    pub epsilon: f64,
    pub e0: f64,
    pub e1: f64,
    pub lambda: Vec<f64>,
    pub grid: Vec<usize>,
    pub box_half_extent: Vec<f64>,
    pub master_eq_residual: Option<f64>,
    pub tie_orthogonality_residual: Option<f64>,
    pub boundary_decay: Option<f64>,
    pub nodeless0: Option<bool>,
    pub fd_residual0: Option<f64>,
    pub fd_residual1: Option<f64>,
    pub fd_ratio0: Option<f64>,
    pub fd_ratio1: Option<f64>,
    pub orthogonality01: Option<f64>,
    pub spectral_e0: Option<f64>,
    pub spectral_e1: Option<f64>,
    pub overlap0: Option<f64>,
    pub overlap1: Option<f64>,
    pub window_half_width: Option<f64>,
    pub spectrum: Vec<f64>,
    pub level_index0: Option<LevelIndex>,
    pub level_index1: Option<LevelIndex>,
    pub thresholds: Thresholds,
    pub verdicts: Verdicts,
    pub passed: bool,
    pub notes: Vec<String>,
}

/// Check names as they appear in the report, in gating order.
pub const CHECK_NAMES: [&str; 12] = [
    "masterEquation",
    "tieOrthogonality",
    "normalizability",
    "nodeless",
    "fdResidual0",
    "fdResidual1",
    "fdConvergence",
    "orthogonality",
    "groundState",
    "levels",
    "overlap0",
    "overlap1",
];

impl Verdicts {
    /// Verdict of the check called `name` in the report.
    pub fn get(&self, name: &str) -> Option<Verdict> {
        CHECK_NAMES.iter().zip(self.iter()).find(|(n, _)| **n == name).map(|(_, v)| v)
    }
}

impl VerificationReport {
    /// Failed check names in gating order.
    pub fn failures(&self) -> Vec<&'static str> {
        CHECK_NAMES
            .into_iter()
            .zip(self.verdicts.iter())
            .filter(|(_, v)| *v == Verdict::Fail)
            .map(|(n, _)| n)
            .collect()
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Runs every check in gating order and records the outcome. Check failures
/// never abort the run; only an unusable grid specification does.
pub fn full_report(model: &QesModel, settings: &VerifySettings) -> Result<VerificationReport, VerifyError> {
    let grid = Grid::new(settings.grid.clone())?;
    if grid.dimension() != model.dimension() {
        return Err(VerifyError::DimensionMismatch {
            grid: grid.dimension(),
            model: model.dimension(),
        });
    }
    let refine = settings.refine.clone().map(Grid::new).transpose()?;
    let th = settings.thresholds.clone();
    let singular = model.allows_singular_tie();
    let mut report = VerificationReport {
        dimension: model.dimension(),
        epsilon: model.epsilon(),
        e0: model.e0(),
        e1: model.e1(),
        lambda: model.set().lambda().to_vec(),
        grid: settings.grid.points.clone(),
        box_half_extent: settings.grid.half.clone(),
        master_eq_residual: None,
        tie_orthogonality_residual: None,
        boundary_decay: None,
        nodeless0: None,
        fd_residual0: None,
        fd_residual1: None,
        fd_ratio0: None,
        fd_ratio1: None,
        orthogonality01: None,
        spectral_e0: None,
        spectral_e1: None,
        overlap0: None,
        overlap1: None,
        window_half_width: None,
        spectrum: Vec::new(),
        level_index0: None,
        level_index1: None,
        thresholds: th.clone(),
        verdicts: Verdicts::all(Verdict::Skipped),
        passed: false,
        notes: Vec::new(),
    };
    let v = &mut report.verdicts;
    let samples = validation_samples(model, settings.master_samples);

    match check_master_equation(model, &samples) {
        Ok(r) => {
            report.master_eq_residual = finite(r);
            v.master_equation = Verdict::from_bool(r <= th.master_equation);
        }
        Err(e) => {
            v.master_equation = Verdict::Fail;
            report.notes.push(format!("master equation: {e}"));
        }
    }
    match check_tie_orthogonality(model, &samples) {
        Ok(r) => {
            report.tie_orthogonality_residual = finite(r);
            v.tie_orthogonality = Verdict::from_bool(r <= th.tie_orthogonality);
        }
        Err(e) => {
            v.tie_orthogonality = Verdict::Fail;
            report.notes.push(format!("tie orthogonality: {e}"));
        }
    }
    if v.master_equation == Verdict::Fail || v.tie_orthogonality == Verdict::Fail {
        report.passed = false;
        return Ok(report);
    }

    if singular {
        for slot in [
            &mut v.normalizability,
            &mut v.nodeless,
            &mut v.fd_residual0,
            &mut v.fd_residual1,
            &mut v.fd_convergence,
            &mut v.orthogonality,
            &mut v.ground_state,
            &mut v.overlap0,
            &mut v.overlap1,
        ] {
            *slot = Verdict::NotApplicable;
        }
        report
            .notes
            .push("singular tie: psi0 may have nodes, level indices are measured only".into());
    } else {
        match check_normalizability(model, &grid) {
            Ok(d) => {
                report.boundary_decay = finite(d);
                v.normalizability = Verdict::from_bool(d >= th.boundary_decay);
            }
            Err(e) => {
                v.normalizability = Verdict::Fail;
                report.notes.push(format!("normalizability: {e}"));
            }
        }
        if v.normalizability == Verdict::Fail {
            report.passed = false;
            return Ok(report);
        }
        let nodeless = check_nodeless(model, &grid);
        report.nodeless0 = Some(nodeless);
        v.nodeless = Verdict::from_bool(nodeless);
    }

    let a = match discretize(model, &grid) {
        Ok(a) => a,
        Err(e) => {
            report.notes.push(format!("discretization: {e}"));
            v.levels = Verdict::Fail;
            report.passed = false;
            return Ok(report);
        }
    };
    let states = if singular {
        None
    } else {
        match sample_states(model, &grid) {
            Ok(s) => Some(s),
            Err(e) => {
                report.notes.push(format!("sampling: {e}"));
                v.fd_residual0 = Verdict::Fail;
                None
            }
        }
    };

    if let Some(s) = &states {
        let r0 = fd_residual(&a, &s.psi0, model.e0());
        let r1 = fd_residual(&a, &s.psi1, model.e1());
        report.fd_residual0 = finite(r0);
        report.fd_residual1 = finite(r1);
        v.fd_residual0 = Verdict::from_bool(r0 <= th.fd_residual);
        v.fd_residual1 = Verdict::from_bool(r1 <= th.fd_residual);
        let o = orthogonality(&s.psi0, &s.psi1);
        report.orthogonality01 = finite(o);
        v.orthogonality = Verdict::from_bool(o <= th.orthogonality);
        v.fd_convergence = Verdict::NotApplicable;
        if let Some(fine) = &refine {
            let fine_res = discretize(model, fine)
                .map_err(|e| e.to_string())
                .and_then(|af| {
                    let sf = sample_states(model, fine).map_err(|e| e.to_string())?;
                    Ok((fd_residual(&af, &sf.psi0, model.e0()), fd_residual(&af, &sf.psi1, model.e1())))
                });
            match fine_res {
                Ok((f0, f1)) => {
                    let (q0, q1) = (r0 / f0, r1 / f1);
                    report.fd_ratio0 = finite(q0);
                    report.fd_ratio1 = finite(q1);
                    let within = |q: f64| (th.fd_ratio_min..=th.fd_ratio_max).contains(&q);
                    v.fd_convergence = Verdict::from_bool(within(q0) && within(q1));
                }
                Err(e) => {
                    report.notes.push(format!("refined grid: {e}"));
                    v.fd_convergence = Verdict::Fail;
                }
            }
        }
    }

    match spectral_verify(model, &a, states.as_ref(), settings) {
        Ok(out) => {
            report.spectrum = out.pairs.iter().map(|p| p.value).collect();
            report.spectral_e0 = out.e0;
            report.spectral_e1 = out.e1;
            report.window_half_width = Some(out.half_width);
            report.level_index0 = Some(out.index0);
            report.level_index1 = Some(out.index1);
            report.notes.extend(out.notes);
            let near = |e: Option<f64>, target: f64| e.is_some_and(|e| (e - target).abs() <= th.level);
            v.levels = Verdict::from_bool(near(out.e0, model.e0()) && near(out.e1, model.e1()));
            if !singular {
                report.overlap0 = out.overlap0;
                report.overlap1 = out.overlap1;
                v.overlap0 = Verdict::from_bool(out.overlap0.is_some_and(|o| o >= th.overlap0));
                v.overlap1 = Verdict::from_bool(out.overlap1.is_some_and(|o| o >= th.overlap1));
                if v.nodeless == Verdict::Pass {
                    // a nodeless state must sit at the bottom of the spectrum
                    let lowest = report.spectrum.first().copied();
                    v.ground_state = Verdict::from_bool(
                        lowest.is_some_and(|l| (l - model.e0()).abs() <= out.half_width),
                    );
                } else {
                    v.ground_state = Verdict::Skipped;
                }
            }
        }
        Err(e) => {
            report.notes.push(format!("spectral: {e}"));
            v.levels = Verdict::Fail;
        }
    }
    report.passed = !report.verdicts.iter().any(|v| v == Verdict::Fail);
    Ok(report)
}
