//! Thick-restart block Lanczos with full reorthogonalization.
//!
//! The basis `V` is kept orthonormal explicitly, the projected matrix
//! `T = VᵀAV` is assembled from the orthogonalization coefficients, and the
//! pending block `P` closes the relation `AV = VT + PC`. The residual of a
//! Ritz pair `(θ, Vs)` is then `‖Cs‖`, available without extra products.

use nalgebra::DMatrix;

use super::{axpy, cluster_tolerance, dot, norm, symmetric_eigen, EigenPair, SpectralError, SymmetricOperator, MAX_PAIRS};
use crate::sampling::Lcg;

/// Below this size the operator is diagonalized densely.
const DENSE_FALLBACK: usize = 128;

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Relative residual tolerance; pairs satisfy `‖Av − θv‖ ≤ tol ‖A‖_est`.
    pub tol: f64,
    pub seed: u64,
    pub block: usize,
    /// Cap on operator applications per solve.
    pub max_applications: usize,
    /// Re-run on the deflated operator to catch eigenvalues missed because
    /// of multiplicities larger than the block.
    pub confirm: bool,
    /// Run Lanczos on a Chebyshev filter of large operators.
    pub filter: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 1,
            block: 4,
            max_applications: 2_000_000,
            confirm: true,
            filter: true,
        }
    }
}

/// What to converge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// The `k` lowest eigenpairs.
    Count(usize),
    /// Every eigenpair up to `ceiling` plus the first one above it, at least
    /// `min` and at most `max` pairs in total.
    Below { ceiling: f64, min: usize, max: usize },
}

/// Lowest eigenpairs of `a` according to `target`, ascending.
pub fn lowest_eigenpairs_with<A: SymmetricOperator + ?Sized>(
    a: &A,
    target: Target,
    opts: &LanczosOptions,
) -> Result<Vec<EigenPair>, SpectralError> {
    let m = a.dim();
    let max = match target {
        Target::Count(k) => k,
        Target::Below { max, .. } => max,
    };
    if max == 0 || max > m.min(MAX_PAIRS) {
        return Err(SpectralError::InvalidRequest(format!(
            "asked for up to {max} pairs of a {m}-dimensional operator (limit {MAX_PAIRS})"
        )));
    }
    if !(opts.tol >= 1e-12) || opts.block == 0 {
        return Err(SpectralError::InvalidRequest(format!(
            "tolerance {} and block {} not allowed",
            opts.tol, opts.block
        )));
    }
    if m <= DENSE_FALLBACK {
        return Ok(dense_fallback(a, target));
    }
    let tol_abs = opts.tol * a.norm_estimate().max(f64::MIN_POSITIVE);
    let b = opts.block.min(m / 4).max(1);
    if opts.filter && m > FILTER_MIN_DIM {
        return filtered(a, target, opts, b, tol_abs);
    }
    let mut run = Run::new(a, b, tol_abs, opts);
    let pairs = run.solve_confirmed(target, opts.confirm)?;
    log::debug!("{} operator applications", run.applications);
    // locked vectors carry their residual into later ones; one joint
    // projection restores second-order accuracy of the values
    Ok(rayleigh_ritz(a, pairs.into_iter().map(|p| p.vector).collect()))
}

/// Problems above this size go through the polynomial filter.
const FILTER_MIN_DIM: usize = 4000;

/// `−T_d((A − center) / half)` with even `d`. On `[center − half,
/// center + half]` its values lie in `[−1, 1]`; below that interval it is
/// increasing and below `−1`, so the lowest eigenpairs keep their order.
struct Filter<'a, A: ?Sized> {
    a: &'a A,
    degree: usize,
    center: f64,
    half: f64,
    /// Estimate of the lowest eigenvalue of `a`.
    bottom: f64,
    scratch: std::cell::RefCell<[Vec<f64>; 3]>,
}

impl<A: SymmetricOperator + ?Sized> Filter<'_, A> {
    fn value(&self, x: f64) -> f64 {
        let t = (x - self.center) / self.half;
        let (mut y0, mut y1) = (1.0, t);
        for _ in 1..self.degree {
            let y2 = 2.0 * t * y1 - y0;
            y0 = y1;
            y1 = y2;
        }
        -y1
    }
}

impl<A: SymmetricOperator + ?Sized> SymmetricOperator for Filter<'_, A> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut s = self.scratch.borrow_mut();
        let [prev, cur, tmp] = &mut *s;
        let scale = 1.0 / self.half;
        prev.copy_from_slice(x);
        self.a.apply(x, cur);
        for (c, xi) in cur.iter_mut().zip(x) {
            *c = (*c - self.center * xi) * scale;
        }
        for _ in 1..self.degree {
            self.a.apply(cur, tmp);
            for ((t, c), p) in tmp.iter_mut().zip(cur.iter()).zip(prev.iter()) {
                *t = 2.0 * (*t - self.center * c) * scale - p;
            }
            std::mem::swap(prev, cur);
            std::mem::swap(cur, tmp);
        }
        for (yi, c) in y.iter_mut().zip(cur.iter()) {
            *yi = -c;
        }
    }

    fn norm_estimate(&self) -> f64 {
        self.value(self.bottom).abs().max(1.0)
    }
}

/// Lanczos on a Chebyshev filter of `a`, followed by Rayleigh–Ritz with `a`
/// itself on the converged subspace.
fn filtered<A: SymmetricOperator + ?Sized>(
    a: &A,
    target: Target,
    opts: &LanczosOptions,
    b: usize,
    tol_abs: f64,
) -> Result<Vec<EigenPair>, SpectralError> {
    let m = a.dim();
    let upper = a.norm_estimate();
    let mut pilot = Run::new(a, b, tol_abs, opts);
    let want = |theta: &[f64]| match target {
        Target::Count(k) => k,
        Target::Below { ceiling, min, .. } => theta.iter().filter(|&&t| t <= ceiling).count().max(min),
    };
    let cut_from = |theta: &[f64]| {
        let mut cut = theta[(want(theta) + 2 * b).min(theta.len() - 1)];
        if let Target::Below { ceiling, .. } = target {
            cut = cut.max(ceiling + 0.25 * (ceiling - theta[0]).abs() + cluster_tolerance(ceiling));
        }
        cut
    };
    let make = |cut: f64, theta0: f64| {
        let spread = (upper - cut).max(f64::MIN_POSITIVE);
        let gap = (cut - theta0).max(1e-9 * spread);
        // keep the gain at the bottom of the spectrum below about 1e4
        let t = 1.0 + 2.0 * gap / spread;
        let gain_cap = MAX_GAIN.ln() / (t + (t * t - 1.0).sqrt()).ln();
        let degree = (2.0 * (spread / gap).sqrt()).min(gain_cap).clamp(4.0, MAX_DEGREE as f64) as usize / 2 * 2;
        Filter {
            a,
            degree,
            center: 0.5 * (cut + upper),
            half: 0.5 * (upper - cut),
            bottom: theta0 - (cut - theta0),
            scratch: std::cell::RefCell::new([vec![0.0; m], vec![0.0; m], vec![0.0; m]]),
        }
    };
    let basis = pilot.krylov_basis(PILOT_DIM.min(m / 2));
    let mut block: Vec<Vec<f64>> = rayleigh_ritz(a, basis).into_iter().map(|p| p.vector).collect();
    let mut applications = pilot.applications;
    // Filtered subspace iteration on a block a little wider than the wanted
    // range. The largest Ritz value of the block bounds its eigenvalue from
    // above and only decreases, which makes it a safe cut.
    let mut theta: Vec<f64> = Vec::new();
    let mut width = 0;
    let mut cut = f64::INFINITY;
    for _pass in 0..MAX_WARMUP {
        let pairs = rayleigh_ritz(a, block);
        applications += pairs.len();
        theta = pairs.iter().map(|p| p.value).collect();
        let needed = (want(&theta) + 2 * b).min(m / 2);
        if width == 0 || needed > width {
            width = needed.min(theta.len().max(needed));
        }
        block = pairs.into_iter().map(|p| p.vector).take(width).collect();
        while block.len() < width {
            let v = pilot.random_unit(&block, &[], &[]);
            block.push(v);
        }
        let next = cut_from(&theta[..theta.len().min(width)]).min(cut);
        let settled = next - theta[0] > 0.95 * (cut - theta[0]);
        cut = next;
        if settled {
            break;
        }
        let filter = make(cut, theta[0]);
        let mut y = vec![0.0; m];
        for v in block.iter_mut() {
            filter.apply(v, &mut y);
            let n = norm(&y);
            v.iter_mut().zip(&y).for_each(|(x, yi)| *x = yi / n);
        }
        applications += block.len() * filter.degree;
        log::debug!("warmup cut {cut:.6} (degree {}, width {width})", filter.degree);
    }
    let filter = make(cut, theta[0]);
    let degree = filter.degree;
    let count = want(&theta);
    let inner_target = match target {
        Target::Count(k) => Target::Count(k),
        Target::Below { ceiling, min, max } => Target::Below {
            ceiling: filter.value(ceiling),
            min,
            max,
        },
    };
    // slope of the filter over the wanted range converts residuals
    let probe = theta[count.min(theta.len() - 1)].min(cut);
    let dx = 1e-3 * (cut - theta[0]).abs().max(1e-12);
    let slope = ((filter.value(probe + dx) - filter.value(probe - dx)) / (2.0 * dx)).abs();
    let fnorm = filter.norm_estimate();
    let mut inner_tol = (0.5 * tol_abs * slope).max(1e-14 * fnorm);
    log::debug!("filter degree {degree}, cut {cut:.6}, slope {slope:.3e}");
    for _attempt in 0..4 {
        let mut run = Run::new(&filter, b, inner_tol, opts);
        let found = run.solve_confirmed(inner_target, opts.confirm);
        applications += run.applications * degree;
        let found = found?;
        let mut pairs = rayleigh_ritz(a, found.into_iter().map(|p| p.vector).collect());
        if let Target::Below { ceiling, min, .. } = target {
            if let Some(first_above) = pairs.iter().position(|p| p.value > ceiling) {
                pairs.truncate((first_above + 1).max(min));
            }
        }
        if pairs.iter().all(|p| p.residual <= tol_abs) {
            log::debug!("{applications} operator applications");
            return Ok(pairs);
        }
        if applications >= opts.max_applications || inner_tol <= 1e-14 * fnorm {
            break;
        }
        inner_tol = (inner_tol * 1e-2).max(1e-14 * fnorm);
    }
    Err(SpectralError::NoConvergence {
        iterations: applications,
    })
}

const PILOT_DIM: usize = 80;
const MAX_DEGREE: usize = 200;
const MAX_GAIN: f64 = 1e4;
const MAX_WARMUP: usize = 60;

/// Orthonormalizes `vectors` and diagonalizes `a` on their span.
fn rayleigh_ritz<A: SymmetricOperator + ?Sized>(a: &A, mut vectors: Vec<Vec<f64>>) -> Vec<EigenPair> {
    let m = a.dim();
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        orthogonalize(&mut rest[0], done, &[]);
        let n = norm(&rest[0]);
        rest[0].iter_mut().for_each(|x| *x /= n);
    }
    let k = vectors.len();
    let av: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| {
            let mut y = vec![0.0; m];
            a.apply(v, &mut y);
            y
        })
        .collect();
    let h = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&vectors[i], &av[j]) + dot(&vectors[j], &av[i])));
    let (values, vecs) = symmetric_eigen(h);
    (0..k)
        .map(|c| {
            let mut y = vec![0.0; m];
            let mut ay = vec![0.0; m];
            for r in 0..k {
                let s = vecs[(r, c)];
                axpy(s, &vectors[r], &mut y);
                axpy(s, &av[r], &mut ay);
            }
            let value = values[c];
            let residual = ay
                .iter()
                .zip(&y)
                .map(|(p, q)| (p - value * q).powi(2))
                .sum::<f64>()
                .sqrt();
            EigenPair {
                value,
                vector: y,
                residual,
            }
        })
        .collect()
}

fn dense_fallback<A: SymmetricOperator + ?Sized>(a: &A, target: Target) -> Vec<EigenPair> {
    let m = a.dim();
    let mut dense = DMatrix::<f64>::zeros(m, m);
    let mut e = vec![0.0; m];
    let mut col = vec![0.0; m];
    for j in 0..m {
        e[j] = 1.0;
        a.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..m {
            dense[(i, j)] = col[i];
        }
    }
    let sym = (&dense + dense.transpose()) * 0.5;
    let (values, vectors) = symmetric_eigen(sym);
    let count = match target {
        Target::Count(k) => k,
        Target::Below { ceiling, min, max } => {
            let below = values.iter().filter(|&&v| v <= ceiling).count();
            (below + 1).max(min).min(max).min(m)
        }
    };
    (0..count)
        .map(|i| {
            let vector: Vec<f64> = vectors.column(i).iter().copied().collect();
            finish_pair(a, values[i], vector)
        })
        .collect()
}

fn finish_pair<A: SymmetricOperator + ?Sized>(a: &A, value: f64, mut vector: Vec<f64>) -> EigenPair {
    let n = norm(&vector);
    vector.iter_mut().for_each(|x| *x /= n);
    let mut av = vec![0.0; vector.len()];
    a.apply(&vector, &mut av);
    let residual = av
        .iter()
        .zip(&vector)
        .map(|(y, x)| (y - value * x).powi(2))
        .sum::<f64>()
        .sqrt();
    EigenPair {
        value,
        vector,
        residual,
    }
}

struct Run<'a, A: ?Sized> {
    a: &'a A,
    m: usize,
    b: usize,
    tol_abs: f64,
    rng: Lcg,
    applications: usize,
    max_applications: usize,
}

impl<'a, A: SymmetricOperator + ?Sized> Run<'a, A> {
    fn new(a: &'a A, b: usize, tol_abs: f64, opts: &LanczosOptions) -> Self {
        Self {
            a,
            m: a.dim(),
            b,
            tol_abs,
            rng: Lcg::new(opts.seed),
            applications: 0,
            max_applications: opts.max_applications,
        }
    }

    /// Solves, then re-runs on the deflated operator until nothing new
    /// turns up below the current top of the wanted range.
    fn solve_confirmed(&mut self, target: Target, confirm: bool) -> Result<Vec<EigenPair>, SpectralError> {
        let max = match target {
            Target::Count(k) => k,
            Target::Below { max, .. } => max,
        };
        let mut pairs = self.solve(target, &[])?;
        if !confirm {
            return Ok(pairs);
        }
        loop {
            let last = pairs.last().expect("at least one pair").value;
            let ceiling = match target {
                Target::Count(_) => last - cluster_tolerance(last),
                Target::Below { ceiling, min, .. } => {
                    let floor = pairs[min.min(pairs.len()) - 1].value;
                    if pairs.len() >= max {
                        last - cluster_tolerance(last)
                    } else {
                        ceiling.max(floor - cluster_tolerance(floor))
                    }
                }
            };
            if pairs.len() >= self.m {
                break;
            }
            let locked: Vec<&[f64]> = pairs.iter().map(|p| p.vector.as_slice()).collect();
            let extra = self.solve(Target::Count(1), &locked)?;
            let Some(found) = extra.into_iter().next() else { break };
            if found.value >= ceiling {
                break;
            }
            log::debug!("deflated run found a missed eigenvalue {}", found.value);
            pairs.push(found);
            pairs.sort_by(|x, y| x.value.total_cmp(&y.value));
            pairs.truncate(max);
        }
        if let Target::Below { ceiling, min, .. } = target {
            // keep only one pair above the ceiling
            if let Some(first_above) = pairs.iter().position(|p| p.value > ceiling) {
                pairs.truncate((first_above + 1).max(min));
            }
        }
        Ok(pairs)
    }

    /// Orthonormal basis of an unrestarted block Krylov space of about
    /// `dim` vectors.
    fn krylov_basis(&mut self, dim: usize) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut block: Vec<Vec<f64>> = Vec::new();
        for _ in 0..self.b {
            let v = self.random_unit(&basis, &block, &[]);
            block.push(v);
        }
        let breakdown = 1e-10 * self.a.norm_estimate().max(f64::MIN_POSITIVE);
        while basis.len() < dim && !block.is_empty() {
            let next: Vec<Vec<f64>> = block.iter().map(|v| self.apply(v)).collect();
            basis.append(&mut block);
            for mut w in next {
                orthogonalize(&mut w, &basis, &[]);
                orthogonalize(&mut w, &block, &[]);
                let n = norm(&w);
                if n > breakdown {
                    w.iter_mut().for_each(|x| *x /= n);
                    block.push(w);
                }
            }
        }
        basis
    }
}

/// Removes components along `basis` and `locked` from `w`, two passes when
/// the first one cancels most of the norm. Returns the coefficients along
/// `basis`.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], locked: &[&[f64]]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    let mut before = norm(w);
    for _pass in 0..2 {
        for v in locked {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
        let coef: Vec<f64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, &c) in basis.iter().zip(&coef) {
            axpy(-c, v, w);
        }
        for (hi, c) in h.iter_mut().zip(coef) {
            *hi += c;
        }
        let after = norm(w);
        if after > 0.7 * before {
            break;
        }
        before = after;
    }
    h
}

impl<A: SymmetricOperator + ?Sized> Run<'_, A> {
    fn random_unit(&mut self, basis: &[Vec<f64>], block: &[Vec<f64>], locked: &[&[f64]]) -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = (0..self.m).map(|_| self.rng.next_signed()).collect();
            orthogonalize(&mut v, basis, locked);
            orthogonalize(&mut v, block, &[]);
            let n = norm(&v);
            if n > 1e-8 * (self.m as f64).sqrt() {
                v.iter_mut().for_each(|x| *x /= n);
                return v;
            }
        }
    }

    fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        self.a.apply(x, &mut y);
        self.applications += 1;
        y
    }

    fn solve(&mut self, target: Target, locked: &[&[f64]]) -> Result<Vec<EigenPair>, SpectralError> {
        let b = self.b;
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut t = DMatrix::<f64>::zeros(0, 0);
        let mut pending: Vec<Vec<f64>> = Vec::with_capacity(b);
        for _ in 0..b {
            let v = self.random_unit(&basis, &pending, locked);
            pending.push(v);
        }
        let free_dim = self.m - locked.len();
        loop {
            let k0 = basis.len();
            let mut w: Vec<Vec<f64>> = pending.iter().map(|p| self.apply(p)).collect();
            basis.append(&mut pending);
            let k = basis.len();

            let mut t_new = DMatrix::<f64>::zeros(k, k);
            t_new.view_mut((0, 0), (k0, k0)).copy_from(&t);
            for (j, wj) in w.iter_mut().enumerate() {
                let h = orthogonalize(wj, &basis, locked);
                for (i, hi) in h.into_iter().enumerate() {
                    t_new[(i, k0 + j)] = hi;
                }
            }
            for j in k0..k {
                for i in 0..j {
                    let s = if i >= k0 {
                        0.5 * (t_new[(i, j)] + t_new[(j, i)])
                    } else {
                        t_new[(i, j)]
                    };
                    t_new[(i, j)] = s;
                    t_new[(j, i)] = s;
                }
            }
            t = t_new;

            // QR of the remainder block closes the Krylov relation
            let mut r = DMatrix::<f64>::zeros(b, b);
            let breakdown = 1e-12 * self.a.norm_estimate().max(f64::MIN_POSITIVE);
            for j in 0..b {
                let mut wj = std::mem::take(&mut w[j]);
                let coef = orthogonalize(&mut wj, &pending, &[]);
                for (i, c) in coef.into_iter().enumerate() {
                    r[(i, j)] = c;
                }
                let n = norm(&wj);
                let exhausted = k + pending.len() >= free_dim;
                if n > breakdown || exhausted {
                    if n == 0.0 {
                        break;
                    }
                    r[(j, j)] = n;
                    wj.iter_mut().for_each(|x| *x /= n);
                    pending.push(wj);
                } else {
                    let v = self.random_unit(&basis, &pending, locked);
                    pending.push(v);
                }
            }
            let mut coupling = DMatrix::<f64>::zeros(pending.len(), k);
            for i in 0..pending.len() {
                for j in 0..b {
                    coupling[(i, k0 + j)] = r[(i, j)];
                }
            }

            // Rayleigh–Ritz
            let (theta, s) = symmetric_eigen(t.clone());
            let cs = &coupling * &s;
            let resid: Vec<f64> = (0..k).map(|c| cs.column(c).norm()).collect();

            let invariant = pending.is_empty() || k >= free_dim;
            let (wanted, done) = match target {
                Target::Count(kk) => {
                    let nw = kk.min(k);
                    (nw, (k >= kk || invariant) && resid[..nw].iter().all(|&r| r <= self.tol_abs))
                }
                Target::Below { ceiling, min, max } => {
                    let below = theta.iter().filter(|&&x| x <= ceiling).count();
                    let nw = (below + 1).max(min).min(max).min(k);
                    let spans = nw == max || (theta[nw - 1] > ceiling && nw >= min) || invariant;
                    (nw, spans && resid[..nw].iter().all(|&r| r <= self.tol_abs))
                }
            };
            log::trace!(
                "dim {k}: lowest ritz {:?}",
                &theta[..wanted.min(6)]
            );
            if done || invariant {
                return Ok((0..wanted)
                    .map(|i| {
                        let mut y = vec![0.0; self.m];
                        for (c, v) in basis.iter().enumerate() {
                            axpy(s[(c, i)], v, &mut y);
                        }
                        self.applications += 1;
                        finish_pair(self.a, theta[i], y)
                    })
                    .collect());
            }
            if self.applications >= self.max_applications {
                return Err(SpectralError::NoConvergence {
                    iterations: self.applications,
                });
            }

            let cap = (4 * wanted).max(60).max(wanted + 3 * b);
            if k + b > cap {
                let keep = (wanted + b).max(cap / 2).min(cap - 2 * b).min(k);
                let mut new_basis = Vec::with_capacity(cap);
                for i in 0..keep {
                    let mut y = vec![0.0; self.m];
                    for (c, v) in basis.iter().enumerate() {
                        axpy(s[(c, i)], v, &mut y);
                    }
                    new_basis.push(y);
                }
                basis = new_basis;
                // the coupling to the pending block reappears as VᵀAP in the
                // next expansion
                t = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&theta[..keep]));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Grid, GridSpec, SparseOperator};
    use crate::spectral::dense_eigen_oracle;

    fn oscillator_1d(l: f64, n: usize) -> SparseOperator {
        let g = Grid::new(GridSpec::uniform(1, l, n)).unwrap();
        SparseOperator::from_potential(&g, |p| Ok::<_, ()>(0.5 * p[0] * p[0])).unwrap()
    }

    #[test]
    fn harmonic_ground_state() {
        let a = oscillator_1d(10.0, 401);
        let pairs = super::super::lowest_eigenpairs(&a, 3, 1e-10).unwrap();
        assert!((pairs[0].value - 0.5).abs() < 1e-3);
        assert!((pairs[1].value - 1.5).abs() < 2e-3);
        for p in &pairs {
            assert!(p.residual <= 1e-10 * a.norm_estimate() * 10.0);
            assert!((norm(&p.vector) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_dense_on_a_square_grid() {
        let g = Grid::new(GridSpec::uniform(2, 3.0, 22)).unwrap();
        let a = SparseOperator::from_potential(&g, |p| Ok::<_, ()>(0.5 * (p[0] * p[0] + p[1] * p[1]) + 0.3 * p[0] * p[1].powi(2))).unwrap();
        let dense = dense_eigen_oracle(&a).unwrap();
        let opts = LanczosOptions {
            tol: 1e-12,
            ..LanczosOptions::default()
        };
        let pairs = lowest_eigenpairs_with(&a, Target::Count(8), &opts).unwrap();
        for (p, d) in pairs.iter().zip(&dense) {
            assert!((p.value - d).abs() < 1e-10, "{} vs {d}", p.value);
        }
    }

    #[test]
    fn finds_full_degenerate_multiplets() {
        // free particle on a cube: multiplicities 1, 3, 3, 3, 1, 6, ...
        let g = Grid::new(GridSpec::uniform(3, 1.0, 10)).unwrap();
        let a = SparseOperator::from_potential_values(&g, &vec![0.0; g.len()]).unwrap();
        let dense = dense_eigen_oracle(&a).unwrap();
        let opts = LanczosOptions {
            tol: 1e-11,
            block: 2,
            ..LanczosOptions::default()
        };
        let pairs = lowest_eigenpairs_with(&a, Target::Count(20), &opts).unwrap();
        for (p, d) in pairs.iter().zip(&dense) {
            assert!((p.value - d).abs() < 1e-9, "{} vs {d}", p.value);
        }
    }

    #[test]
    fn filtered_path_matches_plain() {
        // 70² interior nodes, above the filter threshold
        let g = Grid::new(GridSpec::uniform(2, 6.0, 72)).unwrap();
        let a = SparseOperator::from_potential(&g, |p| Ok::<_, ()>(0.5 * (p[0] * p[0] + p[1] * p[1]))).unwrap();
        let opts = LanczosOptions {
            tol: 1e-10,
            ..LanczosOptions::default()
        };
        let plain = lowest_eigenpairs_with(&a, Target::Count(6), &LanczosOptions { filter: false, ..opts.clone() }).unwrap();
        let filtered = lowest_eigenpairs_with(&a, Target::Count(6), &opts).unwrap();
        for (p, f) in plain.iter().zip(&filtered) {
            assert!((p.value - f.value).abs() < 1e-9, "{} vs {}", p.value, f.value);
            assert!(f.residual <= 1e-10 * a.norm_estimate());
        }
        let below = lowest_eigenpairs_with(&a, Target::Below { ceiling: 2.5, min: 2, max: 50 }, &opts).unwrap();
        assert_eq!(below.len(), 4);
        assert!(below[2].value < 2.5 && below[3].value > 2.5);
    }

    #[test]
    fn below_target_spans_the_ceiling() {
        let a = oscillator_1d(8.0, 300);
        let pairs = lowest_eigenpairs_with(
            &a,
            Target::Below { ceiling: 3.6, min: 2, max: 50 },
            &LanczosOptions::default(),
        )
        .unwrap();
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        assert_eq!(values.len(), 5, "{values:?}");
        assert!(values[3] < 3.6 && values[4] > 3.6);
    }

    #[test]
    fn deterministic() {
        let a = oscillator_1d(6.0, 250);
        let x = super::super::lowest_eigenpairs(&a, 4, 1e-9).unwrap();
        let y = super::super::lowest_eigenpairs(&a, 4, 1e-9).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn rejects_bad_requests() {
        let a = oscillator_1d(6.0, 250);
        assert!(super::super::lowest_eigenpairs(&a, 0, 1e-9).is_err());
        assert!(super::super::lowest_eigenpairs(&a, 51, 1e-9).is_err());
        assert!(super::super::lowest_eigenpairs(&a, 2, 1e-13).is_err());
    }
}
