//! Density-matrix evolution under the effective Hamiltonian with white-noise
//! site dephasing,
//!
//! ```text
//! dρ/dt = -i(H_eff ρ - ρ H_eff†) - 2α_φ (ρ - diag ρ),
//! ```
//!
//! the coherence measure `R(t)` built from its off-diagonal elements, and a
//! stochastic-trajectory oracle for the averaged equation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::pair_resonances;
use crate::error::{Error, Result};
use crate::linalg::{expm, hermitian_eigen, spectral_norm, CMatrix, CVector};
use crate::model::{build_effective_hamiltonian, ChainSpec, SparseMatrix};
use crate::propagate::{LinearGenerator, TaylorIntegrator, Tolerances};

pub const MASTER_TOLERANCES: Tolerances = Tolerances::new(1e-9, 1e-12);
/// Below this smallest eigenvalue the integration is aborted.
pub const POSITIVITY_ABORT: f64 = -1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMatrix,
}

impl DensityMatrix {
    pub fn from_pure(psi: &CVector) -> Self {
        DensityMatrix { rho: psi * psi.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        hermitian_eigen(&h).and_then(|e| e.values.first().copied()).unwrap_or(f64::NAN)
    }
}

/// Right-hand side of the master equation, evaluated literally with dense
/// products.
pub fn master_rhs(rho: &DensityMatrix, spec: &ChainSpec) -> Result<DensityMatrix> {
    let h = build_effective_hamiltonian(spec)?.matrix();
    let i = Complex64::new(0.0, 1.0);
    let mut out = (&h * &rho.rho - &rho.rho * h.adjoint()) * (-i);
    let d = rho.dim();
    let damp = Complex64::new(2.0 * spec.alpha_phi, 0.0);
    for c in 0..d {
        for r in 0..d {
            if r != c {
                out[(r, c)] -= damp * rho.rho[(r, c)];
            }
        }
    }
    Ok(DensityMatrix { rho: out })
}

/// The master-equation generator on Hermitian input. With `A = H_eff ρ`,
/// `H_eff ρ - ρ H_eff† = A - A†`, so one sparse product per application.
pub struct MasterGenerator {
    h: SparseMatrix,
    alpha: f64,
    bound: f64,
}

impl MasterGenerator {
    pub fn new(spec: &ChainSpec) -> Result<Self> {
        let h = build_effective_hamiltonian(spec)?.sparse();
        let bound = 2.0 * h.inf_norm() + 2.0 * spec.alpha_phi;
        Ok(MasterGenerator { h, alpha: spec.alpha_phi, bound })
    }

    /// Generator with `H_eff = 0`: dephasing alone.
    pub fn pure_dephasing(dim: usize, alpha_phi: f64) -> Self {
        let h = SparseMatrix { dim, rows: vec![Vec::new(); dim] };
        MasterGenerator { h, alpha: alpha_phi, bound: 2.0 * alpha_phi }
    }
}

impl LinearGenerator for MasterGenerator {
    fn apply(&self, y: &CMatrix, out: &mut CMatrix) {
        let d = self.h.dim;
        let ys = y.as_slice();
        // a = H ρ, column-major like nalgebra storage
        let mut a = vec![Complex64::new(0.0, 0.0); d * d];
        for j in 0..d {
            let col = &ys[j * d..(j + 1) * d];
            let acol = &mut a[j * d..(j + 1) * d];
            for (i, row) in self.h.rows.iter().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for &(k, hik) in row {
                    s += hik * col[k];
                }
                acol[i] = s;
            }
        }
        let damp = 2.0 * self.alpha;
        let os = out.as_mut_slice();
        for j in 0..d {
            for i in 0..d {
                let comm = a[j * d + i] - a[i * d + j].conj();
                let mut v = Complex64::new(comm.im, -comm.re);
                if i != j {
                    v -= ys[j * d + i] * damp;
                }
                os[j * d + i] = v;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.bound
    }

    fn preserves_hermiticity(&self) -> bool {
        true
    }
}

/// Numerical health of a density-matrix trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hygiene {
    /// Largest `|ρ - ρ†|` seen before re-symmetrization.
    pub max_asymmetry: f64,
    /// Smallest eigenvalue over the checked points.
    pub min_eigenvalue: f64,
    /// Largest per-step increase of `Tr ρ` (negative when it always fell).
    pub max_trace_increase: f64,
    pub steps: usize,
}

impl Hygiene {
    fn new() -> Self {
        Hygiene { max_asymmetry: 0.0, min_eigenvalue: f64::INFINITY, max_trace_increase: f64::NEG_INFINITY, steps: 0 }
    }

    fn check_positivity(&mut self, t: f64, rho: &CMatrix) -> Result<()> {
        let m = DensityMatrix { rho: rho.clone() }.min_eigenvalue();
        self.min_eigenvalue = self.min_eigenvalue.min(m);
        if m < POSITIVITY_ABORT {
            return Err(Error::Positivity { t, min_eigenvalue: m });
        }
        Ok(())
    }
}

fn validate_rho(rho: &DensityMatrix, dim: usize) -> Result<()> {
    if rho.dim() != dim || rho.rho.ncols() != dim {
        return Err(Error::InvalidArgument(format!("density matrix must be {dim}x{dim}")));
    }
    if rho.hermiticity_defect() > 1e-10 {
        return Err(Error::InvalidArgument("density matrix is not Hermitian".into()));
    }
    let tr = rho.trace();
    if !(-1e-12..=1.0 + 1e-9).contains(&tr) {
        return Err(Error::InvalidArgument(format!("trace {tr} outside [0, 1]")));
    }
    Ok(())
}

/// Stepper wrapper that records trace and symmetry diagnostics per step.
struct Tracked<'a> {
    it: TaylorIntegrator<'a, MasterGenerator>,
    hygiene: Hygiene,
    trace: f64,
}

impl<'a> Tracked<'a> {
    fn new(generator: &'a MasterGenerator, rho0: &DensityMatrix) -> Self {
        Tracked {
            it: TaylorIntegrator::new(generator, rho0.rho.clone(), 0.0, MASTER_TOLERANCES),
            hygiene: Hygiene::new(),
            trace: rho0.trace(),
        }
    }

    fn step(&mut self, t_max: f64) -> Result<()> {
        self.it.step(t_max)?;
        let tr = self.it.state().trace().re;
        self.hygiene.max_trace_increase = self.hygiene.max_trace_increase.max(tr - self.trace);
        self.hygiene.max_asymmetry = self.it.max_asymmetry;
        self.hygiene.steps += 1;
        self.trace = tr;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DensityEvolution {
    pub t_grid: Vec<f64>,
    pub rho: Vec<DensityMatrix>,
    pub hygiene: Hygiene,
}

/// Integrates the master equation to every point of `t_grid`, checking
/// positivity at each output point.
pub fn evolve_density(spec: &ChainSpec, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<DensityEvolution> {
    validate_rho(rho0, spec.dim())?;
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be non-negative and ascending".into()));
    }
    let generator = MasterGenerator::new(spec)?;
    let mut tr = Tracked::new(&generator, rho0);
    let t_end = t_grid.last().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        while tr.it.t() < t {
            tr.step(t_end)?;
        }
        let rho = if t == tr.it.t() { tr.it.state().clone() } else { tr.it.dense(t) };
        tr.hygiene.check_positivity(t, &rho)?;
        out.push(DensityMatrix { rho });
    }
    Ok(DensityEvolution { t_grid: t_grid.to_vec(), rho: out, hygiene: tr.hygiene })
}

/// Aggregate of the off-diagonal elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceMode {
    /// `Σ_{i≠j} |ρ_ij|`.
    #[default]
    ModulusSum,
    /// `Σ_{i≠j} ρ_ij`, real for Hermitian `ρ`.
    ElementSum,
}

pub fn coherence_measure(rho: &DensityMatrix, mode: CoherenceMode) -> f64 {
    coherence_of(&rho.rho, mode)
}

fn coherence_of(rho: &CMatrix, mode: CoherenceMode) -> f64 {
    let d = rho.nrows();
    let mut s = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                s += match mode {
                    CoherenceMode::ModulusSum => rho[(i, j)].norm(),
                    CoherenceMode::ElementSum => rho[(i, j)].re,
                };
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceTime {
    /// First time `|R|` drops to `|R(0)|/e`, or the cap if censored.
    pub tau: f64,
    pub censored: bool,
    pub r0: f64,
    pub hygiene: Hygiene,
}

/// Dense-output samples per step scanned for the first crossing.
const EVENT_SAMPLES: usize = 8;
/// Positivity is checked every this many steps (and at the end).
const POSITIVITY_STRIDE: usize = 100;

/// Coherence time of `rho0`: the first crossing of `|R(t)| = |R(0)|/e`,
/// located by bisection on the dense output. Integration stops at `cap`,
/// in which case the result is marked censored.
pub fn coherence_time(spec: &ChainSpec, rho0: &DensityMatrix, mode: CoherenceMode, cap: f64) -> Result<CoherenceTime> {
    validate_rho(rho0, spec.dim())?;
    if !(cap > 0.0) {
        return Err(Error::InvalidArgument("coherence-time cap must be positive".into()));
    }
    let r0 = coherence_measure(rho0, mode);
    if r0.abs() < 1e-14 {
        return Err(Error::InvalidArgument("initial state has no coherence (R(0) = 0)".into()));
    }
    let target = r0.abs() / std::f64::consts::E;
    let generator = MasterGenerator::new(spec)?;
    let mut tr = Tracked::new(&generator, rho0);
    let below = |rho: &CMatrix| coherence_of(rho, mode).abs() <= target;
    let mut r_start = r0.abs();

    while tr.it.t() < cap {
        tr.step(cap)?;
        if tr.hygiene.steps % POSITIVITY_STRIDE == 0 {
            let t = tr.it.t();
            tr.hygiene.check_positivity(t, &tr.it.state().clone())?;
        }
        let (a, b) = tr.it.last_step();
        let r_end = coherence_of(tr.it.state(), mode).abs();
        if r_end > 1.25 * target && r_start > 1.25 * target {
            r_start = r_end;
            continue;
        }
        r_start = r_end;
        let mut lo = a;
        for k in 1..=EVENT_SAMPLES {
            let t = a + (b - a) * k as f64 / EVENT_SAMPLES as f64;
            if below(&tr.it.dense(t)) {
                let mut hi = t;
                while hi - lo > 1e-7 * hi {
                    let mid = 0.5 * (lo + hi);
                    if below(&tr.it.dense(mid)) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let rho = tr.it.dense(hi);
                tr.hygiene.check_positivity(hi, &rho)?;
                return Ok(CoherenceTime { tau: hi, censored: false, r0, hygiene: tr.hygiene });
            }
            lo = t;
        }
    }
    let t = tr.it.t();
    tr.hygiene.check_positivity(t, &tr.it.state().clone())?;
    Ok(CoherenceTime { tau: cap, censored: true, r0, hygiene: tr.hygiene })
}

/// How the initial state of a coherence scan is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Right eigenvector of `H_eff` at the working γ, continued from the
    /// upper member of the topmost closed pair.
    #[default]
    OpenEigenstate,
    /// The closed eigenstate itself.
    ClosedEigenstate,
}

pub fn scan_initial_state(spec: &ChainSpec, initial: InitialState) -> Result<CVector> {
    Ok(scan_initial_states(spec, initial, &[spec.gamma])?.remove(0))
}

/// Initial states for several values of γ, sharing one continuation path.
pub fn scan_initial_states(spec: &ChainSpec, initial: InitialState, gammas: &[f64]) -> Result<Vec<CVector>> {
    let resonances = match initial {
        InitialState::OpenEigenstate => pair_resonances(spec, 1, true, gammas)?,
        InitialState::ClosedEigenstate => vec![pair_resonances(spec, 1, true, &[0.0])?.remove(0); gammas.len()],
    };
    Ok(resonances.into_iter().map(|r| r.right_vec.clone() / Complex64::new(r.right_vec.norm(), 0.0)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanOptions {
    pub mode: CoherenceMode,
    pub initial: InitialState,
    pub cap: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { mode: CoherenceMode::ModulusSum, initial: InitialState::OpenEigenstate, cap: 1e4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub n: usize,
    pub alpha_phi: f64,
    pub gamma: f64,
    /// `None` when the point failed; see `error`.
    pub tau: Option<f64>,
    pub censored: bool,
    pub error: Option<String>,
    pub hygiene: Option<Hygiene>,
}

/// τ_coh over the Cartesian product `n_list × alpha_list × gamma_grid`.
/// Failures are recorded per point and do not stop the scan.
pub fn coherence_scan(
    spec_base: &ChainSpec,
    gamma_grid: &[f64],
    n_list: &[usize],
    alpha_list: &[f64],
    opts: ScanOptions,
) -> Vec<ScanPoint> {
    let mut jobs = Vec::new();
    for &n in n_list {
        let spec_n = spec_base.with_n(n);
        let states = scan_initial_states(&spec_n, opts.initial, gamma_grid).map_err(|e| e.to_string());
        for &alpha in alpha_list {
            for (k, &gamma) in gamma_grid.iter().enumerate() {
                let psi = states.as_ref().map(|s| s[k].clone()).map_err(Clone::clone);
                jobs.push((spec_n.with_alpha(alpha).with_gamma(gamma), psi));
            }
        }
    }
    jobs.par_iter()
        .map(|(spec, psi)| {
            let result = psi.clone().and_then(|psi| {
                coherence_time(spec, &DensityMatrix::from_pure(&psi), opts.mode, opts.cap).map_err(|e| e.to_string())
            });
            let (tau, censored, error, hygiene) = match result {
                Ok(c) => (Some(c.tau), c.censored, None, Some(c.hygiene)),
                Err(e) => (None, false, Some(e), None),
            };
            ScanPoint { n: spec.n, alpha_phi: spec.alpha_phi, gamma: spec.gamma, tau, censored, error, hygiene }
        })
        .collect()
}

/// Stochastic dephasing ensemble parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pub alpha_phi: f64,
    pub seed: u64,
    pub dt: f64,
    pub n_traj: usize,
}

pub const MIN_TRAJECTORIES: usize = 100;
/// Largest allowed `‖H_eff‖ dt`.
pub const MAX_PHASE_STEP: f64 = 0.05;
const TRAJ_CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub t_grid: Vec<f64>,
    /// Ensemble mean of `|ψ⟩⟨ψ|`.
    pub mean: Vec<CMatrix>,
    /// Standard error of each element of the mean.
    pub std_err: Vec<DMatrix<f64>>,
}

struct Accumulator {
    sum: Vec<CMatrix>,
    sum_sq: Vec<DMatrix<f64>>,
}

impl Accumulator {
    fn new(points: usize, d: usize) -> Self {
        Accumulator { sum: vec![CMatrix::zeros(d, d); points], sum_sq: vec![DMatrix::zeros(d, d); points] }
    }

    fn add(&mut self, k: usize, psi: &CVector) {
        let d = psi.len();
        for j in 0..d {
            for i in 0..d {
                let z = psi[i] * psi[j].conj();
                self.sum[k][(i, j)] += z;
                self.sum_sq[k][(i, j)] += z.norm_sqr();
            }
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for k in 0..self.sum.len() {
            self.sum[k] += &other.sum[k];
            self.sum_sq[k] += &other.sum_sq[k];
        }
    }
}

fn kick(psi: &mut CVector, rng: &mut ChaCha8Rng, dist: &Normal<f64>) {
    for a in psi.iter_mut() {
        let xi = dist.sample(rng);
        *a *= Complex64::new(xi.cos(), -xi.sin());
    }
}

/// Averages `|ψ⟩⟨ψ|` over trajectories of `H_eff` interleaved with random
/// site phases `exp(-iξ_j)`, `ξ_j ~ N(0, 2α_φ dt)` per step.
///
/// Steps are symmetrized: each propagation step sits between two half-variance
/// kicks. Trajectory `k` draws from the ChaCha stream `k` of `seed`, so the
/// result does not depend on the thread count. Every time in `t_grid` must
/// be a multiple of `dt`.
pub fn monte_carlo_dephasing(spec: &ChainSpec, psi0: &CVector, noise: &NoiseModel, t_grid: &[f64]) -> Result<MonteCarloResult> {
    let d = spec.dim();
    if psi0.len() != d || (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument("initial state must be a normalized vector of the system dimension".into()));
    }
    if noise.n_traj < MIN_TRAJECTORIES {
        return Err(Error::InvalidArgument(format!("need at least {MIN_TRAJECTORIES} trajectories, got {}", noise.n_traj)));
    }
    if !(noise.dt > 0.0) || !(noise.alpha_phi >= 0.0) {
        return Err(Error::InvalidArgument("noise needs dt > 0 and alpha_phi >= 0".into()));
    }
    let h = build_effective_hamiltonian(spec)?.matrix();
    let phase_step = spectral_norm(&h) * noise.dt;
    if phase_step >= MAX_PHASE_STEP {
        return Err(Error::InvalidArgument(format!(
            "dt too large: ||H_eff|| dt = {phase_step} must stay below {MAX_PHASE_STEP}"
        )));
    }
    let mut checkpoints = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let k = (t / noise.dt).round();
        if t < 0.0 || (k * noise.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidArgument(format!("time {t} is not a multiple of dt = {}", noise.dt)));
        }
        checkpoints.push(k as usize);
    }
    if checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be ascending".into()));
    }

    let u = expm(&(&h * Complex64::new(0.0, -noise.dt)));
    let var = 2.0 * noise.alpha_phi * noise.dt;
    let half = Normal::new(0.0, (0.5 * var).sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let full = Normal::new(0.0, var.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n_steps = checkpoints.last().copied().unwrap_or(0);

    let run = |traj: usize, acc: &mut Accumulator| {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(traj as u64);
        let mut psi = psi0.clone();
        let mut next = 0;
        let mut scratch = CVector::zeros(d);
        // checkpoints at step 0 see the initial state untouched
        while next < checkpoints.len() && checkpoints[next] == 0 {
            acc.add(next, &psi);
            next += 1;
        }
        kick(&mut psi, &mut rng, &half);
        for step in 1..=n_steps {
            u.mul_to(&psi, &mut scratch);
            std::mem::swap(&mut psi, &mut scratch);
            while next < checkpoints.len() && checkpoints[next] == step {
                let mut rec = psi.clone();
                kick(&mut rec, &mut rng, &half);
                acc.add(next, &rec);
                next += 1;
            }
            if step < n_steps {
                kick(&mut psi, &mut rng, &full);
            }
        }
    };

    let n_chunks = noise.n_traj.div_ceil(TRAJ_CHUNK);
    let partial: Vec<Accumulator> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(checkpoints.len(), d);
            for traj in c * TRAJ_CHUNK..((c + 1) * TRAJ_CHUNK).min(noise.n_traj) {
                run(traj, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::new(checkpoints.len(), d);
    for p in &partial {
        total.merge(p);
    }

    let n = noise.n_traj as f64;
    let mean: Vec<CMatrix> = total.sum.iter().map(|s| s / Complex64::new(n, 0.0)).collect();
    let std_err = mean
        .iter()
        .zip(&total.sum_sq)
        .map(|(m, sq)| {
            DMatrix::from_fn(d, d, |i, j| {
                let var = (sq[(i, j)] / n - m[(i, j)].norm_sqr()).max(0.0) * n / (n - 1.0);
                (var / n).sqrt()
            })
        })
        .collect();
    Ok(MonteCarloResult { t_grid: t_grid.to_vec(), mean, std_err })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn rhs_matches_literal_generator() {
        let spec = ChainSpec::default().with_gamma(1.5).with_alpha(0.02).with_n(3);
        let d = spec.dim();
        let mut psi = CVector::from_fn(d, |i, _| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()));
        psi /= c(psi.norm());
        let rho = DensityMatrix::from_pure(&psi);
        let literal = master_rhs(&rho, &spec).unwrap();
        let g = MasterGenerator::new(&spec).unwrap();
        let mut fast = CMatrix::zeros(d, d);
        g.apply(&rho.rho, &mut fast);
        assert!((fast - &literal.rho).norm() < 1e-12);
        // dephasing is trace-preserving, so only W removes population
        let w = build_effective_hamiltonian(&spec).unwrap().w_diag;
        let tr_w: f64 = (0..d).map(|i| w[i] * rho.rho[(i, i)].re).sum();
        assert!((literal.trace() + tr_w).abs() < 1e-10);
    }

    #[test]
    fn pure_dephasing_closed_form() {
        let mut spec = ChainSpec::default().with_n(2).with_alpha(0.05);
        spec.lambda = 1.0;
        let d = spec.dim();
        let psi = CVector::from_element(d, c(1.0 / (d as f64).sqrt()));
        let rho0 = DensityMatrix::from_pure(&psi);
        let generator_free = |rho: &CMatrix, t: f64| {
            DMatrix::from_fn(d, d, |i, j| if i == j { rho[(i, j)] } else { rho[(i, j)] * (-0.1 * t).exp() })
        };
        let g = MasterGenerator::pure_dephasing(d, 0.05);
        let mut it = TaylorIntegrator::new(&g, rho0.rho.clone(), 0.0, MASTER_TOLERANCES);
        let t = 3.0 / 0.1;
        let ys = it.sample(&[t]).unwrap();
        let exact = generator_free(&rho0.rho, t);
        assert!(((&ys[0] - &exact).norm() / exact.norm()) < 1e-8);
    }

    #[test]
    fn coherence_measures() {
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = c(0.5);
        rho[(1, 1)] = c(0.5);
        assert_eq!(coherence_measure(&DensityMatrix { rho: rho.clone() }, CoherenceMode::ModulusSum), 0.0);
        rho[(0, 1)] = c(0.5);
        rho[(1, 0)] = c(0.5);
        let d = DensityMatrix { rho };
        assert!((coherence_measure(&d, CoherenceMode::ModulusSum) - 1.0).abs() < 1e-15);
        assert!((coherence_measure(&d, CoherenceMode::ElementSum) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unitary_limit_conserves_trace() {
        let spec = ChainSpec::default();
        let psi = crate::closed_solver::closed_spectrum(&spec).unwrap()[5].amplitudes.clone();
        let mut mix = CVector::zeros(spec.dim());
        mix[0] = c(1.0);
        let rho = DensityMatrix { rho: DensityMatrix::from_pure(&psi).rho * c(0.5) + DensityMatrix::from_pure(&mix).rho * c(0.5) };
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 3.0).collect();
        let ev = evolve_density(&spec, &rho, &grid).unwrap();
        let e0 = hermitian_eigen(&rho.rho).unwrap().values;
        for r in &ev.rho {
            assert!((r.trace() - 1.0).abs() < 1e-9);
            let e = hermitian_eigen(&r.rho).unwrap().values;
            assert!(e.iter().zip(&e0).all(|(a, b)| (a - b).abs() < 1e-8));
        }
        assert!(ev.hygiene.max_asymmetry < 1e-8);
    }

    #[test]
    fn diagonal_state_has_no_coherence_time() {
        let spec = ChainSpec::default().with_alpha(1e-3);
        let mut rho = CMatrix::zeros(spec.dim(), spec.dim());
        rho[(0, 0)] = c(1.0);
        assert!(coherence_time(&spec, &DensityMatrix { rho }, CoherenceMode::ModulusSum, 100.0).is_err());
    }

    #[test]
    fn noiseless_trajectories_reproduce_pure_evolution() {
        let spec = ChainSpec::default().with_gamma(1.0);
        let psi0 = crate::closed_solver::closed_spectrum(&spec.with_gamma(0.0)).unwrap()[12].amplitudes.clone();
        let noise = NoiseModel { alpha_phi: 0.0, seed: 7, dt: 0.01, n_traj: 100 };
        let mc = monte_carlo_dephasing(&spec, &psi0, &noise, &[0.0, 1.0, 2.5]).unwrap();
        let ev = crate::dynamics::evolve_state(&spec, &psi0, &[0.0, 1.0, 2.5]).unwrap();
        for (m, psi) in mc.mean.iter().zip(&ev.states) {
            assert!((m - psi * psi.adjoint()).norm() < 1e-10);
        }
        assert!(mc.std_err.iter().all(|s| s.max() < 1e-7));
    }

    #[test]
    fn monte_carlo_rejects_bad_noise() {
        let spec = ChainSpec::default();
        let psi0 = crate::closed_solver::closed_spectrum(&spec).unwrap()[0].amplitudes.clone();
        let few = NoiseModel { alpha_phi: 1e-3, seed: 1, dt: 0.01, n_traj: 10 };
        assert!(monte_carlo_dephasing(&spec, &psi0, &few, &[0.1]).is_err());
        let coarse = NoiseModel { alpha_phi: 1e-3, seed: 1, dt: 0.5, n_traj: 100 };
        assert!(monte_carlo_dephasing(&spec, &psi0, &coarse, &[0.5]).is_err());
        let ok = NoiseModel { alpha_phi: 1e-3, seed: 1, dt: 0.01, n_traj: 100 };
        assert!(monte_carlo_dephasing(&spec, &psi0, &ok, &[0.015]).is_err());
    }
}
