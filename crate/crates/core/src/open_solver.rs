//! Resonances of the effective Hamiltonian `H₀ - (i/2)W`, trajectories of
//! the complex eigenvalues across parameter sweeps, and the superradiance
//! diagnostics built on them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::min_cost_assignment;
use crate::closed_solver::{closed_spectrum, QuantumState, QUBIT_WEIGHT_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{eigensystem, eigenvalues, CMatrix, CVector};
use crate::model::{build_effective_hamiltonian, ChainSpec};

/// Overlap `|⟨l|r⟩|/(‖l‖‖r‖)` below which a spectrum counts as sitting on an
/// exceptional point.
pub const EXCEPTIONAL_OVERLAP: f64 = 1e-10;

/// One eigenpair `ℰ = e - (i/2) gamma_q` with `‖right‖ = 1` and `⟨left|right⟩ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub e: f64,
    pub gamma_q: f64,
    pub right_vec: CVector,
    pub left_vec: CVector,
}

impl Resonance {
    pub fn eigenvalue(&self) -> Complex64 {
        Complex64::new(self.e, -0.5 * self.gamma_q)
    }

    /// The right eigenvector as a state carrying the real part of the energy.
    pub fn state(&self) -> QuantumState {
        QuantumState { amplitudes: self.right_vec.clone(), energy: self.e }
    }
}

#[derive(Debug, Clone)]
pub struct OpenSpectrum {
    /// Ascending in `e`.
    pub resonances: Vec<Resonance>,
    /// Smallest normalized biorthogonal overlap.
    pub min_overlap: f64,
    /// Largest `‖H v - ℰ v‖ / ‖H‖` over right eigenvectors.
    pub max_residual: f64,
}

impl OpenSpectrum {
    pub fn near_exceptional_point(&self) -> bool {
        self.min_overlap < EXCEPTIONAL_OVERLAP
    }

    pub fn width_sum(&self) -> f64 {
        self.resonances.iter().map(|r| r.gamma_q).sum()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.resonances.iter().map(Resonance::eigenvalue).collect()
    }
}

fn inf_norm(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Diagonalizes the effective Hamiltonian.
pub fn open_spectrum(spec: &ChainSpec) -> Result<OpenSpectrum> {
    let h = build_effective_hamiltonian(spec)?.matrix();
    let es = eigensystem(&h).ok_or_else(|| Error::EigenNonConvergence { spec: Box::new(*spec) })?;
    let hn = inf_norm(&h).max(f64::MIN_POSITIVE);
    let mut max_residual: f64 = 0.0;
    let resonances = es
        .values
        .iter()
        .enumerate()
        .map(|(q, &ev)| {
            let right_vec = es.right.column(q).into_owned();
            let r = &h * &right_vec - &right_vec * ev;
            max_residual = max_residual.max(r.norm() / hn);
            Resonance { e: ev.re, gamma_q: -2.0 * ev.im, right_vec, left_vec: es.left.column(q).into_owned() }
        })
        .collect();
    Ok(OpenSpectrum { resonances, min_overlap: es.min_overlap(), max_residual })
}

/// Like [`open_spectrum`], but an exceptional point is an error.
pub fn open_spectrum_checked(spec: &ChainSpec) -> Result<OpenSpectrum> {
    let s = open_spectrum(spec)?;
    if s.near_exceptional_point() {
        return Err(Error::ExceptionalPoint { overlap: s.min_overlap, threshold: EXCEPTIONAL_OVERLAP });
    }
    Ok(s)
}

fn spectrum_values(spec: &ChainSpec) -> Result<Vec<Complex64>> {
    let h = build_effective_hamiltonian(spec)?.matrix();
    eigenvalues(&h).ok_or_else(|| Error::EigenNonConvergence { spec: Box::new(*spec) })
}

/// Which parameter a trajectory sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Gamma,
    Lambda,
}

impl SweepParameter {
    pub fn apply(self, spec: &ChainSpec, value: f64) -> ChainSpec {
        match self {
            SweepParameter::Gamma => spec.with_gamma(value),
            SweepParameter::Lambda => spec.with_lambda(value),
        }
    }
}

/// Complex eigenvalues matched into continuous branches across a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceTrajectory {
    pub spec: ChainSpec,
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    /// `branches[b][i]` is branch `b` at `grid[i]`.
    pub branches: Vec<Vec<Complex64>>,
    /// `order[i][b]` is the position of branch `b` in the sorted spectrum
    /// at `grid[i]` (the ordering used by [`open_spectrum`]).
    pub order: Vec<Vec<usize>>,
    /// Sum of assignment costs over all matched steps, refinements included.
    pub matching_cost: f64,
    /// Grid indices where a different assignment came within 1e-12 in cost.
    pub ambiguous: Vec<usize>,
    /// Intermediate points inserted because eigenvalues moved farther than
    /// the level spacing within one step.
    pub refined_points: usize,
    /// Largest `|Σ Γ_q - 2γ|` over the grid.
    pub max_width_sum_error: f64,
}

impl ResonanceTrajectory {
    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn widths_at(&self, i: usize) -> Vec<f64> {
        self.branches.iter().map(|b| -2.0 * b[i].im).collect()
    }
}

const AMBIGUITY_TOL: f64 = 1e-12;
const DEGENERATE_GAP: f64 = 1e-8;
const MAX_REFINE_DEPTH: usize = 6;

struct Step {
    /// `perm[b]` indexes the new sorted spectrum.
    perm: Vec<usize>,
    ambiguous: bool,
}

fn match_step(prev: &[Complex64], next: &[Complex64]) -> Step {
    let n = prev.len();
    let dist = |b: usize, j: usize| (prev[b] - next[j]).norm();
    let greedy: Vec<usize> = (0..n)
        .map(|b| (0..n).min_by(|&x, &y| dist(b, x).total_cmp(&dist(b, y))).unwrap_or(0))
        .collect();
    let mut taken = vec![false; n];
    let injective = greedy.iter().all(|&j| !std::mem::replace(&mut taken[j], true));
    let perm = if injective {
        greedy
    } else {
        let cost: Vec<Vec<f64>> = (0..n).map(|b| (0..n).map(|j| dist(b, j)).collect()).collect();
        min_cost_assignment(&cost)
    };
    let mut ambiguous = false;
    'outer: for b1 in 0..n {
        for b2 in b1 + 1..n {
            let (j1, j2) = (perm[b1], perm[b2]);
            if (prev[b1] - prev[b2]).norm() < DEGENERATE_GAP || (next[j1] - next[j2]).norm() < DEGENERATE_GAP {
                continue;
            }
            let swap = dist(b1, j2) + dist(b2, j1) - dist(b1, j1) - dist(b2, j2);
            if swap < AMBIGUITY_TOL {
                ambiguous = true;
                break 'outer;
            }
        }
    }
    Step { perm, ambiguous }
}

fn min_gap(values: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let d = (values[i] - values[j]).norm();
            if d >= DEGENERATE_GAP {
                gap = gap.min(d);
            }
        }
    }
    gap
}

struct Matcher<'a> {
    spec: &'a ChainSpec,
    parameter: SweepParameter,
    cost: f64,
    refined: usize,
}

impl Matcher<'_> {
    /// Carries branch-ordered values `cur` at parameter `a` to `b`, where the
    /// sorted spectrum is `next`. `prev` is the previous point on the path,
    /// used for a secant prediction of where each branch lands. Returns the
    /// permutation into `next`.
    fn advance(
        &mut self,
        prev: Option<(f64, &[Complex64])>,
        a: f64,
        cur: &[Complex64],
        b: f64,
        next: &[Complex64],
        depth: usize,
    ) -> Result<(Vec<usize>, bool)> {
        let predicted: Vec<Complex64> = match prev {
            Some((p, pv)) if a > p => {
                let f = (b - a) / (a - p);
                cur.iter().zip(pv).map(|(c, q)| c + (c - q) * f).collect()
            }
            _ => cur.to_vec(),
        };
        let step = match_step(&predicted, next);
        let miss = (0..cur.len()).map(|k| (predicted[k] - next[step.perm[k]]).norm()).fold(0.0, f64::max);
        if miss < 0.5 * min_gap(next) || depth >= MAX_REFINE_DEPTH {
            self.cost += (0..cur.len()).map(|k| (cur[k] - next[step.perm[k]]).norm()).sum::<f64>();
            return Ok((step.perm, step.ambiguous));
        }
        let mid = 0.5 * (a + b);
        let mid_vals = spectrum_values(&self.parameter.apply(self.spec, mid))?;
        self.refined += 1;
        let (p_mid, amb1) = self.advance(prev, a, cur, mid, &mid_vals, depth + 1)?;
        let at_mid: Vec<Complex64> = p_mid.iter().map(|&j| mid_vals[j]).collect();
        let (p, amb2) = self.advance(Some((a, cur)), mid, &at_mid, b, next, depth + 1)?;
        Ok((p, amb1 || amb2))
    }
}

/// Solves the spectrum at every grid point and links eigenvalues into
/// branches. Branch `b` starts at the `b`-th eigenvalue (by real part) of
/// the first grid point.
pub fn sweep(spec: &ChainSpec, parameter: SweepParameter, grid: &[f64]) -> Result<ResonanceTrajectory> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty sweep grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sweep grid must be strictly increasing".into()));
    }
    let specs: Vec<ChainSpec> = grid.iter().map(|&g| parameter.apply(spec, g)).collect();
    for s in &specs {
        s.require_coupled()?;
    }
    let values: Vec<Vec<Complex64>> = specs.par_iter().map(spectrum_values).collect::<Result<_>>()?;

    let d = values[0].len();
    let mut max_width_sum_error: f64 = 0.0;
    for (s, v) in specs.iter().zip(&values) {
        let sum: f64 = v.iter().map(|z| -2.0 * z.im).sum();
        max_width_sum_error = max_width_sum_error.max((sum - 2.0 * s.gamma).abs());
    }

    let mut matcher = Matcher { spec, parameter, cost: 0.0, refined: 0 };
    let mut order = vec![(0..d).collect::<Vec<usize>>()];
    let mut ambiguous = Vec::new();
    let mut cur = values[0].clone();
    let mut prev: Option<Vec<Complex64>> = None;
    for i in 1..grid.len() {
        let before = prev.as_deref().map(|v| (grid[i - 2], v));
        let (perm, amb) = matcher.advance(before, grid[i - 1], &cur, grid[i], &values[i], 0)?;
        if amb {
            ambiguous.push(i);
        }
        let here: Vec<Complex64> = perm.iter().map(|&j| values[i][j]).collect();
        prev = Some(std::mem::replace(&mut cur, here));
        order.push(perm);
    }
    let branches = (0..d).map(|b| (0..grid.len()).map(|i| values[i][order[i][b]]).collect()).collect();

    Ok(ResonanceTrajectory {
        spec: *spec,
        parameter,
        grid: grid.to_vec(),
        branches,
        order,
        matching_cost: matcher.cost,
        ambiguous,
        refined_points: matcher.refined,
        max_width_sum_error,
    })
}

/// [`sweep`] over the continuum coupling `γ`.
pub fn sweep_gamma(spec: &ChainSpec, gamma_grid: &[f64]) -> Result<ResonanceTrajectory> {
    sweep(spec, SweepParameter::Gamma, gamma_grid)
}

/// Width statistics at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidthMetrics {
    pub gamma: f64,
    /// `(ΣΓ)² / ΣΓ²`.
    pub participation_ratio: f64,
    /// Share of the total width held by the two broadest resonances.
    pub top2_share: f64,
}

pub fn width_metrics(gamma: f64, widths: &[f64]) -> WidthMetrics {
    let total: f64 = widths.iter().sum();
    let sq: f64 = widths.iter().map(|w| w * w).sum();
    let mut sorted = widths.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top2: f64 = sorted.iter().take(2).sum();
    WidthMetrics { gamma, participation_ratio: total * total / sq, top2_share: top2 / total }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperradianceReport {
    pub gamma_crit: f64,
    /// Branches with the two largest widths at the end of the sweep.
    pub sr_branches: [usize; 2],
    pub metrics: Vec<WidthMetrics>,
    /// Mean in-band level spacing of the closed system, for comparison with `gamma_crit`.
    pub mean_level_spacing: f64,
}

/// Band width `4|ν|` over the number of closed in-band levels.
pub fn mean_level_spacing(spec: &ChainSpec) -> Result<f64> {
    let closed = closed_spectrum(&spec.with_gamma(0.0))?;
    let count = closed.iter().filter(|s| spec.in_band(s.energy)).count();
    if count == 0 {
        return Err(Error::InvalidSpec("no closed levels inside the band".into()));
    }
    Ok(4.0 * spec.nu.abs() / count as f64)
}

/// Locates the transition at the steepest change of the width participation
/// ratio. A maximum slope at either end of the grid means no interior knee.
pub fn detect_superradiance(traj: &ResonanceTrajectory) -> Result<SuperradianceReport> {
    if traj.parameter != SweepParameter::Gamma {
        return Err(Error::InvalidArgument("superradiance detection needs a gamma sweep".into()));
    }
    let g = &traj.grid;
    if g.len() < 3 {
        return Err(Error::InvalidArgument("superradiance detection needs at least 3 grid points".into()));
    }
    if g[0] <= 0.0 {
        return Err(Error::InvalidArgument("gamma grid must be positive for width ratios".into()));
    }
    let metrics: Vec<WidthMetrics> = (0..g.len()).map(|i| width_metrics(g[i], &traj.widths_at(i))).collect();
    let pr: Vec<f64> = metrics.iter().map(|m| m.participation_ratio).collect();
    let last = g.len() - 1;
    let slope = |i: usize| {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(last));
        ((pr[b] - pr[a]) / (g[b] - g[a])).abs()
    };
    let steepest = (0..=last).max_by(|&a, &b| slope(a).total_cmp(&slope(b))).unwrap_or(0);
    if steepest == 0 || steepest == last {
        return Err(Error::NoTransition);
    }

    let widths = traj.widths_at(last);
    let mut idx: Vec<usize> = (0..widths.len()).collect();
    idx.sort_by(|&a, &b| widths[b].total_cmp(&widths[a]));
    Ok(SuperradianceReport {
        gamma_crit: g[steepest],
        sr_branches: [idx[0], idx[1]],
        metrics,
        mean_level_spacing: mean_level_spacing(&traj.spec)?,
    })
}

/// Member of a labelled pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairMember {
    /// 1 for the pair nearest the band top.
    pub pair_index: usize,
    pub upper: bool,
}

/// Labels resonances by pairing in-band, chain-extended states (by real
/// part, from the band top). Entry `q` refers to `spectrum.resonances[q]`.
pub fn label_pairs(spectrum: &OpenSpectrum, spec: &ChainSpec) -> Vec<Option<PairMember>> {
    let mut band: Vec<usize> = spectrum
        .resonances
        .iter()
        .enumerate()
        .filter(|(_, r)| spec.in_band(r.e) && qubit_weight(&r.right_vec) <= QUBIT_WEIGHT_THRESHOLD)
        .map(|(q, _)| q)
        .collect();
    band.sort_by(|&a, &b| spectrum.resonances[b].e.total_cmp(&spectrum.resonances[a].e));
    let mut labels = vec![None; spectrum.resonances.len()];
    for (k, chunk) in band.chunks_exact(2).enumerate() {
        labels[chunk[0]] = Some(PairMember { pair_index: k + 1, upper: true });
        labels[chunk[1]] = Some(PairMember { pair_index: k + 1, upper: false });
    }
    labels
}

fn qubit_weight(v: &CVector) -> f64 {
    let d = v.len();
    (v[d - 2].norm_sqr() + v[d - 1].norm_sqr()) / v.norm_squared()
}

#[derive(Debug, Clone, Serialize)]
pub struct OpenBandStructure {
    pub gamma: f64,
    /// Branches tracked across the λ grid.
    pub trajectory: ResonanceTrajectory,
    /// `labels[i][b]`: pair membership of branch `b` at `trajectory.grid[i]`.
    pub labels: Vec<Vec<Option<PairMember>>>,
}

impl OpenBandStructure {
    /// Real energies of one pair member along the λ grid (`None` where the
    /// label is absent).
    pub fn member_energies(&self, member: PairMember) -> Vec<Option<f64>> {
        (0..self.trajectory.grid.len())
            .map(|i| {
                self.labels[i]
                    .iter()
                    .position(|l| *l == Some(member))
                    .map(|b| self.trajectory.branches[b][i].re)
            })
            .collect()
    }

    /// Largest `max - min` of the real energy over λ among the two members.
    pub fn pair_variation(&self, pair_index: usize) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for upper in [true, false] {
            let e: Vec<f64> = self.member_energies(PairMember { pair_index, upper }).into_iter().flatten().collect();
            if e.is_empty() {
                return None;
            }
            let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
            worst = worst.max(hi - lo);
        }
        Some(worst)
    }
}

/// Real parts of the resonances as a function of λ at fixed γ, with pair labels.
pub fn band_structure_vs_lambda(spec: &ChainSpec, lambda_grid: &[f64], gamma: f64) -> Result<OpenBandStructure> {
    let base = spec.with_gamma(gamma);
    let trajectory = sweep(&base, SweepParameter::Lambda, lambda_grid)?;
    let labels = lambda_grid
        .par_iter()
        .enumerate()
        .map(|(i, &l)| {
            let s = base.with_lambda(l);
            let spectrum = open_spectrum(&s)?;
            let by_q = label_pairs(&spectrum, &s);
            Ok(trajectory.order[i].iter().map(|&q| by_q[q]).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OpenBandStructure { gamma, trajectory, labels })
}

/// Chain-site probabilities of one resonance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub e: f64,
    pub gamma_q: f64,
    /// `|a_n|²` for sites `-N..-1, 1..N`, normalized over the full vector.
    pub chain: Vec<f64>,
    /// `|b_L|² + |b_R|²`.
    pub qubit_weight: f64,
}

impl Profile {
    fn from_resonance(r: &Resonance) -> Self {
        let v = &r.right_vec;
        let total = v.norm_squared();
        let d = v.len();
        Profile {
            e: r.e,
            gamma_q: r.gamma_q,
            chain: (0..d - 2).map(|i| v[i].norm_sqr() / total).collect(),
            qubit_weight: (v[d - 2].norm_sqr() + v[d - 1].norm_sqr()) / total,
        }
    }

    /// Fraction of the chain weight sitting on the two end sites.
    pub fn edge_fraction(&self) -> f64 {
        let chain: f64 = self.chain.iter().sum();
        (self.chain[0] + self.chain[self.chain.len() - 1]) / chain
    }

    /// Site participation ratio `(Σp)²/Σp²` over the chain.
    pub fn participation(&self) -> f64 {
        let s: f64 = self.chain.iter().sum();
        let s2: f64 = self.chain.iter().map(|p| p * p).sum();
        s * s / s2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfilePoint {
    pub gamma: f64,
    /// Broadest first.
    pub profiles: [Profile; 2],
}

/// Chain profiles of the two broadest resonances at each γ.
pub fn superradiant_profiles(spec: &ChainSpec, gamma_grid: &[f64]) -> Result<Vec<ProfilePoint>> {
    gamma_grid
        .par_iter()
        .map(|&g| {
            let s = open_spectrum(&spec.with_gamma(g))?;
            let mut idx: Vec<usize> = (0..s.resonances.len()).collect();
            idx.sort_by(|&a, &b| s.resonances[b].gamma_q.total_cmp(&s.resonances[a].gamma_q));
            Ok(ProfilePoint {
                gamma: g,
                profiles: [Profile::from_resonance(&s.resonances[idx[0]]), Profile::from_resonance(&s.resonances[idx[1]])],
            })
        })
        .collect()
}

/// Largest γ step when continuing a closed level into the open system.
pub const CONTINUATION_STEP: f64 = 0.1;
const CONTINUATION_MIN_OVERLAP: f64 = 0.8;
const CONTINUATION_MIN_MARGIN: f64 = 0.3;

fn closest_by_overlap(spectrum: &OpenSpectrum, reference: &CVector) -> (usize, f64, f64) {
    let mut best = (0, -1.0);
    let mut second: f64 = -1.0;
    for (q, r) in spectrum.resonances.iter().enumerate() {
        let ov = reference.dotc(&r.right_vec).norm();
        if ov > best.1 {
            second = best.1;
            best = (q, ov);
        } else {
            second = second.max(ov);
        }
    }
    (best.0, best.1, second)
}

fn track_level(spec: &ChainSpec, reference: &CVector, from: f64, to: f64, depth: usize) -> Result<Resonance> {
    let s = open_spectrum(&spec.with_gamma(to))?;
    let (q, best, second) = closest_by_overlap(&s, reference);
    if (best >= CONTINUATION_MIN_OVERLAP && best - second >= CONTINUATION_MIN_MARGIN) || depth >= MAX_REFINE_DEPTH {
        return Ok(s.resonances[q].clone());
    }
    let mid = 0.5 * (from + to);
    let r = track_level(spec, reference, from, mid, depth + 1)?;
    track_level(spec, &r.right_vec, mid, to, depth + 1)
}

/// Follows the closed level `closed_index` (ascending energy order) from
/// `γ = 0` to each requested `γ` and returns the matching resonances.
///
/// Steps of at most [`CONTINUATION_STEP`] pick the right eigenvector with
/// the largest overlap with the previous one; a step is halved when that
/// choice is not clear-cut. Eigenvector overlap separates near-degenerate
/// levels (mirror partners) that eigenvalue distance cannot.
pub fn continue_closed_level(spec: &ChainSpec, closed_index: usize, gammas: &[f64]) -> Result<Vec<Resonance>> {
    if closed_index >= spec.dim() {
        return Err(Error::InvalidArgument(format!("level {closed_index} out of range")));
    }
    if gammas.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::InvalidArgument("continuation targets must be non-negative".into()));
    }
    let mut targets: Vec<f64> = gammas.to_vec();
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let closed = closed_spectrum(&spec.with_gamma(0.0))?;
    let mut reference = closed[closed_index].amplitudes.clone();
    let mut at = 0.0;
    let mut found: Vec<(f64, Resonance)> = Vec::with_capacity(targets.len());
    for &t in &targets {
        let steps = ((t - at) / CONTINUATION_STEP).ceil().max(1.0) as usize;
        let mut r = None;
        for k in 1..=steps {
            let g = if k == steps { t } else { at + (t - at) * k as f64 / steps as f64 };
            let prev = if k == 1 { at } else { at + (t - at) * (k - 1) as f64 / steps as f64 };
            let res = track_level(spec, &reference, prev, g, 0)?;
            reference = res.right_vec.clone();
            r = Some(res);
        }
        at = t;
        found.push((t, r.expect("at least one step")));
    }

    Ok(gammas
        .iter()
        .map(|&g| found.iter().find(|(t, _)| *t == g).map(|(_, r)| r.clone()).expect("target visited"))
        .collect())
}
