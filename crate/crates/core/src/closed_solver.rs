//! Closed-system spectrum: dense eigensolve, the decoupled `λ → 0` limit,
//! the transcendental energy equation at the balanced point `λ² = κ`, and
//! classification of band states into left/right pairs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CVector};
use crate::model::{build_closed_hamiltonian, flat, reflection_permutation, ChainSpec, Site};

/// Amplitudes over `{wire sites, e_L, e_R}` in the flat layout of
/// [`crate::SiteIndex`], with the energy of the state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: CVector,
    pub energy: f64,
}

impl QuantumState {
    /// Half-length `N` implied by the vector length.
    pub fn half_length(&self) -> usize {
        (self.amplitudes.len() - 2) / 2
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn amplitude(&self, site: Site) -> Complex64 {
        self.amplitudes[flat(self.half_length(), site)]
    }
}

/// Dense Hermitian eigensolve of `H₀`, ascending in energy.
pub fn closed_spectrum(spec: &ChainSpec) -> Result<Vec<QuantumState>> {
    let h = build_closed_hamiltonian(spec)?;
    let eig = hermitian_eigen(&h).ok_or_else(|| Error::EigenNonConvergence { spec: Box::new(*spec) })?;
    Ok(eig
        .values
        .iter()
        .enumerate()
        .map(|(k, &energy)| QuantumState { amplitudes: eig.vectors.column(k).into_owned(), energy })
        .collect())
}

/// A standing wave on one arm of the wire in the decoupled limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmLevel {
    /// Even quantum number `k` of the `πk/(2M)` quantization.
    pub k: usize,
    pub energy: f64,
    /// Chain sites carrying the wave, paired with its real amplitudes.
    pub sites: Vec<i64>,
    pub amplitudes: Vec<f64>,
}

/// Analytic spectrum for `λ → 0` with `δ_L = δ_R = δ`.
///
/// The left qubit detaches at `E = δ`; site `1` hybridizes with the right
/// qubit into a pair at `±κ/λ + (ε₀ + δ)/2`; the left arm `-N..-1` and the
/// right arm `2..N` carry open-boundary standing waves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoupledSpectrum {
    pub left_qubit_level: f64,
    pub left_band: Vec<ArmLevel>,
    pub right_band: Vec<ArmLevel>,
    epsilon0: f64,
    delta: f64,
    kappa: f64,
    n: usize,
}

impl DecoupledSpectrum {
    /// Energies of the site-1/right-qubit pair at coupling `λ`, upper first.
    pub fn central_pair(&self, lambda: f64) -> [f64; 2] {
        let c = self.kappa / lambda;
        let mid = 0.5 * (self.epsilon0 + self.delta);
        [mid + c, mid - c]
    }

    /// All `2N + 2` decoupled energies at coupling `λ`, ascending.
    pub fn energies(&self, lambda: f64) -> Vec<f64> {
        let mut e: Vec<f64> = self.left_band.iter().chain(&self.right_band).map(|l| l.energy).collect();
        e.push(self.left_qubit_level);
        e.extend(self.central_pair(lambda));
        e.sort_by(f64::total_cmp);
        e
    }

    /// Embeds an arm level into the full intrinsic space.
    pub fn embed(&self, level: &ArmLevel) -> QuantumState {
        let mut amplitudes = CVector::zeros(2 * self.n + 2);
        for (&s, &a) in level.sites.iter().zip(&level.amplitudes) {
            amplitudes[flat(self.n, Site::Chain(s))] = Complex64::new(a, 0.0);
        }
        QuantumState { amplitudes, energy: level.energy }
    }

    /// Decoupled eigenvectors of the central pair, upper first:
    /// `(|1⟩ ± |e_R⟩)/√2`.
    pub fn central_pair_states(&self, lambda: f64) -> [QuantumState; 2] {
        let [up, down] = self.central_pair(lambda);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let make = |sign: f64, energy: f64| {
            let mut amplitudes = CVector::zeros(2 * self.n + 2);
            amplitudes[flat(self.n, Site::Chain(1))] = Complex64::new(s, 0.0);
            amplitudes[2 * self.n + 1] = Complex64::new(sign * s, 0.0);
            QuantumState { amplitudes, energy }
        };
        [make(1.0, up), make(-1.0, down)]
    }
}

/// Evaluates the decoupled-limit formulas. `spec.lambda` is ignored.
pub fn decoupled_limit_spectrum(spec: &ChainSpec) -> Result<DecoupledSpectrum> {
    spec.validate()?;
    let delta = spec.require_symmetric_qubits()?;
    let n = spec.n;
    let (e0, nu) = (spec.epsilon0, spec.nu);

    // left arm: N sites, site -1 next to the detached site 1
    let m_left = n + 1;
    let left_band = (1..=n)
        .map(|m| {
            let q = PI * m as f64 / m_left as f64;
            let norm = (2.0 / m_left as f64).sqrt();
            ArmLevel {
                k: 2 * m,
                energy: e0 + 2.0 * nu * q.cos(),
                sites: (1..=n as i64).map(|j| -j).collect(),
                amplitudes: (1..=n).map(|j| norm * (j as f64 * q).sin()).collect(),
            }
        })
        .collect();

    // right arm: sites 2..N, with a node on site 1
    let right_band = (1..n)
        .map(|m| {
            let q = PI * m as f64 / n as f64;
            let norm = (2.0 / n as f64).sqrt();
            ArmLevel {
                k: 2 * m,
                energy: e0 + 2.0 * nu * q.cos(),
                sites: (2..=n as i64).collect(),
                amplitudes: (2..=n).map(|j| norm * ((j - 1) as f64 * q).sin()).collect(),
            }
        })
        .collect();

    Ok(DecoupledSpectrum { left_qubit_level: delta, left_band, right_band, epsilon0: e0, delta, kappa: spec.kappa, n })
}

/// Mirror parity of a state at the balanced point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Symmetric => 1.0,
            Parity::Antisymmetric => -1.0,
        }
    }
}

fn require_balanced(spec: &ChainSpec) -> Result<f64> {
    spec.require_coupled()?;
    let delta = spec.require_symmetric_qubits()?;
    let l2 = spec.lambda * spec.lambda;
    if (l2 - spec.kappa).abs() > 1e-12 * spec.kappa {
        return Err(Error::InvalidSpec(format!(
            "balanced point needs lambda^2 == kappa (lambda^2 = {l2}, kappa = {})",
            spec.kappa
        )));
    }
    Ok(delta)
}

fn theta_of(spec: &ChainSpec, energy: f64) -> f64 {
    ((energy - spec.epsilon0) / (2.0 * spec.nu)).clamp(-1.0, 1.0).acos()
}

/// Residual of the balanced-point energy equation,
/// `sin((N+1)θ)/sin(Nθ) - (±1 + κ/(ν(E-δ)))` with `E = ε₀ + 2ν cos θ`.
///
/// Poles of either side are reported as [`Error::Pole`].
pub fn symmetric_point_residual(energy: f64, spec: &ChainSpec, parity: Parity) -> Result<f64> {
    let delta = require_balanced(spec)?;
    if !spec.in_band(energy) {
        return Err(Error::InvalidArgument(format!("E = {energy} is outside the band")));
    }
    let theta = theta_of(spec, energy);
    let n = spec.n as f64;
    let den = (n * theta).sin();
    if den.abs() < 1e-14 {
        return Err(Error::Pole { energy, reason: "sin(N theta) vanishes" });
    }
    if (energy - delta).abs() < 1e-14 * delta.abs().max(1.0) {
        return Err(Error::Pole { energy, reason: "E equals the qubit level" });
    }
    Ok(((n + 1.0) * theta).sin() / den - (parity.sign() + spec.kappa / (spec.nu * (energy - delta))))
}

/// Pole-free form of the residual, multiplied through by `ν(E-δ) sin(Nθ)`.
fn cleared_residual(theta: f64, spec: &ChainSpec, delta: f64, parity: Parity) -> f64 {
    let n = spec.n as f64;
    let e = spec.epsilon0 + 2.0 * spec.nu * theta.cos();
    let de = spec.nu * (e - delta);
    ((n + 1.0) * theta).sin() * de - (n * theta).sin() * (parity.sign() * de + spec.kappa)
}

/// Roots of the balanced-point equation inside the band.
#[derive(Debug, Clone, Serialize)]
pub struct SymmetricRoots {
    /// `(E, parity)`, descending in energy.
    pub roots: Vec<(f64, Parity)>,
    /// Grid cells (as energy intervals) containing a pole of the residual.
    pub pole_cells: Vec<(f64, f64)>,
    /// Grid size that produced a root count matching the eigensolve.
    pub grid_points: usize,
}

pub const DEFAULT_ROOT_GRID: usize = 4096;
const MAX_GRID_REFINEMENTS: usize = 3;

fn scan_roots(spec: &ChainSpec, delta: f64, points: usize) -> (Vec<(f64, Parity)>, Vec<(f64, f64)>) {
    let n = spec.n as f64;
    let energy = |t: f64| spec.epsilon0 + 2.0 * spec.nu * t.cos();
    let thetas: Vec<f64> = (0..=points).map(|i| PI * i as f64 / points as f64).collect();
    let mut roots = Vec::new();
    let mut poles = Vec::new();

    for w in thetas.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pole_n = (n * a).sin() * (n * b).sin() < 0.0 && a > 0.0 && b < PI;
        let pole_d = (energy(a) - delta) * (energy(b) - delta) < 0.0;
        if pole_n || pole_d {
            poles.push((energy(b), energy(a)));
        }
    }

    for parity in [Parity::Symmetric, Parity::Antisymmetric] {
        let f = |t: f64| cleared_residual(t, spec, delta, parity);
        // θ = 0 and θ = π are band edges, never admissible roots
        let mut fa = f(thetas[1]);
        for w in thetas[1..points].windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let fb = f(b);
            if fa == 0.0 {
                roots.push((energy(a), parity));
            } else if fa * fb < 0.0 {
                let mut lo = fa;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid);
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if fm * lo < 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        lo = fm;
                    }
                    if (energy(a) - energy(b)).abs() < 1e-13 {
                        break;
                    }
                }
                roots.push((energy(0.5 * (a + b)), parity));
            }
            fa = fb;
        }
    }
    roots.sort_by(|x, y| y.0.total_cmp(&x.0));
    (roots, poles)
}

/// Finds every in-band root by a uniform θ scan plus bisection, checking
/// the count against the eigensolve and refining the grid on mismatch.
pub fn solve_symmetric_point_energies(spec: &ChainSpec) -> Result<SymmetricRoots> {
    solve_symmetric_point_energies_with_grid(spec, DEFAULT_ROOT_GRID)
}

pub fn solve_symmetric_point_energies_with_grid(spec: &ChainSpec, grid: usize) -> Result<SymmetricRoots> {
    let delta = require_balanced(spec)?;
    if grid < 4 {
        return Err(Error::InvalidArgument(format!("root grid needs at least 4 points, got {grid}")));
    }
    let expected = closed_spectrum(spec)?.iter().filter(|s| spec.in_band(s.energy)).count();

    let mut points = grid;
    let mut found = 0;
    for _ in 0..=MAX_GRID_REFINEMENTS {
        let (roots, pole_cells) = scan_roots(spec, delta, points);
        if roots.len() == expected {
            return Ok(SymmetricRoots { roots, pole_cells, grid_points: points });
        }
        found = roots.len();
        points *= 4;
    }
    Err(Error::RootCountMismatch { found, expected })
}

/// Probability split of a state between the two arms and the qubit levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub left: f64,
    pub right: f64,
    pub qubits: f64,
}

pub fn localization_weights(state: &QuantumState) -> Weights {
    let n = state.half_length();
    let a = &state.amplitudes;
    let sum = |r: std::ops::Range<usize>| r.map(|i| a[i].norm_sqr()).sum::<f64>();
    let total = a.norm_squared();
    Weights { left: sum(0..n) / total, right: sum(n..2 * n) / total, qubits: sum(2 * n..2 * n + 2) / total }
}

/// Mirror parity of a state, if it has one within `tol`.
pub fn reflection_parity(state: &QuantumState, tol: f64) -> Option<Parity> {
    let perm = reflection_permutation(state.half_length());
    let a = &state.amplitudes;
    let defect = |sign: f64| perm.iter().enumerate().map(|(i, &j)| (a[j] - a[i] * sign).norm()).fold(0.0, f64::max);
    if defect(1.0) < tol {
        Some(Parity::Symmetric)
    } else if defect(-1.0) < tol {
        Some(Parity::Antisymmetric)
    } else {
        None
    }
}

/// Two adjacent in-band states, numbered from the band top.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDescriptor {
    /// 1 for the topmost pair (I), 2 for the next (II), ...
    pub pair_index: usize,
    pub e_upper: f64,
    pub e_lower: f64,
    /// Splitting `e_upper - e_lower`.
    pub rabi: f64,
    pub weights_upper: Weights,
    pub weights_lower: Weights,
    /// Positions of the two members in the input spectrum.
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairClassification {
    pub pairs: Vec<PairDescriptor>,
    /// In-band state left over at the bottom when the count is odd.
    pub unpaired: Option<usize>,
    /// States set aside as qubit-localized (`w_qubits > 0.5`).
    pub qubit_localized: Vec<usize>,
}

pub const QUBIT_WEIGHT_THRESHOLD: f64 = 0.5;
const DEGENERACY_TOL: f64 = 1e-12;

/// Groups in-band, chain-extended states into consecutive pairs from the
/// band top. The wire always holds an odd number of such states when both
/// qubit levels sit outside the band; the bottom one is then reported in
/// [`PairClassification::unpaired`] instead of failing.
pub fn classify_pairs(spectrum: &[QuantumState], spec: &ChainSpec) -> Result<PairClassification> {
    if spectrum.len() != spec.dim() {
        return Err(Error::Classification(format!(
            "spectrum has {} states, expected {}",
            spectrum.len(),
            spec.dim()
        )));
    }
    let mut qubit_localized = Vec::new();
    let mut band: Vec<usize> = Vec::new();
    for (i, s) in spectrum.iter().enumerate() {
        if !spec.in_band(s.energy) {
            continue;
        }
        if localization_weights(s).qubits > QUBIT_WEIGHT_THRESHOLD {
            qubit_localized.push(i);
        } else {
            band.push(i);
        }
    }
    let rank = |i: usize| match reflection_parity(&spectrum[i], 1e-8) {
        Some(Parity::Symmetric) => 0,
        Some(Parity::Antisymmetric) => 1,
        None => 2,
    };
    band.sort_by(|&a, &b| {
        let (ea, eb) = (spectrum[a].energy, spectrum[b].energy);
        if (ea - eb).abs() < DEGENERACY_TOL {
            rank(a).cmp(&rank(b))
        } else {
            eb.total_cmp(&ea)
        }
    });

    let pairs = band
        .chunks_exact(2)
        .enumerate()
        .map(|(k, c)| {
            let (u, l) = (&spectrum[c[0]], &spectrum[c[1]]);
            PairDescriptor {
                pair_index: k + 1,
                e_upper: u.energy,
                e_lower: l.energy,
                rabi: (u.energy - l.energy).max(0.0),
                weights_upper: localization_weights(u),
                weights_lower: localization_weights(l),
                upper: c[0],
                lower: c[1],
            }
        })
        .collect();
    let unpaired = if band.len() % 2 == 1 { band.last().copied() } else { None };
    Ok(PairClassification { pairs, unpaired, qubit_localized })
}

/// Roman numeral for pair labels.
pub fn pair_label(index: usize) -> String {
    const TABLE: [(usize, &str); 9] =
        [(100, "C"), (90, "XC"), (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")];
    let mut rest = index;
    let mut out = String::new();
    for (v, s) in TABLE {
        while rest >= v {
            out.push_str(s);
            rest -= v;
        }
    }
    out
}
