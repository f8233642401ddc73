//! Pure-state evolution `ψ(t) = exp(-i H_eff t) ψ₀` and the survival
//! probability `P(t) = ‖ψ(t)‖²`.

use num_complex::Complex64;
use serde::Serialize;

use crate::closed_solver::classify_pairs;
use crate::closed_solver::closed_spectrum;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::model::{build_effective_hamiltonian, ChainSpec};
use crate::open_solver::{continue_closed_level, open_spectrum, OpenSpectrum, Resonance};
use crate::propagate::{MatrixGenerator, TaylorIntegrator, Tolerances};

/// Tolerances of the direct integration path.
pub const DIRECT_TOLERANCES: Tolerances = Tolerances::new(1e-10, 1e-14);
/// Largest allowed gap between the two propagation paths.
pub const CROSS_CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Expansion in the biorthogonal eigenbasis.
    Spectral,
    /// Adaptive Taylor integration of `dψ/dt = -i H_eff ψ`.
    Direct,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub t_grid: Vec<f64>,
    /// `ψ(t)` in the site basis.
    pub states: Vec<CVector>,
    /// `‖ψ(t)‖²`.
    pub p: Vec<f64>,
    /// Path that produced `states`.
    pub method: Method,
    /// Largest `|P_spectral - P_direct|` when both paths ran.
    pub cross_check: Option<f64>,
}

fn check_inputs(psi0: &CVector, t_grid: &[f64], dim: usize) -> Result<()> {
    if psi0.len() != dim {
        return Err(Error::InvalidArgument(format!("state has length {}, expected {dim}", psi0.len())));
    }
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!("initial state must be normalized, norm = {}", psi0.norm())));
    }
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be non-negative and ascending".into()));
    }
    Ok(())
}

/// Spectral propagator: `ψ(t) = Σ_q c_q e^{-iℰ_q t} |r_q⟩` with `c_q = ⟨l_q|ψ₀⟩`.
pub struct SpectralPropagator {
    eigenvalues: Vec<Complex64>,
    coefficients: Vec<Complex64>,
    right: Vec<CVector>,
}

impl SpectralPropagator {
    pub fn new(spectrum: &OpenSpectrum, psi0: &CVector) -> Self {
        SpectralPropagator {
            eigenvalues: spectrum.eigenvalues(),
            coefficients: spectrum.resonances.iter().map(|r| r.left_vec.dotc(psi0)).collect(),
            right: spectrum.resonances.iter().map(|r| r.right_vec.clone()).collect(),
        }
    }

    pub fn state(&self, t: f64) -> CVector {
        let mut psi = CVector::zeros(self.right[0].len());
        for ((e, c), r) in self.eigenvalues.iter().zip(&self.coefficients).zip(&self.right) {
            psi.axpy(*c * (Complex64::new(0.0, -t) * e).exp(), r, Complex64::new(1.0, 0.0));
        }
        psi
    }
}

fn direct_states(h: &CMatrix, psi0: &CVector, t_grid: &[f64]) -> Result<Vec<CVector>> {
    let generator = MatrixGenerator { matrix: h * Complex64::new(0.0, -1.0) };
    let y0 = CMatrix::from_column_slice(psi0.len(), 1, psi0.as_slice());
    let mut it = TaylorIntegrator::new(&generator, y0, 0.0, DIRECT_TOLERANCES);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        while it.t() < t {
            it.step(t)?;
        }
        out.push(it.state().column(0).into_owned());
    }
    Ok(out)
}

/// Evolves `psi0` under the effective Hamiltonian.
///
/// The spectral path is used unless the spectrum is flagged as close to an
/// exceptional point; both paths run and must agree on `‖ψ(t)‖²` within
/// [`CROSS_CHECK_TOL`].
pub fn evolve_state(spec: &ChainSpec, psi0: &CVector, t_grid: &[f64]) -> Result<EvolutionResult> {
    check_inputs(psi0, t_grid, spec.dim())?;
    let h = build_effective_hamiltonian(spec)?.matrix();
    let direct = direct_states(&h, psi0, t_grid)?;
    let p_direct: Vec<f64> = direct.iter().map(|v| v.norm_squared()).collect();

    let spectrum = open_spectrum(spec)?;
    if spectrum.near_exceptional_point() {
        return Ok(EvolutionResult {
            t_grid: t_grid.to_vec(),
            states: direct,
            p: p_direct,
            method: Method::Direct,
            cross_check: None,
        });
    }

    let prop = SpectralPropagator::new(&spectrum, psi0);
    let states: Vec<CVector> = t_grid.iter().map(|&t| prop.state(t)).collect();
    let p: Vec<f64> = states.iter().map(|v| v.norm_squared()).collect();
    let gap = p.iter().zip(&p_direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > CROSS_CHECK_TOL {
        return Err(Error::Consistency(format!(
            "spectral and direct propagation disagree on the norm by {gap:e}"
        )));
    }
    Ok(EvolutionResult { t_grid: t_grid.to_vec(), states, p, method: Method::Spectral, cross_check: Some(gap) })
}

/// `P(t) = ‖ψ(t)‖²` on the grid.
pub fn survival_probability(spec: &ChainSpec, psi0: &CVector, t_grid: &[f64]) -> Result<Vec<f64>> {
    Ok(evolve_state(spec, psi0, t_grid)?.p)
}

/// Exact rate `-dP/dt = ⟨ψ|W|ψ⟩`.
pub fn norm_loss_rate(spec: &ChainSpec, psi: &CVector) -> Result<f64> {
    let w = build_effective_hamiltonian(spec)?.w_diag;
    Ok(psi.iter().zip(w.iter()).map(|(a, w)| w * a.norm_sqr()).sum())
}

/// First time `P` falls to `1/e`, by linear interpolation of `ln P` between
/// grid points. `None` if it never does on the grid.
pub fn decay_time(t_grid: &[f64], p: &[f64]) -> Option<f64> {
    let target = -1.0;
    let lp: Vec<f64> = p.iter().map(|x| x.max(f64::MIN_POSITIVE).ln()).collect();
    for i in 1..lp.len() {
        if lp[i] <= target {
            if lp[i - 1] <= target {
                return Some(t_grid[i - 1]);
            }
            let f = (target - lp[i - 1]) / (lp[i] - lp[i - 1]);
            return Some(t_grid[i - 1] + f * (t_grid[i] - t_grid[i - 1]));
        }
    }
    None
}

/// Lifetime of `psi0`: the `1/e` time of `P(t)` on a uniform grid of step
/// `dt`, doubling the horizon from `t_initial` up to `t_cap`.
pub fn lifetime(spec: &ChainSpec, psi0: &CVector, dt: f64, t_initial: f64, t_cap: f64) -> Result<Option<f64>> {
    if !(dt > 0.0) || !(t_initial > 0.0) {
        return Err(Error::InvalidArgument("lifetime needs positive dt and horizon".into()));
    }
    let mut horizon = t_initial.min(t_cap);
    loop {
        let steps = (horizon / dt).ceil() as usize;
        let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
        let p = survival_probability(spec, psi0, &grid)?;
        if let Some(t) = decay_time(&grid, &p) {
            return Ok(Some(t));
        }
        if horizon >= t_cap {
            return Ok(None);
        }
        horizon = (2.0 * horizon).min(t_cap);
    }
}

/// Right eigenvector of `H_eff` continued from a member of a closed pair
/// (pair 1 is nearest the band top), with unit norm.
pub fn pair_resonance(spec: &ChainSpec, pair_index: usize, upper: bool) -> Result<Resonance> {
    Ok(pair_resonances(spec, pair_index, upper, &[spec.gamma])?.remove(0))
}

/// [`pair_resonance`] at several values of γ, sharing one continuation path.
pub fn pair_resonances(spec: &ChainSpec, pair_index: usize, upper: bool, gammas: &[f64]) -> Result<Vec<Resonance>> {
    let closed_spec = spec.with_gamma(0.0);
    let closed = closed_spectrum(&closed_spec)?;
    let pairs = classify_pairs(&closed, &closed_spec)?;
    let pair = pairs
        .pairs
        .iter()
        .find(|p| p.pair_index == pair_index)
        .ok_or_else(|| Error::Classification(format!("no pair with index {pair_index}")))?;
    let level = if upper { pair.upper } else { pair.lower };
    continue_closed_level(spec, level, gammas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_eigenstate_is_stationary() {
        let spec = ChainSpec::default();
        let s = &closed_spectrum(&spec).unwrap()[7];
        let grid: Vec<f64> = (0..20).map(|k| k as f64 * 1.7).collect();
        let r = evolve_state(&spec, &s.amplitudes, &grid).unwrap();
        for psi in &r.states {
            assert!((s.amplitudes.dotc(psi).norm() - 1.0).abs() < 1e-9);
        }
        assert!(r.p.iter().all(|p| (p - 1.0).abs() < 1e-9));
    }

    #[test]
    fn paths_agree_and_norm_decreases() {
        let spec = ChainSpec::default().with_gamma(2.5);
        let mut psi = CVector::zeros(spec.dim());
        psi[3] = Complex64::new(0.6, 0.0);
        psi[15] = Complex64::new(0.0, 0.8);
        let grid: Vec<f64> = (0..200).map(|k| k as f64 * 0.25).collect();
        let r = evolve_state(&spec, &psi, &grid).unwrap();
        assert_eq!(r.method, Method::Spectral);
        assert!(r.cross_check.unwrap() < 1e-8);
        assert!((r.p[0] - 1.0).abs() < 1e-12);
        assert!(r.p.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn decay_time_interpolates_log() {
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let p: Vec<f64> = grid.iter().map(|t| (-0.5 * t).exp()).collect();
        assert!((decay_time(&grid, &p).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(decay_time(&grid[..5], &p[..5]), None);
    }

    #[test]
    fn rejects_unnormalized_state() {
        let spec = ChainSpec::default();
        let psi = CVector::from_element(spec.dim(), Complex64::new(1.0, 0.0));
        assert!(evolve_state(&spec, &psi, &[0.0, 1.0]).is_err());
    }
}
