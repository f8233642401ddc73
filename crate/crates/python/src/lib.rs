//! Python bindings. Results come back as plain lists, tuples and complex numbers.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use superchain::closed_solver::{self, Parity};
use superchain::liouville::{self, CoherenceMode, DensityMatrix, InitialState};
use superchain::{dynamics, open_solver, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Wire of `2n` sites between two qubits.
#[pyclass(name = "ChainSpec", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyChainSpec {
    inner: superchain::ChainSpec,
}

#[pymethods]
impl PyChainSpec {
    #[new]
    #[pyo3(signature = (n=10, epsilon0=0.0, nu=1.0, delta_l=2.5, delta_r=2.5, lam=2.0, kappa=4.0, gamma=0.0, alpha_phi=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n: usize,
        epsilon0: f64,
        nu: f64,
        delta_l: f64,
        delta_r: f64,
        lam: f64,
        kappa: f64,
        gamma: f64,
        alpha_phi: f64,
    ) -> PyResult<Self> {
        let inner = superchain::ChainSpec { n, epsilon0, nu, delta_l, delta_r, lambda: lam, kappa, gamma, alpha_phi };
        inner.validate().map_err(py_err)?;
        Ok(PyChainSpec { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }
    #[getter]
    fn alpha_phi(&self) -> f64 {
        self.inner.alpha_phi
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn with_gamma(&self, gamma: f64) -> Self {
        PyChainSpec { inner: self.inner.with_gamma(gamma) }
    }

    fn with_lambda(&self, lam: f64) -> Self {
        PyChainSpec { inner: self.inner.with_lambda(lam) }
    }

    fn with_alpha(&self, alpha_phi: f64) -> Self {
        PyChainSpec { inner: self.inner.with_alpha(alpha_phi) }
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "ChainSpec(n={}, epsilon0={}, nu={}, delta_l={}, delta_r={}, lam={}, kappa={}, gamma={}, alpha_phi={})",
            s.n, s.epsilon0, s.nu, s.delta_l, s.delta_r, s.lambda, s.kappa, s.gamma, s.alpha_phi
        )
    }
}

/// `(energy, amplitudes)` for every level of the closed system, ascending.
#[pyfunction]
fn closed_spectrum(spec: &PyChainSpec) -> PyResult<Vec<(f64, Vec<Complex64>)>> {
    let s = closed_solver::closed_spectrum(&spec.inner).map_err(py_err)?;
    Ok(s.into_iter().map(|q| (q.energy, q.amplitudes.iter().copied().collect())).collect())
}

/// `(pair_index, e_upper, e_lower, rabi)` from the band top down.
#[pyfunction]
fn pairs(spec: &PyChainSpec) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let s = closed_solver::closed_spectrum(&spec.inner).map_err(py_err)?;
    let c = closed_solver::classify_pairs(&s, &spec.inner).map_err(py_err)?;
    Ok(c.pairs.iter().map(|p| (p.pair_index, p.e_upper, p.e_lower, p.rabi)).collect())
}

/// In-band energies at the balanced point, with `"symmetric"` or `"antisymmetric"`.
#[pyfunction]
fn symmetric_point_energies(spec: &PyChainSpec) -> PyResult<Vec<(f64, &'static str)>> {
    let r = closed_solver::solve_symmetric_point_energies(&spec.inner).map_err(py_err)?;
    Ok(r.roots
        .iter()
        .map(|&(e, p)| (e, if p == Parity::Symmetric { "symmetric" } else { "antisymmetric" }))
        .collect())
}

/// Complex energies `e - i gamma_q / 2`, ascending in `e`.
#[pyfunction]
fn open_spectrum(spec: &PyChainSpec) -> PyResult<Vec<Complex64>> {
    Ok(open_solver::open_spectrum(&spec.inner).map_err(py_err)?.eigenvalues())
}

/// Branches tracked across `gammas`: `result[b][i]` is branch `b` at `gammas[i]`.
#[pyfunction]
fn sweep_gamma(spec: &PyChainSpec, gammas: Vec<f64>) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(open_solver::sweep_gamma(&spec.inner, &gammas).map_err(py_err)?.branches)
}

/// Critical coupling of the width segregation and the closed mean level spacing.
#[pyfunction]
fn superradiance(spec: &PyChainSpec, gammas: Vec<f64>) -> PyResult<(f64, f64)> {
    let traj = open_solver::sweep_gamma(&spec.inner, &gammas).map_err(py_err)?;
    let r = open_solver::detect_superradiance(&traj).map_err(py_err)?;
    Ok((r.gamma_crit, r.mean_level_spacing))
}

/// `P(t)` starting from the open eigenstate continued from a closed pair member.
#[pyfunction]
#[pyo3(signature = (spec, t_grid, pair_index=1, upper=true))]
fn survival(spec: &PyChainSpec, t_grid: Vec<f64>, pair_index: usize, upper: bool) -> PyResult<Vec<f64>> {
    let r = dynamics::pair_resonance(&spec.inner, pair_index, upper).map_err(py_err)?;
    let n = r.right_vec.norm();
    let psi = r.right_vec.map(|z| z / n);
    Ok(dynamics::evolve_state(&spec.inner, &psi, &t_grid).map_err(py_err)?.p)
}

/// First crossing of `P(t) = 1/e` on a grid, or `None`.
#[pyfunction]
fn decay_time(t_grid: Vec<f64>, p: Vec<f64>) -> Option<f64> {
    dynamics::decay_time(&t_grid, &p)
}

/// `(tau, censored)` for the coherence of the top open pair state.
#[pyfunction]
#[pyo3(signature = (spec, mode="modulus_sum", initial="open_eigenstate", cap=1e4))]
fn coherence_time(spec: &PyChainSpec, mode: &str, initial: &str, cap: f64) -> PyResult<(f64, bool)> {
    let mode = match mode {
        "modulus_sum" => CoherenceMode::ModulusSum,
        "element_sum" => CoherenceMode::ElementSum,
        m => return Err(PyValueError::new_err(format!("unknown mode '{m}'"))),
    };
    let initial = match initial {
        "open_eigenstate" => InitialState::OpenEigenstate,
        "closed_eigenstate" => InitialState::ClosedEigenstate,
        m => return Err(PyValueError::new_err(format!("unknown initial state '{m}'"))),
    };
    let psi = liouville::scan_initial_state(&spec.inner, initial).map_err(py_err)?;
    let c = liouville::coherence_time(&spec.inner, &DensityMatrix::from_pure(&psi), mode, cap).map_err(py_err)?;
    Ok((c.tau, c.censored))
}

#[pymodule]
fn superchain_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChainSpec>()?;
    m.add_function(wrap_pyfunction!(closed_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(pairs, m)?)?;
    m.add_function(wrap_pyfunction!(symmetric_point_energies, m)?)?;
    m.add_function(wrap_pyfunction!(open_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(superradiance, m)?)?;
    m.add_function(wrap_pyfunction!(survival, m)?)?;
    m.add_function(wrap_pyfunction!(decay_time, m)?)?;
    m.add_function(wrap_pyfunction!(coherence_time, m)?)?;
    Ok(())
}
