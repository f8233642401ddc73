//! Parameter space, site indexing and Hamiltonian assembly.
//!
//! The intrinsic space has dimension `2N + 2`: the `2N` wire sites
//! `-N..=-1, 1..=N` followed by the excited levels of the left and right
//! qubits. Sites `-1` and `1` are nearest neighbours across the qubit pair.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full parameter set of one system instance.
///
/// The right qubit couples with strength `kappa / lambda`, so raising the
/// left coupling weakens the right one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    /// Half-length: each arm of the wire has `n` sites.
    pub n: usize,
    #[serde(default)]
    pub epsilon0: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    pub delta_l: f64,
    pub delta_r: f64,
    pub lambda: f64,
    pub kappa: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub alpha_phi: f64,
}

fn default_nu() -> f64 {
    1.0
}

impl Default for ChainSpec {
    /// The reference system: `N = 10`, `δ = 2.5`, `κ = 4`, `λ = √κ`, closed.
    fn default() -> Self {
        ChainSpec {
            n: 10,
            epsilon0: 0.0,
            nu: 1.0,
            delta_l: 2.5,
            delta_r: 2.5,
            lambda: 2.0,
            kappa: 4.0,
            gamma: 0.0,
            alpha_phi: 0.0,
        }
    }
}

impl ChainSpec {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_alpha(mut self, alpha_phi: f64) -> Self {
        self.alpha_phi = alpha_phi;
        self
    }

    /// Sets both qubit excitation energies.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta_l = delta;
        self.delta_r = delta;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 2
    }

    /// Coupling between site `1` and the right qubit.
    pub fn right_coupling(&self) -> f64 {
        self.kappa / self.lambda
    }

    /// Checks the parameter invariants. `lambda = 0` passes here; matrix
    /// assembly additionally calls [`ChainSpec::require_coupled`].
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("epsilon0", self.epsilon0),
            ("nu", self.nu),
            ("delta_l", self.delta_l),
            ("delta_r", self.delta_r),
            ("lambda", self.lambda),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("alpha_phi", self.alpha_phi),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("{name} must be finite")));
        }
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("n must be at least 2, got {}", self.n)));
        }
        if self.nu == 0.0 {
            return Err(Error::InvalidSpec("nu must be nonzero".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidSpec(format!("kappa must be positive, got {}", self.kappa)));
        }
        for (name, v) in [("lambda", self.lambda), ("gamma", self.gamma), ("alpha_phi", self.alpha_phi)] {
            if v < 0.0 {
                return Err(Error::InvalidSpec(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Validation plus `lambda > 0`, required wherever `kappa / lambda` enters a matrix.
    pub fn require_coupled(&self) -> Result<()> {
        self.validate()?;
        if self.lambda == 0.0 {
            return Err(Error::InvalidSpec(
                "lambda = 0 makes the right coupling kappa/lambda divergent; use the decoupled-limit routines".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn require_symmetric_qubits(&self) -> Result<f64> {
        if self.delta_l != self.delta_r {
            return Err(Error::InvalidSpec(format!(
                "analytic routine needs delta_l == delta_r (got {} and {})",
                self.delta_l, self.delta_r
            )));
        }
        Ok(self.delta_l)
    }

    /// True when `E` lies strictly inside the Bloch band `|E - ε₀| < 2|ν|`.
    pub fn in_band(&self, energy: f64) -> bool {
        (energy - self.epsilon0).abs() < 2.0 * self.nu.abs()
    }
}

/// A labelled basis state of the intrinsic space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    /// Wire site `n ∈ {-N..-1, 1..N}`.
    Chain(i64),
    ExcitedLeft,
    ExcitedRight,
}

/// Bijection between [`Site`] labels and flat vector positions.
///
/// Sites `-N..-1` map to `0..N`, sites `1..N` to `N..2N`, then the left and
/// right excited levels to `2N` and `2N + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteIndex {
    pub label: Site,
    pub flat: usize,
}

impl SiteIndex {
    pub fn new(n: usize, label: Site) -> Result<Self> {
        let ni = n as i64;
        let flat = match label {
            Site::Chain(s) if (-ni..=-1).contains(&s) => (s + ni) as usize,
            Site::Chain(s) if (1..=ni).contains(&s) => (s - 1) as usize + n,
            Site::Chain(s) => {
                return Err(Error::InvalidArgument(format!("site {s} is outside the chain of half-length {n}")))
            }
            Site::ExcitedLeft => 2 * n,
            Site::ExcitedRight => 2 * n + 1,
        };
        Ok(SiteIndex { label, flat })
    }

    pub fn from_flat(n: usize, flat: usize) -> Result<Self> {
        let label = match flat {
            f if f < n => Site::Chain(f as i64 - n as i64),
            f if f < 2 * n => Site::Chain((f - n) as i64 + 1),
            f if f == 2 * n => Site::ExcitedLeft,
            f if f == 2 * n + 1 => Site::ExcitedRight,
            f => return Err(Error::InvalidArgument(format!("flat index {f} out of range for n = {n}"))),
        };
        Ok(SiteIndex { label, flat })
    }
}

/// Flat position of a site that is known to exist.
pub(crate) fn flat(n: usize, label: Site) -> usize {
    SiteIndex::new(n, label).expect("site label within chain").flat
}

/// Permutation implementing the left/right mirror `n ↔ -n`, `e_L ↔ e_R`.
pub fn reflection_permutation(n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..2 * n).rev().collect();
    p.push(2 * n + 1);
    p.push(2 * n);
    p
}

/// Hermitian core `H₀` and the diagonal width operator `W` of the open system.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub h0: DMatrix<Complex64>,
    pub w_diag: DVector<f64>,
}

impl EffectiveHamiltonian {
    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// The non-Hermitian matrix `H₀ - (i/2) W`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let mut m = self.h0.clone();
        for (i, w) in self.w_diag.iter().enumerate() {
            m[(i, i)] -= Complex64::new(0.0, 0.5 * w);
        }
        m
    }

    /// Row-compressed copy of [`EffectiveHamiltonian::matrix`], used by the
    /// time integrators where the banded structure matters.
    pub fn sparse(&self) -> SparseMatrix {
        SparseMatrix::from_dense(&self.matrix())
    }
}

/// Row-major list of nonzero entries.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseMatrix {
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != Complex64::new(0.0, 0.0))
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        SparseMatrix { dim: m.nrows(), rows }
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Assembles the closed-system Hamiltonian `H₀` as a dense Hermitian matrix.
pub fn build_closed_hamiltonian(spec: &ChainSpec) -> Result<DMatrix<Complex64>> {
    spec.require_coupled()?;
    let n = spec.n;
    let d = spec.dim();
    let re = |x: f64| Complex64::new(x, 0.0);
    let mut h = DMatrix::<Complex64>::zeros(d, d);

    for i in 0..2 * n {
        h[(i, i)] = re(spec.epsilon0);
    }
    h[(2 * n, 2 * n)] = re(spec.delta_l);
    h[(2 * n + 1, 2 * n + 1)] = re(spec.delta_r);

    let mut bond = |a: usize, b: usize, v: f64| {
        h[(a, b)] = re(v);
        h[(b, a)] = re(v);
    };
    // flat positions 0..2N are consecutive along the wire, including the -1/1 bond
    for i in 0..2 * n - 1 {
        bond(i, i + 1, spec.nu);
    }
    bond(flat(n, Site::Chain(-1)), 2 * n, spec.lambda);
    bond(flat(n, Site::Chain(1)), 2 * n + 1, spec.right_coupling());
    Ok(h)
}

/// Assembles `H₀` together with the edge-only width operator `W`.
pub fn build_effective_hamiltonian(spec: &ChainSpec) -> Result<EffectiveHamiltonian> {
    let h0 = build_closed_hamiltonian(spec)?;
    let mut w_diag = DVector::<f64>::zeros(spec.dim());
    w_diag[flat(spec.n, Site::Chain(-(spec.n as i64)))] = spec.gamma;
    w_diag[flat(spec.n, Site::Chain(spec.n as i64))] = spec.gamma;
    Ok(EffectiveHamiltonian { h0, w_diag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn small_chain_layout() {
        let spec = ChainSpec { n: 2, delta_l: 0.0, delta_r: 0.0, lambda: 1.0, kappa: 1.0, ..Default::default() };
        let h = build_closed_hamiltonian(&spec).unwrap();
        assert_eq!(h.shape(), (6, 6));
        let m1 = flat(2, Site::Chain(-1));
        let m2 = flat(2, Site::Chain(-2));
        let p1 = flat(2, Site::Chain(1));
        let row: Vec<Complex64> = h.row(m1).iter().copied().collect();
        let mut expected = vec![c(0.0); 6];
        expected[m2] = c(1.0);
        expected[p1] = c(1.0);
        expected[4] = c(1.0);
        assert_eq!(row, expected);
        assert_eq!(h[(p1, 5)], c(1.0));
    }

    #[test]
    fn site_index_convention() {
        let n = 4;
        assert_eq!(SiteIndex::new(n, Site::Chain(-4)).unwrap().flat, 0);
        assert_eq!(SiteIndex::new(n, Site::Chain(-1)).unwrap().flat, 3);
        assert_eq!(SiteIndex::new(n, Site::Chain(1)).unwrap().flat, 4);
        assert_eq!(SiteIndex::new(n, Site::Chain(4)).unwrap().flat, 7);
        assert_eq!(SiteIndex::new(n, Site::ExcitedLeft).unwrap().flat, 8);
        assert_eq!(SiteIndex::new(n, Site::ExcitedRight).unwrap().flat, 9);
        assert!(SiteIndex::new(n, Site::Chain(0)).is_err());
        assert!(SiteIndex::new(n, Site::Chain(5)).is_err());
        for f in 0..10 {
            let s = SiteIndex::from_flat(n, f).unwrap();
            assert_eq!(SiteIndex::new(n, s.label).unwrap(), s);
        }
        assert!(SiteIndex::from_flat(n, 10).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        let base = ChainSpec::default();
        assert!(build_closed_hamiltonian(&base.with_lambda(0.0)).is_err());
        assert!(build_closed_hamiltonian(&base.with_n(1)).is_err());
        assert!(ChainSpec { nu: 0.0, ..base }.validate().is_err());
        assert!(ChainSpec { kappa: 0.0, ..base }.validate().is_err());
        assert!(base.with_gamma(-1.0).validate().is_err());
        assert!(base.with_lambda(0.0).validate().is_ok());
    }

    #[test]
    fn closed_limit_matches_h0() {
        let eff = build_effective_hamiltonian(&ChainSpec::default()).unwrap();
        assert_eq!(eff.matrix(), eff.h0);
    }

    #[test]
    fn width_operator_is_edge_only() {
        let spec = ChainSpec::default().with_gamma(3.0);
        let eff = build_effective_hamiltonian(&spec).unwrap();
        assert_eq!(eff.w_diag.iter().filter(|w| **w != 0.0).count(), 2);
        assert_eq!(eff.w_diag[0], 3.0);
        assert_eq!(eff.w_diag[2 * spec.n - 1], 3.0);
        let im_trace: f64 = (0..eff.dim()).map(|i| eff.matrix()[(i, i)].im).sum();
        assert_eq!(im_trace, -3.0);
    }

    fn arb_spec() -> impl Strategy<Value = ChainSpec> {
        (2usize..12, -1.0..1.0f64, 0.2..2.0f64, -3.0..3.0f64, -3.0..3.0f64, 0.05..5.0f64, 0.1..6.0f64, 0.0..10.0f64)
            .prop_map(|(n, epsilon0, nu, delta_l, delta_r, lambda, kappa, gamma)| ChainSpec {
                n,
                epsilon0,
                nu,
                delta_l,
                delta_r,
                lambda,
                kappa,
                gamma,
                alpha_phi: 0.0,
            })
    }

    proptest! {
        #[test]
        fn closed_hamiltonian_is_exactly_hermitian(spec in arb_spec()) {
            let h = build_closed_hamiltonian(&spec).unwrap();
            prop_assert_eq!(h.adjoint(), h);
        }

        #[test]
        fn reflection_symmetry_at_balanced_coupling(spec in arb_spec(), quarter in 1u32..20) {
            // balanced point: lambda^2 = kappa and equal qubit energies; dyadic
            // lambda keeps kappa/lambda == lambda exact in floating point
            let lambda = f64::from(quarter) / 4.0;
            let spec = ChainSpec { lambda, kappa: lambda * lambda, delta_r: spec.delta_l, ..spec };
            let h = build_closed_hamiltonian(&spec).unwrap();
            let p = reflection_permutation(spec.n);
            let d = spec.dim();
            let mirrored = DMatrix::from_fn(d, d, |i, j| h[(p[i], p[j])]);
            prop_assert_eq!(mirrored, h);
        }

        #[test]
        fn widths_are_nonnegative_with_trace_two_gamma(spec in arb_spec()) {
            let eff = build_effective_hamiltonian(&spec).unwrap();
            prop_assert!(eff.w_diag.iter().all(|w| *w >= 0.0));
            prop_assert!((eff.w_diag.sum() - 2.0 * spec.gamma).abs() <= 1e-15 * spec.gamma.max(1.0));
        }
    }
}
