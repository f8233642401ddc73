//! Adaptive Taylor-series integrator for linear, time-independent equations
//! `dy/dt = L y`.
//!
//! Each step sums `Σ_k (hL)^k y / k!` until the trailing terms drop below a
//! fraction of the local tolerance `atol + rtol·‖y‖∞`. The per-step Taylor
//! polynomial doubles as a dense interpolant. Step size adapts so that a step
//! needs roughly 12–22 terms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const MAX_TERMS: usize = 60;
const TRUNCATION_SAFETY: f64 = 1e-3;
const TARGET_SCALED_STEP: f64 = 2.5;

/// A linear operator `y ↦ L y` acting on matrices (vectors are `d×1`).
pub trait LinearGenerator {
    /// Writes `L y` into `out`, which has the shape of `y`.
    fn apply(&self, y: &CMatrix, out: &mut CMatrix);

    /// Any upper bound on `‖L‖`; only used to pick the first step.
    fn norm_bound(&self) -> f64;

    /// When true, the state is re-symmetrized `y ← (y + y†)/2` after each step.
    fn preserves_hermiticity(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Tolerances { rtol, atol }
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.as_slice().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt()
}

fn scale_real(m: &mut CMatrix, f: f64) {
    for z in m.as_mut_slice() {
        z.re *= f;
        z.im *= f;
    }
}

fn add_assign(acc: &mut CMatrix, x: &CMatrix) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *a += b;
    }
}

fn symmetrize(m: &mut CMatrix) {
    let d = m.nrows();
    for j in 0..d {
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)] = Complex64::new(m[(j, j)].re, 0.0);
    }
}

/// Stepper state. Call [`TaylorIntegrator::step`] repeatedly; between steps
/// [`TaylorIntegrator::dense`] interpolates inside the last accepted step.
pub struct TaylorIntegrator<'a, G: LinearGenerator> {
    generator: &'a G,
    tol: Tolerances,
    t: f64,
    y: CMatrix,
    h: f64,
    terms: Vec<CMatrix>,
    n_terms: usize,
    step_start: f64,
    step_len: f64,
    steps: usize,
    /// Largest `‖y - y†‖∞` seen before re-symmetrization.
    pub max_asymmetry: f64,
}

impl<'a, G: LinearGenerator> TaylorIntegrator<'a, G> {
    pub fn new(generator: &'a G, y0: CMatrix, t0: f64, tol: Tolerances) -> Self {
        let bound = generator.norm_bound();
        let h = if bound > 0.0 { TARGET_SCALED_STEP / bound } else { f64::INFINITY };
        TaylorIntegrator {
            generator,
            tol,
            t: t0,
            terms: vec![y0.clone()],
            y: y0,
            h,
            n_terms: 0,
            step_start: t0,
            step_len: 0.0,
            steps: 0,
            max_asymmetry: 0.0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &CMatrix {
        &self.y
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Start and end of the last accepted step.
    pub fn last_step(&self) -> (f64, f64) {
        (self.step_start, self.step_start + self.step_len)
    }

    /// Advances by one accepted step, never past `t_max`.
    pub fn step(&mut self, t_max: f64) -> Result<()> {
        if t_max <= self.t {
            return Err(Error::Integrator { t: self.t, reason: format!("cannot step to {t_max}") });
        }
        let eps = TRUNCATION_SAFETY * (self.tol.atol + self.tol.rtol * max_abs(&self.y));
        self.terms[0].copy_from(&self.y);
        loop {
            let remaining = t_max - self.t;
            // stretch onto t_max rather than leave a rounding-sized remainder
            let lands = self.h >= remaining - 1e-12 * t_max.abs().max(1.0);
            let h = if lands { remaining } else { self.h };
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::Integrator { t: self.t, reason: "step size underflow".into() });
            }
            let mut prev_norm = max_abs(&self.y);
            let mut converged = None;
            for k in 1..=MAX_TERMS {
                if self.terms.len() <= k {
                    self.terms.push(CMatrix::zeros(self.y.nrows(), self.y.ncols()));
                }
                let (done, rest) = self.terms.split_at_mut(k);
                let out = &mut rest[0];
                self.generator.apply(&done[k - 1], out);
                scale_real(out, h / k as f64);
                let norm = max_abs(out);
                if !norm.is_finite() {
                    break;
                }
                if k >= 2 && norm + prev_norm <= eps {
                    converged = Some(k);
                    break;
                }
                prev_norm = norm;
            }
            let Some(k) = converged else {
                self.h = h * 0.5;
                continue;
            };

            let mut y_new = self.terms[k].clone();
            for j in (0..k).rev() {
                add_assign(&mut y_new, &self.terms[j]);
            }
            if self.generator.preserves_hermiticity() {
                let asym = (0..y_new.ncols())
                    .flat_map(|j| (0..y_new.nrows()).map(move |i| (i, j)))
                    .map(|(i, j)| (y_new[(i, j)] - y_new[(j, i)].conj()).norm_sqr())
                    .fold(0.0, f64::max)
                    .sqrt();
                self.max_asymmetry = self.max_asymmetry.max(asym);
                symmetrize(&mut y_new);
            }

            self.n_terms = k;
            self.step_start = self.t;
            self.step_len = h;
            self.steps += 1;
            self.t = if lands { t_max } else { self.t + h };
            self.y = y_new;
            if h == self.h {
                if k < 12 {
                    self.h *= 1.3;
                } else if k > 22 {
                    self.h *= 0.75;
                }
            }
            return Ok(());
        }
    }

    /// Dense output at `t` inside the last accepted step.
    pub fn dense(&self, t: f64) -> CMatrix {
        if self.steps == 0 || self.step_len == 0.0 {
            return self.y.clone();
        }
        let theta = ((t - self.step_start) / self.step_len).clamp(0.0, 1.0);
        if theta == 1.0 {
            return self.y.clone();
        }
        let mut acc = self.terms[self.n_terms].clone();
        for k in (0..self.n_terms).rev() {
            scale_real(&mut acc, theta);
            add_assign(&mut acc, &self.terms[k]);
        }
        if self.generator.preserves_hermiticity() {
            symmetrize(&mut acc);
        }
        acc
    }

    /// Integrates through a sorted grid, returning the state at each point.
    pub fn sample(&mut self, grid: &[f64]) -> Result<Vec<CMatrix>> {
        let mut out = Vec::with_capacity(grid.len());
        let t_end = grid.last().copied().unwrap_or(self.t);
        for &t in grid {
            if t < self.step_start {
                return Err(Error::InvalidArgument("time grid must be ascending and start at or after t0".into()));
            }
            while self.t < t {
                self.step(t_end)?;
            }
            if t == self.t {
                out.push(self.y.clone());
            } else {
                out.push(self.dense(t));
            }
        }
        Ok(out)
    }
}

/// Dense matrix acting by left multiplication.
pub struct MatrixGenerator {
    pub matrix: CMatrix,
}

impl LinearGenerator for MatrixGenerator {
    fn apply(&self, y: &CMatrix, out: &mut CMatrix) {
        self.matrix.mul_to(y, out);
    }

    fn norm_bound(&self) -> f64 {
        (0..self.matrix.nrows())
            .map(|i| self.matrix.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
