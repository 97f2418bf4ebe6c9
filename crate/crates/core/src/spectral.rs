//! Eigen-decomposition of a Liouvillian, reused across many delays.
//!
//! With `L = V Λ V⁻¹`, two-time averages become finite exponential sums:
//! `tr[A e^{Lτ} X] = Σ_k u_k w_k e^{λ_k τ}` where `u = vec(Aᵀ)ᵀ V` and
//! `w = V⁻¹ vec(X)`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, FactorizeInto, ReciprocalConditionNum, Solve, LUFactorized};
use ndarray::OwnedRepr;

use crate::error::{Error, Result};
use crate::hilbert::{C64, ZERO};
use crate::liouvillian::{vectorize, Superoperator};

/// Eigenvector bases worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub struct ModalDecomposition {
    dim: usize,
    eigenvalues: Array1<C64>,
    vectors: Array2<C64>,
    lu: LUFactorized<OwnedRepr<C64>>,
    condition: f64,
}

impl std::fmt::Debug for ModalDecomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModalDecomposition")
            .field("dim", &self.dim)
            .field("condition", &self.condition)
            .finish()
    }
}

impl ModalDecomposition {
    pub fn new(l: &Superoperator) -> Result<Self> {
        let (eigenvalues, vectors) = l.matrix().eig()?;
        let lu = vectors.clone().factorize_into()?;
        let rcond = lu.rcond()?;
        let condition = if rcond > 0.0 { 1.0 / rcond } else { f64::INFINITY };
        if condition > MAX_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Self {
            dim: l.dim(),
            eigenvalues,
            vectors,
            lu,
            condition,
        })
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn eigenvalues(&self) -> &Array1<C64> {
        &self.eigenvalues
    }

    /// Index of the eigenvalue closest to zero.
    pub fn stationary_mode(&self) -> usize {
        let mut best = 0;
        for (k, l) in self.eigenvalues.iter().enumerate() {
            if l.norm() < self.eigenvalues[best].norm() {
                best = k;
            }
        }
        best
    }

    /// Modal coordinates `V⁻¹ vec(X)` of an operator.
    pub fn coefficients(&self, x: &Array2<C64>) -> Result<Array1<C64>> {
        Ok(self.lu.solve(&vectorize(x.view()))?)
    }

    /// Row `vec(Aᵀ)ᵀ V` so that `tr[A Y] = row · (V⁻¹ vec Y)`.
    pub fn observable_row(&self, a: &Array2<C64>) -> Array1<C64> {
        let v = vectorize(a.t());
        v.dot(&self.vectors)
    }

    pub fn series(&self, a: &Array2<C64>, x: &Array2<C64>) -> Result<ModalSeries> {
        let u = self.observable_row(a);
        let w = self.coefficients(x)?;
        Ok(ModalSeries {
            rates: self.eigenvalues.to_vec(),
            amplitudes: u.iter().zip(w.iter()).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `f(τ) = Σ_k c_k e^{λ_k τ}` for τ ≥ 0.
#[derive(Clone, Debug, Default)]
pub struct ModalSeries {
    pub rates: Vec<C64>,
    pub amplitudes: Vec<C64>,
}

impl ModalSeries {
    pub fn eval(&self, tau: f64) -> C64 {
        self.rates
            .iter()
            .zip(&self.amplitudes)
            .map(|(l, c)| c * (l * tau).exp())
            .sum()
    }

    pub fn sample(&self, taus: &[f64]) -> Vec<C64> {
        taus.iter().map(|&t| self.eval(t)).collect()
    }

    /// Replaces the amplitude of mode `k` by `c_k − offset`; used to remove the
    /// stationary product of means from a correlator.
    pub fn subtract_from_mode(&mut self, k: usize, offset: C64) {
        self.amplitudes[k] -= offset;
    }

    pub fn remove_mode(&mut self, k: usize) {
        self.rates.remove(k);
        self.amplitudes.remove(k);
    }

    pub fn scale(&mut self, s: C64) {
        for c in &mut self.amplitudes {
            *c *= s;
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            rates: self.rates.iter().map(|z| z.conj()).collect(),
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn extend(&mut self, other: &ModalSeries) {
        self.rates.extend_from_slice(&other.rates);
        self.amplitudes.extend_from_slice(&other.amplitudes);
    }

    /// `∫₀^∞ e^{iωτ} f(τ) dτ = Σ c_k / (−λ_k − iω)`; requires every retained
    /// mode to decay.
    pub fn fourier_half_line(&self, omega: f64) -> C64 {
        self.rates
            .iter()
            .zip(&self.amplitudes)
            .map(|(l, c)| c / (-l - C64::new(0.0, omega)))
            .sum()
    }

    /// Trapezoid rule for `∫₀^{T} e^{iωτ} f(τ) dτ` on the uniform grid
    /// `τ_j = j·h`, `j = 0..=n`, summed exactly as a geometric series per mode.
    pub fn fourier_trapezoid(&self, omega: f64, h: f64, n: usize) -> C64 {
        let mut total = ZERO;
        for (l, c) in self.rates.iter().zip(&self.amplitudes) {
            let z = (l + C64::new(0.0, omega)) * h;
            total += c * trapezoid_geometric(z, n);
        }
        total * h
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Σ_{j=0}^{n} w_j e^{z j}` with trapezoid weights ½, 1, …, 1, ½.
fn trapezoid_geometric(z: C64, n: usize) -> C64 {
    if z == ZERO {
        return C64::new(n as f64, 0.0);
    }
    let one = C64::new(1.0, 0.0);
    let rn = (z * n as f64).exp();
    expm1(z * (n + 1) as f64) / expm1(z) - (one + rn) * 0.5
}

fn expm1(z: C64) -> C64 {
    if z.norm() > 1e-2 {
        return z.exp() - 1.0;
    }
    let mut term = z;
    let mut sum = z;
    for k in 2..10 {
        term = term * z / k as f64;
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FockTruncation, StateVector, SystemParams};
    use crate::liouvillian::{build_liouvillian, propagate, MasterEquation};

    #[test]
    fn trapezoid_geometric_matches_direct_sum() {
        for z in [C64::new(-0.01, 0.3), C64::new(-1e-8, 2e-7), C64::new(0.0, 0.0), C64::new(-0.5, -1.0)] {
            let n = 400;
            let direct: C64 = (0..=n)
                .map(|j| {
                    let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                    (z * j as f64).exp() * w
                })
                .sum();
            let fast = trapezoid_geometric(z, n);
            assert!((direct - fast).norm() < 1e-9 * direct.norm().max(1.0), "{z}: {direct} vs {fast}");
        }
    }

    #[test]
    fn modal_series_matches_propagation() {
        let p = SystemParams::new(3.0, 1.0, 0.5, 0.8, -0.7, FockTruncation::new(4).unwrap()).unwrap();
        let me = MasterEquation::new(&p).unwrap();
        let l = build_liouvillian(&p).unwrap();
        let modes = ModalDecomposition::new(&l).unwrap();
        let rho0 = StateVector::fock_atom(p.trunc, 2, false).unwrap().density();
        let s = modes.series(me.ops.n_cav.matrix(), rho0.matrix()).unwrap();
        for t in [0.0, 0.4, 1.3] {
            let rho = propagate(&me, &rho0, t).unwrap();
            let direct = crate::hilbert::expectation(&me.ops.n_cav, &rho).unwrap();
            assert!((s.eval(t) - direct).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn spectrum_has_one_zero_and_decaying_rest() {
        let p = SystemParams::new(4.0, 1.0, 0.0, 1.0, -2.0, FockTruncation::new(4).unwrap()).unwrap();
        let modes = ModalDecomposition::new(&build_liouvillian(&p).unwrap()).unwrap();
        let k0 = modes.stationary_mode();
        assert!(modes.eigenvalues()[k0].norm() < 1e-9);
        for (k, l) in modes.eigenvalues().iter().enumerate() {
            if k != k0 {
                assert!(l.re < -1e-6, "{l}");
            }
        }
    }

    #[test]
    fn half_line_transform_of_single_mode() {
        let s = ModalSeries {
            rates: vec![C64::new(-2.0, 1.0)],
            amplitudes: vec![C64::new(1.0, 0.0)],
        };
        let w = 0.7;
        let exact = 1.0 / C64::new(2.0, -1.0 - w);
        assert!((s.fourier_half_line(w) - exact).norm() < 1e-14);
        let h = 1e-3;
        let trap = s.fourier_trapezoid(w, h, 30_000);
        assert!((trap - exact).norm() < 1e-6);
    }
}
