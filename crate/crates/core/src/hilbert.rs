//! Operators and states on the truncated space `H_cav(N) ⊗ H_atom(2)`.
//!
//! The ordering is fixed to cavity ⊗ atom everywhere in the crate: the
//! composite basis index of `|n, s⟩` is `2 n + s` with `s = 0` for the lower
//! atomic state `|−⟩` and `s = 1` for the upper state `|+⟩`.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2, ArrayView2, Zip};
use ndarray_linalg::EigValsh;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest operator dimension `tensor` will build.
pub const MAX_TENSOR_DIM: usize = 4096;

/// Photon-number cutoff of the cavity Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockTruncation {
    n_max: usize,
}

impl FockTruncation {
    pub const DEFAULT_N_MAX: usize = 14;

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(invalid("n_max", "photon cutoff must be at least 1"));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn cavity_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Dimension of the composite cavity ⊗ atom space.
    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn index(&self, n: usize, excited: bool) -> usize {
        2 * n + usize::from(excited)
    }
}

impl Default for FockTruncation {
    fn default() -> Self {
        Self {
            n_max: Self::DEFAULT_N_MAX,
        }
    }
}

/// Rates and drive settings in the frame rotating at the drive frequency.
///
/// All quantities are absolute angular frequencies in units where the cavity
/// field decay rate `kappa` is the reference (normally `kappa = 1`). Use
/// [`SystemParams::from_ratios`] to set up an operating point the way it is
/// usually quoted: `g/κ`, `γ/κ`, `ε_d/g` and `Δω_d/g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub eps_d: f64,
    /// `ω_d − ω₀`.
    pub delta_omega_d: f64,
    pub trunc: FockTruncation,
}

impl SystemParams {
    pub fn new(
        g: f64,
        kappa: f64,
        gamma: f64,
        eps_d: f64,
        delta_omega_d: f64,
        trunc: FockTruncation,
    ) -> Result<Self> {
        let p = Self {
            g,
            kappa,
            gamma,
            eps_d,
            delta_omega_d,
            trunc,
        };
        p.validate()?;
        Ok(p)
    }

    /// Operating point from the dimensionless ratios `g/κ`, `γ/κ`, `ε_d/g`
    /// and `Δω_d/g`, with `κ = 1`.
    pub fn from_ratios(
        g_over_kappa: f64,
        gamma_over_kappa: f64,
        eps_over_g: f64,
        detuning_over_g: f64,
        n_max: usize,
    ) -> Result<Self> {
        let g = g_over_kappa;
        Self::new(
            g,
            1.0,
            gamma_over_kappa,
            eps_over_g * g,
            detuning_over_g * g,
            FockTruncation::new(n_max)?,
        )
    }

    /// Two-photon resonance driven so that the effective Rabi frequency
    /// `Ω = 2√2 ε_d²/g` takes the requested value (`κ = 1`). The detuning is
    /// set to `Δω_d = −g/√2 − √2 ε_d²/g`.
    pub fn two_photon_resonance(
        g_over_kappa: f64,
        gamma_over_kappa: f64,
        omega_over_kappa: f64,
        n_max: usize,
    ) -> Result<Self> {
        let g = g_over_kappa;
        let eps = (omega_over_kappa * g / (2.0 * std::f64::consts::SQRT_2)).sqrt();
        let detuning = two_photon_detuning(g, eps);
        Self::new(
            g,
            1.0,
            gamma_over_kappa,
            eps,
            detuning,
            FockTruncation::new(n_max)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eps_d", self.eps_d),
            ("delta_omega_d", self.delta_omega_d),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.g <= 0.0 {
            return Err(invalid("g", "coupling must be positive"));
        }
        if self.kappa <= 0.0 {
            return Err(invalid("kappa", "cavity decay rate must be positive"));
        }
        if self.gamma < 0.0 {
            return Err(invalid("gamma", "spontaneous emission rate must be non-negative"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    pub fn eps_over_g(&self) -> f64 {
        self.eps_d / self.g
    }

    pub fn detuning_over_g(&self) -> f64 {
        self.delta_omega_d / self.g
    }

    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.trunc = FockTruncation::new(n_max)?;
        Ok(self)
    }
}

/// Drive detuning of the two-photon resonance including the drive-induced
/// level shifts.
pub fn two_photon_detuning(g: f64, eps_d: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    -g / s2 - s2 * eps_d * eps_d / g
}

/// Dense square operator.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator(Array2<C64>);

impl QOperator {
    pub fn from_matrix(m: Array2<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Array2::eye(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.0.view()
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.0
    }

    pub fn dag(&self) -> Self {
        Self(self.0.t().mapv(|z| z.conj()))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        max_abs_diff(self.0.view(), self.dag().0.view()) <= tol
    }

    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        self.0.dot(psi)
    }
}

impl Mul for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: &QOperator) -> QOperator {
        QOperator(self.0.dot(&rhs.0))
    }
}

impl Add for &QOperator {
    type Output = QOperator;
    fn add(self, rhs: &QOperator) -> QOperator {
        QOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &QOperator {
    type Output = QOperator;
    fn sub(self, rhs: &QOperator) -> QOperator {
        QOperator(&self.0 - &rhs.0)
    }
}

pub(crate) fn max_abs_diff(a: ArrayView2<C64>, b: ArrayView2<C64>) -> f64 {
    let mut m: f64 = 0.0;
    Zip::from(a).and(b).for_each(|x, y| m = m.max((x - y).norm()));
    m
}

/// Pure state amplitudes in the composite (or any) basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Array1<C64>,
    normalized: bool,
}

impl StateVector {
    /// Normalizes `amps`; fails on a zero vector.
    pub fn normalized(amps: Array1<C64>) -> Result<Self> {
        let n = vector_norm(&amps);
        if n < 1e-300 {
            return Err(Error::NormUnderflow(n));
        }
        Ok(Self {
            amps: amps / C64::new(n, 0.0),
            normalized: true,
        })
    }

    pub fn unnormalized(amps: Array1<C64>) -> Self {
        Self {
            amps,
            normalized: false,
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = Array1::zeros(dim);
        amps[index] = ONE;
        Self {
            amps,
            normalized: true,
        }
    }

    /// `|n, ±⟩` on the composite space.
    pub fn fock_atom(trunc: FockTruncation, n: usize, excited: bool) -> Result<Self> {
        if n > trunc.n_max() {
            return Err(invalid("n", format!("Fock level {n} above cutoff {}", trunc.n_max())));
        }
        Ok(Self::basis(trunc.dim(), trunc.index(n, excited)))
    }

    /// Truncated coherent state `|α⟩ ⊗ |±⟩`, renormalized inside the cutoff.
    pub fn coherent(trunc: FockTruncation, alpha: C64, excited: bool) -> Result<Self> {
        let mut amps = Array1::zeros(trunc.dim());
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..=trunc.n_max() {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            amps[trunc.index(n, excited)] = c;
        }
        Self::normalized(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.amps)
    }

    pub fn density(&self) -> DensityOp {
        let d = self.dim();
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[[i, j]] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityOp(m)
    }
}

pub(crate) fn vector_norm(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp(Array2<C64>);

impl DensityOp {
    /// Wraps a matrix, checking squareness and Hermiticity (1e−10).
    pub fn from_matrix(m: Array2<C64>) -> Result<Self> {
        let op = QOperator::from_matrix(m)?;
        if !op.is_hermitian(1e-10) {
            return Err(invalid("rho", "density operator is not Hermitian"));
        }
        Ok(Self(op.0))
    }

    /// Wraps without checks, for generator outputs whose Hermiticity is
    /// itself under test.
    pub(crate) fn from_raw(m: Array2<C64>) -> Self {
        Self(m)
    }

    /// Wraps a matrix after symmetrizing away rounding-level anti-Hermitian parts.
    pub fn from_matrix_hermitized(m: Array2<C64>) -> Result<Self> {
        let op = QOperator::from_matrix(m)?;
        let h = (&op.0 + &op.dag().0).mapv(|z| z * 0.5);
        Ok(Self(h))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.diag().sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let dag = self.0.t().mapv(|z| z.conj());
        max_abs_diff(self.0.view(), dag.view())
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        let h = (&self.0 + &self.0.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        Ok(h.eigvalsh(ndarray_linalg::UPLO::Lower)?)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityOp) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = DensityOp(&self.0 - &other.0);
        Ok(0.5 * diff.eigenvalues()?.iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn purity(&self) -> f64 {
        self.0.dot(&self.0).diag().sum().re
    }
}

/// Anything an expectation value can be taken in.
pub trait QuantumState {
    fn dim(&self) -> usize;
    fn expect_unchecked(&self, op: &QOperator) -> C64;
}

impl QuantumState for StateVector {
    fn dim(&self) -> usize {
        self.amps.len()
    }
    fn expect_unchecked(&self, op: &QOperator) -> C64 {
        let v = op.0.dot(&self.amps);
        self.amps.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

impl QuantumState for DensityOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn expect_unchecked(&self, op: &QOperator) -> C64 {
        trace_of_product(op.0.view(), self.0.view())
    }
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: ArrayView2<C64>, b: ArrayView2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[[i, k]] * b[[k, i]];
        }
    }
    acc
}

/// `⟨ψ|op|ψ⟩` or `tr(op ρ)`.
pub fn expectation<S: QuantumState>(op: &QOperator, state: &S) -> Result<C64> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: state.dim(),
        });
    }
    Ok(state.expect_unchecked(op))
}

/// Cavity annihilation operator on the `(n_max + 1)`-dimensional Fock space.
pub fn annihilation(trunc: FockTruncation) -> QOperator {
    let d = trunc.cavity_dim();
    let mut m = Array2::zeros((d, d));
    for n in 1..d {
        m[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    QOperator(m)
}

pub fn creation(trunc: FockTruncation) -> QOperator {
    annihilation(trunc).dag()
}

/// Atomic lowering operator `|−⟩⟨+|` in the basis `(|−⟩, |+⟩)`.
pub fn sigma_minus() -> QOperator {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = ONE;
    QOperator(m)
}

pub fn sigma_plus() -> QOperator {
    sigma_minus().dag()
}

/// Kronecker product `left ⊗ right`.
pub fn tensor(left: &QOperator, right: &QOperator) -> Result<QOperator> {
    let (dl, dr) = (left.dim(), right.dim());
    let dim = dl
        .checked_mul(dr)
        .ok_or(Error::DimensionOverflow {
            dim: usize::MAX,
            limit: MAX_TENSOR_DIM,
        })?;
    if dim > MAX_TENSOR_DIM {
        return Err(Error::DimensionOverflow {
            dim,
            limit: MAX_TENSOR_DIM,
        });
    }
    let mut m = Array2::zeros((dim, dim));
    for i in 0..dl {
        for j in 0..dl {
            let l = left.0[[i, j]];
            if l == ZERO {
                continue;
            }
            for k in 0..dr {
                for q in 0..dr {
                    m[[i * dr + k, j * dr + q]] = l * right.0[[k, q]];
                }
            }
        }
    }
    Ok(QOperator(m))
}

/// Traces out the atom from a composite density operator.
pub fn partial_trace_atom(rho: &DensityOp) -> Result<DensityOp> {
    let d = rho.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::NotComposite(d));
    }
    let dc = d / 2;
    let mut m = Array2::zeros((dc, dc));
    for i in 0..dc {
        for j in 0..dc {
            m[[i, j]] = rho.0[[2 * i, 2 * j]] + rho.0[[2 * i + 1, 2 * j + 1]];
        }
    }
    Ok(DensityOp(m))
}

/// Cavity block `⟨s|ρ|s⟩` of a composite density operator for a fixed atomic
/// state; not normalized.
pub fn atom_projected_block(rho: &DensityOp, excited: bool) -> Result<DensityOp> {
    let d = rho.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::NotComposite(d));
    }
    let s = usize::from(excited);
    let dc = d / 2;
    let m = Array2::from_shape_fn((dc, dc), |(i, j)| rho.0[[2 * i + s, 2 * j + s]]);
    Ok(DensityOp(m))
}

/// The standard operator set of the Jaynes–Cummings model on the composite space.
#[derive(Clone, Debug)]
pub struct JcOperators {
    pub trunc: FockTruncation,
    pub a: QOperator,
    pub adag: QOperator,
    pub sm: QOperator,
    pub sp: QOperator,
    /// `a†a`
    pub n_cav: QOperator,
    /// `σ₊σ₋`
    pub n_atom: QOperator,
    pub identity: QOperator,
}

impl JcOperators {
    pub fn new(trunc: FockTruncation) -> Self {
        let id_c = QOperator::identity(trunc.cavity_dim());
        let id_a = QOperator::identity(2);
        // dimensions are bounded by FockTruncation, far below MAX_TENSOR_DIM in practice
        let a = tensor(&annihilation(trunc), &id_a).expect("cavity operator dimension");
        let sm = tensor(&id_c, &sigma_minus()).expect("atom operator dimension");
        let adag = a.dag();
        let sp = sm.dag();
        let n_cav = &adag * &a;
        let n_atom = &sp * &sm;
        Self {
            trunc,
            a,
            adag,
            sm,
            sp,
            n_cav,
            n_atom,
            identity: QOperator::identity(trunc.dim()),
        }
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    /// Quadrature amplitude `A_θ = ½(a e^{−iθ} + a† e^{iθ})`.
    pub fn quadrature(&self, theta: f64) -> QOperator {
        let e = C64::from_polar(1.0, -theta);
        &self.a.scale(e * 0.5) + &self.adag.scale(e.conj() * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trunc(n: usize) -> FockTruncation {
        FockTruncation::new(n).unwrap()
    }

    #[test]
    fn ladder_elements() {
        let a = annihilation(trunc(1));
        assert_eq!(a.matrix()[[0, 1]], ONE);
        let a2 = annihilation(trunc(2));
        assert_abs_diff_eq!(a2.matrix()[[1, 2]].re, 2f64.sqrt(), epsilon = 1e-15);
        assert!(a2.matrix().column(0).iter().all(|z| *z == ZERO));
    }

    #[test]
    fn truncation_requires_one_photon() {
        assert!(FockTruncation::new(0).is_err());
        assert_eq!(trunc(14).dim(), 30);
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let t = trunc(6);
        let a = annihilation(t);
        let c = a.commutator(&a.dag());
        for n in 0..t.n_max() {
            for m in 0..t.n_max() {
                let expect = if n == m { ONE } else { ZERO };
                assert_abs_diff_eq!((c.matrix()[[n, m]] - expect).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn atomic_completeness() {
        let sm = sigma_minus();
        let sp = sigma_plus();
        let s = &(&sm * &sp) + &(&sp * &sm);
        assert_eq!(s, QOperator::identity(2));
    }

    #[test]
    fn tensor_identity_and_dimension() {
        let i2 = QOperator::identity(2);
        assert_eq!(tensor(&i2, &i2).unwrap(), QOperator::identity(4));
        let a = annihilation(trunc(1));
        assert_eq!(tensor(&a, &i2).unwrap().dim(), 4);
    }

    #[test]
    fn tensor_overflow() {
        let big = QOperator::identity(100);
        assert!(matches!(
            tensor(&big, &big),
            Err(Error::DimensionOverflow { dim: 10000, .. })
        ));
    }

    #[test]
    fn fock_expectations() {
        let t = trunc(4);
        let ops = JcOperators::new(t);
        let vac = StateVector::fock_atom(t, 0, false).unwrap();
        assert_eq!(expectation(&ops.n_cav, &vac).unwrap(), ZERO);
        let one = StateVector::fock_atom(t, 1, false).unwrap();
        assert_abs_diff_eq!(expectation(&ops.n_cav, &one).unwrap().re, 1.0, epsilon = 1e-14);
        let rho = one.density();
        assert_abs_diff_eq!(expectation(&ops.n_cav, &rho).unwrap().re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let ops = JcOperators::new(trunc(2));
        let psi = StateVector::basis(4, 0);
        assert!(matches!(
            expectation(&ops.n_cav, &psi),
            Err(Error::DimensionMismatch { expected: 6, found: 4 })
        ));
    }

    #[test]
    fn coherent_quadrature_matches_series() {
        // ⟨A_θ⟩ on a small coherent state equals |α| cos(arg α − θ) once the
        // Fock series is summed up to the cutoff.
        let t = trunc(20);
        let ops = JcOperators::new(t);
        let alpha = C64::from_polar(0.8, 0.6);
        let psi = StateVector::coherent(t, alpha, false).unwrap();
        for theta in [0.0, 0.3, 1.2, 2.5] {
            let got = expectation(&ops.quadrature(theta), &psi).unwrap();
            let want = alpha.norm() * (alpha.arg() - theta).cos();
            assert_abs_diff_eq!(got.re, want, epsilon = 1e-10);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let t = trunc(2);
        let cav = StateVector::normalized(Array1::from(vec![ONE, C64::new(0.0, 2.0), ONE])).unwrap();
        let atom = StateVector::normalized(Array1::from(vec![ONE, C64::new(0.5, 0.5)])).unwrap();
        let rho_c = QOperator::from_matrix(cav.density().into_matrix()).unwrap();
        let rho_a = QOperator::from_matrix(atom.density().into_matrix()).unwrap();
        let prod = DensityOp::from_matrix(tensor(&rho_c, &rho_a).unwrap().into_matrix()).unwrap();
        let red = partial_trace_atom(&prod).unwrap();
        assert!(max_abs_diff(red.matrix().view(), rho_c.matrix().view()) < 1e-14);
        let _ = t;
    }

    #[test]
    fn partial_trace_of_entangled_state() {
        let t = trunc(1);
        let mut amps = Array1::zeros(t.dim());
        amps[t.index(0, true)] = ONE;
        amps[t.index(1, false)] = ONE;
        let psi = StateVector::normalized(amps).unwrap();
        let red = partial_trace_atom(&psi.density()).unwrap();
        assert_abs_diff_eq!(red.matrix()[[0, 0]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[[1, 1]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[[0, 1]].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_rejects_odd_dimension() {
        let rho = DensityOp::from_matrix(Array2::eye(3)).unwrap();
        assert!(matches!(partial_trace_atom(&rho), Err(Error::NotComposite(3))));
    }

    #[test]
    fn parameter_validation() {
        assert!(SystemParams::from_ratios(-1.0, 0.0, 0.1, 0.0, 4).is_err());
        assert!(SystemParams::from_ratios(10.0, -0.1, 0.1, 0.0, 4).is_err());
        assert!(SystemParams::from_ratios(10.0, 0.0, f64::NAN, 0.0, 4).is_err());
        let p = SystemParams::from_ratios(200.0, 0.0, 0.03, -0.7114, 14).unwrap();
        assert_abs_diff_eq!(p.eps_d, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.delta_omega_d, -142.28, epsilon = 1e-9);
    }

    #[test]
    fn resonance_from_rabi_frequency() {
        let p = SystemParams::two_photon_resonance(1000.0, 0.0, 10.0 / 2f64.sqrt(), 14).unwrap();
        let omega = 2.0 * 2f64.sqrt() * p.eps_d * p.eps_d / p.g;
        assert_abs_diff_eq!(omega, 10.0 / 2f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(p.eps_d, 50.0, epsilon = 1e-10);
    }
}
