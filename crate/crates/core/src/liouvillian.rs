//! Jaynes–Cummings Liouvillian in the frame rotating at the drive frequency.
//!
//! ```text
//! H  = −Δω_d (σ₊σ₋ + a†a) + g (a σ₊ + a† σ₋) + ε_d (a + a†)
//! Lρ = −i[H, ρ] + 2κ D[a]ρ + γ D[σ₋]ρ,   D[X]ρ = XρX† − ½{X†X, ρ}
//! ```
//!
//! Density operators are vectorized by stacking columns: element `(i, j)`
//! sits at index `i + j·d`.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder};
use ndarray_linalg::{FactorizeInto, ReciprocalConditionNum, Solve};

use crate::error::{Error, Result};
use crate::hilbert::{DensityOp, JcOperators, QOperator, SystemParams, C64, I, ONE, ZERO};
use crate::ode::{integrate_adaptive, Tolerance};

pub fn build_hamiltonian(p: &SystemParams) -> QOperator {
    let ops = JcOperators::new(p.trunc);
    hamiltonian_from_ops(p, &ops)
}

pub(crate) fn hamiltonian_from_ops(p: &SystemParams, ops: &JcOperators) -> QOperator {
    let number = &ops.n_atom + &ops.n_cav;
    let coupling = &(&ops.a * &ops.sp) + &(&ops.adag * &ops.sm);
    let drive = &ops.a + &ops.adag;
    let h = &number.scale(C64::new(-p.delta_omega_d, 0.0)) + &coupling.scale(C64::new(p.g, 0.0));
    &h + &drive.scale(C64::new(p.eps_d, 0.0))
}

/// Column-stacked vectorization of a square matrix.
pub fn vectorize(m: ArrayView2<C64>) -> Array1<C64> {
    m.t().iter().copied().collect()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Array1<C64>, dim: usize) -> Array2<C64> {
    let f = Array2::from_shape_vec((dim, dim).f(), v.to_vec()).expect("vector length is dim²");
    f.as_standard_layout().into_owned()
}

/// Anything that generates Markovian dynamics on vectorized density operators.
pub trait Generator: Sync {
    /// Hilbert-space dimension `d` (the generator acts on `d²` vectors).
    fn dim(&self) -> usize;
    fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64>;
    /// Rough upper bound on the magnitude of the generator's eigenvalues,
    /// used to seed step sizes.
    fn rate_scale(&self) -> f64;
}

/// Operator-form Lindblad generator: `Lρ = −i(H_eff ρ − ρ H_eff†) + Σ_k C_k ρ C_k†`.
#[derive(Clone, Debug)]
pub struct MasterEquation {
    pub params: SystemParams,
    pub ops: JcOperators,
    pub hamiltonian: QOperator,
    h_eff: Array2<C64>,
    h_eff_dag: Array2<C64>,
    /// Collapse operators whose `CρC†` term is kept (already scaled by √rate).
    sandwich: Vec<Array2<C64>>,
}

impl MasterEquation {
    pub fn new(p: &SystemParams) -> Result<Self> {
        p.validate()?;
        let ops = JcOperators::new(p.trunc);
        let hamiltonian = hamiltonian_from_ops(p, &ops);
        let cav = ops.a.scale(C64::new((2.0 * p.kappa).sqrt(), 0.0));
        let atom = ops.sm.scale(C64::new(p.gamma.sqrt(), 0.0));
        let mut loss = (&cav.dag() * &cav).into_matrix();
        loss = loss + (&atom.dag() * &atom).into_matrix();
        let h_eff = hamiltonian.matrix() - &(loss * C64::new(0.0, 0.5));
        let h_eff_dag = h_eff.t().mapv(|z| z.conj());
        let mut sandwich = vec![cav.into_matrix()];
        if p.gamma > 0.0 {
            sandwich.push(atom.into_matrix());
        }
        Ok(Self {
            params: *p,
            ops,
            hamiltonian,
            h_eff,
            h_eff_dag,
            sandwich,
        })
    }

    /// The generator `L̄ = L − 2κ a·a†` with the cavity-emission sandwich term
    /// removed, which propagates the no-further-count evolution.
    pub fn without_cavity_jumps(&self) -> Self {
        let mut m = self.clone();
        m.sandwich.remove(0);
        m
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn apply(&self, rho: ArrayView2<C64>) -> Array2<C64> {
        let mut out = self.h_eff.dot(&rho) - rho.dot(&self.h_eff_dag);
        out.mapv_inplace(|z| z * -I);
        for c in &self.sandwich {
            let cr = c.dot(&rho);
            out = out + cr.dot(&c.t().mapv(|z| z.conj()));
        }
        out
    }

    /// Heisenberg-picture adjoint: `L†X = i(H_eff† X − X H_eff) + Σ C†XC`.
    pub fn apply_adjoint(&self, x: ArrayView2<C64>) -> Array2<C64> {
        let mut out = self.h_eff_dag.dot(&x) - x.dot(&self.h_eff);
        out.mapv_inplace(|z| z * I);
        for c in &self.sandwich {
            let cd = c.t().mapv(|z| z.conj());
            out = out + cd.dot(&x).dot(c);
        }
        out
    }

    /// Non-Hermitian effective Hamiltonian `H − (i/2) Σ C†C`.
    pub fn effective_hamiltonian(&self) -> &Array2<C64> {
        &self.h_eff
    }
}

impl Generator for MasterEquation {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        let rho = unvectorize(v, self.dim());
        vectorize(self.apply(rho.view()).view())
    }

    fn rate_scale(&self) -> f64 {
        let p = &self.params;
        let n = p.trunc.n_max() as f64;
        n * p.delta_omega_d.abs()
            + (n.sqrt() + 1.0) * p.g
            + 2.0 * p.eps_d.abs() * n.sqrt()
            + n * p.kappa
            + p.gamma
    }
}

/// Liouvillian as a dense `d² × d²` matrix.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    matrix: Array2<C64>,
    rate_scale: f64,
}

impl Superoperator {
    pub fn from_master_equation(me: &MasterEquation) -> Self {
        let d = me.dim();
        let id: Array2<C64> = Array2::eye(d);
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let mut l = kron(&id, &me.h_eff) - kron(&me.h_eff_dag.t().to_owned(), &id);
        l.mapv_inplace(|z| z * -I);
        for c in &me.sandwich {
            l = l + kron(&c.mapv(|z| z.conj()), c);
        }
        Self {
            dim: d,
            matrix: l,
            rate_scale: me.rate_scale(),
        }
    }

    pub fn from_matrix(dim: usize, matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.nrows(),
            });
        }
        let rate_scale = matrix
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(Self {
            dim,
            matrix,
            rate_scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_sq(&self) -> usize {
        self.dim * self.dim
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn apply(&self, rho: &DensityOp) -> Array2<C64> {
        unvectorize(&self.matrix.dot(&vectorize(rho.matrix().view())), self.dim)
    }

    /// `max_j |Σ_i L[(i,i), j]|`: zero for a trace-preserving generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for j in 0..d * d {
            let s: C64 = (0..d).map(|i| self.matrix[[i + i * d, j]]).sum();
            worst = worst.max(s.norm());
        }
        worst
    }
}

impl Generator for Superoperator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.matrix.dot(v)
    }
    fn rate_scale(&self) -> f64 {
        self.rate_scale
    }
}

pub(crate) fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = x * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn build_liouvillian(p: &SystemParams) -> Result<Superoperator> {
    Ok(Superoperator::from_master_equation(&MasterEquation::new(p)?))
}

/// Reciprocal condition number below which the bordered steady-state system
/// is treated as singular (more than one stationary state).
pub const STEADY_STATE_RCOND_MIN: f64 = 1e-13;

/// Unique stationary state from `L ρ = 0` with the first row replaced by the
/// trace constraint.
pub fn steady_state(l: &Superoperator) -> Result<DensityOp> {
    let d = l.dim();
    let mut m = l.matrix().clone();
    let mut rhs = Array1::<C64>::zeros(d * d);
    m.row_mut(0).fill(ZERO);
    for i in 0..d {
        m[[0, i + i * d]] = ONE;
    }
    rhs[0] = ONE;
    // an exactly zero pivot makes the factorization itself fail
    let lu = m
        .factorize_into()
        .map_err(|_| Error::DegenerateSteadyState { rcond: 0.0 })?;
    let rcond = lu.rcond()?;
    if !(rcond > STEADY_STATE_RCOND_MIN) {
        return Err(Error::DegenerateSteadyState { rcond });
    }
    let x = lu.solve_into(rhs)?;
    let rho = DensityOp::from_matrix_hermitized(unvectorize(&x, d))?;
    let tr = rho.trace();
    DensityOp::from_matrix(rho.into_matrix().mapv(|z| z / tr))
}

/// `e^{Lt} ρ₀` by adaptive Dormand–Prince integration of the vectorized ODE.
pub fn propagate<G: Generator>(l: &G, rho0: &DensityOp, t: f64) -> Result<DensityOp> {
    propagate_with(l, rho0, t, Tolerance::default())
}

pub fn propagate_with<G: Generator>(
    l: &G,
    rho0: &DensityOp,
    t: f64,
    tol: Tolerance,
) -> Result<DensityOp> {
    if t < 0.0 {
        return Err(crate::error::invalid("t", "propagation time must be non-negative"));
    }
    if rho0.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: rho0.dim(),
        });
    }
    let v0 = vectorize(rho0.matrix().view());
    let h0 = 0.5 / l.rate_scale().max(1e-12);
    let v = integrate_adaptive(|v| l.apply_vec(v), v0, t, h0, tol)?;
    Ok(DensityOp::from_raw(unvectorize(&v, l.dim())))
}

/// Heisenberg-picture generator `L†` acting on vectorized observables.
pub struct Adjoint<'a>(pub &'a MasterEquation);

impl Generator for Adjoint<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        let x = unvectorize(v, self.0.dim());
        vectorize(self.0.apply_adjoint(x.view()).view())
    }
    fn rate_scale(&self) -> f64 {
        self.0.rate_scale()
    }
}

/// `e^{L†t} A`, so that `tr[A e^{Lt} ρ] = tr[(e^{L†t} A) ρ]`.
pub fn propagate_observable(me: &MasterEquation, a: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
    if t < 0.0 {
        return Err(crate::error::invalid("t", "propagation time must be non-negative"));
    }
    let adj = Adjoint(me);
    let h0 = 0.5 / adj.rate_scale().max(1e-12);
    let v = integrate_adaptive(|v| adj.apply_vec(v), vectorize(a.view()), t, h0, Tolerance::default())?;
    Ok(unvectorize(&v, me.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, FockTruncation, StateVector};
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::Eigh;

    fn small(eps: f64, delta: f64, gamma: f64) -> SystemParams {
        SystemParams::new(5.0, 1.0, gamma, eps, delta, FockTruncation::new(3).unwrap()).unwrap()
    }

    #[test]
    fn undriven_doublet_splitting() {
        let p = small(0.0, 0.0, 0.0);
        let h = build_hamiltonian(&p);
        let (vals, _) = h.matrix().eigh(ndarray_linalg::UPLO::Lower).unwrap();
        let mut v: Vec<f64> = vals.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // n = 0 (0), n = 1 (±g), n = 2 (±√2 g), n = 3 (±√3 g), and |3,+⟩ which
        // is outside the truncated ladder (it couples to the missing |4,−⟩)
        let g = p.g;
        let mut want = [0.0, -g, g, -(2f64.sqrt()) * g, 2f64.sqrt() * g, -(3f64.sqrt()) * g, 3f64.sqrt() * g, 0.0];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in v.iter().zip(want.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn undriven_ladder_with_detuning() {
        let delta = 1.7;
        let p = small(0.0, delta, 0.0);
        let h = build_hamiltonian(&p);
        let t = p.trunc;
        for n in 1..=t.n_max() {
            // block spanned by |n,−⟩ and |n−1,+⟩
            let (i, j) = (t.index(n, false), t.index(n - 1, true));
            let block = [[h.matrix()[[i, i]], h.matrix()[[i, j]]], [h.matrix()[[j, i]], h.matrix()[[j, j]]]];
            let tr = (block[0][0] + block[1][1]).re;
            let det = (block[0][0] * block[1][1] - block[0][1] * block[1][0]).re;
            let disc = (tr * tr / 4.0 - det).sqrt();
            let nf = n as f64;
            assert_abs_diff_eq!(tr / 2.0 + disc, -nf * delta + nf.sqrt() * p.g, epsilon = 1e-12);
            assert_abs_diff_eq!(tr / 2.0 - disc, -nf * delta - nf.sqrt() * p.g, epsilon = 1e-12);
        }
    }

    #[test]
    fn superoperator_matches_operator_form() {
        let p = small(0.7, -1.3, 0.4);
        let me = MasterEquation::new(&p).unwrap();
        let l = Superoperator::from_master_equation(&me);
        let psi = StateVector::coherent(p.trunc, C64::new(0.3, 0.2), true).unwrap();
        let rho = psi.density();
        let a = l.apply(&rho);
        let b = me.apply(rho.matrix().view());
        assert!(crate::hilbert::max_abs_diff(a.view(), b.view()) < 1e-12);
    }

    #[test]
    fn dark_ground_state_is_stationary() {
        let p = small(0.0, -0.4, 0.3);
        let l = build_liouvillian(&p).unwrap();
        let g = StateVector::fock_atom(p.trunc, 0, false).unwrap().density();
        assert!(l.apply(&g).iter().all(|z| z.norm() < 1e-14));
        let ss = steady_state(&l).unwrap();
        assert!(ss.trace_distance(&g).unwrap() < 1e-10);
    }

    #[test]
    fn free_atomic_decay() {
        let gamma = 0.8;
        let p = small(0.0, 0.0, gamma);
        let mut p = p;
        p.g = 1e-300; // effectively decoupled, keeps g > 0
        let me = MasterEquation::new(&p).unwrap();
        let rho0 = StateVector::fock_atom(p.trunc, 0, true).unwrap().density();
        for t in [0.3, 1.0, 2.5] {
            let rho = propagate(&me, &rho0, t).unwrap();
            let pe = expectation(&me.ops.n_atom, &rho).unwrap().re;
            assert_abs_diff_eq!(pe, (-gamma * t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_time_propagation_is_identity() {
        let p = small(0.5, 0.2, 0.1);
        let me = MasterEquation::new(&p).unwrap();
        let rho0 = StateVector::fock_atom(p.trunc, 1, false).unwrap().density();
        assert_eq!(propagate(&me, &rho0, 0.0).unwrap(), rho0);
        assert!(propagate(&me, &rho0, -1.0).is_err());
    }

    #[test]
    fn degenerate_steady_state_detected() {
        // without atomic decay and without coupling the atom never relaxes
        let mut p = small(0.0, 0.0, 0.0);
        p.g = 1e-300;
        let l = build_liouvillian(&p).unwrap();
        assert!(matches!(steady_state(&l), Err(Error::DegenerateSteadyState { .. })));
    }

    #[test]
    fn adjoint_propagation_matches_schrodinger_picture() {
        let p = small(0.6, -0.9, 0.2);
        let me = MasterEquation::new(&p).unwrap();
        let rho0 = StateVector::coherent(p.trunc, C64::new(0.4, -0.1), false).unwrap().density();
        let t = 0.8;
        let rho_t = propagate(&me, &rho0, t).unwrap();
        let a_t = propagate_observable(&me, me.ops.n_cav.matrix(), t).unwrap();
        let lhs = crate::hilbert::trace_of_product(me.ops.n_cav.view(), rho_t.matrix().view());
        let rhs = crate::hilbert::trace_of_product(a_t.view(), rho0.matrix().view());
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn long_time_propagation_reaches_steady_state() {
        let p = small(0.8, -1.0, 0.5);
        let me = MasterEquation::new(&p).unwrap();
        let ss = steady_state(&build_liouvillian(&p).unwrap()).unwrap();
        let rho0 = StateVector::fock_atom(p.trunc, 0, false).unwrap().density();
        let rho = propagate(&me, &rho0, 50.0).unwrap();
        assert!(rho.trace_distance(&ss).unwrap() < 1e-6);
        assert!((rho.trace() - ONE).norm() < 1e-8);
        assert!(rho.hermiticity_defect() < 1e-8);
    }

    #[test]
    fn generator_is_trace_preserving() {
        let p = small(0.8, -1.0, 0.5);
        let l = build_liouvillian(&p).unwrap();
        assert!(l.trace_defect() < 1e-9);
    }

    #[test]
    fn vectorization_round_trip() {
        let m = Array2::from_shape_fn((3, 3), |(i, j)| C64::new(i as f64, j as f64));
        let v = vectorize(m.view());
        assert_eq!(v[1], C64::new(1.0, 0.0));
        assert_eq!(v[3], C64::new(0.0, 1.0));
        assert_eq!(unvectorize(&v, 3), m);
    }
}
