//! Four-state reduction of the two-photon resonance.
//!
//! The dressed basis is `ξ₀ = |0,−⟩`, `ξ_{1,2} = (|1,−⟩ ∓ |0,+⟩)/√2` and
//! `ξ₃ = (|2,−⟩ − |1,+⟩)/√2`. The drive couples `ξ₀ ↔ ξ₃` with the two-photon
//! Rabi frequency `Ω = 2√2 ε²/g`; `ξ₃` cascades through `ξ₁`, `ξ₂` to `ξ₀`.
//! In this basis
//! `a ≈ (|ξ₀⟩⟨ξ₁| + |ξ₀⟩⟨ξ₂|)/√2 + c₊|ξ₁⟩⟨ξ₃| + c₋|ξ₂⟩⟨ξ₃|`, `c± = (√2 ± 1)/2`.

use std::f64::consts::SQRT_2;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::correlators::{CorrelatorKind, CorrelatorSeries, Method, SpectrumKind, SpectrumSeries};
use crate::error::{invalid, Result};
use crate::hilbert::{SystemParams, C64, I, ONE, ZERO};
use crate::liouvillian::{unvectorize, vectorize};
use crate::ode::{integrate_adaptive, Tolerance};

pub const C_PLUS: f64 = (SQRT_2 + 1.0) / 2.0;
pub const C_MINUS: f64 = (SQRT_2 - 1.0) / 2.0;

/// Excitation number of each dressed state.
const EXCITATIONS: [f64; 4] = [0.0, 1.0, 1.0, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalModelParams {
    pub kappa: f64,
    pub gamma: f64,
    pub g: f64,
    pub eps_d: f64,
    pub omega: f64,
    pub gamma31: f64,
    pub gamma32: f64,
    /// Decay rate Γ of each intermediate state.
    pub gamma_int: f64,
    /// Beat frequency (Ẽ₂ − Ẽ₁)/ħ including the drive shifts.
    pub nu: f64,
    /// Ẽ_k − n_k ħω₀, in units of ħκ.
    pub energies: [f64; 4],
    pub shifts: [f64; 4],
    /// Drive detuning Δω_d = −g/√2 − √2ε²/g that puts ξ₀ ↔ ξ₃ on resonance.
    pub resonant_detuning: f64,
}

/// Warns above this ε/g; the reduction is an expansion in it.
pub const WEAK_DRIVE_LIMIT: f64 = 0.1;

pub fn derive_params(p: &SystemParams) -> Result<MinimalModelParams> {
    p.validate()?;
    let (g, k, e) = (p.g, p.kappa, p.eps_d);
    if e.abs() / g > WEAK_DRIVE_LIMIT {
        log::warn!("eps_d/g = {:.3} is outside the weak-drive regime of the four-state model", e / g);
    }
    let e2g = e * e / g;
    let shifts = [
        SQRT_2 * e2g,
        -(20.0 + 19.0 * SQRT_2) / 7.0 * e2g,
        (20.0 - 19.0 * SQRT_2) / 7.0 * e2g,
        -SQRT_2 * e2g,
    ];
    let energies = [shifts[0], -g + shifts[1], g + shifts[2], -SQRT_2 * g + shifts[3]];
    let gamma31 = p.gamma / 4.0 + (SQRT_2 + 1.0).powi(2) * k / 2.0;
    let gamma32 = p.gamma / 4.0 + (SQRT_2 - 1.0).powi(2) * k / 2.0;
    Ok(MinimalModelParams {
        kappa: k,
        gamma: p.gamma,
        g,
        eps_d: e,
        omega: 2.0 * SQRT_2 * e2g,
        gamma31,
        gamma32,
        gamma_int: p.gamma / 2.0 + k,
        nu: energies[2] - energies[1],
        energies,
        shifts,
        resonant_detuning: -g / SQRT_2 - SQRT_2 * e2g,
    })
}

impl MinimalModelParams {
    pub fn gamma3(&self) -> f64 {
        self.gamma31 + self.gamma32
    }

    /// Energies in the frame rotating at the resonant drive frequency; ξ₀ and
    /// ξ₃ are degenerate there.
    pub fn rotating_energies(&self) -> [f64; 4] {
        let mut e = self.energies;
        for (k, ek) in e.iter_mut().enumerate() {
            *ek -= EXCITATIONS[k] * self.resonant_detuning;
        }
        e
    }

    /// Frequency `ω − ω₀` of the emission `ξ_i → ξ_j`.
    pub fn transition_frequency(&self, i: usize, j: usize) -> f64 {
        let n = EXCITATIONS[i] - EXCITATIONS[j];
        // Ẽ_i − Ẽ_j − n ω₀ with the n ω₀ parts already removed
        (self.energies[i] - self.energies[j]) / n.max(1.0)
    }

    /// Beat frequency: exactly 2g, or with the O(ε²/g) drive shift.
    pub fn beat_frequency(&self, include_shift: bool) -> f64 {
        if include_shift {
            self.nu
        } else {
            2.0 * self.g
        }
    }
}

/// 4×4 density matrix in the ordered basis (ξ₀, ξ₁, ξ₂, ξ₃).
#[derive(Clone, Debug, PartialEq)]
pub struct FourStateDensity(pub Array2<C64>);

impl FourStateDensity {
    pub fn new(m: Array2<C64>) -> Result<Self> {
        if m.dim() != (4, 4) {
            return Err(invalid("rho", "four-state density must be 4x4"));
        }
        let dag = m.t().mapv(|z| z.conj());
        if crate::hilbert::max_abs_diff(m.view(), dag.view()) > 1e-10 {
            return Err(invalid("rho", "four-state density must be Hermitian"));
        }
        Ok(Self(m))
    }

    pub fn basis(k: usize) -> Self {
        let mut m = Array2::zeros((4, 4));
        m[[k, k]] = ONE;
        Self(m)
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[[k, k]].re
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.0[[k, k]].re).sum()
    }
}

fn ket_bra(i: usize, j: usize) -> Array2<C64> {
    let mut m = Array2::zeros((4, 4));
    m[[i, j]] = ONE;
    m
}

/// Dressed-basis annihilation operator of the reduction.
pub fn dressed_annihilation() -> Array2<C64> {
    let mut a = Array2::zeros((4, 4));
    a[[0, 1]] = C64::new(1.0 / SQRT_2, 0.0);
    a[[0, 2]] = C64::new(1.0 / SQRT_2, 0.0);
    a[[1, 3]] = C64::new(C_PLUS, 0.0);
    a[[2, 3]] = C64::new(C_MINUS, 0.0);
    a
}

/// Effective master equation of the reduction in the resonant rotating frame.
fn effective_rhs(mm: &MinimalModelParams) -> impl Fn(&Array1<C64>) -> Array1<C64> + '_ {
    let e = mm.rotating_energies();
    let mut h = Array2::<C64>::zeros((4, 4));
    for k in 0..4 {
        h[[k, k]] = C64::new(e[k], 0.0);
    }
    h[[0, 3]] = C64::new(mm.omega, 0.0);
    h[[3, 0]] = C64::new(mm.omega, 0.0);
    let jumps: Vec<Array2<C64>> = [
        (mm.gamma32, 2, 3),
        (mm.gamma31, 1, 3),
        (mm.gamma_int, 0, 1),
        (mm.gamma_int, 0, 2),
    ]
    .iter()
    .map(|&(r, i, j)| ket_bra(i, j) * C64::new(r.sqrt(), 0.0))
    .collect();
    let mut loss = Array2::<C64>::zeros((4, 4));
    for c in &jumps {
        loss = loss + c.t().mapv(|z| z.conj()).dot(c);
    }
    let h_eff = h - loss * C64::new(0.0, 0.5);
    let h_eff_dag = h_eff.t().mapv(|z| z.conj());
    move |v: &Array1<C64>| {
        let rho = unvectorize(v, 4);
        let mut out = (h_eff.dot(&rho) - rho.dot(&h_eff_dag)) * (-I);
        for c in &jumps {
            out = out + c.dot(&rho).dot(&c.t().mapv(|z| z.conj()));
        }
        vectorize(out.view())
    }
}

pub fn effective_propagate(mm: &MinimalModelParams, rho0: &FourStateDensity, t: f64) -> Result<FourStateDensity> {
    if t < 0.0 {
        return Err(invalid("t", "propagation time must be non-negative"));
    }
    let f = effective_rhs(mm);
    let scale = mm.omega + mm.gamma3() + mm.gamma_int + mm.rotating_energies().iter().map(|e| e.abs()).fold(0.0, f64::max);
    let v = integrate_adaptive(f, vectorize(rho0.0.view()), t, 0.1 / scale.max(1e-9), Tolerance::default())?;
    Ok(FourStateDensity(unvectorize(&v, 4)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeSteadyState {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub rho03: C64,
}

impl CascadeSteadyState {
    /// `p₃ = 4Ω²/(Γ₃² + 4Ω²(2 + Γ₃/Γ))`, `ρ₀₃ = iΓ₃p₃/(2Ω)`; at γ = 0 these
    /// reduce to `4Ω²/(9κ² + 20Ω²)` and `3iκp₃/(2Ω)`.
    pub fn new(mm: &MinimalModelParams) -> Self {
        let (o, g3, g) = (mm.omega, mm.gamma3(), mm.gamma_int);
        let p3 = 4.0 * o * o / (g3 * g3 + 4.0 * o * o * (2.0 + g3 / g));
        let rho03 = if o == 0.0 {
            ZERO
        } else {
            C64::new(0.0, g3 * p3 / (2.0 * o))
        };
        Self {
            p1: mm.gamma31 / g * p3,
            p2: mm.gamma32 / g * p3,
            p3,
            rho03,
        }
    }

    pub fn p0(&self) -> f64 {
        1.0 - self.p1 - self.p2 - self.p3
    }

    pub fn density(&self) -> FourStateDensity {
        let mut m = Array2::zeros((4, 4));
        m[[0, 0]] = C64::new(self.p0(), 0.0);
        m[[1, 1]] = C64::new(self.p1, 0.0);
        m[[2, 2]] = C64::new(self.p2, 0.0);
        m[[3, 3]] = C64::new(self.p3, 0.0);
        m[[0, 3]] = self.rho03;
        m[[3, 0]] = self.rho03.conj();
        FourStateDensity(m)
    }
}

// ---------------------------------------------------------------------------
// waiting time

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WaitingTimeOptions {
    /// Use the printed Rabi-term prefactor 3Ω²/(9κ²−16Ω²), a factor 4 below
    /// the value that follows from the rate matrix.
    pub printed_prefactor: bool,
    /// Use the printed sinh argument τ√(9κ²−9Ω²)/4.
    pub printed_argument: bool,
    /// Include the O(ε²/g) shift in the beat frequency.
    pub shifted_beat: bool,
}

/// `sinh²(√q τ)/q`, analytic in q (sin² for q < 0, τ² at q = 0).
pub fn sinh2_over(q: f64, tau: f64) -> f64 {
    let x2 = q * tau * tau;
    if x2.abs() < 1e-2 {
        // sinh²x = x² + x⁴/3 + 2x⁶/45 + x⁸/315 + 2x¹⁰/14175
        let t2 = tau * tau;
        return t2 * (1.0 + x2 / 3.0 + 2.0 * x2 * x2 / 45.0 + x2.powi(3) / 315.0 + 2.0 * x2.powi(4) / 14175.0);
    }
    if q > 0.0 {
        (q.sqrt() * tau).sinh().powi(2) / q
    } else {
        ((-q).sqrt() * tau).sin().powi(2) / q.abs()
    }
}

/// Excited-state population `ρ̄₃₃(τ)` of the no-count evolution started from
/// `ρ̄₀₀(0) = ½`: `8Ω² e^{−3κτ/2} sinh²(τ√(9κ²−16Ω²)/4)/(9κ²−16Ω²)`.
pub fn rho33_bar(mm: &MinimalModelParams, tau: f64) -> f64 {
    let k = mm.kappa;
    let q = (9.0 * k * k - 16.0 * mm.omega * mm.omega) / 16.0;
    0.5 * mm.omega * mm.omega * (-1.5 * k * tau).exp() * sinh2_over(q, tau)
}

/// Analytic exclusive waiting-time density of forward emissions (γ = 0):
/// `w/2κ = ½(½e^{−κτ} + ⅙e^{−κτ}cos ντ) + (3/2)ρ̄₃₃(τ)`.
pub fn waiting_time_analytic(
    mm: &MinimalModelParams,
    taus: &[f64],
    opts: WaitingTimeOptions,
) -> Result<CorrelatorSeries> {
    if mm.gamma != 0.0 {
        return Err(invalid("gamma", "the analytic waiting time holds for gamma = 0 only"));
    }
    let k = mm.kappa;
    let nu = mm.beat_frequency(opts.shifted_beat);
    let o2 = mm.omega * mm.omega;
    let denom = 9.0 * k * k - 16.0 * o2;
    let values = taus
        .iter()
        .map(|&t| {
            let beat = 0.5 * (0.5 * (-k * t).exp() + (-k * t).exp() * (nu * t).cos() / 6.0);
            let pref = if opts.printed_prefactor { 3.0 } else { 12.0 };
            let rabi = if opts.printed_argument {
                let q = (9.0 * k * k - 9.0 * o2) / 16.0;
                pref * o2 / denom * (-1.5 * k * t).exp() * q * sinh2_over(q, t)
            } else {
                // pref·Ω²/(16q)·sinh²(√q τ) with q = (9κ² − 16Ω²)/16
                pref / 16.0 * o2 * (-1.5 * k * t).exp() * sinh2_over(denom / 16.0, t)
            };
            C64::new(2.0 * k * (beat + rabi), 0.0)
        })
        .collect();
    CorrelatorSeries::new(CorrelatorKind::WaitingTime, Method::Analytic, taus.to_vec(), values)
}

/// Lower envelope of the beat minima, `(κ/3) e^{−κτ}`.
pub fn waiting_time_lower_asymptote(mm: &MinimalModelParams, tau: f64) -> f64 {
    mm.kappa / 3.0 * (-mm.kappa * tau).exp()
}

/// Rate matrix of the no-count evolution for `x = (ρ̄₀₀, ρ̄₃₃, Im ρ̄₀₃)`.
pub fn no_count_matrix(mm: &MinimalModelParams) -> Array2<f64> {
    let (k, o) = (mm.kappa, mm.omega);
    ndarray::arr2(&[[0.0, 0.0, -2.0 * o], [0.0, -3.0 * k, 2.0 * o], [o, -o, -1.5 * k]])
}

// ---------------------------------------------------------------------------
// correlator matrix elements

/// Decay rates used in the coupled coherence pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRates {
    /// `ρ₃ⱼ` at (Γ₃₁+Γ₃₂+Γ)/2, as the four-state Lindblad equation gives.
    #[default]
    Lindblad,
    /// `ρ₀ⱼ` at Γ/2 and `ρ₃ⱼ` at (Γ₃₁+Γ₃₂)/2, dropping the decay of the lower
    /// state of the coherence.
    Printed,
}

/// Initial conditions for `⟨a(τ)a(0)⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalousForm {
    /// `X = aρ_ss` in full: `X₁₀ = c₊ρ₃₀`, `X₁₃ = c₊p₃`, `X₀₁ = p₁/√2`, and the
    /// `ρ₃₁`, `ρ₃₂` elements kept in the trace.
    #[default]
    Derived,
    /// `X₁₀ = c₊ρ₃₀`, `X₁₃ = 0`, trace over `ρ₁₀`, `ρ₂₀` only.
    Printed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorOptions {
    pub rates: PairRates,
    pub anomalous: AnomalousForm,
}

/// One matrix element of a coupled pair:
/// `x(τ) = e^{−iφτ} e^{−sτ}[x₀ C(τ) + d S(τ)]` with `C = cos μτ`,
/// `S = sin(μτ)/μ` continued to cosh/sinh for μ² < 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairElement {
    pub row: usize,
    pub col: usize,
    pub x0: C64,
    pub d: C64,
    pub s: f64,
    pub mu2: f64,
    /// Free rotation frequency `φ = E_row − E_col` in the rotating frame.
    pub phase: f64,
}

impl PairElement {
    pub fn envelope(&self, tau: f64) -> C64 {
        let (c, s) = cos_sinc(self.mu2, tau);
        (self.x0 * c + self.d * s) * (-self.s * tau).exp()
    }

    pub fn eval(&self, tau: f64) -> C64 {
        self.envelope(tau) * C64::from_polar(1.0, -self.phase * tau)
    }

    /// `∫₀^∞ e^{−pτ} envelope(τ) dτ = [x₀(p+s) + d]/((p+s)² + μ²)`.
    pub fn envelope_laplace(&self, p: C64) -> C64 {
        let q = p + self.s;
        (self.x0 * q + self.d) / (q * q + self.mu2)
    }

    /// `∫₀^∞ e^{iωτ} x(τ) dτ`.
    pub fn fourier(&self, omega: f64) -> C64 {
        self.envelope_laplace(C64::new(0.0, -(omega - self.phase)))
    }
}

/// `(C, S)` with `C = cos(μτ)` and `S = sin(μτ)/μ`, analytic in μ².
fn cos_sinc(mu2: f64, tau: f64) -> (f64, f64) {
    let x2 = mu2 * tau * tau;
    if x2.abs() < 1e-4 {
        let c = 1.0 - x2 / 2.0 + x2 * x2 / 24.0;
        let s = tau * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
        return (c, s);
    }
    if mu2 > 0.0 {
        let m = mu2.sqrt();
        ((m * tau).cos(), (m * tau).sin() / m)
    } else {
        let m = (-mu2).sqrt();
        ((m * tau).cosh(), (m * tau).sinh() / m)
    }
}

/// Solves the pair `u̇ = −αu − iωv`, `v̇ = −βv − iωu` from `(u₀, v₀)`.
fn solve_pair(alpha: f64, beta: f64, w: f64, u0: C64, v0: C64) -> (C64, C64, f64, f64) {
    let s = 0.5 * (alpha + beta);
    let half = 0.5 * (beta - alpha);
    let mu2 = w * w - half * half;
    let du = u0 * half - I * w * v0;
    let dv = -v0 * half - I * w * u0;
    (du, dv, s, mu2)
}

/// A weighted set of matrix elements whose sum is a two-time correlator.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ElementSum {
    pub terms: Vec<(C64, PairElement)>,
}

impl ElementSum {
    pub fn eval(&self, tau: f64) -> C64 {
        self.terms.iter().map(|(w, e)| w * e.eval(tau)).sum()
    }

    pub fn fourier(&self, omega: f64) -> C64 {
        self.terms.iter().map(|(w, e)| w * e.fourier(omega)).sum()
    }

    pub fn element(&self, row: usize, col: usize) -> Option<&PairElement> {
        self.terms.iter().map(|(_, e)| e).find(|e| e.row == row && e.col == col)
    }
}

/// Closed-form regression of a source operator `X` through the two
/// autonomous pairs `(ρ_{j0}, ρ_{j3})` and `(ρ_{0j}, ρ_{3j})`, j ∈ {1, 2}.
fn regress(mm: &MinimalModelParams, x: &Array2<C64>, rates: PairRates) -> Vec<PairElement> {
    let e = mm.rotating_energies();
    let alpha = mm.gamma_int / 2.0;
    let beta = match rates {
        PairRates::Printed => mm.gamma3() / 2.0,
        PairRates::Lindblad => (mm.gamma3() + mm.gamma_int) / 2.0,
    };
    let o = mm.omega;
    let mut out = Vec::new();
    for j in [1, 2] {
        // (ρ_j0, ρ_j3): coupling +iΩ, both rotate at E_j − E_0
        let (du, dv, s, mu2) = solve_pair(alpha, beta, -o, x[[j, 0]], x[[j, 3]]);
        out.push(PairElement { row: j, col: 0, x0: x[[j, 0]], d: du, s, mu2, phase: e[j] - e[0] });
        out.push(PairElement { row: j, col: 3, x0: x[[j, 3]], d: dv, s, mu2, phase: e[j] - e[3] });
        // (ρ_0j, ρ_3j): coupling −iΩ, both rotate at E_0 − E_j
        let (du, dv, s, mu2) = solve_pair(alpha, beta, o, x[[0, j]], x[[3, j]]);
        out.push(PairElement { row: 0, col: j, x0: x[[0, j]], d: du, s, mu2, phase: e[0] - e[j] });
        out.push(PairElement { row: 3, col: j, x0: x[[3, j]], d: dv, s, mu2, phase: e[3] - e[j] });
    }
    out
}

/// `tr[a Y] = (Y₁₀ + Y₂₀)/√2 + c₊Y₃₁ + c₋Y₃₂`.
fn trace_with_a(elements: Vec<PairElement>, keep_upper: bool) -> ElementSum {
    let weight = |r: usize, c: usize| match (r, c) {
        (1, 0) | (2, 0) => Some(1.0 / SQRT_2),
        (3, 1) if keep_upper => Some(C_PLUS),
        (3, 2) if keep_upper => Some(C_MINUS),
        _ => None,
    };
    ElementSum {
        terms: elements
            .into_iter()
            .filter_map(|e| weight(e.row, e.col).map(|w| (C64::new(w, 0.0), e)))
            .collect(),
    }
}

/// Matrix-element series for both stationary field correlators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorrelatorElements {
    /// `⟨a†(0)a(τ)⟩ = tr[a e^{Lτ}(ρ_ss a†)]`.
    pub first_order: ElementSum,
    /// `⟨a(τ)a(0)⟩ = tr[a e^{Lτ}(aρ_ss)]`.
    pub anomalous: ElementSum,
    /// All propagated elements of the first-order source, for inspection.
    pub first_order_elements: Vec<PairElement>,
    pub anomalous_elements: Vec<PairElement>,
}

pub fn correlator_elements(mm: &MinimalModelParams, opts: CorrelatorOptions) -> CorrelatorElements {
    let ss = CascadeSteadyState::new(mm);
    let rho = ss.density().0;
    let a = dressed_annihilation();
    let adag = a.t().mapv(|z| z.conj());
    let x_first = rho.dot(&adag);
    let x_anom = match opts.anomalous {
        AnomalousForm::Derived => a.dot(&rho),
        AnomalousForm::Printed => {
            let mut x = Array2::zeros((4, 4));
            x[[1, 0]] = ss.rho03.conj() * C_PLUS;
            x[[2, 0]] = ss.rho03.conj() * C_MINUS;
            x
        }
    };
    let first_order_elements = regress(mm, &x_first, opts.rates);
    let anomalous_elements = regress(mm, &x_anom, opts.rates);
    CorrelatorElements {
        first_order: trace_with_a(first_order_elements.clone(), true),
        anomalous: trace_with_a(anomalous_elements.clone(), opts.anomalous == AnomalousForm::Derived),
        first_order_elements,
        anomalous_elements,
    }
}

impl CorrelatorElements {
    pub fn first_order_series(&self, taus: &[f64]) -> Result<CorrelatorSeries> {
        let v = taus.iter().map(|&t| self.first_order.eval(t)).collect();
        CorrelatorSeries::new(CorrelatorKind::FirstOrder, Method::Analytic, taus.to_vec(), v)
    }

    pub fn anomalous_series(&self, taus: &[f64]) -> Result<CorrelatorSeries> {
        let v = taus.iter().map(|&t| self.anomalous.eval(t)).collect();
        CorrelatorSeries::new(CorrelatorKind::Anomalous, Method::Analytic, taus.to_vec(), v)
    }
}

/// `S^θ(ω) = 4κ Re ∫₀^∞ e^{iω'τ} R_θ(τ) dτ` from the closed-form elements,
/// with `ω' = ω − ω₀ − Δω_d` the offset from the local oscillator.
pub fn squeezing_spectrum_analytic(
    mm: &MinimalModelParams,
    theta: f64,
    omega: &[f64],
    opts: CorrelatorOptions,
) -> Result<SpectrumSeries> {
    let el = correlator_elements(mm, opts);
    let rot = C64::from_polar(1.0, -2.0 * theta);
    let values = omega
        .iter()
        .map(|&w| {
            let wr = w - mm.resonant_detuning;
            // R = ¼(f + f̄) with f = e^{−2iθ}G_a + G_n; ∫e^{iωτ}f̄ = conj(∫e^{−iωτ}f)
            let f = rot * el.anomalous.fourier(wr) + el.first_order.fourier(wr);
            let fbar = (rot * el.anomalous.fourier(-wr) + el.first_order.fourier(-wr)).conj();
            4.0 * mm.kappa * 0.25 * (f + fbar).re
        })
        .collect();
    let mut s = SpectrumSeries::new(SpectrumKind::Squeezing, Method::Analytic, omega.to_vec(), values)?;
    s.theta = Some(theta);
    Ok(s)
}

/// Normalized transmission spectrum
/// `T(ω) = (1/π) Σ Re 𝒫_ij(s̃_ij) / ⟨a†a⟩`, each term the Laplace transform of
/// one element envelope at `s̃_ij = −i(ω − ω_ij)`.
pub fn transmission_spectrum_analytic(
    mm: &MinimalModelParams,
    omega: &[f64],
    opts: CorrelatorOptions,
) -> Result<SpectrumSeries> {
    let el = correlator_elements(mm, opts);
    let n = el.first_order.eval(0.0).re;
    if !(n > 0.0) {
        return Err(crate::error::Error::VanishingIntensity(n));
    }
    let values = omega
        .iter()
        .map(|&w| el.first_order.fourier(w - mm.resonant_detuning).re / (std::f64::consts::PI * n))
        .collect();
    SpectrumSeries::new(SpectrumKind::Transmission, Method::Analytic, omega.to_vec(), values)
}

/// Unnormalized spectral weight `(1/π)∫ Re ∫₀^∞ e^{iωτ}⟨a†(0)a(τ)⟩`, equal to
/// `⟨a†a⟩_ss`; vanishes with the drive.
pub fn transmission_weight(mm: &MinimalModelParams) -> f64 {
    correlator_elements(mm, CorrelatorOptions::default()).first_order.eval(0.0).re
}

/// `I(ω; a₁, b₁, λ) = ∫₀^∞ e^{iωt} e^{−a₁t}[cos(b₁t) + λ a₁ sin(b₁t)/(2b₁)] dt`
/// with `b₁² = Ω² − a₁²/4`, evaluated by the closed form of the branch that
/// applies (b₁ real or b₁ = i|b₁|).
pub fn general_integral(omega: f64, a1: f64, b1_sq: f64, lambda: f64) -> C64 {
    if b1_sq > 0.0 {
        let b = b1_sq.sqrt();
        let dp = a1 * a1 + (omega + b).powi(2);
        let dm = a1 * a1 + (omega - b).powi(2);
        let tp = C64::new(a1 * (1.0 + lambda * (omega + b) / (2.0 * b)), omega + b - lambda * a1 * a1 / (2.0 * b));
        let tm = C64::new(a1 * (1.0 + lambda * (b - omega) / (2.0 * b)), omega - b + lambda * a1 * a1 / (2.0 * b));
        0.5 * tp / dp + 0.5 * tm / dm
    } else if b1_sq < 0.0 {
        let b = (-b1_sq).sqrt();
        let dp = omega * omega + (a1 + b).powi(2);
        let dm = omega * omega + (a1 - b).powi(2);
        let k = lambda * a1 / (2.0 * b);
        let tp = C64::new((a1 + b) * (1.0 - k), omega * (1.0 - k));
        let tm = C64::new((a1 - b) * (1.0 + k), omega * (1.0 + k));
        0.5 * tp / dp + 0.5 * tm / dm
    } else {
        // b₁ → 0: ∫e^{(iω−a₁)t}(1 + λa₁t/2) dt
        let z = C64::new(a1, -omega);
        ONE / z + lambda * a1 / 2.0 / (z * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::FockTruncation;
    use approx::assert_abs_diff_eq;

    fn mm(gamma: f64, omega: f64) -> MinimalModelParams {
        let p = SystemParams::two_photon_resonance(1000.0, gamma, omega, 14).unwrap();
        derive_params(&p).unwrap()
    }

    #[test]
    fn rates_at_two_limits() {
        let m = mm(0.0, 1.0);
        assert_abs_diff_eq!(m.gamma31, (3.0 + 2.0 * SQRT_2) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.gamma32, (3.0 - 2.0 * SQRT_2) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.gamma31 / m.gamma32, 33.97, epsilon = 0.01);
        let m = mm(2.0, 1.0);
        assert_abs_diff_eq!(m.gamma31, 1.7071 * 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.gamma32, 0.2929 * 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.gamma_int, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.gamma31 / m.gamma32, 5.83, epsilon = 0.01);
    }

    #[test]
    fn undriven_energies() {
        let p = SystemParams::new(200.0, 1.0, 0.0, 0.0, 0.0, FockTruncation::default()).unwrap();
        let m = derive_params(&p).unwrap();
        assert_eq!(m.shifts, [0.0; 4]);
        assert_abs_diff_eq!(m.energies[1], -200.0);
        assert_abs_diff_eq!(m.energies[2], 200.0);
        assert_abs_diff_eq!(m.energies[3], -SQRT_2 * 200.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.omega, 0.0);
    }

    #[test]
    fn rabi_frequency_and_resonance() {
        let m = mm(0.0, 10.0 / SQRT_2);
        assert_abs_diff_eq!(m.eps_d, 50.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.omega, 10.0 / SQRT_2, epsilon = 1e-12);
        let e = m.rotating_energies();
        assert_abs_diff_eq!(e[0], e[3], epsilon = 1e-9);
        assert_abs_diff_eq!(m.nu, 2000.0 + 40.0 / 7.0 * 2.5, epsilon = 1e-9);
    }

    #[test]
    fn cascade_steady_state_closed_forms() {
        let m = mm(0.0, 0.8);
        let ss = CascadeSteadyState::new(&m);
        let o2 = 0.64;
        assert_abs_diff_eq!(ss.p3, 4.0 * o2 / (9.0 + 20.0 * o2), epsilon = 1e-14);
        assert_abs_diff_eq!(ss.rho03.im, 3.0 * ss.p3 / (2.0 * 0.8), epsilon = 1e-14);
        assert_abs_diff_eq!(ss.p0() + ss.p1 + ss.p2 + ss.p3, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ss.p1 / ss.p3, m.gamma31 / m.gamma_int, epsilon = 1e-12);
    }

    #[test]
    fn effective_dynamics_relax_to_cascade_state() {
        for gamma in [0.0, 2.0] {
            let m = mm(gamma, 0.9);
            let ss = CascadeSteadyState::new(&m);
            let rho = effective_propagate(&m, &FourStateDensity::basis(0), 60.0).unwrap();
            let want = ss.density();
            for i in 0..4 {
                for j in 0..4 {
                    assert!((rho.0[[i, j]] - want.0[[i, j]]).norm() < 1e-8, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn undriven_upper_state_decays() {
        let p = SystemParams::new(200.0, 1.0, 0.0, 0.0, 0.0, FockTruncation::default()).unwrap();
        let m = derive_params(&p).unwrap();
        let rho = effective_propagate(&m, &FourStateDensity::basis(3), 0.7).unwrap();
        assert_abs_diff_eq!(rho.population(3), (-m.gamma3() * 0.7).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn waiting_time_limits() {
        let m = mm(0.0, 10.0 / SQRT_2);
        let w = waiting_time_analytic(&m, &[0.0], WaitingTimeOptions::default()).unwrap();
        assert_abs_diff_eq!(w.values[0].re, 2.0 / 3.0, epsilon = 1e-14);
        assert!(waiting_time_analytic(&mm(2.0, 1.0), &[0.0], WaitingTimeOptions::default()).is_err());
    }

    #[test]
    fn waiting_time_beat_minima_respect_lower_asymptote() {
        let m = mm(0.0, 10.0 / SQRT_2);
        let opts = WaitingTimeOptions::default();
        let taus: Vec<f64> = (0..4000).map(|k| k as f64 * 1e-3).collect();
        let w = waiting_time_analytic(&m, &taus, opts).unwrap();
        for (t, v) in taus.iter().zip(&w.values) {
            assert!(v.re >= waiting_time_lower_asymptote(&m, *t) - 1e-12);
        }
    }

    #[test]
    fn rabi_term_matches_rate_matrix() {
        for omega in [0.3, 0.75, 10.0 / SQRT_2] {
            let m = mm(0.0, omega);
            let mat = no_count_matrix(&m).mapv(|x| C64::new(x, 0.0));
            let f = |v: &Array1<C64>| mat.dot(v);
            for t in [0.2, 1.0, 2.5] {
                let x0 = Array1::from(vec![C64::new(0.5, 0.0), ZERO, ZERO]);
                let x = integrate_adaptive(f, x0, t, 1e-3, Tolerance::default()).unwrap();
                assert_abs_diff_eq!(x[1].re, rho33_bar(&m, t), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn rate_matrix_eigenvalues() {
        let m = mm(0.0, 0.6);
        let mat = no_count_matrix(&m).mapv(|x| C64::new(x, 0.0));
        let (vals, _) = ndarray_linalg::Eig::eig(&*mat).unwrap();
        let mut re: Vec<f64> = vals.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = 0.5 * (9.0 - 16.0 * 0.36f64).sqrt();
        assert_abs_diff_eq!(re[0], -1.5 - d, epsilon = 1e-10);
        assert_abs_diff_eq!(re[1], -1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(re[2], -1.5 + d, epsilon = 1e-10);
    }

    #[test]
    fn waiting_time_integrates_to_one_without_sideways_loss() {
        // ∫ of the Rabi term is 3/8 with the derived prefactor; the beat terms give 1/2 and ~0
        for omega in [0.4, 0.75, 3.0] {
            let m = mm(0.0, omega);
            let h = 1e-4;
            let taus: Vec<f64> = (0..=400_000).map(|k| k as f64 * h).collect();
            let w = waiting_time_analytic(&m, &taus, WaitingTimeOptions::default()).unwrap();
            let total: f64 = w.values.windows(2).map(|p| 0.5 * h * (p[0].re + p[1].re)).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 2e-3);
            let printed = waiting_time_analytic(&m, &taus, WaitingTimeOptions { printed_prefactor: true, ..Default::default() }).unwrap();
            let tp: f64 = printed.values.windows(2).map(|p| 0.5 * h * (p[0].re + p[1].re)).sum();
            assert_abs_diff_eq!(tp, 0.625, epsilon = 2e-3);
        }
    }

    #[test]
    fn waiting_time_continuous_through_critical_drive() {
        let crit = 0.75;
        let a = waiting_time_analytic(&mm(0.0, crit - 1e-7), &[0.9], WaitingTimeOptions::default()).unwrap();
        let b = waiting_time_analytic(&mm(0.0, crit + 1e-7), &[0.9], WaitingTimeOptions::default()).unwrap();
        assert!((a.values[0] - b.values[0]).norm() < 1e-6);
        assert_abs_diff_eq!(sinh2_over(0.0, 2.0), 4.0);
        assert_abs_diff_eq!(sinh2_over(1e-9, 2.0), 4.0, epsilon = 1e-7);
        assert_abs_diff_eq!(sinh2_over(-0.5, 1.0), (0.5f64.sqrt()).sin().powi(2) / 0.5, epsilon = 1e-14);
    }

    #[test]
    fn first_order_initial_conditions() {
        let m = mm(0.0, 0.5);
        let ss = CascadeSteadyState::new(&m);
        let el = correlator_elements(&m, CorrelatorOptions::default());
        let e = |r, c| el.first_order_elements.iter().find(|x| x.row == r && x.col == c).unwrap().x0;
        assert!((e(1, 0) - C64::new(ss.p1 / SQRT_2, 0.0)).norm() < 1e-15);
        assert!((e(0, 1) - ss.rho03 * C_PLUS).norm() < 1e-15);
        assert!((e(3, 1) - C64::new(C_PLUS * ss.p3, 0.0)).norm() < 1e-15);
        assert!(e(1, 3).norm() < 1e-15);
        // τ = 0 gives ⟨a†a⟩ = (p₁ + p₂)/2 + (3/2)p₃
        let n = el.first_order.eval(0.0).re;
        assert_abs_diff_eq!(n, 0.5 * (ss.p1 + ss.p2) + 1.5 * ss.p3, epsilon = 1e-14);
    }

    #[test]
    fn printed_closed_form_at_zero_gamma() {
        // ρ₁₀(τ) = (p₁/√2) e^{−κτ}[cos μτ + κ sin(μτ)/(2μ)], ρ₃₁ with d = κ/μ
        let m = mm(0.0, 0.9);
        let ss = CascadeSteadyState::new(&m);
        let el = correlator_elements(&m, CorrelatorOptions { rates: PairRates::Printed, ..Default::default() });
        let mu = (0.81f64 - 0.25).sqrt();
        let e10 = el.first_order_elements.iter().find(|x| x.row == 1 && x.col == 0).unwrap();
        let e31 = el.first_order_elements.iter().find(|x| x.row == 3 && x.col == 1).unwrap();
        for t in [0.3f64, 1.7] {
            let want10 = ss.p1 / SQRT_2 * (-t).exp() * ((mu * t).cos() + (mu * t).sin() / (2.0 * mu));
            let want31 = C_PLUS * ss.p3 * (-t).exp() * ((mu * t).cos() + (mu * t).sin() / mu);
            assert!((e10.envelope(t) - C64::new(want10, 0.0)).norm() < 1e-13);
            assert!((e31.envelope(t) - C64::new(want31, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn elements_solve_their_pair_equations() {
        for (gamma, omega) in [(0.0, 0.3), (0.0, 2.0), (2.0, 0.2), (2.0, 1.5)] {
            let m = mm(gamma, omega);
            for rates in [PairRates::Printed, PairRates::Lindblad] {
                let opts = CorrelatorOptions { rates, anomalous: AnomalousForm::Derived };
                let el = correlator_elements(&m, opts);
                let alpha = m.gamma_int / 2.0;
                let beta = match rates {
                    PairRates::Printed => m.gamma3() / 2.0,
                    PairRates::Lindblad => (m.gamma3() + m.gamma_int) / 2.0,
                };
                for list in [&el.first_order_elements, &el.anomalous_elements] {
                    let get = |r, c| list.iter().find(|x: &&PairElement| x.row == r && x.col == c).unwrap();
                    for j in [1, 2] {
                        for t in [1e-3, 0.4, 1.9] {
                            let h = 1e-5;
                            let der = |e: &PairElement| (e.envelope(t + h) - e.envelope(t - h)) / (2.0 * h);
                            // (ρ_j0, ρ_j3): u̇ = −αu + iΩv, v̇ = −βv + iΩu
                            let (u, v) = (get(j, 0), get(j, 3));
                            let ru = der(u) - (-alpha * u.envelope(t) + I * m.omega * v.envelope(t));
                            let rv = der(v) - (-beta * v.envelope(t) + I * m.omega * u.envelope(t));
                            let (u, v) = (get(0, j), get(3, j));
                            let su = der(u) - (-alpha * u.envelope(t) - I * m.omega * v.envelope(t));
                            let sv = der(v) - (-beta * v.envelope(t) - I * m.omega * u.envelope(t));
                            for r in [ru, rv, su, sv] {
                                assert!(r.norm() < 1e-6, "residual {r} at t={t}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closed_forms_solve_the_reduced_master_equation() {
        for (gamma, omega) in [(0.0, 0.3), (0.0, 1.4), (2.0, 0.8)] {
            let mut m = mm(gamma, omega);
            // generic energies so that no rotation frequencies coincide
            m.energies = [0.3, -5.0, 7.0, -9.4];
            m.resonant_detuning = -4.85;
            let ss = CascadeSteadyState::new(&m);
            let rho = ss.density().0;
            let a = dressed_annihilation();
            let el = correlator_elements(&m, CorrelatorOptions::default());
            for (x, sum) in [(rho.dot(&a.t().mapv(|z| z.conj())), &el.first_order), (a.dot(&rho), &el.anomalous)] {
                for t in [0.25, 1.1, 3.0] {
                    let y = effective_propagate(&m, &FourStateDensity(x.clone()), t).unwrap();
                    let direct: C64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| a[[i, j]] * y.0[[j, i]]).sum();
                    assert!((sum.eval(t) - direct).norm() < 1e-8, "t={t}: {} vs {direct}", sum.eval(t));
                }
            }
        }
    }

    #[test]
    fn undriven_elements_vanish() {
        let p = SystemParams::new(200.0, 1.0, 0.0, 0.0, 0.0, FockTruncation::default()).unwrap();
        let m = derive_params(&p).unwrap();
        let el = correlator_elements(&m, CorrelatorOptions::default());
        assert!(el.first_order.eval(0.5).norm() < 1e-15);
        assert!(el.anomalous.eval(0.5).norm() < 1e-15);
        assert_abs_diff_eq!(transmission_weight(&m), 0.0);
    }

    fn quad_integral(omega: f64, a1: f64, b1_sq: f64, lambda: f64) -> C64 {
        let h = 1e-4;
        let n = (40.0 / a1 / h) as usize;
        let f = |t: f64| {
            let (c, s) = cos_sinc(b1_sq, t);
            C64::from_polar((-a1 * t).exp(), omega * t) * (c + lambda * a1 / 2.0 * s)
        };
        let mut acc = 0.5 * (f(0.0) + f(n as f64 * h));
        for k in 1..n {
            acc += f(k as f64 * h);
        }
        acc * h
    }

    #[test]
    fn general_integral_branches_match_quadrature() {
        for (a1, b1_sq) in [(1.0, 0.8), (1.0, -0.2), (1.5, 2.0), (3.0, -1.0), (1.0, 0.0)] {
            for lambda in [1.0, 2.0] {
                for w in [-2.0, 0.0, 0.7] {
                    let exact = general_integral(w, a1, b1_sq, lambda);
                    let num = quad_integral(w, a1, b1_sq, lambda);
                    assert!((exact - num).norm() < 1e-6, "a1={a1} b1²={b1_sq} λ={lambda} ω={w}: {exact} vs {num}");
                }
            }
        }
    }

    #[test]
    fn branch_crossover_is_continuous() {
        // γ = 0: b₁² = Ω² − κ²/4 changes sign at Ω = κ/2
        for w in [0.0, 1.3] {
            let lo = general_integral(w, 1.0, (0.5f64 - 1e-3).powi(2) - 0.25, 1.0);
            let hi = general_integral(w, 1.0, (0.5f64 + 1e-3).powi(2) - 0.25, 1.0);
            let mid = general_integral(w, 1.0, 0.0, 1.0);
            assert!((lo - mid).norm() < 1e-2 && (hi - mid).norm() < 1e-2);
            assert!((lo - hi).norm() < 1e-2);
            let lo = general_integral(w, 1.0, -1e-12, 1.0);
            let hi = general_integral(w, 1.0, 1e-12, 1.0);
            assert!((lo - hi).norm() < 1e-5);
        }
    }

    #[test]
    fn element_transform_matches_general_integral() {
        // e^{−κτ}[cos μτ + κ sin(μτ)/(2μ)] is I(ω; κ, μ, 1) on both sides of Ω = κ/2
        for omega in [0.3, 0.9] {
            let m = mm(0.0, omega);
            let el = correlator_elements(&m, CorrelatorOptions { rates: PairRates::Printed, ..Default::default() });
            let e10 = *el.first_order_elements.iter().find(|x| x.row == 1 && x.col == 0).unwrap();
            let scale = e10.x0;
            for w in [-1.0, 0.0, 2.0] {
                let via_element = e10.envelope_laplace(C64::new(0.0, -w));
                let via_i = scale * general_integral(w, 1.0, omega * omega - 0.25, 1.0);
                assert!((via_element - via_i).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn squeezing_decays_far_from_resonances() {
        let m = mm(0.0, 0.5);
        let s = squeezing_spectrum_analytic(&m, 0.7, &[m.resonant_detuning + 1e6], CorrelatorOptions::default()).unwrap();
        assert!(s.values[0].abs() < 1e-8);
    }

    #[test]
    fn transmission_peaks_at_dressed_transitions() {
        let p = SystemParams::two_photon_resonance(200.0, 0.0, 0.5, 14).unwrap();
        let m = derive_params(&p).unwrap();
        let w: Vec<f64> = (-60000..=30000).map(|k| k as f64 * 0.01).collect();
        let t = transmission_spectrum_analytic(&m, &w, CorrelatorOptions::default()).unwrap();
        let targets = [
            m.transition_frequency(3, 2),
            m.transition_frequency(1, 0),
            m.transition_frequency(3, 1),
            m.transition_frequency(2, 0),
        ];
        let peaks = t.peaks(1e-6);
        for target in targets {
            let near = peaks.iter().map(|p| (p.0 - target).abs()).fold(f64::INFINITY, f64::min);
            assert!(near <= 0.02, "no peak near {target}: {peaks:?}");
        }
        assert_abs_diff_eq!(t.area(), 1.0, epsilon = 1e-2);
    }
}
