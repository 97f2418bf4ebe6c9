//! Explicit weak order-2.0 scheme for scalar-noise Itô SDEs
//! `dY = a(Y) dt + b(Y) dW` (Kloeden–Platen, scalar noise):
//!
//! ```text
//! Ῡ  = Y + aΔ + bΔW
//! Υ± = Y + aΔ ± b√Δ
//! Y' = Y + ½(a(Ῡ) + a)Δ + ¼(b(Υ⁺) + b(Υ⁻) + 2b)ΔW
//!        + ¼(b(Υ⁺) − b(Υ⁻))(ΔW² − Δ)/√Δ
//! ```

use ndarray::Array2;

use crate::hilbert::{C64, ZERO};

/// Drift and diffusion coefficients acting on complex vectors.
pub trait SdeCoefficients {
    fn dim(&self) -> usize;
    fn drift(&self, y: &[C64], out: &mut [C64]);
    fn diffusion(&self, y: &[C64], out: &mut [C64]);
}

/// Reusable scratch space for [`WeakOrder2::step`].
#[derive(Clone, Debug)]
pub struct WeakOrder2 {
    a: Vec<C64>,
    b: Vec<C64>,
    bar: Vec<C64>,
    a_bar: Vec<C64>,
    plus: Vec<C64>,
    minus: Vec<C64>,
    b_plus: Vec<C64>,
    b_minus: Vec<C64>,
}

impl WeakOrder2 {
    pub fn new(dim: usize) -> Self {
        let v = vec![ZERO; dim];
        Self {
            a: v.clone(),
            b: v.clone(),
            bar: v.clone(),
            a_bar: v.clone(),
            plus: v.clone(),
            minus: v.clone(),
            b_plus: v.clone(),
            b_minus: v,
        }
    }

    /// Advances `y` in place by `dt` with Wiener increment `dw`.
    pub fn step<S: SdeCoefficients + ?Sized>(&mut self, sys: &S, y: &mut [C64], dt: f64, dw: f64) {
        let n = y.len();
        sys.drift(y, &mut self.a);
        sys.diffusion(y, &mut self.b);
        let sq = dt.sqrt();
        for k in 0..n {
            let base = y[k] + self.a[k] * dt;
            self.bar[k] = base + self.b[k] * dw;
            self.plus[k] = base + self.b[k] * sq;
            self.minus[k] = base - self.b[k] * sq;
        }
        sys.drift(&self.bar, &mut self.a_bar);
        sys.diffusion(&self.plus, &mut self.b_plus);
        sys.diffusion(&self.minus, &mut self.b_minus);
        let c2 = 0.25 * (dw * dw - dt) / sq;
        for k in 0..n {
            y[k] += (self.a_bar[k] + self.a[k]) * (0.5 * dt)
                + (self.b_plus[k] + self.b_minus[k] + self.b[k] * 2.0) * (0.25 * dw)
                + (self.b_plus[k] - self.b_minus[k]) * c2;
        }
    }
}

/// Matrix of one step of a linear SDE for the increment `dw`, built column
/// by column from the basis vectors.
pub fn step_matrix<S: SdeCoefficients + ?Sized>(sys: &S, dt: f64, dw: f64) -> Array2<C64> {
    let n = sys.dim();
    let mut scheme = WeakOrder2::new(n);
    let mut m = Array2::zeros((n, n));
    let mut y = vec![ZERO; n];
    for j in 0..n {
        y.fill(ZERO);
        y[j] = C64::new(1.0, 0.0);
        scheme.step(sys, &mut y, dt, dw);
        for i in 0..n {
            m[[i, j]] = y[i];
        }
    }
    m
}

/// Exact expectation of `Y'Y'†` over the Gaussian increment for one step of a
/// linear SDE: the step is quadratic in ΔW, so three Gauss–Hermite nodes
/// integrate `S ρ S†` exactly.
pub fn second_moment_step<S: SdeCoefficients + ?Sized>(sys: &S, rho: &Array2<C64>, dt: f64) -> Array2<C64> {
    let r3 = 3f64.sqrt();
    let nodes = [(0.0, 2.0 / 3.0), (r3, 1.0 / 6.0), (-r3, 1.0 / 6.0)];
    let mut out = Array2::zeros(rho.raw_dim());
    for (x, w) in nodes {
        let s = step_matrix(sys, dt, x * dt.sqrt());
        let sd = s.t().mapv(|z| z.conj());
        out = out + s.dot(rho).dot(&sd).mapv(|z| z * w);
    }
    out
}
