//! Wigner function of a cavity-field state on a rectangular phase-space grid.
//!
//! Convention: `α = x + ip`, `W(α) = (2/π) tr[ρ D(α) Π D†(α)]` with parity
//! `Π = (−1)^{a†a}`, normalized as `∫W dx dp = 1`; the vacuum is
//! `(2/π) e^{−2|α|²}` and the x-marginal is the distribution of
//! `(a + a†)/2`.  The displaced parity is evaluated in closed form from the
//! Fock matrix elements of `D(2α)` (associated Laguerre polynomials), which
//! is exact for the truncated state at any `α`.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{atom_projected_block, partial_trace_atom, DensityOp, StateVector, C64};

pub const CONVENTION: &str = "W(0,0) = 2/pi for the vacuum; integral over dx dp equals 1; alpha = x + i p";
/// Largest |W| tolerated on the grid boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Initial half-width of the square grid `[−L, L]²`.
    pub half_width: f64,
    pub step: f64,
    /// Extension stops here; `None` picks `2√(n_max + 1) + 4`.
    pub max_half_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 3.0,
            step: 0.05,
            max_half_width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `values[[i, j]] = W(x_i, p_j)`.
    pub values: Array2<f64>,
    pub convention: &'static str,
}

impl WignerGrid {
    pub fn step(&self) -> (f64, f64) {
        (self.x[1] - self.x[0], self.p[1] - self.p[0])
    }

    /// `Σ W dx dp`.
    pub fn normalization(&self) -> f64 {
        let (dx, dp) = self.step();
        self.values.sum() * dx * dp
    }

    /// `∫ W dp` on the x axis.
    pub fn marginal_x(&self) -> Vec<f64> {
        let (_, dp) = self.step();
        self.values.rows().into_iter().map(|r| r.sum() * dp).collect()
    }

    pub fn boundary_max(&self) -> f64 {
        let (nx, np) = self.values.dim();
        let mut m = 0.0f64;
        for i in 0..nx {
            m = m.max(self.values[[i, 0]].abs()).max(self.values[[i, np - 1]].abs());
        }
        for j in 0..np {
            m = m.max(self.values[[0, j]].abs()).max(self.values[[nx - 1, j]].abs());
        }
        m
    }

    /// `(x, p, W)` at the largest value.
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ((i, j), v) in self.values.indexed_iter() {
            if *v > best.2 {
                best = (i, j, *v);
            }
        }
        (self.x[best.0], self.p[best.1], best.2)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: f64, p: f64) -> Option<f64> {
        let (dx, dp) = self.step();
        let fx = (x - self.x[0]) / dx;
        let fp = (p - self.p[0]) / dp;
        let (nx, np) = self.values.dim();
        if fx < 0.0 || fp < 0.0 || fx > (nx - 1) as f64 || fp > (np - 1) as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(nx - 2);
        let j = (fp.floor() as usize).min(np - 2);
        let (u, v) = (fx - i as f64, fp - j as f64);
        let w = &self.values;
        Some(
            w[[i, j]] * (1.0 - u) * (1.0 - v)
                + w[[i + 1, j]] * u * (1.0 - v)
                + w[[i, j + 1]] * (1.0 - u) * v
                + w[[i + 1, j + 1]] * u * v,
        )
    }
}

/// `W(x + ip)` of a cavity density matrix (trace one).
pub fn wigner_point(rho: &DensityOp, x: f64, p: f64) -> f64 {
    let m = rho.matrix();
    let n = m.nrows();
    let alpha2 = C64::new(2.0 * x, 2.0 * p);
    let u = alpha2.norm_sqr();
    let mut total = 0.0;
    let mut power = C64::new(1.0, 0.0);
    for k in 0..n {
        // Σ_j (−1)^j ρ_{j,j+k} √(j!/(j+k)!) L_j^{(k)}(u)
        let mut acc = C64::new(0.0, 0.0);
        let mut l_prev = 0.0;
        let mut l = 1.0;
        // √(j!/(j+k)!) starting at 1/√k!
        let mut ratio = (1..=k).fold(1.0, |r, i| r / (i as f64).sqrt());
        for j in 0..n - k {
            if j > 0 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + k as f64 - u) * l - (jf + k as f64) * l_prev) / (jf + 1.0);
                l_prev = l;
                l = next;
                ratio *= (j as f64 / (j + k) as f64).sqrt();
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += m[[j, j + k]] * (sign * ratio * l);
        }
        let term = acc * power;
        total += if k == 0 { term.re } else { 2.0 * term.re };
        power *= alpha2;
    }
    2.0 / std::f64::consts::PI * (-0.5 * u).exp() * total
}

/// Wigner function on `[−L, L]²`, widening `L` until the boundary falls
/// below [`BOUNDARY_TOLERANCE`].
pub fn wigner_transform(rho: &DensityOp, spec: &GridSpec) -> Result<WignerGrid> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-6 || tr.im.abs() > 1e-6 {
        return Err(invalid("rho", format!("cavity state must have unit trace, found {tr}")));
    }
    if !(spec.step > 0.0 && spec.half_width > 0.0) {
        return Err(invalid("grid", "step and half-width must be positive"));
    }
    let max_l = spec
        .max_half_width
        .unwrap_or(2.0 * (rho.dim() as f64).sqrt() + 4.0)
        .max(spec.half_width);
    let mut l = spec.half_width;
    loop {
        let grid = evaluate(rho, l, spec.step);
        let boundary = grid.boundary_max();
        if boundary < BOUNDARY_TOLERANCE {
            return Ok(grid);
        }
        if l >= max_l {
            return Err(Error::TruncationLeak { boundary });
        }
        l = (l * 1.25).min(max_l);
    }
}

fn evaluate(rho: &DensityOp, half_width: f64, step: f64) -> WignerGrid {
    let n = (half_width / step).ceil() as i64;
    let axis: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
    let len = axis.len();
    let rows: Vec<Vec<f64>> = axis
        .par_iter()
        .map(|&x| axis.iter().map(|&p| wigner_point(rho, x, p)).collect())
        .collect();
    let values = Array2::from_shape_fn((len, len), |(i, j)| rows[i][j]);
    WignerGrid {
        x: axis.clone(),
        p: axis,
        values,
        convention: CONVENTION,
    }
}

/// Distribution of `(a + a†)/2` at `x`, from the Fock matrix elements.
pub fn quadrature_distribution(rho: &DensityOp, x: f64) -> f64 {
    let m = rho.matrix();
    let n = m.nrows();
    // Hermite functions φ_k(q), q = √2 x
    let q = std::f64::consts::SQRT_2 * x;
    let mut phi = vec![0.0; n];
    phi[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp();
    if n > 1 {
        phi[1] = std::f64::consts::SQRT_2 * q * phi[0];
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        phi[k + 1] = (2.0 / (kf + 1.0)).sqrt() * q * phi[k] - (kf / (kf + 1.0)).sqrt() * phi[k - 1];
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (m[[i, j]] * phi[i] * phi[j]).re;
        }
    }
    std::f64::consts::SQRT_2 * s
}

/// Which part of a cavity–atom state is shown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomProjection {
    /// Reduced cavity state (atom traced out).
    Traced,
    /// `⟨−|ρ|−⟩`, renormalized.
    Ground,
    /// `⟨+|ρ|+⟩`, renormalized.
    Excited,
}

/// Wigner function of a composite state's cavity part together with the
/// probability weight of the chosen projection.
pub fn cavity_wigner(rho: &DensityOp, projection: AtomProjection, spec: &GridSpec) -> Result<(WignerGrid, f64)> {
    let block = match projection {
        AtomProjection::Traced => partial_trace_atom(rho)?,
        AtomProjection::Ground => atom_projected_block(rho, false)?,
        AtomProjection::Excited => atom_projected_block(rho, true)?,
    };
    let weight = block.trace().re;
    if !(weight > 1e-12) {
        return Err(invalid("projection", format!("projected weight {weight:.3e} is negligible")));
    }
    let normed = DensityOp::from_matrix_hermitized(block.into_matrix().mapv(|z| z / weight))?;
    Ok((wigner_transform(&normed, spec)?, weight))
}

/// [`cavity_wigner`] of a conditioned pure state.
pub fn conditioned_wigner(psi: &StateVector, projection: AtomProjection, spec: &GridSpec) -> Result<(WignerGrid, f64)> {
    let rho = psi.density();
    let tr = rho.trace().re;
    let normed = DensityOp::from_matrix_hermitized(rho.into_matrix().mapv(|z| z / tr))?;
    cavity_wigner(&normed, projection, spec)
}
