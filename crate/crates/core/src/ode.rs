//! Explicit Runge–Kutta integration of autonomous complex linear-ish ODEs.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::hilbert::C64;

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `dy/dt = f(y)` from 0 to `t_end` with adaptive Dormand–Prince
/// steps. `h0` is the initial step guess.
pub fn integrate_adaptive<F>(
    f: F,
    y0: Array1<C64>,
    t_end: f64,
    h0: f64,
    tol: Tolerance,
) -> Result<Array1<C64>>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    if t_end <= 0.0 {
        return Ok(y0);
    }
    let mut y = y0;
    let mut t = 0.0;
    let mut h = h0.min(t_end).max(f64::MIN_POSITIVE);
    let mut k: Vec<Array1<C64>> = Vec::with_capacity(7);
    let mut first = f(&y);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        if h < 1e-14 * t_end.max(1.0) && t + h < t_end {
            return Err(Error::StepSizeUnderflow { t });
        }
        k.clear();
        k.push(first.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    ys.scaled_add(C64::new(h * a, 0.0), kj);
                }
            }
            k.push(f(&ys));
        }
        let mut y5 = y.clone();
        let mut err_vec = Array1::<C64>::zeros(y.len());
        for s in 0..7 {
            if B5[s] != 0.0 {
                y5.scaled_add(C64::new(h * B5[s], 0.0), &k[s]);
            }
            let e = B5[s] - B4[s];
            if e != 0.0 {
                err_vec.scaled_add(C64::new(h * e, 0.0), &k[s]);
            }
        }
        let mut err: f64 = 0.0;
        for ((e, a), b) in err_vec.iter().zip(y.iter()).zip(y5.iter()) {
            let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
            err = err.max(e.norm() / sc);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            // FSAL: the last stage is evaluated at the accepted point
            first = k[6].clone();
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<F>(f: &F, y: &Array1<C64>, h: f64) -> Array1<C64>
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    let hc = C64::new(h, 0.0);
    let k1 = f(y);
    let k2 = f(&(y + &(&k1 * (hc * 0.5))));
    let k3 = f(&(y + &(&k2 * (hc * 0.5))));
    let k4 = f(&(y + &(&k3 * hc)));
    y + &((&k1 + &(&k2 * 2.0) + &(&k3 * 2.0) + &k4) * (hc / 6.0))
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor
/// polynomial; adequate for the moderately normed generators used here.
pub fn expm(m: &Array2<C64>) -> Array2<C64> {
    let n = m.nrows();
    let norm1 = (0..n)
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.25 { (norm1 / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = m / C64::new(2f64.powi(squarings as i32), 0.0);
    let mut result = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=18 {
        term = term.dot(&scaled) / C64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_and_nilpotent() {
        let w = 7.3;
        let m = ndarray::arr2(&[[C64::new(0.0, 0.0), C64::new(w, 0.0)], [C64::new(-w, 0.0), C64::new(0.0, 0.0)]]);
        let e = expm(&m);
        assert!((e[[0, 0]] - C64::new(w.cos(), 0.0)).norm() < 1e-12);
        assert!((e[[0, 1]] - C64::new(w.sin(), 0.0)).norm() < 1e-12);
        let nil = ndarray::arr2(&[[C64::new(0.0, 0.0), C64::new(3.0, 1.0)], [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]]);
        let e = expm(&nil);
        assert!((e[[0, 1]] - C64::new(3.0, 1.0)).norm() < 1e-14);
        assert!((e[[1, 1]] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn exponential_decay_and_rotation() {
        let lam = C64::new(-0.7, 3.0);
        let y0 = Array1::from(vec![C64::new(1.0, 0.5)]);
        let y = integrate_adaptive(|y| y * lam, y0.clone(), 2.0, 1e-3, Tolerance::default()).unwrap();
        let exact = y0[0] * (lam * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-9);
    }

    #[test]
    fn zero_time_is_identity() {
        let y0 = Array1::from(vec![C64::new(1.0, 0.5), C64::new(-2.0, 0.0)]);
        let y = integrate_adaptive(|y| y * 5.0, y0.clone(), 0.0, 1e-3, Tolerance::default()).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let lam = C64::new(-1.0, 2.0);
        let f = |y: &Array1<C64>| y * lam;
        let y0 = Array1::from(vec![C64::new(1.0, 0.0)]);
        let e1 = (rk4_step(&f, &y0, 0.02)[0] - (lam * 0.02).exp()).norm();
        let e2 = (rk4_step(&f, &y0, 0.01)[0] - (lam * 0.01).exp()).norm();
        let slope = (e1 / e2).log2();
        assert!((slope - 5.0).abs() < 0.2, "slope {slope}");
    }
}
