//! Spectral peak finding on sampled records and a one-sample
//! Kolmogorov–Smirnov test.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::trajectories::TrajectoryRecord;

/// Dominant angular frequency of a uniformly sampled signal above `min_omega`.
///
/// The mean is removed, a Hann window applied and the record zero-padded to
/// at least eight times its length; the peak bin is refined by parabolic
/// interpolation of the log magnitude.
pub fn dominant_frequency(samples: &[f64], dt: f64, min_omega: f64) -> Option<f64> {
    let n = samples.len();
    if n < 8 || !(dt > 0.0) {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let len = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
    for (k, (b, x)) in buf.iter_mut().zip(samples).enumerate() {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
        *b = Complex::new((x - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let bin_omega = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let first = ((min_omega / bin_omega).ceil() as usize).max(1);
    let half = len / 2;
    if first + 1 >= half {
        return None;
    }
    let mag: Vec<f64> = buf[..=half].iter().map(|z| z.norm()).collect();
    let k = (first..half).max_by(|&a, &b| mag[a].partial_cmp(&mag[b]).unwrap())?;
    if mag[k] == 0.0 {
        return None;
    }
    let (l, c, r) = (mag[k - 1].max(1e-300).ln(), mag[k].ln(), mag[k + 1].max(1e-300).ln());
    let denom = l - 2.0 * c + r;
    let shift = if denom.abs() > 0.0 { (0.5 * (l - r) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    Some((k as f64 + shift) * bin_omega)
}

/// Index ranges `[start, end)` of the recorded samples between consecutive
/// jumps (any channel), first segment starting at the first sample.
pub fn jump_segments(rec: &TrajectoryRecord) -> Vec<(usize, usize)> {
    let mut bounds = vec![0usize];
    for j in &rec.jumps {
        // first sample at or after the jump belongs to the next segment
        let idx = rec.times.partition_point(|t| *t < j.time - 1e-12);
        bounds.push(idx);
    }
    bounds.push(rec.times.len());
    bounds.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

/// Dominant beat frequency of `⟨a†a⟩_c` in each jump-delimited segment
/// lasting at least `min_duration`; shorter segments give `None`.
pub fn segment_beat_frequencies(rec: &TrajectoryRecord, min_duration: f64, min_omega: f64) -> Vec<Option<f64>> {
    let dt = rec.sample_interval();
    jump_segments(rec)
        .into_iter()
        .map(|(a, b)| {
            let duration = (b - a) as f64 * dt;
            if duration < min_duration {
                return None;
            }
            dominant_frequency(&rec.cond_photon_number[a..b], dt, min_omega)
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the continuous CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Asymptotic p-value of a KS distance `d` with `n` samples
/// (Stephens' small-sample correction of the Kolmogorov series).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Piecewise-linear CDF from a density sampled on an increasing grid
/// (cumulative trapezoid), normalized to its final value.
pub struct TabulatedCdf {
    x: Vec<f64>,
    cdf: Vec<f64>,
    /// Integral of the density over the grid before normalization.
    pub mass: f64,
}

impl TabulatedCdf {
    pub fn from_density(x: &[f64], density: &[f64]) -> Self {
        let mut cdf = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for k in 1..x.len() {
            acc += 0.5 * (density[k] + density[k - 1]) * (x[k] - x[k - 1]);
            cdf.push(acc);
        }
        let mass = acc;
        for c in &mut cdf {
            *c /= mass;
        }
        Self { x: x.to_vec(), cdf, mass }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.x[0] {
            return 0.0;
        }
        let k = self.x.partition_point(|v| *v < t);
        if k >= self.x.len() {
            return 1.0;
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let f = (t - x0) / (x1 - x0);
        self.cdf[k - 1] * (1.0 - f) + self.cdf[k] * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{StateVector, C64};
    use crate::trajectories::{JumpChannel, JumpEvent};
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finds_a_sinusoid_off_the_bin_grid() {
        let dt = 1e-3;
        let w = 437.3;
        let x: Vec<f64> = (0..300).map(|k| 2.0 + (w * k as f64 * dt + 0.4).cos()).collect();
        let est = dominant_frequency(&x, dt, 10.0).unwrap();
        assert!((est / w - 1.0).abs() < 2e-3, "{est}");
        assert!(dominant_frequency(&x[..4], dt, 10.0).is_none());
    }

    #[test]
    fn segments_split_at_jumps() {
        let n = 100;
        let rec = TrajectoryRecord {
            times: (0..n).map(|k| k as f64 * 0.01).collect(),
            cond_photon_number: (0..n).map(|k| if k < 40 { (k as f64 * 3.0).sin() } else { (k as f64).cos() }).collect(),
            cond_quadrature: vec![0.0; n],
            photocurrent: None,
            jumps: vec![
                JumpEvent { time: 0.4, channel: JumpChannel::CavityApd },
                JumpEvent { time: 0.45, channel: JumpChannel::Spontaneous },
            ],
            seed: 0,
            stream: 0,
            theta: 0.0,
            r: 1.0,
            bandwidth: 1.0,
            final_state: StateVector::unnormalized(Array1::from(vec![C64::new(1.0, 0.0)])),
            snapshots: Vec::new(),
            density_average: None,
        };
        assert_eq!(jump_segments(&rec), vec![(0, 40), (40, 45), (45, 100)]);
        let f = segment_beat_frequencies(&rec, 0.1, 1.0);
        assert!(f[1].is_none());
        assert!((f[0].unwrap() - 300.0).abs() < 10.0 && (f[2].unwrap() - 100.0).abs() < 5.0);
    }

    #[test]
    fn ks_accepts_the_true_law_and_rejects_a_wrong_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..2000).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let d = ks_statistic(&xs, |x| 1.0 - (-x).exp());
        assert!(ks_p_value(d, xs.len()) > 0.01);
        let d2 = ks_statistic(&xs, |x| 1.0 - (-1.2 * x).exp());
        assert!(ks_p_value(d2, xs.len()) < 1e-3);
        // known value: λ = 1.36 ↔ p ≈ 0.05
        assert!((ks_p_value(1.36 / (1e8f64).sqrt(), 100_000_000) - 0.0494).abs() < 2e-3);
    }

    #[test]
    fn tabulated_cdf_of_an_exponential() {
        let x: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.005).collect();
        let dens: Vec<f64> = x.iter().map(|t| 2.0 * (-2.0 * t).exp()).collect();
        let c = TabulatedCdf::from_density(&x, &dens);
        assert!((c.mass - 1.0).abs() < 1e-4);
        assert!((c.eval(0.7) - (1.0 - (-1.4f64).exp())).abs() < 1e-5);
        assert_eq!(c.eval(-1.0), 0.0);
        assert_eq!(c.eval(100.0), 1.0);
    }
}
