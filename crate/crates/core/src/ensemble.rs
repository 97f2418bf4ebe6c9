//! Seeded trajectory ensembles, trigger-averaged photocurrents and
//! ergodic averages.
//!
//! Trajectory `k` of an ensemble runs on RNG stream `cfg.stream + k` of
//! `base_seed`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::CorrelatorEngine;
use crate::error::{invalid, Error, Result};
use crate::hilbert::{DensityOp, SystemParams};
use crate::trajectories::{JumpChannel, TrajectoryRecord, TrajectorySimulator, UnravelingConfig};

/// Default length (units of 1/κ) of the record blocks used for error bars.
pub const DEFAULT_BLOCK_LENGTH: f64 = 20.0;
/// Resamples drawn by [`TriggeredAverage::bootstrap`] when none are given.
pub const DEFAULT_RESAMPLES: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    pub base_seed: u64,
    pub cfg: UnravelingConfig,
    /// Initial stretch of every record excluded from statistics (units 1/κ).
    pub warmup: f64,
}

impl EnsembleSpec {
    pub fn new(n_traj: usize, base_seed: u64, cfg: UnravelingConfig, warmup: f64) -> Self {
        Self { n_traj, base_seed, cfg, warmup }
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if self.n_traj == 0 {
            return Err(invalid("n_traj", "must be at least 1"));
        }
        if !(self.warmup >= 0.0 && self.warmup.is_finite()) {
            return Err(invalid("warmup", "must be finite and non-negative"));
        }
        self.cfg.validate(p)
    }

    /// `(seed, stream)` of trajectory `index`.
    pub fn rng_key(&self, index: usize) -> (u64, u64) {
        (self.base_seed, self.cfg.stream + index as u64)
    }
}

/// Runs the ensemble and keeps every record.
pub fn run_ensemble(p: &SystemParams, spec: &EnsembleSpec) -> Result<Vec<TrajectoryRecord>> {
    run_ensemble_map(p, spec, None, |_, rec| Ok(rec))
}

/// Runs the ensemble and reduces each record with `f` as soon as it finishes,
/// so long runs need not hold every record in memory.  Results come back in
/// trajectory order; the first failing index (lowest, not earliest) is reported.
pub fn run_ensemble_map<T, F>(p: &SystemParams, spec: &EnsembleSpec, steady: Option<&DensityOp>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, TrajectoryRecord) -> Result<T> + Sync,
{
    spec.validate(p)?;
    let mut sim = TrajectorySimulator::new(p, &spec.cfg)?;
    if let Some(rho) = steady {
        sim = sim.with_steady_state(rho)?;
    }
    let results: Vec<Result<T>> = (0..spec.n_traj)
        .into_par_iter()
        .map(|index| {
            let (seed, stream) = spec.rng_key(index);
            sim.run(seed, stream)
                .and_then(|rec| f(index, rec))
                .map_err(|e| Error::Trajectory { index, source: Box::new(e) })
        })
        .collect();
    results.into_iter().collect()
}

/// Photocurrent samples around counter triggers, summed per record block.
///
/// Blocks are the unit of resampling: triggers inside one block share
/// overlapping windows and are treated as correlated.
#[derive(Clone, Debug, PartialEq)]
pub struct TriggerBlocks {
    pub tau: Vec<f64>,
    /// Per block: `Σ_j i(t_j + τ)` on the grid.
    pub sums: Vec<Vec<f64>>,
    /// Per block: number of triggers.
    pub counts: Vec<usize>,
    pub bandwidth: f64,
}

impl TriggerBlocks {
    pub fn empty(tau: &[f64], bandwidth: f64) -> Self {
        Self {
            tau: tau.to_vec(),
            sums: Vec::new(),
            counts: Vec::new(),
            bandwidth,
        }
    }

    /// Collects the triggers of one record.  Triggers before `warmup` or
    /// closer than `max|τ|` to either end of the record are discarded.
    pub fn from_record(rec: &TrajectoryRecord, tau: &[f64], warmup: f64, block_length: f64) -> Result<Self> {
        check_grid(tau)?;
        if !(block_length > 0.0) {
            return Err(invalid("block_length", "must be positive"));
        }
        let current = rec
            .photocurrent
            .as_ref()
            .ok_or_else(|| invalid("records", "no photocurrent: the record is not a wave-particle trajectory"))?;
        let mut out = Self::empty(tau, rec.bandwidth);
        let (Some(&t0), Some(&t1)) = (rec.times.first(), rec.times.last()) else {
            return Ok(out);
        };
        let dt = rec.sample_interval();
        let reach = tau.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let lo = (t0 + warmup).max(t0 + reach);
        let hi = t1 - reach;
        let mut block_of: Option<i64> = None;
        for t in rec.jump_times(JumpChannel::CavityApd) {
            if t < lo || t > hi {
                continue;
            }
            let b = ((t - t0) / block_length).floor() as i64;
            if block_of != Some(b) {
                out.sums.push(vec![0.0; tau.len()]);
                out.counts.push(0);
                block_of = Some(b);
            }
            let sums = out.sums.last_mut().expect("block just pushed");
            for (s, tau_k) in sums.iter_mut().zip(tau) {
                *s += interpolate(current, t0, dt, t + tau_k);
            }
            *out.counts.last_mut().expect("block just pushed") += 1;
        }
        Ok(out)
    }

    /// Appends the blocks of `other` (grids must agree).
    pub fn merge(&mut self, other: TriggerBlocks) -> Result<()> {
        if other.tau != self.tau {
            return Err(invalid("tau_grid", "trigger blocks were collected on different grids"));
        }
        self.sums.extend(other.sums);
        self.counts.extend(other.counts);
        Ok(())
    }

    pub fn n_triggers(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn finish(self) -> Result<TriggeredAverage> {
        let n = self.n_triggers();
        if n == 0 {
            return Err(Error::NoTriggers);
        }
        let nb = self.counts.len();
        let nf = n as f64;
        let m = self.tau.len();
        let mut values = vec![0.0; m];
        for s in &self.sums {
            for (v, x) in values.iter_mut().zip(s) {
                *v += x;
            }
        }
        for v in &mut values {
            *v /= nf;
        }
        // cluster-robust standard error of a ratio of block sums
        let mut stderr = vec![f64::NAN; m];
        if nb > 1 {
            let mut var = vec![0.0; m];
            for (s, &c) in self.sums.iter().zip(&self.counts) {
                for k in 0..m {
                    let d = s[k] - values[k] * c as f64;
                    var[k] += d * d;
                }
            }
            let corr = nb as f64 / (nb as f64 - 1.0);
            for k in 0..m {
                stderr[k] = (var[k] * corr).sqrt() / nf;
            }
        }
        let shot_noise_floor = (self.bandwidth / (2.0 * nf)).sqrt();
        let normalized = long_delay_normalization(&self.tau, &values, &stderr);
        Ok(TriggeredAverage {
            tau: self.tau,
            values,
            stderr,
            n_triggers: n,
            shot_noise_floor,
            normalized,
            blocks: self.sums,
            block_counts: self.counts,
        })
    }
}

/// Trigger-averaged photocurrent `ℋ(τ) = (1/N) Σ_j i(t_j + τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriggeredAverage {
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
    /// Block (cluster) standard error per delay; NaN with a single block.
    pub stderr: Vec<f64>,
    pub n_triggers: usize,
    /// `√(B/(2N))`: the standard error of pure photocurrent noise.
    pub shot_noise_floor: f64,
    /// ℋ divided by its long-delay value when that value is resolved.
    pub normalized: Option<Vec<f64>>,
    blocks: Vec<Vec<f64>>,
    block_counts: Vec<usize>,
}

/// Mirror asymmetry `D = mean_{τ∈W}[ℋ(τ) − ℋ(−τ)]` over a window of positive delays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub value: f64,
    pub stderr: f64,
}

impl Asymmetry {
    pub fn significance(&self) -> f64 {
        (self.value / self.stderr).abs()
    }
}

impl TriggeredAverage {
    pub fn n_blocks(&self) -> usize {
        self.block_counts.len()
    }

    /// Estimate and bootstrap standard error of `stat(ℋ)`, resampling
    /// blocks with replacement on a seeded stream.
    pub fn bootstrap<F: Fn(&[f64]) -> f64>(&self, stat: F, resamples: usize, seed: u64) -> (f64, f64) {
        let estimate = stat(&self.values);
        let nb = self.n_blocks();
        if nb < 2 || resamples < 2 {
            return (estimate, f64::NAN);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.tau.len();
        let mut curve = vec![0.0; m];
        let mut samples = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            curve.fill(0.0);
            let mut n = 0usize;
            for _ in 0..nb {
                let b = rng.random_range(0..nb);
                n += self.block_counts[b];
                for (c, x) in curve.iter_mut().zip(&self.blocks[b]) {
                    *c += x;
                }
            }
            if n == 0 {
                continue;
            }
            for c in &mut curve {
                *c /= n as f64;
            }
            samples.push(stat(&curve));
        }
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
        (estimate, var.sqrt())
    }

    /// Index pairs `(τ, −τ)` with `τ ∈ [lo, hi]`, τ > 0.
    pub fn mirror_pairs(&self, lo: f64, hi: f64) -> Vec<(usize, usize)> {
        let tol = 1e-9 * self.tau.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        self.tau
            .iter()
            .enumerate()
            .filter(|(_, t)| **t > 0.0 && **t >= lo && **t <= hi)
            .filter_map(|(i, t)| self.tau.iter().position(|s| (s + t).abs() <= tol).map(|j| (i, j)))
            .collect()
    }

    /// Window-averaged mirror asymmetry with a block-bootstrap error.
    pub fn mirror_asymmetry(&self, lo: f64, hi: f64, seed: u64) -> Result<Asymmetry> {
        let pairs = self.mirror_pairs(lo, hi);
        if pairs.is_empty() {
            return Err(invalid("window", "no mirrored delay pairs in the window"));
        }
        let stat = |c: &[f64]| pairs.iter().map(|&(i, j)| c[i] - c[j]).sum::<f64>() / pairs.len() as f64;
        let (value, stderr) = self.bootstrap(stat, DEFAULT_RESAMPLES, seed);
        Ok(Asymmetry { value, stderr })
    }
}

/// Triggered average of a collection of records.
pub fn triggered_average(records: &[TrajectoryRecord], tau: &[f64], warmup: f64) -> Result<TriggeredAverage> {
    check_grid(tau)?;
    let bandwidth = records.first().map_or(1.0, |r| r.bandwidth);
    let mut all = TriggerBlocks::empty(tau, bandwidth);
    for rec in records {
        if rec.r <= 0.0 || rec.r >= 1.0 {
            return Err(invalid("r", "triggered averages need 0 < r < 1"));
        }
        all.merge(TriggerBlocks::from_record(rec, tau, warmup, DEFAULT_BLOCK_LENGTH)?)?;
    }
    all.finish()
}

/// `tau` values from `-reach` to `reach` in steps of `step`, symmetric about 0.
pub fn symmetric_grid(reach: f64, step: f64) -> Vec<f64> {
    let n = (reach / step).round() as i64;
    (-n..=n).map(|k| k as f64 * step).collect()
}

/// Mean photocurrent expected around a trigger: the wave-particle correlation
/// of the regression formula, scaled by the record gain `√(8κ(1−r))` and
/// passed through the one-pole low-pass filter of bandwidth `B` that shapes
/// the photocurrent.
pub fn expected_triggered_average(
    engine: &CorrelatorEngine,
    theta: f64,
    r: f64,
    bandwidth: f64,
    tau: &[f64],
) -> Result<Vec<f64>> {
    check_grid(tau)?;
    let p = engine.params();
    let fastest = [2.0 * p.g, 2.0 * p.kappa, bandwidth, p.delta_omega_d.abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let step = 1.0 / (20.0 * fastest);
    let start = tau[0] - 12.0 / bandwidth;
    let stop = *tau.last().expect("non-empty grid");
    let n = ((stop - start) / step).ceil() as usize + 1;
    let fine: Vec<f64> = (0..n).map(|k| start + k as f64 * step).collect();
    let h = engine.h_theta(theta, &fine)?.real();
    let filtered = low_pass(&fine, &h, bandwidth);
    let gain = (8.0 * p.kappa * (1.0 - r)).sqrt();
    Ok(tau
        .iter()
        .map(|&t| gain * interpolate(&filtered, start, step, t))
        .collect())
}

/// One-pole causal low-pass `y' = B(x − y)`, exact for piecewise-linear
/// input on an increasing grid, started at `y = x` on the first sample.
pub fn low_pass(t: &[f64], x: &[f64], bandwidth: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let Some(&x0) = x.first() else {
        return y;
    };
    let mut cur = x0;
    y.push(cur);
    for k in 1..x.len() {
        let h = t[k] - t[k - 1];
        let bh = bandwidth * h;
        let e = (-bh).exp();
        // ∫ over a linear ramp from x[k−1] to x[k]
        let slope_term = if bh > 1e-8 { (1.0 - e) / bh } else { 1.0 - 0.5 * bh };
        cur = cur * e + x[k] * (1.0 - slope_term) + x[k - 1] * (slope_term - e);
        y.push(cur);
    }
    y
}

/// Mean of `⟨a†a⟩_c` over recorded samples at or after `warmup`.
pub fn time_average_photon_number(rec: &TrajectoryRecord, warmup: f64) -> Option<f64> {
    let vals: Vec<f64> = rec
        .times
        .iter()
        .zip(&rec.cond_photon_number)
        .filter(|(t, _)| **t >= warmup)
        .map(|(_, n)| *n)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Sample mean and standard error of a set of values.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ensemble mean and standard error of `⟨a†a⟩_c` at every recorded sample
/// index shared by all records.
pub fn ensemble_photon_number(records: &[TrajectoryRecord]) -> Vec<(f64, f64, f64)> {
    let len = records.iter().map(|r| r.times.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| {
            let xs: Vec<f64> = records.iter().map(|r| r.cond_photon_number[k]).collect();
            let (m, se) = mean_and_stderr(&xs);
            (records[0].times[k], m, se)
        })
        .collect()
}

fn check_grid(tau: &[f64]) -> Result<()> {
    if tau.is_empty() {
        return Err(invalid("tau_grid", "must not be empty"));
    }
    if tau.windows(2).any(|w| !(w[1] > w[0])) || tau.iter().any(|t| !t.is_finite()) {
        return Err(invalid("tau_grid", "must be finite and strictly increasing"));
    }
    Ok(())
}

/// Linear interpolation of samples `x[k]` taken at `t0 + k·dt`.
fn interpolate(x: &[f64], t0: f64, dt: f64, t: f64) -> f64 {
    if x.len() == 1 || dt <= 0.0 {
        return x[0];
    }
    let s = ((t - t0) / dt).clamp(0.0, (x.len() - 1) as f64);
    let k = (s.floor() as usize).min(x.len() - 2);
    let f = s - k as f64;
    x[k] * (1.0 - f) + x[k + 1] * f
}

/// Divides by the mean over the outer fifth of |τ| when that mean exceeds
/// three of its own standard errors.
fn long_delay_normalization(tau: &[f64], values: &[f64], stderr: &[f64]) -> Option<Vec<f64>> {
    let reach = tau.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let outer: Vec<usize> = (0..tau.len()).filter(|&k| tau[k].abs() >= 0.8 * reach).collect();
    if outer.is_empty() || reach == 0.0 {
        return None;
    }
    let n = outer.len() as f64;
    let limit = outer.iter().map(|&k| values[k]).sum::<f64>() / n;
    // conservative: errors of neighbouring delays are strongly correlated
    let se = outer.iter().map(|&k| stderr[k]).sum::<f64>() / n;
    (se.is_finite() && limit.abs() > 3.0 * se).then(|| values.iter().map(|v| v / limit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{FockTruncation, StateVector, C64};
    use crate::trajectories::{run_wave_particle, InitialState, JumpEvent};
    use ndarray::Array1;
    use rand_distr::{Distribution, StandardNormal};

    fn small() -> SystemParams {
        SystemParams::new(6.0, 1.0, 0.0, 1.5, -4.0, FockTruncation::new(5).unwrap()).unwrap()
    }

    fn synthetic(triggers: &[f64], current: Vec<f64>, dt: f64) -> TrajectoryRecord {
        let n = current.len();
        TrajectoryRecord {
            times: (0..n).map(|k| k as f64 * dt).collect(),
            cond_photon_number: vec![0.0; n],
            cond_quadrature: vec![0.0; n],
            photocurrent: Some(current),
            jumps: triggers
                .iter()
                .map(|&t| JumpEvent { time: t, channel: JumpChannel::CavityApd })
                .collect(),
            seed: 0,
            stream: 0,
            theta: 0.0,
            r: 0.5,
            bandwidth: 10.0,
            final_state: StateVector::unnormalized(Array1::from(vec![C64::new(1.0, 0.0)])),
            snapshots: Vec::new(),
            density_average: None,
        }
    }

    #[test]
    fn single_trajectory_ensemble_matches_direct_run() {
        let p = small();
        let mut cfg = UnravelingConfig::wave_particle(&p, 0.5, 0.3, 0.5, InitialState::Fock { n: 1, excited: false });
        cfg.seed = 11;
        cfg.record_stride = 7;
        let spec = EnsembleSpec::new(1, 11, cfg.clone(), 0.0);
        let ens = run_ensemble(&p, &spec).unwrap();
        let one = run_wave_particle(&p, &cfg).unwrap();
        assert_eq!(ens[0].photocurrent, one.photocurrent);
        assert_eq!(ens[0].jumps, one.jumps);
        let again = run_ensemble(&p, &spec).unwrap();
        assert_eq!(again[0].cond_photon_number, ens[0].cond_photon_number);
    }

    #[test]
    fn failures_are_tagged_with_the_index() {
        let p = small();
        let mut cfg = UnravelingConfig::wave_particle(&p, 0.5, 0.0, 0.1, InitialState::Fock { n: 1, excited: false });
        cfg.record_stride = 1;
        let spec = EnsembleSpec::new(3, 1, cfg, 0.0);
        let err = run_ensemble_map(&p, &spec, None, |i, rec| {
            if i >= 1 {
                Err(Error::NoTriggers)
            } else {
                Ok(rec.times.len())
            }
        })
        .unwrap_err();
        match err {
            Error::Trajectory { index, .. } => assert_eq!(index, 1),
            other => panic!("{other}"),
        }
        assert!(EnsembleSpec::new(0, 1, spec.cfg.clone(), 0.0).validate(&p).is_err());
        assert!(EnsembleSpec::new(1, 1, spec.cfg.clone(), -1.0).validate(&p).is_err());
    }

    #[test]
    fn white_noise_average_is_at_the_floor() {
        let dt = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sd = (10.0f64 / 2.0).sqrt();
        let mut records = Vec::new();
        for _ in 0..40 {
            let x: Vec<f64> = (0..20_000)
                .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let triggers: Vec<f64> = (0..100).map(|k| 2.0 + k as f64 * 1.9).collect();
            records.push(synthetic(&triggers, x, dt));
        }
        let tau = symmetric_grid(1.0, 0.25);
        let avg = triggered_average(&records, &tau, 0.0).unwrap();
        assert_eq!(avg.n_triggers, 4000);
        assert!((avg.shot_noise_floor - (10.0f64 / 8000.0).sqrt()).abs() < 1e-12);
        for (v, se) in avg.values.iter().zip(&avg.stderr) {
            assert!(v.abs() < 4.0 * avg.shot_noise_floor);
            assert!((se / avg.shot_noise_floor - 1.0).abs() < 0.25, "{se}");
        }
        assert!(avg.normalized.is_none());
    }

    #[test]
    fn edge_and_warmup_triggers_are_dropped() {
        let rec = synthetic(&[0.5, 3.0, 9.5], (0..1001).map(|k| k as f64).collect(), 0.01);
        let b = TriggerBlocks::from_record(&rec, &[-1.0, 0.0, 1.0], 2.0, 20.0).unwrap();
        assert_eq!(b.n_triggers(), 1);
        // linear current: samples are the index at t_j + τ
        assert!((b.sums[0][0] - 200.0).abs() < 1e-9 && (b.sums[0][2] - 400.0).abs() < 1e-9);
        let none = synthetic(&[0.5], vec![0.0; 101], 0.01);
        assert!(matches!(triggered_average(&[none], &[0.0], 0.8), Err(Error::NoTriggers)));
    }

    #[test]
    fn asymmetry_of_a_known_signal() {
        // i(t) = 1 just after each trigger, 0 before: D = 1 on (0, 0.5]
        let dt = 0.01;
        let triggers: Vec<f64> = (0..50).map(|k| 3.0 + 4.0 * k as f64).collect();
        let cur: Vec<f64> = (0..21_000)
            .map(|k| {
                let t = k as f64 * dt;
                if triggers.iter().any(|&tj| t > tj && t - tj <= 1.0) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let rec = synthetic(&triggers, cur, dt);
        let avg = triggered_average(&[rec], &symmetric_grid(2.0, 0.1), 0.0).unwrap();
        let a = avg.mirror_asymmetry(0.15, 0.85, 1).unwrap();
        assert!((a.value - 1.0).abs() < 1e-9);
        assert!(avg.mirror_asymmetry(5.0, 6.0, 1).is_err());
    }

    #[test]
    fn bootstrap_error_tracks_cluster_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dt = 0.01;
        let x: Vec<f64> = (0..200_000)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let triggers: Vec<f64> = (0..900).map(|k| 1.0 + k as f64 * 2.2).collect();
        let avg = triggered_average(&[synthetic(&triggers, x, dt)], &[0.0], 0.0).unwrap();
        let (est, se) = avg.bootstrap(|c| c[0], 400, 9);
        assert_eq!(est, avg.values[0]);
        assert!((se / avg.stderr[0] - 1.0).abs() < 0.2, "{se} vs {}", avg.stderr[0]);
        let again = avg.bootstrap(|c| c[0], 400, 9);
        assert_eq!(again.1, se);
    }

    #[test]
    fn low_pass_of_a_step_and_a_ramp() {
        let t: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
        let step: Vec<f64> = t.iter().map(|&s| if s > 0.0 { 1.0 } else { 0.0 }).collect();
        let y = low_pass(&t, &step, 3.0);
        // the first interval is a ramp 0 → 1; afterwards the exact step response
        let ramp_end = 1.0 - (1.0 - (-0.03f64).exp()) / 0.03;
        assert!((y[1] - ramp_end).abs() < 1e-12);
        let expect = 1.0 - (1.0 - ramp_end) * (-3.0f64 * 3.99).exp();
        assert!((y[400] - expect).abs() < 1e-12);
        let ramp: Vec<f64> = t.to_vec();
        let yr = low_pass(&t, &ramp, 2.0);
        // y' = B(t − y), y(0) = 0 ⇒ y = t − (1 − e^{−Bt})/B
        let exact = 4.0 - (1.0 - (-8.0f64).exp()) / 2.0;
        assert!((yr[400] - exact).abs() < 1e-12);
    }

    #[test]
    fn ensemble_photon_number_statistics() {
        let p = small();
        let mut cfg = UnravelingConfig::wave_particle(&p, 0.5, 0.0, 1.0, InitialState::Fock { n: 0, excited: false });
        cfg.record_stride = 40;
        let records = run_ensemble(&p, &EnsembleSpec::new(16, 2, cfg, 0.0)).unwrap();
        let series = ensemble_photon_number(&records);
        assert_eq!(series.len(), records[0].times.len());
        assert_eq!(series[0].1, 0.0);
        assert!(series.last().unwrap().2 > 0.0);
        assert!(time_average_photon_number(&records[0], 0.5).unwrap() > 0.0);
        assert!(time_average_photon_number(&records[0], 5.0).is_none());
    }
}
