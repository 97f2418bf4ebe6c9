//! Single-realization unravelings of the master equation.
//!
//! Direct photodetection (`r = 1`) propagates with the exact no-jump
//! propagator `exp(−iH′dt)` and decides jumps from the norm lost over each
//! step. The wave-particle correlator (`0 ≤ r < 1`, or `r = 1` through the
//! same stepper) integrates the linear homodyne equation
//!
//! `dψ̄ = [−iH′dt + √(2κ(1−r)) e^{−iθ} a (√(8κ(1−r))⟨A_θ⟩_c dt + dW)] ψ̄`
//!
//! with the weak order-2 scheme, renormalizes, and then applies photon-counter
//! and spontaneous-emission jumps by Bernoulli draws. The photocurrent obeys
//! `di = −B(i dt − √(8κ(1−r))⟨A_θ⟩_c dt − dW)` driven by the same `dW`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hilbert::{DensityOp, JcOperators, StateVector, SystemParams, C64, I, ZERO};
use crate::liouvillian::{steady_state, MasterEquation, Superoperator};
use crate::ode::expm;
use crate::sde::{SdeCoefficients, WeakOrder2};
use crate::sparse::{inner, norm_sqr, SparseOp};

/// Largest admissible single-step jump probability.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;
/// Norm below which the un-normalized state is considered lost.
pub const MIN_NORM: f64 = 1e-12;
/// Default photocurrent bandwidth in units of κ.
pub const DEFAULT_BANDWIDTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpChannel {
    CavityApd,
    Spontaneous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: JumpChannel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|n, ±⟩`
    Fock { n: usize, excited: bool },
    /// Pure state drawn from the eigen-decomposition of ρ_ss.
    SteadyStateSample,
    /// Explicit amplitudes in the composite basis; normalized on use.
    Amplitudes(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnravelingConfig {
    /// Fraction of the output sent to the photon counter.
    pub r: f64,
    /// Local-oscillator phase.
    pub theta: f64,
    /// Photocurrent bandwidth B (units of κ).
    pub bandwidth: f64,
    pub dt: f64,
    pub seed: u64,
    /// Independent RNG stream for this trajectory.
    pub stream: u64,
    pub t_max: f64,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    pub initial_state: InitialState,
    /// Times at which the conditioned state is stored.
    pub snapshot_times: Vec<f64>,
    /// Accumulate the time average of |ψ⟩⟨ψ| over recorded samples after this time.
    pub average_after: Option<f64>,
}

impl UnravelingConfig {
    /// Largest step allowed for these parameters: `1/(20·max(2g, 2κ, Ω, B))`.
    pub fn max_dt(p: &SystemParams, bandwidth: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::SQRT_2 * p.eps_d * p.eps_d / p.g;
        let fastest = [2.0 * p.g, 2.0 * p.kappa, omega, bandwidth, p.delta_omega_d.abs()]
            .into_iter()
            .fold(0.0, f64::max);
        1.0 / (20.0 * fastest)
    }

    pub fn direct_photodetection(p: &SystemParams, t_max: f64, initial_state: InitialState) -> Self {
        Self {
            r: 1.0,
            theta: 0.0,
            bandwidth: DEFAULT_BANDWIDTH,
            dt: Self::max_dt(p, DEFAULT_BANDWIDTH),
            seed: 0,
            stream: 0,
            t_max,
            record_stride: 1,
            initial_state,
            snapshot_times: Vec::new(),
            average_after: None,
        }
    }

    pub fn wave_particle(p: &SystemParams, r: f64, theta: f64, t_max: f64, initial_state: InitialState) -> Self {
        Self {
            r,
            theta,
            ..Self::direct_photodetection(p, t_max, initial_state)
        }
    }

    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r) {
            return Err(invalid("r", "beam-splitter fraction must lie in [0, 1]"));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid("bandwidth", "must be positive"));
        }
        let limit = Self::max_dt(p, self.bandwidth);
        if !(self.dt > 0.0) || self.dt > limit * (1.0 + 1e-9) {
            return Err(invalid("dt", format!("must lie in (0, {limit:.3e}] for these rates")));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(invalid("t_max", "must be finite and non-negative"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        if let InitialState::Fock { n, .. } = self.initial_state {
            if n > p.trunc.n_max() {
                return Err(invalid("initial_state", "photon number exceeds the truncation"));
            }
        }
        if let InitialState::Amplitudes(v) = &self.initial_state {
            if v.len() != p.dim() {
                return Err(Error::DimensionMismatch { expected: p.dim(), found: v.len() });
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Clone, Debug)]
pub struct StateSnapshot {
    pub time: f64,
    pub state: StateVector,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// ⟨a†a⟩_REC
    pub cond_photon_number: Vec<f64>,
    /// ⟨A_θ⟩_c
    pub cond_quadrature: Vec<f64>,
    pub photocurrent: Option<Vec<f64>>,
    pub jumps: Vec<JumpEvent>,
    pub seed: u64,
    pub stream: u64,
    pub theta: f64,
    pub r: f64,
    pub bandwidth: f64,
    pub final_state: StateVector,
    pub snapshots: Vec<StateSnapshot>,
    pub density_average: Option<DensityOp>,
}

impl TrajectoryRecord {
    pub fn sample_interval(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn jump_times(&self, channel: JumpChannel) -> Vec<f64> {
        self.jumps.iter().filter(|j| j.channel == channel).map(|j| j.time).collect()
    }

    /// Conditioned state stored closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&StateSnapshot> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().partial_cmp(&(b.time - t).abs()).unwrap())
    }
}

/// Linear homodyne SDE with the quadrature expectation frozen over a step.
struct HomodyneSde<'a> {
    /// `−iH′`
    generator: &'a SparseOp,
    measured: &'a SparseOp,
    /// `√(8κ(1−r))⟨A_θ⟩_c` at the start of the step.
    record_drift: f64,
}

impl SdeCoefficients for HomodyneSde<'_> {
    fn dim(&self) -> usize {
        self.generator.dim()
    }
    fn drift(&self, y: &[C64], out: &mut [C64]) {
        self.generator.apply_into(y, out);
        if self.record_drift != 0.0 {
            self.measured.apply_add(y, C64::new(self.record_drift, 0.0), out);
        }
    }
    fn diffusion(&self, y: &[C64], out: &mut [C64]) {
        self.measured.apply_into(y, out);
    }
}

/// One step of the wave-particle unraveling; owns its operators and scratch.
#[derive(Clone, Debug)]
pub struct WaveParticleStepper {
    /// `−iH′`
    generator: SparseOp,
    /// `√(2κ(1−r)) e^{−iθ} a`
    measured: SparseOp,
    a: SparseOp,
    sm: SparseOp,
    kappa: f64,
    gamma: f64,
    r: f64,
    theta: f64,
    bandwidth: f64,
    dt: f64,
    record_gain: f64,
    scheme: WeakOrder2,
    scratch: Vec<C64>,
    scratch_sp: Vec<C64>,
}

/// Outcome of [`WaveParticleStepper::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub jump: Option<JumpChannel>,
    /// `⟨A_θ⟩_c` used as the frozen coefficient.
    pub quadrature: f64,
}

impl WaveParticleStepper {
    pub fn new(me: &MasterEquation, cfg: &UnravelingConfig) -> Self {
        let p = &me.params;
        let ops = &me.ops;
        let gain = (2.0 * p.kappa * (1.0 - cfg.r)).sqrt();
        let measured = ops.a.matrix().mapv(|z| z * C64::from_polar(gain, -cfg.theta));
        let dim = ops.dim();
        Self {
            generator: SparseOp::from_dense(&me.effective_hamiltonian().mapv(|z| -I * z)),
            measured: SparseOp::from_dense(&measured),
            a: SparseOp::from_dense(ops.a.matrix()),
            sm: SparseOp::from_dense(ops.sm.matrix()),
            kappa: p.kappa,
            gamma: p.gamma,
            r: cfg.r,
            theta: cfg.theta,
            bandwidth: cfg.bandwidth,
            dt: cfg.dt,
            record_gain: (8.0 * p.kappa * (1.0 - cfg.r)).sqrt(),
            scheme: WeakOrder2::new(dim),
            scratch: vec![ZERO; dim],
            scratch_sp: vec![ZERO; dim],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `√(8κ(1−r))`: the gain between ⟨A_θ⟩ and the mean photocurrent.
    pub fn record_gain(&self) -> f64 {
        self.record_gain
    }

    /// `⟨A_θ⟩` and `⟨a†a⟩` of a normalized state.
    pub fn moments(&mut self, psi: &[C64]) -> (f64, f64) {
        self.a.apply_into(psi, &mut self.scratch);
        let amp = inner(psi, &self.scratch);
        let (s, c) = self.theta.sin_cos();
        (amp.re * c + amp.im * s, norm_sqr(&self.scratch))
    }

    /// Advances the normalized state and the photocurrent by one step with the
    /// Wiener increment `dw` shared by both, then applies a jump if the uniform
    /// draw `u` falls below the jump probability.
    pub fn step(&mut self, psi: &mut [C64], current: &mut f64, dw: f64, u: f64) -> Result<StepOutcome> {
        let (quad, _) = self.moments(psi);
        let drift = self.record_gain * quad;
        let sde = HomodyneSde {
            generator: &self.generator,
            measured: &self.measured,
            record_drift: drift,
        };
        self.scheme.step(&sde, psi, self.dt, dw);
        *current = photocurrent_step(*current, drift, self.bandwidth, self.dt, dw);
        let norm = norm_sqr(psi).sqrt();
        if !(norm >= MIN_NORM) {
            return Err(Error::NormUnderflow(norm));
        }
        let inv = 1.0 / norm;
        for z in psi.iter_mut() {
            *z *= inv;
        }
        let jump = self.jump(psi, u)?;
        Ok(StepOutcome { jump, quadrature: quad })
    }

    fn jump(&mut self, psi: &mut [C64], u: f64) -> Result<Option<JumpChannel>> {
        let mut p_apd = 0.0;
        if self.r > 0.0 {
            self.a.apply_into(psi, &mut self.scratch);
            p_apd = 2.0 * self.kappa * self.r * norm_sqr(&self.scratch) * self.dt;
        }
        let mut p_sp = 0.0;
        if self.gamma > 0.0 {
            self.sm.apply_into(psi, &mut self.scratch_sp);
            p_sp = self.gamma * norm_sqr(&self.scratch_sp) * self.dt;
            if u >= p_apd && u < p_apd + p_sp {
                self.scratch.copy_from_slice(&self.scratch_sp);
            }
        }
        if p_apd + p_sp > MAX_JUMP_PROBABILITY {
            return Err(Error::StepTooLarge(p_apd + p_sp));
        }
        let channel = if u < p_apd {
            JumpChannel::CavityApd
        } else if u < p_apd + p_sp {
            JumpChannel::Spontaneous
        } else {
            return Ok(None);
        };
        let n = norm_sqr(&self.scratch).sqrt();
        if !(n >= MIN_NORM) {
            return Err(Error::NormUnderflow(n));
        }
        for (z, s) in psi.iter_mut().zip(&self.scratch) {
            *z = s / n;
        }
        Ok(Some(channel))
    }
}

/// Euler update of `di = −B(i dt − s dt − dW)`, where `s = √(8κ(1−r))⟨A_θ⟩_c`.
#[inline]
pub fn photocurrent_step(current: f64, signal: f64, bandwidth: f64, dt: f64, dw: f64) -> f64 {
    current - bandwidth * (current * dt - signal * dt - dw)
}

/// Shared, immutable set-up for many trajectories with one configuration.
pub struct TrajectorySimulator {
    me: MasterEquation,
    cfg: UnravelingConfig,
    /// Dense `exp(−iH′dt)` for direct photodetection.
    no_jump: Option<Array2<C64>>,
    a: SparseOp,
    sm: SparseOp,
    /// Eigenvalues and eigenvectors of ρ_ss for steady-state sampling.
    steady: Option<(Vec<f64>, Array2<C64>)>,
}

impl TrajectorySimulator {
    pub fn new(p: &SystemParams, cfg: &UnravelingConfig) -> Result<Self> {
        cfg.validate(p)?;
        let me = MasterEquation::new(p)?;
        let no_jump = (cfg.r == 1.0).then(|| expm(&me.effective_hamiltonian().mapv(|z| -I * z * cfg.dt)));
        let steady = if cfg.initial_state == InitialState::SteadyStateSample {
            let rho = steady_state(&Superoperator::from_master_equation(&me))?;
            Some(eigen_mixture(&rho)?)
        } else {
            None
        };
        Ok(Self {
            a: SparseOp::from_dense(me.ops.a.matrix()),
            sm: SparseOp::from_dense(me.ops.sm.matrix()),
            me,
            cfg: cfg.clone(),
            no_jump,
            steady,
        })
    }

    /// Reuses a precomputed steady state for sampling initial states.
    pub fn with_steady_state(mut self, rho: &DensityOp) -> Result<Self> {
        self.steady = Some(eigen_mixture(rho)?);
        Ok(self)
    }

    pub fn config(&self) -> &UnravelingConfig {
        &self.cfg
    }

    pub fn master_equation(&self) -> &MasterEquation {
        &self.me
    }

    pub fn ops(&self) -> &JcOperators {
        &self.me.ops
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Result<Vec<C64>> {
        let trunc = self.me.params.trunc;
        let amps = match &self.cfg.initial_state {
            InitialState::Fock { n, excited } => StateVector::fock_atom(trunc, *n, *excited)?.into_amplitudes(),
            InitialState::Amplitudes(v) => StateVector::normalized(Array1::from(v.clone()))?.into_amplitudes(),
            InitialState::SteadyStateSample => {
                let (w, v) = self.steady.as_ref().ok_or_else(|| invalid("initial_state", "steady state unavailable"))?;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = w.len() - 1;
                for (i, wi) in w.iter().enumerate() {
                    acc += wi;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                v.column(k).to_owned()
            }
        };
        Ok(amps.to_vec())
    }

    /// Runs one trajectory on RNG stream `(seed, stream)`.
    pub fn run(&self, seed: u64, stream: u64) -> Result<TrajectoryRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut psi = self.initial_state(&mut rng)?;
        if self.cfg.r == 1.0 {
            self.run_direct(psi, rng, seed, stream)
        } else {
            self.run_diffusive(&mut psi, rng, seed, stream)
        }
    }

    fn new_record(&self, seed: u64, stream: u64, psi: &[C64], diffusive: bool) -> TrajectoryRecord {
        let cap = self.cfg.n_steps() / self.cfg.record_stride + 1;
        TrajectoryRecord {
            times: Vec::with_capacity(cap),
            cond_photon_number: Vec::with_capacity(cap),
            cond_quadrature: Vec::with_capacity(cap),
            photocurrent: diffusive.then(|| Vec::with_capacity(cap)),
            jumps: Vec::new(),
            seed,
            stream,
            theta: self.cfg.theta,
            r: self.cfg.r,
            bandwidth: self.cfg.bandwidth,
            final_state: StateVector::unnormalized(Array1::from(psi.to_vec())),
            snapshots: Vec::new(),
            density_average: None,
        }
    }

    fn observe(&self, rec: &mut TrajectoryRecord, acc: &mut Accumulator, t: f64, psi: &[C64], current: Option<f64>) {
        let ap = self.a.apply(psi);
        let amp = inner(psi, &ap);
        rec.times.push(t);
        rec.cond_photon_number.push(norm_sqr(&ap));
        rec.cond_quadrature.push((amp * C64::from_polar(1.0, -self.cfg.theta)).re);
        if let (Some(pc), Some(i)) = (rec.photocurrent.as_mut(), current) {
            pc.push(i);
        }
        if let Some(after) = self.cfg.average_after {
            if t >= after {
                acc.add(psi);
            }
        }
    }

    fn snapshot(&self, rec: &mut TrajectoryRecord, next_snap: &mut usize, t: f64, psi: &[C64]) {
        while *next_snap < self.cfg.snapshot_times.len() && self.cfg.snapshot_times[*next_snap] <= t + 0.5 * self.cfg.dt {
            rec.snapshots.push(StateSnapshot {
                time: t,
                state: StateVector::unnormalized(Array1::from(psi.to_vec())),
            });
            *next_snap += 1;
        }
    }

    fn finish(&self, mut rec: TrajectoryRecord, acc: Accumulator, psi: Vec<C64>) -> TrajectoryRecord {
        rec.final_state = StateVector::unnormalized(Array1::from(psi));
        rec.density_average = acc.finish();
        rec
    }

    fn run_direct(&self, mut psi: Vec<C64>, mut rng: ChaCha8Rng, seed: u64, stream: u64) -> Result<TrajectoryRecord> {
        let u_op = self.no_jump.as_ref().expect("direct photodetection propagator");
        let (kappa, gamma, dt) = (self.me.params.kappa, self.me.params.gamma, self.cfg.dt);
        let dim = psi.len();
        let mut rec = self.new_record(seed, stream, &psi, false);
        let mut acc = Accumulator::new(dim);
        let mut next_snap = 0;
        let mut next = vec![ZERO; dim];
        let mut tmp = vec![ZERO; dim];
        self.observe(&mut rec, &mut acc, 0.0, &psi, None);
        self.snapshot(&mut rec, &mut next_snap, 0.0, &psi);
        let n_steps = self.cfg.n_steps();
        for step in 1..=n_steps {
            let t = step as f64 * dt;
            for (i, out) in next.iter_mut().enumerate() {
                let row = u_op.row(i);
                let mut s = ZERO;
                for (u, x) in row.iter().zip(&psi) {
                    s += u * x;
                }
                *out = s;
            }
            let kept = norm_sqr(&next);
            let p_jump = 1.0 - kept;
            if p_jump > MAX_JUMP_PROBABILITY {
                return Err(Error::StepTooLarge(p_jump));
            }
            let u: f64 = rng.random();
            if u < p_jump {
                self.a.apply_into(&next, &mut tmp);
                let w_cav = 2.0 * kappa * norm_sqr(&tmp);
                let w_sp = if gamma > 0.0 {
                    let s = self.sm.apply(&next);
                    gamma * norm_sqr(&s)
                } else {
                    0.0
                };
                let v: f64 = rng.random();
                let channel = if v * (w_cav + w_sp) < w_cav {
                    JumpChannel::CavityApd
                } else {
                    self.sm.apply_into(&next, &mut tmp);
                    JumpChannel::Spontaneous
                };
                let n = norm_sqr(&tmp).sqrt();
                if !(n >= MIN_NORM) {
                    return Err(Error::NormUnderflow(n));
                }
                for (z, s) in psi.iter_mut().zip(&tmp) {
                    *z = s / n;
                }
                rec.jumps.push(JumpEvent { time: t, channel });
            } else {
                let n = kept.sqrt();
                if !(n >= MIN_NORM) {
                    return Err(Error::NormUnderflow(n));
                }
                for (z, s) in psi.iter_mut().zip(&next) {
                    *z = s / n;
                }
            }
            if step % self.cfg.record_stride == 0 {
                self.observe(&mut rec, &mut acc, t, &psi, None);
            }
            self.snapshot(&mut rec, &mut next_snap, t, &psi);
        }
        Ok(self.finish(rec, acc, psi))
    }

    fn run_diffusive(&self, psi: &mut Vec<C64>, mut rng: ChaCha8Rng, seed: u64, stream: u64) -> Result<TrajectoryRecord> {
        let mut stepper = WaveParticleStepper::new(&self.me, &self.cfg);
        let dt = self.cfg.dt;
        let sq = dt.sqrt();
        let mut rec = self.new_record(seed, stream, psi, true);
        let mut acc = Accumulator::new(psi.len());
        let mut next_snap = 0;
        let mut current = 0.0;
        self.observe(&mut rec, &mut acc, 0.0, psi, Some(current));
        self.snapshot(&mut rec, &mut next_snap, 0.0, psi);
        for step in 1..=self.cfg.n_steps() {
            let t = step as f64 * dt;
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            let out = stepper.step(psi, &mut current, z * sq, u)?;
            if let Some(channel) = out.jump {
                rec.jumps.push(JumpEvent { time: t, channel });
            }
            if step % self.cfg.record_stride == 0 {
                self.observe(&mut rec, &mut acc, t, psi, Some(current));
            }
            self.snapshot(&mut rec, &mut next_snap, t, psi);
        }
        Ok(self.finish(rec, acc, std::mem::take(psi)))
    }
}

/// Running sum of |ψ⟩⟨ψ|.
struct Accumulator {
    sum: Option<Array2<C64>>,
    count: usize,
    dim: usize,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Self { sum: None, count: 0, dim }
    }

    fn add(&mut self, psi: &[C64]) {
        let m = self.sum.get_or_insert_with(|| Array2::zeros((self.dim, self.dim)));
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[[i, j]] += psi[i] * psi[j].conj();
            }
        }
        self.count += 1;
    }

    fn finish(self) -> Option<DensityOp> {
        let n = self.count as f64;
        self.sum
            .map(|m| DensityOp::from_matrix_hermitized(m / C64::new(n, 0.0)).expect("average of pure states"))
    }
}

/// Spectral decomposition of a density operator into weights and pure states;
/// small negative eigenvalues are clipped.
pub fn eigen_mixture(rho: &DensityOp) -> Result<(Vec<f64>, Array2<C64>)> {
    let (w, v) = rho.matrix().eigh(UPLO::Lower)?;
    let mut w: Vec<f64> = w.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    Ok((w, v))
}

pub fn run_direct_photodetection(p: &SystemParams, cfg: &UnravelingConfig) -> Result<TrajectoryRecord> {
    if cfg.r != 1.0 {
        return Err(invalid("r", "direct photodetection requires r = 1"));
    }
    TrajectorySimulator::new(p, cfg)?.run(cfg.seed, cfg.stream)
}

pub fn run_wave_particle(p: &SystemParams, cfg: &UnravelingConfig) -> Result<TrajectoryRecord> {
    let sim = TrajectorySimulator::new(p, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);
    let mut psi = sim.initial_state(&mut rng)?;
    sim.run_diffusive(&mut psi, rng, cfg.seed, cfg.stream)
}
