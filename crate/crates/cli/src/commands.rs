//! Subcommand implementations. Each returns whether the run succeeded in the
//! validation sense; errors are propagated.

use std::f64::consts::FRAC_PI_4;

use anyhow::{bail, Context, Result};
use jcq_core::correlators::{CorrelatorEngine, CorrelatorSeries, SpectrumOptions, SpectrumSeries};
use jcq_core::ensemble::{
    ensemble_photon_number, expected_triggered_average, run_ensemble, run_ensemble_map, symmetric_grid, triggered_average,
};
use jcq_core::minimal::{
    derive_params, squeezing_spectrum_analytic, transmission_spectrum_analytic, waiting_time_analytic,
    CorrelatorOptions, WaitingTimeOptions,
};
use jcq_core::trajectories::{InitialState, JumpChannel, TrajectoryRecord, TrajectorySimulator, UnravelingConfig};
use jcq_core::validation::{run_criterion, Targets, ValidationReport, CRITERIA};
use jcq_core::wigner::{cavity_wigner, conditioned_wigner, WignerGrid, CONVENTION};
use jcq_core::SystemParams;
use serde_json::{json, Value};

use crate::config::{self, Settings};
use crate::output::{Table, Writer};

fn correlator_table(s: &CorrelatorSeries) -> Table {
    let mut t = Table::new(&["tau", "re", "im"]);
    for (tau, v) in s.tau.iter().zip(&s.values) {
        t.push(vec![*tau, v.re, v.im]);
    }
    t
}

fn spectrum_table(s: &SpectrumSeries) -> Table {
    let mut t = Table::new(&["omega", "re", "im"]);
    for (w, v) in s.omega.iter().zip(&s.values) {
        t.push(vec![*w, *v, 0.0]);
    }
    t
}

fn grid_meta(x: &[f64]) -> Value {
    json!({
        "start": x.first(),
        "stop": x.last(),
        "len": x.len(),
        "step": if x.len() > 1 { x[1] - x[0] } else { 0.0 },
    })
}

fn warn_skip(what: &str, err: impl std::fmt::Display) {
    eprintln!("note: {what} skipped: {err}");
}

pub fn steady(p: &SystemParams, out: &mut Writer) -> Result<bool> {
    let engine = CorrelatorEngine::new(p)?;
    let g2 = engine.g2(&[0.0])?.values[0].re;
    let a = engine.field_amplitude();
    let mut t = Table::new(&["photon_number", "g2_0", "field_re", "field_im"]);
    t.push(vec![engine.photon_number(), g2, a.re, a.im]);
    out.table("steady", "numeric", json!({"units": "photon number; field amplitude <a>"}), &t)?;
    Ok(true)
}

pub fn g2(p: &SystemParams, s: &Settings, out: &mut Writer) -> Result<bool> {
    let taus = config::tau_grid(s, p)?;
    let series = CorrelatorEngine::new(p)?.g2(&taus)?;
    out.table("g2", "numeric", json!({"kind": series.kind, "tau_grid": grid_meta(&taus)}), &correlator_table(&series))?;
    Ok(true)
}

pub fn waiting_time(p: &SystemParams, s: &Settings, out: &mut Writer) -> Result<bool> {
    let taus = config::tau_grid(s, p)?;
    let engine = CorrelatorEngine::new(p)?;
    let num = engine.waiting_time(&taus)?;
    let integral = engine.waiting_time_integral()?;
    out.table(
        "waiting_time_numeric",
        "numeric",
        json!({"kind": num.kind, "tau_grid": grid_meta(&taus), "integral": integral}),
        &correlator_table(&num),
    )?;
    let analytic = derive_params(p).and_then(|mm| waiting_time_analytic(&mm, &taus, WaitingTimeOptions::default()));
    match analytic {
        Ok(an) => out.table(
            "waiting_time_analytic",
            "analytic",
            json!({"kind": an.kind, "tau_grid": grid_meta(&taus), "options": WaitingTimeOptions::default()}),
            &correlator_table(&an),
        )?,
        Err(e) => warn_skip("analytic waiting time", e),
    }
    Ok(true)
}

pub fn spectra(p: &SystemParams, s: &Settings, out: &mut Writer) -> Result<bool> {
    let omega = config::omega_grid(s, p)?;
    let theta = match s.real("spectra.theta")? {
        Some(t) => t,
        None => s.real_or("unraveling.theta", FRAC_PI_4)?,
    };
    let opts = SpectrumOptions {
        tau_max: s.real_or("spectra.tau_max", SpectrumOptions::default().tau_max)?,
        ..SpectrumOptions::default()
    };
    let engine = CorrelatorEngine::new(p)?;
    let meta = |kind: &str| json!({"kind": kind, "theta": theta, "omega_grid": grid_meta(&omega), "axis": "omega - omega_0, units of kappa"});
    let sq = engine.squeezing_spectrum(theta, &omega, &opts)?;
    out.table("squeezing_numeric", "numeric", meta("squeezing"), &spectrum_table(&sq))?;
    let tr = engine.transmission_spectrum(&omega, &opts)?;
    out.table("transmission_numeric", "numeric", meta("transmission"), &spectrum_table(&tr))?;
    match derive_params(p) {
        Ok(mm) => {
            match squeezing_spectrum_analytic(&mm, theta, &omega, CorrelatorOptions::default()) {
                Ok(a) => out.table("squeezing_analytic", "analytic", meta("squeezing"), &spectrum_table(&a))?,
                Err(e) => warn_skip("analytic squeezing spectrum", e),
            }
            match transmission_spectrum_analytic(&mm, &omega, CorrelatorOptions::default()) {
                Ok(a) => out.table("transmission_analytic", "analytic", meta("transmission"), &spectrum_table(&a))?,
                Err(e) => warn_skip("analytic transmission spectrum", e),
            }
        }
        Err(e) => warn_skip("analytic spectra", e),
    }
    Ok(true)
}

fn simulator(p: &SystemParams, cfg: &UnravelingConfig) -> Result<TrajectorySimulator> {
    let sim = TrajectorySimulator::new(p, cfg)?;
    Ok(if cfg.initial_state == InitialState::SteadyStateSample {
        let engine = CorrelatorEngine::new(p)?;
        sim.with_steady_state(engine.steady_state())?
    } else {
        sim
    })
}

fn record_table(rec: &TrajectoryRecord) -> Table {
    let mut t = Table::new(&["t", "photon_number", "quadrature", "photocurrent"]);
    for k in 0..rec.times.len() {
        let i = rec.photocurrent.as_ref().map_or(f64::NAN, |c| c[k]);
        t.push(vec![rec.times[k], rec.cond_photon_number[k], rec.cond_quadrature[k], i]);
    }
    t
}

fn jump_log(rec: &TrajectoryRecord) -> Value {
    json!({
        "seed": rec.seed,
        "stream": rec.stream,
        "cavity": rec.jump_times(JumpChannel::CavityApd),
        "spontaneous": rec.jump_times(JumpChannel::Spontaneous),
    })
}

pub fn trajectory(p: &SystemParams, s: &Settings, seed: u64, out: &mut Writer) -> Result<bool> {
    let cfg = config::unraveling(s, p, seed)?;
    let rec = simulator(p, &cfg)?.run(cfg.seed, cfg.stream)?;
    let meta = json!({
        "unraveling": cfg,
        "photocurrent_gain": (8.0 * p.kappa * (1.0 - cfg.r)).sqrt(),
        "photocurrent_convention": "stationary mean sqrt(8 kappa (1-r)) <A_theta>; NaN when r = 1",
    });
    out.table("trajectory", "trajectory", meta, &record_table(&rec))?;
    out.document("jumps", "trajectory", jump_log(&rec))?;
    Ok(true)
}

pub fn ensemble(p: &SystemParams, s: &Settings, seed: u64, out: &mut Writer) -> Result<bool> {
    let spec = config::ensemble(s, p, seed)?;
    let engine = CorrelatorEngine::new(p)?;
    let records = if spec.cfg.initial_state == InitialState::SteadyStateSample {
        run_ensemble_map(p, &spec, Some(engine.steady_state()), |_, r| Ok(r))?
    } else {
        run_ensemble(p, &spec)?
    };
    let mut table = Table::new(&["t", "mean_photon_number", "stderr"]);
    for (t, m, se) in ensemble_photon_number(&records) {
        table.push(vec![t, m, se]);
    }
    out.table("ensemble_photon_number", "ensemble", json!({"n_traj": spec.n_traj}), &table)?;

    let r = spec.cfg.r;
    if r > 0.0 && r < 1.0 {
        let tau = symmetric_grid(s.real_or("ensemble.tau_reach", 3.0)?, s.real_or("ensemble.tau_step", 0.02)?);
        match triggered_average(&records, &tau, spec.warmup) {
            Ok(avg) => {
                let predicted = expected_triggered_average(&engine, spec.cfg.theta, r, spec.cfg.bandwidth, &tau)?;
                let mut t = Table::new(&["tau", "triggered_current", "stderr", "normalized", "regression_prediction"]);
                for k in 0..tau.len() {
                    let norm = avg.normalized.as_ref().map_or(f64::NAN, |v| v[k]);
                    t.push(vec![tau[k], avg.values[k], avg.stderr[k], norm, predicted[k]]);
                }
                let meta = json!({
                    "n_triggers": avg.n_triggers,
                    "shot_noise_floor": avg.shot_noise_floor,
                    "theta": spec.cfg.theta,
                    "bandwidth": spec.cfg.bandwidth,
                    "warmup": spec.warmup,
                });
                out.table("triggered_average", "ensemble", meta, &t)?;
            }
            Err(e) => warn_skip("triggered average", e),
        }
    }
    let trajectories: Vec<Value> = records
        .iter()
        .enumerate()
        .map(|(k, rec)| {
            let (seed, stream) = spec.rng_key(k);
            json!({"index": k, "seed": seed, "stream": stream, "cavity_jumps": rec.jump_times(JumpChannel::CavityApd).len()})
        })
        .collect();
    let files: Vec<String> = out
        .written()
        .iter()
        .filter_map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    out.document("manifest", "ensemble", json!({"spec": spec, "trajectories": trajectories, "files": files}))?;
    Ok(true)
}

fn wigner_table(w: &WignerGrid) -> Table {
    let names: Vec<String> = std::iter::once("x".to_string())
        .chain((0..w.p.len()).map(|j| format!("p{j}")))
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut t = Table::new(&refs);
    for (i, x) in w.x.iter().enumerate() {
        let mut row = vec![*x];
        row.extend(w.values.row(i).iter());
        t.push(row);
    }
    t
}

pub fn wigner(p: &SystemParams, s: &Settings, seed: u64, out: &mut Writer) -> Result<bool> {
    let grid = config::wigner_grid(s)?;
    let proj = config::projection(s)?;
    let (w, weight, source) = match s.get("wigner.source").unwrap_or("steady") {
        "steady" => {
            let engine = CorrelatorEngine::new(p)?;
            let (w, weight) = cavity_wigner(engine.steady_state(), proj, &grid)?;
            (w, weight, json!("steady state"))
        }
        "trajectory" => {
            let mut cfg = config::unraveling(s, p, seed)?;
            let time = s.real_or("wigner.time", cfg.t_max)?;
            if !(0.0..=cfg.t_max).contains(&time) {
                bail!("key `wigner.time` must lie in [0, unraveling.t_max]");
            }
            cfg.snapshot_times = vec![time];
            let rec = simulator(p, &cfg)?.run(cfg.seed, cfg.stream)?;
            let snap = rec.snapshot_near(time).context("no snapshot recorded")?;
            let (w, weight) = conditioned_wigner(&snap.state, proj, &grid)?;
            (w, weight, json!({"trajectory_time": snap.time, "seed": cfg.seed, "stream": cfg.stream}))
        }
        other => bail!("key `wigner.source`: `{other}` must be steady or trajectory"),
    };
    let meta = json!({
        "convention": CONVENTION,
        "projection": proj,
        "projection_weight": weight,
        "source": source,
        "x_axis": w.x,
        "p_axis": w.p,
        "layout": "row i is x_i; column p<j> is W(x_i, p_j)",
        "normalization": w.normalization(),
    });
    out.table("wigner", "numeric", meta, &wigner_table(&w))?;
    Ok(true)
}

/// Criteria from `--criteria` or `validate.criteria` (comma list or `all`).
pub fn criteria_list(text: Option<&str>) -> Result<Vec<u8>> {
    match text.map(str::trim) {
        None | Some("all") | Some("") => Ok(CRITERIA.to_vec()),
        Some(list) => list
            .split(',')
            .map(|c| {
                let id: u8 = c.trim().parse().with_context(|| format!("criterion `{c}`"))?;
                if !CRITERIA.contains(&id) {
                    bail!("no criterion {id}; valid ids are 1-11");
                }
                Ok(id)
            })
            .collect(),
    }
}

pub fn validate_cmd(s: &Settings, criteria: Option<&str>, seed: Option<u64>, out: &mut Writer) -> Result<bool> {
    let mut targets = Targets::default();
    if let Some(seed) = seed {
        targets.seed = seed;
    }
    for (k, v) in s.section("validate") {
        if k != "criteria" {
            targets.set(k, v).with_context(|| format!("key `validate.{k}`"))?;
        }
    }
    let ids = criteria_list(criteria.or(s.get("validate.criteria")))?;
    let mut reports = Vec::new();
    for id in ids {
        let rep = run_criterion(id, &targets);
        println!("{}", rep.line());
        reports.push(rep);
    }
    let report = ValidationReport { targets, criteria: reports };
    let passed = report.all_passed();
    out.document("validation", "validation", serde_json::to_value(&report)?)?;
    println!("{}", if passed { "all criteria passed" } else { "some criteria failed" });
    Ok(passed)
}
