//! Flat `key=value` run configuration with `system.`, `unraveling.`,
//! `ensemble.`, `grid.`, `spectra.`, `wigner.` and `validate.` sections.
//!
//! Layers, later ones winning: preset, config file, `--set` pairs, dedicated
//! flags (`--seed`, `--n-max`).

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use jcq_core::ensemble::EnsembleSpec;
use jcq_core::hilbert::{two_photon_detuning, FockTruncation};
use jcq_core::trajectories::{InitialState, UnravelingConfig};
use jcq_core::wigner::{AtomProjection, GridSpec};
use jcq_core::SystemParams;

/// Ordered key/value settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

const SECTIONS: [&str; 7] = ["system", "unraveling", "ensemble", "grid", "spectra", "wigner", "validate"];

impl Settings {
    pub fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        let section = key.split('.').next().unwrap_or_default();
        if !key.contains('.') || !SECTIONS.contains(&section) {
            bail!("key `{key}` must start with one of {}", SECTIONS.map(|s| format!("{s}.")).join(", "));
        }
        self.0.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            self.merge_pair(line).with_context(|| format!("{origin}:{}", k + 1))?;
        }
        Ok(())
    }

    pub fn merge_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, found `{pair}`"))?;
        self.insert(k.trim(), v)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.merge_text(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    /// Entries of one section with the prefix stripped.
    pub fn section<'a>(&'a self, name: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.0
            .iter()
            .filter_map(move |(k, v)| k.strip_prefix(name)?.strip_prefix('.').map(|s| (s, v.as_str())))
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_real(v).with_context(|| format!("key `{key}`")))
            .transpose()
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    pub fn require_real(&self, key: &str) -> Result<f64> {
        self.real(key)?.ok_or_else(|| anyhow!("missing required key `{key}`"))
    }

    pub fn uint(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| v.parse::<usize>().with_context(|| format!("key `{key}`: `{v}` is not a non-negative integer")))
            .transpose()
    }

    /// Flat map for provenance records.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.0.clone()
    }
}

/// Accepts plain numbers and the forms `pi`, `3pi/4`, `pi/4`, `10/sqrt2`, `a/b`.
pub fn parse_real(text: &str) -> Result<f64> {
    let t = text.trim().replace(' ', "");
    let atom = |s: &str| -> Result<f64> {
        if s.is_empty() {
            bail!("empty number in `{text}`");
        }
        let (coef, unit) = if let Some(c) = s.strip_suffix("pi") {
            (c, PI)
        } else if let Some(c) = s.strip_suffix("sqrt2") {
            (c, SQRT_2)
        } else {
            (s, 1.0)
        };
        let c = match coef {
            "" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| anyhow!("`{text}` is not a number"))?,
        };
        Ok(c * unit)
    };
    let v = match t.split_once('/') {
        Some((a, b)) => atom(a)? / atom(b)?,
        None => atom(&t)?,
    };
    if !v.is_finite() {
        bail!("`{text}` is not finite");
    }
    Ok(v)
}

/// Operating points of the figures, as settings.
pub fn preset(name: &str) -> Result<Settings> {
    let wave = |det: &str, eps: &str, theta: &str, t_max: &str| -> Vec<(String, String)> {
        [
            ("system.g", "200"),
            ("system.gamma", "0"),
            ("system.detuning_over_g", det),
            ("system.eps_over_g", eps),
            ("system.n_max", "14"),
            ("unraveling.r", "0.5"),
            ("unraveling.theta", theta),
            ("unraveling.init", "fock:1:g"),
            ("unraveling.t_max", t_max),
            ("spectra.theta", theta),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
    };
    let pairs: Vec<(String, String)> = match name {
        "fig2a" => own(&[
            ("system.g", "1000"),
            ("system.gamma", "2"),
            ("system.omega", "10/sqrt2"),
            ("system.detuning", "resonant"),
            ("system.n_max", "14"),
            ("unraveling.r", "1"),
            ("unraveling.init", "fock:1:g"),
            ("unraveling.t_max", "10"),
            ("wigner.source", "trajectory"),
        ]),
        "fig2b" => own(&[
            ("system.g", "1000"),
            ("system.gamma", "0"),
            ("system.omega", "10/sqrt2"),
            ("system.detuning", "resonant"),
            ("system.n_max", "14"),
            ("grid.tau_max", "4"),
            ("grid.tau_step", "1e-4"),
        ]),
        "fig3" => own(&[
            ("system.g", "1000"),
            ("system.gamma", "2"),
            ("system.omega", "10/sqrt2"),
            ("system.detuning", "resonant"),
            ("system.n_max", "25"),
            ("unraveling.r", "1"),
            ("unraveling.init", "fock:3:g"),
            ("unraveling.t_max", "1.5"),
            ("unraveling.record_stride", "1"),
        ]),
        "fig4" => own(&[
            ("system.g", "200"),
            ("system.gamma", "0"),
            ("system.detuning_over_g", "-0.7114"),
            ("system.eps_over_g", "0.03"),
            ("system.n_max", "14"),
            ("grid.tau_max", "3"),
            ("grid.tau_step", "1e-3"),
            ("spectra.theta", "3pi/4"),
        ]),
        "fig5a" => wave("-0.7114", "0.03", "3pi/4", "20"),
        "fig5b" => wave("-0.7114", "0.055", "3pi/4", "20"),
        "fig5c" => wave("-0.7114", "0.055", "pi/4", "20"),
        "fig5d" => wave("0.545", "0.16", "pi/4", "20"),
        "fig6" => wave("-0.7114", "0.03", "pi/4", "20"),
        other => bail!("unknown preset `{other}`; known: {}", PRESETS.join(", ")),
    };
    let mut s = Settings::default();
    for (k, v) in pairs {
        s.insert(&k, &v)?;
    }
    Ok(s)
}

pub const PRESETS: [&str; 9] = ["fig2a", "fig2b", "fig3", "fig4", "fig5a", "fig5b", "fig5c", "fig5d", "fig6"];

fn own(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// System parameters in units of κ. The drive is given by exactly one of
/// `eps_d`, `eps_over_g` or `omega` (two-photon Rabi frequency); the detuning
/// by `detuning`, `detuning_over_g`, or `detuning=resonant`, which is also
/// the default.
pub fn system_params(s: &Settings) -> Result<SystemParams> {
    let kappa = s.real_or("system.kappa", 1.0)?;
    let g = s.require_real("system.g")? * kappa;
    let gamma = s.real_or("system.gamma", 0.0)? * kappa;
    let n_max = s.uint("system.n_max")?.unwrap_or(FockTruncation::DEFAULT_N_MAX);
    let drives = [
        s.real("system.eps_d")?.map(|e| e * kappa),
        s.real("system.eps_over_g")?.map(|e| e * g),
        s.real("system.omega")?.map(|o| (o * kappa * g / (2.0 * SQRT_2)).sqrt()),
    ];
    let eps = match drives.iter().flatten().collect::<Vec<_>>().as_slice() {
        [e] => **e,
        [] => bail!("missing required key `system.eps_d` (or `system.eps_over_g`, `system.omega`)"),
        _ => bail!("give only one of `system.eps_d`, `system.eps_over_g`, `system.omega`"),
    };
    let detuning = match (s.get("system.detuning"), s.real("system.detuning_over_g")?) {
        (Some(_), Some(_)) => bail!("give only one of `system.detuning`, `system.detuning_over_g`"),
        (None, Some(d)) => d * g,
        (Some("resonant"), None) | (None, None) => two_photon_detuning(g, eps),
        (Some(_), None) => s.require_real("system.detuning")? * kappa,
    };
    let trunc = FockTruncation::new(n_max).context("key `system.n_max`")?;
    SystemParams::new(g, kappa, gamma, eps, detuning, trunc).context("system parameters")
}

/// `fock:N:g|e` or `steady`.
pub fn initial_state(text: &str) -> Result<InitialState> {
    if text == "steady" {
        return Ok(InitialState::SteadyStateSample);
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["fock", n, atom] => Ok(InitialState::Fock {
            n: n.parse().with_context(|| format!("photon number in `{text}`"))?,
            excited: match *atom {
                "g" | "-" => false,
                "e" | "+" => true,
                _ => bail!("atom state in `{text}` must be g or e"),
            },
        }),
        _ => bail!("initial state `{text}` must be `steady` or `fock:N:g|e`"),
    }
}

pub fn unraveling(s: &Settings, p: &SystemParams, seed: u64) -> Result<UnravelingConfig> {
    let init = initial_state(s.get("unraveling.init").unwrap_or("fock:1:g")).context("key `unraveling.init`")?;
    let mut cfg = UnravelingConfig::wave_particle(
        p,
        s.real_or("unraveling.r", 1.0)?,
        s.real_or("unraveling.theta", 0.0)?,
        s.real_or("unraveling.t_max", 10.0)?,
        init,
    );
    if let Some(b) = s.real("unraveling.bandwidth")? {
        cfg.bandwidth = b;
        cfg.dt = UnravelingConfig::max_dt(p, b);
    }
    if let Some(dt) = s.real("unraveling.dt")? {
        cfg.dt = dt;
    }
    cfg.seed = seed;
    cfg.stream = s.uint("unraveling.stream")?.unwrap_or(0) as u64;
    // about 2·10⁵ recorded samples unless a stride is given
    cfg.record_stride = match s.uint("unraveling.record_stride")? {
        Some(k) => k,
        None => cfg.n_steps().div_ceil(200_000).max(1),
    };
    if let Some(list) = s.get("unraveling.snapshots") {
        cfg.snapshot_times = list
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(parse_real)
            .collect::<Result<_>>()
            .context("key `unraveling.snapshots`")?;
    }
    cfg.validate(p).context("unraveling settings")?;
    Ok(cfg)
}

pub fn ensemble(s: &Settings, p: &SystemParams, seed: u64) -> Result<EnsembleSpec> {
    let cfg = unraveling(s, p, seed)?;
    let spec = EnsembleSpec::new(
        s.uint("ensemble.n_traj")?.unwrap_or(8),
        seed,
        cfg,
        s.real_or("ensemble.warmup", 0.0)?,
    );
    spec.validate(p).context("ensemble settings")?;
    Ok(spec)
}

/// Uniform grid `[start, stop]` with the given step.
pub fn uniform(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop > start) {
        bail!("grid needs step > 0 and stop > start (got {start}..{stop} step {step})");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 5_000_000 {
        bail!("grid of {n} points is too large");
    }
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

pub fn tau_grid(s: &Settings, p: &SystemParams) -> Result<Vec<f64>> {
    let default_step = (1e-3f64).min(PI / (40.0 * p.g));
    uniform(0.0, s.real_or("grid.tau_max", 4.0)?, s.real_or("grid.tau_step", default_step)?)
}

pub fn omega_grid(s: &Settings, p: &SystemParams) -> Result<Vec<f64>> {
    let reach = 3.5 * p.g;
    uniform(
        s.real_or("grid.omega_min", -reach)?,
        s.real_or("grid.omega_max", reach)?,
        s.real_or("grid.omega_step", 0.25)?,
    )
}

pub fn wigner_grid(s: &Settings) -> Result<GridSpec> {
    Ok(GridSpec {
        half_width: s.real_or("wigner.half_width", 3.0)?,
        step: s.real_or("wigner.step", 0.05)?,
        max_half_width: s.real("wigner.max_half_width")?,
    })
}

pub fn projection(s: &Settings) -> Result<AtomProjection> {
    Ok(match s.get("wigner.projection").unwrap_or("traced") {
        "traced" => AtomProjection::Traced,
        "ground" | "g" => AtomProjection::Ground,
        "excited" | "e" => AtomProjection::Excited,
        other => bail!("key `wigner.projection`: `{other}` must be traced, ground or excited"),
    })
}
