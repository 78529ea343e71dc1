use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spinprobe::analysis::{magnetization_envelope, AveragedSeries};
use spinprobe::dynamics::Evolver;
use spinprobe::hamiltonian::{
    dynamical_frequencies, entanglement_prefactor, kappas, stern_gerlach_time, timing_condition,
};
use spinprobe::{
    correlate, detuning_profile, entanglement_period, envelope_depression_using, evolve_inl_partial, evolve_linear,
    evolve_linearized, perturbed_eigenvalues, sample_average, self_consistency, ConsistencyOptions, Error,
    RotatingFrameParams64, Trajectory64,
};

use crate::config::{Mode, Resolved, ScenarioConfig, SweepEvolver};
use crate::output::{columns_csv, num, trajectory_csv, write_file};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kappa0: f64,
    pub kappa1: f64,
    /// `±κ0 + j`, `±κ1 − j`.
    pub shifted_eigenvalues: [f64; 4],
    pub dynamical_frequencies: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_e: Option<f64>,
    pub prefactor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_rate_rad_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stern_gerlach_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub status: Status,
    /// Set when a run stopped early; its CSV holds the samples reached.
    pub partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_clock_s: f64,
    pub artifacts: Vec<PathBuf>,
    pub constants: Constants,
    pub config: ScenarioConfig,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn constants(res: &Resolved) -> Result<Constants, Error> {
    let rp = &res.params;
    let (kappa0, kappa1) = kappas(rp)?;
    let t_e = entanglement_period(rp.j).ok();
    let (t_sg, ratio) = match &res.physical {
        Some(p) => (Some(stern_gerlach_time(p)), timing_condition(rp, p).ok()),
        None => (None, None),
    };
    Ok(Constants {
        kappa0,
        kappa1,
        shifted_eigenvalues: perturbed_eigenvalues(rp)?,
        dynamical_frequencies: dynamical_frequencies(rp)?,
        t_e,
        prefactor: entanglement_prefactor(rp),
        d_rate_rad_per_s: res.d_rate,
        stern_gerlach_time_s: t_sg,
        timing_ratio: ratio,
    })
}

/// Text for the `constants` subcommand.
pub fn constants_report(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let res = cfg.resolve()?;
    let c = constants(&res)?;
    let mut s = String::new();
    let list = |v: &[f64; 4]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "kappa0 = {}", num(c.kappa0));
    let _ = writeln!(s, "kappa1 = {}", num(c.kappa1));
    let _ = writeln!(s, "shifted_eigenvalues = [{}]", list(&c.shifted_eigenvalues));
    let _ = writeln!(s, "dynamical_frequencies = [{}]", list(&c.dynamical_frequencies));
    match c.t_e {
        Some(t) => {
            let _ = writeln!(s, "t_e = {}", num(t));
        }
        None => s.push_str("t_e = inf  # undefined for j = 0\n"),
    }
    let _ = writeln!(s, "prefactor = {}", num(c.prefactor));
    if let Some(r) = c.d_rate_rad_per_s {
        let _ = writeln!(s, "d_rate_rad_per_s = {}", num(r));
    }
    if let Some(t) = c.stern_gerlach_time_s {
        let _ = writeln!(s, "stern_gerlach_time_s = {}", num(t));
    }
    if let Some(r) = c.timing_ratio {
        let _ = writeln!(s, "timing_ratio = {}", num(r));
        if let (Some(t_e), Some(rate)) = (c.t_e, c.d_rate_rad_per_s) {
            let _ = writeln!(s, "t_e_s = {}", num(t_e / rate));
        }
    }
    Ok(s)
}

struct Outputs {
    files: Vec<(String, String)>,
    summary: Vec<String>,
    failure: Option<Error>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new(), summary: Vec::new(), failure: None }
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        self.summary.push(format!("{key}: {value}"));
    }
}

#[derive(Clone, Copy)]
enum Kind {
    Linear,
    Inl,
    Linearized,
}

fn evolve(kind: Kind, rp: &RotatingFrameParams64, res: &Resolved) -> Result<(Trajectory64, Option<Error>), Error> {
    match kind {
        Kind::Linear => Ok((evolve_linear(rp, &res.initial, &res.grid)?, None)),
        Kind::Inl => evolve_inl_partial(rp, &res.initial, &res.grid, &res.integrator),
        Kind::Linearized => Ok((evolve_linearized(rp, &res.initial, &res.grid, res.frozen_phase)?, None)),
    }
}

fn evolver(kind: Kind, res: &Resolved) -> Evolver<f64> {
    match kind {
        Kind::Linear => Evolver::Linear,
        Kind::Inl => Evolver::Inl(res.integrator),
        Kind::Linearized => Evolver::Linearized { frozen_phase: res.frozen_phase },
    }
}

/// One trajectory, its envelope file and summary lines under `prefix`.
fn single(out: &mut Outputs, stem: &str, prefix: &str, kind: Kind, rp: &RotatingFrameParams64, res: &Resolved) -> Result<Option<Trajectory64>, Error> {
    let (tr, failure) = evolve(kind, rp, res)?;
    out.files.push((format!("{stem}.csv"), trajectory_csv(&tr)));
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    out.line(&key("method"), tr.meta.method.name());
    out.line(&key("eta"), num(rp.eta));
    out.line(&key("samples"), tr.len());
    if let Some(e) = failure {
        out.line(&key("failure"), &e);
        out.failure = Some(e);
        return Ok(None);
    }
    if tr.meta.accepted_steps > 0 {
        out.line(&key("accepted_steps"), tr.meta.accepted_steps);
        out.line(&key("rejected_steps"), tr.meta.rejected_steps);
    }
    let (t_peak, e_peak) =
        tr.samples.iter().map(|s| (s.t, s.e)).fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    out.line(&key("max_E"), num(e_peak));
    out.line(&key("t_at_max_E"), num(t_peak));
    out.line(&key("max_M"), num(tr.magnetization().iter().cloned().fold(f64::MIN, f64::max)));
    out.line(&key("max_norm_drift"), num(tr.max_norm_drift()));
    if let Ok(env) = magnetization_envelope(&tr) {
        let one_minus_e = tr.disentanglement();
        out.files.push((
            format!("{stem}_envelope.csv"),
            columns_csv(&["t", "M", "envelope_M", "one_minus_E"], &[&env.times, &tr.magnetization(), &env.values, &one_minus_e]),
        ));
        out.line(&key("envelope_window"), num(env.window));
        match correlate(&env, &env.times, &one_minus_e) {
            Ok(r) => out.line(&key("corr_envelope_M_vs_1_minus_E"), num(r)),
            Err(e) => out.line(&key("corr_envelope_M_vs_1_minus_E"), format!("undefined ({e})")),
        }
    }
    if let Ok(t_e) = entanglement_period(rp.j) {
        if let Some(near) = tr.samples.iter().min_by(|a, b| (a.t - t_e).abs().total_cmp(&(b.t - t_e).abs())) {
            if (near.t - t_e).abs() <= 0.01 * t_e {
                out.line(&key("t_nearest_t_e"), num(near.t));
                out.line(&key("E_at_t_nearest_t_e"), num(near.e));
            }
        }
        if res.grid.last().is_some_and(|&t| t >= 0.95 * t_e) {
            match self_consistency(&tr, &ConsistencyOptions::new(t_e)) {
                Ok(r) => {
                    let show = |d: Option<f64>| d.map_or("no samples".to_string(), num);
                    out.line(&key("arg_det_max_dev_first_half"), show(r.first_half_max));
                    out.line(&key("arg_det_max_dev_second_half"), show(r.second_half_max));
                    out.line(&key("arg_det_first_half_within_0.3"), r.first_half_pass);
                    out.line(&key("arg_det_second_half_within_0.3"), r.second_half_pass);
                }
                Err(e) => out.line(&key("arg_det_consistency"), format!("undefined ({e})")),
            }
        }
    }
    Ok(Some(tr))
}

fn depression(out: &mut Outputs, key: &str, kind: Kind, rp: &RotatingFrameParams64, res: &Resolved) -> Result<(), Error> {
    if rp.eta > 0.0 && rp.j > 0.0 {
        let d = envelope_depression_using(&evolver(kind, res), rp, &res.initial, res.integrator.sample_interval)?;
        out.line(key, num(d.ratio));
    }
    Ok(())
}

fn figure(out: &mut Outputs, id: u8, name: &str, res: &Resolved) -> Result<(), Error> {
    let rp = res.params;
    match id {
        1 | 2 => {
            single(out, name, "", Kind::Linear, &rp, res)?;
        }
        3 => {
            single(out, &format!("{name}_eta0"), "eta0", Kind::Linear, &rp.with_eta(0.0), res)?;
            single(out, name, "linearized", Kind::Linearized, &rp, res)?;
        }
        _ => {
            if single(out, name, "inl", Kind::Inl, &rp, res)?.is_some() {
                single(out, &format!("{name}_linearized"), "linearized", Kind::Linearized, &rp, res)?;
                depression(out, "inl.depression_ratio", Kind::Inl, &rp, res)?;
                depression(out, "linearized.depression_ratio", Kind::Linearized, &rp, res)?;
            }
        }
    }
    Ok(())
}

fn sweep(out: &mut Outputs, cfg: &ScenarioConfig, res: &Resolved) -> Result<(), Error> {
    let s = cfg.sweep.expect("checked at load");
    let rp = res.params;
    let d_rate = s.d_rate_rad_per_s.or(res.d_rate).expect("checked at load");
    let profile =
        detuning_profile(s.thickness_m, s.grad_t_per_m, s.gamma_bar, d_rate, s.center_nu.unwrap_or(rp.nu), s.n_nodes)?;
    let kind = match s.evolver {
        SweepEvolver::Linear => Kind::Linear,
        SweepEvolver::Inl => Kind::Inl,
        SweepEvolver::Linearized => Kind::Linearized,
    };
    let avg: AveragedSeries<f64> = sample_average(&profile, &rp, &res.initial, &res.grid, &evolver(kind, res))?;
    out.files.push((format!("{}.csv", cfg.name), columns_csv(&["t", "M", "E"], &[&avg.times, &avg.m, &avg.e])));
    let (nus, ws): (Vec<f64>, Vec<f64>) = avg.nodes.iter().cloned().unzip();
    let idx: Vec<f64> = (0..nus.len()).map(|k| k as f64).collect();
    out.files.push((format!("{}_nodes.csv", cfg.name), columns_csv(&["node", "nu", "weight"], &[&idx, &nus, &ws])));
    out.line("nodes", profile.nodes.len());
    out.line("nu_spread", num(profile.spread()));
    out.line("fraction_nu_in_1_to_lambda", num(profile.fraction_in_range(rp.lambda)));
    out.line("max_E_averaged", num(avg.e.iter().cloned().fold(f64::MIN, f64::max)));
    out.line("max_M_averaged", num(avg.m.iter().cloned().fold(f64::MIN, f64::max)));
    Ok(())
}

fn summary_text(cfg: &ScenarioConfig, res: &Resolved, c: &Constants, out: &Outputs) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "spinprobe {VERSION} summary: {}", cfg.name);
    let _ = writeln!(s, "mode: {}", mode_name(cfg.mode));
    if let Some(id) = cfg.figure_id {
        let _ = writeln!(s, "figure_id: {id}");
    }
    let rp = &res.params;
    let _ = writeln!(s, "params: nu = {}, d = {}, j = {}, lambda = {}, eta = {}, sign = {}", rp.nu, rp.d, rp.j, rp.lambda, rp.eta, rp.sign.name());
    let _ = writeln!(s, "kappa0: {}", num(c.kappa0));
    let _ = writeln!(s, "kappa1: {}", num(c.kappa1));
    let _ = writeln!(s, "t_e: {}", c.t_e.map_or("inf".to_string(), num));
    let _ = writeln!(s, "prefactor: {}", num(c.prefactor));
    for w in rp.regime_warnings() {
        let _ = writeln!(s, "warning: {w}");
    }
    if let Some(p) = &res.physical {
        for w in p.warnings() {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    for line in &out.summary {
        let _ = writeln!(s, "{line}");
    }
    s
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Linear => "linear",
        Mode::Inl => "inl",
        Mode::Linearized => "linearized",
        Mode::Sweep => "sweep",
        Mode::Figure => "figure",
    }
}

/// Runs a scenario and writes its CSV files, summary and manifest into
/// `cfg.output_dir`. A numerical failure part-way through a run still writes
/// what was computed and is reported through the manifest status.
pub fn run(cfg: &ScenarioConfig) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let res = cfg.resolve()?;
    let consts = constants(&res)?;
    let mut out = Outputs::new();
    let result = match cfg.mode {
        Mode::Linear => single(&mut out, &cfg.name, "", Kind::Linear, &res.params, &res).map(|_| ()),
        Mode::Linearized => single(&mut out, &cfg.name, "", Kind::Linearized, &res.params, &res)
            .and_then(|_| depression(&mut out, "depression_ratio", Kind::Linearized, &res.params, &res)),
        Mode::Inl => single(&mut out, &cfg.name, "", Kind::Inl, &res.params, &res).and_then(|tr| match tr {
            Some(_) => depression(&mut out, "depression_ratio", Kind::Inl, &res.params, &res),
            None => Ok(()),
        }),
        Mode::Figure => figure(&mut out, cfg.figure_id.expect("checked at load"), &cfg.name, &res),
        Mode::Sweep => sweep(&mut out, cfg, &res),
    };
    if let Err(e) = result {
        if out.files.is_empty() {
            return Err(e.into());
        }
        out.failure = Some(e);
    }

    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
    let mut artifacts = Vec::new();
    for (file, contents) in &out.files {
        artifacts.push(write_file(dir, file, contents)?);
    }
    artifacts.push(write_file(dir, &format!("{}_summary.txt", cfg.name), &summary_text(cfg, &res, &consts, &out))?);
    let manifest_path = dir.join(format!("{}_manifest.toml", cfg.name));
    artifacts.push(manifest_path.clone());

    let manifest = RunManifest {
        tool: "spinprobe".to_string(),
        version: VERSION.to_string(),
        status: if out.failure.is_some() { Status::NumericalFailure } else { Status::Ok },
        partial: out.failure.is_some(),
        error: out.failure.as_ref().map(|e| e.to_string()),
        wall_clock_s: start.elapsed().as_secs_f64(),
        artifacts,
        constants: consts,
        config: cfg.clone(),
    };
    write_file(dir, &format!("{}_manifest.toml", cfg.name), &manifest.to_toml())?;
    Ok(manifest)
}
