//! Scenario configuration files.
//!
//! Configs are TOML. Rotating-frame quantities in `[frame]` are dimensionless
//! (in units of the chemical-shift half-difference `d`); every quantity in
//! `[physical]` and `[sweep]` carries its SI unit in the key name.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinprobe::dynamics::{grid_with_interval, uniform_grid, DEFAULT_SWITCH_WIDTH};
use spinprobe::hamiltonian::to_rotating_frame;
use spinprobe::spin::DEFAULT_EPS_DET;
use spinprobe::{
    entanglement_period, Error as CoreError, IntegratorConfig64, NonlinearSign, PhysicalParams64,
    RotatingFrameParams64, SpinState64,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Linear,
    Inl,
    Linearized,
    Sweep,
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedState {
    DownDown,
    UpUp,
    UpDown,
    DownUp,
    Bell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignName {
    Plus,
    #[default]
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepEvolver {
    #[default]
    Linear,
    Inl,
    Linearized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure_id: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<NamedState>,
    /// `[re, im]` pairs in the order c11, c22, c12, c21.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_amplitudes: Option<[[f64; 2]; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalSection>,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_name() -> String {
    "run".to_string()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSection {
    pub nu: f64,
    pub d: f64,
    pub j: f64,
    pub lambda: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub sign: SignName,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSection {
    #[serde(rename = "b_static_T")]
    pub b_static_t: f64,
    #[serde(rename = "b_rf_T")]
    pub b_rf_t: f64,
    #[serde(rename = "gamma1_rad_per_s_per_T")]
    pub gamma1: f64,
    #[serde(rename = "gamma2_rad_per_s_per_T")]
    pub gamma2: f64,
    pub omega_rf_rad_per_s: f64,
    pub diameter_m: f64,
    #[serde(rename = "grad_T_per_m")]
    pub grad_t_per_m: f64,
    #[serde(default)]
    pub j_rad_per_s: f64,
    #[serde(default)]
    pub eta_rad_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// End time in frame units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// End time as a multiple of the entanglement period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_periods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
}

pub const DEFAULT_PERIODS: f64 = 1.2;
pub const DEFAULT_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "d_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "d_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "d_max_step")]
    pub max_step: f64,
    #[serde(default = "d_eps_det")]
    pub eps_det: f64,
    #[serde(default = "d_switch_width")]
    pub switch_width: f64,
    /// Interval of the internal grid used for the envelope-depression ratio.
    #[serde(default = "d_depression_interval")]
    pub depression_interval: f64,
    #[serde(default = "d_frozen_phase")]
    pub frozen_phase_rad: f64,
}

fn d_rel_tol() -> f64 {
    IntegratorConfig64::default().rel_tol
}
fn d_abs_tol() -> f64 {
    IntegratorConfig64::default().abs_tol
}
fn d_max_step() -> f64 {
    IntegratorConfig64::default().max_step
}
fn d_eps_det() -> f64 {
    DEFAULT_EPS_DET
}
fn d_switch_width() -> f64 {
    DEFAULT_SWITCH_WIDTH
}
fn d_depression_interval() -> f64 {
    IntegratorConfig64::default().sample_interval
}
fn d_frozen_phase() -> f64 {
    FRAC_PI_2
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            rel_tol: d_rel_tol(),
            abs_tol: d_abs_tol(),
            max_step: d_max_step(),
            eps_det: d_eps_det(),
            switch_width: d_switch_width(),
            depression_interval: d_depression_interval(),
            frozen_phase_rad: d_frozen_phase(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub thickness_m: f64,
    #[serde(rename = "grad_T_per_m")]
    pub grad_t_per_m: f64,
    #[serde(rename = "gamma_bar_rad_per_s_per_T")]
    pub gamma_bar: f64,
    /// Defaults to the value implied by `[physical]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_rate_rad_per_s: Option<f64>,
    /// Detuning at the slab centre; defaults to `frame.nu`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_nu: Option<f64>,
    pub n_nodes: usize,
    #[serde(default)]
    pub evolver: SweepEvolver,
}

/// A config with every default and derived quantity filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: RotatingFrameParams64,
    pub physical: Option<PhysicalParams64>,
    pub d_rate: Option<f64>,
    pub initial: SpinState64,
    pub grid: Vec<f64>,
    pub integrator: IntegratorConfig64,
    pub frozen_phase: f64,
}

fn cfg_err(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

fn from_core(section: &str, e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter { name, reason } => cfg_err(&format!("{section}.{name}"), reason),
        other => cfg_err(section, other),
    }
}

fn physical_key(name: &str) -> &str {
    match name {
        "b_static" => "b_static_T",
        "b_rf" => "b_rf_T",
        "gamma1" => "gamma1_rad_per_s_per_T",
        "gamma2" => "gamma2_rad_per_s_per_T",
        "omega_rf" => "omega_rf_rad_per_s",
        "diameter" => "diameter_m",
        "grad" => "grad_T_per_m",
        other => other,
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(&path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// The configuration used by `figure --id`.
    pub fn figure(id: u8, output_dir: PathBuf) -> Result<Self, CliError> {
        let (j, eta) = match id {
            1 => (0.0, 0.0),
            2 => (0.0025, 0.0),
            3 | 4 => (0.0025, 0.005),
            _ => return Err(cfg_err("figure_id", format!("{id} is not one of 1, 2, 3, 4"))),
        };
        let reference = RotatingFrameParams64::reference();
        let t_e = entanglement_period(reference.j).expect("reference coupling is positive");
        Ok(Self {
            mode: Mode::Figure,
            name: format!("fig{id}"),
            output_dir,
            figure_id: Some(id),
            initial_state: Some(NamedState::DownDown),
            initial_amplitudes: None,
            frame: Some(FrameSection {
                nu: reference.nu,
                d: reference.d,
                j,
                lambda: reference.lambda,
                eta,
                sign: SignName::Minus,
            }),
            physical: None,
            time: TimeSection {
                t_end: Some(DEFAULT_PERIODS * t_e),
                t_end_periods: None,
                samples: Some(DEFAULT_SAMPLES),
                sample_interval: None,
            },
            integrator: IntegratorSection::default(),
            sweep: None,
        })
    }

    fn check(&self) -> Result<(), CliError> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(cfg_err("name", "must be a non-empty file stem"));
        }
        match (self.mode, self.figure_id) {
            (Mode::Figure, None) => return Err(cfg_err("figure_id", "required in figure mode")),
            (Mode::Figure, Some(id)) if !(1..=4).contains(&id) => {
                return Err(cfg_err("figure_id", format!("{id} is not one of 1, 2, 3, 4")))
            }
            (Mode::Figure, _) => {}
            (_, Some(_)) => return Err(cfg_err("figure_id", "only allowed in figure mode")),
            _ => {}
        }
        if self.mode == Mode::Sweep && self.sweep.is_none() {
            return Err(cfg_err("sweep", "section required in sweep mode"));
        }
        if self.frame.is_none() && self.physical.is_none() {
            return Err(cfg_err("frame", "either [frame] or [physical] is required"));
        }
        if self.initial_state.is_some() && self.initial_amplitudes.is_some() {
            return Err(cfg_err("initial_amplitudes", "conflicts with initial_state"));
        }
        let t = &self.time;
        if t.t_end.is_some() && t.t_end_periods.is_some() {
            return Err(cfg_err("time.t_end_periods", "conflicts with time.t_end"));
        }
        if t.samples.is_some() && t.sample_interval.is_some() {
            return Err(cfg_err("time.sample_interval", "conflicts with time.samples"));
        }
        self.resolve().map(|_| ())
    }

    fn params(&self) -> Result<(RotatingFrameParams64, Option<PhysicalParams64>, Option<f64>), CliError> {
        let physical = self.physical.map(|p| PhysicalParams64 {
            b_static: p.b_static_t,
            b_rf: p.b_rf_t,
            gamma1: p.gamma1,
            gamma2: p.gamma2,
            omega_rf: p.omega_rf_rad_per_s,
            diameter: p.diameter_m,
            grad: p.grad_t_per_m,
        });
        let scaled = match (&physical, &self.physical) {
            (Some(p), Some(sec)) => {
                p.validate().map_err(|e| match e {
                    CoreError::InvalidParameter { name, reason } => {
                        cfg_err(&format!("physical.{}", physical_key(name)), reason)
                    }
                    other => cfg_err("physical", other),
                })?;
                for (name, v) in [("j_rad_per_s", sec.j_rad_per_s), ("eta_rad_per_s", sec.eta_rad_per_s)] {
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(cfg_err(&format!("physical.{name}"), "must be finite and >= 0"));
                    }
                }
                let f = to_rotating_frame(p).map_err(|e| from_core("physical", e))?;
                Some((f.with_rates(sec.j_rad_per_s, sec.eta_rad_per_s), f.d_rate))
            }
            _ => None,
        };
        let params = match (self.frame, scaled) {
            (Some(f), _) => {
                let sign = match f.sign {
                    SignName::Plus => NonlinearSign::Plus,
                    SignName::Minus => NonlinearSign::Minus,
                };
                RotatingFrameParams64::new(f.nu, f.d, f.j, f.lambda, f.eta).with_sign(sign)
            }
            (None, Some((rp, _))) => rp,
            (None, None) => return Err(cfg_err("frame", "either [frame] or [physical] is required")),
        };
        let section = if self.frame.is_some() { "frame" } else { "physical" };
        params.validate().map_err(|e| from_core(section, e))?;
        Ok((params, physical, scaled.map(|s| s.1)))
    }

    fn initial(&self) -> Result<SpinState64, CliError> {
        if let Some(a) = self.initial_amplitudes {
            let s = SpinState64::from_array(a.map(|[re, im]| spinprobe::num_complex::Complex::new(re, im)));
            s.check_normalized(1e-6).map_err(|e| cfg_err("initial_amplitudes", e))?;
            return Ok(s);
        }
        Ok(match self.initial_state.unwrap_or(NamedState::DownDown) {
            NamedState::DownDown => SpinState64::down_down(),
            NamedState::UpUp => SpinState64::up_up(),
            NamedState::UpDown => SpinState64::basis(2),
            NamedState::DownUp => SpinState64::basis(3),
            NamedState::Bell => SpinState64::bell(),
        })
    }

    fn grid(&self, params: &RotatingFrameParams64) -> Result<Vec<f64>, CliError> {
        let t = &self.time;
        let t_end = match (t.t_end, t.t_end_periods) {
            (Some(x), _) => x,
            (None, periods) => {
                let periods = periods.unwrap_or(DEFAULT_PERIODS);
                let t_e = entanglement_period(params.j)
                    .map_err(|_| cfg_err("time.t_end_periods", "entanglement period undefined for j = 0; set time.t_end"))?;
                periods * t_e
            }
        };
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(cfg_err("time.t_end", "time span must be finite and > 0"));
        }
        match (t.samples, t.sample_interval) {
            (_, Some(dt)) => {
                if !(dt > 0.0 && dt.is_finite()) || t_end / dt > 1e8 {
                    return Err(cfg_err("time.sample_interval", "must be > 0 and give at most 1e8 samples"));
                }
                Ok(grid_with_interval(t_end, dt))
            }
            (n, None) => {
                let n = n.unwrap_or(DEFAULT_SAMPLES);
                if !(2..=100_000_000).contains(&n) {
                    return Err(cfg_err("time.samples", "must be between 2 and 1e8"));
                }
                Ok(uniform_grid(t_end, n))
            }
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let (params, physical, d_rate) = self.params()?;
        let i = &self.integrator;
        let integrator = IntegratorConfig64 {
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
            max_step: i.max_step,
            eps_det: i.eps_det,
            switch_width: i.switch_width,
            sample_interval: i.depression_interval,
        };
        integrator.validate().map_err(|e| match e {
            CoreError::InvalidParameter { name: "sample_interval", reason } => {
                cfg_err("integrator.depression_interval", reason)
            }
            other => from_core("integrator", other),
        })?;
        if !i.frozen_phase_rad.is_finite() {
            return Err(cfg_err("integrator.frozen_phase_rad", "must be finite"));
        }
        if let Some(s) = &self.sweep {
            if s.n_nodes < 2 {
                return Err(cfg_err("sweep.n_nodes", "need at least 2 nodes"));
            }
            for (name, v) in [("thickness_m", s.thickness_m), ("grad_T_per_m", s.grad_t_per_m), ("gamma_bar_rad_per_s_per_T", s.gamma_bar)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(cfg_err(&format!("sweep.{name}"), "must be finite and >= 0"));
                }
            }
            match s.d_rate_rad_per_s.or(d_rate) {
                Some(r) if r > 0.0 && r.is_finite() => {}
                Some(_) => return Err(cfg_err("sweep.d_rate_rad_per_s", "must be finite and > 0")),
                None => return Err(cfg_err("sweep.d_rate_rad_per_s", "required without [physical]")),
            }
        }
        Ok(Resolved {
            params,
            physical,
            d_rate,
            initial: self.initial()?,
            grid: self.grid(&params)?,
            integrator,
            frozen_phase: i.frozen_phase_rad,
        })
    }
}
