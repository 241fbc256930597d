//! Run configuration: one human-editable TOML file (JSON accepted by
//! extension), with the reference parameter set as the built-in default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vibcoh::dynamics::Method;
use vibcoh::grid::GridSpec;
use vibcoh::model::{HarmonicSurface, TwoStateSystem};
use vibcoh::observables::WindowKind;

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub initial: InitialConfig,
    pub run: RunSection,
    /// Lattice geometry; required when the `grid` channel is requested.
    pub grid: Option<GridSpec>,
    pub spectrum: SpectrumConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub mass: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub q1_eq: f64,
    pub q2_eq: f64,
    pub e1: f64,
    pub e2: f64,
    pub hbar: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Initial coherence center; the width is always the surface-1 ground
    /// width. `None` means the surface-1 minimum at rest.
    pub q0: Option<f64>,
    pub p0: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub method: String,
    pub channels: Vec<String>,
    /// Sample spacing of c(t) (atomic time).
    pub dt: f64,
    pub total_time: f64,
    /// ODE substeps per sample; the integrator step is dt/substeps.
    pub substeps: usize,
    /// Grid field snapshots every this many samples (0 = none).
    pub snapshot_every: usize,
    /// Row-parallel grid right-hand sides (serial mode is bit-reproducible).
    pub parallel: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub window: String,
    /// Exponential damping time; omit for none.
    pub tau: Option<f64>,
    pub zero_pad: usize,
    pub peak_floor: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for SystemConfig {
    fn default() -> Self {
        // the reference parameter set, atomic units
        SystemConfig {
            mass: 2000.0,
            omega1: 0.01,
            omega2: 0.004,
            q1_eq: 0.0,
            q2_eq: 1.0,
            e1: 0.0,
            e2: 0.1,
            hbar: 1.0,
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            method: "moyal".into(),
            channels: vec!["gaussian".into()],
            dt: 1.0,
            // eight upper-surface vibrational periods
            total_time: 8.0 * std::f64::consts::TAU / 0.004,
            substeps: 10,
            snapshot_every: 0,
            parallel: true,
        }
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            window: "rect".into(),
            tau: None,
            zero_pad: 8,
            peak_floor: 0.05,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

/// Command-line overrides applied on top of the loaded configuration.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub method: Option<String>,
    pub linearized: bool,
    pub channels: Vec<String>,
    pub out: Option<String>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub window: Option<String>,
    pub tau: Option<f64>,
    pub zero_pad: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .map(|ext| ext.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        if is_json {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(m) = &ov.method {
            self.run.method = m.clone();
        }
        if ov.linearized && self.run.method != "moyal" {
            self.run.method = "sc-linearized".into();
        }
        if !ov.channels.is_empty() {
            self.run.channels = ov.channels.clone();
        }
        if let Some(out) = &ov.out {
            self.output.dir = out.clone();
        }
        if let Some(dt) = ov.dt {
            self.run.dt = dt;
        }
        if let Some(steps) = ov.steps {
            self.run.total_time = self.run.dt * steps as f64;
        }
        if let Some(w) = &ov.window {
            self.spectrum.window = w.clone();
        }
        if ov.tau.is_some() {
            self.spectrum.tau = ov.tau;
        }
        if let Some(z) = ov.zero_pad {
            self.spectrum.zero_pad = z;
        }
    }

    pub fn system(&self) -> Result<TwoStateSystem, CliError> {
        let s = &self.system;
        let s1 = HarmonicSurface::new(s.mass, s.omega1, s.q1_eq, s.e1)
            .map_err(|e| CliError::Config(format!("surface 1: {e}")))?;
        let s2 = HarmonicSurface::new(s.mass, s.omega2, s.q2_eq, s.e2)
            .map_err(|e| CliError::Config(format!("surface 2: {e}")))?;
        TwoStateSystem::new(s1, s2, s.hbar).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn method(&self) -> Result<Method, CliError> {
        Method::parse(&self.run.method)
            .ok_or_else(|| CliError::Config(format!("unknown method `{}`", self.run.method)))
    }

    pub fn window(&self) -> Result<WindowKind, CliError> {
        WindowKind::parse(&self.spectrum.window)
            .ok_or_else(|| CliError::Config(format!("unknown window `{}`", self.spectrum.window)))
    }

    /// Number of sample intervals.
    pub fn nsamples(&self) -> usize {
        (self.run.total_time / self.run.dt).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system()?;
        self.method()?;
        self.window()?;
        if !(self.run.dt.is_finite() && self.run.dt > 0.0) {
            return Err(CliError::Config(format!(
                "dt must be positive, got {}",
                self.run.dt
            )));
        }
        if !(self.run.total_time.is_finite() && self.run.total_time > 0.0) {
            return Err(CliError::Config(format!(
                "total_time must be positive, got {}",
                self.run.total_time
            )));
        }
        if self.run.substeps == 0 {
            return Err(CliError::Config("substeps must be at least 1".into()));
        }
        if self.run.channels.is_empty() {
            return Err(CliError::Config("at least one channel is required".into()));
        }
        for name in &self.run.channels {
            if vibcoh::channel::by_name(name).is_none() {
                return Err(CliError::Config(format!(
                    "unknown channel `{name}` (available: {})",
                    vibcoh::channel::names().join(", ")
                )));
            }
            if name == "grid" {
                let spec = self.grid.ok_or_else(|| {
                    CliError::Config("the grid channel needs a [grid] section".into())
                })?;
                spec.validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        if self.spectrum.zero_pad == 0 {
            return Err(CliError::Config("zero_pad must be at least 1".into()));
        }
        if !(self.spectrum.peak_floor > 0.0 && self.spectrum.peak_floor < 1.0) {
            return Err(CliError::Config(format!(
                "peak_floor must lie in (0, 1), got {}",
                self.spectrum.peak_floor
            )));
        }
        if let Some(tau) = self.spectrum.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(CliError::Config(format!(
                    "tau must be positive when present, got {tau}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.system.mass, 2000.0);
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            method: Some("sc".into()),
            linearized: true,
            dt: Some(0.5),
            steps: Some(100),
            ..Default::default()
        });
        assert_eq!(cfg.run.method, "sc-linearized");
        assert_eq!(cfg.run.total_time, 50.0);
    }

    #[test]
    fn bad_values_rejected() {
        let mut cfg = RunConfig::default();
        cfg.system.omega2 = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.run.channels = vec!["grid".into()];
        assert!(
            cfg.validate().is_err(),
            "grid channel without [grid] section"
        );
    }
}
