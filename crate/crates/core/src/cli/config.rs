//! TOML run configuration. Every section is optional; missing keys take the
//! library defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{DefectParams, DriveConfig, HyperfineParams, OpticalRates, StaticField};
use crate::odmr::{phase_grid, SweepConfig};

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_freq: usize,
    /// Used when `delta_list` is absent.
    pub delta_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_list: Option<Vec<f64>>,
    pub b_list: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let s = SweepConfig::default();
        Self {
            f_start: s.f_start,
            f_stop: s.f_stop,
            n_freq: s.n_freq,
            delta_step: 10.0,
            delta_list: None,
            b_list: s.b_list,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Outer fraction of samples per side used for linear background
    /// subtraction before fitting; 0 disables it.
    pub wing_fraction: f64,
    /// Frequency windows `[lo, hi]` (MHz) excluded from fits.
    pub mask: Vec<[f64; 2]>,
    pub max_iterations: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            wing_fraction: 0.0,
            mask: Vec::new(),
            max_iterations: 500,
        }
    }
}

/// Field used when the config does not set one, mT.
pub const DEFAULT_B0_MT: f64 = 2.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub defect: DefectParams,
    pub rates: OpticalRates,
    pub drive: DriveConfig,
    pub field: StaticField,
    pub sweep: SweepSection,
    pub hyperfine: HyperfineParams,
    pub output: OutputSection,
    pub fit: FitSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            defect: DefectParams::default(),
            rates: OpticalRates::default(),
            drive: DriveConfig::default(),
            field: StaticField::new(DEFAULT_B0_MT),
            sweep: SweepSection::default(),
            hyperfine: HyperfineParams::default(),
            output: OutputSection::default(),
            fit: FitSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn params(&self) -> DefectParams {
        DefectParams {
            rates: self.rates,
            ..self.defect
        }
    }

    pub fn delta_list(&self) -> Vec<f64> {
        match &self.sweep.delta_list {
            Some(list) => list.clone(),
            None => phase_grid(self.sweep.delta_step),
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            f_start: self.sweep.f_start,
            f_stop: self.sweep.f_stop,
            n_freq: self.sweep.n_freq,
            delta_list: self.delta_list(),
            b_list: self.sweep.b_list.clone(),
            drive: self.drive,
            params: self.params(),
        }
    }

    /// Checks every numeric field; errors name the offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: String| CliError::Config(e);
        self.params().validate().map_err(|e| cfg(e.to_string()))?;
        self.drive.validate().map_err(|e| cfg(e.to_string()))?;
        self.field.validate().map_err(|e| cfg(e.to_string()))?;
        self.hyperfine.validate().map_err(|e| cfg(e.to_string()))?;
        let s = &self.sweep;
        if !(s.delta_step > 0.0 && s.delta_step <= 360.0) {
            return Err(cfg(format!("invalid sweep.delta_step = {}: must lie in (0, 360]", s.delta_step)));
        }
        self.sweep_config().validate().map_err(|e| cfg(format!("sweep: {e}")))?;
        let f = &self.fit;
        if !(f.wing_fraction == 0.0 || (f.wing_fraction > 0.0 && f.wing_fraction <= 0.4)) {
            return Err(cfg(format!(
                "invalid fit.wing_fraction = {}: must be 0 or lie in (0, 0.4]",
                f.wing_fraction
            )));
        }
        if f.mask.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(cfg("invalid fit.mask: each window needs lo <= hi".into()));
        }
        if f.max_iterations == 0 {
            return Err(cfg("invalid fit.max_iterations = 0: must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.delta_list().len(), 36);
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.field.b0 = 6.58;
        c.sweep.delta_list = Some(vec![0.0, 90.0]);
        c.fit.mask = vec![[3890.0, 3910.0]];
        let back = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sections_override_defaults() {
        let c = RunConfig::parse(
            "[defect]\ne_gs = 0.0\n[rates]\nk_52 = 40.0\nsplit = \"full\"\n[field]\nb0 = 2.3\n",
        )
        .unwrap();
        assert_eq!(c.params().e_gs, 0.0);
        assert_eq!(c.params().rates.k_52, 40.0);
        assert_eq!(c.params().rates.split, crate::hamiltonian::BranchSplit::Full);
        assert_eq!(c.field.b0, 2.3);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::parse("[field]\nbee = 1.0\n").is_err());
        let c = RunConfig::parse("[field]\nb0 = 500.0\n").unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("field.b0"), "{err}");
        let c = RunConfig::parse("[sweep]\nn_freq = 1\n").unwrap();
        assert!(c.validate().is_err());
    }
}
