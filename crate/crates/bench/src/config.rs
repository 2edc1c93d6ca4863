use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wgs_core::model::{ArrayConfig, SubbandGrid};
use wgs_core::recovery::EstimatorConfig;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RmseVsSnr,
    Resolution,
    SingleRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "WGS")]
    Wgs,
    #[serde(rename = "RSS")]
    Rss,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Wgs => "WGS",
            Method::Rss => "RSS",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "WGS" => Ok(Method::Wgs),
            "RSS" => Ok(Method::Rss),
            other => Err(BenchError::Config(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaChoice {
    /// Realized noise plus focusing-error energy.
    Oracle,
    /// Noise-variance based heuristic.
    Blind,
}

/// Array, subband layout and physical constants shared by every scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySetup {
    pub sensors: usize,
    pub dft_size: usize,
    /// DFT bin of the highest selected subband.
    pub first_bin: usize,
    pub subbands: usize,
    /// Propagation speed in m/s.
    pub speed: f64,
    /// Sampling rate in Hz; fixes the physical reference frequency.
    pub sample_rate: f64,
}

impl Default for ArraySetup {
    fn default() -> Self {
        Self { sensors: 16, dft_size: 60, first_bin: 20, subbands: 10, speed: 1500.0, sample_rate: 3000.0 }
    }
}

impl ArraySetup {
    pub fn grid(&self) -> Result<SubbandGrid> {
        Ok(SubbandGrid::from_dft_bins(self.dft_size, self.first_bin, self.subbands)?)
    }

    pub fn array(&self) -> Result<ArrayConfig> {
        let omega1 = 2.0 * std::f64::consts::PI * self.sample_rate * self.first_bin as f64 / self.dft_size as f64;
        Ok(ArrayConfig::new(self.sensors, self.speed, omega1)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub array: ArraySetup,
    /// Source angles in degrees (`rmse_vs_snr`, `single_run`).
    pub angles: Vec<f64>,
    /// SNR points in dB (`rmse_vs_snr`).
    pub snr_grid_db: Vec<f64>,
    /// SNR in dB for `resolution` and `single_run`; `null` for noiseless data.
    pub snr_db: Option<f64>,
    /// Fixed first source in degrees (`resolution`).
    pub theta1: f64,
    /// Separations in degrees; the second source sits at `theta1 - delta` (`resolution`).
    pub delta_theta: Vec<f64>,
    pub gamma_mode: GammaChoice,
    /// Safety factor applied to the budget gamma.
    pub gamma_scale: f64,
    /// Half-width of the uniform error on RSS initial angles, degrees.
    pub init_error_deg: f64,
    pub music_grid_deg: f64,
    /// A point is reported as failed when more than this fraction of its trials fail.
    pub failed_row_threshold: f64,
    /// Fill the runtime column; makes CSV output machine dependent.
    pub record_timing: bool,
    pub estimator: EstimatorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::RmseVsSnr,
            trials: 100,
            master_seed: 2024,
            methods: vec![Method::Wgs, Method::Rss],
            array: ArraySetup::default(),
            angles: vec![-5.0, 15.0, 40.0],
            snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            snr_db: Some(10.0),
            theta1: 40.0,
            delta_theta: vec![12.0, 10.0, 8.0, 6.0, 5.0, 4.0, 3.0],
            gamma_mode: GammaChoice::Oracle,
            gamma_scale: 1.0,
            init_error_deg: 2.0,
            music_grid_deg: 0.01,
            failed_row_threshold: 0.4,
            record_timing: false,
            estimator: EstimatorConfig::default(),
        }
    }
}

pub const QUICK_TRIALS: usize = 20;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| BenchError::Config(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if !(self.gamma_scale > 0.0) {
            return bad(format!("gamma_scale must be positive, got {}", self.gamma_scale));
        }
        if !(0.0..=1.0).contains(&self.failed_row_threshold) {
            return bad("failed_row_threshold must lie in [0, 1]".into());
        }
        if !(self.init_error_deg >= 0.0) || !(self.music_grid_deg > 0.0) {
            return bad("RSS initialization error must be >= 0 and MUSIC grid > 0".into());
        }
        self.array.grid()?;
        self.array.array()?;
        match self.scenario {
            Scenario::RmseVsSnr => {
                if self.snr_grid_db.is_empty() {
                    return bad("snr_grid_db is empty".into());
                }
                check_angles(&self.angles)?;
            }
            Scenario::SingleRun => check_angles(&self.angles)?,
            Scenario::Resolution => {
                if self.delta_theta.is_empty() {
                    return bad("delta_theta is empty".into());
                }
                for d in &self.delta_theta {
                    if !(*d > 0.0) {
                        return bad(format!("separation {d} must be positive"));
                    }
                    check_angles(&[self.theta1, self.theta1 - d])?;
                }
            }
        }
        Ok(())
    }

    /// Copy with the trial count reduced for a fast run.
    pub fn quick(&self) -> Self {
        Self { trials: self.trials.min(QUICK_TRIALS), ..self.clone() }
    }
}

fn check_angles(angles: &[f64]) -> Result<()> {
    for (i, a) in angles.iter().enumerate() {
        if !(*a > -90.0 && *a < 90.0) {
            return Err(BenchError::Config(format!("angle {a} outside (-90, 90)")));
        }
        if angles[..i].contains(a) {
            return Err(BenchError::Config(format!("duplicate angle {a}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        assert_eq!(ExperimentConfig::default().quick().trials, QUICK_TRIALS);
        let few = ExperimentConfig { trials: 3, ..ExperimentConfig::default() };
        assert_eq!(few.quick().trials, 3);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = ExperimentConfig::default();
        assert!(ExperimentConfig { trials: 0, ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { methods: vec![], ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { angles: vec![10.0, 10.0], ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { angles: vec![95.0], ..base.clone() }.validate().is_err());
        assert!(ExperimentConfig { failed_row_threshold: 1.5, ..base.clone() }.validate().is_err());
        let res = ExperimentConfig { scenario: Scenario::Resolution, delta_theta: vec![0.0], ..base };
        assert!(res.validate().is_err());
    }

    #[test]
    fn json_names_and_unknown_fields() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"scenario":"resolution","methods":["RSS"],"snr_db":null}"#).unwrap();
        assert_eq!(cfg.scenario, Scenario::Resolution);
        assert_eq!(cfg.methods, vec![Method::Rss]);
        assert_eq!(cfg.snr_db, None);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"trails":3}"#).is_err());
        assert_eq!("WGS".parse::<Method>().unwrap(), Method::Wgs);
        assert!("MUSIC".parse::<Method>().is_err());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = ExperimentConfig::load(Path::new("/nonexistent/table.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/table.json"));
    }
}
