//! Monte-Carlo scenarios.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wgs_core::anm::noiseless_matrix;
use wgs_core::baselines::{perturb_initial, rss_estimate, RssConfig};
use wgs_core::focusing::{gamma_bound, FocusingSet, GammaMode};
use wgs_core::model::{complex_gaussian, noise_variance_for_snr, SubbandData, WidebandScene};
use wgs_core::model::synthesize_parts;
use wgs_core::recovery::{estimate_doa, DoaEstimate};
use wgs_core::CMat;

use crate::config::{ArraySetup, ExperimentConfig, GammaChoice, Method, Scenario};
use crate::error::{BenchError, Result};
use crate::metrics::{matched_errors, min_separation, pooled_rmse};
use crate::report::{ResultRow, ResultTable};

/// Environment variable holding the number of worker threads.
pub const WORKERS_ENV: &str = "WGS_WORKERS";

const STREAM_SPECTRA: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_INIT: u64 = 3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed determined by the master seed and a path of stream identifiers.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(master), |h, p| splitmix(h ^ splitmix(*p)))
}

/// Source spectra depend on the trial only; noise and RSS initialization also
/// on the scenario point, keyed by its value so that adding points leaves the
/// draws of existing ones unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub spectra: u64,
    pub noise: u64,
    pub init: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, trial: usize, point: f64) -> Self {
        let (t, p) = (trial as u64, point.to_bits());
        Self {
            spectra: derive_seed(master, &[STREAM_SPECTRA, t]),
            noise: derive_seed(master, &[STREAM_NOISE, t, p]),
            init: derive_seed(master, &[STREAM_INIT, t, p]),
        }
    }
}

/// One synthesized measurement with the realizations needed for oracle budgets.
#[derive(Debug, Clone)]
pub struct TrialScene {
    pub angles: Vec<f64>,
    pub spectra: CMat,
    pub data: SubbandData,
    pub noise: CMat,
    pub focusing_error: CMat,
    pub noise_variance: f64,
}

impl TrialScene {
    /// Scene with unit-variance Gaussian source spectra, and noise at `snr_db`
    /// relative to the focused noiseless matrix (`None` for no noise).
    pub fn generate(setup: &ArraySetup, angles: &[f64], snr_db: Option<f64>, seeds: TrialSeeds) -> Result<Self> {
        let grid = setup.grid()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.spectra);
        let spectra = complex_gaussian(angles.len(), grid.len(), 1.0, &mut rng);
        Self::with_spectra(setup, angles, spectra, snr_db, seeds.noise)
    }

    pub fn with_spectra(
        setup: &ArraySetup,
        angles: &[f64],
        spectra: CMat,
        snr_db: Option<f64>,
        noise_seed: u64,
    ) -> Result<Self> {
        let grid = setup.grid()?;
        let cfg = setup.array()?;
        let m = setup.sensors;
        let focusing = FocusingSet::new(grid.alphas(), m)?;
        let probe = WidebandScene::new(angles.to_vec(), spectra.clone(), 0.0, noise_seed)?;
        let fs = probe.spatial_frequencies();
        let focused = noiseless_matrix(&fs, &spectra, &focusing)?.matrix;
        let noise_variance = match snr_db {
            Some(snr) => noise_variance_for_snr(focused.norm_squared(), m, grid.len(), snr),
            None => 0.0,
        };
        let scene = WidebandScene::new(angles.to_vec(), spectra.clone(), noise_variance, noise_seed)?;
        let parts = synthesize_parts(&cfg, &scene, &grid)?;
        let focusing_error = focusing.error_matrix(&fs, &spectra)?;
        Ok(Self {
            angles: angles.to_vec(),
            spectra,
            data: SubbandData::new(parts.measurement(), grid)?,
            noise: parts.noise,
            focusing_error,
            noise_variance,
        })
    }

    pub fn gamma(&self, mode: GammaChoice, scale: f64) -> Result<f64> {
        let g = match mode {
            GammaChoice::Oracle => gamma_bound(GammaMode::Oracle { noise: &self.noise, focusing_error: &self.focusing_error })?,
            GammaChoice::Blind => {
                let focusing = FocusingSet::new(self.data.alphas(), self.data.sensors())?;
                gamma_bound(GammaMode::Blind { y: &self.data.y, noise_variance: self.noise_variance, focusing: &focusing })?
            }
        };
        Ok(g * scale)
    }
}

/// Why a trial did not count towards the RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Failure {
    MissingSources { found: usize },
    Unresolved { max_error: f64 },
    Solver(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub outcome: std::result::Result<Vec<f64>, Failure>,
    pub elapsed: Duration,
}

/// A trial fails when it misses a source, when the estimator errors out, or
/// when some source's matched estimate lies farther from it than the
/// smallest true separation.
pub fn score(estimate: &[f64], truth: &[f64]) -> std::result::Result<Vec<f64>, Failure> {
    let Some(errors) = matched_errors(estimate, truth) else {
        return Err(Failure::MissingSources { found: estimate.len() });
    };
    let max_error = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if max_error > min_separation(truth) {
        return Err(Failure::Unresolved { max_error });
    }
    Ok(errors)
}

/// Angles of the `K` strongest WGS atoms; all of them when fewer were found.
pub fn wgs_angles(est: &DoaEstimate, k: usize) -> Vec<f64> {
    est.strongest(k)
}

pub fn run_method(
    method: Method,
    scene: &TrialScene,
    cfg: &ExperimentConfig,
    seeds: TrialSeeds,
) -> TrialResult {
    let start = Instant::now();
    let k = scene.angles.len();
    let estimate: Result<Vec<f64>> = match method {
        Method::Wgs => scene
            .gamma(cfg.gamma_mode, cfg.gamma_scale)
            .and_then(|g| Ok(estimate_doa(&scene.data, g, &cfg.estimator)?))
            .map(|est| wgs_angles(&est, k)),
        Method::Rss => perturb_initial(&scene.angles, cfg.init_error_deg, seeds.init)
            .and_then(|init| RssConfig::new(k, init, cfg.music_grid_deg))
            .and_then(|rss| rss_estimate(&scene.data, &rss))
            .map_err(BenchError::from),
    };
    let outcome = match estimate {
        Ok(angles) => score(&angles, &scene.angles),
        Err(e) => Err(Failure::Solver(e.to_string())),
    };
    TrialResult { outcome, elapsed: start.elapsed() }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| BenchError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| BenchError::Config(format!("cannot start worker pool: {e}")))
}

/// Per-trial results of every method at one scenario point, in trial order.
pub fn run_point(
    cfg: &ExperimentConfig,
    angles: &[f64],
    point: f64,
    snr_db: Option<f64>,
) -> Result<Vec<Vec<TrialResult>>> {
    let pool = worker_pool()?;
    let trials: Vec<Result<Vec<TrialResult>>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seeds = TrialSeeds::new(cfg.master_seed, t, point);
                let scene = TrialScene::generate(&cfg.array, angles, snr_db, seeds)?;
                Ok(cfg.methods.iter().map(|&m| run_method(m, &scene, cfg, seeds)).collect())
            })
            .collect()
    });
    trials.into_iter().collect()
}

/// Aggregates one method's trials into a table row.
pub fn summarize(method: Method, point: f64, trials: &[TrialResult], cfg: &ExperimentConfig) -> ResultRow {
    let n = trials.len();
    let ok: Vec<Vec<f64>> = trials.iter().filter_map(|t| t.outcome.as_ref().ok().cloned()).collect();
    let failed = n - ok.len();
    let fail_rate = failed as f64 / n as f64;
    let successful_rmse = (!ok.is_empty()).then(|| pooled_rmse(&ok));
    let per_source = if ok.is_empty() {
        Vec::new()
    } else {
        (0..ok[0].len())
            .map(|k| pooled_rmse(&ok.iter().map(|e| vec![e[k]]).collect::<Vec<_>>()))
            .collect()
    };
    let standard_error = successful_rmse.and_then(|r| {
        if ok.len() < 2 || r == 0.0 {
            return None;
        }
        let mses: Vec<f64> = ok.iter().map(|e| e.iter().map(|v| v * v).sum::<f64>() / e.len() as f64).collect();
        let mean = mses.iter().sum::<f64>() / mses.len() as f64;
        let var = mses.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (mses.len() - 1) as f64;
        Some(var.sqrt() / (mses.len() as f64).sqrt() / (2.0 * r))
    });
    let runtime = cfg
        .record_timing
        .then(|| trials.iter().map(|t| t.elapsed.as_secs_f64()).sum::<f64>() / n as f64);
    ResultRow {
        method,
        point,
        rmse_deg: successful_rmse.filter(|_| fail_rate <= cfg.failed_row_threshold),
        fail_rate,
        trials: n,
        runtime_s: runtime,
        failed_trials: failed,
        successful_rmse_deg: successful_rmse,
        rmse_standard_error_deg: standard_error,
        per_source_rmse_deg: per_source,
    }
}

fn run_points(cfg: &ExperimentConfig, points: &[(f64, Vec<f64>, Option<f64>)]) -> Result<ResultTable> {
    let mut rows = Vec::new();
    for (point, angles, snr) in points {
        log::info!("{:?} point {point}: {} trials", cfg.scenario, cfg.trials);
        let trials = run_point(cfg, angles, *point, *snr)?;
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let column: Vec<TrialResult> = trials.iter().map(|t| t[mi].clone()).collect();
            rows.push(summarize(method, *point, &column, cfg));
        }
    }
    Ok(ResultTable { scenario: Some(cfg.scenario), rows })
}

fn expect(cfg: &ExperimentConfig, scenario: Scenario) -> Result<()> {
    cfg.validate()?;
    if cfg.scenario != scenario {
        return Err(BenchError::Config(format!("expected a {scenario:?} config, got {:?}", cfg.scenario)));
    }
    Ok(())
}

/// RMSE against SNR for fixed source angles.
pub fn run_rmse_vs_snr(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, Scenario::RmseVsSnr)?;
    let points: Vec<_> = cfg.snr_grid_db.iter().map(|&s| (s, cfg.angles.clone(), Some(s))).collect();
    run_points(cfg, &points)
}

/// RMSE against the separation of two sources, the first fixed at `theta1`.
pub fn run_resolution(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, Scenario::Resolution)?;
    let points: Vec<_> = cfg
        .delta_theta
        .iter()
        .map(|&d| (d, vec![cfg.theta1, cfg.theta1 - d], cfg.snr_db))
        .collect();
    run_points(cfg, &points)
}

/// One scenario point at `snr_db`; a noiseless run is reported at point `inf`.
pub fn run_single(cfg: &ExperimentConfig) -> Result<ResultTable> {
    expect(cfg, Scenario::SingleRun)?;
    let point = cfg.snr_db.unwrap_or(f64::INFINITY);
    run_points(cfg, &[(point, cfg.angles.clone(), cfg.snr_db)])
}

pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.scenario {
        Scenario::RmseVsSnr => run_rmse_vs_snr(cfg),
        Scenario::Resolution => run_resolution(cfg),
        Scenario::SingleRun => run_single(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snr_config(trials: usize, grid: Vec<f64>, methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig { trials, snr_grid_db: grid, methods, ..ExperimentConfig::default() }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = TrialSeeds::new(1, 0, 10.0);
        assert_eq!(a, TrialSeeds::new(1, 0, 10.0));
        assert_ne!(a.noise, TrialSeeds::new(1, 1, 10.0).noise);
        assert_ne!(a.noise, TrialSeeds::new(1, 0, 5.0).noise);
        assert_ne!(a.noise, TrialSeeds::new(2, 0, 10.0).noise);
        assert_eq!(a.spectra, TrialSeeds::new(1, 0, 5.0).spectra);
        assert!(a.spectra != a.noise && a.noise != a.init);
    }

    #[test]
    fn noiseless_single_trial_is_exact() {
        let cfg = snr_config(1, vec![f64::INFINITY], vec![Method::Wgs]);
        let t = run_rmse_vs_snr(&cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].rmse_deg.unwrap() < 0.1, "{:?}", t.rows[0]);

        let single = ExperimentConfig { scenario: Scenario::SingleRun, snr_db: None, ..cfg };
        let t = run_single(&single).unwrap();
        assert!(t.rows[0].point.is_infinite());
        assert!(t.rows[0].rmse_deg.unwrap() < 0.1);
    }

    #[test]
    fn adding_points_keeps_existing_draws() {
        let one = run_rmse_vs_snr(&snr_config(3, vec![10.0], vec![Method::Wgs, Method::Rss])).unwrap();
        let two = run_rmse_vs_snr(&snr_config(3, vec![5.0, 10.0], vec![Method::Wgs, Method::Rss])).unwrap();
        let at_ten: Vec<_> = two.rows.iter().filter(|r| r.point == 10.0).cloned().collect();
        assert_eq!(one.rows, at_ten);
    }

    #[test]
    fn failure_accounting_is_exact() {
        let cfg = ExperimentConfig {
            scenario: Scenario::Resolution,
            trials: 6,
            delta_theta: vec![3.0],
            ..ExperimentConfig::default()
        };
        let t = run_resolution(&cfg).unwrap();
        for r in &t.rows {
            assert!(r.failed_trials <= r.trials);
            assert_eq!(r.fail_rate, r.failed_trials as f64 / r.trials as f64);
            assert_eq!(r.fail_rate + (r.trials - r.failed_trials) as f64 / r.trials as f64, 1.0);
            assert_eq!(r.rmse_deg.is_none(), r.fail_rate > cfg.failed_row_threshold);
            assert!(r.runtime_s.is_none());
        }
    }

    #[test]
    fn doubling_trials_is_statistically_stable() {
        let small = run_rmse_vs_snr(&snr_config(20, vec![10.0], vec![Method::Wgs])).unwrap();
        let large = run_rmse_vs_snr(&snr_config(40, vec![10.0], vec![Method::Wgs])).unwrap();
        let (a, b) = (&small.rows[0], &large.rows[0]);
        let se = a.rmse_standard_error_deg.unwrap();
        assert!((a.rmse_deg.unwrap() - b.rmse_deg.unwrap()).abs() < 3.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn runs_are_deterministic_and_timing_is_opt_in() {
        let cfg = snr_config(2, vec![0.0], vec![Method::Wgs, Method::Rss]);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
        let timed = run(&ExperimentConfig { record_timing: true, ..cfg }).unwrap();
        assert!(timed.rows.iter().all(|r| r.runtime_s.is_some_and(|t| t >= 0.0)));
    }

    #[test]
    fn scoring_rules() {
        assert_eq!(score(&[40.1, 35.0], &[35.0, 40.0]).unwrap(), vec![0.0, 40.1 - 40.0]);
        assert_eq!(score(&[40.0], &[40.0, 35.0]), Err(Failure::MissingSources { found: 1 }));
        assert!(matches!(score(&[40.0, 20.0], &[40.0, 35.0]), Err(Failure::Unresolved { .. })));
        assert!(score(&[12.0], &[10.0]).is_ok());
    }

    #[test]
    fn mismatched_scenario_is_rejected() {
        let cfg = ExperimentConfig::default();
        assert!(run_resolution(&cfg).is_err());
        assert!(run_rmse_vs_snr(&ExperimentConfig { trials: 0, ..cfg }).is_err());
    }
}
