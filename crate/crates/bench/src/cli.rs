//! Command-line front end of the `wgs` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use wgs_core::baselines::{perturb_initial, rss_estimate, rss_report, RssConfig};
use wgs_core::focusing::{gamma_bound, FocusingSet, GammaMode};
use wgs_core::model::SubbandData;
use wgs_core::recovery::{estimate_doa, EstimateReport, EstimatorConfig};

use crate::config::{ExperimentConfig, GammaChoice, Method};
use crate::error::{BenchError, Result};
use crate::experiment;
use crate::report::{emit_report, Format, ResultTable};
use crate::scene::SceneSpec;

#[derive(Debug, Parser)]
#[command(name = "wgs", version, about = "Wideband gridless DOA estimation and Monte-Carlo benchmarks")]
struct Cli {
    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize subband data from a scene document.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
        format: DataFormat,
    },
    /// Estimate directions from a scene document or a subband data file.
    Estimate {
        /// Scene `.json` or subband data file (CSV or binary).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = GammaArg::Oracle)]
        gamma_mode: GammaArg,
        /// Explicit noise budget; overrides the gamma mode.
        #[arg(long)]
        gamma: Option<f64>,
        /// Noise variance for the blind budget; taken from the scene when omitted.
        #[arg(long)]
        noise_variance: Option<f64>,
        #[arg(long, value_parser = parse_method, default_value = "WGS")]
        method: Method,
        /// RSS initial angles in degrees; drawn around the truth for scenes.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init_angles: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        init_error: f64,
        #[arg(long, default_value_t = 0.01)]
        music_grid: f64,
        /// Estimator settings as JSON.
        #[arg(long)]
        estimator: Option<PathBuf>,
        /// Write the estimate here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a Monte-Carlo experiment and write its result table.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        /// Cap the number of trials for a fast run.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [TableFormat::Csv, TableFormat::Json, TableFormat::Svg])]
        format: Vec<TableFormat>,
        #[arg(long)]
        log_y: bool,
    },
    /// Render a stored result table.
    Report {
        /// Table as CSV or `.json`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [TableFormat::Svg])]
        format: Vec<TableFormat>,
        #[arg(long)]
        log_y: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DataFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GammaArg {
    Oracle,
    Blind,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
    Svg,
}

impl From<TableFormat> for Format {
    fn from(f: TableFormat) -> Self {
        match f {
            TableFormat::Csv => Format::Csv,
            TableFormat::Json => Format::Json,
            TableFormat::Svg => Format::Svg,
        }
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.to_ascii_uppercase().parse().map_err(|e: BenchError| e.to_string())
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn echo<T: serde::Serialize>(what: &str, value: &T, seed: u64) -> Result<()> {
    eprintln!("resolved {what}: {}", serde_json::to_string(value)?);
    eprintln!("master seed: {seed}");
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scene, output, format } => simulate(&scene, &output, format),
        Command::Estimate {
            input,
            gamma_mode,
            gamma,
            noise_variance,
            method,
            init_angles,
            init_error,
            music_grid,
            estimator,
            output,
        } => {
            let estimator = match estimator {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| BenchError::Config(format!("cannot read estimator config {}: {e}", p.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| BenchError::Config(format!("invalid estimator config {}: {e}", p.display())))?
                }
                None => EstimatorConfig::default(),
            };
            let opts = EstimateOptions { gamma_mode, gamma, noise_variance, method, init_angles, init_error, music_grid, estimator };
            let report = estimate(&input, &opts)?;
            let json = serde_json::to_string_pretty(&report)?;
            match output {
                Some(p) => std::fs::write(p, json + "\n")?,
                None => {
                    let mut out = std::io::stdout().lock();
                    writeln!(out, "{json}")?;
                }
            }
            Ok(())
        }
        Command::Benchmark { config, quick, out_dir, format, log_y } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if quick {
                cfg = cfg.quick();
            }
            echo("config", &cfg, cfg.master_seed)?;
            let table = experiment::run(&cfg)?;
            let stem = file_stem(&config);
            let formats: Vec<Format> = format.into_iter().map(Format::from).collect();
            for p in emit_report(&table, &out_dir, &stem, &formats, log_y)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Report { input, out_dir, format, log_y } => {
            let table = ResultTable::load(&input)?;
            let formats: Vec<Format> = format.into_iter().map(Format::from).collect();
            for p in emit_report(&table, &out_dir, &file_stem(&input), &formats, log_y)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "table".into(), |s| s.to_string_lossy().into_owned())
}

fn simulate(scene: &Path, output: &Path, format: DataFormat) -> Result<()> {
    let spec = SceneSpec::load(scene)?;
    echo("scene", &spec, spec.seed)?;
    let trial = spec.synthesize()?;
    let file = std::io::BufWriter::new(std::fs::File::create(output)?);
    match format {
        DataFormat::Csv => trial.data.write_csv(file)?,
        DataFormat::Bin => trial.data.write_binary(file)?,
    }
    Ok(())
}

struct EstimateOptions {
    gamma_mode: GammaArg,
    gamma: Option<f64>,
    noise_variance: Option<f64>,
    method: Method,
    init_angles: Vec<f64>,
    init_error: f64,
    music_grid: f64,
    estimator: EstimatorConfig,
}

fn estimate(input: &Path, opts: &EstimateOptions) -> Result<EstimateReport> {
    let is_scene = input.extension().is_some_and(|e| e == "json");
    let (data, scene) = if is_scene {
        let spec = SceneSpec::load(input)?;
        echo("scene", &spec, spec.seed)?;
        let trial = spec.synthesize()?;
        (trial.data.clone(), Some((spec, trial)))
    } else {
        let data = SubbandData::load(input)
            .map_err(|e| BenchError::Config(format!("cannot read data {}: {e}", input.display())))?;
        (data, None)
    };
    match opts.method {
        Method::Wgs => {
            let gamma = match (opts.gamma, opts.gamma_mode, &scene) {
                (Some(g), _, _) => g,
                (None, GammaArg::Oracle, Some((_, trial))) => trial.gamma(GammaChoice::Oracle, 1.0)?,
                (None, GammaArg::Oracle, None) => {
                    return Err(BenchError::Config(
                        "the oracle budget needs a scene document; pass --gamma or --gamma-mode blind".into(),
                    ))
                }
                (None, GammaArg::Blind, _) => {
                    let noise_variance = opts
                        .noise_variance
                        .or(scene.as_ref().map(|(_, t)| t.noise_variance))
                        .ok_or_else(|| BenchError::Config("the blind budget needs --noise-variance".into()))?;
                    let focusing = FocusingSet::new(data.alphas(), data.sensors())?;
                    gamma_bound(GammaMode::Blind { y: &data.y, noise_variance, focusing: &focusing })?
                }
            };
            eprintln!("gamma: {gamma}");
            Ok(estimate_doa(&data, gamma, &opts.estimator)?.report())
        }
        Method::Rss => {
            let init = match (&scene, opts.init_angles.is_empty()) {
                (_, false) => opts.init_angles.clone(),
                (Some((spec, trial)), true) => perturb_initial(&trial.angles, opts.init_error, spec.seeds().init)?,
                (None, true) => return Err(BenchError::Config("RSS on a data file needs --init-angles".into())),
            };
            eprintln!("initial angles: {init:?}");
            let cfg = RssConfig::new(init.len(), init, opts.music_grid)?;
            Ok(rss_report(&rss_estimate(&data, &cfg)?))
        }
    }
}
