use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wgs_core::anm::{assemble_dual_sdp, ConicProblem};
use wgs_core::baselines::{rss_estimate, RssConfig};
use wgs_core::focusing::{gamma_bound, FocusingSet, GammaMode};
use wgs_core::model::{complex_gaussian, synthesize_parts, ArrayConfig, SubbandData, SubbandGrid, WidebandScene};
use wgs_core::recovery::{estimate_doa, EstimatorConfig};
use wgs_core::solver::{gram_certificate, solve, GramConfig, SolveStatus, SolverConfig};

struct Case {
    data: SubbandData,
    gamma: f64,
}

fn case(angles: &[f64], noise_variance: f64, seed: u64) -> Case {
    let grid = SubbandGrid::from_dft_bins(60, 20, 10).unwrap();
    let cfg = ArrayConfig::new(16, 1500.0, grid.omegas()[0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectra = complex_gaussian(angles.len(), grid.len(), 1.0, &mut rng);
    let scene = WidebandScene::new(angles.to_vec(), spectra.clone(), noise_variance, seed).unwrap();
    let parts = synthesize_parts(&cfg, &scene, &grid).unwrap();
    let focusing = FocusingSet::new(grid.alphas(), 16).unwrap();
    let e = focusing.error_matrix(&scene.spatial_frequencies(), &spectra).unwrap();
    let gamma = gamma_bound(GammaMode::Oracle { noise: &parts.noise, focusing_error: &e }).unwrap();
    Case { data: SubbandData::new(parts.measurement(), grid).unwrap(), gamma }
}

#[test]
fn estimate_survives_file_roundtrip() {
    let c = case(&[-20.0, 25.0], 0.01, 3);
    let mut csv = Vec::new();
    c.data.write_csv(&mut csv).unwrap();
    let from_csv = SubbandData::read_csv(csv.as_slice()).unwrap();
    let mut bin = Vec::new();
    c.data.write_binary(&mut bin).unwrap();
    let from_bin = SubbandData::read_binary(bin.as_slice()).unwrap();
    assert_eq!(from_csv.y, c.data.y);
    assert_eq!(from_bin.y, c.data.y);

    let a = estimate_doa(&c.data, c.gamma, &EstimatorConfig::default()).unwrap();
    let b = estimate_doa(&from_bin, c.gamma, &EstimatorConfig::default()).unwrap();
    assert_eq!(a.thetas, b.thetas);
    let top = a.strongest(2);
    assert!((top[0] + 20.0).abs() < 0.5 && (top[1] - 25.0).abs() < 0.5, "{top:?}");
}

#[test]
fn solver_certificate_matches_feasibility_search() {
    let c = case(&[0.0, 30.0], 0.05, 9);
    let focusing = FocusingSet::new(c.data.alphas(), 16).unwrap();
    let program = assemble_dual_sdp(&ConicProblem::new(c.data.y.clone(), focusing, c.gamma).unwrap()).unwrap();
    let sol = solve(&program, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let shrunk = &sol.hbar * num_complex::Complex64::new(0.99, 0.0);
    let cert = gram_certificate(&shrunk, &GramConfig::default()).unwrap();
    assert!(cert.is_valid(1e-9), "{} {}", cert.min_eigenvalue, cert.trace_residual);
}

#[test]
fn both_estimators_agree_on_well_separated_sources() {
    let c = case(&[-30.0, 10.0, 45.0], 0.02, 17);
    let wgs = estimate_doa(&c.data, c.gamma, &EstimatorConfig::default()).unwrap().strongest(3);
    let rss = rss_estimate(&c.data, &RssConfig::new(3, vec![-29.0, 11.0, 44.0], 0.01).unwrap()).unwrap();
    for (a, b) in wgs.iter().zip(&rss) {
        assert!((a - b).abs() < 1.5, "{wgs:?} {rss:?}");
    }
}
