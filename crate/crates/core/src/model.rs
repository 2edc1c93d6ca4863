//! Array geometry, steering vectors and wideband scene synthesis.
//!
//! Angles are degrees at the API boundary. A spatial frequency `f` relates to
//! an arrival angle through `f = sin(theta) / 2`, so a plane wave observed in
//! the subband with ratio `alpha = omega / omega1` has the steering vector
//! `a(alpha * f)` with entries `exp(-i 2 pi alpha f (m - 1))`.

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, domain_err, Error, Result};
use crate::{CMat, CVec};

/// Uniform linear array with half-wavelength spacing at the highest subband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrayConfigRepr", into = "ArrayConfigRepr")]
pub struct ArrayConfig {
    m: usize,
    c: f64,
    omega1: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct ArrayConfigRepr {
    m: usize,
    c: f64,
    omega1: f64,
}

impl TryFrom<ArrayConfigRepr> for ArrayConfig {
    type Error = Error;
    fn try_from(r: ArrayConfigRepr) -> Result<Self> {
        ArrayConfig::new(r.m, r.c, r.omega1)
    }
}

impl From<ArrayConfig> for ArrayConfigRepr {
    fn from(a: ArrayConfig) -> Self {
        ArrayConfigRepr { m: a.m, c: a.c, omega1: a.omega1 }
    }
}

impl ArrayConfig {
    pub fn new(m: usize, c: f64, omega1: f64) -> Result<Self> {
        if m < 2 {
            return Err(domain_err!("array needs at least 2 sensors, got {m}"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(domain_err!("propagation speed must be positive, got {c}"));
        }
        if !(omega1 > 0.0 && omega1.is_finite()) {
            return Err(domain_err!("omega1 must be positive, got {omega1}"));
        }
        Ok(Self { m, c, omega1, d: PI * c / omega1 })
    }

    pub fn sensors(&self) -> usize {
        self.m
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    /// Inter-sensor spacing, half the wavelength at `omega1`.
    pub fn spacing(&self) -> f64 {
        self.d
    }
}

/// Normalized spatial frequency in `[-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SpatialFrequency(f64);

impl SpatialFrequency {
    pub fn new(f: f64) -> Result<Self> {
        if !(-0.5..=0.5).contains(&f) {
            return Err(domain_err!("spatial frequency {f} outside [-1/2, 1/2]"));
        }
        Ok(Self(f))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SpatialFrequency {
    type Error = Error;
    fn try_from(f: f64) -> Result<Self> {
        Self::new(f)
    }
}

impl From<SpatialFrequency> for f64 {
    fn from(f: SpatialFrequency) -> f64 {
        f.0
    }
}

pub fn theta_to_f(theta_deg: f64) -> Result<SpatialFrequency> {
    if !(theta_deg > -90.0 && theta_deg < 90.0) {
        return Err(domain_err!("angle {theta_deg} deg outside (-90, 90)"));
    }
    Ok(SpatialFrequency(0.5 * theta_deg.to_radians().sin()))
}

pub fn f_to_theta(f: SpatialFrequency) -> f64 {
    (2.0 * f.0).clamp(-1.0, 1.0).asin().to_degrees()
}

/// Convenience wrapper over [`f_to_theta`] for raw values.
pub fn f_value_to_theta(f: f64) -> Result<f64> {
    SpatialFrequency::new(f).map(f_to_theta)
}

/// `a(f)`, entry `m` (zero based) equal to `exp(-i 2 pi f m)`.
pub fn steering_vector(f: f64, m: usize) -> CVec {
    DVector::from_fn(m, |i, _| Complex64::cis(-2.0 * PI * f * i as f64))
}

/// Subband frequencies in decreasing order together with their ratios to the first one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubbandGridRepr", into = "SubbandGridRepr")]
pub struct SubbandGrid {
    omegas: Vec<f64>,
    alphas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SubbandGridRepr {
    omegas: Vec<f64>,
}

impl TryFrom<SubbandGridRepr> for SubbandGrid {
    type Error = Error;
    fn try_from(r: SubbandGridRepr) -> Result<Self> {
        SubbandGrid::new(r.omegas)
    }
}

impl From<SubbandGrid> for SubbandGridRepr {
    fn from(g: SubbandGrid) -> Self {
        SubbandGridRepr { omegas: g.omegas }
    }
}

impl SubbandGrid {
    /// Builds the grid from strictly decreasing positive frequencies.
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(domain_err!("subband grid needs at least one frequency"));
        }
        if omegas.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(domain_err!("subband frequencies must be positive"));
        }
        if omegas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(domain_err!("subband frequencies must be strictly decreasing"));
        }
        let top = omegas[0];
        let alphas = omegas.iter().map(|w| w / top).collect();
        Ok(Self { omegas, alphas })
    }

    /// The DFT bins `first_bin, first_bin - 1, ...` of an `dft_size`-point DFT,
    /// in radians per sample.
    pub fn from_dft_bins(dft_size: usize, first_bin: usize, count: usize) -> Result<Self> {
        if count == 0 || count > first_bin {
            return Err(Error::Config(format!(
                "cannot take {count} bins below bin {first_bin}"
            )));
        }
        if 2 * first_bin > dft_size {
            return Err(Error::Config(format!(
                "bin {first_bin} is above Nyquist for a {dft_size}-point DFT"
            )));
        }
        let omegas = (0..count)
            .map(|i| 2.0 * PI * (first_bin - i) as f64 / dft_size as f64)
            .collect();
        Self::new(omegas)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// The `M x J` measurement matrix with the subbands its columns belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandData {
    pub y: CMat,
    pub grid: SubbandGrid,
}

impl SubbandData {
    pub fn new(y: CMat, grid: SubbandGrid) -> Result<Self> {
        if y.ncols() != grid.len() {
            return Err(dim_err!(
                "measurement has {} columns but grid has {} subbands",
                y.ncols(),
                grid.len()
            ));
        }
        Ok(Self { y, grid })
    }

    pub fn sensors(&self) -> usize {
        self.y.nrows()
    }

    pub fn subbands(&self) -> usize {
        self.y.ncols()
    }

    pub fn alphas(&self) -> &[f64] {
        self.grid.alphas()
    }

    pub fn omegas(&self) -> &[f64] {
        self.grid.omegas()
    }
}

/// Sources, their per-subband spectra and the additive noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidebandScene {
    pub angles_deg: Vec<f64>,
    /// `K x J` source spectra `s_k(omega_j)`.
    pub spectra: CMat,
    /// Total variance of each complex noise entry.
    pub noise_variance: f64,
    pub seed: u64,
}

impl WidebandScene {
    pub fn new(
        angles_deg: Vec<f64>,
        spectra: CMat,
        noise_variance: f64,
        seed: u64,
    ) -> Result<Self> {
        if spectra.nrows() != angles_deg.len() {
            return Err(dim_err!(
                "{} angles but {} spectrum rows",
                angles_deg.len(),
                spectra.nrows()
            ));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(domain_err!("noise variance must be >= 0, got {noise_variance}"));
        }
        for (i, a) in angles_deg.iter().enumerate() {
            theta_to_f(*a)?;
            if angles_deg[..i].iter().any(|b| b == a) {
                return Err(domain_err!("duplicate source angle {a}"));
            }
        }
        Ok(Self { angles_deg, spectra, noise_variance, seed })
    }

    pub fn sources(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn spatial_frequencies(&self) -> Vec<f64> {
        self.angles_deg
            .iter()
            .map(|a| 0.5 * a.to_radians().sin())
            .collect()
    }
}

/// Noise-free array response and the noise realization of one synthesis.
#[derive(Debug, Clone)]
pub struct SceneParts {
    pub clean: CMat,
    pub noise: CMat,
}

impl SceneParts {
    pub fn measurement(&self) -> CMat {
        &self.clean + &self.noise
    }
}

/// Circular complex Gaussian matrix with total per-entry variance `variance`.
pub fn complex_gaussian(rows: usize, cols: usize, variance: f64, rng: &mut ChaCha8Rng) -> CMat {
    let s = (variance / 2.0).sqrt();
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(s * re, s * im)
    })
}

/// Noise variance that puts `signal_energy` at `snr_db` over an `m x j` matrix.
pub fn noise_variance_for_snr(signal_energy: f64, m: usize, j: usize, snr_db: f64) -> f64 {
    signal_energy / ((m * j) as f64 * 10f64.powf(snr_db / 10.0))
}

pub fn synthesize_parts(
    cfg: &ArrayConfig,
    scene: &WidebandScene,
    grid: &SubbandGrid,
) -> Result<SceneParts> {
    let (m, j) = (cfg.sensors(), grid.len());
    if scene.spectra.ncols() != j {
        return Err(dim_err!(
            "spectra have {} columns but grid has {} subbands",
            scene.spectra.ncols(),
            j
        ));
    }
    let fs = scene.spatial_frequencies();
    let mut clean = CMat::zeros(m, j);
    for (col, &alpha) in grid.alphas().iter().enumerate() {
        for (k, &f) in fs.iter().enumerate() {
            let a = steering_vector(alpha * f, m);
            let s = scene.spectra[(k, col)];
            for r in 0..m {
                clean[(r, col)] += a[r] * s;
            }
        }
    }
    let noise = if scene.noise_variance > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        complex_gaussian(m, j, scene.noise_variance, &mut rng)
    } else {
        CMat::zeros(m, j)
    };
    Ok(SceneParts { clean, noise })
}

/// Generates `Y(:, j) = sum_k a(alpha_j f_k) s_k(omega_j) + n(omega_j)`.
pub fn synthesize_scene(
    cfg: &ArrayConfig,
    scene: &WidebandScene,
    grid: &SubbandGrid,
) -> Result<SubbandData> {
    let parts = synthesize_parts(cfg, scene, grid)?;
    SubbandData::new(parts.measurement(), grid.clone())
}

/// Band of the discrete spectrum in radians per sample, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
}

impl Band {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && high > low && high <= PI) {
            return Err(domain_err!("band [{low}, {high}] must lie within (0, pi]"));
        }
        Ok(Self { low, high })
    }

    fn contains(&self, w: f64) -> bool {
        let tol = 1e-9;
        w >= self.low - tol && w <= self.high + tol
    }
}

/// DFT of the first `dft_size` samples of every sensor, keeping the `j`
/// highest in-band bins in decreasing frequency order.
pub fn subband_transform(
    signals: &DMatrix<f64>,
    dft_size: usize,
    band: Band,
    j: usize,
) -> Result<SubbandData> {
    let (m, t) = signals.shape();
    if dft_size == 0 || dft_size > t {
        return Err(Error::Config(format!(
            "DFT size {dft_size} needs at most {t} available samples"
        )));
    }
    let mut bins: Vec<usize> = (1..=dft_size / 2)
        .filter(|&k| band.contains(2.0 * PI * k as f64 / dft_size as f64))
        .collect();
    if bins.len() < j || j == 0 {
        return Err(Error::Config(format!(
            "band holds {} bins of a {dft_size}-point DFT, {j} requested",
            bins.len()
        )));
    }
    bins.sort_unstable_by(|a, b| b.cmp(a));
    bins.truncate(j);

    let fft = FftPlanner::new().plan_fft_forward(dft_size);
    let mut y = CMat::zeros(m, j);
    let mut buf = vec![Complex64::new(0.0, 0.0); dft_size];
    for r in 0..m {
        for (n, v) in buf.iter_mut().enumerate() {
            *v = Complex64::new(signals[(r, n)], 0.0);
        }
        fft.process(&mut buf);
        for (col, &k) in bins.iter().enumerate() {
            y[(r, col)] = buf[k];
        }
    }
    let omegas = bins
        .iter()
        .map(|&k| 2.0 * PI * k as f64 / dft_size as f64)
        .collect();
    SubbandData::new(y, SubbandGrid::new(omegas)?)
}

/// Real time-domain sensor signals for band-limited random sources.
///
/// Each source is white Gaussian noise filtered to `band` and delayed per
/// sensor by a frequency-domain phase ramp (circular over `samples`). Sensor
/// noise is real white Gaussian with variance `noise_variance`. The array's
/// `omega1` is interpreted in radians per sample.
pub fn synthesize_time_domain(
    cfg: &ArrayConfig,
    angles_deg: &[f64],
    samples: usize,
    band: Band,
    noise_variance: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if samples < 2 {
        return Err(domain_err!("need at least two samples"));
    }
    let m = cfg.sensors();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(samples);
    let inv = planner.plan_fft_inverse(samples);
    let mut out = DMatrix::<f64>::zeros(m, samples);

    for &theta in angles_deg {
        let sin_t = theta_to_f(theta)?.value() * 2.0;
        let mut spec: Vec<Complex64> = (0..samples)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
            .collect();
        fwd.process(&mut spec);
        for r in 0..m {
            // delay in samples: (m - 1) d sin(theta) / c with d = pi c / omega1
            let tau = r as f64 * PI * sin_t / cfg.omega1();
            let mut buf = vec![Complex64::new(0.0, 0.0); samples];
            for k in 1..samples {
                let signed = if 2 * k <= samples { k as f64 } else { k as f64 - samples as f64 };
                let w = 2.0 * PI * signed / samples as f64;
                if band.contains(w.abs()) {
                    buf[k] = spec[k] * Complex64::cis(-w * tau);
                }
            }
            inv.process(&mut buf);
            for n in 0..samples {
                out[(r, n)] += buf[n].re / samples as f64;
            }
        }
    }
    if noise_variance > 0.0 {
        let s = noise_variance.sqrt();
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            *v += s * g;
        }
    }
    Ok(out)
}

const CSV_MAGIC: &str = "# wgs-subbands v1";
const BIN_MAGIC: &[u8; 8] = b"WGSSUBB1";

impl SubbandData {
    /// Text form: a header naming `M`, `J` and the omegas, then one row per
    /// sensor holding interleaved real/imaginary parts.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let (m, j) = self.y.shape();
        writeln!(w, "{CSV_MAGIC}")?;
        writeln!(w, "# M={m},J={j}")?;
        let omegas: Vec<String> = self.omegas().iter().map(|v| v.to_string()).collect();
        writeln!(w, "# omegas={}", omegas.join(","))?;
        for r in 0..m {
            let row: Vec<String> = (0..j)
                .flat_map(|c| {
                    let v = self.y[(r, c)];
                    [v.re.to_string(), v.im.to_string()]
                })
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format("unexpected end of subband file".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != CSV_MAGIC {
            return Err(Error::Format("missing subband CSV header".into()));
        }
        let dims = next()?;
        let dims = dims
            .trim()
            .strip_prefix("# ")
            .ok_or_else(|| Error::Format("bad dimension line".into()))?;
        let mut m = None;
        let mut j = None;
        for part in dims.split(',') {
            match part.split_once('=') {
                Some(("M", v)) => m = v.parse::<usize>().ok(),
                Some(("J", v)) => j = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (m, j) = m
            .zip(j)
            .ok_or_else(|| Error::Format("dimension line must name M and J".into()))?;
        let omegas_line = next()?;
        let omegas = omegas_line
            .trim()
            .strip_prefix("# omegas=")
            .ok_or_else(|| Error::Format("missing omegas line".into()))?
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|e| Error::Format(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut y = CMat::zeros(m, j);
        for r in 0..m {
            let line = next()?;
            let vals = line
                .trim()
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|e| Error::Format(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 2 * j {
                return Err(Error::Format(format!(
                    "row {r} has {} values, expected {}",
                    vals.len(),
                    2 * j
                )));
            }
            for c in 0..j {
                y[(r, c)] = Complex64::new(vals[2 * c], vals[2 * c + 1]);
            }
        }
        SubbandData::new(y, SubbandGrid::new(omegas)?)
    }

    /// Little-endian binary form with the same content as the CSV.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let (m, j) = self.y.shape();
        w.write_all(BIN_MAGIC)?;
        w.write_all(&(m as u32).to_le_bytes())?;
        w.write_all(&(j as u32).to_le_bytes())?;
        for o in self.omegas() {
            w.write_all(&o.to_le_bytes())?;
        }
        for r in 0..m {
            for c in 0..j {
                let v = self.y[(r, c)];
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BIN_MAGIC {
            return Err(Error::Format("not a binary subband file".into()));
        }
        let mut u = [0u8; 4];
        r.read_exact(&mut u)?;
        let m = u32::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let j = u32::from_le_bytes(u) as usize;
        let mut f = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f)?;
            Ok(f64::from_le_bytes(f))
        };
        let omegas = (0..j).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let mut y = CMat::zeros(m, j);
        for row in 0..m {
            for c in 0..j {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                y[(row, c)] = Complex64::new(re, im);
            }
        }
        SubbandData::new(y, SubbandGrid::new(omegas)?)
    }

    /// Reads either format, chosen by the file's leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(BIN_MAGIC) {
            Self::read_binary(bytes.as_slice())
        } else {
            Self::read_csv(bytes.as_slice())
        }
    }
}
