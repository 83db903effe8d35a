//! Multipath signal model and CSI snapshot synthesis.
//!
//! The frequency-domain snapshot at active bin k is
//!
//! ```text
//! x(k) = Σ_l β_l a(θ_l) S(ω_k) exp(−j ω_k τ_l) + w(k)
//! ```
//!
//! with w(k) circular complex Gaussian, variance σ² per element
//! (σ²/2 per real and imaginary part).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::grid::SubcarrierGrid;

/// Known transmit spectrum S(ω_k) on the active bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpectrum {
    values: Vec<Complex64>,
}

impl SignalSpectrum {
    /// Values must be finite and at least one must be nonzero.
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("spectrum has no bins".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidSpectrum(format!(
                    "non-finite value at position {i}"
                )));
            }
        }
        if values.iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(Error::InvalidSpectrum("all spectrum values are zero".into()));
        }
        Ok(Self { values })
    }

    /// Flat unit spectrum, the usual choice for equalized training symbols.
    pub fn ones(k: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(1.0, 0.0); k])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Σ_k |S(ω_k)|².
    pub fn total_power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// One propagation path: azimuth (radians), delay (seconds), complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub theta_rad: f64,
    pub tau_s: f64,
    pub beta: Complex64,
}

/// Ordered collection of paths. Angles and delays must be finite; delays
/// must be non-negative. Distinctness of the (θ, τ) pairs is a property of
/// particular solvers and is checked where it matters.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidPaths("path set is empty".into()));
        }
        for (l, p) in paths.iter().enumerate() {
            if !p.theta_rad.is_finite() {
                return Err(Error::InvalidPaths(format!("path {l}: non-finite azimuth")));
            }
            if !p.tau_s.is_finite() || p.tau_s < 0.0 {
                return Err(Error::InvalidPaths(format!(
                    "path {l}: delay must be finite and non-negative, got {}",
                    p.tau_s
                )));
            }
            if !p.beta.re.is_finite() || !p.beta.im.is_finite() {
                return Err(Error::InvalidPaths(format!("path {l}: non-finite gain")));
            }
        }
        Ok(Self { paths })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.theta_rad).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.tau_s).collect()
    }

    pub fn betas(&self) -> Vec<Complex64> {
        self.paths.iter().map(|p| p.beta).collect()
    }
}

/// An M × K frequency-domain snapshot matrix together with the geometry and
/// grid it was measured on. Column k is the array snapshot at active bin k.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMatrix {
    geometry: ArrayGeometry,
    grid: SubcarrierGrid,
    data: DMatrix<Complex64>,
}

impl CsiMatrix {
    pub fn new(
        geometry: ArrayGeometry,
        grid: SubcarrierGrid,
        data: DMatrix<Complex64>,
    ) -> Result<Self> {
        if data.nrows() != geometry.n_sensors() || data.ncols() != grid.n_active() {
            return Err(Error::DimensionMismatch(format!(
                "snapshot matrix is {}x{}, expected {} sensors x {} active bins",
                data.nrows(),
                data.ncols(),
                geometry.n_sensors(),
                grid.n_active()
            )));
        }
        Ok(Self {
            geometry,
            grid,
            data,
        })
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn grid(&self) -> &SubcarrierGrid {
        &self.grid
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// Number of sensors M.
    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }

    /// Number of active bins K.
    pub fn n_bins(&self) -> usize {
        self.data.ncols()
    }

    /// Mean |x|² per matrix element.
    pub fn mean_power(&self) -> f64 {
        let n = (self.data.nrows() * self.data.ncols()) as f64;
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / n
    }
}

/// Noiseless snapshot matrix for the given paths.
pub fn synthesize_csi(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
) -> Result<CsiMatrix> {
    if spectrum.len() != grid.n_active() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} values, grid has {} active bins",
            spectrum.len(),
            grid.n_active()
        )));
    }
    let m = geometry.n_sensors();
    let k = grid.n_active();
    let steerings: Vec<DVector<Complex64>> = paths
        .paths()
        .iter()
        .map(|p| geometry.steering_vector(p.theta_rad))
        .collect();
    let mut data = DMatrix::<Complex64>::zeros(m, k);
    for (ki, &w) in grid.omegas().iter().enumerate() {
        let s = spectrum.values()[ki];
        let mut col = data.column_mut(ki);
        for (p, a) in paths.paths().iter().zip(&steerings) {
            let c = p.beta * s * Complex64::from_polar(1.0, -w * p.tau_s);
            col.axpy(c, a, Complex64::new(1.0, 0.0));
        }
    }
    CsiMatrix::new(geometry.clone(), grid.clone(), data)
}

/// Noise level, either an explicit per-element variance or an SNR in dB
/// relative to the mean power of a noiseless snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Sigma2(f64),
    SnrDb(f64),
}

impl NoiseSpec {
    /// Per-element noise variance σ² implied by this spec for the given
    /// noiseless snapshot.
    pub fn sigma2_for(&self, noiseless: &CsiMatrix) -> Result<f64> {
        match *self {
            NoiseSpec::Sigma2(s) => {
                if !s.is_finite() || s < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "noise variance must be finite and non-negative, got {s}"
                    )));
                }
                Ok(s)
            }
            NoiseSpec::SnrDb(db) => {
                if !db.is_finite() {
                    return Err(Error::InvalidConfig("SNR must be finite".into()));
                }
                Ok(noiseless.mean_power() / 10f64.powf(db / 10.0))
            }
        }
    }
}

/// Adds circular complex Gaussian noise of variance `sigma2` per element.
/// Deterministic in `seed`; `sigma2 = 0` returns the input unchanged.
pub fn add_noise(csi: &CsiMatrix, sigma2: f64, seed: u64) -> Result<CsiMatrix> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be finite and non-negative, got {sigma2}"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(csi.clone());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (sigma2 / 2.0).sqrt())
        .expect("standard deviation is finite and positive");
    let mut data = csi.data().clone();
    // Column-major traversal; the draw order is part of the determinism
    // contract for a fixed seed.
    for z in data.iter_mut() {
        let re = normal.sample(&mut rng);
        let im = normal.sample(&mut rng);
        *z += Complex64::new(re, im);
    }
    CsiMatrix::new(csi.geometry().clone(), csi.grid().clone(), data)
}
