//! JSON experiment configuration: schema types, strict parsing with
//! path-qualified diagnostics, and conversion to runnable scenarios.
//!
//! Angles are configured in degrees and delays in nanoseconds; the
//! conversion to radians and seconds happens here and nowhere else.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::aml::AmlConfig;
use crate::csi_io::{MAX_ENTRIES, MAX_SENSORS, MAX_TOTAL_BINS};
use crate::doa_only::DoaOnlyConfig;
use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::grid::SubcarrierGrid;
use crate::mc::{
    EstimatorChoice, GainSpec, Scenario, ScenarioPath, SweepSpec, SweepVariable,
};
use crate::model::{NoiseSpec, SignalSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    Uca,
    Ula,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub kind: ArrayKind,
    pub m: usize,
    /// Circle radius in carrier wavelengths; circular arrays only.
    #[serde(default)]
    pub radius_lambda: Option<f64>,
    /// Element spacing in carrier wavelengths; linear arrays only.
    #[serde(default)]
    pub spacing_lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub carrier_hz: f64,
    pub spacing_hz: f64,
    pub total_bins: usize,
    /// Defaults to every bin.
    #[serde(default)]
    pub active_bins: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSection {
    pub theta_deg: f64,
    pub tau_ns: f64,
    #[serde(default)]
    pub beta_re: Option<f64>,
    #[serde(default)]
    pub beta_im: Option<f64>,
    #[serde(default)]
    pub beta_abs: Option<f64>,
    #[serde(default)]
    pub random_phase: Option<bool>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Aml,
    DoaOnly,
    Both,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AmlOverrides {
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub theta_grid_deg: Option<f64>,
    #[serde(default)]
    pub tau_grid_ns: Option<f64>,
    #[serde(default)]
    pub refine_tol_theta_deg: Option<f64>,
    #[serde(default)]
    pub refine_tol_tau_ns: Option<f64>,
    #[serde(default)]
    pub converge_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DoaOnlyOverrides {
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub theta_grid_deg: Option<f64>,
    #[serde(default)]
    pub refine_tol_theta_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub kind: EstimatorKind,
    #[serde(default)]
    pub aml: Option<AmlOverrides>,
    #[serde(default)]
    pub doa_only: Option<DoaOnlyOverrides>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariableName {
    SnrDb,
    DeltaTheta,
    DeltaTau,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariableName,
    pub values: Vec<f64>,
}

/// Parsed configuration document; `to_scenario`/`to_sweep_spec` perform
/// the semantic checks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub array: ArraySection,
    pub grid: GridSection,
    #[serde(default)]
    pub spectrum: Option<Vec<ComplexValue>>,
    pub paths: Vec<PathSection>,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub estimator: Option<EstimatorSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parses a JSON document; schema violations name the offending key path.
pub fn parse_config_str(text: &str) -> Result<CliConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::InvalidConfig(inner.to_string())
        } else {
            Error::InvalidConfig(format!("{path}: {inner}"))
        }
    })
}

pub fn read_config_file(path: &Path) -> Result<CliConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::IoAt {
        path: path.to_owned(),
        source,
    })?;
    parse_config_str(&text)
}

impl ArraySection {
    pub fn build(&self) -> Result<ArrayGeometry> {
        if self.m > MAX_SENSORS {
            return Err(Error::InvalidConfig(format!(
                "array.m {} exceeds {MAX_SENSORS}",
                self.m
            )));
        }
        match self.kind {
            ArrayKind::Uca => {
                if self.spacing_lambda.is_some() {
                    return Err(Error::InvalidConfig(
                        "array.spacing_lambda applies to linear arrays only".into(),
                    ));
                }
                let r = self.radius_lambda.ok_or_else(|| {
                    Error::InvalidConfig("array.radius_lambda is required for circular arrays".into())
                })?;
                ArrayGeometry::uca(self.m, r)
            }
            ArrayKind::Ula => {
                if self.radius_lambda.is_some() {
                    return Err(Error::InvalidConfig(
                        "array.radius_lambda applies to circular arrays only".into(),
                    ));
                }
                let d = self.spacing_lambda.ok_or_else(|| {
                    Error::InvalidConfig("array.spacing_lambda is required for linear arrays".into())
                })?;
                ArrayGeometry::ula(self.m, d)
            }
        }
    }
}

impl GridSection {
    pub fn build(&self) -> Result<SubcarrierGrid> {
        if self.total_bins > MAX_TOTAL_BINS {
            return Err(Error::InvalidConfig(format!(
                "grid.total_bins {} exceeds {MAX_TOTAL_BINS}",
                self.total_bins
            )));
        }
        match &self.active_bins {
            Some(bins) => SubcarrierGrid::new(
                self.carrier_hz,
                self.spacing_hz,
                self.total_bins,
                bins.clone(),
            ),
            None => SubcarrierGrid::all_bins(self.carrier_hz, self.spacing_hz, self.total_bins),
        }
    }
}

impl PathSection {
    fn gain(&self, index: usize) -> Result<GainSpec> {
        let fixed = self.beta_re.is_some() || self.beta_im.is_some();
        let random = self.random_phase.unwrap_or(false);
        match (fixed, self.beta_abs, random) {
            (true, None, false) => Ok(GainSpec::Fixed(Complex64::new(
                self.beta_re.unwrap_or(0.0),
                self.beta_im.unwrap_or(0.0),
            ))),
            (false, Some(abs), true) => Ok(GainSpec::RandomPhase { magnitude: abs }),
            (false, Some(abs), false) => Ok(GainSpec::Fixed(Complex64::new(abs, 0.0))),
            (false, None, _) => Err(Error::InvalidConfig(format!(
                "paths[{index}]: gain requires beta_re/beta_im or beta_abs"
            ))),
            (true, Some(_), _) => Err(Error::InvalidConfig(format!(
                "paths[{index}]: beta_re/beta_im and beta_abs are mutually exclusive"
            ))),
            (true, None, true) => Err(Error::InvalidConfig(format!(
                "paths[{index}]: random_phase requires beta_abs, not beta_re/beta_im"
            ))),
        }
    }
}

impl NoiseSection {
    fn build(&self) -> Result<NoiseSpec> {
        match (self.snr_db, self.sigma2) {
            (Some(snr), None) => Ok(NoiseSpec::SnrDb(snr)),
            (None, Some(s)) => Ok(NoiseSpec::Sigma2(s)),
            (None, None) => Err(Error::InvalidConfig(
                "noise: either snr_db or sigma2 is required".into(),
            )),
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "noise: snr_db and sigma2 are mutually exclusive".into(),
            )),
        }
    }
}

impl AmlOverrides {
    fn apply(&self, base: &mut AmlConfig) {
        if let Some(v) = self.max_iterations {
            base.max_iterations = v;
        }
        if let Some(v) = self.theta_grid_deg {
            base.theta_grid_rad = v.to_radians();
        }
        if let Some(v) = self.tau_grid_ns {
            base.tau_grid_s = v * 1e-9;
        }
        if let Some(v) = self.refine_tol_theta_deg {
            base.refine_tol_theta_rad = v.to_radians();
        }
        if let Some(v) = self.refine_tol_tau_ns {
            base.refine_tol_tau_s = v * 1e-9;
        }
        if let Some(v) = self.converge_tol {
            base.converge_tol = v;
        }
    }
}

impl DoaOnlyOverrides {
    fn apply(&self, base: &mut DoaOnlyConfig) {
        if let Some(v) = self.max_iterations {
            base.max_iterations = v;
        }
        if let Some(v) = self.theta_grid_deg {
            base.theta_grid_rad = v.to_radians();
        }
        if let Some(v) = self.refine_tol_theta_deg {
            base.refine_tol_theta_rad = v.to_radians();
        }
    }
}

impl CliConfig {
    /// Everything needed to run trials; rejects inconsistent sections.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let geometry = self.array.build()?;
        let grid = self.grid.build()?;
        if geometry.n_sensors() * grid.n_active() > MAX_ENTRIES {
            return Err(Error::InvalidConfig(format!(
                "{}x{} snapshot exceeds {MAX_ENTRIES} entries",
                geometry.n_sensors(),
                grid.n_active()
            )));
        }
        let spectrum = match &self.spectrum {
            Some(values) => {
                if values.len() != grid.n_active() {
                    return Err(Error::InvalidConfig(format!(
                        "spectrum has {} values, grid has {} active bins",
                        values.len(),
                        grid.n_active()
                    )));
                }
                SignalSpectrum::new(
                    values
                        .iter()
                        .map(|v| Complex64::new(v.re, v.im))
                        .collect(),
                )?
            }
            None => SignalSpectrum::ones(grid.n_active())?,
        };
        let paths = self
            .paths
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok(ScenarioPath {
                    theta_rad: p.theta_deg.to_radians(),
                    tau_s: p.tau_ns * 1e-9,
                    gain: p.gain(i)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let noise = match &self.noise {
            Some(section) => section.build()?,
            None => NoiseSpec::Sigma2(0.0),
        };
        let kind = self.estimator.map_or(EstimatorKind::Aml, |e| e.kind);
        let estimator = match kind {
            EstimatorKind::Aml => EstimatorChoice::Aml,
            EstimatorKind::DoaOnly => EstimatorChoice::DoaOnly,
            EstimatorKind::Both => EstimatorChoice::Both,
        };
        let mut aml = AmlConfig::new(paths.len());
        let mut doa_only = DoaOnlyConfig::new(paths.len());
        if let Some(section) = &self.estimator {
            if let Some(o) = &section.aml {
                o.apply(&mut aml);
            }
            if let Some(o) = &section.doa_only {
                o.apply(&mut doa_only);
            }
        }
        let scenario = Scenario {
            geometry,
            grid,
            spectrum,
            paths,
            noise,
            estimator,
            aml,
            doa_only,
            n_trials: self.trials.unwrap_or(100),
            master_seed: self.seed.unwrap_or(1),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Scenario plus sweep section; fails when the document has no sweep.
    pub fn to_sweep_spec(&self) -> Result<SweepSpec> {
        let section = self.sweep.as_ref().ok_or_else(|| {
            Error::InvalidConfig("sweep section is required for this command".into())
        })?;
        let variable = match section.variable {
            SweepVariableName::SnrDb => SweepVariable::SnrDb,
            SweepVariableName::DeltaTheta => SweepVariable::DeltaThetaDeg,
            SweepVariableName::DeltaTau => SweepVariable::DeltaTauNs,
        };
        let spec = SweepSpec {
            scenario: self.to_scenario()?,
            variable,
            values: section.values.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}
