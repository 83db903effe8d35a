//! Deterministic Cramér-Rao bounds for the multipath snapshot model.
//!
//! The joint bound treats (θ, τ, β) as unknown constants and comes from
//! the information blocks
//!
//! ```text
//! Γ₁ = Re{(ẼᴴP⊥Ẽ) ⊙ β*βᵀ},  Γ₂ = Re{(ẼᴴP⊥Λ̃) ⊙ β*βᵀ},  Γ₃ = Re{(Λ̃ᴴP⊥Λ̃) ⊙ β*βᵀ}
//! ```
//!
//! where D̃, Ẽ, Λ̃ stack the model response and its θ/τ derivatives over
//! bins and P⊥ projects onto the complement of span D̃. The azimuth-only
//! bound replaces the delay structure with unstructured per-bin sources.
//! Closed forms cover the equal-delay and single-path special cases.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::grid::SubcarrierGrid;
use crate::linalg;
use crate::model::{PathSet, SignalSpectrum};

/// Model response and its parameter derivatives, stacked over active bins:
/// row block k (of M rows) holds the bin-k quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedJacobians {
    /// D̃: column l is S(ω_k) a(θ_l) e^{−jω_k τ_l}, stacked over k.
    pub response: DMatrix<Complex64>,
    /// Ẽ = ∂D̃/∂θ: column l is S(ω_k) a'(θ_l) e^{−jω_k τ_l}.
    pub d_theta: DMatrix<Complex64>,
    /// Λ̃ = ∂D̃/∂τ: column l is S(ω_k) (−jω_k) a(θ_l) e^{−jω_k τ_l}.
    pub d_tau: DMatrix<Complex64>,
}

/// Joint and azimuth-only bounds at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbReport {
    /// Joint-bound azimuth block, rad².
    pub crb_theta_joint: DMatrix<f64>,
    /// Joint-bound delay block, s².
    pub crb_tau_joint: DMatrix<f64>,
    /// Azimuth-only bound, rad².
    pub crb_theta_only: DMatrix<f64>,
    pub sigma2: f64,
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "noise variance must be finite and non-negative, got {sigma2}"
        )));
    }
    Ok(())
}

fn check_spectrum(grid: &SubcarrierGrid, spectrum: &SignalSpectrum) -> Result<()> {
    if spectrum.len() != grid.n_active() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} values, grid has {} active bins",
            spectrum.len(),
            grid.n_active()
        )));
    }
    Ok(())
}

/// Builds D̃, Ẽ, Λ̃ and verifies that D̃ has full column rank.
pub fn build_stacked_jacobians(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
) -> Result<StackedJacobians> {
    check_spectrum(grid, spectrum)?;
    let m = geometry.n_sensors();
    let kk = grid.n_active();
    let l = paths.len();
    let steer: Vec<_> = paths
        .paths()
        .iter()
        .map(|p| geometry.steering_vector(p.theta_rad))
        .collect();
    let dsteer: Vec<_> = paths
        .paths()
        .iter()
        .map(|p| geometry.steering_derivative(p.theta_rad))
        .collect();
    let mut response = DMatrix::zeros(m * kk, l);
    let mut d_theta = DMatrix::zeros(m * kk, l);
    let mut d_tau = DMatrix::zeros(m * kk, l);
    for (ki, &w) in grid.omegas().iter().enumerate() {
        let s = spectrum.values()[ki];
        let jw = Complex64::new(0.0, -w);
        for (li, p) in paths.paths().iter().enumerate() {
            let c = s * Complex64::from_polar(1.0, -w * p.tau_s);
            for mi in 0..m {
                response[(ki * m + mi, li)] = c * steer[li][mi];
                d_theta[(ki * m + mi, li)] = c * dsteer[li][mi];
                d_tau[(ki * m + mi, li)] = c * jw * steer[li][mi];
            }
        }
    }
    // Fail early on coincident (θ, τ) pairs; the factor itself is rebuilt
    // where the projector is needed.
    linalg::projector_basis(&response, |d| {
        Error::RankDeficientResponse(format!("paths coincide ({d})"))
    })?;
    Ok(StackedJacobians {
        response,
        d_theta,
        d_tau,
    })
}

/// Entrywise Re{g ⊙ β*βᵀ}.
fn gain_weighted_real(g: &DMatrix<Complex64>, betas: &[Complex64]) -> DMatrix<f64> {
    DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| {
        (g[(i, j)] * betas[i].conj() * betas[j]).re
    })
}

/// Joint bound: (azimuth block, delay block), each L×L.
pub fn crb_joint(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
    sigma2: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_sigma2(sigma2)?;
    let jac = build_stacked_jacobians(geometry, grid, spectrum, paths)?;
    let q = linalg::projector_basis(&jac.response, |d| {
        Error::RankDeficientResponse(format!("paths coincide ({d})"))
    })?;
    let pe = linalg::project_out(&q, &jac.d_theta);
    let pl = linalg::project_out(&q, &jac.d_tau);
    let betas = paths.betas();
    let g1 = gain_weighted_real(&pe.ad_mul(&pe), &betas);
    let g2 = gain_weighted_real(&pe.ad_mul(&pl), &betas);
    let g3 = gain_weighted_real(&pl.ad_mul(&pl), &betas);

    let inv3 = linalg::invert_sym_positive(&g3, "delay information block")?;
    let schur_theta = &g1 - &g2 * inv3 * g2.transpose();
    let crb_theta =
        linalg::invert_sym_positive(&schur_theta, "azimuth Schur complement")? * (sigma2 / 2.0);

    let inv1 = linalg::invert_sym_positive(&g1, "azimuth information block")?;
    let schur_tau = &g3 - g2.transpose() * inv1 * &g2;
    let crb_tau =
        linalg::invert_sym_positive(&schur_tau, "delay Schur complement")? * (sigma2 / 2.0);
    Ok((crb_theta, crb_tau))
}

/// Azimuth-only bound: the delay structure is dropped and per-bin source
/// amplitudes c(k) are nuisance parameters; their empirical correlation
/// enters through R_c = (1/K) Σ_k c*(k)cᵀ(k).
pub fn crb_doa_only(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
    sigma2: f64,
) -> Result<DMatrix<f64>> {
    check_sigma2(sigma2)?;
    check_spectrum(grid, spectrum)?;
    let thetas = paths.thetas();
    let a = geometry.steering_matrix(&thetas);
    let psi = geometry.steering_derivative_matrix(&thetas);
    let q = linalg::projector_basis(&a, |d| {
        Error::RankDeficientSteering(format!("angles coincide ({d})"))
    })?;
    let ppsi = linalg::project_out(&q, &psi);
    let g = ppsi.ad_mul(&ppsi);

    let l = paths.len();
    let kk = grid.n_active();
    let mut c = DMatrix::zeros(l, kk);
    for (ki, &w) in grid.omegas().iter().enumerate() {
        let s = spectrum.values()[ki];
        for (li, p) in paths.paths().iter().enumerate() {
            c[(li, ki)] = p.beta * s * Complex64::from_polar(1.0, -w * p.tau_s);
        }
    }
    let r_c = c.conjugate() * c.transpose() / Complex64::new(kk as f64, 0.0);
    let minfo = DMatrix::from_fn(l, l, |i, j| (g[(i, j)] * r_c[(i, j)]).re);
    let inv = linalg::invert_sym_positive(&minfo, "azimuth-only information matrix")?;
    Ok(inv * (sigma2 / (2.0 * kk as f64)))
}

/// Closed-form azimuth bound when every path has the same delay:
/// (σ² / 2Σ|S|²) [Re{(ΨᴴP⊥_AΨ) ⊙ β*βᵀ}]⁻¹.
pub fn crb_equal_delay_closed_form(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
    sigma2: f64,
) -> Result<DMatrix<f64>> {
    check_sigma2(sigma2)?;
    check_spectrum(grid, spectrum)?;
    let taus = paths.taus();
    let spread = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - taus.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > 1e-15 {
        return Err(Error::UnequalDelays(format!(
            "delays span {spread:.3e} s"
        )));
    }
    let thetas = paths.thetas();
    let a = geometry.steering_matrix(&thetas);
    let psi = geometry.steering_derivative_matrix(&thetas);
    let q = linalg::projector_basis(&a, |d| {
        Error::RankDeficientSteering(format!("angles coincide ({d})"))
    })?;
    let ppsi = linalg::project_out(&q, &psi);
    let minfo = gain_weighted_real(&ppsi.ad_mul(&ppsi), &paths.betas());
    let inv = linalg::invert_sym_positive(&minfo, "equal-delay information matrix")?;
    Ok(inv * (sigma2 / (2.0 * spectrum.total_power())))
}

/// Closed-form delay variance bound for a single path:
/// σ²Σ|S_k|² / (2|β|²‖a(θ)‖² ΣΣ ω_k(ω_k−ω_n)|S_k|²|S_n|²).
pub fn crb_single_path_td_closed_form(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    beta1: Complex64,
    theta1: f64,
    sigma2: f64,
) -> Result<f64> {
    check_sigma2(sigma2)?;
    check_spectrum(grid, spectrum)?;
    if !theta1.is_finite() || !beta1.re.is_finite() || !beta1.im.is_finite() {
        return Err(Error::InvalidPaths("non-finite path parameters".into()));
    }
    if beta1.norm_sqr() == 0.0 {
        return Err(Error::DelayUnidentifiable("path gain is zero".into()));
    }
    let powers: Vec<f64> = spectrum.values().iter().map(|s| s.norm_sqr()).collect();
    let omegas = grid.omegas();
    let mut dsum = 0.0;
    for (k, &wk) in omegas.iter().enumerate() {
        for (n, &wn) in omegas.iter().enumerate() {
            dsum += wk * (wk - wn) * powers[k] * powers[n];
        }
    }
    if dsum <= 0.0 {
        return Err(Error::DelayUnidentifiable(
            "spectrum occupies a single frequency".into(),
        ));
    }
    let p0 = spectrum.total_power();
    let norm2 = geometry.steering_vector(theta1).norm_squared();
    Ok(sigma2 * p0 / (2.0 * beta1.norm_sqr() * norm2 * dsum))
}

/// Smallest eigenvalue of (azimuth-only bound − joint azimuth bound);
/// nonnegative up to rounding when the ordering between the two bounds
/// holds.
pub fn check_bound_ordering(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
    sigma2: f64,
) -> Result<f64> {
    let only = crb_doa_only(geometry, grid, spectrum, paths, sigma2)?;
    let (joint, _) = crb_joint(geometry, grid, spectrum, paths, sigma2)?;
    let diff = only - joint;
    Ok(linalg::symmetric_eig_range(&diff).0)
}

/// Joint and azimuth-only bounds bundled for reporting.
pub fn crb_report(
    geometry: &ArrayGeometry,
    grid: &SubcarrierGrid,
    spectrum: &SignalSpectrum,
    paths: &PathSet,
    sigma2: f64,
) -> Result<CrbReport> {
    let (crb_theta_joint, crb_tau_joint) = crb_joint(geometry, grid, spectrum, paths, sigma2)?;
    let crb_theta_only = crb_doa_only(geometry, grid, spectrum, paths, sigma2)?;
    Ok(CrbReport {
        crb_theta_joint,
        crb_tau_joint,
        crb_theta_only,
        sigma2,
    })
}
