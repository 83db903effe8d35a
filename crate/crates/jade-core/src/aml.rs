//! Alternating maximum-likelihood estimation of joint azimuth/delay
//! parameters.
//!
//! The concentrated criterion is
//!
//! ```text
//! F(θ, τ, β) = Σ_k ‖x(k) − D(k)β‖²,   D(k) = S(ω_k)[a(θ_l) e^{−jω_k τ_l}]_l
//! ```
//!
//! Each sweep solves the delay side first: the per-bin nuisance vectors
//! û(k) come from a least-squares fit against the current steering matrix,
//! each normalized row is matched against phase ramps to update τ̂_l, then
//! the roles swap and per-delay least squares yields b̂_l vectors whose
//! correlation against a(θ) updates θ̂_l. Both 1-D searches run a coarse
//! grid followed by golden-section refinement.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::grid::SubcarrierGrid;
use crate::linalg;
use crate::model::{CsiMatrix, SignalSpectrum};

/// Residual below this fraction of the total snapshot energy counts as an
/// exact fit; iteration stops immediately. Sized so that rounding in the
/// Gram solves and snapshots quantized to 10 significant digits still land
/// under it, while noise at any measurable SNR stays orders above.
const ZERO_RESIDUAL_REL: f64 = 1e-16;

/// Search and stopping parameters for the alternating estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmlConfig {
    pub n_paths: usize,
    pub max_iterations: usize,
    /// Coarse azimuth grid step over [0, 2π).
    pub theta_grid_rad: f64,
    /// Coarse delay grid step over [0, 1/spacing).
    pub tau_grid_s: f64,
    pub refine_tol_theta_rad: f64,
    pub refine_tol_tau_s: f64,
    /// Relative change of the objective between sweeps that counts as
    /// converged.
    pub converge_tol: f64,
}

impl AmlConfig {
    pub fn new(n_paths: usize) -> Self {
        Self {
            n_paths,
            max_iterations: 10,
            theta_grid_rad: 1f64.to_radians(),
            tau_grid_s: 1e-9,
            refine_tol_theta_rad: 1e-4,
            refine_tol_tau_s: 1e-11,
            converge_tol: 1e-8,
        }
    }

    pub fn validate(&self, n_sensors: usize) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("path count must be at least 1".into()));
        }
        if self.n_paths > n_sensors {
            return Err(Error::InvalidConfig(format!(
                "cannot resolve {} paths with {} sensors",
                self.n_paths, n_sensors
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        for (name, v) in [
            ("theta grid step", self.theta_grid_rad),
            ("tau grid step", self.tau_grid_s),
            ("theta refinement tolerance", self.refine_tol_theta_rad),
            ("tau refinement tolerance", self.refine_tol_tau_s),
            ("convergence tolerance", self.converge_tol),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.theta_grid_rad > TAU {
            return Err(Error::InvalidConfig(
                "theta grid step exceeds the full circle".into(),
            ));
        }
        Ok(())
    }
}

/// Final estimates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_hat_rad: Vec<f64>,
    pub tau_hat_s: Vec<f64>,
    pub beta_hat: Vec<Complex64>,
    /// Concentrated objective at the returned estimate.
    pub residual: f64,
    /// Sweeps accepted beyond the initial fit; equals max_iterations when
    /// the run stopped on the iteration cap rather than the convergence
    /// test. Zero means no sweep improved on the initializer.
    pub iterations_used: usize,
}

/// Per-bin gain/ramp coefficients: entry (l, k) is S(ω_k) e^{−jω_k τ_l},
/// so column k is the regressor vector r(k) for the delay-conditioned
/// least-squares step.
fn ramp_coefficients(
    spectrum: &SignalSpectrum,
    grid: &SubcarrierGrid,
    taus: &[f64],
) -> DMatrix<Complex64> {
    let l = taus.len();
    let k = grid.n_active();
    let mut r = DMatrix::zeros(l, k);
    for (ki, &w) in grid.omegas().iter().enumerate() {
        let s = spectrum.values()[ki];
        for (li, &tau) in taus.iter().enumerate() {
            r[(li, ki)] = s * Complex64::from_polar(1.0, -w * tau);
        }
    }
    r
}

fn check_dims(csi: &CsiMatrix, spectrum: &SignalSpectrum) -> Result<()> {
    if spectrum.len() != csi.n_bins() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} values, snapshot has {} active bins",
            spectrum.len(),
            csi.n_bins()
        )));
    }
    Ok(())
}

/// Value of the concentrated criterion Σ_k ‖x(k) − D(k)β‖² at the given
/// parameters.
pub fn concentrated_objective(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    thetas: &[f64],
    taus: &[f64],
    betas: &[Complex64],
) -> Result<f64> {
    check_dims(csi, spectrum)?;
    if thetas.len() != taus.len() || thetas.len() != betas.len() || thetas.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "got {} angles, {} delays, {} gains",
            thetas.len(),
            taus.len(),
            betas.len()
        )));
    }
    let a = csi.geometry().steering_matrix(thetas);
    let mut r = ramp_coefficients(spectrum, csi.grid(), taus);
    for (li, &b) in betas.iter().enumerate() {
        for v in r.row_mut(li).iter_mut() {
            *v *= b;
        }
    }
    let model = a * r;
    let mut sum = 0.0;
    for (x, m) in csi.data().iter().zip(model.iter()) {
        sum += (x - m).norm_sqr();
    }
    Ok(sum)
}

/// Joint least-squares gain fit at fixed angles and delays. The Gram is
/// the Schur product of the spatial and ramp Grams, positive definite as
/// long as either the angles or the delays separate the paths.
fn fit_gains(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    thetas: &[f64],
    taus: &[f64],
) -> Result<Vec<Complex64>> {
    let l = thetas.len();
    let a = csi.geometry().steering_matrix(thetas);
    let r = ramp_coefficients(spectrum, csi.grid(), taus);
    let spatial = a.adjoint() * &a;
    let temporal = &r * r.adjoint();
    let gram = DMatrix::from_fn(l, l, |i, j| spatial[(i, j)] * temporal[(j, i)]);
    let proj = a.adjoint() * csi.data() * r.adjoint();
    let rhs = DMatrix::from_fn(l, 1, |i, _| proj[(i, i)]);
    let sol = linalg::solve_hermitian(&gram, &rhs, "gain Gram matrix", |d| {
        Error::SingularGram(format!("paths coincide in both angle and delay ({d})"))
    })?;
    Ok(sol.column(0).iter().copied().collect())
}

/// Least-squares solution of the per-path spatial signatures given delays:
/// B̂ = [Σ_k x(k) rᴴ(k)] [Σ_k r(k) rᴴ(k)]⁻¹, returned as an M × L matrix.
pub fn solve_b_given_tau(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    taus: &[f64],
) -> Result<DMatrix<Complex64>> {
    check_dims(csi, spectrum)?;
    if taus.is_empty() {
        return Err(Error::DimensionMismatch("no delays given".into()));
    }
    let r = ramp_coefficients(spectrum, csi.grid(), taus);
    let gram = &r * r.adjoint();
    let num = csi.data() * r.adjoint();
    // B̂ = N G⁻¹ via the Hermitian solve G Z = Nᴴ, B̂ = Zᴴ.
    let z = linalg::solve_hermitian(&gram, &num.adjoint(), "delay Gram matrix", |d| {
        Error::SingularGram(format!("delays coincide or too few active bins ({d})"))
    })?;
    Ok(z.adjoint())
}

/// Azimuth and gain of one path from its spatial signature b̂:
/// θ̂ maximizes |b̂ᴴ a(θ)|² / ‖a(θ)‖², β̂ = aᴴ(θ̂) b̂ / ‖a(θ̂)‖².
pub fn solve_theta_beta_per_path(
    b: &DVector<Complex64>,
    geometry: &ArrayGeometry,
    cfg: &AmlConfig,
) -> Result<(f64, Complex64)> {
    if b.len() != geometry.n_sensors() {
        return Err(Error::DimensionMismatch(format!(
            "signature has {} entries for {} sensors",
            b.len(),
            geometry.n_sensors()
        )));
    }
    if b.norm_squared() == 0.0 {
        return Err(Error::ZeroInput("azimuth solve"));
    }
    let score = |theta: f64| {
        let a = geometry.steering_vector(theta);
        a.dotc(b).norm_sqr() / a.norm_squared()
    };
    let step = cfg.theta_grid_rad;
    let n = linalg::coarse_grid_len(step, TAU);
    let (gi, gval) = linalg::argmax((0..n).map(|g| score(g as f64 * step)));
    let (theta, _) = linalg::refine_max_1d(score, gi as f64 * step, step, gval, cfg.refine_tol_theta_rad);
    let mut theta = if (0.0..TAU).contains(&theta) {
        theta
    } else {
        theta.rem_euclid(TAU)
    };
    if theta >= TAU {
        theta = 0.0;
    }
    let a = geometry.steering_vector(theta);
    let beta = a.dotc(b) / a.norm_squared();
    Ok((theta, beta))
}

/// Per-bin nuisance fit at fixed angles.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceEstimate {
    /// L × K; column k is û(k) = [AᴴA]⁻¹Aᴴx(k).
    pub u: DMatrix<Complex64>,
    /// K × L; column l is v̂_l with entry k equal to û_l(k)/S(ω_k).
    pub v: DMatrix<Complex64>,
}

/// Least-squares per-bin source estimates given angles, plus the
/// spectrum-normalized per-path columns used by the delay search.
pub fn solve_u_given_theta(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    thetas: &[f64],
) -> Result<NuisanceEstimate> {
    check_dims(csi, spectrum)?;
    let l = thetas.len();
    let m = csi.n_sensors();
    if l == 0 {
        return Err(Error::DimensionMismatch("no angles given".into()));
    }
    if l > m {
        return Err(Error::RankDeficientSteering(format!(
            "{l} angles exceed {m} sensors"
        )));
    }
    let a = csi.geometry().steering_matrix(thetas);
    let gram = a.ad_mul(&a);
    let rhs = a.ad_mul(csi.data());
    let u = linalg::solve_hermitian(&gram, &rhs, "steering Gram matrix", |d| {
        Error::RankDeficientSteering(format!("angles coincide ({d})"))
    })?;
    let k = csi.n_bins();
    let mut v = DMatrix::zeros(k, l);
    for ki in 0..k {
        let s = spectrum.values()[ki];
        if s.norm_sqr() == 0.0 {
            return Err(Error::SpectrumZeroBin {
                bin: csi.grid().active_bins()[ki],
            });
        }
        for li in 0..l {
            v[(ki, li)] = u[(li, ki)] / s;
        }
    }
    Ok(NuisanceEstimate { u, v })
}

/// Delay and gain of one path from its normalized bin series v̂:
/// τ̂ maximizes |tᴴ(τ) v̂|² over [0, 1/spacing), β̂ = tᴴ(τ̂) v̂ / K.
pub fn solve_tau_beta_per_path(
    v: &DVector<Complex64>,
    grid: &SubcarrierGrid,
    cfg: &AmlConfig,
) -> Result<(f64, Complex64)> {
    if v.len() != grid.n_active() {
        return Err(Error::DimensionMismatch(format!(
            "bin series has {} entries for {} active bins",
            v.len(),
            grid.n_active()
        )));
    }
    if v.norm_squared() == 0.0 {
        return Err(Error::ZeroInput("delay solve"));
    }
    let omegas = grid.omegas();
    let correlation = |tau: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &w) in omegas.iter().enumerate() {
            acc += Complex64::from_polar(1.0, w * tau) * v[k];
        }
        acc
    };
    let score = |tau: f64| correlation(tau).norm_sqr();
    let span = grid.delay_ambiguity_s();
    let step = cfg.tau_grid_s.min(span);
    let n = linalg::coarse_grid_len(step, span);
    let (gi, gval) = linalg::argmax((0..n).map(|g| score(g as f64 * step)));
    let (tau, _) = linalg::refine_max_1d(score, gi as f64 * step, step, gval, cfg.refine_tol_tau_s);
    // The objective is periodic with period `span`; represent the peak in
    // [0, span). The conditional fold keeps on-grid maxima bit-exact.
    let mut tau = if (0.0..span).contains(&tau) {
        tau
    } else {
        tau.rem_euclid(span)
    };
    if tau >= span {
        tau = 0.0;
    }
    let beta = correlation(tau) / grid.n_active() as f64;
    Ok((tau, beta))
}

/// Re-match passes after the greedy one. A single pass removes most of the
/// cell bias the greedy pass inherits from inter-path interference.
const INIT_REMATCH_ROUNDS: usize = 1;

/// Starting point by successive cancellation: greedily match the strongest
/// remaining path on the coarse (θ, τ) product grid, remove its rank-one
/// least-squares fit from the residual, repeat. Each path is then re-matched
/// once with only its own contribution restored, so the start point is not
/// biased by the order the paths were peeled off in.
pub fn initialize(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    cfg: &AmlConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(csi, spectrum)?;
    cfg.validate(csi.n_sensors())?;
    let m = csi.n_sensors();
    let k = csi.n_bins();
    let geometry = csi.geometry();
    let omegas = csi.grid().omegas();
    let svals = spectrum.values();
    let total_power = spectrum.total_power();

    let theta_step = cfg.theta_grid_rad;
    let n_theta = linalg::coarse_grid_len(theta_step, TAU);
    let thetas_grid: Vec<f64> = (0..n_theta).map(|g| g as f64 * theta_step).collect();
    // Rows are a(θ_g)ᴴ so scores come from one matrix-vector product.
    let steer_adj = {
        let mut mtx = DMatrix::zeros(n_theta, m);
        for (g, &theta) in thetas_grid.iter().enumerate() {
            let a = geometry.steering_vector(theta);
            for mi in 0..m {
                mtx[(g, mi)] = a[mi].conj();
            }
        }
        mtx
    };
    let span = csi.grid().delay_ambiguity_s();
    let tau_step = cfg.tau_grid_s.min(span);
    let n_tau = linalg::coarse_grid_len(tau_step, span);

    let mut residual = csi.data().clone();
    let mut thetas = vec![0.0; cfg.n_paths];
    let mut taus = vec![0.0; cfg.n_paths];
    let mut betas = vec![Complex64::new(0.0, 0.0); cfg.n_paths];
    let mut placed = vec![false; cfg.n_paths];
    let mut w = DVector::<Complex64>::zeros(m);
    let mut scores = DVector::<Complex64>::zeros(n_theta);

    let fill_w = |w: &mut DVector<Complex64>, residual: &DMatrix<Complex64>, tau: f64| {
        w.fill(Complex64::new(0.0, 0.0));
        for ki in 0..k {
            let c = svals[ki].conj() * Complex64::from_polar(1.0, omegas[ki] * tau);
            w.axpy(c, &residual.column(ki), Complex64::new(1.0, 0.0));
        }
    };

    for _ in 0..=INIT_REMATCH_ROUNDS {
        for li in 0..cfg.n_paths {
            if placed[li] {
                // Restore this path's contribution so it is re-matched
                // against everything the other fits left behind.
                let a = geometry.steering_vector(thetas[li]);
                for ki in 0..k {
                    let c =
                        betas[li] * svals[ki] * Complex64::from_polar(1.0, -omegas[ki] * taus[li]);
                    residual.column_mut(ki).axpy(c, &a, Complex64::new(1.0, 0.0));
                }
            }
            let mut best = (0usize, 0usize, f64::NEG_INFINITY);
            for ti in 0..n_tau {
                let tau = ti as f64 * tau_step;
                fill_w(&mut w, &residual, tau);
                scores.gemv(
                    Complex64::new(1.0, 0.0),
                    &steer_adj,
                    &w,
                    Complex64::new(0.0, 0.0),
                );
                for (g, z) in scores.iter().enumerate() {
                    let val = z.norm_sqr();
                    if val > best.2 {
                        best = (g, ti, val);
                    }
                }
            }
            let theta = thetas_grid[best.0];
            let tau = best.1 as f64 * tau_step;
            // Rank-one least squares: β = ⟨d, residual⟩ / ‖d‖², ‖d‖² = M Σ|S|².
            fill_w(&mut w, &residual, tau);
            let a = geometry.steering_vector(theta);
            let beta = a.dotc(&w) / Complex64::new(m as f64 * total_power, 0.0);
            for ki in 0..k {
                let c = -beta * svals[ki] * Complex64::from_polar(1.0, -omegas[ki] * tau);
                residual.column_mut(ki).axpy(c, &a, Complex64::new(1.0, 0.0));
            }
            thetas[li] = theta;
            taus[li] = tau;
            betas[li] = beta;
            placed[li] = true;
        }
    }
    Ok((thetas, taus))
}

/// Full alternating run; like [`aml_estimate`] but also returns the
/// objective trace: the value at the initial fit, then after every
/// accepted sweep.
pub fn aml_estimate_traced(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    cfg: &AmlConfig,
) -> Result<(EstimationResult, Vec<f64>)> {
    check_dims(csi, spectrum)?;
    cfg.validate(csi.n_sensors())?;
    let l = cfg.n_paths;
    let energy: f64 = csi.data().iter().map(|z| z.norm_sqr()).sum();

    let (mut thetas, mut taus) = initialize(csi, spectrum, cfg)?;
    let mut betas = fit_gains(csi, spectrum, &thetas, &taus)?;
    // The initial fit is the first reported point; a sweep only replaces it
    // if it does not raise the objective.
    let obj0 = concentrated_objective(csi, spectrum, &thetas, &taus, &betas)?;
    let mut trace = vec![obj0];
    let mut prev = (obj0, thetas.clone(), taus.clone(), betas.clone());
    let mut iterations_used = 0;
    let mut residual = obj0;

    for it in 1..=cfg.max_iterations {
        // Delay side first: nuisance fit at current angles, then per-path
        // ramp matching.
        let nuisance = solve_u_given_theta(csi, spectrum, &thetas)?;
        for li in 0..l {
            let v = nuisance.v.column(li).into_owned();
            let (tau, beta) = solve_tau_beta_per_path(&v, csi.grid(), cfg)?;
            taus[li] = tau;
            betas[li] = beta;
        }
        // Angle side: signature fit at current delays, then per-path
        // correlation peaks.
        let b = solve_b_given_tau(csi, spectrum, &taus)?;
        for li in 0..l {
            let col = b.column(li).into_owned();
            let (theta, beta) = solve_theta_beta_per_path(&col, csi.geometry(), cfg)?;
            thetas[li] = theta;
            betas[li] = beta;
        }
        let obj = concentrated_objective(csi, spectrum, &thetas, &taus, &betas)?;
        // A sweep that raised the objective has left the contraction
        // regime; keep the previous iterate and stop. The reported trace
        // stays non-increasing.
        if obj > prev.0 {
            thetas = prev.1.clone();
            taus = prev.2.clone();
            betas = prev.3.clone();
            break;
        }
        trace.push(obj);
        iterations_used = it;
        residual = obj;
        if obj <= ZERO_RESIDUAL_REL * energy {
            break;
        }
        if prev.0 - obj <= cfg.converge_tol * prev.0.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = (obj, thetas.clone(), taus.clone(), betas.clone());
    }

    Ok((
        EstimationResult {
            theta_hat_rad: thetas,
            tau_hat_s: taus,
            beta_hat: betas,
            residual,
            iterations_used,
        },
        trace,
    ))
}

/// Alternating estimator: initialize by successive cancellation, then sweep
/// delay and angle updates until the objective's relative change drops
/// below the configured tolerance or the iteration cap is reached (the cap
/// is reported, not an error).
pub fn aml_estimate(
    csi: &CsiMatrix,
    spectrum: &SignalSpectrum,
    cfg: &AmlConfig,
) -> Result<EstimationResult> {
    aml_estimate_traced(csi, spectrum, cfg).map(|(res, _)| res)
}
