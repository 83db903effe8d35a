//! Azimuth-only deterministic ML baseline.
//!
//! The per-bin source amplitudes are treated as unstructured nuisance
//! parameters, which concentrates the likelihood into
//!
//! ```text
//! F(θ) = Σ_k ‖P⊥_{A(θ)} x(k)‖²
//! ```
//!
//! minimized by alternating-projection coordinate descent: each angle is
//! re-optimized on a coarse grid plus golden-section refinement while the
//! others stay fixed, and a move is kept only if it lowers F. Delay
//! structure across bins is ignored entirely, which is exactly what makes
//! this the comparison baseline.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::CsiMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoaOnlyConfig {
    pub n_paths: usize,
    pub theta_grid_rad: f64,
    pub refine_tol_theta_rad: f64,
    pub max_iterations: usize,
}

impl DoaOnlyConfig {
    pub fn new(n_paths: usize) -> Self {
        Self {
            n_paths,
            theta_grid_rad: 1f64.to_radians(),
            refine_tol_theta_rad: 1e-4,
            max_iterations: 20,
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
            ("theta refinement tolerance", self.refine_tol_theta_rad),
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

/// Σ_k ‖P⊥_{A(θ)} x(k)‖², the energy outside the span of the steering
/// columns.
pub fn doa_only_objective(csi: &CsiMatrix, thetas: &[f64]) -> Result<f64> {
    if thetas.is_empty() {
        return Err(Error::DimensionMismatch("no angles given".into()));
    }
    if thetas.len() > csi.n_sensors() {
        return Err(Error::RankDeficientSteering(format!(
            "{} angles exceed {} sensors",
            thetas.len(),
            csi.n_sensors()
        )));
    }
    let a = csi.geometry().steering_matrix(thetas);
    let q = linalg::projector_basis(&a, |d| {
        Error::RankDeficientSteering(format!("angles coincide ({d})"))
    })?;
    let resid = linalg::project_out(&q, csi.data());
    Ok(resid.iter().map(|z| z.norm_sqr()).sum())
}

/// Like [`doa_only_estimate`], additionally returning the objective value
/// after every coordinate-descent cycle (the first entry is the value at
/// the initial angles).
pub fn doa_only_estimate_traced(
    csi: &CsiMatrix,
    cfg: &DoaOnlyConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate(csi.n_sensors())?;
    let l = cfg.n_paths;
    let m = csi.n_sensors();
    let k = csi.n_bins();
    let geometry = csi.geometry();
    let step = cfg.theta_grid_rad;
    let n_theta = linalg::coarse_grid_len(step, TAU);
    let thetas_grid: Vec<f64> = (0..n_theta).map(|g| g as f64 * step).collect();

    // Matched-beamformer initialization with successive cancellation.
    // Rows of steer_adj are a(θ_g)ᴴ, so beam powers come from one product.
    let steer_adj = {
        let mut mtx = nalgebra::DMatrix::<Complex64>::zeros(n_theta, m);
        for (g, &theta) in thetas_grid.iter().enumerate() {
            let a = geometry.steering_vector(theta);
            for mi in 0..m {
                mtx[(g, mi)] = a[mi].conj();
            }
        }
        mtx
    };
    let mut residual = csi.data().clone();
    let mut thetas = Vec::with_capacity(l);
    for _ in 0..l {
        let beams = &steer_adj * &residual;
        let (g, _) = linalg::argmax(
            beams
                .row_iter()
                .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>()),
        );
        let theta = thetas_grid[g];
        let a = geometry.steering_vector(theta);
        let scale = Complex64::new(m as f64, 0.0);
        for ki in 0..k {
            let coef = beams[(g, ki)] / scale;
            residual
                .column_mut(ki)
                .axpy(-coef, &a, Complex64::new(1.0, 0.0));
        }
        thetas.push(theta);
    }

    let mut obj_cur = doa_only_objective(csi, &thetas)?;
    let mut trace = vec![obj_cur];

    for _ in 0..cfg.max_iterations {
        let mut improved = false;
        for li in 0..l {
            let others: Vec<f64> = thetas
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != li)
                .map(|(_, &t)| t)
                .collect();
            let q_others = if others.is_empty() {
                None
            } else {
                Some(linalg::projector_basis(
                    &geometry.steering_matrix(&others),
                    |d| Error::RankDeficientSteering(format!("angles coincide ({d})")),
                )?)
            };
            // Residual energy captured by the candidate's projected-out
            // steering direction; maximizing it minimizes the objective.
            let score = |theta: f64| -> f64 {
                let a = geometry.steering_vector(theta);
                let at = match &q_others {
                    Some(q) => &a - q * q.ad_mul(&a),
                    None => a.clone(),
                };
                let n2 = at.norm_squared();
                if n2 <= m as f64 * 1e-12 {
                    return f64::NEG_INFINITY;
                }
                let row = at.ad_mul(csi.data());
                row.iter().map(|z| z.norm_sqr()).sum::<f64>() / n2
            };
            let (gi, gval) = linalg::argmax(thetas_grid.iter().map(|&t| score(t)));
            if gval == f64::NEG_INFINITY {
                continue;
            }
            let (theta_new, _) = linalg::refine_max_1d(
                score,
                thetas_grid[gi],
                step,
                gval,
                cfg.refine_tol_theta_rad,
            );
            let mut theta_new = if (0.0..TAU).contains(&theta_new) {
                theta_new
            } else {
                theta_new.rem_euclid(TAU)
            };
            if theta_new >= TAU {
                theta_new = 0.0;
            }
            let mut candidate = thetas.clone();
            candidate[li] = theta_new;
            let obj_new = doa_only_objective(csi, &candidate)?;
            if obj_new < obj_cur {
                thetas = candidate;
                obj_cur = obj_new;
                improved = true;
            }
        }
        trace.push(obj_cur);
        if !improved {
            break;
        }
    }
    Ok((thetas, trace))
}

/// Alternating-projection coordinate-descent estimate of the azimuths.
pub fn doa_only_estimate(csi: &CsiMatrix, cfg: &DoaOnlyConfig) -> Result<Vec<f64>> {
    doa_only_estimate_traced(csi, cfg).map(|(thetas, _)| thetas)
}
