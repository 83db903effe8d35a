//! Planar array geometry and narrowband steering vectors.
//!
//! Sensor positions are expressed in carrier wavelengths, so steering
//! phases need no separate frequency argument: for a plane wave from
//! azimuth `theta` the element response is
//! `exp(j 2π (x cos θ + y sin θ))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Planar sensor array, positions in units of the carrier wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<(f64, f64)>,
}

impl ArrayGeometry {
    /// Arbitrary planar layout. Positions must be finite and there must be
    /// at least one sensor.
    pub fn from_positions(positions: Vec<(f64, f64)>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidGeometry("array has no sensors".into()));
        }
        for (i, &(x, y)) in positions.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidGeometry(format!(
                    "sensor {i} has non-finite position ({x}, {y})"
                )));
            }
        }
        Ok(Self { positions })
    }

    /// Uniform circular array: `m` sensors on a circle of `radius_lambda`
    /// wavelengths, sensor i at angle 2π i / m from the x axis.
    pub fn uca(m: usize, radius_lambda: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGeometry("array has no sensors".into()));
        }
        if !radius_lambda.is_finite() || radius_lambda <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "circular array radius must be positive, got {radius_lambda}"
            )));
        }
        let positions = (0..m)
            .map(|i| {
                let gamma = TAU * i as f64 / m as f64;
                (radius_lambda * gamma.cos(), radius_lambda * gamma.sin())
            })
            .collect();
        Ok(Self { positions })
    }

    /// Uniform linear array along the x axis, centered at the origin,
    /// `spacing_lambda` wavelengths between adjacent sensors.
    pub fn ula(m: usize, spacing_lambda: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGeometry("array has no sensors".into()));
        }
        if !spacing_lambda.is_finite() || spacing_lambda <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "linear array spacing must be positive, got {spacing_lambda}"
            )));
        }
        let mid = (m as f64 - 1.0) / 2.0;
        let positions = (0..m)
            .map(|i| ((i as f64 - mid) * spacing_lambda, 0.0))
            .collect();
        Ok(Self { positions })
    }

    pub fn n_sensors(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Steering vector a(θ); every entry has unit modulus.
    pub fn steering_vector(&self, theta: f64) -> DVector<Complex64> {
        let (s, c) = theta.sin_cos();
        DVector::from_iterator(
            self.positions.len(),
            self.positions.iter().map(|&(x, y)| {
                Complex64::from_polar(1.0, TAU * (x * c + y * s))
            }),
        )
    }

    /// Derivative of the steering vector with respect to azimuth:
    /// entry m is j 2π (−x_m sin θ + y_m cos θ) a_m(θ).
    pub fn steering_derivative(&self, theta: f64) -> DVector<Complex64> {
        let (s, c) = theta.sin_cos();
        DVector::from_iterator(
            self.positions.len(),
            self.positions.iter().map(|&(x, y)| {
                let phase = Complex64::from_polar(1.0, TAU * (x * c + y * s));
                Complex64::new(0.0, TAU * (-x * s + y * c)) * phase
            }),
        )
    }

    /// M × L matrix whose column l is a(θ_l).
    pub fn steering_matrix(&self, thetas: &[f64]) -> DMatrix<Complex64> {
        let m = self.positions.len();
        let mut out = DMatrix::zeros(m, thetas.len());
        for (l, &theta) in thetas.iter().enumerate() {
            out.set_column(l, &self.steering_vector(theta));
        }
        out
    }

    /// M × L matrix whose column l is da/dθ at θ_l.
    pub fn steering_derivative_matrix(&self, thetas: &[f64]) -> DMatrix<Complex64> {
        let m = self.positions.len();
        let mut out = DMatrix::zeros(m, thetas.len());
        for (l, &theta) in thetas.iter().enumerate() {
            out.set_column(l, &self.steering_derivative(theta));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uca_sensor_count_and_radius() {
        let g = ArrayGeometry::uca(16, 1.5).unwrap();
        assert_eq!(g.n_sensors(), 16);
        for &(x, y) in g.positions() {
            assert_abs_diff_eq!((x * x + y * y).sqrt(), 1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn ula_is_centered() {
        let g = ArrayGeometry::ula(4, 0.5).unwrap();
        let sum_x: f64 = g.positions().iter().map(|p| p.0).sum();
        assert_abs_diff_eq!(sum_x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.positions()[1].0 - g.positions()[0].0, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(ArrayGeometry::uca(0, 1.0).is_err());
        assert!(ArrayGeometry::uca(4, 0.0).is_err());
        assert!(ArrayGeometry::ula(4, f64::NAN).is_err());
        assert!(ArrayGeometry::from_positions(vec![]).is_err());
        assert!(ArrayGeometry::from_positions(vec![(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn steering_has_unit_modulus() {
        let g = ArrayGeometry::uca(16, 1.5).unwrap();
        for theta in [0.0, 0.3, 2.0, 5.9] {
            let a = g.steering_vector(theta);
            for z in a.iter() {
                assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn steering_reference_value() {
        // Sensor 0 of a 16-element circle of radius 1.5 sits at (1.5, 0);
        // at θ = 0 its phase is 2π·1.5 = 3π, i.e. the response is −1.
        let g = ArrayGeometry::uca(16, 1.5).unwrap();
        let a = g.steering_vector(0.0);
        assert_abs_diff_eq!(a[0].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[0].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_sensor_at_origin() {
        let g = ArrayGeometry::from_positions(vec![(0.0, 0.0)]).unwrap();
        let a = g.steering_vector(1.234);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0], Complex64::new(1.0, 0.0));
        let d = g.steering_derivative(1.234);
        assert_eq!(d[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn steering_is_periodic() {
        let g = ArrayGeometry::uca(8, 1.5).unwrap();
        let a = g.steering_vector(0.7);
        let b = g.steering_vector(0.7 + TAU);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = ArrayGeometry::uca(16, 1.5).unwrap();
        let h = 1e-6;
        for theta in [0.0, 0.5, 2.5, 4.0] {
            let d = g.steering_derivative(theta);
            let ap = g.steering_vector(theta + h);
            let am = g.steering_vector(theta - h);
            for i in 0..g.n_sensors() {
                let fd = (ap[i] - am[i]) / Complex64::new(2.0 * h, 0.0);
                assert_abs_diff_eq!((d[i] - fd).norm(), 0.0, epsilon = 1e-6);
            }
        }
    }
}
