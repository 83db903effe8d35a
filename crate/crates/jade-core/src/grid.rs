//! Subcarrier frequency grid of an OFDM channel sounding.
//!
//! A capture uses `total_bins` equally spaced subcarriers of which only
//! `active_bins` carry measurements. Baseband angular frequencies are
//! centered on the middle of the full grid:
//! `ω_i = 2π spacing_hz (i − (total_bins − 1)/2)` for bin index `i`,
//! so a full symmetric grid has frequencies that come in ± pairs.

use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierGrid {
    carrier_hz: f64,
    spacing_hz: f64,
    total_bins: usize,
    active_bins: Vec<usize>,
    omegas: Vec<f64>,
}

impl SubcarrierGrid {
    /// `active_bins` must be strictly increasing, non-empty, and every
    /// index must be below `total_bins`.
    pub fn new(
        carrier_hz: f64,
        spacing_hz: f64,
        total_bins: usize,
        active_bins: Vec<usize>,
    ) -> Result<Self> {
        if !carrier_hz.is_finite() || carrier_hz <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        if !spacing_hz.is_finite() || spacing_hz <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "subcarrier spacing must be positive, got {spacing_hz}"
            )));
        }
        if total_bins == 0 {
            return Err(Error::InvalidGrid("grid has no bins".into()));
        }
        if active_bins.is_empty() {
            return Err(Error::InvalidGrid("no active bins".into()));
        }
        for w in active_bins.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidGrid(format!(
                    "active bins must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let last = *active_bins.last().unwrap();
        if last >= total_bins {
            return Err(Error::InvalidGrid(format!(
                "active bin {last} out of range for {total_bins} total bins"
            )));
        }
        let center = (total_bins as f64 - 1.0) / 2.0;
        let omegas = active_bins
            .iter()
            .map(|&i| TAU * spacing_hz * (i as f64 - center))
            .collect();
        Ok(Self {
            carrier_hz,
            spacing_hz,
            total_bins,
            active_bins,
            omegas,
        })
    }

    /// Grid with every bin active.
    pub fn all_bins(carrier_hz: f64, spacing_hz: f64, total_bins: usize) -> Result<Self> {
        Self::new(
            carrier_hz,
            spacing_hz,
            total_bins,
            (0..total_bins).collect(),
        )
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn spacing_hz(&self) -> f64 {
        self.spacing_hz
    }

    pub fn total_bins(&self) -> usize {
        self.total_bins
    }

    pub fn active_bins(&self) -> &[usize] {
        &self.active_bins
    }

    /// Number of active bins K.
    pub fn n_active(&self) -> usize {
        self.active_bins.len()
    }

    /// Baseband angular frequencies of the active bins, in ascending order.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Phase ramp t(τ): entry k is exp(−j ω_k τ).
    pub fn delay_vector(&self, tau_s: f64) -> DVector<Complex64> {
        DVector::from_iterator(
            self.omegas.len(),
            self.omegas
                .iter()
                .map(|&w| Complex64::from_polar(1.0, -w * tau_s)),
        )
    }

    /// Unambiguous delay span 1/spacing: delays τ and τ + span produce
    /// the same ramp up to a constant global phase (−1 when the centered
    /// grid has an even bin count), which the path gain absorbs. Delays
    /// are therefore identifiable only within [0, span).
    pub fn delay_ambiguity_s(&self) -> f64 {
        1.0 / self.spacing_hz
    }
}
