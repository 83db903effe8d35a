//! Shared scenario builders for the integration tests.
#![allow(dead_code)]

use jade_core::geometry::ArrayGeometry;
use jade_core::grid::SubcarrierGrid;
use jade_core::mc::wrap_angle;
use jade_core::model::{Path, PathSet, SignalSpectrum};
use jade_core::num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// 16-sensor circular array, 1.5 wavelength radius.
pub fn reference_geometry() -> ArrayGeometry {
    ArrayGeometry::uca(16, 1.5).unwrap()
}

/// 128-bin OFDM grid at 5.32 GHz with the 114 data bins active.
pub fn reference_grid() -> SubcarrierGrid {
    let bins: Vec<usize> = (5..=61).chain(66..=122).collect();
    SubcarrierGrid::new(5.32e9, 312_500.0, 128, bins).unwrap()
}

/// Two-path reference scene: 30 deg at 50 ns with unit gain, 40 deg at
/// 100 ns with gain 0.9 at the given phase.
pub fn reference_paths(phi: f64) -> PathSet {
    PathSet::new(vec![
        Path {
            theta_rad: 30f64.to_radians(),
            tau_s: 50e-9,
            beta: Complex64::new(1.0, 0.0),
        },
        Path {
            theta_rad: 40f64.to_radians(),
            tau_s: 100e-9,
            beta: Complex64::from_polar(0.9, phi),
        },
    ])
    .unwrap()
}

/// Coarse grid with a 200 ns unambiguous delay span; keeps exhaustive
/// delay searches cheap.
pub fn short_span_grid(total_bins: usize) -> SubcarrierGrid {
    SubcarrierGrid::all_bins(5.32e9, 5e6, total_bins).unwrap()
}

pub fn random_uca(rng: &mut ChaCha12Rng) -> ArrayGeometry {
    let m = [4usize, 8, 16][rng.random_range(0..3)];
    let radius = rng.random_range(0.5..2.0);
    ArrayGeometry::uca(m, radius).unwrap()
}

pub fn random_geometry(rng: &mut ChaCha12Rng) -> ArrayGeometry {
    if rng.random::<bool>() {
        random_uca(rng)
    } else {
        let m = rng.random_range(2..=12);
        let spacing = rng.random_range(0.2..0.8);
        ArrayGeometry::ula(m, spacing).unwrap()
    }
}

pub fn random_spectrum(rng: &mut ChaCha12Rng, k: usize) -> SignalSpectrum {
    let values = (0..k)
        .map(|_| Complex64::from_polar(rng.random_range(0.5..1.5), rng.random::<f64>() * TAU))
        .collect();
    SignalSpectrum::new(values).unwrap()
}

/// Random paths with pairwise angle separation at least `min_sep_rad` and
/// delay separation at least `min_sep_s`; delays stay inside the middle of
/// the unambiguous span.
pub fn random_paths(
    rng: &mut ChaCha12Rng,
    l: usize,
    grid: &SubcarrierGrid,
    min_sep_rad: f64,
    min_sep_s: f64,
) -> PathSet {
    let span = grid.delay_ambiguity_s();
    let mut thetas: Vec<f64> = Vec::new();
    let mut taus: Vec<f64> = Vec::new();
    while thetas.len() < l {
        let theta = rng.random::<f64>() * TAU;
        let tau = rng.random_range(0.05..0.8) * span;
        let ok = thetas
            .iter()
            .zip(taus.iter())
            .all(|(&t, &u)| wrap_angle(theta - t).abs() >= min_sep_rad && (tau - u).abs() >= min_sep_s);
        if ok {
            thetas.push(theta);
            taus.push(tau);
        }
    }
    let paths = thetas
        .iter()
        .zip(taus.iter())
        .map(|(&theta_rad, &tau_s)| Path {
            theta_rad,
            tau_s,
            beta: Complex64::from_polar(rng.random_range(0.5..1.5), rng.random::<f64>() * TAU),
        })
        .collect();
    PathSet::new(paths).unwrap()
}

/// Absolute angular distance on the circle, in radians.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}
