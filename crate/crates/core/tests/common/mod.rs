//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use cusp_ricci::triangulation::parse_triangulation;
use cusp_ricci::{CuspedTriangulation, EdgeLengths};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIGURE8: &str = include_str!("../../data/figure8.tri");

pub fn figure8() -> CuspedTriangulation {
    let t = parse_triangulation(FIGURE8).unwrap();
    t.validate().unwrap();
    t
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_lengths(rng: &mut ChaCha8Rng, n: usize, r: f64) -> EdgeLengths {
    EdgeLengths::from((0..n).map(|_| rng.gen_range(-r..=r)).collect::<Vec<_>>())
}

/// `-∫₀^θ ln|2 sin t| dt` by composite Simpson after `t = u²`, refined
/// until two successive levels agree. Independent of the series used by
/// the library.
pub fn lobachevsky_quadrature(theta: f64) -> f64 {
    assert!((0.0..PI).contains(&theta));
    let f = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            -2.0 * u * (2.0 * (u * u).sin()).abs().ln()
        }
    };
    let simpson = |n: usize| {
        let b = theta.sqrt();
        let h = b / n as f64;
        let mut acc = f(0.0) + f(b);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    };
    simpson(400_000)
}

/// Partial Fourier sum `½ Σ_{n ≤ n_max} sin(2nθ)/n²`; the neglected tail is
/// bounded by `1/(2 n_max)`.
pub fn lobachevsky_fourier(theta: f64, n_max: usize) -> f64 {
    0.5 * (1..=n_max)
        .map(|n| {
            let n = n as f64;
            (2.0 * n * theta).sin() / (n * n)
        })
        .sum::<f64>()
}

/// Figure-eight volume `6 Λ(π/3)`, frozen from a 30-digit evaluation and
/// cross-checked against the oracles above in `oracle_constants`.
pub const FIGURE8_VOLUME: f64 = 2.029_883_212_819_307_3;
