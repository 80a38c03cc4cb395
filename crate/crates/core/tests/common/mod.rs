//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, TAU};

/// Distance from `x` to a set of sampled boundary points.
pub fn min_distance(x: [f64; 2], points: impl Iterator<Item = [f64; 2]>) -> f64 {
    points
        .map(|p| (p[0] - x[0]).hypot(p[1] - x[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Dense samples of both corridor walls over `[x₁ − half, x₁ + half]`.
pub fn corridor_wall_samples(center_x: f64, half: f64, samples: usize) -> impl Iterator<Item = [f64; 2]> {
    (0..=samples).flat_map(move |j| {
        let t = center_x - half + 2.0 * half * j as f64 / samples as f64;
        let s = 4.0 * t.sin();
        [[t, s - 5.0], [t, 5.0 - s]]
    })
}

pub fn circle_samples(c: [f64; 2], r: f64, samples: usize) -> impl Iterator<Item = [f64; 2]> {
    (0..samples).map(move |j| {
        let a = TAU * j as f64 / samples as f64;
        [c[0] + r * a.cos(), c[1] + r * a.sin()]
    })
}

/// Corridor ball centres near `x₁`.
pub fn corridor_balls_near(x1: f64, half: f64) -> Vec<[f64; 2]> {
    (-10i64..=10)
        .map(|q| [(4 * q + 3) as f64 * FRAC_PI_2, 0.0])
        .filter(|c| (c[0] - x1).abs() <= half + 2.0)
        .collect()
}

/// Boundary-sampling distance to the corridor obstacles, `> 10⁵` samples.
pub fn corridor_distance_oracle(x: [f64; 2]) -> f64 {
    let half = 8.0;
    let walls = min_distance(x, corridor_wall_samples(x[0], half, 200_000));
    let balls = corridor_balls_near(x[0], half)
        .into_iter()
        .map(|c| min_distance(x, circle_samples(c, 2.0, 100_000)))
        .fold(f64::INFINITY, f64::min);
    walls.min(balls)
}

/// Analytic distance to the complement of a sphere world.
pub fn sphere_world_distance(x: &[f64], workspace: Option<(&[f64], f64)>, balls: &[(Vec<f64>, f64)]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    };
    let mut d = balls
        .iter()
        .map(|(c, r)| dist(x, c) - r)
        .fold(f64::INFINITY, f64::min);
    if let Some((c0, r0)) = workspace {
        d = d.min(r0 - dist(x, c0));
    }
    d
}
