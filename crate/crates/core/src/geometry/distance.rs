//! Closest boundary point of a general implicit obstacle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::solve_in_place;
use crate::real::Real;
use crate::vector::{Point, Vector};

use super::level::LevelFunction;
use super::{ray, QueryOptions};

pub(crate) struct ImplicitHit<T: Real> {
    pub distance: T,
    pub closest: Point<T>,
    pub gradient: Vector<T>,
    pub unique: bool,
}

/// Relative window above the best ray length inside which other sweep hits
/// are refined as potential competing closest points.
const TIE_WINDOW: f64 = 0.05;
const MAX_REFINED: usize = 12;

/// Closest point of `{g = 0}` seen from `x`, searched up to `upper`.
pub(crate) fn implicit_closest<T: Real>(
    level: &LevelFunction<T>,
    x: &Point<T>,
    upper: T,
    opts: &QueryOptions<T>,
) -> Result<Option<ImplicitHit<T>>> {
    let g0 = level.value(x.as_slice());
    let grad0 = level.gradient(x.as_slice());
    let gn = grad0.norm();
    if gn > T::zero() && -g0 / gn <= opts.ray_tolerance {
        // First-order step onto the level set; exact to O(distance²).
        let closest = x.add_scaled(-g0 / (gn * gn), &grad0);
        return Ok(Some(ImplicitHit {
            distance: (-g0 / gn).max(T::zero()),
            closest,
            gradient: grad0.scaled(-T::one() / gn),
            unique: true,
        }));
    }

    let n = x.dim();
    let mut directions = sweep_directions::<T>(n, opts.sweep_directions);
    if let Some(toward) = grad0.normalized() {
        directions.insert(0, toward);
    }

    let window = T::lit(TIE_WINDOW);
    let mut cap = upper;
    let mut hits: Vec<(T, usize)> = Vec::new();
    for (i, dir) in directions.iter().enumerate() {
        if let Some(t) = ray::level_entry(level, x.as_slice(), dir.as_slice(), cap, opts) {
            hits.push((t, i));
            cap = cap.min(t * (T::one() + window) + opts.ray_step);
        }
    }
    if hits.is_empty() {
        return Ok(None);
    }
    hits.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite ray lengths"));
    let best_raw = hits[0].0;
    let limit = best_raw * (T::one() + window) + opts.ray_step;

    let mut refined: Vec<(T, Point<T>)> = Vec::new();
    for &(t, i) in hits.iter().take_while(|(t, _)| *t <= limit).take(MAX_REFINED) {
        let raw = x.add_scaled(t, &directions[i]);
        let point = refine(level, x, &raw, t).unwrap_or(raw);
        let d = point.distance(x);
        let merge = T::lit(1e-6) * (T::one() + d);
        if refined.iter().all(|(_, p)| p.distance(&point) > merge) {
            refined.push((d, point));
        }
    }
    refined.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let (distance, closest) = refined[0].clone();
    let tie_tol = T::lit(1e-9) * (T::one() + distance);
    let unique = refined.iter().skip(1).all(|(d, _)| *d - distance > tie_tol);

    let gradient = if distance > T::zero() {
        (x - &closest).scaled(T::one() / distance)
    } else {
        let g = level.gradient(closest.as_slice());
        g.normalized().map(|u| -u).unwrap_or_else(|| Vector::basis(n, 0))
    };
    Ok(Some(ImplicitHit {
        distance,
        closest,
        gradient,
        unique,
    }))
}

/// Newton iteration on the closest-point conditions
/// `y − x + μ∇g(y) = 0`, `g(y) = 0`, started from a sweep hit.
fn refine<T: Real>(level: &LevelFunction<T>, x: &Point<T>, start: &Point<T>, raw: T) -> Option<Point<T>> {
    let n = x.dim();
    let mut y = start.clone();
    let grad = level.gradient(y.as_slice());
    let gsq = grad.norm_squared();
    if !(gsq > T::zero()) {
        return None;
    }
    let mut mu = (x - &y).dot(&grad) / gsq;
    let scale = T::one() + raw;
    let mut converged = false;
    for _ in 0..40 {
        let g = level.value(y.as_slice());
        let grad = level.gradient(y.as_slice());
        let hess = level.hessian(y.as_slice());
        let m = n + 1;
        let mut jac = vec![T::zero(); m * m];
        let mut rhs = vec![T::zero(); m];
        for i in 0..n {
            for j in 0..n {
                jac[i * m + j] = mu * hess[i][j];
            }
            jac[i * m + i] = jac[i * m + i] + T::one();
            jac[i * m + n] = grad[i];
            jac[n * m + i] = grad[i];
            rhs[i] = -(y[i] - x[i] + mu * grad[i]);
        }
        rhs[n] = -g;
        if !solve_in_place(&mut jac, &mut rhs, m) {
            return None;
        }
        for i in 0..n {
            y[i] = y[i] + rhs[i];
        }
        mu = mu + rhs[n];
        let step = (0..n).fold(T::zero(), |acc, i| acc.max(rhs[i].abs()));
        if !y.is_finite() {
            return None;
        }
        if step <= T::epsilon() * T::lit(16.0) * scale {
            converged = true;
            break;
        }
    }
    if !converged || !(mu < T::zero()) {
        return None;
    }
    let grad = level.gradient(y.as_slice());
    let g = level.value(y.as_slice());
    if g.abs() > T::tolerance_floor().sqrt() * grad.norm() * scale {
        return None;
    }
    // A refinement that moved to a farther critical point is rejected.
    if y.distance(x) > raw + T::tolerance_floor().sqrt() * scale {
        return None;
    }
    Some(y)
}

/// Deterministic set of unit directions covering the sphere in `ℝⁿ`.
pub(crate) fn sweep_directions<T: Real>(dim: usize, count: usize) -> Vec<Vector<T>> {
    let count = count.max(8);
    match dim {
        2 => (0..count)
            .map(|j| {
                let theta =
                    -T::PI() + T::lit(2.0) * T::PI() * T::from_usize_lossy(j) / T::from_usize_lossy(count);
                Vector::from([theta.cos(), theta.sin()])
            })
            .collect(),
        3 => {
            // Spherical Fibonacci lattice.
            let golden = T::PI() * (T::lit(3.0) - T::lit(5.0).sqrt());
            let m = T::from_usize_lossy(count);
            (0..count)
                .map(|j| {
                    let jf = T::from_usize_lossy(j);
                    let z = T::one() - (T::lit(2.0) * jf + T::one()) / m;
                    let r = (T::one() - z * z).max(T::zero()).sqrt();
                    let phi = golden * jf;
                    Vector::from([r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1c7);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let v: Vector<T> = Vector::new((0..dim).map(|_| {
                    // Box-Muller; only the direction matters.
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen();
                    T::lit((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos())
                }));
                if let Some(u) = v.normalized() {
                    out.push(u);
                }
            }
            out
        }
    }
}
