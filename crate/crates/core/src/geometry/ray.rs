//! One-dimensional root finding along rays.

use crate::real::Real;

use super::level::{dot_slice, LevelFunction};
use super::QueryOptions;

/// First parameter `t ∈ [0, range]` where the ray enters the open ball.
pub(crate) fn ball_entry<T: Real>(
    center: &[T],
    radius: T,
    origin: &[T],
    direction: &[T],
    range: T,
) -> Option<T> {
    let mut b = T::zero();
    let mut dist_sq = T::zero();
    for i in 0..center.len() {
        let rel = origin[i] - center[i];
        b = b + rel * direction[i];
        dist_sq = dist_sq + rel * rel;
    }
    let c = dist_sq - radius * radius;
    if c < T::zero() {
        return Some(T::zero());
    }
    if b >= T::zero() {
        return None;
    }
    let disc = b * b - c;
    if disc < T::zero() {
        return None;
    }
    // Smaller root, written to avoid cancellation.
    let t = c / (-b + disc.sqrt());
    (t <= range).then_some(t)
}

/// Parameter where the ray leaves the closed ball containing the origin.
pub(crate) fn ball_exit<T: Real>(
    center: &[T],
    radius: T,
    origin: &[T],
    direction: &[T],
    range: T,
) -> Option<T> {
    let mut b = T::zero();
    let mut dist_sq = T::zero();
    for i in 0..center.len() {
        let rel = origin[i] - center[i];
        b = b + rel * direction[i];
        dist_sq = dist_sq + rel * rel;
    }
    let c = dist_sq - radius * radius;
    if c > T::zero() {
        return Some(T::zero());
    }
    let disc = (b * b - c).max(T::zero());
    let t = if b <= T::zero() {
        -b + disc.sqrt()
    } else {
        -c / (b + disc.sqrt())
    };
    (t <= range).then_some(t)
}

/// First crossing of `g(origin + t·direction)` from non-positive to positive.
///
/// Brackets with steps of at least `ray_step` (longer when a Lipschitz bound
/// proves the interval root-free) and then bisects down to `ray_tolerance`.
/// Returns the free-side end of the final bracket.
pub(crate) fn level_entry<T: Real>(
    level: &LevelFunction<T>,
    origin: &[T],
    direction: &[T],
    range: T,
    opts: &QueryOptions<T>,
) -> Option<T> {
    if let LevelFunction::Plane { normal, offset } = level {
        let g0 = dot_slice(normal.as_slice(), origin) - *offset;
        if g0 > T::zero() {
            return Some(T::zero());
        }
        let rate = dot_slice(normal.as_slice(), direction);
        if rate <= T::zero() {
            return None;
        }
        let t = -g0 / rate;
        return (t <= range).then_some(t);
    }

    let mut h = level.value_along(origin, direction, T::zero());
    if h > T::zero() {
        return Some(T::zero());
    }
    let slope = level.directional_lipschitz(direction).filter(|l| *l > T::zero());
    let mut t = T::zero();
    while t < range {
        let mut step = opts.ray_step;
        if let Some(l) = slope {
            step = step.max(-h / l);
        }
        let next = (t + step).min(range);
        let h_next = level.value_along(origin, direction, next);
        if h_next > T::zero() || (h_next == T::zero() && next > T::zero()) {
            return Some(bisect(level, origin, direction, t, next, opts.ray_tolerance));
        }
        t = next;
        h = h_next;
    }
    None
}

fn bisect<T: Real>(
    level: &LevelFunction<T>,
    origin: &[T],
    direction: &[T],
    mut lo: T,
    mut hi: T,
    tol: T,
) -> T {
    let half = T::lit(0.5);
    while hi - lo > tol {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if level.value_along(origin, direction, mid) >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}
