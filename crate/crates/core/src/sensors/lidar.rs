use serde::{Deserialize, Serialize};

use crate::control::SafetyInput;
use crate::error::{invalid, Result};
use crate::geometry::Environment;
use crate::real::Real;
use crate::vector::{Point, Vector};

/// One-degree resolution.
pub const DEFAULT_BEAMS: usize = 360;

/// Polar range curve sampled at uniformly spaced bearings in `[−π, π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct LidarScan<T: Real> {
    pub angles: Vec<T>,
    pub ranges: Vec<T>,
    pub max_range: T,
}

impl<T: Real> LidarScan<T> {
    /// Angular spacing `2π / count`.
    pub fn resolution(&self) -> T {
        T::lit(2.0) * T::PI() / T::from_usize_lossy(self.angles.len().max(1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidarReading<T: Real> {
    pub input: SafetyInput<T>,
    pub argmin_index: usize,
    pub argmin_angle: T,
}

pub fn simulate_lidar<T: Real>(
    env: &Environment<T>,
    x: &Point<T>,
    count: usize,
    max_range: T,
) -> Result<LidarScan<T>> {
    if x.dim() != 2 {
        return Err(invalid("lidar simulation is planar"));
    }
    if count < 8 {
        return Err(invalid("lidar needs at least 8 beams"));
    }
    if !(max_range > T::zero()) {
        return Err(invalid("lidar range must be positive"));
    }
    if !env.contains(x)? {
        return Err(invalid("lidar pose outside the free space"));
    }
    let local = env.nearby(x, max_range);
    let step = T::lit(2.0) * T::PI() / T::from_usize_lossy(count);
    let mut angles = Vec::with_capacity(count);
    let mut ranges = Vec::with_capacity(count);
    let clear = local.workspace.is_none() && local.obstacles.is_empty();
    for j in 0..count {
        let theta = -T::PI() + step * T::from_usize_lossy(j);
        angles.push(theta);
        let range = if clear {
            max_range
        } else {
            let (s, c) = theta.sin_cos();
            local.ray_cast_unchecked(x.as_slice(), &[c, s], max_range)
        };
        ranges.push(range);
    }
    Ok(LidarScan {
        angles,
        ranges,
        max_range,
    })
}

/// Minimum range and the bearing `−(cos θ*, sin θ*)` of its first occurrence.
///
/// When every beam saturates the bearing is reported as unavailable.
pub fn scan_to_safety_input<T: Real>(scan: &LidarScan<T>) -> Result<LidarReading<T>> {
    if scan.ranges.is_empty() || scan.ranges.len() != scan.angles.len() {
        return Err(invalid("scan must be non-empty with one angle per range"));
    }
    let mut index = 0;
    for (i, r) in scan.ranges.iter().enumerate() {
        if *r < scan.ranges[index] {
            index = i;
        }
    }
    let distance = scan.ranges[index];
    let angle = scan.angles[index];
    let bearing = (distance < scan.max_range).then(|| {
        let (s, c) = angle.sin_cos();
        Vector::from([-c, -s])
    });
    Ok(LidarReading {
        input: SafetyInput { distance, bearing },
        argmin_index: index,
        argmin_angle: angle,
    })
}
