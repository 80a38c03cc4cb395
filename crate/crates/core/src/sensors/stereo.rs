//! Rectified stereo pair and depth-map reduction.
//!
//! Camera frame convention: `x` right, `y` down, `z` along the optical axis.
//! Pixel coordinates are measured from the principal point.

use serde::{Deserialize, Serialize};

use crate::control::SafetyInput;
use crate::error::{invalid, Error, Result};
use crate::geometry::Environment;
use crate::real::Real;
use crate::vector::{Point, Vector};

/// Parallel-axis stereo pair; the left camera frame is the reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct StereoRig<T: Real> {
    /// Focal length in pixels.
    pub focal_length: T,
    pub baseline: T,
    /// Left camera orientation in the robot frame (row-major rotation).
    pub rotation: [[T; 3]; 3],
    /// Left camera position in the robot frame.
    pub translation: [T; 3],
}

impl<T: Real> StereoRig<T> {
    pub fn new(focal_length: T, baseline: T, rotation: [[T; 3]; 3], translation: [T; 3]) -> Result<Self> {
        if !(focal_length > T::zero() && baseline > T::zero()) {
            return Err(invalid("focal length and baseline must be positive"));
        }
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        for i in 0..3 {
            for j in 0..3 {
                let dot = (0..3).fold(T::zero(), |acc, k| acc + rotation[k][i] * rotation[k][j]);
                let id = if i == j { T::one() } else { T::zero() };
                if (dot - id).abs() > tol {
                    return Err(invalid("rotation is not orthonormal"));
                }
            }
        }
        let r = &rotation;
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - T::one()).abs() > tol {
            return Err(invalid("rotation must have determinant +1"));
        }
        Ok(Self {
            focal_length,
            baseline,
            rotation,
            translation,
        })
    }

    /// Camera at the robot center with the optical axis along robot `z`.
    pub fn identity_pose(focal_length: T, baseline: T) -> Result<Self> {
        let (o, z) = (T::one(), T::zero());
        Self::new(focal_length, baseline, [[o, z, z], [z, o, z], [z, z, o]], [z; 3])
    }

    /// `R_L p + p_L`.
    pub fn to_robot_frame(&self, p: &[T; 3]) -> [T; 3] {
        let mut q = self.translation;
        for (i, qi) in q.iter_mut().enumerate() {
            for (j, pj) in p.iter().enumerate() {
                *qi = *qi + self.rotation[i][j] * *pj;
            }
        }
        q
    }

    fn rotate(&self, v: &[T; 3]) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                *o = *o + self.rotation[i][j] * *vj;
            }
        }
        out
    }
}

/// `z = f·b / |x_L − x_R|`.
pub fn disparity_to_depth<T: Real>(px_left: T, px_right: T, rig: &StereoRig<T>) -> Result<T> {
    let disparity = (px_left - px_right).abs();
    if disparity == T::zero() {
        return Err(Error::InfiniteDepth);
    }
    Ok(rig.focal_length * rig.baseline / disparity)
}

/// Triangulates a rectified correspondence into the left camera frame.
pub fn pixel_to_point<T: Real>(left: [T; 2], right: [T; 2], rig: &StereoRig<T>) -> Result<[T; 3]> {
    let tol = T::lit(1e-9) * (T::one() + left[1].abs());
    if (left[1] - right[1]).abs() > tol {
        return Err(invalid("pixel pair is not rectified (rows differ)"));
    }
    let disparity = left[0] - right[0];
    if disparity == T::zero() {
        return Err(Error::InfiniteDepth);
    }
    if disparity < T::zero() {
        return Err(invalid("disparity must be positive"));
    }
    let b = rig.baseline;
    Ok([
        b * left[0] / disparity,
        b * left[1] / disparity,
        b * rig.focal_length / disparity,
    ])
}

/// Per-pixel depth along the optical axis; `∞` where nothing was seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct DepthMap<T: Real> {
    pub width: usize,
    pub height: usize,
    /// Row-major, `height × width`.
    pub depths: Vec<T>,
    pub focal_length: T,
    pub principal_point: [T; 2],
}

impl<T: Real> DepthMap<T> {
    pub fn depth(&self, column: usize, row: usize) -> T {
        self.depths[row * self.width + column]
    }

    /// Pixel coordinates of `(column, row)` relative to the principal point.
    pub fn pixel_coords(&self, column: usize, row: usize) -> [T; 2] {
        [
            T::from_usize_lossy(column) - self.principal_point[0],
            T::from_usize_lossy(row) - self.principal_point[1],
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StereoReading<T: Real> {
    pub input: SafetyInput<T>,
    /// Closest reconstructed point in the left camera frame.
    pub point: [T; 3],
    /// `(column, row)` of the selected pixel.
    pub pixel: (usize, usize),
}

/// Pixel of smallest robot-frame distance, reconstructed through the stereo
/// triangulation. Returns `None` when no pixel has a finite depth.
///
/// The bearing is `−(R_L p + p_L)/‖R_L p + p_L‖`, i.e. the distance gradient
/// pointing away from the obstacle.
pub fn depth_map_to_safety_input<T: Real>(
    map: &DepthMap<T>,
    rig: &StereoRig<T>,
) -> Result<Option<StereoReading<T>>> {
    if map.depths.len() != map.width * map.height {
        return Err(invalid("depth map size does not match its dimensions"));
    }
    let tol = T::lit(1e-9) * (T::one() + rig.focal_length);
    if (map.focal_length - rig.focal_length).abs() > tol {
        return Err(invalid("depth map and rig disagree on the focal length"));
    }
    // (distance, camera point, robot-frame point, pixel)
    type Candidate<T> = (T, [T; 3], [T; 3], (usize, usize));
    let mut best: Option<Candidate<T>> = None;
    for row in 0..map.height {
        for column in 0..map.width {
            let z = map.depth(column, row);
            if !z.is_finite() {
                continue;
            }
            if !(z > T::zero()) {
                return Err(invalid("finite depths must be positive"));
            }
            let left = map.pixel_coords(column, row);
            let disparity = rig.focal_length * rig.baseline / z;
            let right = [left[0] - disparity, left[1]];
            let p = pixel_to_point(left, right, rig)?;
            let q = rig.to_robot_frame(&p);
            let d = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
            if best.as_ref().is_none_or(|b| d < b.0) {
                best = Some((d, p, q, (column, row)));
            }
        }
    }
    Ok(best.map(|(distance, point, q, pixel)| {
        let bearing = (distance > T::zero())
            .then(|| Vector::from([-q[0] / distance, -q[1] / distance, -q[2] / distance]));
        StereoReading {
            input: SafetyInput { distance, bearing },
            point,
            pixel,
        }
    }))
}

/// Renders a depth map by casting one ray per pixel through the pinhole
/// model of the left camera of a robot at `position`.
pub fn simulate_depth_map<T: Real>(
    env: &Environment<T>,
    position: &Point<T>,
    rig: &StereoRig<T>,
    width: usize,
    height: usize,
    max_range: T,
) -> Result<DepthMap<T>> {
    if position.dim() != 3 {
        return Err(invalid("depth maps are rendered in three dimensions"));
    }
    if width == 0 || height == 0 {
        return Err(invalid("depth map resolution must be positive"));
    }
    let origin = Vector::new((0..3).map(|i| position[i] + rig.translation[i]));
    if !env.contains(&origin)? {
        return Err(invalid("camera center outside the free space"));
    }
    let half = T::lit(0.5);
    let principal_point = [
        T::from_usize_lossy(width - 1) * half,
        T::from_usize_lossy(height - 1) * half,
    ];
    let local = env.nearby(&origin, max_range);
    let f = rig.focal_length;
    let mut depths = Vec::with_capacity(width * height);
    for row in 0..height {
        for column in 0..width {
            let u = T::from_usize_lossy(column) - principal_point[0];
            let v = T::from_usize_lossy(row) - principal_point[1];
            let norm = (u * u + v * v + f * f).sqrt();
            let cam = [u / norm, v / norm, f / norm];
            let world = rig.rotate(&cam);
            let t = local.ray_cast_unchecked(origin.as_slice(), &world, max_range);
            depths.push(if t < max_range { t * cam[2] } else { T::infinity() });
        }
    }
    Ok(DepthMap {
        width,
        height,
        depths,
        focal_length: f,
        principal_point,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{LevelFunction, Obstacle};

    fn rig() -> StereoRig<f64> {
        StereoRig::identity_pose(500.0, 0.1).unwrap()
    }

    #[test]
    fn depth_examples() {
        assert_eq!(disparity_to_depth(50.0, 0.0, &rig()).unwrap(), 1.0);
        assert_eq!(disparity_to_depth(0.0, 25.0, &rig()).unwrap(), 2.0);
        assert_eq!(disparity_to_depth(3.0, 3.0, &rig()), Err(Error::InfiniteDepth));
    }

    #[test]
    fn triangulation_examples() {
        let p = pixel_to_point([50.0, 0.0], [0.0, 0.0], &rig()).unwrap();
        assert_eq!(p, [0.1, 0.0, 1.0]);
        let p = pixel_to_point([0.0, 0.0], [-50.0, 0.0], &rig()).unwrap();
        assert_eq!(p[0], 0.0);
        let p = pixel_to_point([50.0, 25.0], [0.0, 25.0], &rig()).unwrap();
        assert_eq!(p, [0.1, 0.05, 1.0]);
        assert!(pixel_to_point([50.0, 25.0], [0.0, 26.0], &rig()).is_err());
        assert!(pixel_to_point([0.0, 0.0], [10.0, 0.0], &rig()).is_err());
    }

    #[test]
    fn rig_validation() {
        let flip = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(StereoRig::new(500.0, 0.1, flip, [0.0; 3]).is_err());
        let skew = [[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(StereoRig::new(500.0, 0.1, skew, [0.0; 3]).is_err());
        assert!(StereoRig::identity_pose(0.0, 0.1).is_err());
    }

    #[test]
    fn single_pixel_on_axis() {
        let mut depths = vec![f64::INFINITY; 9];
        depths[4] = 1.0;
        let map = DepthMap {
            width: 3,
            height: 3,
            depths,
            focal_length: 500.0,
            principal_point: [1.0, 1.0],
        };
        let reading = depth_map_to_safety_input(&map, &rig()).unwrap().unwrap();
        assert_eq!(reading.input.distance, 1.0);
        assert_eq!(reading.pixel, (1, 1));
        assert_eq!(reading.input.bearing.unwrap(), Vector::from([-0.0, -0.0, -1.0]));
    }

    #[test]
    fn blank_map_signals_no_obstacle() {
        let map = DepthMap {
            width: 2,
            height: 2,
            depths: vec![f64::INFINITY; 4],
            focal_length: 500.0,
            principal_point: [0.5, 0.5],
        };
        assert!(depth_map_to_safety_input(&map, &rig()).unwrap().is_none());
    }

    #[test]
    fn empty_scene_renders_infinite() {
        let env = Environment::new(None, vec![]);
        let map = simulate_depth_map(&env, &Vector::from([0.0, 0.0, 0.0]), &rig(), 8, 6, 10.0).unwrap();
        assert!(map.depths.iter().all(|d| d.is_infinite()));
    }

    #[test]
    fn fronto_parallel_plane_has_constant_depth() {
        let plane = LevelFunction::plane(Vector::from([0.0, 0.0, 1.0]), 2.0).unwrap();
        let env = Environment::new(None, vec![Obstacle::implicit(plane)]);
        let map = simulate_depth_map(&env, &Vector::from([0.0, 0.0, 0.0]), &rig(), 9, 7, 10.0).unwrap();
        for d in &map.depths {
            assert!((d - 2.0).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn ball_center_pixel_depth() {
        let env = Environment::new(None, vec![Obstacle::ball([0.0, 0.0, 2.0], 0.5)]);
        let map = simulate_depth_map(&env, &Vector::from([0.0, 0.0, 0.0]), &rig(), 21, 21, 10.0).unwrap();
        assert_eq!(map.depth(10, 10), 1.5);
    }
}
