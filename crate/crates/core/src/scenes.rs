//! Builtin environments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Ball, Environment, LevelFunction, Obstacle, WallSide};
use crate::real::Real;
use crate::sphere_world::SphereWorld;
use crate::vector::Vector;

/// Amplitude, offset and ball radius of the sinusoidal corridor.
pub const CORRIDOR_AMPLITUDE: f64 = 4.0;
pub const CORRIDOR_OFFSET: f64 = 5.0;
pub const CORRIDOR_BALL_RADIUS: f64 = 2.0;

fn default_x_range() -> [f64; 2] {
    [-12.0, 15.0]
}

fn default_sensing_radius() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereWorldSpec {
    #[serde(default = "SphereWorldSpec::default_dim")]
    pub dim: usize,
    pub obstacles: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "SphereWorldSpec::default_workspace_radius")]
    pub workspace_radius: f64,
    #[serde(default = "SphereWorldSpec::default_radius_range")]
    pub radius_range: [f64; 2],
    /// Smallest gap between two obstacles and between an obstacle and the
    /// workspace boundary.
    #[serde(default = "SphereWorldSpec::default_gap")]
    pub min_gap: f64,
    /// Point kept at least `goal_clearance` away from every obstacle.
    #[serde(default)]
    pub goal: Option<Vec<f64>>,
    #[serde(default = "SphereWorldSpec::default_gap")]
    pub goal_clearance: f64,
}

impl SphereWorldSpec {
    fn default_dim() -> usize {
        2
    }
    fn default_workspace_radius() -> f64 {
        10.0
    }
    fn default_radius_range() -> [f64; 2] {
        [0.5, 1.5]
    }
    fn default_gap() -> f64 {
        1.0
    }

    pub fn new(dim: usize, obstacles: usize, seed: u64) -> Self {
        Self {
            dim,
            obstacles,
            seed,
            workspace_radius: Self::default_workspace_radius(),
            radius_range: Self::default_radius_range(),
            min_gap: Self::default_gap(),
            goal: None,
            goal_clearance: Self::default_gap(),
        }
    }

    pub fn goal_point(&self) -> Vec<f64> {
        self.goal.clone().unwrap_or_else(|| vec![0.0; self.dim])
    }
}

/// A builtin scene with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Scene {
    /// Complement of the ball of radius 0.5 centred at (2, 2).
    Fig2,
    /// Region between two sinusoidal walls with a row of balls in between.
    PaperCorridor {
        /// Horizontal extent the robot may visit; balls are kept for every
        /// centre within this range widened by the sensing radius and the
        /// ball radius.
        #[serde(default = "default_x_range")]
        x_range: [f64; 2],
        #[serde(default = "default_sensing_radius")]
        sensing_radius: f64,
    },
    SphereWorld(SphereWorldSpec),
}

impl Scene {
    /// Scene with default parameters for a builtin name.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "fig2" => Ok(Scene::Fig2),
            "paper-corridor" => Ok(Scene::PaperCorridor {
                x_range: default_x_range(),
                sensing_radius: default_sensing_radius(),
            }),
            "sphere-world" => Ok(Scene::SphereWorld(SphereWorldSpec::new(2, 3, 0))),
            other => Err(invalid(format!(
                "unknown scene '{other}' (expected fig2, paper-corridor or sphere-world)"
            ))),
        }
    }

    pub fn build<T: Real>(&self) -> Result<Environment<T>> {
        match self {
            Scene::Fig2 => Ok(fig2()),
            Scene::PaperCorridor {
                x_range,
                sensing_radius,
            } => paper_corridor(x_range[0], x_range[1], *sensing_radius),
            Scene::SphereWorld(spec) => Ok(random_sphere_world::<T>(spec)?.environment()),
        }
    }
}

pub fn build_scene<T: Real>(name: &str) -> Result<Environment<T>> {
    Scene::named(name)?.build()
}

pub fn fig2<T: Real>() -> Environment<T> {
    Environment::new(
        None,
        vec![Obstacle::ball([T::lit(2.0), T::lit(2.0)], T::lit(0.5))],
    )
}

/// Ball indices `q` whose centre `(4q+3)π/2` lies in `[lo, hi]`.
pub fn corridor_window(lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let first = ((lo / half_pi - 3.0) / 4.0).ceil() as i64;
    let last = ((hi / half_pi - 3.0) / 4.0).floor() as i64;
    first..=last
}

pub fn paper_corridor<T: Real>(x_min: f64, x_max: f64, sensing_radius: f64) -> Result<Environment<T>> {
    if !(x_min.is_finite() && x_max.is_finite() && x_min <= x_max) {
        return Err(invalid("corridor x range must be finite and ordered"));
    }
    if !(sensing_radius >= 0.0) {
        return Err(invalid("sensing radius must be non-negative"));
    }
    let pad = sensing_radius + CORRIDOR_BALL_RADIUS;
    let mut obstacles = vec![
        Obstacle::implicit(LevelFunction::SineWall {
            amplitude: T::lit(CORRIDOR_AMPLITUDE),
            offset: T::lit(CORRIDOR_OFFSET),
            side: WallSide::Below,
        }),
        Obstacle::implicit(LevelFunction::SineWall {
            amplitude: T::lit(CORRIDOR_AMPLITUDE),
            offset: T::lit(CORRIDOR_OFFSET),
            side: WallSide::Above,
        }),
    ];
    for q in corridor_window(x_min - pad, x_max + pad) {
        let cx = (4 * q + 3) as f64 * std::f64::consts::FRAC_PI_2;
        obstacles.push(Obstacle::ball(
            [T::lit(cx), T::zero()],
            T::lit(CORRIDOR_BALL_RADIUS),
        ));
    }
    Ok(Environment::new(None, obstacles))
}

/// Seeded random sphere world centred at the origin.
pub fn random_sphere_world<T: Real>(spec: &SphereWorldSpec) -> Result<SphereWorld<T>> {
    let [r_lo, r_hi] = spec.radius_range;
    if spec.dim < 2 {
        return Err(invalid("sphere worlds need dimension ≥ 2"));
    }
    if !(r_lo > 0.0 && r_lo <= r_hi && spec.min_gap >= 0.0 && spec.goal_clearance >= 0.0) {
        return Err(invalid("invalid radius range or clearances"));
    }
    let goal = spec.goal_point();
    if goal.len() != spec.dim {
        return Err(invalid("goal dimension differs from the world"));
    }
    let r0 = spec.workspace_radius;
    let goal_norm = goal.iter().map(|g| g * g).sum::<f64>().sqrt();
    if goal_norm + spec.goal_clearance >= r0 {
        return Err(invalid("goal too close to the workspace boundary"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut balls: Vec<(Vec<f64>, f64)> = Vec::with_capacity(spec.obstacles);
    for _ in 0..spec.obstacles {
        let mut placed = false;
        for _ in 0..100_000 {
            let r = if r_hi > r_lo {
                rng.gen_range(r_lo..=r_hi)
            } else {
                r_lo
            };
            let reach = r0 - r - spec.min_gap;
            if reach <= 0.0 {
                break;
            }
            let c: Vec<f64> = (0..spec.dim).map(|_| rng.gen_range(-reach..=reach)).collect();
            let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm(&c) > reach {
                continue;
            }
            let gap_to = |p: &[f64]| norm(&p.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>());
            if gap_to(&goal) - r < spec.goal_clearance {
                continue;
            }
            if balls.iter().any(|(o, ro)| gap_to(o) - ro - r < spec.min_gap) {
                continue;
            }
            balls.push((c, r));
            placed = true;
            break;
        }
        if !placed {
            return Err(invalid(format!(
                "could not place {} obstacles with the requested clearances",
                spec.obstacles
            )));
        }
    }
    SphereWorld::new(
        Some(Ball::new(Vector::zeros(spec.dim), T::lit(r0))),
        balls
            .into_iter()
            .map(|(c, r)| Ball::new(Vector::from_f64(&c), T::lit(r)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fig2_has_one_ball_and_no_workspace() {
        let env = build_scene::<f64>("fig2").unwrap();
        assert!(env.workspace.is_none());
        assert_eq!(env.obstacles.len(), 1);
        assert_eq!(env.obstacles[0].as_ball().unwrap(), Ball::new([2.0, 2.0], 0.5));
    }

    #[test]
    fn corridor_ball_centres() {
        let env = paper_corridor::<f64>(-9.0, 12.0, 0.5).unwrap();
        let centres: Vec<f64> = env
            .obstacles
            .iter()
            .filter_map(|o| o.as_ball())
            .map(|b| b.center[0])
            .collect();
        for expect in [-5.0 * PI / 2.0, -PI / 2.0, 3.0 * PI / 2.0, 7.0 * PI / 2.0] {
            assert!(centres.iter().any(|c| (c - expect).abs() < 1e-12), "{expect}");
        }
        // Window is [−11.5, 14.5].
        assert!(centres.iter().all(|c| (-11.5..=14.5).contains(c)));
        assert!(!centres.iter().any(|c| (c + 9.0 * PI / 2.0).abs() < 1e-12));
    }

    #[test]
    fn corridor_membership() {
        let env = build_scene::<f64>("paper-corridor").unwrap();
        assert!(!env.contains(&Vector::from([0.0, 0.0])).unwrap());
        assert!(env.contains(&Vector::from([-9.0, 3.0])).unwrap());
        assert!(!env.contains(&Vector::from([PI / 2.0, 1.5])).unwrap());
    }

    #[test]
    fn unknown_scene_is_an_error() {
        assert!(build_scene::<f64>("maze").is_err());
    }

    #[test]
    fn random_worlds_are_valid_and_reproducible() {
        for dim in [2, 3] {
            let spec = SphereWorldSpec::new(dim, 4, 7);
            let a = random_sphere_world::<f64>(&spec).unwrap();
            let b = random_sphere_world::<f64>(&spec).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.obstacles.len(), 4);
        }
    }

    #[test]
    fn scene_json_names() {
        let s: Scene = serde_json::from_str(r#"{"name":"paper-corridor"}"#).unwrap();
        assert_eq!(s, Scene::named("paper-corridor").unwrap());
        let s: Scene = serde_json::from_str(r#"{"name":"sphere-world","obstacles":2,"seed":4}"#).unwrap();
        assert!(matches!(s, Scene::SphereWorld(ref w) if w.obstacles == 2 && w.seed == 4));
    }
}
