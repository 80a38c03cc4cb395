//! Goal-seeking law and its projections onto the safety velocity cone.
//!
//! At a smooth boundary point with outward unit normal `ν` the admissible
//! velocities form the half-space `{z : νᵀz ≤ 0}`. The discontinuous law
//! projects the nominal velocity onto that half-space when it points
//! outward; the continuous law blends the same projection in over a band
//! `[ε, ε′]` of distances using the distance gradient `∇d = −ν`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{BoundaryQuery, Environment};
use crate::real::Real;
use crate::vector::{Point, Vector};

/// Tolerance on precondition checks involving the margins.
pub const MARGIN_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct ControllerConfig<T: Real> {
    pub goal: Point<T>,
    /// Nominal gain `k` (1/s).
    #[serde(rename = "k")]
    pub gain: T,
    /// Safety margin `ε` kept from the obstacles.
    #[serde(rename = "epsilon")]
    pub inner_margin: T,
    /// Distance `ε′` at which avoidance starts.
    #[serde(rename = "epsilon_prime")]
    pub outer_margin: T,
    pub sensing_radius: T,
}

impl<T: Real> ControllerConfig<T> {
    pub fn new(goal: impl Into<Point<T>>, gain: T, inner: T, outer: T, sensing_radius: T) -> Self {
        Self {
            goal: goal.into(),
            gain,
            inner_margin: inner,
            outer_margin: outer,
            sensing_radius,
        }
    }

    /// Checks `k > 0`, `0 < ε < ε′ ≤ h` and `ε′ < R`; `h` defaults to `ε′`.
    pub fn validate(&self, reach: Option<T>) -> Result<()> {
        if !self.goal.is_finite() || self.goal.dim() < 2 {
            return Err(invalid("goal must be a finite point of dimension ≥ 2"));
        }
        if !(self.gain > T::zero()) {
            return Err(invalid("gain k must be positive"));
        }
        if !(self.inner_margin > T::zero() && self.inner_margin < self.outer_margin) {
            return Err(invalid("margins must satisfy 0 < epsilon < epsilon_prime"));
        }
        let reach = reach.unwrap_or(self.outer_margin);
        if self.outer_margin > reach {
            return Err(invalid("epsilon_prime exceeds the reach margin h"));
        }
        if !(self.outer_margin < self.sensing_radius) {
            return Err(invalid("epsilon_prime must be below the sensing radius"));
        }
        Ok(())
    }

    /// Validates the gains and requires the goal to lie strictly inside the
    /// eroded free space `{d > ε}` of `env`.
    pub fn validate_for(&self, env: &Environment<T>) -> Result<()> {
        self.validate(env.reach_margin)?;
        if !env.contains(&self.goal)? {
            return Err(invalid("goal lies outside the free space"));
        }
        let q = env.boundary_query(&self.goal)?;
        if !(q.distance > self.inner_margin) {
            return Err(invalid(format!(
                "goal is within the safety margin (distance {})",
                q.distance
            )));
        }
        Ok(())
    }
}

/// Which branch of a projected law produced a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Nominal,
    Blending,
    FullProjection,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Nominal => "nominal",
            Mode::Blending => "blending",
            Mode::FullProjection => "full-projection",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Command<T: Real> {
    pub velocity: Vector<T>,
    pub mode: Mode,
}

/// Distance and bearing information consumed by the continuous law.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetyInput<T: Real> {
    pub distance: T,
    /// `∇d`, pointing from the closest obstacle point toward the robot.
    /// `None` when no obstacle is within range.
    pub bearing: Option<Vector<T>>,
}

impl<T: Real> SafetyInput<T> {
    pub fn clear() -> Self {
        Self {
            distance: T::infinity(),
            bearing: None,
        }
    }

    pub fn from_query(q: &BoundaryQuery<T>) -> Self {
        Self {
            distance: q.distance,
            bearing: q.gradient.clone(),
        }
    }
}

/// `κ₀(x) = −k(x − x_d)`.
pub fn nominal_control<T: Real>(x: &Point<T>, cfg: &ControllerConfig<T>) -> Vector<T> {
    (x - &cfg.goal).scaled(-cfg.gain)
}

/// Orthogonal projector `Π(ν) = I − ννᵀ` onto the hyperplane normal to `ν`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentProjector<T: Real> {
    normal: Vector<T>,
}

impl<T: Real> TangentProjector<T> {
    pub fn new(normal: Vector<T>) -> Result<Self> {
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(64.0));
        if !normal.is_finite() || (normal.norm() - T::one()).abs() > tol {
            return Err(invalid("projector normal must be a unit vector"));
        }
        Ok(Self { normal })
    }

    pub fn normal(&self) -> &Vector<T> {
        &self.normal
    }

    pub fn apply(&self, w: &Vector<T>) -> Vector<T> {
        w.add_scaled(-self.normal.dot(w), &self.normal)
    }

    /// Dense row-major matrix of the projector.
    pub fn matrix(&self) -> Vec<Vec<T>> {
        let n = self.normal.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let id = if i == j { T::one() } else { T::zero() };
                        id - self.normal[i] * self.normal[j]
                    })
                    .collect()
            })
            .collect()
    }
}

/// Membership of `z` in the half-space tangent cone `{νᵀz ≤ 0}`.
pub fn cone_contains<T: Real>(normal: &Vector<T>, z: &Vector<T>) -> bool {
    normal.dot(z) <= T::zero()
}

/// Discontinuous projected law.
///
/// `boundary_normal` is the outward unit normal `ν(x)` when `x` lies on the
/// boundary and `None` in the interior. When `νᵀκ₀ = 0` both branches agree;
/// the projected one is evaluated.
pub fn project_discontinuous<T: Real>(
    x: &Point<T>,
    boundary_normal: Option<&Vector<T>>,
    cfg: &ControllerConfig<T>,
) -> Command<T> {
    let nominal = nominal_control(x, cfg);
    match boundary_normal {
        Some(nu) if nu.dot(&nominal) >= T::zero() => Command {
            velocity: nominal.add_scaled(-nu.dot(&nominal), nu),
            mode: Mode::FullProjection,
        },
        _ => Command {
            velocity: nominal,
            mode: Mode::Nominal,
        },
    }
}

/// `φ = min(1, (ε′ − d)/(ε′ − ε))`, clamped below at zero.
pub fn smoothing_factor<T: Real>(distance: T, cfg: &ControllerConfig<T>) -> T {
    let raw = (cfg.outer_margin - distance) / (cfg.outer_margin - cfg.inner_margin);
    raw.min(T::one()).max(T::zero())
}

/// Continuous law: `(I − φ ggᵀ)κ₀` inside the band when `κ₀` points toward
/// the obstacle, `κ₀` otherwise.
///
/// Below the inner margin `φ` saturates at one; callers that care about
/// margin violations check [`margin_violated`].
pub fn project_smooth<T: Real>(
    x: &Point<T>,
    input: &SafetyInput<T>,
    cfg: &ControllerConfig<T>,
) -> Command<T> {
    let nominal = nominal_control(x, cfg);
    let Some(g) = input.bearing.as_ref() else {
        return Command {
            velocity: nominal,
            mode: Mode::Nominal,
        };
    };
    let along = nominal.dot(g);
    if input.distance > cfg.outer_margin || along > T::zero() {
        return Command {
            velocity: nominal,
            mode: Mode::Nominal,
        };
    }
    let phi = smoothing_factor(input.distance, cfg);
    let mode = if phi >= T::one() {
        Mode::FullProjection
    } else if phi > T::zero() {
        Mode::Blending
    } else {
        Mode::Nominal
    };
    Command {
        velocity: nominal.add_scaled(-phi * along, g),
        mode,
    }
}

/// True when the measured distance is below the inner margin by more than
/// [`MARGIN_TOLERANCE`].
pub fn margin_violated<T: Real>(input: &SafetyInput<T>, cfg: &ControllerConfig<T>) -> bool {
    input.distance < cfg.inner_margin - T::lit(MARGIN_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(goal: [f64; 2], k: f64) -> ControllerConfig<f64> {
        ControllerConfig::new(goal, k, 0.2, 0.4, 0.5)
    }

    #[test]
    fn nominal_examples() {
        let c = cfg([-9.0, 3.0], 0.5);
        assert_eq!(nominal_control(&c.goal, &c), Vector::zeros(2));
        assert_eq!(
            nominal_control(&Vector::from([0.0, 3.0]), &c),
            Vector::from([-4.5, 0.0])
        );
        let c3 = ControllerConfig::new([0.0, 0.0, 0.0], 1.0, 0.2, 0.4, 0.5);
        assert_eq!(
            nominal_control(&Vector::from([1.0, 2.0, 3.0]), &c3),
            Vector::from([-1.0, -2.0, -3.0])
        );
    }

    #[test]
    fn projector_examples() {
        let p = TangentProjector::new(Vector::from([1.0, 0.0])).unwrap();
        assert_eq!(p.matrix(), vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
        let s = 1.0 / 2f64.sqrt();
        let p = TangentProjector::new(Vector::from([s, s])).unwrap();
        assert!(p.apply(&Vector::from([s, s])).norm() < 1e-15);
        let p = TangentProjector::new(Vector::from([0.0, 1.0])).unwrap();
        assert_eq!(p.apply(&Vector::from([3.0, 0.0])), Vector::from([3.0, 0.0]));
        assert!(TangentProjector::new(Vector::from([1.0, 1.0])).is_err());
    }

    #[test]
    fn cone_examples() {
        assert!(cone_contains(
            &Vector::from([1.0, 0.0]),
            &Vector::from([-1.0, 5.0])
        ));
        assert!(!cone_contains(
            &Vector::from([1.0, 0.0]),
            &Vector::from([0.1, 0.0])
        ));
        assert!(cone_contains(
            &Vector::from([0.0, 1.0]),
            &Vector::from([7.0, 0.0])
        ));
    }

    #[test]
    fn discontinuous_examples() {
        let c = cfg([0.0, 0.0], 1.0);
        let x = Vector::from([3.0, 4.0]);
        let out = project_discontinuous(&x, None, &c);
        assert_eq!(out.velocity, Vector::from([-3.0, -4.0]));
        assert_eq!(out.mode, Mode::Nominal);

        // Antipodal point of the ball at (2,2), r = 0.5: κ₀ is parallel to ν.
        let a = 1.0 + 1.0 / (4.0 * 2f64.sqrt());
        let xbar = Vector::from([2.0 * a, 2.0 * a]);
        let nu = (&Vector::from([2.0, 2.0]) - &xbar).normalized().unwrap();
        let out = project_discontinuous(&xbar, Some(&nu), &c);
        assert!(out.velocity.norm() < 1e-12);

        // ν = (0,1), κ₀ = (1,1): goal chosen so that κ₀(x) = (1,1).
        let c = cfg([1.0, 1.0], 1.0);
        let out = project_discontinuous(&Vector::from([0.0, 0.0]), Some(&Vector::from([0.0, 1.0])), &c);
        assert_eq!(out.velocity, Vector::from([1.0, 0.0]));
        assert_eq!(out.mode, Mode::FullProjection);
    }

    #[test]
    fn discontinuous_seam_is_exact() {
        let c = cfg([0.0, 0.0], 2.0);
        let x = Vector::from([0.0, 1.0]);
        let out = project_discontinuous(&x, Some(&Vector::from([1.0, 0.0])), &c);
        assert_eq!(out.velocity, nominal_control(&x, &c));
    }

    #[test]
    fn smoothing_examples() {
        let c = cfg([0.0, 0.0], 1.0);
        assert_eq!(smoothing_factor(0.4, &c), 0.0);
        assert_eq!(smoothing_factor(0.2, &c), 1.0);
        assert!((smoothing_factor(0.3, &c) - 0.5).abs() < 1e-15);
        assert_eq!(smoothing_factor(0.1, &c), 1.0);
        assert_eq!(smoothing_factor(0.9, &c), 0.0);
    }

    #[test]
    fn smooth_outside_band_is_nominal() {
        let c = cfg([0.0, 0.0], 1.0);
        let x = Vector::from([1.0, 1.0]);
        let s = SafetyInput {
            distance: 1.0,
            bearing: Some(Vector::from([1.0, 0.0])),
        };
        assert_eq!(project_smooth(&x, &s, &c).velocity, nominal_control(&x, &c));
        assert_eq!(project_smooth(&x, &SafetyInput::clear(), &c).mode, Mode::Nominal);
    }

    #[test]
    fn smooth_head_on_at_inner_margin_stops() {
        let c = cfg([0.0, 0.0], 1.0);
        let x = Vector::from([2.0, 0.0]);
        // κ₀ = (−2, 0); bearing antiparallel to it.
        let s = SafetyInput {
            distance: 0.2,
            bearing: Some(Vector::from([1.0, 0.0])),
        };
        let out = project_smooth(&x, &s, &c);
        assert_eq!(out.velocity, Vector::from([0.0, 0.0]));
        assert_eq!(out.mode, Mode::FullProjection);
    }

    #[test]
    fn smooth_band_midpoint() {
        // Independent scalar evaluation: κ₀ = (1,−1), g = (0,1), φ = 0.5,
        // κ₀·g = −1, so the output is (1, −1 − 0.5·(−1)·1) = (1, −0.5).
        let c = cfg([1.0, -1.0], 1.0);
        let x = Vector::from([0.0, 0.0]);
        let s = SafetyInput {
            distance: 0.3,
            bearing: Some(Vector::from([0.0, 1.0])),
        };
        let out = project_smooth(&x, &s, &c);
        assert!((out.velocity[0] - 1.0).abs() < 1e-15);
        assert!((out.velocity[1] + 0.5).abs() < 1e-15);
        assert_eq!(out.mode, Mode::Blending);

        // With g = (0,−1) the nominal velocity has κ₀·g = 1 > 0 and is kept.
        let s = SafetyInput {
            distance: 0.3,
            bearing: Some(Vector::from([0.0, -1.0])),
        };
        assert_eq!(project_smooth(&x, &s, &c).velocity, Vector::from([1.0, -1.0]));
    }

    #[test]
    fn config_validation() {
        assert!(cfg([0.0, 0.0], 0.5).validate(None).is_ok());
        assert!(cfg([0.0, 0.0], 0.0).validate(None).is_err());
        let bad = ControllerConfig::new([0.0, 0.0], 1.0, 0.4, 0.2, 0.5);
        assert!(bad.validate(None).is_err());
        let short_range = ControllerConfig::new([0.0, 0.0], 1.0, 0.2, 0.4, 0.3);
        assert!(short_range.validate(None).is_err());
        assert!(cfg([0.0, 0.0], 1.0).validate(Some(0.3)).is_err());
    }

    #[test]
    fn config_json_field_names() {
        let json = serde_json::to_string(&cfg([-9.0, 3.0], 0.5)).unwrap();
        assert_eq!(
            json,
            r#"{"goal":[-9.0,3.0],"k":0.5,"epsilon":0.2,"epsilon_prime":0.4,"sensing_radius":0.5}"#
        );
    }
}
