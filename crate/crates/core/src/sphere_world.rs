//! Sphere worlds: a workspace ball minus separated obstacle balls.
//!
//! Under the projected law every obstacle contributes exactly one undesired
//! equilibrium, the boundary point diametrically opposite the goal,
//! `x̄ᵢ = (1 − αᵢ)x_d + αᵢcᵢ` with `αᵢ = 1 + rᵢ/‖x_d − cᵢ‖`. The workspace
//! boundary contributes none.

use serde::{Deserialize, Serialize};

use crate::control::{nominal_control, ControllerConfig, TangentProjector};
use crate::error::{invalid, Error, Result};
use crate::geometry::{Ball, Environment, Obstacle};
use crate::real::Real;
use crate::sim::{run_from, ControllerKind, InitialState, Outcome, SimConfig};
use crate::vector::{Point, Vector};

/// Radius of the ball around `x̄ᵢ` a probe has to leave to count as escaped.
pub const ESCAPE_RADIUS: f64 = 0.1;
/// Distance within which a point counts as lying on the boundary.
pub const ON_BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct SphereWorld<T: Real> {
    /// Absent for unbounded worlds such as the complement of a single ball.
    pub workspace: Option<Ball<T>>,
    pub obstacles: Vec<Ball<T>>,
}

impl<T: Real> SphereWorld<T> {
    pub fn new(workspace: Option<Ball<T>>, obstacles: Vec<Ball<T>>) -> Result<Self> {
        let world = Self { workspace, obstacles };
        let report = world.environment().validate_sphere_world()?;
        if !report.passed {
            return Err(Error::Validation(report));
        }
        Ok(world)
    }

    pub fn from_environment(env: &Environment<T>) -> Result<Self> {
        let obstacles = env
            .obstacles
            .iter()
            .map(|o| {
                o.as_ball()
                    .ok_or_else(|| Error::Unsupported("sphere worlds contain only balls".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(env.workspace.clone(), obstacles)
    }

    pub fn environment(&self) -> Environment<T> {
        Environment::new(
            self.workspace.clone(),
            self.obstacles
                .iter()
                .map(|b| Obstacle::ball(b.center.clone(), b.radius))
                .collect(),
        )
    }

    /// Outward unit normal of the free space at a boundary point `x`.
    pub fn boundary_normal(&self, x: &Point<T>) -> Option<Vector<T>> {
        let tol = T::lit(ON_BOUNDARY_TOLERANCE);
        for b in &self.obstacles {
            let offset = x - &b.center;
            if (offset.norm() - b.radius).abs() <= tol {
                return offset.normalized().map(|u| -u);
            }
        }
        if let Some(w) = &self.workspace {
            let offset = x - &w.center;
            if (w.radius - offset.norm()).abs() <= tol {
                return offset.normalized();
            }
        }
        None
    }

    fn check_goal(&self, cfg: &ControllerConfig<T>) -> Result<()> {
        let env = self.environment();
        let goal = &cfg.goal;
        if env.dimension().is_some_and(|n| n != goal.dim()) {
            return Err(invalid("goal dimension differs from the world"));
        }
        if !env.contains(goal)? || env.boundary_query(goal)?.distance <= T::zero() {
            return Err(invalid("goal must lie in the interior of the free space"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct Equilibrium<T: Real> {
    pub obstacle: usize,
    pub point: Point<T>,
    pub alpha: T,
    /// Speed of the projected law at the point.
    pub residual: T,
    /// Half-line `{point + s·direction, s ≥ 0}` that flows into the point.
    pub stable_manifold: StableManifold<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct StableManifold<T: Real> {
    pub origin: Point<T>,
    pub direction: Vector<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct EquilibriumReport<T: Real> {
    pub goal: Point<T>,
    pub points: Vec<Equilibrium<T>>,
}

/// Speed of the projected law at `x` seen as a point of obstacle `normal`.
fn projected_speed<T: Real>(x: &Point<T>, normal: Vector<T>, cfg: &ControllerConfig<T>) -> Result<T> {
    let kappa = nominal_control(x, cfg);
    if normal.dot(&kappa) > T::zero() {
        Ok(TangentProjector::new(normal)?.apply(&kappa).norm())
    } else {
        Ok(kappa.norm())
    }
}

pub fn undesired_equilibria<T: Real>(
    world: &SphereWorld<T>,
    cfg: &ControllerConfig<T>,
) -> Result<EquilibriumReport<T>> {
    world.check_goal(cfg)?;
    let goal = &cfg.goal;
    let mut points = Vec::with_capacity(world.obstacles.len());
    for (i, b) in world.obstacles.iter().enumerate() {
        let toward = &b.center - goal;
        let span = toward.norm();
        let alpha = T::one() + b.radius / span;
        let point = goal.add_scaled(alpha, &toward);
        let normal = (&b.center - &point)
            .normalized()
            .ok_or_else(|| invalid("degenerate obstacle"))?;
        let residual = projected_speed(&point, normal, cfg)?;
        points.push(Equilibrium {
            obstacle: i,
            stable_manifold: StableManifold {
                origin: point.clone(),
                direction: toward.scaled(T::one() / span),
            },
            point,
            alpha,
            residual,
        });
    }
    Ok(EquilibriumReport {
        goal: goal.clone(),
        points,
    })
}

/// `‖Π(ν)κ0‖` when `νᵀκ0 > 0` and `‖κ0‖` otherwise, for a boundary point `x`.
pub fn equilibrium_residual<T: Real>(
    world: &SphereWorld<T>,
    x: &Point<T>,
    cfg: &ControllerConfig<T>,
) -> Result<T> {
    let normal = world
        .boundary_normal(x)
        .ok_or_else(|| invalid("point is not on the boundary of the free space"))?;
    projected_speed(x, normal, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub start: Vec<f64>,
    pub escaped: bool,
    pub escape_time: Option<f64>,
    pub terminal_distance: f64,
    pub converged: bool,
    pub outcome: Outcome,
    pub max_lyapunov_increase: f64,
}

/// Unit tangent at `x̄` along the lowest-index axis not parallel to `ν`.
pub fn probe_tangent<T: Real>(normal: &Vector<T>) -> Option<Vector<T>> {
    (0..normal.dim()).find_map(|j| {
        let e = Vector::basis(normal.dim(), j);
        let t = e.add_scaled(-normal.dot(&e), normal);
        if t.norm() > T::lit(1e-6) {
            t.normalized()
        } else {
            None
        }
    })
}

/// Simulates the projected law from `x̄ᵢ` moved by arc length `perturbation`
/// along the obstacle surface.
pub fn instability_probe<T: Real>(
    world: &SphereWorld<T>,
    index: usize,
    cfg: &ControllerConfig<T>,
    perturbation: T,
    horizon: T,
) -> Result<ProbeReport> {
    if !(perturbation >= T::zero()) {
        return Err(invalid("perturbation must be non-negative"));
    }
    let report = undesired_equilibria(world, cfg)?;
    let eq = report
        .points
        .get(index)
        .ok_or_else(|| invalid(format!("no obstacle with index {index}")))?;
    let start = if perturbation == T::zero() {
        eq.point.clone()
    } else {
        let b = &world.obstacles[index];
        let radial = (&eq.point - &b.center).scaled(T::one() / b.radius);
        let tangent = probe_tangent(&radial).ok_or_else(|| invalid("no tangent direction"))?;
        let angle = perturbation / b.radius;
        let on_sphere = b
            .center
            .add_scaled(b.radius * angle.cos(), &radial)
            .add_scaled(b.radius * angle.sin(), &tangent);
        world.environment().project_to_free_space(&on_sphere)?
    };
    probe_from(world, index, cfg, &start, horizon)
}

/// Simulates the projected law from an arbitrary `start` and measures when it
/// leaves the escape ball around `x̄ᵢ`.
pub fn probe_from<T: Real>(
    world: &SphereWorld<T>,
    index: usize,
    cfg: &ControllerConfig<T>,
    start: &Point<T>,
    horizon: T,
) -> Result<ProbeReport> {
    let report = undesired_equilibria(world, cfg)?;
    let eq = report
        .points
        .get(index)
        .ok_or_else(|| invalid(format!("no obstacle with index {index}")))?;
    let env = world.environment();
    let mut sim = SimConfig::new(
        cfg.clone(),
        ControllerKind::DiscontinuousExact,
        InitialState::Point(start.clone()),
    );
    sim.max_time = horizon;
    let traj = run_from(&env, &sim, start)?;
    let radius = T::lit(ESCAPE_RADIUS);
    let escape = traj.states.iter().position(|x| x.distance(&eq.point) > radius);
    let terminal = traj.final_state().distance(&cfg.goal);
    Ok(ProbeReport {
        start: start.to_f64(),
        escaped: escape.is_some(),
        escape_time: escape.map(|j| traj.times[j].to_f64_lossy()),
        terminal_distance: terminal.to_f64_lossy(),
        converged: traj.outcome == Outcome::Converged,
        outcome: traj.outcome,
        max_lyapunov_increase: traj.max_lyapunov_increase().to_f64_lossy(),
    })
}
