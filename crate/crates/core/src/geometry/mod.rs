//! Free-space description and the distance / ray queries the controllers use.
//!
//! The free space is the closure of a workspace ball (optional) minus a
//! union of open obstacles. Balls and planes have closed-form queries;
//! other implicit obstacles are handled by ray sweeps followed by a Newton
//! refinement of the closest-point conditions.

mod distance;
pub mod level;
mod ray;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::real::Real;
use crate::vector::{Point, Vector};

pub use level::{LevelField, LevelFunction, WallSide};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball<T: Real> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> Ball<T> {
    pub fn new(center: impl Into<Point<T>>, radius: T) -> Self {
        Self {
            center: center.into(),
            radius,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub enum Obstacle<T: Real> {
    /// Open ball `‖x − center‖ < radius`.
    Ball { center: Point<T>, radius: T },
    /// Open region `{g(x) > 0}`.
    Implicit { level: LevelFunction<T> },
}

impl<T: Real> Obstacle<T> {
    pub fn ball(center: impl Into<Point<T>>, radius: T) -> Self {
        Self::Ball {
            center: center.into(),
            radius,
        }
    }

    pub fn implicit(level: LevelFunction<T>) -> Self {
        Self::Implicit { level }
    }

    pub fn as_ball(&self) -> Option<Ball<T>> {
        match self {
            Self::Ball { center, radius } => Some(Ball::new(center.clone(), *radius)),
            Self::Implicit { .. } => None,
        }
    }
}

/// Numerical parameters of the ray and distance searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryOptions<T: Real> {
    /// Bracketing step along rays.
    pub ray_step: T,
    /// Bisection tolerance along rays.
    pub ray_tolerance: T,
    /// Number of sweep directions used for implicit-obstacle distances.
    pub sweep_directions: usize,
    /// Longest ray used when searching for the closest implicit boundary point.
    pub search_range: T,
}

impl<T: Real> Default for QueryOptions<T> {
    fn default() -> Self {
        Self {
            ray_step: T::lit(1e-2),
            ray_tolerance: T::lit(1e-9),
            sweep_directions: 360,
            search_range: T::lit(50.0),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct Environment<T: Real> {
    #[serde(default)]
    pub workspace: Option<Ball<T>>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle<T>>,
    /// Assumed reach of the obstacle region; controllers default it to their
    /// outer margin when absent.
    #[serde(default)]
    pub reach_margin: Option<T>,
    #[serde(default)]
    pub query: QueryOptions<T>,
}

/// Which boundary component a query resolved to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    Workspace,
    Obstacle(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryQuery<T: Real> {
    /// Distance to the obstacle region; infinite for an unbounded empty scene.
    pub distance: T,
    pub closest_point: Option<Point<T>>,
    /// Gradient of the distance field, pointing away from the obstacles.
    pub gradient: Option<Vector<T>>,
    pub unique: bool,
    pub feature: Option<Feature>,
}

/// Outcome of the sphere-world structural checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// `‖cᵢ − cⱼ‖ ≤ rᵢ + rⱼ`.
    Overlap {
        first: usize,
        second: usize,
        gap: f64,
    },
    /// `‖cᵢ − c₀‖ + rᵢ ≥ r₀`.
    NotContained {
        obstacle: usize,
        gap: f64,
    },
    NonPositiveRadius {
        obstacle: usize,
    },
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed {
            return f.write_str("pass");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::Overlap { first, second, gap } => {
                    format!("obstacles {first} and {second} overlap (gap {gap:.6})")
                }
                Violation::NotContained { obstacle, gap } => {
                    format!("obstacle {obstacle} not strictly inside workspace (gap {gap:.6})")
                }
                Violation::NonPositiveRadius { obstacle } => {
                    format!("obstacle {obstacle} has non-positive radius")
                }
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

struct Candidate<T: Real> {
    distance: T,
    closest: Point<T>,
    gradient: Vector<T>,
    unique: bool,
    feature: Feature,
}

impl<T: Real> Environment<T> {
    pub fn new(workspace: Option<Ball<T>>, obstacles: Vec<Obstacle<T>>) -> Self {
        Self {
            workspace,
            obstacles,
            reach_margin: None,
            query: QueryOptions::default(),
        }
    }

    /// Ambient dimension implied by the primitives, if any fixes it.
    pub fn dimension(&self) -> Option<usize> {
        if let Some(ws) = &self.workspace {
            return Some(ws.center.dim());
        }
        self.obstacles.iter().find_map(|o| match o {
            Obstacle::Ball { center, .. } => Some(center.dim()),
            Obstacle::Implicit { level } if level.is_plane() => Some(level.min_dim()),
            Obstacle::Implicit {
                level: LevelFunction::SineWall { .. },
            } => Some(2),
            Obstacle::Implicit { .. } => None,
        })
    }

    pub fn is_sphere_world(&self) -> bool {
        self.obstacles.iter().all(|o| matches!(o, Obstacle::Ball { .. }))
    }

    fn check_point(&self, x: &Point<T>) -> Result<()> {
        if x.dim() < 2 {
            return Err(invalid(format!("dimension {} < 2", x.dim())));
        }
        if !x.is_finite() {
            return Err(invalid("non-finite coordinates"));
        }
        if let Some(n) = self.dimension() {
            if n != x.dim() {
                return Err(invalid(format!(
                    "point has dimension {}, environment has {n}",
                    x.dim()
                )));
            }
        }
        Ok(())
    }

    /// Membership in the closed free space.
    pub fn contains(&self, x: &Point<T>) -> Result<bool> {
        self.check_point(x)?;
        Ok(self.contains_unchecked(x))
    }

    pub(crate) fn contains_unchecked(&self, x: &Point<T>) -> bool {
        if let Some(ws) = &self.workspace {
            if x.distance(&ws.center) > ws.radius {
                return false;
            }
        }
        self.obstacles.iter().all(|o| match o {
            Obstacle::Ball { center, radius } => x.distance(center) >= *radius,
            Obstacle::Implicit { level } => level.value(x.as_slice()) <= T::zero(),
        })
    }

    /// Distance to the obstacle region with its closest point and gradient.
    pub fn boundary_query(&self, x: &Point<T>) -> Result<BoundaryQuery<T>> {
        self.check_point(x)?;
        if !self.contains_unchecked(x) {
            return Err(invalid("boundary query outside the free space"));
        }
        let mut best: Option<Candidate<T>> = None;
        let mut tie = false;
        let mut consider = |cand: Candidate<T>, best: &mut Option<Candidate<T>>| match best {
            Some(b) => {
                let scale = T::one() + b.distance.abs();
                let tol = T::tolerance_floor() * scale;
                if cand.distance < b.distance - tol {
                    *best = Some(cand);
                    tie = false;
                } else if (cand.distance - b.distance).abs() <= tol
                    && cand.closest.distance(&b.closest) > T::tolerance_floor().sqrt() * scale
                {
                    tie = true;
                }
            }
            None => *best = Some(cand),
        };

        if let Some(ws) = &self.workspace {
            consider(workspace_candidate(ws, x), &mut best);
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            if let Obstacle::Ball { center, radius } = ob {
                consider(ball_candidate(center, *radius, x, i), &mut best);
            } else if let Obstacle::Implicit { level } = ob {
                if level.is_plane() {
                    consider(plane_candidate(level, x, i), &mut best);
                }
            }
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            let Obstacle::Implicit { level } = ob else {
                continue;
            };
            if level.is_plane() {
                continue;
            }
            let upper = best
                .as_ref()
                .map(|b| b.distance)
                .unwrap_or(self.query.search_range);
            if let Some(bound) = level.lipschitz() {
                if -level.value(x.as_slice()) / bound > upper {
                    continue;
                }
            }
            let found = distance::implicit_closest(level, x, upper, &self.query)?;
            if let Some(c) = found {
                consider(
                    Candidate {
                        distance: c.distance,
                        closest: c.closest,
                        gradient: c.gradient,
                        unique: c.unique,
                        feature: Feature::Obstacle(i),
                    },
                    &mut best,
                );
            } else if best.is_none() {
                return Err(Error::Numerical {
                    operation: "boundary_query",
                    detail: format!(
                        "no boundary point of obstacle {i} within search range {} of {:?}",
                        self.query.search_range,
                        x.to_f64()
                    ),
                });
            }
        }

        Ok(match best {
            None => BoundaryQuery {
                distance: T::infinity(),
                closest_point: None,
                gradient: None,
                unique: true,
                feature: None,
            },
            Some(b) => {
                let unique = b.unique && !tie;
                if !unique {
                    log::warn!(
                        "closest boundary point not unique at {:?} (distance {})",
                        x.to_f64(),
                        b.distance
                    );
                }
                BoundaryQuery {
                    distance: b.distance,
                    closest_point: Some(b.closest),
                    gradient: Some(b.gradient),
                    unique,
                    feature: Some(b.feature),
                }
            }
        })
    }

    /// Distance along `direction` to the first boundary point, saturated at `max_range`.
    pub fn ray_cast(&self, x: &Point<T>, direction: &Vector<T>, max_range: T) -> Result<T> {
        self.check_point(x)?;
        if direction.dim() != x.dim() {
            return Err(invalid("direction dimension mismatch"));
        }
        if (direction.norm() - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) {
            return Err(invalid("ray direction must be a unit vector"));
        }
        if !(max_range >= T::zero()) {
            return Err(invalid("max range must be non-negative"));
        }
        Ok(self.ray_cast_unchecked(x.as_slice(), direction.as_slice(), max_range))
    }

    pub(crate) fn ray_cast_unchecked(&self, origin: &[T], direction: &[T], max_range: T) -> T {
        let mut best = max_range;
        if let Some(ws) = &self.workspace {
            if let Some(t) = ray::ball_exit(ws.center.as_slice(), ws.radius, origin, direction, best) {
                best = best.min(t);
            }
        }
        for ob in &self.obstacles {
            let hit = match ob {
                Obstacle::Ball { center, radius } => {
                    ray::ball_entry(center.as_slice(), *radius, origin, direction, best)
                }
                Obstacle::Implicit { level } => ray::level_entry(level, origin, direction, best, &self.query),
            };
            if let Some(t) = hit {
                best = best.min(t);
            }
        }
        best
    }

    /// Primitives that could intersect a ball of radius `range` around `origin`.
    pub(crate) fn nearby(&self, origin: &Point<T>, range: T) -> Environment<T> {
        let obstacles = self
            .obstacles
            .iter()
            .filter(|o| match o {
                Obstacle::Ball { center, radius } => origin.distance(center) - *radius <= range,
                Obstacle::Implicit { level } => match level.lipschitz() {
                    Some(l) if l > T::zero() => -level.value(origin.as_slice()) / l <= range,
                    _ => true,
                },
            })
            .cloned()
            .collect();
        let workspace = self
            .workspace
            .clone()
            .filter(|ws| ws.radius - origin.distance(&ws.center) <= range);
        Environment {
            workspace,
            obstacles,
            reach_margin: self.reach_margin,
            query: self.query.clone(),
        }
    }

    /// Structural checks required of a sphere world.
    ///
    /// Without a workspace ball only the pairwise separation is checked.
    pub fn validate_sphere_world(&self) -> Result<ValidationReport> {
        let balls: Vec<Ball<T>> = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, o)| {
                o.as_ball()
                    .ok_or_else(|| Error::Unsupported(format!("obstacle {i} is not a ball")))
            })
            .collect::<Result<_>>()?;
        let mut violations = Vec::new();
        for (i, b) in balls.iter().enumerate() {
            if !(b.radius > T::zero()) {
                violations.push(Violation::NonPositiveRadius { obstacle: i });
            }
        }
        for i in 0..balls.len() {
            for j in (i + 1)..balls.len() {
                let gap = balls[i].center.distance(&balls[j].center) - (balls[i].radius + balls[j].radius);
                if !(gap > T::zero()) {
                    violations.push(Violation::Overlap {
                        first: i,
                        second: j,
                        gap: gap.to_f64_lossy(),
                    });
                }
            }
        }
        if let Some(ws) = &self.workspace {
            for (i, b) in balls.iter().enumerate() {
                let gap = ws.radius - (b.center.distance(&ws.center) + b.radius);
                if !(gap > T::zero()) {
                    violations.push(Violation::NotContained {
                        obstacle: i,
                        gap: gap.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(ValidationReport {
            passed: violations.is_empty(),
            violations,
        })
    }

    /// Maps a point back into the free space.
    ///
    /// Balls, planes and the workspace use their metric projection; other
    /// implicit obstacles use Newton steps onto their zero level set. Points
    /// already in the free space are returned unchanged.
    pub fn project_to_free_space(&self, x: &Point<T>) -> Result<Point<T>> {
        self.check_point(x)?;
        let mut y = x.clone();
        for _ in 0..32 {
            if self.contains_unchecked(&y) {
                return Ok(y);
            }
            if let Some(ws) = &self.workspace {
                let rel = &y - &ws.center;
                let r = rel.norm();
                if r > ws.radius {
                    // Shrink by a few ulps of the coordinates so rounding
                    // cannot leave y outside.
                    let nudge = T::lit(4.0) * T::epsilon() * (ws.center.max_abs() + ws.radius);
                    y = ws.center.add_scaled((ws.radius - nudge) / r, &rel);
                }
            }
            for ob in &self.obstacles {
                match ob {
                    Obstacle::Ball { center, radius } => {
                        let rel = &y - center;
                        let r = rel.norm();
                        if r < *radius {
                            let dir = rel.normalized().unwrap_or_else(|| Vector::basis(y.dim(), 0));
                            let nudge = T::lit(4.0) * T::epsilon() * (center.max_abs() + *radius);
                            y = center.add_scaled(*radius + nudge, &dir);
                        }
                    }
                    Obstacle::Implicit { level } => {
                        for _ in 0..50 {
                            let g = level.value(y.as_slice());
                            if g <= T::zero() {
                                break;
                            }
                            let grad = level.gradient(y.as_slice());
                            let gn = grad.norm_squared();
                            if !(gn > T::zero()) {
                                break;
                            }
                            // Overshoot slightly so the iterate lands on the free side.
                            let push = g / gn * (T::one() + T::lit(1e-9)) + T::epsilon();
                            y = y.add_scaled(-push, &grad);
                        }
                    }
                }
            }
        }
        if self.contains_unchecked(&y) {
            Ok(y)
        } else {
            Err(Error::Numerical {
                operation: "project_to_free_space",
                detail: format!("could not return {:?} to the free space", x.to_f64()),
            })
        }
    }
}

fn workspace_candidate<T: Real>(ws: &Ball<T>, x: &Point<T>) -> Candidate<T> {
    let rel = x - &ws.center;
    let r = rel.norm();
    let (dir, unique) = match rel.normalized() {
        Some(d) => (d, true),
        None => (Vector::basis(x.dim(), 0), false),
    };
    Candidate {
        distance: (ws.radius - r).max(T::zero()),
        closest: ws.center.add_scaled(ws.radius, &dir),
        gradient: -dir,
        unique,
        feature: Feature::Workspace,
    }
}

fn ball_candidate<T: Real>(center: &Point<T>, radius: T, x: &Point<T>, index: usize) -> Candidate<T> {
    let rel = x - center;
    let (dir, unique) = match rel.normalized() {
        Some(d) => (d, true),
        None => (Vector::basis(x.dim(), 0), false),
    };
    Candidate {
        distance: (rel.norm() - radius).max(T::zero()),
        closest: center.add_scaled(radius, &dir),
        gradient: dir,
        unique,
        feature: Feature::Obstacle(index),
    }
}

fn plane_candidate<T: Real>(level: &LevelFunction<T>, x: &Point<T>, index: usize) -> Candidate<T> {
    let g = level.value(x.as_slice());
    let normal = level.gradient(x.as_slice());
    Candidate {
        distance: (-g).max(T::zero()),
        closest: x.add_scaled(-g, &normal),
        gradient: -normal,
        unique: true,
        feature: Feature::Obstacle(index),
    }
}
