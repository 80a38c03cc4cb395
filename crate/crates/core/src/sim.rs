//! Closed-loop simulation of `ẋ = κ(x)` with safety and descent monitoring.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{
    margin_violated, project_discontinuous, project_smooth, Command, ControllerConfig, Mode, SafetyInput,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::Environment;
use crate::real::Real;
use crate::sensors::{scan_to_safety_input, simulate_lidar, DEFAULT_BEAMS};
use crate::vector::{Point, Vector};

/// Distance under which the exact discontinuous law treats the robot as
/// sitting on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;
/// Speed below which a step counts toward equilibrium-trap detection.
pub const TRAP_SPEED: f64 = 1e-6;
pub const TRAP_STEPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// Projected law on the exact boundary, forward Euler with event location.
    DiscontinuousExact,
    /// Continuous law fed by exact distance queries, RK4.
    SmoothExact,
    /// Continuous law fed by a simulated planar lidar, RK4 with the scan held
    /// over each step.
    SmoothLidar,
}

impl ControllerKind {
    pub fn is_smooth(self) -> bool {
        !matches!(self, ControllerKind::DiscontinuousExact)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct Region<T: Real> {
    pub min: Point<T>,
    pub max: Point<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct SamplingSpec<T: Real> {
    pub count: usize,
    pub region: Region<T>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub enum InitialState<T: Real> {
    Point(Point<T>),
    Sample(SamplingSpec<T>),
}

fn default_beams() -> usize {
    DEFAULT_BEAMS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + serde::de::DeserializeOwned"))]
pub struct SimConfig<T: Real> {
    pub controller: ControllerConfig<T>,
    pub kind: ControllerKind,
    pub initial: InitialState<T>,
    pub dt: T,
    pub max_time: T,
    pub goal_tolerance: T,
    #[serde(default = "default_beams")]
    pub lidar_beams: usize,
}

impl<T: Real> SimConfig<T> {
    pub fn new(controller: ControllerConfig<T>, kind: ControllerKind, initial: InitialState<T>) -> Self {
        Self {
            controller,
            kind,
            initial,
            dt: T::lit(1e-3),
            max_time: T::lit(200.0),
            goal_tolerance: T::lit(0.05),
            lidar_beams: DEFAULT_BEAMS,
        }
    }

    /// Distance below which a run is declared unsafe.
    pub fn safety_floor(&self) -> T {
        if self.kind.is_smooth() {
            self.controller.inner_margin * T::lit(0.5)
        } else {
            T::zero()
        }
    }

    pub fn validate(&self, env: &Environment<T>) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(invalid("dt must be positive"));
        }
        if !(self.goal_tolerance > T::zero()) {
            return Err(invalid("goal tolerance must be positive"));
        }
        if !(self.max_time >= T::zero()) {
            return Err(invalid("max time must be non-negative"));
        }
        if self.kind == ControllerKind::SmoothLidar && self.controller.goal.dim() != 2 {
            return Err(invalid("lidar runs are planar"));
        }
        self.controller.validate_for(env)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Converged,
    Timeout,
    SafetyViolation,
    EquilibriumTrap,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Converged => "converged",
            Outcome::Timeout => "timeout",
            Outcome::SafetyViolation => "safety-violation",
            Outcome::EquilibriumTrap => "equilibrium-trap",
        })
    }
}

/// Annotation recorded alongside every state.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<T: Real> {
    /// Distance to the obstacles as seen by the controller.
    pub distance: T,
    pub goal_distance: T,
    pub velocity: Vector<T>,
    pub mode: Mode,
    pub margin_violation: bool,
}

impl<T: Real> StepRecord<T> {
    /// `V = ½‖x − x_d‖²`.
    pub fn lyapunov(&self) -> T {
        T::lit(0.5) * self.goal_distance * self.goal_distance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<Point<T>>,
    pub records: Vec<StepRecord<T>>,
    pub outcome: Outcome,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &Point<T> {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn final_time(&self) -> T {
        *self.times.last().expect("trajectory has at least one state")
    }

    pub fn min_recorded_distance(&self) -> T {
        self.records
            .iter()
            .fold(T::infinity(), |acc, r| acc.min(r.distance))
    }

    /// `max_j(‖x_{j+1} − x_d‖ − ‖x_j − x_d‖)`, zero for monotone runs.
    pub fn max_lyapunov_increase(&self) -> T {
        self.records.windows(2).fold(T::zero(), |acc, w| {
            acc.max(w[1].goal_distance - w[0].goal_distance)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

/// One fixed step of `ẋ = field(x)`.
pub fn step<T: Real, F>(x: &Point<T>, mut field: F, dt: T, integrator: Integrator) -> Result<Point<T>>
where
    F: FnMut(&Point<T>) -> Result<Vector<T>>,
{
    if !(dt > T::zero()) {
        return Err(invalid("dt must be positive"));
    }
    let mut eval = |p: &Point<T>| -> Result<Vector<T>> {
        let v = field(p)?;
        if !v.is_finite() {
            return Err(Error::Numerical {
                operation: "step",
                detail: format!("non-finite velocity at {:?}", p.to_f64()),
            });
        }
        Ok(v)
    };
    match integrator {
        Integrator::Euler => Ok(x.add_scaled(dt, &eval(x)?)),
        Integrator::Rk4 => {
            let half = dt * T::lit(0.5);
            let k1 = eval(x)?;
            let k2 = eval(&x.add_scaled(half, &k1))?;
            let k3 = eval(&x.add_scaled(half, &k2))?;
            let k4 = eval(&x.add_scaled(dt, &k3))?;
            let two = T::lit(2.0);
            let sixth = dt / T::lit(6.0);
            let sum = Vector::new((0..x.dim()).map(|i| k1[i] + two * k2[i] + two * k3[i] + k4[i]));
            Ok(x.add_scaled(sixth, &sum))
        }
    }
}

struct Evaluation<T: Real> {
    command: Command<T>,
    distance: T,
    held: Option<SafetyInput<T>>,
}

fn evaluate<T: Real>(env: &Environment<T>, cfg: &SimConfig<T>, x: &Point<T>) -> Result<Evaluation<T>> {
    let ctrl = &cfg.controller;
    match cfg.kind {
        ControllerKind::DiscontinuousExact => {
            let q = env.boundary_query(x)?;
            let normal = q.gradient.as_ref().map(|g| -g);
            let on_boundary = q.distance <= T::lit(BOUNDARY_TOLERANCE);
            let command = project_discontinuous(x, normal.as_ref().filter(|_| on_boundary), ctrl);
            Ok(Evaluation {
                command,
                distance: q.distance,
                held: None,
            })
        }
        ControllerKind::SmoothExact => {
            let q = env.boundary_query(x)?;
            let input = SafetyInput::from_query(&q);
            Ok(Evaluation {
                command: project_smooth(x, &input, ctrl),
                distance: q.distance,
                held: None,
            })
        }
        ControllerKind::SmoothLidar => {
            let scan = simulate_lidar(env, x, cfg.lidar_beams, ctrl.sensing_radius)?;
            let input = scan_to_safety_input(&scan)?.input;
            Ok(Evaluation {
                command: project_smooth(x, &input, ctrl),
                distance: input.distance,
                held: Some(input),
            })
        }
    }
}

/// Command the configured controller applies at `x`, with the obstacle
/// distance it measured there.
pub fn command_at<T: Real>(
    env: &Environment<T>,
    cfg: &SimConfig<T>,
    x: &Point<T>,
) -> Result<(Command<T>, T)> {
    let eval = evaluate(env, cfg, x)?;
    Ok((eval.command, eval.distance))
}

fn advance<T: Real>(
    env: &Environment<T>,
    cfg: &SimConfig<T>,
    x: &Point<T>,
    eval: &Evaluation<T>,
) -> Result<Point<T>> {
    let ctrl = &cfg.controller;
    let dt = cfg.dt;
    match cfg.kind {
        ControllerKind::DiscontinuousExact => {
            let v = &eval.command.velocity;
            let y = x.add_scaled(dt, v);
            if !v.is_finite() {
                return Err(Error::Numerical {
                    operation: "step",
                    detail: "non-finite velocity".into(),
                });
            }
            if env.contains_unchecked(&y) {
                return Ok(y);
            }
            // Travel along v up to the boundary, then spend the rest of the
            // step on the projected law evaluated there.
            let speed = v.norm();
            let dir = v.scaled(T::one() / speed);
            let reach = env.ray_cast_unchecked(x.as_slice(), dir.as_slice(), dt * speed);
            let mut z = x.add_scaled(reach, &dir);
            if !env.contains_unchecked(&z) {
                z = env.project_to_free_space(&z)?;
            }
            let remaining = (dt - reach / speed).max(T::zero());
            let q = env.boundary_query(&z)?;
            let normal = q.gradient.as_ref().map(|g| -g);
            let slide = project_discontinuous(&z, normal.as_ref(), ctrl);
            let w = z.add_scaled(remaining, &slide.velocity);
            if env.contains_unchecked(&w) {
                Ok(w)
            } else {
                env.project_to_free_space(&w)
            }
        }
        ControllerKind::SmoothExact => step(
            x,
            |p| {
                let q = env.boundary_query(p)?;
                Ok(project_smooth(p, &SafetyInput::from_query(&q), ctrl).velocity)
            },
            dt,
            Integrator::Rk4,
        ),
        ControllerKind::SmoothLidar => {
            let held = eval.held.as_ref().expect("lidar evaluation holds its scan");
            step(
                x,
                |p| Ok(project_smooth(p, held, ctrl).velocity),
                dt,
                Integrator::Rk4,
            )
        }
    }
}

/// Simulates from `start` until convergence, a safety violation or `max_time`.
pub fn run_from<T: Real>(
    env: &Environment<T>,
    cfg: &SimConfig<T>,
    start: &Point<T>,
) -> Result<Trajectory<T>> {
    cfg.validate(env)?;
    if !env.contains(start)? {
        return Err(invalid("initial state outside the free space"));
    }
    if cfg.kind.is_smooth() {
        let d = env.boundary_query(start)?.distance;
        if d < cfg.controller.inner_margin {
            return Err(invalid(format!(
                "initial state within the safety margin (distance {d})"
            )));
        }
    }
    let goal = &cfg.controller.goal;
    let floor = cfg.safety_floor();
    let max_steps = (cfg.max_time / cfg.dt).ceil().to_usize().unwrap_or(usize::MAX);

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut records = Vec::new();
    let mut x = start.clone();
    let mut slow_streak = 0usize;
    let mut index = 0usize;
    let outcome = loop {
        let t = cfg.dt * T::from_usize_lossy(index);
        let eval = evaluate(env, cfg, &x)?;
        let goal_distance = x.distance(goal);
        let speed = eval.command.velocity.norm();
        let margin_violation = cfg.kind.is_smooth()
            && margin_violated(
                &SafetyInput {
                    distance: eval.distance,
                    bearing: None,
                },
                &cfg.controller,
            );
        times.push(t);
        states.push(x.clone());
        records.push(StepRecord {
            distance: eval.distance,
            goal_distance,
            velocity: eval.command.velocity.clone(),
            mode: eval.command.mode,
            margin_violation,
        });
        if goal_distance < cfg.goal_tolerance {
            break Outcome::Converged;
        }
        if eval.distance < floor {
            break Outcome::SafetyViolation;
        }
        slow_streak = if speed < T::lit(TRAP_SPEED) {
            slow_streak + 1
        } else {
            0
        };
        if index >= max_steps {
            break if slow_streak >= TRAP_STEPS {
                Outcome::EquilibriumTrap
            } else {
                Outcome::Timeout
            };
        }
        let next = advance(env, cfg, &x, &eval)?;
        if !env.contains_unchecked(&next) {
            times.push(cfg.dt * T::from_usize_lossy(index + 1));
            records.push(StepRecord {
                distance: T::zero(),
                goal_distance: next.distance(goal),
                velocity: Vector::zeros(next.dim()),
                mode: eval.command.mode,
                margin_violation: cfg.kind.is_smooth(),
            });
            states.push(next);
            break Outcome::SafetyViolation;
        }
        x = next;
        index += 1;
    };
    Ok(Trajectory {
        times,
        states,
        records,
        outcome,
    })
}

/// Runs from the configured single initial point.
pub fn run<T: Real>(env: &Environment<T>, cfg: &SimConfig<T>) -> Result<Trajectory<T>> {
    match &cfg.initial {
        InitialState::Point(p) => run_from(env, cfg, p),
        InitialState::Sample(_) => Err(invalid("run needs a single initial point; use batch_run")),
    }
}

/// Per-run random generator: one ChaCha stream per run index.
pub fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Rejection-samples a start in the free space at distance at least `ε′`.
pub fn sample_start<T: Real>(
    env: &Environment<T>,
    cfg: &SimConfig<T>,
    region: &Region<T>,
    rng: &mut ChaCha8Rng,
) -> Result<Point<T>> {
    if region.min.dim() != region.max.dim() {
        return Err(invalid("sampling region corners differ in dimension"));
    }
    for _ in 0..100_000 {
        let p = Vector::new((0..region.min.dim()).map(|i| {
            let u = T::lit(rng.gen::<f64>());
            region.min[i] + u * (region.max[i] - region.min[i])
        }));
        if !env.contains(&p)? {
            continue;
        }
        if env.boundary_query(&p)?.distance >= cfg.controller.outer_margin {
            return Ok(p);
        }
    }
    Err(Error::Numerical {
        operation: "sample_start",
        detail: "no admissible start found in the sampling region".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub index: usize,
    pub start: Vec<f64>,
    pub outcome: Outcome,
    pub final_time: f64,
    pub final_goal_distance: f64,
    pub min_distance: f64,
    pub max_lyapunov_increase: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub runs: usize,
    pub converged: usize,
    pub timeout: usize,
    pub safety_violation: usize,
    pub equilibrium_trap: usize,
    /// Smallest distance to the obstacles seen by any run.
    pub min_distance: Option<f64>,
    /// `max(0, reference − min distance)` with reference `ε` for the smooth
    /// laws and `0` for the exact discontinuous law.
    pub max_margin_violation: f64,
    pub max_lyapunov_increase: f64,
    pub details: Vec<RunSummary>,
}

impl BatchSummary {
    fn add(&mut self, run: RunSummary, reference: f64) {
        self.runs += 1;
        match run.outcome {
            Outcome::Converged => self.converged += 1,
            Outcome::Timeout => self.timeout += 1,
            Outcome::SafetyViolation => self.safety_violation += 1,
            Outcome::EquilibriumTrap => self.equilibrium_trap += 1,
        }
        self.min_distance = Some(
            self.min_distance
                .map_or(run.min_distance, |m| m.min(run.min_distance)),
        );
        self.max_margin_violation = self.max_margin_violation.max(reference - run.min_distance);
        self.max_lyapunov_increase = self.max_lyapunov_increase.max(run.max_lyapunov_increase);
        self.details.push(run);
    }
}

pub fn summarize<T: Real>(index: usize, start: &Point<T>, traj: &Trajectory<T>) -> RunSummary {
    RunSummary {
        index,
        start: start.to_f64(),
        outcome: traj.outcome,
        final_time: traj.final_time().to_f64_lossy(),
        final_goal_distance: traj
            .records
            .last()
            .map_or(f64::NAN, |r| r.goal_distance.to_f64_lossy()),
        min_distance: traj.min_recorded_distance().to_f64_lossy(),
        max_lyapunov_increase: traj.max_lyapunov_increase().to_f64_lossy(),
    }
}

/// Runs `count` seeded starts and aggregates their outcomes.
///
/// Runs are independent and spread over the available cores; results are
/// identical to a sequential evaluation.
pub fn batch_run<T: Real>(env: &Environment<T>, cfg: &SimConfig<T>) -> Result<BatchSummary> {
    let spec = match &cfg.initial {
        InitialState::Sample(s) => s.clone(),
        InitialState::Point(p) => SamplingSpec {
            count: 1,
            region: Region {
                min: p.clone(),
                max: p.clone(),
            },
            seed: 0,
        },
    };
    cfg.validate(env)?;
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(spec.count.max(1));
    let one = |i: usize| -> Result<RunSummary> {
        let start = match &cfg.initial {
            InitialState::Point(p) => p.clone(),
            InitialState::Sample(_) => sample_start(env, cfg, &spec.region, &mut run_rng(spec.seed, i))?,
        };
        let traj = run_from(env, cfg, &start)?;
        Ok(summarize(i, &start, &traj))
    };
    let mut results: Vec<Option<Result<RunSummary>>> = (0..spec.count).map(|_| None).collect();
    if workers <= 1 {
        for (i, slot) in results.iter_mut().enumerate() {
            *slot = Some(one(i));
        }
    } else {
        std::thread::scope(|scope| {
            for (w, chunk) in results.chunks_mut(spec.count.div_ceil(workers)).enumerate() {
                let base = w * spec.count.div_ceil(workers);
                let one = &one;
                scope.spawn(move || {
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = Some(one(base + k));
                    }
                });
            }
        });
    }
    let reference = if cfg.kind.is_smooth() {
        cfg.controller.inner_margin.to_f64_lossy()
    } else {
        0.0
    };
    let mut summary = BatchSummary::default();
    for r in results {
        summary.add(r.expect("every run slot is filled")?, reference);
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub min_distance: f64,
    pub min_distance_index: usize,
    /// First state closer to the obstacles than the run's safety floor.
    pub first_violation: Option<usize>,
    pub max_lyapunov_increase: f64,
    pub floor: f64,
}

/// Recomputes the exact distance at every recorded state.
pub fn safety_audit<T: Real>(
    traj: &Trajectory<T>,
    env: &Environment<T>,
    cfg: &SimConfig<T>,
) -> Result<AuditReport> {
    let floor = cfg.safety_floor();
    let goal = &cfg.controller.goal;
    let mut min_distance = T::infinity();
    let mut min_index = 0;
    let mut first_violation = None;
    let mut max_increase = T::zero();
    let mut previous: Option<T> = None;
    // Last exactly evaluated state; the distance is 1-Lipschitz, so states
    // whose bound cannot beat the running minimum or the floor are skipped.
    let mut anchor: Option<(usize, T)> = None;
    for (i, x) in traj.states.iter().enumerate() {
        let v = x.distance(goal);
        if let Some(p) = previous {
            max_increase = max_increase.max(v - p);
        }
        previous = Some(v);
        if let Some((j, dj)) = anchor {
            let bound = dj - x.distance(&traj.states[j]);
            if bound >= min_distance && bound >= floor {
                continue;
            }
        }
        let d = if env.contains(x)? {
            env.boundary_query(x)?.distance
        } else {
            -T::one()
        };
        anchor = Some((i, d));
        if d < min_distance {
            min_distance = d;
            min_index = i;
        }
        if d < floor && first_violation.is_none() {
            first_violation = Some(i);
        }
    }
    Ok(AuditReport {
        min_distance: min_distance.to_f64_lossy(),
        min_distance_index: min_index,
        first_violation,
        max_lyapunov_increase: max_increase.to_f64_lossy(),
        floor: floor.to_f64_lossy(),
    })
}
