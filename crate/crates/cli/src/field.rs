//! Controller vector field sampled on a planar grid.

use std::fmt::Write;

use anyhow::bail;
use serde::Serialize;
use svcnav::sim::command_at;
use svcnav::{ControllerKind, Environment, Mode, Point, SimConfig};

use crate::manifest::FieldSpec;
use crate::svg::{draw_environment, Canvas};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldCell {
    pub position: [f64; 2],
    /// Cell centre inside an obstacle; no vector is evaluated there.
    pub masked: bool,
    /// Exact distance to the obstacles.
    pub distance: Option<f64>,
    pub velocity: Option<[f64; 2]>,
    pub mode: Option<Mode>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldGrid {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub resolution: [usize; 2],
    pub kind: ControllerKind,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// Row-major, rows running along the first axis from `min[1]` upward.
    pub cells: Vec<FieldCell>,
}

impl FieldGrid {
    pub fn step(&self) -> [f64; 2] {
        let s = |a: usize| {
            let n = self.resolution[a];
            if n > 1 {
                (self.max[a] - self.min[a]) / (n - 1) as f64
            } else {
                0.0
            }
        };
        [s(0), s(1)]
    }

    pub fn cell(&self, i: usize, j: usize) -> &FieldCell {
        &self.cells[j * self.resolution[0] + i]
    }
}

/// Grid points include both corners of the box.
pub fn grid_points(spec: &FieldSpec) -> Vec<[f64; 2]> {
    let coord = |a: usize, i: usize| {
        let n = spec.resolution[a];
        if n > 1 {
            spec.min[a] + (spec.max[a] - spec.min[a]) * i as f64 / (n - 1) as f64
        } else {
            0.5 * (spec.min[a] + spec.max[a])
        }
    };
    let mut out = Vec::with_capacity(spec.resolution[0] * spec.resolution[1]);
    for j in 0..spec.resolution[1] {
        for i in 0..spec.resolution[0] {
            out.push([coord(0, i), coord(1, j)]);
        }
    }
    out
}

pub fn export_field(env: &Environment, sim: &SimConfig, spec: &FieldSpec) -> anyhow::Result<FieldGrid> {
    if env.dimension().is_some_and(|n| n != 2) || sim.controller.goal.dim() != 2 {
        bail!("field export needs a planar scene");
    }
    if spec.resolution[0] == 0 || spec.resolution[1] == 0 {
        bail!("field resolution must be positive");
    }
    if !(spec.min[0] < spec.max[0] && spec.min[1] < spec.max[1]) {
        bail!("field box must have min < max on both axes");
    }
    let mut sim = sim.clone();
    if let Some(kind) = spec.kind {
        sim.kind = kind;
    }
    let mut cells = Vec::new();
    for p in grid_points(spec) {
        let x = Point::from(p);
        if !env.contains(&x)? {
            cells.push(FieldCell {
                position: p,
                masked: true,
                distance: None,
                velocity: None,
                mode: None,
            });
            continue;
        }
        let distance = env.boundary_query(&x)?.distance;
        let (command, _) = command_at(env, &sim, &x)?;
        cells.push(FieldCell {
            position: p,
            masked: false,
            distance: distance.is_finite().then_some(distance),
            velocity: Some([command.velocity[0], command.velocity[1]]),
            mode: Some(command.mode),
        });
    }
    Ok(FieldGrid {
        min: spec.min,
        max: spec.max,
        resolution: spec.resolution,
        kind: sim.kind,
        epsilon: sim.controller.inner_margin,
        epsilon_prime: sim.controller.outer_margin,
        cells,
    })
}

pub fn field_csv(grid: &FieldGrid) -> String {
    let mut out = String::from("x,y,masked,distance,vx,vy,speed,mode\n");
    for c in &grid.cells {
        let dist = c.distance.map(|d| d.to_string()).unwrap_or_default();
        match (c.velocity, c.mode) {
            (Some(v), Some(mode)) => {
                let _ = writeln!(
                    out,
                    "{},{},false,{dist},{},{},{},{}",
                    c.position[0],
                    c.position[1],
                    v[0],
                    v[1],
                    v[0].hypot(v[1]),
                    mode.as_str()
                );
            }
            _ => {
                let _ = writeln!(out, "{},{},true,,,,,", c.position[0], c.position[1]);
            }
        }
    }
    out
}

const INNER_BAND: &str = "#f4b6b6";
const OUTER_BAND: &str = "#fde3c0";
const MASK: &str = "#d8d8d8";

/// Quiver plot; cells in `[0, ε]` and `(ε, ε′]` are shaded.
pub fn field_svg(grid: &FieldGrid, env: &Environment) -> String {
    let mut canvas = Canvas::new(grid.min, grid.max, 600.0);
    let [hx, hy] = grid.step();
    let half = [0.5 * hx, 0.5 * hy];
    for c in &grid.cells {
        let fill = if c.masked {
            Some(MASK)
        } else {
            match c.distance {
                Some(d) if d <= grid.epsilon => Some(INNER_BAND),
                Some(d) if d <= grid.epsilon_prime => Some(OUTER_BAND),
                _ => None,
            }
        };
        if let Some(fill) = fill {
            let p = c.position;
            canvas.rect(
                [p[0] - half[0], p[1] - half[1]],
                [p[0] + half[0], p[1] + half[1]],
                fill,
            );
        }
    }
    draw_environment(&mut canvas, env);
    let longest = grid
        .cells
        .iter()
        .filter_map(|c| c.velocity)
        .map(|v| v[0].hypot(v[1]))
        .fold(0.0, f64::max);
    let reach = 0.9 * hx.min(hy).max(1e-12);
    for c in &grid.cells {
        if let Some(v) = c.velocity {
            if longest > 0.0 {
                let s = reach / longest;
                let p = c.position;
                canvas.arrow(p, [p[0] + s * v[0], p[1] + s * v[1]], "#1f3f8f");
            }
        }
    }
    canvas.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use svcnav::sim::InitialState;
    use svcnav::ControllerConfig;

    fn spec(n: usize) -> FieldSpec {
        FieldSpec {
            min: [-1.0, -1.0],
            max: [5.0, 5.0],
            resolution: [n, n],
            kind: Some(ControllerKind::DiscontinuousExact),
        }
    }

    fn sim() -> SimConfig {
        let ctrl = ControllerConfig::new([0.0, 0.0], 1.0, 0.2, 0.4, 0.5);
        SimConfig::new(
            ctrl,
            ControllerKind::DiscontinuousExact,
            InitialState::Point(Point::from([0.0, 0.0])),
        )
    }

    #[test]
    fn empty_environment_is_radial() {
        let env = Environment::new(None, vec![]);
        let grid = export_field(&env, &sim(), &spec(7)).unwrap();
        for c in &grid.cells {
            let v = c.velocity.unwrap();
            assert!((v[0] + c.position[0]).abs() < 1e-15 && (v[1] + c.position[1]).abs() < 1e-15);
            assert_eq!(c.mode, Some(Mode::Nominal));
        }
    }

    #[test]
    fn obstacle_cells_are_masked() {
        let env: Environment = svcnav::scenes::fig2();
        // 7 points per axis land on (2, 2).
        let grid = export_field(&env, &sim(), &spec(7)).unwrap();
        let c = grid.cell(3, 3);
        assert_eq!(c.position, [2.0, 2.0]);
        assert!(c.masked && c.velocity.is_none());
        let csv = field_csv(&grid);
        assert_eq!(csv.lines().count(), 50);
        assert!(csv.contains("2,2,true,,,,,"));
    }

    #[test]
    fn non_planar_is_rejected() {
        let env = Environment::new(None, vec![svcnav::Obstacle::ball([0.0, 0.0, 3.0], 1.0)]);
        assert!(export_field(&env, &sim(), &spec(5)).is_err());
    }
}
