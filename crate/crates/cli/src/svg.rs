//! Small SVG writer: rectangles, circles, paths and markers only.
//!
//! Coordinates are printed with fixed precision so identical inputs give
//! identical bytes.

use std::fmt::Write;

use svcnav::geometry::{LevelFunction, Obstacle, WallSide};
use svcnav::Environment;

pub const OBSTACLE_FILL: &str = "#b0b0b0";

pub struct Canvas {
    min: [f64; 2],
    max: [f64; 2],
    width: f64,
    height: f64,
    body: String,
}

impl Canvas {
    /// Canvas showing the world box `[min, max]`, `width` pixels wide.
    pub fn new(min: [f64; 2], max: [f64; 2], width: f64) -> Self {
        let span_x = (max[0] - min[0]).max(1e-9);
        let span_y = (max[1] - min[1]).max(1e-9);
        Self {
            min,
            max,
            width,
            height: (width * span_y / span_x).round().max(1.0),
            body: String::new(),
        }
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        (self.min, self.max)
    }

    fn scale(&self) -> f64 {
        self.width / (self.max[0] - self.min[0]).max(1e-9)
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let s = self.scale();
        (
            (p[0] - self.min[0]) * s,
            self.height - (p[1] - self.min[1]) * self.height / (self.max[1] - self.min[1]).max(1e-9),
        )
    }

    pub fn rect(&mut self, lo: [f64; 2], hi: [f64; 2], fill: &str) {
        let (x0, y1) = self.map(lo);
        let (x1, y0) = self.map(hi);
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }

    /// Circle with a radius in world units.
    pub fn circle(&mut self, center: [f64; 2], radius: f64, fill: &str, stroke: &str) {
        let (cx, cy) = self.map(center);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="{fill}" stroke="{stroke}"/>"#,
            radius * self.scale()
        );
    }

    /// Dot with a radius in pixels.
    pub fn marker(&mut self, at: [f64; 2], pixels: f64, fill: &str) {
        let (cx, cy) = self.map(at);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{pixels:.2}" fill="{fill}"/>"#
        );
    }

    fn path_data(&self, points: &[[f64; 2]], close: bool) -> String {
        let mut d = String::new();
        for (i, p) in points.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { " L" });
        }
        if close {
            d.push_str(" Z");
        }
        d
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], stroke: &str, width: f64) {
        if points.len() < 2 {
            return;
        }
        let d = self.path_data(points, false);
        let _ = writeln!(
            self.body,
            r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width:.2}"/>"#
        );
    }

    pub fn polygon(&mut self, points: &[[f64; 2]], fill: &str) {
        if points.len() < 3 {
            return;
        }
        let d = self.path_data(points, true);
        let _ = writeln!(self.body, r#"<path d="{d}" fill="{fill}"/>"#);
    }

    /// Arrow from `from` to `to` with a head proportional to its length.
    pub fn arrow(&mut self, from: [f64; 2], to: [f64; 2], stroke: &str) {
        let (x0, y0) = self.map(from);
        let (x1, y1) = self.map(to);
        let (dx, dy) = (x1 - x0, y1 - y0);
        let len = dx.hypot(dy);
        if len < 0.5 {
            return;
        }
        let head = (0.3 * len).min(6.0);
        let (ux, uy) = (dx / len, dy / len);
        let (lx, ly) = (x1 - head * (ux - 0.5 * uy), y1 - head * (uy + 0.5 * ux));
        let (rx, ry) = (x1 - head * (ux + 0.5 * uy), y1 - head * (uy - 0.5 * ux));
        let _ = writeln!(
            self.body,
            r#"<path d="M{x0:.2} {y0:.2} L{x1:.2} {y1:.2} M{lx:.2} {ly:.2} L{x1:.2} {y1:.2} L{rx:.2} {ry:.2}" fill="none" stroke="{stroke}" stroke-width="1"/>"#
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Draws the planar obstacles that intersect the canvas.
pub fn draw_environment(canvas: &mut Canvas, env: &Environment) {
    let (min, max) = canvas.bounds();
    if let Some(ws) = &env.workspace {
        if ws.center.dim() == 2 {
            canvas.circle([ws.center[0], ws.center[1]], ws.radius, "none", "black");
        }
    }
    for obstacle in &env.obstacles {
        match obstacle {
            Obstacle::Ball { center, radius } if center.dim() == 2 => {
                canvas.circle([center[0], center[1]], *radius, OBSTACLE_FILL, "none");
            }
            Obstacle::Implicit {
                level:
                    LevelFunction::SineWall {
                        amplitude,
                        offset,
                        side,
                    },
            } => {
                let samples = 400;
                let mut points: Vec<[f64; 2]> = (0..=samples)
                    .map(|j| {
                        let x = min[0] + (max[0] - min[0]) * j as f64 / samples as f64;
                        let y = match side {
                            WallSide::Below => amplitude * x.sin() - offset,
                            WallSide::Above => offset - amplitude * x.sin(),
                        };
                        [x, y.clamp(min[1], max[1])]
                    })
                    .collect();
                let edge = match side {
                    WallSide::Below => min[1],
                    WallSide::Above => max[1],
                };
                points.push([max[0], edge]);
                points.push([min[0], edge]);
                canvas.polygon(&points, OBSTACLE_FILL);
            }
            _ => {}
        }
    }
}
