//! Piecewise-constant conductivity phantoms `γ = 1 + Σ κ_i·χ_{D_i}`.
//!
//! Stored as JSON:
//!
//! ```json
//! {"shapes": [
//!   {"type": "ball", "center": [0.4, 0.0], "radius": 0.4, "contrast": 4},
//!   {"type": "polygon", "vertices": [[0,0],[0.2,0],[0.2,0.2]], "contrast": 4}
//! ]}
//! ```

use std::f64::consts::TAU;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mobius::Ball;
use crate::{Error, Result};

pub type Point = [f64; 2];

/// Closures of distinct shapes must stay at least this far apart.
const SEPARATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Ball { center: Point, radius: f64 },
    Polygon { vertices: Vec<Point> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    #[serde(flatten)]
    pub shape: Shape,
    pub contrast: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    #[serde(default)]
    pub shapes: Vec<Inclusion>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 {
        (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(sub(q2, q1), sub(p1, q1));
    let d2 = cross(sub(q2, q1), sub(p2, q1));
    let d3 = cross(sub(p2, p1), sub(q1, p1));
    let d4 = cross(sub(p2, p1), sub(q2, p1));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    // Collinear or touching configurations.
    point_segment_distance(p1, q1, q2) == 0.0
        || point_segment_distance(p2, q1, q2) == 0.0
        || point_segment_distance(q1, p1, p2) == 0.0
        || point_segment_distance(q2, p1, p2) == 0.0
}

fn segment_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

impl Shape {
    fn edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..vertices.len()).map(move |i| (vertices[i], vertices[(i + 1) % vertices.len()]))
    }

    /// Point strictly inside (even-odd rule for polygons).
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Ball { center, radius } => norm(sub(p, *center)) < *radius,
            Shape::Polygon { vertices } => {
                let mut inside = false;
                for (a, b) in Self::edges(vertices) {
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }

    /// Distance from `p` to the shape boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match self {
            Shape::Ball { center, radius } => (norm(sub(p, *center)) - radius).abs(),
            Shape::Polygon { vertices } => Self::edges(vertices)
                .map(|(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest distance from the origin of any point of the closed shape.
    pub fn max_radius(&self) -> f64 {
        match self {
            Shape::Ball { center, radius } => norm(*center) + radius,
            Shape::Polygon { vertices } => vertices.iter().map(|v| norm(*v)).fold(0.0, f64::max),
        }
    }

    /// Closed boundary loop sampled with spacing at most `h` (last point not repeated).
    pub fn sample_boundary(&self, h: f64) -> Vec<Point> {
        match self {
            Shape::Ball { center, radius } => {
                let n = ((TAU * radius / h).ceil() as usize).max(8);
                (0..n)
                    .map(|j| {
                        let t = TAU * j as f64 / n as f64;
                        [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
                    })
                    .collect()
            }
            Shape::Polygon { vertices } => {
                let mut out = Vec::new();
                for (a, b) in Self::edges(vertices) {
                    let len = norm(sub(b, a));
                    let n = ((len / h).ceil() as usize).max(1);
                    for j in 0..n {
                        let t = j as f64 / n as f64;
                        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                out
            }
        }
    }

    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let rot = |p: &Point| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        match self {
            Shape::Ball { center, radius } => Shape::Ball {
                center: rot(center),
                radius: *radius,
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(rot).collect(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Ball { center, radius } => {
                if !(*radius > 0.0) || !center.iter().all(|v| v.is_finite()) {
                    return Err(Error::Phantom(format!("ball radius {radius} must be positive")));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Phantom("a polygon needs at least three vertices".into()));
                }
                if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Phantom("polygon vertices must be finite".into()));
                }
                let n = vertices.len();
                let area: f64 = Self::edges(vertices).map(|(a, b)| cross(a, b)).sum::<f64>() / 2.0;
                if area.abs() < 1e-12 {
                    return Err(Error::Phantom("polygon has zero area".into()));
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if adjacent {
                            continue;
                        }
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                        if segments_intersect(a, b, c, d) {
                            return Err(Error::Phantom(format!("polygon edges {i} and {j} intersect")));
                        }
                    }
                }
            }
        }
        if self.max_radius() >= 1.0 {
            return Err(Error::Phantom("shape is not strictly inside the unit disk".into()));
        }
        Ok(())
    }

    fn a_point(&self) -> Point {
        match self {
            Shape::Ball { center, .. } => *center,
            Shape::Polygon { vertices } => vertices[0],
        }
    }

    /// Distance between the closures of two shapes; zero if they meet or nest.
    pub fn separation(&self, other: &Shape) -> f64 {
        if self.contains(other.a_point()) || other.contains(self.a_point()) {
            return 0.0;
        }
        match (self, other) {
            (Shape::Ball { center: c1, radius: r1 }, Shape::Ball { center: c2, radius: r2 }) => {
                (norm(sub(*c1, *c2)) - r1 - r2).max(0.0)
            }
            (Shape::Ball { center, radius }, Shape::Polygon { vertices })
            | (Shape::Polygon { vertices }, Shape::Ball { center, radius }) => {
                let d = Self::edges(vertices)
                    .map(|(a, b)| point_segment_distance(*center, a, b))
                    .fold(f64::INFINITY, f64::min);
                (d - radius).max(0.0)
            }
            (Shape::Polygon { vertices: p }, Shape::Polygon { vertices: q }) => Self::edges(p)
                .flat_map(|(a, b)| Self::edges(q).map(move |(c, d)| segment_distance(a, b, c, d)))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

impl Phantom {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single_ball(ball: &Ball, contrast: f64) -> Self {
        Self {
            shapes: vec![Inclusion {
                shape: Shape::Ball {
                    center: [ball.center.re, ball.center.im],
                    radius: ball.radius,
                },
                contrast,
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, inc) in self.shapes.iter().enumerate() {
            if !(inc.contrast > 0.0) || !inc.contrast.is_finite() {
                return Err(Error::Phantom(format!(
                    "shape {i}: contrast {} must be positive",
                    inc.contrast
                )));
            }
            inc.shape.validate().map_err(|e| Error::Phantom(format!("shape {i}: {e}")))?;
        }
        for i in 0..self.shapes.len() {
            for j in i + 1..self.shapes.len() {
                if self.shapes[i].shape.separation(&self.shapes[j].shape) <= SEPARATION_TOL {
                    return Err(Error::Phantom(format!("shapes {i} and {j} overlap or touch")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let phantom: Self = serde_json::from_str(text)?;
        phantom.validate()?;
        Ok(phantom)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// The index of the shape containing `p`, if any.
    pub fn region(&self, p: Point) -> Option<usize> {
        self.shapes.iter().position(|inc| inc.shape.contains(p))
    }

    pub fn contains(&self, p: Point) -> bool {
        self.region(p).is_some()
    }

    /// `γ(p) = 1 + κ` inside a shape, 1 elsewhere.
    pub fn conductivity(&self, p: Point) -> f64 {
        self.region(p).map_or(1.0, |i| 1.0 + self.shapes[i].contrast)
    }

    /// The ball and contrast of a phantom that consists of exactly one ball.
    pub fn as_single_ball(&self) -> Option<(Ball, f64)> {
        match self.shapes.as_slice() {
            [Inclusion {
                shape: Shape::Ball { center, radius },
                contrast,
            }] => Ball::new(Complex64::new(center[0], center[1]), *radius)
                .ok()
                .map(|b| (b, *contrast)),
            _ => None,
        }
    }

    /// Smallest contrast, the natural lower bound `β^L`.
    pub fn min_contrast(&self) -> Option<f64> {
        self.shapes.iter().map(|s| s.contrast).reduce(f64::min)
    }

    pub fn rotated(&self, phi: f64) -> Self {
        Self {
            shapes: self
                .shapes
                .iter()
                .map(|inc| Inclusion {
                    shape: inc.shape.rotated(phi),
                    contrast: inc.contrast,
                })
                .collect(),
        }
    }

    /// Distance from `p` to the nearest shape boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.shapes
            .iter()
            .map(|s| s.shape.boundary_distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}
