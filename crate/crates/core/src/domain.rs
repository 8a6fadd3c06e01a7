//! Declarative planar domains.
//!
//! Every shape except `polygon` is centred at the origin. The `scale` factor
//! multiplies all lengths, so areas scale by `scale²`.
//!
//! ```json
//! {"shape": "ellipse", "a": 1.0, "b": 0.5, "scale": 1.0}
//! ```

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    Disk { radius: f64 },
    Rectangle { width: f64, height: f64 },
    Ellipse { a: f64, b: f64 },
    /// Square of side `side` with the upper-right `notch·side` square removed.
    LShape { side: f64, notch: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn new(shape: Shape) -> Self {
        DomainSpec { shape, scale: 1.0 }
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(Shape::Disk { radius })
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        Self::new(Shape::Rectangle { width, height })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(1.0, 1.0)
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(Shape::Ellipse { a, b })
    }

    pub fn l_shape(side: f64, notch: f64) -> Self {
        Self::new(Shape::LShape { side, notch })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        Self::new(Shape::Polygon { vertices })
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DomainSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_disk(&self) -> bool {
        matches!(self.shape, Shape::Disk { .. })
    }

    /// Short human-readable name, e.g. `ellipse(1x0.5)`.
    pub fn label(&self) -> String {
        let base = match &self.shape {
            Shape::Disk { radius } => format!("disk(r={radius})"),
            Shape::Rectangle { width, height } => format!("rectangle({width}x{height})"),
            Shape::Ellipse { a, b } => format!("ellipse({a}x{b})"),
            Shape::LShape { side, notch } => format!("l-shape(side={side},notch={notch})"),
            Shape::Polygon { vertices } => format!("polygon({} vertices)", vertices.len()),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{base}*{}", self.scale)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::DomainUnresolved(msg));
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        match &self.shape {
            Shape::Disk { radius } if !positive(*radius) => bad(format!("disk radius {radius}")),
            Shape::Rectangle { width, height } if !(positive(*width) && positive(*height)) => {
                bad(format!("rectangle {width}x{height} has empty interior"))
            }
            Shape::Ellipse { a, b } if !(positive(*a) && positive(*b)) => {
                bad(format!("ellipse semi-axes {a}, {b}"))
            }
            Shape::LShape { side, notch } if !(positive(*side) && *notch > 0.0 && *notch < 1.0) => {
                bad(format!("l-shape side {side}, notch {notch} (need 0 < notch < 1)"))
            }
            Shape::Polygon { vertices } => validate_polygon(vertices),
            _ => Ok(()),
        }
    }

    /// Exact area, including the `scale²` factor.
    pub fn area(&self) -> f64 {
        let unscaled = match &self.shape {
            Shape::Disk { radius } => PI * radius * radius,
            Shape::Rectangle { width, height } => width * height,
            Shape::Ellipse { a, b } => PI * a * b,
            Shape::LShape { side, notch } => side * side * (1.0 - notch * notch),
            Shape::Polygon { vertices } => shoelace(vertices).abs(),
        };
        unscaled * self.scale * self.scale
    }

    /// `(xmin, ymin, xmax, ymax)` after scaling.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let (x0, y0, x1, y1) = match &self.shape {
            Shape::Disk { radius } => (-radius, -radius, *radius, *radius),
            Shape::Rectangle { width, height } => {
                (-width / 2.0, -height / 2.0, width / 2.0, height / 2.0)
            }
            Shape::Ellipse { a, b } => (-a, -b, *a, *b),
            Shape::LShape { side, .. } => (-side / 2.0, -side / 2.0, side / 2.0, side / 2.0),
            Shape::Polygon { vertices } => vertices.iter().fold(
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
                |(a, b, c, d), v| (a.min(v[0]), b.min(v[1]), c.max(v[0]), d.max(v[1])),
            ),
        };
        let s = self.scale;
        (x0 * s, y0 * s, x1 * s, y1 * s)
    }

    /// Whether `(x, y)` lies strictly inside the domain. Points within a
    /// relative `1e-12` of the boundary count as boundary.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x, y) = (x / self.scale, y / self.scale);
        match &self.shape {
            Shape::Disk { radius } => {
                let eps = 1e-12 * radius;
                x.hypot(y) < radius - eps
            }
            Shape::Rectangle { width, height } => {
                let eps = 1e-12 * width.max(*height);
                x.abs() < width / 2.0 - eps && y.abs() < height / 2.0 - eps
            }
            Shape::Ellipse { a, b } => (x / a).powi(2) + (y / b).powi(2) < 1.0 - 1e-12,
            Shape::LShape { side, notch } => {
                let eps = 1e-12 * side;
                let half = side / 2.0;
                let corner = half - notch * side;
                let in_square = x.abs() < half - eps && y.abs() < half - eps;
                let in_notch = x > corner - eps && y > corner - eps;
                in_square && !in_notch
            }
            Shape::Polygon { vertices } => polygon_contains(vertices, x, y),
        }
    }
}

fn shoelace(v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    (0..m)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % m]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], d: f64| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn validate_polygon(v: &[[f64; 2]]) -> Result<()> {
    let m = v.len();
    if m < 3 {
        return Err(Error::DomainUnresolved(format!(
            "polygon needs at least 3 vertices, got {m}"
        )));
    }
    if v.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::DomainUnresolved("non-finite polygon vertex".into()));
    }
    if shoelace(v).abs() <= 0.0 {
        return Err(Error::DomainUnresolved("polygon has zero area".into()));
    }
    for i in 0..m {
        for j in i + 1..m {
            let adjacent = j == i + 1 || (i == 0 && j == m - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]) {
                return Err(Error::DomainUnresolved(format!(
                    "polygon edges {i} and {j} intersect; vertices must form a simple closed curve"
                )));
            }
        }
    }
    Ok(())
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn polygon_contains(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let m = v.len();
    let extent = v
        .iter()
        .flatten()
        .fold(0.0f64, |acc, c| acc.max(c.abs()))
        .max(1.0);
    let eps = 1e-12 * extent;
    let mut inside = false;
    for i in 0..m {
        let (a, b) = (v[i], v[(i + 1) % m]);
        if point_segment_distance([x, y], a, b) <= eps {
            return false;
        }
        if (a[1] > y) != (b[1] > y) {
            let xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}
