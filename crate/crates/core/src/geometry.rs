//! Discretized closed curves for the eight dictionary shapes and the rigid
//! motions plus scaling that act on them.
//!
//! Every boundary is sampled at `t_j = 2πj/N` of a 2π-periodic, counterclockwise
//! parametrization. Smooth shapes use analytic parametrizations; polygons are
//! rounded at the corners and parametrized by arclength.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corner rounding radius for polygonal shapes. The vertex outline has unit
/// size; rounding trims the corners inside it.
pub const CORNER_RADIUS: f64 = 0.02;

/// Smallest accepted sample count for [`make_shape`].
pub const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ShapeName {
    Ellipse,
    Flower,
    LetterA,
    Square,
    LetterE,
    Rectangle,
    Disk,
    Triangle,
}

impl ShapeName {
    /// The dictionary order.
    pub const ALL: [ShapeName; 8] = [
        ShapeName::Ellipse,
        ShapeName::Flower,
        ShapeName::LetterA,
        ShapeName::Square,
        ShapeName::LetterE,
        ShapeName::Rectangle,
        ShapeName::Disk,
        ShapeName::Triangle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeName::Ellipse => "ellipse",
            ShapeName::Flower => "flower",
            ShapeName::LetterA => "letterA",
            ShapeName::Square => "square",
            ShapeName::LetterE => "letterE",
            ShapeName::Rectangle => "rectangle",
            ShapeName::Disk => "disk",
            ShapeName::Triangle => "triangle",
        }
    }

    pub fn is_smooth(self) -> bool {
        matches!(self, ShapeName::Ellipse | ShapeName::Flower | ShapeName::Disk)
    }
}

impl fmt::Display for ShapeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownShape(s.to_string()))
    }
}

/// A sampled closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub name: String,
    pub points: Vec<[f64; 2]>,
    /// Outward unit normals.
    pub normals: Vec<[f64; 2]>,
    /// Trapezoid arclength weights `|x'(t_j)|·2π/N`.
    pub weights: Vec<f64>,
    /// Signed curvature, positive where the curve is locally convex.
    pub curvature: Vec<f64>,
}

/// Point samples with first and second parameter derivatives.
struct Jet {
    x: [f64; 2],
    dx: [f64; 2],
    ddx: [f64; 2],
}

impl Boundary {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `|x'(t_j)|`, recovered from the weights.
    pub fn speed(&self) -> Vec<f64> {
        let scale = self.len() as f64 / TAU;
        self.weights.iter().map(|w| w * scale).collect()
    }

    /// Enclosed area by the divergence theorem on the samples.
    pub fn area(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.normals)
            .zip(&self.weights)
            .map(|((p, n), w)| 0.5 * (p[0] * n[0] + p[1] * n[1]) * w)
            .sum()
    }

    /// Area centroid by the divergence theorem on the samples.
    pub fn centroid(&self) -> [f64; 2] {
        let area = self.area();
        let mut c = [0.0; 2];
        for ((p, n), w) in self.points.iter().zip(&self.normals).zip(&self.weights) {
            c[0] += 0.5 * p[0] * p[0] * n[0] * w;
            c[1] += 0.5 * p[1] * p[1] * n[1] * w;
        }
        [c[0] / area, c[1] / area]
    }

    /// Largest distance from `center` to a sample.
    pub fn circumradius(&self, center: [f64; 2]) -> f64 {
        self.points
            .iter()
            .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
            .fold(0.0, f64::max)
    }

    /// `[xmin, ymin, xmax, ymax]` of the samples.
    pub fn bounding_box(&self) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.points {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        b
    }

    /// Largest sample spacing.
    pub fn max_spacing(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Distance from `x` to the nearest sample.
    pub fn distance_to_samples(&self, x: [f64; 2]) -> f64 {
        self.points
            .iter()
            .map(|p| (p[0] - x[0]).hypot(p[1] - x[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the sample polygon around `x`.
    pub fn winding_number(&self, x: [f64; 2]) -> i32 {
        let n = self.len();
        let mut wn = 0;
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let side = (b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1]);
            if a[1] <= x[1] {
                if b[1] > x[1] && side > 0.0 {
                    wn += 1;
                }
            } else if b[1] <= x[1] && side < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.winding_number(x) != 0
    }

    fn from_jets(name: &str, jets: Vec<Jet>) -> Boundary {
        let n = jets.len();
        let mut b = Boundary {
            name: name.to_string(),
            points: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
        };
        for j in jets {
            let speed = j.dx[0].hypot(j.dx[1]);
            b.points.push(j.x);
            b.normals.push([j.dx[1] / speed, -j.dx[0] / speed]);
            b.weights.push(speed * TAU / n as f64);
            b.curvature
                .push((j.dx[0] * j.ddx[1] - j.dx[1] * j.ddx[0]) / speed.powi(3));
        }
        b
    }

    fn shift(&mut self, by: [f64; 2]) {
        for p in &mut self.points {
            p[0] += by[0];
            p[1] += by[1];
        }
    }

    /// Moves the area centroid to the origin.
    fn recenter(&mut self) {
        for _ in 0..5 {
            let c = self.centroid();
            if c[0].hypot(c[1]) < 1e-14 {
                break;
            }
            self.shift([-c[0], -c[1]]);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BoundaryFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Boundary> {
        let file: BoundaryFile = serde_json::from_str(text)?;
        file.into_boundary()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Boundary> {
        Boundary::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk boundary layout. Curvature is optional and estimated from the
/// normals when missing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFile {
    pub name: String,
    pub points: Vec<[f64; 2]>,
    pub normals: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<Vec<f64>>,
}

impl From<&Boundary> for BoundaryFile {
    fn from(b: &Boundary) -> Self {
        BoundaryFile {
            name: b.name.clone(),
            points: b.points.clone(),
            normals: b.normals.clone(),
            weights: b.weights.clone(),
            curvature: Some(b.curvature.clone()),
        }
    }
}

impl BoundaryFile {
    pub fn into_boundary(self) -> Result<Boundary> {
        let n = self.points.len();
        if n < 3 || self.normals.len() != n || self.weights.len() != n {
            return Err(Error::InvalidInput(format!(
                "boundary `{}` needs at least 3 samples with matching normals and weights",
                self.name
            )));
        }
        let curvature = match self.curvature {
            Some(c) if c.len() == n => c,
            Some(_) => {
                return Err(Error::InvalidInput("curvature length mismatch".into()));
            }
            None => curvature_from_normals(&self.normals, &self.weights),
        };
        Ok(Boundary {
            name: self.name,
            points: self.points,
            normals: self.normals,
            weights: self.weights,
            curvature,
        })
    }
}

/// Centered-difference curvature estimate from the turning of the normals.
fn curvature_from_normals(normals: &[[f64; 2]], weights: &[f64]) -> Vec<f64> {
    let n = normals.len();
    (0..n)
        .map(|i| {
            let a = normals[(i + n - 1) % n];
            let b = normals[(i + 1) % n];
            let turn = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
            let ds = 0.5 * (weights[(i + n - 1) % n] + weights[(i + 1) % n]) + weights[i];
            turn / ds
        })
        .collect()
}

/// `x ↦ z + s·R_θ·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub z: [f64; 2],
    pub s: f64,
    pub theta: f64,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(z: [f64; 2], s: f64, theta: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {s}")));
        }
        Ok(RigidTransform {
            z,
            s,
            theta: theta.rem_euclid(TAU),
        })
    }

    pub fn identity() -> Self {
        RigidTransform {
            z: [0.0, 0.0],
            s: 1.0,
            theta: 0.0,
        }
    }

    pub fn translation(z: [f64; 2]) -> Self {
        RigidTransform { z, ..Self::identity() }
    }

    pub fn rotation(theta: f64) -> Self {
        RigidTransform {
            theta: theta.rem_euclid(TAU),
            ..Self::identity()
        }
    }

    pub fn scaling(s: f64) -> Self {
        RigidTransform { s, ..Self::identity() }
    }

    pub fn is_identity(&self) -> bool {
        self.z == [0.0, 0.0] && self.s == 1.0 && self.theta == 0.0
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let r = rotate(x, self.theta);
        [self.z[0] + self.s * r[0], self.z[1] + self.s * r[1]]
    }

    /// `next ∘ self`: apply `self` first.
    pub fn then(&self, next: &RigidTransform) -> RigidTransform {
        RigidTransform {
            z: next.apply(self.z),
            s: self.s * next.s,
            theta: (self.theta + next.theta).rem_euclid(TAU),
        }
    }
}

#[inline]
pub fn rotate(x: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * x[0] - s * x[1], s * x[0] + c * x[1]]
}

/// Applies a rigid motion with scaling to a boundary.
pub fn transform(b: &Boundary, t: &RigidTransform) -> Boundary {
    if t.is_identity() {
        return b.clone();
    }
    Boundary {
        name: b.name.clone(),
        points: b.points.iter().map(|&p| t.apply(p)).collect(),
        normals: b.normals.iter().map(|&n| rotate(n, t.theta)).collect(),
        weights: b.weights.iter().map(|w| w * t.s).collect(),
        curvature: b.curvature.iter().map(|k| k / t.s).collect(),
    }
}

/// Samples a dictionary shape of unit size, centered at its area centroid.
pub fn make_shape(name: ShapeName, n_points: usize) -> Result<Boundary> {
    if n_points < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "at least {MIN_POINTS} boundary points are required, got {n_points}"
        )));
    }
    let mut b = match name {
        ShapeName::Disk => ellipse(name, n_points, 0.5, 0.5),
        ShapeName::Ellipse => ellipse(name, n_points, 0.5, 0.3),
        ShapeName::Flower => flower(name, n_points, 0.5, 0.3, 5),
        ShapeName::Square => rounded_polygon(name, n_points, &[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        ShapeName::Rectangle => rounded_polygon(name, n_points, &[[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.0, 0.5]]),
        ShapeName::Triangle => rounded_polygon(name, n_points, &[[0.0, 0.0], [1.0, 0.0], [0.5, 0.75_f64.sqrt()]]),
        ShapeName::LetterA => rounded_polygon(name, n_points, &letter(LETTER_A)?),
        ShapeName::LetterE => rounded_polygon(name, n_points, &letter(LETTER_E)?),
    };
    b.recenter();
    Ok(b)
}

/// Parses the shape name first, for callers holding a string label.
pub fn make_shape_by_name(name: &str, n_points: usize) -> Result<Boundary> {
    make_shape(name.parse()?, n_points)
}

fn nodes(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| TAU * j as f64 / n as f64)
}

fn ellipse(name: ShapeName, n: usize, a: f64, b: f64) -> Boundary {
    let jets = nodes(n)
        .map(|t| {
            let (s, c) = t.sin_cos();
            Jet {
                x: [a * c, b * s],
                dx: [-a * s, b * c],
                ddx: [-a * c, -b * s],
            }
        })
        .collect();
    Boundary::from_jets(name.as_str(), jets)
}

/// Polar curve `r(t) = a(1 + e·cos(p·t))`.
fn flower(name: ShapeName, n: usize, a: f64, e: f64, petals: u32) -> Boundary {
    let p = petals as f64;
    let jets = nodes(n)
        .map(|t| {
            let (sp, cp) = (p * t).sin_cos();
            let r = a * (1.0 + e * cp);
            let dr = -a * e * p * sp;
            let ddr = -a * e * p * p * cp;
            let (s, c) = t.sin_cos();
            Jet {
                x: [r * c, r * s],
                dx: [dr * c - r * s, dr * s + r * c],
                ddx: [ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s],
            }
        })
        .collect();
    Boundary::from_jets(name.as_str(), jets)
}

const LETTER_A: &str = include_str!("../data/letter_a.json");
const LETTER_E: &str = include_str!("../data/letter_e.json");

#[derive(Deserialize)]
struct LetterFile {
    vertices: Vec<[f64; 2]>,
}

/// Letter outline scaled so the larger bounding-box side is 1.
fn letter(text: &str) -> Result<Vec<[f64; 2]>> {
    let file: LetterFile = serde_json::from_str(text)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in &file.vertices {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    Ok(file
        .vertices
        .iter()
        .map(|v| [(v[0] - lo[0]) / size, (v[1] - lo[1]) / size])
        .collect())
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line {
        start: [f64; 2],
        dir: [f64; 2],
        len: f64,
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        /// +1 for a left (convex) turn, -1 for a right turn.
        sign: f64,
        len: f64,
    },
}

impl Piece {
    fn len(&self) -> f64 {
        match *self {
            Piece::Line { len, .. } | Piece::Arc { len, .. } => len,
        }
    }

    /// Point, unit tangent and curvature at arclength `s` into the piece.
    fn eval(&self, s: f64) -> ([f64; 2], [f64; 2], f64) {
        match *self {
            Piece::Line { start, dir, .. } => ([start[0] + s * dir[0], start[1] + s * dir[1]], dir, 0.0),
            Piece::Arc {
                center,
                radius,
                start_angle,
                sign,
                ..
            } => {
                let a = start_angle + sign * s / radius;
                let (sa, ca) = a.sin_cos();
                (
                    [center[0] + radius * ca, center[1] + radius * sa],
                    [-sign * sa, sign * ca],
                    sign / radius,
                )
            }
        }
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Counterclockwise polygon with every corner replaced by a circular arc of
/// radius [`CORNER_RADIUS`]. Nodes cluster near the arcs following
/// [`Grading`], with trapezoid weights scaled by the local spacing.
fn rounded_polygon(name: ShapeName, n: usize, vertices: &[[f64; 2]]) -> Boundary {
    let m = vertices.len();
    let r = CORNER_RADIUS;
    // arc endpoints at each corner
    let mut corners = Vec::with_capacity(m);
    for i in 0..m {
        let prev = vertices[(i + m - 1) % m];
        let v = vertices[i];
        let next = vertices[(i + 1) % m];
        let d_in = unit([v[0] - prev[0], v[1] - prev[1]]);
        let d_out = unit([next[0] - v[0], next[1] - v[1]]);
        let cross = d_in[0] * d_out[1] - d_in[1] * d_out[0];
        let turn = cross.atan2(d_in[0] * d_out[0] + d_in[1] * d_out[1]);
        let sign = turn.signum();
        let t = r * (0.5 * turn.abs()).tan();
        let p_in = [v[0] - t * d_in[0], v[1] - t * d_in[1]];
        let p_out = [v[0] + t * d_out[0], v[1] + t * d_out[1]];
        let left = [-d_in[1], d_in[0]];
        let center = [p_in[0] + sign * r * left[0], p_in[1] + sign * r * left[1]];
        let start_angle = (p_in[1] - center[1]).atan2(p_in[0] - center[0]);
        corners.push((p_in, p_out, center, start_angle, sign, r * turn.abs()));
    }
    let mut pieces = Vec::with_capacity(2 * m);
    for i in 0..m {
        let from = corners[(i + m - 1) % m].1;
        let to = corners[i].0;
        let len = (to[0] - from[0]).hypot(to[1] - from[1]);
        pieces.push(Piece::Line {
            start: from,
            dir: unit([to[0] - from[0], to[1] - from[1]]),
            len,
        });
        let (_, _, center, start_angle, sign, len) = corners[i];
        pieces.push(Piece::Arc {
            center,
            radius: r,
            start_angle,
            sign,
            len,
        });
    }
    let total: f64 = pieces.iter().map(Piece::len).sum();
    let mut corner_centers = Vec::with_capacity(m);
    let mut offset = 0.0;
    for p in &pieces {
        if let Piece::Arc { len, .. } = p {
            corner_centers.push(offset + 0.5 * len);
        }
        offset += p.len();
    }
    let grading = Grading {
        centers: corner_centers,
        period: total,
        strength: GRADING_STRENGTH,
        width: GRADING_WIDTH,
    };
    let (g0, g_total) = (
        grading.primitive(0.0),
        grading.primitive(total) - grading.primitive(0.0),
    );
    let mut b = Boundary {
        name: name.as_str().to_string(),
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
    };
    let mut piece = 0;
    let mut offset = 0.0;
    for j in 0..n {
        let s = grading.invert(g0 + g_total * j as f64 / n as f64, total * j as f64 / n as f64);
        while piece + 1 < pieces.len() && s >= offset + pieces[piece].len() {
            offset += pieces[piece].len();
            piece += 1;
        }
        let (x, tangent, kappa) = pieces[piece].eval(s - offset);
        b.points.push(x);
        b.normals.push([tangent[1], -tangent[0]]);
        b.curvature.push(kappa);
        b.weights.push(g_total / (n as f64 * grading.density(s)));
    }
    b
}

const GRADING_STRENGTH: f64 = 2.0;
const GRADING_WIDTH: f64 = 0.06;

/// Node density `1 + β Σ_c sech²((s − s_c)/w)` in arclength, periodic with
/// the perimeter; its primitive is available in closed form.
struct Grading {
    centers: Vec<f64>,
    period: f64,
    strength: f64,
    width: f64,
}

impl Grading {
    fn images(&self, s: f64) -> impl Iterator<Item = f64> + '_ {
        self.centers
            .iter()
            .flat_map(move |&c| (-1..=1).map(move |k| (s - c - k as f64 * self.period) / self.width))
    }

    fn density(&self, s: f64) -> f64 {
        1.0 + self.strength * self.images(s).map(|x| 1.0 / x.cosh().powi(2)).sum::<f64>()
    }

    fn primitive(&self, s: f64) -> f64 {
        s + self.strength * self.width * self.images(s).map(f64::tanh).sum::<f64>()
    }

    /// Arclength where the primitive reaches `target`; safeguarded Newton.
    fn invert(&self, target: f64, guess: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.period);
        let mut s = guess.clamp(lo, hi);
        for _ in 0..100 {
            let f = self.primitive(s) - target;
            if f.abs() <= 1e-15 * self.period {
                break;
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let next = s - f / self.density(s);
            s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-16 * self.period {
                break;
            }
        }
        s
    }
}

/// Reference value of the disk radius used by [`make_shape`].
pub const DISK_RADIUS: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!("blob".parse::<ShapeName>(), Err(Error::UnknownShape(_))));
        assert_eq!("letterA".parse::<ShapeName>().unwrap(), ShapeName::LetterA);
    }

    #[test]
    fn disk_has_radius_half() {
        let b = make_shape(ShapeName::Disk, 256).unwrap();
        for p in &b.points {
            assert!((p[0].hypot(p[1]) - DISK_RADIUS).abs() < 1e-14);
        }
        assert!((b.perimeter() - PI).abs() < 1e-12);
        for k in &b.curvature {
            assert!((k - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flower_follows_polar_formula() {
        let b = make_shape(ShapeName::Flower, 256).unwrap();
        // the recentering shift is tiny for a symmetric flower
        for (j, p) in b.points.iter().enumerate() {
            let t = TAU * j as f64 / 256.0;
            let r = 0.5 * (1.0 + 0.3 * (5.0 * t).cos());
            assert!((p[0] - r * t.cos()).abs() < 1e-12);
            assert!((p[1] - r * t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn square_perimeter_within_one_percent() {
        let b = make_shape(ShapeName::Square, 256).unwrap();
        assert!((b.perimeter() - 4.0).abs() < 0.04, "{}", b.perimeter());
    }

    #[test]
    fn shapes_are_centered_with_unit_size() {
        for name in ShapeName::ALL {
            let b = make_shape(name, 256).unwrap();
            let c = b.centroid();
            assert!(c[0].hypot(c[1]) < 1e-6, "{name}: {c:?}");
            if name != ShapeName::Flower {
                let bb = b.bounding_box();
                let size = (bb[2] - bb[0]).max(bb[3] - bb[1]);
                // rounding trims sharp corners of the unit vertex outline
                assert!(size <= 1.0 + 1e-12 && size > 0.95, "{name}: size {size}");
            }
            assert!(b.area() > 0.0, "{name} is not counterclockwise");
        }
    }

    #[test]
    fn normals_are_unit() {
        for name in ShapeName::ALL {
            let b = make_shape(name, 128).unwrap();
            for n in &b.normals {
                assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(make_shape(ShapeName::Disk, 32).is_err());
    }

    #[test]
    fn identity_transform_is_bitwise() {
        let b = make_shape(ShapeName::LetterE, 128).unwrap();
        assert_eq!(transform(&b, &RigidTransform::identity()), b);
    }

    #[test]
    fn transformed_disk() {
        let b = make_shape(ShapeName::Disk, 256).unwrap();
        let t = RigidTransform::new([1.0, 0.0], 2.0, PI / 4.0).unwrap();
        let d = transform(&b, &t);
        for p in &d.points {
            assert!(((p[0] - 1.0).hypot(p[1]) - 1.0).abs() < 1e-12);
        }
        assert!((d.perimeter() - 2.0 * b.perimeter()).abs() < 1e-12);
    }

    #[test]
    fn theta_is_reduced_modulo_two_pi() {
        let t = RigidTransform::new([0.0, 0.0], 1.0, 5.0 * PI).unwrap();
        assert!((t.theta - PI).abs() < 1e-12);
        assert!(RigidTransform::new([0.0, 0.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let b = make_shape(ShapeName::Triangle, 96).unwrap();
        let back = Boundary::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn missing_curvature_is_estimated() {
        let b = make_shape(ShapeName::Ellipse, 512).unwrap();
        let mut file = BoundaryFile::from(&b);
        file.curvature = None;
        let back = file.into_boundary().unwrap();
        for (a, e) in back.curvature.iter().zip(&b.curvature) {
            assert!((a - e).abs() < 1e-3 * e.abs().max(1.0));
        }
    }
}
