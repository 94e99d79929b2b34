//! Parametric 2-D domains bounded by a closed loop of named segments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Pieces used when a curved segment is flattened to a polyline.
const CURVE_PIECES: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub enum Curve {
    Line {
        from: Point,
        to: Point,
    },
    /// `y = base + amplitude * sin(pi * (x - x_lo) / (x_hi - x_lo))`, traversed from `x_from` to `x_to`.
    Bump {
        x_from: f64,
        x_to: f64,
        base: f64,
        amplitude: f64,
    },
}

impl Curve {
    pub fn point(&self, s: f64) -> Point {
        match *self {
            Curve::Line { from, to } => [from[0] + s * (to[0] - from[0]), from[1] + s * (to[1] - from[1])],
            Curve::Bump { x_from, x_to, .. } => {
                let x = if s == 1.0 { x_to } else { x_from + s * (x_to - x_from) };
                [x, self.bump_y(x)]
            }
        }
    }

    fn bump_y(&self, x: f64) -> f64 {
        match *self {
            Curve::Bump {
                x_from,
                x_to,
                base,
                amplitude,
            } => {
                let (lo, hi) = if x_from < x_to { (x_from, x_to) } else { (x_to, x_from) };
                base + amplitude * (PI * (x - lo) / (hi - lo)).sin()
            }
            Curve::Line { .. } => unreachable!(),
        }
    }

    pub fn start(&self) -> Point {
        self.point(0.0)
    }

    pub fn end(&self) -> Point {
        self.point(1.0)
    }

    pub fn polyline(&self) -> Vec<Point> {
        match self {
            Curve::Line { from, to } => vec![*from, *to],
            Curve::Bump { .. } => (0..=CURVE_PIECES)
                .map(|i| self.point(i as f64 / CURVE_PIECES as f64))
                .collect(),
        }
    }

    pub fn length(&self) -> f64 {
        self.polyline().windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Distance from `p` to the curve. For bumps this is the vertical
    /// offset inside the x-range, which vanishes exactly on the curve.
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            Curve::Line { from, to } => point_segment_distance(p, from, to),
            Curve::Bump { x_from, x_to, .. } => {
                let (lo, hi) = if x_from < x_to { (x_from, x_to) } else { (x_to, x_from) };
                if p[0] >= lo && p[0] <= hi {
                    (p[1] - self.bump_y(p[0])).abs()
                } else {
                    dist(p, self.start()).min(dist(p, self.end()))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub name: String,
    pub curve: Curve,
    /// Identified with its opposite segment; carries no boundary nodes.
    pub periodic: bool,
}

impl Segment {
    fn new(name: &str, curve: Curve) -> Self {
        Self {
            name: name.to_string(),
            curve,
            periodic: false,
        }
    }
}

/// Shape parameters of the distorted test domain.
///
/// The loop runs counter-clockwise: flat bottom `(0,0)-(1,0)`, vertical wall
/// `x = 1`, a sinusoidal top `y = 1 + bump_amplitude * sin(pi x)`, then two
/// inclined edges meeting at `(notch_depth, notch_height)` that close back to
/// the origin. Positive `notch_depth` bends the left side inwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionParams {
    pub bump_amplitude: f64,
    pub notch_depth: f64,
    pub notch_height: f64,
}

impl Default for DistortionParams {
    fn default() -> Self {
        Self {
            bump_amplitude: 0.2,
            notch_depth: 0.2,
            notch_height: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    UnitSquare,
    /// `[0, side]^2`, periodic in both directions.
    PeriodicSquare {
        side: f64,
    },
    /// Unit square, periodic in x, walls at y = 0 and y = 1.
    PeriodicChannel,
    Distorted(DistortionParams),
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    pub segments: Vec<Segment>,
}

impl Domain {
    pub fn unit_square() -> Self {
        Self {
            kind: DomainKind::UnitSquare,
            segments: square_segments(1.0),
        }
    }

    pub fn periodic_square(side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidDomain(format!("side length {side} must be positive")));
        }
        let mut segments = square_segments(side);
        for s in &mut segments {
            s.periodic = true;
        }
        Ok(Self {
            kind: DomainKind::PeriodicSquare { side },
            segments,
        })
    }

    pub fn periodic_channel() -> Self {
        let mut segments = square_segments(1.0);
        for s in &mut segments {
            s.periodic = s.name == "left" || s.name == "right";
        }
        Self {
            kind: DomainKind::PeriodicChannel,
            segments,
        }
    }

    /// Builds the distorted domain, rejecting out-of-range or self-intersecting shapes.
    pub fn distorted(params: DistortionParams) -> Result<Self> {
        let DistortionParams {
            bump_amplitude,
            notch_depth,
            notch_height,
        } = params;
        if !(bump_amplitude.abs() <= 0.5) {
            return Err(Error::InvalidDomain(format!(
                "bump amplitude {bump_amplitude} outside [-0.5, 0.5]"
            )));
        }
        if !(notch_depth.abs() <= 2.0) {
            return Err(Error::InvalidDomain(format!(
                "notch depth {notch_depth} outside [-2, 2]"
            )));
        }
        if !(notch_height > 0.05 && notch_height < 0.95) {
            return Err(Error::InvalidDomain(format!(
                "notch height {notch_height} outside (0.05, 0.95)"
            )));
        }
        let notch = [notch_depth, notch_height];
        let top = if bump_amplitude == 0.0 {
            Curve::Line {
                from: [1.0, 1.0],
                to: [0.0, 1.0],
            }
        } else {
            Curve::Bump {
                x_from: 1.0,
                x_to: 0.0,
                base: 1.0,
                amplitude: bump_amplitude,
            }
        };
        let segments = vec![
            Segment::new(
                "bottom",
                Curve::Line {
                    from: [0.0, 0.0],
                    to: [1.0, 0.0],
                },
            ),
            Segment::new(
                "wall",
                Curve::Line {
                    from: [1.0, 0.0],
                    to: [1.0, 1.0],
                },
            ),
            Segment::new("top", top),
            Segment::new(
                "upper_incline",
                Curve::Line {
                    from: [0.0, 1.0],
                    to: notch,
                },
            ),
            Segment::new(
                "lower_incline",
                Curve::Line {
                    from: notch,
                    to: [0.0, 0.0],
                },
            ),
        ];
        let domain = Self {
            kind: DomainKind::Distorted(params),
            segments,
        };
        if !domain.is_simple() {
            return Err(Error::InvalidDomain(format!(
                "parameters {params:?} give a self-intersecting boundary"
            )));
        }
        Ok(domain)
    }

    /// Arbitrary boundary loop; segments must chain end-to-start and close.
    pub fn custom(segments: Vec<Segment>) -> Result<Self> {
        let d = Self {
            kind: DomainKind::Custom,
            segments,
        };
        d.check_closed()?;
        Ok(d)
    }

    pub fn check_closed(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::OpenBoundary("no segments".into()));
        }
        let n = self.segments.len();
        for i in 0..n {
            let a = self.segments[i].curve.end();
            let b = self.segments[(i + 1) % n].curve.start();
            if dist(a, b) > 1e-12 {
                return Err(Error::OpenBoundary(format!(
                    "segment '{}' ends at {:?} but '{}' starts at {:?}",
                    self.segments[i].name,
                    a,
                    self.segments[(i + 1) % n].name,
                    b
                )));
            }
        }
        Ok(())
    }

    /// Lattice periods in x and y, if any.
    pub fn period(&self) -> [Option<f64>; 2] {
        match self.kind {
            DomainKind::PeriodicSquare { side } => [Some(side), Some(side)],
            DomainKind::PeriodicChannel => [Some(1.0), None],
            _ => [None, None],
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.period().iter().any(Option::is_some)
    }

    /// Closed boundary polyline (last vertex not repeated).
    pub fn boundary_polyline(&self) -> Vec<Point> {
        let mut pts = Vec::new();
        for s in &self.segments {
            let mut pl = s.curve.polyline();
            pl.pop();
            pts.extend(pl);
        }
        pts
    }

    /// Shoelace area of the boundary polyline.
    pub fn area(&self) -> f64 {
        let p = self.boundary_polyline();
        let n = p.len();
        let mut a = 0.0;
        for i in 0..n {
            let (x0, y0) = (p[i][0], p[i][1]);
            let (x1, y1) = (p[(i + 1) % n][0], p[(i + 1) % n][1]);
            a += x0 * y1 - x1 * y0;
        }
        0.5 * a
    }

    pub fn diameter(&self) -> f64 {
        let p = self.boundary_polyline();
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max(dist(p[i], p[j]));
            }
        }
        d
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let p = self.boundary_polyline();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for q in p {
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
            }
        }
        (lo, hi)
    }

    /// Winding-number containment against the boundary polyline.
    pub fn contains(&self, q: Point) -> bool {
        winding_number(&self.boundary_polyline(), q) != 0
    }

    /// No two non-adjacent pieces of the boundary polyline intersect.
    pub fn is_simple(&self) -> bool {
        polyline_is_simple(&self.boundary_polyline())
    }

    /// Distance to the nearest non-periodic boundary segment.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.segments
            .iter()
            .filter(|s| !s.periodic)
            .map(|s| s.curve.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Segment owning `p`, if it lies on a non-periodic segment within `tol`.
    /// A corner belongs to the segment that starts there.
    pub fn segment_of(&self, p: Point, tol: f64) -> Option<usize> {
        let live = |i: &usize| !self.segments[*i].periodic;
        (0..self.segments.len())
            .filter(live)
            .find(|&i| dist(self.segments[i].curve.start(), p) <= tol)
            .or_else(|| {
                (0..self.segments.len())
                    .filter(live)
                    .find(|&i| self.segments[i].curve.distance(p) <= tol)
            })
    }

    pub fn segment_index(&self, name: &str) -> Option<usize> {
        self.segments.iter().position(|s| s.name == name)
    }

    /// Tolerance used to decide that a node sits on the boundary.
    pub fn boundary_tolerance(&self) -> f64 {
        1e-9 * self.diameter()
    }
}

fn square_segments(l: f64) -> Vec<Segment> {
    vec![
        Segment::new(
            "bottom",
            Curve::Line {
                from: [0.0, 0.0],
                to: [l, 0.0],
            },
        ),
        Segment::new(
            "right",
            Curve::Line {
                from: [l, 0.0],
                to: [l, l],
            },
        ),
        Segment::new(
            "top",
            Curve::Line {
                from: [l, l],
                to: [0.0, l],
            },
        ),
        Segment::new(
            "left",
            Curve::Line {
                from: [0.0, l],
                to: [0.0, 0.0],
            },
        ),
    ]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

pub(crate) fn winding_number(poly: &[Point], q: Point) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let side = (b[0] - a[0]) * (q[1] - a[1]) - (q[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= q[1] {
            if b[1] > q[1] && side > 0.0 {
                wn += 1;
            }
        } else if b[1] <= q[1] && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let o = |a: Point, b: Point, c: Point| robust::orient2d(coord(a), coord(b), coord(c));
    let d1 = o(q1, q2, p1);
    let d2 = o(q1, q2, p2);
    let d3 = o(p1, p2, q1);
    let d4 = o(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

pub(crate) fn polyline_is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            // adjacent pieces share exactly one vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn flat_distortion_is_the_unit_square() {
        let d = Domain::distorted(DistortionParams {
            bump_amplitude: 0.0,
            notch_depth: 0.0,
            notch_height: 0.5,
        })
        .unwrap();
        assert!((d.area() - 1.0).abs() < 1e-15);
        assert_eq!(d.bounding_box(), ([0.0, 0.0], [1.0, 1.0]));
        let sq = Domain::unit_square();
        for q in [[0.5, 0.5], [0.01, 0.99], [1.2, 0.5], [0.5, -0.1]] {
            assert_eq!(d.contains(q), sq.contains(q));
        }
    }

    #[test]
    fn default_distortion_is_simple_and_sized() {
        let d = Domain::distorted(DistortionParams::default()).unwrap();
        assert!(d.is_simple());
        let a = d.area();
        let diam = d.diameter();
        assert!((0.5..=2.0).contains(&a), "area {a}");
        assert!((1.0..=2.0).contains(&diam), "diameter {diam}");
    }

    #[test]
    fn default_distortion_area_matches_monte_carlo() {
        let d = Domain::distorted(DistortionParams::default()).unwrap();
        let (lo, hi) = d.bounding_box();
        let box_area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        let hits = (0..n)
            .filter(|_| {
                let q = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
                d.contains(q)
            })
            .count();
        let mc = box_area * hits as f64 / n as f64;
        assert!((mc - d.area()).abs() / d.area() < 0.01, "mc {mc} shoelace {}", d.area());
        // closed form: 1 + 2A/pi - depth * 1 / 2
        let exact = 1.0 + 2.0 * 0.2 / PI - 0.2 * 0.5;
        assert!((d.area() - exact).abs() < 1e-5);
    }

    #[test]
    fn crossing_notch_is_rejected() {
        let p = DistortionParams {
            notch_depth: 1.5,
            ..Default::default()
        };
        assert!(matches!(Domain::distorted(p), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn open_loop_is_rejected() {
        let segs = vec![
            Segment::new(
                "a",
                Curve::Line {
                    from: [0.0, 0.0],
                    to: [1.0, 0.0],
                },
            ),
            Segment::new(
                "b",
                Curve::Line {
                    from: [1.0, 0.0],
                    to: [1.0, 1.0],
                },
            ),
            Segment::new(
                "c",
                Curve::Line {
                    from: [1.0, 1.0],
                    to: [0.0, 0.9],
                },
            ),
        ];
        assert!(matches!(Domain::custom(segs), Err(Error::OpenBoundary(_))));
    }

    #[test]
    fn corners_belong_to_the_segment_starting_there() {
        let d = Domain::unit_square();
        assert_eq!(d.segment_of([0.0, 0.0], 1e-12), Some(0));
        assert_eq!(d.segment_of([1.0, 0.0], 1e-12), Some(1));
        assert_eq!(d.segment_of([0.5, 1.0], 1e-12), Some(2));
        assert_eq!(d.segment_of([0.5, 0.5], 1e-12), None);
    }
}
