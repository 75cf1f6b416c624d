//! Constructive plane-domain descriptions, condenser plates and curves,
//! and their rasterization onto uniform grids.

mod mask;
mod raster;

pub use mask::{build_mask, CellLabel, GridMask};
pub use raster::{apply_plates, rasterize_curve, rasterize_plate, CellSet};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const TAU: f64 = std::f64::consts::TAU;

/// A point of the plane, dimensionless units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic order on (x, y); used for canonical pair orientation.
    pub fn lex_le(&self, other: Point) -> bool {
        (self.x, self.y) <= (other.x, other.y)
    }
}

/// Closed straight segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn distance_to_point(&self, p: Point) -> f64 {
        let vx = self.b.x - self.a.x;
        let vy = self.b.y - self.a.y;
        let wx = p.x - self.a.x;
        let wy = p.y - self.a.y;
        let c1 = vx * wx + vy * wy;
        if c1 <= 0.0 {
            return p.dist(self.a);
        }
        let c2 = vx * vx + vy * vy;
        if c2 <= c1 {
            return p.dist(self.b);
        }
        let t = c1 / c2;
        p.dist(Point::new(self.a.x + t * vx, self.a.y + t * vy))
    }

    /// True if the segment meets the closed axis-aligned square
    /// `[cx-half, cx+half] x [cy-half, cy+half]`.
    pub fn intersects_square(&self, cx: f64, cy: f64, half: f64) -> bool {
        // Quick reject on bounding boxes.
        let (minx, maxx) = minmax(self.a.x, self.b.x);
        let (miny, maxy) = minmax(self.a.y, self.b.y);
        if minx > cx + half || maxx < cx - half || miny > cy + half || maxy < cy - half {
            return false;
        }
        // Endpoint inside.
        if point_in_square(self.a, cx, cy, half) || point_in_square(self.b, cx, cy, half) {
            return true;
        }
        // Otherwise the segment must cross one of the four sides.
        let corners = [
            Point::new(cx - half, cy - half),
            Point::new(cx + half, cy - half),
            Point::new(cx + half, cy + half),
            Point::new(cx - half, cy + half),
        ];
        for k in 0..4 {
            if segments_intersect(self.a, self.b, corners[k], corners[(k + 1) % 4]) {
                return true;
            }
        }
        false
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn point_in_square(p: Point, cx: f64, cy: f64, half: f64) -> bool {
    (p.x - cx).abs() <= half && (p.y - cy).abs() <= half
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Proper or touching intersection of closed segments ab and cd.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| -> bool {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// An ordered rectifiable curve given by its vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    /// Builds a polyline; at least two vertices, consecutive vertices
    /// distinct, finite positive total length.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("polyline", "needs at least 2 vertices"));
        }
        for v in &vertices {
            if !v.is_finite() {
                return Err(Error::invalid("polyline", "non-finite vertex"));
            }
        }
        for w in vertices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid("polyline", "consecutive vertices coincide"));
            }
        }
        Ok(Polyline { vertices })
    }

    /// Zero-length curve used by the metric when the two query points
    /// coincide. Bypasses the distinct-vertices invariant on purpose.
    pub fn degenerate(p: Point) -> Self {
        Polyline {
            vertices: vec![p, p],
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() == 2 && self.vertices[0] == self.vertices[1]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn first(&self) -> Point {
        self.vertices[0]
    }

    pub fn last(&self) -> Point {
        *self.vertices.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.vertices.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    pub fn reversed(&self) -> Polyline {
        let mut v = self.vertices.clone();
        v.reverse();
        Polyline { vertices: v }
    }

    /// Joins two polylines sharing an endpoint (`self` ends where `other`
    /// starts); duplicate junction vertex dropped.
    pub fn concat(&self, other: &Polyline) -> Polyline {
        let mut v = self.vertices.clone();
        let skip_first = v.last() == other.vertices.first();
        for (k, p) in other.vertices.iter().enumerate() {
            if k == 0 && skip_first {
                continue;
            }
            v.push(*p);
        }
        Polyline { vertices: v }
    }

    /// Resamples to `k` vertices evenly spaced by arclength, endpoints kept.
    pub fn resample(&self, k: usize) -> Polyline {
        let k = k.max(2);
        let total = self.length();
        if total <= 0.0 {
            return self.clone();
        }
        let mut out = Vec::with_capacity(k);
        out.push(self.first());
        let mut seg = 0usize;
        let mut seg_start = 0.0f64;
        let segs: Vec<Segment> = self.segments().collect();
        let lens: Vec<f64> = segs.iter().map(|s| s.length()).collect();
        for m in 1..k - 1 {
            let target = total * m as f64 / (k - 1) as f64;
            while seg + 1 < segs.len() && seg_start + lens[seg] < target {
                seg_start += lens[seg];
                seg += 1;
            }
            let t = ((target - seg_start) / lens[seg]).clamp(0.0, 1.0);
            let s = segs[seg];
            let p = Point::new(s.a.x + t * (s.b.x - s.a.x), s.a.y + t * (s.b.y - s.a.y));
            if *out.last().unwrap() != p {
                out.push(p);
            }
        }
        if *out.last().unwrap() != self.last() || out.len() < 2 {
            out.push(self.last());
        }
        Polyline { vertices: out }
    }
}

/// Compact region V of the capacitary-metric pair (F, V); restricted to
/// closed disks and axis-aligned rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Region {
    Disk { center: Point, radius: f64 },
    Rect { min: Point, max: Point },
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Disk { center, radius } => p.dist(center) <= radius,
            Region::Rect { min, max } => {
                p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y
            }
        }
    }

    /// Points on the region boundary, for containment validation.
    pub fn boundary_samples(&self, n: usize) -> Vec<Point> {
        match *self {
            Region::Disk { center, radius } => (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                })
                .collect(),
            Region::Rect { min, max } => {
                let per_side = (n / 4).max(2);
                let mut out = Vec::new();
                for k in 0..per_side {
                    let t = k as f64 / per_side as f64;
                    out.push(Point::new(min.x + t * (max.x - min.x), min.y));
                    out.push(Point::new(max.x, min.y + t * (max.y - min.y)));
                    out.push(Point::new(max.x - t * (max.x - min.x), max.y));
                    out.push(Point::new(min.x, max.y - t * (max.y - min.y)));
                }
                out
            }
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

/// Constructive description of the bounded plane domains the toolkit
/// works with, including the pathological comb and Cantor-fan examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk {
        center: Point,
        radius: f64,
    },
    Rectangle {
        min: Point,
        max: Point,
    },
    SlitDisk {
        radius: f64,
        slits: Vec<Segment>,
    },
    /// Comb domain: (-2,2) x (0,1) minus the two families of teeth,
    /// truncated at tooth index `levels`. Teeth sit at y = 3^-k spanning
    /// x in [-1, 2] and at y = 2*3^-k spanning x in [-2, 1].
    Comb {
        levels: u32,
    },
    /// Fan of radial slits at dyadic angles with dyadically shrinking
    /// lengths, inside disk(0, 2). `depth` counts sector-splitting levels:
    /// ray generations 1..=depth+1 are included so that the 2^depth sector
    /// addresses at that depth are separated by rays of the included
    /// generations.
    CantorFan {
        depth: u32,
    },
    Polygon {
        vertices: Vec<Point>,
    },
    /// Koch snowflake polygon of the given iteration count, circumradius 1.
    Snowflake {
        iterations: u32,
    },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainSpec::Disk { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::invalid("domain", "disk needs a positive radius"));
                }
            }
            DomainSpec::Rectangle { min, max } => {
                if !(min.x < max.x && min.y < max.y) {
                    return Err(Error::invalid("domain", "rectangle corners out of order"));
                }
            }
            DomainSpec::SlitDisk { radius, slits } => {
                if *radius <= 0.0 {
                    return Err(Error::invalid("domain", "slit disk needs a positive radius"));
                }
                if slits.is_empty() {
                    return Err(Error::invalid("domain", "slit disk needs at least one slit"));
                }
            }
            DomainSpec::Comb { levels } | DomainSpec::CantorFan { depth: levels } => {
                if *levels < 1 {
                    return Err(Error::invalid("domain", "level/depth must be >= 1"));
                }
            }
            DomainSpec::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::invalid("domain", "polygon needs >= 3 vertices"));
                }
            }
            DomainSpec::Snowflake { .. } => {}
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            DomainSpec::Disk { center, radius } => BoundingBox {
                min: Point::new(center.x - radius, center.y - radius),
                max: Point::new(center.x + radius, center.y + radius),
            },
            DomainSpec::Rectangle { min, max } => BoundingBox {
                min: *min,
                max: *max,
            },
            DomainSpec::SlitDisk { radius, .. } => BoundingBox {
                min: Point::new(-radius, -radius),
                max: Point::new(*radius, *radius),
            },
            DomainSpec::Comb { .. } => BoundingBox {
                min: Point::new(-2.0, 0.0),
                max: Point::new(2.0, 1.0),
            },
            DomainSpec::CantorFan { .. } => BoundingBox {
                min: Point::new(-2.0, -2.0),
                max: Point::new(2.0, 2.0),
            },
            DomainSpec::Polygon { vertices } => bbox_of(vertices),
            DomainSpec::Snowflake { iterations } => bbox_of(&koch_snowflake(*iterations)),
        }
    }

    /// Open-set membership of the base domain. One-dimensional excluded
    /// features (slits, teeth, fan rays) are handled separately through
    /// `excluded_segments`, since a point-membership test cannot see them.
    pub fn contains(&self, p: Point) -> bool {
        match self {
            DomainSpec::Disk { center, radius } => p.dist(*center) < *radius,
            DomainSpec::Rectangle { min, max } => {
                p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y
            }
            DomainSpec::SlitDisk { radius, .. } => p.dist(Point::new(0.0, 0.0)) < *radius,
            DomainSpec::Comb { .. } => p.x > -2.0 && p.x < 2.0 && p.y > 0.0 && p.y < 1.0,
            DomainSpec::CantorFan { .. } => p.dist(Point::new(0.0, 0.0)) < 2.0,
            DomainSpec::Polygon { vertices } => point_in_polygon(p, vertices),
            DomainSpec::Snowflake { iterations } => {
                point_in_polygon(p, &koch_snowflake(*iterations))
            }
        }
    }

    /// One-dimensional pieces of the boundary interior to the base shape.
    pub fn excluded_segments(&self) -> Vec<Segment> {
        match self {
            DomainSpec::SlitDisk { slits, .. } => slits.clone(),
            DomainSpec::Comb { levels } => comb_teeth(*levels),
            DomainSpec::CantorFan { depth } => fan_rays(*depth),
            _ => Vec::new(),
        }
    }

    /// Width of the thinnest channel the grid must resolve, if any.
    pub fn min_feature_width(&self) -> Option<f64> {
        match self {
            DomainSpec::Comb { levels } => Some(3f64.powi(-(*levels as i32))),
            DomainSpec::CantorFan { depth } => {
                // Angular gap between deepest-generation rays at their tips.
                let n = *depth + 1;
                let tip = 2f64.powi(-(n as i32));
                Some(TAU / 2f64.powi(n as i32) * tip)
            }
            DomainSpec::SlitDisk { radius, slits } => {
                // Nearest approach between distinct slits bounds the channel.
                let mut w: f64 = *radius;
                for (i, s) in slits.iter().enumerate() {
                    for t in slits.iter().skip(i + 1) {
                        w = w
                            .min(s.distance_to_point(t.a))
                            .min(s.distance_to_point(t.b))
                            .min(t.distance_to_point(s.a))
                            .min(t.distance_to_point(s.b));
                    }
                }
                Some(w)
            }
            _ => None,
        }
    }

    /// Crude upper bound on the boundary length, used by the refinement
    /// stability check.
    pub fn perimeter_bound(&self) -> f64 {
        match self {
            DomainSpec::Disk { radius, .. } => TAU * radius,
            DomainSpec::Rectangle { min, max } => 2.0 * ((max.x - min.x) + (max.y - min.y)),
            DomainSpec::SlitDisk { radius, slits } => {
                TAU * radius + 2.0 * slits.iter().map(|s| s.length()).sum::<f64>()
            }
            DomainSpec::Comb { levels } => {
                10.0 + 2.0 * comb_teeth(*levels).iter().map(|s| s.length()).sum::<f64>()
            }
            DomainSpec::CantorFan { depth } => {
                TAU * 2.0 + 2.0 * fan_rays(*depth).iter().map(|s| s.length()).sum::<f64>()
            }
            DomainSpec::Polygon { vertices } => polygon_perimeter(vertices),
            DomainSpec::Snowflake { iterations } => polygon_perimeter(&koch_snowflake(*iterations)),
        }
    }

    /// Euclidean distance to the full boundary (outer shape plus excluded
    /// segments). Exact for disks and rectangles, exact up to vertex
    /// rounding for polygons.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let outer = match self {
            DomainSpec::Disk { center, radius } => radius - p.dist(*center),
            DomainSpec::Rectangle { min, max } => (p.x - min.x)
                .min(max.x - p.x)
                .min(p.y - min.y)
                .min(max.y - p.y),
            DomainSpec::SlitDisk { radius, .. } => radius - p.dist(Point::new(0.0, 0.0)),
            DomainSpec::Comb { .. } => (p.x + 2.0).min(2.0 - p.x).min(p.y).min(1.0 - p.y),
            DomainSpec::CantorFan { .. } => 2.0 - p.dist(Point::new(0.0, 0.0)),
            DomainSpec::Polygon { vertices } => polygon_edge_distance(p, vertices),
            DomainSpec::Snowflake { iterations } => {
                polygon_edge_distance(p, &koch_snowflake(*iterations))
            }
        };
        let mut d = outer;
        for s in self.excluded_segments() {
            d = d.min(s.distance_to_point(p));
        }
        d
    }

    /// A representative boundary point, used by the singular formula
    /// catalog.
    pub fn sample_boundary_point(&self) -> Point {
        match self {
            DomainSpec::Disk { center, radius } => Point::new(center.x + radius, center.y),
            DomainSpec::Rectangle { min, max } => Point::new(max.x, 0.5 * (min.y + max.y)),
            DomainSpec::SlitDisk { radius, .. } => Point::new(*radius, 0.0),
            DomainSpec::Comb { .. } => Point::new(0.0, 0.0),
            DomainSpec::CantorFan { .. } => Point::new(2.0, 0.0),
            DomainSpec::Polygon { vertices } => vertices[0],
            DomainSpec::Snowflake { iterations } => koch_snowflake(*iterations)[0],
        }
    }

    /// Outline polyline of the outer boundary, mainly for plots and map
    /// pushforwards. Smooth shapes are sampled at `n` points.
    pub fn outline(&self, n: usize) -> Vec<Point> {
        match self {
            DomainSpec::Disk { center, radius } => (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                })
                .collect(),
            DomainSpec::SlitDisk { radius, .. } => (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    Point::new(radius * t.cos(), radius * t.sin())
                })
                .collect(),
            DomainSpec::CantorFan { .. } => (0..n)
                .map(|k| {
                    let t = TAU * k as f64 / n as f64;
                    Point::new(2.0 * t.cos(), 2.0 * t.sin())
                })
                .collect(),
            DomainSpec::Rectangle { min, max } => vec![
                *min,
                Point::new(max.x, min.y),
                *max,
                Point::new(min.x, max.y),
            ],
            DomainSpec::Comb { .. } => vec![
                Point::new(-2.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 1.0),
                Point::new(-2.0, 1.0),
            ],
            DomainSpec::Polygon { vertices } => vertices.clone(),
            DomainSpec::Snowflake { iterations } => koch_snowflake(*iterations),
        }
    }
}

fn bbox_of(pts: &[Point]) -> BoundingBox {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    BoundingBox { min, max }
}

fn polygon_perimeter(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n).map(|i| vertices[i].dist(vertices[(i + 1) % n])).sum()
}

fn polygon_edge_distance(p: Point, vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| Segment::new(vertices[i], vertices[(i + 1) % n]).distance_to_point(p))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Point, vertices: &[Point]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x_cross = vi.x + (p.y - vi.y) / (vj.y - vi.y) * (vj.x - vi.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Teeth of the comb domain truncated at the given tooth index.
pub fn comb_teeth(levels: u32) -> Vec<Segment> {
    let mut out = Vec::with_capacity(2 * levels as usize);
    for k in 1..=levels as i32 {
        let y = 3f64.powi(-k);
        out.push(Segment::new(Point::new(-1.0, y), Point::new(2.0, y)));
        let y2 = 2.0 * 3f64.powi(-k);
        out.push(Segment::new(Point::new(-2.0, y2), Point::new(1.0, y2)));
    }
    out
}

/// Radial slits of the Cantor fan: generations n = 1..=depth+1, one ray of
/// length 2^-n at every angle 2*pi*p/2^n with p odd, 0 < p < 2^n.
pub fn fan_rays(depth: u32) -> Vec<Segment> {
    let mut out = Vec::new();
    for n in 1..=(depth + 1) as i32 {
        let len = 2f64.powi(-n);
        let denom = 2u64.pow(n as u32);
        let mut p = 1u64;
        while p < denom {
            let theta = TAU * p as f64 / denom as f64;
            out.push(Segment::new(
                Point::new(0.0, 0.0),
                Point::new(len * theta.cos(), len * theta.sin()),
            ));
            p += 2;
        }
    }
    out
}

/// Koch snowflake with the given number of subdivision iterations,
/// counter-clockwise, circumradius 1 around the origin.
pub fn koch_snowflake(iterations: u32) -> Vec<Point> {
    let mut pts: Vec<Point> = (0..3)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_2 + TAU * k as f64 / 3.0;
            Point::new(t.cos(), t.sin())
        })
        .collect();
    for _ in 0..iterations {
        let n = pts.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            let dx = (b.x - a.x) / 3.0;
            let dy = (b.y - a.y) / 3.0;
            let p1 = Point::new(a.x + dx, a.y + dy);
            let p2 = Point::new(a.x + 2.0 * dx, a.y + 2.0 * dy);
            // Outward bump: rotate the middle third by -60 degrees around p1
            // (the polygon is counter-clockwise, outward is to the right).
            let c60 = 0.5;
            let s60 = -(3f64.sqrt() / 2.0);
            let tip = Point::new(
                p1.x + dx * c60 - dy * s60,
                p1.y + dx * s60 + dy * c60,
            );
            next.push(a);
            next.push(p1);
            next.push(tip);
            next.push(p2);
        }
        pts = next;
    }
    pts
}

/// Role of a condenser plate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateRole {
    /// A continuum compactly inside the domain.
    InnerContinuum,
    /// The whole Euclidean boundary of the domain.
    BoundaryPlate,
}

/// One geometric primitive of a plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PlatePrimitive {
    Segment { a: Point, b: Point },
    Arc { center: Point, radius: f64, start: f64, end: f64 },
    Disk { center: Point, radius: f64 },
}

impl PlatePrimitive {
    pub fn segment(ax: f64, ay: f64, bx: f64, by: f64) -> Self {
        PlatePrimitive::Segment {
            a: Point::new(ax, ay),
            b: Point::new(bx, by),
        }
    }

    pub fn circle(center: Point, radius: f64) -> Self {
        PlatePrimitive::Arc {
            center,
            radius,
            start: 0.0,
            end: TAU,
        }
    }

    /// Polyline approximation of curved primitives; chord deviation stays
    /// below `dev`.
    pub fn approx_segments(&self, dev: f64) -> Vec<Segment> {
        match *self {
            PlatePrimitive::Segment { a, b } => vec![Segment::new(a, b)],
            PlatePrimitive::Arc {
                center,
                radius,
                start,
                end,
            } => {
                let span = (end - start).abs().min(TAU);
                // sagitta of a chord of angle dt is r(1-cos(dt/2)) <= dev
                let dt_max = 2.0 * (1.0 - dev / radius).clamp(-1.0, 1.0).acos().max(1e-3);
                let steps = (span / dt_max).ceil().max(4.0) as usize;
                (0..steps)
                    .map(|k| {
                        let t0 = start + span * k as f64 / steps as f64;
                        let t1 = start + span * (k + 1) as f64 / steps as f64;
                        Segment::new(
                            Point::new(center.x + radius * t0.cos(), center.y + radius * t0.sin()),
                            Point::new(center.x + radius * t1.cos(), center.y + radius * t1.sin()),
                        )
                    })
                    .collect()
            }
            PlatePrimitive::Disk { .. } => Vec::new(),
        }
    }
}

/// A condenser plate: geometry plus role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateSpec {
    pub role: PlateRole,
    #[serde(default)]
    pub geometry: Vec<PlatePrimitive>,
}

impl PlateSpec {
    pub fn inner(geometry: Vec<PlatePrimitive>) -> Self {
        PlateSpec {
            role: PlateRole::InnerContinuum,
            geometry,
        }
    }

    pub fn boundary() -> Self {
        PlateSpec {
            role: PlateRole::BoundaryPlate,
            geometry: Vec::new(),
        }
    }

    pub fn inner_disk(center: Point, radius: f64) -> Self {
        Self::inner(vec![PlatePrimitive::Disk { center, radius }])
    }

    pub fn inner_segment(a: Point, b: Point) -> Self {
        Self::inner(vec![PlatePrimitive::Segment { a, b }])
    }

    pub fn validate(&self) -> Result<()> {
        match self.role {
            PlateRole::BoundaryPlate => Ok(()),
            PlateRole::InnerContinuum => {
                if self.geometry.is_empty() {
                    Err(Error::invalid("plate", "inner continuum without geometry"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comb_has_2n_teeth_and_3_pow_minus_k_channels() {
        for levels in 1..=4u32 {
            let teeth = comb_teeth(levels);
            assert_eq!(teeth.len(), 2 * levels as usize);
        }
        // Channel between y = 3^-k and y = 2*3^-k has width 3^-k.
        let teeth = comb_teeth(3);
        let mut ys: Vec<f64> = teeth.iter().map(|s| s.a.y).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 1..=3i32 {
            let lo = 3f64.powi(-k);
            let hi = 2.0 * 3f64.powi(-k);
            assert!(ys.iter().any(|y| (y - lo).abs() < 1e-14));
            assert!(ys.iter().any(|y| (y - hi).abs() < 1e-14));
        }
    }

    #[test]
    fn fan_rays_generations() {
        // depth 1 -> generations 1..=2: angles pi, pi/2, 3pi/2.
        let rays = fan_rays(1);
        assert_eq!(rays.len(), 3);
        // depth 2 adds generation 3: four more rays at odd multiples of pi/4.
        let rays = fan_rays(2);
        assert_eq!(rays.len(), 7);
        for r in &rays {
            assert!(r.a.dist(Point::new(0.0, 0.0)) < 1e-15);
        }
    }

    #[test]
    fn koch_vertex_count() {
        assert_eq!(koch_snowflake(0).len(), 3);
        assert_eq!(koch_snowflake(1).len(), 12);
        assert_eq!(koch_snowflake(3).len(), 192);
    }

    #[test]
    fn snowflake_contains_origin_not_far_points() {
        let flake = DomainSpec::Snowflake { iterations: 2 };
        assert!(flake.contains(Point::new(0.0, 0.0)));
        assert!(!flake.contains(Point::new(2.0, 2.0)));
    }

    #[test]
    fn segment_square_intersection_cases() {
        let s = Segment::new(Point::new(0.0, 0.5), Point::new(1.0, 0.5));
        assert!(s.intersects_square(0.5, 0.5, 0.1));
        assert!(!s.intersects_square(0.5, 0.8, 0.1));
        // touching the square edge counts
        assert!(s.intersects_square(0.5, 0.6, 0.1));
    }

    #[test]
    fn polyline_invariants() {
        assert!(Polyline::new(vec![Point::new(0.0, 0.0)]).is_err());
        assert!(Polyline::new(vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0)]).is_err());
        let p = Polyline::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).unwrap();
        assert!((p.length() - 1.0).abs() < 1e-15);
        let r = p.resample(5);
        assert_eq!(r.vertices().len(), 5);
        assert_eq!(r.first(), p.first());
        assert_eq!(r.last(), p.last());
    }
}
