//! Explicit conformal and quasiconformal test maps with distortion
//! bookkeeping: capacity quasi-invariance, metric quasi-isometry, and the
//! Ahlfors three-point quasicircle test.

use crate::capacity::{condenser_capacity, Condenser};
use crate::capmetric::{rho_many, MetricContext};
use crate::error::{Error, Result};
use crate::geometry::{
    segments_intersect, DomainSpec, PlatePrimitive, PlateRole, PlateSpec, Point, Polyline, Region,
    Segment, TAU,
};

/// Minimal complex arithmetic for the map catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    pub fn new(re: f64, im: f64) -> Self {
        C { re, im }
    }

    pub fn from_point(p: Point) -> Self {
        C { re: p.x, im: p.y }
    }

    pub fn to_point(self) -> Point {
        Point::new(self.re, self.im)
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> C {
        C::new(self.re, -self.im)
    }

    pub fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }

    pub fn mul(self, o: C) -> C {
        C::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }

    pub fn div(self, o: C) -> C {
        let d = o.re * o.re + o.im * o.im;
        C::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }

    /// Principal square root.
    pub fn sqrt(self) -> C {
        let r = self.abs();
        let re = ((r + self.re) / 2.0).sqrt();
        let im_mag = ((r - self.re) / 2.0).max(0.0).sqrt();
        C::new(re, if self.im >= 0.0 { im_mag } else { -im_mag })
    }

    pub fn powf(self, alpha: f64) -> C {
        let r = self.abs();
        let theta = self.im.atan2(self.re);
        let rr = r.powf(alpha);
        let tt = alpha * theta;
        C::new(rr * tt.cos(), rr * tt.sin())
    }
}

/// The shipped analytic/affine map catalog. Conformal kinds carry
/// distortion 1; the affine stretch carries its eccentricity.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticMap {
    Mobius { a: C, b: C, c: C, d: C },
    /// z -> z^alpha on the open right half-plane, 0 < alpha <= 2.
    Power { alpha: f64 },
    /// (x, y) -> (lambda x, y), lambda >= 1.
    AffineStretch { lambda: f64 },
    /// z -> z + 1/z on |z| > 1.
    Joukowski,
}

impl AnalyticMap {
    pub fn identity() -> Self {
        AnalyticMap::Mobius {
            a: C::new(1.0, 0.0),
            b: C::new(0.0, 0.0),
            c: C::new(0.0, 0.0),
            d: C::new(1.0, 0.0),
        }
    }

    /// Unit-disk automorphism z -> (z - a) / (1 - conj(a) z).
    pub fn disk_automorphism(a: C) -> Self {
        AnalyticMap::Mobius {
            a: C::new(1.0, 0.0),
            b: C::new(-a.re, -a.im),
            c: C::new(-a.re, a.im),
            d: C::new(1.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticMap::Mobius { a, b, c, d } => {
                let det = a.mul(*d).sub(b.mul(*c));
                if det.abs() < 1e-14 {
                    return Err(Error::invalid("map", "mobius needs ad - bc != 0"));
                }
            }
            AnalyticMap::Power { alpha } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(Error::invalid("map", "power needs alpha in (0, 2]"));
                }
            }
            AnalyticMap::AffineStretch { lambda } => {
                if !(*lambda >= 1.0) {
                    return Err(Error::invalid("map", "stretch needs lambda >= 1"));
                }
            }
            AnalyticMap::Joukowski => {}
        }
        Ok(())
    }

    /// Quasiconformality constant of the map on its source domain.
    pub fn distortion(&self) -> f64 {
        match self {
            AnalyticMap::AffineStretch { lambda } => *lambda,
            _ => 1.0,
        }
    }

    pub fn source_contains(&self, z: C) -> bool {
        match self {
            AnalyticMap::Mobius { c, d, .. } => c.mul(z).add(*d).abs() > 1e-12,
            AnalyticMap::Power { .. } => z.re > 0.0,
            AnalyticMap::AffineStretch { .. } => true,
            AnalyticMap::Joukowski => z.abs() > 1.0,
        }
    }

    pub fn apply(&self, z: C) -> Result<C> {
        if !self.source_contains(z) {
            return Err(Error::OutsideSource);
        }
        Ok(match self {
            AnalyticMap::Mobius { a, b, c, d } => a.mul(z).add(*b).div(c.mul(z).add(*d)),
            AnalyticMap::Power { alpha } => z.powf(*alpha),
            AnalyticMap::AffineStretch { lambda } => C::new(lambda * z.re, z.im),
            AnalyticMap::Joukowski => z.add(C::new(1.0, 0.0).div(z)),
        })
    }

    pub fn inverse_apply(&self, w: C) -> Result<C> {
        match self {
            AnalyticMap::Mobius { a, b, c, d } => {
                let denom = C::new(-c.re, -c.im).mul(w).add(*a);
                if denom.abs() < 1e-14 {
                    return Err(Error::OutsideSource);
                }
                Ok(d.mul(w).sub(*b).div(denom))
            }
            AnalyticMap::Power { alpha } => Ok(w.powf(1.0 / alpha)),
            AnalyticMap::AffineStretch { lambda } => Ok(C::new(w.re / lambda, w.im)),
            AnalyticMap::Joukowski => {
                let disc = w.mul(w).sub(C::new(4.0, 0.0)).sqrt();
                let z1 = w.add(disc).div(C::new(2.0, 0.0));
                let z2 = w.sub(disc).div(C::new(2.0, 0.0));
                Ok(if z1.abs() >= z2.abs() { z1 } else { z2 })
            }
        }
    }

    pub fn apply_point(&self, p: Point) -> Result<Point> {
        self.apply(C::from_point(p)).map(C::to_point)
    }
}

/// Maps a polyline, subdividing segments until the image deviates from
/// the chordal interpolation by less than `dev`.
pub fn pushforward_polyline(
    map: &AnalyticMap,
    poly: &Polyline,
    dev: f64,
) -> Result<Polyline> {
    let mut pts = vec![map.apply_point(poly.first())?];
    for seg in poly.segments() {
        let mut sub = Vec::new();
        refine_segment(map, seg.a, seg.b, dev, 0, &mut sub)?;
        for p in sub {
            if *pts.last().unwrap() != p {
                pts.push(p);
            }
        }
    }
    Polyline::new(pts)
}

fn refine_segment(
    map: &AnalyticMap,
    a: Point,
    b: Point,
    dev: f64,
    depth: u32,
    out: &mut Vec<Point>,
) -> Result<()> {
    let fa = map.apply_point(a)?;
    let fb = map.apply_point(b)?;
    let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    let fmid = map.apply_point(mid)?;
    let chord_mid = Point::new(0.5 * (fa.x + fb.x), 0.5 * (fa.y + fb.y));
    if depth >= 12 || fmid.dist(chord_mid) < dev {
        out.push(fb);
        return Ok(());
    }
    refine_segment(map, a, mid, dev, depth + 1, out)?;
    refine_segment(map, mid, b, dev, depth + 1, out)
}

/// Circle through three points; the exact image of a circle under a
/// Mobius map is recovered this way.
fn circumcircle(p1: Point, p2: Point, p3: Point) -> Option<(Point, f64)> {
    let d = 2.0 * (p1.x * (p2.y - p3.y) + p2.x * (p3.y - p1.y) + p3.x * (p1.y - p2.y));
    if d.abs() < 1e-14 {
        return None;
    }
    let s1 = p1.x * p1.x + p1.y * p1.y;
    let s2 = p2.x * p2.x + p2.y * p2.y;
    let s3 = p3.x * p3.x + p3.y * p3.y;
    let ux = (s1 * (p2.y - p3.y) + s2 * (p3.y - p1.y) + s3 * (p1.y - p2.y)) / d;
    let uy = (s1 * (p3.x - p2.x) + s2 * (p1.x - p3.x) + s3 * (p2.x - p1.x)) / d;
    let center = Point::new(ux, uy);
    Some((center, center.dist(p1)))
}

/// Maps a plate primitive. Disks map exactly to disks under Mobius maps;
/// under other maps (and for arcs/segments) the image is a refined chain
/// of segments, which is capacitarily equivalent for plate use.
pub fn pushforward_plate(map: &AnalyticMap, plate: &PlateSpec, dev: f64) -> Result<PlateSpec> {
    if plate.role == PlateRole::BoundaryPlate {
        return Ok(plate.clone());
    }
    let mut geometry = Vec::new();
    for prim in &plate.geometry {
        match prim {
            PlatePrimitive::Disk { center, radius } => {
                if let AnalyticMap::Mobius { .. } = map {
                    let ps: Vec<Point> = [0.0, TAU / 3.0, 2.0 * TAU / 3.0]
                        .iter()
                        .map(|t| {
                            map.apply_point(Point::new(
                                center.x + radius * t.cos(),
                                center.y + radius * t.sin(),
                            ))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let (c, r) = circumcircle(ps[0], ps[1], ps[2])
                        .ok_or_else(|| Error::invalid("map", "degenerate disk image"))?;
                    geometry.push(PlatePrimitive::Disk {
                        center: c,
                        radius: r,
                    });
                } else {
                    // dense boundary ring
                    let n = 96;
                    for k in 0..n {
                        let t0 = TAU * k as f64 / n as f64;
                        let t1 = TAU * (k + 1) as f64 / n as f64;
                        let a = map.apply_point(Point::new(
                            center.x + radius * t0.cos(),
                            center.y + radius * t0.sin(),
                        ))?;
                        let b = map.apply_point(Point::new(
                            center.x + radius * t1.cos(),
                            center.y + radius * t1.sin(),
                        ))?;
                        geometry.push(PlatePrimitive::Segment { a, b });
                    }
                }
            }
            PlatePrimitive::Segment { a, b } => {
                let img = pushforward_polyline(
                    map,
                    &Polyline::new(vec![*a, *b])?,
                    dev,
                )?;
                for s in img.segments() {
                    geometry.push(PlatePrimitive::Segment { a: s.a, b: s.b });
                }
            }
            PlatePrimitive::Arc { .. } => {
                for seg in prim.approx_segments(dev / 2.0) {
                    let img = pushforward_polyline(
                        map,
                        &Polyline::new(vec![seg.a, seg.b])?,
                        dev,
                    )?;
                    for s in img.segments() {
                        geometry.push(PlatePrimitive::Segment { a: s.a, b: s.b });
                    }
                }
            }
        }
    }
    Ok(PlateSpec::inner(geometry))
}

/// Maps a domain to the polygon traced by its boundary image.
pub fn pushforward_domain(map: &AnalyticMap, domain: &DomainSpec, dev: f64) -> Result<DomainSpec> {
    let outline = domain.outline(256);
    let mut closed = outline.clone();
    closed.push(outline[0]);
    let img = pushforward_polyline(map, &Polyline::new(closed)?, dev)?;
    let mut vertices = img.vertices().to_vec();
    if vertices.len() >= 2 && vertices.first() == vertices.last() {
        vertices.pop();
    }
    Ok(DomainSpec::Polygon { vertices })
}

/// Maps a whole condenser.
pub fn pushforward_condenser(
    map: &AnalyticMap,
    condenser: &Condenser,
    dev: f64,
) -> Result<Condenser> {
    Ok(Condenser {
        domain: pushforward_domain(map, &condenser.domain, dev)?,
        plate0: pushforward_plate(map, &condenser.plate0, dev)?,
        plate1: pushforward_plate(map, &condenser.plate1, dev)?,
    })
}

/// Maps the metric region V; exact for Mobius-of-disk and stretch-of-rect.
pub fn pushforward_region(map: &AnalyticMap, region: &Region) -> Result<Region> {
    match (map, region) {
        (AnalyticMap::Mobius { .. }, Region::Disk { center, radius }) => {
            let ps: Vec<Point> = [0.0, TAU / 3.0, 2.0 * TAU / 3.0]
                .iter()
                .map(|t| {
                    map.apply_point(Point::new(
                        center.x + radius * t.cos(),
                        center.y + radius * t.sin(),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let (c, r) = circumcircle(ps[0], ps[1], ps[2])
                .ok_or_else(|| Error::invalid("map", "degenerate region image"))?;
            Ok(Region::Disk {
                center: c,
                radius: r,
            })
        }
        (AnalyticMap::AffineStretch { lambda }, Region::Rect { min, max }) => Ok(Region::Rect {
            min: Point::new(lambda * min.x, min.y),
            max: Point::new(lambda * max.x, max.y),
        }),
        (AnalyticMap::AffineStretch { lambda }, Region::Disk { .. }) => Err(Error::invalid(
            "map",
            format!("stretch by {lambda} turns disks into ellipses; use a rectangle V"),
        )),
        _ => Err(Error::invalid(
            "map",
            "region pushforward only supported for mobius disks and stretched rectangles",
        )),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InvarianceReport {
    pub cp_source: f64,
    pub cp_image: f64,
    pub ratio: f64,
    pub distortion: f64,
}

/// Capacity ratio cp(image)/cp(source) of a pushed-forward condenser;
/// quasi-invariance bounds it by the squared distortion.
pub fn invariance_check(
    map: &AnalyticMap,
    condenser: &Condenser,
    h: f64,
    refine: u32,
) -> Result<InvarianceReport> {
    map.validate()?;
    let (src, _) = condenser_capacity(condenser, h, refine)?;
    let image = pushforward_condenser(map, condenser, h / 4.0)?;
    let (img, _) = condenser_capacity(&image, h, refine)?;
    Ok(InvarianceReport {
        cp_source: src.value,
        cp_image: img.value,
        ratio: img.value / src.value,
        distortion: map.distortion(),
    })
}

#[derive(Debug, Clone)]
pub struct QuasiIsometryReport {
    pub k: f64,
    pub used_pairs: usize,
    pub excluded_pairs: usize,
}

/// Empirical bi-Lipschitz constant of the map between the capacitary
/// metrics of source and image configurations.
pub fn quasi_isometry_check(
    map: &AnalyticMap,
    pairs: &[(Point, Point)],
    ctx_source: &MetricContext,
    ctx_image: &MetricContext,
) -> Result<QuasiIsometryReport> {
    let src = rho_many(ctx_source, pairs)?;
    let mapped: Vec<(Point, Point)> = pairs
        .iter()
        .map(|&(x, y)| Ok((map.apply_point(x)?, map.apply_point(y)?)))
        .collect::<Result<Vec<_>>>()?;
    let img = rho_many(ctx_image, &mapped)?;
    let floor = ctx_source.noise_floor.max(ctx_image.noise_floor);
    let mut k = 1.0f64;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (s, i) in src.iter().zip(&img) {
        if s.value <= floor || i.value <= floor {
            excluded += 1;
            continue;
        }
        used += 1;
        k = k.max(s.value / i.value).max(i.value / s.value);
    }
    if used == 0 {
        return Err(Error::invalid(
            "quasi-isometry",
            "all pairs fell below the noise floor",
        ));
    }
    Ok(QuasiIsometryReport {
        k,
        used_pairs: used,
        excluded_pairs: excluded,
    })
}

/// Ahlfors three-point quality of a closed polygon.
#[derive(Debug, Clone, Copy)]
pub struct CurveQualityReport {
    /// max over sampled pairs of diam(smaller arc) / chord; the smaller
    /// arc is the one of smaller diameter, ties toward fewer vertices.
    /// Always >= 1, equal to 1 on circles, bounded on quasicircles.
    pub ahlfors_constant: f64,
    pub samples: usize,
}

/// Evaluates the three-point condition on a simple closed polygon,
/// resampled to `samples` points by arclength.
pub fn ahlfors_constant(polygon: &[Point], samples: usize) -> Result<CurveQualityReport> {
    let n = polygon.len();
    if n < 3 {
        return Err(Error::invalid("polygon", "needs at least 3 vertices"));
    }
    // simplicity check on the input polygon
    for i in 0..n {
        let si = Segment::new(polygon[i], polygon[(i + 1) % n]);
        for j in i + 1..n {
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let sj = Segment::new(polygon[j], polygon[(j + 1) % n]);
            if segments_intersect(si.a, si.b, sj.a, sj.b) {
                return Err(Error::SelfIntersecting);
            }
        }
    }
    // arclength resample of the closed curve
    let m = samples.max(8);
    let mut closed = polygon.to_vec();
    closed.push(polygon[0]);
    let total: f64 = closed.windows(2).map(|w| w[0].dist(w[1])).sum();
    let mut pts = Vec::with_capacity(m);
    let mut seg = 0usize;
    let mut acc = 0.0f64;
    for k in 0..m {
        let target = total * k as f64 / m as f64;
        while seg + 1 < closed.len() - 1 && acc + closed[seg].dist(closed[seg + 1]) < target {
            acc += closed[seg].dist(closed[seg + 1]);
            seg += 1;
        }
        let l = closed[seg].dist(closed[seg + 1]);
        let t = if l > 0.0 { (target - acc) / l } else { 0.0 };
        pts.push(Point::new(
            closed[seg].x + t * (closed[seg + 1].x - closed[seg].x),
            closed[seg].y + t * (closed[seg + 1].y - closed[seg].y),
        ));
    }
    let arc_diameter = |i: usize, j: usize| -> f64 {
        let mut d = 0.0f64;
        let mut u = i;
        while u != j {
            let mut v = (u + 1) % m;
            loop {
                d = d.max(pts[u].dist(pts[v]));
                if v == j {
                    break;
                }
                v = (v + 1) % m;
            }
            u = (u + 1) % m;
        }
        d
    };
    let mut worst = 1.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let chord = pts[i].dist(pts[j]);
            if chord < 1e-12 {
                continue;
            }
            let d1 = arc_diameter(i, j);
            let d2 = arc_diameter(j, i);
            let count1 = j - i;
            let count2 = m - count1;
            let smaller_diam = if d1 < d2 || (d1 == d2 && count1 <= count2) {
                d1
            } else {
                d2
            };
            worst = worst.max(smaller_diam / chord);
        }
    }
    Ok(CurveQualityReport {
        ahlfors_constant: worst,
        samples: m,
    })
}

/// Empirical distortion of a map (or composition) at a point, by probing
/// directional stretches on a small circle.
pub fn empirical_distortion(maps: &[AnalyticMap], z: Point, radius: f64) -> Result<f64> {
    let apply_chain = |p: Point| -> Result<Point> {
        let mut q = p;
        for m in maps {
            q = m.apply_point(q)?;
        }
        Ok(q)
    };
    let fz = apply_chain(z)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for k in 0..32 {
        let t = TAU * k as f64 / 32.0;
        let p = Point::new(z.x + radius * t.cos(), z.y + radius * t.sin());
        let fp = apply_chain(p)?;
        let stretch = fp.dist(fz) / radius;
        lo = lo.min(stretch);
        hi = hi.max(stretch);
    }
    if lo <= 0.0 {
        return Err(Error::invalid("distortion probe", "degenerate stretch"));
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_leaves_objects_unchanged() {
        let id = AnalyticMap::identity();
        let p = Point::new(0.3, -0.7);
        assert!(id.apply_point(p).unwrap().dist(p) < 1e-15);
        assert_eq!(id.distortion(), 1.0);
    }

    #[test]
    fn disk_automorphism_preserves_unit_circle() {
        let m = AnalyticMap::disk_automorphism(C::new(0.3, 0.0));
        for k in 0..16 {
            let t = TAU * k as f64 / 16.0;
            let z = Point::new(t.cos(), t.sin());
            let w = m.apply_point(z).unwrap();
            assert!((w.dist(Point::new(0.0, 0.0)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_stretch_disk_to_ellipse() {
        let m = AnalyticMap::AffineStretch { lambda: 2.0 };
        for k in 0..16 {
            let t = TAU * k as f64 / 16.0;
            let z = Point::new(t.cos(), t.sin());
            let w = m.apply_point(z).unwrap();
            let e = (w.x / 2.0).powi(2) + w.y.powi(2);
            assert!((e - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.distortion(), 2.0);
    }

    #[test]
    fn round_trips_within_1e12() {
        let maps = [
            AnalyticMap::disk_automorphism(C::new(0.3, -0.2)),
            AnalyticMap::Power { alpha: 1.5 },
            AnalyticMap::AffineStretch { lambda: 2.0 },
            AnalyticMap::Joukowski,
        ];
        let pts = [
            Point::new(0.4, 0.1),
            Point::new(1.3, 0.9),
            Point::new(2.0, -0.4),
        ];
        for m in &maps {
            for p in pts {
                let z = C::from_point(p);
                if !m.source_contains(z) {
                    continue;
                }
                let w = m.apply(z).unwrap();
                let back = m.inverse_apply(w).unwrap();
                assert!(
                    back.sub(z).abs() < 1e-12,
                    "{m:?} round trip {p:?} -> {back:?}"
                );
            }
        }
    }

    #[test]
    fn outside_source_rejected() {
        let j = AnalyticMap::Joukowski;
        match j.apply(C::new(0.5, 0.0)) {
            Err(Error::OutsideSource) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mobius_disk_image_is_exact_disk() {
        let m = AnalyticMap::disk_automorphism(C::new(0.3, 0.0));
        let plate = PlateSpec::inner_disk(Point::new(0.2, 0.1), 0.15);
        let img = pushforward_plate(&m, &plate, 1e-3).unwrap();
        assert_eq!(img.geometry.len(), 1);
        let PlatePrimitive::Disk { center, radius } = img.geometry[0] else {
            panic!("expected a disk image");
        };
        // every mapped boundary point lies on the image circle
        for k in 0..24 {
            let t = TAU * k as f64 / 24.0;
            let z = Point::new(0.2 + 0.15 * t.cos(), 0.1 + 0.15 * t.sin());
            let w = m.apply_point(z).unwrap();
            assert!((w.dist(center) - radius).abs() < 1e-10);
        }
    }

    #[test]
    fn composition_distortion_bounded_by_product() {
        let chains: Vec<Vec<AnalyticMap>> = vec![
            vec![
                AnalyticMap::AffineStretch { lambda: 2.0 },
                AnalyticMap::disk_automorphism(C::new(0.2, 0.1)),
            ],
            vec![
                AnalyticMap::AffineStretch { lambda: 1.5 },
                AnalyticMap::AffineStretch { lambda: 2.0 },
            ],
        ];
        for chain in &chains {
            let bound: f64 = chain.iter().map(|m| m.distortion()).product();
            for p in [Point::new(0.2, 0.1), Point::new(-0.1, 0.3)] {
                let k = empirical_distortion(chain, p, 1e-5).unwrap();
                assert!(
                    k <= bound * 1.01,
                    "empirical {k} exceeds bound {bound} at {p:?}"
                );
            }
        }
    }

    #[test]
    fn conformal_maps_report_unit_distortion() {
        for m in [
            AnalyticMap::identity(),
            AnalyticMap::Power { alpha: 0.8 },
            AnalyticMap::Joukowski,
        ] {
            assert_eq!(m.distortion(), 1.0);
        }
    }

    #[test]
    fn ahlfors_circle_below_bound() {
        let circle: Vec<Point> = (0..64)
            .map(|k| {
                let t = TAU * k as f64 / 64.0;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        let rep = ahlfors_constant(&circle, 64).unwrap();
        assert!(
            rep.ahlfors_constant <= std::f64::consts::FRAC_PI_2 + 0.05,
            "constant {}",
            rep.ahlfors_constant
        );
        // circle arcs have diameter equal to their chord up to sampling
        assert!(rep.ahlfors_constant >= 1.0 - 1e-12);
        assert!(rep.ahlfors_constant <= 1.0 + 1e-9);
    }

    #[test]
    fn ahlfors_snowflake_stable_across_iterations() {
        let k2 = ahlfors_constant(&crate::geometry::koch_snowflake(2), 96)
            .unwrap()
            .ahlfors_constant;
        let k3 = ahlfors_constant(&crate::geometry::koch_snowflake(3), 96)
            .unwrap()
            .ahlfors_constant;
        let spread = (k3 / k2).max(k2 / k3);
        assert!(spread <= 1.10, "k2 {k2} k3 {k3}");
    }

    #[test]
    fn ahlfors_cusp_grows_under_refinement() {
        let cusp = |w: f64| -> Vec<Point> {
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.5 + w, 1.0),
                Point::new(0.5, 0.2),
                Point::new(0.5 - w, 1.0),
                Point::new(0.0, 1.0),
            ]
        };
        let mut prev = 0.0;
        for w in [0.2, 0.1, 0.05] {
            let k = ahlfors_constant(&cusp(w), 128).unwrap().ahlfors_constant;
            assert!(k > prev, "w {w}: {k} vs {prev}");
            prev = k;
        }
    }

    #[test]
    fn quasi_isometry_of_identity_is_one() {
        let mut cfg = crate::capmetric::MetricConfig::new(
            DomainSpec::Disk {
                center: Point::new(0.0, 0.0),
                radius: 1.0,
            },
            PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.15),
            Region::Disk {
                center: Point::new(0.0, 0.0),
                radius: 0.3,
            },
            1.0 / 32.0,
        );
        cfg.seed = 3;
        let ctx = crate::capmetric::MetricContext::new(cfg).unwrap();
        let pairs = [
            (Point::new(0.6, 0.0), Point::new(-0.5, 0.3)),
            (Point::new(0.2, 0.55), Point::new(-0.2, -0.6)),
        ];
        let rep =
            quasi_isometry_check(&AnalyticMap::identity(), &pairs, &ctx, &ctx).unwrap();
        assert_eq!(rep.k, 1.0);
        assert_eq!(rep.used_pairs, 2);
    }

    #[test]
    fn self_intersecting_polygon_rejected() {
        let bow = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        match ahlfors_constant(&bow, 32) {
            Err(Error::SelfIntersecting) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
