//! Shipped test-suite configurations: the disk, slit-disk, comb and
//! Cantor-fan boundary suites, the annulus condenser family, and the
//! metric configurations the batch tools and the verification suite
//! share. Verdict tolerances and capacitary-disk radii are frozen from
//! refined reference runs at the shipped resolutions.

use crate::boundary::{
    cauchy_profile, comb_collapse_test, realization, same_element, BoundaryElementEstimate,
    BoundarySequence, CauchyProfile, RealizationEstimate, Verdict,
};
use crate::capacity::Condenser;
use crate::capmetric::{MetricBudget, MetricConfig, MetricContext};
use crate::error::Result;
use crate::geometry::{CellLabel, DomainSpec, PlateSpec, Point, Region, Segment, TAU};

pub const DISK_H: f64 = 1.0 / 64.0;
pub const DISK_TOL_DISTINCT: f64 = 0.35;
pub const DISK_EPS_LIST: [f64; 3] = [0.95, 0.87, 0.80];
pub const SLIT_H: f64 = 1.0 / 64.0;
pub const SLIT_TOL: f64 = 0.40;
pub const COMB_H: f64 = 1.0 / 81.0;
pub const COMB_EPS_LIST: [f64; 3] = [0.20, 0.15, 0.12];
pub const FAN_H: f64 = 1.0 / 64.0;
pub const FAN_TOL: f64 = 0.30;
pub const FAN_EPS_LIST: [f64; 3] = [1.05, 0.95, 0.85];
pub const FAN_RADII: [f64; 4] = [0.115, 0.095, 0.078, 0.062];

/// Annulus condenser with radii ratio e: plate0 is the circle of radius
/// R = r e (thickened by rasterization), plate1 the closed disk of
/// radius r, domain disk(0, 1.2 R). Continuum capacity 2 pi.
pub fn annulus_condenser(r: f64) -> Condenser {
    let big_r = r * std::f64::consts::E;
    Condenser {
        domain: DomainSpec::Disk {
            center: Point::new(0.0, 0.0),
            radius: 1.2 * big_r,
        },
        plate0: PlateSpec::inner(vec![crate::geometry::PlatePrimitive::circle(
            Point::new(0.0, 0.0),
            big_r,
        )]),
        plate1: PlateSpec::inner_disk(Point::new(0.0, 0.0), r),
    }
}

/// Reference metric pair on the unit disk: F = disk(0, 0.15),
/// V = disk(0, 0.3).
pub fn disk_metric_config(h: f64, seed: u64) -> MetricConfig {
    let mut c = MetricConfig::new(
        DomainSpec::Disk {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        },
        PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.15),
        Region::Disk {
            center: Point::new(0.0, 0.0),
            radius: 0.3,
        },
        h,
    );
    c.seed = seed;
    c
}

/// Second reference pair on the unit disk, disjoint from the first:
/// F = disk((0.45, 0.35), 0.1), V = disk((0.45, 0.35), 0.22).
pub fn disk_metric_config_alt(h: f64, seed: u64) -> MetricConfig {
    let mut c = MetricConfig::new(
        DomainSpec::Disk {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        },
        PlateSpec::inner_disk(Point::new(0.45, 0.35), 0.1),
        Region::Disk {
            center: Point::new(0.45, 0.35),
            radius: 0.22,
        },
        h,
    );
    c.seed = seed;
    c
}

/// Off-center pair used by the asymptotic-behavior table so the origin
/// stays outside V: F = disk((-0.55, 0), 0.15), V = disk((-0.55, 0), 0.3).
pub fn disk_metric_config_offset(h: f64, seed: u64) -> MetricConfig {
    let mut c = MetricConfig::new(
        DomainSpec::Disk {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        },
        PlateSpec::inner_disk(Point::new(-0.55, 0.0), 0.15),
        Region::Disk {
            center: Point::new(-0.55, 0.0),
            radius: 0.3,
        },
        h,
    );
    c.seed = seed;
    c
}

/// Comb metric pair in the open top strip, search on the fine grid only
/// (the comb teeth sit at the 3-cell resolution limit).
pub fn comb_metric_config(levels: u32, seed: u64) -> MetricConfig {
    let mut c = MetricConfig::new(
        DomainSpec::Comb { levels },
        PlateSpec::inner_disk(Point::new(0.0, 0.85), 0.06),
        Region::Disk {
            center: Point::new(0.0, 0.85),
            radius: 0.12,
        },
        COMB_H,
    );
    c.coarse_factor = 1;
    c.budget = MetricBudget {
        curve_vertices: 17,
        perturb_iters: 16,
        max_accepts: 8,
    };
    c.seed = seed;
    c
}

/// Fan metric pair away from the slit fan.
pub fn fan_metric_config(seed: u64) -> MetricConfig {
    let mut c = MetricConfig::new(
        DomainSpec::CantorFan { depth: 2 },
        PlateSpec::inner_disk(Point::new(1.2, 0.0), 0.15),
        Region::Disk {
            center: Point::new(1.2, 0.0),
            radius: 0.3,
        },
        FAN_H,
    );
    c.budget = MetricBudget {
        curve_vertices: 17,
        perturb_iters: 24,
        max_accepts: 10,
    };
    c.seed = seed;
    c
}

/// Slit-disk metric pair on the left of the slit.
pub fn slit_metric_config(seed: u64) -> MetricConfig {
    let mut c = MetricConfig::new(
        DomainSpec::SlitDisk {
            radius: 1.0,
            slits: vec![Segment::new(Point::new(0.0, 0.0), Point::new(1.0, 0.0))],
        },
        PlateSpec::inner_disk(Point::new(-0.5, 0.0), 0.12),
        Region::Disk {
            center: Point::new(-0.5, 0.0),
            radius: 0.24,
        },
        SLIT_H,
    );
    c.seed = seed;
    c
}

fn light_budget(mut config: MetricConfig) -> MetricConfig {
    config.budget = MetricBudget {
        curve_vertices: 13,
        perturb_iters: 8,
        max_accepts: 4,
    };
    config
}

pub struct DiskSuiteOutcome {
    pub sequences: Vec<BoundarySequence>,
    pub profiles: Vec<CauchyProfile>,
    pub verdicts: Vec<(usize, usize, Verdict, f64)>,
    pub impressions: Vec<RealizationEstimate>,
    pub impression_diameters: Vec<f64>,
    pub all_distinct: bool,
    pub h: f64,
}

/// Eight radial elements on the unit disk: pairwise classification and
/// one-point impression estimation.
pub fn disk_suite(seed: u64) -> Result<(MetricContext, DiskSuiteOutcome)> {
    let ctx = MetricContext::new(disk_metric_config(DISK_H, seed))?;
    let center = Point::new(0.0, 0.0);
    let sequences: Vec<BoundarySequence> = (0..8)
        .map(|k| BoundarySequence::radial_in_disk(center, 1.0, TAU * k as f64 / 8.0, 5))
        .collect();
    let mut profiles = Vec::new();
    for s in &sequences {
        s.validate(&ctx.config.domain)?;
        profiles.push(cauchy_profile(s, &ctx)?);
    }
    let mut verdicts = Vec::new();
    let mut all_distinct = true;
    for i in 0..sequences.len() {
        for j in i + 1..sequences.len() {
            let rep = same_element(&sequences[i], &sequences[j], &ctx, DISK_TOL_DISTINCT)?;
            all_distinct &= rep.verdict == Verdict::Distinct;
            verdicts.push((i, j, rep.verdict, *rep.cross.last().unwrap()));
        }
    }
    // impressions on a light-budget context: probe distances sit near the
    // grid floor where the seed curves already decide the value
    let light_ctx = MetricContext::new(light_budget(disk_metric_config(DISK_H, seed)))?;
    let mut impressions = Vec::new();
    let mut impression_diameters = Vec::new();
    for s in &sequences {
        let el = BoundaryElementEstimate::single(s.clone(), &light_ctx, DISK_TOL_DISTINCT)?;
        let re = realization(&el, &DISK_EPS_LIST, &light_ctx, 24, None)?;
        impression_diameters.push(re.diameter(&light_ctx));
        impressions.push(re);
    }
    Ok((
        ctx,
        DiskSuiteOutcome {
            sequences,
            profiles,
            verdicts,
            impressions,
            impression_diameters,
            all_distinct,
            h: DISK_H,
        },
    ))
}

pub struct SlitSuiteOutcome {
    pub above: BoundarySequence,
    pub below: BoundarySequence,
    pub profiles: Vec<CauchyProfile>,
    pub verdict: Verdict,
    pub cross_deep: f64,
    /// Euclidean distance of the two deepest points: the sequences share
    /// their Euclidean limit while classifying DISTINCT.
    pub euclidean_gap: f64,
}

/// Opposite-side approach to the slit midpoint.
pub fn slit_suite(seed: u64) -> Result<(MetricContext, SlitSuiteOutcome)> {
    let ctx = MetricContext::new(slit_metric_config(seed))?;
    let depths = [0.3, 0.15, 0.075, 0.0375];
    let above = BoundarySequence::custom(
        depths.iter().map(|&d| Point::new(0.5, d)).collect(),
    );
    let below = BoundarySequence::custom(
        depths.iter().map(|&d| Point::new(0.5, -d)).collect(),
    );
    above.validate(&ctx.config.domain)?;
    below.validate(&ctx.config.domain)?;
    let profiles = vec![
        cauchy_profile(&above, &ctx)?,
        cauchy_profile(&below, &ctx)?,
    ];
    let rep = same_element(&above, &below, &ctx, SLIT_TOL)?;
    let euclidean_gap = above.deepest().dist(below.deepest());
    Ok((
        ctx,
        SlitSuiteOutcome {
            above,
            below,
            profiles,
            verdict: rep.verdict,
            cross_deep: *rep.cross.last().unwrap(),
            euclidean_gap,
        },
    ))
}

pub struct CombSuiteOutcome {
    pub levels: u32,
    pub column: Vec<(u32, f64)>,
    pub column_strictly_decreasing: bool,
    pub impression: RealizationEstimate,
    pub impression_x_extent: f64,
    pub bottom_sequences: Vec<BoundarySequence>,
}

/// Comb collapse table and the bottom element's impression.
pub fn comb_suite(levels: u32, seed: u64) -> Result<(MetricContext, CombSuiteOutcome)> {
    let ctx = MetricContext::new(comb_metric_config(levels, seed))?;
    let column = comb_collapse_test(levels, -0.5, 0.5, &ctx)?;
    let column_strictly_decreasing = column.windows(2).all(|w| w[1].1 < w[0].1);
    let bottom_sequences = vec![
        BoundarySequence::comb_channel(-0.5, levels),
        BoundarySequence::comb_channel(0.5, levels),
    ];
    // impression of the bottom element, probed along the deepest channels
    let light_ctx = MetricContext::new(light_budget(comb_metric_config(levels, seed)))?;
    let el = BoundaryElementEstimate::single(
        bottom_sequences[0].clone(),
        &light_ctx,
        DISK_TOL_DISTINCT,
    )?;
    let y_cap = 1.5 * 3f64.powi(-(levels as i32)) + 2.5 * COMB_H;
    let probe_region = Region::Rect {
        min: Point::new(-2.0, 0.0),
        max: Point::new(2.0, y_cap),
    };
    let re = realization(&el, &COMB_EPS_LIST, &light_ctx, 8, Some(probe_region))?;
    let impression_x_extent = re.x_extent(&light_ctx);
    Ok((
        ctx,
        CombSuiteOutcome {
            levels,
            column,
            column_strictly_decreasing,
            impression: re,
            impression_x_extent,
            bottom_sequences,
        },
    ))
}

pub struct FanSuiteOutcome {
    pub sequences: Vec<BoundarySequence>,
    pub profiles: Vec<CauchyProfile>,
    pub verdicts: Vec<(usize, usize, Verdict, f64)>,
    pub all_distinct: bool,
    pub impressions: Vec<RealizationEstimate>,
    /// Distance from each impression to the origin, in cells.
    pub origin_distances_cells: Vec<f64>,
}

/// Four fan-sector elements at depth 2: pairwise DISTINCT with
/// impressions reaching the origin.
pub fn fan_suite(seed: u64) -> Result<(MetricContext, FanSuiteOutcome)> {
    let ctx = MetricContext::new(fan_metric_config(seed))?;
    let addrs: [&[u8]; 4] = [&[0, 0], &[0, 1], &[1, 0], &[1, 1]];
    let sequences: Vec<BoundarySequence> = addrs
        .iter()
        .map(|a| BoundarySequence::fan_sector(a, &FAN_RADII))
        .collect();
    let mut profiles = Vec::new();
    for s in &sequences {
        s.validate(&ctx.config.domain)?;
        profiles.push(cauchy_profile(s, &ctx)?);
    }
    let mut verdicts = Vec::new();
    let mut all_distinct = true;
    for i in 0..4 {
        for j in i + 1..4 {
            let rep = same_element(&sequences[i], &sequences[j], &ctx, FAN_TOL)?;
            all_distinct &= rep.verdict == Verdict::Distinct;
            verdicts.push((i, j, rep.verdict, *rep.cross.last().unwrap()));
        }
    }
    let light_ctx = MetricContext::new(light_budget(fan_metric_config(seed)))?;
    let probe_region = Region::Disk {
        center: Point::new(0.0, 0.0),
        radius: 8.0 * FAN_H,
    };
    let mut impressions = Vec::new();
    let mut origin_distances_cells = Vec::new();
    for s in &sequences {
        let el = BoundaryElementEstimate::single(s.clone(), &light_ctx, FAN_TOL)?;
        let re = realization(&el, &FAN_EPS_LIST, &light_ctx, 2, Some(probe_region))?;
        let mask = light_ctx.fine_mask();
        let origin = Point::new(0.0, 0.0);
        let dist = re
            .cells
            .iter()
            .map(|c| mask.center(c as usize).dist(origin))
            .fold(f64::INFINITY, f64::min);
        origin_distances_cells.push(dist / FAN_H);
        impressions.push(re);
    }
    Ok((
        ctx,
        FanSuiteOutcome {
            sequences,
            profiles,
            verdicts,
            all_distinct,
            impressions,
            origin_distances_cells,
        },
    ))
}

/// Interior sample points of the unit disk, deterministic in the seed.
pub fn random_disk_points(n: usize, seed: u64, r_max: f64) -> Vec<Point> {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = rng.next_signed() * r_max;
        let y = rng.next_signed() * r_max;
        if x.hypot(y) < r_max {
            out.push(Point::new(x, y));
        }
    }
    out
}

/// Checks that a mask label is interior, used when validating probe
/// points in downstream tooling.
pub fn point_is_interior(ctx: &MetricContext, p: Point) -> bool {
    ctx.fine_mask()
        .cell_of_point(p)
        .map(|c| ctx.fine_mask().label(c) == CellLabel::Interior)
        .unwrap_or(false)
}
