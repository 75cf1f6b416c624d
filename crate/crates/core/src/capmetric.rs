//! Upper bounds for the conformal capacitary distance rho_{(F,V)}(x, y):
//! the infimum over curves l joining x and y of
//! cp^(1/2)(F, l \ V) + cp^(1/2)(boundary, l ∩ V)
//! is approximated by optimizing over a polyline family. Every reported
//! distance is an upper bound; lower bounds are not computed.

use crate::capacity::capacity_of_cells;
use crate::error::{Error, Result};
use crate::geometry::{
    build_mask, rasterize_curve, rasterize_plate, CellLabel, CellSet, DomainSpec, GridMask,
    PlateSpec, Point, Polyline, Region,
};
use crate::rng::SplitMix64;
use rayon::prelude::*;

/// Search effort knobs. Sequences for a given seed are budget-prefix
/// stable: enlarging `perturb_iters` replays the same candidates first,
/// so the returned value can only go down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricBudget {
    pub curve_vertices: usize,
    pub perturb_iters: usize,
    pub max_accepts: usize,
}

impl Default for MetricBudget {
    fn default() -> Self {
        MetricBudget {
            curve_vertices: 17,
            perturb_iters: 48,
            max_accepts: 16,
        }
    }
}

/// The reference pair (F, V) on a domain, with resolution and budget.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub domain: DomainSpec,
    pub plate_f: PlateSpec,
    pub region_v: Region,
    pub h: f64,
    /// Search grid is `coarse_factor` times coarser than `h`; falls back
    /// to the fine grid when the domain does not resolve there.
    pub coarse_factor: u32,
    pub budget: MetricBudget,
    pub seed: u64,
}

impl MetricConfig {
    pub fn new(domain: DomainSpec, plate_f: PlateSpec, region_v: Region, h: f64) -> Self {
        MetricConfig {
            domain,
            plate_f,
            region_v,
            h,
            coarse_factor: 2,
            budget: MetricBudget::default(),
            seed: 1,
        }
    }
}

/// Upper-bound estimate of one distance, with the optimizing curve and
/// the two capacity terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub curve: Polyline,
    pub term_f: f64,
    pub term_boundary: f64,
    pub bound_kind: &'static str,
}

impl DistanceEstimate {
    fn zero(p: Point) -> Self {
        DistanceEstimate {
            value: 0.0,
            curve: Polyline::degenerate(p),
            term_f: 0.0,
            term_boundary: 0.0,
            bound_kind: "upper",
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    mask: GridMask,
    f_cells: CellSet,
    boundary_cells: CellSet,
}

impl Level {
    fn build(config: &MetricConfig, h: f64) -> Result<Self> {
        let mask = build_mask(&config.domain, h)?;
        let f_cells = rasterize_plate(&config.plate_f, &mask)?;
        let boundary_cells = rasterize_plate(&PlateSpec::boundary(), &mask)?;
        Ok(Level {
            mask,
            f_cells,
            boundary_cells,
        })
    }
}

/// Prebuilt masks, plate cells and the noise floor for one metric
/// configuration. Immutable and shared across concurrent evaluations.
#[derive(Debug, Clone)]
pub struct MetricContext {
    pub config: MetricConfig,
    fine: Level,
    coarse: Option<Level>,
    /// Distances below this are flagged "below resolution" and excluded
    /// from ratio statistics (10x the square root of the reference
    /// capacity error indicator).
    pub noise_floor: f64,
}

impl MetricContext {
    pub fn new(config: MetricConfig) -> Result<Self> {
        let fine = Level::build(&config, config.h)?;
        // Containment chain F ⊂ V ⊂ V̄ ⊂ Ω, checked at cell granularity.
        for c in fine.f_cells.iter() {
            if !config.region_v.contains(fine.mask.center(c as usize)) {
                return Err(Error::invalid(
                    "metric config",
                    "plate F rasterization is not contained in V; enlarge V",
                ));
            }
        }
        for p in config.region_v.boundary_samples(64) {
            let inside = fine
                .mask
                .cell_of_point(p)
                .map(|c| fine.mask.label(c) == CellLabel::Interior)
                .unwrap_or(false);
            if !inside {
                return Err(Error::invalid(
                    "metric config",
                    "region V is not compactly inside the domain",
                ));
            }
        }
        let coarse = if config.coarse_factor > 1 {
            Level::build(&config, config.h * config.coarse_factor as f64).ok()
        } else {
            None
        };

        // Reference capacity with an h-independent continuum value: F
        // against the whole boundary. Its two-grid difference measures the
        // per-grid capacity noise in distance units; distances below the
        // square root of that indicator are ratios of noise.
        let (cp_fine, _) =
            capacity_of_cells(&fine.mask, &fine.f_cells, &fine.boundary_cells)?;
        let indicator = if let Some(coarse) = &coarse {
            let (cp_coarse, _) =
                capacity_of_cells(&coarse.mask, &coarse.f_cells, &coarse.boundary_cells)?;
            (cp_fine - cp_coarse).abs()
        } else {
            // single-level contexts estimate the indicator at first order
            cp_fine * config.h
        };
        let noise_floor = indicator.sqrt();
        Ok(MetricContext {
            config,
            fine,
            coarse,
            noise_floor,
        })
    }

    pub fn fine_mask(&self) -> &GridMask {
        &self.fine.mask
    }

    pub fn f_cells(&self) -> &CellSet {
        &self.fine.f_cells
    }

    fn search_level(&self) -> &Level {
        self.coarse.as_ref().unwrap_or(&self.fine)
    }

    fn has_coarse(&self) -> bool {
        self.coarse.is_some()
    }

    /// Objective value of one admissible curve on one grid level. Curves
    /// must stay in the open domain: any covering cell that is not
    /// interior rejects the candidate.
    fn objective_on(&self, level: &Level, curve: &Polyline) -> Option<(f64, f64, f64)> {
        let (in_v, out_v) =
            rasterize_curve(curve, &level.mask, &self.config.region_v).ok()?;
        for c in in_v.iter().chain(out_v.iter()) {
            if level.mask.label(c as usize) != CellLabel::Interior {
                return None;
            }
        }
        let term_f = if out_v.is_empty() {
            0.0
        } else {
            capacity_of_cells(&level.mask, &level.f_cells, &out_v)
                .ok()?
                .0
                .sqrt()
        };
        let term_b = if in_v.is_empty() {
            0.0
        } else {
            capacity_of_cells(&level.mask, &level.boundary_cells, &in_v)
                .ok()?
                .0
                .sqrt()
        };
        Some((term_f + term_b, term_f, term_b))
    }

    /// Fine-grid objective of an externally supplied curve. The optimizer
    /// never returns a value above this for a curve it was seeded with.
    pub fn objective(&self, curve: &Polyline) -> Option<(f64, f64, f64)> {
        self.objective_on(&self.fine, curve)
    }

    fn interior_cell_of(&self, p: Point) -> Result<usize> {
        match self.fine.mask.cell_of_point(p) {
            Some(c) if self.fine.mask.label(c) == CellLabel::Interior => Ok(c),
            _ => Err(Error::PointNotInterior { x: p.x, y: p.y }),
        }
    }

    fn point_valid(&self, p: Point) -> bool {
        self.fine
            .mask
            .cell_of_point(p)
            .map(|c| self.fine.mask.label(c) == CellLabel::Interior)
            .unwrap_or(false)
    }
}

/// Grid shortest path between two interior cells (4-connected BFS),
/// returned as the polyline through cell centers.
pub fn bfs_path(mask: &GridMask, from: usize, to: usize) -> Result<Polyline> {
    if from == to {
        let c = mask.center(from);
        let off = mask.h * 0.25;
        return Polyline::new(vec![c, Point::new(c.x + off, c.y)]);
    }
    let mut prev = vec![u32::MAX; mask.len()];
    let mut queue = std::collections::VecDeque::new();
    prev[from] = from as u32;
    queue.push_back(from);
    while let Some(c) = queue.pop_front() {
        if c == to {
            break;
        }
        for nb in mask.neighbors4(c).into_iter().flatten() {
            if prev[nb] == u32::MAX && mask.label(nb) == CellLabel::Interior {
                prev[nb] = c as u32;
                queue.push_back(nb);
            }
        }
    }
    if prev[to] == u32::MAX {
        return Err(Error::UnreachablePair);
    }
    let mut cells = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur] as usize;
        cells.push(cur);
    }
    cells.reverse();
    // drop collinear runs
    let mut pts: Vec<Point> = Vec::with_capacity(cells.len());
    for (k, &c) in cells.iter().enumerate() {
        let p = mask.center(c);
        if k >= 2 {
            let a = pts[pts.len() - 2];
            let b = pts[pts.len() - 1];
            let collinear = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)).abs() < 1e-12;
            if collinear {
                *pts.last_mut().unwrap() = p;
                continue;
            }
        }
        pts.push(p);
    }
    Polyline::new(pts)
}

/// Builds the seed curve family for a canonical point pair: the grid
/// shortest path, the straight chord, and sinusoidal detours pushed
/// toward the boundary at three amplitudes on both sides.
fn seed_curves(ctx: &MetricContext, a: Point, b: Point) -> Result<Vec<Polyline>> {
    let mask = &ctx.fine.mask;
    let ca = ctx.interior_cell_of(a)?;
    let cb = ctx.interior_cell_of(b)?;
    let mut seeds = Vec::new();
    // exact endpoints glued onto the center-path
    let path = bfs_path(mask, ca, cb)?;
    let mut glued = vec![a];
    glued.extend(path.vertices().iter().copied());
    glued.push(b);
    glued.dedup();
    if let Ok(p) = Polyline::new(glued) {
        seeds.push(p);
    }
    if a != b {
        if let Ok(chord) = Polyline::new(vec![a, b]) {
            seeds.push(chord);
        }
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let len = (dx * dx + dy * dy).sqrt();
        let (nxu, nyu) = (-dy / len, dx / len);
        let bb = ctx.config.domain.bounding_box();
        let t_hi = (bb.max.x - bb.min.x) + (bb.max.y - bb.min.y);
        let samples = 33usize;
        let bump = |t: f64| -> Polyline {
            let pts: Vec<Point> = (0..samples)
                .map(|k| {
                    if k == 0 {
                        return a;
                    }
                    if k == samples - 1 {
                        return b;
                    }
                    let s = k as f64 / (samples - 1) as f64;
                    let w = (std::f64::consts::PI * s).sin();
                    Point::new(a.x + s * dx + t * w * nxu, a.y + s * dy + t * w * nyu)
                })
                .collect();
            Polyline::new(pts).unwrap()
        };
        for sign in [1.0f64, -1.0] {
            // widest valid amplitude on this side
            let mut lo = 0.0f64;
            let mut hi = t_hi;
            for _ in 0..14 {
                let mid = 0.5 * (lo + hi);
                let curve = bump(sign * mid);
                if curve.vertices().iter().all(|&p| ctx.point_valid(p)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo > 0.0 {
                for frac in [0.35, 0.65, 0.9] {
                    seeds.push(bump(sign * lo * frac));
                }
            }
        }
    }
    Ok(seeds)
}

fn better(a: (f64, &Polyline), b: (f64, &Polyline)) -> bool {
    // strict value order, lexicographic curve tie-break for determinism
    a.0 < b.0
        || (a.0 == b.0
            && format!("{:?}", a.1.vertices()) < format!("{:?}", b.1.vertices()))
}

struct Evaluated {
    curve: Polyline,
    value: f64,
    term_f: f64,
    term_b: f64,
}

/// Upper-bound distance rho(x, y) for the context's (F, V) pair.
pub fn rho(ctx: &MetricContext, x: Point, y: Point) -> Result<DistanceEstimate> {
    rho_with_seeds(ctx, x, y, &[])
}

/// Same as `rho` but with externally supplied candidate curves; the
/// returned value never exceeds the fine-grid objective of any valid
/// extra seed.
pub fn rho_with_seeds(
    ctx: &MetricContext,
    x: Point,
    y: Point,
    extra_seeds: &[Polyline],
) -> Result<DistanceEstimate> {
    if x == y {
        return Ok(DistanceEstimate::zero(x));
    }
    // the search runs on the unordered pair
    let (a, b, swapped) = if x.lex_le(y) {
        (x, y, false)
    } else {
        (y, x, true)
    };
    ctx.interior_cell_of(a)?;
    ctx.interior_cell_of(b)?;

    let mut seeds = seed_curves(ctx, a, b)?;
    for s in extra_seeds {
        let s = if swapped { s.reversed() } else { s.clone() };
        seeds.push(s);
    }

    let search = ctx.search_level();
    let searching_coarse = ctx.has_coarse();

    // seed evaluation, deterministic reduction
    let evals: Vec<Option<(f64, f64, f64)>> = seeds
        .par_iter()
        .map(|c| ctx.objective_on(search, c))
        .collect();
    let mut best_search: Option<(f64, Polyline)> = None;
    for (c, e) in seeds.iter().zip(&evals) {
        if let Some((v, _, _)) = e {
            let cand = (*v, c);
            if best_search
                .as_ref()
                .map(|(bv, bc)| better(cand, (*bv, bc)))
                .unwrap_or(true)
            {
                best_search = Some((*v, c.clone()));
            }
        }
    }
    let (mut cur_val, seed_best) = match best_search {
        Some((v, c)) => (v, c),
        None => {
            // nothing admissible on the coarse grid; retry on fine
            let evals: Vec<Option<(f64, f64, f64)>> = seeds
                .par_iter()
                .map(|c| ctx.objective_on(&ctx.fine, c))
                .collect();
            let mut best: Option<(f64, Polyline)> = None;
            for (c, e) in seeds.iter().zip(&evals) {
                if let Some((v, _, _)) = e {
                    if best
                        .as_ref()
                        .map(|(bv, bc)| better((*v, c), (*bv, bc)))
                        .unwrap_or(true)
                    {
                        best = Some((*v, c.clone()));
                    }
                }
            }
            best.ok_or(Error::UnreachablePair)?
        }
    };

    // fine-grid tracking: min over every state the search visits, so the
    // final value is monotone in the budget
    let mut fine_best: Option<Evaluated> = None;
    let consider_fine = |curve: &Polyline, fine_best: &mut Option<Evaluated>| {
        if let Some((v, tf, tb)) = ctx.objective_on(&ctx.fine, curve) {
            let replace = fine_best
                .as_ref()
                .map(|fb| better((v, curve), (fb.value, &fb.curve)))
                .unwrap_or(true);
            if replace {
                *fine_best = Some(Evaluated {
                    curve: curve.clone(),
                    value: v,
                    term_f: tf,
                    term_b: tb,
                });
            }
        }
    };
    consider_fine(&seed_best, &mut fine_best);

    // local perturbation of a k-vertex polyline
    let k = ctx.config.budget.curve_vertices.max(3);
    let mut current = seed_best.resample(k);
    match ctx.objective_on(search, &current) {
        Some((v, _, _)) => {
            cur_val = v;
            consider_fine(&current, &mut fine_best);
        }
        None => current = seed_best.clone(),
    }
    let mut rng = SplitMix64::new(SplitMix64::derive(
        ctx.config.seed,
        &[a.x, a.y, b.x, b.y],
    ));
    let h_search = search.mask.h;
    let sigma0 = (2.0 * h_search).max(a.dist(b) / 8.0);
    let mut sigma = sigma0;
    let mut accepts = 0usize;
    for it in 0..ctx.config.budget.perturb_iters {
        if accepts >= ctx.config.budget.max_accepts {
            break;
        }
        let nv = current.vertices().len();
        if nv < 3 {
            break;
        }
        let candidate = if it % 5 == 4 {
            // smoothing move
            let mut pts = current.vertices().to_vec();
            for i in 1..nv - 1 {
                let (p, q, r) = (pts[i - 1], pts[i], pts[i + 1]);
                pts[i] = Point::new(
                    0.5 * q.x + 0.25 * (p.x + r.x),
                    0.5 * q.y + 0.25 * (p.y + r.y),
                );
            }
            Polyline::new(pts).ok()
        } else {
            let idx = 1 + rng.below((nv - 2) as u64) as usize;
            let ddx = rng.next_signed() * sigma;
            let ddy = rng.next_signed() * sigma;
            let mut pts = current.vertices().to_vec();
            pts[idx] = Point::new(pts[idx].x + ddx, pts[idx].y + ddy);
            Polyline::new(pts).ok()
        };
        sigma = (sigma * 0.93).max(h_search * 0.5);
        let Some(candidate) = candidate else { continue };
        if let Some((v, _, _)) = ctx.objective_on(search, &candidate) {
            if v < cur_val {
                cur_val = v;
                current = candidate;
                accepts += 1;
                if searching_coarse {
                    consider_fine(&current, &mut fine_best);
                } else if let Some((fv, tf, tb)) = ctx.objective_on(&ctx.fine, &current) {
                    // search level is the fine level; reuse the value
                    let replace = fine_best
                        .as_ref()
                        .map(|fb| better((fv, &current), (fb.value, &fb.curve)))
                        .unwrap_or(true);
                    if replace {
                        fine_best = Some(Evaluated {
                            curve: current.clone(),
                            value: fv,
                            term_f: tf,
                            term_b: tb,
                        });
                    }
                }
            }
        }
    }

    // externally supplied seeds are honored exactly as given
    for s in extra_seeds {
        let s = if swapped { s.reversed() } else { s.clone() };
        consider_fine(&s, &mut fine_best);
    }

    // near-wall curves can be admissible on the coarse grid yet clip the
    // finer boundary layer; when nothing reached the fine grid, evaluate
    // the whole seed family there (the grid shortest path always passes)
    if fine_best.is_none() {
        for c in seeds.iter().chain(std::iter::once(&current)) {
            consider_fine(c, &mut fine_best);
        }
    }
    let best = fine_best.ok_or(Error::UnreachablePair)?;
    let curve = if swapped {
        best.curve.reversed()
    } else {
        best.curve
    };
    Ok(DistanceEstimate {
        value: best.value,
        curve,
        term_f: best.term_f,
        term_boundary: best.term_b,
        bound_kind: "upper",
    })
}

/// Evaluates many distances in parallel, order-stable.
pub fn rho_many(ctx: &MetricContext, pairs: &[(Point, Point)]) -> Result<Vec<DistanceEstimate>> {
    pairs
        .par_iter()
        .map(|&(x, y)| rho(ctx, x, y))
        .collect::<std::result::Result<Vec<_>, _>>()
}

#[derive(Debug, Clone)]
pub struct TriangleRow {
    pub d_xy: f64,
    pub d_xz: f64,
    pub d_zy: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct TriangleReport {
    pub rows: Vec<TriangleRow>,
    pub worst_ratio: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks d(x,y) <= slack * (d(x,z) + d(z,y)) on the given triples. The
/// concatenation of the two optimizing legs is fed to the direct search
/// as a candidate, so a failure beyond slack indicates an optimizer bug,
/// not a geometry property.
pub fn triangle_check(
    ctx: &MetricContext,
    triples: &[(Point, Point, Point)],
    slack: f64,
) -> Result<TriangleReport> {
    let rows: Vec<TriangleRow> = triples
        .par_iter()
        .map(|&(x, y, z)| -> Result<TriangleRow> {
            let dxz = rho(ctx, x, z)?;
            let dzy = rho(ctx, z, y)?;
            let mut seeds = Vec::new();
            if !dxz.curve.is_degenerate() && !dzy.curve.is_degenerate() {
                seeds.push(dxz.curve.concat(&dzy.curve));
            }
            let dxy = rho_with_seeds(ctx, x, y, &seeds)?;
            let denom = dxz.value + dzy.value;
            let ratio = if dxy.value <= 0.0 {
                0.0
            } else if denom > 0.0 {
                dxy.value / denom
            } else {
                f64::INFINITY
            };
            Ok(TriangleRow {
                d_xy: dxy.value,
                d_xz: dxz.value,
                d_zy: dzy.value,
                ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    Ok(TriangleReport {
        worst_ratio: worst,
        slack,
        pass: worst <= slack,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub k: f64,
    pub used_pairs: usize,
    pub excluded_pairs: usize,
    pub ratios: Vec<f64>,
}

/// Empirical two-sided comparability constant between two capacitary
/// metrics on the same domain. Pairs with either distance below the
/// noise floor are excluded and counted.
pub fn equivalence_check(
    ctx1: &MetricContext,
    ctx2: &MetricContext,
    pairs: &[(Point, Point)],
) -> Result<EquivalenceReport> {
    let d1 = rho_many(ctx1, pairs)?;
    let d2 = rho_many(ctx2, pairs)?;
    let floor = ctx1.noise_floor.max(ctx2.noise_floor);
    let mut ratios = Vec::new();
    let mut excluded = 0usize;
    for (a, b) in d1.iter().zip(&d2) {
        if a.value <= floor || b.value <= floor {
            excluded += 1;
            continue;
        }
        ratios.push((a.value / b.value).max(b.value / a.value));
    }
    if ratios.is_empty() {
        return Err(Error::invalid(
            "equivalence check",
            "all pairs fell below the noise floor",
        ));
    }
    let k = ratios.iter().copied().fold(1.0f64, f64::max);
    Ok(EquivalenceReport {
        k,
        used_pairs: ratios.len(),
        excluded_pairs: excluded,
        ratios,
    })
}

#[derive(Debug, Clone)]
pub struct TopologyRow {
    pub radius: f64,
    pub min_rho: f64,
    pub max_rho: f64,
}

/// Positivity of rho on Euclidean circles around a point and the
/// monotone decay of the circle minimum with the radius.
pub fn topology_check(
    ctx: &MetricContext,
    x0: Point,
    radii: &[f64],
    samples_per_circle: usize,
) -> Result<Vec<TopologyRow>> {
    let mut rows = Vec::new();
    for &r in radii {
        if r == 0.0 {
            rows.push(TopologyRow {
                radius: 0.0,
                min_rho: 0.0,
                max_rho: 0.0,
            });
            continue;
        }
        let pts: Vec<(Point, Point)> = (0..samples_per_circle)
            .map(|k| {
                let t = crate::geometry::TAU * k as f64 / samples_per_circle as f64;
                (x0, Point::new(x0.x + r * t.cos(), x0.y + r * t.sin()))
            })
            .collect();
        for (_, p) in &pts {
            if !ctx.point_valid(*p) {
                return Err(Error::PointNotInterior { x: p.x, y: p.y });
            }
        }
        let ds = rho_many(ctx, &pts)?;
        let min_rho = ds.iter().map(|d| d.value).fold(f64::INFINITY, f64::min);
        let max_rho = ds.iter().map(|d| d.value).fold(0.0f64, f64::max);
        rows.push(TopologyRow {
            radius: r,
            min_rho,
            max_rho,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct AsymptoticRhoRow {
    pub eps: f64,
    pub rho: f64,
    pub ratio: f64,
}

/// Table of rho((0,0), (eps,0)) against eps for the asymptotic-behavior
/// check; both points must be interior and outside V.
pub fn asymptotic_ratio(ctx: &MetricContext, eps_list: &[f64]) -> Result<Vec<AsymptoticRhoRow>> {
    let origin = Point::new(0.0, 0.0);
    let mut rows = Vec::new();
    for &eps in eps_list {
        let p = Point::new(eps, 0.0);
        if ctx.config.region_v.contains(origin) || ctx.config.region_v.contains(p) {
            return Err(Error::invalid(
                "asymptotic ratio",
                "query points must lie outside V",
            ));
        }
        let d = rho(ctx, origin, p)?;
        rows.push(AsymptoticRhoRow {
            eps,
            rho: d.value,
            ratio: d.value / eps,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PlateSpec;

    fn disk_ctx(h: f64) -> MetricContext {
        let config = MetricConfig::new(
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
        MetricContext::new(config).unwrap()
    }

    #[test]
    fn rho_zero_on_equal_points() {
        let ctx = disk_ctx(1.0 / 32.0);
        let p = Point::new(0.6, 0.0);
        let d = rho(&ctx, p, p).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.curve.is_degenerate());
    }

    #[test]
    fn rho_symmetry_exact() {
        let ctx = disk_ctx(1.0 / 32.0);
        let x = Point::new(0.6, 0.1);
        let y = Point::new(-0.2, -0.55);
        let dxy = rho(&ctx, x, y).unwrap();
        let dyx = rho(&ctx, y, x).unwrap();
        assert_eq!(dxy.value, dyx.value);
        assert_eq!(dxy.curve.first(), x);
        assert_eq!(dyx.curve.first(), y);
    }

    #[test]
    fn rho_positive_and_decreasing_toward_coincidence() {
        let ctx = disk_ctx(1.0 / 32.0);
        let x = Point::new(0.6, 0.0);
        let d1 = rho(&ctx, x, Point::new(0.6, 0.2)).unwrap();
        let d2 = rho(&ctx, x, Point::new(0.6, 0.05)).unwrap();
        assert!(d2.value > 0.0);
        assert!(d2.value < d1.value, "{} vs {}", d2.value, d1.value);
        // value equals the sum of its terms by construction
        assert_eq!(d1.value, d1.term_f + d1.term_boundary);
    }

    #[test]
    fn optimizer_not_worse_than_supplied_seed() {
        let ctx = disk_ctx(1.0 / 32.0);
        let x = Point::new(0.5, 0.3);
        let y = Point::new(-0.5, 0.3);
        // a deliberately long detour is still a valid upper bound
        let detour = Polyline::new(vec![
            x,
            Point::new(0.4, 0.75),
            Point::new(0.0, 0.85),
            Point::new(-0.4, 0.75),
            y,
        ])
        .unwrap();
        let (detour_value, _, _) = ctx.objective(&detour).unwrap();
        let d = rho_with_seeds(&ctx, x, y, &[detour.clone()]).unwrap();
        assert!(
            d.value <= detour_value + 1e-12,
            "{} vs seed {}",
            d.value,
            detour_value
        );
    }

    #[test]
    fn budget_monotone() {
        let mk = |iters: usize| {
            let mut ctx = disk_ctx(1.0 / 32.0);
            ctx.config.budget.perturb_iters = iters;
            ctx
        };
        let x = Point::new(0.55, 0.2);
        let y = Point::new(-0.35, -0.4);
        let small = rho(&mk(12), x, y).unwrap();
        let large = rho(&mk(48), x, y).unwrap();
        assert!(large.value <= small.value + 1e-12);
    }

    #[test]
    fn triangle_through_midpoint() {
        let ctx = disk_ctx(1.0 / 32.0);
        let report = triangle_check(
            &ctx,
            &[(
                Point::new(0.6, 0.1),
                Point::new(-0.6, 0.1),
                Point::new(0.0, 0.62),
            )],
            1.10,
        )
        .unwrap();
        assert!(report.pass, "worst ratio {}", report.worst_ratio);
    }

    #[test]
    fn triangle_degenerate_triple() {
        let ctx = disk_ctx(1.0 / 32.0);
        let p = Point::new(0.5, 0.0);
        let report = triangle_check(&ctx, &[(p, p, p)], 1.10).unwrap();
        assert!(report.pass);
        assert_eq!(report.rows[0].d_xy, 0.0);
    }

    #[test]
    fn equivalence_of_identical_configs_is_one() {
        let ctx = disk_ctx(1.0 / 32.0);
        let pairs = vec![
            (Point::new(0.6, 0.0), Point::new(-0.5, 0.3)),
            (Point::new(0.2, 0.55), Point::new(-0.2, -0.6)),
        ];
        let rep = equivalence_check(&ctx, &ctx, &pairs).unwrap();
        assert_eq!(rep.k, 1.0);
        assert_eq!(rep.excluded_pairs, 0);
    }

    #[test]
    fn equivalence_counts_below_floor_pairs() {
        let ctx = disk_ctx(1.0 / 32.0);
        let p = Point::new(0.6, 0.0);
        let pairs = vec![
            (p, p), // zero distance sits below any positive floor
            (Point::new(0.2, 0.55), Point::new(-0.2, -0.6)),
        ];
        let rep = equivalence_check(&ctx, &ctx, &pairs).unwrap();
        assert_eq!(rep.excluded_pairs, 1);
        assert_eq!(rep.used_pairs, 1);
    }

    #[test]
    fn topology_rows_positive_and_monotone() {
        let ctx = disk_ctx(1.0 / 32.0);
        let rows = topology_check(&ctx, Point::new(0.55, 0.0), &[0.2, 0.1, 0.05, 0.0], 6).unwrap();
        assert!(rows[0].min_rho > 0.0 && rows[1].min_rho > 0.0 && rows[2].min_rho > 0.0);
        assert!(rows[0].min_rho > rows[1].min_rho && rows[1].min_rho > rows[2].min_rho);
        assert_eq!(rows[3].min_rho, 0.0);
    }

    #[test]
    fn points_not_interior_rejected() {
        let ctx = disk_ctx(1.0 / 32.0);
        match rho(&ctx, Point::new(0.5, 0.0), Point::new(1.5, 0.0)) {
            Err(Error::PointNotInterior { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
