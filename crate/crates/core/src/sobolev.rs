//! Finite-Dirichlet-energy grid functions, Luzin-type exceptional sets,
//! and quasicontinuous boundary traces along capacitary boundary elements.

use crate::boundary::BoundaryElementEstimate;
use crate::capacity::{set_capacity_cells, CapacityEstimate};
use crate::capmetric::{rho_many, MetricContext};
use crate::error::{Error, Result};
use crate::geometry::{build_mask, CellLabel, CellSet, DomainSpec, GridMask, Point};
use crate::solver::dirichlet_energy;
use serde::{Deserialize, Serialize};

/// Shipped formula catalog for test functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaTag {
    /// u(x, y) = x.
    CoordinateX,
    /// u = Re z; coincides with `CoordinateX` on centered domains but is
    /// kept as its own catalog entry for trace oracles.
    HarmonicReZ,
    /// u = Re sqrt(z0 - z) with z0 the domain's sample boundary point:
    /// finite energy, non-Lipschitz at z0.
    SqrtSingularity,
    /// u = ln |z - z0|: the discrete energy diverges under refinement and
    /// the constructor rejects it.
    RadialLog,
}

impl FormulaTag {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coordinate_x" => Ok(FormulaTag::CoordinateX),
            "harmonic_re_z" => Ok(FormulaTag::HarmonicReZ),
            "sqrt_singularity" => Ok(FormulaTag::SqrtSingularity),
            "radial_log" => Ok(FormulaTag::RadialLog),
            other => Err(Error::invalid("function tag", other.to_string())),
        }
    }

    fn eval(&self, p: Point, z0: Point) -> f64 {
        match self {
            FormulaTag::CoordinateX | FormulaTag::HarmonicReZ => p.x,
            FormulaTag::SqrtSingularity => {
                // principal sqrt of (z0 - z): branch cut points outward
                let re = z0.x - p.x;
                let im = z0.y - p.y;
                let r = (re * re + im * im).sqrt();
                ((r + re) / 2.0).sqrt()
            }
            FormulaTag::RadialLog => p.dist(z0).max(1e-300).ln(),
        }
    }
}

/// A function sampled on the interior cells of a mask, with its discrete
/// Dirichlet seminorm.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub mask: GridMask,
    /// Full-grid values; NaN off the interior.
    pub values: Vec<f64>,
    pub energy: f64,
}

impl GridFunction {
    pub fn from_fn(mask: GridMask, f: impl Fn(Point) -> f64) -> Self {
        let mut values = vec![f64::NAN; mask.len()];
        for c in mask.interior_cells() {
            values[c] = f(mask.center(c));
        }
        let energy = dirichlet_energy(mask.nx, mask.ny, &values);
        GridFunction { mask, values, energy }
    }

    pub fn scaled(&self, alpha: f64) -> GridFunction {
        let values: Vec<f64> = self.values.iter().map(|v| alpha * v).collect();
        let energy = dirichlet_energy(self.mask.nx, self.mask.ny, &values);
        GridFunction {
            mask: self.mask.clone(),
            values,
            energy,
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        assert_eq!(self.mask.len(), other.mask.len());
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let energy = dirichlet_energy(self.mask.nx, self.mask.ny, &values);
        GridFunction {
            mask: self.mask.clone(),
            values,
            energy,
        }
    }

    /// Bilinear sample at an arbitrary interior point; falls back to the
    /// nearest available cell value where neighbors are missing.
    pub fn sample(&self, p: Point) -> Option<f64> {
        let h = self.mask.h;
        let fx = (p.x - self.mask.origin.x) / h - 0.5;
        let fy = (p.y - self.mask.origin.y) / h - 0.5;
        let i0 = fx.floor();
        let j0 = fy.floor();
        let tx = fx - i0;
        let ty = fy - j0;
        let mut acc = 0.0;
        let mut w_acc = 0.0;
        for (di, dj, w) in [
            (0.0, 0.0, (1.0 - tx) * (1.0 - ty)),
            (1.0, 0.0, tx * (1.0 - ty)),
            (0.0, 1.0, (1.0 - tx) * ty),
            (1.0, 1.0, tx * ty),
        ] {
            let i = i0 + di;
            let j = j0 + dj;
            if i < 0.0 || j < 0.0 || i >= self.mask.nx as f64 || j >= self.mask.ny as f64 {
                continue;
            }
            let c = self.mask.idx(i as usize, j as usize);
            let v = self.values[c];
            if !v.is_nan() {
                acc += w * v;
                w_acc += w;
            }
        }
        if w_acc > 1e-12 {
            Some(acc / w_acc)
        } else {
            self.mask.cell_of_point(p).and_then(|c| {
                let v = self.values[c];
                (!v.is_nan()).then_some(v)
            })
        }
    }

    /// Oscillation of u between cell centers within Euclidean radius r,
    /// per cell.
    fn local_oscillation(&self, r: f64) -> Vec<f64> {
        let reach = (r / self.mask.h).ceil() as i64;
        let nx = self.mask.nx as i64;
        let ny = self.mask.ny as i64;
        let mut osc = vec![0.0f64; self.mask.len()];
        for c in self.mask.interior_cells() {
            let u = self.values[c];
            let (i, j) = self.mask.coords(c);
            let pc = self.mask.center(c);
            let mut m = 0.0f64;
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                        continue;
                    }
                    let n = self.mask.idx(ni as usize, nj as usize);
                    let v = self.values[n];
                    if v.is_nan() || self.mask.center(n).dist(pc) > r {
                        continue;
                    }
                    m = m.max((u - v).abs());
                }
            }
            osc[c] = m;
        }
        osc
    }

    /// Global oscillation over the interior.
    pub fn range(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in self.values.iter().filter(|v| !v.is_nan()) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        if hi > lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Samples a catalog formula on the domain at resolution `h`. The energy
/// is checked for stability on a coarse-to-fine ladder; a consecutive
/// energy ratio above 1.5 rejects the formula as infinite-energy.
pub fn make_function(domain: &DomainSpec, tag: FormulaTag, h: f64) -> Result<GridFunction> {
    let z0 = domain.sample_boundary_point();
    let bb = domain.bounding_box();
    let diam = (bb.max.x - bb.min.x).max(bb.max.y - bb.min.y);
    // exact-halving ladder anchored at the requested resolution, so the
    // energy increments between rungs are comparable
    let mut k = 0i32;
    while h * 2f64.powi(k + 1) <= diam / 6.0 {
        k += 1;
    }
    let ladder: Vec<f64> = (0..=k).rev().map(|j| h * 2f64.powi(j)).collect();
    let mut energies: Vec<f64> = Vec::new();
    let mut out: Option<GridFunction> = None;
    for hk in ladder {
        let mask = match build_mask(domain, hk) {
            Ok(m) => m,
            // very coarse rungs may not resolve comb/fan features
            Err(Error::UnresolvedFeature { .. }) if hk > h => continue,
            Err(e) => return Err(e),
        };
        let gf = GridFunction::from_fn(mask, |p| tag.eval(p, z0));
        if !gf.energy.is_finite() {
            return Err(Error::InfiniteEnergy { ratio: f64::INFINITY });
        }
        if let Some(&prev) = energies.last() {
            let ratio = gf.energy / prev.max(1e-300);
            if ratio > 1.5 {
                return Err(Error::InfiniteEnergy { ratio });
            }
        }
        energies.push(gf.energy);
        out = Some(gf);
    }
    // Log-type singularities add a constant energy increment per halving,
    // which never trips a fixed per-step ratio; flag divergence when the
    // increments fail to decay along the ladder.
    if energies.len() >= 3 {
        let incs: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
        let max_inc = incs.iter().cloned().fold(0.0f64, f64::max);
        let last_inc = *incs.last().unwrap();
        let scale = energies.last().unwrap().abs().max(1e-12);
        if last_inc > 0.05 * scale && last_inc >= 0.5 * max_inc {
            return Err(Error::InfiniteEnergy {
                ratio: energies[energies.len() - 1] / energies[energies.len() - 2],
            });
        }
    }
    Ok(out.expect("ladder nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    Capacitary,
}

/// Outcome of a Luzin-type exceptional-set construction.
#[derive(Debug, Clone)]
pub struct LuzinReport {
    pub eps: f64,
    pub u_cells: CellSet,
    /// Set capacity of the removed cells; zero estimate when empty.
    pub cap_u: CapacityEstimate,
    /// Empirical Lipschitz constant of u in the chosen metric on the
    /// kept cells.
    pub modulus: f64,
    pub metric_kind: MetricKind,
    /// True when no exceptional set within the capacity budget exists at
    /// this resolution; reported, not fatal.
    pub budget_exceeded: bool,
}

fn zero_capacity_estimate(h: f64) -> CapacityEstimate {
    CapacityEstimate {
        value: 0.0,
        resolutions_used: vec![h],
        extrapolated: false,
        error_indicator: 0.0,
        iterations: 0,
        wall_time: 0.0,
    }
}

/// Knobs of the Luzin constructions; `modulus_coeff` of `None` uses
/// 4 * range / domain scale.
#[derive(Debug, Clone, Copy, Default)]
pub struct LuzinParams {
    pub modulus_coeff: Option<f64>,
    pub refine: u32,
}

/// Euclidean (weak) Luzin construction: removes the cells whose local
/// oscillation at scales {4h, 2h} breaks the Lipschitz budget, then
/// verifies the removed set's capacity against eps.
pub fn weak_luzin(
    u: &GridFunction,
    domain: &DomainSpec,
    eps: f64,
    params: LuzinParams,
) -> Result<LuzinReport> {
    if eps < 0.0 {
        return Err(Error::invalid("eps", "capacity budget must be >= 0"));
    }
    let h = u.mask.h;
    let bb = domain.bounding_box();
    let diam = (bb.max.x - bb.min.x).max(bb.max.y - bb.min.y);
    let kappa = params
        .modulus_coeff
        .unwrap_or_else(|| 4.0 * u.range() / diam);
    let scales = [4.0 * h, 2.0 * h];
    let mut removed = Vec::new();
    for &r in &scales {
        let osc = u.local_oscillation(r);
        for c in u.mask.interior_cells() {
            if osc[c] > kappa * r {
                removed.push(c as u32);
            }
        }
    }
    let u_cells = CellSet::from_vec(removed);
    // modulus on the kept cells at the smallest scale
    let modulus = kept_lipschitz_euclid(u, &u_cells, scales[scales.len() - 1]);
    if u_cells.is_empty() {
        return Ok(LuzinReport {
            eps,
            u_cells,
            cap_u: zero_capacity_estimate(h),
            modulus,
            metric_kind: MetricKind::Euclidean,
            budget_exceeded: false,
        });
    }
    let cap_u = set_capacity_cells(domain, h, &u_cells, params.refine)?;
    let budget_exceeded = cap_u.value > eps + cap_u.error_indicator;
    Ok(LuzinReport {
        eps,
        u_cells,
        cap_u,
        modulus,
        metric_kind: MetricKind::Euclidean,
        budget_exceeded,
    })
}

fn kept_lipschitz_euclid(u: &GridFunction, removed: &CellSet, r: f64) -> f64 {
    let mut worst = 0.0f64;
    let reach = (r / u.mask.h).ceil() as i64;
    let nx = u.mask.nx as i64;
    let ny = u.mask.ny as i64;
    for c in u.mask.interior_cells() {
        if removed.contains(c as u32) {
            continue;
        }
        let (i, j) = u.mask.coords(c);
        let pc = u.mask.center(c);
        for dj in 0..=reach {
            for di in -reach..=reach {
                if dj == 0 && di <= 0 {
                    continue;
                }
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                    continue;
                }
                let n = u.mask.idx(ni as usize, nj as usize);
                if removed.contains(n as u32) || u.values[n].is_nan() {
                    continue;
                }
                let d = u.mask.center(n).dist(pc);
                if d > r || d == 0.0 {
                    continue;
                }
                worst = worst.max((u.values[c] - u.values[n]).abs() / d);
            }
        }
    }
    worst
}

/// Capacitary (strong) Luzin construction: measures oscillation against
/// rho upper bounds on a farthest-point probe subsample, removes the
/// neighborhoods of probes in violating pairs, and verifies the capacity
/// budget.
pub fn strong_luzin(
    u: &GridFunction,
    ctx: &MetricContext,
    eps: f64,
    n_probes: usize,
    params: LuzinParams,
) -> Result<LuzinReport> {
    if eps < 0.0 {
        return Err(Error::invalid("eps", "capacity budget must be >= 0"));
    }
    let mask = &u.mask;
    let probes = farthest_point_probes(mask, n_probes);
    let mut pairs = Vec::new();
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            pairs.push((
                mask.center(probes[i] as usize),
                mask.center(probes[j] as usize),
            ));
        }
    }
    let pts: Vec<(Point, Point)> = pairs.clone();
    let dists = rho_many(ctx, &pts)?;
    let rho_max = dists.iter().map(|d| d.value).fold(0.0f64, f64::max);
    let kappa = params
        .modulus_coeff
        .unwrap_or_else(|| 4.0 * u.range() / rho_max.max(1e-12));
    let mut removed_probes = Vec::new();
    let mut idx = 0usize;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let d = dists[idx].value;
            idx += 1;
            let du = (u.values[probes[i] as usize] - u.values[probes[j] as usize]).abs();
            if d > ctx.noise_floor && du > kappa * d {
                removed_probes.push(probes[i]);
                removed_probes.push(probes[j]);
            }
        }
    }
    removed_probes.sort_unstable();
    removed_probes.dedup();
    // dilate removed probes to their grid neighborhoods
    let r_loc = 2.0 * mask.h;
    let mut removed = Vec::new();
    for &p in &removed_probes {
        let pc = mask.center(p as usize);
        let reach = (r_loc / mask.h).ceil() as i64;
        let (i, j) = mask.coords(p as usize);
        for dj in -reach..=reach {
            for di in -reach..=reach {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= mask.nx as i64 || nj >= mask.ny as i64 {
                    continue;
                }
                let n = mask.idx(ni as usize, nj as usize);
                if mask.label(n) == CellLabel::Interior && mask.center(n).dist(pc) <= r_loc {
                    removed.push(n as u32);
                }
            }
        }
    }
    let u_cells = CellSet::from_vec(removed);
    // modulus over surviving probe pairs
    let mut modulus = 0.0f64;
    let mut idx = 0usize;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let d = dists[idx].value;
            idx += 1;
            if removed_probes.binary_search(&probes[i]).is_ok()
                || removed_probes.binary_search(&probes[j]).is_ok()
                || d <= ctx.noise_floor
            {
                continue;
            }
            let du = (u.values[probes[i] as usize] - u.values[probes[j] as usize]).abs();
            modulus = modulus.max(du / d);
        }
    }
    if u_cells.is_empty() {
        return Ok(LuzinReport {
            eps,
            u_cells,
            cap_u: zero_capacity_estimate(mask.h),
            modulus,
            metric_kind: MetricKind::Capacitary,
            budget_exceeded: false,
        });
    }
    let cap_u = set_capacity_cells(&ctx.config.domain, mask.h, &u_cells, params.refine)?;
    let budget_exceeded = cap_u.value > eps + cap_u.error_indicator;
    Ok(LuzinReport {
        eps,
        u_cells,
        cap_u,
        modulus,
        metric_kind: MetricKind::Capacitary,
        budget_exceeded,
    })
}

/// Deterministic farthest-point subsample of the interior cells.
pub fn farthest_point_probes(mask: &GridMask, n: usize) -> Vec<u32> {
    let interior: Vec<u32> = mask.interior_cells().map(|c| c as u32).collect();
    if interior.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut chosen = vec![interior[0]];
    let mut dist: Vec<f64> = interior
        .iter()
        .map(|&c| mask.center(c as usize).dist(mask.center(interior[0] as usize)))
        .collect();
    while chosen.len() < n.min(interior.len()) {
        let (best_idx, _) = interior
            .iter()
            .enumerate()
            .map(|(k, _)| (k, dist[k]))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap();
        let new = interior[best_idx];
        chosen.push(new);
        let np = mask.center(new as usize);
        for (k, &c) in interior.iter().enumerate() {
            dist[k] = dist[k].min(mask.center(c as usize).dist(np));
        }
    }
    chosen.sort_unstable();
    chosen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceVerdict {
    Consistent,
    Inconsistent,
}

/// Trace of a function along one boundary element.
#[derive(Debug, Clone)]
pub struct ElementTrace {
    pub member_traces: Vec<f64>,
    pub spread: f64,
    pub verdict: TraceVerdict,
    /// Set capacity of the neighborhood needed to excise the element.
    pub trapping_capacity: f64,
}

#[derive(Debug, Clone)]
pub struct TraceReport {
    pub rows: Vec<ElementTrace>,
    pub tol: f64,
}

/// Estimates the limit of u along each member sequence of each element.
/// Geometric sequences are extrapolated from the two deepest samples at
/// their declared ratio; others take the mean of the last three.
pub fn trace(
    u: &GridFunction,
    elements: &[BoundaryElementEstimate],
    ctx: &MetricContext,
    tol: f64,
) -> Result<TraceReport> {
    let mut rows = Vec::new();
    for el in elements {
        let mut member_traces = Vec::new();
        for seq in &el.sequences {
            let vals: Vec<f64> = seq
                .points
                .iter()
                .map(|&p| {
                    u.sample(p)
                        .ok_or(Error::PointNotInterior { x: p.x, y: p.y })
                })
                .collect::<Result<Vec<_>>>()?;
            let est = match (seq.geometric_ratio, vals.len()) {
                (Some(r), n) if n >= 2 && r > 1.0 => {
                    (r * vals[n - 1] - vals[n - 2]) / (r - 1.0)
                }
                (_, n) => {
                    let k = n.min(3);
                    vals[n - k..].iter().sum::<f64>() / k as f64
                }
            };
            member_traces.push(est);
        }
        let mut spread = 0.0f64;
        for i in 0..member_traces.len() {
            for j in i + 1..member_traces.len() {
                spread = spread.max((member_traces[i] - member_traces[j]).abs());
            }
        }
        let verdict = if spread <= tol {
            TraceVerdict::Consistent
        } else {
            TraceVerdict::Inconsistent
        };
        let trapping_capacity = trapping_capacity(el, ctx)?;
        rows.push(ElementTrace {
            member_traces,
            spread,
            verdict,
            trapping_capacity,
        });
    }
    Ok(TraceReport { rows, tol })
}

/// Capacity of the cells within twice the deepest points' distance to
/// the boundary: the neighborhood whose removal excises the element.
fn trapping_capacity(el: &BoundaryElementEstimate, ctx: &MetricContext) -> Result<f64> {
    let mask = ctx.fine_mask();
    let domain = &ctx.config.domain;
    let mut cells = Vec::new();
    for seq in &el.sequences {
        let deep = seq.deepest();
        let r_trap = 2.0 * domain.distance_to_boundary(deep).max(mask.h);
        let reach = (r_trap / mask.h).ceil() as i64 + 1;
        if let Some(c0) = mask.cell_of_point(deep) {
            let (i, j) = mask.coords(c0);
            for dj in -reach..=reach {
                for di in -reach..=reach {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= mask.nx as i64 || nj >= mask.ny as i64 {
                        continue;
                    }
                    let n = mask.idx(ni as usize, nj as usize);
                    if mask.label(n) == CellLabel::Interior
                        && mask.center(n).dist(deep) <= r_trap
                    {
                        cells.push(n as u32);
                    }
                }
            }
        }
    }
    let set = CellSet::from_vec(cells);
    if set.is_empty() {
        return Ok(0.0);
    }
    Ok(set_capacity_cells(domain, mask.h, &set, 0)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capmetric::MetricConfig;
    use crate::geometry::{PlateSpec, Region};

    fn unit_disk() -> DomainSpec {
        DomainSpec::Disk {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    #[test]
    fn coordinate_x_energy_is_area() {
        let u = make_function(&unit_disk(), FormulaTag::CoordinateX, 1.0 / 64.0).unwrap();
        let area = std::f64::consts::PI;
        let rel = (u.energy - area).abs() / area;
        assert!(rel < 0.03, "energy {} vs area {}", u.energy, area);
    }

    #[test]
    fn constant_energy_zero() {
        let mask = build_mask(&unit_disk(), 1.0 / 32.0).unwrap();
        let u = GridFunction::from_fn(mask, |_| 3.25);
        assert_eq!(u.energy, 0.0);
    }

    #[test]
    fn sqrt_singularity_accepted_radial_log_rejected() {
        let d = unit_disk();
        assert!(make_function(&d, FormulaTag::SqrtSingularity, 1.0 / 64.0).is_ok());
        match make_function(&d, FormulaTag::RadialLog, 1.0 / 64.0) {
            Err(Error::InfiniteEnergy { ratio }) => assert!(ratio > 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn energy_scaling_quadratic_exact() {
        let u = make_function(&unit_disk(), FormulaTag::CoordinateX, 1.0 / 32.0).unwrap();
        let v = u.scaled(2.0);
        assert_eq!(v.energy, 4.0 * u.energy);
    }

    #[test]
    fn weak_luzin_smooth_function_empty_set() {
        let u = make_function(&unit_disk(), FormulaTag::CoordinateX, 1.0 / 32.0).unwrap();
        let rep = weak_luzin(&u, &unit_disk(), 0.5, LuzinParams::default()).unwrap();
        assert!(rep.u_cells.is_empty());
        assert_eq!(rep.cap_u.value, 0.0);
        assert!(!rep.budget_exceeded);
        assert!(rep.modulus <= 1.0 + 1e-9);
    }

    #[test]
    fn weak_luzin_zero_budget_with_discontinuous_function() {
        let mask = build_mask(&unit_disk(), 1.0 / 32.0).unwrap();
        let step = GridFunction::from_fn(mask, |p| if p.x > 0.0 { 1.0 } else { 0.0 });
        let rep = weak_luzin(&step, &unit_disk(), 0.0, LuzinParams::default()).unwrap();
        assert!(rep.budget_exceeded);
        assert!(!rep.u_cells.is_empty());
    }

    #[test]
    fn weak_luzin_sqrt_singularity_localizes() {
        let d = unit_disk();
        let u = make_function(&d, FormulaTag::SqrtSingularity, 1.0 / 48.0).unwrap();
        let rep = weak_luzin(&u, &d, 10.0, LuzinParams::default()).unwrap();
        assert!(!rep.u_cells.is_empty());
        assert!(!rep.budget_exceeded, "cap_u = {}", rep.cap_u.value);
        // removed cells concentrate near the singular boundary point (1, 0)
        let z0 = d.sample_boundary_point();
        for c in rep.u_cells.iter() {
            let p = u.mask.center(c as usize);
            assert!(p.dist(z0) < 0.25, "removed cell far from singularity: {p:?}");
        }
    }

    #[test]
    fn strong_luzin_disk_succeeds_empty() {
        let d = unit_disk();
        let config = MetricConfig::new(
            d.clone(),
            PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.15),
            Region::Disk {
                center: Point::new(0.0, 0.0),
                radius: 0.3,
            },
            1.0 / 32.0,
        );
        let ctx = MetricContext::new(config).unwrap();
        let u = make_function(&d, FormulaTag::CoordinateX, 1.0 / 32.0).unwrap();
        let rep = strong_luzin(&u, &ctx, 0.5, 16, LuzinParams::default()).unwrap();
        assert!(rep.u_cells.is_empty(), "{} cells removed", rep.u_cells.len());
        assert!(!rep.budget_exceeded);
    }

    #[test]
    fn strong_luzin_comb_removes_deep_channel_cells() {
        // comb with two tooth levels, resolvable at a cheap resolution
        let levels = 2u32;
        let d = DomainSpec::Comb { levels };
        let h = 1.0 / 32.0;
        let mut config = MetricConfig::new(
            d.clone(),
            PlateSpec::inner_disk(Point::new(0.0, 0.85), 0.06),
            Region::Disk {
                center: Point::new(0.0, 0.85),
                radius: 0.13,
            },
            h,
        );
        config.coarse_factor = 1;
        config.budget = crate::capmetric::MetricBudget {
            curve_vertices: 13,
            perturb_iters: 8,
            max_accepts: 4,
        };
        let ctx = MetricContext::new(config).unwrap();
        let u = make_function(&d, FormulaTag::CoordinateX, h).unwrap();
        let rep = strong_luzin(&u, &ctx, 1e9, 10, LuzinParams::default()).unwrap();
        assert!(!rep.u_cells.is_empty(), "deep x-separated cells must be removed");
        // removed cells include deep-channel cells (below the lowest tooth)
        let deep_y = 3f64.powi(-(levels as i32));
        let has_deep = rep
            .u_cells
            .iter()
            .any(|c| u.mask.center(c as usize).y < deep_y);
        assert!(has_deep, "no deep-channel cell removed");
        assert!(rep.modulus.is_finite());
    }

    #[test]
    fn trace_is_linear_on_consistent_elements() {
        let d = unit_disk();
        let h = 1.0 / 32.0;
        let config = MetricConfig::new(
            d.clone(),
            PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.15),
            Region::Disk {
                center: Point::new(0.0, 0.0),
                radius: 0.3,
            },
            h,
        );
        let ctx = MetricContext::new(config).unwrap();
        let u = make_function(&d, FormulaTag::CoordinateX, h).unwrap();
        let v = make_function(&d, FormulaTag::SqrtSingularity, h).unwrap();
        let w = u.add(&v);
        let seq = crate::boundary::BoundarySequence::radial_in_disk(
            Point::new(0.0, 0.0),
            1.0,
            2.2,
            4,
        );
        let el = crate::boundary::BoundaryElementEstimate::from_parts(vec![seq], 1.0).unwrap();
        let tu = trace(&u, std::slice::from_ref(&el), &ctx, 5e-2).unwrap();
        let tv = trace(&v, std::slice::from_ref(&el), &ctx, 5e-2).unwrap();
        let tw = trace(&w, std::slice::from_ref(&el), &ctx, 5e-2).unwrap();
        let sum = tu.rows[0].member_traces[0] + tv.rows[0].member_traces[0];
        assert!(
            (tw.rows[0].member_traces[0] - sum).abs() < 1e-9,
            "{} vs {}",
            tw.rows[0].member_traces[0],
            sum
        );
    }

    #[test]
    fn farthest_point_probes_deterministic_and_spread() {
        let mask = build_mask(&unit_disk(), 1.0 / 32.0).unwrap();
        let a = farthest_point_probes(&mask, 12);
        let b = farthest_point_probes(&mask, 12);
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
    }
}
