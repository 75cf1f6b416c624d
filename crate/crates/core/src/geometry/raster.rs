use super::{
    CellLabel, GridMask, PlatePrimitive, PlateRole, PlateSpec, Point, Polyline, Region,
};
use crate::error::{Error, Result};

/// A sorted, deduplicated set of cell indices of one mask.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct CellSet {
    cells: Vec<u32>,
}

impl CellSet {
    pub fn from_vec(mut cells: Vec<u32>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        CellSet { cells }
    }

    pub fn empty() -> Self {
        CellSet { cells: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: u32) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.cells.iter().copied()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.cells
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.cells);
        v.extend_from_slice(&other.cells);
        CellSet::from_vec(v)
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let v = self
            .cells
            .iter()
            .copied()
            .filter(|c| other.contains(*c))
            .collect();
        CellSet { cells: v }
    }

    pub fn overlap_count(&self, other: &CellSet) -> usize {
        self.cells.iter().filter(|c| other.contains(**c)).count()
    }

    /// 8-connectivity of the set on the given mask.
    pub fn is_grid_connected(&self, mask: &GridMask) -> bool {
        self.component_count(mask) <= 1
    }

    pub fn component_count(&self, mask: &GridMask) -> usize {
        if self.cells.is_empty() {
            return 0;
        }
        let mut seen = vec![false; self.cells.len()];
        let mut components = 0usize;
        for start in 0..self.cells.len() {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                let (i, j) = mask.coords(self.cells[k] as usize);
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= mask.nx as i64 || nj >= mask.ny as i64 {
                            continue;
                        }
                        let ncell = mask.idx(ni as usize, nj as usize) as u32;
                        if let Ok(pos) = self.cells.binary_search(&ncell) {
                            if !seen[pos] {
                                seen[pos] = true;
                                stack.push(pos);
                            }
                        }
                    }
                }
            }
        }
        components
    }

    /// Children of every cell on a mask refined by an integer factor,
    /// clipped to cells that participate there. Lets capacity estimates of
    /// cell sets be refined consistently.
    pub fn refine_to(&self, coarse: &GridMask, fine: &GridMask) -> CellSet {
        let factor = (coarse.h / fine.h).round() as i64;
        let mut out = Vec::new();
        for c in self.iter() {
            let (i, j) = coarse.coords(c as usize);
            let base = coarse.center(coarse.idx(i, j));
            let corner = Point::new(base.x - coarse.h / 2.0, base.y - coarse.h / 2.0);
            for dj in 0..factor {
                for di in 0..factor {
                    let p = Point::new(
                        corner.x + (di as f64 + 0.5) * fine.h,
                        corner.y + (dj as f64 + 0.5) * fine.h,
                    );
                    if let Some(fc) = fine.cell_of_point(p) {
                        if fine.is_interior(fc) || fine.label(fc) == CellLabel::Boundary {
                            out.push(fc as u32);
                        }
                    }
                }
            }
        }
        CellSet::from_vec(out)
    }
}

/// Covering cells of a segment under half-open cell semantics: the cells
/// visited by dense sampling along the segment (arclength step h/8, both
/// endpoints included). Cells tile the plane as [x_i, x_{i+1}) squares, so
/// a segment running exactly along a grid line lands in exactly one row.
/// Returns false when a sample falls off the grid entirely.
fn covering_cells_of_segment(mask: &GridMask, seg: super::Segment, out: &mut Vec<u32>) -> bool {
    let len = seg.length();
    let steps = ((len / (mask.h / 8.0)).ceil() as usize).max(1);
    let mut ok = true;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let p = Point::new(
            seg.a.x + t * (seg.b.x - seg.a.x),
            seg.a.y + t * (seg.b.y - seg.a.y),
        );
        match mask.cell_of_point(p) {
            Some(c) => out.push(c as u32),
            None => ok = false,
        }
    }
    ok
}

fn covering_cells_of_disk(mask: &GridMask, center: Point, radius: f64, out: &mut Vec<u32>) {
    let i0 = (((center.x - radius - mask.origin.x) / mask.h).floor() as i64 - 1).max(0) as usize;
    let i1 = ((((center.x + radius - mask.origin.x) / mask.h).ceil() as i64) + 1)
        .min(mask.nx as i64 - 1) as usize;
    let j0 = (((center.y - radius - mask.origin.y) / mask.h).floor() as i64 - 1).max(0) as usize;
    let j1 = ((((center.y + radius - mask.origin.y) / mask.h).ceil() as i64) + 1)
        .min(mask.ny as i64 - 1) as usize;
    let half = mask.h / 2.0;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let c = mask.idx(i, j);
            let ctr = mask.center(c);
            // closest point of the closed square to the disk center
            let qx = center.x.clamp(ctr.x - half, ctr.x + half);
            let qy = center.y.clamp(ctr.y - half, ctr.y + half);
            if Point::new(qx, qy).dist(center) <= radius {
                out.push(c as u32);
            }
        }
    }
}

/// Rasterizes a plate onto the mask.
///
/// Inner continua return the cells whose closed square meets the plate
/// geometry; the result must be nonempty, all interior, and grid-connected.
/// Boundary plates return every boundary-labeled cell.
pub fn rasterize_plate(plate: &PlateSpec, mask: &GridMask) -> Result<CellSet> {
    plate.validate()?;
    match plate.role {
        PlateRole::BoundaryPlate => {
            let cells: Vec<u32> = mask.boundary_cells().map(|c| c as u32).collect();
            if cells.is_empty() {
                return Err(Error::EmptyPlate);
            }
            Ok(CellSet::from_vec(cells))
        }
        PlateRole::InnerContinuum => {
            let mut out = Vec::new();
            for prim in &plate.geometry {
                match prim {
                    PlatePrimitive::Disk { center, radius } => {
                        if *radius == 0.0 {
                            if let Some(c) = mask.cell_of_point(*center) {
                                out.push(c as u32);
                            }
                        } else {
                            covering_cells_of_disk(mask, *center, *radius, &mut out);
                        }
                    }
                    PlatePrimitive::Segment { a, b } => {
                        covering_cells_of_segment(mask, super::Segment::new(*a, *b), &mut out);
                    }
                    PlatePrimitive::Arc { .. } => {
                        for seg in prim.approx_segments(mask.h / 8.0) {
                            covering_cells_of_segment(mask, seg, &mut out);
                        }
                    }
                }
            }
            let set = CellSet::from_vec(out);
            if set.is_empty() {
                return Err(Error::EmptyPlate);
            }
            let outside = set
                .iter()
                .filter(|&c| mask.label(c as usize) != CellLabel::Interior)
                .count();
            if outside > 0 {
                return Err(Error::PlateOutsideDomain { outside });
            }
            let components = set.component_count(mask);
            if components > 1 {
                return Err(Error::PlateDisconnected { components });
            }
            Ok(set)
        }
    }
}

/// Rasterizes a curve and partitions its covering cells by membership in
/// the region `V` (cell centers decide membership).
///
/// The curve may touch boundary cells — it lives in the closed domain —
/// but any exterior covering cell is an error.
pub fn rasterize_curve(
    curve: &Polyline,
    mask: &GridMask,
    region: &Region,
) -> Result<(CellSet, CellSet)> {
    let mut out = Vec::new();
    let mut on_grid = true;
    if curve.is_degenerate() {
        match mask.cell_of_point(curve.first()) {
            Some(c) => out.push(c as u32),
            None => on_grid = false,
        }
    } else {
        for seg in curve.segments() {
            on_grid &= covering_cells_of_segment(mask, seg, &mut out);
        }
    }
    if !on_grid {
        return Err(Error::CurveEscapesDomain { outside: 1 });
    }
    let all = CellSet::from_vec(out);
    let outside = all
        .iter()
        .filter(|&c| mask.label(c as usize) == CellLabel::Exterior)
        .count();
    if outside > 0 {
        return Err(Error::CurveEscapesDomain { outside });
    }
    let mut inside_v = Vec::new();
    let mut outside_v = Vec::new();
    for c in all.iter() {
        if region.contains(mask.center(c as usize)) {
            inside_v.push(c);
        } else {
            outside_v.push(c);
        }
    }
    Ok((CellSet::from_vec(inside_v), CellSet::from_vec(outside_v)))
}

/// Stamps plate labels onto a mask, checking disjointness and placement.
pub fn apply_plates(mask: &GridMask, plate0: &CellSet, plate1: &CellSet) -> Result<GridMask> {
    let overlap = plate0.overlap_count(plate1);
    if overlap > 0 {
        return Err(Error::PlatesOverlap { overlap });
    }
    let mut stamped = mask.clone();
    for (set, label) in [(plate0, CellLabel::Plate0), (plate1, CellLabel::Plate1)] {
        for c in set.iter() {
            let cur = stamped.label(c as usize);
            if cur == CellLabel::Exterior {
                return Err(Error::PlateOutsideDomain { outside: 1 });
            }
            stamped.labels_mut()[c as usize] = label;
        }
    }
    let n = stamped
        .labels()
        .iter()
        .filter(|&&l| l == CellLabel::Interior)
        .count();
    stamped.set_interior_count(n);
    Ok(stamped)
}
