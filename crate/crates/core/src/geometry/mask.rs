use super::{DomainSpec, Point, Segment};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Classification of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    Exterior,
    Boundary,
    Interior,
    Plate0,
    Plate1,
}

/// Uniform-grid rasterization of a domain at cell size `h`.
///
/// `origin` is the lower-left corner of cell (0, 0); the center of cell
/// (i, j) sits at origin + ((i+1/2)h, (j+1/2)h). Interior cells form a
/// single 4-connected component and every boundary cell is 4-adjacent to
/// an interior cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    pub h: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    labels: Vec<CellLabel>,
    interior_count: usize,
}

impl GridMask {
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    pub fn label(&self, cell: usize) -> CellLabel {
        self.labels[cell]
    }

    pub fn labels(&self) -> &[CellLabel] {
        &self.labels
    }

    pub(crate) fn labels_mut(&mut self) -> &mut [CellLabel] {
        &mut self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub(crate) fn set_interior_count(&mut self, n: usize) {
        self.interior_count = n;
    }

    pub fn center(&self, cell: usize) -> Point {
        let (i, j) = self.coords(cell);
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Cell containing the point, if it falls on the grid.
    pub fn cell_of_point(&self, p: Point) -> Option<usize> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        Some(self.idx(i, j))
    }

    /// Face neighbors in fixed (-x, +x, -y, +y) order.
    pub fn neighbors4(&self, cell: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(cell);
        [
            (i > 0).then(|| cell - 1),
            (i + 1 < self.nx).then(|| cell + 1),
            (j > 0).then(|| cell - self.nx),
            (j + 1 < self.ny).then(|| cell + self.nx),
        ]
    }

    pub fn is_interior(&self, cell: usize) -> bool {
        matches!(
            self.labels[cell],
            CellLabel::Interior | CellLabel::Plate0 | CellLabel::Plate1
        )
    }

    /// True for cells that take part in the discrete Dirichlet energy:
    /// everything except exterior and unconstrained boundary padding.
    pub fn participates(&self, cell: usize) -> bool {
        self.is_interior(cell)
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(move |&c| self.is_interior(c))
    }

    pub fn boundary_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.labels.len()).filter(move |&c| self.labels[c] == CellLabel::Boundary)
    }

    /// Area covered by interior cells.
    pub fn interior_area(&self) -> f64 {
        self.interior_count as f64 * self.h * self.h
    }

    /// Integer hop count from every cell to the nearest non-interior cell,
    /// saturating at `cap`. Used to pick near-boundary probe cells.
    pub fn hops_to_wall(&self, cap: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.labels.len()];
        let mut queue = std::collections::VecDeque::new();
        for c in 0..self.labels.len() {
            if !self.is_interior(c) {
                dist[c] = 0;
                queue.push_back(c);
            }
        }
        while let Some(c) = queue.pop_front() {
            if dist[c] >= cap {
                continue;
            }
            for n in self.neighbors4(c).into_iter().flatten() {
                if dist[n] == u32::MAX {
                    dist[n] = dist[c] + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

/// Rasterizes a domain at resolution `h`.
///
/// Fails with `UnresolvedFeature` when the thinnest channel of the domain
/// spans fewer than 3 cells. Classification is deterministic and exact up
/// to one cell of the true boundary: a cell is interior when its center
/// lies in the open set and its closed square avoids every excluded
/// one-dimensional boundary feature.
pub fn build_mask(domain: &DomainSpec, h: f64) -> Result<GridMask> {
    domain.validate()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("resolution", "h must be positive"));
    }
    if let Some(w) = domain.min_feature_width() {
        if w < 3.0 * h - 1e-12 {
            return Err(Error::UnresolvedFeature {
                feature: "channel",
                span: w,
                h,
            });
        }
    }
    let bb = domain.bounding_box();
    let origin = Point::new(bb.min.x - h, bb.min.y - h);
    let nx = ((bb.max.x - bb.min.x) / h).ceil() as usize + 3;
    let ny = ((bb.max.y - bb.min.y) / h).ceil() as usize + 3;
    let excluded = domain.excluded_segments();
    // Slightly inflated squares so a feature sitting exactly on a grid
    // line still registers on both sides instead of vanishing in rounding.
    let half = h / 2.0 * (1.0 + 1e-9);

    let mut labels = vec![CellLabel::Exterior; nx * ny];
    // Polygonal outlines are generated once, not per cell.
    let poly_cache: Option<Vec<Point>> = match domain {
        DomainSpec::Polygon { vertices } => Some(vertices.clone()),
        DomainSpec::Snowflake { iterations } => Some(super::koch_snowflake(*iterations)),
        _ => None,
    };
    let inside = |p: Point| match &poly_cache {
        Some(poly) => super::point_in_polygon(p, poly),
        None => domain.contains(p),
    };
    let seg_hits = |cx: f64, cy: f64| -> bool {
        excluded
            .iter()
            .any(|s: &Segment| s.intersects_square(cx, cy, half))
    };
    for j in 0..ny {
        let cy = origin.y + (j as f64 + 0.5) * h;
        for i in 0..nx {
            let cx = origin.x + (i as f64 + 0.5) * h;
            let p = Point::new(cx, cy);
            if inside(p) && !(!excluded.is_empty() && seg_hits(cx, cy)) {
                labels[j * nx + i] = CellLabel::Interior;
            }
        }
    }

    let mut mask = GridMask {
        h,
        origin,
        nx,
        ny,
        labels,
        interior_count: 0,
    };

    keep_largest_interior_component(&mut mask);

    // Boundary layer: non-interior cells face-adjacent to the interior.
    let mut boundary = Vec::new();
    for c in 0..mask.len() {
        if mask.labels[c] == CellLabel::Exterior {
            let adj = mask
                .neighbors4(c)
                .into_iter()
                .flatten()
                .any(|n| mask.labels[n] == CellLabel::Interior);
            if adj {
                boundary.push(c);
            }
        }
    }
    for c in boundary {
        mask.labels[c] = CellLabel::Boundary;
    }
    mask.interior_count = mask
        .labels
        .iter()
        .filter(|&&l| l == CellLabel::Interior)
        .count();
    if mask.interior_count == 0 {
        return Err(Error::invalid(
            "domain",
            "no interior cells at this resolution",
        ));
    }
    Ok(mask)
}

fn keep_largest_interior_component(mask: &mut GridMask) {
    let n = mask.len();
    let mut comp = vec![u32::MAX; n];
    let mut sizes: Vec<(usize, usize)> = Vec::new(); // (size, seed cell)
    let mut stack = Vec::new();
    let mut next = 0u32;
    for start in 0..n {
        if mask.labels[start] != CellLabel::Interior || comp[start] != u32::MAX {
            continue;
        }
        let id = next;
        next += 1;
        let mut size = 0usize;
        stack.push(start);
        comp[start] = id;
        while let Some(c) = stack.pop() {
            size += 1;
            for nb in mask.neighbors4(c).into_iter().flatten() {
                if mask.labels[nb] == CellLabel::Interior && comp[nb] == u32::MAX {
                    comp[nb] = id;
                    stack.push(nb);
                }
            }
        }
        sizes.push((size, start));
    }
    if sizes.len() <= 1 {
        return;
    }
    // Ties broken toward the lowest seed index for determinism.
    let keep = sizes
        .iter()
        .enumerate()
        .max_by(|(ia, (sa, seeda)), (ib, (sb, seedb))| {
            sa.cmp(sb)
                .then(seedb.cmp(seeda))
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i as u32)
        .unwrap();
    for c in 0..n {
        if mask.labels[c] == CellLabel::Interior && comp[c] != keep {
            mask.labels[c] = CellLabel::Exterior;
        }
    }
}
