//! Sparse linear solves for the discrete mixed Dirichlet–Neumann Laplace
//! problems behind every capacity evaluation.
//!
//! The 5-point Laplacian runs over interior cells. Cells of the two
//! constraint sets are held at fixed values; unconstrained boundary cells
//! act as mirror ghosts (zero normal derivative), which keeps the system
//! the exact Euler–Lagrange equation of the discrete Dirichlet energy.

use crate::error::{Error, Result};
use crate::geometry::{CellLabel, CellSet, GridMask};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DENSE_ORACLE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub wall_time: f64,
}

/// Assembled 5-point system over the free cells of a mask.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    n: usize,
    cell_of_free: Vec<u32>,
    free_of_cell: Vec<i32>,
    diag: Vec<f64>,
    nbrs: Vec<[i32; 4]>,
    rhs: Vec<f64>,
    v0: f64,
    v1: f64,
    p0: CellSet,
    p1: CellSet,
    ncells: usize,
    grid_side: usize,
}

impl LinearSystem {
    /// Builds the system for the condenser (p0 at value `v0`, p1 at `v1`).
    pub fn from_mask(
        mask: &GridMask,
        p0: &CellSet,
        p1: &CellSet,
        v0: f64,
        v1: f64,
    ) -> Result<Self> {
        let overlap = p0.overlap_count(p1);
        if overlap > 0 {
            return Err(Error::PlatesOverlap { overlap });
        }
        if p0.is_empty() && p1.is_empty() {
            return Err(Error::Singular);
        }
        for set in [p0, p1] {
            for c in set.iter() {
                if mask.label(c as usize) == CellLabel::Exterior {
                    return Err(Error::PlateOutsideDomain { outside: 1 });
                }
            }
        }

        let ncells = mask.len();
        let mut free_of_cell = vec![-1i32; ncells];
        let mut cell_of_free = Vec::new();
        for c in 0..ncells {
            if mask.label(c) == CellLabel::Interior
                && !p0.contains(c as u32)
                && !p1.contains(c as u32)
            {
                free_of_cell[c] = cell_of_free.len() as i32;
                cell_of_free.push(c as u32);
            }
        }
        let n = cell_of_free.len();
        let mut diag = vec![0.0f64; n];
        let mut rhs = vec![0.0f64; n];
        let mut nbrs = vec![[-1i32; 4]; n];
        for (fi, &cell) in cell_of_free.iter().enumerate() {
            for (k, nb) in mask.neighbors4(cell as usize).into_iter().enumerate() {
                let Some(nb) = nb else { continue };
                let nb32 = nb as u32;
                if p0.contains(nb32) {
                    diag[fi] += 1.0;
                    rhs[fi] += v0;
                } else if p1.contains(nb32) {
                    diag[fi] += 1.0;
                    rhs[fi] += v1;
                } else if mask.label(nb) == CellLabel::Interior {
                    diag[fi] += 1.0;
                    nbrs[fi][k] = free_of_cell[nb];
                }
                // unconstrained boundary / exterior: mirror ghost, no term
            }
        }

        let sys = LinearSystem {
            n,
            cell_of_free,
            free_of_cell,
            diag,
            nbrs,
            rhs,
            v0,
            v1,
            p0: p0.clone(),
            p1: p1.clone(),
            ncells,
            grid_side: mask.nx.max(mask.ny),
        };
        sys.check_nonsingular()?;
        Ok(sys)
    }

    pub fn n_free(&self) -> usize {
        self.n
    }

    /// Every free component must see at least one constrained cell.
    fn check_nonsingular(&self) -> Result<()> {
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut component = Vec::new();
            let mut anchored = false;
            while let Some(i) = stack.pop() {
                component.push(i);
                if self.diag[i] > self.count_free_nbrs(i) as f64 {
                    anchored = true;
                }
                for &nb in &self.nbrs[i] {
                    if nb >= 0 && !seen[nb as usize] {
                        seen[nb as usize] = true;
                        stack.push(nb as usize);
                    }
                }
            }
            if !anchored {
                return Err(Error::Singular);
            }
        }
        Ok(())
    }

    fn count_free_nbrs(&self, i: usize) -> usize {
        self.nbrs[i].iter().filter(|&&x| x >= 0).count()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = self.diag[i] * x[i];
            for &nb in &self.nbrs[i] {
                if nb >= 0 {
                    acc -= x[nb as usize];
                }
            }
            y[i] = acc;
        }
    }

    /// Preconditioned conjugate gradient with diagonal preconditioning.
    ///
    /// Returns the full-grid field (NaN on cells that do not participate)
    /// and the solve statistics. The field satisfies the constraints
    /// exactly and the interior equations to relative residual `tol`.
    pub fn solve(&self, tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::invalid("tolerance", "tol must lie in (0, 1)"));
        }
        let t0 = std::time::Instant::now();
        let n = self.n;
        if n == 0 {
            return Ok((
                self.assemble_full(&[]),
                SolveReport {
                    iterations: 0,
                    residual: 0.0,
                    wall_time: t0.elapsed().as_secs_f64(),
                },
            ));
        }
        let b = &self.rhs;
        let bnorm = norm2(b);
        // Start from the mean constraint value; an all-equal constraint
        // field is then already converged.
        let x_init = 0.5 * (self.v0 + self.v1);
        let mut x = vec![x_init; n];
        let mut r = vec![0.0; n];
        self.apply(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let target = if bnorm > 0.0 { tol * bnorm } else { tol };
        let mut rnorm = norm2(&r);
        if bnorm == 0.0 {
            // all constraints zero: the zero field is the exact solution
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok((
                self.assemble_full(&x),
                SolveReport {
                    iterations: 0,
                    residual: 0.0,
                    wall_time: t0.elapsed().as_secs_f64(),
                },
            ));
        }
        let max_iter = 30 * self.grid_side + 2000;
        let mut iterations = 0usize;
        if rnorm > target {
            let mut z: Vec<f64> = (0..n).map(|i| r[i] / self.diag[i]).collect();
            let mut p = z.clone();
            let mut q = vec![0.0; n];
            let mut rz = dot(&r, &z);
            for it in 0..max_iter {
                self.apply(&p, &mut q);
                let pq = dot(&p, &q);
                let alpha = rz / pq;
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * q[i];
                }
                rnorm = norm2(&r);
                iterations = it + 1;
                if rnorm <= target {
                    break;
                }
                for i in 0..n {
                    z[i] = r[i] / self.diag[i];
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
                rz = rz_new;
            }
            if rnorm > target {
                return Err(Error::NoConvergence {
                    max_iterations: max_iter,
                    residual: rnorm / bnorm,
                    best: x,
                });
            }
        }
        let report = SolveReport {
            iterations,
            residual: rnorm / bnorm,
            wall_time: t0.elapsed().as_secs_f64(),
        };
        let full = self.assemble_full(&x);
        debug_assert!(self.max_principle_ok(&x));
        Ok((full, report))
    }

    // Genuine assembly bugs break this by O(1); iterative error on badly
    // conditioned channel geometries can leave excursions above solver
    // tolerance, hence the loose slack.
    fn max_principle_ok(&self, x: &[f64]) -> bool {
        let span = (self.v1 - self.v0).abs().max(1.0);
        let lo = self.v0.min(self.v1) - 1e-4 * span;
        let hi = self.v0.max(self.v1) + 1e-4 * span;
        x.iter().all(|&v| v >= lo && v <= hi)
    }

    /// Direct banded-Cholesky reference solve for systems of at most
    /// `DENSE_ORACLE_CAP` free cells; independent of the iterative path.
    pub fn dense_oracle(&self) -> Result<Vec<f64>> {
        if self.n > DENSE_ORACLE_CAP {
            return Err(Error::TooLarge {
                n: self.n,
                cap: DENSE_ORACLE_CAP,
            });
        }
        let n = self.n;
        if n == 0 {
            return Ok(self.assemble_full(&[]));
        }
        let mut bw = 0usize;
        for i in 0..n {
            for &nb in &self.nbrs[i] {
                if nb >= 0 {
                    bw = bw.max(i.abs_diff(nb as usize));
                }
            }
        }
        let w = bw + 1;
        // lower band, band[i*w + (j - i + bw)] = A[i][j] for j in [i-bw, i]
        let mut band = vec![0.0f64; n * w];
        for i in 0..n {
            band[i * w + bw] = self.diag[i];
            for &nb in &self.nbrs[i] {
                if nb >= 0 && (nb as usize) < i {
                    let j = nb as usize;
                    band[i * w + (j + bw - i)] = -1.0;
                }
            }
        }
        // in-place Cholesky
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = band[i * w + (j + bw - i)];
                for k in k0..j {
                    sum -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Singular);
                    }
                    band[i * w + bw] = sum.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = sum / band[j * w + bw];
                }
            }
        }
        // forward substitution L y = b
        let mut y = self.rhs.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            let mut sum = y[i];
            for j in j0..i {
                sum -= band[i * w + (j + bw - i)] * y[j];
            }
            y[i] = sum / band[i * w + bw];
        }
        // back substitution L^T x = y
        let mut x = y;
        for i in (0..n).rev() {
            let mut sum = x[i];
            let jmax = (i + bw).min(n - 1);
            for j in i + 1..=jmax {
                sum -= band[j * w + (i + bw - j)] * x[j];
            }
            x[i] = sum / band[i * w + bw];
        }
        Ok(self.assemble_full(&x))
    }

    /// Expands free-cell values to the full grid; constraint cells take
    /// their fixed values, everything else is NaN.
    pub fn assemble_full(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![f64::NAN; self.ncells];
        for c in self.p0.iter() {
            full[c as usize] = self.v0;
        }
        for c in self.p1.iter() {
            full[c as usize] = self.v1;
        }
        for (fi, &cell) in self.cell_of_free.iter().enumerate() {
            full[cell as usize] = x[fi];
        }
        full
    }

    pub fn free_values<'a>(&self, full: &'a [f64]) -> Vec<f64> {
        self.cell_of_free
            .iter()
            .map(|&c| full[c as usize])
            .collect()
    }

    pub fn free_of_cell(&self) -> &[i32] {
        &self.free_of_cell
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Discrete Dirichlet energy of a full-grid field: sum of squared
/// differences over grid edges whose two cells both participate.
/// With unit constraint values this equals the integral of |grad u|^2.
pub fn dirichlet_energy(nx: usize, ny: usize, full: &[f64]) -> f64 {
    let mut e = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            let u = full[c];
            if u.is_nan() {
                continue;
            }
            if i + 1 < nx {
                let v = full[c + 1];
                if !v.is_nan() {
                    e += (u - v) * (u - v);
                }
            }
            if j + 1 < ny {
                let v = full[c + nx];
                if !v.is_nan() {
                    e += (u - v) * (u - v);
                }
            }
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_mask, rasterize_plate, DomainSpec, PlateSpec, Point,
    };

    fn disk_mask(h: f64) -> GridMask {
        build_mask(
            &DomainSpec::Disk {
                center: Point::new(0.0, 0.0),
                radius: 1.0,
            },
            h,
        )
        .unwrap()
    }

    #[test]
    fn strip_gives_linear_ramp() {
        let d = DomainSpec::Rectangle {
            min: Point::new(0.0, 0.0),
            max: Point::new(1.0, 0.25),
        };
        let mask = build_mask(&d, 0.025).unwrap();
        // full-height plate columns so the problem is genuinely 1-D
        let p0 = rasterize_plate(
            &PlateSpec::inner_segment(Point::new(0.05, 0.0126), Point::new(0.05, 0.2374)),
            &mask,
        )
        .unwrap();
        let p1 = rasterize_plate(
            &PlateSpec::inner_segment(Point::new(0.95, 0.0126), Point::new(0.95, 0.2374)),
            &mask,
        )
        .unwrap();
        let sys = LinearSystem::from_mask(&mask, &p0, &p1, 0.0, 1.0).unwrap();
        let (full, report) = sys.solve(1e-10).unwrap();
        assert!(report.residual <= 1e-10);
        // between the plates the solution is linear in x
        // probe at cell centers so the columns are exactly equally spaced
        let probe = |x: f64| {
            let c = mask.cell_of_point(Point::new(x, 0.1375)).unwrap();
            full[c]
        };
        let (u1, u2, u3) = (probe(0.3125), probe(0.5125), probe(0.7125));
        assert!(
            (u2 - 0.5 * (u1 + u3)).abs() < 1e-8,
            "not linear: {u1} {u2} {u3}"
        );
        assert!(u1 < u2 && u2 < u3);
    }

    #[test]
    fn constant_constraints_zero_iterations() {
        let mask = disk_mask(0.05);
        let p0 = rasterize_plate(&PlateSpec::inner_disk(Point::new(-0.4, 0.0), 0.15), &mask)
            .unwrap();
        let p1 =
            rasterize_plate(&PlateSpec::inner_disk(Point::new(0.4, 0.0), 0.15), &mask).unwrap();
        let sys = LinearSystem::from_mask(&mask, &p0, &p1, 1.0, 1.0).unwrap();
        let (full, report) = sys.solve(1e-8).unwrap();
        assert_eq!(report.iterations, 0);
        for v in full.iter().filter(|v| !v.is_nan()) {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn iterative_matches_dense_oracle() {
        let mask = disk_mask(1.0 / 8.0); // 16x16-ish grid
        let p0 = rasterize_plate(&PlateSpec::boundary(), &mask).unwrap();
        let p1 =
            rasterize_plate(&PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.2), &mask).unwrap();
        let sys = LinearSystem::from_mask(&mask, &p0, &p1, 0.0, 1.0).unwrap();
        assert!(sys.n_free() <= DENSE_ORACLE_CAP);
        let (it, _) = sys.solve(1e-12).unwrap();
        let dir = sys.dense_oracle().unwrap();
        let max_diff = it
            .iter()
            .zip(&dir)
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff <= 1e-8, "max diff {max_diff}");
    }

    #[test]
    fn no_constraints_rejected_as_singular() {
        let mask = disk_mask(0.1);
        let empty = CellSet::empty();
        match LinearSystem::from_mask(&mask, &empty, &empty, 0.0, 1.0) {
            Err(Error::Singular) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_free_cell_is_neighbor_average() {
        let mask = disk_mask(0.05);
        // constrain everything except one chosen interior cell
        let hole = mask.cell_of_point(Point::new(0.0, 0.0)).unwrap() as u32;
        let mut p0 = Vec::new();
        let mut p1 = Vec::new();
        for c in mask.interior_cells() {
            let c = c as u32;
            if c == hole {
                continue;
            }
            let (i, _) = mask.coords(c as usize);
            if i % 2 == 0 {
                p0.push(c);
            } else {
                p1.push(c);
            }
        }
        let p0 = CellSet::from_vec(p0);
        let p1 = CellSet::from_vec(p1);
        let sys = LinearSystem::from_mask(&mask, &p0, &p1, 0.0, 1.0).unwrap();
        assert_eq!(sys.n_free(), 1);
        let (full, _) = sys.solve(1e-12).unwrap();
        let mut expect = 0.0;
        let mut cnt = 0.0;
        for nb in mask.neighbors4(hole as usize).into_iter().flatten() {
            if p1.contains(nb as u32) {
                expect += 1.0;
                cnt += 1.0;
            } else if p0.contains(nb as u32) {
                cnt += 1.0;
            }
        }
        expect /= cnt;
        assert!((full[hole as usize] - expect).abs() < 1e-10);
    }

    #[test]
    fn dense_oracle_cap_enforced() {
        let mask = disk_mask(1.0 / 64.0);
        let p0 = rasterize_plate(&PlateSpec::boundary(), &mask).unwrap();
        let p1 =
            rasterize_plate(&PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.1), &mask).unwrap();
        let sys = LinearSystem::from_mask(&mask, &p0, &p1, 0.0, 1.0).unwrap();
        assert!(sys.n_free() > DENSE_ORACLE_CAP);
        match sys.dense_oracle() {
            Err(Error::TooLarge { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn maximum_principle_and_reflection_symmetry() {
        let mask = disk_mask(1.0 / 24.0);
        let p0 = rasterize_plate(&PlateSpec::boundary(), &mask).unwrap();
        let p1 =
            rasterize_plate(&PlateSpec::inner_disk(Point::new(0.0, 0.0), 0.3), &mask).unwrap();
        let sys = LinearSystem::from_mask(&mask, &p0, &p1, 0.0, 1.0).unwrap();
        let (full, _) = sys.solve(1e-10).unwrap();
        let mut max_asym = 0.0f64;
        for c in mask.interior_cells() {
            let v = full[c];
            assert!(v >= -1e-9 && v <= 1.0 + 1e-9);
            let p = mask.center(c);
            if let Some(rc) = mask.cell_of_point(Point::new(-p.x, p.y)) {
                let rv = full[rc];
                if !rv.is_nan() {
                    max_asym = max_asym.max((v - rv).abs());
                }
            }
        }
        assert!(max_asym < 1e-6, "asymmetry {max_asym}");
    }
}
