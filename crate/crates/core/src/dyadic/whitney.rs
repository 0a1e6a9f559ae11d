//! Whitney decomposition of open sets given as unions of grid cells.
//!
//! Selection rule: maximal dyadic cubes `Q` with `diam(Q) <= dist(Q, F)`,
//! where `F` is the complement of the set. Maximality gives
//! `dist(Q, F) <= 4 diam(Q)`, since the parent fails the rule.

use serde::Serialize;

use super::DyadicCube;
use crate::error::{Error, Result};
use crate::gridfn::Grid;

/// An open set represented by the grid cells it contains.
#[derive(Clone, Debug)]
pub struct CellSet {
    grid: Grid,
    cells: Vec<bool>,
}

impl CellSet {
    pub fn new(grid: Grid, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::invalid("cell mask does not match the grid"));
        }
        if !grid.is_dyadic() {
            return Err(Error::invalid("Whitney decomposition needs a dyadic grid"));
        }
        Ok(CellSet { grid, cells })
    }

    pub fn from_fn(grid: Grid, inside: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let cells = grid.centers().map(|x| inside(&x)).collect();
        CellSet::new(grid, cells)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn volume(&self) -> f64 {
        self.cells.iter().filter(|&&c| c).count() as f64 * self.grid.cell_volume()
    }

    fn touches_boundary(&self) -> bool {
        let shape = self.grid.shape();
        self.cells.iter().enumerate().any(|(k, &c)| {
            c && self.grid.unflat(k).iter().zip(shape).any(|(&i, &s)| i == 0 || i + 1 == s)
        })
    }

    fn cell_box(&self, k: usize) -> Vec<(f64, f64)> {
        let h = self.grid.h();
        self.grid
            .unflat(k)
            .iter()
            .zip(self.grid.origin())
            .map(|(&i, &o)| (o + i as f64 * h, o + (i + 1) as f64 * h))
            .collect()
    }

    /// Local index range of cells meeting the closed box, clipped to the window.
    fn cells_near(&self, lo: &[f64], hi: &[f64], pad: f64) -> Option<(Vec<usize>, Vec<usize>)> {
        let h = self.grid.h();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for axis in 0..lo.len() {
            let o = self.grid.origin()[axis];
            let s = self.grid.shape()[axis] as i64;
            let first = (((lo[axis] - pad - o) / h).floor() as i64 - 1).max(0);
            let last = (((hi[axis] + pad - o) / h).ceil() as i64 + 1).min(s);
            if first >= last {
                return None;
            }
            a.push(first as usize);
            b.push(last as usize);
        }
        Some((a, b))
    }

    fn inside_window(&self, cube: &DyadicCube) -> bool {
        self.grid.contains_cube(cube)
    }

    /// True when some complement cell lies at distance `< r` from the cube.
    fn complement_within(&self, cube: &DyadicCube, r: f64) -> bool {
        let lo: Vec<f64> = (0..cube.dim()).map(|i| cube.lower(i)).collect();
        let hi: Vec<f64> = (0..cube.dim()).map(|i| cube.upper(i)).collect();
        let Some((a, b)) = self.cells_near(&lo, &hi, r) else { return false };
        let mut found = false;
        let la: Vec<i64> = a.iter().map(|&v| v as i64).collect();
        let lb: Vec<i64> = b.iter().map(|&v| v as i64).collect();
        crate::gridfn::for_each_cell(&la, &lb, |idx| {
            if found {
                return;
            }
            let k = self.grid.flat(idx);
            if !self.cells[k] && box_distance(&lo, &hi, &self.cell_box(k)) < r {
                found = true;
            }
        });
        found
    }

    fn meets_set(&self, cube: &DyadicCube) -> bool {
        let lo: Vec<f64> = (0..cube.dim()).map(|i| cube.lower(i)).collect();
        let hi: Vec<f64> = (0..cube.dim()).map(|i| cube.upper(i)).collect();
        let Some((a, b)) = self.cells_near(&lo, &hi, 0.0) else { return false };
        let la: Vec<i64> = a.iter().map(|&v| v as i64).collect();
        let lb: Vec<i64> = b.iter().map(|&v| v as i64).collect();
        let mut hit = false;
        crate::gridfn::for_each_cell(&la, &lb, |idx| {
            let k = self.grid.flat(idx);
            if !hit && self.cells[k] {
                let cell = self.cell_box(k);
                // open overlap of the half-open cube and the cell
                hit = (0..lo.len()).all(|i| lo[i] < cell[i].1 && cell[i].0 < hi[i]);
            }
        });
        hit
    }

    /// Exact distance from a closed box to the complement (cells outside the
    /// set, plus everything outside the window).
    pub fn distance_to_complement(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (k, &c) in self.cells.iter().enumerate() {
            if !c {
                best = best.min(box_distance(lo, hi, &self.cell_box(k)));
            }
        }
        for (axis, (wlo, whi)) in self.grid.bounds().into_iter().enumerate() {
            best = best.min((lo[axis] - wlo).max(0.0)).min((whi - hi[axis]).max(0.0));
        }
        best
    }
}

fn box_distance(lo: &[f64], hi: &[f64], other: &[(f64, f64)]) -> f64 {
    let mut sum = 0.0;
    for i in 0..lo.len() {
        let gap = (other[i].0 - hi[i]).max(lo[i] - other[i].1).max(0.0);
        sum += gap * gap;
    }
    sum.sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<DyadicCube>,
    /// Smallest side the selection was allowed to reach.
    pub min_side: f64,
}

/// Whitney cubes of the set, refined down to cubes of side `min_side`
/// (a power of two; defaults to the cell size).
pub fn whitney(set: &CellSet, min_side: Option<f64>) -> Result<WhitneyDecomposition> {
    if set.touches_boundary() {
        return Err(Error::invalid(
            "open set touches the window boundary; distance to the complement is undefined",
        ));
    }
    let grid = set.grid();
    let min_side = min_side.unwrap_or(grid.h());
    let (m, _) = crate::gridfn::frexp(min_side);
    if m != 0.5 || min_side > grid.h() {
        return Err(Error::invalid("minimum Whitney side must be a power of two not above h"));
    }
    let mut cubes = Vec::new();
    if !set.cells.iter().any(|&c| c) {
        return Ok(WhitneyDecomposition { cubes, min_side });
    }
    let g_cell = grid.cell_generation().expect("dyadic grid");
    let longest = *grid.shape().iter().max().unwrap();
    let g0 = g_cell - (usize::BITS - (longest - 1).leading_zeros()) as i32;
    let scale = 2f64.powi(g0);
    let bounds = grid.bounds();
    let lo_idx: Vec<i64> = bounds.iter().map(|b| (b.0 * scale).floor() as i64).collect();
    let hi_idx: Vec<i64> = bounds.iter().map(|b| (b.1 * scale).ceil() as i64).collect();
    let mut stack = Vec::new();
    crate::gridfn::for_each_cell(&vec![0; lo_idx.len()], &hi_idx.iter().zip(&lo_idx).map(|(h, l)| h - l).collect::<Vec<_>>(), |off| {
        let corner = off.iter().zip(&lo_idx).map(|(&o, &l)| l + o as i64).collect();
        stack.push(DyadicCube::new(g0, corner));
    });
    stack.reverse();
    while let Some(cube) = stack.pop() {
        if !set.meets_set(&cube) {
            continue;
        }
        if set.inside_window(&cube) && !set.complement_within(&cube, cube.diameter()) {
            cubes.push(cube);
            continue;
        }
        if cube.side() / 2.0 >= min_side {
            let mut kids = cube.children();
            kids.reverse();
            stack.extend(kids);
        }
    }
    cubes.sort();
    Ok(WhitneyDecomposition { cubes, min_side })
}

/// Post-hoc verification of the Whitney properties with measured constants.
#[derive(Clone, Debug, Serialize)]
pub struct WhitneyCheck {
    pub cube_count: usize,
    /// min and max of `dist(Q, F) / diam(Q)`; the target band is `[1, 4]`.
    pub min_distance_ratio: f64,
    pub max_distance_ratio: f64,
    /// Largest side ratio between touching cubes (target `<= 4`).
    pub max_neighbor_ratio: f64,
    /// Most cubes touching a single cube (target `<= 12^n`).
    pub max_touching: usize,
    pub disjoint: bool,
    pub inside_set: bool,
    /// Largest distance to the complement of an uncovered point of the set;
    /// must stay below `2 sqrt(n) min_side`.
    pub uncovered_max_distance: f64,
    pub covered_volume: f64,
    pub set_volume: f64,
}

impl WhitneyCheck {
    pub fn run(set: &CellSet, dec: &WhitneyDecomposition) -> WhitneyCheck {
        let grid = set.grid();
        let n = grid.dim();
        let cubes = &dec.cubes;
        let mut min_r = f64::INFINITY;
        let mut max_r: f64 = 0.0;
        for c in cubes {
            let lo: Vec<f64> = (0..n).map(|i| c.lower(i)).collect();
            let hi: Vec<f64> = (0..n).map(|i| c.upper(i)).collect();
            let r = set.distance_to_complement(&lo, &hi) / c.diameter();
            min_r = min_r.min(r);
            max_r = max_r.max(r);
        }
        let mut max_neighbor: f64 = 1.0;
        let mut max_touching = 0;
        for (i, a) in cubes.iter().enumerate() {
            let mut count = 0;
            for (j, b) in cubes.iter().enumerate() {
                if i != j && a.touches(b) {
                    count += 1;
                    max_neighbor = max_neighbor.max(a.side() / b.side());
                }
            }
            max_touching = max_touching.max(count);
        }
        // paint a sample lattice of spacing min_side / 2
        let step = dec.min_side;
        let per_cell = (grid.h() / step).round() as usize;
        let fine_shape: Vec<usize> = grid.shape().iter().map(|s| s * per_cell).collect();
        let fine = Grid::new(step, grid.origin().to_vec(), fine_shape).expect("refined grid");
        let mut paint = vec![0u32; fine.len()];
        let mut inside = true;
        for c in cubes {
            if !grid.contains_cube(c) {
                inside = false;
                continue;
            }
            let (lo, hi) = fine.cube_cells(c).expect("cube on the fine lattice");
            crate::gridfn::for_each_cell(&lo, &hi, |idx| {
                let k = fine.flat(idx);
                paint[k] += 1;
                let x = fine.center(k);
                let cell = grid.locate(&x).map(|i| grid.flat(&i));
                if cell.map_or(true, |cell| !set.cells[cell]) {
                    inside = false;
                }
            });
        }
        let disjoint = paint.iter().all(|&p| p <= 1);
        let mut uncovered: f64 = 0.0;
        for (k, &p) in paint.iter().enumerate() {
            if p == 0 {
                let x = fine.center(k);
                let cell = grid.flat(&grid.locate(&x).expect("inside window"));
                if set.cells[cell] {
                    uncovered = uncovered.max(set.distance_to_complement(&x, &x));
                }
            }
        }
        WhitneyCheck {
            cube_count: cubes.len(),
            min_distance_ratio: if cubes.is_empty() { 1.0 } else { min_r },
            max_distance_ratio: max_r,
            max_neighbor_ratio: max_neighbor,
            max_touching,
            disjoint,
            inside_set: inside,
            uncovered_max_distance: uncovered,
            covered_volume: cubes.iter().map(|c| c.volume()).sum(),
            set_volume: set.volume(),
        }
    }

    /// All four properties at the stated constants.
    pub fn passes(&self, n: usize, min_side: f64) -> bool {
        self.min_distance_ratio >= 1.0
            && self.max_distance_ratio <= 4.0
            && self.max_neighbor_ratio <= 4.0
            && self.max_touching <= 12usize.pow(n as u32)
            && self.disjoint
            && self.inside_set
            && self.uncovered_max_distance < 2.0 * (n as f64).sqrt() * min_side
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_set(lo: f64, hi: f64, inside: impl Fn(f64) -> bool, h: f64) -> CellSet {
        CellSet::from_fn(Grid::from_bounds(h, &[(lo, hi)]).unwrap(), |x| inside(x[0])).unwrap()
    }

    #[test]
    fn empty_set_has_no_cubes() {
        let set = line_set(-1.0, 2.0, |_| false, 1.0 / 16.0);
        assert!(whitney(&set, None).unwrap().cubes.is_empty());
    }

    #[test]
    fn unit_interval_satisfies_all_properties() {
        let set = line_set(-1.0, 2.0, |x| x > 0.0 && x < 1.0, 1.0 / 64.0);
        let dec = whitney(&set, None).unwrap();
        let check = WhitneyCheck::run(&set, &dec);
        assert!(check.passes(1, dec.min_side), "{check:?}");
        assert!(dec.cubes.iter().all(|c| c.lower(0) >= 0.0 && c.upper(0) <= 1.0));
    }

    #[test]
    fn separated_components_stay_separate() {
        let set = line_set(-1.0, 4.0, |x| (x > 0.0 && x < 1.0) || (x > 2.0 && x < 3.0), 1.0 / 64.0);
        let dec = whitney(&set, None).unwrap();
        assert!(WhitneyCheck::run(&set, &dec).passes(1, dec.min_side));
        for c in &dec.cubes {
            let left = c.upper(0) <= 1.0;
            let right = c.lower(0) >= 2.0;
            assert!(left ^ right, "{c} meets both components");
        }
    }

    #[test]
    fn boundary_contact_is_rejected() {
        let set = line_set(0.0, 1.0, |x| x < 0.5, 1.0 / 16.0);
        assert!(whitney(&set, None).is_err());
    }

    #[test]
    fn finer_min_side_covers_more() {
        let set = line_set(-1.0, 2.0, |x| x > 0.0 && x < 1.0, 1.0 / 16.0);
        let coarse = whitney(&set, None).unwrap();
        let fine = whitney(&set, Some(1.0 / 256.0)).unwrap();
        let vol = |d: &WhitneyDecomposition| d.cubes.iter().map(|c| c.volume()).sum::<f64>();
        assert!(vol(&fine) > vol(&coarse));
        assert!(WhitneyCheck::run(&set, &fine).passes(1, fine.min_side));
    }
}
