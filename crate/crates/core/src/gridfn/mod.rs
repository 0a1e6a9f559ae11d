//! Cell-centred sampled functions on uniform grids.
//!
//! Every integral in the crate is a midpoint sum over grid cells: a function
//! is one complex value per cell, taken to be zero outside the window.

mod io;
mod prefix;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};

pub use io::{read_binary, read_csv, write_binary, write_csv};
pub use prefix::BoxSums;

/// Axis-aligned window split into cubic cells of side `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    h: f64,
    origin: Vec<f64>,
    shape: Vec<usize>,
}

impl Grid {
    pub fn new(h: f64, origin: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        if origin.is_empty() || origin.len() != shape.len() {
            return Err(Error::invalid("origin and shape must have the same nonzero length"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        if shape.iter().any(|&s| s == 0) {
            return Err(Error::invalid("grid shape entries must be positive"));
        }
        Ok(Grid { h, origin, shape })
    }

    /// Grid covering `[lo_i, hi_i)` on every axis; the side lengths must be
    /// integer multiples of `h`.
    pub fn from_bounds(h: f64, bounds: &[(f64, f64)]) -> Result<Self> {
        let mut shape = Vec::with_capacity(bounds.len());
        for &(lo, hi) in bounds {
            let cells = (hi - lo) / h;
            let rounded = cells.round();
            if !(rounded >= 1.0) || (cells - rounded).abs() > 1e-9 * rounded.max(1.0) {
                return Err(Error::invalid(format!(
                    "window side [{lo}, {hi}) is not an integer multiple of h = {h}"
                )));
            }
            shape.push(rounded as usize);
        }
        Grid::new(h, bounds.iter().map(|b| b.0).collect(), shape)
    }

    /// The grid of cells of side `h` exactly covering a dyadic cube.
    pub fn on_cube(cube: &DyadicCube, h: f64) -> Result<Self> {
        let bounds: Vec<_> = (0..cube.dim()).map(|i| (cube.lower(i), cube.upper(i))).collect();
        Grid::from_bounds(h, &bounds)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.origin
            .iter()
            .zip(&self.shape)
            .map(|(&o, &s)| (o, o + s as f64 * self.h))
            .collect()
    }

    /// Row-major flat index (first axis slowest).
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        idx
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflat(flat);
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + (i as f64 + 0.5) * self.h)
            .collect()
    }

    pub fn centers(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |k| self.center(k))
    }

    /// Cell containing `x`, if `x` lies in the window.
    pub fn locate(&self, x: &[f64]) -> Option<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.dim());
        for ((&xi, &o), &s) in x.iter().zip(&self.origin).zip(&self.shape) {
            let k = ((xi - o) / self.h).floor();
            if k < 0.0 || k >= s as f64 {
                return None;
            }
            idx.push(k as usize);
        }
        Some(idx)
    }

    /// True when `h` is a power of two and the origin sits on the lattice `hZ^n`,
    /// so every dyadic cube with side at least `h` is a union of cells.
    pub fn is_dyadic(&self) -> bool {
        let (m, _) = frexp(self.h);
        m == 0.5 && self.origin.iter().all(|&o| (o / self.h).fract() == 0.0)
    }

    /// Generation of the cells (`h = 2^{-g}`), for dyadic grids.
    pub fn cell_generation(&self) -> Option<i32> {
        if !self.is_dyadic() {
            return None;
        }
        let (_, e) = frexp(self.h);
        Some(1 - e)
    }

    /// Global lattice index of the first cell on each axis (`origin / h`).
    pub fn lattice_offset(&self) -> Vec<i64> {
        self.origin.iter().map(|&o| (o / self.h).round() as i64).collect()
    }

    /// Cell-index box `[lo, hi)` (local indices, possibly outside the window)
    /// occupied by a cube; fails if the cube is not a union of cells.
    pub fn cube_cells(&self, cube: &DyadicCube) -> Result<(Vec<i64>, Vec<i64>)> {
        let g = self.cell_generation().ok_or(Error::Misaligned { cube: cube.clone() })?;
        if cube.dim() != self.dim() || cube.generation() > g {
            return Err(Error::Misaligned { cube: cube.clone() });
        }
        let factor = 1i64 << (g - cube.generation()) as u32;
        let offset = self.lattice_offset();
        let lo: Vec<i64> = cube.corner().iter().zip(&offset).map(|(&k, &o)| k * factor - o).collect();
        let hi = lo.iter().map(|&l| l + factor).collect();
        Ok((lo, hi))
    }

    /// True when the cube lies inside the window.
    pub fn contains_cube(&self, cube: &DyadicCube) -> bool {
        self.bounds()
            .iter()
            .enumerate()
            .all(|(i, &(lo, hi))| cube.lower(i) >= lo && cube.upper(i) <= hi)
    }

    /// Whether two grids share the spacing and the cell lattice.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.h == other.h
            && self.dim() == other.dim()
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .all(|(a, b)| ((a - b) / self.h - ((a - b) / self.h).round()).abs() < 1e-9)
    }

    /// Integer cell offset of `other`'s origin relative to this grid.
    pub fn cell_offset_to(&self, other: &Grid) -> Vec<i64> {
        self.origin
            .iter()
            .zip(&other.origin)
            .map(|(a, b)| ((b - a) / self.h).round() as i64)
            .collect()
    }

    /// Same lattice, window enlarged by `cells` on every side.
    pub fn padded(&self, cells: usize) -> Grid {
        Grid {
            h: self.h,
            origin: self.origin.iter().map(|o| o - cells as f64 * self.h).collect(),
            shape: self.shape.iter().map(|s| s + 2 * cells).collect(),
        }
    }
}

/// Mantissa in [0.5, 1) and exponent with `x = m 2^e`.
pub(crate) fn frexp(x: f64) -> (f64, i32) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let mut e = x.abs().log2().floor() as i32 + 1;
    let mut m = x / 2f64.powi(e);
    while m.abs() >= 1.0 {
        m /= 2.0;
        e += 1;
    }
    while m.abs() < 0.5 {
        m *= 2.0;
        e -= 1;
    }
    (m, e)
}

/// Exponent for Lebesgue norms: `p >= 1` or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpExponent(f64);

impl LpExponent {
    pub const INFINITY: LpExponent = LpExponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(format!("p = {p} (need p >= 1)")));
        }
        Ok(LpExponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Function sampled at cell centres; zero outside its window.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("sampled values must be finite"));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        SampledFunction { grid, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn constant(grid: Grid, c: Complex64) -> Self {
        let len = grid.len();
        SampledFunction { grid, values: vec![c; len] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = grid.centers().map(|x| f(&x)).collect();
        SampledFunction::new(grid, values)
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        SampledFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value_at(&self, x: &[f64]) -> Complex64 {
        match self.grid.locate(x) {
            Some(idx) => self.values[self.grid.flat(&idx)],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        SampledFunction { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn modulus(&self) -> Self {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::invalid("pointwise operation on functions with different grids"));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(SampledFunction { grid: self.grid.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Midpoint rule for the integral over the window.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    /// `<f, g> = \int f g` (no conjugation, matching real pairings).
    pub fn pairing(&self, other: &Self) -> Result<Complex64> {
        Ok(self.mul(other)?.integral())
    }

    /// Re-sample onto another window of the same lattice, zero-filling.
    pub fn restrict_to(&self, grid: &Grid) -> Result<Self> {
        if !self.grid.compatible(grid) {
            return Err(Error::invalid("grids do not share a lattice"));
        }
        let offset = self.grid.cell_offset_to(grid);
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (k, slot) in out.iter_mut().enumerate() {
            let idx = grid.unflat(k);
            let mut src = Vec::with_capacity(idx.len());
            let mut inside = true;
            for axis in 0..idx.len() {
                let j = idx[axis] as i64 + offset[axis];
                if j < 0 || j >= self.grid.shape[axis] as i64 {
                    inside = false;
                    break;
                }
                src.push(j as usize);
            }
            if inside {
                *slot = self.values[self.grid.flat(&src)];
            }
        }
        Ok(SampledFunction { grid: grid.clone(), values: out })
    }

    /// Midpoint-rule `L^p` norm; the maximum over cells for `p = inf`.
    pub fn lp_norm(&self, p: LpExponent) -> f64 {
        if p.0.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let sum: f64 = self.values.iter().map(|v| v.norm().powf(p.0)).sum();
        (sum * self.grid.cell_volume()).powf(1.0 / p.0)
    }

    /// Average over a dyadic cube that is a union of cells.
    pub fn average(&self, cube: &DyadicCube) -> Result<Complex64> {
        let (lo, hi) = self.grid.cube_cells(cube)?;
        let cells: i64 = lo.iter().zip(&hi).map(|(l, h)| h - l).product();
        let sum = box_sum(&self.grid, &self.values, &lo, &hi);
        Ok(sum / cells as f64)
    }

    /// Dyadic BMO seminorm: the largest mean oscillation over cell-aligned
    /// dyadic cubes inside the window.
    pub fn bmo_norm(&self) -> Result<BmoReport> {
        let g_cell = self
            .grid
            .cell_generation()
            .ok_or_else(|| Error::invalid("BMO estimate needs a dyadic grid"))?;
        let sums = BoxSums::new(&self.grid, &self.values);
        let offset = self.grid.lattice_offset();
        let n = self.grid.dim();
        let mut best = BmoReport {
            value: 0.0,
            witness: None,
            min_side: self.grid.h,
            max_side: self.grid.h,
            cubes_checked: 0,
        };
        let min_shape = *self.grid.shape.iter().min().unwrap();
        let mut span = 1usize;
        while span <= min_shape {
            let generation = g_cell - span.trailing_zeros() as i32;
            best.max_side = span as f64 * self.grid.h;
            // first aligned index and count per axis
            let mut starts = Vec::with_capacity(n);
            let mut counts = Vec::with_capacity(n);
            for axis in 0..n {
                let o = offset[axis];
                let first = (o.rem_euclid(span as i64) != 0) as i64 * (span as i64 - o.rem_euclid(span as i64));
                let avail = self.grid.shape[axis] as i64 - first;
                starts.push(first);
                counts.push(if avail >= span as i64 { (avail / span as i64) as usize } else { 0 });
            }
            let total: usize = counts.iter().product();
            for c in 0..total {
                let mut rem = c;
                let mut lo = vec![0i64; n];
                for axis in (0..n).rev() {
                    lo[axis] = starts[axis] + (rem % counts[axis]) as i64 * span as i64;
                    rem /= counts[axis];
                }
                let hi: Vec<i64> = lo.iter().map(|l| l + span as i64).collect();
                let cells = span.pow(n as u32) as f64;
                let mean = sums.sum(&lo, &hi) / cells;
                let mut dev = 0.0;
                for_each_cell(&lo, &hi, |idx| {
                    dev += (self.values[self.grid.flat(idx)] - mean).norm();
                });
                let osc = dev / cells;
                best.cubes_checked += 1;
                if osc > best.value {
                    best.value = osc;
                    let corner = lo.iter().zip(&offset).map(|(l, o)| (l + o) / span as i64).collect();
                    best.witness = Some(DyadicCube::new(generation, corner));
                }
            }
            span *= 2;
        }
        Ok(best)
    }
}

/// Result of a dyadic BMO estimate, with the admissible cube family.
#[derive(Clone, Debug, Serialize)]
pub struct BmoReport {
    pub value: f64,
    pub witness: Option<DyadicCube>,
    pub min_side: f64,
    pub max_side: f64,
    pub cubes_checked: usize,
}

/// Sum of values over the local cell box `[lo, hi)`, clipped to the window.
pub(crate) fn box_sum(grid: &Grid, values: &[Complex64], lo: &[i64], hi: &[i64]) -> Complex64 {
    let mut clo = Vec::with_capacity(lo.len());
    let mut chi = Vec::with_capacity(lo.len());
    for axis in 0..lo.len() {
        let l = lo[axis].max(0);
        let h = hi[axis].min(grid.shape[axis] as i64);
        if l >= h {
            return Complex64::new(0.0, 0.0);
        }
        clo.push(l);
        chi.push(h);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for_each_cell(&clo, &chi, |idx| sum += values[grid.flat(idx)]);
    sum
}

/// Visit every index in the box `[lo, hi)` in row-major order.
pub fn for_each_cell(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[usize])) {
    let n = lo.len();
    if lo.iter().zip(hi).any(|(l, h)| l >= h) {
        return;
    }
    let mut idx: Vec<usize> = lo.iter().map(|&l| l as usize).collect();
    loop {
        f(&idx);
        let mut axis = n;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if (idx[axis] as i64) < hi[axis] {
                break;
            }
            idx[axis] = lo[axis] as usize;
        }
    }
}
