//! Discrete convolution with finite stencils, by direct summation or FFT.
//!
//! Both paths compute `out[i] = sum_j w[j] f[i - j]` over the same index
//! set, so they agree up to floating-point rounding.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::gridfn::{Grid, SampledFunction};

/// Weights on the cube `[-r, r]^n` of lattice offsets, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    dim: usize,
    radius: usize,
    weights: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMethod {
    Auto,
    Direct,
    Fft,
}

const DIRECT_LIMIT: usize = 64;

impl Stencil {
    pub fn new(dim: usize, radius: usize, weights: Vec<Complex64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if dim == 0 || weights.len() != side.pow(dim as u32) {
            return Err(Error::invalid("stencil weights do not fill the offset cube"));
        }
        Ok(Stencil { dim, radius, weights })
    }

    /// Samples `value(offset)` at every lattice offset `j h`, times the cell volume.
    pub fn from_fn(h: f64, dim: usize, radius: usize, value: impl Fn(&[f64]) -> Complex64) -> Self {
        let side = 2 * radius + 1;
        let len = side.pow(dim as u32);
        let vol = h.powi(dim as i32);
        let mut weights = Vec::with_capacity(len);
        let mut offset = vec![0.0; dim];
        for k in 0..len {
            let mut rem = k;
            for axis in (0..dim).rev() {
                offset[axis] = ((rem % side) as f64 - radius as f64) * h;
                rem /= side;
            }
            weights.push(value(&offset) * vol);
        }
        Stencil { dim, radius, weights }
    }

    /// Radial stencil `value(|j h|)`.
    pub fn radial(h: f64, dim: usize, radius: usize, value: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(h, dim, radius, |x| {
            Complex64::new(value(x.iter().map(|v| v * v).sum::<f64>().sqrt()), 0.0)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn sum(&self) -> Complex64 {
        self.weights.iter().sum()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Stencil {
        Stencil { weights: self.weights.iter().map(|&w| f(w)).collect(), ..self.clone() }
    }

    /// Rescale so the weights sum to one.
    pub fn normalized_to_unit_sum(&self) -> Result<Stencil> {
        let s = self.sum();
        if s.norm() < 1e-300 {
            return Err(Error::Profile("stencil has zero sum".into()));
        }
        Ok(self.map(|w| w / s))
    }

    /// Subtract a uniform correction over the nonzero weights so the sum vanishes.
    pub fn mean_free(&self) -> Stencil {
        let support = self.weights.iter().filter(|w| w.norm() > 0.0).count().max(1);
        let corr = self.sum() / support as f64;
        self.map(|w| if w.norm() > 0.0 { w - corr } else { w })
    }

    /// Discrete convolution of two stencils (radii add).
    pub fn compose(&self, other: &Stencil) -> Stencil {
        let n = self.dim;
        let r = self.radius + other.radius;
        let side = 2 * r + 1;
        let sa = 2 * self.radius + 1;
        let sb = 2 * other.radius + 1;
        let mut out = vec![Complex64::new(0.0, 0.0); side.pow(n as u32)];
        let idx = |k: usize, s: usize| -> Vec<usize> {
            let mut rem = k;
            let mut v = vec![0; n];
            for axis in (0..n).rev() {
                v[axis] = rem % s;
                rem /= s;
            }
            v
        };
        for (ka, &wa) in self.weights.iter().enumerate() {
            if wa.norm() == 0.0 {
                continue;
            }
            let ia = idx(ka, sa);
            for (kb, &wb) in other.weights.iter().enumerate() {
                let ib = idx(kb, sb);
                let flat = ia.iter().zip(&ib).fold(0, |acc, (&a, &b)| acc * side + a + b);
                out[flat] += wa * wb;
            }
        }
        Stencil { dim: n, radius: r, weights: out }
    }
}

/// Cells needed so a stencil links every cell of `from` to every cell of `to`.
pub fn span_cells(from: &Grid, to: &Grid) -> usize {
    let off = to.cell_offset_to(from);
    (0..from.dim())
        .map(|a| {
            let lo = off[a].min(0);
            let hi = (off[a] + from.shape()[a] as i64).max(to.shape()[a] as i64);
            (hi - lo) as usize
        })
        .max()
        .unwrap_or(0)
}

/// `(w * f)` sampled on `out`, treating `f` as zero outside its window.
pub fn convolve(f: &SampledFunction, stencil: &Stencil, out: &Grid, method: ConvMethod) -> Result<SampledFunction> {
    if stencil.dim != out.dim() || !f.grid().compatible(out) {
        return Err(Error::invalid("convolution needs matching dimension and lattice"));
    }
    let r = stencil.radius;
    let ext = out.padded(r);
    let fe = f.restrict_to(&ext)?;
    let use_direct = match method {
        ConvMethod::Direct => true,
        ConvMethod::Fft => false,
        ConvMethod::Auto => stencil.weights.len() <= DIRECT_LIMIT,
    };
    let values = if use_direct {
        direct(fe.values(), ext.shape(), stencil, out)
    } else {
        via_fft(fe.values(), ext.shape(), stencil, out)
    };
    Ok(SampledFunction::from_parts_unchecked(out.clone(), values))
}

fn direct(fe: &[Complex64], ext_shape: &[usize], stencil: &Stencil, out: &Grid) -> Vec<Complex64> {
    let n = out.dim();
    let r = stencil.radius as i64;
    let side = 2 * stencil.radius + 1;
    let offsets: Vec<(Vec<i64>, Complex64)> = stencil
        .weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.norm() > 0.0)
        .map(|(k, &w)| {
            let mut rem = k;
            let mut j = vec![0i64; n];
            for axis in (0..n).rev() {
                j[axis] = (rem % side) as i64 - r;
                rem /= side;
            }
            (j, w)
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); out.len()];
    for (k, slot) in values.iter_mut().enumerate() {
        let i = out.unflat(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, w) in &offsets {
            let mut flat = 0usize;
            for axis in 0..n {
                let src = (i[axis] as i64 + r - j[axis]) as usize;
                flat = flat * ext_shape[axis] + src;
            }
            acc += w * fe[flat];
        }
        *slot = acc;
    }
    values
}

fn via_fft(fe: &[Complex64], ext_shape: &[usize], stencil: &Stencil, out: &Grid) -> Vec<Complex64> {
    let n = out.dim();
    let r = stencil.radius;
    let side = 2 * r + 1;
    let total: usize = ext_shape.iter().product();
    let mut a = fe.to_vec();
    let mut b = vec![Complex64::new(0.0, 0.0); total];
    for (k, &w) in stencil.weights.iter().enumerate() {
        let mut rem = k;
        let mut flat_pos = vec![0usize; n];
        for axis in (0..n).rev() {
            let j = (rem % side) as i64 - r as i64;
            flat_pos[axis] = j.rem_euclid(ext_shape[axis] as i64) as usize;
            rem /= side;
        }
        let flat = flat_pos.iter().zip(ext_shape).fold(0, |acc, (&p, &s)| acc * s + p);
        b[flat] += w;
    }
    let mut planner = FftPlanner::new();
    fft_nd(&mut a, ext_shape, false, &mut planner);
    fft_nd(&mut b, ext_shape, false, &mut planner);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    fft_nd(&mut a, ext_shape, true, &mut planner);
    let scale = 1.0 / total as f64;
    let mut values = Vec::with_capacity(out.len());
    for k in 0..out.len() {
        let i = out.unflat(k);
        let flat = i.iter().zip(ext_shape).fold(0, |acc, (&p, &s)| acc * s + p + r);
        values.push(a[flat] * scale);
    }
    values
}

fn fft_nd(buf: &mut [Complex64], shape: &[usize], inverse: bool, planner: &mut FftPlanner<f64>) {
    let total = buf.len();
    for axis in 0..shape.len() {
        let len = shape[axis];
        if len == 1 {
            continue;
        }
        let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        let stride: usize = shape[axis + 1..].iter().product();
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for start in 0..total {
            // lines start where the index along `axis` is zero
            if (start / stride) % len != 0 {
                continue;
            }
            for (k, v) in line.iter_mut().enumerate() {
                *v = buf[start + k * stride];
            }
            fft.process(&mut line);
            for (k, v) in line.iter().enumerate() {
                buf[start + k * stride] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_stencil() {
        let g = Grid::from_bounds(0.25, &[(0.0, 2.0)]).unwrap();
        let f = SampledFunction::from_real_fn(g.clone(), |x| x[0] * x[0]).unwrap();
        let s = Stencil::new(1, 0, vec![c(1.0)]).unwrap();
        let out = convolve(&f, &s, &g, ConvMethod::Direct).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn shift_moves_values() {
        let g = Grid::from_bounds(1.0, &[(0.0, 4.0)]).unwrap();
        let f = SampledFunction::new(g.clone(), (1..=4).map(|v| c(v as f64)).collect()).unwrap();
        // w[+1] = 1: out[i] = f[i - 1]
        let s = Stencil::new(1, 1, vec![c(0.0), c(0.0), c(1.0)]).unwrap();
        for m in [ConvMethod::Direct, ConvMethod::Fft] {
            let out = convolve(&f, &s, &g, m).unwrap();
            let got: Vec<f64> = out.values().iter().map(|v| v.re).collect();
            let want = [0.0, 1.0, 2.0, 3.0];
            for (a, b) in got.iter().zip(want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compose_matches_sequential_convolution() {
        let g = Grid::from_bounds(0.5, &[(-4.0, 4.0)]).unwrap();
        let f = SampledFunction::from_real_fn(g.clone(), |x| (-x[0] * x[0]).exp()).unwrap();
        let a = Stencil::radial(0.5, 1, 2, |r| 1.0 / (1.0 + r));
        let b = Stencil::radial(0.5, 1, 3, |r| (-r).exp());
        let wide = g.padded(8);
        let once = convolve(&f, &a.compose(&b), &g, ConvMethod::Direct).unwrap();
        let mid = convolve(&f, &b, &wide, ConvMethod::Direct).unwrap();
        let twice = convolve(&mid, &a, &g, ConvMethod::Direct).unwrap();
        for (x, y) in once.values().iter().zip(twice.values()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn fft_matches_direct_2d(seed in 0u64..1000, r in 0usize..4, w in 1usize..7, hgt in 1usize..6) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = Grid::new(0.5, vec![0.0, 0.0], vec![w, hgt]).unwrap();
            let vals = (0..g.len()).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>())).collect();
            let f = SampledFunction::new(g.clone(), vals).unwrap();
            let side = 2 * r + 1;
            let ws = (0..side * side).map(|_| Complex64::new(rng.gen::<f64>(), rng.gen::<f64>() - 0.5)).collect();
            let s = Stencil::new(2, r, ws).unwrap();
            let out = Grid::new(0.5, vec![-1.0, 0.5], vec![w + 2, hgt]).unwrap();
            let a = convolve(&f, &s, &out, ConvMethod::Direct).unwrap();
            let b = convolve(&f, &s, &out, ConvMethod::Fft).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
