//! Multilinear square functions on a log-spaced scale grid, truncated
//! variants, and `L^p` bound ratios.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::gridfn::{Grid, SampledFunction};
use crate::kernels::{ApplyOptions, KernelFamily};

/// Log-midpoint samples `t_k = t_min 2^{(k + 1/2) / K}` covering
/// `[t_min, t_max]`, each carrying the weight `ln(t_max / t_min) / count`
/// (which is `ln 2 / K` on whole octaves).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub per_octave: usize,
}

impl ScaleGrid {
    pub fn new(t_min: f64, t_max: f64, per_octave: usize) -> Result<Self> {
        let g = ScaleGrid { t_min, t_max, per_octave };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::invalid(format!("scale range [{}, {}] is invalid", self.t_min, self.t_max)));
        }
        if self.per_octave == 0 {
            return Err(Error::invalid("need at least one sample per octave"));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        ((self.t_max / self.t_min).log2() * self.per_octave as f64).round().max(1.0) as usize
    }

    /// Quadrature weight for `dt / t`.
    pub fn weight(&self) -> f64 {
        (self.t_max / self.t_min).ln() / self.count() as f64
    }

    pub fn samples(&self) -> Vec<f64> {
        let count = self.count();
        let ratio = (self.t_max / self.t_min).ln() / count as f64;
        (0..count).map(|k| self.t_min * ((k as f64 + 0.5) * ratio).exp()).collect()
    }

    /// Samples in `(lo, hi]`.
    pub fn samples_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.samples().into_iter().filter(|&t| t > lo && t <= hi).collect()
    }

    /// The same grid dilated by `2^octaves`.
    pub fn shifted(&self, octaves: i32) -> ScaleGrid {
        let s = 2f64.powi(octaves);
        ScaleGrid { t_min: self.t_min * s, t_max: self.t_max * s, ..*self }
    }

    pub fn scaled(&self, lambda: f64) -> ScaleGrid {
        ScaleGrid { t_min: self.t_min * lambda, t_max: self.t_max * lambda, ..*self }
    }
}

/// Exponents `(p; p_1, ..., p_m)` with `1/p = sum 1/p_i` checked in exact
/// rational arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexTuple {
    pub p: f64,
    pub slots: Vec<f64>,
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidExponent(format!("{x} is not finite")))
}

impl IndexTuple {
    pub fn new(p: f64, slots: Vec<f64>) -> Result<Self> {
        let t = IndexTuple { p, slots };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidExponent("no slot exponents".into()));
        }
        for &q in &self.slots {
            if !(q > 1.0 && q.is_finite()) {
                return Err(Error::InvalidExponent(format!("slot exponent {q} not in (1, inf)")));
            }
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidExponent(format!("target exponent {}", self.p)));
        }
        let lhs = BigRational::one() / exact(self.p)?;
        let mut rhs = BigRational::zero();
        for &q in &self.slots {
            rhs += BigRational::one() / exact(q)?;
        }
        if lhs != rhs {
            return Err(Error::IndexRelation(format!(
                "1/{} != {}",
                self.p,
                self.slots.iter().map(|q| format!("1/{q}")).collect::<Vec<_>>().join(" + ")
            )));
        }
        Ok(())
    }

    /// The exponent `p` with `1/p = sum 1/q_i` for the given slots, exactly
    /// when representable.
    pub fn combined(slots: &[f64]) -> Result<f64> {
        let mut rhs = BigRational::zero();
        for &q in slots {
            rhs += BigRational::one() / exact(q)?;
        }
        if rhs.is_zero() {
            return Err(Error::InvalidExponent("no slots".into()));
        }
        let p = BigRational::one() / rhs;
        p.to_f64().ok_or_else(|| Error::InvalidExponent("combined exponent out of range".into()))
    }
}

/// `S(f)(x) = (sum_k |Theta_{t_k}(f)(x)|^2 w)^{1/2}` on `eval_grid`.
pub fn square_function(
    k: &KernelFamily,
    fs: &[SampledFunction],
    scales: &ScaleGrid,
    eval_grid: &Grid,
    opts: &ApplyOptions,
) -> Result<SampledFunction> {
    scales.validate()?;
    let w = scales.weight();
    let mut acc = vec![0.0; eval_grid.len()];
    for t in scales.samples() {
        let theta = k.apply_theta(t, fs, eval_grid, opts)?;
        for (a, v) in acc.iter_mut().zip(theta.values()) {
            *a += v.norm_sqr() * w;
        }
    }
    let values = acc.into_iter().map(|v| Complex64::new(v.sqrt(), 0.0)).collect();
    SampledFunction::new(eval_grid.clone(), values)
}

/// Pointwise bound on the omitted `t > t_max` part of `S^2`:
/// `C^2 prod ||f_i||_1^2 / (2 m n t_max^{2mn})` from the size estimate.
pub fn upper_tail_bound(k: &KernelFamily, fs: &[SampledFunction], scales: &ScaleGrid) -> f64 {
    let p = k.params();
    let mn = (p.m * p.n) as f64;
    let l1: f64 = fs.iter().map(|f| f.values().iter().map(|v| v.norm()).sum::<f64>() * f.grid().cell_volume()).product();
    p.constant.powi(2) * l1 * l1 / (2.0 * mn * scales.t_max.powf(2.0 * mn))
}

/// Lower limit of the `t` integral in the truncated square functions.
#[derive(Clone, Debug)]
pub enum LowerLimit {
    Scalar(f64),
    /// `tau(x)` sampled on the evaluation grid (real part used).
    PerPoint(SampledFunction),
}

/// `g(x) = (int_{lower(x)}^{upper} |Theta_t(1, ..., 1)(x)|^2 dt/t)^{1/2}` on the
/// cells of `Q`, with `t` restricted to scale samples in `(lower(x), upper]`.
/// Empty ranges give 0.
pub fn truncated_g(
    k: &KernelFamily,
    cube: &DyadicCube,
    h: f64,
    lower: &LowerLimit,
    upper: f64,
    scales: &ScaleGrid,
    tail_eps: f64,
) -> Result<SampledFunction> {
    let grid = Grid::on_cube(cube, h)?;
    if let LowerLimit::PerPoint(tau) = lower {
        if tau.grid() != &grid {
            return Err(Error::invalid("tau must be sampled on the cells of Q"));
        }
    }
    let ts = scales.samples();
    let w = scales.weight();
    let convolution = k.is_convolution_type();
    let center = grid.center(0);
    let mut cached: Vec<Option<f64>> = vec![None; ts.len()];
    let mut values = Vec::with_capacity(grid.len());
    for (idx, x) in grid.centers().enumerate() {
        let lo = match lower {
            LowerLimit::Scalar(e) => *e,
            LowerLimit::PerPoint(tau) => tau.values()[idx].re,
        };
        let mut sum = 0.0;
        for (j, &t) in ts.iter().enumerate() {
            if t <= lo || t > upper {
                continue;
            }
            let v = if convolution {
                match cached[j] {
                    Some(v) => v,
                    None => {
                        let v = k.theta_on_ones(t, &center, tail_eps)?.norm_sqr();
                        cached[j] = Some(v);
                        v
                    }
                }
            } else {
                k.theta_on_ones(t, &x, tail_eps)?.norm_sqr()
            };
            sum += v * w;
        }
        values.push(Complex64::new(sum.sqrt(), 0.0));
    }
    SampledFunction::new(grid, values)
}

/// `(sum |f|^p h^n)^{1/p}` for any `p > 0`.
pub fn lp_quasi_norm(f: &SampledFunction, p: f64) -> f64 {
    let s: f64 = f.values().iter().map(|v| v.norm().powf(p)).sum();
    (s * f.grid().cell_volume()).powf(1.0 / p)
}

/// `||S(f)||_p / prod ||f_i||_{p_i}` for exponents obeying the Hoelder relation.
pub fn bound_ratio(
    k: &KernelFamily,
    fs: &[SampledFunction],
    idx: &IndexTuple,
    scales: &ScaleGrid,
    eval_grid: &Grid,
    opts: &ApplyOptions,
) -> Result<f64> {
    idx.validate()?;
    if idx.slots.len() != fs.len() {
        return Err(Error::invalid("one slot exponent per input"));
    }
    let mut denom = 1.0;
    for (f, &q) in fs.iter().zip(&idx.slots) {
        let norm = lp_quasi_norm(f, q);
        if norm == 0.0 {
            return Err(Error::Degenerate("an input vanishes; the ratio is undefined".into()));
        }
        denom *= norm;
    }
    let s = square_function(k, fs, scales, eval_grid, opts)?;
    Ok(lp_quasi_norm(&s, idx.p) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFamily;
    use proptest::prelude::*;

    #[test]
    fn scale_grid_weights() {
        let g = ScaleGrid::new(1.0 / 64.0, 64.0, 8).unwrap();
        assert_eq!(g.count(), 96);
        assert!((g.weight() - std::f64::consts::LN_2 / 8.0).abs() < 1e-15);
        let s = g.samples();
        assert!(s[0] > g.t_min && *s.last().unwrap() < g.t_max);
        // sum of weights reproduces ln(t_max / t_min)
        assert!((g.weight() * s.len() as f64 - (4096f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn tent_samples_stop_at_side() {
        let g = ScaleGrid::new(1.0 / 16.0, 4.0, 4).unwrap();
        let inside = g.samples_in(0.0, 1.0);
        assert_eq!(inside.len(), 16);
        assert!(inside.iter().all(|&t| t <= 1.0));
    }

    #[test]
    fn index_relation() {
        assert!(IndexTuple::new(2.0, vec![4.0, 4.0]).is_ok());
        assert!(IndexTuple::new(1.0, vec![3.0, 1.5]).is_ok());
        assert!(matches!(IndexTuple::new(2.0, vec![2.0, 2.0]), Err(Error::IndexRelation(_))));
        assert!(matches!(IndexTuple::new(2.0, vec![1.0, 2.0]), Err(Error::InvalidExponent(_))));
        assert_eq!(IndexTuple::combined(&[4.0, 4.0]).unwrap(), 2.0);
        assert_eq!(IndexTuple::combined(&[3.0, 6.0]).unwrap(), 2.0);
    }

    #[test]
    fn zero_slot_gives_zero() {
        let k = KernelFamily::gaussian_product(2, 1, 2.0, 1.0, 1.0).unwrap();
        let g = Grid::from_bounds(1.0 / 16.0, &[(-4.0, 4.0)]).unwrap();
        let f = SampledFunction::from_real_fn(g.clone(), |x| (-x[0] * x[0]).exp()).unwrap();
        let z = SampledFunction::zeros(g.clone());
        let scales = ScaleGrid::new(0.25, 2.0, 4).unwrap();
        let s = square_function(&k, &[f, z], &scales, &g, &ApplyOptions::default()).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn empty_range_gives_zero() {
        let k = KernelFamily::bump_product(2, 1, 1.0).unwrap();
        let scales = ScaleGrid::new(1.0 / 64.0, 1.0, 4).unwrap();
        let q = DyadicCube::unit(1);
        let g = truncated_g(&k, &q, 1.0 / 16.0, &LowerLimit::Scalar(0.5), 0.5, &scales, 1e-10).unwrap();
        assert!(g.is_zero());
        let mz = KernelFamily::mean_zero_first(2, 1, 1.0).unwrap();
        let g = truncated_g(&mz, &q, 1.0 / 16.0, &LowerLimit::Scalar(0.0), 1.0, &scales, 1e-10).unwrap();
        assert!(g.lp_norm(crate::gridfn::LpExponent::INFINITY) < 1e-6);
    }

    #[test]
    fn bump_product_g_is_log() {
        // |Theta_t(1,1)|^2 = 1 so g^2 = ln(1 / t_min) on the tent
        let k = KernelFamily::bump_product(2, 1, 1.0).unwrap();
        let scales = ScaleGrid::new(1.0 / 64.0, 1.0, 8).unwrap();
        let g = truncated_g(&k, &DyadicCube::unit(1), 0.25, &LowerLimit::Scalar(0.0), 1.0, &scales, 1e-10).unwrap();
        for v in g.values() {
            assert!((v.re * v.re - 64f64.ln()).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn truncated_g_monotone(lo in 0.0f64..0.5, extra in 0.0f64..0.4, up in 0.5f64..1.0) {
            let k = KernelFamily::gaussian_product(2, 1, 2.0, 1.0, 1.0).unwrap();
            let scales = ScaleGrid::new(1.0 / 32.0, 1.0, 4).unwrap();
            let q = DyadicCube::unit(1);
            let narrow = truncated_g(&k, &q, 0.25, &LowerLimit::Scalar(lo + extra), up, &scales, 1e-8).unwrap();
            let wide = truncated_g(&k, &q, 0.25, &LowerLimit::Scalar(lo), 1.0, &scales, 1e-8).unwrap();
            for (a, b) in narrow.values().iter().zip(wide.values()) {
                prop_assert!(a.re <= b.re);
            }
        }

        #[test]
        fn square_function_quasi_homogeneous(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
            let k = KernelFamily::gaussian_product(2, 1, 2.0, 1.0, 1.0).unwrap();
            let g = Grid::from_bounds(1.0 / 8.0, &[(-4.0, 4.0)]).unwrap();
            let f = SampledFunction::from_real_fn(g.clone(), |x| (-x[0] * x[0]).exp()).unwrap();
            let scales = ScaleGrid::new(0.5, 2.0, 2).unwrap();
            let opts = ApplyOptions::default();
            let base = square_function(&k, &[f.clone(), f.clone()], &scales, &g, &opts).unwrap();
            let cs = |c: f64| Complex64::new(c, 0.0);
            let scaled = square_function(&k, &[f.scale(cs(c1)), f.scale(cs(c2))], &scales, &g, &opts).unwrap();
            for (a, b) in base.values().iter().zip(scaled.values()) {
                prop_assert!((a.re * (c1 * c2).abs() - b.re).abs() <= 1e-12 * (1.0 + b.re));
                prop_assert!(b.re >= 0.0);
            }
        }
    }
}
