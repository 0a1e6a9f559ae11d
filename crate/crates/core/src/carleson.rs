//! Carleson measures on dyadic tents, the `Theta_t(1, ..., 1)` diagnostic,
//! level sets and the Carleson embedding.

use num_complex::Complex64;
use serde::Serialize;

use crate::avgops::{smooth_approx_on, SmoothingOptions};
use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::gridfn::{BoxSums, Grid, LpExponent, SampledFunction};
use crate::kernels::KernelFamily;
use crate::profile::Profile;
use crate::sqfn::ScaleGrid;

/// A density `mu(x, t) >= 0` against `dx dt/t`, sampled on a window and the
/// samples of a scale grid.
#[derive(Clone, Debug)]
pub struct MeasureSampler {
    window: Grid,
    scales: ScaleGrid,
    slices: Vec<(f64, Vec<f64>)>,
}

fn check_density(v: f64, t: f64) -> Result<f64> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Domain(format!("density {v} at t = {t} is not a finite nonnegative number")));
    }
    Ok(v)
}

impl MeasureSampler {
    pub fn from_fn(window: Grid, scales: ScaleGrid, density: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        scales.validate()?;
        let slices = scales
            .samples()
            .into_iter()
            .map(|t| {
                let vals = window.centers().map(|x| check_density(density(&x, t), t)).collect::<Result<Vec<_>>>()?;
                Ok((t, vals))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasureSampler { window, scales, slices })
    }

    /// One sampled slice per scale; only real parts are used.
    pub fn from_slices(window: Grid, scales: ScaleGrid, mut slice: impl FnMut(f64) -> Result<SampledFunction>) -> Result<Self> {
        scales.validate()?;
        let mut slices = Vec::with_capacity(scales.count());
        for t in scales.samples() {
            let f = slice(t)?.restrict_to(&window)?;
            let vals = f.values().iter().map(|v| check_density(v.re, t)).collect::<Result<Vec<_>>>()?;
            slices.push((t, vals));
        }
        Ok(MeasureSampler { window, scales, slices })
    }

    pub fn zero(window: Grid, scales: ScaleGrid) -> Result<Self> {
        Self::from_fn(window, scales, |_, _| 0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut out = self.clone();
        for (t, vals) in &mut out.slices {
            for v in vals.iter_mut() {
                *v = check_density(*v * c, *t)?;
            }
        }
        Ok(out)
    }

    pub fn window(&self) -> &Grid {
        &self.window
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    fn check_tent(&self, cube: &DyadicCube) -> Result<()> {
        if !self.window.contains_cube(cube) || cube.side() > self.scales.t_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("tent over {cube} leaves the sampled region")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TentMass {
    pub cube: DyadicCube,
    /// `mu(T(Q))` restricted to `t >= t_min`.
    pub mass: f64,
    /// `mu(T(Q)) / |Q|`.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarlesonReport {
    /// Sup of `mu(T(Q)) / |Q|` over the family.
    pub norm: f64,
    pub witness: Option<DyadicCube>,
    pub tents: Vec<TentMass>,
    pub t_min: f64,
    pub per_octave: usize,
}

/// `sup_Q mu(T(Q)) / |Q|` over a finite dyadic family.
pub fn carleson_norm(mu: &MeasureSampler, family: &[DyadicCube]) -> Result<CarlesonReport> {
    let mut boxes = Vec::with_capacity(family.len());
    for cube in family {
        mu.check_tent(cube)?;
        boxes.push(mu.window.cube_cells(cube)?);
    }
    let w = mu.scales.weight() * mu.window.cell_volume();
    let mut mass = vec![0.0; family.len()];
    for (t, vals) in &mu.slices {
        let complex: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let sums = BoxSums::new(&mu.window, &complex);
        for ((cube, (lo, hi)), m) in family.iter().zip(&boxes).zip(mass.iter_mut()) {
            if *t <= cube.side() {
                *m += sums.sum(lo, hi).re * w;
            }
        }
    }
    let mut norm = 0.0;
    let mut witness = None;
    let tents: Vec<TentMass> = family
        .iter()
        .zip(mass)
        .map(|(cube, mass)| {
            let normalized = mass / cube.volume();
            if witness.is_none() || normalized > norm {
                norm = normalized;
                witness = Some(cube.clone());
            }
            TentMass { cube: cube.clone(), mass, normalized }
        })
        .collect();
    Ok(CarlesonReport { norm, witness, tents, t_min: mu.scales.t_min, per_octave: mu.scales.per_octave })
}

/// The measure `|Theta_t(1, ..., 1)(x)|^2 dx dt/t`, zeroed where
/// `t <= lower(x)` when a lower limit is given.
pub fn theta_measure(
    k: &KernelFamily,
    window: &Grid,
    scales: &ScaleGrid,
    lower: Option<&SampledFunction>,
    tail_eps: f64,
) -> Result<MeasureSampler> {
    let lower = match lower {
        Some(l) => Some(l.restrict_to(window)?),
        None => None,
    };
    let centre: Vec<f64> = window.bounds().iter().map(|(a, b)| (a + b) / 2.0).collect();
    MeasureSampler::from_slices(window.clone(), *scales, |t| {
        let vals: Vec<Complex64> = if k.is_convolution_type() {
            let c = k.theta_on_ones(t, &centre, tail_eps)?.norm_sqr();
            vec![Complex64::new(c, 0.0); window.len()]
        } else {
            window
                .centers()
                .map(|x| Ok(Complex64::new(k.theta_on_ones(t, &x, tail_eps)?.norm_sqr(), 0.0)))
                .collect::<Result<_>>()?
        };
        let vals = match &lower {
            Some(l) => vals.iter().zip(l.values()).map(|(v, lo)| if t > lo.re { *v } else { Complex64::new(0.0, 0.0) }).collect(),
            None => vals,
        };
        SampledFunction::new(window.clone(), vals)
    })
}

/// Carleson norm of `|Theta_t(1, ..., 1)|^2 dx dt/t` over the family.
pub fn theta_carleson(
    k: &KernelFamily,
    family: &[DyadicCube],
    window: &Grid,
    scales: &ScaleGrid,
    lower: Option<&SampledFunction>,
    tail_eps: f64,
) -> Result<CarlesonReport> {
    carleson_norm(&theta_measure(k, window, scales, lower, tail_eps)?, family)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OctaveNorm {
    pub octaves: u32,
    pub t_min: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub cube: DyadicCube,
    /// `|Theta_{l(Q)}(1, ..., 1)|` at the centre of `Q`.
    pub c: f64,
    pub trend: Vec<OctaveNorm>,
    /// Norm with the most octaves minus the norm with one octave.
    pub growth: f64,
    /// `|c|^2 (J - 1) ln 2`.
    pub predicted_growth: f64,
    pub diverging: bool,
}

/// Tent norm over `Q` with `t_min = l(Q) 2^{-j}` for `j = 1..=octaves`.
/// A kernel with `Theta_t(1, ..., 1) = c` gains `|c|^2 ln 2` per octave;
/// growth below `tail_eps` is treated as quadrature noise.
pub fn theta_divergence(k: &KernelFamily, cube: &DyadicCube, octaves: u32, per_octave: usize, tail_eps: f64) -> Result<DivergenceReport> {
    if octaves < 2 {
        return Err(Error::invalid("divergence needs at least two octaves"));
    }
    let window = Grid::on_cube(cube, cube.side() / 4.0)?;
    let l = cube.side();
    let mut trend = Vec::with_capacity(octaves as usize);
    for j in 1..=octaves {
        let scales = ScaleGrid::new(l * 0.5f64.powi(j as i32), l, per_octave)?;
        let r = theta_carleson(k, std::slice::from_ref(cube), &window, &scales, None, tail_eps)?;
        trend.push(OctaveNorm { octaves: j, t_min: scales.t_min, norm: r.norm });
    }
    let c = k.theta_on_ones(l, &cube.center(), tail_eps)?.norm();
    let growth = trend.last().unwrap().norm - trend[0].norm;
    let predicted_growth = c * c * (octaves - 1) as f64 * std::f64::consts::LN_2;
    Ok(DivergenceReport {
        cube: cube.clone(),
        c,
        trend,
        growth,
        predicted_growth,
        diverging: growth > tail_eps && growth >= predicted_growth * (1.0 - 1e-9),
    })
}

/// `|{x in Q : g(x) > N}|` by counting cells; the whole window when `cube`
/// is `None`.
pub fn level_set_measure(g: &SampledFunction, cube: Option<&DyadicCube>, threshold: f64) -> Result<f64> {
    let grid = g.grid();
    let count = match cube {
        None => g.values().iter().filter(|v| v.re > threshold).count(),
        Some(c) => {
            if !grid.contains_cube(c) {
                return Err(Error::Domain(format!("cube {c} is outside the sampled window")));
            }
            let (lo, hi) = grid.cube_cells(c)?;
            let mut count = 0;
            crate::gridfn::for_each_cell(&lo, &hi, |idx| {
                if g.values()[grid.flat(idx)].re > threshold {
                    count += 1;
                }
            });
            count
        }
    };
    Ok(count as f64 * grid.cell_volume())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    /// `(int |P_t f|^q dmu)^{1/q} / ||f||_q`.
    pub ratio: f64,
    pub lhs: f64,
    pub f_norm: f64,
    pub carleson: CarlesonReport,
}

/// Compare `P_t f` in `L^q(dmu)` with `f` in `L^q`.
pub fn embedding_check(
    mu: &MeasureSampler,
    f: &SampledFunction,
    q: f64,
    profile: &Profile,
    family: &[DyadicCube],
    opts: &SmoothingOptions,
) -> Result<EmbeddingReport> {
    let f_norm = f.lp_norm(LpExponent::new(q)?);
    if f_norm == 0.0 {
        return Err(Error::Degenerate("embedding check needs a nonzero function".into()));
    }
    let w = mu.scales.weight() * mu.window.cell_volume();
    let mut acc = 0.0;
    for (t, vals) in &mu.slices {
        if vals.iter().all(|&v| v == 0.0) {
            continue;
        }
        let pf = smooth_approx_on(f, *t, profile, &mu.window, opts)?;
        acc += pf.values().iter().zip(vals).map(|(p, d)| p.norm().powf(q) * d).sum::<f64>() * w;
    }
    let lhs = acc.powf(1.0 / q);
    let carleson = carleson_norm(mu, family)?;
    Ok(EmbeddingReport { ratio: lhs / f_norm, lhs, f_norm, carleson })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::subcubes;
    use crate::profile::ProfileKind;
    use proptest::prelude::*;

    fn unit_window(h: f64) -> Grid {
        Grid::on_cube(&DyadicCube::unit(1), h).unwrap()
    }

    #[test]
    fn zero_density_has_zero_norm() {
        let mu = MeasureSampler::zero(unit_window(1.0 / 16.0), ScaleGrid::new(1.0 / 64.0, 1.0, 4).unwrap()).unwrap();
        let r = carleson_norm(&mu, &[DyadicCube::unit(1)]).unwrap();
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn unit_density_gives_log_of_depth() {
        let mu = MeasureSampler::from_fn(unit_window(1.0 / 16.0), ScaleGrid::new(1.0 / 64.0, 1.0, 4).unwrap(), |_, _| 1.0).unwrap();
        let fam = subcubes(&DyadicCube::unit(1), 2, 100).unwrap();
        let r = carleson_norm(&mu, &fam).unwrap();
        for tent in &r.tents {
            let want = (tent.cube.side() * 64.0).ln();
            assert!((tent.normalized - want).abs() < 1e-12, "{tent:?}");
        }
        assert_eq!(r.witness, Some(DyadicCube::unit(1)));
    }

    #[test]
    fn tents_must_fit() {
        let mu = MeasureSampler::zero(unit_window(1.0 / 16.0), ScaleGrid::new(1.0 / 64.0, 0.5, 4).unwrap()).unwrap();
        assert!(carleson_norm(&mu, &[DyadicCube::unit(1)]).is_err());
        assert!(carleson_norm(&mu, &[DyadicCube::new(0, vec![1])]).is_err());
        assert!(carleson_norm(&mu, &[DyadicCube::new(1, vec![1])]).is_ok());
        assert!(MeasureSampler::from_fn(unit_window(0.5), ScaleGrid::new(0.1, 1.0, 2).unwrap(), |_, _| -1.0).is_err());
    }

    #[test]
    fn mean_zero_kernel_is_carleson_small() {
        let k = KernelFamily::mean_zero_first(2, 1, 1.0).unwrap();
        let fam = subcubes(&DyadicCube::unit(1), 2, 100).unwrap();
        let r = theta_carleson(&k, &fam, &unit_window(1.0 / 16.0), &ScaleGrid::new(1.0 / 256.0, 1.0, 4).unwrap(), None, 1e-10).unwrap();
        assert!(r.norm <= 1e-3, "{}", r.norm);
    }

    #[test]
    fn constant_theta_diverges_logarithmically() {
        let k = KernelFamily::bump_product(2, 1, 0.5).unwrap();
        let d = theta_divergence(&k, &DyadicCube::unit(1), 6, 4, 1e-10).unwrap();
        assert!(d.diverging, "{d:?}");
        assert!((d.c - 0.5).abs() < 1e-9);
        for w in d.trend.windows(2) {
            assert!((w[1].norm - w[0].norm - 0.25 * std::f64::consts::LN_2).abs() < 1e-9);
        }
        let m = k.cancelling_modification(1e-12).unwrap();
        let d = theta_divergence(&m, &DyadicCube::unit(1), 6, 4, 1e-12).unwrap();
        assert!(!d.diverging && d.trend.last().unwrap().norm < 1e-12, "{d:?}");
    }

    #[test]
    fn truncated_variant_drops_low_scales() {
        let k = KernelFamily::bump_product(1, 1, 1.0).unwrap();
        let window = unit_window(1.0 / 4.0);
        let scales = ScaleGrid::new(1.0 / 16.0, 1.0, 4).unwrap();
        let tau = SampledFunction::from_real_fn(window.clone(), |x| if x[0] < 0.5 { 0.25 } else { 0.0 }).unwrap();
        let full = theta_carleson(&k, &[DyadicCube::unit(1)], &window, &scales, None, 1e-10).unwrap().norm;
        let cut = theta_carleson(&k, &[DyadicCube::unit(1)], &window, &scales, Some(&tau), 1e-10).unwrap().norm;
        // half the points lose two of four octaves
        assert!((cut - 0.75 * full).abs() < 1e-9, "{cut} {full}");
    }

    #[test]
    fn level_sets() {
        let w = unit_window(1.0 / 32.0);
        assert_eq!(level_set_measure(&SampledFunction::zeros(w.clone()), None, 0.1).unwrap(), 0.0);
        let one = SampledFunction::from_real_fn(w.clone(), |_| 1.0).unwrap();
        assert_eq!(level_set_measure(&one, Some(&DyadicCube::unit(1)), 0.5).unwrap(), 1.0);
        assert_eq!(level_set_measure(&one, Some(&DyadicCube::new(2, vec![1])), 0.5).unwrap(), 0.25);
    }

    #[test]
    fn embedding_rejects_zero_and_handles_zero_measure() {
        let w = Grid::from_bounds(1.0 / 16.0, &[(-4.0, 4.0)]).unwrap();
        let scales = ScaleGrid::new(0.25, 1.0, 2).unwrap();
        let bump = Profile::unit_mass(ProfileKind::Bump, 1).unwrap();
        let mu = MeasureSampler::zero(w.clone(), scales).unwrap();
        let fam = [DyadicCube::unit(1)];
        let zero = SampledFunction::zeros(w.clone());
        assert!(embedding_check(&mu, &zero, 2.0, &bump, &fam, &SmoothingOptions::default()).is_err());
        let f = SampledFunction::from_real_fn(w, |x| (-x[0] * x[0]).exp()).unwrap();
        let r = embedding_check(&mu, &f, 2.0, &bump, &fam, &SmoothingOptions::default()).unwrap();
        assert_eq!(r.ratio, 0.0);
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous_and_monotone(c in 0.0f64..5.0, a in 0.1f64..3.0, depth in 0u32..3) {
            let mu = MeasureSampler::from_fn(unit_window(1.0 / 16.0), ScaleGrid::new(1.0 / 64.0, 1.0, 2).unwrap(),
                |x, t| a * (x[0] + t).sin().abs()).unwrap();
            let fam = subcubes(&DyadicCube::unit(1), depth, 100).unwrap();
            let base = carleson_norm(&mu, &fam).unwrap().norm;
            let scaled = carleson_norm(&mu.scaled(c).unwrap(), &fam).unwrap().norm;
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (1.0 + scaled));
            let bigger = subcubes(&DyadicCube::unit(1), depth + 1, 100).unwrap();
            prop_assert!(carleson_norm(&mu, &bigger).unwrap().norm >= base);
        }

        #[test]
        fn chebyshev_and_monotone_levels(seed in 0u64..200, n1 in 0.1f64..2.0, dn in 0.0f64..1.0, q in 1.0f64..4.0) {
            let w = unit_window(1.0 / 64.0);
            let g = SampledFunction::from_real_fn(w.clone(), |x| ((x[0] * 37.0 + seed as f64).sin() + 1.0) * 0.8).unwrap();
            let m1 = level_set_measure(&g, None, n1).unwrap();
            let m2 = level_set_measure(&g, None, n1 + dn).unwrap();
            prop_assert!(m2 <= m1);
            let moment: f64 = g.values().iter().map(|v| v.re.powf(q)).sum::<f64>() * w.cell_volume();
            prop_assert!(m1 <= moment / n1.powf(q) + 1e-12);
        }
    }
}
