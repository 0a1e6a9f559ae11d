//! The multilinear paraproduct `L(f) = int_0^inf Q_t((Q_t^2 beta) prod_i P_t f_i) dt/t`,
//! its kernel, cancellation checks, and the Tb condition for user operators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accretive::{system_window, PseudoAccretiveSystem};
use crate::avgops::{calderon_normalize, lp_projection_on, smooth_approx_on, SmoothingOptions};
use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::gridfn::{for_each_cell, Grid, LpExponent, SampledFunction};
use crate::profile::Profile;
use crate::sqfn::ScaleGrid;

/// An operator taking `m` sampled functions to one sampled function.
pub trait MultilinearOperator {
    fn arity(&self) -> usize;
    fn apply(&self, fs: &[SampledFunction], out: &Grid) -> Result<SampledFunction>;
}

pub struct ZeroOperator {
    pub arity: usize,
}

impl MultilinearOperator for ZeroOperator {
    fn arity(&self) -> usize {
        self.arity
    }

    fn apply(&self, _: &[SampledFunction], out: &Grid) -> Result<SampledFunction> {
        Ok(SampledFunction::zeros(out.clone()))
    }
}

/// `c T`.
pub struct Scaled<T> {
    pub c: Complex64,
    pub inner: T,
}

impl<T: MultilinearOperator> MultilinearOperator for Scaled<T> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn apply(&self, fs: &[SampledFunction], out: &Grid) -> Result<SampledFunction> {
        Ok(self.inner.apply(fs, out)?.scale(self.c))
    }
}

/// Operator given by a closure.
pub struct FnOperator<F> {
    pub arity: usize,
    pub f: F,
}

impl<F> MultilinearOperator for FnOperator<F>
where
    F: Fn(&[SampledFunction], &Grid) -> Result<SampledFunction>,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn apply(&self, fs: &[SampledFunction], out: &Grid) -> Result<SampledFunction> {
        (self.f)(fs, out)
    }
}

/// The paraproduct with symbol `beta`, working on the window of `beta`.
#[derive(Clone, Debug)]
pub struct Paraproduct {
    beta: SampledFunction,
    psi: Profile,
    phi: Profile,
    scales: ScaleGrid,
    m: usize,
    opts: SmoothingOptions,
    /// `(t, Q_t^2 beta)` on the window.
    cache: Vec<(f64, SampledFunction)>,
}

impl Paraproduct {
    /// `psi` must be Calderon-normalised and `phi` of unit mass.
    pub fn new(beta: SampledFunction, psi: Profile, phi: Profile, scales: ScaleGrid, m: usize, opts: SmoothingOptions) -> Result<Self> {
        scales.validate()?;
        if m == 0 {
            return Err(Error::invalid("arity must be at least one"));
        }
        let n = beta.grid().dim();
        if psi.dim != n || phi.dim != n {
            return Err(Error::invalid("profiles must match the dimension of beta"));
        }
        let c = calderon_normalize(&psi)?.constant;
        if (c - 1.0).abs() > 1e-8 {
            return Err(Error::Profile(format!("psi is not Calderon-normalised: int psi^3 dt/t = {c}")));
        }
        if (phi.integral() - 1.0).abs() > 1e-9 {
            return Err(Error::Profile(format!("phi needs integral one, got {}", phi.integral())));
        }
        if beta.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("beta has non-finite values".into()));
        }
        let w = beta.grid().clone();
        let mut cache = Vec::with_capacity(scales.count());
        for t in scales.samples() {
            let reach = (psi.tail_radius(opts.tail_eps) * t / w.h()).ceil() as usize;
            let once = lp_projection_on(&beta, t, &psi, &w.padded(reach), &opts)?;
            cache.push((t, lp_projection_on(&once, t, &psi, &w, &opts)?));
        }
        Ok(Paraproduct { beta, psi, phi, scales, m, opts, cache })
    }

    pub fn window(&self) -> &Grid {
        self.beta.grid()
    }

    pub fn beta(&self) -> &SampledFunction {
        &self.beta
    }

    pub fn scales(&self) -> &ScaleGrid {
        &self.scales
    }

    pub fn psi(&self) -> &Profile {
        &self.psi
    }

    pub fn phi(&self) -> &Profile {
        &self.phi
    }

    /// `(t, Q_t^2 beta)` for every scale sample.
    pub fn q2_beta(&self) -> &[(f64, SampledFunction)] {
        &self.cache
    }

    /// `(Q_t^2 beta) prod_i P_t f_i` on the window.
    fn inner(&self, k: usize, fs: &[SampledFunction]) -> Result<SampledFunction> {
        let (t, q2b) = &self.cache[k];
        let mut acc = q2b.clone();
        for f in fs {
            acc = acc.mul(&smooth_approx_on(f, *t, &self.phi, self.window(), &self.opts)?)?;
        }
        Ok(acc)
    }

    fn check_arity(&self, fs: &[SampledFunction]) -> Result<()> {
        if fs.len() != self.m {
            return Err(Error::invalid(format!("paraproduct takes {} functions, got {}", self.m, fs.len())));
        }
        Ok(())
    }

    /// `L(f_1, ..., f_m)` on the window.
    pub fn eval_l(&self, fs: &[SampledFunction]) -> Result<SampledFunction> {
        self.check_arity(fs)?;
        let w = self.scales.weight();
        let grid = self.window();
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k in 0..self.cache.len() {
            let g = self.inner(k, fs)?;
            let q = lp_projection_on(&g, self.cache[k].0, &self.psi, grid, &self.opts)?;
            for (a, v) in acc.iter_mut().zip(q.values()) {
                *a += v * w;
            }
        }
        SampledFunction::new(grid.clone(), acc)
    }

    /// `sum_k w <(Q_t^2 beta) prod_i P_t f_i, Q_t g>`, the dual form of `<L(f), g>`.
    pub fn dual_pairing(&self, fs: &[SampledFunction], g: &SampledFunction) -> Result<Complex64> {
        self.check_arity(fs)?;
        let w = self.scales.weight();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.cache.len() {
            let inner = self.inner(k, fs)?;
            let qg = lp_projection_on(g, self.cache[k].0, &self.psi, self.window(), &self.opts)?;
            acc += inner.pairing(&qg)? * w;
        }
        Ok(acc)
    }

    /// `l(x, y) = int_0^inf int psi_t(x - u) Q_t^2 beta(u) prod_i phi_t(u - y_i) du dt/t`.
    pub fn eval_kernel(&self, x: &[f64], ys: &[Vec<f64>]) -> Result<Complex64> {
        if ys.len() != self.m {
            return Err(Error::invalid(format!("kernel takes {} points y, got {}", self.m, ys.len())));
        }
        if ys.iter().all(|y| y.as_slice() == x) {
            return Err(Error::Domain("kernel is singular on the diagonal".into()));
        }
        let grid = self.window();
        let n = grid.dim();
        let h = grid.h();
        let w = self.scales.weight();
        let mut total = Complex64::new(0.0, 0.0);
        for (t, q2b) in &self.cache {
            let reach = self.phi.tail_radius(self.opts.tail_eps) * t;
            let mut lo = vec![0i64; n];
            let mut hi = vec![0i64; n];
            for a in 0..n {
                let o = grid.origin()[a];
                lo[a] = (((ys[0][a] - reach - o) / h).floor() as i64).max(0);
                hi[a] = (((ys[0][a] + reach - o) / h).ceil() as i64 + 1).min(grid.shape()[a] as i64);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            let mut u = vec![0.0; n];
            for_each_cell(&lo, &hi, |idx| {
                for a in 0..n {
                    u[a] = grid.origin()[a] + (idx[a] as f64 + 0.5) * h;
                }
                let mut prod = self.psi.dilated(*t, dist(x, &u));
                for y in ys {
                    if prod == 0.0 {
                        break;
                    }
                    prod *= self.phi.dilated(*t, dist(&u, y));
                }
                if prod != 0.0 {
                    acc += q2b.values()[grid.flat(idx)] * prod;
                }
            });
            total += acc * grid.cell_volume() * w;
        }
        Ok(total)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

impl MultilinearOperator for Paraproduct {
    fn arity(&self) -> usize {
        self.m
    }

    fn apply(&self, fs: &[SampledFunction], out: &Grid) -> Result<SampledFunction> {
        self.eval_l(fs)?.restrict_to(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CancellationReport {
    /// `|<L(1, ..., 1), phi> - <beta, phi>|`.
    pub pairing_error: f64,
    /// `|<beta, phi>|`.
    pub reference: f64,
    /// `|<L^{*i}(1, ..., 1), phi>|` for each slot.
    pub transpose_residuals: Vec<f64>,
    /// `||beta||_inf ||phi||_1`.
    pub transpose_scale: f64,
    /// `t_max / dist(supp phi, boundary)`: the finite-window truncation rate.
    pub window_budget: f64,
}

/// Compare `L(1, ..., 1)` with `beta` and `L^{*i}(1, ..., 1)` with zero,
/// tested against `phi` (made mean zero on its support first). The constant
/// 1 is the window-filling constant.
pub fn test_cancellation(p: &Paraproduct, phi_test: &SampledFunction) -> Result<CancellationReport> {
    let grid = p.window();
    let phi = phi_test.restrict_to(grid)?;
    let support: Vec<usize> = (0..phi.values().len()).filter(|&k| phi.values()[k] != Complex64::new(0.0, 0.0)).collect();
    if support.is_empty() {
        return Err(Error::Degenerate("test function vanishes".into()));
    }
    let mean = support.iter().map(|&k| phi.values()[k]).sum::<Complex64>() / support.len() as f64;
    let mut vals = phi.values().to_vec();
    for &k in &support {
        vals[k] -= mean;
    }
    let phi = SampledFunction::new(grid.clone(), vals)?;
    let l1 = phi.lp_norm(LpExponent::new(1.0)?);
    if phi.integral().norm() > 1e-12 * l1.max(f64::MIN_POSITIVE) {
        return Err(Error::Domain(format!("test function mean {} is not zero", phi.integral())));
    }

    let one = SampledFunction::constant(grid.clone(), Complex64::new(1.0, 0.0));
    let ones = vec![one.clone(); p.m];
    let l_ones = p.eval_l(&ones)?;
    let reference = p.beta.pairing(&phi)?;
    let pairing_error = (l_ones.pairing(&phi)? - reference).norm();
    let mut transpose_residuals = Vec::with_capacity(p.m);
    for i in 0..p.m {
        let mut args = ones.clone();
        args[i] = phi.clone();
        transpose_residuals.push(p.eval_l(&args)?.pairing(&one)?.norm());
    }

    let t_max = p.scales.t_max;
    let bounds = grid.bounds();
    let mut gap = f64::INFINITY;
    for &k in &support {
        let c = grid.center(k);
        for (a, &(lo, hi)) in bounds.iter().enumerate() {
            gap = gap.min(c[a] - lo).min(hi - c[a]);
        }
    }
    Ok(CancellationReport {
        pairing_error,
        reference: reference.norm(),
        transpose_residuals,
        transpose_scale: p.beta.lp_norm(LpExponent::INFINITY) * l1,
        window_budget: t_max / gap,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CzPlan {
    pub seed: u64,
    pub samples: usize,
    /// Range of `d = sum_i |x - y_i|`.
    pub d_min: f64,
    pub d_max: f64,
    /// `x` is drawn from the cube of this half-width around the centre.
    pub spread: f64,
    pub gamma: f64,
    /// Declared constants.
    pub size_constant: f64,
    pub regularity_constant: f64,
}

impl Default for CzPlan {
    fn default() -> Self {
        CzPlan {
            seed: 3,
            samples: 500,
            d_min: 0.05,
            d_max: 20.0,
            spread: 1.0,
            gamma: 1.0,
            size_constant: f64::INFINITY,
            regularity_constant: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzWitness {
    pub x: Vec<f64>,
    pub x_prime: Option<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CzReport {
    /// `max |l(x, y)| d^{mn}`.
    pub size_measured: f64,
    /// `max |l(x, y) - l(x', y)| d^{mn + gamma} / |x - x'|^gamma`.
    pub regularity_measured: f64,
    pub size_witness: Option<CzWitness>,
    pub regularity_witness: Option<CzWitness>,
    pub samples: usize,
    pub size_pass: bool,
    pub regularity_pass: bool,
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|a| a / r).collect();
        }
    }
}

/// Seeded sweep of the kernel size and regularity bounds around `centre`.
pub fn cz_sweep(p: &Paraproduct, centre: &[f64], plan: &CzPlan) -> Result<CzReport> {
    if !(plan.d_min > 0.0 && plan.d_max > plan.d_min) || !(plan.gamma > 0.0 && plan.gamma <= 1.0) {
        return Err(Error::invalid("need 0 < d_min < d_max and gamma in (0, 1]"));
    }
    let n = p.window().dim();
    let m = p.m;
    let mn = (m * n) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let (mut size, mut reg) = (0.0f64, 0.0f64);
    let (mut size_w, mut reg_w) = (None, None);
    for _ in 0..plan.samples {
        let x: Vec<f64> = centre.iter().map(|c| c + plan.spread * rng.gen_range(-1.0..1.0)).collect();
        let d = (plan.d_min.ln() + rng.gen::<f64>() * (plan.d_max / plan.d_min).ln()).exp();
        let mut split: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = split.iter().sum();
        split.iter_mut().for_each(|s| *s /= total);
        let ys: Vec<Vec<f64>> = split
            .iter()
            .map(|s| {
                let u = unit_direction(&mut rng, n);
                x.iter().zip(&u).map(|(xi, ui)| xi + d * s * ui).collect()
            })
            .collect();
        let lx = p.eval_kernel(&x, &ys)?;
        let r = lx.norm() * d.powf(mn);
        if r > size || size_w.is_none() {
            size = size.max(r);
            size_w = Some(CzWitness { x: x.clone(), x_prime: None, ys: ys.clone(), ratio: r });
        }
        let u = unit_direction(&mut rng, n);
        let step = d / 2.0 * rng.gen_range(0.01..1.0f64);
        let xp: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + step * b).collect();
        let lxp = p.eval_kernel(&xp, &ys)?;
        let r = (lx - lxp).norm() * d.powf(mn + plan.gamma) / step.powf(plan.gamma);
        if r > reg || reg_w.is_none() {
            reg = reg.max(r);
            reg_w = Some(CzWitness { x, x_prime: Some(xp), ys, ratio: r });
        }
    }
    Ok(CzReport {
        size_measured: size,
        regularity_measured: reg,
        size_witness: size_w,
        regularity_witness: reg_w,
        samples: plan.samples,
        size_pass: size.is_finite() && size <= plan.size_constant,
        regularity_pass: reg.is_finite() && reg <= plan.regularity_constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TbOptions {
    pub h: f64,
    /// Window for `b_Q` and `P_t b_Q` is `Q` enlarged by this many sides.
    pub margin: f64,
    pub budget: f64,
    pub smoothing: SmoothingOptions,
}

impl Default for TbOptions {
    fn default() -> Self {
        TbOptions { h: 1.0 / 64.0, margin: 2.0, budget: f64::INFINITY, smoothing: SmoothingOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TbReport {
    /// `|Q|^{-1} int_Q (int_0^{l(Q)} |Q_t T(P_t b^1, ..., P_t b^m)|^2 dt/t)^{q/2} dx`.
    pub value: f64,
    pub q: f64,
    pub scales_used: usize,
    pub budget: f64,
    pub pass: bool,
    pub warning: Option<String>,
}

/// The Tb testing condition for an operator on the system `b_Q`.
#[allow(clippy::too_many_arguments)]
pub fn tb_condition(
    op: &dyn MultilinearOperator,
    systems: &[PseudoAccretiveSystem],
    cube: &DyadicCube,
    q: f64,
    scales: &ScaleGrid,
    psi: &Profile,
    phi: &Profile,
    opts: &TbOptions,
) -> Result<TbReport> {
    if op.arity() != systems.len() {
        return Err(Error::invalid(format!("operator takes {} functions, system has {}", op.arity(), systems.len())));
    }
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidExponent(format!("q = {q} must be finite and above 1")));
    }
    let warning = (q < 2.0).then(|| format!("q = {q} is below 2, outside the range of the Tb theorem"));
    let window = system_window(cube, opts.h, opts.margin)?;
    let on_q = Grid::on_cube(cube, opts.h)?;
    let bs = systems.iter().map(|s| s.sample(cube, &window)).collect::<Result<Vec<_>>>()?;
    let ts = scales.samples_in(0.0, cube.side());
    let w = scales.weight();
    let mut acc = vec![0.0; on_q.len()];
    for &t in &ts {
        let pb = bs.iter().map(|b| smooth_approx_on(b, t, phi, &window, &opts.smoothing)).collect::<Result<Vec<_>>>()?;
        let tb = op.apply(&pb, &window)?;
        let qt = lp_projection_on(&tb, t, psi, &on_q, &opts.smoothing)?;
        for (a, v) in acc.iter_mut().zip(qt.values()) {
            *a += v.norm_sqr() * w;
        }
    }
    let value = acc.iter().map(|s| s.powf(q / 2.0)).sum::<f64>() / acc.len() as f64;
    Ok(TbReport { value, q, scales_used: ts.len(), budget: opts.budget, pass: value <= opts.budget, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accretive::builtin_system;
    use crate::avgops::normalized_mexican_hat;
    use crate::profile::ProfileKind;
    use proptest::prelude::*;

    fn setup(h: f64, half: f64, beta_amp: f64) -> Paraproduct {
        let t_min = 4.0 * h;
        let grid = Grid::from_bounds(h, &[(-half, half)]).unwrap();
        let bump = Profile::new(ProfileKind::Bump, 1).unwrap();
        let beta = SampledFunction::from_real_fn(grid, |x| beta_amp * bump.value(x[0].abs())).unwrap();
        let psi = normalized_mexican_hat(1).unwrap();
        let phi = Profile::unit_mass(ProfileKind::Bump, 1).unwrap();
        Paraproduct::new(beta, psi, phi, ScaleGrid::new(t_min, 2.0, 4).unwrap(), 2, SmoothingOptions::default()).unwrap()
    }

    fn gaussian(grid: &Grid, c: f64, s: f64) -> SampledFunction {
        SampledFunction::from_real_fn(grid.clone(), |x| (-((x[0] - c) / s).powi(2)).exp()).unwrap()
    }

    #[test]
    fn zero_symbol_gives_zero() {
        let p = setup(1.0 / 32.0, 16.0, 0.0);
        let f = gaussian(p.window(), 0.0, 1.0);
        assert!(p.eval_l(&[f.clone(), f.clone()]).unwrap().is_zero());
        let r = test_cancellation(&p, &gaussian(p.window(), 0.5, 0.5)).unwrap();
        assert_eq!(r.pairing_error, 0.0);
        assert!(r.transpose_residuals.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_unnormalised_psi() {
        let grid = Grid::from_bounds(0.125, &[(-4.0, 4.0)]).unwrap();
        let beta = SampledFunction::zeros(grid);
        let raw = Profile::new(ProfileKind::MexicanHat, 1).unwrap();
        let phi = Profile::unit_mass(ProfileKind::Bump, 1).unwrap();
        let s = ScaleGrid::new(0.5, 1.0, 2).unwrap();
        assert!(Paraproduct::new(beta, raw, phi, s, 2, SmoothingOptions::default()).is_err());
    }

    #[test]
    fn pairing_duality() {
        let p = setup(1.0 / 32.0, 24.0, 1.0);
        let f1 = gaussian(p.window(), 0.3, 1.0);
        let f2 = gaussian(p.window(), -0.2, 0.7);
        let g = gaussian(p.window(), 0.1, 0.4);
        let direct = p.eval_l(&[f1.clone(), f2.clone()]).unwrap().pairing(&g).unwrap();
        let dual = p.dual_pairing(&[f1, f2], &g).unwrap();
        assert!((direct - dual).norm() <= 1e-10 * direct.norm(), "{direct} {dual}");
    }

    #[test]
    fn kernel_vanishes_far_away_and_rejects_diagonal() {
        let p = setup(1.0 / 32.0, 24.0, 1.0);
        assert!(p.eval_kernel(&[0.0], &[vec![0.0], vec![0.0]]).is_err());
        let far = p.eval_kernel(&[0.0], &[vec![20.0], vec![-20.0]]).unwrap();
        assert!(far.norm() < 1e-12);
        assert!(p.eval_kernel(&[0.0], &[vec![0.1], vec![0.2]]).unwrap().norm() > 0.0);
    }

    #[test]
    fn kernel_integrates_to_l() {
        // int l(x, y) f1(y1) f2(y2) dy = L(f1, f2)(x) up to discretisation
        let p = setup(1.0 / 32.0, 24.0, 1.0);
        let grid = p.window();
        let f1 = gaussian(grid, 0.2, 0.5);
        let f2 = gaussian(grid, -0.1, 0.5);
        let l = p.eval_l(&[f1.clone(), f2.clone()]).unwrap();
        let x = [0.25 + 1.0 / 64.0];
        let ys: Vec<f64> = (0..128).map(|k| -2.0 + (k as f64 + 0.5) / 32.0).collect();
        let mut acc = 0.0;
        for &a in &ys {
            for &b in &ys {
                // the single diagonal cell is skipped
                if let Ok(k) = p.eval_kernel(&x, &[vec![a], vec![b]]) {
                    acc += k.re * f1.value_at(&[a]).re * f2.value_at(&[b]).re;
                }
            }
        }
        acc /= 1024.0;
        let want = l.value_at(&x).re;
        assert!((acc - want).abs() <= 0.02 * want.abs(), "{acc} {want}");
    }

    #[test]
    fn zero_operator_condition_is_zero() {
        let sys = builtin_system("characteristic", 1, &[4.0, 4.0]).unwrap();
        let psi = normalized_mexican_hat(1).unwrap();
        let phi = Profile::unit_mass(ProfileKind::Bump, 1).unwrap();
        let scales = ScaleGrid::new(1.0 / 8.0, 1.0, 2).unwrap();
        let r = tb_condition(&ZeroOperator { arity: 2 }, &sys, &DyadicCube::unit(1), 2.0, &scales, &psi, &phi, &TbOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.warning.is_none());
        let r = tb_condition(&ZeroOperator { arity: 2 }, &sys, &DyadicCube::unit(1), 1.5, &scales, &psi, &phi, &TbOptions::default()).unwrap();
        assert!(r.warning.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn linear_in_each_slot(a in -2.0f64..2.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0) {
            let p = setup(1.0 / 16.0, 12.0, 1.0);
            let f = gaussian(p.window(), c1, 0.6);
            let g = gaussian(p.window(), c2, 0.9);
            let k = gaussian(p.window(), 0.0, 1.3);
            let fg = f.add(&g.scale(Complex64::new(a, 0.0))).unwrap();
            let lhs = p.eval_l(&[fg, k.clone()]).unwrap();
            let rhs = p.eval_l(&[f, k.clone()]).unwrap().add(&p.eval_l(&[g, k]).unwrap().scale(Complex64::new(a, 0.0))).unwrap();
            let scale = lhs.lp_norm(LpExponent::INFINITY).max(1e-300);
            for (u, v) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((u - v).norm() <= 1e-12 * scale);
            }
        }

        #[test]
        fn kernel_symmetric_in_y(x in -1.0f64..1.0, y1 in -2.0f64..2.0, y2 in -2.0f64..2.0) {
            let p = setup(1.0 / 32.0, 12.0, 1.0);
            let a = p.eval_kernel(&[x], &[vec![y1], vec![y2]]).unwrap();
            let b = p.eval_kernel(&[x], &[vec![y2], vec![y1]]).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }

        #[test]
        fn tb_value_homogeneous(c in 0.1f64..3.0) {
            let p = setup(1.0 / 32.0, 8.0, 1.0);
            let sys = builtin_system("characteristic", 1, &[4.0, 4.0]).unwrap();
            let psi = normalized_mexican_hat(1).unwrap();
            let phi = Profile::unit_mass(ProfileKind::Bump, 1).unwrap();
            let scales = ScaleGrid::new(1.0 / 8.0, 1.0, 2).unwrap();
            let opts = TbOptions { h: 1.0 / 32.0, ..Default::default() };
            let base = tb_condition(&p, &sys, &DyadicCube::unit(1), 2.0, &scales, &psi, &phi, &opts).unwrap().value;
            let scaled = Scaled { c: Complex64::new(c, 0.0), inner: p };
            let v = tb_condition(&scaled, &sys, &DyadicCube::unit(1), 2.0, &scales, &psi, &phi, &opts).unwrap().value;
            prop_assert!((v - c * c * base).abs() <= 1e-10 * v.max(1e-300));
        }
    }
}
