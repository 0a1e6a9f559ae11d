//! Dyadic averages `A_t`, smooth approximations `P_t`, Littlewood-Paley
//! pieces `Q_t`, their multilinear products, the telescoping error split and
//! the reproducing formula `int Q_t^3 dt/t = I`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conv::{convolve, span_cells, ConvMethod, Stencil};
use crate::dyadic::{selector_generation, GenerationRange};
use crate::error::{Error, Result};
use crate::gridfn::{BoxSums, Grid, SampledFunction};
use crate::kernels::raw_stencil;
use crate::profile::{Profile, ProfileKind};
use crate::quad::gauss_legendre;
use crate::sqfn::ScaleGrid;

/// Discretisation settings shared by `P_t` and `Q_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingOptions {
    pub c_res: f64,
    pub tail_eps: f64,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        SmoothingOptions { c_res: 4.0, tail_eps: 1e-10 }
    }
}

/// `A_t f(x)`: the average of `f` over `Q(x, t)`, the smallest dyadic cube
/// containing `x` with side strictly above `t`.
pub fn dyadic_average(f: &SampledFunction, t: f64, range: &GenerationRange) -> Result<SampledFunction> {
    let grid = f.grid();
    if !(t >= grid.h()) {
        return Err(Error::Resolution { t, c_res: 1.0, limit: grid.h() });
    }
    let g_cell = grid.cell_generation().ok_or_else(|| Error::invalid("dyadic averages need a dyadic grid"))?;
    let g = selector_generation(t);
    range.check(g)?;
    let span = 1i64 << (g_cell - g) as u32;
    let sums = BoxSums::new(grid, f.values());
    let offset = grid.lattice_offset();
    let n = grid.dim();
    let cells = (span as f64).powi(n as i32);
    let mut values = Vec::with_capacity(grid.len());
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for k in 0..grid.len() {
        let idx = grid.unflat(k);
        for axis in 0..n {
            let global = idx[axis] as i64 + offset[axis];
            lo[axis] = global.div_euclid(span) * span - offset[axis];
            hi[axis] = lo[axis] + span;
        }
        values.push(sums.sum(&lo, &hi) / cells);
    }
    SampledFunction::new(grid.clone(), values)
}

fn check_resolution(t: f64, h: f64, opts: &SmoothingOptions) -> Result<()> {
    if !(t >= opts.c_res * h) {
        return Err(Error::Resolution { t, c_res: opts.c_res, limit: opts.c_res * h });
    }
    Ok(())
}

/// Stencil of `P_t`: the sampled profile rescaled to unit sum.
pub fn p_stencil(profile: &Profile, t: f64, h: f64, span: usize, opts: &SmoothingOptions) -> Result<Stencil> {
    if (profile.integral() - 1.0).abs() > 1e-9 {
        return Err(Error::Profile(format!("P_t needs integral one, got {}", profile.integral())));
    }
    raw_stencil(profile, t, h, span, opts.tail_eps).normalized_to_unit_sum()
}

/// Stencil of `Q_t`: the sampled profile made exactly mean free.
pub fn q_stencil(profile: &Profile, t: f64, h: f64, span: usize, opts: &SmoothingOptions) -> Result<Stencil> {
    if profile.integral().abs() > 1e-12 * profile.amplitude.abs() {
        return Err(Error::Profile(format!("Q_t needs a mean-zero profile, got integral {}", profile.integral())));
    }
    Ok(raw_stencil(profile, t, h, span, opts.tail_eps).mean_free())
}

/// `P_t f = phi_t * f` on the window of `f`.
pub fn smooth_approx(f: &SampledFunction, t: f64, profile: &Profile, opts: &SmoothingOptions) -> Result<SampledFunction> {
    smooth_approx_on(f, t, profile, f.grid(), opts)
}

/// `P_t f` sampled on another window of the same lattice.
pub fn smooth_approx_on(f: &SampledFunction, t: f64, profile: &Profile, out: &Grid, opts: &SmoothingOptions) -> Result<SampledFunction> {
    check_resolution(t, out.h(), opts)?;
    let s = p_stencil(profile, t, out.h(), span_cells(f.grid(), out), opts)?;
    convolve(f, &s, out, ConvMethod::Auto)
}

/// `Q_t f = psi_t * f` on the window of `f`.
pub fn lp_projection(f: &SampledFunction, t: f64, profile: &Profile, opts: &SmoothingOptions) -> Result<SampledFunction> {
    lp_projection_on(f, t, profile, f.grid(), opts)
}

/// `Q_t f` sampled on another window of the same lattice.
pub fn lp_projection_on(f: &SampledFunction, t: f64, profile: &Profile, out: &Grid, opts: &SmoothingOptions) -> Result<SampledFunction> {
    check_resolution(t, out.h(), opts)?;
    let s = q_stencil(profile, t, out.h(), span_cells(f.grid(), out), opts)?;
    convolve(f, &s, out, ConvMethod::Auto)
}

/// `Q_t^3 f` on the window of `f`, with intermediates on padded windows so
/// no mass is lost between the three applications.
pub fn lp_projection_cubed(f: &SampledFunction, t: f64, profile: &Profile, opts: &SmoothingOptions) -> Result<SampledFunction> {
    let grid = f.grid();
    let reach = (profile.tail_radius(opts.tail_eps) * t / grid.h()).ceil() as usize;
    let g1 = lp_projection_on(f, t, profile, &grid.padded(2 * reach), opts)?;
    let g2 = lp_projection_on(&g1, t, profile, &grid.padded(reach), opts)?;
    lp_projection_on(&g2, t, profile, grid, opts)
}

fn product(fs: &[SampledFunction]) -> Result<SampledFunction> {
    let mut it = fs.iter();
    let first = it.next().ok_or_else(|| Error::invalid("need at least one function"))?.clone();
    it.try_fold(first, |acc, f| acc.mul(f))
}

/// `AA_t(f) = prod_i A_t f_i`.
pub fn multi_average(fs: &[SampledFunction], t: f64, range: &GenerationRange) -> Result<SampledFunction> {
    let parts = fs.iter().map(|f| dyadic_average(f, t, range)).collect::<Result<Vec<_>>>()?;
    product(&parts)
}

/// `PP_t(f) = prod_i P_t f_i`.
pub fn multi_smooth(fs: &[SampledFunction], t: f64, profile: &Profile, opts: &SmoothingOptions) -> Result<SampledFunction> {
    let parts = fs.iter().map(|f| smooth_approx(f, t, profile, opts)).collect::<Result<Vec<_>>>()?;
    product(&parts)
}

/// `E_t^j = (prod_{i<j} A_t f_i)(A_t f_j - P_t f_j)(prod_{i>j} P_t f_i)`,
/// which telescope to `AA_t(f) - PP_t(f)`.
pub fn error_split(
    fs: &[SampledFunction],
    t: f64,
    profile: &Profile,
    range: &GenerationRange,
    opts: &SmoothingOptions,
) -> Result<Vec<SampledFunction>> {
    let a = fs.iter().map(|f| dyadic_average(f, t, range)).collect::<Result<Vec<_>>>()?;
    let p = fs.iter().map(|f| smooth_approx(f, t, profile, opts)).collect::<Result<Vec<_>>>()?;
    (0..fs.len())
        .map(|j| {
            let mut e = a[j].sub(&p[j])?;
            for ai in &a[..j] {
                e = e.mul(ai)?;
            }
            for pi in &p[j + 1..] {
                e = e.mul(pi)?;
            }
            Ok(e)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CalderonNormalization {
    pub profile: Profile,
    /// Measured `int_0^inf psi^(t e_1)^3 dt/t` before rescaling.
    pub constant: f64,
    /// The same integral for the rescaled profile.
    pub remeasured: f64,
}

/// `int_{t_min}^{t_max} psi^(t e_1)^3 dt/t`, Gauss-Legendre in `ln t`.
pub fn calderon_integral(profile: &Profile, t_min: f64, t_max: f64) -> Result<f64> {
    let gl = gauss_legendre(16);
    let (a, b) = (t_min.ln(), t_max.ln());
    let panels = ((b - a) * 2.0).ceil().max(1.0) as usize;
    let width = (b - a) / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        for &(x, w) in &gl {
            let s = lo + width * (x + 1.0) / 2.0;
            let v = profile
                .fourier(s.exp())
                .ok_or_else(|| Error::Profile("no Fourier transform available for this profile".into()))?;
            sum += v * v * v * w * width / 2.0;
        }
    }
    Ok(sum)
}

/// Rescale a mean-zero profile so `int_0^inf psi^(t e_1)^3 dt/t = 1`.
pub fn calderon_normalize(profile: &Profile) -> Result<CalderonNormalization> {
    if profile.integral().abs() > 1e-12 * profile.amplitude.abs() {
        return Err(Error::Profile(format!("profile has nonzero integral {}", profile.integral())));
    }
    let c = calderon_integral(profile, 1e-4, 1e4)?;
    let wider = calderon_integral(profile, 1e-6, 1e6)?;
    if !(c > 0.0) {
        return Err(Error::Profile(format!("Calderon constant {c} is not positive")));
    }
    if (wider - c).abs() > 1e-9 * c {
        return Err(Error::Profile("Calderon integral does not converge on the scale range".into()));
    }
    let normalized = profile.scaled(c.powf(-1.0 / 3.0));
    let remeasured = calderon_integral(&normalized, 1e-4, 1e4)?;
    Ok(CalderonNormalization { profile: normalized, constant: c, remeasured })
}

/// The default mean-zero profile, normalised.
pub fn normalized_mexican_hat(n: usize) -> Result<Profile> {
    Ok(calderon_normalize(&Profile::new(ProfileKind::MexicanHat, n)?)?.profile)
}

/// `sum_k Q_{t_k}^3 f w`, the truncated reproducing formula.
pub fn reproduce(f: &SampledFunction, scales: &ScaleGrid, profile: &Profile, opts: &SmoothingOptions) -> Result<SampledFunction> {
    scales.validate()?;
    let w = scales.weight();
    let mut acc = vec![Complex64::new(0.0, 0.0); f.grid().len()];
    for t in scales.samples() {
        let q3 = lp_projection_cubed(f, t, profile, opts)?;
        for (a, v) in acc.iter_mut().zip(q3.values()) {
            *a += v * w;
        }
    }
    SampledFunction::new(f.grid().clone(), acc)
}
