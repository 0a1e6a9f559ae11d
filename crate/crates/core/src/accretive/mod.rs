//! Pseudo-accretive systems `b_Q^i`, the size / accretivity / compatibility
//! conditions, and the cancellation condition for `Theta_t` on the system.

mod exact;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::{subcubes, DyadicCube};
use crate::error::{Error, Result};
use crate::gridfn::{BoxSums, Grid, SampledFunction};
use crate::kernels::{ApplyOptions, KernelFamily};
use crate::sqfn::{IndexTuple, ScaleGrid};

pub use exact::{cube_bounds, render, Piece, PiecewisePoly, Rational};

pub type PointFn = Arc<dyn Fn(&DyadicCube, &[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
enum Generator {
    Characteristic,
    Gaussian,
    Poisson,
    /// Slot 1 or 2 of the alternating pair.
    Alternating(usize),
    Noncompatible,
    Pointwise(PointFn),
    Table(Arc<BTreeMap<DyadicCube, SampledFunction>>),
}

/// One slot `i` of a system `Q -> b_Q^i` with its exponent `q_i`.
#[derive(Clone)]
pub struct PseudoAccretiveSystem {
    name: String,
    slot: usize,
    exponent: f64,
    generator: Generator,
}

impl std::fmt::Debug for PseudoAccretiveSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PseudoAccretiveSystem({} slot {}, q = {})", self.name, self.slot, self.exponent)
    }
}

fn check_exponent(q: f64) -> Result<()> {
    if !(q > 1.0) {
        return Err(Error::InvalidExponent(format!("system exponent {q} must exceed 1")));
    }
    Ok(())
}

impl PseudoAccretiveSystem {
    fn builtin(name: &str, slot: usize, exponent: f64, generator: Generator) -> Result<Self> {
        check_exponent(exponent)?;
        Ok(PseudoAccretiveSystem { name: name.into(), slot, exponent, generator })
    }

    /// System given by a pointwise formula `(Q, x) -> b_Q(x)`.
    pub fn pointwise(name: &str, slot: usize, exponent: f64, f: PointFn) -> Result<Self> {
        Self::builtin(name, slot, exponent, Generator::Pointwise(f))
    }

    /// System given by stored functions keyed by cube.
    pub fn table(name: &str, slot: usize, exponent: f64, entries: BTreeMap<DyadicCube, SampledFunction>) -> Result<Self> {
        Self::builtin(name, slot, exponent, Generator::Table(Arc::new(entries)))
    }

    /// Slot `k` (1 or 2) of the alternating pair on the line.
    pub fn alternating_slot(k: usize, exponent: f64) -> Result<Self> {
        if k != 1 && k != 2 {
            return Err(Error::invalid("the alternating pair has slots 1 and 2"));
        }
        Self::builtin("alternating", k, exponent, Generator::Alternating(k))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn with_exponent(&self, exponent: f64) -> Result<Self> {
        check_exponent(exponent)?;
        Ok(PseudoAccretiveSystem { exponent, ..self.clone() })
    }

    fn line_only(&self) -> bool {
        matches!(self.generator, Generator::Alternating(_) | Generator::Noncompatible)
    }

    /// `b_Q(x)` for formula-defined systems.
    pub fn value(&self, cube: &DyadicCube, x: &[f64]) -> Option<Complex64> {
        let l = cube.side();
        let c = cube.center();
        let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
        let u = (x[0] - cube.lower(0)) / l;
        let on = cube.contains(x);
        let re = match &self.generator {
            Generator::Characteristic => on as u8 as f64,
            Generator::Gaussian => (-r2 / (l * l)).exp(),
            Generator::Poisson => {
                let n = cube.dim() as f64;
                l.powf(n + 1.0) / (l * l + r2).powf((n + 1.0) / 2.0)
            }
            Generator::Alternating(1) => match on {
                false => 0.0,
                true if u < 0.75 => 1.0,
                true => -1.0,
            },
            Generator::Alternating(_) => match on {
                false => 0.0,
                true if u < 0.25 => -1.0,
                true => 1.0,
            },
            Generator::Noncompatible => {
                if on {
                    2.0 * u - 0.5
                } else {
                    0.0
                }
            }
            Generator::Pointwise(f) => return Some(f(cube, x)),
            Generator::Table(_) => return None,
        };
        Some(Complex64::new(re, 0.0))
    }

    /// `b_Q` sampled on `grid`.
    pub fn sample(&self, cube: &DyadicCube, grid: &Grid) -> Result<SampledFunction> {
        if self.line_only() && cube.dim() != 1 {
            return Err(Error::invalid(format!("the {} system is defined on the line only", self.name)));
        }
        if let Generator::Table(t) = &self.generator {
            let f = t.get(cube).ok_or_else(|| Error::invalid(format!("no stored function for cube {cube}")))?;
            return f.restrict_to(grid);
        }
        SampledFunction::from_fn(grid.clone(), |x| self.value(cube, x).unwrap_or_default())
    }

    /// Exact piecewise-polynomial form on the line, when available.
    pub fn exact_form(&self, cube: &DyadicCube) -> Option<PiecewisePoly> {
        if cube.dim() != 1 {
            return None;
        }
        let (a, b) = cube_bounds(cube);
        let l = &b - &a;
        let one = Rational::from_integer(1.into());
        let at = |num: i64| &a + &l * Rational::new(num.into(), 4.into());
        Some(match &self.generator {
            Generator::Characteristic => PiecewisePoly::constant_on(a, b, one),
            Generator::Alternating(1) => PiecewisePoly::new(vec![
                Piece { a: a.clone(), b: at(3), coeffs: vec![one.clone()] },
                Piece { a: at(3), b, coeffs: vec![-one] },
            ]),
            Generator::Alternating(_) => PiecewisePoly::new(vec![
                Piece { a: a.clone(), b: at(1), coeffs: vec![-one.clone()] },
                Piece { a: at(1), b, coeffs: vec![one] },
            ]),
            Generator::Noncompatible => {
                // 2 (x - a) / l - 1/2
                let two = Rational::from_integer(2.into());
                let slope = &two / &l;
                let c0 = -(&slope * &a) - Rational::new(1.into(), 2.into());
                PiecewisePoly::new(vec![Piece { a, b, coeffs: vec![c0, slope] }])
            }
            _ => return None,
        })
    }

    /// `(eps, 1/eps)`-type bounds `lo <= b_Q <= hi` on the cube itself.
    pub fn range_on_cube(&self, n: usize) -> Option<(f64, f64)> {
        let n = n as f64;
        match self.generator {
            Generator::Characteristic => Some((1.0, 1.0)),
            Generator::Gaussian => Some(((-n / 4.0).exp(), 1.0)),
            Generator::Poisson => Some(((1.0 + n / 4.0).powf(-(n + 1.0) / 2.0), 1.0)),
            _ => None,
        }
    }
}

/// The named example families. `exponents` gives one `q_i` per slot.
pub fn builtin_system(name: &str, n: usize, exponents: &[f64]) -> Result<Vec<PseudoAccretiveSystem>> {
    let m = exponents.len();
    if m == 0 || n == 0 {
        return Err(Error::invalid("need at least one slot and one dimension"));
    }
    let gen = |slot: usize| -> Result<Generator> {
        Ok(match name {
            "characteristic" => Generator::Characteristic,
            "gaussian" => Generator::Gaussian,
            "poisson" => Generator::Poisson,
            "alternating" => {
                if n != 1 || m > 2 {
                    return Err(Error::invalid("the alternating system is a pair on the line"));
                }
                Generator::Alternating(slot)
            }
            "noncompatible" => {
                if n != 1 {
                    return Err(Error::invalid("the noncompatible system lives on the line"));
                }
                Generator::Noncompatible
            }
            other => return Err(Error::invalid(format!("unknown system '{other}'"))),
        })
    };
    exponents
        .iter()
        .enumerate()
        .map(|(i, &q)| PseudoAccretiveSystem::builtin(name, i + 1, q, gen(i + 1)?))
        .collect()
}

/// Evaluation of slot and product averages over subcubes of a fixed `Q`,
/// exact on the line when every slot has a polynomial form.
pub(crate) enum CubeData {
    Exact { slots: Vec<PiecewisePoly>, product: PiecewisePoly },
    Sampled { grid: Grid, slots: Vec<BoxSums>, product: BoxSums, functions: Vec<SampledFunction> },
}

impl CubeData {
    pub(crate) fn build(systems: &[PseudoAccretiveSystem], cube: &DyadicCube, h: f64, allow_exact: bool) -> Result<Self> {
        if systems.is_empty() {
            return Err(Error::invalid("need at least one system"));
        }
        if allow_exact {
            let forms: Option<Vec<PiecewisePoly>> = systems.iter().map(|s| s.exact_form(cube)).collect();
            if let Some(slots) = forms {
                let mut product = slots[0].clone();
                for s in &slots[1..] {
                    product = product.mul(s);
                }
                return Ok(CubeData::Exact { slots, product });
            }
        }
        let grid = Grid::on_cube(cube, h)?;
        let functions = systems.iter().map(|s| s.sample(cube, &grid)).collect::<Result<Vec<_>>>()?;
        let mut prod = functions[0].clone();
        for f in &functions[1..] {
            prod = prod.mul(f)?;
        }
        let slots = functions.iter().map(|f| BoxSums::new(&grid, f.values())).collect();
        let product = BoxSums::new(&grid, prod.values());
        Ok(CubeData::Sampled { grid, slots, product, functions })
    }

    pub(crate) fn is_exact(&self) -> bool {
        matches!(self, CubeData::Exact { .. })
    }

    fn sampled_avg(grid: &Grid, sums: &BoxSums, r: &DyadicCube) -> Result<Complex64> {
        let (lo, hi) = grid.cube_cells(r)?;
        let cells: i64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        Ok(sums.sum(&lo, &hi) / cells as f64)
    }

    pub(crate) fn avg_slot(&self, i: usize, r: &DyadicCube) -> Result<Complex64> {
        match self {
            CubeData::Exact { slots, .. } => Ok(Complex64::new(slots[i].average_over(r).to_f64().unwrap_or(f64::NAN), 0.0)),
            CubeData::Sampled { grid, slots, .. } => Self::sampled_avg(grid, &slots[i], r),
        }
    }

    pub(crate) fn avg_product(&self, r: &DyadicCube) -> Result<Complex64> {
        match self {
            CubeData::Exact { product, .. } => Ok(Complex64::new(product.average_over(r).to_f64().unwrap_or(f64::NAN), 0.0)),
            CubeData::Sampled { grid, product, .. } => Self::sampled_avg(grid, product, r),
        }
    }

    pub(crate) fn exact_slot(&self, i: usize, r: &DyadicCube) -> Option<Rational> {
        match self {
            CubeData::Exact { slots, .. } => Some(slots[i].average_over(r)),
            _ => None,
        }
    }

    pub(crate) fn exact_product(&self, r: &DyadicCube) -> Option<Rational> {
        match self {
            CubeData::Exact { product, .. } => Some(product.average_over(r)),
            _ => None,
        }
    }

    /// `int_Q |b_i|^q / |Q|`.
    fn size(&self, i: usize, cube: &DyadicCube, q: f64) -> f64 {
        match self {
            CubeData::Exact { slots, .. } => {
                let (a, b) = cube_bounds(cube);
                slots[i].abs_power_integral(&a, &b, q) / cube.volume()
            }
            CubeData::Sampled { functions, .. } => {
                let f = &functions[i];
                f.values().iter().map(|v| v.norm().powf(q)).sum::<f64>() / f.values().len() as f64
            }
        }
    }
}

/// Declared constants the measured ones are compared against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { b1: f64::INFINITY, b2: f64::INFINITY, b3: f64::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    /// Grid spacing for sampled systems.
    pub h: f64,
    /// Smallest subcube side enumerated for compatibility.
    pub floor: f64,
    pub budgets: Budgets,
    /// Cap on enumerated subcubes.
    pub cap: usize,
    /// Use exact rational arithmetic when every slot allows it.
    pub exact: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { h: 1.0 / 256.0, floor: 1.0 / 32.0, budgets: Budgets::default(), cap: 1 << 20, exact: true }
    }
}

/// A subcube where compatibility is worst.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatWitness {
    pub cube: DyadicCube,
    /// `|avg_R prod b_i|`.
    pub product_average: f64,
    /// `prod |avg_R b_i|`.
    pub slot_average_product: f64,
    /// `int_R prod b_i` as an exact fraction, when available.
    pub product_integral_exact: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionFlags {
    pub size: bool,
    /// Each slot alone has a nonzero mean within the budget.
    pub accretive_slots: bool,
    /// The product has a nonzero mean within the budget.
    pub accretive_product: bool,
    pub compatible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub cube: DyadicCube,
    pub exponents: Vec<f64>,
    /// `1/q = sum 1/q_i`.
    pub q: f64,
    pub floor: f64,
    pub exact: bool,
    pub slot_means: Vec<f64>,
    pub slot_means_imag: Vec<f64>,
    pub slot_integrals_exact: Option<Vec<String>>,
    pub product_mean: f64,
    pub product_mean_imag: f64,
    pub product_mean_exact: Option<String>,
    pub b1: f64,
    /// `1 / |avg_Q prod b_i|` (infinite when the product mean vanishes).
    pub b2: f64,
    /// `1 / |avg_Q b_i|` per slot.
    pub b2_slots: Vec<f64>,
    /// Sup over subcubes of `|avg_R prod b| / prod |avg_R b_i|`.
    pub b3_compat: f64,
    pub compat_witness: Option<CompatWitness>,
    pub subcubes_checked: usize,
    pub budgets: Budgets,
    pub pass: ConditionFlags,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        let p = self.pass;
        p.size && p.accretive_slots && p.accretive_product && p.compatible
    }
}

fn inv(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

// values this small count as zero in sampled (floating) arithmetic
const ZERO_TOL: f64 = 1e-12;

/// Measure the constants in the size, accretivity and compatibility
/// conditions on `Q` and its dyadic subcubes down to the floor.
pub fn check_system(systems: &[PseudoAccretiveSystem], cube: &DyadicCube, opts: &CheckOptions) -> Result<ConditionReport> {
    if !(opts.floor >= opts.h) {
        return Err(Error::invalid(format!("floor {} is below the grid spacing {}", opts.floor, opts.h)));
    }
    let exponents: Vec<f64> = systems.iter().map(|s| s.exponent).collect();
    let q = IndexTuple::combined(&exponents)?;
    let data = CubeData::build(systems, cube, opts.h, opts.exact)?;
    let m = systems.len();

    let b1 = (0..m).map(|i| data.size(i, cube, exponents[i])).fold(0.0, f64::max);
    let slot_means: Vec<Complex64> = (0..m).map(|i| data.avg_slot(i, cube)).collect::<Result<_>>()?;
    let product_mean = data.avg_product(cube)?;
    let exact_product_zero = data.exact_product(cube).map(|r| r.is_zero());
    let product_zero = exact_product_zero.unwrap_or(product_mean.norm() <= ZERO_TOL);
    let b2 = if product_zero { f64::INFINITY } else { inv(product_mean.norm()) };
    let b2_slots: Vec<f64> = slot_means.iter().map(|v| inv(v.norm())).collect();

    let depth = (cube.side() / opts.floor).log2().floor().max(0.0) as u32;
    let family = subcubes(cube, depth, opts.cap)?;
    let mut b3 = 0.0f64;
    let mut witness: Option<CompatWitness> = None;
    for r in &family {
        let (num_zero, den_zero, num, den) = if data.is_exact() {
            let pn = data.exact_product(r).unwrap();
            let mut den = Rational::from_integer(1.into());
            for i in 0..m {
                den *= data.exact_slot(i, r).unwrap().abs();
            }
            (pn.is_zero(), den.is_zero(), pn.abs().to_f64().unwrap(), den.to_f64().unwrap())
        } else {
            let num = data.avg_product(r)?.norm();
            let mut den = 1.0;
            for i in 0..m {
                den *= data.avg_slot(i, r)?.norm();
            }
            (num <= ZERO_TOL, den <= ZERO_TOL, num, den)
        };
        // 0 <= B3 * 0 holds; nonzero over zero fails
        let ratio = match (num_zero, den_zero) {
            (true, _) => 0.0,
            (false, true) => f64::INFINITY,
            (false, false) => num / den,
        };
        if ratio > b3 || witness.is_none() {
            if ratio > b3 {
                b3 = ratio;
            }
            let exact = data.exact_product(r).map(|a| render(&(a * cube_bounds_len(r))));
            witness = Some(CompatWitness {
                cube: r.clone(),
                product_average: num,
                slot_average_product: den,
                product_integral_exact: exact,
            });
        }
    }

    let slot_integrals_exact = if data.is_exact() {
        Some((0..m).map(|i| render(&(data.exact_slot(i, cube).unwrap() * cube_bounds_len(cube)))).collect())
    } else {
        None
    };
    let budgets = opts.budgets;
    let pass = ConditionFlags {
        size: b1 <= budgets.b1,
        accretive_slots: b2_slots.iter().all(|&b| b.is_finite() && b <= budgets.b2),
        accretive_product: b2.is_finite() && b2 <= budgets.b2,
        compatible: b3.is_finite() && b3 <= budgets.b3,
    };
    Ok(ConditionReport {
        cube: cube.clone(),
        exponents,
        q,
        floor: opts.floor,
        exact: data.is_exact(),
        slot_means: slot_means.iter().map(|v| v.re).collect(),
        slot_means_imag: slot_means.iter().map(|v| v.im).collect(),
        slot_integrals_exact,
        product_mean: product_mean.re,
        product_mean_imag: product_mean.im,
        product_mean_exact: data.exact_product(cube).map(|r| render(&r)),
        b1,
        b2,
        b2_slots,
        b3_compat: b3,
        compat_witness: witness,
        subcubes_checked: family.len(),
        budgets,
        pass,
    })
}

fn cube_bounds_len(cube: &DyadicCube) -> Rational {
    let (a, b) = cube_bounds(cube);
    b - a
}

/// Settings for the cancellation condition on `Theta_t(b_Q^1, ..., b_Q^m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CancelOptions {
    pub h: f64,
    /// Sampling window for `b_Q` is `Q` enlarged by this many sides of `Q`.
    pub margin: f64,
    pub budget: f64,
    pub apply: ApplyOptions,
}

impl Default for CancelOptions {
    fn default() -> Self {
        CancelOptions { h: 1.0 / 64.0, margin: 2.0, budget: f64::INFINITY, apply: ApplyOptions::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CancelReport {
    /// `|Q|^{-1} int_Q (int_0^{l(Q)} |Theta_t(b)|^2 dt/t)^{q/2} dx`.
    pub value: f64,
    pub q: f64,
    pub scales_used: usize,
    pub budget: f64,
    pub pass: bool,
}

/// Sampling window around `Q` used for systems with tails.
pub fn system_window(cube: &DyadicCube, h: f64, margin: f64) -> Result<Grid> {
    let pad = (margin * cube.side() / h).ceil() as usize;
    Ok(Grid::on_cube(cube, h)?.padded(pad))
}

pub fn check_theta_cancel(
    k: &KernelFamily,
    systems: &[PseudoAccretiveSystem],
    cube: &DyadicCube,
    scales: &ScaleGrid,
    opts: &CancelOptions,
) -> Result<CancelReport> {
    let exponents: Vec<f64> = systems.iter().map(|s| s.exponent).collect();
    let q = IndexTuple::combined(&exponents)?;
    let window = system_window(cube, opts.h, opts.margin)?;
    let bs = systems.iter().map(|s| s.sample(cube, &window)).collect::<Result<Vec<_>>>()?;
    let on_q = Grid::on_cube(cube, opts.h)?;
    let ts = scales.samples_in(0.0, cube.side());
    let w = scales.weight();
    let mut acc = vec![0.0; on_q.len()];
    for &t in &ts {
        let theta = k.apply_theta(t, &bs, &on_q, &opts.apply)?;
        for (a, v) in acc.iter_mut().zip(theta.values()) {
            *a += v.norm_sqr() * w;
        }
    }
    let value = acc.iter().map(|s| s.powf(q / 2.0)).sum::<f64>() / acc.len() as f64;
    Ok(CancelReport { value, q, scales_used: ts.len(), budget: opts.budget, pass: value <= opts.budget })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn report(name: &str, cube: DyadicCube, exps: &[f64]) -> ConditionReport {
        let sys = builtin_system(name, cube.dim(), exps).unwrap();
        check_system(&sys, &cube, &CheckOptions::default()).unwrap()
    }

    #[test]
    fn alternating_means_are_half() {
        for cube in [DyadicCube::unit(1), DyadicCube::new(3, vec![-5]), DyadicCube::new(-2, vec![1])] {
            let r = report("alternating", cube.clone(), &[4.0, 4.0]);
            assert!(r.exact);
            assert_eq!(r.slot_means, vec![0.5, 0.5]);
            assert_eq!(r.product_mean_exact.as_deref(), Some("0"));
            assert!(r.pass.accretive_slots && !r.pass.accretive_product);
            assert!(r.pass.compatible, "{cube}: {:?}", r.compat_witness);
        }
    }

    #[test]
    fn alternating_factorises_inside_halves() {
        let r = report("alternating", DyadicCube::unit(1), &[4.0, 4.0]);
        assert_eq!(r.b3_compat, 1.0);
    }

    #[test]
    fn noncompatible_values() {
        let r = report("noncompatible", DyadicCube::new(-1, vec![0]), &[4.0, 4.0]);
        assert_eq!(r.slot_integrals_exact, Some(vec!["1".to_string(), "1".to_string()]));
        assert_eq!(r.product_mean_exact.as_deref(), Some("7/12"));
        assert!(!r.pass.compatible);
        let w = r.compat_witness.unwrap();
        assert_eq!(w.cube, DyadicCube::new(0, vec![0]));
        assert_eq!(w.product_integral_exact.as_deref(), Some("1/12"));
        assert_eq!(w.slot_average_product, 0.0);
    }

    #[test]
    fn builtin_formulas() {
        let q = DyadicCube::new(1, vec![1]);
        let g = builtin_system("gaussian", 1, &[2.0]).unwrap();
        let x = 0.6;
        let want = (-((x - 0.75f64) / 0.5).powi(2)).exp();
        assert!((g[0].value(&q, &[x]).unwrap().re - want).abs() < 1e-15);
        let c = builtin_system("characteristic", 1, &[2.0]).unwrap();
        assert_eq!(c[0].value(&q, &[0.5]).unwrap().re, 1.0);
        assert_eq!(c[0].value(&q, &[1.0]).unwrap().re, 0.0);
        let nc = builtin_system("noncompatible", 1, &[2.0]).unwrap();
        let two = DyadicCube::new(-1, vec![0]);
        assert!((nc[0].value(&two, &[1.3]).unwrap().re - 0.8).abs() < 1e-15);
        assert!(builtin_system("nonsense", 1, &[2.0]).is_err());
        assert!(builtin_system("alternating", 2, &[2.0]).is_err());
    }

    #[test]
    fn exact_and_sampled_paths_agree_on_step_systems() {
        let sys = builtin_system("alternating", 1, &[3.0, 3.0]).unwrap();
        let cube = DyadicCube::unit(1);
        let exact = check_system(&sys, &cube, &CheckOptions::default()).unwrap();
        let sampled = check_system(&sys, &cube, &CheckOptions { exact: false, ..Default::default() }).unwrap();
        assert!(!sampled.exact);
        assert_eq!(exact.slot_means, sampled.slot_means);
        assert_eq!(exact.b3_compat, sampled.b3_compat);
        assert!((exact.b1 - sampled.b1).abs() < 1e-12);
    }

    #[test]
    fn zero_product_fails_accretivity_only() {
        let r = report("alternating", DyadicCube::unit(1), &[4.0, 4.0]);
        assert!(r.b2.is_infinite());
        assert_eq!(r.b2_slots, vec![2.0, 2.0]);
    }

    #[test]
    fn mean_zero_kernel_cancels_on_system() {
        let k = KernelFamily::mean_zero_first(2, 1, 1.0).unwrap();
        let sys = builtin_system("characteristic", 1, &[4.0, 4.0]).unwrap();
        let scales = ScaleGrid::new(1.0 / 8.0, 1.0, 4).unwrap();
        let r = check_theta_cancel(&k, &sys, &DyadicCube::unit(1), &scales, &CancelOptions::default()).unwrap();
        assert!(r.value.is_finite() && r.scales_used == 12);
    }

    proptest! {
        #[test]
        fn example_one_class_bounds(g in -3i32..4, k in -8i64..8, which in 0usize..3, n in 1usize..3) {
            let name = ["characteristic", "gaussian", "poisson"][which];
            let cube = DyadicCube::new(g, vec![k; n]);
            let sys = builtin_system(name, n, &vec![4.0; 2]).unwrap();
            let h = cube.side() / if n == 1 { 256.0 } else { 32.0 };
            let opts = CheckOptions { h, floor: cube.side() / 8.0, ..Default::default() };
            let r = check_system(&sys, &cube, &opts).unwrap();
            let (lo, _) = sys[0].range_on_cube(n).unwrap();
            prop_assert!(r.b2 <= lo.powi(-2) * (1.0 + 1e-12));
            prop_assert!(r.b3_compat <= lo.powi(-4) * (1.0 + 1e-12));
        }

        #[test]
        fn cancellation_value_homogeneous(c in 0.2f64..3.0) {
            let k = KernelFamily::gaussian_product(2, 1, 2.0, 1.0, 1.0).unwrap();
            let base = builtin_system("characteristic", 1, &[4.0, 4.0]).unwrap();
            let scaled_fn: PointFn = Arc::new(move |q, x| Complex64::new(c * q.contains(x) as u8 as f64, 0.0));
            let scaled = vec![
                PseudoAccretiveSystem::pointwise("scaled", 1, 4.0, scaled_fn).unwrap(),
                base[1].clone(),
            ];
            let scales = ScaleGrid::new(1.0 / 8.0, 1.0, 2).unwrap();
            let opts = CancelOptions { h: 1.0 / 32.0, ..Default::default() };
            let a = check_theta_cancel(&k, &base, &DyadicCube::unit(1), &scales, &opts).unwrap();
            let b = check_theta_cancel(&k, &scaled, &DyadicCube::unit(1), &scales, &opts).unwrap();
            // q = 2
            prop_assert!((b.value - c.powi(2) * a.value).abs() <= 1e-12 * b.value);
        }
    }
}
