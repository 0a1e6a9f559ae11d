//! Stopping-time decomposition of a cube against a pseudo-accretive system.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::accretive::{check_system, CheckOptions, CubeData, PseudoAccretiveSystem, Rational};
use crate::dyadic::{smallest_containing, DyadicCube, GenerationRange};
use crate::error::{Error, Result};
use crate::gridfn::{Grid, SampledFunction};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingOptions {
    /// Grid spacing for sampled systems.
    pub h: f64,
    /// Smallest side the descent reaches.
    pub floor: f64,
    /// Use exact rational arithmetic when every slot allows it.
    pub exact: bool,
}

impl Default for StoppingOptions {
    fn default() -> Self {
        StoppingOptions { h: 1.0 / 256.0, floor: 1.0 / 64.0, exact: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub root: DyadicCube,
    /// The maximal selected subcubes, sorted.
    pub selected: Vec<DyadicCube>,
    /// `|Q| - sum |Q_k|`.
    pub exceptional_measure: f64,
    /// `|E| / |Q|`.
    pub eta_observed: f64,
    /// `avg_Q prod b_Q^i`.
    pub a: Complex64,
    /// Floor-side cubes that were never selected; they count towards `E`.
    pub unresolved_leaves: usize,
    pub floor: f64,
}

impl Decomposition {
    /// `tau_Q(x)`: the side of the selected cube containing `x`, zero on `E`.
    pub fn tau_at(&self, x: &[f64]) -> f64 {
        self.selected.iter().find(|c| c.contains(x)).map_or(0.0, |c| c.side())
    }

    /// `tau_Q` sampled on a grid.
    pub fn tau_on(&self, grid: &Grid) -> Result<SampledFunction> {
        SampledFunction::from_real_fn(grid.clone(), |x| self.tau_at(x))
    }
}

fn ratio_selected(data: &CubeData, r: &DyadicCube, a: Complex64, exact_a: Option<&Rational>) -> Result<bool> {
    if let (Some(ea), Some(avg)) = (exact_a, data.exact_product(r)) {
        return Ok(avg / ea <= Rational::new(1.into(), 2.into()));
    }
    Ok((data.avg_product(r)? / a).re <= 0.5)
}

/// Select the maximal dyadic subcubes `R` of `Q` with `Re(avg_R prod b / a) <= 1/2`.
pub fn decompose(systems: &[PseudoAccretiveSystem], root: &DyadicCube, opts: &StoppingOptions) -> Result<Decomposition> {
    if !(opts.floor >= opts.h) {
        return Err(Error::invalid(format!("floor {} is below the grid spacing {}", opts.floor, opts.h)));
    }
    if opts.floor > root.side() / 2.0 {
        return Err(Error::invalid("floor must allow at least one generation below the root"));
    }
    let data = CubeData::build(systems, root, opts.h, opts.exact)?;
    let a = data.avg_product(root)?;
    let exact_a = data.exact_product(root);
    let zero = match &exact_a {
        Some(r) => num_traits::Zero::is_zero(r),
        None => a.norm() <= 1e-12,
    };
    if zero {
        return Err(Error::NotAccretive { witness: root.clone() });
    }
    let mut selected = Vec::new();
    let mut unresolved = 0usize;
    let mut stack = root.children();
    while let Some(r) = stack.pop() {
        if ratio_selected(&data, &r, a, exact_a.as_ref())? {
            selected.push(r);
        } else if r.side() / 2.0 >= opts.floor {
            stack.extend(r.children());
        } else {
            unresolved += 1;
        }
    }
    selected.sort();
    let covered: f64 = selected.iter().map(|c| c.volume()).sum();
    let exceptional_measure = (root.volume() - covered).max(0.0);
    Ok(Decomposition {
        root: root.clone(),
        eta_observed: exceptional_measure / root.volume(),
        selected,
        exceptional_measure,
        a,
        unresolved_leaves: unresolved,
        floor: opts.floor,
    })
}

/// `(2 max(B1, 1)^m)^{-q'}` with `q' = q / (q - 1)`.
pub fn eta_bound(b1: f64, m: usize, q: f64) -> f64 {
    let qp = q / (q - 1.0);
    (2.0 * b1.max(1.0).powi(m as i32)).powf(-qp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundPlan {
    pub seed: u64,
    pub samples: usize,
}

impl Default for LowerBoundPlan {
    fn default() -> Self {
        LowerBoundPlan { seed: 7, samples: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub b2: f64,
    pub b3: f64,
    pub m: usize,
    /// `1 / (2 max(B2,1) max(B3,1))`.
    pub bound_single: f64,
    /// `1 / (2 max(B2,1)^m max(B3,1))`.
    pub bound_power: f64,
    pub min_product: f64,
    pub margin_single: f64,
    pub margin_power: f64,
    pub violations_single: usize,
    pub violations_power: usize,
    pub samples: usize,
    pub witness: Option<LowerBoundSample>,
    pub pass: bool,
}

/// Sample `(x, t)` with `x` in `Q` and `max(tau_Q(x), floor) < t < l(Q)` and
/// compare `prod_i |A_t b_Q^i(x)|` with both forms of the lower bound.
/// Passing means no violation of the `B2^m` form.
pub fn verify_lower_bound(
    d: &Decomposition,
    systems: &[PseudoAccretiveSystem],
    check: &CheckOptions,
    plan: &LowerBoundPlan,
) -> Result<LowerBoundReport> {
    let report = check_system(systems, &d.root, &CheckOptions { floor: check.floor.min(d.floor), ..*check })?;
    let data = CubeData::build(systems, &d.root, check.h, check.exact)?;
    let ts: Vec<(Vec<f64>, f64)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let n = d.root.dim();
        (0..plan.samples)
            .map(|_| {
                let x: Vec<f64> = (0..n).map(|i| d.root.lower(i) + rng.gen::<f64>() * d.root.side()).collect();
                let lo = d.tau_at(&x).max(d.floor).ln();
                let hi = d.root.side().ln();
                let t = (lo + (hi - lo) * rng.gen_range(1e-9..1.0f64)).exp();
                (x, t)
            })
            .collect()
    };
    evaluate_lower_bound(d, &data, report.b2, report.b3_compat, systems.len(), &ts)
}

/// Lower-bound check at caller-chosen samples; each must satisfy `t > tau_Q(x)`.
pub fn lower_bound_at(
    d: &Decomposition,
    systems: &[PseudoAccretiveSystem],
    check: &CheckOptions,
    samples: &[(Vec<f64>, f64)],
) -> Result<LowerBoundReport> {
    let report = check_system(systems, &d.root, &CheckOptions { floor: check.floor.min(d.floor), ..*check })?;
    let data = CubeData::build(systems, &d.root, check.h, check.exact)?;
    evaluate_lower_bound(d, &data, report.b2, report.b3_compat, systems.len(), samples)
}

fn evaluate_lower_bound(
    d: &Decomposition,
    data: &CubeData,
    b2: f64,
    b3: f64,
    m: usize,
    samples: &[(Vec<f64>, f64)],
) -> Result<LowerBoundReport> {
    let range = GenerationRange::default();
    let bound_single = 1.0 / (2.0 * b2.max(1.0) * b3.max(1.0));
    let bound_power = 1.0 / (2.0 * b2.max(1.0).powi(m as i32) * b3.max(1.0));
    let mut min_product = f64::INFINITY;
    let mut witness = None;
    let (mut vs, mut vp) = (0, 0);
    for (x, t) in samples {
        let tau = d.tau_at(x);
        if !(*t > tau) || !d.root.contains(x) {
            return Err(Error::invalid(format!("sample t = {t} at {x:?} is not above tau = {tau} inside the root")));
        }
        let cube = smallest_containing(x, *t, &range)?;
        if !d.root.contains_cube(&cube) {
            return Err(Error::invalid(format!("scale {t} exceeds the root side")));
        }
        let mut product = 1.0;
        for i in 0..m {
            product *= exact_or_sampled(data, i, &cube)?;
        }
        vs += (product < bound_single) as usize;
        vp += (product < bound_power) as usize;
        if product < min_product {
            min_product = product;
            witness = Some(LowerBoundSample { x: x.clone(), t: *t, product });
        }
    }
    Ok(LowerBoundReport {
        b2,
        b3,
        m,
        bound_single,
        bound_power,
        min_product,
        margin_single: min_product - bound_single,
        margin_power: min_product - bound_power,
        violations_single: vs,
        violations_power: vp,
        samples: samples.len(),
        witness,
        pass: vp == 0,
    })
}

fn exact_or_sampled(data: &CubeData, i: usize, cube: &DyadicCube) -> Result<f64> {
    match data.exact_slot(i, cube) {
        Some(r) => Ok(r.to_f64().unwrap_or(f64::NAN).abs()),
        None => Ok(data.avg_slot(i, cube)?.norm()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accretive::{builtin_system, PointFn};
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    fn left_half() -> Vec<PseudoAccretiveSystem> {
        let f: PointFn = Arc::new(|q, x| {
            let on = q.contains(x) && x[0] < q.lower(0) + q.side() / 2.0;
            Complex64::new(on as u8 as f64, 0.0)
        });
        vec![PseudoAccretiveSystem::pointwise("left", 1, 2.0, f).unwrap()]
    }

    #[test]
    fn characteristic_selects_nothing() {
        let sys = builtin_system("characteristic", 1, &[2.0]).unwrap();
        let d = decompose(&sys, &DyadicCube::unit(1), &StoppingOptions::default()).unwrap();
        assert!(d.selected.is_empty());
        assert_eq!(d.exceptional_measure, 1.0);
        assert_eq!(d.unresolved_leaves, 64);
    }

    #[test]
    fn left_half_system_selects_right_child() {
        let d = decompose(&left_half(), &DyadicCube::unit(1), &StoppingOptions::default()).unwrap();
        assert_eq!(d.selected, vec![DyadicCube::new(1, vec![1])]);
        assert_eq!(d.exceptional_measure, 0.5);
        assert_eq!(d.tau_at(&[0.7]), 0.5);
        assert_eq!(d.tau_at(&[0.2]), 0.0);
    }

    #[test]
    fn alternating_slots_split_the_unit_interval() {
        let a = crate::accretive::PseudoAccretiveSystem::alternating_slot(1, 2.0).unwrap();
        let d = decompose(&[a], &DyadicCube::unit(1), &StoppingOptions::default()).unwrap();
        assert_eq!(d.selected, vec![DyadicCube::new(1, vec![1])]);
        let b = crate::accretive::PseudoAccretiveSystem::alternating_slot(2, 2.0).unwrap();
        let d = decompose(&[b], &DyadicCube::unit(1), &StoppingOptions::default()).unwrap();
        assert_eq!(d.selected, vec![DyadicCube::new(1, vec![0])]);
    }

    #[test]
    fn zero_mean_product_is_rejected() {
        let sys = builtin_system("alternating", 1, &[4.0, 4.0]).unwrap();
        assert!(matches!(
            decompose(&sys, &DyadicCube::unit(1), &StoppingOptions::default()),
            Err(Error::NotAccretive { .. })
        ));
    }

    #[test]
    fn alternating_pair_product_at_root_is_quarter() {
        // one slot at a time for the decomposition, the pair for the product
        let pair = builtin_system("alternating", 1, &[4.0, 4.0]).unwrap();
        let data = CubeData::build(&pair, &DyadicCube::unit(1), 1.0 / 64.0, true).unwrap();
        let p = exact_or_sampled(&data, 0, &DyadicCube::unit(1)).unwrap() * exact_or_sampled(&data, 1, &DyadicCube::unit(1)).unwrap();
        assert_eq!(p, 0.25);
    }

    #[test]
    fn characteristic_lower_bound_is_one() {
        let sys = builtin_system("characteristic", 2, &[4.0, 4.0]).unwrap();
        let root = DyadicCube::new(0, vec![0, 0]);
        let opts = StoppingOptions { h: 1.0 / 32.0, floor: 1.0 / 8.0, exact: true };
        let d = decompose(&sys, &root, &opts).unwrap();
        let check = CheckOptions { h: 1.0 / 32.0, floor: 1.0 / 8.0, ..Default::default() };
        let r = verify_lower_bound(&d, &sys, &check, &LowerBoundPlan { seed: 1, samples: 200 }).unwrap();
        assert_eq!(r.min_product, 1.0);
        assert!(r.pass && r.violations_single == 0);
    }

    #[test]
    fn rejects_samples_below_tau() {
        let sys = left_half();
        let d = decompose(&sys, &DyadicCube::unit(1), &StoppingOptions::default()).unwrap();
        let check = CheckOptions { h: 1.0 / 256.0, floor: 1.0 / 64.0, ..Default::default() };
        assert!(lower_bound_at(&d, &sys, &check, &[(vec![0.7], 0.25)]).is_err());
        assert!(lower_bound_at(&d, &sys, &check, &[(vec![0.7], 0.75)]).is_ok());
    }

    #[test]
    fn eta_bound_values() {
        assert_eq!(eta_bound(1.0, 1, 2.0), 0.25);
        assert!((eta_bound(0.5, 2, 4.0) - 2f64.powf(-4.0 / 3.0)).abs() < 1e-15);
    }

    fn random_system(seed: u64) -> Vec<PseudoAccretiveSystem> {
        // piecewise-constant positive-ish values on a 1/16 lattice of Q
        let f: PointFn = Arc::new(move |q, x| {
            if !q.contains(x) {
                return Complex64::new(0.0, 0.0);
            }
            let u = ((x[0] - q.lower(0)) / q.side() * 16.0).floor() as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(31).wrapping_add(u));
            Complex64::new(rng.gen_range(-0.5..2.0), rng.gen_range(-0.3..0.3))
        });
        vec![PseudoAccretiveSystem::pointwise("random", 1, 2.0, f).unwrap()]
    }

    proptest! {
        #[test]
        fn partition_and_maximality(seed in 0u64..500) {
            let sys = random_system(seed);
            let root = DyadicCube::unit(1);
            let opts = StoppingOptions { h: 1.0 / 64.0, floor: 1.0 / 32.0, exact: false };
            let d = match decompose(&sys, &root, &opts) {
                Ok(d) => d,
                Err(Error::NotAccretive { .. }) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            let covered: f64 = d.selected.iter().map(|c| c.volume()).sum();
            prop_assert_eq!(covered + d.exceptional_measure, 1.0);
            let data = CubeData::build(&sys, &root, opts.h, false).unwrap();
            for (i, c) in d.selected.iter().enumerate() {
                prop_assert!(root.contains_cube(c) && *c != root);
                for o in &d.selected[i + 1..] {
                    prop_assert!(!c.contains_cube(o) && !o.contains_cube(c));
                }
                let mut p = c.parent();
                while p != root {
                    prop_assert!(!ratio_selected(&data, &p, d.a, None).unwrap());
                    p = p.parent();
                }
            }
            let tau = d.tau_on(&Grid::on_cube(&root, opts.h).unwrap()).unwrap();
            let zero_cells = tau.values().iter().filter(|v| v.re == 0.0).count() as f64;
            prop_assert!((zero_cells * opts.h - d.exceptional_measure).abs() < 1e-12);
        }

        #[test]
        fn coarser_floor_adds_nothing(seed in 0u64..500) {
            let sys = random_system(seed);
            let root = DyadicCube::unit(1);
            let fine = decompose(&sys, &root, &StoppingOptions { h: 1.0 / 64.0, floor: 1.0 / 64.0, exact: false });
            let coarse = decompose(&sys, &root, &StoppingOptions { h: 1.0 / 64.0, floor: 1.0 / 8.0, exact: false });
            if let (Ok(fine), Ok(coarse)) = (fine, coarse) {
                for c in &coarse.selected {
                    prop_assert!(fine.selected.contains(c));
                }
            }
        }
    }
}
