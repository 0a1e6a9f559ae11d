//! Half-open dyadic cubes `prod [k_i 2^{-g}, (k_i + 1) 2^{-g})`.

mod whitney;

use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use whitney::{whitney, CellSet, WhitneyCheck, WhitneyDecomposition};

/// Dyadic cube identified by its generation `g` (side `2^{-g}`) and the
/// integer lattice index of its lower corner.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    generation: i32,
    corner: Vec<i64>,
}

impl DyadicCube {
    pub fn new(generation: i32, corner: Vec<i64>) -> Self {
        assert!(!corner.is_empty(), "a dyadic cube needs at least one axis");
        DyadicCube { generation, corner }
    }

    /// The unit cube `[0,1)^n`.
    pub fn unit(n: usize) -> Self {
        DyadicCube::new(0, vec![0; n])
    }

    pub fn generation(&self) -> i32 {
        self.generation
    }

    pub fn corner(&self) -> &[i64] {
        &self.corner
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    /// `2^{-g}`, exact.
    pub fn side(&self) -> f64 {
        2f64.powi(-self.generation)
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim() as i32)
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (self.dim() as f64).sqrt()
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.corner[axis] as f64 * self.side()
    }

    pub fn upper(&self, axis: usize) -> f64 {
        (self.corner[axis] + 1) as f64 * self.side()
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| (self.corner[i] as f64 + 0.5) * self.side()).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lower(i) && x[i] < self.upper(i))
    }

    /// True when `other` is this cube or one of its descendants.
    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        if other.generation < self.generation || other.dim() != self.dim() {
            return false;
        }
        let shift = (other.generation - self.generation) as u32;
        other.corner.iter().zip(&self.corner).all(|(&k, &c)| k >> shift == c)
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube::new(self.generation - 1, self.corner.iter().map(|k| k >> 1).collect())
    }

    /// Ancestor with the given (smaller or equal) generation.
    pub fn ancestor(&self, generation: i32) -> DyadicCube {
        assert!(generation <= self.generation);
        let shift = (self.generation - generation) as u32;
        DyadicCube::new(generation, self.corner.iter().map(|k| k >> shift).collect())
    }

    /// The `2^n` children in lexicographic corner order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        (0..1usize << n)
            .map(|bits| {
                let corner = (0..n)
                    .map(|axis| 2 * self.corner[axis] + ((bits >> (n - 1 - axis)) & 1) as i64)
                    .collect();
                DyadicCube::new(self.generation + 1, corner)
            })
            .collect()
    }

    /// Euclidean distance between the closures of two cubes.
    pub fn distance_to(&self, other: &DyadicCube) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim() {
            let gap = (other.lower(i) - self.upper(i)).max(self.lower(i) - other.upper(i)).max(0.0);
            sum += gap * gap;
        }
        sum.sqrt()
    }

    /// True when the closures intersect.
    pub fn touches(&self, other: &DyadicCube) -> bool {
        (0..self.dim()).all(|i| other.lower(i) <= self.upper(i) && self.lower(i) <= other.upper(i))
    }

    pub fn tent(&self) -> Tent {
        Tent { base: self.clone(), height: self.side() }
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{}, {})", self.lower(i), self.upper(i))?;
        }
        Ok(())
    }
}

// Serialized as the integer tuple (generation, corner...).
impl Serialize for DyadicCube {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.dim() + 1))?;
        seq.serialize_element(&(self.generation as i64))?;
        for k in &self.corner {
            seq.serialize_element(k)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for DyadicCube {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<i64>::deserialize(d)?;
        if raw.len() < 2 {
            return Err(de::Error::custom("cube tuple needs a generation and at least one corner index"));
        }
        let generation = i32::try_from(raw[0]).map_err(de::Error::custom)?;
        Ok(DyadicCube::new(generation, raw[1..].to_vec()))
    }
}

/// The region `Q x (0, l(Q)]` of the upper half space.
#[derive(Clone, Debug, PartialEq)]
pub struct Tent {
    pub base: DyadicCube,
    pub height: f64,
}

impl Tent {
    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        t > 0.0 && t <= self.height && self.base.contains(x)
    }
}

/// Admissible generations; requests outside it are errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRange {
    pub min: i32,
    pub max: i32,
}

impl Default for GenerationRange {
    fn default() -> Self {
        GenerationRange { min: -40, max: 40 }
    }
}

impl GenerationRange {
    pub fn check(&self, generation: i32) -> Result<()> {
        if generation < self.min || generation > self.max {
            return Err(Error::GenerationOutOfRange { generation, min: self.min, max: self.max });
        }
        Ok(())
    }
}

/// Generation `g` of the smallest dyadic cube side `2^{-g}` strictly above `t`.
pub fn selector_generation(t: f64) -> i32 {
    let mut e = t.log2().floor() as i32;
    while 2f64.powi(e) > t {
        e -= 1;
    }
    while 2f64.powi(e + 1) <= t {
        e += 1;
    }
    -(e + 1)
}

/// `Q(x, t)`: the smallest dyadic cube containing `x` with side strictly
/// greater than `t`.
pub fn smallest_containing(x: &[f64], t: f64, range: &GenerationRange) -> Result<DyadicCube> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("scale must be positive and finite, got {t}")));
    }
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("point must be finite"));
    }
    let g = selector_generation(t);
    range.check(g)?;
    let scale = 2f64.powi(g);
    Ok(DyadicCube::new(g, x.iter().map(|&xi| (xi * scale).floor() as i64).collect()))
}

/// All descendants of `root` down to `depth` levels below it (the root
/// included), level by level in lexicographic order.
pub fn subcubes(root: &DyadicCube, depth: u32, cap: usize) -> Result<Vec<DyadicCube>> {
    let n = root.dim() as u32;
    let mut count: u128 = 0;
    for d in 0..=depth {
        let level = 1u128.checked_shl(n * d).unwrap_or(u128::MAX);
        count = count.saturating_add(level);
    }
    if count > cap as u128 {
        return Err(Error::Resource { count, cap: cap as u128 });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut level = vec![root.clone()];
    for d in 0..=depth {
        out.extend(level.iter().cloned());
        if d < depth {
            level = level.iter().flat_map(|c| c.children()).collect();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(x: f64, t: f64) -> DyadicCube {
        smallest_containing(&[x], t, &GenerationRange::default()).unwrap()
    }

    #[test]
    fn selector_examples() {
        // side 1/2 already exceeds 0.4
        assert_eq!(q(0.3, 0.4), DyadicCube::new(1, vec![0]));
        assert_eq!(q(0.3, 0.6), DyadicCube::new(0, vec![0]));
        assert_eq!(q(0.3, 1.0), DyadicCube::new(-1, vec![0]));
        let c = q(-0.1, 0.2);
        assert_eq!(c, DyadicCube::new(2, vec![-1]));
        assert_eq!((c.lower(0), c.upper(0)), (-0.25, 0.0));
    }

    #[test]
    fn selector_matches_ancestor_enumeration() {
        // walk up from a fine cell and take the first side strictly above t
        for &(x, t) in &[(-0.1, 0.2), (0.7, 0.125), (3.3, 5.0), (-7.9, 0.01)] {
            let mut cube = DyadicCube::new(30, vec![(x * 2f64.powi(30)).floor() as i64]);
            while cube.side() <= t {
                cube = cube.parent();
            }
            assert_eq!(q(x, t), cube);
        }
    }

    #[test]
    fn generation_range_is_enforced() {
        let range = GenerationRange { min: -2, max: 2 };
        assert!(smallest_containing(&[0.0], 1e-3, &range).is_err());
        assert!(smallest_containing(&[0.0], 0.3, &range).is_ok());
        assert!(smallest_containing(&[0.0], 0.0, &range).is_err());
    }

    #[test]
    fn subcube_counts_and_order() {
        let unit = DyadicCube::unit(1);
        let cubes = subcubes(&unit, 1, 100).unwrap();
        assert_eq!(cubes, vec![unit.clone(), DyadicCube::new(1, vec![0]), DyadicCube::new(1, vec![1])]);
        assert_eq!(subcubes(&DyadicCube::unit(2), 1, 100).unwrap().len(), 5);
        assert_eq!(subcubes(&unit, 10, 5000).unwrap().len(), 2047);
        assert!(matches!(subcubes(&unit, 10, 2000), Err(Error::Resource { count: 2047, .. })));
    }

    #[test]
    fn serializes_as_integer_tuple() {
        let c = DyadicCube::new(-1, vec![3, -2]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, "[-1,3,-2]");
        assert_eq!(serde_json::from_str::<DyadicCube>(&s).unwrap(), c);
    }

    proptest! {
        #[test]
        fn selector_invariants(x in -100.0f64..100.0, y in -100.0f64..100.0, t in 1e-6f64..1e3, k in 1.0f64..50.0) {
            let range = GenerationRange::default();
            let c = smallest_containing(&[x, y], t, &range).unwrap();
            prop_assert!(c.contains(&[x, y]));
            prop_assert!(c.side() > t);
            prop_assert!(c.side() / 2.0 <= t);
            let bigger = smallest_containing(&[x, y], t * k, &range).unwrap();
            prop_assert!(bigger.contains_cube(&c));
        }

        #[test]
        fn children_partition_parent(g in -5i32..5, k0 in -20i64..20, k1 in -20i64..20) {
            let c = DyadicCube::new(g, vec![k0, k1]);
            let kids = c.children();
            prop_assert_eq!(kids.len(), 4);
            let vol: f64 = kids.iter().map(|k| k.volume()).sum();
            prop_assert_eq!(vol, c.volume());
            for (i, a) in kids.iter().enumerate() {
                prop_assert!(c.contains_cube(a));
                prop_assert_eq!(&a.parent(), &c);
                for b in &kids[i + 1..] {
                    prop_assert!(a != b);
                }
            }
        }
    }
}
