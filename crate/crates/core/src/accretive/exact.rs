//! Exact piecewise-polynomial functions on the line with rational data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::dyadic::DyadicCube;
use crate::quad::gauss_legendre;

pub type Rational = BigRational;

/// `sum_k c_k x^k` on `[a, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub a: Rational,
    pub b: Rational,
    pub coeffs: Vec<Rational>,
}

/// Finite sum of polynomial pieces on disjoint half-open intervals; zero
/// elsewhere.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PiecewisePoly {
    pieces: Vec<Piece>,
}

pub fn dyadic_rational(k: i64, generation: i32) -> Rational {
    let k = BigInt::from(k);
    if generation >= 0 {
        Rational::new(k, BigInt::one() << generation as usize)
    } else {
        Rational::from_integer(k << (-generation) as usize)
    }
}

pub fn cube_bounds(cube: &DyadicCube) -> (Rational, Rational) {
    let k = cube.corner()[0];
    (dyadic_rational(k, cube.generation()), dyadic_rational(k + 1, cube.generation()))
}

fn antiderivative_at(c: &[Rational], x: &Rational) -> Rational {
    let mut acc = Rational::zero();
    let mut pow = x.clone();
    for (k, ck) in c.iter().enumerate() {
        acc += ck * &pow / Rational::from_integer(BigInt::from(k + 1));
        pow *= x;
    }
    acc
}

impl PiecewisePoly {
    pub fn new(mut pieces: Vec<Piece>) -> Self {
        pieces.retain(|p| p.a < p.b);
        pieces.sort_by(|p, q| p.a.cmp(&q.a));
        PiecewisePoly { pieces }
    }

    pub fn constant_on(a: Rational, b: Rational, c: Rational) -> Self {
        PiecewisePoly::new(vec![Piece { a, b, coeffs: vec![c] }])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn integral(&self, lo: &Rational, hi: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for p in &self.pieces {
            let a = if &p.a > lo { &p.a } else { lo };
            let b = if &p.b < hi { &p.b } else { hi };
            if a < b {
                acc += antiderivative_at(&p.coeffs, b) - antiderivative_at(&p.coeffs, a);
            }
        }
        acc
    }

    pub fn average_over(&self, cube: &DyadicCube) -> Rational {
        let (a, b) = cube_bounds(cube);
        self.integral(&a, &b) / (b - a)
    }

    pub fn mul(&self, other: &PiecewisePoly) -> PiecewisePoly {
        let mut out = Vec::new();
        for p in &self.pieces {
            for q in &other.pieces {
                let a = if p.a > q.a { p.a.clone() } else { q.a.clone() };
                let b = if p.b < q.b { p.b.clone() } else { q.b.clone() };
                if a >= b {
                    continue;
                }
                let mut coeffs = vec![Rational::zero(); p.coeffs.len() + q.coeffs.len() - 1];
                for (i, ci) in p.coeffs.iter().enumerate() {
                    for (j, cj) in q.coeffs.iter().enumerate() {
                        coeffs[i + j] += ci * cj;
                    }
                }
                out.push(Piece { a, b, coeffs });
            }
        }
        PiecewisePoly::new(out)
    }

    pub fn value(&self, x: f64) -> f64 {
        for p in &self.pieces {
            let (a, b) = (p.a.to_f64().unwrap(), p.b.to_f64().unwrap());
            if x >= a && x < b {
                return p.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64().unwrap());
            }
        }
        0.0
    }

    /// `int_lo^hi |f|^q` in floating point, Gauss-Legendre on each piece after
    /// splitting linear pieces at their roots.
    pub fn abs_power_integral(&self, lo: &Rational, hi: &Rational, q: f64) -> f64 {
        let gl = gauss_legendre(32);
        let mut acc = 0.0;
        for p in &self.pieces {
            let a = if &p.a > lo { p.a.clone() } else { lo.clone() };
            let b = if &p.b < hi { p.b.clone() } else { hi.clone() };
            if a >= b {
                continue;
            }
            let mut cuts = vec![a.clone()];
            if p.coeffs.len() == 2 && !p.coeffs[1].is_zero() {
                let root = -&p.coeffs[0] / &p.coeffs[1];
                if root > a && root < b {
                    cuts.push(root);
                }
            }
            cuts.push(b);
            for w in cuts.windows(2) {
                let (a, b) = (w[0].to_f64().unwrap(), w[1].to_f64().unwrap());
                let half = (b - a) / 2.0;
                for &(x, wt) in &gl {
                    let u = a + half * (x + 1.0);
                    let v = p.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c.to_f64().unwrap());
                    acc += v.abs().powf(q) * wt * half;
                }
            }
        }
        acc
    }
}

/// `p/q` rendering of a rational.
pub fn render(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn integrates_square_of_shifted_line() {
        // (x - 1/2)^2 on [0, 1) integrates to 1/12
        let f = PiecewisePoly::new(vec![Piece { a: q(0, 1), b: q(2, 1), coeffs: vec![q(-1, 2), q(1, 1)] }]);
        let sq = f.mul(&f);
        assert_eq!(sq.integral(&q(0, 1), &q(1, 1)), q(1, 12));
        assert_eq!(f.integral(&q(0, 1), &q(2, 1)), q(1, 1));
        assert_eq!(render(&q(1, 12)), "1/12");
    }

    #[test]
    fn abs_power_splits_at_root() {
        let f = PiecewisePoly::new(vec![Piece { a: q(0, 1), b: q(1, 1), coeffs: vec![q(-1, 2), q(1, 1)] }]);
        // int_0^1 |x - 1/2| dx = 1/4
        assert!((f.abs_power_integral(&q(0, 1), &q(1, 1), 1.0) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn dyadic_endpoints() {
        let c = DyadicCube::new(-1, vec![3]);
        assert_eq!(cube_bounds(&c), (q(6, 1), q(8, 1)));
        let c = DyadicCube::new(2, vec![-1]);
        assert_eq!(cube_bounds(&c), (q(-1, 4), q(0, 1)));
    }
}
