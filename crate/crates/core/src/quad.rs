//! Gauss-Legendre rules and graded panel quadrature.

use std::f64::consts::PI;

/// Nodes and weights of the `k`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if k == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Rule on `[0, r]` with panels `[0, s], [s, 2s], [2s, 4s], ...` (geometric
/// growth) and a `k`-point Gauss-Legendre rule on each panel.
pub fn graded_half_line(s: f64, r: f64, k: usize) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(k);
    let mut out = Vec::new();
    let mut a = 0.0;
    let mut b = s.min(r);
    while a < r {
        let hi = b.min(r);
        let half = (hi - a) / 2.0;
        for &(x, w) in &gl {
            out.push((a + half * (x + 1.0), half * w));
        }
        a = hi;
        b = 2.0 * hi;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let gl = gauss_legendre(5);
        let s: f64 = gl.iter().map(|&(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let total: f64 = gl.iter().map(|p| p.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn graded_power_law() {
        let nodes = graded_half_line(0.25, 1000.0, 16);
        let s: f64 = nodes.iter().map(|&(u, w)| (1.0 + u).powi(-2) * w).sum();
        assert!((s - (1.0 - 1.0 / 1001.0)).abs() < 1e-12, "{s}");
    }
}
