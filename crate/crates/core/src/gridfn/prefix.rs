use num_complex::Complex64;

use super::Grid;

/// Summed-area table for constant-time box sums over a grid of values.
pub struct BoxSums {
    shape: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<Complex64>,
}

impl BoxSums {
    pub fn new(grid: &Grid, values: &[Complex64]) -> Self {
        let shape: Vec<usize> = grid.shape().iter().map(|s| s + 1).collect();
        let n = shape.len();
        let mut strides = vec![1usize; n];
        for axis in (0..n.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * shape[axis + 1];
        }
        let total: usize = shape.iter().product();
        let mut table = vec![Complex64::new(0.0, 0.0); total];
        for (k, v) in values.iter().enumerate() {
            let idx = grid.unflat(k);
            let pos: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            table[pos] = *v;
        }
        // cumulative sums along each axis in turn
        for axis in 0..n {
            let stride = strides[axis];
            for pos in 0..total {
                let coord = (pos / stride) % shape[axis];
                if coord > 0 {
                    let prev = table[pos - stride];
                    table[pos] += prev;
                }
            }
        }
        BoxSums { shape, strides, table }
    }

    /// Sum over local cell box `[lo, hi)`, clipped to the window.
    pub fn sum(&self, lo: &[i64], hi: &[i64]) -> Complex64 {
        let n = self.shape.len();
        let mut clo = Vec::with_capacity(n);
        let mut chi = Vec::with_capacity(n);
        for axis in 0..n {
            let max = self.shape[axis] as i64 - 1;
            let l = lo[axis].clamp(0, max);
            let h = hi[axis].clamp(0, max);
            if l >= h {
                return Complex64::new(0.0, 0.0);
            }
            clo.push(l as usize);
            chi.push(h as usize);
        }
        let mut total = Complex64::new(0.0, 0.0);
        for mask in 0..(1usize << n) {
            let mut pos = 0;
            let mut sign = 1.0;
            for axis in 0..n {
                if mask & (1 << axis) != 0 {
                    pos += clo[axis] * self.strides[axis];
                    sign = -sign;
                } else {
                    pos += chi[axis] * self.strides[axis];
                }
            }
            total += self.table[pos] * sign;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::box_sum;

    #[test]
    fn matches_direct_sums_in_two_dimensions() {
        let grid = Grid::new(0.5, vec![0.0, 0.0], vec![5, 7]).unwrap();
        let values: Vec<Complex64> =
            (0..grid.len()).map(|k| Complex64::new(k as f64 * 0.3 - 2.0, (k % 3) as f64)).collect();
        let sums = BoxSums::new(&grid, &values);
        for (lo, hi) in [([0, 0], [5, 7]), ([1, 2], [4, 3]), ([-3, 2], [2, 9]), ([4, 6], [5, 7])] {
            let a = sums.sum(&lo, &hi);
            let b = box_sum(&grid, &values, &lo, &hi);
            assert!((a - b).norm() < 1e-12, "{lo:?} {hi:?}");
        }
    }
}
