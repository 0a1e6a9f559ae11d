//! On-disk layouts for sampled functions (documented in `docs/formats.md`).

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{Grid, SampledFunction};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TBKGRID1";

/// Binary layout, little endian: magic, `u32 n`, `f64 h`, `n` pairs of
/// `f64` window bounds, then row-major `(re, im)` pairs of `f64`.
pub fn write_binary<W: Write>(f: &SampledFunction, mut w: W) -> Result<()> {
    let grid = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&grid.h().to_le_bytes())?;
    for (lo, hi) in grid.bounds() {
        w.write_all(&lo.to_le_bytes())?;
        w.write_all(&hi.to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<SampledFunction> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic in grid file".into()));
    }
    let mut nbuf = [0u8; 4];
    r.read_exact(&mut nbuf)?;
    let n = u32::from_le_bytes(nbuf) as usize;
    if n == 0 || n > 8 {
        return Err(Error::Format(format!("unsupported dimension {n}")));
    }
    let h = read_f64(&mut r)?;
    let mut bounds = Vec::with_capacity(n);
    for _ in 0..n {
        bounds.push((read_f64(&mut r)?, read_f64(&mut r)?));
    }
    let grid = Grid::from_bounds(h, &bounds)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        values.push(Complex64::new(re, im));
    }
    SampledFunction::new(grid, values)
}

/// CSV with `#` header lines carrying `n`, `h` and the window, then one row
/// per cell: `i0,..,i{n-1},re,im` in row-major order.
pub fn write_csv<W: Write>(f: &SampledFunction, mut w: W) -> Result<()> {
    let grid = f.grid();
    writeln!(w, "# tbkit-grid v1")?;
    writeln!(w, "# n={}", grid.dim())?;
    writeln!(w, "# h={}", grid.h())?;
    let bounds: Vec<String> = grid.bounds().iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect();
    writeln!(w, "# bounds={}", bounds.join(";"))?;
    let axes: Vec<String> = (0..grid.dim()).map(|i| format!("i{i}")).collect();
    writeln!(w, "{},re,im", axes.join(","))?;
    for (k, v) in f.values().iter().enumerate() {
        let idx: Vec<String> = grid.unflat(k).iter().map(|i| i.to_string()).collect();
        writeln!(w, "{},{},{}", idx.join(","), v.re, v.im)?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<SampledFunction> {
    let mut n = None;
    let mut h = None;
    let mut bounds: Option<Vec<(f64, f64)>> = None;
    let mut rows = Vec::new();
    let bad = |msg: &str| Error::Format(msg.to_string());
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("n=") {
                n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?);
            } else if let Some(v) = meta.strip_prefix("h=") {
                h = Some(v.parse::<f64>().map_err(|_| bad("bad h"))?);
            } else if let Some(v) = meta.strip_prefix("bounds=") {
                let parsed = v
                    .split(';')
                    .map(|b| {
                        let (lo, hi) = b.split_once(':').ok_or_else(|| bad("bad bounds"))?;
                        Ok((
                            lo.parse::<f64>().map_err(|_| bad("bad bound"))?,
                            hi.parse::<f64>().map_err(|_| bad("bad bound"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                bounds = Some(parsed);
            }
            continue;
        }
        if line.starts_with('i') {
            continue; // column header
        }
        rows.push(line.to_string());
    }
    let n = n.ok_or_else(|| bad("missing n"))?;
    let grid = Grid::from_bounds(h.ok_or_else(|| bad("missing h"))?, &bounds.ok_or_else(|| bad("missing bounds"))?)?;
    if grid.dim() != n {
        return Err(bad("dimension mismatch"));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut seen = vec![false; grid.len()];
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != n + 2 {
            return Err(bad("wrong column count"));
        }
        let idx = fields[..n]
            .iter()
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad("bad index")))
            .collect::<Result<Vec<_>>>()?;
        if idx.iter().zip(grid.shape()).any(|(i, s)| i >= s) {
            return Err(bad("cell index outside the window"));
        }
        let re = fields[n].trim().parse::<f64>().map_err(|_| bad("bad value"))?;
        let im = fields[n + 1].trim().parse::<f64>().map_err(|_| bad("bad value"))?;
        let k = grid.flat(&idx);
        values[k] = Complex64::new(re, im);
        seen[k] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(bad("missing cells"));
    }
    SampledFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn both_layouts_round_trip(vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 12)) {
            let grid = Grid::new(0.25, vec![-1.0, 0.5], vec![3, 4]).unwrap();
            let f = SampledFunction::new(grid, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let mut bin = Vec::new();
            write_binary(&f, &mut bin).unwrap();
            prop_assert_eq!(read_binary(bin.as_slice()).unwrap(), f.clone());
            let mut csv = Vec::new();
            write_csv(&f, &mut csv).unwrap();
            prop_assert_eq!(read_csv(csv.as_slice()).unwrap(), f);
        }
    }

    #[test]
    fn binary_header_layout() {
        let grid = Grid::new(0.5, vec![0.0], vec![2]).unwrap();
        let f = SampledFunction::constant(grid, Complex64::new(1.0, 0.0));
        let mut bin = Vec::new();
        write_binary(&f, &mut bin).unwrap();
        assert_eq!(&bin[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(bin[8..12].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bin[12..20].try_into().unwrap()), 0.5);
        assert_eq!(bin.len(), 8 + 4 + 8 + 16 + 2 * 16);
    }
}
