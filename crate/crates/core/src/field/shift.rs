//! Translation by phase rotation.

use super::{dot3, FieldGrid, FrequencyBank, LocalField, Real};
use crate::error::Result;

/// Returns `F'` with `F'(u) == F(u - delta)`.
///
/// Each basis phase moves by `-w_i . delta`, i.e. every `(c_i, d_i)` pair is
/// rotated by that angle.
pub fn phase_shift(field: &LocalField, bank: &FrequencyBank, delta: [f64; 3]) -> Result<LocalField> {
    field.check_bank(bank)?;
    let mut out = field.clone();
    let n = field.n_basis;
    let rotations: Vec<(f64, f64)> = bank.omegas().iter().map(|&w| dot3(w, delta).sin_cos()).collect();
    for ch in 0..field.channels {
        for (i, &(s, c)) in rotations.iter().enumerate() {
            let [cc, dd] = field.coeffs[ch * n + i];
            out.coeffs[ch * n + i] = [cc * c + dd * s, dd * c - cc * s];
        }
    }
    Ok(out)
}

/// Splits `v` into `n + f` with `n` an integer and `f` in `[-0.5, 0.5)`.
fn split_offset(v: f64) -> (i64, f64) {
    let n = (v + 0.5).floor();
    (n as i64, v - n)
}

/// Translates a whole grid by `delta` (`[x, y, t]`, input-sample units).
///
/// The integer part of `delta` moves voxels; vacated border voxels copy the
/// nearest surviving source voxel. The fractional part `f` is applied to every
/// voxel as a phase shift. Wherever `p - delta` falls inside the relocated
/// source voxel (that is, away from the clamped border and from the `|f|`-wide
/// seams next to voxel faces), `eval(translated, p) == eval(grid, p - delta)`.
pub fn translate_grid<S: Real>(grid: &FieldGrid<S>, delta: [f64; 3]) -> Result<FieldGrid<S>> {
    if delta == [0.0; 3] {
        return Ok(grid.clone());
    }
    let parts = delta.map(split_offset);
    let shift_int = [parts[2].0, parts[1].0, parts[0].0]; // [t, y, x]
    let frac = [parts[0].1, parts[1].1, parts[2].1];

    let dims = grid.dims;
    let mut out = FieldGrid::zeros(dims, grid.channels, grid.bank.clone());
    let len = grid.voxel_len();
    let rotations: Vec<(f64, f64)> = grid.bank.omegas().iter().map(|&w| dot3(w, frac).sin_cos()).collect();
    let n = grid.bank.len();

    for t in 0..dims[0] {
        for y in 0..dims[1] {
            for x in 0..dims[2] {
                let dst = [t, y, x];
                let mut src = [0usize; 3];
                for a in 0..3 {
                    let s = dst[a] as i64 - shift_int[a];
                    src[a] = s.clamp(0, dims[a] as i64 - 1) as usize;
                }
                let src_block = grid.voxel_slice(src);
                let o = out.voxel_offset(dst);
                let dst_block = &mut out.coeffs[o..o + len];
                for ch in 0..grid.channels {
                    for (i, &(s, c)) in rotations.iter().enumerate() {
                        let k = (ch * n + i) * 2;
                        let cc = src_block[k].to_f64();
                        let dd = src_block[k + 1].to_f64();
                        dst_block[k] = S::from_f64(cc * c + dd * s);
                        dst_block[k + 1] = S::from_f64(dd * c - cc * s);
                    }
                }
            }
        }
    }
    Ok(out)
}
