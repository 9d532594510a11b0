//! Rendering a [`FieldGrid`] onto a regular output lattice.
//!
//! The output lattice is separable, so along each axis every voxel is hit by a
//! short list of local offsets. Voxels whose three offset lists coincide share
//! one design matrix `[xi * sin(w . u) | xi * cos(w . u)]`, and rendering them
//! is a single matrix product against their stacked coefficient blocks. For
//! integer scale factors nearly every voxel shares the same lists.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{eval_grid_point_blended, locate, Coordinate, FieldGrid, PsfSpec, Real};
use crate::video::VideoBuffer;

/// Output geometry for a spatial factor `s` and temporal factor `r`.
///
/// Output sample `(tau, i, k)` reads the field at
/// `x = (k + 0.5) / s - 0.5`, `y = (i + 0.5) / s - 0.5` (pixel-centre aligned)
/// and `t = tau / r` (frame aligned, so output frame `tau = r * n` is input
/// frame `n`). Output frames past the last input frame's half-voxel hold the
/// domain edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    s: f64,
    r: f64,
    in_dims: [usize; 3],
    out_dims: [usize; 3],
}

impl SampleSpec {
    /// Output dims are `round(r T) x round(s H) x round(s W)`.
    pub fn new(in_dims: [usize; 3], s: f64, r: f64) -> Result<Self> {
        let out_dims = [
            (r * in_dims[0] as f64).round() as usize,
            (s * in_dims[1] as f64).round() as usize,
            (s * in_dims[2] as f64).round() as usize,
        ];
        Self::with_out_dims(in_dims, s, r, out_dims)
    }

    pub fn with_out_dims(in_dims: [usize; 3], s: f64, r: f64, out_dims: [usize; 3]) -> Result<Self> {
        if !(s.is_finite() && s > 0.0 && r.is_finite() && r > 0.0) {
            return Err(Error::config(format!("scale factors must be positive, got s={s}, r={r}")));
        }
        if in_dims.contains(&0) {
            return Err(Error::config(format!("input dims must be nonzero, got {in_dims:?}")));
        }
        if out_dims.contains(&0) {
            return Err(Error::config(format!("output dims must be at least 1, got {out_dims:?}")));
        }
        let spec = Self { s, r, in_dims, out_dims };
        // Spatial coordinates may only leave the domain through rounding.
        let [_, h, w] = in_dims;
        let x_hi = (out_dims[2] as f64 - 0.5) / s - 0.5;
        let y_hi = (out_dims[1] as f64 - 0.5) / s - 0.5;
        let slack = 1e-9;
        if x_hi > w as f64 - 0.5 + slack || y_hi > h as f64 - 0.5 + slack {
            let t = spec.t_coord(out_dims[0] - 1);
            return Err(Error::Domain { x: x_hi, y: y_hi, t, dims: in_dims });
        }
        Ok(spec)
    }

    pub fn identity(in_dims: [usize; 3]) -> Self {
        Self { s: 1.0, r: 1.0, in_dims, out_dims: in_dims }
    }

    pub fn spatial_scale(&self) -> f64 {
        self.s
    }

    pub fn temporal_scale(&self) -> f64 {
        self.r
    }

    pub fn in_dims(&self) -> [usize; 3] {
        self.in_dims
    }

    pub fn out_dims(&self) -> [usize; 3] {
        self.out_dims
    }

    pub fn x_coord(&self, k: usize) -> f64 {
        clamp_axis((k as f64 + 0.5) / self.s - 0.5, self.in_dims[2])
    }

    pub fn y_coord(&self, i: usize) -> f64 {
        clamp_axis((i as f64 + 0.5) / self.s - 0.5, self.in_dims[1])
    }

    pub fn t_coord(&self, tau: usize) -> f64 {
        clamp_axis(tau as f64 / self.r, self.in_dims[0])
    }

    pub fn coordinate(&self, tau: usize, i: usize, k: usize) -> Coordinate {
        Coordinate::new(self.x_coord(k), self.y_coord(i), self.t_coord(tau))
    }

    /// Whether output frame `tau` coincides with an input frame.
    pub fn is_keyframe(&self, tau: usize) -> bool {
        let t = tau as f64 / self.r;
        t == t.round() && t <= (self.in_dims[0] - 1) as f64
    }
}

fn clamp_axis(v: f64, n: usize) -> f64 {
    v.clamp(-0.5, n as f64 - 0.5)
}

fn check_spec<S: Real>(grid: &FieldGrid<S>, spec: &SampleSpec) -> Result<()> {
    if grid.dims() != spec.in_dims {
        return Err(Error::structural(format!("sample spec expects a {:?} grid, got {:?}", spec.in_dims, grid.dims())));
    }
    Ok(())
}

/// One axis of the separable lattice: which outputs each voxel serves, and
/// the deduplicated offset lists.
struct AxisPlan {
    /// Per voxel: (pattern id, output indices in pattern order).
    voxels: Vec<(usize, Vec<usize>)>,
    patterns: Vec<Vec<f64>>,
}

impl AxisPlan {
    fn build(n_in: usize, n_out: usize, coord: impl Fn(usize) -> f64) -> Self {
        let mut members: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_in];
        for o in 0..n_out {
            let v = coord(o);
            let j = ((v + 0.5).floor() as usize).min(n_in - 1);
            members[j].push((o, v - j as f64));
        }
        let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut patterns = Vec::new();
        let voxels = members
            .into_iter()
            .map(|m| {
                let key: Vec<u64> = m.iter().map(|(_, u)| u.to_bits()).collect();
                let id = *ids.entry(key).or_insert_with(|| {
                    patterns.push(m.iter().map(|&(_, u)| u).collect());
                    patterns.len() - 1
                });
                (id, m.into_iter().map(|(o, _)| o).collect())
            })
            .collect();
        Self { voxels, patterns }
    }

    /// `phasors[p][k * n + i] = (cos, sin)(w_i[axis] * u_k)`.
    fn phasors(&self, omegas: &[[f64; 3]], axis: usize) -> Vec<Vec<(f64, f64)>> {
        self.patterns
            .iter()
            .map(|pat| {
                let mut out = Vec::with_capacity(pat.len() * omegas.len());
                for &u in pat {
                    for w in omegas {
                        let (s, c) = (w[axis] * u).sin_cos();
                        out.push((c, s));
                    }
                }
                out
            })
            .collect()
    }
}

/// Voxels per matrix product.
const CHUNK_VOXELS: usize = 256;

struct WorkItem {
    key: [usize; 3],
    voxels: Vec<[usize; 3]>,
}

/// Renders `grid` through `psf` on the lattice described by `spec`.
///
/// Values are the raw field evaluations (not clamped).
pub fn sample_grid<S: Real>(grid: &FieldGrid<S>, spec: &SampleSpec, psf: &PsfSpec) -> Result<VideoBuffer> {
    check_spec(grid, spec)?;
    let [t_in, h_in, w_in] = spec.in_dims;
    let [t_out, h_out, w_out] = spec.out_dims;
    let plan_t = AxisPlan::build(t_in, t_out, |o| spec.t_coord(o));
    let plan_y = AxisPlan::build(h_in, h_out, |o| spec.y_coord(o));
    let plan_x = AxisPlan::build(w_in, w_out, |o| spec.x_coord(o));

    let bank = grid.bank();
    let omegas = bank.omegas();
    let n = bank.len();
    let atten = bank.attenuations(psf);
    let ph = [plan_x.phasors(omegas, 0), plan_y.phasors(omegas, 1), plan_t.phasors(omegas, 2)];

    // Group voxels by their (t, y, x) pattern triple, in scan order.
    let mut groups: HashMap<[usize; 3], Vec<[usize; 3]>> = HashMap::new();
    let mut order: Vec<[usize; 3]> = Vec::new();
    for t in 0..t_in {
        let (pt, ref ot) = plan_t.voxels[t];
        if ot.is_empty() {
            continue;
        }
        for y in 0..h_in {
            let (py, ref oy) = plan_y.voxels[y];
            if oy.is_empty() {
                continue;
            }
            for x in 0..w_in {
                let (px, ref ox) = plan_x.voxels[x];
                if ox.is_empty() {
                    continue;
                }
                let key = [pt, py, px];
                groups
                    .entry(key)
                    .or_insert_with(|| {
                        order.push(key);
                        Vec::new()
                    })
                    .push([t, y, x]);
            }
        }
    }
    let mut work = Vec::new();
    for key in order {
        for chunk in groups[&key].chunks(CHUNK_VOXELS) {
            work.push(WorkItem { key, voxels: chunk.to_vec() });
        }
    }

    let channels = grid.channels();
    let mut out = VideoBuffer::zeros(t_out, h_out, w_out, channels);
    let batch = rayon::current_num_threads().max(1) * 4;
    for items in work.chunks(batch) {
        let blocks: Vec<DMatrix<f64>> = items
            .par_iter()
            .map(|item| {
                let [pt, py, px] = item.key;
                let design = design_from_phasors(
                    [&ph[0][px], &ph[1][py], &ph[2][pt]],
                    [plan_x.patterns[px].len(), plan_y.patterns[py].len(), plan_t.patterns[pt].len()],
                    &atten,
                );
                let coeffs = stack_coefficients(grid, &item.voxels, n);
                design * coeffs
            })
            .collect();
        for (item, block) in items.iter().zip(blocks) {
            let [pt, py, px] = item.key;
            let (ny, nx) = (plan_y.patterns[py].len(), plan_x.patterns[px].len());
            for (v, &[t, y, x]) in item.voxels.iter().enumerate() {
                let (ot, oy, ox) = (&plan_t.voxels[t].1, &plan_y.voxels[y].1, &plan_x.voxels[x].1);
                debug_assert_eq!(pt, plan_t.voxels[t].0);
                for (a, &tau) in ot.iter().enumerate() {
                    for (b, &i) in oy.iter().enumerate() {
                        for (c, &k) in ox.iter().enumerate() {
                            let row = (a * ny + b) * nx + c;
                            let base = out.index(tau, i, k, 0);
                            for ch in 0..channels {
                                out.data_mut()[base + ch] = block[(row, v * channels + ch)];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Rows ordered t-major, then y, then x; columns `[xi sin | xi cos]`.
fn design_from_phasors(ph: [&[(f64, f64)]; 3], len: [usize; 3], atten: &[f64]) -> DMatrix<f64> {
    let n = atten.len();
    let [nx, ny, nt] = len;
    let q = nt * ny * nx;
    let mut d = DMatrix::<f64>::zeros(q, 2 * n);
    for a in 0..nt {
        for b in 0..ny {
            for c in 0..nx {
                let row = (a * ny + b) * nx + c;
                for i in 0..n {
                    let (c1, s1) = ph[0][c * n + i];
                    let (c2, s2) = ph[1][b * n + i];
                    let (c3, s3) = ph[2][a * n + i];
                    let (c12, s12) = (c1 * c2 - s1 * s2, s1 * c2 + c1 * s2);
                    let (cos, sin) = (c12 * c3 - s12 * s3, s12 * c3 + c12 * s3);
                    d[(row, i)] = atten[i] * sin;
                    d[(row, n + i)] = atten[i] * cos;
                }
            }
        }
    }
    d
}

/// Column `v * C + ch` holds `[c_0..c_{N-1}, d_0..d_{N-1}]` of voxel `v`.
fn stack_coefficients<S: Real>(grid: &FieldGrid<S>, voxels: &[[usize; 3]], n: usize) -> DMatrix<f64> {
    let channels = grid.channels();
    let mut b = DMatrix::<f64>::zeros(2 * n, voxels.len() * channels);
    for (v, &j) in voxels.iter().enumerate() {
        let block = grid.voxel_slice(j);
        for ch in 0..channels {
            let mut col = b.column_mut(v * channels + ch);
            for i in 0..n {
                let k = (ch * n + i) * 2;
                col[i] = block[k].to_f64();
                col[n + i] = block[k + 1].to_f64();
            }
        }
    }
    b
}

/// Point-by-point reference renderer: one `locate` and one bank-order sum
/// per output sample.
pub fn sample_grid_naive<S: Real>(grid: &FieldGrid<S>, spec: &SampleSpec, psf: &PsfSpec) -> Result<VideoBuffer> {
    sample_frames_naive(grid, spec, psf, 0..spec.out_dims[0])
}

/// The naive renderer restricted to output frames `frames`.
pub fn sample_frames_naive<S: Real>(
    grid: &FieldGrid<S>,
    spec: &SampleSpec,
    psf: &PsfSpec,
    frames: Range<usize>,
) -> Result<VideoBuffer> {
    check_spec(grid, spec)?;
    if frames.end > spec.out_dims[0] {
        return Err(Error::config(format!("frame range {frames:?} exceeds {} output frames", spec.out_dims[0])));
    }
    let [_, h_out, w_out] = spec.out_dims;
    let channels = grid.channels();
    let atten = grid.bank().attenuations(psf);
    let mut out = VideoBuffer::zeros(frames.len(), h_out, w_out, channels);
    let start = frames.start;
    let frame_len = out.frame_len();
    out.data_mut().par_chunks_mut(frame_len.max(1)).enumerate().try_for_each(|(f, frame)| -> Result<()> {
        let tau = start + f;
        for i in 0..h_out {
            for k in 0..w_out {
                let (j, u) = locate(spec.in_dims, spec.coordinate(tau, i, k))?;
                let o = (i * w_out + k) * channels;
                grid.eval_voxel_into(j, u, &atten, &mut frame[o..o + channels]);
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Renders with a linear cross-fade of width `margin` across voxel faces.
pub fn sample_grid_blended<S: Real>(
    grid: &FieldGrid<S>,
    spec: &SampleSpec,
    psf: &PsfSpec,
    margin: f64,
) -> Result<VideoBuffer> {
    check_spec(grid, spec)?;
    let [t_out, h_out, w_out] = spec.out_dims;
    let channels = grid.channels();
    let mut out = VideoBuffer::zeros(t_out, h_out, w_out, channels);
    let frame_len = out.frame_len();
    out.data_mut().par_chunks_mut(frame_len.max(1)).enumerate().try_for_each(|(tau, frame)| -> Result<()> {
        for i in 0..h_out {
            for k in 0..w_out {
                let v = eval_grid_point_blended(grid, spec.coordinate(tau, i, k), psf, margin)?;
                let o = (i * w_out + k) * channels;
                frame[o..o + channels].copy_from_slice(&v);
            }
        }
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::field::{eval_grid_point, FrequencyBank, LocalField};

    fn random_grid(rng: &mut ChaCha8Rng, dims: [usize; 3], n: usize) -> FieldGrid<f64> {
        let mut omegas = vec![[0.0; 3]];
        for _ in 1..n {
            omegas.push([rng.random_range(0.0..8.0), rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)]);
        }
        let bank = FrequencyBank::new(omegas, 0).unwrap();
        FieldGrid::from_fn(dims, 3, bank, |_| {
            let pairs = (0..3 * n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            LocalField::from_pairs(3, n, pairs).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn output_dims_round() {
        let spec = SampleSpec::new([14, 80, 80], 4.0, 8.0).unwrap();
        assert_eq!(spec.out_dims(), [112, 320, 320]);
        let spec = SampleSpec::new([3, 5, 7], 1.5, 2.5).unwrap();
        assert_eq!(spec.out_dims(), [8, 8, 11]);
        let spec = SampleSpec::new([4, 4, 4], 2.0, 2.0).unwrap();
        assert_eq!(spec.out_dims(), [8, 8, 8]);
    }

    #[test]
    fn coordinates_stay_in_domain() {
        for (s, r) in [(1.5, 1.5), (3.7, 2.2), (1.0, 8.0), (0.5, 0.5)] {
            let dims = [5, 7, 9];
            let spec = SampleSpec::new(dims, s, r).unwrap();
            let [t, h, w] = spec.out_dims();
            for tau in 0..t {
                for i in 0..h {
                    for k in 0..w {
                        locate(dims, spec.coordinate(tau, i, k)).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn keyframes_align_with_input_frames() {
        let spec = SampleSpec::new([2, 4, 4], 1.0, 8.0).unwrap();
        assert_eq!(spec.t_coord(8), 1.0);
        assert!(spec.is_keyframe(0) && spec.is_keyframe(8));
        assert!(!spec.is_keyframe(4) && !spec.is_keyframe(16));
        // trailing frames hold the domain edge
        assert_eq!(spec.t_coord(15), 1.5);
    }

    #[test]
    fn identity_spec_reads_voxel_centres() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid = random_grid(&mut rng, [2, 3, 4], 6);
        let spec = SampleSpec::identity(grid.dims());
        let psf = PsfSpec::point();
        let out = sample_grid(&grid, &spec, &psf).unwrap();
        for t in 0..2 {
            for y in 0..3 {
                for x in 0..4 {
                    let p = Coordinate::new(x as f64, y as f64, t as f64);
                    let v = eval_grid_point(&grid, p, &psf).unwrap();
                    for (c, vc) in v.iter().enumerate() {
                        assert!((out.get(t, y, x, c) - vc).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_grid_renders_black() {
        let bank = FrequencyBank::new(vec![[0.0; 3], [1.0, 1.0, 1.0]], 0).unwrap();
        let grid: FieldGrid = FieldGrid::zeros([2, 3, 3], 3, bank);
        let spec = SampleSpec::new(grid.dims(), 2.5, 3.0).unwrap();
        let out = sample_grid(&grid, &spec, &PsfSpec::spatial(1.0).unwrap()).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn batched_matches_naive_on_small_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let grid = random_grid(&mut rng, [4, 8, 8], 24);
        let psf = PsfSpec::new(0.9, 1.3, f64::INFINITY).unwrap();
        for (s, r) in [(2.0, 2.0), (1.0, 3.0), (2.7, 1.3)] {
            let spec = SampleSpec::new(grid.dims(), s, r).unwrap();
            let a = sample_grid(&grid, &spec, &psf).unwrap();
            let b = sample_grid_naive(&grid, &spec, &psf).unwrap();
            let err = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "s={s} r={r}: max err {err}");
        }
    }

    #[test]
    fn naive_frame_subset_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grid = random_grid(&mut rng, [3, 4, 4], 5);
        let spec = SampleSpec::new(grid.dims(), 2.0, 2.0).unwrap();
        let psf = PsfSpec::point();
        let full = sample_grid_naive(&grid, &spec, &psf).unwrap();
        let part = sample_frames_naive(&grid, &spec, &psf, 2..4).unwrap();
        assert_eq!(part.frame(0), full.frame(2));
        assert_eq!(part.frame(1), full.frame(3));
        assert!(sample_frames_naive(&grid, &spec, &psf, 5..7).is_err());
    }

    #[test]
    fn spec_grid_mismatch_is_structural() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let grid = random_grid(&mut rng, [2, 2, 2], 3);
        let spec = SampleSpec::new([2, 3, 2], 1.0, 1.0).unwrap();
        assert!(matches!(sample_grid(&grid, &spec, &PsfSpec::point()), Err(Error::Structural(_))));
    }

    #[test]
    fn oversized_output_is_a_domain_error() {
        let err = SampleSpec::with_out_dims([2, 4, 4], 1.0, 1.0, [2, 4, 6]).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }
}
