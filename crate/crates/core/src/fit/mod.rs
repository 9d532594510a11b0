//! Estimating voxel coefficients from a conditioning video.
//!
//! Each voxel's expansion is the weighted ridge least-squares fit of the
//! samples in a window around it:
//!
//! ```text
//! min_z || W^(1/2) (M z - v) ||^2 + lambda || z_osc ||^2
//! ```
//!
//! `M` is the design matrix over the window offsets, `z` stacks the sine then
//! cosine coefficients, and `z_osc` is everything except the dc cosine term
//! (the local mean is never shrunk). The dc sine column is identically zero,
//! so that coefficient is pinned to zero and left out of the solve.
//!
//! The system matrix depends only on the window geometry, so one solve
//! operator `S` (with `z = S v`) is built per geometry and applied to every
//! voxel that shares it with a matrix product.

mod bank;
mod refine;

pub use bank::{init_bank, BankInitConfig, BankStrategy, DEFAULT_MAX_SCALE};
pub use refine::{reconstruction_error, refine_bank, RefineConfig};

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, SVD};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{dot3, FieldGrid, FrequencyBank, LocalField, Real, VoxelIndex};
use crate::video::VideoBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderMode {
    /// Repeat the edge sample.
    Clamp,
    /// Mirror about the edge sample (the edge itself is not repeated).
    Reflect,
    /// Drop window samples that fall outside the video.
    Truncate,
}

impl std::str::FromStr for BorderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamp" => Ok(Self::Clamp),
            "reflect" => Ok(Self::Reflect),
            "truncate" => Ok(Self::Truncate),
            other => Err(Error::config(format!("unknown border mode {other:?} (expected clamp, reflect or truncate)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Window extents `[w_t, w_y, w_x]`, odd.
    pub window: [usize; 3],
    pub ridge_lambda: f64,
    /// Gaussian weighting width in samples; `None` weighs the window uniformly.
    pub sample_weight_sigma: Option<f64>,
    pub border_mode: BorderMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { window: [5, 9, 9], ridge_lambda: 1e-3, sample_weight_sigma: Some(3.0), border_mode: BorderMode::Clamp }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window.iter().any(|&w| w == 0 || w % 2 == 0) {
            return Err(Error::config(format!("window extents must be odd, got {:?}", self.window)));
        }
        if !(self.ridge_lambda.is_finite() && self.ridge_lambda >= 0.0) {
            return Err(Error::config(format!("ridge lambda must be >= 0, got {}", self.ridge_lambda)));
        }
        if let Some(s) = self.sample_weight_sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::config(format!("sample weight sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }

    fn half(&self) -> [isize; 3] {
        self.window.map(|w| (w / 2) as isize)
    }

    fn weight(&self, u: [f64; 3]) -> f64 {
        match self.sample_weight_sigma {
            Some(s) => (-dot3(u, u) / (2.0 * s * s)).exp(),
            None => 1.0,
        }
    }
}

/// Rows `[sin(w_1 . u) .. sin(w_N . u), cos(w_1 . u) .. cos(w_N . u)]`, one per
/// offset (`[x, y, t]`).
pub fn design_matrix(bank: &FrequencyBank, offsets: &[[f64; 3]]) -> DMatrix<f64> {
    let n = bank.len();
    let mut m = DMatrix::zeros(offsets.len(), 2 * n);
    for (r, &u) in offsets.iter().enumerate() {
        for (i, &w) in bank.omegas().iter().enumerate() {
            let (s, c) = dot3(w, u).sin_cos();
            m[(r, i)] = s;
            m[(r, n + i)] = c;
        }
    }
    m
}

/// Window samples relative to the centre voxel, as `[t, y, x]` steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Geometry {
    lo: [isize; 3],
    hi: [isize; 3],
}

impl Geometry {
    fn steps(&self) -> impl Iterator<Item = [isize; 3]> + '_ {
        (self.lo[0]..=self.hi[0]).flat_map(move |dt| {
            (self.lo[1]..=self.hi[1]).flat_map(move |dy| (self.lo[2]..=self.hi[2]).map(move |dx| [dt, dy, dx]))
        })
    }
}

fn geometry_for(cfg: &FitConfig, dims: [usize; 3], center: VoxelIndex) -> Geometry {
    let h = cfg.half();
    let mut lo = h.map(|v| -v);
    let mut hi = h;
    if cfg.border_mode == BorderMode::Truncate {
        for a in 0..3 {
            lo[a] = lo[a].max(-(center[a] as isize));
            hi[a] = hi[a].min(dims[a] as isize - 1 - center[a] as isize);
        }
    }
    Geometry { lo, hi }
}

fn border_index(i: isize, n: usize, mode: BorderMode) -> usize {
    let last = n as isize - 1;
    match mode {
        BorderMode::Clamp | BorderMode::Truncate => i.clamp(0, last) as usize,
        BorderMode::Reflect => {
            if n == 1 {
                return 0;
            }
            let period = 2 * last;
            let m = i.rem_euclid(period);
            (if m > last { period - m } else { m }) as usize
        }
    }
}

/// Builds `S` (`2N x K`) with `z = S v` for a window geometry. `None` when the
/// system is singular.
fn solve_operator(bank: &FrequencyBank, cfg: &FitConfig, geom: &Geometry) -> Option<DMatrix<f64>> {
    let steps: Vec<[isize; 3]> = geom.steps().collect();
    let offsets: Vec<[f64; 3]> = steps.iter().map(|s| [s[2] as f64, s[1] as f64, s[0] as f64]).collect();
    let sqrt_w: Vec<f64> = offsets.iter().map(|&u| cfg.weight(u).sqrt()).collect();
    let n = bank.len();
    let dc_sin = bank.dc_index();
    let dc_cos = n + dc_sin;
    let k = offsets.len();

    // Unknowns: every column but the dc sine.
    let cols: Vec<usize> = (0..2 * n).filter(|&c| c != dc_sin).collect();
    let full = design_matrix(bank, &offsets);
    let a = DMatrix::from_fn(k, cols.len(), |r, c| sqrt_w[r] * full[(r, cols[c])]);
    let mut rhs = a.transpose();
    for (r, mut col) in rhs.column_iter_mut().enumerate() {
        col *= sqrt_w[r];
    }

    let reduced = if cfg.ridge_lambda > 0.0 {
        let mut g = a.transpose() * &a;
        for (c, &col) in cols.iter().enumerate() {
            if col != dc_cos {
                g[(c, c)] += cfg.ridge_lambda;
            }
        }
        let chol = Cholesky::new(g)?;
        chol.solve(&rhs)
    } else {
        if k < cols.len() {
            return None;
        }
        let svd = SVD::new(a, true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let tol = f64::EPSILON * k.max(cols.len()) as f64 * smax;
        if smax == 0.0 || sv.iter().any(|&s| s <= tol) {
            return None;
        }
        let u = svd.u?;
        let v_t = svd.v_t?;
        // V diag(1/s) U^T diag(sqrt w)
        let mut ut = u.transpose();
        for (r, mut row) in ut.row_iter_mut().enumerate() {
            row /= sv[r];
        }
        let ut_w = DMatrix::from_fn(ut.nrows(), k, |r, c| ut[(r, c)] * sqrt_w[c]);
        v_t.transpose() * ut_w
    };

    let mut s = DMatrix::zeros(2 * n, k);
    for (c, &col) in cols.iter().enumerate() {
        s.row_mut(col).copy_from(&reduced.row(c));
    }
    Some(s)
}

/// Gathers the window around `center` into column `col` of `v`, one column
/// per channel starting at `col`.
fn gather(
    video: &VideoBuffer,
    center: VoxelIndex,
    geom: &Geometry,
    mode: BorderMode,
    v: &mut DMatrix<f64>,
    col: usize,
) {
    let dims = video.dims();
    for (row, step) in geom.steps().enumerate() {
        let t = border_index(center[0] as isize + step[0], dims[0], mode);
        let y = border_index(center[1] as isize + step[1], dims[1], mode);
        let x = border_index(center[2] as isize + step[2], dims[2], mode);
        let base = video.index(t, y, x, 0);
        for ch in 0..video.channels() {
            v[(row, col + ch)] = video.data()[base + ch];
        }
    }
}

fn check_inputs(video: &VideoBuffer, cfg: &FitConfig) -> Result<()> {
    cfg.validate()?;
    if video.is_empty() {
        return Err(Error::config("cannot fit an empty video"));
    }
    Ok(())
}

/// Fits the expansion of a single voxel.
pub fn fit_voxel(video: &VideoBuffer, center: VoxelIndex, bank: &FrequencyBank, cfg: &FitConfig) -> Result<LocalField> {
    check_inputs(video, cfg)?;
    let dims = video.dims();
    if (0..3).any(|a| center[a] >= dims[a]) {
        return Err(Error::config(format!("voxel {center:?} outside video dims {dims:?}")));
    }
    let geom = geometry_for(cfg, dims, center);
    let s = solve_operator(bank, cfg, &geom).ok_or(Error::RankDeficient { voxel: center })?;
    let channels = video.channels();
    let mut v = DMatrix::zeros(s.ncols(), channels);
    gather(video, center, &geom, cfg.border_mode, &mut v, 0);
    let z = s * v;
    let n = bank.len();
    let mut field = LocalField::zeros(channels, n);
    for ch in 0..channels {
        for i in 0..n {
            field.set(ch, i, z[(i, ch)], z[(n + i, ch)]);
        }
    }
    Ok(field)
}

const CHUNK_VOXELS: usize = 512;

/// Fits every voxel of `video` and returns the coefficient grid.
///
/// Voxels sharing a window geometry share one solve operator. Results do not
/// depend on the number of worker threads.
pub fn fit_video<S: Real>(video: &VideoBuffer, bank: &FrequencyBank, cfg: &FitConfig) -> Result<FieldGrid<S>> {
    check_inputs(video, cfg)?;
    let dims = video.dims();
    let channels = video.channels();
    let n = bank.len();

    let mut groups: HashMap<Geometry, Vec<VoxelIndex>> = HashMap::new();
    let mut order = Vec::new();
    for t in 0..dims[0] {
        for y in 0..dims[1] {
            for x in 0..dims[2] {
                let g = geometry_for(cfg, dims, [t, y, x]);
                groups
                    .entry(g.clone())
                    .or_insert_with(|| {
                        order.push(g);
                        Vec::new()
                    })
                    .push([t, y, x]);
            }
        }
    }

    let operators: Vec<DMatrix<f64>> = order
        .par_iter()
        .map(|g| solve_operator(bank, cfg, g).ok_or(Error::RankDeficient { voxel: groups[g][0] }))
        .collect::<Result<_>>()?;

    let mut work = Vec::new();
    for (gi, g) in order.iter().enumerate() {
        for chunk in groups[g].chunks(CHUNK_VOXELS) {
            work.push((gi, chunk));
        }
    }

    let mut grid = FieldGrid::<S>::zeros(dims, channels, bank.clone());
    let batch = rayon::current_num_threads().max(1) * 2;
    for items in work.chunks(batch) {
        let solved: Vec<DMatrix<f64>> = items
            .par_iter()
            .map(|&(gi, voxels)| {
                let s = &operators[gi];
                let mut v = DMatrix::zeros(s.ncols(), voxels.len() * channels);
                for (k, &j) in voxels.iter().enumerate() {
                    gather(video, j, &order[gi], cfg.border_mode, &mut v, k * channels);
                }
                s * v
            })
            .collect();
        for (&(_, voxels), z) in items.iter().zip(solved) {
            for (k, &j) in voxels.iter().enumerate() {
                let o = grid.voxel_offset(j);
                let block = &mut grid.coeffs_mut()[o..o + channels * n * 2];
                for ch in 0..channels {
                    let col = k * channels + ch;
                    for i in 0..n {
                        block[(ch * n + i) * 2] = S::from_f64(z[(i, col)]);
                        block[(ch * n + i) * 2 + 1] = S::from_f64(z[(n + i, col)]);
                    }
                }
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::field::{eval_local, phase_shift, PsfSpec};

    fn bank_from(ws: &[[f64; 3]]) -> FrequencyBank {
        let mut omegas = vec![[0.0; 3]];
        omegas.extend_from_slice(ws);
        FrequencyBank::new(omegas, 0).unwrap()
    }

    fn random_bank(rng: &mut ChaCha8Rng, n: usize, wmax: f64) -> FrequencyBank {
        let ws: Vec<[f64; 3]> = (1..n)
            .map(|_| [rng.random_range(0.05..wmax), rng.random_range(-wmax..wmax), rng.random_range(-wmax..wmax)])
            .collect();
        bank_from(&ws)
    }

    /// A video sampled from one global field `F(p) = sum c sin(w.p) + d cos(w.p)`.
    fn global_video(bank: &FrequencyBank, field: &LocalField, dims: [usize; 3]) -> VideoBuffer {
        let psf = PsfSpec::point();
        let mut video = VideoBuffer::zeros(dims[0], dims[1], dims[2], field.channels());
        for t in 0..dims[0] {
            for y in 0..dims[1] {
                for x in 0..dims[2] {
                    let v = eval_local(field, bank, [x as f64, y as f64, t as f64], &psf).unwrap();
                    for (c, val) in v.into_iter().enumerate() {
                        video.set(t, y, x, c, val);
                    }
                }
            }
        }
        video
    }

    #[test]
    fn design_matrix_examples() {
        let bank = bank_from(&[[PI, 0.0, 0.0], [1.0, 2.0, 3.0]]);
        let m = design_matrix(&bank, &[[0.0; 3], [0.5, 0.0, 0.0]]);
        assert_eq!(m.shape(), (2, 6));
        for i in 0..3 {
            assert_eq!(m[(0, i)], 0.0);
            assert_eq!(m[(0, 3 + i)], 1.0);
        }
        assert!((m[(1, 1)] - 1.0).abs() < 1e-15);
        assert!(m[(1, 4)].abs() <= 1e-12);
        // dc column pair
        assert_eq!(m[(1, 0)], 0.0);
        assert_eq!(m[(1, 3)], 1.0);
    }

    #[test]
    fn design_matrix_reproduces_eval_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bank = random_bank(&mut rng, 9, 5.0);
        let pairs: Vec<[f64; 2]> = (0..9).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let field = LocalField::from_pairs(1, 9, pairs.clone()).unwrap();
        let offsets: Vec<[f64; 3]> = (0..20)
            .map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
            .collect();
        let m = design_matrix(&bank, &offsets);
        let z = DMatrix::from_fn(18, 1, |r, _| if r < 9 { pairs[r][0] } else { pairs[r - 9][1] });
        let vals = m * z;
        for (r, &u) in offsets.iter().enumerate() {
            let want = eval_local(&field, &bank, u, &PsfSpec::point()).unwrap()[0];
            assert!((vals[(r, 0)] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_video_fits_dc_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bank = random_bank(&mut rng, 40, 4.0 * PI);
        let video = VideoBuffer::filled(5, 9, 9, 3, 0.5);
        let cfg = FitConfig::default();
        for center in [[2, 4, 4], [0, 0, 0], [4, 8, 3]] {
            let f = fit_voxel(&video, center, &bank, &cfg).unwrap();
            for ch in 0..3 {
                let (c0, d0) = f.get(ch, 0);
                assert_eq!(c0, 0.0);
                assert!((d0 - 0.5).abs() < 1e-6);
                for i in 1..40 {
                    let (c, d) = f.get(ch, i);
                    assert!(c.abs() <= 1e-6 && d.abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn zero_video_fits_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bank = random_bank(&mut rng, 16, 3.0);
        let video = VideoBuffer::zeros(3, 5, 5, 3);
        let grid: FieldGrid<f64> = fit_video(&video, &bank, &FitConfig::default()).unwrap();
        assert!(grid.coeffs().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exact_recovery_at_zero_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 8;
        let bank = random_bank(&mut rng, n, 2.5);
        let pairs: Vec<[f64; 2]> = (0..n)
            .map(|i| if i == 0 { [0.0, 0.5] } else { [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)] })
            .collect();
        let global = LocalField::from_pairs(1, n, pairs).unwrap();
        let video = global_video(&bank, &global, [7, 7, 7]);
        let cfg = FitConfig {
            window: [5, 5, 5],
            ridge_lambda: 0.0,
            sample_weight_sigma: None,
            border_mode: BorderMode::Truncate,
        };
        let center = [3, 3, 3];
        let got = fit_voxel(&video, center, &bank, &cfg).unwrap();
        let want = phase_shift(&global, &bank, [-3.0, -3.0, -3.0]).unwrap();
        let num: f64 =
            got.pairs().iter().zip(want.pairs()).map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sum();
        let den: f64 = want.pairs().iter().map(|b| b[0] * b[0] + b[1] * b[1]).sum();
        assert!((num / den).sqrt() <= 1e-6, "relative error {}", (num / den).sqrt());
    }

    #[test]
    fn rank_deficiency_names_the_voxel() {
        // 3 samples, 2N - 1 = 5 unknowns
        let bank = bank_from(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        let video = VideoBuffer::filled(1, 1, 6, 1, 0.3);
        let cfg = FitConfig {
            window: [1, 1, 3],
            ridge_lambda: 0.0,
            sample_weight_sigma: None,
            border_mode: BorderMode::Clamp,
        };
        match fit_voxel(&video, [0, 0, 2], &bank, &cfg) {
            Err(Error::RankDeficient { voxel }) => assert_eq!(voxel, [0, 0, 2]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        match fit_video::<f32>(&video, &bank, &cfg) {
            Err(Error::RankDeficient { voxel }) => assert_eq!(voxel, [0, 0, 0]),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn fit_video_matches_fit_voxel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bank = random_bank(&mut rng, 12, 3.0);
        let video = VideoBuffer::from_fn([4, 6, 7], 3, |_, _, _, _| rng.random::<f64>());
        for mode in [BorderMode::Clamp, BorderMode::Reflect, BorderMode::Truncate] {
            let cfg = FitConfig { window: [3, 5, 5], border_mode: mode, ..Default::default() };
            let grid: FieldGrid<f64> = fit_video(&video, &bank, &cfg).unwrap();
            for j in [[0, 0, 0], [1, 2, 3], [3, 5, 6]] {
                let f = fit_voxel(&video, j, &bank, &cfg).unwrap();
                for (a, b) in grid.voxel(j).pairs().iter().zip(f.pairs()) {
                    assert!((a[0] - b[0]).abs() < 1e-10 && (a[1] - b[1]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_voxel_video() {
        let bank = bank_from(&[[1.0, 1.0, 1.0]]);
        let video = VideoBuffer::filled(1, 1, 1, 3, 0.7);
        let cfg = FitConfig { ridge_lambda: 1e-9, ..Default::default() };
        let grid: FieldGrid<f64> = fit_video(&video, &bank, &cfg).unwrap();
        for ch in 0..3 {
            let (c, d) = grid.voxel([0, 0, 0]).get(ch, 0);
            assert_eq!(c, 0.0);
            assert!((d - 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn reflect_border_indices() {
        let idx: Vec<usize> = (-4..9).map(|i| border_index(i, 4, BorderMode::Reflect)).collect();
        assert_eq!(idx, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1, 2]);
        assert_eq!(border_index(-3, 1, BorderMode::Reflect), 0);
        assert_eq!(border_index(-3, 4, BorderMode::Clamp), 0);
        assert_eq!(border_index(7, 4, BorderMode::Clamp), 3);
    }

    #[test]
    fn invalid_config_rejected() {
        let video = VideoBuffer::filled(1, 3, 3, 3, 0.1);
        let bank = bank_from(&[[1.0, 0.0, 0.0]]);
        for cfg in [
            FitConfig { window: [2, 3, 3], ..Default::default() },
            FitConfig { ridge_lambda: -1.0, ..Default::default() },
            FitConfig { sample_weight_sigma: Some(0.0), ..Default::default() },
        ] {
            assert!(matches!(fit_voxel(&video, [0, 0, 0], &bank, &cfg), Err(Error::Config(_))));
        }
        assert!(fit_voxel(&video, [0, 3, 0], &bank, &FitConfig::default()).is_err());
        assert!(fit_video::<f32>(&VideoBuffer::zeros(0, 0, 0, 3), &bank, &FitConfig::default()).is_err());
    }
}
