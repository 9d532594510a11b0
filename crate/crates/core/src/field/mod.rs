//! The Video Fourier Field representation.
//!
//! A video is covered by an axis-aligned grid of voxels, one per input
//! sample. Every voxel holds a [`LocalField`]: per-channel coefficients of a
//! finite sum of 3D sinusoids whose frequencies come from a single shared
//! [`FrequencyBank`]. Voxel `(t, y, x)` is centred on the integer coordinate
//! `(x, y, t)` and owns the half-open box of offsets `[-0.5, 0.5)^3` around it.
//!
//! Coefficients are stored as `(c, d)` pairs so that a basis term reads
//! `c * sin(w . u) + d * cos(w . u)`, which is linear in the unknowns.
//! Triples describing positions, offsets and frequencies are ordered
//! `[x, y, t]`; grid dimensions are ordered `[T, H, W]`.

mod psf;
mod shift;

pub use psf::{kernel_std, psf_attenuation, PsfSpec};
pub use shift::{phase_shift, translate_grid};

use std::f64::consts::PI;
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Storage precision of coefficient tensors.
pub trait Real: Copy + Default + PartialEq + Debug + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Converts a `(c, d)` pair to amplitude and phase, with
/// `a * sin(theta + phi) == c * sin(theta) + d * cos(theta)`.
///
/// `a >= 0` and `phi` is in `[-pi, pi)`; the zero pair maps to `(0, 0)`.
pub fn coeff_to_amp_phase(c: f64, d: f64) -> (f64, f64) {
    let a = c.hypot(d);
    if a == 0.0 {
        return (0.0, 0.0);
    }
    (a, canonical_phase(d.atan2(c)))
}

pub fn amp_phase_to_coeff(a: f64, phi: f64) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    (a * c, a * s)
}

/// Wraps an angle into `[-pi, pi)`.
pub fn canonical_phase(phi: f64) -> f64 {
    let mut p = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if p >= PI {
        p -= 2.0 * PI;
    }
    // fold -0.0
    p + 0.0
}

/// The shared set of basis frequencies, in radians per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBank {
    omegas: Vec<[f64; 3]>,
    dc_index: usize,
}

impl FrequencyBank {
    /// Validates and wraps a frequency list. The entry at `dc_index` must be
    /// `(0, 0, 0)` and no other entry may be all-zero.
    pub fn new(omegas: Vec<[f64; 3]>, dc_index: usize) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::config("frequency bank needs at least one entry"));
        }
        if dc_index >= omegas.len() {
            return Err(Error::config(format!("dc index {dc_index} out of range for {} frequencies", omegas.len())));
        }
        for (i, w) in omegas.iter().enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::config(format!("frequency {i} is not finite: {w:?}")));
            }
            let zero = w.iter().all(|&v| v == 0.0);
            if i == dc_index && !zero {
                return Err(Error::config(format!("dc entry {i} must be (0, 0, 0), got {w:?}")));
            }
            if i != dc_index && zero {
                return Err(Error::config(format!("entry {i} duplicates the dc frequency")));
            }
        }
        Ok(Self { omegas, dc_index })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[[f64; 3]] {
        &self.omegas
    }

    pub fn omega(&self, i: usize) -> [f64; 3] {
        self.omegas[i]
    }

    pub fn dc_index(&self) -> usize {
        self.dc_index
    }

    /// Per-basis attenuation factors for `psf`, in bank order.
    pub fn attenuations(&self, psf: &PsfSpec) -> Vec<f64> {
        self.omegas.iter().map(|&w| psf_attenuation(w, psf)).collect()
    }
}

/// One voxel's expansion: `channels x n_basis` coefficient pairs `(c, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalField {
    channels: usize,
    n_basis: usize,
    coeffs: Vec<[f64; 2]>,
}

impl LocalField {
    pub fn zeros(channels: usize, n_basis: usize) -> Self {
        Self { channels, n_basis, coeffs: vec![[0.0; 2]; channels * n_basis] }
    }

    /// `coeffs` is channel-major: entry `ch * n_basis + i` is `(c_i, d_i)` of
    /// channel `ch`.
    pub fn from_pairs(channels: usize, n_basis: usize, coeffs: Vec<[f64; 2]>) -> Result<Self> {
        if coeffs.len() != channels * n_basis {
            return Err(Error::structural(format!(
                "{} coefficient pairs for {channels} channels x {n_basis} basis functions",
                coeffs.len()
            )));
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::structural("non-finite coefficient"));
        }
        Ok(Self { channels, n_basis, coeffs })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.coeffs
    }

    pub fn pairs_mut(&mut self) -> &mut [[f64; 2]] {
        &mut self.coeffs
    }

    pub fn get(&self, channel: usize, basis: usize) -> (f64, f64) {
        let [c, d] = self.coeffs[channel * self.n_basis + basis];
        (c, d)
    }

    pub fn set(&mut self, channel: usize, basis: usize, c: f64, d: f64) {
        self.coeffs[channel * self.n_basis + basis] = [c, d];
    }

    pub fn amp_phase(&self, channel: usize, basis: usize) -> (f64, f64) {
        let (c, d) = self.get(channel, basis);
        coeff_to_amp_phase(c, d)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &LocalField, beta: f64) -> Result<LocalField> {
        if self.channels != other.channels || self.n_basis != other.n_basis {
            return Err(Error::structural("local fields differ in shape"));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| [alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1]])
            .collect();
        Ok(LocalField { coeffs, ..*self })
    }

    fn check_bank(&self, bank: &FrequencyBank) -> Result<()> {
        if self.n_basis != bank.len() {
            return Err(Error::structural(format!(
                "field has {} basis functions, bank has {}",
                self.n_basis,
                bank.len()
            )));
        }
        Ok(())
    }
}

/// Evaluates one voxel's expansion at local offset `u` through `psf`.
///
/// Terms are accumulated in bank order, one pass, in `f64`.
pub fn eval_local(field: &LocalField, bank: &FrequencyBank, u: [f64; 3], psf: &PsfSpec) -> Result<Vec<f64>> {
    field.check_bank(bank)?;
    let atten = bank.attenuations(psf);
    let mut out = vec![0.0; field.channels];
    let n = field.n_basis;
    for (i, (&w, &xi)) in bank.omegas.iter().zip(&atten).enumerate() {
        let (s, c) = dot3(w, u).sin_cos();
        for (ch, acc) in out.iter_mut().enumerate() {
            let [cc, dd] = field.coeffs[ch * n + i];
            *acc += xi * (cc * s + dd * c);
        }
    }
    Ok(out)
}

/// Voxel index `[t, y, x]`.
pub type VoxelIndex = [usize; 3];

/// A continuous position in input-sample units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Coordinate {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn as_xyt(&self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }
}

/// Maps `p` to its owning voxel and the offset from that voxel's centre.
///
/// The voxel index along each axis is `floor(p + 0.5)`, clamped so that the
/// upper domain edge belongs to the last voxel (where the offset is `+0.5`).
pub fn locate(dims: [usize; 3], p: Coordinate) -> Result<(VoxelIndex, [f64; 3])> {
    let [t_n, h_n, w_n] = dims;
    let xyt = p.as_xyt();
    let extents = [w_n, h_n, t_n];
    let mut j = [0usize; 3];
    let mut u = [0.0; 3];
    for axis in 0..3 {
        let v = xyt[axis];
        let n = extents[axis];
        if n == 0 || !v.is_finite() || v < -0.5 || v > n as f64 - 0.5 {
            return Err(Error::Domain { x: p.x, y: p.y, t: p.t, dims });
        }
        let idx = ((v + 0.5).floor() as usize).min(n - 1);
        j[axis] = idx;
        u[axis] = v - idx as f64;
    }
    Ok(([j[2], j[1], j[0]], u))
}

/// The full voxel grid: dims `[T, H, W]`, `C` channels, one bank, and a dense
/// `T x H x W x C x N x 2` coefficient tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<S: Real = f32> {
    dims: [usize; 3],
    channels: usize,
    bank: FrequencyBank,
    coeffs: Vec<S>,
}

impl<S: Real> FieldGrid<S> {
    pub fn zeros(dims: [usize; 3], channels: usize, bank: FrequencyBank) -> Self {
        let len = dims.iter().product::<usize>() * channels * bank.len() * 2;
        Self { dims, channels, bank, coeffs: vec![S::default(); len] }
    }

    pub fn from_coeffs(dims: [usize; 3], channels: usize, bank: FrequencyBank, coeffs: Vec<S>) -> Result<Self> {
        let len = dims.iter().product::<usize>() * channels * bank.len() * 2;
        if coeffs.len() != len {
            return Err(Error::structural(format!(
                "coefficient tensor has {} values, expected {len} for dims {dims:?}, {channels} channels, {} basis",
                coeffs.len(),
                bank.len()
            )));
        }
        if coeffs.iter().any(|v| !v.to_f64().is_finite()) {
            return Err(Error::structural("non-finite coefficient"));
        }
        Ok(Self { dims, channels, bank, coeffs })
    }

    /// Every voxel holds a copy of `field`.
    pub fn uniform(dims: [usize; 3], bank: FrequencyBank, field: &LocalField) -> Result<Self> {
        field.check_bank(&bank)?;
        let mut grid = Self::zeros(dims, field.channels, bank);
        let block = grid.voxel_len();
        let flat: Vec<S> = field.coeffs.iter().flat_map(|p| [S::from_f64(p[0]), S::from_f64(p[1])]).collect();
        for chunk in grid.coeffs.chunks_mut(block) {
            chunk.copy_from_slice(&flat);
        }
        Ok(grid)
    }

    /// Builds a grid voxel by voxel from `f([t, y, x])`.
    pub fn from_fn(
        dims: [usize; 3],
        channels: usize,
        bank: FrequencyBank,
        mut f: impl FnMut(VoxelIndex) -> LocalField,
    ) -> Result<Self> {
        let mut grid = Self::zeros(dims, channels, bank);
        for t in 0..dims[0] {
            for y in 0..dims[1] {
                for x in 0..dims[2] {
                    let field = f([t, y, x]);
                    grid.set_voxel([t, y, x], &field)?;
                }
            }
        }
        Ok(grid)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_basis(&self) -> usize {
        self.bank.len()
    }

    pub fn bank(&self) -> &FrequencyBank {
        &self.bank
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [S] {
        &mut self.coeffs
    }

    pub fn into_parts(self) -> ([usize; 3], usize, FrequencyBank, Vec<S>) {
        (self.dims, self.channels, self.bank, self.coeffs)
    }

    pub fn n_voxels(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of stored values per voxel (`C * N * 2`).
    pub fn voxel_len(&self) -> usize {
        self.channels * self.bank.len() * 2
    }

    #[inline]
    pub fn voxel_offset(&self, j: VoxelIndex) -> usize {
        ((j[0] * self.dims[1] + j[1]) * self.dims[2] + j[2]) * self.voxel_len()
    }

    pub fn voxel_slice(&self, j: VoxelIndex) -> &[S] {
        let o = self.voxel_offset(j);
        &self.coeffs[o..o + self.voxel_len()]
    }

    pub fn voxel(&self, j: VoxelIndex) -> LocalField {
        let coeffs = self.voxel_slice(j).chunks_exact(2).map(|p| [p[0].to_f64(), p[1].to_f64()]).collect();
        LocalField { channels: self.channels, n_basis: self.bank.len(), coeffs }
    }

    pub fn set_voxel(&mut self, j: VoxelIndex, field: &LocalField) -> Result<()> {
        if field.channels != self.channels {
            return Err(Error::structural(format!(
                "field has {} channels, grid has {}",
                field.channels, self.channels
            )));
        }
        field.check_bank(&self.bank)?;
        let o = self.voxel_offset(j);
        let len = self.voxel_len();
        for (dst, src) in self.coeffs[o..o + len].chunks_exact_mut(2).zip(&field.coeffs) {
            dst[0] = S::from_f64(src[0]);
            dst[1] = S::from_f64(src[1]);
        }
        Ok(())
    }

    /// Converts the coefficient storage precision.
    pub fn cast<R: Real>(&self) -> FieldGrid<R> {
        FieldGrid {
            dims: self.dims,
            channels: self.channels,
            bank: self.bank.clone(),
            coeffs: self.coeffs.iter().map(|v| R::from_f64(v.to_f64())).collect(),
        }
    }

    /// Evaluates voxel `j` at offset `u` using precomputed attenuations.
    #[inline]
    pub(crate) fn eval_voxel_into(&self, j: VoxelIndex, u: [f64; 3], atten: &[f64], out: &mut [f64]) {
        let block = self.voxel_slice(j);
        let n = self.bank.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, (&w, &xi)) in self.bank.omegas.iter().zip(atten).enumerate() {
            let (s, c) = dot3(w, u).sin_cos();
            for (ch, acc) in out.iter_mut().enumerate() {
                let k = (ch * n + i) * 2;
                *acc += xi * (block[k].to_f64() * s + block[k + 1].to_f64() * c);
            }
        }
    }
}

/// Evaluates the grid at `p`: the expansion of the voxel that owns `p`,
/// with no blending across voxel faces.
pub fn eval_grid_point<S: Real>(grid: &FieldGrid<S>, p: Coordinate, psf: &PsfSpec) -> Result<Vec<f64>> {
    let (j, u) = locate(grid.dims, p)?;
    let atten = grid.bank.attenuations(psf);
    let mut out = vec![0.0; grid.channels];
    grid.eval_voxel_into(j, u, &atten, &mut out);
    Ok(out)
}

/// Like [`eval_grid_point`], but linearly cross-fades into the neighbouring
/// voxel within `margin` of a voxel face (`0 < margin <= 0.5`). Exactly at a
/// face both voxels weigh one half.
pub fn eval_grid_point_blended<S: Real>(
    grid: &FieldGrid<S>,
    p: Coordinate,
    psf: &PsfSpec,
    margin: f64,
) -> Result<Vec<f64>> {
    if !(margin > 0.0 && margin <= 0.5) {
        return Err(Error::config(format!("cross-fade margin must be in (0, 0.5], got {margin}")));
    }
    let (j, u) = locate(grid.dims, p)?;
    let atten = grid.bank.attenuations(psf);
    // [x, y, t] extents
    let extents = [grid.dims[2], grid.dims[1], grid.dims[0]];
    let jx = [j[2], j[1], j[0]];

    // Per axis: (own weight, neighbour step) where the neighbour weighs 1 - own.
    let mut axes = [(1.0, 0isize); 3];
    for a in 0..3 {
        let dist = u[a].abs();
        let inner = 0.5 - margin;
        if dist > inner {
            let step = if u[a] >= 0.0 { 1 } else { -1 };
            let nb = jx[a] as isize + step;
            if nb >= 0 && (nb as usize) < extents[a] {
                let w_nb = 0.5 * (dist - inner) / margin;
                axes[a] = (1.0 - w_nb, step);
            }
        }
    }

    let mut out = vec![0.0; grid.channels];
    let mut tmp = vec![0.0; grid.channels];
    for corner in 0..8u32 {
        let mut weight = 1.0;
        let mut idx = jx;
        let mut off = u;
        let mut skip = false;
        for a in 0..3 {
            let (own, step) = axes[a];
            if corner & (1 << a) != 0 {
                if step == 0 {
                    skip = true;
                    break;
                }
                weight *= 1.0 - own;
                idx[a] = (idx[a] as isize + step) as usize;
                off[a] -= step as f64;
            } else {
                weight *= own;
            }
        }
        if skip || weight == 0.0 {
            continue;
        }
        grid.eval_voxel_into([idx[2], idx[1], idx[0]], off, &atten, &mut tmp);
        for (o, v) in out.iter_mut().zip(&tmp) {
            *o += weight * v;
        }
    }
    Ok(out)
}
