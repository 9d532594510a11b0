//! Dense float video shared by the pipeline, I/O and metrics.

use crate::error::{Error, Result};

/// A `T x H x W x C` video of `f64` samples, frame-major then row-major,
/// channels interleaved.
///
/// Values produced by readers and by the super-resolution pipeline are in
/// `[0, 1]`. Raw field renders (`sample_grid`) may leave that range; use
/// [`VideoBuffer::clamp01`] before handing them to an encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoBuffer {
    dims: [usize; 3],
    channels: usize,
    data: Vec<f64>,
}

impl VideoBuffer {
    pub fn zeros(frames: usize, height: usize, width: usize, channels: usize) -> Self {
        Self { dims: [frames, height, width], channels, data: vec![0.0; frames * height * width * channels] }
    }

    pub fn filled(frames: usize, height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self { dims: [frames, height, width], channels, data: vec![value; frames * height * width * channels] }
    }

    pub fn from_data(dims: [usize; 3], channels: usize, data: Vec<f64>) -> Result<Self> {
        let expected = dims.iter().product::<usize>() * channels;
        if data.len() != expected {
            return Err(Error::structural(format!(
                "video data holds {} values, dims {dims:?} x {channels} channels need {expected}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::structural(format!("non-finite sample at flat index {bad}")));
        }
        Ok(Self { dims, channels, data })
    }

    /// Builds a video by evaluating `f(t, y, x, c)` at every sample.
    pub fn from_fn(dims: [usize; 3], channels: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let [t_n, h_n, w_n] = dims;
        let mut data = Vec::with_capacity(t_n * h_n * w_n * channels);
        for t in 0..t_n {
            for y in 0..h_n {
                for x in 0..w_n {
                    for c in 0..channels {
                        data.push(f(t, y, x, c));
                    }
                }
            }
        }
        Self { dims, channels, data }
    }

    /// `(T, H, W)`.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn frames(&self) -> usize {
        self.dims[0]
    }

    pub fn height(&self) -> usize {
        self.dims[1]
    }

    pub fn width(&self) -> usize {
        self.dims[2]
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn frame_len(&self) -> usize {
        self.dims[1] * self.dims[2] * self.channels
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.frame_len();
        &mut self.data[t * n..(t + 1) * n]
    }

    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize, c: usize) -> usize {
        ((t * self.dims[1] + y) * self.dims[2] + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(t, y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, y: usize, x: usize, c: usize, value: f64) {
        let i = self.index(t, y, x, c);
        self.data[i] = value;
    }

    pub fn clamp01(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }

    /// Copies the listed frames, in order, into a new buffer.
    pub fn select_frames(&self, frames: &[usize]) -> Self {
        let mut data = Vec::with_capacity(frames.len() * self.frame_len());
        for &t in frames {
            data.extend_from_slice(self.frame(t));
        }
        Self { dims: [frames.len(), self.dims[1], self.dims[2]], channels: self.channels, data }
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims || self.channels != other.channels {
            return Err(Error::structural(format!(
                "video shapes differ: {:?}x{} vs {:?}x{}",
                self.dims, self.channels, other.dims, other.channels
            )));
        }
        Ok(())
    }
}
