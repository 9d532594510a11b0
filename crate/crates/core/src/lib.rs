//! Video Fourier Fields.
//!
//! A video is represented as a `T x H x W` grid of voxels, one per input
//! sample, each holding a local expansion
//!
//! ```text
//! f(u) = sum_i xi(w_i, sigma) * (c_i sin(w_i . u) + d_i cos(w_i . u))
//! ```
//!
//! over a frequency bank `w_i` shared by the whole grid. `u` is the offset
//! from the voxel centre in input samples and `xi` is the closed-form response
//! of a Gaussian point spread function, so rendering at any rate with any
//! amount of anti-aliasing is a matter of evaluating sinusoids.
//!
//! - [`field`]: the representation, point evaluation and phase-shift
//!   translation.
//! - [`sample`]: rendering onto regular output lattices.
//! - [`fit`]: per-voxel ridge least-squares estimation and bank construction.
//! - [`pipeline`]: degradation, end-to-end super-resolution and metrics.
//! - [`io`]: PNG sequences, Y4M streams and the `VFF1` field container.

pub mod error;
pub mod field;
pub mod fit;
pub mod io;
pub mod pipeline;
pub mod sample;
pub mod video;

pub use error::{Error, Result};
pub use field::{
    coeff_to_amp_phase, eval_grid_point, eval_local, locate, phase_shift, psf_attenuation, translate_grid, Coordinate,
    FieldGrid, FrequencyBank, LocalField, PsfSpec, Real,
};
pub use fit::{design_matrix, fit_video, fit_voxel, init_bank, refine_bank, BankInitConfig, FitConfig};
pub use pipeline::{auto_psf, stvsr, PsfPolicy};
pub use sample::{sample_grid, sample_grid_naive, SampleSpec};
pub use video::VideoBuffer;
