//! Python bindings. Videos cross the boundary as float64 arrays shaped
//! `(T, H, W, C)` with values in `[0, 1]`.

use std::path::PathBuf;

use numpy::{PyArray1, PyArrayDyn, PyArrayMethods, PyReadonlyArrayDyn, PyUntypedArrayMethods};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use vff::fit::{BankStrategy, BorderMode};
use vff::io::{self, BitDepth, FrameRate};
use vff::pipeline::{self, PsfPolicy};

fn err(e: vff::Error) -> PyErr {
    match e {
        vff::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_video(a: &PyReadonlyArrayDyn<'_, f64>) -> PyResult<vff::VideoBuffer> {
    let shape = a.shape();
    let (dims, c) = match *shape {
        [t, h, w] => ([t, h, w], 1),
        [t, h, w, c] => ([t, h, w], c),
        _ => return Err(PyValueError::new_err(format!("expected a (T, H, W[, C]) array, got shape {shape:?}"))),
    };
    let data = a.as_array().iter().copied().collect();
    vff::VideoBuffer::from_data(dims, c, data).map_err(err)
}

fn array<'py>(py: Python<'py>, data: Vec<f64>, shape: &[usize]) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    PyArray1::from_vec(py, data).reshape(shape.to_vec())
}

fn from_video<'py>(py: Python<'py>, v: vff::VideoBuffer) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let [t, h, w] = v.dims();
    let c = v.channels();
    array(py, v.into_data(), &[t, h, w, c])
}

/// `None` or `"auto"`, `"point"`, a float (spatial sigma) or `(sx, sy, st)`.
fn psf_policy(psf: Option<&Bound<'_, PyAny>>, nu: f64) -> PyResult<PsfPolicy> {
    let Some(psf) = psf else { return Ok(PsfPolicy::Auto { nu }) };
    if let Ok(s) = psf.extract::<String>() {
        return match s.as_str() {
            "auto" => Ok(PsfPolicy::Auto { nu }),
            "point" => Ok(PsfPolicy::Manual(vff::PsfSpec::point())),
            other => Err(PyValueError::new_err(format!("unknown psf {other:?}"))),
        };
    }
    if let Ok(s) = psf.extract::<f64>() {
        return vff::PsfSpec::spatial(s).map(PsfPolicy::Manual).map_err(err);
    }
    let [sx, sy, st]: [f64; 3] = psf.extract()?;
    vff::PsfSpec::new(sx, sy, st).map(PsfPolicy::Manual).map_err(err)
}

fn fit_config(window: [usize; 3], ridge: f64, weight_sigma: Option<f64>, border: &str) -> PyResult<vff::FitConfig> {
    Ok(vff::FitConfig {
        window,
        ridge_lambda: ridge,
        sample_weight_sigma: weight_sigma,
        border_mode: border.parse::<BorderMode>().map_err(err)?,
    })
}

/// Angular frequencies `[wx, wy, wt]` (rad/sample) shared by every voxel.
#[pyclass(name = "FrequencyBank", module = "vff", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyBank(vff::FrequencyBank);

#[pymethods]
impl PyBank {
    #[new]
    #[pyo3(signature = (omegas, dc_index = 0))]
    fn new(omegas: Vec<[f64; 3]>, dc_index: usize) -> PyResult<Self> {
        vff::FrequencyBank::new(omegas, dc_index).map(Self).map_err(err)
    }

    /// A bank of `n_basis` frequencies with the DC term first.
    #[staticmethod]
    #[pyo3(signature = (n_basis = 512, omega_max = None, strategy = "stratified-random", seed = 0))]
    fn init(n_basis: usize, omega_max: Option<[f64; 3]>, strategy: &str, seed: u64) -> PyResult<Self> {
        let mut cfg = vff::BankInitConfig { n_basis, seed, ..Default::default() };
        if let Some(w) = omega_max {
            cfg.omega_max = w;
        }
        cfg.strategy = strategy.parse::<BankStrategy>().map_err(err)?;
        vff::init_bank(&cfg).map(Self).map_err(err)
    }

    #[getter]
    fn omegas<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
        let flat = self.0.omegas().iter().flatten().copied().collect();
        array(py, flat, &[self.0.len(), 3])
    }

    #[getter]
    fn dc_index(&self) -> usize {
        self.0.dc_index()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("FrequencyBank(n_basis={})", self.0.len())
    }
}

/// Per-voxel local Fourier fields over a `(T, H, W)` grid.
#[pyclass(name = "FieldGrid", module = "vff", frozen)]
pub struct PyGrid(vff::FieldGrid<f64>);

#[pymethods]
impl PyGrid {
    /// Builds a grid from coefficients shaped `(T, H, W, C, N, 2)`.
    #[new]
    fn new(coeffs: PyReadonlyArrayDyn<'_, f64>, bank: &PyBank) -> PyResult<Self> {
        let [t, h, w, c, n, 2] = *coeffs.shape() else {
            return Err(PyValueError::new_err("coefficients must be shaped (T, H, W, C, N, 2)"));
        };
        if n != bank.0.len() {
            return Err(PyValueError::new_err(format!("{n} coefficient pairs for a bank of {}", bank.0.len())));
        }
        let data = coeffs.as_array().iter().copied().collect();
        vff::FieldGrid::from_coeffs([t, h, w], c, bank.0.clone(), data).map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        io::load_field(&path).map(|g| Self(g.cast())).map_err(err)
    }

    /// Writes the grid as a float32 field file.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_field(&self.0.cast::<f32>(), &path).map_err(err)
    }

    #[getter]
    fn dims(&self) -> [usize; 3] {
        self.0.dims()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    #[getter]
    fn n_basis(&self) -> usize {
        self.0.n_basis()
    }

    #[getter]
    fn bank(&self) -> PyBank {
        PyBank(self.0.bank().clone())
    }

    #[getter]
    fn coeffs<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
        let [t, h, w] = self.0.dims();
        array(py, self.0.coeffs().to_vec(), &[t, h, w, self.0.channels(), self.0.n_basis(), 2])
    }

    /// Renders the grid at `sscale` x space and `tscale` x time.
    #[pyo3(signature = (sscale = 1.0, tscale = 1.0, psf = None, nu = pipeline::DEFAULT_NU))]
    fn sample<'py>(
        &self,
        py: Python<'py>,
        sscale: f64,
        tscale: f64,
        psf: Option<&Bound<'py, PyAny>>,
        nu: f64,
    ) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
        let psf = psf_policy(psf, nu)?.resolve(sscale, tscale).map_err(err)?;
        let spec = vff::SampleSpec::new(self.0.dims(), sscale, tscale).map_err(err)?;
        let v = py.detach(|| vff::sample_grid(&self.0, &spec, &psf)).map_err(err)?;
        from_video(py, v)
    }

    /// Evaluates at one continuous point; point sampling unless `psf` is given.
    #[pyo3(signature = (x, y, t, psf = None))]
    fn eval(&self, x: f64, y: f64, t: f64, psf: Option<&Bound<'_, PyAny>>) -> PyResult<Vec<f64>> {
        let psf = match psf {
            None => vff::PsfSpec::point(),
            Some(p) => psf_policy(Some(p), pipeline::DEFAULT_NU)?.resolve(1.0, 1.0).map_err(err)?,
        };
        vff::eval_grid_point(&self.0, vff::Coordinate::new(x, y, t), &psf).map_err(err)
    }

    /// Shifts the content by `(dx, dy, dt)` samples.
    fn translate(&self, dx: f64, dy: f64, dt: f64) -> PyResult<Self> {
        vff::translate_grid(&self.0, [dx, dy, dt]).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        let [t, h, w] = self.0.dims();
        format!("FieldGrid(dims=({t}, {h}, {w}), channels={}, n_basis={})", self.0.channels(), self.0.n_basis())
    }
}

/// Fits one local field per voxel of `video`.
#[pyfunction]
#[pyo3(signature = (video, bank, window = [5, 9, 9], ridge = 1e-3, weight_sigma = Some(3.0), border = "clamp"))]
fn fit(
    py: Python<'_>,
    video: PyReadonlyArrayDyn<'_, f64>,
    bank: &PyBank,
    window: [usize; 3],
    ridge: f64,
    weight_sigma: Option<f64>,
    border: &str,
) -> PyResult<PyGrid> {
    let v = to_video(&video)?;
    let cfg = fit_config(window, ridge, weight_sigma, border)?;
    py.detach(|| vff::fit_video(&v, &bank.0, &cfg)).map(PyGrid).map_err(err)
}

/// Fits a low-resolution clip and renders it `sscale` x larger and `tscale` x longer.
#[pyfunction]
#[pyo3(signature = (
    video, bank, sscale, tscale, psf = None, nu = pipeline::DEFAULT_NU,
    window = [5, 9, 9], ridge = 1e-3, weight_sigma = Some(3.0), border = "clamp",
))]
#[allow(clippy::too_many_arguments)]
fn stvsr<'py>(
    py: Python<'py>,
    video: PyReadonlyArrayDyn<'py, f64>,
    bank: &PyBank,
    sscale: f64,
    tscale: f64,
    psf: Option<&Bound<'py, PyAny>>,
    nu: f64,
    window: [usize; 3],
    ridge: f64,
    weight_sigma: Option<f64>,
    border: &str,
) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let v = to_video(&video)?;
    let cfg = fit_config(window, ridge, weight_sigma, border)?;
    let policy = psf_policy(psf, nu)?;
    let out = py.detach(|| pipeline::stvsr(&v, sscale, tscale, &bank.0, &cfg, &policy)).map_err(err)?;
    from_video(py, out)
}

/// Bicubic spatial downsampling by `sscale` and temporal subsampling by `tscale`.
#[pyfunction]
fn degrade<'py>(
    py: Python<'py>,
    video: PyReadonlyArrayDyn<'py, f64>,
    sscale: f64,
    tscale: f64,
) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let v = to_video(&video)?;
    from_video(py, pipeline::degrade(&v, sscale, tscale).map_err(err)?)
}

#[pyfunction]
fn trilinear<'py>(
    py: Python<'py>,
    video: PyReadonlyArrayDyn<'py, f64>,
    sscale: f64,
    tscale: f64,
) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let v = to_video(&video)?;
    from_video(py, pipeline::trilinear_upsample(&v, sscale, tscale).map_err(err)?)
}

/// Gain applied to a basis of frequency `omega` under a Gaussian PSF.
#[pyfunction]
#[pyo3(signature = (omega, sigma = None))]
fn psf_attenuation(omega: [f64; 3], sigma: Option<[f64; 3]>) -> PyResult<f64> {
    let psf = match sigma {
        None => vff::PsfSpec::point(),
        Some([sx, sy, st]) => vff::PsfSpec::new(sx, sy, st).map_err(err)?,
    };
    Ok(vff::psf_attenuation(omega, &psf))
}

/// Re-expresses coefficients shaped `(C, N, 2)` about a centre moved by `delta`.
#[pyfunction]
fn phase_shift<'py>(
    py: Python<'py>,
    coeffs: PyReadonlyArrayDyn<'py, f64>,
    bank: &PyBank,
    delta: [f64; 3],
) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let [c, n, 2] = *coeffs.shape() else {
        return Err(PyValueError::new_err("coefficients must be shaped (C, N, 2)"));
    };
    let flat: Vec<f64> = coeffs.as_array().iter().copied().collect();
    let pairs = flat.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    let field = vff::LocalField::from_pairs(c, n, pairs).map_err(err)?;
    let out = vff::phase_shift(&field, &bank.0, delta).map_err(err)?;
    array(py, out.pairs().iter().flatten().copied().collect(), &[c, n, 2])
}

/// Returns `(mean, per_frame)`; identical inputs score `inf`.
#[pyfunction]
#[pyo3(signature = (pred, reference, luma = false))]
fn psnr(
    pred: PyReadonlyArrayDyn<'_, f64>,
    reference: PyReadonlyArrayDyn<'_, f64>,
    luma: bool,
) -> PyResult<(f64, Vec<f64>)> {
    let s = pipeline::psnr(&to_video(&pred)?, &to_video(&reference)?, luma).map_err(err)?;
    Ok((s.mean, s.per_frame))
}

/// Returns `(mean, per_frame)`.
#[pyfunction]
fn ssim(pred: PyReadonlyArrayDyn<'_, f64>, reference: PyReadonlyArrayDyn<'_, f64>) -> PyResult<(f64, Vec<f64>)> {
    let s = pipeline::ssim(&to_video(&pred)?, &to_video(&reference)?).map_err(err)?;
    Ok((s.mean, s.per_frame))
}

fn is_y4m(path: &std::path::Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m"))
}

/// Reads a `.y4m` file or a directory of PNG frames.
#[pyfunction]
#[pyo3(signature = (path, pattern = io::DEFAULT_PATTERN))]
fn read_video<'py>(py: Python<'py>, path: PathBuf, pattern: &str) -> PyResult<Bound<'py, PyArrayDyn<f64>>> {
    let v = if is_y4m(&path) { io::read_y4m(&path) } else { io::read_png_sequence(&path, pattern) };
    from_video(py, v.map_err(err)?)
}

/// Writes a `.y4m` file or a directory of PNG frames.
#[pyfunction]
#[pyo3(signature = (video, path, bit_depth = 8, fps = (30, 1)))]
fn write_video(video: PyReadonlyArrayDyn<'_, f64>, path: PathBuf, bit_depth: u32, fps: (u32, u32)) -> PyResult<()> {
    let v = to_video(&video)?;
    if is_y4m(&path) {
        io::write_y4m(&v, &path, FrameRate::new(fps.0, fps.1).map_err(err)?).map_err(err)
    } else {
        io::write_png_sequence(&v, &path, BitDepth::try_from(bit_depth).map_err(err)?).map_err(err)
    }
}

#[pymodule]
#[pyo3(name = "vff")]
fn vff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBank>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(stvsr, m)?)?;
    m.add_function(wrap_pyfunction!(degrade, m)?)?;
    m.add_function(wrap_pyfunction!(trilinear, m)?)?;
    m.add_function(wrap_pyfunction!(psf_attenuation, m)?)?;
    m.add_function(wrap_pyfunction!(phase_shift, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(read_video, m)?)?;
    m.add_function(wrap_pyfunction!(write_video, m)?)?;
    m.add("DEFAULT_NU", pipeline::DEFAULT_NU)?;
    Ok(())
}
