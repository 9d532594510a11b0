use super::bank::to_f32_lattice;
use super::{fit_video, FitConfig};
use crate::error::{Error, Result};
use crate::field::{FieldGrid, FrequencyBank, PsfSpec};
use crate::sample::{sample_grid, SampleSpec};
use crate::video::VideoBuffer;

#[derive(Debug, Clone, PartialEq)]
pub struct RefineConfig {
    /// Descent iterations; 0 disables refinement.
    pub iterations: usize,
    /// Initial step length in rad/sample along the normalised gradient.
    pub step_size: f64,
    /// Central-difference half width in rad/sample.
    pub fd_epsilon: f64,
    /// Fraction of the corpus held out for model selection.
    pub holdout_fraction: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { iterations: 20, step_size: 0.1, fd_epsilon: 1e-3, holdout_fraction: 0.25 }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::config(format!("step size must be >= 0, got {}", self.step_size)));
        }
        if !(self.fd_epsilon.is_finite() && self.fd_epsilon > 0.0) {
            return Err(Error::config(format!("fd epsilon must be positive, got {}", self.fd_epsilon)));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::config(format!("holdout fraction must be in [0, 1), got {}", self.holdout_fraction)));
        }
        Ok(())
    }
}

/// Mean squared error of fit-then-identity-sample, averaged over clips.
pub fn reconstruction_error(corpus: &[VideoBuffer], bank: &FrequencyBank, fit_cfg: &FitConfig) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::config("reconstruction error needs a nonempty corpus"));
    }
    let mut total = 0.0;
    for clip in corpus {
        let grid: FieldGrid<f64> = fit_video(clip, bank, fit_cfg)?;
        let recon = sample_grid(&grid, &SampleSpec::identity(clip.dims()), &PsfSpec::point())?;
        let mse = recon.data().iter().zip(clip.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            / clip.data().len() as f64;
        total += mse;
    }
    Ok(total / corpus.len() as f64)
}

/// Improvements smaller than this (relative, plus an absolute floor far
/// below any meaningful error) are treated as rounding noise.
const MIN_GAIN_REL: f64 = 1e-9;
const MIN_GAIN_ABS: f64 = 1e-20;

fn improves(new: f64, old: f64) -> bool {
    new < old - (MIN_GAIN_REL * old + MIN_GAIN_ABS)
}

fn with_component(bank: &FrequencyBank, i: usize, axis: usize, value: f64) -> Option<FrequencyBank> {
    let mut omegas = bank.omegas().to_vec();
    omegas[i][axis] = value;
    FrequencyBank::new(omegas, bank.dc_index()).ok()
}

/// Refines the shared frequencies by finite-difference descent on the
/// training clips' reconstruction error. The dc entry never moves. Returns
/// the bank with the lowest holdout error seen, which is the input bank
/// unless some accepted step strictly improved on it.
pub fn refine_bank(
    corpus: &[VideoBuffer],
    bank: &FrequencyBank,
    fit_cfg: &FitConfig,
    cfg: &RefineConfig,
) -> Result<FrequencyBank> {
    if corpus.is_empty() {
        return Err(Error::config("refinement corpus is empty"));
    }
    cfg.validate()?;
    fit_cfg.validate()?;
    if cfg.iterations == 0 {
        return Ok(bank.clone());
    }

    let n_hold = if corpus.len() < 2 {
        0
    } else {
        ((corpus.len() as f64 * cfg.holdout_fraction).ceil() as usize).clamp(1, corpus.len() - 1)
    };
    let (train, holdout) = corpus.split_at(corpus.len() - n_hold);
    // a single clip serves as both sets
    let holdout = if holdout.is_empty() { train } else { holdout };
    let shared = n_hold == 0;

    let params: Vec<(usize, usize)> =
        (0..bank.len()).filter(|&i| i != bank.dc_index()).flat_map(|i| (0..3).map(move |a| (i, a))).collect();

    let mut current = bank.clone();
    let mut current_train = reconstruction_error(train, &current, fit_cfg)?;
    let mut best = current.clone();
    let mut best_hold = if shared { current_train } else { reconstruction_error(holdout, &current, fit_cfg)? };
    let mut step = cfg.step_size;
    let eps = cfg.fd_epsilon;

    for _ in 0..cfg.iterations {
        let mut grad = vec![0.0; params.len()];
        for (g, &(i, a)) in grad.iter_mut().zip(&params) {
            let w = current.omega(i)[a];
            let (Some(plus), Some(minus)) =
                (with_component(&current, i, a, w + eps), with_component(&current, i, a, w - eps))
            else {
                continue;
            };
            let lp = reconstruction_error(train, &plus, fit_cfg)?;
            let lm = reconstruction_error(train, &minus, fit_cfg)?;
            *g = (lp - lm) / (2.0 * eps);
        }
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() || step == 0.0 {
            break;
        }

        let mut omegas = current.omegas().to_vec();
        for (g, &(i, a)) in grad.iter().zip(&params) {
            omegas[i][a] = to_f32_lattice(omegas[i][a] - step * g / norm);
        }
        let Ok(candidate) = FrequencyBank::new(omegas, current.dc_index()) else {
            step *= 0.5;
            continue;
        };
        let loss = reconstruction_error(train, &candidate, fit_cfg)?;
        if improves(loss, current_train) {
            current = candidate;
            current_train = loss;
            step *= 1.5;
            let hold = if shared { loss } else { reconstruction_error(holdout, &current, fit_cfg)? };
            if improves(hold, best_hold) {
                best_hold = hold;
                best = current.clone();
            }
        } else {
            step *= 0.5;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::BorderMode;

    fn sinusoid_clip(w: [f64; 3], phase: f64, dims: [usize; 3]) -> VideoBuffer {
        VideoBuffer::from_fn(dims, 1, |t, y, x, _| {
            0.5 + 0.3 * (w[0] * x as f64 + w[1] * y as f64 + w[2] * t as f64 + phase).sin()
        })
    }

    fn fit_cfg() -> FitConfig {
        FitConfig {
            window: [3, 5, 5],
            ridge_lambda: 1e-4,
            sample_weight_sigma: None,
            border_mode: BorderMode::Truncate,
        }
    }

    #[test]
    fn empty_corpus_is_config_error() {
        let bank = FrequencyBank::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], 0).unwrap();
        assert!(matches!(refine_bank(&[], &bank, &fit_cfg(), &RefineConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn constant_corpus_keeps_initial_bank() {
        let bank = FrequencyBank::new(vec![[0.0; 3], [0.7, 0.2, 0.1], [1.5, -1.0, 0.4]], 0).unwrap();
        let corpus = vec![VideoBuffer::filled(3, 6, 6, 1, 0.4); 2];
        let cfg = RefineConfig { iterations: 3, ..Default::default() };
        assert_eq!(refine_bank(&corpus, &bank, &fit_cfg(), &cfg).unwrap(), bank);
    }

    #[test]
    fn recovers_missing_frequency() {
        let target = [1.0, 0.4, 0.3];
        let corpus: Vec<VideoBuffer> = [0.0, 1.1, 2.3].iter().map(|&p| sinusoid_clip(target, p, [4, 10, 10])).collect();
        let bank = FrequencyBank::new(vec![[0.0; 3], [0.75, 0.6, 0.15], [2.0, -1.5, 1.0]], 0).unwrap();
        let cfg = RefineConfig { iterations: 25, holdout_fraction: 0.34, ..Default::default() };
        let before = reconstruction_error(&corpus[2..], &bank, &fit_cfg()).unwrap();
        let refined = refine_bank(&corpus, &bank, &fit_cfg(), &cfg).unwrap();
        let after = reconstruction_error(&corpus[2..], &refined, &fit_cfg()).unwrap();
        assert_eq!(refined.omega(0), [0.0; 3]);
        assert_eq!(refined.dc_index(), 0);
        assert!(after <= 0.8 * before, "holdout error {before} -> {after}");
    }
}
