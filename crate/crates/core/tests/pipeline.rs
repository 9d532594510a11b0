use std::f64::consts::PI;

use vff::fit::{BankStrategy, BorderMode};
use vff::io::{load_field, save_field};
use vff::pipeline::{degrade, evaluate, psnr, trilinear_upsample, EvalOptions, FrameKind};
use vff::{
    fit_video, init_bank, sample_grid, stvsr, BankInitConfig, Error, FieldGrid, FitConfig, PsfPolicy, PsfSpec,
    SampleSpec, VideoBuffer,
};

fn wave(dims: [usize; 3]) -> VideoBuffer {
    VideoBuffer::from_fn(dims, 3, |t, y, x, c| {
        let phase = 2.0 * PI * ((x as f64 - t as f64) / 16.0 + y as f64 / 32.0) + c as f64;
        0.5 + 0.3 * phase.sin()
    })
}

fn small_bank() -> vff::FrequencyBank {
    init_bank(&BankInitConfig {
        n_basis: 48,
        omega_max: [PI / 2.0; 3],
        strategy: BankStrategy::StratifiedRandom,
        seed: 3,
    })
    .unwrap()
}

#[test]
fn constant_video_fits_exactly() {
    let video = VideoBuffer::filled(3, 8, 8, 3, 0.25);
    let grid: FieldGrid<f64> = fit_video(&video, &small_bank(), &FitConfig::default()).unwrap();
    let back = sample_grid(&grid, &SampleSpec::identity(video.dims()), &PsfSpec::point()).unwrap();
    assert!(back.data().iter().all(|v| (v - 0.25).abs() < 1e-3));
}

#[test]
fn stvsr_shapes_and_beats_trilinear() {
    let gt = wave([8, 32, 32]);
    let lr = degrade(&gt, 2.0, 2.0).unwrap();
    assert_eq!(lr.dims(), [4, 16, 16]);
    let cfg = FitConfig {
        ridge_lambda: 1e-6,
        sample_weight_sigma: None,
        border_mode: BorderMode::Truncate,
        ..Default::default()
    };
    let ours = stvsr(&lr, 2.0, 2.0, &small_bank(), &cfg, &PsfPolicy::default()).unwrap();
    let base = trilinear_upsample(&lr, 2.0, 2.0).unwrap();
    assert_eq!(ours.dims(), gt.dims());
    assert!(ours.data().iter().all(|v| (0.0..=1.0).contains(v)));
    let a = psnr(&ours, &gt, true).unwrap().mean;
    let b = psnr(&base, &gt, true).unwrap().mean;
    assert!(a > b, "{a} <= {b}");
}

#[test]
fn saved_grid_resamples_identically() {
    let video = wave([2, 8, 8]);
    let grid: FieldGrid = fit_video(&video, &small_bank(), &FitConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clip.vff");
    save_field(&grid, &path).unwrap();
    let loaded = load_field(&path).unwrap();
    let spec = SampleSpec::new(grid.dims(), 2.0, 2.0).unwrap();
    let a = sample_grid(&grid, &spec, &PsfSpec::point()).unwrap();
    let b = sample_grid(&loaded, &spec, &PsfSpec::point()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn keyframe_split_report() {
    let gt = wave([5, 16, 16]);
    let mut pred = gt.clone();
    for t in [1, 3] {
        for v in pred.frame_mut(t) {
            *v = (*v + 0.05).min(1.0);
        }
    }
    let opts = EvalOptions { keyframe_interval: Some(2), ..Default::default() };
    let report = evaluate(&pred, &gt, &opts).unwrap();
    let p = report.psnr.as_ref().unwrap();
    assert_eq!(report.split_mean(p, FrameKind::Keyframe), Some(f64::INFINITY));
    assert!(report.split_mean(p, FrameKind::Interpolated).unwrap().is_finite());
}

#[test]
fn invalid_scales_are_config_errors() {
    let lr = VideoBuffer::filled(2, 4, 4, 3, 0.5);
    let r = stvsr(&lr, 0.5, 1.0, &small_bank(), &FitConfig::default(), &PsfPolicy::default());
    assert!(matches!(r, Err(Error::Config(_))));
    assert!(matches!(SampleSpec::new([2, 4, 4], 1.0, 0.0), Err(Error::Config(_))));
}
