//! Evaluation reports.

use serde_json::{json, Value};
use vff::pipeline::{FrameKind, FrameScores, MetricReport};

pub const EVAL_SCHEMA: &str = "vff-eval/1";

/// JSON numbers cannot be infinite; perfect reconstructions are `"inf"`.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn kind_name(k: FrameKind) -> &'static str {
    match k {
        FrameKind::Keyframe => "keyframe",
        FrameKind::Interpolated => "interpolated",
    }
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, num)
}

fn frame_count(report: &MetricReport) -> usize {
    report.psnr.as_ref().or(report.ssim.as_ref()).map_or(0, |s| s.per_frame.len())
}

/// Machine-readable report: one record per frame plus a summary.
pub fn eval_json(report: &MetricReport, on_luma: bool) -> Value {
    let frames: Vec<Value> = (0..frame_count(report))
        .map(|i| {
            let mut rec = json!({ "frame": i });
            if let Some(k) = &report.frame_kinds {
                rec["kind"] = json!(kind_name(k[i]));
            }
            if let Some(p) = &report.psnr {
                rec["psnr_db"] = num(p.per_frame[i]);
            }
            if let Some(s) = &report.ssim {
                rec["ssim"] = num(s.per_frame[i]);
            }
            rec
        })
        .collect();
    let mut summary = json!({ "frames": frames.len(), "psnr_on_luma": on_luma });
    let mut add = |name: &str, scores: &Option<FrameScores>| {
        if let Some(s) = scores {
            summary[format!("{name}_mean")] = num(s.mean);
            if report.frame_kinds.is_some() {
                summary[format!("{name}_keyframes")] = opt(report.split_mean(s, FrameKind::Keyframe));
                summary[format!("{name}_interpolated")] = opt(report.split_mean(s, FrameKind::Interpolated));
            }
        }
    };
    add("psnr_db", &report.psnr);
    add("ssim", &report.ssim);
    json!({ "schema": EVAL_SCHEMA, "frames": frames, "summary": summary })
}

fn fmt(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

pub fn eval_text(report: &MetricReport) -> String {
    let mut out = String::new();
    for i in 0..frame_count(report) {
        out += &format!("frame {i:>4}");
        if let Some(k) = &report.frame_kinds {
            out += &format!("  {:<12}", kind_name(k[i]));
        }
        if let Some(p) = &report.psnr {
            out += &format!("  psnr {:>9} dB", fmt(p.per_frame[i]));
        }
        if let Some(s) = &report.ssim {
            out += &format!("  ssim {:>7}", fmt(s.per_frame[i]));
        }
        out.push('\n');
    }
    let mut line = |name: &str, unit: &str, s: &FrameScores| {
        out += &format!("{name} mean {}{unit}", fmt(s.mean));
        if report.frame_kinds.is_some() {
            let k = report.split_mean(s, FrameKind::Keyframe).map_or("n/a".into(), fmt);
            let i = report.split_mean(s, FrameKind::Interpolated).map_or("n/a".into(), fmt);
            out += &format!("  (keyframes {k}, interpolated {i})");
        }
        out.push('\n');
    };
    if let Some(p) = &report.psnr {
        line("psnr", " dB", p);
    }
    if let Some(s) = &report.ssim {
        line("ssim", "", s);
    }
    out
}
