//! CSV, SVG and metadata writers for sweep output.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use super::sweep::{AggregateRow, SweepResult};
use super::trial::TrialRow;
use crate::Result;

pub const RESULTS_HEADER: &str =
    "method,sweep_var,value,psnr_mean,psnr_se,ssim_mean,ssim_se,trials";

pub fn write_results_csv<W: Write>(rows: &[AggregateRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.method.as_str(),
            r.sweep_var,
            r.value,
            r.psnr_mean,
            r.psnr_se,
            r.ssim_mean,
            r.ssim_se,
            r.trials
        )?;
    }
    Ok(())
}

pub fn write_trials_csv<W: Write>(
    sweep_var: &str,
    trials: &[(f64, TrialRow)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "method,{sweep_var},trial,image,psnr_db,ssim,delivered,erased,unscheduled,structure_lost,outage_trial,samples,mean_snr_db,realized_outages"
    )?;
    for (value, r) in trials {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{},{},{},{},{},{},{:.6},{}",
            r.method.as_str(),
            value,
            r.trial,
            r.image,
            r.psnr_db,
            r.ssim,
            r.blocks_delivered,
            r.blocks_erased,
            r.blocks_unscheduled,
            u8::from(r.structure_lost),
            u8::from(r.outage_trial),
            r.samples_scheduled,
            r.mean_snr_db,
            r.realized_outages
        )?;
    }
    Ok(())
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f"];

/// Line chart of mean PSNR against the sweep variable, one line per method.
pub fn plot_svg(rows: &[AggregateRow], x_label: &str) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let xs = rows.iter().map(|r| r.value);
    let ys = rows.iter().map(|r| r.psnr_mean).filter(|v| v.is_finite());
    let (x0, x1) = bounds(xs);
    let (y0, y1) = bounds(ys);
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{pad} {pad} V{} H{}" stroke="black" fill="none"/>"#,
        h - pad,
        w - pad
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.1}</text>"#,
            sx(fx),
            h - pad + 18.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.1}</text>"#,
            pad - 6.0,
            sy(fy) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        w / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">PSNR (dB)</text>"#,
        h / 2.0,
        h / 2.0
    );

    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    for (i, m) in methods.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.method == *m && r.psnr_mean.is_finite())
            .map(|r| format!("{:.1},{:.1}", sx(r.value), sy(r.psnr_mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
            pts.join(" ")
        );
        let ly = pad + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            w - pad - 150.0,
            w - pad - 130.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            w - pad - 125.0,
            ly + 4.0,
            m.as_str()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    artifact: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a ExperimentConfig,
    failures: &'a [super::sweep::GridFailure],
}

/// Writes `results.csv`, `trials.csv`, `run_meta.json` and, optionally,
/// `plot.svg` into `dir`.
pub fn write_sweep_outputs(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    result: &SweepResult,
    plot: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    write_results_csv(&result.rows, &mut buf)?;
    std::fs::write(dir.join("results.csv"), buf)?;

    let mut buf = Vec::new();
    write_trials_csv(result.kind.variable(), &result.trials, &mut buf)?;
    std::fs::write(dir.join("trials.csv"), buf)?;

    write_run_meta(dir, command, config, &result.failures)?;
    if plot {
        std::fs::write(
            dir.join("plot.svg"),
            plot_svg(&result.rows, result.kind.variable()),
        )?;
    }
    Ok(())
}

pub fn write_run_meta(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    failures: &[super::sweep::GridFailure],
) -> Result<()> {
    let meta = RunMeta {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        failures,
    };
    std::fs::write(dir.join("run_meta.json"), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}
