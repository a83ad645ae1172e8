//! Pose accuracy metrics: ADD, area under the ADD accuracy curve, and comparison tables.

use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{keypoints_3d_unchecked, JointState, KeypointLayout, KinematicChain};
use crate::scalar::Real;
use crate::se3::PoseSE3;

pub const DEFAULT_AUC_THRESHOLD_M: f64 = 0.10;
pub const DEFAULT_AUC_RESOLUTION_M: f64 = 0.001;

/// Mean distance between `points` mapped by the estimated and the ground-truth pose.
pub fn add_metric<T: Real>(
    pose_est: &PoseSE3<T>,
    pose_gt: &PoseSE3<T>,
    points: &[Vector3<T>],
) -> Result<T> {
    if points.is_empty() {
        return Err(Error::Parameter("ADD needs at least one point".into()));
    }
    let total = points.iter().fold(T::zero(), |acc, p| {
        acc + (pose_est.transform_point(p) - pose_gt.transform_point(p)).norm()
    });
    Ok(total / T::lit(points.len() as f64))
}

fn check_auc_args(errors: &[f64], threshold_max: f64, resolution: f64) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::Parameter("AUC needs at least one error".into()));
    }
    if !(threshold_max > 0.0) || !(resolution > 0.0) {
        return Err(Error::Parameter(
            "AUC threshold and resolution must be positive".into(),
        ));
    }
    if errors.iter().any(|e| e.is_nan()) {
        return Err(Error::Parameter("AUC errors contain NaN".into()));
    }
    Ok(())
}

/// Fraction of errors `≤ tau`.
pub fn accuracy_at(errors: &[f64], tau: f64) -> f64 {
    errors.iter().filter(|&&e| e <= tau).count() as f64 / errors.len() as f64
}

/// Area under `acc(τ)` on `[0, threshold_max]`, in percent of the full square.
///
/// The trapezoid rule runs over the `resolution` grid refined with every error value in
/// range, taking one-sided limits at each jump. On a step function that is the exact
/// integral, `Σ max(0, threshold_max − e_i) / (n · threshold_max)`, so results do not
/// depend on where errors fall relative to the grid.
pub fn auc_add(errors: &[f64], threshold_max: f64, resolution: f64) -> Result<f64> {
    check_auc_args(errors, threshold_max, resolution)?;
    let mut sorted: Vec<f64> = errors.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let n = sorted.len() as f64;
    let steps = (threshold_max / resolution).round().max(1.0) as usize;
    let mut knots: Vec<f64> = (0..=steps)
        .map(|i| (i as f64 * resolution).min(threshold_max))
        .collect();
    knots.extend(
        sorted
            .iter()
            .copied()
            .filter(|&e| e > 0.0 && e < threshold_max),
    );
    knots.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    knots.dedup();
    // acc is right-continuous; on (a, b) it equals the left-limit at b.
    let below = |tau: f64| sorted.partition_point(|&e| e < tau) as f64 / n;
    let at = |tau: f64| sorted.partition_point(|&e| e <= tau) as f64 / n;
    let mut area = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        area += 0.5 * (at(a) + below(b)) * (b - a);
    }
    Ok((100.0 * area / threshold_max).clamp(0.0, 100.0))
}

/// Plain trapezoid rule on the uniform `resolution` grid (no refinement at jumps).
pub fn auc_add_uniform(errors: &[f64], threshold_max: f64, resolution: f64) -> Result<f64> {
    check_auc_args(errors, threshold_max, resolution)?;
    let curve = accuracy_curve(errors, threshold_max, resolution);
    let area: f64 = curve
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();
    Ok((100.0 * area / threshold_max).clamp(0.0, 100.0))
}

/// `(τ, acc(τ))` samples on the uniform grid from 0 to `threshold_max`.
pub fn accuracy_curve(errors: &[f64], threshold_max: f64, resolution: f64) -> Vec<(f64, f64)> {
    let steps = (threshold_max / resolution).round().max(1.0) as usize;
    (0..=steps)
        .map(|i| {
            let tau = (i as f64 * resolution).min(threshold_max);
            (tau, accuracy_at(errors, tau))
        })
        .collect()
}

/// ADD summary of one run.
///
/// `per_sample` holds the errors of successful estimates; `failures` counts estimates
/// that produced no pose. Failures are excluded from `mean` and count as misses at every
/// threshold of `auc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddResult {
    pub per_sample: Vec<f64>,
    #[serde(default)]
    pub failures: usize,
    pub mean: f64,
    pub auc: f64,
    pub threshold_max: f64,
    pub resolution: f64,
    pub n_points: usize,
}

impl AddResult {
    pub fn from_errors(
        per_sample: Vec<f64>,
        n_points: usize,
        threshold_max: f64,
        resolution: f64,
    ) -> Result<Self> {
        Self::with_failures(per_sample, 0, n_points, threshold_max, resolution)
    }

    pub fn with_failures(
        per_sample: Vec<f64>,
        failures: usize,
        n_points: usize,
        threshold_max: f64,
        resolution: f64,
    ) -> Result<Self> {
        if per_sample.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::Parameter(
                "ADD errors must be finite and non-negative".into(),
            ));
        }
        let mut all = per_sample.clone();
        all.extend(std::iter::repeat_n(f64::INFINITY, failures));
        let auc = auc_add(&all, threshold_max, resolution)?;
        let mean = if per_sample.is_empty() {
            f64::NAN
        } else {
            per_sample.iter().sum::<f64>() / per_sample.len() as f64
        };
        Ok(Self {
            per_sample,
            failures,
            mean,
            auc,
            threshold_max,
            resolution,
            n_points,
        })
    }

    /// Number of estimates, successful or not.
    pub fn n(&self) -> usize {
        self.per_sample.len() + self.failures
    }
}

/// Base-frame evaluation points: every layout keypoint at the all-zero configuration.
pub fn default_eval_points<T: Real>(
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
) -> Result<Vec<Vector3<T>>> {
    let q = JointState::zeros(chain.num_revolute());
    Ok(keypoints_3d_unchecked(chain, layout, &q)?
        .into_values()
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub n: usize,
    pub mean_add_m: f64,
    pub auc_pct: f64,
    pub threshold_max_m: f64,
}

/// Rows in input order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

pub const CSV_HEADER: &str = "label,n,mean_add_m,auc_pct,threshold_max_m";

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(','))
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.n.to_string(),
                format!("{:.9}", r.mean_add_m),
                format!("{:.6}", r.auc_pct),
                format!("{:.6}", r.threshold_max_m),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
    }

    /// Aligned plain-text table: one row per method, mean ADD and AUC columns.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max("Method".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>14}  {:>9}",
            "Method", "n", "Mean ADD (m)", "AUC (%)"
        );
        let _ = writeln!(out, "{}", "-".repeat(width + 2 + 6 + 2 + 14 + 2 + 9));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>14.6}  {:>9.3}",
                r.label, r.n, r.mean_add_m, r.auc_pct
            );
        }
        if let Some(r) = self.rows.first() {
            let _ = writeln!(out, "AUC threshold: {:.3} m", r.threshold_max_m);
        }
        out
    }
}

pub fn compare_runs(results: &[(String, AddResult)]) -> ComparisonTable {
    ComparisonTable {
        rows: results
            .iter()
            .map(|(label, r)| ComparisonRow {
                label: label.clone(),
                n: r.n(),
                mean_add_m: r.mean,
                auc_pct: r.auc,
                threshold_max_m: r.threshold_max,
            })
            .collect(),
    }
}

/// Accuracy-vs-threshold curves as a standalone SVG line chart.
pub fn accuracy_curves_svg(curves: &[(String, Vec<(f64, f64)>)], threshold_max: f64) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 48.0;
    const COLORS: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
    ];
    let x = |t: f64| PAD + (W - 2.0 * PAD) * t / threshold_max;
    let y = |a: f64| H - PAD - (H - 2.0 * PAD) * a;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1}" fill="none" stroke="black"/>"#,
        x(0.0),
        y(1.0),
        x(0.0),
        y(0.0),
        x(threshold_max),
        y(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">ADD threshold (m), max {threshold_max}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" font-size="12" transform="rotate(-90 14 {:.1})" text-anchor="middle">accuracy</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let d: Vec<String> = pts
            .iter()
            .enumerate()
            .map(|(j, (t, a))| {
                format!(
                    "{}{:.2},{:.2}",
                    if j == 0 { "M" } else { "L" },
                    x(*t),
                    y(*a)
                )
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
            x(threshold_max) - 120.0,
            y(0.0) - 16.0 - 16.0 * i as f64,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
