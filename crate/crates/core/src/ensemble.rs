//! Many forecast sets at once: nMAE/nRMSE scatter, Pareto front, export.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{error_metrics, pearson, Normalizer};
use crate::reference::{potential_rmse_skill, skill_score, ReferenceStats};
use crate::series::{pair, ForecastSeries, ObservationSeries};

pub const CSV_HEADER: &str = "name,nmae,nrmse,rho,s_rmse_actual,s_rmse_potential,on_front";

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRow {
    pub name: String,
    pub nmae: f64,
    pub nrmse: f64,
    /// `NaN` when undefined.
    pub rho: f64,
    pub s_rmse_actual: f64,
    pub s_rmse_potential: f64,
    pub on_front: bool,
    /// Why some fields could not be computed.
    pub flag: Option<String>,
}

impl EnsembleRow {
    fn flagged(name: &str, reason: String) -> Self {
        EnsembleRow {
            name: name.to_string(),
            nmae: f64::NAN,
            nrmse: f64::NAN,
            rho: f64::NAN,
            s_rmse_actual: f64::NAN,
            s_rmse_potential: f64::NAN,
            on_front: false,
            flag: Some(reason),
        }
    }
}

fn evaluate_one(
    obs: &ObservationSeries,
    fcst: &ForecastSeries,
    reference: &ReferenceStats,
    normalizer: Normalizer,
) -> EnsembleRow {
    let p = match pair(obs, fcst) {
        Ok(p) if p.n() >= 3 => p,
        Ok(p) => return EnsembleRow::flagged(&fcst.name, format!("only {} valid pairs", p.n())),
        Err(e) => return EnsembleRow::flagged(&fcst.name, e.to_string()),
    };
    let metrics = match normalizer.resolve(&p).and_then(|v| error_metrics(&p, v)) {
        Ok(m) => m,
        Err(e) => return EnsembleRow::flagged(&fcst.name, e.to_string()),
    };
    let mut row = EnsembleRow {
        name: fcst.name.clone(),
        nmae: metrics.nmae,
        nrmse: metrics.nrmse,
        rho: f64::NAN,
        s_rmse_actual: skill_score(metrics.rmse, reference.rmse_cliper, 0.0).unwrap_or(f64::NAN),
        s_rmse_potential: f64::NAN,
        on_front: false,
        flag: None,
    };
    match pearson(&p).and_then(|rho| Ok((rho, potential_rmse_skill(rho, reference.gamma_h)?))) {
        Ok((rho, s)) => {
            row.rho = rho;
            row.s_rmse_potential = s;
        }
        Err(e) => row.flag = Some(e.to_string()),
    }
    row
}

/// One row per forecast, in input order, with Pareto membership filled in.
///
/// Forecasts that cannot be scored produce a flagged row. Flagged rows with
/// finite nMAE and nRMSE still take part in the front.
pub fn evaluate_ensemble(
    obs: &ObservationSeries,
    forecasts: &[ForecastSeries],
    h: usize,
    normalizer: Normalizer,
) -> Result<Vec<EnsembleRow>> {
    if forecasts.is_empty() {
        return Err(Error::invalid("no forecasts to evaluate"));
    }
    let reference = ReferenceStats::new(obs, h)?;
    let mut rows: Vec<EnsembleRow> = forecasts
        .par_iter()
        .map(|f| evaluate_one(obs, f, &reference, normalizer))
        .collect();

    let usable: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].nmae.is_finite() && rows[i].nrmse.is_finite())
        .collect();
    if usable.is_empty() {
        return Err(Error::NoValidRows);
    }
    let points: Vec<(f64, f64)> = usable
        .iter()
        .map(|&i| (rows[i].nmae, rows[i].nrmse))
        .collect();
    for (&i, on) in usable.iter().zip(pareto_front(&points)?) {
        rows[i].on_front = on;
    }
    Ok(rows)
}

/// Pareto membership for `(mae, rmse)` points, both minimized.
///
/// A point is on the front unless another point is no worse in both
/// coordinates and strictly better in at least one. Exact duplicates of a
/// front point are all on the front. Sort-and-sweep, `O(n log n)`.
pub fn pareto_front(points: &[(f64, f64)]) -> Result<Vec<bool>> {
    if points.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .0
            .total_cmp(&points[j].0)
            .then(points[i].1.total_cmp(&points[j].1))
    });
    let mut on_front = vec![false; points.len()];
    // Lowest rmse among points with strictly smaller mae.
    let mut best_before = f64::INFINITY;
    let mut start = 0;
    while start < order.len() {
        let mae = points[order[start]].0;
        let mut end = start;
        while end < order.len() && points[order[end]].0 == mae {
            end += 1;
        }
        let group_min = order[start..end]
            .iter()
            .map(|&i| points[i].1)
            .fold(f64::INFINITY, f64::min);
        if group_min < best_before {
            for &i in &order[start..end] {
                on_front[i] = points[i].1 == group_min;
            }
        }
        best_before = best_before.min(group_min);
        start = end;
    }
    Ok(on_front)
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NaN".to_string()
    }
}

pub fn write_csv<W: Write>(rows: &[EnsembleRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            fmt_value(r.nmae),
            fmt_value(r.nrmse),
            fmt_value(r.rho),
            fmt_value(r.s_rmse_actual),
            fmt_value(r.s_rmse_potential),
            r.on_front.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;
const RADIUS: f64 = 4.0;
const LIGHT: f64 = 85.0;
const DARK: f64 = 15.0;

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        let pad = if lo == 0.0 { 0.05 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// nRMSE against nMAE scatter, darker fill for higher potential skill and
/// red outlines on the Pareto front.
pub fn render_svg(rows: &[EnsembleRow]) -> String {
    let pts: Vec<&EnsembleRow> = rows
        .iter()
        .filter(|r| r.nmae.is_finite() && r.nrmse.is_finite())
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" width="{SVG_WIDTH}" height="{SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    );
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (x0, x1) = padded_range(pts.iter().map(|r| r.nmae));
    let (y0, y1) = padded_range(pts.iter().map(|r| r.nrmse));
    let skill: Vec<f64> = pts
        .iter()
        .map(|r| r.s_rmse_potential)
        .filter(|v| v.is_finite())
        .collect();
    let s_lo = skill.iter().copied().fold(f64::INFINITY, f64::min);
    let s_hi = skill.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let plot_w = SVG_WIDTH - 2.0 * MARGIN;
    let plot_h = SVG_HEIGHT - 2.0 * MARGIN;
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| SVG_HEIGHT - MARGIN - (v - y0) / (y1 - y0) * plot_h;
    let lightness = |v: f64| {
        if !v.is_finite() {
            LIGHT
        } else if s_hi > s_lo {
            LIGHT + (DARK - LIGHT) * (v - s_lo) / (s_hi - s_lo)
        } else {
            0.5 * (LIGHT + DARK)
        }
    };

    let bottom = SVG_HEIGHT - MARGIN;
    let right = SVG_WIDTH - MARGIN;
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN} {MARGIN} L{MARGIN} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">nMAE</text>"#,
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" text-anchor="middle" font-size="14" transform="rotate(-90 15 {:.1})">nRMSE</text>"#,
        SVG_HEIGHT / 2.0,
        SVG_HEIGHT / 2.0
    );
    for (v, anchor_x, anchor_y, align) in [
        (x0, MARGIN, bottom + 18.0, "start"),
        (x1, right, bottom + 18.0, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{anchor_x:.1}" y="{anchor_y:.1}" text-anchor="{align}" font-size="11">{v:.4}</text>"#
        );
    }
    for (v, y) in [(y0, bottom), (y1, MARGIN)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="end" font-size="11">{v:.4}</text>"#,
            MARGIN - 4.0
        );
    }
    // Front points last so their outline stays visible.
    for front in [false, true] {
        for r in pts.iter().filter(|r| r.on_front == front) {
            let stroke = if front {
                r#" stroke="red" stroke-width="1.5""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="{RADIUS}" fill="hsl(0,0%,{:.1}%)"{stroke}/>"#,
                px(r.nmae),
                py(r.nrmse),
                lightness(r.s_rmse_potential)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes the scatter CSV and, when asked, the SVG figure.
pub fn scatter_export(
    rows: &[EnsembleRow],
    csv_path: &Path,
    svg_path: Option<&Path>,
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::NoValidRows);
    }
    write_csv(rows, create(csv_path)?)?;
    if let Some(svg) = svg_path {
        let mut out = create(svg)?;
        out.write_all(render_svg(rows).as_bytes())
            .and_then(|_| out.flush())
            .map_err(|source| Error::Io {
                path: svg.to_path_buf(),
                source,
            })?;
    }
    Ok(())
}
