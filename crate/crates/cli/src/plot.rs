//! Figure data tables and their SVG renderings. Every figure is drawn from
//! a plain-text table that is also written to disk.

use std::collections::BTreeMap;
use std::path::Path;

use cogs_core::oracle::OracleMethod;
use cogs_core::TspInstance;
use cogs_pipeline::eval::WorstInstance;
use cogs_pipeline::{EpochLog, Phase};
use plotters::prelude::*;

use crate::args::CurveMetric;
use crate::error::{CliError, Result};
use crate::table::mode_label;

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(127, 127, 127),
];

fn color(i: usize) -> RGBColor {
    COLORS[i % COLORS.len()]
}

fn draw_err(e: impl std::fmt::Display) -> CliError {
    CliError::runtime(format!("drawing: {e}"))
}

/// Pads a range so flat data still gets a visible axis.
fn padded(lo: f64, hi: f64) -> std::ops::Range<f64> {
    if !(lo.is_finite() && hi.is_finite()) {
        return 0.0..1.0;
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad)..(hi + pad)
}

impl CurveMetric {
    pub fn name(self) -> &'static str {
        match self {
            CurveMetric::MeanGap => "mean_gap",
            CurveMetric::Worst1 => "worst_1",
            CurveMetric::Worst05 => "worst_0_5",
            CurveMetric::Worst01 => "worst_0_1",
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            CurveMetric::MeanGap => "validation gap (%)",
            CurveMetric::Worst1 => "validation worst 1% gap (%)",
            CurveMetric::Worst05 => "validation worst 0.5% gap (%)",
            CurveMetric::Worst01 => "validation worst 0.1% gap (%)",
        }
    }

    fn of(self, log: &EpochLog) -> Option<f64> {
        match self {
            CurveMetric::MeanGap => log.mean_gap,
            CurveMetric::Worst1 => log.worst_1,
            CurveMetric::Worst05 => log.worst_0_5,
            CurveMetric::Worst01 => log.worst_0_1,
        }
    }
}

/// Across-seed statistics of one mode at one epoch, gaps in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub mode: String,
    /// 1-based epoch count.
    pub epoch: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub seeds: usize,
}

/// Groups epoch rows of one phase by mode and epoch. Rows whose metric was
/// skipped by the evaluation stride are left out; a later row for the same
/// (mode, seed, epoch) replaces an earlier one.
pub fn epoch_curves(rows: &[EpochLog], metric: CurveMetric, phase: Phase) -> Result<(Vec<CurvePoint>, OracleMethod)> {
    let mut method = None;
    let mut cells: BTreeMap<(String, usize), BTreeMap<u64, f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.phase == phase) {
        let Some(v) = metric.of(r) else { continue };
        match method {
            None => method = Some(r.oracle_method),
            Some(m) if m != r.oracle_method => {
                return Err(CliError::runtime(format!(
                    "refusing to plot gaps from different oracle methods ({} and {}) in one panel",
                    m.name(),
                    r.oracle_method.name()
                )))
            }
            _ => {}
        }
        cells.entry((r.mode.name().to_string(), r.epoch + 1)).or_default().insert(r.seed, 100.0 * v);
    }
    let method = method.ok_or_else(|| CliError::runtime(format!("no {} rows with {}", phase.name(), metric.name())))?;
    let points = cells
        .into_iter()
        .map(|((mode, epoch), by_seed)| {
            let v: Vec<f64> = by_seed.into_values().collect();
            CurvePoint {
                mode,
                epoch,
                mean: cogs_core::stats::mean(&v),
                std: cogs_core::stats::sample_std(&v),
                seeds: v.len(),
            }
        })
        .collect();
    Ok((points, method))
}

pub fn curves_tsv(points: &[CurvePoint]) -> String {
    let mut s = String::from("mode\tepoch\tmean\tstd\tseeds\n");
    for p in points {
        let std = p.std.map_or("nan".to_string(), |d| format!("{d:.6}"));
        s.push_str(&format!("{}\t{}\t{:.6}\t{}\t{}\n", p.mode, p.epoch, p.mean, std, p.seeds));
    }
    s
}

pub fn render_curves(points: &[CurvePoint], metric: CurveMetric, method: OracleMethod, out: &Path) -> Result<()> {
    let mut modes: Vec<&str> = points.iter().map(|p| p.mode.as_str()).collect();
    modes.dedup();
    let max_epoch = points.iter().map(|p| p.epoch).max().unwrap_or(1);
    let lo = points.iter().map(|p| p.mean - p.std.unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.mean + p.std.unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max);
    let root = SVGBackend::new(out, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} vs {} oracle", metric.axis_label(), method.name()), ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.5..max_epoch as f64 + 0.5, padded(lo, hi))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("epoch")
        .y_desc(metric.axis_label())
        .draw()
        .map_err(draw_err)?;
    for (i, mode) in modes.iter().enumerate() {
        let c = color(i);
        let pts: Vec<&CurvePoint> = points.iter().filter(|p| p.mode == *mode).collect();
        if pts.iter().any(|p| p.std.is_some()) {
            let mut band: Vec<(f64, f64)> =
                pts.iter().map(|p| (p.epoch as f64, p.mean + p.std.unwrap_or(0.0))).collect();
            band.extend(pts.iter().rev().map(|p| (p.epoch as f64, p.mean - p.std.unwrap_or(0.0))));
            chart
                .draw_series(std::iter::once(Polygon::new(band, c.mix(0.2).filled())))
                .map_err(draw_err)?;
        }
        chart
            .draw_series(LineSeries::new(pts.iter().map(|p| (p.epoch as f64, p.mean)), c.stroke_width(2)))
            .map_err(draw_err)?
            .label(mode_label(mode))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

fn cycle(points: &[(f64, f64)], order: &[usize]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = order.iter().map(|&i| points[i]).collect();
    if let Some(&first) = v.first() {
        v.push(first);
    }
    v
}

pub fn worst_tsv(worst: &[WorstInstance]) -> String {
    let join = |t: &[usize]| t.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    let mut s = String::from("rank\tindex\tgap\tmodel_tour\toracle_tour\n");
    for (r, w) in worst.iter().enumerate() {
        s.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{}\n",
            r + 1,
            w.index,
            100.0 * w.gap,
            join(&w.model_tour),
            join(&w.oracle_tour)
        ));
    }
    s
}

/// One panel per instance: oracle tour in blue, model tour in red.
pub fn render_worst(worst: &[WorstInstance], out: &Path) -> Result<()> {
    if worst.is_empty() {
        return Err(CliError::runtime("report holds no worst instances"));
    }
    let root = SVGBackend::new(out, (360 * worst.len() as u32, 400)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    for (area, w) in root.split_evenly((1, worst.len())).iter().zip(worst) {
        let mut chart = ChartBuilder::on(area)
            .caption(format!("instance {}: gap {:.2}%", w.index, 100.0 * w.gap), ("sans-serif", 16))
            .margin(10)
            .build_cartesian_2d(-0.02..1.02, -0.02..1.02)
            .map_err(draw_err)?;
        chart
            .draw_series(LineSeries::new(cycle(&w.points, &w.oracle_tour), BLUE.stroke_width(3)))
            .map_err(draw_err)?
            .label("oracle")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLUE.stroke_width(3)));
        chart
            .draw_series(LineSeries::new(cycle(&w.points, &w.model_tour), RED.stroke_width(1)))
            .map_err(draw_err)?
            .label("model")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], RED));
        chart
            .draw_series(w.points.iter().map(|&p| Circle::new(p, 3, BLACK.filled())))
            .map_err(draw_err)?;
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
    }
    root.present().map_err(draw_err)
}

pub fn gallery_tsv(rows: &[(String, Vec<TspInstance>)]) -> String {
    let mut s = String::from("dataset\tinstance\tpoint\tx\ty\n");
    for (name, insts) in rows {
        for (i, inst) in insts.iter().enumerate() {
            for (j, p) in inst.points().iter().enumerate() {
                s.push_str(&format!("{name}\t{i}\t{j}\t{:.6}\t{:.6}\n", p.x, p.y));
            }
        }
    }
    s
}

/// One row of point clouds per dataset.
pub fn render_gallery(rows: &[(String, Vec<TspInstance>)], out: &Path) -> Result<()> {
    let cols = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    if cols == 0 {
        return Err(CliError::runtime("nothing to draw"));
    }
    let root = SVGBackend::new(out, (220 * cols as u32, 240 * rows.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let cells = root.split_evenly((rows.len(), cols));
    for (r, (name, insts)) in rows.iter().enumerate() {
        for (c, inst) in insts.iter().enumerate() {
            let mut chart = ChartBuilder::on(&cells[r * cols + c])
                .caption(format!("{name} #{c}"), ("sans-serif", 14))
                .margin(8)
                .build_cartesian_2d(0.0..1.0, 0.0..1.0)
                .map_err(draw_err)?;
            chart
                .draw_series(std::iter::once(Rectangle::new([(0.0, 0.0), (1.0, 1.0)], BLACK)))
                .map_err(draw_err)?;
            chart
                .draw_series(inst.points().iter().map(|p| Circle::new((p.x, p.y), 2, color(r).filled())))
                .map_err(draw_err)?;
        }
    }
    root.present().map_err(draw_err)
}

pub fn latent_tsv(labels: &[String], points: &[(usize, [f64; 2])]) -> String {
    let mut s = String::from("label\tpc1\tpc2\n");
    for (l, p) in points {
        s.push_str(&format!("{}\t{:.6}\t{:.6}\n", labels[*l], p[0], p[1]));
    }
    s
}

pub fn render_latent(labels: &[String], points: &[(usize, [f64; 2])], hull_areas: &[f64], out: &Path) -> Result<()> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (_, p) in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let root = SVGBackend::new(out, (700, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("latent space (PCA of posterior means)", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(padded(lo[0], hi[0]), padded(lo[1], hi[1]))
        .map_err(draw_err)?;
    chart.configure_mesh().x_desc("PC 1").y_desc("PC 2").draw().map_err(draw_err)?;
    for (i, label) in labels.iter().enumerate() {
        let c = color(i);
        let area = hull_areas.get(i).copied().unwrap_or(f64::NAN);
        chart
            .draw_series(
                points
                    .iter()
                    .filter(|(l, _)| *l == i)
                    .map(|(_, p)| Circle::new((p[0], p[1]), 3, c.mix(0.7).filled())),
            )
            .map_err(draw_err)?
            .label(format!("{label} (hull area {area:.3})"))
            .legend(move |(x, y)| Circle::new((x + 8, y), 4, c.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}

/// `(instance index, source name, source dimension, gap in percent)`.
pub type GapSizeRow = (usize, String, usize, f64);

pub fn gap_size_tsv(rows: &[GapSizeRow], r: f64) -> String {
    let mut s = format!("# pearson_r\t{r:.6}\nindex\tsource\tdimension\tgap\n");
    for (i, src, d, g) in rows {
        s.push_str(&format!("{i}\t{src}\t{d}\t{g:.6}\n"));
    }
    s
}

pub fn render_gap_size(rows: &[GapSizeRow], r: f64, out: &Path) -> Result<()> {
    let xmax = rows.iter().map(|r| r.2).max().unwrap_or(1) as f64;
    let ymax = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    let root = SVGBackend::new(out, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("gap vs source size (Pearson r = {r:.3})"), ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..xmax * 1.05, padded(0.0, ymax))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .x_desc("source instance size (nodes)")
        .y_desc("gap (%)")
        .draw()
        .map_err(draw_err)?;
    chart
        .draw_series(rows.iter().map(|r| Circle::new((r.2 as f64, r.3), 2, color(0).mix(0.6).filled())))
        .map_err(draw_err)?;
    root.present().map_err(draw_err)
}
