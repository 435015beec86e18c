//! Probability-versus-axis chart for a sweep.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::coord::types::RangedCoordf64;
use plotters::coord::ranged1d::{Ranged, ValueFormatter};
use plotters::prelude::*;

use ctxorder::harness::{SweepAxis, SweepResult};

fn label(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::UpdateInterval => "update interval (s)",
        SweepAxis::MeanDelay => "mean message delay (s)",
        SweepAxis::MeanStay => "mean stay in office (s)",
    }
}

fn draw<X>(
    chart: &mut ChartContext<'_, SVGBackend<'_>, Cartesian2d<X, RangedCoordf64>>,
    axis: SweepAxis,
    points: &[(f64, f64)],
) -> Result<()>
where
    X: Ranged<ValueType = f64> + ValueFormatter<f64>,
{
    chart
        .configure_mesh()
        .x_desc(label(axis))
        .y_desc("Num_OGA / Num_phy")
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .draw_series(LineSeries::new(points.iter().copied(), &BLUE))
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .draw_series(points.iter().map(|&p| Circle::new(p, 3, BLUE.filled())))
        .map_err(|e| anyhow!("{e}"))?;
    Ok(())
}

pub fn probability_curve(result: &SweepResult, path: &Path) -> Result<()> {
    let points: Vec<(f64, f64)> = result
        .aggregates
        .iter()
        .map(|a| (a.axis_value, a.mean_probability))
        .collect();
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo == hi { (lo * 0.5, hi * 1.5 + 1.0) } else { (lo, hi) };

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(format!("probability of correct ordering vs {}", result.axis), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50);
    // Delay grids span several decades.
    if result.axis == SweepAxis::MeanDelay && lo > 0.0 {
        let mut chart = builder
            .build_cartesian_2d((lo..hi).log_scale(), 0.0..1.05)
            .map_err(|e| anyhow!("{e}"))?;
        draw(&mut chart, result.axis, &points)?;
    } else {
        let mut chart = builder.build_cartesian_2d(lo..hi, 0.0..1.05).map_err(|e| anyhow!("{e}"))?;
        draw(&mut chart, result.axis, &points)?;
    }
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}
