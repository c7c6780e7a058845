use plotters::prelude::*;

use crate::report::Series;

const PALETTE: [RGBColor; 4] = [
    RGBColor(200, 60, 40),
    RGBColor(40, 120, 60),
    RGBColor(120, 60, 160),
    RGBColor(200, 140, 20),
];

fn bounds(series: &Series) -> Option<((f64, f64), (f64, f64))> {
    let all = series
        .points
        .iter()
        .chain(series.overlays.iter().flat_map(|o| o.points.iter()))
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    let pad = |a: f64, b: f64| {
        let w = if b > a {
            0.05 * (b - a)
        } else {
            0.5 * a.abs().max(1e-12)
        };
        (a - w, b + w)
    };
    Some((pad(x0, x1), pad(y0, y1)))
}

/// Line chart of the series with its overlays as an SVG document. `None` for an empty series.
pub fn render_svg(series: &Series) -> Result<Option<String>, String> {
    let Some(((x0, x1), (y0, y1))) = bounds(series) else {
        return Ok(None);
    };
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 440)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| e.to_string())?;
        let mut chart = ChartBuilder::on(&root)
            .caption(&series.name, ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(|e| e.to_string())?;
        chart
            .configure_mesh()
            .x_desc(series.x_label.as_str())
            .y_desc(series.y_label.as_str())
            .x_label_formatter(&|v| format!("{v:.3e}"))
            .y_label_formatter(&|v| format!("{v:.3e}"))
            .draw()
            .map_err(|e| e.to_string())?;
        chart
            .draw_series(LineSeries::new(series.points.iter().copied(), &BLUE))
            .map_err(|e| e.to_string())?
            .label("measured")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLUE));
        for (k, o) in series.overlays.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(o.points.iter().copied(), colour))
                .map_err(|e| e.to_string())?
                .label(o.label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], colour));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| e.to_string())?;
        root.present().map_err(|e| e.to_string())?;
    }
    Ok(Some(svg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_line_and_overlay() {
        let s = Series::new("mass", "t", "∫G", vec![(0.0, 1.0), (1.0, 1.0)])
            .with_overlay("reference", vec![(0.0, 1.0), (1.0, 1.0)]);
        let svg = render_svg(&s).unwrap().unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert_eq!(svg, render_svg(&s).unwrap().unwrap());
    }

    #[test]
    fn empty_series_is_skipped() {
        let s = Series::new("empty", "x", "y", Vec::new());
        assert!(render_svg(&s).unwrap().is_none());
    }
}
