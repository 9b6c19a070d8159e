//! Heatmap export: CSV values, an SVG overlay rendering, and a JSON sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::Interpretation;
use crate::dataset::{CHANNELS, WINDOW_LEN};
use crate::error::{Error, Result};

/// Sample metadata carried into the exported files.
#[derive(Debug, Clone)]
pub struct InterpretationContext {
    pub subject_id: u16,
    pub true_label: u8,
    pub sample_index: usize,
    pub channel_names: Vec<String>,
}

/// Write `<stem>.csv`, `<stem>.svg` and `<stem>.json` under `out_dir`;
/// returns the three paths.
pub fn write_heatmap_artifacts(
    out_dir: &Path,
    stem: &str,
    interp: &Interpretation,
    signal: &Array2<f64>,
    ctx: &InterpretationContext,
) -> Result<[PathBuf; 3]> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let svg_path = out_dir.join(format!("{stem}.svg"));
    let json_path = out_dir.join(format!("{stem}.json"));

    std::fs::write(&csv_path, heatmap_csv(interp))?;
    std::fs::write(&svg_path, heatmap_svg(interp, signal, ctx))?;
    std::fs::write(&json_path, sidecar_json(interp, ctx)?)?;
    Ok([csv_path, svg_path, json_path])
}

/// 30 rows x 384 comma-separated normalised values.
fn heatmap_csv(interp: &Interpretation) -> String {
    let mut out = String::with_capacity(CHANNELS * WINDOW_LEN * 8);
    for row in interp.heatmap.map.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        out.push('\n');
    }
    out
}

fn sidecar_json(interp: &Interpretation, ctx: &InterpretationContext) -> Result<String> {
    let locations: Vec<serde_json::Value> = interp
        .locations
        .iter()
        .map(|l| {
            serde_json::json!({
                "node": l.node,
                "time": l.time,
                "value": l.value,
                "channel": l.channel,
                "time_center": l.time_center,
            })
        })
        .collect();
    let value = serde_json::json!({
        "subject": ctx.subject_id,
        "label": ctx.true_label,
        "sample_index": ctx.sample_index,
        "likelihoods": { "alert": interp.likelihoods[0], "drowsy": interp.likelihoods[1] },
        "class": interp.predicted,
        "degenerate": interp.heatmap.degenerate,
        "channel_summary": interp.heatmap.channel_summary,
        "top_locations": locations,
    });
    serde_json::to_string_pretty(&value).map_err(|e| Error::Format(format!("sidecar: {e}")))
}

const ROW_H: f64 = 26.0;
const TRACE_H: f64 = 22.0;
const LEFT: f64 = 58.0;
const TOP: f64 = 46.0;
const PX_PER_SAMPLE: f64 = 2.0;
const SUMMARY_W: f64 = 42.0;

/// Signal traces with the heatmap painted behind them and a per-channel
/// summary bar at the right.
fn heatmap_svg(
    interp: &Interpretation,
    signal: &Array2<f64>,
    ctx: &InterpretationContext,
) -> String {
    let plot_w = WINDOW_LEN as f64 * PX_PER_SAMPLE;
    let width = LEFT + plot_w + 18.0 + SUMMARY_W + 16.0;
    let height = TOP + CHANNELS as f64 * ROW_H + 18.0;
    let mut svg = String::with_capacity(1 << 20);
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"11\">\n"
    );
    let _ = write!(
        svg,
        "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    );
    let class_name = if interp.predicted == 1 {
        "drowsy"
    } else {
        "alert"
    };
    let label_name = if ctx.true_label == 1 {
        "drowsy"
    } else {
        "alert"
    };
    let _ = write!(
        svg,
        "<text x=\"{LEFT}\" y=\"18\">subject {} sample {} | label {} | predicted {} \
         (alert {:.3}, drowsy {:.3})</text>\n",
        ctx.subject_id,
        ctx.sample_index,
        label_name,
        class_name,
        interp.likelihoods[0],
        interp.likelihoods[1]
    );
    let _ = write!(
        svg,
        "<text x=\"{LEFT}\" y=\"34\">heatmap -1..+1 (blue..red), right bar: channel mean</text>\n"
    );

    // Peak-to-peak scaling shared by all traces keeps amplitudes comparable.
    let amp = signal
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1e-9);

    for c in 0..CHANNELS {
        let y0 = TOP + c as f64 * ROW_H;
        let mid = y0 + ROW_H / 2.0;
        let name = ctx.channel_names.get(c).map(String::as_str).unwrap_or("?");
        let _ = write!(
            svg,
            "<text x=\"6\" y=\"{:.1}\" fill=\"#333\">{name}</text>\n",
            mid + 4.0
        );
        // Heatmap strip: one rect per run of similar colour to keep files small.
        let mut q = 0usize;
        while q < WINDOW_LEN {
            let v = interp.heatmap.map[[c, q]];
            let mut end = q + 1;
            while end < WINDOW_LEN && (interp.heatmap.map[[c, end]] - v).abs() < 0.02 {
                end += 1;
            }
            let (r, g, b) = diverging_color(v);
            let x = LEFT + q as f64 * PX_PER_SAMPLE;
            let w = (end - q) as f64 * PX_PER_SAMPLE;
            let _ = write!(
                svg,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{w:.1}\" height=\"{TRACE_H}\" \
                 fill=\"rgb({r},{g},{b})\"/>\n",
                y0 + (ROW_H - TRACE_H) / 2.0
            );
            q = end;
        }
        // Signal trace.
        let mut points = String::new();
        for j in 0..WINDOW_LEN {
            let x = LEFT + j as f64 * PX_PER_SAMPLE;
            let y = mid - signal[[c, j]] / amp * (TRACE_H / 2.0 - 1.0);
            let _ = write!(points, "{x:.1},{y:.1} ");
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.8\"/>\n",
            points.trim_end()
        );
        // Channel summary cell.
        let (r, g, b) = diverging_color(interp.heatmap.channel_summary[c]);
        let _ = write!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{SUMMARY_W}\" height=\"{TRACE_H}\" \
             fill=\"rgb({r},{g},{b})\" stroke=\"#999\" stroke-width=\"0.5\"/>\n",
            LEFT + plot_w + 18.0,
            y0 + (ROW_H - TRACE_H) / 2.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Blue (-1) through white (0) to red (+1).
fn diverging_color(v: f64) -> (u8, u8, u8) {
    let v = v.clamp(-1.0, 1.0);
    let lerp = |a: f64, b: f64, t: f64| (a + (b - a) * t).round() as u8;
    if v < 0.0 {
        let t = v + 1.0; // 0 at -1, 1 at 0
        (
            lerp(59.0, 255.0, t),
            lerp(76.0, 255.0, t),
            lerp(192.0, 255.0, t),
        )
    } else {
        let t = v; // 0 at 0, 1 at +1
        (
            lerp(255.0, 180.0, t),
            lerp(255.0, 4.0, t),
            lerp(255.0, 38.0, t),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diverging_color_endpoints() {
        assert_eq!(diverging_color(-1.0), (59, 76, 192));
        assert_eq!(diverging_color(0.0), (255, 255, 255));
        assert_eq!(diverging_color(1.0), (180, 4, 38));
    }
}
