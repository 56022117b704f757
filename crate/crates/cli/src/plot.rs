//! PSNR bar chart rendering: one group per scenario, bar height the
//! mean PSNR over videos, emitted as a standalone SVG.

use std::path::Path;

use sci_forge_core::error::{Result, SciError};

use crate::bench::parse_csv;

const CHART_HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 52.0;
const MARGIN_BOTTOM: f64 = 78.0;
const MARGIN_TOP: f64 = 24.0;
const GROUP_WIDTH: f64 = 62.0;
const BAR_WIDTH: f64 = 38.0;

struct Group {
    scenario: String,
    mean_psnr: f64,
}

fn group_rows(rows: &[(String, String, f64, f64)], origin: &Path) -> Result<Vec<Group>> {
    let mut groups: Vec<(String, f64, usize)> = Vec::new();
    for (scenario, _, psnr, _) in rows {
        if !psnr.is_finite() {
            continue;
        }
        match groups.iter_mut().find(|(s, _, _)| s == scenario) {
            Some((_, sum, count)) => {
                *sum += psnr;
                *count += 1;
            }
            None => groups.push((scenario.clone(), *psnr, 1)),
        }
    }
    if groups.is_empty() {
        return Err(SciError::format(
            origin,
            "no finite PSNR values to plot".to_string(),
        ));
    }
    Ok(groups
        .into_iter()
        .map(|(scenario, sum, count)| Group {
            scenario,
            mean_psnr: sum / count as f64,
        })
        .collect())
}

/// Upper axis bound: the maximum rounded up to the next multiple of 5.
fn axis_max(groups: &[Group]) -> f64 {
    let max = groups.iter().map(|g| g.mean_psnr).fold(0.0f64, f64::max);
    (max / 5.0).ceil() * 5.0
}

fn render_svg(groups: &[Group]) -> String {
    let top = axis_max(groups);
    let width = MARGIN_LEFT + groups.len() as f64 * GROUP_WIDTH + 16.0;
    let height = MARGIN_TOP + CHART_HEIGHT + MARGIN_BOTTOM;
    let y_of = |v: f64| MARGIN_TOP + CHART_HEIGHT * (1.0 - v / top);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    ));

    // Axis, gridlines and tick labels every 5 dB.
    let x0 = MARGIN_LEFT;
    let x1 = MARGIN_LEFT + groups.len() as f64 * GROUP_WIDTH;
    let mut tick = 0.0;
    while tick <= top + 1e-9 {
        let y = y_of(tick);
        svg.push_str(&format!(
            "  <line x1=\"{x0:.1}\" y1=\"{y:.1}\" x2=\"{x1:.1}\" y2=\"{y:.1}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" class=\"tick\">{:.0}</text>\n",
            x0 - 6.0,
            y + 4.0,
            tick
        ));
        tick += 5.0;
    }
    svg.push_str(&format!(
        "  <line x1=\"{x0:.1}\" y1=\"{:.1}\" x2=\"{x0:.1}\" y2=\"{:.1}\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        y_of(top),
        y_of(0.0)
    ));

    for (i, group) in groups.iter().enumerate() {
        let gx = MARGIN_LEFT + i as f64 * GROUP_WIDTH;
        let bx = gx + (GROUP_WIDTH - BAR_WIDTH) / 2.0;
        let by = y_of(group.mean_psnr);
        let bh = y_of(0.0) - by;
        svg.push_str(&format!(
            "  <rect x=\"{bx:.1}\" y=\"{by:.1}\" width=\"{BAR_WIDTH:.1}\" height=\"{bh:.1}\" \
             fill=\"#4878a8\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.1}</text>\n",
            bx + BAR_WIDTH / 2.0,
            by - 4.0,
            group.mean_psnr
        ));
        let lx = gx + GROUP_WIDTH / 2.0;
        let ly = y_of(0.0) + 12.0;
        svg.push_str(&format!(
            "  <text x=\"{lx:.1}\" y=\"{ly:.1}\" text-anchor=\"end\" \
             transform=\"rotate(-45 {lx:.1} {ly:.1})\">{}</text>\n",
            group.scenario
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render the grouped bar chart for a bench CSV. Refuses to write
/// anything when the CSV holds no plottable rows.
pub fn plot_psnr_bars(csv: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv).map_err(|e| SciError::io(csv, e))?;
    let rows = parse_csv(&text, csv)?;
    if rows.is_empty() {
        return Err(SciError::format(csv, "empty CSV, nothing to plot".to_string()));
    }
    let groups = group_rows(&rows, csv)?;
    let svg = render_svg(&groups);
    std::fs::write(out, svg).map_err(|e| SciError::io(out, e))?;
    Ok(())
}
