//! CSV and SVG writers. CSV schemas are part of the tool contract; the SVG
//! emitters are self-contained visual aids generated from the same data.

use std::fmt::Write as _;

use crate::chart::ChartResult;
use crate::scenario::TimeSeries;
use crate::steady_state::SteadyProfile;

/// Long-format snapshot table, header `t,z,phi,psi`.
pub fn series_csv(series: &TimeSeries) -> String {
    let mut out = String::from("t,z,phi,psi\n");
    for (k, &t) in series.snapshot_times.iter().enumerate() {
        for (j, &z) in series.cell_centers.iter().enumerate() {
            let _ = writeln!(
                out,
                "{t},{z},{},{}",
                series.snapshots_phi[k][j], series.snapshots_psi[k][j]
            );
        }
    }
    out
}

/// Per-step outlet trace, header
/// `t,phi_U,phi_E,psi_U,psi_E,mass_residual_phi,mass_residual_psi`.
pub fn outlets_csv(series: &TimeSeries) -> String {
    let mut out = String::from("t,phi_U,phi_E,psi_U,psi_E,mass_residual_phi,mass_residual_psi\n");
    for k in 0..series.outlet_times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            series.outlet_times[k],
            series.phi_u[k],
            series.phi_e[k],
            series.psi_u[k],
            series.psi_e[k],
            series.residual_phi[k],
            series.residual_psi[k]
        );
    }
    out
}

/// Steady profile table, header `z,phi,psi`.
pub fn profile_csv(profile: &SteadyProfile) -> String {
    let mut out = String::from("z,phi,psi\n");
    for j in 0..profile.grid.len() {
        let _ = writeln!(out, "{},{},{}", profile.grid[j], profile.phi[j], profile.psi[j]);
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 50.0;

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{title}</text>\n",
        SVG_W / 2.0
    )
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (SVG_W - 2.0 * MARGIN)
    }
    fn y(&self, v: f64) -> f64 {
        SVG_H - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (SVG_H - 2.0 * MARGIN)
    }
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"15\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 15 {})\">{}</text>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{:.3e}</text>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.3e}</text>\n",
        MARGIN,
        MARGIN,
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN,
        SVG_W / 2.0,
        SVG_H - 12.0,
        x_label,
        SVG_H / 2.0,
        SVG_H / 2.0,
        y_label,
        MARGIN,
        SVG_H - MARGIN + 14.0,
        frame.x0,
        SVG_W - MARGIN,
        SVG_H - MARGIN + 14.0,
        frame.x1,
    )
}

/// Heatmap of the froth-interface surface with condition boundaries and the
/// feasible region outlined.
pub fn chart_svg(result: &ChartResult) -> String {
    let frame = Frame {
        x0: result.q_u[0],
        x1: *result.q_u.last().unwrap(),
        y0: result.q_f[0],
        y1: *result.q_f.last().unwrap(),
    };
    let mut svg = svg_header("Operating chart: froth interface height");
    let cw = (SVG_W - 2.0 * MARGIN) / (result.q_u.len() - 1).max(1) as f64;
    let ch = (SVG_H - 2.0 * MARGIN) / (result.q_f.len() - 1).max(1) as f64;

    let (z_lo, z_hi) = result
        .z_fr
        .iter()
        .filter(|z| z.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
            (lo.min(z), hi.max(z))
        });
    for i_f in 0..result.q_f.len() {
        for iu in 0..result.q_u.len() {
            let idx = result.index(iu, i_f);
            let z = result.z_fr[idx];
            let color = if z == f64::INFINITY {
                "#d0e8ff".to_string() // no froth
            } else if z == f64::NEG_INFINITY {
                "#777777".to_string() // froth fills the vessel
            } else if z_hi > z_lo {
                let t = (z - z_lo) / (z_hi - z_lo);
                let r = (255.0 * t) as u8;
                let g = (200.0 * (1.0 - 0.5 * t)) as u8;
                format!("#{r:02x}{g:02x}40")
            } else {
                "#ffc040".to_string()
            };
            let x = frame.x(result.q_u[iu]) - 0.5 * cw;
            let y = frame.y(result.q_f[i_f]) - 0.5 * ch;
            let _ = write!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" fill=\"{color}\"/>"
            );
            if result.reports[idx].feasible {
                let _ = write!(
                    svg,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" \
                     fill=\"none\" stroke=\"white\" stroke-width=\"0.6\"/>"
                );
            }
        }
    }
    svg.push('\n');
    let styles = [
        (&result.boundaries.fib, "black"),
        (&result.boundaries.fias, "green"),
        (&result.boundaries.froth1, "red"),
        (&result.boundaries.froth2, "blue"),
        (&result.boundaries.froth3, "purple"),
    ];
    for (lines, color) in styles {
        for line in lines.iter() {
            if line.len() < 2 {
                continue;
            }
            let pts: Vec<String> = line
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>",
                pts.join(" ")
            );
        }
    }
    svg.push_str(&axes(&frame, "Q_U (m3/s)", "Q_F (m3/s)"));
    svg.push_str("</svg>\n");
    svg
}

/// Line plot of a steady profile (phi solid, psi dashed).
pub fn profile_svg(profile: &SteadyProfile) -> String {
    let frame = Frame {
        x0: profile.grid[0],
        x1: *profile.grid.last().unwrap(),
        y0: 0.0,
        y1: 1.0,
    };
    let mut svg = svg_header("Steady-state volume fractions");
    for (values, color, dash) in [
        (&profile.phi, "#c04000", "none"),
        (&profile.psi, "#0040c0", "6,4"),
    ] {
        let pts: Vec<String> = profile
            .grid
            .iter()
            .zip(values.iter())
            .map(|(&z, &v)| format!("{:.2},{:.2}", frame.x(z), frame.y(v)))
            .collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
             stroke-dasharray=\"{dash}\"/>",
            pts.join(" ")
        );
    }
    svg.push_str(&axes(&frame, "z (m)", "volume fraction"));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{evaluate_chart, ChartSpec};
    use crate::column::{ColumnGeometry, OperatingPoint};
    use crate::constitutive::ConstitutiveParams;
    use crate::steady_state::desired_steady_state;

    #[test]
    fn profile_csv_has_header_and_rows() {
        let geom = ColumnGeometry::default();
        let p = ConstitutiveParams::default();
        let op = OperatingPoint::new(6.0155e-5, 8.9927e-5, 2.0e-6, 0.3, 0.2).unwrap();
        let prof = desired_steady_state(&op, &p, &geom, 64).unwrap();
        let csv = profile_csv(&prof);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "z,phi,psi");
        assert_eq!(csv.lines().count(), 65);
        let svg = profile_svg(&prof);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn chart_svg_renders_all_cells() {
        let spec = ChartSpec {
            geometry: ColumnGeometry::default(),
            params: ConstitutiveParams::default(),
            q_u_range: (5.5e-5, 6.2e-5),
            q_f_range: (8.5e-5, 9.2e-5),
            n_u: 8,
            n_f: 6,
            q_w: 2.0e-6,
            phi_f: 0.3,
            psi_f: 0.2,
        };
        let result = evaluate_chart(&spec).unwrap();
        let svg = chart_svg(&result);
        assert!(svg.matches("<rect").count() >= 8 * 6);
    }
}
