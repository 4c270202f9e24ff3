//! Operating charts: feasibility of the desired steady state over a
//! (Q_U, Q_F) grid at fixed wash water and feed composition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::column::{ColumnGeometry, OperatingPoint};
use crate::constitutive::ConstitutiveParams;
use crate::contour::{zero_contours, Polyline};
use crate::error::{Error, Result};
use crate::numeric::linspace;
use crate::steady_state::{check_conditions, FeasibilityReport};

/// Chart request: ranges, resolution and the fixed control variables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartSpec {
    #[serde(default)]
    pub geometry: ColumnGeometry,
    #[serde(default)]
    pub params: ConstitutiveParams,
    /// Closed Q_U interval (m3/s).
    #[serde(rename = "qU_range")]
    pub q_u_range: (f64, f64),
    /// Closed Q_F interval (m3/s).
    #[serde(rename = "qF_range")]
    pub q_f_range: (f64, f64),
    /// Grid resolution along Q_U.
    #[serde(rename = "nU")]
    pub n_u: usize,
    /// Grid resolution along Q_F.
    #[serde(rename = "nF")]
    pub n_f: usize,
    #[serde(rename = "Q_W")]
    pub q_w: f64,
    #[serde(rename = "phi_F")]
    pub phi_f: f64,
    #[serde(rename = "psi_F")]
    pub psi_f: f64,
}

impl ChartSpec {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.params.validate()?;
        if self.n_u < 2 || self.n_f < 2 {
            return Err(Error::Domain {
                name: "nU/nF",
                value: self.n_u.min(self.n_f) as f64,
                lo: 2.0,
                hi: f64::INFINITY,
            });
        }
        if self.q_u_range.0 >= self.q_u_range.1 || self.q_f_range.0 >= self.q_f_range.1 {
            return Err(Error::Domain {
                name: "range",
                value: 0.0,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if self.q_w < 0.0 {
            return Err(Error::NonPositiveParameter {
                name: "Q_W",
                value: self.q_w,
            });
        }
        if self.phi_f < 0.0 || self.psi_f < 0.0 || self.phi_f + self.psi_f > 1.0 {
            return Err(Error::Domain {
                name: "phi_F + psi_F",
                value: self.phi_f + self.psi_f,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }
}

/// Per-condition boundary polylines in (Q_U, Q_F) coordinates.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConditionBoundaries {
    pub fib: Vec<Polyline>,
    pub fias: Vec<Polyline>,
    pub froth1: Vec<Polyline>,
    pub froth2: Vec<Polyline>,
    pub froth3: Vec<Polyline>,
}

/// Evaluated chart: one report per node, the froth-interface surface with
/// sentinel encodings, and the extracted condition boundaries.
#[derive(Debug, Clone)]
pub struct ChartResult {
    pub spec: ChartSpec,
    /// Q_U grid values, ascending (length nU).
    pub q_u: Vec<f64>,
    /// Q_F grid values, ascending (length nF).
    pub q_f: Vec<f64>,
    /// Reports indexed by `if * nU + iu` (Q_U varies fastest).
    pub reports: Vec<FeasibilityReport>,
    /// Froth-interface height per node: finite inside the froth regime,
    /// +inf where no froth forms, -inf where froth fills the vessel.
    pub z_fr: Vec<f64>,
    pub boundaries: ConditionBoundaries,
}

impl ChartResult {
    #[inline]
    pub fn index(&self, iu: usize, i_f: usize) -> usize {
        i_f * self.q_u.len() + iu
    }

    pub fn feasible_count(&self) -> usize {
        self.reports.iter().filter(|r| r.feasible).count()
    }
}

fn z_fr_sentinel(report: &FeasibilityReport, p: &ConstitutiveParams) -> f64 {
    match report.z_fr {
        Some(z) => z,
        None => match report.phi_e {
            // effluent too dilute for froth: the layer never forms
            Some(pe) if pe <= p.phi_c => f64::INFINITY,
            // any other failure accumulates aggregates downward
            _ => f64::NEG_INFINITY,
        },
    }
}

/// Evaluate the chart on the full grid. Cells are independent; the sweep is
/// parallel over nodes and the assembly is index-ordered, so results do not
/// depend on the thread count.
pub fn evaluate_chart(spec: &ChartSpec) -> Result<ChartResult> {
    spec.validate()?;
    let q_u = linspace(spec.q_u_range.0, spec.q_u_range.1, spec.n_u);
    let q_f = linspace(spec.q_f_range.0, spec.q_f_range.1, spec.n_f);

    let nodes: Vec<(usize, usize)> = (0..spec.n_f)
        .flat_map(|i_f| (0..spec.n_u).map(move |iu| (iu, i_f)))
        .collect();

    let reports: Vec<FeasibilityReport> = nodes
        .par_iter()
        .map(|&(iu, i_f)| {
            let op = OperatingPoint {
                q_u: q_u[iu],
                q_f: q_f[i_f],
                q_w: spec.q_w,
                phi_f: spec.phi_f,
                psi_f: spec.psi_f,
            };
            check_conditions(&op, &spec.params, &spec.geometry)
        })
        .collect();

    let z_fr: Vec<f64> = reports
        .iter()
        .map(|r| z_fr_sentinel(r, &spec.params))
        .collect();

    let margin_field = |extract: &dyn Fn(&FeasibilityReport) -> f64| -> Vec<f64> {
        reports.iter().map(extract).collect()
    };
    let boundaries = ConditionBoundaries {
        fib: zero_contours(&q_u, &q_f, &margin_field(&|r| r.fib_margin)),
        fias: zero_contours(&q_u, &q_f, &margin_field(&|r| r.fias_margin)),
        froth1: zero_contours(&q_u, &q_f, &margin_field(&|r| r.froth1_margin)),
        froth2: zero_contours(
            &q_u,
            &q_f,
            &margin_field(&|r| r.froth2_margin.unwrap_or(f64::NAN)),
        ),
        froth3: zero_contours(&q_u, &q_f, &margin_field(&|r| r.froth3_margin)),
    };

    Ok(ChartResult {
        spec: spec.clone(),
        q_u,
        q_f,
        reports,
        z_fr,
        boundaries,
    })
}

fn fmt_z_fr(z: f64) -> String {
    if z == f64::INFINITY {
        "inf".to_string()
    } else if z == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{z}")
    }
}

/// Render the chart as CSV with one row per node.
pub fn chart_csv(result: &ChartResult) -> String {
    let mut out = String::from("Q_U,Q_F,fib,fias,froth1,froth2,froth3,feasible,z_fr\n");
    for i_f in 0..result.q_f.len() {
        for iu in 0..result.q_u.len() {
            let idx = result.index(iu, i_f);
            let r = &result.reports[idx];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                result.q_u[iu],
                result.q_f[i_f],
                r.fib_ok as u8,
                r.fias_ok as u8,
                r.froth1_ok as u8,
                r.froth2_ok as u8,
                r.froth3_ok as u8,
                r.feasible as u8,
                fmt_z_fr(result.z_fr[idx]),
            ));
        }
    }
    out
}

/// Parsed row of the chart CSV, used for round-trip checks and re-plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCsvRow {
    pub q_u: f64,
    pub q_f: f64,
    pub fib: bool,
    pub fias: bool,
    pub froth1: bool,
    pub froth2: bool,
    pub froth3: bool,
    pub feasible: bool,
    pub z_fr: f64,
}

/// Parse the CSV produced by [`chart_csv`].
pub fn parse_chart_csv(text: &str) -> Result<Vec<ChartCsvRow>> {
    let bad = |line: &str| Error::InvalidScenario {
        reason: format!("malformed chart CSV line: {line}"),
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "Q_U,Q_F,fib,fias,froth1,froth2,froth3,feasible,z_fr" {
                return Err(Error::InvalidScenario {
                    reason: "unexpected chart CSV header".into(),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 9 {
            return Err(bad(line));
        }
        let parse_f = |s: &str| -> Result<f64> {
            match s {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                _ => s.parse().map_err(|_| bad(line)),
            }
        };
        let parse_b = |s: &str| -> Result<bool> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad(line)),
            }
        };
        rows.push(ChartCsvRow {
            q_u: parse_f(parts[0])?,
            q_f: parse_f(parts[1])?,
            fib: parse_b(parts[2])?,
            fias: parse_b(parts[3])?,
            froth1: parse_b(parts[4])?,
            froth2: parse_b(parts[5])?,
            froth3: parse_b(parts[6])?,
            feasible: parse_b(parts[7])?,
            z_fr: parse_f(parts[8])?,
        });
    }
    Ok(rows)
}

/// Write chart CSV + SVG heatmap to `dir` as `chart.csv` and `chart.svg`.
pub fn export_chart(result: &ChartResult, dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("chart.csv"), chart_csv(result))?;
    std::fs::write(dir.join("chart.svg"), crate::export::chart_svg(result))?;
    Ok(())
}
