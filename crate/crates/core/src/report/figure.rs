use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PipelineRun, ReportError};
use crate::cluster::{CrossTab, Partition, ProfileTable, AVG_BIRTH_YEAR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub group: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    /// Drives the marker colour.
    pub color_cluster: usize,
    /// Printed next to the marker.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPanel {
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub points: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Data {
    /// North America share vs average birth year; colour = mission cluster,
    /// letter = diversity cluster.
    pub panel_a: ScatterPanel,
    /// Average birth year min-max scaled to [0, 1], per group, as used for
    /// the mission distance.
    pub panel_a_scaled_year: Vec<(String, Option<f64>)>,
    /// Women share vs White share; colour = diversity cluster, number =
    /// mission cluster.
    pub panel_b: ScatterPanel,
    /// Mission clusters by diversity clusters.
    pub panel_c: CrossTab,
}

/// Diversity clusters are lettered A, B, ...
pub fn cluster_letter(n: usize) -> String {
    let mut n = n;
    let mut s = Vec::new();
    while n > 0 {
        n -= 1;
        s.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    s.reverse();
    String::from_utf8(s).expect("ascii")
}

fn value(profiles: &ProfileTable, group: &str, name: &str) -> Option<f64> {
    profiles
        .rows
        .iter()
        .find(|r| r.group == group)
        .and_then(|r| r.values.get(name).copied())
}

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

pub fn emit_fig2_data(run: &PipelineRun) -> Result<Fig2Data, ReportError> {
    let clusters = run.clusters.as_ref().ok_or(ReportError::StageMissing("cluster"))?;
    let profiles = run.profiles.as_ref().ok_or(ReportError::StageMissing("cluster"))?;
    Ok(fig2_from(profiles, &clusters.mission_partition, &clusters.diversity_partition, &clusters.cross_tab))
}

/// Figure data from profiles and the two partitions.
pub fn fig2_from(profiles: &ProfileTable, mission: &Partition, diversity: &Partition, cross: &CrossTab) -> Fig2Data {
    let groups: Vec<&String> = mission.assignment.keys().collect();
    let years: Vec<(String, Option<f64>)> = groups
        .iter()
        .map(|g| (g.to_string(), value(profiles, g, AVG_BIRTH_YEAR)))
        .collect();
    let year_span = span(years.iter().filter_map(|(_, y)| *y));
    let scaled = years
        .iter()
        .map(|(g, y)| {
            let s = match (y, year_span) {
                (Some(y), Some((lo, hi))) if hi > lo => Some((y - lo) / (hi - lo)),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            };
            (g.clone(), s)
        })
        .collect();
    let unit = |v: Option<f64>| v.map(|x| x.clamp(0.0, 1.0));
    let panel_a = ScatterPanel {
        x_label: "north_america".into(),
        y_label: AVG_BIRTH_YEAR.into(),
        x_range: (0.0, 1.0),
        y_range: year_span.unwrap_or((0.0, 1.0)),
        points: groups
            .iter()
            .map(|g| ScatterPoint {
                group: g.to_string(),
                x: unit(value(profiles, g, "north_america")),
                y: value(profiles, g, AVG_BIRTH_YEAR),
                color_cluster: mission.assignment[*g],
                label: diversity.assignment.get(*g).map(|c| cluster_letter(*c)).unwrap_or_default(),
            })
            .collect(),
    };
    let panel_b = ScatterPanel {
        x_label: "women".into(),
        y_label: "white".into(),
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        points: groups
            .iter()
            .map(|g| ScatterPoint {
                group: g.to_string(),
                x: unit(value(profiles, g, "women")),
                y: unit(value(profiles, g, "white")),
                color_cluster: diversity.assignment.get(*g).copied().unwrap_or(0),
                label: mission.assignment[*g].to_string(),
            })
            .collect(),
    };
    Fig2Data {
        panel_a,
        panel_a_scaled_year: scaled,
        panel_b,
        panel_c: cross.clone(),
    }
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel_svg(out: &mut String, panel: &ScatterPanel, left: f64, title: &str) {
    let (size, pad) = (360.0, 40.0);
    let (x0, y0) = (left + pad, pad);
    let plot = size - 2.0 * pad;
    let sx = |x: f64| {
        let (lo, hi) = panel.x_range;
        x0 + if hi > lo { (x - lo) / (hi - lo) * plot } else { 0.0 }
    };
    let sy = |y: f64| {
        let (lo, hi) = panel.y_range;
        y0 + plot - if hi > lo { (y - lo) / (hi - lo) * plot } else { 0.0 }
    };
    let _ = writeln!(out, r#"<text x="{:.1}" y="20" font-size="14">{}</text>"#, x0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.1}" y="{y0:.1}" width="{plot:.1}" height="{plot:.1}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
        x0 + plot / 2.0 - 30.0,
        y0 + plot + 30.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        left + 12.0,
        y0 + plot / 2.0 + 30.0,
        left + 12.0,
        y0 + plot / 2.0 + 30.0,
        escape(&panel.y_label)
    );
    for (v, anchor_x, anchor_y) in [
        (panel.x_range.0, x0, y0 + plot + 14.0),
        (panel.x_range.1, x0 + plot - 20.0, y0 + plot + 14.0),
    ] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.1}" y="{anchor_y:.1}" font-size="9">{v:.2}</text>"#);
    }
    for (v, anchor_y) in [(panel.y_range.0, y0 + plot), (panel.y_range.1, y0 + 8.0)] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{anchor_y:.1}" font-size="9">{v:.0}</text>"#, left + 22.0);
    }
    for p in &panel.points {
        if let (Some(x), Some(y)) = (p.x, p.y) {
            let colour = PALETTE[p.color_cluster.saturating_sub(1) % PALETTE.len()];
            let (cx, cy) = (sx(x), sy(y));
            let _ = writeln!(out, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="4" fill="{colour}"/>"#);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="9">{} {}</text>"#,
                cx + 5.0,
                cy - 5.0,
                escape(&p.group),
                escape(&p.label)
            );
        }
    }
}

impl Fig2Data {
    /// Minimal two-panel scatter: axes, points, labels.
    pub fn to_svg(&self) -> String {
        let mut out = String::from(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"380\" font-family=\"sans-serif\">\n",
        );
        panel_svg(&mut out, &self.panel_a, 0.0, "A: mission");
        panel_svg(&mut out, &self.panel_b, 360.0, "B: diversity");
        out.push_str("</svg>\n");
        out
    }
}
