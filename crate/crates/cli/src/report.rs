//! Text tables and CSV rows for command output.

use sicreg::simlab::{CellReport, StudyReport};
use sicreg::{Component, FitMode, FitTrace};

use crate::csvio::{fmt6, fmt_opt};
use crate::modelfile::{term_name, ModelFile};

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Coefficient table with estimate, SE and BIC delta per component.
pub fn fit_table(m: &ModelFile) -> String {
    let mut rows = vec![vec![
        "term".to_string(),
        "location".into(),
        "SE".into(),
        "dBIC".into(),
        "dispersion".into(),
        "SE".into(),
        "dBIC".into(),
    ]];
    let find = |c: Component, j: usize| &m.coefficients[if c == Component::Location { j } else { m.location.len() + j }];
    for j in 0..m.location.len() {
        let mut row = vec![term_name(&m.predictors, j).to_owned()];
        for c in Component::BOTH {
            let r = find(c, j);
            if m.method == FitMode::Spr && c == Component::Dispersion && j > 0 {
                row.extend(["absent".into(), String::new(), String::new()]);
            } else if r.active {
                row.extend([fmt6(r.estimate), fmt_opt(r.se), fmt_opt(r.delta_bic)]);
            } else {
                row.extend([".".into(), String::new(), String::new()]);
            }
        }
        rows.push(row);
    }
    format!(
        "{}  n = {}  BIC = {}{}\n{}",
        m.method.label(),
        m.n,
        fmt6(m.bic),
        if m.converged { "" } else { "  (final step did not converge)" },
        pad_table(&rows)
    )
}

pub const PATH_HEADERS: [&str; 5] = ["step", "epsilon", "component", "term", "value"];

/// Standardized coefficients per telescope step, intercepts excluded.
pub fn path_rows(trace: &FitTrace, predictors: &[String]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (t, rec) in trace.per_step.iter().enumerate() {
        for c in Component::BOTH {
            for (j, v) in rec.theta.component(c).iter().enumerate().skip(1) {
                rows.push(vec![
                    (t + 1).to_string(),
                    fmt6(rec.eps),
                    c.name().into(),
                    predictors[j - 1].clone(),
                    fmt6(*v),
                ]);
            }
        }
    }
    rows
}

pub const STUDY_HEADERS: [&str; 13] = [
    "n", "method", "component", "term", "C", "IC", "PT", "MSE", "est", "SE", "SEE", "CP", "PCP",
];

fn blanks(k: usize) -> Vec<String> {
    vec![String::new(); k]
}

fn coef_name(j: usize) -> String {
    format!("X{j}")
}

/// Long-format study table: one summary row per component, one row per
/// coefficient and one row per coverage group.
pub fn study_rows(report: &StudyReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for cell in &report.cells {
        let key = |component: &str, term: String| vec![cell.n.to_string(), cell.method.label().to_owned(), component.to_owned(), term];
        for c in Component::BOTH {
            let m = cell.component(c);
            let mut r = key(c.name(), "all".into());
            r.extend([fmt6(m.c), fmt6(m.ic), fmt6(m.pt), fmt6(m.mse)]);
            r.extend(blanks(5));
            rows.push(r);
        }
        let mut r = key("both", "all".into());
        r.extend([String::new(), String::new(), fmt6(cell.pt_joint)]);
        r.extend(blanks(6));
        rows.push(r);
        for m in &cell.coefficients {
            let mut r = key(m.component.name(), coef_name(m.index));
            r.extend(blanks(4));
            r.extend([fmt6(m.est), fmt6(m.se), fmt_opt(m.see), fmt6(m.cp), String::new()]);
            rows.push(r);
        }
        for (group, v) in [
            ("overall", Some(cell.pcp.overall)),
            ("low", cell.pcp.low),
            ("medium", cell.pcp.medium),
            ("high", cell.pcp.high),
        ] {
            let mut r = key("prediction", group.into());
            r.extend(blanks(8));
            r.push(fmt_opt(v));
            rows.push(r);
        }
    }
    rows
}

fn cell_text(cell: &CellReport) -> String {
    let mut out = format!(
        "n = {}  {}  ({} replicates, {} failed, {} s per fit)\n",
        cell.n,
        cell.method.label(),
        cell.replicates,
        cell.failures,
        fmt6(cell.mean_seconds)
    );
    let mut sel = vec![vec!["".to_string(), "C".into(), "IC".into(), "PT".into(), "MSE".into()]];
    for c in Component::BOTH {
        let m = cell.component(c);
        sel.push(vec![c.name().into(), fmt6(m.c), fmt6(m.ic), fmt6(m.pt), fmt6(m.mse)]);
    }
    sel.push(vec!["both".into(), String::new(), String::new(), fmt6(cell.pt_joint), String::new()]);
    out.push_str(&pad_table(&sel));

    let mut coef = vec![vec![
        "".to_string(),
        "true".into(),
        "est".into(),
        "SE".into(),
        "SEE".into(),
        "CP".into(),
    ]];
    for m in cell.coefficients.iter().filter(|m| m.truth != 0.0) {
        let sym = if m.component == Component::Location { "beta" } else { "alpha" };
        coef.push(vec![
            format!("{sym}{}", m.index),
            fmt6(m.truth),
            fmt6(m.est),
            fmt6(m.se),
            fmt_opt(m.see),
            fmt6(m.cp),
        ]);
    }
    out.push_str(&pad_table(&coef));
    out.push_str(&pad_table(&[
        vec!["PCP".into(), "low".into(), "medium".into(), "high".into(), "overall".into()],
        vec![
            String::new(),
            fmt_opt(cell.pcp.low),
            fmt_opt(cell.pcp.medium),
            fmt_opt(cell.pcp.high),
            fmt6(cell.pcp.overall),
        ],
    ]));
    out
}

pub fn study_text(report: &StudyReport) -> String {
    let mut out = format!(
        "scenario {}  sigma groups: low <= {}, high > {}\n",
        report.scenario,
        fmt6(report.sigma_thresholds.0),
        fmt6(report.sigma_thresholds.1)
    );
    for cell in &report.cells {
        out.push('\n');
        out.push_str(&cell_text(cell));
    }
    out
}
