use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::ser::{Serialize, SerializeMap, Serializer};
use skillscore::reference::SkillReport;

use crate::Failure;

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::data(format!("cannot write {}: {e}", p.display()))),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn write_all(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::data(format!("write failed: {e}")))
}

pub fn number(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NaN".to_string()
    }
}

fn percent(v: f64) -> String {
    format!("{:.2} %", 100.0 * v)
}

pub fn text_report(name: &str, r: &SkillReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "forecast `{name}`: n = {}, reference n = {}, horizon = {}",
        r.n, r.n_reference, r.horizon_h
    );
    let rows: [(&str, String); 15] = [
        ("rho", format!("{:.6}", r.rho)),
        ("gamma(h)", format!("{:.6}", r.gamma_h)),
        ("sigma(x)", format!("{:.6}", r.sigma_x)),
        ("RMSE", format!("{:.6}", r.rmse_f)),
        ("MAE", format!("{:.6}", r.mae_f)),
        ("nRMSE", format!("{:.6}", r.nrmse)),
        ("nMAE", format!("{:.6}", r.nmae)),
        ("RMSE CLIPER", format!("{:.6}", r.rmse_cliper)),
        ("MAE CLIPER", format!("{:.6}", r.mae_cliper)),
        ("RMSE skill", percent(r.s_rmse_actual)),
        ("MAE skill", percent(r.s_mae_actual)),
        ("potential RMSE skill", percent(r.s_rmse_potential)),
        ("potential MSE skill", percent(r.s_mse_potential)),
        ("MASE", format!("{:.6}", r.mase)),
        (
            "warnings",
            if r.warnings.is_empty() {
                "none".to_string()
            } else {
                r.warnings
                    .iter()
                    .map(|w| w.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            },
        ),
    ];
    for (label, value) in rows {
        let _ = writeln!(s, "  {label:<22}{value}");
    }
    s
}

struct Keyed<'a>(&'a [(String, SkillReport)]);

impl Serialize for Keyed<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (name, report) in self.0 {
            map.serialize_entry(name, report)?;
        }
        map.end()
    }
}

/// One report serializes as a bare object, several as an object keyed by column.
pub fn json_reports(reports: &[(String, SkillReport)]) -> String {
    let mut s = match reports {
        [(_, only)] => serde_json::to_string_pretty(only),
        many => serde_json::to_string_pretty(&Keyed(many)),
    }
    .expect("reports serialize");
    s.push('\n');
    s
}

pub const CSV_COLUMNS: [&str; 18] = [
    "name",
    "n",
    "horizon_h",
    "rho",
    "gamma_h",
    "sigma_x",
    "rmse_f",
    "mae_f",
    "nmae",
    "nrmse",
    "rmse_cliper",
    "mae_cliper",
    "s_rmse_actual",
    "s_mae_actual",
    "s_rmse_potential",
    "s_mse_potential",
    "mase",
    "warnings",
];

pub fn csv_reports(reports: &[(String, SkillReport)]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::data(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(fail)?;
    for (name, r) in reports {
        let warnings: Vec<&str> = r.warnings.iter().map(|w| w.as_str()).collect();
        w.write_record([
            name.clone(),
            r.n.to_string(),
            r.horizon_h.to_string(),
            number(r.rho),
            number(r.gamma_h),
            number(r.sigma_x),
            number(r.rmse_f),
            number(r.mae_f),
            number(r.nmae),
            number(r.nrmse),
            number(r.rmse_cliper),
            number(r.mae_cliper),
            number(r.s_rmse_actual),
            number(r.s_mae_actual),
            number(r.s_rmse_potential),
            number(r.s_mse_potential),
            number(r.mase),
            warnings.join(";"),
        ])
        .map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
