use std::fs::File;
use std::io::Write;

use skillscore::calibration::{fit, LinearCalibration};
use skillscore::ensemble::{evaluate_ensemble, render_svg, write_csv};
use skillscore::metrics::{lag_autocorrelation, pearson};
use skillscore::reference::{ReferenceStats, SkillReport};
use skillscore::series::{ingest_csv, pair, parse_cell, Ingested};
use skillscore::synth::{gen_ensemble, SynthSpec};

use crate::output::{self, number};
use crate::{CalibrateArgs, EnsembleArgs, Failure, Format, InputArgs, ScoreArgs, SynthArgs};

fn context(what: &str) -> impl Fn(skillscore::Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{what}: {}", f.message);
        f
    }
}

fn load(args: &InputArgs) -> Result<Ingested, Failure> {
    let ingested = ingest_csv(&args.input, &args.obs_col, &args.fcst_cols, args.qc_min_obs)?;
    if ingested.forecasts.is_empty() {
        return Err(Failure::data("no forecast columns selected"));
    }
    Ok(ingested)
}

pub fn run_score(args: &ScoreArgs) -> Result<(), Failure> {
    let data = load(&args.input)?;
    let h = args.input.horizon as usize;
    let reference =
        ReferenceStats::new(&data.observations, h).map_err(context("reference forecast"))?;
    let mut reports: Vec<(String, SkillReport)> = Vec::with_capacity(data.forecasts.len());
    for fcst in &data.forecasts {
        let label = format!("column `{}`", fcst.name);
        let p = pair(&data.observations, fcst).map_err(context(&label))?;
        let report = reference
            .score(&p, args.input.normalize)
            .map_err(context(&label))?;
        reports.push((fcst.name.clone(), report));
    }
    let text = match args.format {
        Format::Text => reports
            .iter()
            .map(|(name, r)| output::text_report(name, r))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => output::json_reports(&reports),
        Format::Csv => output::csv_reports(&reports)?,
    };
    output::write_all(&mut output::open(args.out.as_deref())?, &text)
}

pub fn run_calibrate(args: &CalibrateArgs) -> Result<(), Failure> {
    let data = load(&args.input)?;
    let mut fits: Vec<(String, LinearCalibration)> = Vec::new();
    for fcst in &data.forecasts {
        let label = format!("column `{}`", fcst.name);
        let p = pair(&data.observations, fcst).map_err(context(&label))?;
        fits.push((
            fcst.name.clone(),
            fit(args.scheme, &p).map_err(context(&label))?,
        ));
    }

    let file = File::open(&args.input.input)
        .map_err(|e| Failure::data(format!("cannot read {}: {e}", args.input.input.display())))?;
    let mut rdr = csv::Reader::from_reader(file);
    let csv_fail = |e: csv::Error| Failure::data(e.to_string());
    let headers = rdr.headers().map_err(csv_fail)?.clone();
    let trimmed: Vec<&str> = headers.iter().map(str::trim).collect();
    let mut columns = Vec::with_capacity(fits.len());
    for (name, cal) in &fits {
        let idx = trimmed
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Failure::data(format!("column `{name}` not found")))?;
        let new_name = format!("{name}_cal_{}", args.scheme);
        if trimmed.contains(&new_name.as_str()) {
            return Err(Failure::data(format!("column `{new_name}` already exists")));
        }
        columns.push((idx, new_name, cal));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header_out: Vec<String> = headers.iter().map(String::from).collect();
    header_out.extend(columns.iter().map(|c| c.1.clone()));
    w.write_record(&header_out).map_err(csv_fail)?;
    for record in rdr.records() {
        let record = record.map_err(csv_fail)?;
        let mut row: Vec<String> = record.iter().map(String::from).collect();
        for (idx, _, cal) in &columns {
            let cell = record.get(*idx).unwrap_or("");
            row.push(match parse_cell(cell) {
                Ok(Some(v)) => number(cal.apply_one(v)),
                _ => String::new(),
            });
        }
        w.write_record(&row).map_err(csv_fail)?;
    }
    let table = String::from_utf8(w.into_inner().map_err(|e| Failure::data(e.to_string()))?)
        .expect("csv output is utf-8");
    output::write_all(&mut output::open(args.out.as_deref())?, &table)?;

    let report = match args.format {
        Format::Json => {
            let items: Vec<serde_json::Value> = fits
                .iter()
                .map(|(name, c)| {
                    serde_json::json!({
                        "column": name,
                        "intercept_a": c.intercept,
                        "gain_b": c.gain,
                        "scheme": c.scheme,
                        "fit_n": c.fit_n,
                        "converged": c.converged,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&items).expect("coefficients serialize");
            s.push('\n');
            s
        }
        Format::Text | Format::Csv => {
            let mut s = String::from("column,a,b,scheme,fit_n\n");
            for (name, c) in &fits {
                s.push_str(&format!(
                    "{name},{},{},{},{}\n",
                    number(c.intercept),
                    number(c.gain),
                    c.scheme,
                    c.fit_n
                ));
                if !c.converged {
                    eprintln!(
                        "warning: LAD iterations for `{name}` did not converge, best iterate kept"
                    );
                }
            }
            s
        }
    };
    // The table owns stdout unless it went to a file.
    if args.out.is_some() {
        output::write_all(&mut std::io::stdout().lock(), &report)
    } else {
        eprint!("{report}");
        Ok(())
    }
}

pub fn run_ensemble(args: &EnsembleArgs) -> Result<(), Failure> {
    let data = load(&args.input)?;
    let rows = evaluate_ensemble(
        &data.observations,
        &data.forecasts,
        args.input.horizon as usize,
        args.input.normalize,
    )?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    let mut out = output::open(args.out.as_deref())?;
    out.write_all(&buf)
        .and_then(|_| out.flush())
        .map_err(|e| Failure::data(format!("write failed: {e}")))?;
    if let Some(svg) = &args.svg {
        let mut f = output::open(Some(svg))?;
        output::write_all(&mut f, &render_svg(&rows))?;
    }

    for r in rows.iter().filter(|r| r.flag.is_some()) {
        eprintln!("warning: `{}`: {}", r.name, r.flag.as_deref().unwrap_or(""));
    }
    let arg_best = |key: fn(&skillscore::ensemble::EnsembleRow) -> f64, lowest: bool| {
        rows.iter()
            .filter(|r| key(r).is_finite())
            .min_by(|a, b| {
                let ord = key(a).total_cmp(&key(b));
                if lowest {
                    ord
                } else {
                    ord.reverse()
                }
            })
            .map(|r| r.name.as_str())
            .unwrap_or("-")
    };
    eprintln!(
        "front: {} of {}; min nMAE: {}; min nRMSE: {}; max potential skill: {}",
        rows.iter().filter(|r| r.on_front).count(),
        rows.len(),
        arg_best(|r| r.nmae, true),
        arg_best(|r| r.nrmse, true),
        arg_best(|r| r.s_rmse_potential, false),
    );
    Ok(())
}

pub fn run_synth(args: &SynthArgs) -> Result<(), Failure> {
    let spec = SynthSpec {
        n: args.n,
        phi: args.phi,
        mu: args.mu,
        sigma: args.sigma,
        rho_target: args.rho_target,
        bias: args.bias,
        gain: args.gain,
        seed: args.seed,
    };
    let (obs, fcst) = spec.generate()?;
    let members = match args.members {
        0 => Vec::new(),
        k => gen_ensemble(&obs, &fcst, k, args.seed)?,
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_fail = |e: csv::Error| Failure::data(e.to_string());
    let mut header = vec!["time".to_string(), "obs".to_string(), fcst.name.clone()];
    header.extend(members.iter().map(|m| m.name.clone()));
    w.write_record(&header).map_err(csv_fail)?;
    for t in 0..obs.len() {
        let mut row = vec![
            t.to_string(),
            number(obs.values()[t]),
            number(fcst.values[t]),
        ];
        row.extend(members.iter().map(|m| number(m.values[t])));
        w.write_record(&row).map_err(csv_fail)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Failure::data(e.to_string()))?)
        .expect("csv output is utf-8");
    output::write_all(&mut output::open(args.out.as_deref())?, &text)?;

    let gamma = lag_autocorrelation(&obs, 1)?;
    let rho = pearson(&pair(&obs, &fcst)?)?;
    eprintln!("sample gamma(1) = {gamma:.4}, sample rho = {rho:.4}");
    if rho < 0.0 {
        eprintln!("warning: sample rho is negative (gain = {})", args.gain);
    }
    Ok(())
}
