use robin_spectra::weyl::{tail_bracket, weyl_bulk, weyl_edge, WeylPolicy, WeylReport};
use serde_json::json;

use super::Ctx;
use crate::error::CliError;
use crate::report::{num, Report, Table};
use crate::WeylArgs;

pub fn run(mut ctx: Ctx, a: &WeylArgs) -> Result<Report, CliError> {
    let poly = ctx.polygon(a.polygon.as_deref())?;
    let regime = ctx.settings.text("regime", a.regime.as_deref(), None)?;
    let default_gammas: &[f64] = match regime.as_str() {
        "bulk" | "tail" => &[10.0, 20.0, 40.0],
        "edge" => &[25.0, 50.0, 100.0],
        other => return Err(CliError::Usage(format!("unknown regime '{other}', expected bulk, edge or tail"))),
    };
    let param = ctx.settings.real("param", a.param.as_deref(), if regime == "tail" { Some(1.0) } else { None })?;
    let gammas = ctx.gammas(a.gammas.as_deref(), default_gammas)?;
    let cap = ctx.settings.integer("node_cap", a.node_cap, WeylPolicy::default().node_cap as u64)?;
    let policy = WeylPolicy { node_cap: usize::try_from(cap).unwrap_or(usize::MAX), ..WeylPolicy::default() };
    policy.validate()?;

    if regime == "tail" {
        if param < 1.0 || param.fract() != 0.0 {
            return Err(CliError::Usage(format!("tail index must be a positive integer, got {param}")));
        }
        let r = tail_bracket(&poly, param as usize, &gammas, &policy)?;
        let mut table = Table::new(&["j", "gamma", "eigenvalue", "ratio", "mesh_nodes"]);
        for p in &r.sweep {
            table.push(vec![r.j.to_string(), num(p.gamma), num(p.eigenvalue), num(p.ratio), p.mesh_nodes.to_string()]);
        }
        let mut report = ctx.report()?;
        report.write_csv("tail.csv", &table)?;
        report.write_json("tail.json", serde_json::to_value(&r)?)?;
        return Ok(report);
    }

    let r = match regime.as_str() {
        "bulk" => weyl_bulk(&poly, param, &gammas, &policy)?,
        _ => weyl_edge(&poly, param, &gammas, &policy)?,
    };
    let header: Vec<&'static str> = WeylReport::CSV_HEADER.split(',').collect();
    let mut table = Table::new(&header);
    for p in &r.sweep {
        table.push(vec![
            r.regime.name().to_string(),
            num(p.gamma),
            num(p.threshold),
            p.count.to_string(),
            num(p.prediction),
            num(p.deviation),
            p.mesh_nodes.to_string(),
            p.stabilized.to_string(),
        ]);
    }
    let mut report = ctx.report()?;
    report.write_csv("weyl.csv", &table)?;
    report.write_json(
        "weyl.json",
        json!({ "report": r, "fitted_exponent": r.fitted_exponent, "all_stabilized": r.all_stabilized() }),
    )?;
    Ok(report)
}
