use robin_spectra::eig::solve_lowest_with;
use robin_spectra::fem::{assemble, Order};
use robin_spectra::quasimode::{build_quasimode, certify, resolved_mesh, CutoffRule, DEFAULT_BETA};
use serde_json::{json, Value};

use super::Ctx;
use crate::error::CliError;
use crate::report::{num, Report, Table};
use crate::CornersArgs;

const HEADER: [&str; 10] =
    ["gamma", "n", "e_fem", "model", "deviation", "cluster", "cert_lo", "cert_hi", "verified_count", "mesh_nodes"];

pub fn run(mut ctx: Ctx, a: &CornersArgs) -> Result<Report, CliError> {
    let poly = ctx.polygon(a.polygon.as_deref())?;
    let gammas = ctx.gammas(a.gammas.as_deref(), &[10.0])?;
    let beta = ctx.settings.real("beta", a.beta.as_deref(), Some(DEFAULT_BETA))?;
    let model = ctx.model_sum(&poly, a.levels)?;
    let mut table = Table::new(&HEADER);
    let mut report = ctx.report()?;

    if model.n_total == 0 {
        let note = "no convex vertex: the model sum is empty, skipping the corner comparison";
        eprintln!("note: {note}");
        report.write_csv("corners.csv", &table)?;
        report.write_json("certificates.json", json!({ "note": note, "sweep": [] }))?;
        return Ok(report);
    }

    let rule = CutoffRule::for_polygon(&poly, beta);
    let mut clusters = model.clusters.clone();
    clusters.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut sweep = Vec::new();
    for &g in &gammas {
        let mesh = resolved_mesh(&poly, g)?;
        let pencil = assemble::<f64>(&mesh, Order::P2)?;
        let fem = solve_lowest_with(&pencil, g, model.n_total, 1e-10, &ctx.solver())?;
        let mut certs = Vec::new();
        let mut n = 0;
        for (ci, c) in clusters.iter().enumerate() {
            let cert = c
                .members
                .iter()
                .map(|&(k, v)| build_quasimode(&poly, &pencil.dofs, &model, v, k, g, rule))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|qms| certify(&qms, &pencil, g));
            let (lo, hi, verified) = match &cert {
                Ok(c) => {
                    let (lo, hi) = c.interval();
                    (num(lo), num(hi), c.verified_count.to_string())
                }
                Err(_) => Default::default(),
            };
            for _ in 0..c.multiplicity {
                let e = fem.eigenvalues[n];
                let target = g * g * c.lambda;
                n += 1;
                table.push(vec![
                    num(g),
                    n.to_string(),
                    num(e),
                    num(target),
                    num(e - target),
                    (ci + 1).to_string(),
                    lo.clone(),
                    hi.clone(),
                    verified.clone(),
                    mesh.num_nodes().to_string(),
                ]);
            }
            certs.push(match cert {
                Ok(c) => json!({ "cluster": ci + 1, "interval": c.interval(), "certificate": c }),
                Err(e) => json!({ "cluster": ci + 1, "error": e.to_string() }),
            });
        }
        sweep.push(json!({ "gamma": g, "certificates": Value::Array(certs) }));
    }
    report.write_csv("corners.csv", &table)?;
    report.write_json(
        "certificates.json",
        json!({ "model_eigenvalues": model.eigenvalues(), "cutoff": rule, "sweep": sweep }),
    )?;
    Ok(report)
}
