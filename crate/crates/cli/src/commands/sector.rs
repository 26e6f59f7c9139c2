use robin_spectra::sector::{ground_state, sector_spectrum_with, SectorOptions};
use serde_json::json;

use super::Ctx;
use crate::error::CliError;
use crate::report::{num, Report, Table};
use crate::SectorArgs;

pub fn run(mut ctx: Ctx, a: &SectorArgs) -> Result<Report, CliError> {
    let s = &mut ctx.settings;
    let alpha = s.real("alpha", a.alpha.as_deref(), None)?;
    let tol = s.real("tol", a.tol.as_deref(), Some(1e-6))?;
    let levels = s.integer("levels", a.levels, 2)?;
    let opts = SectorOptions { levels: u32::try_from(levels).unwrap_or(u32::MAX), ..SectorOptions::default() };
    let spectrum = sector_spectrum_with(alpha, tol, &opts)?;

    let mut table = Table::new(&["n", "eigenvalue", "truncation_error", "fem_error", "uncertainty"]);
    for (i, e) in spectrum.eigenvalues.iter().enumerate() {
        table.push(vec![
            (i + 1).to_string(),
            num(*e),
            num(spectrum.truncation_error_estimate[i]),
            num(spectrum.fem_error_estimate[i]),
            num(spectrum.uncertainty(i)),
        ]);
    }
    let mut report = ctx.report()?;
    report.write_csv("sector.csv", &table)?;
    report.write_json(
        "sector.json",
        json!({
            "alpha": spectrum.alpha,
            "count": spectrum.count,
            "eigenvalues": spectrum.eigenvalues,
            "ground_state_closed_form": (spectrum.count > 0).then(|| ground_state(alpha)),
            "truncation_radius": spectrum.truncation_radius,
            "truncation_error_estimate": spectrum.truncation_error_estimate,
            "fem_error_estimate": spectrum.fem_error_estimate,
            "mesh_nodes": spectrum.mesh_nodes,
            "tol": spectrum.tol,
            "options": spectrum.options,
        }),
    )?;
    Ok(report)
}
