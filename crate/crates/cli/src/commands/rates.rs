use robin_spectra::eig::solve_lowest_with;
use robin_spectra::fem::{assemble, Order};
use robin_spectra::fit::{exponential_fit, power_fit};
use robin_spectra::quasimode::resolved_mesh;
use serde_json::json;

use super::Ctx;
use crate::error::CliError;
use crate::report::{num, Report, Table};
use crate::RatesArgs;

pub fn run(mut ctx: Ctx, a: &RatesArgs) -> Result<Report, CliError> {
    let poly = ctx.polygon(a.polygon.as_deref())?;
    let gammas = ctx.gammas(a.gammas.as_deref(), &[4.0, 5.0, 6.0, 7.0])?;
    if gammas.len() < 3 {
        return Err(CliError::Usage("need ≥ 3 sweep points".into()));
    }
    let model = ctx.model_sum(&poly, a.levels)?;
    if model.n_total == 0 {
        return Err(CliError::Usage("no convex vertex: the model sum is empty, there is no deviation to fit".into()));
    }
    let targets = model.eigenvalues();

    let mut table = Table::new(&["gamma", "n", "e_fem", "model", "deviation"]);
    let mut worst = Vec::with_capacity(gammas.len());
    for &g in &gammas {
        let pencil = assemble::<f64>(&resolved_mesh(&poly, g)?, Order::P2)?;
        let fem = solve_lowest_with(&pencil, g, targets.len(), 1e-10, &ctx.solver())?;
        let mut max = 0.0f64;
        for (i, (&e, &t)) in fem.eigenvalues.iter().zip(&targets).enumerate() {
            let d = e - g * g * t;
            max = max.max(d.abs());
            table.push(vec![num(g), (i + 1).to_string(), num(e), num(g * g * t), num(d)]);
        }
        worst.push(max);
    }

    let (law, fit) = if poly.is_straight() {
        ("exponential", exponential_fit(&gammas, &worst)?)
    } else {
        ("power", power_fit(&gammas, &worst)?)
    };
    let mut summary = Table::new(&["law", "slope", "intercept", "r_squared"]);
    summary.push(vec![law.to_string(), num(fit.slope), num(fit.intercept), num(fit.r_squared)]);

    let mut report = ctx.report()?;
    report.write_csv("rates.csv", &table)?;
    report.write_csv("rates_fit.csv", &summary)?;
    report.write_json(
        "rates.json",
        json!({
            "law": law,
            "gammas": gammas,
            "max_deviation": worst,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
        }),
    )?;
    Ok(report)
}
