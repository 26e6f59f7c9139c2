use robin_spectra::model1d::{fd_oracle_1d, Kind, Secular1D};
use serde_json::json;

use super::Ctx;
use crate::error::CliError;
use crate::report::{num, opt, Report, Table};
use crate::Model1dArgs;

/// Leading terms `−γ² ± 4γ²e^{−2γl}` of the single negative eigenvalue.
fn expansion(op: &Secular1D<f64>) -> Option<f64> {
    let tail = 4.0 * op.gamma * op.gamma * (-2.0 * op.gamma * op.l).exp();
    match op.kind {
        Kind::RobinDirichlet => Some(-op.gamma * op.gamma + tail),
        Kind::RobinNeumann => Some(-op.gamma * op.gamma - tail),
        _ => None,
    }
}

/// `(−γ² − 123γ²e^{−2γl}, −γ²)`, valid for `γ > 2β` and `γl > 1`.
fn bracket(op: &Secular1D<f64>) -> Option<(f64, f64)> {
    let g2 = op.gamma * op.gamma;
    (op.kind == Kind::RobinRobin && op.gamma > 2.0 * op.beta && op.gamma * op.l > 1.0)
        .then(|| (-g2 - 123.0 * g2 * (-2.0 * op.gamma * op.l).exp(), -g2))
}

pub fn run(mut ctx: Ctx, a: &Model1dArgs) -> Result<Report, CliError> {
    let s = &mut ctx.settings;
    let kind = s.text("kind", a.kind.as_deref(), None)?;
    let gamma = s.real("gamma", a.gamma.as_deref(), None)?;
    let l = s.real("length", a.length.as_deref(), Some(1.0))?;
    let op = match kind.as_str() {
        "dirichlet" => Secular1D::robin_dirichlet(gamma, l),
        "robin" => Secular1D::robin_robin(gamma, s.real("beta", a.beta.as_deref(), Some(0.0))?, l),
        "neumann" => Secular1D::robin_neumann(gamma, l),
        "symmetric" => Secular1D::robin_symmetric(gamma, l),
        other => {
            return Err(CliError::Usage(format!(
                "unknown kind '{other}', expected dirichlet, robin, neumann or symmetric"
            )))
        }
    };
    let grid = s.integer("grid", a.grid, 4000)?;
    op.validate()?;
    let roots = op.negative_eigenvalues();
    let fd = fd_oracle_1d(&op, usize::try_from(grid).unwrap_or(usize::MAX))?;

    let mut table = Table::new(&["n", "secular", "fd", "difference", "expansion", "bracket_lo", "bracket_hi"]);
    for (i, &e) in roots.iter().enumerate() {
        let first = i == 0;
        let br = bracket(&op).filter(|_| first);
        table.push(vec![
            (i + 1).to_string(),
            num(e),
            num(fd[i]),
            num(e - fd[i]),
            opt(expansion(&op).filter(|_| first)),
            opt(br.map(|b| b.0)),
            opt(br.map(|b| b.1)),
        ]);
    }
    let mut report = ctx.report()?;
    report.write_csv("model1d.csv", &table)?;
    report.write_json(
        "model1d.json",
        json!({
            "kind": kind,
            "negative_eigenvalues": roots,
            "fd_lowest": fd,
            "bracket_holds": bracket(&op).zip(roots.first()).map(|((lo, hi), &e)| lo < e && e < hi),
        }),
    )?;
    Ok(report)
}
