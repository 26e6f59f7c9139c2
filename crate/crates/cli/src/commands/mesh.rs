use robin_spectra::eig::solve_lowest_with;
use robin_spectra::fem::{assemble, Order};
use robin_spectra::mesh::{export_mesh, import_mesh, mesh_polygon, BoundaryTag, GradingPolicy, TriMesh};
use robin_spectra::quasimode::resolved_mesh;
use serde_json::{json, Value};

use super::Ctx;
use crate::error::CliError;
use crate::report::{num, Report, Table};
use crate::{MeshExportArgs, MeshImportArgs, MeshInspectArgs};

fn stats(mesh: &TriMesh) -> Value {
    json!({
        "nodes": mesh.num_nodes(),
        "triangles": mesh.num_triangles(),
        "boundary_edges": mesh.boundary_edges().len(),
        "area": mesh.area(),
        "robin_length": mesh.boundary_length(BoundaryTag::Robin),
        "dirichlet_length": mesh.boundary_length(BoundaryTag::Dirichlet) + 0.0,
        "h_max": mesh.h_max(),
        "quality": mesh.quality(),
    })
}

fn load(ctx: &mut Ctx, cli: Option<&std::path::Path>) -> Result<TriMesh, CliError> {
    let base = ctx.settings.path("mesh", cli, None)?;
    import_mesh(&base).map_err(|e| CliError::Usage(format!("{}: {e}", base.display())))
}

pub fn export(mut ctx: Ctx, a: &MeshExportArgs) -> Result<Report, CliError> {
    let poly = ctx.polygon(a.polygon.as_deref())?;
    let name = ctx.settings.text("name", a.name.as_deref(), Some("mesh"))?;
    let mesh = if a.gamma.is_some() || (a.h.is_none() && ctx.settings.has("gamma")) {
        resolved_mesh(&poly, ctx.settings.real("gamma", a.gamma.as_deref(), None)?)?
    } else {
        mesh_polygon(&poly, &GradingPolicy::uniform(ctx.settings.real("h", a.h.as_deref(), Some(0.1))?)?)?
    };
    let mut report = ctx.report()?;
    let base = report.dir().join(&name);
    export_mesh(&mesh, &base)?;
    for ext in ["node", "ele", "poly"] {
        report.record(base.with_extension(ext));
    }
    report.write_json(&format!("{name}.json"), stats(&mesh))?;
    Ok(report)
}

pub fn import(mut ctx: Ctx, a: &MeshImportArgs) -> Result<Report, CliError> {
    let mesh = load(&mut ctx, a.mesh.as_deref())?;
    let gamma = ctx.settings.real("gamma", a.gamma.as_deref(), None)?;
    let count = ctx.settings.integer("count", a.count, 4)?;
    let pencil = assemble::<f64>(&mesh, Order::P2)?;
    let n = usize::try_from(count).unwrap_or(usize::MAX);
    let r = solve_lowest_with(&pencil, gamma, n, 1e-10, &ctx.solver())?;
    let mut table = Table::new(&["n", "eigenvalue", "eigenvalue_over_gamma2"]);
    for (i, e) in r.eigenvalues.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), num(*e), num(e / (gamma * gamma))]);
    }
    let mut report = ctx.report()?;
    report.write_csv("eigenvalues.csv", &table)?;
    report.write_json("mesh.json", stats(&mesh))?;
    Ok(report)
}

pub fn inspect(mut ctx: Ctx, a: &MeshInspectArgs) -> Result<Report, CliError> {
    let mesh = load(&mut ctx, a.mesh.as_deref())?;
    let stats = stats(&mesh);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    let mut report = ctx.report()?;
    report.write_json("inspect.json", stats)?;
    Ok(report)
}
