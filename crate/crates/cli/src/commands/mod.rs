mod corners;
mod mesh;
mod model1d;
mod rates;
mod sector;
mod weyl;

use std::path::{Path, PathBuf};

use robin_spectra::eig::SolverOptions;
use robin_spectra::geometry::{load_polygon, CurvilinearPolygon};
use robin_spectra::sector::{build_model_sum_with, ModelOptions, ModelSum, SectorOptions};

use crate::config::Settings;
use crate::error::CliError;
use crate::report::Report;
use crate::{Cli, Command, MeshCommand};

/// Settings of one command invocation plus the run-wide options.
pub struct Ctx {
    pub settings: Settings,
    out: PathBuf,
    pub seed: u64,
    command: &'static str,
}

impl Ctx {
    fn new(cli: &Cli, command: &'static str) -> Result<Self, CliError> {
        let section = command.split_whitespace().next().unwrap_or(command);
        let mut settings = Settings::load(cli.config.as_deref(), section)?;
        let out = settings.path("out", cli.out.as_deref(), Some("."))?;
        settings.forget("out");
        let seed = settings.integer("seed", cli.seed, SolverOptions::default().seed)?;
        Ok(Ctx { settings, out, seed, command })
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { seed: self.seed, ..SolverOptions::default() }
    }

    /// Opens the report once every parameter has been read, so the echo is
    /// complete.
    pub fn report(&self) -> Result<Report, CliError> {
        Report::new(&self.out, self.command, self.settings.echo().clone())
    }

    pub fn polygon(&mut self, cli: Option<&Path>) -> Result<CurvilinearPolygon, CliError> {
        let path = self.settings.path("polygon", cli, None)?;
        load_polygon(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn gammas(&mut self, cli: Option<&str>, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let g = self.settings.reals("gammas", cli, Some(default))?;
        if let Some(bad) = g.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(CliError::Usage(format!("gamma must be positive, got {bad}")));
        }
        Ok(g)
    }

    pub fn model_sum(&mut self, poly: &CurvilinearPolygon, levels: Option<u64>) -> Result<ModelSum, CliError> {
        let levels = self.settings.integer("levels", levels, 2)?;
        let opts = ModelOptions {
            sector: SectorOptions { levels: u32::try_from(levels).unwrap_or(u32::MAX), ..SectorOptions::default() },
            cache: None,
        };
        Ok(build_model_sum_with(poly, 1e-6, &opts)?)
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let report = match &cli.command {
        Command::Sector(a) => sector::run(Ctx::new(&cli, "sector")?, a)?,
        Command::Corners(a) => corners::run(Ctx::new(&cli, "corners")?, a)?,
        Command::Weyl(a) => weyl::run(Ctx::new(&cli, "weyl")?, a)?,
        Command::Model1d(a) => model1d::run(Ctx::new(&cli, "model1d")?, a)?,
        Command::Rates(a) => rates::run(Ctx::new(&cli, "rates")?, a)?,
        Command::Mesh(MeshCommand::Export(a)) => mesh::export(Ctx::new(&cli, "mesh export")?, a)?,
        Command::Mesh(MeshCommand::Import(a)) => mesh::import(Ctx::new(&cli, "mesh import")?, a)?,
        Command::Mesh(MeshCommand::Inspect(a)) => mesh::inspect(Ctx::new(&cli, "mesh inspect")?, a)?,
    };
    for path in report.written() {
        println!("wrote {}", path.display());
    }
    Ok(())
}
