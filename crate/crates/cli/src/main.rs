//! `robin-spectra`: batch driver for the Robin Laplacian experiments.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "robin-spectra", version, about = "Spectral experiments for Robin Laplacians on curvilinear polygons")]
pub struct Cli {
    /// TOML file with a [run] section and one section per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed of the eigensolver's starting block.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bound states of an infinite Robin sector.
    Sector(SectorArgs),
    /// Leading eigenvalues against the corner model sum, with certificates.
    Corners(CornersArgs),
    /// Boundary Weyl counts, or the first eigenvalues above the corner modes.
    Weyl(WeylArgs),
    /// One-dimensional model operators against a finite difference oracle.
    Model1d(Model1dArgs),
    /// Fitted decay of the deviation from the model sum.
    Rates(RatesArgs),
    /// Mesh generation and Triangle file conversion.
    #[command(subcommand)]
    Mesh(MeshCommand),
}

#[derive(Args, Debug)]
pub struct SectorArgs {
    /// Half-angle, e.g. `pi/4`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    /// Uniform refinements of the sector mesh.
    #[arg(long)]
    pub levels: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CornersArgs {
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    /// Comma separated list.
    #[arg(long)]
    pub gammas: Option<String>,
    /// Cutoff exponent for curvilinear domains.
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub levels: Option<u64>,
}

#[derive(Args, Debug)]
pub struct WeylArgs {
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    /// `bulk`, `edge` or `tail`.
    #[arg(long)]
    pub regime: Option<String>,
    /// E for bulk, λ for edge, the index above the corner modes for tail.
    #[arg(long, allow_hyphen_values = true)]
    pub param: Option<String>,
    #[arg(long)]
    pub gammas: Option<String>,
    #[arg(long)]
    pub node_cap: Option<u64>,
}

#[derive(Args, Debug)]
pub struct Model1dArgs {
    /// `dirichlet`, `robin`, `neumann` or `symmetric`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Robin parameter at the right end (`robin` only).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long)]
    pub length: Option<String>,
    /// Finite difference grid size.
    #[arg(long)]
    pub grid: Option<u64>,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    #[arg(long)]
    pub gammas: Option<String>,
    #[arg(long)]
    pub levels: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum MeshCommand {
    /// Mesh a polygon file and write `.node`, `.ele` and `.poly`.
    Export(MeshExportArgs),
    /// Read Triangle files and compute their lowest Robin eigenvalues.
    Import(MeshImportArgs),
    /// Print size and quality statistics.
    Inspect(MeshInspectArgs),
}

#[derive(Args, Debug)]
pub struct MeshExportArgs {
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    /// Uniform mesh size.
    #[arg(long)]
    pub h: Option<String>,
    /// Corner-resolved mesh for this γ instead of a uniform one.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Base name of the files inside the output directory.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug)]
pub struct MeshImportArgs {
    /// Base path of the Triangle files.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub count: Option<u64>,
}

#[derive(Args, Debug)]
pub struct MeshInspectArgs {
    #[arg(long)]
    pub mesh: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("robin-spectra: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
