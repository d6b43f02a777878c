use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "releq", version, about = "Relative equilibria, basic cells and multi-bump ansatz checks")]
pub struct Cli {
    /// Worker threads (0 uses every available core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search, count and build planar relative equilibria.
    #[command(subcommand)]
    Equilibria(EquilibriaCommand),
    /// Solve and verify the basic cell.
    #[command(subcommand)]
    Cell(CellCommand),
    /// Energy of the multi-bump ansatz and its expansion in omega.
    #[command(subcommand)]
    Ansatz(AnsatzCommand),
    /// Polytropic velocity integrals.
    #[command(subcommand)]
    Kinetic(KineticCommand),
    /// Point-mass integration of rotating equilibria.
    #[command(subcommand)]
    Dynamics(DynamicsCommand),
    /// Equilibrium search, cell, expansion scan and rigidity in one report.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Residual,
    Potential,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Comma-separated positive masses.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub masses: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Objective::Residual)]
    pub objective: Objective,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClosedFormKind {
    TwoBody,
    Lagrange,
    Polygon,
    PolygonCenter,
    Moulton,
}

#[derive(Debug, Subcommand)]
pub enum EquilibriaCommand {
    /// Multistart search; prints every distinct class.
    Find(SearchArgs),
    /// Multistart search compared against the generic lower bound on classes.
    Census(SearchArgs),
    /// A closed-form equilibrium, classified.
    ClosedForm(ClosedFormArgs),
}

#[derive(Debug, Args)]
pub struct ClosedFormArgs {
    #[arg(long, value_enum)]
    pub kind: ClosedFormKind,
    /// Masses for two-body (2), lagrange (3) and moulton (N).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub masses: Vec<f64>,
    /// Number of ring bodies for polygon kinds.
    #[arg(long)]
    pub n: Option<usize>,
    /// Ring mass for polygon kinds.
    #[arg(long, allow_hyphen_values = true)]
    pub mass: Option<f64>,
    /// Central mass for polygon-center.
    #[arg(long, allow_hyphen_values = true)]
    pub center_mass: Option<f64>,
    /// Left-to-right body order for moulton.
    #[arg(long, value_delimiter = ',')]
    pub ordering: Vec<usize>,
    /// Reflected orientation of the Lagrange triangle.
    #[arg(long)]
    pub mirrored: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum CellCommand {
    /// Solve the normalized cell for exponent p (or polytrope index q).
    Solve {
        #[command(flatten)]
        exponent: ExponentArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the invariant checks on a stored cell.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AnsatzInputs {
    /// Cell produced by `cell solve`; solved on the fly when absent.
    #[arg(long)]
    pub cell: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub masses: Vec<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Rescale the masses so the largest equals the cell mass.
    #[arg(long)]
    pub normalize_masses: bool,
    /// Starts for the equilibrium search when no zeta is given.
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-9)]
    pub quad_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum AnsatzCommand {
    /// Energy breakdown at a single omega.
    Energy {
        #[command(flatten)]
        inputs: AnsatzInputs,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy residual and error norm over a list of omegas.
    Scan {
        #[command(flatten)]
        inputs: AnsatzInputs,
        /// `a:b:Klog` or a comma-separated ascending list.
        #[arg(long)]
        omegas: Option<String>,
        /// CSV with columns omega,J_total,J_predicted,residual,E_norm.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference energy gradient against the point-mass force.
    GradCheck {
        #[command(flatten)]
        inputs: AnsatzInputs,
        /// One or more omegas (repeat or separate with commas).
        #[arg(long, value_delimiter = ',', required = true)]
        omega: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum KineticCommand {
    /// Compare the velocity integral of the polytrope with (−μ)₊^p.
    Check {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DynamicsCommand {
    /// Integrate the rotating equilibrium and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        periods: f64,
        #[arg(long, default_value_t = 100_000)]
        steps_per_period: usize,
        /// Keep every n-th step in the CSV.
        #[arg(long, default_value_t = 100)]
        stride: usize,
        #[arg(long, default_value_t = 200)]
        starts: usize,
        /// Trajectory CSV: t, then x,y,z,vx,vy,vz per body.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rigidity diagnostics of a stored trajectory.
    Rigidity {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub masses: Vec<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub omegas: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub starts: usize,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub cell_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub quad_tol: f64,
    /// Rotation rate of the point-mass rigidity run.
    #[arg(long, default_value_t = 1e-2)]
    pub dynamics_omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub periods: f64,
    #[arg(long, default_value_t = 100_000)]
    pub steps_per_period: usize,
    /// Optional CSV copy of the scan table.
    #[arg(long)]
    pub scan_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
