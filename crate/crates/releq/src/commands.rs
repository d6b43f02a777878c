//! Subcommand implementations.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use releq_core::ansatz::{
    assemble_scan, check_omegas, expansion_point, gradient_check_at, Ansatz, EnergyBreakdown, GradientReport, GridSpec,
    QuadratureSpec, ScanReport, Vec3, DEFAULT_MU,
};
use releq_core::cell::{check_exponent, solve_normalized, CellChecks, CellProfile, ExponentMetadata, ScalingReport};
use releq_core::dynamics::{rigidity_report, simulate_rigidity, PhaseState, RigidityReport, Trajectory};
use releq_core::equilibria::{
    census_from, classify, lagrange_triangle, moulton, palmore_lower_bound, polygon, polygon_with_center,
    reduce_outcomes, run_start, sample_starts, two_body, DescentObjective, EquilibriumClass, SearchDiagnostics,
    SearchOptions, SearchResult, RNG_ALGORITHM,
};
use releq_core::kinetic::PolytropeSpec;
use releq_core::{MassVector, PlanarConfiguration, Vec2};

use crate::cli::*;
use crate::config::{check_positive, parse_omegas, resolve_exponent, RunConfig};
use crate::error::CliError;
use crate::output::{read_csv, to_canonical_json, write_csv, write_text};

pub const TOOL: &str = "releq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_P: f64 = 2.5;
pub const DEFAULT_OMEGAS: &str = "1e-4:1e-2:8log";
pub const DEFAULT_CELL_TOL: f64 = 1e-10;

type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a Value,
    seed: Option<u64>,
    exponent_metadata: Option<ExponentMetadata>,
    result: &'a T,
}

/// Everything a command reports besides its result.
struct Header {
    command: &'static str,
    config: Value,
    seed: Option<u64>,
    exponent_metadata: Option<ExponentMetadata>,
}

fn emit<T: Serialize>(header: &Header, result: &T, out: Option<&Path>) -> CliResult<()> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command: header.command,
        config: &header.config,
        seed: header.seed,
        exponent_metadata: header.exponent_metadata,
        result,
    };
    let text = to_canonical_json(&env)?;
    match out {
        Some(path) => write_text(path, &text),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Equilibria(c) => equilibria(c),
        Command::Cell(c) => cell(c),
        Command::Ansatz(c) => ansatz(c),
        Command::Kinetic(c) => kinetic(c),
        Command::Dynamics(c) => dynamics(c),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn masses_of(v: &[f64]) -> CliResult<MassVector> {
    Ok(MassVector::new(v.to_vec())?)
}

fn solve_cell(p: f64, tol: f64) -> CliResult<CellProfile> {
    check_positive("cell tolerance", tol)?;
    Ok(solve_normalized(p, tol)?)
}

fn scaling_of(cell: &CellProfile) -> CliResult<ScalingReport> {
    Ok(cell.verify_scaling()?)
}

/// Multistart search with the starts spread over the rayon pool. Outcomes
/// are reduced in start order, so the result does not depend on the pool size.
pub fn parallel_search(masses: &MassVector, starts: usize, seed: u64, opts: &SearchOptions) -> CliResult<SearchResult> {
    if starts == 0 {
        return Err(CliError::Validation("at least one start is required".into()));
    }
    let configs = sample_starts(masses, starts, seed, opts)?;
    let outcomes = configs.par_iter().map(|c| run_start(c, opts)).collect::<Result<Vec<_>, _>>()?;
    let (classes, diagnostics) = reduce_outcomes(&outcomes, opts)?;
    Ok(SearchResult { classes, diagnostics, seed, rng: RNG_ALGORITHM.into() })
}

/// The class of lowest potential; ties keep the earliest class.
fn minimizing_class(classes: &[EquilibriumClass]) -> CliResult<&EquilibriumClass> {
    classes
        .iter()
        .reduce(|best, c| if c.potential_value < best.potential_value { c } else { best })
        .ok_or_else(|| CliError::Numerical("the equilibrium search found no critical point".into()))
}

struct Equilibrium {
    zeta: PlanarConfiguration,
    search: Option<SearchSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct SearchSummary {
    classes_found: usize,
    diagnostics: SearchDiagnostics,
    chosen: EquilibriumClass,
}

/// `zeta` if given, otherwise the minimizing class of a search.
fn equilibrium(masses: &MassVector, zeta: Option<&[[f64; 2]]>, starts: usize, seed: u64) -> CliResult<Equilibrium> {
    if let Some(z) = zeta {
        let zeta = PlanarConfiguration::new(masses.clone(), z.to_vec())?;
        return Ok(Equilibrium { zeta, search: None });
    }
    if masses.len() == 1 {
        let zeta = PlanarConfiguration::new(masses.clone(), vec![[0.0, 0.0]])?;
        return Ok(Equilibrium { zeta, search: None });
    }
    let found = parallel_search(masses, starts, seed, &SearchOptions::default())?;
    let chosen = minimizing_class(&found.classes)?.clone();
    Ok(Equilibrium {
        zeta: chosen.representative.clone(),
        search: Some(SearchSummary { classes_found: found.classes.len(), diagnostics: found.diagnostics, chosen }),
    })
}

fn value_name<E: clap::ValueEnum>(v: E) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn search_options(objective: Objective) -> SearchOptions {
    SearchOptions {
        objective: match objective {
            Objective::Residual => DescentObjective::Residual,
            Objective::Potential => DescentObjective::Potential,
        },
        ..SearchOptions::default()
    }
}

fn equilibria(cmd: &EquilibriaCommand) -> CliResult<()> {
    match cmd {
        EquilibriaCommand::Find(a) | EquilibriaCommand::Census(a) => {
            let masses = masses_of(&a.masses)?;
            let census = matches!(cmd, EquilibriaCommand::Census(_));
            if census {
                palmore_lower_bound(masses.len())?;
            }
            let found = parallel_search(&masses, a.starts, a.seed, &search_options(a.objective))?;
            let header = Header {
                command: if census { "equilibria census" } else { "equilibria find" },
                config: json!({
                    "masses": a.masses,
                    "starts": a.starts,
                    "objective": value_name(a.objective),
                }),
                seed: Some(a.seed),
                exponent_metadata: None,
            };
            if census {
                emit(&header, &census_from(found)?, a.out.as_deref())
            } else {
                emit(&header, &found, a.out.as_deref())
            }
        }
        EquilibriaCommand::ClosedForm(a) => closed_form(a),
    }
}

fn closed_form(a: &ClosedFormArgs) -> CliResult<()> {
    let need = |what: &str| CliError::Validation(format!("--{what} is required for this kind"));
    let expect_masses = |n: usize| -> CliResult<()> {
        if a.masses.len() == n {
            Ok(())
        } else {
            Err(CliError::Validation(format!("this kind needs exactly {n} masses (got {})", a.masses.len())))
        }
    };
    let config = match a.kind {
        ClosedFormKind::TwoBody => {
            expect_masses(2)?;
            masses_of(&a.masses)?;
            two_body(a.masses[0], a.masses[1])?
        }
        ClosedFormKind::Lagrange => {
            expect_masses(3)?;
            masses_of(&a.masses)?;
            lagrange_triangle(a.masses[0], a.masses[1], a.masses[2], a.mirrored)?
        }
        ClosedFormKind::Polygon => polygon(a.n.ok_or_else(|| need("n"))?, a.mass.ok_or_else(|| need("mass"))?)?,
        ClosedFormKind::PolygonCenter => polygon_with_center(
            a.n.ok_or_else(|| need("n"))?,
            a.mass.ok_or_else(|| need("mass"))?,
            a.center_mass.ok_or_else(|| need("center-mass"))?,
        )?,
        ClosedFormKind::Moulton => {
            let masses = masses_of(&a.masses)?;
            let ordering: Vec<usize> =
                if a.ordering.is_empty() { (0..masses.len()).collect() } else { a.ordering.clone() };
            moulton(&masses, &ordering)?
        }
    };
    let class = classify(&config)?;
    let header = Header {
        command: "equilibria closed-form",
        config: json!({
            "kind": value_name(a.kind),
            "masses": a.masses,
            "n": a.n,
            "mass": a.mass,
            "center_mass": a.center_mass,
            "ordering": a.ordering,
            "mirrored": a.mirrored,
        }),
        seed: None,
        exponent_metadata: None,
    };
    emit(&header, &class, a.out.as_deref())
}

#[derive(Serialize)]
struct CellSolveResult<'a> {
    profile: &'a CellProfile,
    checks: CellChecks,
}

#[derive(Serialize)]
struct CellVerifyResult {
    checks: CellChecks,
    scaling: ScalingReport,
}

fn cell(cmd: &CellCommand) -> CliResult<()> {
    match cmd {
        CellCommand::Solve { exponent, tol, out } => {
            let p = resolve_exponent(exponent.p, exponent.q)?;
            let profile = solve_cell(p, *tol)?;
            let checks = profile.verify()?;
            let scaling = scaling_of(&profile)?;
            let header = Header {
                command: "cell solve",
                config: json!({ "p": p, "q": exponent.q, "tol": tol }),
                seed: None,
                exponent_metadata: Some(scaling.energy_exponent),
            };
            emit(&header, &CellSolveResult { profile: &profile, checks }, out.as_deref())
        }
        CellCommand::Verify { input, out } => {
            let profile = load_cell(input)?;
            let checks = profile.verify()?;
            let scaling = scaling_of(&profile)?;
            let passed = checks.passed;
            let header = Header {
                command: "cell verify",
                config: json!({ "p": profile.p, "tol": profile.tol }),
                seed: None,
                exponent_metadata: Some(scaling.energy_exponent),
            };
            emit(&header, &CellVerifyResult { checks, scaling }, out.as_deref())?;
            if passed {
                Ok(())
            } else {
                Err(CliError::Numerical("the stored cell fails its invariant checks".into()))
            }
        }
    }
}

/// Reads a cell written by `cell solve`, or a bare profile object.
pub fn load_cell(path: &Path) -> CliResult<CellProfile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let profile = value.get("result").and_then(|r| r.get("profile")).or_else(|| value.get("profile")).unwrap_or(&value);
    let cell: CellProfile = serde_json::from_value(profile.clone())
        .map_err(|e| CliError::Validation(format!("{}: not a cell profile: {e}", path.display())))?;
    check_exponent(cell.p)?;
    Ok(cell)
}

/// Resolved inputs shared by the ansatz subcommands.
struct AnsatzSetup {
    cell: CellProfile,
    masses: MassVector,
    mass_scale: f64,
    zeta: PlanarConfiguration,
    search: Option<SearchSummary>,
    mu: f64,
    seed: Option<u64>,
    quad: QuadratureSpec,
    config: RunConfig,
    scaling: ScalingReport,
}

impl AnsatzSetup {
    fn echo(&self, normalize: bool, extra: Value) -> Value {
        let mut v = json!({
            "masses": self.config.masses,
            "normalize_masses": normalize,
            "mass_scale": self.mass_scale,
            "p": self.cell.p,
            "cell_tol": self.cell.tol,
            "mu": self.mu,
            "zeta": self.zeta.points(),
            "quad_tol": self.quad.tol,
        });
        if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
            base.extend(more);
        }
        v
    }

    fn header(&self, command: &'static str, normalize: bool, extra: Value) -> Header {
        Header {
            command,
            config: self.echo(normalize, extra),
            seed: self.seed,
            exponent_metadata: Some(self.scaling.energy_exponent),
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn ansatz_setup(inp: &AnsatzInputs, default_two_body: bool) -> CliResult<AnsatzSetup> {
    let mut config = load_config(inp.config.as_ref())?;
    let mut normalize = inp.normalize_masses;
    if !inp.masses.is_empty() {
        config.masses = inp.masses.clone();
        config.zeta = None;
    }
    if config.masses.is_empty() {
        if !default_two_body {
            return Err(CliError::Validation("masses are required (--masses or --config)".into()));
        }
        config.masses = vec![1.0, 1.0];
        normalize = true;
    }
    if inp.p.is_some() || inp.q.is_some() {
        config.p = inp.p;
        config.q = inp.q;
    }
    if let Some(mu) = inp.mu {
        config.mu = Some(mu);
    }
    if let Some(seed) = inp.seed {
        config.seed = Some(seed);
    }
    config.validate()?;
    let cell = match &inp.cell {
        Some(path) => {
            let cell = load_cell(path)?;
            if config.p.is_some() || config.q.is_some() {
                let p = resolve_exponent(config.p, config.q)?;
                if (p - cell.p).abs() > 1e-12 * p {
                    return Err(CliError::Validation(format!(
                        "the cell has p = {} but the run asks for p = {p}",
                        cell.p
                    )));
                }
            }
            cell
        }
        None => {
            let p = if config.p.is_some() || config.q.is_some() {
                resolve_exponent(config.p, config.q)?
            } else {
                DEFAULT_P
            };
            let tol = config.tolerances.and_then(|t| t.cell).unwrap_or(DEFAULT_CELL_TOL);
            solve_cell(p, tol)?
        }
    };
    let raw = masses_of(&config.masses)?;
    let max = raw.as_slice().iter().cloned().fold(0.0, f64::max);
    let mass_scale = if normalize { cell.m_star / max } else { 1.0 };
    let masses = raw.scaled(mass_scale)?;
    let zeta_scaled: Option<Vec<[f64; 2]>> =
        config.zeta.as_ref().map(|z| z.iter().map(|p| [p[0] * mass_scale.cbrt(), p[1] * mass_scale.cbrt()]).collect());
    let eq = equilibrium(&masses, zeta_scaled.as_deref(), inp.starts, config.seed.unwrap_or(0))?;
    let quad_tol = check_positive("quad-tol", config.tolerances.and_then(|t| t.quadrature).unwrap_or(inp.quad_tol))?;
    let mu = check_positive("mu", config.mu.unwrap_or(DEFAULT_MU))?;
    let scaling = scaling_of(&cell)?;
    let seed = if eq.search.is_some() { Some(config.seed.unwrap_or(0)) } else { config.seed };
    Ok(AnsatzSetup {
        cell,
        masses,
        mass_scale,
        zeta: eq.zeta,
        search: eq.search,
        mu,
        seed,
        quad: QuadratureSpec { tol: quad_tol, ..QuadratureSpec::default() },
        config,
        scaling,
    })
}

#[derive(Serialize)]
struct EnergyResult {
    omega: f64,
    masses: Vec<f64>,
    lambdas: Vec<f64>,
    centers_xi: Vec<Vec3>,
    cutoff_radius: f64,
    support_radii: Vec<f64>,
    energy: EnergyBreakdown,
    j_predicted: f64,
    residual: f64,
    e_norm: f64,
    search: Option<SearchSummary>,
}

#[derive(Serialize)]
struct ScanResult<'a> {
    scan: &'a ScanReport,
    search: Option<SearchSummary>,
}

#[derive(Serialize)]
struct GradResult {
    report: GradientReport,
    search: Option<SearchSummary>,
}

fn ansatz(cmd: &AnsatzCommand) -> CliResult<()> {
    let normalized = match cmd {
        AnsatzCommand::Energy { inputs, .. } | AnsatzCommand::Scan { inputs, .. } => inputs.normalize_masses,
        AnsatzCommand::GradCheck { inputs, .. } => inputs.normalize_masses || inputs.masses.is_empty(),
    };
    ansatz_inner(cmd).map_err(|e| match e {
        CliError::Validation(m) if !normalized && m.contains("R_cut") => CliError::Validation(format!(
            "{m}; bumps overlap at these masses, --normalize-masses rescales them to the cell mass"
        )),
        other => other,
    })
}

fn ansatz_inner(cmd: &AnsatzCommand) -> CliResult<()> {
    match cmd {
        AnsatzCommand::Energy { inputs, omega, out } => {
            let s = ansatz_setup(inputs, false)?;
            let omega = check_positive(
                "omega",
                omega.or(s.config.omega).ok_or_else(|| CliError::Validation("--omega is required".into()))?,
            )?;
            let a = Ansatz::build(&s.cell, &s.masses, &s.zeta, omega, s.mu)?;
            let energy = a.energy_j(&s.quad)?;
            let row = expansion_point(&s.cell, &s.masses, &s.zeta, omega, s.mu, &s.quad, &GridSpec::default())?;
            let header = s.header("ansatz energy", inputs.normalize_masses, json!({ "omega": omega }));
            let result = EnergyResult {
                omega,
                masses: s.masses.as_slice().to_vec(),
                lambdas: a.lambdas.clone(),
                centers_xi: a.centers_xi.clone(),
                cutoff_radius: a.cutoff_radius,
                support_radii: a.support_radii.clone(),
                energy,
                j_predicted: row.j_predicted,
                residual: row.residual,
                e_norm: row.e_norm,
                search: s.search,
            };
            emit(&header, &result, out.as_deref())
        }
        AnsatzCommand::Scan { inputs, omegas, out } => {
            let s = ansatz_setup(inputs, false)?;
            let omegas = match (omegas, &s.config.omegas) {
                (Some(text), _) => parse_omegas(text)?,
                (None, Some(list)) => list.resolve()?,
                (None, None) => parse_omegas(DEFAULT_OMEGAS)?,
            };
            let report = scan(&s.cell, &s.masses, &s.zeta, &omegas, s.mu, &s.quad)?;
            if let Some(path) = out {
                write_scan_csv(path, &report)?;
            }
            let header = s.header("ansatz scan", inputs.normalize_masses, json!({ "omegas": omegas }));
            emit(&header, &ScanResult { scan: &report, search: s.search }, None)
        }
        AnsatzCommand::GradCheck { inputs, omega, out } => {
            let s = ansatz_setup(inputs, true)?;
            for w in omega {
                check_positive("omega", *w)?;
            }
            let points = omega
                .par_iter()
                .map(|&w| gradient_check_at(&s.cell, &s.masses, &s.zeta, w, s.mu, &s.quad))
                .collect::<Result<Vec<_>, _>>()?;
            let normalize = inputs.normalize_masses || (inputs.masses.is_empty() && inputs.config.is_none());
            let header = s.header("ansatz grad-check", normalize, json!({ "omegas": omega }));
            emit(&header, &GradResult { report: GradientReport::from_points(points), search: s.search }, out.as_deref())
        }
    }
}

/// The expansion scan with one task per omega.
pub fn scan(
    cell: &CellProfile,
    masses: &MassVector,
    zeta: &PlanarConfiguration,
    omegas: &[f64],
    mu: f64,
    quad: &QuadratureSpec,
) -> CliResult<ScanReport> {
    check_omegas(omegas)?;
    for &w in omegas {
        Ansatz::build(cell, masses, zeta, w, mu)?;
    }
    let grid = GridSpec::default();
    let rows = omegas
        .par_iter()
        .map(|&w| expansion_point(cell, masses, zeta, w, mu, quad, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_scan(cell, masses, zeta, rows)?)
}

fn write_scan_csv(path: &Path, report: &ScanReport) -> CliResult<()> {
    let rows: Vec<Vec<f64>> =
        report.rows.iter().map(|r| vec![r.omega, r.j_total, r.j_predicted, r.residual, r.e_norm]).collect();
    write_csv(path, &["omega", "J_total", "J_predicted", "residual", "E_norm"], &rows)
}

#[derive(Serialize)]
struct KineticResult {
    q: f64,
    p: f64,
    kappa_q: f64,
    mu: f64,
    numeric: f64,
    closed_form: f64,
    rel_err: f64,
}

fn kinetic(cmd: &KineticCommand) -> CliResult<()> {
    let KineticCommand::Check { q, mu, tol, out } = cmd;
    let spec = PolytropeSpec::from_q(*q)?;
    let c = spec.g_check(*mu, check_positive("tol", *tol)?)?;
    let exponent_metadata = match check_exponent(spec.p) {
        Ok(()) => Some(scaling_of(&solve_cell(spec.p, DEFAULT_CELL_TOL)?)?.energy_exponent),
        Err(_) => None,
    };
    let header = Header {
        command: "kinetic check",
        config: json!({ "q": q, "mu": mu, "tol": tol }),
        seed: None,
        exponent_metadata,
    };
    let result = KineticResult {
        q: c.q,
        p: c.p,
        kappa_q: spec.kappa_q,
        mu: c.mu,
        numeric: c.numeric,
        closed_form: c.closed_form,
        rel_err: c.rel_err,
    };
    emit(&header, &result, out.as_deref())
}

#[derive(Serialize)]
struct SimulateResult {
    zeta: Vec<Vec2>,
    dt: f64,
    steps: usize,
    csv_rows: usize,
    rigidity: RigidityReport,
    search: Option<SearchSummary>,
}

fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for j in 1..=n {
        for c in ["x", "y", "z", "vx", "vy", "vz"] {
            h.push(format!("{c}{j}"));
        }
    }
    h
}

fn dynamics(cmd: &DynamicsCommand) -> CliResult<()> {
    match cmd {
        DynamicsCommand::Simulate { config, omega, periods, steps_per_period, stride, starts, out } => {
            let cfg = RunConfig::load(config)?;
            let omega = check_positive(
                "omega",
                omega.or(cfg.omega).ok_or_else(|| CliError::Validation("--omega is required".into()))?,
            )?;
            check_positive("periods", *periods)?;
            if *steps_per_period == 0 || *stride == 0 {
                return Err(CliError::Validation("steps-per-period and stride must be positive".into()));
            }
            let masses = masses_of(&cfg.masses)?;
            let seed = cfg.seed.unwrap_or(0);
            let eq = equilibrium(&masses, cfg.zeta.as_deref(), *starts, seed)?;
            let (traj, rigidity) = simulate_rigidity(&eq.zeta, omega, *periods, *steps_per_period, 1)?;
            let kept: Vec<&PhaseState> = traj
                .snapshots
                .iter()
                .enumerate()
                .filter(|(k, _)| k % stride == 0 || *k + 1 == traj.snapshots.len())
                .map(|(_, s)| s)
                .collect();
            if let Some(path) = out {
                let header = trajectory_header(masses.len());
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let rows: Vec<Vec<f64>> = kept
                    .iter()
                    .map(|s| {
                        let mut row = vec![s.time];
                        for (x, v) in s.positions.iter().zip(&s.velocities) {
                            row.extend_from_slice(x);
                            row.extend_from_slice(v);
                        }
                        row
                    })
                    .collect();
                write_csv(path, &header, &rows)?;
            }
            let header = Header {
                command: "dynamics simulate",
                config: json!({
                    "masses": cfg.masses,
                    "zeta": eq.zeta.points(),
                    "omega": omega,
                    "periods": periods,
                    "steps_per_period": steps_per_period,
                    "stride": stride,
                }),
                seed: eq.search.as_ref().map(|_| seed),
                exponent_metadata: None,
            };
            let result = SimulateResult {
                zeta: eq.zeta.points().to_vec(),
                dt: traj.dt,
                steps: traj.snapshots.len() - 1,
                csv_rows: if out.is_some() { kept.len() } else { 0 },
                rigidity,
                search: eq.search,
            };
            emit(&header, &result, None)
        }
        DynamicsCommand::Rigidity { input, config, omega, out } => {
            let cfg = RunConfig::load(config)?;
            let omega = check_positive(
                "omega",
                omega.or(cfg.omega).ok_or_else(|| CliError::Validation("--omega is required".into()))?,
            )?;
            let masses = masses_of(&cfg.masses)?;
            let traj = load_trajectory(input, &masses)?;
            let zeta = initial_shape(&traj.snapshots[0], omega)?;
            let report = rigidity_report(&traj, &zeta, omega)?;
            let header = Header {
                command: "dynamics rigidity",
                config: json!({ "masses": cfg.masses, "omega": omega }),
                seed: None,
                exponent_metadata: None,
            };
            emit(&header, &report, out.as_deref())
        }
    }
}

/// Reads a trajectory CSV written by `dynamics simulate`.
pub fn load_trajectory(path: &Path, masses: &MassVector) -> CliResult<Trajectory> {
    let (header, rows) = read_csv(path)?;
    let n = masses.len();
    if header != trajectory_header(n) {
        return Err(CliError::Validation(format!(
            "{}: header does not describe {n} bodies (expected t,x1,y1,z1,vx1,vy1,vz1,...)",
            path.display()
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!("{}: no trajectory rows", path.display())));
    }
    let snapshots = rows
        .iter()
        .map(|r| {
            let positions = (0..n).map(|j| [r[1 + 6 * j], r[2 + 6 * j], r[3 + 6 * j]]).collect();
            let velocities = (0..n).map(|j| [r[4 + 6 * j], r[5 + 6 * j], r[6 + 6 * j]]).collect();
            PhaseState::new(positions, velocities, masses.clone(), r[0])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let dt = if rows.len() >= 2 { rows[1][0] - rows[0][0] } else { 0.0 };
    Ok(Trajectory { snapshots, dt })
}

/// `ω^{2/3}` times the centered planar positions of a snapshot.
fn initial_shape(s: &PhaseState, omega: f64) -> CliResult<PlanarConfiguration> {
    let com = s.center_of_mass();
    let k = omega.powf(2.0 / 3.0);
    let pts = s.positions.iter().map(|x| [k * (x[0] - com[0]), k * (x[1] - com[1])]).collect();
    Ok(PlanarConfiguration::new(s.masses.clone(), pts)?)
}

#[derive(Serialize)]
struct CellSummary {
    p: f64,
    w0: f64,
    #[serde(rename = "R")]
    radius: f64,
    m_star: f64,
    e_star: f64,
    checks: CellChecks,
    scaling: ScalingReport,
}

#[derive(Serialize)]
struct PipelineReport {
    masses_input: Vec<f64>,
    mass_scale: f64,
    masses: Vec<f64>,
    zeta: Vec<Vec2>,
    equilibria: Option<SearchSummary>,
    cell: CellSummary,
    scan: ScanReport,
    dynamics: RigidityReport,
}

fn pipeline(a: &PipelineArgs) -> CliResult<()> {
    let mut cfg = load_config(a.config.as_ref())?;
    if !a.masses.is_empty() {
        cfg.masses = a.masses.clone();
        cfg.zeta = None;
    }
    if cfg.masses.is_empty() {
        return Err(CliError::Validation("masses are required (--masses or --config)".into()));
    }
    if a.p.is_some() || a.q.is_some() {
        cfg.p = a.p;
        cfg.q = a.q;
    }
    if let Some(mu) = a.mu {
        cfg.mu = Some(mu);
    }
    if let Some(seed) = a.seed {
        cfg.seed = Some(seed);
    }
    cfg.validate()?;
    let p = if cfg.p.is_some() || cfg.q.is_some() { resolve_exponent(cfg.p, cfg.q)? } else { DEFAULT_P };
    let omegas = match (&a.omegas, &cfg.omegas) {
        (Some(text), _) => parse_omegas(text)?,
        (None, Some(list)) => list.resolve()?,
        (None, None) => parse_omegas(DEFAULT_OMEGAS)?,
    };
    let seed = cfg.seed.unwrap_or(0);
    let mu = check_positive("mu", cfg.mu.unwrap_or(DEFAULT_MU))?;
    let cell_tol = cfg.tolerances.and_then(|t| t.cell).unwrap_or(a.cell_tol);
    let quad_tol = check_positive("quad-tol", cfg.tolerances.and_then(|t| t.quadrature).unwrap_or(a.quad_tol))?;
    check_positive("dynamics-omega", a.dynamics_omega)?;
    check_positive("periods", a.periods)?;
    if a.steps_per_period == 0 {
        return Err(CliError::Validation("steps-per-period must be positive".into()));
    }

    let cell = solve_cell(p, cell_tol)?;
    let checks = cell.verify()?;
    let scaling = scaling_of(&cell)?;
    let raw = masses_of(&cfg.masses)?;
    let max = raw.as_slice().iter().cloned().fold(0.0, f64::max);
    let mass_scale = cell.m_star / max;
    let masses = raw.scaled(mass_scale)?;
    let zeta_scaled: Option<Vec<[f64; 2]>> =
        cfg.zeta.as_ref().map(|z| z.iter().map(|q| [q[0] * mass_scale.cbrt(), q[1] * mass_scale.cbrt()]).collect());
    let eq = equilibrium(&masses, zeta_scaled.as_deref(), a.starts, seed)?;
    let quad = QuadratureSpec { tol: quad_tol, ..QuadratureSpec::default() };
    let scan_report = scan(&cell, &masses, &eq.zeta, &omegas, mu, &quad)?;
    if let Some(path) = &a.scan_out {
        write_scan_csv(path, &scan_report)?;
    }
    let (_, rigidity) = simulate_rigidity(&eq.zeta, a.dynamics_omega, a.periods, a.steps_per_period, 1)?;

    let header = Header {
        command: "pipeline",
        config: json!({
            "masses": cfg.masses,
            "zeta": cfg.zeta,
            "p": p,
            "q": cfg.q,
            "omegas": omegas,
            "mu": mu,
            "starts": a.starts,
            "cell_tol": cell_tol,
            "quad_tol": quad_tol,
            "dynamics_omega": a.dynamics_omega,
            "periods": a.periods,
            "steps_per_period": a.steps_per_period,
        }),
        seed: Some(seed),
        exponent_metadata: Some(scaling.energy_exponent),
    };
    let report = PipelineReport {
        masses_input: cfg.masses.clone(),
        mass_scale,
        masses: masses.as_slice().to_vec(),
        zeta: eq.zeta.points().to_vec(),
        equilibria: eq.search,
        cell: CellSummary {
            p: cell.p,
            w0: cell.w0,
            radius: cell.radius,
            m_star: cell.m_star,
            e_star: cell.e_star,
            checks,
            scaling,
        },
        scan: scan_report,
        dynamics: rigidity,
    };
    emit(&header, &report, a.out.as_deref())
}
