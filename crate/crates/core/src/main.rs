//! qsteer command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qsteer::inequality::{
    avn_inequality, avn_inequality_phase_max, default_directions, linear_inequality_value,
    parse_directions, AvnInequalityResult, LinearInequalityResult,
};
use qsteer::lhs::{
    assemblage_from_state, asymmetric_steering_scan_with, lhs_feasible_with, sample_setting_pairs,
    SolverConfig, SteeringParty,
};
use qsteer::linalg::BlochVector;
use qsteer::scan::{render_csv, run_scan, AnalysisKind, Family, ScanConfig};
use qsteer::state::{state_to_json, StateInput, TwoQubitState};
use qsteer::steering::{
    find_avn_direction_with, rotate_alice_to_z, verify_equivalence_chain, SearchConfig,
    SteeringVerdict, Tolerances,
};

const EXIT_INVALID: u8 = 2;
const EXIT_PARSE: u8 = 3;

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }
}

#[derive(Parser)]
#[command(name = "qsteer", version, about = "Two-qubit steerability analysis")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StateArgs {
    /// Path to a JSON state file (raw matrix or family spec).
    #[arg(long)]
    state: Option<PathBuf>,
    /// Built-in family name: test_state | color_noise.
    #[arg(long)]
    family: Option<String>,
    /// Family mixing parameter.
    #[arg(long = "V")]
    v: Option<f64>,
    /// Family angle parameter (radians).
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct TolArgs {
    /// Conditional-purity tolerance.
    #[arg(long = "tol-purity", default_value_t = 1e-7)]
    tol_purity: f64,
    /// Hidden-state feasibility tolerance.
    #[arg(long = "tol-feas", default_value_t = 1e-8)]
    tol_feas: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Full single-state report: steerability search, inequalities,
    /// hidden-state feasibility.
    Analyze {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        tol: TolArgs,
        /// Sphere-grid size of the steerability search.
        #[arg(long, default_value_t = 2048)]
        grid: usize,
        /// JSON file with measurement directions for the linear inequality.
        #[arg(long)]
        directions: Option<PathBuf>,
        /// Include the state matrix in the report.
        #[arg(long)]
        echo: bool,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// (V, theta) grid sweep over a built-in family, CSV output.
    Scan {
        /// Family: test_state | color_noise.
        #[arg(long)]
        family: String,
        /// Grid resolution, "N" or "NxM" (V steps x theta steps).
        #[arg(long, default_value = "21")]
        grid: String,
        /// Comma-separated analyses: avn, ineq3, linearN, asym.
        #[arg(long, default_value = "avn,ineq3")]
        analyses: String,
        #[command(flatten)]
        tol: TolArgs,
        /// JSON file with measurement directions for linearN.
        #[arg(long)]
        directions: Option<PathBuf>,
        /// Sphere-grid size of the per-point steerability search.
        #[arg(long = "search-grid", default_value_t = 2048)]
        search_grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path (standard output when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hidden-state feasibility in both steering directions over sampled
    /// two-setting protocols.
    Lhs {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        tol: TolArgs,
        /// Number of sampled setting pairs.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inequality values for one state: the pure-conditional inequality at a
    /// direction and the N-setting linear inequality.
    Ineq {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        tol: TolArgs,
        /// Measurement direction "x,y,z" for the pure-conditional
        /// inequality; defaults to the family's canonical axis, else z.
        #[arg(long)]
        direction: Option<String>,
        /// JSON file with directions for the linear inequality.
        #[arg(long)]
        directions: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a measurement-direction JSON file.
    DirectionsValidate {
        /// JSON file: array of [x, y, z] unit triples.
        #[arg(long)]
        directions: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(EXIT_INVALID);
        }
        // ignore failure: the global pool may already exist in tests
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze {
            state,
            tol,
            grid,
            directions,
            echo,
            out,
        } => cmd_analyze(&state, &tol, grid, directions.as_deref(), echo, out.as_deref()),
        Command::Scan {
            family,
            grid,
            analyses,
            tol,
            directions,
            search_grid,
            seed,
            out,
        } => cmd_scan(
            &family,
            &grid,
            &analyses,
            &tol,
            directions.as_deref(),
            search_grid,
            seed,
            out.as_deref(),
        ),
        Command::Lhs {
            state,
            tol,
            pairs,
            seed,
            out,
        } => cmd_lhs(&state, &tol, pairs, seed, out.as_deref()),
        Command::Ineq {
            state,
            tol,
            direction,
            directions,
            out,
        } => cmd_ineq(
            &state,
            &tol,
            direction.as_deref(),
            directions.as_deref(),
            out.as_deref(),
        ),
        Command::DirectionsValidate { directions } => cmd_directions_validate(&directions),
    }
}

// ---------------------------------------------------------------------------
// Input plumbing
// ---------------------------------------------------------------------------

fn load_state(args: &StateArgs) -> Result<(TwoQubitState, Option<Family>), CliError> {
    if let Some(path) = &args.state {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        let input: StateInput = serde_json::from_str(&text)
            .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        let family = match &input {
            StateInput::Family { family, .. } => Family::parse(family).ok(),
            StateInput::Raw { .. } => None,
        };
        let rho = input.build().map_err(|e| CliError::invalid(e.to_string()))?;
        return Ok((rho, family));
    }
    let name = args
        .family
        .as_deref()
        .ok_or_else(|| CliError::invalid("either --state or --family is required"))?;
    let family = Family::parse(name).map_err(|e| CliError::invalid(e.to_string()))?;
    let v = args
        .v
        .ok_or_else(|| CliError::invalid("--V is required with --family"))?;
    let theta = args
        .theta
        .ok_or_else(|| CliError::invalid("--theta is required with --family"))?;
    let rho = family
        .build(v, theta)
        .map_err(|e| CliError::invalid(e.to_string()))?;
    Ok((rho, Some(family)))
}

fn load_directions(path: Option<&Path>) -> Result<Vec<BlochVector>, CliError> {
    match path {
        None => Ok(default_directions()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::parse(format!("cannot read {}: {e}", p.display())))?;
            parse_directions(&text).map_err(|e| match e {
                qsteer::inequality::InequalityError::Parse(msg) => CliError::parse(msg),
                other => CliError::invalid(other.to_string()),
            })
        }
    }
}

fn parse_triple(s: &str) -> Result<BlochVector, CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::parse(format!("bad direction triple '{s}': {e}")))?;
    if parts.len() != 3 {
        return Err(CliError::parse(format!(
            "bad direction triple '{s}': expected 3 components"
        )));
    }
    BlochVector::from_components(parts[0], parts[1], parts[2])
        .map_err(|e| CliError::invalid(e.to_string()))
}

fn tolerances(tol: &TolArgs) -> Result<Tolerances, CliError> {
    if !(tol.tol_purity > 0.0 && tol.tol_feas > 0.0) {
        return Err(CliError::invalid("tolerances must be positive"));
    }
    Ok(Tolerances {
        purity_tol: tol.tol_purity,
        ..Tolerances::default()
    })
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        None => {
            println!("{content}");
            Ok(())
        }
        // single atomic-ish write: the content is fully rendered in memory,
        // so a failure leaves either the old file or nothing partial
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display()))),
    }
}

// ---------------------------------------------------------------------------
// Serialization helpers
// ---------------------------------------------------------------------------

fn json_dir(n: &BlochVector) -> serde_json::Value {
    json!([n.x, n.y, n.z])
}

fn json_avn_result(r: &AvnInequalityResult) -> serde_json::Value {
    json!({
        "w1": r.w1,
        "w2": r.w2,
        "w3": r.w3,
        "c_lhs": r.c_lhs,
        "violation": r.violation,
        "constraint_satisfied": r.constraint_satisfied,
        "optimal_n_b": json_dir(&r.optimal_n_b),
    })
}

fn json_linear_result(r: &LinearInequalityResult) -> serde_json::Value {
    json!({
        "n_settings": r.n_settings,
        "quantum_value": r.quantum_value,
        "c_n": r.c_n,
        "violation": r.violation,
    })
}

fn json_verdict(v: &SteeringVerdict) -> serde_json::Value {
    json!({
        "steerable": v.steerable,
        "direction": v.direction.as_ref().map(json_dir),
        "conditional_purities": v.conditional_purities,
        "second_setting": v.second_setting.map(|s| match s {
            qsteer::steering::SecondSetting::X => "x",
            qsteer::steering::SecondSetting::Y => "y",
        }),
        "best_score": v.best_score,
    })
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_analyze(
    state: &StateArgs,
    tol: &TolArgs,
    grid: usize,
    directions: Option<&Path>,
    echo: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (rho, _) = load_state(state)?;
    let tols = tolerances(tol)?;
    let dirs = load_directions(directions)?;
    let search = SearchConfig {
        grid_points: grid,
        refine_candidates: 5,
        tolerances: tols,
    };
    let verdict = find_avn_direction_with(&rho, &search);

    let mut report = json!({
        "avn": json_verdict(&verdict),
    });

    if let Some(dir) = &verdict.direction {
        if let Ok(r) = avn_inequality(&rho, dir) {
            report["avn_inequality"] = json_avn_result(&r);
        }
        if let Ok(r) = avn_inequality_phase_max(&rho, dir) {
            report["avn_inequality_phase_max"] = json_avn_result(&r);
        }
        if let Ok(eq) = verify_equivalence_chain(&rho, dir, &tols) {
            report["equivalence"] = json!({
                "m_nonzero": eq.m_nonzero,
                "entangled": eq.entangled,
                "lhs_infeasible": eq.lhs_infeasible,
                "all_agree": eq.all_agree(),
            });
        }
    }

    let solver = SolverConfig {
        feas_tol: tol.tol_feas,
        ..SolverConfig::default()
    };
    // hidden-state feasibility at the recommended protocol (the found
    // direction's frame with settings {z, second}), else at {x, z}
    let (lhs_state, n1, n2) = match (&verdict.direction, &verdict.second_setting) {
        (Some(dir), Some(second)) => {
            let (rotated, _) = rotate_alice_to_z(&rho, dir);
            let s = TwoQubitState::new(rotated).map_err(|e| CliError::invalid(e.to_string()))?;
            (s, BlochVector::z_axis(), second.direction())
        }
        _ => (rho, BlochVector::x_axis(), BlochVector::z_axis()),
    };
    let mut lhs_report = json!({});
    for (key, party) in [("AtoB", SteeringParty::AToB), ("BtoA", SteeringParty::BToA)] {
        if let Ok(asm) = assemblage_from_state(&lhs_state, &n1, &n2, party) {
            let r = lhs_feasible_with(&asm, &solver);
            lhs_report[key] = json!({
                "feasible": r.feasible,
                "residual": r.residual,
                "iterations": r.iterations,
            });
        }
    }
    report["lhs"] = json!({
        "settings": [json_dir(&n1), json_dir(&n2)],
        "results": lhs_report,
    });

    for (key, party) in [("AtoB", SteeringParty::AToB), ("BtoA", SteeringParty::BToA)] {
        if let Ok(r) = linear_inequality_value(&rho, &dirs, party) {
            report["linear_inequality"][key] = json_linear_result(&r);
        }
    }

    if echo {
        report["state"] = serde_json::from_str(&state_to_json(&rho))
            .expect("state serialization is valid JSON");
    }

    emit(out, &serde_json::to_string_pretty(&report).expect("report is plain JSON"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    family: &str,
    grid: &str,
    analyses: &str,
    tol: &TolArgs,
    directions: Option<&Path>,
    search_grid: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let family = Family::parse(family).map_err(|e| CliError::invalid(e.to_string()))?;
    let (v_steps, theta_steps) = parse_grid(grid)?;
    let kinds: Vec<AnalysisKind> = analyses
        .split(',')
        .map(|s| AnalysisKind::parse(s.trim()).map_err(|e| CliError::invalid(e.to_string())))
        .collect::<Result<_, _>>()?;
    let tols = tolerances(tol)?;

    let mut cfg = ScanConfig::new(family, v_steps, theta_steps);
    cfg.analyses = kinds;
    cfg.tolerances = tols;
    cfg.feas_tol = tol.tol_feas;
    cfg.search_grid = search_grid;
    cfg.seed = seed;
    if directions.is_some() {
        cfg.directions = Some(load_directions(directions)?);
    }

    let records = run_scan(&cfg).map_err(|e| CliError::invalid(e.to_string()))?;
    emit(out, &render_csv(&cfg, &records))
}

fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let parse_one = |p: &str| {
        p.trim()
            .parse::<usize>()
            .map_err(|e| CliError::parse(format!("bad grid '{s}': {e}")))
    };
    match s.split_once('x') {
        Some((a, b)) => Ok((parse_one(a)?, parse_one(b)?)),
        None => {
            let n = parse_one(s)?;
            Ok((n, n))
        }
    }
}

fn cmd_lhs(
    state: &StateArgs,
    tol: &TolArgs,
    pairs: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if pairs == 0 {
        return Err(CliError::invalid("--pairs must be positive"));
    }
    let (rho, _) = load_state(state)?;
    let _ = tolerances(tol)?;
    let solver = SolverConfig {
        feas_tol: tol.tol_feas,
        ..SolverConfig::default()
    };
    let setting_pairs = sample_setting_pairs(pairs, seed);
    let report = asymmetric_steering_scan_with(&rho, &setting_pairs, &solver);
    let body = serde_json::to_string_pretty(&report).expect("report is plain JSON");
    emit(out, &body)
}

fn cmd_ineq(
    state: &StateArgs,
    tol: &TolArgs,
    direction: Option<&str>,
    directions: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (rho, family) = load_state(state)?;
    let _ = tolerances(tol)?;
    let dirs = load_directions(directions)?;
    let n = match direction {
        Some(s) => parse_triple(s)?,
        None => family
            .map(|f| f.canonical_axis())
            .unwrap_or_else(BlochVector::z_axis),
    };

    let mut report = json!({ "direction": json_dir(&n) });
    match avn_inequality(&rho, &n) {
        Ok(r) => report["avn_inequality"] = json_avn_result(&r),
        Err(e) => report["avn_inequality_error"] = json!(e.to_string()),
    }
    if let Ok(r) = avn_inequality_phase_max(&rho, &n) {
        report["avn_inequality_phase_max"] = json_avn_result(&r);
    }
    for (key, party) in [("AtoB", SteeringParty::AToB), ("BtoA", SteeringParty::BToA)] {
        let r = linear_inequality_value(&rho, &dirs, party)
            .map_err(|e| CliError::invalid(e.to_string()))?;
        report["linear_inequality"][key] = json_linear_result(&r);
    }
    emit(out, &serde_json::to_string_pretty(&report).expect("report is plain JSON"))
}

fn cmd_directions_validate(path: &Path) -> Result<(), CliError> {
    let dirs = load_directions(Some(path))?;
    println!("ok: {} directions", dirs.len());
    Ok(())
}
