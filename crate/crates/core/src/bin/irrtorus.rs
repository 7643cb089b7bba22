use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irrtorus::cli::{job_limit, run_manifest, sweep, CommandKind, ExitStatus, ExperimentManifest, RunOutcome};

const TORUS_HELP: &str =
    "Torus keys: weights = [w1, w2]; rationality = \"rational\" (coprime integers) | \"irrational\".";

const RESONANCES_HELP: &str = "Parameters: weights, rationality, n, l (optional; adds weak_resonances.csv), \
class (degenerate | parallel | nonparallel), weak_threshold (default 1).\n\
Artifacts: resonances.csv (k1x,k1y,k2x,k2y,k3x,k3y,k4x,k4y,class,defect), report.json.";

const NORMALFORM_HELP: &str = "Parameters: weights, rationality (irrational), n, l, weak_threshold, s (1.5), \
direction_box (1), epsilons (10^-2 .. 10^-3), seed, poisson_samples (3), flow_tolerance (1e-10), include_chi2 (false).\n\
Artifacts: chi.csv (tuple, re_g, im_g, part), report.json with C_N_omega, Poisson residuals and the scaling sweep.";

const SIMULATION_HELP: &str = "Simulation keys: weights, rationality, m, n, l (3m < n < l), epsilon, s (1.5), \
t_final, tolerance (1e-10), seed (0), samples (200), weak_threshold (1), window_constant (1), full_dt (0.01), grid.";

const SIMULATE_HELP: &str = "Extra keys: system (resonant | condensed | full), watch = [[x, y], ...], \
initial = [[x, y, re, im], ...].\nArtifacts: trajectory.csv, conserved.csv, report.json.";

const VERIFY_HELP: &str = "Extra keys: gamma (2.5), gap_samples (40), smallness_gate (0.2), flow_tolerance (1e-10).\n\
Artifacts: gap.csv, outside.csv, report.json.";

const CASCADE_HELP: &str = "Parameters: l (8), window (0.05), samples (200), n_max (6), tolerance (1e-10).\n\
Artifacts: activation.csv, report.json.";

const FAMILY_HELP: &str = "Parameters: s, relation (square_torus_a | irrational_r), \
generations = [[[x, y], ...], ...].\nArtifacts: report.json.";

#[derive(Parser)]
#[command(
    name = "irrtorus",
    version,
    about = "Resonances, normal form and dynamics of the cubic NLS on 2D tori"
)]
#[command(after_help = "Exit status: 0 pass, 1 check failed, 2 invalid input.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML file with the parameters (a full manifest or a bare parameter table).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the artifacts.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Run name recorded in the echo.
    #[arg(long)]
    name: Option<String>,
    /// Extra `key=value` parameter, value in TOML syntax.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct TorusFlags {
    /// Weights as `w1,w2`.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    rationality: Option<String>,
}

#[derive(Args)]
struct BoxFlags {
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate resonant tuples in a box.
    #[command(after_long_help = format!("{RESONANCES_HELP}\n{TORUS_HELP}"))]
    Resonances {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        torus: TorusFlags,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        class: Option<String>,
    },
    /// Build the auxiliary Hamiltonian and check its estimates.
    #[command(after_long_help = format!("{NORMALFORM_HELP}\n{TORUS_HELP}"))]
    Normalform {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        torus: TorusFlags,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        include_chi2: bool,
    },
    /// Integrate the resonant, condensed or full system.
    #[command(after_long_help = format!("{SIMULATION_HELP}\n{SIMULATE_HELP}\n{TORUS_HELP}"))]
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        torus: TorusFlags,
        #[command(flatten)]
        boxes: BoxFlags,
        #[arg(long)]
        system: Option<String>,
    },
    /// Run the confinement pipeline on an irrational torus.
    #[command(name = "verify-theorem", after_long_help = format!("{SIMULATION_HELP}\n{VERIFY_HELP}\n{TORUS_HELP}"))]
    VerifyTheorem {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        torus: TorusFlags,
        #[command(flatten)]
        boxes: BoxFlags,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Three-step activation on the square torus against an irrational one.
    #[command(name = "cascade-demo", after_long_help = CASCADE_HELP)]
    CascadeDemo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        l: Option<u32>,
    },
    /// Validate a generation structure and its ratio bound.
    #[command(after_long_help = FAMILY_HELP)]
    Family {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        relation: Option<String>,
    },
    /// Run a manifest file.
    Run { manifest: PathBuf },
    /// Run several manifests concurrently (limit via IRRTORUS_JOBS) and merge their reports.
    Sweep {
        /// Directory for sweep_report.json and sweep_summary.csv.
        #[arg(long, default_value = "sweep")]
        output_dir: PathBuf,
        manifests: Vec<PathBuf>,
    },
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(ExitStatus::InputError.code())
}

struct Pending {
    table: toml::Table,
    name: Option<String>,
    output_dir: Option<PathBuf>,
}

fn load(common: &Common) -> Result<Pending, String> {
    let mut pending = Pending {
        table: toml::Table::new(),
        name: None,
        output_dir: None,
    };
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut doc: toml::Table = toml::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e.message()))?;
        match doc.remove("parameters") {
            Some(toml::Value::Table(t)) => {
                pending.table = t;
                pending.name = doc.get("name").and_then(|v| v.as_str()).map(String::from);
                pending.output_dir = doc.get("output_dir").and_then(|v| v.as_str()).map(PathBuf::from);
            }
            Some(_) => return Err(format!("{}: `parameters` must be a table", path.display())),
            None => pending.table = doc,
        }
    }
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        let value: toml::Table = toml::from_str(&format!("v = {v}"))
            .or_else(|_| toml::from_str(&format!("v = {}", toml::Value::String(v.to_string()))))
            .map_err(|e| format!("--set {k}: {}", e.message()))?;
        pending.table.insert(k.trim().to_string(), value["v"].clone());
    }
    if common.name.is_some() {
        pending.name.clone_from(&common.name);
    }
    if common.output_dir.is_some() {
        pending.output_dir.clone_from(&common.output_dir);
    }
    Ok(pending)
}

fn put<T: Into<toml::Value>>(table: &mut toml::Table, key: &str, value: Option<T>) {
    if let Some(v) = value {
        table.insert(key.to_string(), v.into());
    }
}

fn put_torus(table: &mut toml::Table, torus: TorusFlags) {
    put(
        table,
        "weights",
        torus
            .weights
            .map(|w| toml::Value::Array(w.into_iter().map(toml::Value::from).collect())),
    );
    put(table, "rationality", torus.rationality);
}

fn put_boxes(table: &mut toml::Table, b: BoxFlags) {
    put(table, "m", b.m.map(i64::from));
    put(table, "n", b.n.map(i64::from));
    put(table, "l", b.l.map(i64::from));
    put(table, "epsilon", b.epsilon);
    put(table, "t_final", b.t_final);
    put(table, "seed", b.seed.map(|s| s as i64));
}

fn report(outcome: &RunOutcome) -> ExitCode {
    match outcome.report.get("error") {
        Some(e) => eprintln!("{}: error: {}", outcome.name, e.as_str().unwrap_or_default()),
        None => {
            let pass = outcome.report.get("pass").and_then(|p| p.as_bool());
            println!(
                "{}: {} -> {} ({})",
                outcome.name,
                outcome.command.as_str(),
                outcome.output_dir.display(),
                match pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "done",
                }
            );
        }
    }
    ExitCode::from(outcome.status.code())
}

type Fill = Box<dyn FnOnce(&mut toml::Table)>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common, fill): (CommandKind, Common, Fill) = match cli.command {
        Command::Run { manifest } => {
            return match ExperimentManifest::from_file(&manifest) {
                Ok(m) => report(&run_manifest(&m)),
                Err(e) => input_error(e),
            };
        }
        Command::Sweep { output_dir, manifests } => {
            let mut loaded = Vec::with_capacity(manifests.len());
            for path in &manifests {
                match ExperimentManifest::from_file(path) {
                    Ok(m) => loaded.push(m),
                    Err(e) => return input_error(e),
                }
            }
            return match sweep(&loaded, &output_dir, job_limit()) {
                Ok(out) => {
                    for r in &out.runs {
                        report(r);
                    }
                    println!("sweep: {} runs -> {}", out.runs.len(), output_dir.display());
                    ExitCode::from(out.status.code())
                }
                Err(e) => input_error(e),
            };
        }
        Command::Resonances {
            common,
            torus,
            n,
            l,
            class,
        } => (
            CommandKind::Resonances,
            common,
            Box::new(move |t| {
                put_torus(t, torus);
                put(t, "n", n.map(i64::from));
                put(t, "l", l.map(i64::from));
                put(t, "class", class);
            }),
        ),
        Command::Normalform {
            common,
            torus,
            n,
            l,
            include_chi2,
        } => (
            CommandKind::NormalForm,
            common,
            Box::new(move |t| {
                put_torus(t, torus);
                put(t, "n", n.map(i64::from));
                put(t, "l", l.map(i64::from));
                put(t, "include_chi2", include_chi2.then_some(true));
            }),
        ),
        Command::Simulate {
            common,
            torus,
            boxes,
            system,
        } => (
            CommandKind::Simulate,
            common,
            Box::new(move |t| {
                put_torus(t, torus);
                put_boxes(t, boxes);
                put(t, "system", system);
            }),
        ),
        Command::VerifyTheorem {
            common,
            torus,
            boxes,
            gamma,
        } => (
            CommandKind::VerifyTheorem,
            common,
            Box::new(move |t| {
                put_torus(t, torus);
                put_boxes(t, boxes);
                put(t, "gamma", gamma);
            }),
        ),
        Command::CascadeDemo { common, l } => (
            CommandKind::CascadeDemo,
            common,
            Box::new(move |t| put(t, "l", l.map(i64::from))),
        ),
        Command::Family { common, s, relation } => (
            CommandKind::Family,
            common,
            Box::new(move |t| {
                put(t, "s", s);
                put(t, "relation", relation);
            }),
        ),
    };
    let mut pending = match load(&common) {
        Ok(p) => p,
        Err(e) => return input_error(e),
    };
    fill(&mut pending.table);
    let manifest = ExperimentManifest {
        name: pending.name.unwrap_or_else(|| kind.as_str().to_string()),
        command: kind,
        parameters: pending.table,
        output_dir: pending
            .output_dir
            .unwrap_or_else(|| PathBuf::from("runs").join(kind.as_str())),
    };
    report(&run_manifest(&manifest))
}
