use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ddesc::analysis::{sweep, Dims, Property};
use ddesc::flemma::Parameterizer;
use ddesc::io::{read_system, read_trajectory_csv, trajectory_csv, write_system};
use ddesc::scenarios::{
    default_case1_config, default_case2_config, parse_run_config, tracking_summary, RunConfig,
    SETTLE_STEPS,
};
use ddesc::simulate::simulate;
use ddesc::{DescriptorSystem, Error, QuasiWeierstrass};

const SEED_ENV: &str = "DDESC_SEED";

#[derive(Parser)]
#[command(
    name = "ddesc",
    version,
    about = "Data-driven analysis and predictive control of descriptor systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a system file or scenario plant and write a trajectory CSV.
    Simulate {
        /// System file with E:, A:, B:, C:, D: blocks.
        #[arg(
            long,
            conflicts_with = "scenario",
            required_unless_present = "scenario"
        )]
        system: Option<PathBuf>,
        /// case1, case2 or a TOML run file; simulates its plant from its initial state.
        #[arg(long)]
        scenario: Option<String>,
        /// Input CSV with u_1..u_m columns.
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        input: Option<PathBuf>,
        /// Number of uniform random input samples in [-1, 1].
        #[arg(long, value_name = "T")]
        random: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the physical states x_1..x_n.
        #[arg(long)]
        states: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a data-driven controllability or observability test.
    Analyze {
        /// Trajectory CSV with u_ and y_ columns.
        trajectory: PathBuf,
        /// n,m,p,q,r,s
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_enum)]
        test: TestKind,
        /// Fixed horizon; by default L is swept up to n + s.
        #[arg(long)]
        horizon: Option<usize>,
        /// Generating system, for the model-based answer alongside the verdict.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Exit with status 1 when the test is inconclusive.
        #[arg(long)]
        strict: bool,
    },
    /// Express a window trajectory through the data matrix of a record.
    Parameterize {
        /// Data trajectory CSV.
        data: PathBuf,
        /// Window trajectory CSV; its valid length sets the depth.
        #[arg(long)]
        window: PathBuf,
        /// Write the coefficient vector g, one entry per line.
        #[arg(long)]
        g_out: Option<PathBuf>,
        /// Exit with status 1 when the window is not parameterizable.
        #[arg(long)]
        strict: bool,
    },
    /// Run the closed-loop controller and write the log CSV.
    Control {
        /// case1, case2 or a TOML run file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Excitation seed; DDESC_SEED takes precedence.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a case's run file, optionally writing its system matrices.
    Scenario {
        /// case1 or case2.
        name: String,
        /// Write the run file here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the descriptor system file here.
        #[arg(long)]
        system: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    #[value(name = "r-ctrl")]
    RCtrl,
    #[value(name = "c-ctrl")]
    CCtrl,
    #[value(name = "r-obs")]
    RObs,
    #[value(name = "c-obs")]
    CObs,
}

impl From<TestKind> for Property {
    fn from(t: TestKind) -> Self {
        match t {
            TestKind::RCtrl => Property::RControllable,
            TestKind::CCtrl => Property::CControllable,
            TestKind::RObs => Property::RObservable,
            TestKind::CObs => Property::CObservable,
        }
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
    Strict,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularPencil
            | Error::ConvergenceFailure(_)
            | Error::NotNilpotent
            | Error::InsufficientExcitation { .. }
            | Error::NotParameterizable { .. }
            | Error::ExcitationDeficient { .. }
            | Error::Singular(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn seed(flag: Option<u64>) -> std::result::Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn run_config(name: &str) -> std::result::Result<RunConfig, Failure> {
    match name {
        "case1" => Ok(default_case1_config()),
        "case2" => Ok(default_case2_config()),
        path => Ok(parse_run_config(&read(Path::new(path))?)?),
    }
}

fn cmd_simulate(
    system: Option<PathBuf>,
    scenario: Option<String>,
    input: Option<PathBuf>,
    random: Option<usize>,
    seed_flag: Option<u64>,
    states: bool,
    out: &Path,
) -> CmdResult {
    let (qw, z1_0): (QuasiWeierstrass<f64>, DVector<f64>) = match (system, scenario) {
        (Some(path), _) => {
            let sys: DescriptorSystem<f64> = read_system(&read(&path)?)?;
            let qw = sys.quasi_weierstrass()?;
            let z = DVector::zeros(qw.q());
            (qw, z)
        }
        (None, Some(name)) => {
            let sc = run_config(&name)?.scenario;
            let z = sc.z1_0().clone();
            (sc.qw, z)
        }
        (None, None) => return Err(Failure::Usage("give --system or --scenario".into())),
    };
    let u = match (input, random) {
        (Some(path), _) => {
            let data = read_trajectory_csv::<f64>(&read(&path)?)?;
            if data.u.first().is_some_and(|v| v.len() != qw.m()) {
                return Err(Failure::Usage(format!("input needs {} columns", qw.m())));
            }
            data.u
        }
        (None, Some(len)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed(seed_flag)?.unwrap_or(0));
            (0..len)
                .map(|_| DVector::from_fn(qw.m(), |_, _| rng.random_range(-1.0..=1.0)))
                .collect()
        }
        (None, None) => return Err(Failure::Usage("give --input or --random".into())),
    };
    let mut traj = simulate(&qw, &z1_0, &u)?;
    if states {
        traj = traj.with_states(&qw);
    }
    write(out, &trajectory_csv(&traj))?;
    println!(
        "samples={} valid={} s={}",
        traj.input_len(),
        traj.valid_len(),
        traj.s
    );
    Ok(())
}

fn cmd_analyze(
    trajectory: &Path,
    dims: &[usize],
    test: TestKind,
    horizon: Option<usize>,
    model: Option<PathBuf>,
    strict: bool,
) -> CmdResult {
    let [n, m, p, q, r, s] = dims else {
        return Err(Failure::Usage("--dims takes n,m,p,q,r,s".into()));
    };
    if q + r != *n || *s == 0 && *r > 0 {
        return Err(Failure::Usage(format!(
            "inconsistent dims: n = {n}, q + r = {}, s = {s}",
            q + r
        )));
    }
    let data = read_trajectory_csv::<f64>(&read(trajectory)?)?;
    if data.u.first().map(|v| v.len()) != Some(*m) || data.y.first().map(|v| v.len()) != Some(*p) {
        return Err(Failure::Usage(format!(
            "trajectory does not have m = {m} inputs and p = {p} outputs"
        )));
    }
    let dims = Dims {
        q: *q,
        r: *r,
        s: *s,
        m: *m,
    };
    let prop = Property::from(test);
    let verdict = match horizon {
        Some(l) => prop.test(&data.u, &data.y, l, &dims)?,
        None => {
            let sw = sweep(prop, &data.u, &data.y, &dims)?;
            if !sw.too_short.is_empty() {
                println!("skipped horizons (data too short): {:?}", sw.too_short);
            }
            if sw.exhausted {
                println!("sweep exhausted at L = {} without confirmation", n + s);
            }
            sw.last().cloned().ok_or_else(|| {
                Failure::Usage("record too short for every horizon in the sweep".into())
            })?
        }
    };
    println!(
        "{}: {} at L = {} (rank {} of {})",
        prop.name(),
        verdict.status,
        verdict.horizon,
        verdict.achieved_rank,
        verdict.required_rank
    );
    let deficient: Vec<_> = verdict
        .witness_lambdas
        .iter()
        .filter(|(_, rank)| *rank < verdict.required_rank)
        .collect();
    for (lam, rank) in deficient.iter().take(3) {
        println!("  rank {rank} at lambda = {lam}");
    }
    if deficient.len() > 3 {
        println!("  ... {} more deficient probes", deficient.len() - 3);
    }
    println!("test={}", prop.name());
    println!("verdict={}", verdict.status);
    println!("horizon={}", verdict.horizon);
    println!("achieved_rank={}", verdict.achieved_rank);
    println!("required_rank={}", verdict.required_rank);
    if let Some(path) = model {
        let sys: DescriptorSystem<f64> = read_system(&read(&path)?)?;
        let qw = sys.quasi_weierstrass()?;
        let truth = prop.oracle(&qw);
        let sound = !verdict.confirmed() || truth;
        println!("oracle={truth}");
        println!("sound={sound}");
    }
    if strict && !verdict.confirmed() {
        return Err(Failure::Strict);
    }
    Ok(())
}

fn cmd_parameterize(
    data_path: &Path,
    window_path: &Path,
    g_out: Option<PathBuf>,
    strict: bool,
) -> CmdResult {
    let data = read_trajectory_csv::<f64>(&read(data_path)?)?;
    let window = read_trajectory_csv::<f64>(&read(window_path)?)?;
    let depth = window.y.len();
    if depth == 0 {
        return Err(Failure::Usage("window has no valid output rows".into()));
    }
    let par = Parameterizer::new(&data.u, &data.y, depth)?;
    let wu = &window.u[..depth];
    let fit = par.fit(wu, &window.y)?;
    let ok = match par.parameterize(wu, &window.y) {
        Ok(_) => true,
        Err(Error::NotParameterizable { .. }) => false,
        Err(e) => return Err(e.into()),
    };
    println!("depth={depth}");
    println!("columns={}", par.cols());
    println!("residual={:e}", fit.residual);
    println!("parameterizable={ok}");
    if let Some(path) = g_out {
        let text: String = fit.g.iter().map(|v| format!("{v}\n")).collect();
        write(&path, &text)?;
    }
    if strict && !ok {
        return Err(Failure::Strict);
    }
    Ok(())
}

fn cmd_control(scenario: &str, out: Option<PathBuf>, seed_flag: Option<u64>) -> CmdResult {
    let mut rc = run_config(scenario)?;
    if let Some(seed) = seed(seed_flag)? {
        rc.deepc.seed = seed;
    }
    let log = rc.run()?;
    if let Some(path) = &out {
        write(path, &log.to_csv())?;
    }
    println!(
        "scenario={} seed={} reseeds={} unconverged={}",
        rc.scenario.name, rc.deepc.seed, log.reseeds, log.unconverged
    );
    println!("output  start  end  setpoint  final_error  min_error  settled_at  steered");
    for ph in tracking_summary(&log, &rc.schedule) {
        let label = &rc.scenario.output_labels[ph.output];
        let steered = rc.scenario.controllable_outputs.contains(&ph.output);
        let settled = ph
            .settled_at
            .map_or("-".to_string(), |t| format!("{t} (+{})", t - ph.start));
        let mark = if !steered {
            "no"
        } else if ph.settled_within(SETTLE_STEPS) {
            "settled"
        } else {
            "late"
        };
        println!(
            "{label:<6}  {:>5}  {:>3}  {:>8}  {:>11.4e}  {:>9.4e}  {settled:>10}  {mark}",
            ph.start, ph.end, ph.setpoint, ph.final_error, ph.min_error
        );
    }
    Ok(())
}

fn cmd_scenario(name: &str, out: Option<PathBuf>, system: Option<PathBuf>) -> CmdResult {
    let rc = match name {
        "case1" => default_case1_config(),
        "case2" => default_case2_config(),
        other => return Err(Failure::Usage(format!("unknown scenario {other:?}"))),
    };
    if let Some(path) = system {
        write(&path, &write_system(&rc.scenario.system))?;
    }
    let text = rc.to_text();
    match out {
        Some(path) => write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            system,
            scenario,
            input,
            random,
            seed,
            states,
            out,
        } => cmd_simulate(system, scenario, input, random, seed, states, &out),
        Command::Analyze {
            trajectory,
            dims,
            test,
            horizon,
            model,
            strict,
        } => cmd_analyze(&trajectory, &dims, test, horizon, model, strict),
        Command::Parameterize {
            data,
            window,
            g_out,
            strict,
        } => cmd_parameterize(&data, &window, g_out, strict),
        Command::Control {
            scenario,
            out,
            seed,
        } => cmd_control(&scenario, out, seed),
        Command::Scenario { name, out, system } => cmd_scenario(&name, out, system),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Strict) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
