use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use dbs_uplink::error::SolveError;
use dbs_uplink::experiments::{run_experiments, ExperimentConfig};
use dbs_uplink::oracle::OracleCaps;
use dbs_uplink::placement::{SearchMode, SearchOptions};
use dbs_uplink::report::{write_trace, SolutionReport};
use dbs_uplink::scenario::{load_scenario, save_scenario, ScenarioConfig};
use dbs_uplink::solver::{solve, Algorithm};
use dbs_uplink::verify::{run_verify, VerifyConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_CAPS: u8 = 3;

#[derive(Parser)]
#[command(version, about = "Drone base station placement and uplink resource allocation")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Joint,
    CoordinateDescent,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write a JSON report.
    Solve {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// aa-bud, hd-dbs, s-mbs or exact-bud (micro instances only).
        #[arg(long = "algo", value_parser = parse_algorithm, default_value = "aa-bud")]
        algorithm: Algorithm,
        /// Report path (stdout gets only the summary line).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every evaluated placement to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Placement search strategy.
        #[arg(long, value_enum, default_value = "joint")]
        mode: Mode,
    },
    /// Run the sweeps of an experiment config; one CSV per sweep.
    Sweep {
        /// Experiment config JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out_dir: PathBuf,
        /// First seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of seeds (overrides the config).
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Compare the solvers against exact oracles on random micro-instances.
    Verify {
        /// Number of random instances.
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Seed of the first instance.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Most UEs per instance.
        #[arg(long, default_value_t = 8)]
        max_ues: usize,
        /// Most drones per instance.
        #[arg(long, default_value_t = 2)]
        max_drones: usize,
        /// Largest per-station subcarrier budget.
        #[arg(long, default_value_t = 12)]
        max_sc: u32,
        /// Most candidate altitudes.
        #[arg(long, default_value_t = 2)]
        max_altitudes: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Test hook: run the approximation on halved budgets.
        #[arg(long, hide = true)]
        fault_halve_capacity: bool,
    },
    /// Generate a scenario file.
    GenScenario {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of UEs.
        #[arg(long, default_value_t = 170)]
        ues: usize,
        /// Number of drones.
        #[arg(long, default_value_t = 3)]
        drones: usize,
        /// Square side length in meters.
        #[arg(long, default_value_t = 1000.0)]
        area: f64,
        /// Horizontal candidate sites (a perfect square).
        #[arg(long, default_value_t = 36)]
        sites: usize,
        /// Restrict candidate altitudes to this one (meters).
        #[arg(long)]
        altitude: Option<f64>,
    },
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: dbs_uplink::solver::UnknownAlgorithm| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }

    fn solve(e: SolveError) -> Self {
        let code = match e {
            SolveError::CapsExceeded(_) => EXIT_CAPS,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e)
    }
}

fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| Failure::new(EXIT_FAILURE, e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            scenario,
            algorithm,
            out,
            trace,
            mode,
        } => {
            let s = load_scenario(&scenario).map_err(|e| Failure::new(EXIT_BAD_INPUT, e))?;
            let options = SearchOptions {
                mode: match mode {
                    Mode::Joint => SearchMode::Joint,
                    Mode::CoordinateDescent => SearchMode::CoordinateDescent,
                },
                trace: trace.is_some(),
            };
            let result = solve(&s, algorithm, options).map_err(Failure::solve)?;
            info!("{} placements evaluated", result.evaluations);
            let report = SolutionReport::new(&s, algorithm, &result.solution, result.evaluations);
            if let Some(path) = &out {
                write_json(path, &report)?;
            }
            if let Some(path) = &trace {
                let file = File::create(path).map_err(|e| Failure::new(EXIT_FAILURE, format!("{}: {e}", path.display())))?;
                write_trace(&result.trace, &s, BufWriter::new(file)).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            }
            println!("{}", report.summary());
        }
        Command::Sweep {
            config,
            out_dir,
            seed,
            seeds,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| Failure::new(EXIT_BAD_INPUT, e))?;
            if let Some(s) = seed {
                cfg.seeds.start = s;
            }
            if let Some(n) = seeds {
                cfg.seeds.count = n;
            }
            if cfg.seeds.count == 0 {
                warn!("zero seeds: every point will report n_seeds = 0");
            }
            let written = run_experiments(&cfg, &out_dir).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Verify {
            instances,
            seed,
            max_ues,
            max_drones,
            max_sc,
            max_altitudes,
            json,
            fault_halve_capacity,
        } => {
            let mut config = VerifyConfig {
                instances,
                seed,
                fault_halve_capacity,
                ..Default::default()
            };
            config.micro.max_ues = max_ues;
            config.micro.max_drones = max_drones;
            config.micro.sc_budget_range.1 = max_sc;
            config.micro.sc_budget_range.0 = config.micro.sc_budget_range.0.min(max_sc);
            config.micro.max_altitudes = max_altitudes;
            config.check_caps(&OracleCaps::default()).map_err(Failure::solve)?;
            if instances == 0 {
                warn!("zero instances requested: nothing to check");
                eprintln!("warning: zero instances requested, vacuous pass");
            }
            let report = run_verify(&config).map_err(Failure::solve)?;
            for t in &report.tallies {
                let status = if t.violations == 0 { "pass" } else { "FAIL" };
                println!("{status} {:<24} checked {:>6}  violations {}", t.check.name(), t.checked, t.violations);
                if let Some(msg) = &t.first_violation {
                    println!("     first: {msg}");
                }
            }
            println!(
                "{} instances in {:.2?}; worst ratio {:.4} (assignment), {:.4} (placement + assignment)",
                report.instances, report.elapsed, report.worst_ratio, report.worst_bud_ratio
            );
            if let Some(path) = &json {
                write_json(path, &report)?;
            }
            if !report.passed() {
                return Err(Failure::new(EXIT_FAILURE, format!("{} violations", report.total_violations())));
            }
        }
        Command::GenScenario {
            out,
            seed,
            ues,
            drones,
            area,
            sites,
            altitude,
        } => {
            let mut cfg = ScenarioConfig {
                area_m: area,
                ue_count: ues,
                drone_count: drones,
                grid_sites: sites,
                ..Default::default()
            };
            if let Some(h) = altitude {
                cfg.altitudes_m = vec![h];
            }
            let s = cfg.build(seed).map_err(|e| Failure::new(EXIT_BAD_INPUT, e))?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            }
            save_scenario(&s, &out).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
            println!("wrote {} ({} UEs, {} drones)", out.display(), s.ues.len(), s.drone_count());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
