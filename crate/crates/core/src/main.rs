use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scalkit::contact::{simulate, Phase};
use scalkit::drive::trace_sweep;
use scalkit::io::{output, svg, write_text, ConfigDocument, IoError, PresetName, ScenarioDocument};
use scalkit::linkage::solve_finger;
use scalkit::statics::{force_surface, ForceModel, GridSpec, SurfaceParams};
use scalkit::validate;

const EXIT_INVARIANT: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "scalkit", version, about = "SCAL gripper kinematics, grasp simulation and statics")]
struct Cli {
    /// Accepted for harness compatibility; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free-space slot sweep of B, D and I.
    Trace {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 601)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fingertip force surface.
    Force {
        #[arg(value_enum)]
        model: ModelArg,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `x0:x1:nx,y0:y1:ny` in degrees and mm.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Input moment (N·mm).
        #[arg(long, default_value_t = 1000.0)]
        t_in: f64,
        #[arg(long, default_value_t = 85.27)]
        l1: f64,
        #[arg(long, default_value_t = 70.0)]
        l2: f64,
        #[arg(long, default_value_t = 40.0)]
        h2: f64,
        #[arg(long, default_value_t = 20.0)]
        h3: f64,
    },
    /// Quasi-static grasp scenario.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Invariant suite on a configuration.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Pinch,
    Envelope,
}

enum Failure {
    Input(String),
    Exit(u8),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigDocument, Failure> {
    match path {
        Some(p) => Ok(ConfigDocument::parse(&scalkit::io::read_text(p)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?),
        None => Ok(ConfigDocument::preset(PresetName::ScalR)),
    }
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn trace(config: Option<&Path>, samples: usize, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let p = cfg.linkage_params();
    p.validate().map_err(|e| Failure::Input(e.to_string()))?;
    let pts = trace_sweep(&p, (p.s_min, p.s_max), samples).map_err(|e| Failure::Input(e.to_string()))?;
    let ends = [p.s_min, p.s_max].map(|s| solve_finger(&p, s)).into_iter().collect::<Result<Vec<_>, _>>();
    let ends = ends.map_err(|e| Failure::Input(e.to_string()))?;
    out_dir(out)?;
    write_text(&out.join("trace.csv"), &output::trace_csv(&pts))?;
    write_text(&out.join("trace.svg"), &svg::trace_svg(&pts, &ends))?;
    println!("{} samples over s = [{}, {}] mm", pts.len(), p.s_min, p.s_max);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn force(
    model: ModelArg,
    config: Option<&Path>,
    grid: Option<&str>,
    out: &Path,
    t_in: f64,
    l1: f64,
    l2: f64,
    h2: f64,
    h3: f64,
) -> Result<(), Failure> {
    let model = match model {
        ModelArg::Pinch => ForceModel::Pinch,
        ModelArg::Envelope => ForceModel::Envelope,
    };
    let cfg = load_config(config)?;
    let grid = match grid {
        Some(g) => GridSpec::parse(g).map_err(|e| Failure::Input(e.to_string()))?,
        None => GridSpec::default_for(model),
    };
    let params = SurfaceParams { t_in, l1, k1: cfg.spring.k1, l2, h2, h3 };
    let cells = force_surface(model, &grid, &params);
    out_dir(out)?;
    write_text(&out.join("force.csv"), &output::force_csv(model, &cells))?;
    println!("{}", output::force_summary(model, &cells));
    Ok(())
}

fn run_simulation(config: Option<&Path>, scenario: &Path, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let doc = ScenarioDocument::parse(&scalkit::io::read_text(scenario)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", scenario.display())))?;
    let sc = doc.resolve(&cfg)?;
    let asm = cfg.assembly();
    let trace = simulate(&asm, cfg.drive_mode(), &sc).map_err(|e| Failure::Input(e.to_string()))?;
    out_dir(out)?;
    write_text(&out.join("sim.csv"), &output::sim_csv(&trace))?;
    write_text(&out.join("events.log"), &output::events_log(&trace))?;
    write_text(&out.join("sim.svg"), &svg::sim_svg(&trace))?;
    let phase = trace.final_phase().unwrap_or(Phase::FreeApproach);
    println!("{} frames, {} events, final phase {}", trace.frames.len(), trace.events.len(), phase.name());
    if phase == Phase::Failed {
        return Err(Failure::Exit(EXIT_FAILED));
    }
    Ok(())
}

fn run_validate(config: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let checks = validate::run_suite(&cfg);
    print!("{}", validate::format_table(&checks));
    if validate::all_pass(&checks) {
        Ok(())
    } else {
        Err(Failure::Exit(EXIT_INVARIANT))
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("SCALKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = cli.seed;
    configure_threads();
    let result = match &cli.command {
        Command::Trace { config, samples, out } => trace(config.as_deref(), *samples, out),
        Command::Force { model, config, grid, out, t_in, l1, l2, h2, h3 } => {
            force(*model, config.as_deref(), grid.as_deref(), out, *t_in, *l1, *l2, *h2, *h3)
        }
        Command::Simulate { config, scenario, out } => run_simulation(config.as_deref(), scenario, out),
        Command::Validate { config } => run_validate(config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Exit(code)) => ExitCode::from(code),
    }
}
