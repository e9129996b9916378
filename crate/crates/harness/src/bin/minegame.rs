use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use minegame::generate::{generate_design, generate_from_spec, InstanceSpec};
use minegame::run::counterexample_scenario;
use minegame::scenario::{Mode, SchedulerKind};
use minegame::{parse_scenario, run, write_trace, Scenario};

/// Multi-coin mining game: learning dynamics, equilibria and reward design.
///
/// Exit codes: 0 success, 1 usage or parse error, 2 precondition or
/// assumption failure, 3 invariant-violation finding, 4 budget exhausted.
#[derive(Debug, Parser)]
#[command(name = "minegame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// Overrides the scenario's scheduler seed (instance seed for `gen`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the learning step cap.
    #[arg(long, global = true)]
    max_steps: Option<u64>,
    /// Abort reward design when a designed reward drops below the base one.
    #[arg(long, global = true)]
    strict_protocol: bool,
    /// Overrides the scenario's scheduler.
    #[arg(long, global = true, value_enum)]
    scheduler: Option<SchedulerArg>,
    /// Write the JSON report (or generated scenario) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write trace events, one JSON object per line.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchedulerArg {
    FirstIndex,
    Random,
    BestImprovement,
    Adversarial,
}

impl From<SchedulerArg> for SchedulerKind {
    fn from(arg: SchedulerArg) -> Self {
        match arg {
            SchedulerArg::FirstIndex => SchedulerKind::FirstIndex,
            SchedulerArg::Random => SchedulerKind::Random,
            SchedulerArg::BestImprovement => SchedulerKind::BestImprovement,
            SchedulerArg::Adversarial => SchedulerKind::Adversarial,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenMode {
    Learn,
    Design,
    Enumerate,
    Construct,
    Check,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Better-response learning from the scenario's initial configuration.
    Learn { scenario: PathBuf },
    /// Reward design from the initial to the target configuration.
    Design { scenario: PathBuf },
    /// Enumerate every stable configuration.
    Equilibria { scenario: PathBuf },
    /// Build one equilibrium greedily.
    Construct { scenario: PathBuf },
    /// Check the never-alone and genericity assumptions.
    Check { scenario: PathBuf },
    /// Walk the cycle showing that no exact potential exists.
    Counterexample,
    /// Run a scenario in the mode it declares.
    Run { scenario: PathBuf },
    /// Generate a random scenario.
    Gen {
        #[arg(long, short = 'n')]
        miners: usize,
        #[arg(long, short = 'k')]
        coins: usize,
        #[arg(long, value_enum, default_value = "learn")]
        mode: GenMode,
        /// All coins pay the same reward.
        #[arg(long)]
        symmetric: bool,
        /// Powers within a factor of two, rewards within 10%.
        #[arg(long, conflicts_with = "symmetric")]
        near_equal: bool,
    },
}

/// Usage, parse and I/O problems; all exit with code 1.
type Failure = String;

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {}", path.display(), e) )?;
    parse_scenario(&bytes).map_err(|e| format!("{}: {}", path.display(), e) )
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {}", path.display(), e) ),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string() )
        }
    }
}

fn apply_overrides(scenario: &mut Scenario, global: &Global) {
    if let Some(seed) = global.seed {
        scenario.scheduler.seed = seed;
    }
    if let Some(kind) = global.scheduler {
        scenario.scheduler.kind = kind.into();
    }
    if let Some(steps) = global.max_steps {
        scenario.options.max_steps = Some(steps);
    }
    if global.strict_protocol {
        scenario.options.strict_protocol = true;
    }
}

fn generate(global: &Global, miners: usize, coins: usize, mode: GenMode, symmetric: bool, near_equal: bool) -> Result<i32, Failure> {
    if miners == 0 || coins == 0 {
        return Err("--miners and --coins must be positive".into() );
    }
    let seed = global.seed.unwrap_or(0);
    let spec = if symmetric {
        InstanceSpec::symmetric(miners, coins)
    } else if near_equal {
        InstanceSpec::near_equal(miners, coins)
    } else {
        InstanceSpec::new(miners, coins)
    };
    let mut scenario = match mode {
        GenMode::Design if !symmetric && !near_equal => {
            match generate_design(miners, coins, seed, minegame_core::equilibria::DEFAULT_ENUMERATION_BUDGET) {
                Some(s) => s,
                None => {
                    eprintln!("error: too many configurations to pick equilibrium endpoints");
                    return Ok(4);
                }
            }
        }
        GenMode::Design => return Err("design generation uses the default instance shape".into() ),
        other => {
            let mut s = generate_from_spec(&spec, seed);
            s.mode = match other {
                GenMode::Learn => Mode::Learn,
                GenMode::Enumerate => Mode::Enumerate,
                GenMode::Construct => Mode::Construct,
                GenMode::Check => Mode::Check,
                GenMode::Design => unreachable!(),
            };
            s
        }
    };
    apply_overrides(&mut scenario, global);
    let mut text = scenario.to_json();
    text.push('\n');
    write_output(global.out.as_deref(), &text)?;
    Ok(0)
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    let global = &cli.global;
    let (mut scenario, mode) = match &cli.command {
        Command::Gen {
            miners,
            coins,
            mode,
            symmetric,
            near_equal,
        } => return generate(global, *miners, *coins, *mode, *symmetric, *near_equal),
        Command::Counterexample => (counterexample_scenario(), Some(Mode::Counterexample)),
        Command::Learn { scenario } => (read_scenario(scenario)?, Some(Mode::Learn)),
        Command::Design { scenario } => (read_scenario(scenario)?, Some(Mode::Design)),
        Command::Equilibria { scenario } => (read_scenario(scenario)?, Some(Mode::Enumerate)),
        Command::Construct { scenario } => (read_scenario(scenario)?, Some(Mode::Construct)),
        Command::Check { scenario } => (read_scenario(scenario)?, Some(Mode::Check)),
        Command::Run { scenario } => (read_scenario(scenario)?, None),
    };
    if let Some(mode) = mode {
        scenario.mode = mode;
    }
    if scenario.mode == Mode::Design && scenario.target.is_none() {
        return Err("target: required when mode is `design`".into() );
    }
    apply_overrides(&mut scenario, global);

    let output = run(&scenario);
    if let Some(path) = &global.trace {
        let file = fs::File::create(path).map_err(|e| format!("{}: {}", path.display(), e) )?;
        if let Err(e) = write_trace(&output.trace, io::BufWriter::new(file)) {
            eprintln!("error: {}", e);
            return Ok(3);
        }
    }
    let mut json = output.report.to_json();
    json.push('\n');
    match &global.out {
        Some(path) => {
            write_output(Some(path), &json)?;
            print!("{}", output.report.render_text());
        }
        None => write_output(None, &json)?,
    }
    if let Some(error) = &output.report.error {
        eprintln!("{}: {}", output.report.mode, error);
    }
    Ok(output.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(1)
        }
    }
}
