mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bellcorr::corrsets::{self, ModelTag};
use bellcorr::detect::{self, RatioPair};
use bellcorr::mat3::{det_sign, svd, RealMatrix};
use bellcorr::oracle::battery::{run_battery, BatteryConfig, Level};
use bellcorr::oracle::{self, OracleConfig};
use bellcorr::pauli::{self, Operator4};
use bellcorr::MeasurementSettings;
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Cell, Format, Report, Table, Value};
use scenario::{parse_matrix, parse_state, Scenario};

#[derive(Parser)]
#[command(name = "bellcorr", version, about = "Correlation sets of the two-qubit (2,m,2) Bell scenario")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Support function of a coefficient matrix Z.
    Support {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Coefficient matrix as JSON rows; overrides the scenario's Z.
        #[arg(long)]
        z: Option<String>,
    },
    /// Gauge function of a correlation matrix C.
    Gauge {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Optimal witness for a target correlation matrix.
    Witness {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        model: WitnessModel,
        #[command(flatten)]
        target: TargetArgs,
    },
    /// Randomized cross-check of every closed form against the oracles.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        /// Perturb the closed forms so that the battery must fail.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Critical Werner noise of four detection methods.
    Table1,
    /// Containment radii between the correlation sets.
    Ratios {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Haar samples for the sampled ratio.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Gauge of a noisy state family over a grid of noise fractions.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum, default_value_t = Family::Werner)]
        family: Family,
        /// Number of evenly spaced points in [0, 1].
        #[arg(long, default_value_t = 11)]
        points: usize,
        /// Explicit comma-separated noise fractions; overrides --points.
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario: chsh, pauli3, b-rot, i3322-opt.
    #[arg(long, conflicts_with = "file")]
    scenario: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    file: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        match (&self.scenario, &self.file) {
            (Some(name), None) => Scenario::named(name),
            (None, Some(path)) => Scenario::from_file(path),
            _ => bail!("pass either --scenario NAME or --file PATH"),
        }
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Correlation matrix as JSON rows.
    #[arg(long, conflicts_with = "state")]
    c: Option<String>,
    /// State whose correlations are the target: werner:P, tau:P, rho_max,
    /// phi_plus, mixed, or inline JSON.
    #[arg(long)]
    state: Option<String>,
}

impl TargetArgs {
    /// Target correlation matrix and a description of where it came from.
    fn resolve(&self, sc: &Scenario) -> Result<(RealMatrix, String)> {
        if let Some(text) = &self.c {
            return Ok((parse_matrix(text, "--c")?, "--c".into()));
        }
        if let Some(text) = &self.state {
            let rho = parse_state(text)?.build()?;
            return Ok((corrsets::correlation_matrix(&rho, &sc.settings)?, format!("state {text}")));
        }
        if let Some(c) = &sc.c {
            return Ok((c.clone(), "file C".into()));
        }
        if let Some(st) = &sc.state {
            let rho = st.build()?;
            return Ok((corrsets::correlation_matrix(&rho, &sc.settings)?, "file state".into()));
        }
        bail!("no target: pass --c, --state, or a scenario file with C or state")
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Sep,
    Qm,
    Max,
}

impl From<ModelArg> for ModelTag {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Sep => ModelTag::Sep,
            ModelArg::Qm => ModelTag::Qm,
            ModelArg::Max => ModelTag::Max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WitnessModel {
    Sep,
    Qm,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Werner,
    Tau,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render(cli.format));
            ExitCode::SUCCESS
        }
        Err(err) => match err.downcast::<Failed>() {
            Ok(Failed(report)) => {
                print!("{}", report.render(cli.format));
                eprintln!("error: verification failed");
                ExitCode::from(1)
            }
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(2)
            }
        },
    }
}

/// Carries the report of a failed verification run.
#[derive(Debug)]
struct Failed(Report);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("verification failed")
    }
}

impl std::error::Error for Failed {}

fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Support { scenario, model, z } => cmd_support(&scenario.load()?, (*model).into(), z.as_deref()),
        Command::Gauge { scenario, model, target } => cmd_gauge(&scenario.load()?, (*model).into(), target),
        Command::Witness { scenario, model, target } => {
            let model = match model {
                WitnessModel::Sep => ModelTag::Sep,
                WitnessModel::Qm => ModelTag::Qm,
            };
            cmd_witness(&scenario.load()?, model, target)
        }
        Command::Verify { seed, level, inject_fault } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            cmd_verify(*seed, level, *inject_fault)
        }
        Command::Table1 => cmd_table1(),
        Command::Ratios { scenario, seed, samples } => cmd_ratios(&scenario.load()?, *seed, *samples),
        Command::Sweep { scenario, model, family, points, p_grid } => {
            let grid = match p_grid {
                Some(g) => g.clone(),
                None => {
                    if *points < 2 {
                        bail!("--points must be at least 2");
                    }
                    (0..*points).map(|k| k as f64 / (*points - 1) as f64).collect()
                }
            };
            cmd_sweep(&scenario.load()?, (*model).into(), *family, &grid)
        }
    }
}

fn scenario_fields(r: &mut Report, sc: &Scenario) {
    r.field("scenario", Value::Text(sc.name.clone()))
        .field("m", Value::Int(sc.settings.m() as u64))
        .field("r", Value::Int(sc.settings.r() as u64));
}

fn cmd_support(sc: &Scenario, model: ModelTag, z: Option<&str>) -> Result<Report> {
    let z = match z {
        Some(text) => parse_matrix(text, "--z")?,
        None => sc.z.clone().context("no coefficient matrix: pass --z or a scenario file with Z")?,
    };
    let value = corrsets::support(model, &sc.settings, &z)?;
    let x = sc.settings.pullback(&z)?;
    let oracle = oracle::support_oracle(model, &sc.settings, &z, &OracleConfig::default())?;
    let mut r = Report::new("support");
    scenario_fields(&mut r, sc);
    r.field("model", Value::Text(model.to_string()))
        .field("value", Value::Num(value))
        .field("singular_values", Value::Vector(svd(&x)?.s))
        .field("det_sign", Value::Num(det_sign(&x)?))
        .field("oracle", Value::Num(oracle))
        .field("oracle_gap", Value::Num((value - oracle).abs()));
    Ok(r)
}

fn cmd_gauge(sc: &Scenario, model: ModelTag, target: &TargetArgs) -> Result<Report> {
    let (c, source) = target.resolve(sc)?;
    check_target(&sc.settings, &c)?;
    let g = corrsets::gauge(model, &sc.settings, &c)?;
    let mut r = Report::new("gauge");
    scenario_fields(&mut r, sc);
    r.field("model", Value::Text(model.to_string()))
        .field("target", Value::Text(source));
    if g.finite {
        let w = sc.settings.pushforward(&c)?;
        r.field("value", Value::Num(g.value))
            .field("singular_values", Value::Vector(svd(&w)?.s))
            .field("det_sign", Value::Num(det_sign(&w)?));
    } else {
        r.field("value", Value::Text("infinite".into()));
    }
    r.field("range_condition", Value::Flag(g.finite));
    Ok(r)
}

fn cmd_witness(sc: &Scenario, model: ModelTag, target: &TargetArgs) -> Result<Report> {
    let (c, source) = target.resolve(sc)?;
    check_target(&sc.settings, &c)?;
    let rep = detect::witness_report(model, &sc.settings, &c)?;
    let mut r = Report::new("witness");
    scenario_fields(&mut r, sc);
    r.field("model", Value::Text(model.to_string()))
        .field("target", Value::Text(source))
        .field("sensitivity", Value::Num(rep.sensitivity))
        .field("attained", Value::Num(rep.attained))
        .field("round_trip_gap", Value::Num((rep.attained - rep.sensitivity).abs()))
        .field("p_crit", Value::Num(rep.p_crit))
        .field("detected", Value::Flag(rep.detected()))
        .field("z_star", Value::Matrix(rep.z_star.clone()))
        .field("witness", Value::Operator(rep.witness));
    Ok(r)
}

fn cmd_verify(seed: u64, level: Level, inject_fault: bool) -> Result<Report> {
    let battery = run_battery(&BatteryConfig { seed, level, inject_fault })?;
    let mut r = Report::new("verify");
    r.seed = Some(seed);
    r.field("level", Value::Text(format!("{level:?}").to_lowercase()))
        .field("checks", Value::Int(battery.checks.len() as u64))
        .field("instances", Value::Int(battery.total_instances() as u64))
        .field("failures", Value::Int(battery.total_failures() as u64))
        .field("passed", Value::Flag(battery.passed()));
    r.table = Some(Table {
        columns: vec!["check", "instances", "failures", "max_error", "tolerance"],
        rows: battery
            .checks
            .iter()
            .map(|c| {
                vec![
                    Cell::Text(c.name.clone()),
                    Cell::Int(c.instances as u64),
                    Cell::Int(c.failures as u64),
                    Cell::Num(c.max_error),
                    Cell::Num(c.tolerance),
                ]
            })
            .collect(),
    });
    r.records = battery
        .failures
        .iter()
        .map(|f| serde_json::to_value(f).expect("serializable"))
        .collect();
    if battery.passed() {
        Ok(r)
    } else {
        Err(Failed(r).into())
    }
}

fn cmd_table1() -> Result<Report> {
    let rows = detect::table1(&MeasurementSettings::chsh(), &MeasurementSettings::b_rot())?;
    let mut r = Report::new("table1");
    let opt = |x: Option<f64>| x.map_or(Cell::Missing, Cell::Num);
    r.table = Some(Table {
        columns: vec!["method", "two_settings", "three_settings"],
        rows: rows
            .iter()
            .map(|row| vec![Cell::Text(row.method.into()), opt(row.two_settings), opt(row.three_settings)])
            .collect(),
    });
    Ok(r)
}

fn cmd_ratios(sc: &Scenario, seed: u64, samples: usize) -> Result<Report> {
    let cfg = OracleConfig { seed, samples, ..OracleConfig::default() };
    let mut r = Report::new("ratios");
    r.seed = Some(seed);
    scenario_fields(&mut r, sc);
    let mut rows = Vec::new();
    for pair in RatioPair::ALL {
        let rep = detect::containment_radius(&sc.settings, pair)?;
        let scan = oracle::ratio_scan(&sc.settings, pair, &cfg)?;
        rows.push(vec![
            Cell::Text(pair.to_string()),
            Cell::Num(rep.radius),
            Cell::Num(rep.inner_gauge),
            Cell::Num(scan.best),
            Cell::Int(samples as u64),
        ]);
    }
    r.table = Some(Table {
        columns: vec!["pair", "radius", "maximizer_gauge", "sampled_max", "samples"],
        rows,
    });
    Ok(r)
}

fn cmd_sweep(sc: &Scenario, model: ModelTag, family: Family, grid: &[f64]) -> Result<Report> {
    let mut r = Report::new("sweep");
    scenario_fields(&mut r, sc);
    r.field("model", Value::Text(model.to_string()));
    let mut rows = Vec::with_capacity(grid.len());
    for &p in grid {
        let rho: Operator4 = match family {
            Family::Werner => pauli::werner_state(p)?,
            Family::Tau => pauli::tau_state(p)?,
        };
        let c = corrsets::correlation_matrix(&rho, &sc.settings)?;
        let g = corrsets::gauge(model, &sc.settings, &c)?;
        let gauge_cell = if g.finite { Cell::Num(g.value) } else { Cell::Text("infinite".into()) };
        rows.push(vec![
            Cell::Num(p),
            gauge_cell,
            Cell::Int(u64::from(g.finite && g.value <= 1.0)),
        ]);
    }
    r.table = Some(Table {
        columns: vec!["p", "gauge", "inside"],
        rows,
    });
    Ok(r)
}

fn check_target(s: &MeasurementSettings, c: &RealMatrix) -> Result<()> {
    if c.shape() != (s.m(), s.m()) {
        bail!("target must be {0}x{0}, got {1}x{2}", s.m(), c.rows(), c.cols());
    }
    Ok(())
}
