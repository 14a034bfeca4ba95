//! Command-line front end: every analysis in the library as a
//! reproducible CSV table.
//!
//! Subcommands: `analytic` (closed-form advantage curves), `simulate`
//! (Monte Carlo sweeps), `heatmap` (mitigation map), `delay`
//! (response-time tables), `bribe` (user-side profitability). Output goes
//! to stdout or `--out FILE`; relative paths resolve against
//! `$FEESIM_OUT_DIR` when set.
//!
//! Exit codes: 0 success, 2 invalid arguments, 3 when more than 10% of a
//! simulation's runs were truncated at the block cap.

mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use feesim::analytics::{self, ScenarioInputs};
use feesim::delay::{t_eip, t_mitigated};
use feesim::mechanism::MechanismKind;
use feesim::params::{DemandParams, MinerPowers, ProtocolParams};
use feesim::rng::PRNG_NAME;
use feesim::simulator::{classify_grid, sweep, CellLabel, SimConfig, SweepAxis};

use table::{fmt_sig, Cell, OutputTable};

#[derive(Parser)]
#[command(name = "feesim", version, about = "Base-fee dynamics, deviation analytics, and mechanism comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the table to this file instead of stdout; a relative path
    /// resolves against $FEESIM_OUT_DIR when set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for simulation commands. Affects wall-clock time
    /// only; output bytes are identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form relative advantage of a deviation along one axis.
    Analytic(AnalyticArgs),
    /// Monte Carlo excess profit per mechanism along one axis.
    Simulate(SimulateArgs),
    /// Profitability map over (p_x, eps ratio): plain rule vs. mitigation.
    Heatmap(HeatmapArgs),
    /// Consecutive full blocks needed to raise the fee by a factor beta.
    Delay(DelayArgs),
    /// Whether bribing one proposer to mine empty pays for a user.
    Bribe(BribeArgs),
}

/// Market parameters shared by every command, with the running
/// configuration as defaults.
#[derive(Args, Clone, Copy)]
struct MarketArgs {
    /// Base-fee adjustment parameter.
    #[arg(long, default_value_t = 0.125)]
    phi: f64,
    /// Target block size in gas.
    #[arg(long = "s-star", default_value_t = 1.0)]
    s_star: f64,
    /// Target base fee in Gwei per gas.
    #[arg(long = "b-star", default_value_t = 1.0)]
    b_star: f64,
    /// Steady-state tip as a fraction of the target fee.
    #[arg(long = "eps-ratio", default_value_t = 0.04)]
    eps_ratio: f64,
    /// Share of the tip that colluding users keep for themselves.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Bonus factor for an honest maximum-size block at a lowered fee.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

impl MarketArgs {
    fn protocol(&self) -> Result<ProtocolParams, String> {
        ProtocolParams::new(self.phi, self.s_star, self.b_star).map_err(|e| e.to_string())
    }

    fn demand(&self) -> Result<DemandParams, String> {
        DemandParams::new(self.b_star, self.eps_ratio * self.b_star, self.alpha, self.delta)
            .map_err(|e| e.to_string())
    }

    fn annotate(&self, table: &mut OutputTable) {
        table.meta("phi", fmt_sig(self.phi));
        table.meta("s_star", fmt_sig(self.s_star));
        table.meta("b_star", fmt_sig(self.b_star));
        table.meta("eps_ratio", fmt_sig(self.eps_ratio));
        table.meta("alpha", fmt_sig(self.alpha));
        table.meta("delta", fmt_sig(self.delta));
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    /// Miner X deviating alone.
    X,
    /// Miner Y keeping the fee low once X has dropped it.
    YJoin,
    /// Miner Y opening with her own empty block.
    YInit,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnalyticAxis {
    Px,
    Py,
    EpsRatio,
    Alpha,
    Delta,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, value_enum)]
    axis: AnalyticAxis,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    step: f64,
    /// Miner X's proposal probability (fixed unless it is the axis).
    #[arg(long, default_value_t = 0.3)]
    px: f64,
    /// Miner Y's proposal probability (fixed unless it is the axis).
    #[arg(long, default_value_t = 0.18)]
    py: f64,
    #[command(flatten)]
    market: MarketArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimAxis {
    Px,
    EpsRatio,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    axis: SimAxis,
    /// Axis start (default 0.1 for px, 0.01 for eps-ratio).
    #[arg(long)]
    from: Option<f64>,
    /// Axis end (default 0.5 for px, 0.1 for eps-ratio).
    #[arg(long)]
    to: Option<f64>,
    /// Axis increment (default 0.05 for px, 0.01 for eps-ratio).
    #[arg(long)]
    step: Option<f64>,
    /// Comma-separated list: eip, geo:Q, window:W, pool.
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = parse_mechanism,
        default_value = "eip,geo:0.25,geo:0.5,geo:0.75"
    )]
    mechanisms: Vec<MechanismKind>,
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Miner X's proposal probability (fixed unless it is the axis).
    #[arg(long, default_value_t = 0.4)]
    px: f64,
    /// Stop a run once the fee reaches this fraction of the target fee.
    #[arg(long, default_value_t = 0.99)]
    recovery: f64,
    /// Cut a run off after this many blocks and flag it truncated.
    #[arg(long = "max-blocks", default_value_t = 10_000)]
    max_blocks: u64,
    #[command(flatten)]
    market: MarketArgs,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Geometric weight of the mitigation being compared.
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long = "px-from", default_value_t = 0.1)]
    px_from: f64,
    #[arg(long = "px-to", default_value_t = 0.5)]
    px_to: f64,
    #[arg(long = "px-steps", default_value_t = 10)]
    px_steps: usize,
    #[arg(long = "eps-from", default_value_t = 0.01)]
    eps_from: f64,
    #[arg(long = "eps-to", default_value_t = 0.1)]
    eps_to: f64,
    #[arg(long = "eps-steps", default_value_t = 10)]
    eps_steps: usize,
    #[arg(long, default_value_t = 2_000)]
    runs: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.99)]
    recovery: f64,
    #[arg(long = "max-blocks", default_value_t = 10_000)]
    max_blocks: u64,
    #[command(flatten)]
    market: MarketArgs,
}

#[derive(Args)]
struct DelayArgs {
    #[arg(long = "beta-from", default_value_t = 1.0)]
    beta_from: f64,
    #[arg(long = "beta-to", default_value_t = 100.0)]
    beta_to: f64,
    #[arg(long = "beta-step", default_value_t = 1.0)]
    beta_step: f64,
    #[arg(long, default_value_t = 0.125)]
    phi: f64,
    /// Geometric weights to tabulate alongside the plain rule.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
    q: Vec<f64>,
}

#[derive(Args)]
struct BribeArgs {
    /// Gas held by the bribing user.
    #[arg(long, default_value_t = 1.0)]
    gas: f64,
    #[command(flatten)]
    market: MarketArgs,
}

/// A finished command: the table plus the truncation tally that decides
/// the exit code.
struct Run {
    table: OutputTable,
    truncated_runs: u64,
    total_runs: u64,
}

impl Run {
    fn plain(table: OutputTable) -> Self {
        Self { table, truncated_runs: 0, total_runs: 0 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.workers {
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool,
                Err(e) => {
                    eprintln!("error: cannot build a {n}-thread pool: {e}");
                    return ExitCode::from(2);
                }
            };
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    };

    let run = match run {
        Ok(run) => run,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };

    let csv = run.table.to_csv();
    if let Some(path) = &cli.out {
        let path = resolve_out_path(path);
        if let Err(e) = std::fs::write(&path, &csv) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    } else {
        print!("{csv}");
    }

    if run.truncated_runs > 0 {
        eprintln!(
            "warning: {} of {} runs hit the block cap before the fee recovered",
            run.truncated_runs, run.total_runs
        );
        if run.truncated_runs as f64 > 0.1 * run.total_runs as f64 {
            return ExitCode::from(3);
        }
    }
    ExitCode::SUCCESS
}

fn resolve_out_path(path: &PathBuf) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var("FEESIM_OUT_DIR") {
            return PathBuf::from(dir).join(path);
        }
    }
    path.clone()
}

fn dispatch(command: &Command) -> Result<Run, String> {
    match command {
        Command::Analytic(args) => cmd_analytic(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Heatmap(args) => cmd_heatmap(args),
        Command::Delay(args) => cmd_delay(args),
        Command::Bribe(args) => cmd_bribe(args),
    }
}

fn parse_mechanism(s: &str) -> Result<MechanismKind, String> {
    let kind = if s == "eip" {
        MechanismKind::Eip1559
    } else if s == "pool" {
        MechanismKind::FeePool
    } else if let Some(q) = s.strip_prefix("geo:") {
        let q: f64 = q.parse().map_err(|_| format!("bad geometric weight in '{s}'"))?;
        MechanismKind::GeometricAvg { q }
    } else if let Some(w) = s.strip_prefix("window:") {
        let window: usize = w.parse().map_err(|_| format!("bad window length in '{s}'"))?;
        MechanismKind::WindowAvg { window }
    } else {
        return Err(format!("unknown mechanism '{s}' (expected eip, geo:Q, window:W, pool)"));
    };
    kind.validate().map_err(|e| e.to_string())?;
    Ok(kind)
}

fn kind_name(kind: MechanismKind) -> String {
    match kind {
        MechanismKind::Eip1559 => "eip".to_string(),
        MechanismKind::GeometricAvg { q } => format!("geo:{q}"),
        MechanismKind::WindowAvg { window } => format!("window:{window}"),
        MechanismKind::FeePool => "pool".to_string(),
    }
}

/// Ascending grid from..=to in increments of step.
fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0) {
        return Err(format!("step must be positive, got {step}"));
    }
    if to < from {
        return Err(format!("grid end {to} is below start {from}"));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| from + i as f64 * step).collect())
}

/// `steps` evenly spaced points from..=to.
fn linspace(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps == 0 {
        return Err("grid needs at least one point".to_string());
    }
    if to < from {
        return Err(format!("grid end {to} is below start {from}"));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn scenario_name(scenario: ScenarioArg) -> &'static str {
    match scenario {
        ScenarioArg::X => "x",
        ScenarioArg::YJoin => "y-join",
        ScenarioArg::YInit => "y-init",
    }
}

fn axis_name(axis: AnalyticAxis) -> &'static str {
    match axis {
        AnalyticAxis::Px => "px",
        AnalyticAxis::Py => "py",
        AnalyticAxis::EpsRatio => "eps-ratio",
        AnalyticAxis::Alpha => "alpha",
        AnalyticAxis::Delta => "delta",
    }
}

fn cmd_analytic(args: &AnalyticArgs) -> Result<Run, String> {
    // Y appears only in the Y scenarios; delta only enters through Y's
    // honest full block.
    let valid = match args.scenario {
        ScenarioArg::X => matches!(
            args.axis,
            AnalyticAxis::Px | AnalyticAxis::EpsRatio | AnalyticAxis::Alpha
        ),
        ScenarioArg::YJoin | ScenarioArg::YInit => true,
    };
    if !valid {
        return Err(format!(
            "axis '{}' does not apply to scenario '{}'",
            axis_name(args.axis),
            scenario_name(args.scenario)
        ));
    }

    let base = ScenarioInputs {
        protocol: args.market.protocol()?,
        demand: args.market.demand()?,
        powers: match args.scenario {
            ScenarioArg::X => MinerPowers::new(args.px, 0.0),
            _ => MinerPowers::new(args.px, args.py),
        }
        .map_err(|e| e.to_string())?,
    };

    let mut table = OutputTable::new(
        "feesim.analytic",
        &["axis_value", "rel_diff", "threshold_marker"],
    );
    table.meta("tool", "feesim");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("scenario", scenario_name(args.scenario));
    table.meta("axis", axis_name(args.axis));
    table.meta("from", fmt_sig(args.from));
    table.meta("to", fmt_sig(args.to));
    table.meta("step", fmt_sig(args.step));
    table.meta("px", fmt_sig(args.px));
    table.meta("py", fmt_sig(args.py));
    args.market.annotate(&mut table);

    for value in grid(args.from, args.to, args.step)? {
        let mut inputs = base;
        match args.axis {
            AnalyticAxis::Px => inputs.powers.p_x = value,
            AnalyticAxis::Py => inputs.powers.p_y = value,
            AnalyticAxis::EpsRatio => inputs.demand.eps = value * inputs.demand.b_star,
            AnalyticAxis::Alpha => inputs.demand.alpha = value,
            AnalyticAxis::Delta => inputs.demand.delta = value,
        }
        if !(0.0..=1.0).contains(&inputs.powers.p_x)
            || !(0.0..=1.0).contains(&inputs.powers.p_y)
        {
            return Err(format!("axis value {value} pushes a power outside [0, 1]"));
        }

        let (attack, honest, threshold) = match args.scenario {
            ScenarioArg::X => (
                analytics::x_attack_expected(&inputs),
                analytics::x_honest_expected(&inputs),
                analytics::x_attack_threshold(&inputs.protocol, &inputs.demand)
                    .map(|t| (0.0..1.0).contains(&t).then_some(t)),
            ),
            ScenarioArg::YJoin => (
                analytics::y_join_attack_expected(&inputs),
                analytics::y_join_honest_expected(&inputs),
                analytics::y_join_threshold(&inputs),
            ),
            ScenarioArg::YInit => (
                analytics::y_init_attack_expected(&inputs),
                analytics::y_init_honest_expected(&inputs),
                analytics::y_init_threshold(&inputs),
            ),
        };
        let attack = attack.map_err(|e| format!("at axis value {value}: {e}"))?;
        let honest = honest.map_err(|e| format!("at axis value {value}: {e}"))?;
        let threshold = threshold.map_err(|e| format!("at axis value {value}: {e}"))?;
        let rel = analytics::relative_difference(attack, honest).map_err(|e| e.to_string())?;

        table.push_row(vec![
            Cell::Float(value),
            Cell::Float(rel),
            threshold.map_or(Cell::Empty, Cell::Float),
        ]);
    }
    Ok(Run::plain(table))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Run, String> {
    if args.mechanisms.is_empty() {
        return Err("at least one mechanism is required".to_string());
    }
    let (dflt_from, dflt_to, dflt_step) = match args.axis {
        SimAxis::Px => (0.1, 0.5, 0.05),
        SimAxis::EpsRatio => (0.01, 0.1, 0.01),
    };
    let from = args.from.unwrap_or(dflt_from);
    let to = args.to.unwrap_or(dflt_to);
    let step = args.step.unwrap_or(dflt_step);
    let values = grid(from, to, step)?;
    let axis = match args.axis {
        SimAxis::Px => {
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err("px grid must stay within [0, 1]".to_string());
            }
            SweepAxis::MinerPower(values)
        }
        SimAxis::EpsRatio => {
            if values.iter().any(|v| *v <= 0.0) {
                return Err("eps-ratio grid must be positive".to_string());
            }
            SweepAxis::TipRatio(values)
        }
    };

    let mut config = SimConfig::new(
        MechanismKind::Eip1559,
        args.market.protocol()?,
        args.market.demand()?,
        args.px,
        args.seed,
    );
    config.runs = args.runs;
    config.recovery_fraction = args.recovery;
    config.max_blocks = args.max_blocks;
    config.validate().map_err(|e| e.to_string())?;

    let rows = sweep(&config, &axis, &args.mechanisms).map_err(|e| e.to_string())?;

    let mut table = OutputTable::new(
        "feesim.simulate",
        &["axis_value", "mechanism", "mean_excess", "ci_half_width", "truncated_runs"],
    );
    table.meta("tool", "feesim");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("prng", PRNG_NAME);
    table.meta(
        "axis",
        match args.axis {
            SimAxis::Px => "px",
            SimAxis::EpsRatio => "eps-ratio",
        },
    );
    table.meta("from", fmt_sig(from));
    table.meta("to", fmt_sig(to));
    table.meta("step", fmt_sig(step));
    let names: Vec<String> = args.mechanisms.iter().map(|&k| kind_name(k)).collect();
    table.meta("mechanisms", names.join(","));
    table.meta("runs", args.runs);
    table.meta("seed", args.seed);
    table.meta("px", fmt_sig(args.px));
    table.meta("recovery", fmt_sig(args.recovery));
    table.meta("max_blocks", args.max_blocks);
    args.market.annotate(&mut table);

    let mut truncated = 0;
    for row in &rows {
        truncated += row.summary.truncated_runs;
        table.push_row(vec![
            Cell::Float(row.axis_value),
            Cell::Text(kind_name(row.kind)),
            Cell::Float(row.summary.mean_excess),
            Cell::Float(row.summary.ci_half_width),
            Cell::Int(row.summary.truncated_runs as i64),
        ]);
    }
    let total_runs = args.runs * rows.len() as u64;
    Ok(Run { table, truncated_runs: truncated, total_runs })
}

fn cmd_heatmap(args: &HeatmapArgs) -> Result<Run, String> {
    MechanismKind::GeometricAvg { q: args.q }
        .validate()
        .map_err(|e| e.to_string())?;
    let px_grid = linspace(args.px_from, args.px_to, args.px_steps)?;
    if px_grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err("px grid must stay within [0, 1]".to_string());
    }
    let eps_grid = linspace(args.eps_from, args.eps_to, args.eps_steps)?;
    if eps_grid.iter().any(|v| *v <= 0.0) {
        return Err("eps-ratio grid must be positive".to_string());
    }

    let mut config = SimConfig::new(
        MechanismKind::Eip1559,
        args.market.protocol()?,
        args.market.demand()?,
        0.0,
        args.seed,
    );
    config.runs = args.runs;
    config.recovery_fraction = args.recovery;
    config.max_blocks = args.max_blocks;
    config.validate().map_err(|e| e.to_string())?;

    let cells = classify_grid(&px_grid, &eps_grid, args.q, &config).map_err(|e| e.to_string())?;

    let mut table = OutputTable::new("feesim.heatmap", &["p_x", "eps_ratio", "label"]);
    table.meta("tool", "feesim");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("prng", PRNG_NAME);
    table.meta("q", fmt_sig(args.q));
    table.meta("px_from", fmt_sig(args.px_from));
    table.meta("px_to", fmt_sig(args.px_to));
    table.meta("px_steps", args.px_steps);
    table.meta("eps_from", fmt_sig(args.eps_from));
    table.meta("eps_to", fmt_sig(args.eps_to));
    table.meta("eps_steps", args.eps_steps);
    table.meta("runs", args.runs);
    table.meta("seed", args.seed);
    table.meta("recovery", fmt_sig(args.recovery));
    table.meta("max_blocks", args.max_blocks);
    args.market.annotate(&mut table);

    let mut truncated = 0;
    for cell in &cells {
        truncated += cell.truncated_runs;
        let label = match cell.label {
            CellLabel::BothProfit => "both",
            CellLabel::OnlyEipProfit => "eip_only",
            CellLabel::NeitherProfit => "neither",
        };
        table.push_row(vec![
            Cell::Float(cell.p_x),
            Cell::Float(cell.eps_ratio),
            Cell::Text(label.to_string()),
        ]);
    }
    let total_runs = args.runs * 2 * cells.len() as u64;
    Ok(Run { table, truncated_runs: truncated, total_runs })
}

fn cmd_delay(args: &DelayArgs) -> Result<Run, String> {
    for &q in &args.q {
        MechanismKind::GeometricAvg { q }
            .validate()
            .map_err(|e| e.to_string())?;
    }
    let betas = grid(args.beta_from, args.beta_to, args.beta_step)?;

    let mut table = OutputTable::new("feesim.delay", &["beta", "mechanism", "t"]);
    table.meta("tool", "feesim");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("beta_from", fmt_sig(args.beta_from));
    table.meta("beta_to", fmt_sig(args.beta_to));
    table.meta("beta_step", fmt_sig(args.beta_step));
    table.meta("phi", fmt_sig(args.phi));
    let qs: Vec<String> = args.q.iter().map(|q| q.to_string()).collect();
    table.meta("q", qs.join(","));

    for &beta in &betas {
        let t = t_eip(beta, args.phi).map_err(|e| e.to_string())?;
        table.push_row(vec![
            Cell::Float(beta),
            Cell::Text("eip".to_string()),
            Cell::Int(t as i64),
        ]);
        for &q in &args.q {
            let t = t_mitigated(beta, args.phi, q).map_err(|e| e.to_string())?;
            table.push_row(vec![
                Cell::Float(beta),
                Cell::Text(format!("geo:{q}")),
                Cell::Int(t as i64),
            ]);
        }
    }
    Ok(Run::plain(table))
}

fn cmd_bribe(args: &BribeArgs) -> Result<Run, String> {
    if !(args.gas > 0.0) {
        return Err(format!("gas must be positive, got {}", args.gas));
    }
    let protocol = args.market.protocol()?;
    let demand = args.market.demand()?;
    let (profitable, margin) = analytics::bribe_profitable(args.gas, &protocol, &demand);

    let mut table = OutputTable::new("feesim.bribe", &["gas", "margin", "profitable"]);
    table.meta("tool", "feesim");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("gas", fmt_sig(args.gas));
    args.market.annotate(&mut table);
    table.push_row(vec![
        Cell::Float(args.gas),
        Cell::Float(margin),
        Cell::Text(profitable.to_string()),
    ]);
    Ok(Run::plain(table))
}
