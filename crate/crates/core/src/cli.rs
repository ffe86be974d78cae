//! Command-line front end. Every command is deterministic given its flags,
//! input files and `--seed`; reports carry no timestamps.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::backtest::{self, SelectionRule, Staking, StrategyConfig};
use crate::bias_test::test_fairness;
use crate::empirical::{frequency_path, pocket_report, tally, DEFAULT_BURN_IN};
use crate::ou::{self, OuParams, Scheme};
use crate::spin_data::{read_spins, split, Pocket, SpinFormat, SpinSeries};
use crate::staking::KellyCombination;
use crate::walk_forward::{aggregate, run_wfo, WfoPlan, WindowMode};
use crate::wheel;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BIASED_WHEEL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "biased-wheel", version, about = "Biased roulette wheel strategy analysis")]
pub struct Cli {
    /// Directory for report files
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,

    /// Root seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a spin file and rewrite it as canonical CSV
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Output file (defaults to <out-dir>/spins.csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-pocket counts, probabilities and running-frequency statistics
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
    },
    /// Chi-square test of wheel fairness
    BiasTest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Estimate on an in-sample prefix and backtest the remainder
    Backtest {
        #[command(flatten)]
        input: InputArgs,
        /// In-sample length; omitted means estimate and test on the whole series
        #[arg(long)]
        in_sample: Option<usize>,
        #[command(flatten)]
        strategy: StrategyArgs,
        #[arg(long, value_enum, default_value_t = StakingKind::Kelly)]
        staking: StakingKind,
        /// Flat stake per spin (required with --staking flat)
        #[arg(long)]
        stake: Option<f64>,
    },
    /// Anchored walk-forward optimization, Kelly versus flat staking
    Wfo {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        in_sample: usize,
        /// Comma-separated out-of-sample segment lengths
        #[arg(long, value_delimiter = ',', required = true)]
        segments: Vec<usize>,
        #[command(flatten)]
        strategy: StrategyArgs,
        /// Slide a fixed-length in-sample window instead of anchoring it
        #[arg(long)]
        rolling: bool,
        /// Also write per-run equity paths as CSV
        #[arg(long)]
        equity_csv: bool,
    },
    /// Monte Carlo ensemble of the Ornstein-Uhlenbeck probability model
    OuSim {
        #[command(flatten)]
        params: OuArgs,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long)]
        euler: bool,
        /// Skip the (large) per-path CSV
        #[arg(long)]
        no_paths: bool,
    },
    /// Fit Ornstein-Uhlenbeck parameters to one pocket's running frequency
    OuFit {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 9)]
        pocket: Pocket,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: usize,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
    },
    /// Generate synthetic spins from a fair or biased wheel
    Simulate {
        /// Pinned pocket probabilities, e.g. 9=0.0322,22=0.0308
        #[arg(long, value_delimiter = ',', value_parser = parse_override)]
        pockets: Vec<(Pocket, f64)>,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Auto,
    Plain,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StakingKind {
    Kelly,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CombinationArg {
    Summed,
    Cover,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    #[arg(long, default_value_t = 0.03)]
    pub threshold: f64,
    #[arg(long, default_value_t = 2000.0)]
    pub capital: f64,
    /// Keep only the k most probable pockets above the threshold
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub kelly_multiplier: f64,
    #[arg(long, value_enum, default_value_t = CombinationArg::Summed)]
    pub kelly_combination: CombinationArg,
}

impl StrategyArgs {
    fn config(&self) -> StrategyConfig {
        StrategyConfig {
            filter_threshold: self.threshold,
            selection_rule: self
                .top_k
                .map_or(SelectionRule::AllAboveThreshold, SelectionRule::TopKAboveThreshold),
            staking: Staking::Kelly {
                multiplier: self.kelly_multiplier,
            },
            kelly_combination: match self.kelly_combination {
                CombinationArg::Summed => KellyCombination::SummedProbability,
                CombinationArg::Cover => KellyCombination::CoverOdds,
            },
            initial_capital: self.capital,
            ..StrategyConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OuArgs {
    /// JSON file with {theta, mu, sigma, p0}; individual flags override it
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub p0: Option<f64>,
}

fn parse_override(s: &str) -> Result<(Pocket, f64), String> {
    let (pocket, prob) = s
        .split_once('=')
        .ok_or_else(|| format!("expected POCKET=PROB, got {s:?}"))?;
    let pocket: Pocket = pocket
        .trim()
        .parse()
        .map_err(|_| format!("bad pocket {pocket:?}"))?;
    let prob: f64 = prob
        .trim()
        .parse()
        .map_err(|_| format!("bad probability {prob:?}"))?;
    Ok((pocket, prob))
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Parses `argv` and runs the command. Usage errors exit with 2, validation
/// and I/O errors with 1.
pub fn main_with_args<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load(input: &InputArgs) -> CliResult<SpinSeries> {
    let file = File::open(&input.input)
        .map_err(|e| format!("cannot open {}: {e}", input.input.display()))?;
    let format = match input.format {
        FormatArg::Auto => None,
        FormatArg::Plain => Some(SpinFormat::Plain),
        FormatArg::Csv => Some(SpinFormat::Csv),
    };
    let label = input.input.display().to_string();
    Ok(read_spins(std::io::BufReader::new(file), format)?.with_label(label))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        format!("cannot create {}: {e}", path.display())
    })?))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let out = &cli.out_dir;
    let needs_out_dir = !matches!(cli.command, Command::Simulate { .. } | Command::Ingest { out: Some(_), .. });
    if needs_out_dir {
        fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    }

    match &cli.command {
        Command::Ingest { input, out: target } => {
            let series = load(input)?;
            let target = target.clone().unwrap_or_else(|| out.join("spins.csv"));
            fs::write(&target, series.to_csv())?;
            println!("{} spins -> {}", series.len(), target.display());
        }
        Command::Analyze { input, burn_in } => {
            let series = load(input)?;
            write_json(&out.join("analysis.json"), &pocket_report(&series, *burn_in)?)?;
        }
        Command::BiasTest { input, alpha } => {
            let series = load(input)?;
            let report = test_fairness(&tally(&series)?, *alpha)?;
            write_json(&out.join("bias_test.json"), &report)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Backtest {
            input,
            in_sample,
            strategy,
            staking,
            stake,
        } => {
            let series = load(input)?;
            let mut config = strategy.config();
            if *staking == StakingKind::Flat {
                let stake = stake.ok_or("--staking flat requires --stake")?;
                config.staking = Staking::Flat { stake };
            }
            let (estimation, segment) = match in_sample {
                Some(n) if *n == 0 || *n >= series.len() => {
                    return Err(format!(
                        "--in-sample must be between 1 and {}",
                        series.len() - 1
                    )
                    .into())
                }
                Some(n) => (
                    series.slice(0, *n, "in-sample"),
                    series.slice(*n, series.len(), "out-of-sample"),
                ),
                None => (series.clone(), series.clone()),
            };
            let result = backtest::run_backtest(&segment, &tally(&estimation)?, &config)?;
            write_json(
                &out.join("backtest_summary.json"),
                &serde_json::json!({
                    "selected_numbers": result.selected_numbers,
                    "stake_fraction": result.stake_fraction,
                    "summary": result.summary,
                }),
            )?;
            backtest::write_ledger_csv(&result.ledger, create(&out.join("backtest_ledger.csv"))?)?;
        }
        Command::Wfo {
            input,
            in_sample,
            segments,
            strategy,
            rolling,
            equity_csv,
        } => {
            let series = load(input)?;
            let plan = WfoPlan {
                split: split(&series, *in_sample, segments)?,
                config: strategy.config(),
                window: if *rolling {
                    WindowMode::Rolling
                } else {
                    WindowMode::Anchored
                },
            };
            let reports = run_wfo(&plan)?;
            for r in &reports {
                write_json(&out.join(format!("wfo_run_{}.json", r.run_index)), r)?;
                if *equity_csv {
                    backtest::write_equity_csv(
                        &r.kelly_equity,
                        create(&out.join(format!("wfo_run_{}_kelly_equity.csv", r.run_index)))?,
                    )?;
                    backtest::write_equity_csv(
                        &r.flat_equity,
                        create(&out.join(format!("wfo_run_{}_flat_equity.csv", r.run_index)))?,
                    )?;
                }
            }
            write_json(&out.join("wfo_aggregate.json"), &aggregate(&reports)?)?;
        }
        Command::OuSim {
            params,
            steps,
            paths,
            dt,
            euler,
            no_paths,
        } => {
            let p = resolve_ou(params)?;
            let scheme = if *euler { Scheme::EulerMaruyama } else { Scheme::Exact };
            let ensemble = ou::simulate_with(&p, *steps, *paths, *dt, cli.seed, scheme)?;
            let rows: Vec<_> = (1..=*steps)
                .map(|k| {
                    let (mean, variance) = ou::moments(&p, k as f64 * dt);
                    serde_json::json!({
                        "step": k,
                        "analytic_mean": mean,
                        "analytic_variance": variance,
                        "ensemble_mean": ensemble.step_mean(k),
                        "ensemble_variance": ensemble.step_variance(k),
                    })
                })
                .collect();
            write_json(
                &out.join("ou_moments.json"),
                &serde_json::json!({
                    "params": p,
                    "dt": dt,
                    "n_paths": paths,
                    "n_steps": steps,
                    "seed": cli.seed,
                    "scheme": scheme,
                    "range_violations": ensemble.range_violations(),
                    "steps": rows,
                }),
            )?;
            if !no_paths {
                ensemble.write_csv(create(&out.join("ou_ensemble.csv"))?)?;
            }
        }
        Command::OuFit {
            input,
            pocket,
            burn_in,
            dt,
        } => {
            let series = load(input)?;
            let path = frequency_path(&series, *pocket)?;
            let fit = ou::calibrate(&path.path, *dt, *burn_in)?;
            write_json(&out.join("ou_fit.json"), &fit)?;
        }
        Command::Simulate {
            pockets,
            n,
            out: target,
            format,
        } => {
            let overrides: BTreeMap<Pocket, f64> = pockets.iter().copied().collect();
            if overrides.len() != pockets.len() {
                return Err("a pocket is listed more than once in --pockets".into());
            }
            let spec = wheel::biased(&overrides)?.with_seed(cli.seed);
            let series = wheel::spin(&spec, *n);
            let fmt = match format {
                FormatArg::Plain => SpinFormat::Plain,
                _ => SpinFormat::Csv,
            };
            if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(target, series.serialize(fmt))?;
            println!("{} spins ({}) -> {}", series.len(), spec.label, target.display());
        }
    }
    Ok(())
}

fn resolve_ou(args: &OuArgs) -> CliResult<OuParams> {
    let mut p = match &args.params {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text)?
        }
        None => OuParams::reference(),
    };
    if let Some(v) = args.theta {
        p.theta = v;
    }
    if let Some(v) = args.mu {
        p.mu = v;
    }
    if let Some(v) = args.sigma {
        p.sigma = v;
    }
    if let Some(v) = args.p0 {
        p.p0 = v;
    }
    p.validate()?;
    Ok(p)
}
