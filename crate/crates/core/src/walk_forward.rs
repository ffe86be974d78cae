//! Anchored walk-forward optimization.
//!
//! Run `k` estimates pocket probabilities on the original in-sample window
//! plus every earlier out-of-sample segment, selects numbers, and tests them
//! on segment `k` twice: once with Kelly staking and once with a flat stake
//! equal to the mean stake of that Kelly run. Capital restarts from
//! `initial_capital` on every run.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backtest::{
    run_with_selection, select_numbers, PerformanceSummary, Staking, StrategyConfig,
};
use crate::empirical::{tally, EmpiricalDistribution};
use crate::spin_data::{DataSplit, Pocket, SpinSeries};
use crate::staking::flat_stake_from_kelly_run;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// In-sample grows by each tested segment; the origin never moves.
    #[default]
    Anchored,
    /// In-sample keeps the original length and slides forward.
    Rolling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfoPlan {
    pub split: DataSplit,
    pub config: StrategyConfig,
    pub window: WindowMode,
}

impl WfoPlan {
    pub fn anchored(split: DataSplit, config: StrategyConfig) -> Self {
        Self {
            split,
            config,
            window: WindowMode::Anchored,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfoRunReport {
    /// 1-based.
    pub run_index: usize,
    pub in_sample_len: usize,
    pub out_of_sample_len: usize,
    pub in_sample_counts: Vec<u64>,
    pub selected_numbers: Vec<Pocket>,
    pub selected_probs: Vec<f64>,
    /// Total fraction of equity staked per spin by the Kelly run.
    pub kelly_fraction: f64,
    pub flat_stake: f64,
    /// The flat stake is averaged from the Kelly run over the same segment,
    /// so the flat run uses information from its own test period.
    pub flat_stake_lookahead: bool,
    pub kelly_summary: PerformanceSummary,
    pub flat_summary: PerformanceSummary,
    #[serde(skip)]
    pub kelly_equity: Vec<f64>,
    #[serde(skip)]
    pub flat_equity: Vec<f64>,
}

pub fn run_wfo(plan: &WfoPlan) -> Result<Vec<WfoRunReport>> {
    plan.config.validate()?;
    let split = &plan.split;
    if split.out_of_sample_segments.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let multiplier = match plan.config.staking {
        Staking::Kelly { multiplier } => multiplier,
        Staking::Flat { .. } => 1.0,
    };
    let kelly_cfg = plan.config.with_staking(Staking::Kelly { multiplier });

    let all = split.flatten();
    let base_len = split.in_sample.len();
    let mut dist = tally(&split.in_sample)?;
    let mut start = base_len;
    let mut reports = Vec::with_capacity(split.out_of_sample_segments.len());

    for (k, segment) in split.out_of_sample_segments.iter().enumerate() {
        if segment.is_empty() {
            return Err(Error::EmptySegment);
        }
        let (estimation, in_sample_len) = match plan.window {
            WindowMode::Anchored => (dist.clone(), start),
            WindowMode::Rolling => {
                let window = all.slice(start - base_len, start, "");
                (tally(&window)?, base_len)
            }
        };
        reports.push(run_one(k + 1, in_sample_len, &estimation, segment, &plan.config, &kelly_cfg)?);

        dist = dist.merge(&tally(segment)?);
        start += segment.len();
    }
    Ok(reports)
}

fn run_one(
    run_index: usize,
    in_sample_len: usize,
    dist: &EmpiricalDistribution,
    segment: &SpinSeries,
    config: &StrategyConfig,
    kelly_cfg: &StrategyConfig,
) -> Result<WfoRunReport> {
    let selected = select_numbers(dist, config);
    let probs: Vec<f64> = selected.iter().map(|&p| dist.probability(p)).collect();

    let kelly = run_with_selection(segment, &selected, &probs, kelly_cfg)?;
    let flat_stake = match flat_stake_from_kelly_run(&kelly.stakes()) {
        Ok(s) => s,
        Err(Error::EmptySequence) => 0.0,
        Err(e) => return Err(e),
    };
    let flat_cfg = config.with_staking(Staking::Flat { stake: flat_stake });
    let flat = run_with_selection(segment, &selected, &probs, &flat_cfg)?;

    Ok(WfoRunReport {
        run_index,
        in_sample_len,
        out_of_sample_len: segment.len(),
        in_sample_counts: dist.counts().to_vec(),
        selected_numbers: selected,
        selected_probs: probs,
        kelly_fraction: kelly.stake_fraction.unwrap_or(0.0),
        flat_stake,
        flat_stake_lookahead: true,
        kelly_equity: kelly.equity_path(),
        flat_equity: flat.equity_path(),
        kelly_summary: kelly.summary,
        flat_summary: flat.summary,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeTotals {
    pub total_pnl: f64,
    pub profitable_runs: Vec<usize>,
    pub max_drawdown: f64,
    pub max_consecutive_losses: usize,
    pub wins: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub run_index: usize,
    pub in_sample_len: usize,
    pub n_obs: usize,
    pub selected_numbers: Vec<Pocket>,
    pub kelly_pnl: f64,
    pub flat_pnl: f64,
    pub kelly_pct_pnl: f64,
    pub flat_pct_pnl: f64,
    pub kelly_max_drawdown: f64,
    pub flat_max_drawdown: f64,
    pub kelly_calmar: f64,
    pub flat_calmar: f64,
}

/// Kelly versus flat, per run and over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfoAggregate {
    pub runs: Vec<RunComparison>,
    pub kelly: ModeTotals,
    pub flat: ModeTotals,
    /// Every pocket selected in at least one run.
    pub numbers_ever_selected: BTreeSet<Pocket>,
}

pub fn aggregate(reports: &[WfoRunReport]) -> Result<WfoAggregate> {
    if reports.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let totals = |pick: fn(&WfoRunReport) -> &PerformanceSummary| {
        reports.iter().fold(ModeTotals::default(), |mut acc, r| {
            let s = pick(r);
            acc.total_pnl += s.pnl;
            if s.pnl > 0.0 {
                acc.profitable_runs.push(r.run_index);
            }
            acc.max_drawdown = acc.max_drawdown.max(s.max_drawdown);
            acc.max_consecutive_losses = acc.max_consecutive_losses.max(s.max_consecutive_losses);
            acc.wins += s.wins;
            acc.losses += s.losses;
            acc
        })
    };
    let runs = reports
        .iter()
        .map(|r| RunComparison {
            run_index: r.run_index,
            in_sample_len: r.in_sample_len,
            n_obs: r.out_of_sample_len,
            selected_numbers: r.selected_numbers.clone(),
            kelly_pnl: r.kelly_summary.pnl,
            flat_pnl: r.flat_summary.pnl,
            kelly_pct_pnl: r.kelly_summary.pct_pnl,
            flat_pct_pnl: r.flat_summary.pct_pnl,
            kelly_max_drawdown: r.kelly_summary.max_drawdown,
            flat_max_drawdown: r.flat_summary.max_drawdown,
            kelly_calmar: r.kelly_summary.calmar,
            flat_calmar: r.flat_summary.calmar,
        })
        .collect();
    Ok(WfoAggregate {
        runs,
        kelly: totals(|r| &r.kelly_summary),
        flat: totals(|r| &r.flat_summary),
        numbers_ever_selected: reports
            .iter()
            .flat_map(|r| r.selected_numbers.iter().copied())
            .collect(),
    })
}
