//! Event-driven replay of a straight-up betting strategy over a spin segment.
//!
//! Numbers are selected once from an estimation distribution and frozen for
//! the whole segment. Each spin is one event: every selected pocket is backed
//! with an equal share of the spin's stake, the winning share (if any) pays
//! `payout_b` and the other shares are lost, all netted into one
//! [`LedgerEntry`].

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::empirical::EmpiricalDistribution;
use crate::spin_data::{Pocket, SpinSeries};
use crate::staking::{combined_kelly_with, KellyCombination};
use crate::{Error, Result, POCKETS, STRAIGHT_UP_PAYOUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    #[default]
    AllAboveThreshold,
    /// The `k` most probable pockets among those above the threshold.
    TopKAboveThreshold(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Staking {
    /// Stake `multiplier * K * equity` per spin, recomputed on current equity.
    Kelly { multiplier: f64 },
    /// Fixed total stake per spin.
    Flat { stake: f64 },
}

impl Default for Staking {
    fn default() -> Self {
        Staking::Kelly { multiplier: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuinPolicy {
    /// Stop betting for the rest of the segment once equity is exhausted or
    /// the next stake exceeds it.
    #[default]
    StopWhenStakeUnaffordable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub filter_threshold: f64,
    pub selection_rule: SelectionRule,
    pub staking: Staking,
    pub kelly_combination: KellyCombination,
    pub initial_capital: f64,
    pub payout_b: f64,
    pub ruin_policy: RuinPolicy,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            filter_threshold: 0.03,
            selection_rule: SelectionRule::AllAboveThreshold,
            staking: Staking::default(),
            kelly_combination: KellyCombination::SummedProbability,
            initial_capital: 2000.0,
            payout_b: STRAIGHT_UP_PAYOUT,
            ruin_policy: RuinPolicy::StopWhenStakeUnaffordable,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.filter_threshold > 0.0 && self.filter_threshold < 1.0) {
            return bad(format!("filter threshold {} not in (0, 1)", self.filter_threshold));
        }
        if !(self.initial_capital > 0.0 && self.initial_capital.is_finite()) {
            return bad(format!("initial capital {} must be positive", self.initial_capital));
        }
        if !(self.payout_b > 0.0 && self.payout_b.is_finite()) {
            return bad(format!("payout {} must be positive", self.payout_b));
        }
        match self.staking {
            Staking::Kelly { multiplier } if !(multiplier > 0.0 && multiplier <= 1.0) => {
                bad(format!("Kelly multiplier {multiplier} not in (0, 1]"))
            }
            Staking::Flat { stake } if !(stake >= 0.0 && stake.is_finite()) => {
                bad(format!("flat stake {stake} must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn with_staking(mut self, staking: Staking) -> Self {
        self.staking = staking;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub spin_index: usize,
    pub outcome: Pocket,
    pub selected_numbers: Vec<Pocket>,
    pub stake_total: f64,
    pub pnl: f64,
    pub equity_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSummary {
    pub n_obs: usize,
    pub wins: usize,
    pub losses: usize,
    pub pnl: f64,
    pub pct_pnl: f64,
    pub total_wins: f64,
    /// Positive magnitude.
    pub total_losses: f64,
    pub avg_win: f64,
    pub avg_loss: f64,
    pub max_win: f64,
    pub max_loss: f64,
    pub max_drawdown: f64,
    /// `+inf` (serialized as `null`) when profitable without any drawdown.
    pub calmar: f64,
    pub max_consecutive_losses: usize,
    pub loss_streak_histogram: BTreeMap<usize, usize>,
    pub initial_capital: f64,
    pub final_equity: f64,
    pub ruined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub selected_numbers: Vec<Pocket>,
    /// Fraction of equity staked per spin in Kelly mode, after the multiplier
    /// and the no-negative-bets floor.
    pub stake_fraction: Option<f64>,
    pub ledger: Vec<LedgerEntry>,
    pub summary: PerformanceSummary,
}

impl BacktestResult {
    pub fn equity_path(&self) -> Vec<f64> {
        std::iter::once(self.summary.initial_capital)
            .chain(self.ledger.iter().map(|e| e.equity_after))
            .collect()
    }

    pub fn stakes(&self) -> Vec<f64> {
        self.ledger.iter().map(|e| e.stake_total).collect()
    }
}

/// Pockets whose estimated probability reaches the filter threshold,
/// ascending by pocket number.
pub fn select_numbers(dist: &EmpiricalDistribution, config: &StrategyConfig) -> Vec<Pocket> {
    let mut passing: Vec<Pocket> = (0..POCKETS as Pocket)
        .filter(|&p| dist.probability(p) >= config.filter_threshold)
        .collect();
    if let SelectionRule::TopKAboveThreshold(k) = config.selection_rule {
        passing.sort_by(|&a, &b| {
            dist.probability(b)
                .total_cmp(&dist.probability(a))
                .then(a.cmp(&b))
        });
        passing.truncate(k);
        passing.sort_unstable();
    }
    passing
}

pub fn run_backtest(
    segment: &SpinSeries,
    dist: &EmpiricalDistribution,
    config: &StrategyConfig,
) -> Result<BacktestResult> {
    config.validate()?;
    if segment.is_empty() {
        return Err(Error::EmptySegment);
    }
    let selected = select_numbers(dist, config);
    let probs: Vec<f64> = selected.iter().map(|&p| dist.probability(p)).collect();
    run_with_selection(segment, &selected, &probs, config)
}

/// Backtest with an explicit selection. `probs` are the estimated
/// probabilities of `selected`, used only for Kelly sizing.
pub fn run_with_selection(
    segment: &SpinSeries,
    selected: &[Pocket],
    probs: &[f64],
    config: &StrategyConfig,
) -> Result<BacktestResult> {
    config.validate()?;
    if segment.is_empty() {
        return Err(Error::EmptySegment);
    }
    if selected.len() != probs.len() {
        return Err(Error::InvalidParams(
            "selection and probability lists differ in length".into(),
        ));
    }

    let stake_fraction = match config.staking {
        Staking::Kelly { multiplier } if !selected.is_empty() => Some(
            combined_kelly_with(probs, config.payout_b, config.kelly_combination)?
                .stake_fraction(multiplier),
        ),
        Staking::Kelly { .. } => Some(0.0),
        Staking::Flat { .. } => None,
    };

    let mut is_selected = [false; POCKETS];
    for &p in selected {
        is_selected[p as usize] = true;
    }
    let n_selected = selected.len() as f64;

    let mut equity = config.initial_capital;
    let mut ledger = Vec::new();
    let mut ruined = false;

    if !selected.is_empty() {
        for (spin_index, &outcome) in segment.outcomes().iter().enumerate() {
            let stake_total = match (config.staking, stake_fraction) {
                (Staking::Flat { stake }, _) => stake,
                (Staking::Kelly { .. }, Some(f)) => equity * f,
                (Staking::Kelly { .. }, None) => unreachable!(),
            };
            if stake_total <= 0.0 {
                continue;
            }
            match config.ruin_policy {
                RuinPolicy::StopWhenStakeUnaffordable => {
                    if equity <= 0.0 || stake_total > equity {
                        ruined = true;
                        break;
                    }
                }
            }
            let per_number = stake_total / n_selected;
            let pnl = if is_selected[outcome as usize] {
                config.payout_b * per_number - (stake_total - per_number)
            } else {
                -stake_total
            };
            equity += pnl;
            ledger.push(LedgerEntry {
                spin_index,
                outcome,
                selected_numbers: selected.to_vec(),
                stake_total,
                pnl,
                equity_after: equity,
            });
        }
    }

    let summary = summarize(&ledger, config.initial_capital, ruined);
    Ok(BacktestResult {
        selected_numbers: selected.to_vec(),
        stake_fraction,
        ledger,
        summary,
    })
}

/// Builds the performance summary of a ledger.
pub fn summarize(ledger: &[LedgerEntry], initial_capital: f64, ruined: bool) -> PerformanceSummary {
    let mut wins = 0;
    let mut losses = 0;
    let mut total_wins = 0.0;
    let mut total_losses = 0.0;
    let mut max_win: f64 = 0.0;
    let mut max_loss: f64 = 0.0;
    for e in ledger {
        if e.pnl > 0.0 {
            wins += 1;
            total_wins += e.pnl;
            max_win = max_win.max(e.pnl);
        } else if e.pnl < 0.0 {
            losses += 1;
            total_losses += -e.pnl;
            max_loss = max_loss.max(-e.pnl);
        }
    }
    let pnl = total_wins - total_losses;
    let mut equity_path = Vec::with_capacity(ledger.len() + 1);
    equity_path.push(initial_capital);
    equity_path.extend(ledger.iter().map(|e| e.equity_after));
    let mdd = max_drawdown(&equity_path);
    let streaks = loss_streaks(ledger);

    PerformanceSummary {
        n_obs: ledger.len(),
        wins,
        losses,
        pnl,
        pct_pnl: 100.0 * pnl / initial_capital,
        total_wins,
        total_losses,
        avg_win: if wins > 0 { total_wins / wins as f64 } else { 0.0 },
        avg_loss: if losses > 0 { total_losses / losses as f64 } else { 0.0 },
        max_win,
        max_loss,
        max_drawdown: mdd,
        calmar: calmar(pnl, mdd),
        max_consecutive_losses: streaks.max_streak,
        loss_streak_histogram: streaks.histogram,
        initial_capital,
        final_equity: ledger.last().map_or(initial_capital, |e| e.equity_after),
        ruined,
    }
}

/// Largest peak-to-trough decline of an equity path, in currency.
pub fn max_drawdown(equity_path: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut mdd: f64 = 0.0;
    for &w in equity_path {
        peak = peak.max(w);
        mdd = mdd.max(peak - w);
    }
    mdd
}

/// Return over maximum drawdown. With no drawdown the ratio is `+inf` for a
/// profit and `0` otherwise.
pub fn calmar(pnl: f64, mdd: f64) -> f64 {
    if mdd > 0.0 {
        pnl / mdd
    } else if pnl > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LossStreaks {
    /// streak length -> number of streaks of that length
    pub histogram: BTreeMap<usize, usize>,
    pub max_streak: usize,
}

/// Run-length encoding of consecutive losing entries, including a streak cut
/// off by the end of the ledger.
pub fn loss_streaks(ledger: &[LedgerEntry]) -> LossStreaks {
    let mut out = LossStreaks::default();
    let mut current = 0usize;
    let close = |len: usize, out: &mut LossStreaks| {
        if len > 0 {
            *out.histogram.entry(len).or_default() += 1;
            out.max_streak = out.max_streak.max(len);
        }
    };
    for e in ledger {
        if e.pnl < 0.0 {
            current += 1;
        } else {
            close(current, &mut out);
            current = 0;
        }
    }
    close(current, &mut out);
    out
}

/// Writes `spin_index,outcome,selected,stake_total,pnl,equity_after`, with
/// the selected pockets joined by `;`.
pub fn write_ledger_csv<W: Write>(ledger: &[LedgerEntry], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "spin_index",
        "outcome",
        "selected",
        "stake_total",
        "pnl",
        "equity_after",
    ])?;
    for e in ledger {
        let selected = e
            .selected_numbers
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            e.spin_index.to_string(),
            e.outcome.to_string(),
            selected,
            e.stake_total.to_string(),
            e.pnl.to_string(),
            e.equity_after.to_string(),
        ])?;
    }
    w.flush()
}

/// Writes `step,equity` rows, step 0 being the initial capital.
pub fn write_equity_csv<W: Write>(equity_path: &[f64], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "equity"])?;
    for (i, v) in equity_path.iter().enumerate() {
        w.write_record([i.to_string(), v.to_string()])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::{tally, EmpiricalDistribution};
    use crate::fixtures;
    use proptest::prelude::*;

    fn series(v: &[u8]) -> SpinSeries {
        SpinSeries::new(v.to_vec(), "t").unwrap()
    }

    fn flat(stake: f64) -> StrategyConfig {
        StrategyConfig::default().with_staking(Staking::Flat { stake })
    }

    fn brute_force_mdd(path: &[f64]) -> f64 {
        let mut best: f64 = 0.0;
        for t in 0..path.len() {
            for s in 0..=t {
                best = best.max(path[s] - path[t]);
            }
        }
        best
    }

    fn entry(pnl: f64) -> LedgerEntry {
        LedgerEntry {
            spin_index: 0,
            outcome: 0,
            selected_numbers: vec![],
            stake_total: 1.0,
            pnl,
            equity_after: 0.0,
        }
    }

    #[test]
    fn select_reference_fixture() {
        let d = EmpiricalDistribution::from_counts(fixtures::reference_in_sample_counts()).unwrap();
        assert_eq!(select_numbers(&d, &StrategyConfig::default()), vec![9, 22]);
        let top1 = StrategyConfig {
            selection_rule: SelectionRule::TopKAboveThreshold(1),
            ..Default::default()
        };
        assert_eq!(select_numbers(&d, &top1), vec![9]);
    }

    #[test]
    fn select_uniform_is_empty() {
        let d = EmpiricalDistribution::from_counts([3; 37]).unwrap();
        assert!(select_numbers(&d, &StrategyConfig::default()).is_empty());
    }

    #[test]
    fn select_ties_prefer_lower_pocket() {
        let mut c = [10u64; 37];
        c[4] = 50;
        c[20] = 50;
        c[30] = 60;
        let d = EmpiricalDistribution::from_counts(c).unwrap();
        let cfg = StrategyConfig {
            selection_rule: SelectionRule::TopKAboveThreshold(2),
            ..Default::default()
        };
        assert_eq!(select_numbers(&d, &cfg), vec![4, 30]);
    }

    #[test]
    fn single_number_hit() {
        let r = run_with_selection(&series(&[9]), &[9], &[0.0322], &flat(1.0)).unwrap();
        assert_eq!(r.ledger[0].pnl, 35.0);
        assert_eq!(r.summary.wins, 1);
        assert_eq!(r.summary.losses, 0);
        assert_eq!(r.summary.pnl, 35.0);
    }

    #[test]
    fn single_number_misses() {
        let r = run_with_selection(&series(&[0, 0]), &[9], &[0.0322], &flat(1.0)).unwrap();
        assert_eq!(r.summary.pnl, -2.0);
        assert_eq!(r.summary.max_drawdown, 2.0);
        assert_eq!(r.summary.wins, 0);
        assert_eq!(r.summary.max_consecutive_losses, 2);
    }

    #[test]
    fn two_number_hit_nets_losing_leg() {
        let stake_total = 10.0;
        let s = stake_total / 2.0;
        let r = run_with_selection(&series(&[9]), &[9, 22], &[0.0322, 0.0308], &flat(stake_total))
            .unwrap();
        assert_eq!(r.ledger[0].pnl, 35.0 * s - s);
        assert_eq!(r.ledger[0].pnl, 34.0 * s);
    }

    #[test]
    fn empty_selection_places_no_bets() {
        let d = EmpiricalDistribution::from_counts([3; 37]).unwrap();
        let r = run_backtest(&series(&[1, 2, 3]), &d, &StrategyConfig::default()).unwrap();
        assert!(r.ledger.is_empty());
        assert_eq!(r.summary.pnl, 0.0);
        assert_eq!(r.summary.n_obs, 0);
        assert_eq!(r.summary.calmar, 0.0);
        assert_eq!(r.summary.final_equity, 2000.0);
    }

    #[test]
    fn empty_segment_errors() {
        let d = tally(&series(&[9])).unwrap();
        assert_eq!(
            run_backtest(&series(&[]), &d, &StrategyConfig::default()),
            Err(Error::EmptySegment)
        );
    }

    #[test]
    fn kelly_stake_compounds_on_equity() {
        let cfg = StrategyConfig::default();
        let r = run_with_selection(&series(&[0, 9, 0]), &[9], &[0.0322], &cfg).unwrap();
        let f = crate::staking::kelly_fraction(35.0, 0.0322).value();
        assert_eq!(r.stake_fraction, Some(f));
        let mut eq = 2000.0;
        for (e, hit) in r.ledger.iter().zip([false, true, false]) {
            let stake = eq * f;
            assert_eq!(e.stake_total, stake);
            eq += if hit { 35.0 * stake } else { -stake };
            assert_eq!(e.equity_after, eq);
        }
    }

    #[test]
    fn negative_kelly_never_bets() {
        let cfg = StrategyConfig::default();
        let r = run_with_selection(&series(&[0, 9, 0]), &[9], &[0.02], &cfg).unwrap();
        assert_eq!(r.stake_fraction, Some(0.0));
        assert!(r.ledger.is_empty());
    }

    #[test]
    fn flat_ruin_stops_betting() {
        let cfg = StrategyConfig {
            initial_capital: 25.0,
            ..flat(10.0)
        };
        let r = run_with_selection(&series(&[0, 0, 0, 9, 9]), &[9], &[0.03], &cfg).unwrap();
        // 25 -> 15 -> 5, then a 10 stake is unaffordable
        assert_eq!(r.ledger.len(), 2);
        assert!(r.summary.ruined);
        assert_eq!(r.summary.final_equity, 5.0);
    }

    #[test]
    fn invalid_config_rejected() {
        let d = tally(&series(&[9])).unwrap();
        let cfg = StrategyConfig {
            filter_threshold: 0.0,
            ..Default::default()
        };
        assert!(run_backtest(&series(&[9]), &d, &cfg).is_err());
        let cfg = StrategyConfig::default().with_staking(Staking::Kelly { multiplier: 1.5 });
        assert!(run_backtest(&series(&[9]), &d, &cfg).is_err());
    }

    #[test]
    fn drawdown_examples() {
        assert_eq!(max_drawdown(&[1.0, 2.0, 3.0, 4.0]), 0.0);
        assert_eq!(max_drawdown(&[100.0, 120.0, 80.0, 110.0]), 40.0);
        assert_eq!(brute_force_mdd(&[100.0, 120.0, 80.0, 110.0]), 40.0);
    }

    #[test]
    fn calmar_examples() {
        assert!((calmar(29979.14, 5053.89) - 5.93).abs() < 0.01);
        assert!((calmar(6839.57, 7167.49) - 0.95).abs() < 0.01);
        assert_eq!(calmar(0.0, 12.0), 0.0);
        assert_eq!(calmar(5.0, 0.0), f64::INFINITY);
        assert_eq!(calmar(0.0, 0.0), 0.0);
    }

    #[test]
    fn streak_examples() {
        let l: Vec<_> = [-1.0, -1.0, 1.0, -1.0].into_iter().map(entry).collect();
        let s = loss_streaks(&l);
        assert_eq!(s.histogram, BTreeMap::from([(2, 1), (1, 1)]));
        assert_eq!(s.max_streak, 2);

        let l: Vec<_> = [1.0, 3.0].into_iter().map(entry).collect();
        let s = loss_streaks(&l);
        assert!(s.histogram.is_empty());
        assert_eq!(s.max_streak, 0);
    }

    #[test]
    fn ledger_csv_header() {
        let r = run_with_selection(&series(&[9, 1]), &[9, 22], &[0.03, 0.03], &flat(2.0)).unwrap();
        let mut buf = Vec::new();
        write_ledger_csv(&r.ledger, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("spin_index,outcome,selected,stake_total,pnl,equity_after")
        );
        assert_eq!(lines.next(), Some("0,9,9;22,2,34,2034"));
        assert_eq!(lines.next(), Some("1,1,9;22,2,-2,2032"));
    }

    #[test]
    fn flat_win_and_loss_sizes_constant() {
        let spins: Vec<u8> = (0..400).map(|i| ((i * 7) % 37) as u8).collect();
        let r = run_with_selection(&series(&spins), &[9, 22], &[0.03, 0.03], &flat(30.0)).unwrap();
        let s = &r.summary;
        assert_eq!(s.max_loss, 30.0);
        assert_eq!(s.avg_loss, 30.0);
        assert_eq!(s.max_win, 35.0 * 15.0 - 15.0);
        assert!((s.avg_win - s.max_win).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn drawdown_matches_brute_force(path in prop::collection::vec(-1e4f64..1e4, 1..200)) {
            prop_assert_eq!(max_drawdown(&path), brute_force_mdd(&path));
        }
    }
}
