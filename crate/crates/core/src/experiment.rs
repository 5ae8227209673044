//! Experiment runners: PL* vs. non-adaptive comparisons over random orders,
//! order-effect repetitions and D-correlation, with CSV output.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::adaptive::{
    generate_orders, new_feature_counts, non_mandatory_mask, plstar_learn_family, score_from_counts,
    FamilyConfig, FamilyError, OracleChoice, OtRepository, Randomization, TooManyOrdersRequested,
};
use crate::learn::{LearnerConfig, LearningMetrics};
use crate::mealy::{equivalent, MealyMachine};
use crate::rng::Xoshiro256;
use crate::sampling::ProductSample;
use crate::spl::{ProductLine, SplError};
use crate::stats::{self, StatsError, TestResult};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Spl(#[from] SplError),
    #[error(transparent)]
    Orders(#[from] TooManyOrdersRequested),
    #[error("order {order_id}: {source}")]
    Learning { order_id: usize, source: FamilyError },
    #[error("order {0:?} is not a permutation of the sample")]
    NotAPermutation(Vec<usize>),
    #[error("non-adaptive metrics differ between orders {0} and {1}")]
    NonAdaptiveVaries(usize, usize),
    #[error("learned model of product {product} is not equivalent to the product")]
    WrongModel { product: usize },
    #[error("malformed comparison CSV: {0}")]
    MalformedCsv(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Everything a run needs besides the order(s).
#[derive(Debug, Clone)]
pub struct Experiment {
    pub sample: ProductSample,
    /// Product machines, indexed like the sample.
    pub suls: Vec<MealyMachine>,
    non_mandatory: u64,
    pub oracle: OracleChoice,
    pub randomize: Randomization,
    pub learner: LearnerConfig,
    pub seed: u64,
    /// Check every learned model against its product.
    pub verify: bool,
}

impl Experiment {
    pub fn new(line: &ProductLine, sample: ProductSample) -> Result<Self, SplError> {
        let suls = sample
            .products()
            .iter()
            .map(|c| line.derive(c))
            .collect::<Result<_, _>>()?;
        Ok(Experiment {
            non_mandatory: non_mandatory_mask(&line.model)?,
            sample,
            suls,
            oracle: OracleChoice::WpAuto { min_depth: 0 },
            randomize: Randomization::default(),
            learner: LearnerConfig::default(),
            seed: 0,
            verify: false,
        })
    }

    pub fn score(&self, order: &[usize]) -> f64 {
        score_from_counts(&new_feature_counts(order, &self.sample, self.non_mandatory))
    }

    pub fn new_feature_counts(&self, order: &[usize]) -> Vec<u32> {
        new_feature_counts(order, &self.sample, self.non_mandatory)
    }

    fn config(&self, adaptive: bool, seed: u64, run_id: u64) -> FamilyConfig {
        FamilyConfig {
            adaptive,
            oracle: self.oracle,
            learner: self.learner,
            randomize: self.randomize,
            seed,
            run_id,
        }
    }

    fn check_order(&self, order: &[usize]) -> Result<(), ExperimentError> {
        let mut seen = vec![false; self.suls.len()];
        for &p in order {
            if p >= seen.len() || std::mem::replace(&mut seen[p], true) {
                return Err(ExperimentError::NotAPermutation(order.to_vec()));
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(ExperimentError::NotAPermutation(order.to_vec()))
        }
    }

    /// One family run; `run_id` keys the prefix/suffix shuffles.
    pub fn run_family(
        &self,
        order: &[usize],
        adaptive: bool,
        seed: u64,
        run_id: u64,
    ) -> Result<LearningMetrics, ExperimentError> {
        self.check_order(order)?;
        let out = plstar_learn_family(
            &self.suls,
            order,
            &self.config(adaptive, seed, run_id),
            OtRepository::new(),
        )
        .map_err(|source| ExperimentError::Learning {
            order_id: run_id as usize,
            source,
        })?;
        if self.verify {
            for run in &out.runs {
                let ok = equivalent(&run.model, &self.suls[run.product])
                    .map(|e| e.is_equivalent())
                    .unwrap_or(false);
                if !ok {
                    return Err(ExperimentError::WrongModel { product: run.product });
                }
            }
        }
        Ok(out.totals())
    }

    /// `count` seeded random orders.
    pub fn orders(&self, count: usize) -> Result<Vec<Vec<usize>>, ExperimentError> {
        let mut rng = Xoshiro256::substream(self.seed, "orders", &[]);
        Ok(generate_orders(self.suls.len(), count, &mut rng)?)
    }

    /// Learns every order with both methods. Rows come back in order-id
    /// order whatever the scheduling.
    pub fn compare(&self, orders: &[Vec<usize>]) -> Result<Vec<CompareRow>, ExperimentError> {
        match self.compare_partial(orders) {
            (rows, None) => Ok(rows),
            (_, Some(e)) => Err(e),
        }
    }

    /// Like `compare`, but keeps the rows completed before the first
    /// failing order (in order-id order) alongside the error.
    pub fn compare_partial(&self, orders: &[Vec<usize>]) -> (Vec<CompareRow>, Option<ExperimentError>) {
        let results: Vec<Result<CompareRow, ExperimentError>> = orders
            .par_iter()
            .enumerate()
            .map(|(i, order)| {
                let pl = self.run_family(order, true, self.seed, i as u64)?;
                let na = self.run_family(order, false, self.seed, i as u64)?;
                Ok(CompareRow {
                    order_id: i,
                    d: self.score(order),
                    order: order.clone(),
                    pl,
                    na,
                })
            })
            .collect();
        let mut rows = Vec::with_capacity(results.len());
        for r in results {
            match r {
                Ok(row) => rows.push(row),
                Err(e) => return (rows, Some(e)),
            }
        }
        if let Some(i) = rows.iter().position(|r| r.na != rows[0].na) {
            return (rows, Some(ExperimentError::NonAdaptiveVaries(0, i)));
        }
        (rows, None)
    }

    /// PL* only, one metrics record per order (run ids as in `compare`).
    pub fn plstar_runs(&self, orders: &[Vec<usize>]) -> Result<Vec<LearningMetrics>, ExperimentError> {
        orders
            .par_iter()
            .enumerate()
            .map(|(i, order)| self.run_family(order, true, self.seed, i as u64))
            .collect()
    }

    /// PL* on one order `reps` times, each repetition with a fresh seed.
    pub fn repeat(&self, order: &[usize], reps: usize) -> Result<Vec<LearningMetrics>, ExperimentError> {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = Xoshiro256::substream(self.seed, "reps", &[r as u64]).next_u64();
                self.run_family(order, true, seed, r as u64)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub order_id: usize,
    pub d: f64,
    pub order: Vec<usize>,
    pub pl: LearningMetrics,
    pub na: LearningMetrics,
}

const METRICS: [&str; 7] = [
    "rounds",
    "mq_resets",
    "mq_symbols",
    "eq_resets",
    "eq_symbols",
    "total_resets",
    "total_symbols",
];

fn metric_values(m: &LearningMetrics) -> [u64; 7] {
    [
        m.rounds,
        m.mq_resets,
        m.mq_symbols,
        m.eq_resets,
        m.eq_symbols,
        m.total_resets(),
        m.total_symbols(),
    ]
}

fn metric(m: &LearningMetrics, name: &str) -> f64 {
    let i = METRICS.iter().position(|&n| n == name).expect("known metric");
    metric_values(m)[i] as f64
}

pub fn compare_header() -> Vec<String> {
    let mut h = vec!["order_id".to_string(), "d".into(), "order".into()];
    for arm in ["pl", "na"] {
        h.extend(METRICS.iter().map(|m| format!("{arm}_{m}")));
    }
    h
}

fn format_order(order: &[usize]) -> String {
    order.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(compare_header())?;
    for r in rows {
        let mut rec = vec![r.order_id.to_string(), format!("{:.12}", r.d), format_order(&r.order)];
        for m in [&r.pl, &r.na] {
            rec.extend(metric_values(m).iter().map(u64::to_string));
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_compare_csv<R: Read>(input: R) -> Result<Vec<CompareRow>, ExperimentError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != compare_header() {
        return Err(ExperimentError::MalformedCsv(format!(
            "unexpected header `{}`",
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| ExperimentError::MalformedCsv(format!("row {}: bad {what}", line + 1));
        let num = |i: usize| rec[i].parse::<u64>().map_err(|_| bad(&header[i]));
        let arm = |base: usize| -> Result<LearningMetrics, ExperimentError> {
            Ok(LearningMetrics {
                rounds: num(base)?,
                mq_resets: num(base + 1)?,
                mq_symbols: num(base + 2)?,
                eq_resets: num(base + 3)?,
                eq_symbols: num(base + 4)?,
            })
        };
        let order = rec[2]
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| bad("order")))
            .collect::<Result<_, _>>()?;
        rows.push(CompareRow {
            order_id: num(0)? as usize,
            d: rec[1].parse().map_err(|_| bad("d"))?,
            order,
            pl: arm(3)?,
            na: arm(3 + METRICS.len())?,
        });
    }
    Ok(rows)
}

/// Per-metric aggregate of a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub metric: String,
    pub pl_mean: f64,
    pub pl_std: f64,
    pub na_mean: f64,
    pub na_std: f64,
    /// `(1 − pl / na) · 100` on the means.
    pub improvement: Option<f64>,
    /// Paired one-sided test of "PL* is cheaper"; `None` when undefined.
    pub test: Option<TestResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub orders: usize,
    pub metrics: Vec<MetricSummary>,
}

impl Summary {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = stats::mean(xs).unwrap_or(f64::NAN);
    let s = if xs.len() > 1 { stats::std_dev(xs).unwrap_or(f64::NAN) } else { 0.0 };
    (m, s)
}

pub fn summarize(rows: &[CompareRow]) -> Summary {
    let metrics = METRICS
        .iter()
        .map(|&name| {
            let pl: Vec<f64> = rows.iter().map(|r| metric(&r.pl, name)).collect();
            let na: Vec<f64> = rows.iter().map(|r| metric(&r.na, name)).collect();
            let (pl_mean, pl_std) = mean_std(&pl);
            let (na_mean, na_std) = mean_std(&na);
            MetricSummary {
                metric: name.to_string(),
                pl_mean,
                pl_std,
                na_mean,
                na_std,
                improvement: stats::improvement_percentage(pl_mean, na_mean).ok(),
                test: stats::paired_t_one_sided(&pl, &na).ok(),
            }
        })
        .collect();
    Summary {
        orders: rows.len(),
        metrics,
    }
}

/// Cheapest and most expensive PL* orders: rows sorted by total resets,
/// then total symbols, then rounds.
pub fn best_and_worst(rows: &[CompareRow]) -> Option<(&CompareRow, &CompareRow)> {
    let key = |r: &&CompareRow| (r.pl.total_resets(), r.pl.total_symbols(), r.pl.rounds, r.order_id);
    Some((rows.iter().min_by_key(key)?, rows.iter().max_by_key(key)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderEffect {
    pub metric: String,
    pub best_mean: f64,
    pub best_std: f64,
    pub worst_mean: f64,
    pub worst_std: f64,
    pub test: Result<TestResult, String>,
}

pub fn order_effect(best: &[LearningMetrics], worst: &[LearningMetrics]) -> Vec<OrderEffect> {
    ["total_resets", "total_symbols", "rounds"]
        .iter()
        .map(|&name| {
            let b: Vec<f64> = best.iter().map(|m| metric(m, name)).collect();
            let w: Vec<f64> = worst.iter().map(|m| metric(m, name)).collect();
            let (best_mean, best_std) = mean_std(&b);
            let (worst_mean, worst_std) = mean_std(&w);
            OrderEffect {
                metric: name.to_string(),
                best_mean,
                best_std,
                worst_mean,
                worst_std,
                test: stats::unpaired_t_two_sided(&b, &w).map_err(|e| e.to_string()),
            }
        })
        .collect()
}

pub fn write_repetitions_csv<W: Write>(
    best: &[LearningMetrics],
    worst: &[LearningMetrics],
    out: W,
) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["order".to_string(), "rep".into()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for (label, runs) in [("best", best), ("worst", worst)] {
        for (i, m) in runs.iter().enumerate() {
            let mut rec = vec![label.to_string(), i.to_string()];
            rec.extend(metric_values(m).iter().map(u64::to_string));
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pearson correlation of D with PL* total resets and total symbols.
pub fn correlate(rows: &[CompareRow]) -> Result<(TestResult, TestResult), ExperimentError> {
    if rows.len() < 3 {
        return Err(ExperimentError::MalformedCsv(format!(
            "need at least 3 rows, got {}",
            rows.len()
        )));
    }
    let d: Vec<f64> = rows.iter().map(|r| r.d).collect();
    let resets: Vec<f64> = rows.iter().map(|r| r.pl.total_resets() as f64).collect();
    let symbols: Vec<f64> = rows.iter().map(|r| r.pl.total_symbols() as f64).collect();
    Ok((stats::pearson(&d, &resets)?, stats::pearson(&d, &symbols)?))
}

pub fn write_scatter_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["order_id", "d", "total_resets", "total_symbols"])?;
    for r in rows {
        w.write_record([
            r.order_id.to_string(),
            format!("{:.12}", r.d),
            r.pl.total_resets().to_string(),
            r.pl.total_symbols().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
