use super::{LearnError, LearningMetrics, MembershipOracle, ObservationTable, TableInit};
use crate::eq::EquivalenceOracle;
use crate::mealy::MealyMachine;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LearnerConfig {
    /// Round cap; `None` means ten times the system's state count.
    pub max_rounds: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct LearningOutcome {
    pub model: MealyMachine,
    pub table: ObservationTable,
    pub metrics: LearningMetrics,
}

/// Runs the learner from `init` until the equivalence oracle accepts.
///
/// Closedness defects are resolved before consistency defects; a hypothesis
/// is only built from a closed and consistent table.
pub fn lstar_learn(
    mq: &mut MembershipOracle<'_>,
    eq: &mut EquivalenceOracle<'_>,
    init: &TableInit,
    config: LearnerConfig,
) -> Result<LearningOutcome, LearnError> {
    let limit = config
        .max_rounds
        .unwrap_or(10 * mq.sul().num_states().max(1));
    let (mq0, mqs0) = (mq.resets(), mq.symbols());
    let (eq0, eqs0) = (eq.resets(), eq.symbols());

    let mut table = ObservationTable::initialize(init, mq)?;
    let mut rounds = 0u64;
    loop {
        close_and_make_consistent(&mut table, mq);
        let hypothesis = table.build_hypothesis()?;
        if rounds as usize == limit {
            return Err(LearnError::RoundLimitExceeded(limit));
        }
        rounds += 1;
        match eq.find_counterexample(&hypothesis)? {
            None => {
                let metrics = LearningMetrics {
                    rounds,
                    mq_resets: mq.resets() - mq0,
                    mq_symbols: mq.symbols() - mqs0,
                    eq_resets: eq.resets() - eq0,
                    eq_symbols: eq.symbols() - eqs0,
                };
                return Ok(LearningOutcome {
                    model: hypothesis,
                    table,
                    metrics,
                });
            }
            Some(cex) => table.process_counterexample(&hypothesis, &cex, mq)?,
        }
    }
}

fn close_and_make_consistent(table: &mut ObservationTable, mq: &mut MembershipOracle<'_>) {
    loop {
        while let Some(row) = table.find_unclosed() {
            table.add_prefix(&row, mq);
        }
        match table.find_inconsistent() {
            Some(w) => {
                let mut suffix = Vec::with_capacity(w.e.len() + 1);
                suffix.push(w.v);
                suffix.extend_from_slice(&w.e);
                table.add_suffix(&suffix, mq);
            }
            None => return,
        }
    }
}
