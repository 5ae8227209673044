//! Observation tables and the L*-style learner for Mealy machines.

mod lstar;
mod table;

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mealy::{MealyMachine, Word};

pub use lstar::{lstar_learn, LearnerConfig, LearningOutcome};
pub use table::{Inconsistency, ObservationTable, TableInit, TableSnapshot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("row for {0:?} is not present in the table")]
    RowNotPresent(Vec<String>),
    #[error("observation table is not closed")]
    TableNotClosed,
    #[error("observation table is not consistent")]
    TableNotConsistent,
    #[error("hypothesis and system agree on {0:?}; the equivalence oracle is unsound")]
    NotACounterexample(Vec<String>),
    #[error("learning did not converge within {0} rounds")]
    RoundLimitExceeded(usize),
    #[error("invalid table initialization: {0}")]
    InvalidInitialization(String),
    #[error("hypothesis and system have different input alphabets")]
    AlphabetMismatch,
}

/// Cost counters of one learning run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningMetrics {
    /// Number of equivalence queries posed.
    pub rounds: u64,
    pub mq_resets: u64,
    pub mq_symbols: u64,
    pub eq_resets: u64,
    pub eq_symbols: u64,
}

impl LearningMetrics {
    pub fn total_resets(&self) -> u64 {
        self.mq_resets + self.eq_resets
    }

    pub fn total_symbols(&self) -> u64 {
        self.mq_symbols + self.eq_symbols
    }
}

impl Add for LearningMetrics {
    type Output = LearningMetrics;

    fn add(self, o: LearningMetrics) -> LearningMetrics {
        LearningMetrics {
            rounds: self.rounds + o.rounds,
            mq_resets: self.mq_resets + o.mq_resets,
            mq_symbols: self.mq_symbols + o.mq_symbols,
            eq_resets: self.eq_resets + o.eq_resets,
            eq_symbols: self.eq_symbols + o.eq_symbols,
        }
    }
}

impl AddAssign for LearningMetrics {
    fn add_assign(&mut self, o: LearningMetrics) {
        *self = *self + o;
    }
}

impl std::iter::Sum for LearningMetrics {
    fn sum<I: Iterator<Item = LearningMetrics>>(iter: I) -> Self {
        iter.fold(LearningMetrics::default(), Add::add)
    }
}

/// Answers membership queries against a system under learning. Every query
/// costs one reset plus one symbol per input. Nothing is cached.
#[derive(Debug)]
pub struct MembershipOracle<'a> {
    sul: &'a MealyMachine,
    resets: u64,
    symbols: u64,
}

impl<'a> MembershipOracle<'a> {
    pub fn new(sul: &'a MealyMachine) -> Self {
        MembershipOracle {
            sul,
            resets: 0,
            symbols: 0,
        }
    }

    pub fn sul(&self) -> &'a MealyMachine {
        self.sul
    }

    pub fn query(&mut self, word: &[u32]) -> Vec<u32> {
        self.resets += 1;
        self.symbols += word.len() as u64;
        self.sul.run_word(word)
    }

    /// Queries `prefix . suffix` and returns the outputs of the suffix part.
    pub fn query_suffix(&mut self, prefix: &[u32], suffix: &[u32]) -> Vec<u32> {
        self.resets += 1;
        self.symbols += (prefix.len() + suffix.len()) as u64;
        let state = self.sul.state_after(prefix);
        self.sul.run_from(state, suffix)
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn symbols(&self) -> u64 {
        self.symbols
    }
}

/// An input word on which hypothesis and system disagree, with the system's
/// observed outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub input: Word,
    pub output: Vec<u32>,
}
