//! Deterministic, total Mealy machines.
//!
//! A [`MealyMachine`] stores its transition and output functions as dense
//! tables indexed by `state * |inputs| + input`. Symbols are referred to by
//! name at the public boundary and by index ([`Word`]) on hot paths such as
//! membership queries and test-suite execution.

mod compose;
mod equiv;
mod io;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub use compose::compose;
pub use equiv::{equivalent, separating_word, Equivalence};
pub use io::{read_fsm, to_dot, write_fsm, FsmError};

/// An input word given as indices into a machine's input alphabet.
pub type Word = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MealyError {
    #[error("unknown input symbol `{0}`")]
    UnknownInputSymbol(String),
    #[error("input symbol `{0}` declared twice")]
    DuplicateInput(String),
    #[error("input alphabets differ")]
    AlphabetMismatch,
    #[error("input symbol `{0}` is owned by more than one component")]
    OverlappingAlphabets(String),
    #[error("cannot compose an empty list of components")]
    NoComponents,
    #[error("no initial state declared")]
    MissingInitial,
    #[error("duplicate transition for ({state}, {input})")]
    DuplicateTransition { state: String, input: String },
    #[error("missing transition for ({state}, {input})")]
    MissingTransition { state: String, input: String },
}

/// A deterministic Mealy machine `<S, s0, I, O, delta, lambda>`.
///
/// `==` is structural; use [`equivalent`] for behavioural equality.
#[derive(Clone, PartialEq, Eq)]
pub struct MealyMachine {
    states: Vec<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    initial: u32,
    next: Vec<u32>,
    out: Vec<u32>,
    input_index: HashMap<String, u32>,
}

impl MealyMachine {
    /// Assembles a machine from dense tables. Callers inside the crate
    /// guarantee the invariants; they are re-checked in debug builds.
    pub(crate) fn from_tables(
        states: Vec<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        initial: u32,
        next: Vec<u32>,
        out: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(next.len(), states.len() * inputs.len());
        debug_assert_eq!(out.len(), next.len());
        debug_assert!((initial as usize) < states.len());
        debug_assert!(next.iter().all(|&t| (t as usize) < states.len()));
        debug_assert!(out.iter().all(|&o| (o as usize) < outputs.len()));
        let input_index = inputs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        MealyMachine {
            states,
            inputs,
            outputs,
            initial,
            next,
            out,
            input_index,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial as usize
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.states[state]
    }

    pub fn output_name(&self, output: u32) -> &str {
        &self.outputs[output as usize]
    }

    pub fn input_index(&self, symbol: &str) -> Option<u32> {
        self.input_index.get(symbol).copied()
    }

    /// Single transition: returns `(next state, output index)`.
    #[inline]
    pub fn step(&self, state: usize, input: u32) -> (usize, u32) {
        let k = state * self.inputs.len() + input as usize;
        (self.next[k] as usize, self.out[k])
    }

    /// Translates symbol names into a [`Word`] over this machine's alphabet.
    pub fn encode<S: AsRef<str>>(&self, word: &[S]) -> Result<Word, MealyError> {
        word.iter()
            .map(|s| {
                self.input_index(s.as_ref())
                    .ok_or_else(|| MealyError::UnknownInputSymbol(s.as_ref().to_string()))
            })
            .collect()
    }

    pub fn decode(&self, word: &[u32]) -> Vec<String> {
        word.iter().map(|&a| self.inputs[a as usize].clone()).collect()
    }

    /// Runs `word` from the initial state and returns the output sequence.
    pub fn run<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<String>, MealyError> {
        let encoded = self.encode(word)?;
        Ok(self
            .run_word(&encoded)
            .into_iter()
            .map(|o| self.outputs[o as usize].clone())
            .collect())
    }

    /// Runs an encoded word from the initial state, returning output indices.
    pub fn run_word(&self, word: &[u32]) -> Vec<u32> {
        self.run_from(self.initial(), word)
    }

    pub fn run_from(&self, state: usize, word: &[u32]) -> Vec<u32> {
        let mut s = state;
        word.iter()
            .map(|&a| {
                let (n, o) = self.step(s, a);
                s = n;
                o
            })
            .collect()
    }

    /// Runs an encoded word and returns only the last `suffix_len` outputs.
    pub fn run_suffix(&self, word: &[u32], suffix_len: usize) -> Vec<u32> {
        let split = word.len() - suffix_len;
        let state = self.state_after(&word[..split]);
        self.run_from(state, &word[split..])
    }

    pub fn state_after(&self, word: &[u32]) -> usize {
        word.iter().fold(self.initial(), |s, &a| self.step(s, a).0)
    }

    pub fn trace<S: AsRef<str>>(&self, word: &[S]) -> Result<Trace, MealyError> {
        let outputs = self.run(word)?;
        let inputs = word.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(Trace { inputs, outputs })
    }

    /// States reachable from the initial state, in breadth-first order with
    /// successors visited in input order, together with their shortest
    /// access words.
    pub fn access_words(&self) -> Vec<(usize, Word)> {
        let mut seen = vec![false; self.num_states()];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        seen[self.initial()] = true;
        queue.push_back((self.initial(), Vec::new()));
        while let Some((s, w)) = queue.pop_front() {
            for a in 0..self.num_inputs() as u32 {
                let (n, _) = self.step(s, a);
                if !seen[n] {
                    seen[n] = true;
                    let mut nw = w.clone();
                    nw.push(a);
                    queue.push_back((n, nw));
                }
            }
            order.push((s, w));
        }
        order
    }

    pub fn reachable_states(&self) -> Vec<usize> {
        self.access_words().into_iter().map(|(s, _)| s).collect()
    }

    /// Returns a copy whose input alphabet is listed in `order` (a
    /// permutation of the current alphabet). Behaviour is unchanged.
    pub fn with_input_order<S: AsRef<str>>(&self, order: &[S]) -> Result<Self, MealyError> {
        if order.len() != self.inputs.len() {
            return Err(MealyError::AlphabetMismatch);
        }
        let perm = self.encode(order)?;
        let mut seen = vec![false; self.inputs.len()];
        for &a in &perm {
            if std::mem::replace(&mut seen[a as usize], true) {
                return Err(MealyError::DuplicateInput(self.inputs[a as usize].clone()));
            }
        }
        let n = self.inputs.len();
        let mut next = Vec::with_capacity(self.next.len());
        let mut out = Vec::with_capacity(self.out.len());
        for s in 0..self.num_states() {
            for &a in &perm {
                next.push(self.next[s * n + a as usize]);
                out.push(self.out[s * n + a as usize]);
            }
        }
        Ok(MealyMachine::from_tables(
            self.states.clone(),
            perm.iter().map(|&a| self.inputs[a as usize].clone()).collect(),
            self.outputs.clone(),
            self.initial,
            next,
            out,
        ))
    }

    /// Drops states that cannot be reached from the initial state.
    pub fn trim(&self) -> Self {
        let order = self.reachable_states();
        if order.len() == self.num_states() {
            return self.clone();
        }
        let mut rename = vec![u32::MAX; self.num_states()];
        for (i, &s) in order.iter().enumerate() {
            rename[s] = i as u32;
        }
        let n = self.num_inputs();
        let mut next = Vec::with_capacity(order.len() * n);
        let mut out = Vec::with_capacity(order.len() * n);
        for &s in &order {
            for a in 0..n {
                next.push(rename[self.next[s * n + a] as usize]);
                out.push(self.out[s * n + a]);
            }
        }
        MealyMachine::from_tables(
            order.iter().map(|&s| self.states[s].clone()).collect(),
            self.inputs.clone(),
            self.outputs.clone(),
            0,
            next,
            out,
        )
    }

    /// Whether both machines declare the same inputs, ignoring order.
    pub fn same_alphabet(&self, other: &MealyMachine) -> bool {
        self.inputs.len() == other.inputs.len()
            && self.inputs.iter().all(|s| other.input_index.contains_key(s))
    }

    /// Maps each of `self`'s input indices to the index of the same symbol
    /// in `other`.
    pub(crate) fn input_map(&self, other: &MealyMachine) -> Result<Vec<u32>, MealyError> {
        if !self.same_alphabet(other) {
            return Err(MealyError::AlphabetMismatch);
        }
        Ok(self
            .inputs
            .iter()
            .map(|s| other.input_index[s.as_str()])
            .collect())
    }
}

impl fmt::Debug for MealyMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MealyMachine")
            .field("states", &self.states.len())
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("initial", &self.states[self.initial()])
            .finish()
    }
}

/// Input sequence with the outputs it produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Trace {
    pub fn new(inputs: Vec<String>, outputs: Vec<String>) -> Option<Self> {
        (inputs.len() == outputs.len()).then_some(Trace { inputs, outputs })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Incremental construction of a [`MealyMachine`] from named transitions.
#[derive(Debug, Clone)]
pub struct MealyBuilder {
    inputs: Vec<String>,
    input_index: HashMap<String, u32>,
    states: Vec<String>,
    state_index: HashMap<String, u32>,
    outputs: Vec<String>,
    output_index: HashMap<String, u32>,
    initial: Option<u32>,
    transitions: HashMap<(u32, u32), (u32, u32)>,
}

impl MealyBuilder {
    pub fn new<I, S>(inputs: I) -> Result<Self, MealyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut builder = MealyBuilder {
            inputs: Vec::new(),
            input_index: HashMap::new(),
            states: Vec::new(),
            state_index: HashMap::new(),
            outputs: Vec::new(),
            output_index: HashMap::new(),
            initial: None,
            transitions: HashMap::new(),
        };
        for s in inputs {
            let s = s.into();
            if builder.input_index.contains_key(&s) {
                return Err(MealyError::DuplicateInput(s));
            }
            builder.input_index.insert(s.clone(), builder.inputs.len() as u32);
            builder.inputs.push(s);
        }
        Ok(builder)
    }

    pub fn state(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.state_index.get(name) {
            return i;
        }
        let i = self.states.len() as u32;
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), i);
        i
    }

    fn output(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.output_index.get(name) {
            return i;
        }
        let i = self.outputs.len() as u32;
        self.outputs.push(name.to_string());
        self.output_index.insert(name.to_string(), i);
        i
    }

    pub fn initial(&mut self, name: &str) -> &mut Self {
        let s = self.state(name);
        self.initial = Some(s);
        self
    }

    pub fn has_transition(&self, from: &str, input: &str) -> bool {
        match (self.state_index.get(from), self.input_index.get(input)) {
            (Some(&s), Some(&a)) => self.transitions.contains_key(&(s, a)),
            _ => false,
        }
    }

    pub fn transition(
        &mut self,
        from: &str,
        input: &str,
        output: &str,
        to: &str,
    ) -> Result<&mut Self, MealyError> {
        let a = *self
            .input_index
            .get(input)
            .ok_or_else(|| MealyError::UnknownInputSymbol(input.to_string()))?;
        let s = self.state(from);
        let t = self.state(to);
        let o = self.output(output);
        if self.transitions.insert((s, a), (t, o)).is_some() {
            return Err(MealyError::DuplicateTransition {
                state: from.to_string(),
                input: input.to_string(),
            });
        }
        Ok(self)
    }

    pub fn build(&self) -> Result<MealyMachine, MealyError> {
        let initial = self.initial.ok_or(MealyError::MissingInitial)?;
        let n = self.inputs.len();
        let mut next = Vec::with_capacity(self.states.len() * n);
        let mut out = Vec::with_capacity(self.states.len() * n);
        for s in 0..self.states.len() as u32 {
            for a in 0..n as u32 {
                let &(t, o) = self.transitions.get(&(s, a)).ok_or_else(|| {
                    MealyError::MissingTransition {
                        state: self.states[s as usize].clone(),
                        input: self.inputs[a as usize].clone(),
                    }
                })?;
                next.push(t);
                out.push(o);
            }
        }
        Ok(MealyMachine::from_tables(
            self.states.clone(),
            self.inputs.clone(),
            self.outputs.clone(),
            initial,
            next,
            out,
        ))
    }
}
