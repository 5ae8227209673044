use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Counterexample, LearnError, MembershipOracle};
use crate::mealy::{MealyMachine, Word};

/// Initial prefix and suffix sets of a table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableInit {
    pub prefixes: Vec<Word>,
    pub suffixes: Vec<Word>,
}

impl TableInit {
    /// `S = {ε}`, `E = I` in alphabet order.
    pub fn classic(num_inputs: usize) -> Self {
        TableInit {
            prefixes: vec![Vec::new()],
            suffixes: (0..num_inputs as u32).map(|a| vec![a]).collect(),
        }
    }

    pub fn validate(&self, num_inputs: usize) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidInitialization(m.to_string()));
        let in_alphabet = |w: &Word| w.iter().all(|&a| (a as usize) < num_inputs);
        if !self.prefixes.iter().chain(&self.suffixes).all(in_alphabet) {
            return bad("symbol outside the alphabet");
        }
        let prefixes: HashSet<&[u32]> = self.prefixes.iter().map(Vec::as_slice).collect();
        if !prefixes.contains(&[][..]) {
            return bad("prefix set lacks the empty word");
        }
        if let Some(p) = self
            .prefixes
            .iter()
            .find(|p| !p.is_empty() && !prefixes.contains(&p[..p.len() - 1]))
        {
            return bad(&format!("prefix set is not prefix-closed at {p:?}"));
        }
        if self.suffixes.iter().any(Vec::is_empty) {
            return bad("empty suffix");
        }
        let suffixes: HashSet<&[u32]> = self.suffixes.iter().map(Vec::as_slice).collect();
        if (0..num_inputs as u32).any(|a| !suffixes.contains(&[a][..])) {
            return bad("suffix set must contain every input symbol");
        }
        Ok(())
    }
}

/// Witness that rows of `s1` and `s2` agree but their `v`-successors differ
/// on suffix `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inconsistency {
    pub s1: Word,
    pub s2: Word,
    pub v: u32,
    pub e: Word,
}

/// Observation table `(S, E, T)`.
///
/// Rows exist for every word in `S ∪ S·I`. Each cell holds an interned id of
/// the output suffix observed for `row · suffix`; two rows are equal iff
/// their id vectors are equal.
#[derive(Debug, Clone)]
pub struct ObservationTable {
    alphabet: Vec<String>,
    outputs: Vec<String>,
    prefixes: Vec<usize>,
    suffixes: Vec<Word>,
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    cells: Vec<Vec<u32>>,
    cell_ids: HashMap<Vec<u32>, u32>,
    cell_values: Vec<Vec<u32>>,
}

impl ObservationTable {
    /// Builds the table for `init` and fills every cell by membership queries.
    pub fn initialize(init: &TableInit, mq: &mut MembershipOracle<'_>) -> Result<Self, LearnError> {
        let sul = mq.sul();
        init.validate(sul.num_inputs())?;
        let mut suffixes = Vec::with_capacity(init.suffixes.len());
        let mut seen = HashSet::new();
        for e in &init.suffixes {
            if seen.insert(e.clone()) {
                suffixes.push(e.clone());
            }
        }
        let mut table = ObservationTable {
            alphabet: sul.inputs().to_vec(),
            outputs: sul.outputs().to_vec(),
            prefixes: Vec::new(),
            suffixes,
            words: Vec::new(),
            index: HashMap::new(),
            cells: Vec::new(),
            cell_ids: HashMap::new(),
            cell_values: Vec::new(),
        };
        for p in &init.prefixes {
            table.add_prefix(p, mq);
        }
        Ok(table)
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn num_inputs(&self) -> usize {
        self.alphabet.len()
    }

    pub fn prefixes(&self) -> impl Iterator<Item = &Word> {
        self.prefixes.iter().map(|&r| &self.words[r])
    }

    pub fn suffixes(&self) -> &[Word] {
        &self.suffixes
    }

    pub fn num_rows(&self) -> usize {
        self.words.len()
    }

    pub fn contains_prefix(&self, word: &[u32]) -> bool {
        self.index
            .get(word)
            .is_some_and(|&r| self.prefixes.contains(&r))
    }

    fn intern(&mut self, value: Vec<u32>) -> u32 {
        if let Some(&id) = self.cell_ids.get(&value) {
            return id;
        }
        let id = self.cell_values.len() as u32;
        self.cell_ids.insert(value.clone(), id);
        self.cell_values.push(value);
        id
    }

    fn ensure_row(&mut self, word: &[u32], mq: &mut MembershipOracle<'_>) -> usize {
        if let Some(&r) = self.index.get(word) {
            return r;
        }
        let r = self.words.len();
        let mut row = Vec::with_capacity(self.suffixes.len());
        for i in 0..self.suffixes.len() {
            let out = mq.query_suffix(word, &self.suffixes[i]);
            row.push(self.intern(out));
        }
        self.words.push(word.to_vec());
        self.index.insert(word.to_vec(), r);
        self.cells.push(row);
        r
    }

    /// Adds `word` to `S` (no-op if present) and fills its row and the rows
    /// of its one-symbol extensions. Callers keep `S` prefix-closed.
    pub fn add_prefix(&mut self, word: &[u32], mq: &mut MembershipOracle<'_>) {
        let r = self.ensure_row(word, mq);
        if self.prefixes.contains(&r) {
            return;
        }
        self.prefixes.push(r);
        let mut ext = word.to_vec();
        for a in 0..self.num_inputs() as u32 {
            ext.push(a);
            self.ensure_row(&ext, mq);
            ext.pop();
        }
    }

    /// Adds a suffix column (no-op if present) and fills it for every row.
    pub fn add_suffix(&mut self, suffix: &[u32], mq: &mut MembershipOracle<'_>) {
        if self.suffixes.iter().any(|e| e == suffix) {
            return;
        }
        self.suffixes.push(suffix.to_vec());
        for r in 0..self.words.len() {
            let out = mq.query_suffix(&self.words[r], suffix);
            let id = self.intern(out);
            self.cells[r].push(id);
        }
    }

    fn row_index(&self, word: &[u32]) -> Result<usize, LearnError> {
        self.index
            .get(word)
            .copied()
            .ok_or_else(|| LearnError::RowNotPresent(self.decode(word)))
    }

    /// Entries `T(s, e)` for `e ∈ E`, in suffix order.
    pub fn row(&self, word: &[u32]) -> Result<Vec<&[u32]>, LearnError> {
        let r = self.row_index(word)?;
        Ok(self.cells[r]
            .iter()
            .map(|&id| self.cell_values[id as usize].as_slice())
            .collect())
    }

    /// Entries of a row as output names.
    pub fn row_outputs(&self, word: &[u32]) -> Result<Vec<Vec<String>>, LearnError> {
        Ok(self
            .row(word)?
            .into_iter()
            .map(|cell| cell.iter().map(|&o| self.outputs[o as usize].clone()).collect())
            .collect())
    }

    fn decode(&self, word: &[u32]) -> Vec<String> {
        word.iter()
            .map(|&a| {
                self.alphabet
                    .get(a as usize)
                    .cloned()
                    .unwrap_or_else(|| format!("#{a}"))
            })
            .collect()
    }

    fn extension(&self, r: usize, a: u32) -> usize {
        let mut w = self.words[r].clone();
        w.push(a);
        self.index[&w]
    }

    /// First `s·v` (scanning `S` in order, then the alphabet) whose row
    /// matches no row of `S`.
    pub fn find_unclosed(&self) -> Option<Word> {
        let s_rows: HashSet<&[u32]> = self
            .prefixes
            .iter()
            .map(|&r| self.cells[r].as_slice())
            .collect();
        for &r in &self.prefixes {
            for a in 0..self.num_inputs() as u32 {
                let ext = self.extension(r, a);
                if !s_rows.contains(self.cells[ext].as_slice()) {
                    return Some(self.words[ext].clone());
                }
            }
        }
        None
    }

    /// First inconsistency, scanning pairs of `S` in order, then `v`, then `e`.
    pub fn find_inconsistent(&self) -> Option<Inconsistency> {
        let mut by_row: HashMap<&[u32], Vec<usize>> = HashMap::new();
        for &r in &self.prefixes {
            by_row.entry(self.cells[r].as_slice()).or_default().push(r);
        }
        for (i, &r1) in self.prefixes.iter().enumerate() {
            let class = &by_row[self.cells[r1].as_slice()];
            if class.len() < 2 {
                continue;
            }
            for &r2 in &self.prefixes[i + 1..] {
                if self.cells[r2] != self.cells[r1] {
                    continue;
                }
                for v in 0..self.num_inputs() as u32 {
                    let (x1, x2) = (self.extension(r1, v), self.extension(r2, v));
                    if let Some(k) = (0..self.suffixes.len()).find(|&k| self.cells[x1][k] != self.cells[x2][k]) {
                        return Some(Inconsistency {
                            s1: self.words[r1].clone(),
                            s2: self.words[r2].clone(),
                            v,
                            e: self.suffixes[k].clone(),
                        });
                    }
                }
            }
        }
        None
    }

    pub fn is_closed(&self) -> bool {
        self.find_unclosed().is_none()
    }

    pub fn is_consistent(&self) -> bool {
        self.find_inconsistent().is_none()
    }

    /// Number of distinct rows among the prefixes.
    pub fn distinct_prefix_rows(&self) -> usize {
        self.prefixes
            .iter()
            .map(|&r| self.cells[r].as_slice())
            .collect::<HashSet<_>>()
            .len()
    }

    /// Hypothesis with one state per distinct row of `S`.
    pub fn build_hypothesis(&self) -> Result<MealyMachine, LearnError> {
        if !self.is_closed() {
            return Err(LearnError::TableNotClosed);
        }
        if !self.is_consistent() {
            return Err(LearnError::TableNotConsistent);
        }
        // first prefix carrying each distinct row
        let mut rep_of: HashMap<&[u32], usize> = HashMap::new();
        for &r in &self.prefixes {
            rep_of.entry(self.cells[r].as_slice()).or_insert(r);
        }
        let column: Vec<usize> = (0..self.num_inputs() as u32)
            .map(|a| {
                self.suffixes
                    .iter()
                    .position(|e| e.len() == 1 && e[0] == a)
                    .expect("E contains every input symbol")
            })
            .collect();

        // states numbered breadth-first from row(ε), so the hypothesis does
        // not depend on the order in which prefixes entered the table
        let root = self.row_index(&[])?;
        let mut state_of: HashMap<&[u32], u32> = HashMap::new();
        let mut reps = vec![rep_of[self.cells[root].as_slice()]];
        state_of.insert(self.cells[root].as_slice(), 0);
        let mut next = Vec::with_capacity(rep_of.len() * self.num_inputs());
        let mut out = Vec::with_capacity(next.capacity());
        let mut used_outputs: HashMap<u32, u32> = HashMap::new();
        let mut outputs = Vec::new();
        let mut i = 0;
        while i < reps.len() {
            let r = reps[i];
            for a in 0..self.num_inputs() as u32 {
                let row = self.cells[self.extension(r, a)].as_slice();
                let target = *state_of.entry(row).or_insert_with(|| {
                    reps.push(rep_of[row]);
                    reps.len() as u32 - 1
                });
                next.push(target);
                let o = self.cell_values[self.cells[r][column[a as usize]] as usize][0];
                let id = *used_outputs.entry(o).or_insert_with(|| {
                    outputs.push(self.outputs[o as usize].clone());
                    outputs.len() as u32 - 1
                });
                out.push(id);
            }
            i += 1;
        }
        let states = (0..reps.len()).map(|i| format!("h{i}")).collect();
        Ok(MealyMachine::from_tables(
            states,
            self.alphabet.clone(),
            outputs,
            0,
            next,
            out,
        ))
    }

    /// Adds every prefix of the counterexample to `S`.
    pub fn process_counterexample(
        &mut self,
        hypothesis: &MealyMachine,
        cex: &Counterexample,
        mq: &mut MembershipOracle<'_>,
    ) -> Result<(), LearnError> {
        if hypothesis.inputs() != self.alphabet.as_slice() {
            return Err(LearnError::AlphabetMismatch);
        }
        let predicted = hypothesis.run_word(&cex.input);
        let agrees = predicted.len() == cex.output.len()
            && predicted
                .iter()
                .zip(&cex.output)
                .all(|(&h, &s)| hypothesis.output_name(h) == self.outputs[s as usize]);
        if agrees {
            return Err(LearnError::NotACounterexample(self.decode(&cex.input)));
        }
        for len in 1..=cex.input.len() {
            self.add_prefix(&cex.input[..len], mq);
        }
        Ok(())
    }

    pub fn snapshot(&self) -> TableSnapshot {
        let mut entries = Vec::new();
        for (r, w) in self.words.iter().enumerate() {
            for (k, e) in self.suffixes.iter().enumerate() {
                entries.push(TableEntry {
                    prefix: self.decode(w),
                    suffix: self.decode(e),
                    output: self.cell_values[self.cells[r][k] as usize]
                        .iter()
                        .map(|&o| self.outputs[o as usize].clone())
                        .collect(),
                });
            }
        }
        TableSnapshot {
            alphabet: self.alphabet.clone(),
            prefixes: self.prefixes().map(|w| self.decode(w)).collect(),
            suffixes: self.suffixes.iter().map(|e| self.decode(e)).collect(),
            entries,
        }
    }
}

/// Serializable view of a table with symbols spelled out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSnapshot {
    pub alphabet: Vec<String>,
    pub prefixes: Vec<Vec<String>>,
    pub suffixes: Vec<Vec<String>>,
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub prefix: Vec<String>,
    pub suffix: Vec<String>,
    pub output: Vec<String>,
}
