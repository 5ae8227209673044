//! Equivalence oracles: Wp-method conformance testing and a white-box
//! perfect oracle.

use std::collections::{HashSet, VecDeque};

use crate::learn::{Counterexample, LearnError};
use crate::mealy::{separating_word, MealyMachine, Word};

/// How the Wp oracle picks the number of extra states it tests for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthPolicy {
    Fixed(usize),
    /// `max(0, n - |h|)` when the system's state count `n` is known,
    /// otherwise `default`; never below `min`.
    Auto {
        known_states: Option<usize>,
        default: usize,
        min: usize,
    },
}

impl DepthPolicy {
    /// Auto depth using the system's true state count (white-box runs).
    pub fn auto_for(sul: &MealyMachine) -> Self {
        Self::auto_at_least(sul, 0)
    }

    /// Auto depth raised to at least `min`. Suites grow monotonically with
    /// depth, so completeness is kept.
    pub fn auto_at_least(sul: &MealyMachine, min: usize) -> Self {
        DepthPolicy::Auto {
            known_states: Some(sul.num_states()),
            default: 0,
            min,
        }
    }

    pub fn depth(&self, h: &MealyMachine) -> usize {
        match *self {
            DepthPolicy::Fixed(d) => d,
            DepthPolicy::Auto {
                known_states,
                default,
                min,
            } => auto_depth(h, known_states, default).max(min),
        }
    }
}

pub fn auto_depth(h: &MealyMachine, known_states: Option<usize>, default: usize) -> usize {
    match known_states {
        Some(n) => n.saturating_sub(h.num_states()),
        None => default,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Wp(DepthPolicy),
    Perfect,
}

/// Stateful oracle bound to one system; counts every reset and symbol it
/// spends.
#[derive(Debug)]
pub struct EquivalenceOracle<'a> {
    sul: &'a MealyMachine,
    kind: OracleKind,
    resets: u64,
    symbols: u64,
}

impl<'a> EquivalenceOracle<'a> {
    pub fn new(sul: &'a MealyMachine, kind: OracleKind) -> Self {
        EquivalenceOracle {
            sul,
            kind,
            resets: 0,
            symbols: 0,
        }
    }

    pub fn wp(sul: &'a MealyMachine, policy: DepthPolicy) -> Self {
        Self::new(sul, OracleKind::Wp(policy))
    }

    pub fn perfect(sul: &'a MealyMachine) -> Self {
        Self::new(sul, OracleKind::Perfect)
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn symbols(&self) -> u64 {
        self.symbols
    }

    /// Returns a word on which `h` and the system disagree, if one is found.
    pub fn find_counterexample(
        &mut self,
        h: &MealyMachine,
    ) -> Result<Option<Counterexample>, LearnError> {
        if h.inputs() != self.sul.inputs() {
            return Err(LearnError::AlphabetMismatch);
        }
        match self.kind {
            OracleKind::Perfect => {
                let w = separating_word(h, self.sul).map_err(|_| LearnError::AlphabetMismatch)?;
                self.resets += 1;
                Ok(w.map(|input| {
                    self.symbols += input.len() as u64;
                    let output = self.sul.run_word(&input);
                    Counterexample { input, output }
                }))
            }
            OracleKind::Wp(policy) => {
                // hypothesis output id -> system output id
                let out_map: Vec<Option<u32>> = h
                    .outputs()
                    .iter()
                    .map(|o| self.sul.outputs().iter().position(|s| s == o).map(|i| i as u32))
                    .collect();
                for test in WpSuite::new(h, policy.depth(h)) {
                    self.resets += 1;
                    self.symbols += test.len() as u64;
                    let got = self.sul.run_word(&test);
                    let want = h.run_word(&test);
                    if got.iter().zip(&want).any(|(&s, &o)| out_map[o as usize] != Some(s)) {
                        return Ok(Some(Counterexample {
                            input: test,
                            output: got,
                        }));
                    }
                }
                Ok(None)
            }
        }
    }
}

/// Characterization set `W` and, per state, indices into `W` forming its
/// identification set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Characterization {
    pub w: Vec<Word>,
    pub per_state: Vec<Vec<usize>>,
}

/// Shortest separating suffix for every pair of states, by iterated
/// refinement: pairs split at level `k` get `a · sep(δ(p,a), δ(q,a))`.
fn pairwise_separators(h: &MealyMachine) -> Vec<Vec<Option<Word>>> {
    let n = h.num_states();
    let k = h.num_inputs() as u32;
    let mut sep: Vec<Vec<Option<Word>>> = vec![vec![None; n]; n];
    for p in 0..n {
        for q in p + 1..n {
            if let Some(a) = (0..k).find(|&a| h.step(p, a).1 != h.step(q, a).1) {
                sep[p][q] = Some(vec![a]);
            }
        }
    }
    loop {
        let prev = sep.clone();
        let mut changed = false;
        for p in 0..n {
            for q in p + 1..n {
                if prev[p][q].is_some() {
                    continue;
                }
                for a in 0..k {
                    let (x, y) = (h.step(p, a).0, h.step(q, a).0);
                    let (x, y) = (x.min(y), x.max(y));
                    if let Some(tail) = prev.get(x).and_then(|r| r[y].as_ref()).filter(|_| x != y) {
                        let mut w = vec![a];
                        w.extend_from_slice(tail);
                        sep[p][q] = Some(w);
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    for p in 0..n {
        for q in 0..p {
            sep[p][q] = sep[q][p].clone();
        }
    }
    sep
}

fn separates(h: &MealyMachine, p: usize, q: usize, w: &[u32]) -> bool {
    h.run_from(p, w) != h.run_from(q, w)
}

/// Builds `W` by repeatedly taking the separator of the first still-merged
/// pair and splitting every block with it; at most `n - 1` words.
pub fn characterization(h: &MealyMachine) -> Characterization {
    let n = h.num_states();
    if n <= 1 || h.num_inputs() == 0 {
        let w: Vec<Word> = if h.num_inputs() > 0 { vec![vec![0]] } else { vec![] };
        let per_state = vec![(0..w.len()).collect(); n];
        return Characterization { w, per_state };
    }
    let sep = pairwise_separators(h);
    let mut blocks: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut w: Vec<Word> = Vec::new();
    loop {
        let pick = blocks.iter().find_map(|b| {
            b.iter()
                .enumerate()
                .flat_map(|(i, &p)| b[i + 1..].iter().map(move |&q| (p, q)))
                .find_map(|(p, q)| sep[p][q].clone())
        });
        let Some(word) = pick else { break };
        let mut next = Vec::new();
        for b in blocks {
            let mut groups: Vec<(Vec<u32>, Vec<usize>)> = Vec::new();
            for s in b {
                let out = h.run_from(s, &word);
                match groups.iter_mut().find(|g| g.0 == out) {
                    Some(g) => g.1.push(s),
                    None => groups.push((out, vec![s])),
                }
            }
            next.extend(groups.into_iter().map(|g| g.1));
        }
        blocks = next;
        w.push(word);
    }
    if w.is_empty() {
        // every state equivalent; keep the suite non-empty
        w.push(vec![0]);
    }
    let per_state = (0..n)
        .map(|p| {
            let mut pending: Vec<usize> = (0..n)
                .filter(|&q| q != p && sep[p][q].is_some())
                .collect();
            let mut mine = Vec::new();
            for (i, word) in w.iter().enumerate() {
                if pending.is_empty() {
                    break;
                }
                let before = pending.len();
                pending.retain(|&q| !separates(h, p, q, word));
                if pending.len() < before {
                    mine.push(i);
                }
            }
            if mine.is_empty() {
                mine.push(0);
            }
            mine
        })
        .collect();
    Characterization { w, per_state }
}

/// Lazily generated Wp test suite.
///
/// Middle parts are enumerated length-major: every test with an `i`-symbol
/// middle comes before any with `i + 1` symbols, and within one length
/// phase 1 (`Q · I^i · W`) precedes phase 2 (`(P \ Q) · I^i · W_target`).
/// Hence the suite for depth `d` is a prefix of the suite for `d + 1`.
/// Duplicates are dropped, keeping the first occurrence.
pub struct WpSuite<'a> {
    h: &'a MealyMachine,
    cover: Vec<(usize, Word)>,
    transitions: Vec<(usize, Word)>,
    chars: Characterization,
    depth: usize,
    k: usize,
    phase: usize,
    prefix: usize,
    middle: Vec<u32>,
    pending: VecDeque<Word>,
    seen: HashSet<Word>,
    done: bool,
}

impl<'a> WpSuite<'a> {
    pub fn new(h: &'a MealyMachine, depth: usize) -> Self {
        let cover = h.access_words();
        let covered: HashSet<&Word> = cover.iter().map(|c| &c.1).collect();
        let mut transitions = Vec::new();
        for (s, w) in &cover {
            for a in 0..h.num_inputs() as u32 {
                let mut t = w.clone();
                t.push(a);
                if !covered.contains(&t) {
                    transitions.push((h.step(*s, a).0, t));
                }
            }
        }
        let depth = if h.num_inputs() == 0 { 0 } else { depth };
        WpSuite {
            h,
            cover,
            transitions,
            chars: characterization(h),
            depth,
            k: 0,
            phase: 0,
            prefix: 0,
            middle: Vec::new(),
            pending: VecDeque::new(),
            seen: HashSet::new(),
            done: false,
        }
    }

    pub fn characterization(&self) -> &Characterization {
        &self.chars
    }

    fn fill(&mut self) {
        let list = if self.phase == 0 { &self.cover } else { &self.transitions };
        if let Some((state, pre)) = list.get(self.prefix) {
            let mut base = pre.clone();
            base.extend_from_slice(&self.middle);
            if self.phase == 0 {
                for w in &self.chars.w {
                    let mut t = base.clone();
                    t.extend_from_slice(w);
                    self.pending.push_back(t);
                }
            } else {
                let target = self.middle.iter().fold(*state, |s, &a| self.h.step(s, a).0);
                for &i in &self.chars.per_state[target] {
                    let mut t = base.clone();
                    t.extend_from_slice(&self.chars.w[i]);
                    self.pending.push_back(t);
                }
            }
        }
        self.advance();
    }

    fn advance(&mut self) {
        let radix = self.h.num_inputs() as u32;
        // odometer over the middle word
        for i in (0..self.middle.len()).rev() {
            self.middle[i] += 1;
            if self.middle[i] < radix {
                return;
            }
            self.middle[i] = 0;
        }
        self.prefix += 1;
        let len = if self.phase == 0 { self.cover.len() } else { self.transitions.len() };
        if self.prefix < len {
            return;
        }
        self.prefix = 0;
        self.phase += 1;
        if self.phase < 2 {
            return;
        }
        self.phase = 0;
        self.k += 1;
        self.middle = vec![0; self.k];
        if self.k > self.depth {
            self.done = true;
        }
    }
}

impl Iterator for WpSuite<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        loop {
            if let Some(t) = self.pending.pop_front() {
                if self.seen.insert(t.clone()) {
                    return Some(t);
                }
                continue;
            }
            if self.done {
                return None;
            }
            self.fill();
        }
    }
}

/// The full suite for depth `d`, in execution order.
pub fn wp_test_suite(h: &MealyMachine, d: usize) -> Vec<Word> {
    WpSuite::new(h, d).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mealy::fixtures::{cycle, toggle};
    use crate::mealy::{compose, equivalent, MealyBuilder};

    fn one_state(inputs: &[&str]) -> MealyMachine {
        let mut b = MealyBuilder::new(inputs.iter().copied()).unwrap();
        b.initial("s");
        for a in inputs {
            b.transition("s", a, "0", "s").unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn single_state_suite() {
        let h = one_state(&["a"]);
        assert_eq!(characterization(&h).w, vec![vec![0]]);
        assert_eq!(wp_test_suite(&h, 0), vec![vec![0], vec![0, 0]]);
    }

    #[test]
    fn depth_extends_suite() {
        let h = compose(&[&toggle("a"), &cycle("b", 3)]).unwrap();
        for d in 0..3 {
            let small = wp_test_suite(&h, d);
            let big = wp_test_suite(&h, d + 1);
            assert!(big.len() > small.len());
            assert_eq!(&big[..small.len()], &small[..]);
        }
    }

    #[test]
    fn w_separates_every_pair() {
        let h = compose(&[&cycle("a", 4), &toggle("b")]).unwrap();
        let c = characterization(&h);
        assert!(c.w.len() < h.num_states());
        for p in 0..h.num_states() {
            for q in 0..h.num_states() {
                if p != q {
                    assert!(c.per_state[p].iter().any(|&i| separates(&h, p, q, &c.w[i])));
                }
            }
        }
    }

    #[test]
    fn pairwise_separators_are_shortest() {
        let h = cycle("a", 5);
        let sep = pairwise_separators(&h);
        // state i emits 1 after 5 - i more symbols
        for p in 0..5 {
            for q in 0..5 {
                if p != q {
                    let want = 5 - p.max(q);
                    assert_eq!(sep[p][q].as_ref().unwrap().len(), want, "{p} {q}");
                }
            }
        }
    }

    /// Every toggle mutant with at most two states that differs from the
    /// toggle is caught at depth 0.
    #[test]
    fn toggle_mutants_are_caught() {
        let h = toggle("a");
        let outs = ["0", "1"];
        for s0 in 0..2 {
            for s1 in 0..2 {
                for o0 in outs {
                    for o1 in outs {
                        let mut b = MealyBuilder::new(["a"]).unwrap();
                        b.initial("p");
                        b.state("q");
                        let name = |s: usize| if s == 0 { "p" } else { "q" };
                        b.transition("p", "a", o0, name(s0)).unwrap();
                        b.transition("q", "a", o1, name(s1)).unwrap();
                        let m = b.build().unwrap();
                        let mut eq = EquivalenceOracle::wp(&m, DepthPolicy::Fixed(0));
                        let found = eq.find_counterexample(&h).unwrap();
                        assert_eq!(found.is_some(), !equivalent(&h, &m).unwrap().is_equivalent());
                    }
                }
            }
        }
    }

    #[test]
    fn passing_round_charges_whole_suite() {
        let sul = compose(&[&toggle("a"), &cycle("b", 3)]).unwrap();
        let suite = wp_test_suite(&sul, 1);
        let mut eq = EquivalenceOracle::wp(&sul, DepthPolicy::Fixed(1));
        assert_eq!(eq.find_counterexample(&sul).unwrap(), None);
        assert_eq!(eq.resets(), suite.len() as u64);
        assert_eq!(eq.symbols(), suite.iter().map(|t| t.len() as u64).sum::<u64>());
    }

    #[test]
    fn collapsed_toggle_fails_on_aa() {
        let sul = toggle("a");
        let h = one_state(&["a"]);
        let mut eq = EquivalenceOracle::wp(&sul, DepthPolicy::Fixed(1));
        let cex = eq.find_counterexample(&h).unwrap().unwrap();
        assert_eq!(cex.input, vec![0, 0]);
        assert_ne!(h.run(&["a", "a"]).unwrap(), sul.run(&["a", "a"]).unwrap());
    }

    #[test]
    fn perfect_oracle_delegates() {
        let sul = cycle("a", 3);
        let h = one_state(&["a"]);
        let mut eq = EquivalenceOracle::perfect(&sul);
        let cex = eq.find_counterexample(&h).unwrap().unwrap();
        assert_eq!(Some(cex.input.clone()), separating_word(&h, &sul).unwrap());
        assert_eq!((eq.resets(), eq.symbols()), (1, 3));
        assert_eq!(eq.find_counterexample(&sul).unwrap(), None);
        assert_eq!((eq.resets(), eq.symbols()), (2, 3));
    }

    #[test]
    fn alphabet_mismatch() {
        let sul = toggle("a");
        let h = toggle("b");
        let mut eq = EquivalenceOracle::perfect(&sul);
        assert_eq!(eq.find_counterexample(&h), Err(LearnError::AlphabetMismatch));
    }

    #[test]
    fn auto_depth_arithmetic() {
        let h = cycle("a", 3);
        assert_eq!(auto_depth(&h, Some(5), 0), 2);
        assert_eq!(auto_depth(&h, Some(3), 0), 0);
        assert_eq!(auto_depth(&h, Some(1), 0), 0);
        assert_eq!(auto_depth(&h, None, 0), 0);
    }
}
