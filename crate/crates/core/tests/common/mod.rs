#![allow(dead_code)]

use plstar::mealy::{MealyBuilder, MealyMachine};
use proptest::prelude::*;

/// Builds a machine from a flat `(target, output)` table, row-major by
/// state then input. Unreachable states are dropped.
pub fn machine(prefix: &str, inputs: usize, table: &[(usize, usize)]) -> MealyMachine {
    let names: Vec<String> = (0..inputs).map(|i| format!("{prefix}{i}")).collect();
    let mut b = MealyBuilder::new(names.clone()).unwrap();
    b.initial("s0");
    for (i, &(to, out)) in table.iter().enumerate() {
        let (s, a) = (i / inputs, i % inputs);
        b.transition(&format!("s{s}"), &names[a], &format!("o{out}"), &format!("s{to}")).unwrap();
    }
    b.build().unwrap().trim()
}

pub fn arb_machine_with(
    prefix: &'static str,
    max_states: usize,
    max_inputs: usize,
    outputs: usize,
) -> impl Strategy<Value = MealyMachine> {
    (1..=max_states, 1..=max_inputs).prop_flat_map(move |(n, k)| {
        prop::collection::vec((0..n, 0..outputs), n * k).prop_map(move |t| machine(prefix, k, &t))
    })
}

pub fn arb_machine(max_states: usize, max_inputs: usize) -> impl Strategy<Value = MealyMachine> {
    arb_machine_with("i", max_states, max_inputs, 2)
}

/// Two machines over the same alphabet.
pub fn arb_pair(max_states: usize, max_inputs: usize) -> impl Strategy<Value = (MealyMachine, MealyMachine)> {
    (1..=max_inputs).prop_flat_map(move |k| {
        let one = move || {
            (1..=max_states).prop_flat_map(move |n| {
                prop::collection::vec((0..n, 0..2usize), n * k).prop_map(move |t| machine("i", k, &t))
            })
        };
        (one(), one())
    })
}

/// Every word of exactly `len` symbols over `k` inputs.
pub fn words(k: usize, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..k as u32).map(move |a| {
                    let mut w = w.clone();
                    w.push(a);
                    w
                })
            })
            .collect();
    }
    out
}

/// Output names along `word`.
pub fn outputs(m: &MealyMachine, word: &[u32]) -> Vec<String> {
    m.run_word(word).iter().map(|&o| m.output_name(o).to_string()).collect()
}
