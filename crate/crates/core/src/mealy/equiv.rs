use std::collections::VecDeque;

use super::{MealyError, MealyMachine, Word};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// Shortest distinguishing input word, lexicographically least with
    /// respect to the first machine's input order.
    Counterexample(Vec<String>),
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

/// Exact equivalence check by breadth-first search over the synchronized
/// product of both machines.
pub fn equivalent(a: &MealyMachine, b: &MealyMachine) -> Result<Equivalence, MealyError> {
    Ok(match separating_word(a, b)? {
        None => Equivalence::Equivalent,
        Some(w) => Equivalence::Counterexample(a.decode(&w)),
    })
}

/// Index-level variant of [`equivalent`]; the returned word is encoded over
/// `a`'s alphabet.
pub fn separating_word(a: &MealyMachine, b: &MealyMachine) -> Result<Option<Word>, MealyError> {
    let imap = a.input_map(b)?;
    // b's output index -> a's output index (or a sentinel that never matches)
    let omap: Vec<u32> = b
        .outputs()
        .iter()
        .map(|o| {
            a.outputs()
                .iter()
                .position(|x| x == o)
                .map_or(u32::MAX, |i| i as u32)
        })
        .collect();

    let nb = b.num_states();
    let idx = |sa: usize, sb: usize| sa * nb + sb;
    // parent[pair] = (previous pair, input), root marked by usize::MAX
    let mut parent: Vec<Option<(usize, u32)>> = vec![None; a.num_states() * nb];
    let root = idx(a.initial(), b.initial());
    parent[root] = Some((usize::MAX, 0));
    let mut queue = VecDeque::from([(a.initial(), b.initial())]);

    while let Some((sa, sb)) = queue.pop_front() {
        for x in 0..a.num_inputs() as u32 {
            let (na, oa) = a.step(sa, x);
            let (nb_, ob) = b.step(sb, imap[x as usize]);
            if omap[ob as usize] != oa {
                let mut word = vec![x];
                let mut cur = idx(sa, sb);
                while let Some((prev, sym)) = parent[cur] {
                    if prev == usize::MAX {
                        break;
                    }
                    word.push(sym);
                    cur = prev;
                }
                word.reverse();
                return Ok(Some(word));
            }
            let k = idx(na, nb_);
            if parent[k].is_none() {
                parent[k] = Some((idx(sa, sb), x));
                queue.push_back((na, nb_));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mealy::fixtures::toggle;
    use crate::mealy::MealyBuilder;

    #[test]
    fn identical_machines_are_equivalent() {
        let m = toggle("a");
        assert_eq!(equivalent(&m, &m).unwrap(), Equivalence::Equivalent);
    }

    #[test]
    fn flipped_second_output_is_found_at_length_two() {
        let mut b = MealyBuilder::new(["a"]).unwrap();
        b.initial("q0");
        b.transition("q0", "a", "0", "q1").unwrap();
        b.transition("q1", "a", "0", "q0").unwrap();
        let flipped = b.build().unwrap();
        assert_eq!(
            equivalent(&toggle("a"), &flipped).unwrap(),
            Equivalence::Counterexample(vec!["a".into(), "a".into()])
        );
    }

    #[test]
    fn single_state_disagreement() {
        let one = |o: &str| {
            let mut b = MealyBuilder::new(["a"]).unwrap();
            b.initial("s");
            b.transition("s", "a", o, "s").unwrap();
            b.build().unwrap()
        };
        assert_eq!(
            equivalent(&one("x"), &one("y")).unwrap(),
            Equivalence::Counterexample(vec!["a".into()])
        );
    }

    #[test]
    fn alphabet_mismatch() {
        assert_eq!(
            equivalent(&toggle("a"), &toggle("b")),
            Err(MealyError::AlphabetMismatch)
        );
    }

    #[test]
    fn input_order_of_second_machine_is_irrelevant() {
        let mut b = MealyBuilder::new(["a", "b"]).unwrap();
        b.initial("p");
        b.transition("p", "a", "x", "q").unwrap();
        b.transition("p", "b", "y", "p").unwrap();
        b.transition("q", "a", "x", "p").unwrap();
        b.transition("q", "b", "z", "q").unwrap();
        let m = b.build().unwrap();
        let r = m.with_input_order(&["b", "a"]).unwrap();
        assert!(equivalent(&m, &r).unwrap().is_equivalent());
    }
}
