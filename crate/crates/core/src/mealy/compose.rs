use std::collections::{HashMap, VecDeque};

use super::{MealyError, MealyMachine};

/// Interleaving parallel composition over pairwise disjoint input alphabets.
///
/// On an input owned by component `k`, only component `k` moves and its
/// output is emitted. Only tuples reachable from the tuple of initial states
/// are materialized; the composed alphabet is the concatenation of the
/// component alphabets in list order.
pub fn compose(components: &[&MealyMachine]) -> Result<MealyMachine, MealyError> {
    if components.is_empty() {
        return Err(MealyError::NoComponents);
    }

    let mut inputs = Vec::new();
    let mut owner: Vec<(usize, u32)> = Vec::new();
    let mut seen = HashMap::new();
    for (k, m) in components.iter().enumerate() {
        for (a, sym) in m.inputs().iter().enumerate() {
            if seen.insert(sym.clone(), k).is_some() {
                return Err(MealyError::OverlappingAlphabets(sym.clone()));
            }
            inputs.push(sym.clone());
            owner.push((k, a as u32));
        }
    }

    let mut outputs: Vec<String> = Vec::new();
    let mut output_index: HashMap<&str, u32> = HashMap::new();
    // per component: local output index -> composed output index
    let mut omaps: Vec<Vec<u32>> = Vec::with_capacity(components.len());
    for m in components {
        let mut omap = Vec::with_capacity(m.outputs().len());
        for o in m.outputs() {
            let i = *output_index.entry(o.as_str()).or_insert_with(|| {
                outputs.push(o.clone());
                outputs.len() as u32 - 1
            });
            omap.push(i);
        }
        omaps.push(omap);
    }

    let start: Vec<u32> = components.iter().map(|m| m.initial() as u32).collect();
    let mut index: HashMap<Vec<u32>, u32> = HashMap::from([(start.clone(), 0)]);
    let mut tuples = vec![start.clone()];
    let mut queue = VecDeque::from([start]);
    let mut next = Vec::new();
    let mut out = Vec::new();

    while let Some(tuple) = queue.pop_front() {
        for &(k, a) in &owner {
            let (n, o) = components[k].step(tuple[k] as usize, a);
            let mut succ = tuple.clone();
            succ[k] = n as u32;
            let id = match index.get(&succ) {
                Some(&id) => id,
                None => {
                    let id = tuples.len() as u32;
                    index.insert(succ.clone(), id);
                    tuples.push(succ.clone());
                    queue.push_back(succ);
                    id
                }
            };
            next.push(id);
            out.push(omaps[k][o as usize]);
        }
    }

    let states = tuples
        .iter()
        .map(|t| {
            t.iter()
                .enumerate()
                .map(|(k, &s)| components[k].state_name(s as usize))
                .collect::<Vec<_>>()
                .join("|")
        })
        .collect();
    Ok(MealyMachine::from_tables(states, inputs, outputs, 0, next, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mealy::equivalent;
    use crate::mealy::fixtures::{cycle, toggle};

    #[test]
    fn single_component_is_isomorphic() {
        let m = cycle("a", 3);
        let c = compose(&[&m]).unwrap();
        assert_eq!(c.num_states(), 3);
        assert!(equivalent(&m, &c).unwrap().is_equivalent());
    }

    #[test]
    fn two_toggles() {
        let c = compose(&[&toggle("a"), &toggle("b")]).unwrap();
        assert_eq!(c.num_states(), 4);
        assert_eq!(c.inputs(), &["a", "b"]);
        assert_eq!(c.run(&["a", "b", "a"]).unwrap(), vec!["0", "0", "1"]);
    }

    #[test]
    fn reachable_product_size() {
        let c = compose(&[&toggle("a"), &cycle("b", 3)]).unwrap();
        assert_eq!(c.num_states(), 6);
    }

    #[test]
    fn overlapping_alphabets_rejected() {
        assert_eq!(
            compose(&[&toggle("a"), &cycle("a", 2)]).unwrap_err(),
            MealyError::OverlappingAlphabets("a".into())
        );
        assert_eq!(compose(&[]).unwrap_err(), MealyError::NoComponents);
    }
}
