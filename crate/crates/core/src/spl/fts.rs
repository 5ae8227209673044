use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Deserialize;

use super::{Configuration, FeatureExpr, FeatureModel, SplError, QUIESCENT_OUTPUT};
use crate::mealy::{MealyBuilder, MealyMachine};

#[derive(Debug, Clone)]
struct FtsTransition {
    from: usize,
    input: usize,
    guard: FeatureExpr,
    output: String,
    to: usize,
}

/// Transition system whose transitions carry feature-expression guards.
///
/// Every input symbol belongs to exactly one feature (`featureAlphabet`);
/// a product's alphabet is the union of its features' symbols.
#[derive(Debug, Clone)]
pub struct FeaturedTransitionSystem {
    states: Vec<String>,
    initial: usize,
    inputs: Vec<String>,
    owner: Vec<usize>,
    transitions: Vec<FtsTransition>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct FtsFile {
    states: Vec<String>,
    initial: String,
    inputs: Vec<String>,
    feature_alphabet: BTreeMap<String, Vec<String>>,
    transitions: Vec<TransitionEntry>,
}

#[derive(Deserialize)]
struct TransitionEntry {
    from: String,
    input: String,
    output: String,
    to: String,
    #[serde(default)]
    guard: Option<String>,
}

impl FeaturedTransitionSystem {
    /// Parses the JSON form and binds feature names against `fm`.
    pub fn from_json(text: &str, fm: &FeatureModel) -> Result<Self, SplError> {
        let file: FtsFile = serde_json::from_str(text)?;
        let state_index: HashMap<&str, usize> = file
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let input_index: HashMap<&str, usize> = file
            .inputs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if state_index.len() != file.states.len() || input_index.len() != file.inputs.len() {
            return Err(SplError::InvalidFts("duplicate state or input name".into()));
        }
        let lookup_state = |s: &str| {
            state_index
                .get(s)
                .copied()
                .ok_or_else(|| SplError::InvalidFts(format!("unknown state `{s}`")))
        };
        let lookup_input = |s: &str| {
            input_index
                .get(s)
                .copied()
                .ok_or_else(|| SplError::InvalidFts(format!("unknown input `{s}`")))
        };

        let mut owner = vec![usize::MAX; file.inputs.len()];
        for (feature, symbols) in &file.feature_alphabet {
            let f = fm
                .index_of(feature)
                .ok_or_else(|| SplError::UnknownFeature(feature.clone()))?;
            for s in symbols {
                let a = lookup_input(s)?;
                if owner[a] != usize::MAX {
                    return Err(SplError::InvalidFts(format!(
                        "input `{s}` assigned to more than one feature"
                    )));
                }
                owner[a] = f;
            }
        }
        if let Some(a) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(SplError::InvalidFts(format!(
                "input `{}` belongs to no feature",
                file.inputs[a]
            )));
        }

        let mut transitions = Vec::with_capacity(file.transitions.len());
        for t in &file.transitions {
            let guard = FeatureExpr::parse(t.guard.as_deref().unwrap_or("true"))?;
            for name in guard.features() {
                if fm.index_of(name).is_none() {
                    return Err(SplError::UnknownFeature(name.to_string()));
                }
            }
            transitions.push(FtsTransition {
                from: lookup_state(&t.from)?,
                input: lookup_input(&t.input)?,
                guard,
                output: t.output.clone(),
                to: lookup_state(&t.to)?,
            });
        }
        Ok(FeaturedTransitionSystem {
            initial: lookup_state(&file.initial)?,
            states: file.states,
            inputs: file.inputs,
            owner,
            transitions,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    fn alphabet_mask(&self, c: &Configuration) -> Vec<bool> {
        self.owner.iter().map(|&f| c.contains(f)).collect()
    }

    pub fn product_alphabet(&self, c: &Configuration) -> Vec<String> {
        self.alphabet_mask(c)
            .iter()
            .zip(&self.inputs)
            .filter(|(on, _)| **on)
            .map(|(_, s)| s.clone())
            .collect()
    }

    /// Projects the FTS onto configuration `c`: keeps enabled transitions over
    /// the product alphabet, restricts to reachable states, and completes
    /// missing (state, input) pairs with quiescent self-loops.
    pub fn derive(&self, fm: &FeatureModel, c: &Configuration) -> Result<MealyMachine, SplError> {
        let in_alphabet = self.alphabet_mask(c);
        let mut enabled: HashMap<(usize, usize), &FtsTransition> = HashMap::new();
        for t in &self.transitions {
            if !in_alphabet[t.input] || !fm.satisfies(&t.guard, c) {
                continue;
            }
            if enabled.insert((t.from, t.input), t).is_some() {
                return Err(SplError::NondeterministicProjection {
                    state: self.states[t.from].clone(),
                    input: self.inputs[t.input].clone(),
                });
            }
        }

        let alphabet: Vec<usize> = (0..self.inputs.len()).filter(|&a| in_alphabet[a]).collect();
        let mut builder = MealyBuilder::new(alphabet.iter().map(|&a| self.inputs[a].as_str()))?;
        builder.initial(&self.states[self.initial]);
        let mut seen = vec![false; self.states.len()];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        while let Some(s) = queue.pop_front() {
            for &a in &alphabet {
                let (output, to) = match enabled.get(&(s, a)) {
                    Some(t) => (t.output.as_str(), t.to),
                    None => (QUIESCENT_OUTPUT, s),
                };
                builder.transition(&self.states[s], &self.inputs[a], output, &self.states[to])?;
                if !seen[to] {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        Ok(builder.build()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spl::Variability;

    fn model() -> FeatureModel {
        use Variability::*;
        FeatureModel::from_features(
            &[
                ("Base", None, None),
                ("X", Some("Base"), Some(Optional)),
                ("Y", Some("Base"), Some(Optional)),
            ],
            vec![],
        )
        .unwrap()
    }

    const FTS: &str = r#"{
        "states": ["s0", "s1", "s2"],
        "initial": "s0",
        "inputs": ["go", "x", "y"],
        "featureAlphabet": {"Base": ["go"], "X": ["x"], "Y": ["y"]},
        "transitions": [
            {"from": "s0", "input": "go", "output": "start", "to": "s1"},
            {"from": "s1", "input": "go", "output": "stop", "to": "s0"},
            {"from": "s1", "input": "x", "output": "ex", "to": "s2", "guard": "X"},
            {"from": "s1", "input": "y", "output": "why", "to": "s0", "guard": "Y & !X"},
            {"from": "s2", "input": "go", "output": "back", "to": "s0", "guard": "X"}
        ]
    }"#;

    #[test]
    fn full_configuration_keeps_everything() {
        let fm = model();
        let fts = FeaturedTransitionSystem::from_json(FTS, &fm).unwrap();
        let c = fm.configuration(&["Base", "X", "Y"]).unwrap();
        assert_eq!(fts.product_alphabet(&c), vec!["go", "x", "y"]);
        let m = fts.derive(&fm, &c).unwrap();
        assert_eq!(m.num_states(), 3);
        assert_eq!(
            m.run(&["go", "x", "go"]).unwrap(),
            vec!["start", "ex", "back"]
        );
        // guard Y & !X is disabled: completed with a quiescent self-loop
        assert_eq!(m.run(&["go", "y", "go"]).unwrap(), vec!["start", "0", "stop"]);
    }

    #[test]
    fn projection_onto_one_optional_feature() {
        let fm = model();
        let fts = FeaturedTransitionSystem::from_json(FTS, &fm).unwrap();
        let c = fm.configuration(&["Base", "Y"]).unwrap();
        assert_eq!(fts.product_alphabet(&c), vec!["go", "y"]);
        let m = fts.derive(&fm, &c).unwrap();
        assert_eq!(m.num_states(), 2);
        assert_eq!(m.run(&["y", "go", "y"]).unwrap(), vec!["0", "start", "why"]);
    }

    #[test]
    fn alphabets_differ_by_feature_symbols() {
        let fm = model();
        let fts = FeaturedTransitionSystem::from_json(FTS, &fm).unwrap();
        let with = fts.product_alphabet(&fm.configuration(&["Base", "X", "Y"]).unwrap());
        let without = fts.product_alphabet(&fm.configuration(&["Base", "Y"]).unwrap());
        let diff: Vec<&String> = with.iter().filter(|s| !without.contains(s)).collect();
        assert_eq!(diff, vec!["x"]);
    }

    #[test]
    fn overlapping_guards_are_rejected() {
        let fm = model();
        let text = FTS.replace("\"guard\": \"Y & !X\"", "\"guard\": \"Y\"").replace(
            "{\"from\": \"s1\", \"input\": \"go\", \"output\": \"stop\", \"to\": \"s0\"}",
            "{\"from\": \"s1\", \"input\": \"go\", \"output\": \"stop\", \"to\": \"s0\"},
             {\"from\": \"s1\", \"input\": \"go\", \"output\": \"other\", \"to\": \"s1\", \"guard\": \"X\"}",
        );
        let fts = FeaturedTransitionSystem::from_json(&text, &fm).unwrap();
        let c = fm.configuration(&["Base", "X"]).unwrap();
        assert!(matches!(
            fts.derive(&fm, &c),
            Err(SplError::NondeterministicProjection { .. })
        ));
        // without X the duplicate is disabled
        assert!(fts.derive(&fm, &fm.configuration(&["Base"]).unwrap()).is_ok());
    }

    #[test]
    fn alphabet_must_be_partitioned() {
        let fm = model();
        let text = FTS.replace("\"Y\": [\"y\"]", "\"Y\": []");
        assert!(matches!(
            FeaturedTransitionSystem::from_json(&text, &fm),
            Err(SplError::InvalidFts(_))
        ));
        let text = FTS.replace("\"Y\": [\"y\"]", "\"Y\": [\"y\", \"x\"]");
        assert!(matches!(
            FeaturedTransitionSystem::from_json(&text, &fm),
            Err(SplError::InvalidFts(_))
        ));
    }
}
