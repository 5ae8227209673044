//! T-wise product sampling with Chvátal's greedy set-cover heuristic.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::spl::{Configuration, FeatureModel, SplError};

/// Default interaction strength.
pub const DEFAULT_T: usize = 3;

/// Interaction strength and the features whose interactions must be covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingSpec {
    t: usize,
    universe: Vec<usize>,
}

impl SamplingSpec {
    pub fn new(t: usize, universe: Vec<usize>) -> Result<Self, SplError> {
        if t == 0 || t > universe.len() {
            return Err(SplError::InvalidModel(format!(
                "interaction strength {t} must be between 1 and {}",
                universe.len()
            )));
        }
        Ok(SamplingSpec { t, universe })
    }

    /// Tuples over the model's non-mandatory features.
    pub fn for_model(fm: &FeatureModel, t: usize) -> Result<Self, SplError> {
        Self::new(t, fm.non_mandatory_features()?)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn universe(&self) -> &[usize] {
        &self.universe
    }
}

/// An assignment of `t` distinct features to selected/deselected, stored as
/// a `care` bitmask and the required values under it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction {
    care: u64,
    value: u64,
}

impl Interaction {
    pub fn new(assignments: &[(usize, bool)]) -> Self {
        let mut care = 0;
        let mut value = 0;
        for &(f, on) in assignments {
            care |= 1 << f;
            if on {
                value |= 1 << f;
            }
        }
        Interaction { care, value }
    }

    pub fn is_covered_by(&self, c: &Configuration) -> bool {
        c.mask() & self.care == self.value
    }

    pub fn assignments(&self) -> Vec<(usize, bool)> {
        (0..64)
            .filter(|&i| self.care >> i & 1 == 1)
            .map(|i| (i, self.value >> i & 1 == 1))
            .collect()
    }
}

/// Ordered list of distinct valid configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSample {
    products: Vec<Configuration>,
}

impl ProductSample {
    pub fn new(fm: &FeatureModel, products: Vec<Configuration>) -> Result<Self, SplError> {
        let mut seen = BTreeSet::new();
        for c in &products {
            if !fm.is_valid(c)? {
                return Err(SplError::InvalidConfiguration(fm.selected_names(c).join(", ")));
            }
            if !seen.insert(c.mask()) {
                return Err(SplError::InvalidModel(format!(
                    "configuration [{}] appears twice in the sample",
                    fm.selected_names(c).join(", ")
                )));
            }
        }
        Ok(ProductSample { products })
    }

    pub fn products(&self) -> &[Configuration] {
        &self.products
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    /// JSON list of feature-name arrays.
    pub fn to_json(&self, fm: &FeatureModel) -> String {
        let names: Vec<Vec<&str>> = self.products.iter().map(|c| fm.selected_names(c)).collect();
        serde_json::to_string_pretty(&names).expect("sample serializes")
    }

    pub fn from_json(text: &str, fm: &FeatureModel) -> Result<Self, SplError> {
        let names: Vec<Vec<String>> = serde_json::from_str(text)?;
        let products = names
            .iter()
            .map(|n| fm.configuration(n))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(fm, products)
    }
}

/// Every t-wise interaction that occurs in at least one valid configuration,
/// ordered by feature combination and then by value assignment.
pub fn enumerate_valid_tuples(
    fm: &FeatureModel,
    spec: &SamplingSpec,
) -> Result<Vec<Interaction>, SplError> {
    let valid = fm.valid_configurations()?;
    Ok(tuples_in(&valid, spec))
}

fn tuples_in(valid: &[Configuration], spec: &SamplingSpec) -> Vec<Interaction> {
    let mut out = Vec::new();
    for_each_combination(spec.universe.len(), spec.t, |combo| {
        let care = combo.iter().fold(0u64, |m, &i| m | 1 << spec.universe[i]);
        let seen: BTreeSet<u64> = valid.iter().map(|c| c.mask() & care).collect();
        out.extend(seen.into_iter().map(|value| Interaction { care, value }));
    });
    out
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Greedy cover: repeatedly takes the valid configuration covering the most
/// still-uncovered interactions, breaking ties by [`Configuration::lex_cmp`].
pub fn chvatal_sample(fm: &FeatureModel, spec: &SamplingSpec) -> Result<ProductSample, SplError> {
    let mut pool = fm.valid_configurations()?;
    let tuples = tuples_in(&pool, spec);
    let mut uncovered: Vec<Interaction> = tuples;
    let mut sample = Vec::new();

    while !uncovered.is_empty() {
        let gains: Vec<usize> = pool
            .par_iter()
            .map(|c| uncovered.iter().filter(|t| t.is_covered_by(c)).count())
            .collect();
        // pool is lex-sorted, so the first maximum is the tie-break winner
        let (best, &gain) = gains
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, g)| **g)
            .expect("non-empty pool while tuples remain");
        debug_assert!(gain > 0, "every valid tuple is witnessed by a configuration");
        let chosen = pool.remove(best);
        uncovered.retain(|t| !t.is_covered_by(&chosen));
        sample.push(chosen);
    }
    Ok(ProductSample { products: sample })
}
