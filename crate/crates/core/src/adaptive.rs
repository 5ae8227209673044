//! PL*: learning a sample of products in sequence, seeding each product's
//! observation table with the prefixes and suffixes of earlier products.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eq::{DepthPolicy, EquivalenceOracle, OracleKind};
use crate::learn::{
    lstar_learn, LearnError, LearnerConfig, LearningMetrics, MembershipOracle, TableInit,
};
use crate::mealy::{MealyMachine, Word};
use crate::rng::Xoshiro256;
use crate::sampling::ProductSample;
use crate::spl::{FeatureModel, SplError};

/// Sequences of one learned product, by symbol name. Outputs are not kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RepositoryEntry {
    pub product_id: usize,
    pub alphabet: Vec<String>,
    pub prefixes: Vec<Vec<String>>,
    pub suffixes: Vec<Vec<String>>,
}

/// Final tables of the products learned so far, in learning order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OtRepository {
    entries: Vec<RepositoryEntry>,
}

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("cannot access repository file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed repository file {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl OtRepository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[RepositoryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: RepositoryEntry) {
        self.entries.push(entry);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("repository serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: &Path) -> Result<(), RepositoryError> {
        std::fs::write(path, self.to_json()).map_err(|source| RepositoryError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, RepositoryError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| RepositoryError::Io {
            path: p.clone(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| RepositoryError::Json { path: p, source })
    }
}

/// Keeps the sequences built only from symbols of `alphabet`, preserving
/// their order.
pub fn filter_sequences<'s, S: AsRef<str>>(
    seqs: impl IntoIterator<Item = &'s Vec<String>>,
    alphabet: &[S],
) -> Vec<Vec<String>> {
    let allowed: HashSet<&str> = alphabet.iter().map(AsRef::as_ref).collect();
    seqs.into_iter()
        .filter(|s| s.iter().all(|x| allowed.contains(x.as_str())))
        .cloned()
        .collect()
}

/// Optional shuffles of the repository-derived part of an initialization.
#[derive(Debug, Default)]
pub struct InitShuffle {
    pub prefixes: Option<Xoshiro256>,
    pub suffixes: Option<Xoshiro256>,
}

fn encode_sorted<'s>(
    seqs: impl IntoIterator<Item = &'s Vec<String>>,
    alphabet: &[String],
) -> Vec<Word> {
    let index = |s: &str| alphabet.iter().position(|a| a == s).map(|i| i as u32);
    let mut words: Vec<Word> = filter_sequences(seqs, alphabet)
        .iter()
        .map(|s| s.iter().map(|x| index(x).expect("filtered")).collect())
        .collect();
    words.sort_by(|a: &Word, b: &Word| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    words.dedup();
    words
}

/// Initial table for a product with input order `alphabet`.
///
/// `S0` is `ε` followed by the repository prefixes over the alphabet; `E0`
/// is the single-symbol suffixes in alphabet order followed by the
/// repository suffixes over the alphabet. Repository parts are sorted by
/// length, then lexicographically in alphabet order, then optionally
/// shuffled. An empty repository gives `S = {ε}`, `E = I`.
pub fn adaptive_init(
    repo: &OtRepository,
    alphabet: &[String],
    shuffle: &mut InitShuffle,
) -> TableInit {
    let classic = TableInit::classic(alphabet.len());

    let mut from_repo: Vec<Word> = encode_sorted(
        repo.entries.iter().flat_map(|e| e.prefixes.iter()),
        alphabet,
    );
    from_repo.retain(|w| !w.is_empty());
    if let Some(rng) = shuffle.prefixes.as_mut() {
        rng.shuffle(&mut from_repo);
    }
    let mut prefixes = classic.prefixes;
    prefixes.extend(from_repo);

    let mut from_repo: Vec<Word> = encode_sorted(
        repo.entries.iter().flat_map(|e| e.suffixes.iter()),
        alphabet,
    );
    from_repo.retain(|w| w.len() > 1);
    if let Some(rng) = shuffle.suffixes.as_mut() {
        rng.shuffle(&mut from_repo);
    }
    let mut suffixes = classic.suffixes;
    suffixes.extend(from_repo);

    TableInit { prefixes, suffixes }
}

/// Equivalence oracle to build for each product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleChoice {
    Perfect,
    /// Wp with auto depth from the product's true state count, raised to
    /// at least `min_depth`.
    WpAuto { min_depth: usize },
    WpFixed(usize),
}

impl OracleChoice {
    pub fn build<'a>(&self, sul: &'a MealyMachine) -> EquivalenceOracle<'a> {
        match *self {
            OracleChoice::Perfect => EquivalenceOracle::perfect(sul),
            OracleChoice::WpAuto { min_depth } => {
                EquivalenceOracle::wp(sul, DepthPolicy::auto_at_least(sul, min_depth))
            }
            OracleChoice::WpFixed(d) => {
                EquivalenceOracle::new(sul, OracleKind::Wp(DepthPolicy::Fixed(d)))
            }
        }
    }
}

/// Which exogenous orderings are randomized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Randomization {
    pub alphabet: bool,
    pub prefixes: bool,
    pub suffixes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyConfig {
    /// `false` learns every product from `S = {ε}`, `E = I`.
    pub adaptive: bool,
    pub oracle: OracleChoice,
    pub learner: LearnerConfig,
    pub randomize: Randomization,
    pub seed: u64,
    /// Keys the prefix/suffix shuffles of this run.
    pub run_id: u64,
}

impl FamilyConfig {
    pub fn new(adaptive: bool, oracle: OracleChoice) -> Self {
        FamilyConfig {
            adaptive,
            oracle,
            learner: LearnerConfig::default(),
            randomize: Randomization::default(),
            seed: 0,
            run_id: 0,
        }
    }
}

/// Input order used for a product: shuffled per product (not per run) so
/// both methods and all orders see the same alphabet draw.
pub fn product_alphabet_order(sul: &MealyMachine, product: usize, config: &FamilyConfig) -> Vec<String> {
    let mut inputs = sul.inputs().to_vec();
    if config.randomize.alphabet {
        Xoshiro256::substream(config.seed, "alphabet", &[product as u64]).shuffle(&mut inputs);
    }
    inputs
}

#[derive(Debug, Clone)]
pub struct ProductRun {
    pub product: usize,
    pub model: MealyMachine,
    pub metrics: LearningMetrics,
}

#[derive(Debug, Clone, Default)]
pub struct FamilyOutcome {
    pub runs: Vec<ProductRun>,
    pub repository: OtRepository,
}

impl FamilyOutcome {
    pub fn totals(&self) -> LearningMetrics {
        self.runs.iter().map(|r| r.metrics).sum()
    }
}

#[derive(Debug, Error)]
#[error("learning product {product} failed: {source}")]
pub struct FamilyError {
    pub product: usize,
    pub source: LearnError,
    /// Products learned before the failure.
    pub partial: Box<FamilyOutcome>,
}

/// Learns `suls[order[0]], suls[order[1]], …` in sequence.
///
/// Learning resumes after the products already present in `repository`
/// when they form a prefix of `order`; otherwise the repository is used as
/// given and every product in `order` is learned.
pub fn plstar_learn_family(
    suls: &[MealyMachine],
    order: &[usize],
    config: &FamilyConfig,
    repository: OtRepository,
) -> Result<FamilyOutcome, FamilyError> {
    let done = repository.len();
    let resume = done <= order.len()
        && repository
            .entries
            .iter()
            .zip(order)
            .all(|(e, &p)| e.product_id == p);
    let start = if resume { done } else { 0 };
    let mut outcome = FamilyOutcome {
        runs: Vec::new(),
        repository,
    };

    for (pos, &product) in order.iter().enumerate().skip(start) {
        let sul = suls[product]
            .with_input_order(&product_alphabet_order(&suls[product], product, config))
            .expect("a permutation of the product's own alphabet");
        let alphabet = sul.inputs().to_vec();
        let keys = [config.run_id, pos as u64];
        let mut shuffle = InitShuffle {
            prefixes: config
                .randomize
                .prefixes
                .then(|| Xoshiro256::substream(config.seed, "prefixes", &keys)),
            suffixes: config
                .randomize
                .suffixes
                .then(|| Xoshiro256::substream(config.seed, "suffixes", &keys)),
        };
        let init = if config.adaptive {
            adaptive_init(&outcome.repository, &alphabet, &mut shuffle)
        } else {
            TableInit::classic(alphabet.len())
        };

        let mut mq = MembershipOracle::new(&sul);
        let mut eq = config.oracle.build(&sul);
        match lstar_learn(&mut mq, &mut eq, &init, config.learner) {
            Ok(learned) => {
                let decode = |w: &Word| sul.decode(w);
                outcome.repository.push(RepositoryEntry {
                    product_id: product,
                    alphabet: alphabet.clone(),
                    prefixes: learned.table.prefixes().map(decode).collect(),
                    suffixes: learned.table.suffixes().iter().map(decode).collect(),
                });
                outcome.runs.push(ProductRun {
                    product,
                    model: learned.model,
                    metrics: learned.metrics,
                });
            }
            Err(source) => {
                return Err(FamilyError {
                    product,
                    source,
                    partial: Box::new(outcome),
                })
            }
        }
    }
    Ok(outcome)
}

/// Mask of the model's non-mandatory features.
pub fn non_mandatory_mask(fm: &FeatureModel) -> Result<u64, SplError> {
    Ok(fm
        .non_mandatory_features()?
        .iter()
        .fold(0u64, |m, &f| m | 1 << f))
}

/// `F_i`: non-mandatory features of the `i`-th product not selected by any
/// earlier product of the order.
pub fn new_feature_counts(order: &[usize], sample: &ProductSample, non_mandatory: u64) -> Vec<u32> {
    let mut seen = 0u64;
    order
        .iter()
        .map(|&p| {
            let m = sample.products()[p].mask() & non_mandatory;
            let fresh = (m & !seen).count_ones();
            seen |= m;
            fresh
        })
        .collect()
}

/// `D = Σ term_i` with `term_i = 0` if `F_i = 0` and `1 / F_i` otherwise.
pub fn score_from_counts(counts: &[u32]) -> f64 {
    counts
        .iter()
        .filter(|&&f| f > 0)
        .map(|&f| 1.0 / f as f64)
        .sum()
}

pub fn order_score(order: &[usize], fm: &FeatureModel, sample: &ProductSample) -> Result<f64, SplError> {
    let nm = non_mandatory_mask(fm)?;
    Ok(score_from_counts(&new_feature_counts(order, sample, nm)))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot draw {requested} distinct orders of {products} products")]
pub struct TooManyOrdersRequested {
    pub requested: usize,
    pub products: usize,
}

/// `count` distinct uniformly drawn permutations of `0..products`.
pub fn generate_orders(
    products: usize,
    count: usize,
    rng: &mut Xoshiro256,
) -> Result<Vec<Vec<usize>>, TooManyOrdersRequested> {
    let possible = (1..=products as u64).try_fold(1u64, |acc, k| acc.checked_mul(k));
    if possible.is_some_and(|p| (count as u64) > p) {
        return Err(TooManyOrdersRequested {
            requested: count,
            products,
        });
    }
    let mut seen = HashSet::new();
    let mut orders = Vec::with_capacity(count);
    while orders.len() < count {
        let mut o: Vec<usize> = (0..products).collect();
        rng.shuffle(&mut o);
        if seen.insert(o.clone()) {
            orders.push(o);
        }
    }
    Ok(orders)
}
