use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{FeatureExpr, SplError};

/// Upper bound on the number of features for exhaustive enumeration.
pub const ENUMERATION_LIMIT: usize = 30;
/// Configurations are bitsets; models may not exceed this many features.
pub const MAX_FEATURES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Variability {
    Mandatory,
    Optional,
    Alternative(String),
    Or(String),
}

#[derive(Debug, Clone)]
struct Feature {
    name: String,
    parent: Option<usize>,
    kind: Option<Variability>,
    children: Vec<usize>,
}

/// A set of selected features, stored as a bitset over the owning model's
/// feature order (pre-order of the feature tree).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    mask: u64,
}

impl Configuration {
    pub fn from_mask(mask: u64) -> Self {
        Configuration { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.mask >> feature & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.mask & !other.mask == 0
    }

    /// Selected feature indices in ascending order.
    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |&i| self.contains(i))
    }

    /// Lexicographic order over the membership vector in feature order,
    /// with a selected feature sorting before a deselected one.
    pub fn lex_cmp(&self, other: &Configuration) -> Ordering {
        other.mask.reverse_bits().cmp(&self.mask.reverse_bits())
    }
}

/// Structural variability model: a feature tree with mandatory, optional,
/// alternative-group and or-group children plus cross-tree constraints.
#[derive(Debug, Clone)]
pub struct FeatureModel {
    features: Vec<Feature>,
    index: HashMap<String, usize>,
    constraints: Vec<FeatureExpr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureNode {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<FeatureNode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureModelFile {
    features: FeatureNode,
    #[serde(default)]
    constraints: Vec<String>,
}

impl FeatureModel {
    pub fn from_json(text: &str) -> Result<Self, SplError> {
        let file: FeatureModelFile = serde_json::from_str(text)?;
        let mut features = Vec::new();
        flatten(&file.features, None, &mut features)?;
        let constraints = file
            .constraints
            .iter()
            .map(|c| FeatureExpr::parse(c))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(features, constraints)
    }

    pub fn to_json(&self) -> String {
        fn node(fm: &FeatureModel, i: usize) -> FeatureNode {
            let f = &fm.features[i];
            let (kind, group) = match &f.kind {
                None => (None, None),
                Some(Variability::Mandatory) => (Some("mandatory"), None),
                Some(Variability::Optional) => (Some("optional"), None),
                Some(Variability::Alternative(g)) => (Some("alternative"), Some(g.clone())),
                Some(Variability::Or(g)) => (Some("or"), Some(g.clone())),
            };
            FeatureNode {
                name: f.name.clone(),
                kind: kind.map(str::to_string),
                group,
                children: f.children.iter().map(|&c| node(fm, c)).collect(),
            }
        }
        let file = FeatureModelFile {
            features: node(self, 0),
            constraints: self.constraints.iter().map(|c| c.to_string()).collect(),
        };
        serde_json::to_string_pretty(&file).expect("feature model serializes")
    }

    /// Builds a model from `(name, parent, kind)` triples listed in pre-order,
    /// starting with the root (no parent, no kind).
    pub fn from_features<S: AsRef<str>>(
        spec: &[(S, Option<S>, Option<Variability>)],
        constraints: Vec<FeatureExpr>,
    ) -> Result<Self, SplError> {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut features = Vec::with_capacity(spec.len());
        for (i, (name, parent, kind)) in spec.iter().enumerate() {
            let parent = match parent {
                None => None,
                Some(p) => Some(
                    *index
                        .get(p.as_ref())
                        .ok_or_else(|| SplError::UnknownFeature(p.as_ref().to_string()))?,
                ),
            };
            index.insert(name.as_ref(), i);
            features.push(Feature {
                name: name.as_ref().to_string(),
                parent,
                kind: kind.clone(),
                children: Vec::new(),
            });
        }
        Self::new(features, constraints)
    }

    fn new(mut features: Vec<Feature>, constraints: Vec<FeatureExpr>) -> Result<Self, SplError> {
        if features.len() > MAX_FEATURES {
            return Err(SplError::TooManyFeatures {
                count: features.len(),
                limit: MAX_FEATURES,
            });
        }
        let mut index = HashMap::new();
        for (i, f) in features.iter().enumerate() {
            if index.insert(f.name.clone(), i).is_some() {
                return Err(SplError::DuplicateFeature(f.name.clone()));
            }
        }
        match features.first() {
            Some(root) if root.parent.is_none() && root.kind.is_none() => {}
            _ => return Err(SplError::InvalidModel("the first feature must be the root".into())),
        }
        for i in 1..features.len() {
            let Some(p) = features[i].parent else {
                return Err(SplError::InvalidModel(format!(
                    "feature `{}` has no parent",
                    features[i].name
                )));
            };
            if p >= i {
                return Err(SplError::InvalidModel(format!(
                    "feature `{}` must follow its parent",
                    features[i].name
                )));
            }
            if features[i].kind.is_none() {
                return Err(SplError::InvalidModel(format!(
                    "feature `{}` has no variability kind",
                    features[i].name
                )));
            }
            features[p].children.push(i);
        }

        // groups: >= 2 members, one parent, one kind
        let mut groups: HashMap<&str, (usize, bool, usize)> = HashMap::new();
        for f in &features[1..] {
            let (g, is_alt) = match &f.kind {
                Some(Variability::Alternative(g)) => (g.as_str(), true),
                Some(Variability::Or(g)) => (g.as_str(), false),
                _ => continue,
            };
            let parent = f.parent.expect("non-root");
            let entry = groups.entry(g).or_insert((parent, is_alt, 0));
            if entry.0 != parent || entry.1 != is_alt {
                return Err(SplError::InvalidGroup(g.to_string()));
            }
            entry.2 += 1;
        }
        if let Some((g, _)) = groups.iter().find(|(_, v)| v.2 < 2) {
            return Err(SplError::InvalidGroup(g.to_string()));
        }

        for c in &constraints {
            for name in c.features() {
                if !index.contains_key(name) {
                    return Err(SplError::UnknownFeature(name.to_string()));
                }
            }
        }
        Ok(FeatureModel {
            features,
            index,
            constraints,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn root(&self) -> &str {
        &self.features[0].name
    }

    pub fn name(&self, feature: usize) -> &str {
        &self.features[feature].name
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn kind(&self, feature: usize) -> Option<&Variability> {
        self.features[feature].kind.as_ref()
    }

    pub fn parent(&self, feature: usize) -> Option<usize> {
        self.features[feature].parent
    }

    pub fn constraints(&self) -> &[FeatureExpr] {
        &self.constraints
    }

    pub fn configuration<S: AsRef<str>>(&self, names: &[S]) -> Result<Configuration, SplError> {
        let mut mask = 0u64;
        for n in names {
            let i = self
                .index_of(n.as_ref())
                .ok_or_else(|| SplError::UnknownFeature(n.as_ref().to_string()))?;
            mask |= 1 << i;
        }
        Ok(Configuration { mask })
    }

    pub fn selected_names(&self, c: &Configuration) -> Vec<&str> {
        c.features()
            .filter(|&i| i < self.len())
            .map(|i| self.name(i))
            .collect()
    }

    pub fn satisfies(&self, expr: &FeatureExpr, c: &Configuration) -> bool {
        expr.eval(&|name| self.index_of(name).is_some_and(|i| c.contains(i)))
    }

    /// Rule-based validity check.
    pub fn is_valid(&self, c: &Configuration) -> Result<bool, SplError> {
        if let Some(bad) = c.features().find(|&i| i >= self.len()) {
            return Err(SplError::UnknownFeature(format!("#{bad}")));
        }
        Ok(self.tree_valid(c) && self.constraints.iter().all(|e| self.satisfies(e, c)))
    }

    fn tree_valid(&self, c: &Configuration) -> bool {
        if !c.contains(0) {
            return false;
        }
        for (i, f) in self.features.iter().enumerate() {
            let on = c.contains(i);
            if on {
                if let Some(p) = f.parent {
                    if !c.contains(p) {
                        return false;
                    }
                }
            }
            if !on {
                continue;
            }
            let mut group_counts: HashMap<&Variability, usize> = HashMap::new();
            for &ch in &f.children {
                let kind = self.features[ch].kind.as_ref().expect("non-root");
                match kind {
                    Variability::Mandatory if !c.contains(ch) => return false,
                    Variability::Alternative(_) | Variability::Or(_) => {
                        *group_counts.entry(kind).or_default() += c.contains(ch) as usize;
                    }
                    _ => {}
                }
            }
            for (kind, n) in group_counts {
                match kind {
                    Variability::Alternative(_) if n != 1 => return false,
                    Variability::Or(_) if n == 0 => return false,
                    _ => {}
                }
            }
        }
        true
    }

    /// All valid configurations, ordered by [`Configuration::lex_cmp`].
    pub fn valid_configurations(&self) -> Result<Vec<Configuration>, SplError> {
        if self.len() > ENUMERATION_LIMIT {
            return Err(SplError::TooManyFeatures {
                count: self.len(),
                limit: ENUMERATION_LIMIT,
            });
        }
        let mut out: Vec<Configuration> = self
            .subtree_choices(0)
            .into_iter()
            .map(Configuration::from_mask)
            .filter(|c| self.constraints.iter().all(|e| self.satisfies(e, c)))
            .collect();
        out.sort_by(|a, b| a.lex_cmp(b));
        Ok(out)
    }

    /// Every tree-consistent selection of the subtree rooted at `f`, given
    /// that `f` itself is selected.
    fn subtree_choices(&self, f: usize) -> Vec<u64> {
        let mut partial = vec![1u64 << f];
        let children = &self.features[f].children;
        let mut done_groups: Vec<&str> = Vec::new();
        for &ch in children {
            let options: Vec<u64> = match self.features[ch].kind.as_ref().expect("non-root") {
                Variability::Mandatory => self.subtree_choices(ch),
                Variability::Optional => {
                    let mut o = vec![0];
                    o.extend(self.subtree_choices(ch));
                    o
                }
                Variability::Alternative(g) | Variability::Or(g) => {
                    if done_groups.contains(&g.as_str()) {
                        continue;
                    }
                    done_groups.push(g);
                    let alt = matches!(
                        self.features[ch].kind,
                        Some(Variability::Alternative(_))
                    );
                    let members: Vec<usize> = children
                        .iter()
                        .copied()
                        .filter(|&m| {
                            matches!(
                                &self.features[m].kind,
                                Some(Variability::Alternative(h) | Variability::Or(h)) if h == g
                            )
                        })
                        .collect();
                    self.group_choices(&members, alt)
                }
            };
            partial = partial
                .iter()
                .flat_map(|&p| options.iter().map(move |&o| p | o))
                .collect();
        }
        partial
    }

    fn group_choices(&self, members: &[usize], alternative: bool) -> Vec<u64> {
        if alternative {
            return members
                .iter()
                .flat_map(|&m| self.subtree_choices(m))
                .collect();
        }
        // or-group: every non-empty subset of members
        let mut acc = vec![0u64];
        for &m in members {
            let sub = self.subtree_choices(m);
            let mut next = acc.clone();
            for &a in &acc {
                next.extend(sub.iter().map(|&s| a | s));
            }
            acc = next;
        }
        acc.into_iter().filter(|&a| a != 0).collect()
    }

    /// Features selected in every valid configuration.
    pub fn core_features(&self, valid: &[Configuration]) -> Configuration {
        let all = if self.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.len()) - 1
        };
        Configuration::from_mask(valid.iter().fold(all, |acc, c| acc & c.mask))
    }

    /// Features that vary across valid configurations: everything except the
    /// core features. Dead features are excluded too.
    pub fn non_mandatory_features(&self) -> Result<Vec<usize>, SplError> {
        let valid = self.valid_configurations()?;
        let core = self.core_features(&valid);
        let any = valid.iter().fold(0u64, |acc, c| acc | c.mask);
        Ok((0..self.len())
            .filter(|&i| !core.contains(i) && any >> i & 1 == 1)
            .collect())
    }
}

fn flatten(node: &FeatureNode, parent: Option<usize>, out: &mut Vec<Feature>) -> Result<(), SplError> {
    let kind = match (parent, node.kind.as_deref(), &node.group) {
        (None, None | Some("root"), _) => None,
        (None, Some(_), _) => {
            return Err(SplError::InvalidModel("the root feature takes no kind".into()))
        }
        (Some(_), Some("mandatory"), _) => Some(Variability::Mandatory),
        (Some(_), Some("optional"), _) => Some(Variability::Optional),
        (Some(_), Some("alternative"), Some(g)) => Some(Variability::Alternative(g.clone())),
        (Some(_), Some("or"), Some(g)) => Some(Variability::Or(g.clone())),
        (Some(_), k, _) => {
            return Err(SplError::InvalidModel(format!(
                "feature `{}`: unsupported kind {:?} (group required for alternative/or)",
                node.name, k
            )))
        }
    };
    let me = out.len();
    out.push(Feature {
        name: node.name.clone(),
        parent,
        kind,
        children: Vec::new(),
    });
    for ch in &node.children {
        flatten(ch, Some(me), out)?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Root with mandatory A and C, optional B, alternative D/E and or-group
    /// F/G/H, all children of the root.
    pub fn sample_spl() -> FeatureModel {
        use Variability::*;
        FeatureModel::from_features(
            &[
                ("R", None, None),
                ("A", Some("R"), Some(Mandatory)),
                ("B", Some("R"), Some(Optional)),
                ("C", Some("R"), Some(Mandatory)),
                ("D", Some("R"), Some(Alternative("de".into()))),
                ("E", Some("R"), Some(Alternative("de".into()))),
                ("F", Some("R"), Some(Or("fgh".into()))),
                ("G", Some("R"), Some(Or("fgh".into()))),
                ("H", Some("R"), Some(Or("fgh".into()))),
            ],
            vec![],
        )
        .unwrap()
    }
}
