use std::path::Path;

use super::{Configuration, FeatureModel, SplError};
use crate::mealy::{compose, read_fsm, MealyMachine};

/// Per-feature component machines; a product's machine is the interleaving
/// composition of the components of its selected features.
#[derive(Debug, Clone)]
pub struct ComponentFamily {
    /// `(feature index, component)`, sorted by feature index.
    components: Vec<(usize, MealyMachine)>,
}

impl ComponentFamily {
    pub fn new(fm: &FeatureModel, components: Vec<(String, MealyMachine)>) -> Result<Self, SplError> {
        let mut bound = Vec::with_capacity(components.len());
        for (name, m) in components {
            let f = fm
                .index_of(&name)
                .ok_or_else(|| SplError::UnknownFeature(name.clone()))?;
            bound.push((f, m));
        }
        bound.sort_by_key(|(f, _)| *f);
        if bound.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SplError::InvalidModel("two components for one feature".into()));
        }
        // components may share inputs only if no valid product selects both
        let mut owner: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
        let mut shared = Vec::new();
        for (f, m) in &bound {
            for s in m.inputs() {
                if let Some(&g) = owner.get(s.as_str()) {
                    shared.push((g, *f, s.clone()));
                } else {
                    owner.insert(s, *f);
                }
            }
        }
        if !shared.is_empty() {
            let valid = fm.valid_configurations()?;
            for (g, f, s) in shared {
                if valid.iter().any(|c| c.contains(g) && c.contains(f)) {
                    return Err(SplError::InvalidModel(format!(
                        "input `{s}` is shared by `{}` and `{}`, which can be selected together",
                        fm.name(g),
                        fm.name(f)
                    )));
                }
            }
        }
        Ok(ComponentFamily { components: bound })
    }

    /// Loads `<dir>/<feature>.fsm` for every feature that has such a file.
    pub fn load_dir(fm: &FeatureModel, dir: &Path) -> Result<Self, SplError> {
        let mut components = Vec::new();
        let entries = std::fs::read_dir(dir).map_err(|e| SplError::io(dir, e))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "fsm"))
            .collect();
        paths.sort();
        for path in paths {
            let name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let text = std::fs::read_to_string(&path).map_err(|e| SplError::io(&path, e))?;
            let m = read_fsm(&text).map_err(|e| SplError::Fsm {
                path: path.display().to_string(),
                source: e,
            })?;
            components.push((name, m));
        }
        Self::new(fm, components)
    }

    pub fn component(&self, feature: usize) -> Option<&MealyMachine> {
        self.components
            .iter()
            .find(|(f, _)| *f == feature)
            .map(|(_, m)| m)
    }

    /// Every input of every component, first occurrence kept.
    pub fn inputs(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        self.components
            .iter()
            .flat_map(|(_, m)| m.inputs().iter().cloned())
            .filter(|s| seen.insert(s.clone()))
            .collect()
    }

    /// Inputs of the selected features' components, in feature order.
    pub fn product_alphabet(&self, c: &Configuration) -> Vec<String> {
        self.selected(c)
            .flat_map(|m| m.inputs().iter().cloned())
            .collect()
    }

    fn selected<'a>(&'a self, c: &'a Configuration) -> impl Iterator<Item = &'a MealyMachine> {
        self.components
            .iter()
            .filter(|(f, _)| c.contains(*f))
            .map(|(_, m)| m)
    }

    pub fn derive(&self, c: &Configuration) -> Result<MealyMachine, SplError> {
        let parts: Vec<&MealyMachine> = self.selected(c).collect();
        if parts.is_empty() {
            return Err(SplError::EmptyProduct);
        }
        Ok(compose(&parts)?)
    }
}
