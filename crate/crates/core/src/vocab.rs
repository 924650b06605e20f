//! Category vocabulary with the salient/inconspicuous split and the
//! supercategory table used for relaxed recall.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_VOCABULARY: &str = include_str!("../data/categories.json");

/// Number of categories in the shipped vocabulary (80 COCO + man, woman).
pub const DEFAULT_CATEGORY_COUNT: usize = 82;
pub const DEFAULT_SALIENT_COUNT: usize = 30;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyFile {
    categories: Vec<String>,
    salient: Vec<String>,
    inconspicuous: Vec<String>,
    supercategories: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryVocabulary {
    categories: Vec<String>,
    salient: BTreeSet<String>,
    inconspicuous: BTreeSet<String>,
    supercategory: BTreeMap<String, String>,
}

impl CategoryVocabulary {
    /// The 82-category vocabulary with COCO 2017 supercategories
    /// (`man`/`woman` map to `person`).
    pub fn builtin() -> Self {
        Self::from_json_str(DEFAULT_VOCABULARY, "<builtin>")
            .expect("builtin vocabulary is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let file: VocabularyFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::new(
            file.categories,
            file.salient,
            file.inconspicuous,
            file.supercategories,
        )
        .map_err(|e| match e {
            Error::Validation { field, message, .. } => Error::Validation {
                location: origin.to_string(),
                field,
                message,
            },
            other => other,
        })
    }

    /// Builds a vocabulary, checking that salient and inconspicuous
    /// partition the categories and that every category has a supercategory.
    pub fn new(
        categories: Vec<String>,
        salient: Vec<String>,
        inconspicuous: Vec<String>,
        supercategory: BTreeMap<String, String>,
    ) -> Result<Self> {
        let here = "vocabulary";
        let all: BTreeSet<String> = categories.iter().cloned().collect();
        if all.len() != categories.len() {
            return Err(Error::validation(here, "categories", "duplicate category"));
        }
        if categories.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::validation(here, "categories", "empty category name"));
        }
        let salient: BTreeSet<String> = salient.into_iter().collect();
        let inconspicuous: BTreeSet<String> = inconspicuous.into_iter().collect();
        if let Some(c) = salient.intersection(&inconspicuous).next() {
            return Err(Error::validation(
                here,
                "salient",
                format!("`{c}` is both salient and inconspicuous"),
            ));
        }
        let union: BTreeSet<String> = salient.union(&inconspicuous).cloned().collect();
        if union != all {
            let missing: Vec<_> = all.difference(&union).cloned().collect();
            let extra: Vec<_> = union.difference(&all).cloned().collect();
            return Err(Error::validation(
                here,
                "salient/inconspicuous",
                format!("split does not cover the categories (unassigned {missing:?}, unknown {extra:?})"),
            ));
        }
        if let Some(c) = categories.iter().find(|c| !supercategory.contains_key(*c)) {
            return Err(Error::validation(
                here,
                "supercategories",
                format!("`{c}` has no supercategory"),
            ));
        }
        let supercategory = supercategory
            .into_iter()
            .filter(|(c, _)| all.contains(c))
            .collect();
        Ok(Self {
            categories,
            salient,
            inconspicuous,
            supercategory,
        })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn contains(&self, category: &str) -> bool {
        self.supercategory.contains_key(category)
    }

    pub fn salient(&self) -> &BTreeSet<String> {
        &self.salient
    }

    pub fn inconspicuous(&self) -> &BTreeSet<String> {
        &self.inconspicuous
    }

    pub fn is_salient(&self, category: &str) -> bool {
        self.salient.contains(category)
    }

    pub fn supercategory(&self, category: &str) -> Option<&str> {
        self.supercategory.get(category).map(String::as_str)
    }

    pub fn to_json_string(&self) -> String {
        let file = VocabularyFile {
            categories: self.categories.clone(),
            salient: self
                .categories
                .iter()
                .filter(|c| self.salient.contains(*c))
                .cloned()
                .collect(),
            inconspicuous: self
                .categories
                .iter()
                .filter(|c| self.inconspicuous.contains(*c))
                .cloned()
                .collect(),
            supercategories: self.supercategory.clone(),
        };
        serde_json::to_string_pretty(&file).expect("vocabulary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_partition_sizes() {
        let v = CategoryVocabulary::builtin();
        assert_eq!(v.len(), DEFAULT_CATEGORY_COUNT);
        assert_eq!(v.salient().len(), DEFAULT_SALIENT_COUNT);
        assert_eq!(v.inconspicuous().len(), 52);
        assert_eq!(v.salient().len() + v.inconspicuous().len(), 82);
    }

    #[test]
    fn supercategories() {
        let v = CategoryVocabulary::builtin();
        assert_eq!(v.supercategory("dog"), Some("animal"));
        assert_eq!(v.supercategory("cat"), Some("animal"));
        assert_eq!(v.supercategory("car"), Some("vehicle"));
        assert_eq!(v.supercategory("man"), Some("person"));
        assert_eq!(v.supercategory("woman"), Some("person"));
        assert_eq!(v.supercategory("sink"), Some("appliance"));
        assert_eq!(v.supercategory("unicorn"), None);
        assert!(v.is_salient("clock"));
        assert!(!v.is_salient("tv"));
    }

    #[test]
    fn json_round_trip() {
        let v = CategoryVocabulary::builtin();
        let back = CategoryVocabulary::from_json_str(&v.to_json_string(), "x").unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn rejects_overlapping_split() {
        let cats = vec!["a".to_string(), "b".to_string()];
        let sup = cats.iter().map(|c| (c.clone(), "s".to_string())).collect();
        let err = CategoryVocabulary::new(
            cats.clone(),
            vec!["a".into(), "b".into()],
            vec!["b".into()],
            sup,
        )
        .unwrap_err();
        assert!(err.to_string().contains("both salient"));
    }

    #[test]
    fn rejects_missing_supercategory() {
        let cats = vec!["a".to_string(), "b".to_string()];
        let sup = [("a".to_string(), "s".to_string())].into_iter().collect();
        let err =
            CategoryVocabulary::new(cats, vec!["a".into()], vec!["b".into()], sup).unwrap_err();
        assert!(err.to_string().contains("no supercategory"));
    }
}
