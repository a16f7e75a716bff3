//! Editable lexicons. Bundled defaults live in `lexicons/`; a directory with
//! the same file names overrides them file by file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Gender;

pub const SALUTATIONS_FILE: &str = "salutations.json";
pub const NAME_MARKERS_FILE: &str = "name_markers.json";
pub const DEPENDENCE_FILE: &str = "dependence_phrases.json";
pub const PARTY_TERMS_FILE: &str = "party_terms.json";
pub const FLIP_FILE: &str = "gender_flip.json";
pub const UNPLEASANT_VERBS_FILE: &str = "unpleasant_verbs.txt";

const BUNDLED_SALUTATIONS: &str = include_str!("../lexicons/salutations.json");
const BUNDLED_NAME_MARKERS: &str = include_str!("../lexicons/name_markers.json");
const BUNDLED_DEPENDENCE: &str = include_str!("../lexicons/dependence_phrases.json");
const BUNDLED_PARTY_TERMS: &str = include_str!("../lexicons/party_terms.json");
pub(crate) const BUNDLED_FLIP: &str = include_str!("../lexicons/gender_flip.json");
const BUNDLED_UNPLEASANT: &str = include_str!("../lexicons/unpleasant_verbs.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyTerms {
    pub plaintiff: BTreeSet<String>,
    pub defendant: BTreeSet<String>,
}

/// Cue tables used to resolve litigant genders and to find party mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderLexicons {
    pub salutations: BTreeMap<String, Gender>,
    pub name_markers: BTreeMap<String, Gender>,
    pub dependence_phrases: BTreeMap<String, Gender>,
    pub party_terms: PartyTerms,
}

impl GenderLexicons {
    pub fn bundled() -> Self {
        Self::from_sources(
            BUNDLED_SALUTATIONS,
            BUNDLED_NAME_MARKERS,
            BUNDLED_DEPENDENCE,
            BUNDLED_PARTY_TERMS,
        )
        .expect("bundled lexicons are valid")
    }

    /// Loads lexicons from `dir`, falling back to the bundled file for any
    /// file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let salutations = read_or(dir, SALUTATIONS_FILE, BUNDLED_SALUTATIONS)?;
        let markers = read_or(dir, NAME_MARKERS_FILE, BUNDLED_NAME_MARKERS)?;
        let dependence = read_or(dir, DEPENDENCE_FILE, BUNDLED_DEPENDENCE)?;
        let party = read_or(dir, PARTY_TERMS_FILE, BUNDLED_PARTY_TERMS)?;
        Self::from_sources(&salutations, &markers, &dependence, &party)
    }

    pub fn from_sources(
        salutations: &str,
        name_markers: &str,
        dependence_phrases: &str,
        party_terms: &str,
    ) -> Result<Self> {
        let lex = GenderLexicons {
            salutations: lowercase_keys(serde_json::from_str(salutations)?),
            name_markers: lowercase_keys(serde_json::from_str(name_markers)?),
            dependence_phrases: lowercase_keys(serde_json::from_str(dependence_phrases)?),
            party_terms: {
                let p: PartyTerms = serde_json::from_str(party_terms)?;
                PartyTerms {
                    plaintiff: p.plaintiff.iter().map(|t| t.to_lowercase()).collect(),
                    defendant: p.defendant.iter().map(|t| t.to_lowercase()).collect(),
                }
            },
        };
        lex.validate()?;
        Ok(lex)
    }

    /// Checks that no cue maps to both genders and the party sets are disjoint.
    pub fn validate(&self) -> Result<()> {
        let mut seen: BTreeMap<&str, Gender> = BTreeMap::new();
        for (token, gender) in self
            .salutations
            .iter()
            .chain(&self.name_markers)
            .chain(&self.dependence_phrases)
        {
            if let Some(prev) = seen.insert(token.as_str(), *gender) {
                if prev != *gender {
                    return Err(Error::InvalidLexicon(format!(
                        "`{token}` maps to both genders"
                    )));
                }
            }
        }
        if self.party_terms.plaintiff.is_empty() || self.party_terms.defendant.is_empty() {
            return Err(Error::InvalidLexicon(
                "party term sets must be non-empty".into(),
            ));
        }
        if let Some(shared) = self
            .party_terms
            .plaintiff
            .intersection(&self.party_terms.defendant)
            .next()
        {
            return Err(Error::InvalidLexicon(format!(
                "`{shared}` is both a plaintiff and a defendant term"
            )));
        }
        Ok(())
    }

    pub fn all_party_terms(&self) -> impl Iterator<Item = &String> {
        self.party_terms
            .plaintiff
            .iter()
            .chain(&self.party_terms.defendant)
    }
}

fn lowercase_keys(map: BTreeMap<String, Gender>) -> BTreeMap<String, Gender> {
    map.into_iter()
        .map(|(k, v)| (k.to_lowercase(), v))
        .collect()
}

pub(crate) fn read_or(dir: &Path, name: &str, bundled: &str) -> Result<String> {
    let path = dir.join(name);
    if path.exists() {
        fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    } else {
        log::debug!(
            "{} not found in {}, using bundled copy",
            name,
            dir.display()
        );
        Ok(bundled.to_string())
    }
}

/// The ten unpleasant verbs used as the WEAT target set and NLI verb set.
pub fn unpleasant_verbs() -> Vec<String> {
    parse_verb_list(BUNDLED_UNPLEASANT)
}

/// One lemma per line; blank lines and `#` comments are ignored.
pub fn parse_verb_list(source: &str) -> Vec<String> {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn load_verb_list(path: &Path) -> Result<Vec<String>> {
    let source = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_verb_list(&source))
}

/// Writes the bundled lexicon files into `dir` so they can be edited.
pub fn write_bundled(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in [
        (SALUTATIONS_FILE, BUNDLED_SALUTATIONS),
        (NAME_MARKERS_FILE, BUNDLED_NAME_MARKERS),
        (DEPENDENCE_FILE, BUNDLED_DEPENDENCE),
        (PARTY_TERMS_FILE, BUNDLED_PARTY_TERMS),
        (FLIP_FILE, BUNDLED_FLIP),
        (UNPLEASANT_VERBS_FILE, BUNDLED_UNPLEASANT),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lexicons_validate() {
        let lex = GenderLexicons::bundled();
        assert_eq!(lex.salutations["smt"], Gender::Female);
        assert_eq!(lex.name_markers["kaur"], Gender::Female);
        assert!(lex.party_terms.defendant.contains("respondent"));
        assert_eq!(unpleasant_verbs().len(), 10);
    }

    #[test]
    fn rejects_token_with_both_genders() {
        let err = GenderLexicons::from_sources(
            r#"{"sri": "male"}"#,
            r#"{"sri": "female"}"#,
            "{}",
            r#"{"plaintiff": ["petitioner"], "defendant": ["respondent"]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidLexicon(_)));
    }

    #[test]
    fn rejects_overlapping_party_sets() {
        let err = GenderLexicons::from_sources(
            "{}",
            "{}",
            "{}",
            r#"{"plaintiff": ["petitioner"], "defendant": ["Petitioner"]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidLexicon(_)));
    }

    #[test]
    fn missing_files_fall_back_to_bundled() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(NAME_MARKERS_FILE), r#"{"kaur": "female"}"#).unwrap();
        let lex = GenderLexicons::load_dir(dir.path()).unwrap();
        assert_eq!(lex.name_markers.len(), 1);
        assert_eq!(lex.salutations, GenderLexicons::bundled().salutations);
    }
}
