//! Verb inflection for hypothesis and template construction.

/// `(lemma, third person singular, other inflected forms…)`.
const FORMS: &[(&str, &str, &[&str])] = &[
    ("abuse", "abuses", &["abused", "abusing"]),
    ("assault", "assaults", &["assaulted", "assaulting"]),
    ("beat", "beats", &["beaten", "beating"]),
    ("burn", "burns", &["burned", "burnt", "burning"]),
    ("cheat", "cheats", &["cheated", "cheating"]),
    ("misbehave", "misbehaves", &["misbehaved", "misbehaving"]),
    ("rape", "rapes", &["raped", "raping"]),
    ("slap", "slaps", &["slapped", "slapping"]),
    ("threaten", "threatens", &["threatened", "threatening"]),
    ("torture", "tortures", &["tortured", "torturing"]),
    ("harass", "harasses", &["harassed", "harassing"]),
    ("hit", "hits", &["hitting"]),
    ("kill", "kills", &["killed", "killing"]),
    ("guide", "guides", &["guided", "guiding"]),
    ("inspire", "inspires", &["inspired", "inspiring"]),
    ("go", "goes", &["went", "gone", "going"]),
    ("have", "has", &["had", "having"]),
    ("do", "does", &["did", "done", "doing"]),
    ("be", "is", &["was", "were", "been", "being", "are", "am"]),
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Present-tense third-person singular form ("torture" → "tortures").
pub fn third_person_singular(lemma: &str) -> String {
    let lemma = lemma.trim().to_lowercase();
    if let Some((_, s, _)) = FORMS.iter().find(|(l, _, _)| *l == lemma) {
        return s.to_string();
    }
    let chars: Vec<char> = lemma.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'y' && !is_vowel(chars[n - 2]) {
        return format!("{}ies", &lemma[..lemma.len() - 1]);
    }
    if ["s", "x", "z", "ch", "sh", "o"]
        .iter()
        .any(|e| lemma.ends_with(e))
    {
        return format!("{lemma}es");
    }
    format!("{lemma}s")
}

/// Lemma of a possibly inflected verb. Known verbs use the table; other
/// words only lose a present-tense `-s`/`-es`/`-ies`.
pub fn verb_lemma(word: &str) -> String {
    let w = word.trim().to_lowercase();
    for (lemma, s, others) in FORMS {
        if w == *lemma || w == *s || others.contains(&w.as_str()) {
            return lemma.to_string();
        }
    }
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    for ending in ["sses", "shes", "ches", "xes", "zes", "oes"] {
        if w.ends_with(ending) {
            return w[..w.len() - 2].to_string();
        }
    }
    if w.len() > 3
        && w.ends_with('s')
        && !w.ends_with("ss")
        && !w.ends_with("us")
        && !w.ends_with("is")
    {
        return w[..w.len() - 1].to_string();
    }
    w
}
