use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::RawDocument;
use crate::roletag::{ConlluToken, ParsedSentence, SentenceRef};
use crate::text::{match_case, Gender};

pub const SYNTHETIC_DOCUMENTS: usize = 50;
pub const SYNTHETIC_SEED: u64 = 20_240_917;

const COURT_GROUPS: &[&str] = &["delhi", "mumbai", "kolkata", "chennai", "punjab"];

/// `(lemma, past, past participle)`.
const VERB_FORMS: &[(&str, &str, &str)] = &[
    ("abuse", "abused", "abused"),
    ("assault", "assaulted", "assaulted"),
    ("beat", "beat", "beaten"),
    ("burn", "burnt", "burnt"),
    ("cheat", "cheated", "cheated"),
    ("misbehave", "misbehaved", "misbehaved"),
    ("rape", "raped", "raped"),
    ("slap", "slapped", "slapped"),
    ("threaten", "threatened", "threatened"),
    ("torture", "tortured", "tortured"),
];

const ADVERBS: &[&str] = &["repeatedly", "brutally", "often"];

/// Raw documents plus gold parses of the kept, resolved ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub documents: Vec<RawDocument>,
    pub parses: Vec<ParsedSentence>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Plaintiff,
    Defendant,
}

/// A word as it appears in the raw text and after mention normalization.
struct Tok {
    raw: String,
    norm: String,
    lemma: String,
    upos: &'static str,
    head: usize,
    deprel: &'static str,
}

#[derive(Default)]
struct Sentence {
    toks: Vec<Tok>,
}

impl Sentence {
    fn word(
        &mut self,
        form: &str,
        lemma: &str,
        upos: &'static str,
        head: usize,
        deprel: &'static str,
    ) -> usize {
        self.toks.push(Tok {
            raw: form.to_string(),
            norm: form.to_string(),
            lemma: lemma.to_string(),
            upos,
            head,
            deprel,
        });
        self.toks.len()
    }

    fn set_head(&mut self, id: usize, head: usize) {
        self.toks[id - 1].head = head;
    }

    fn starts(&self) -> bool {
        self.toks.is_empty()
    }

    fn render(&self, norm: bool) -> String {
        let mut out = String::new();
        for t in &self.toks {
            let form = if norm { &t.norm } else { &t.raw };
            if !out.is_empty() && t.upos != "PUNCT" {
                out.push(' ');
            }
            out.push_str(form);
        }
        out
    }
}

/// How a person is mentioned.
#[derive(Clone, Copy)]
enum Mention {
    Party(Role),
    Spouse(Gender),
    Pronoun(Gender),
}

struct DocContext {
    plaintiff: Gender,
}

impl DocContext {
    fn gender(&self, role: Role) -> Gender {
        match role {
            Role::Plaintiff => self.plaintiff,
            Role::Defendant => self.plaintiff.opposite(),
        }
    }

    fn role_of(&self, gender: Gender) -> Role {
        if gender == self.plaintiff {
            Role::Plaintiff
        } else {
            Role::Defendant
        }
    }

    fn mention(&self, rng: &mut ChaCha8Rng, gender: Gender) -> Mention {
        match rng.gen_range(0..10) {
            0..=3 => Mention::Party(self.role_of(gender)),
            4..=6 => Mention::Spouse(gender),
            _ => Mention::Pronoun(gender),
        }
    }

    /// Adds a noun phrase headed by the person; returns the head id. The
    /// head is attached later through `set_head`.
    fn noun_phrase(
        &self,
        s: &mut Sentence,
        who: Mention,
        deprel: &'static str,
        subject: bool,
    ) -> usize {
        let first = s.starts();
        match who {
            Mention::Pronoun(g) => {
                let form = match (g, subject) {
                    (Gender::Male, true) => "he",
                    (Gender::Female, true) => "she",
                    (Gender::Male, false) => "him",
                    (Gender::Female, false) => "her",
                };
                let shown = if first {
                    capitalize(form)
                } else {
                    form.to_string()
                };
                s.word(&shown, form, "PRON", 0, deprel)
            }
            Mention::Spouse(g) => {
                let det = s.word(if first { "The" } else { "the" }, "the", "DET", 0, "det");
                let noun = s.word(g.spouse_noun(), g.spouse_noun(), "NOUN", 0, deprel);
                s.set_head(det, noun);
                noun
            }
            Mention::Party(role) => {
                let det = s.word(if first { "The" } else { "the" }, "the", "DET", 0, "det");
                let noun = self.party_word(s, role, false);
                s.toks[noun - 1].deprel = deprel;
                s.set_head(det, noun);
                noun
            }
        }
    }

    fn party_word(&self, s: &mut Sentence, role: Role, compound: bool) -> usize {
        let term = match role {
            Role::Plaintiff => "petitioner",
            Role::Defendant => "respondent",
        };
        let noun = self.gender(role).spouse_noun();
        let raw = if compound {
            format!("{term}/{noun}")
        } else {
            term.to_string()
        };
        s.toks.push(Tok {
            raw: raw.clone(),
            norm: match_case(&raw, noun),
            lemma: noun.to_string(),
            upos: "NOUN",
            head: 0,
            deprel: "dep",
        });
        s.toks.len()
    }
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn period(s: &mut Sentence, root: usize) {
    s.word(".", ".", "PUNCT", root, "punct");
}

fn opening(ctx: &DocContext, compounds: bool, divorce: bool) -> Sentence {
    let mut s = Sentence::default();
    s.word("The", "the", "DET", 2, "det");
    let subj = ctx.party_word(&mut s, Role::Plaintiff, compounds);
    s.toks[subj - 1].deprel = "nsubj";
    let root = s.word("filed", "file", "VERB", 0, "root");
    s.set_head(subj, root);
    let (det, noun) = if divorce {
        ("a", "petition")
    } else {
        ("an", "application")
    };
    s.word(det, "a", "DET", 5, "det");
    let obj = s.word(noun, noun, "NOUN", root, "obj");
    s.word("for", "for", "ADP", 7, "case");
    let topic = if divorce { "divorce" } else { "maintenance" };
    s.word(topic, topic, "NOUN", obj, "nmod");
    s.word("against", "against", "ADP", 10, "case");
    s.word("the", "the", "DET", 10, "det");
    let other = ctx.party_word(&mut s, Role::Defendant, compounds);
    s.toks[other - 1].deprel = "obl";
    s.set_head(other, root);
    period(&mut s, root);
    s
}

fn active(ctx: &DocContext, rng: &mut ChaCha8Rng, verb: usize, agent: Gender) -> Sentence {
    let (lemma, past, _) = VERB_FORMS[verb];
    let mut s = Sentence::default();
    let subj = ctx.noun_phrase(&mut s, ctx.mention(rng, agent), "nsubj", true);
    let root = s.word(past, lemma, "VERB", 0, "root");
    s.set_head(subj, root);
    if lemma == "misbehave" {
        let case = s.word("with", "with", "ADP", 0, "case");
        let obl = ctx.noun_phrase(&mut s, ctx.mention(rng, agent.opposite()), "obl", false);
        s.set_head(case, obl);
        s.set_head(obl, root);
    } else {
        let obj = ctx.noun_phrase(&mut s, ctx.mention(rng, agent.opposite()), "obj", false);
        s.set_head(obj, root);
    }
    if rng.gen_bool(0.3) {
        let adv = *ADVERBS.choose(rng).unwrap();
        s.word(adv, adv, "ADV", root, "advmod");
    }
    period(&mut s, root);
    s
}

fn passive(ctx: &DocContext, rng: &mut ChaCha8Rng, verb: usize, agent: Gender) -> Sentence {
    let (lemma, _, participle) = VERB_FORMS[verb];
    let mut s = Sentence::default();
    let subj = ctx.noun_phrase(
        &mut s,
        ctx.mention(rng, agent.opposite()),
        "nsubj:pass",
        true,
    );
    let aux = s.word("was", "be", "AUX", 0, "aux:pass");
    let root = s.word(participle, lemma, "VERB", 0, "root");
    s.set_head(subj, root);
    s.set_head(aux, root);
    let case = s.word("by", "by", "ADP", 0, "case");
    let obl = ctx.noun_phrase(&mut s, ctx.mention(rng, agent), "obl:agent", false);
    s.set_head(case, obl);
    s.set_head(obl, root);
    period(&mut s, root);
    s
}

/// "Her husband used to torture her everyday."
fn used_to(verb: usize, agent: Gender) -> Sentence {
    let (lemma, _, _) = VERB_FORMS[verb];
    let victim = agent.opposite();
    let poss = if victim == Gender::Female {
        "her"
    } else {
        "his"
    };
    let obj = if victim == Gender::Female {
        "her"
    } else {
        "him"
    };
    let mut s = Sentence::default();
    s.word(&capitalize(poss), poss, "PRON", 2, "nmod:poss");
    s.word(agent.spouse_noun(), agent.spouse_noun(), "NOUN", 3, "nsubj");
    let root = s.word("used", "use", "VERB", 0, "root");
    s.word("to", "to", "PART", 5, "mark");
    let xcomp = s.word(lemma, lemma, "VERB", root, "xcomp");
    if lemma == "misbehave" {
        s.word("with", "with", "ADP", 7, "case");
        s.word(obj, obj, "PRON", xcomp, "obl");
    } else {
        s.word(obj, obj, "PRON", xcomp, "obj");
    }
    s.word("everyday", "everyday", "ADV", xcomp, "advmod");
    period(&mut s, root);
    s
}

fn filler(ctx: &DocContext, rng: &mut ChaCha8Rng, divorce: bool) -> Sentence {
    let mut s = Sentence::default();
    let choices = if divorce { 6 } else { 4 };
    match rng.gen_range(0..choices) {
        0 => {
            s.word("The", "the", "DET", 2, "det");
            s.word("marriage", "marriage", "NOUN", 4, "nsubj:pass");
            s.word("was", "be", "AUX", 4, "aux:pass");
            let root = s.word("solemnized", "solemnize", "VERB", 0, "root");
            s.word("in", "in", "ADP", 6, "case");
            let year = rng.gen_range(1990..2005).to_string();
            s.word(&year, &year, "NUM", root, "obl");
            period(&mut s, root);
        }
        1 => {
            s.word("The", "the", "DET", 2, "det");
            let subj = ctx.party_word(&mut s, ctx.role_of(Gender::Female), false);
            s.toks[subj - 1].deprel = "nsubj";
            s.set_head(subj, 3);
            let root = s.word("claimed", "claim", "VERB", 0, "root");
            s.word("maintenance", "maintenance", "NOUN", root, "obj");
            s.word("of", "of", "ADP", 6, "case");
            let rs = s.word("Rs.", "rs.", "NOUN", 4, "nmod");
            let amount = format!("{},000", rng.gen_range(2..30));
            s.word(&amount, &amount, "NUM", rs, "nummod");
            s.word("per", "per", "ADP", 9, "case");
            s.word("month", "month", "NOUN", rs, "nmod");
            period(&mut s, root);
        }
        2 => {
            s.word("The", "the", "DET", 2, "det");
            let subj = ctx.party_word(&mut s, ctx.role_of(Gender::Male), false);
            s.toks[subj - 1].deprel = "nsubj";
            s.set_head(subj, 3);
            let root = s.word("demanded", "demand", "VERB", 0, "root");
            s.word("dowry", "dowry", "NOUN", root, "obj");
            s.word("from", "from", "ADP", 7, "case");
            s.word("the", "the", "DET", 7, "det");
            s.word("family", "family", "NOUN", root, "obl");
            s.word("of", "of", "ADP", 10, "case");
            s.word("the", "the", "DET", 10, "det");
            let owner = ctx.party_word(&mut s, ctx.role_of(Gender::Female), false);
            s.toks[owner - 1].deprel = "nmod";
            s.set_head(owner, 7);
            period(&mut s, root);
        }
        3 => {
            s.word("The", "the", "DET", 2, "det");
            s.word("matter", "matter", "NOUN", 4, "nsubj:pass");
            s.word("was", "be", "AUX", 4, "aux:pass");
            let root = s.word("listed", "list", "VERB", 0, "root");
            s.word("for", "for", "ADP", 6, "case");
            s.word("hearing", "hearing", "NOUN", root, "obl");
            period(&mut s, root);
        }
        4 => {
            s.word("The", "the", "DET", 2, "det");
            s.word("torture", "torture", "NOUN", 3, "nsubj");
            let root = s.word("continued", "continue", "VERB", 0, "root");
            s.word("for", "for", "ADP", 5, "case");
            s.word("years", "year", "NOUN", root, "obl");
            period(&mut s, root);
        }
        _ => {
            s.word("The", "the", "DET", 2, "det");
            let subj = ctx.party_word(&mut s, Role::Plaintiff, false);
            s.toks[subj - 1].deprel = "nsubj";
            s.set_head(subj, 3);
            let root = s.word("sought", "seek", "VERB", 0, "root");
            s.word("a", "a", "DET", 5, "det");
            let obj = s.word("decree", "decree", "NOUN", root, "obj");
            s.word("of", "of", "ADP", 7, "case");
            s.word("divorce", "divorce", "NOUN", obj, "nmod");
            period(&mut s, root);
        }
    }
    s
}

fn marriage_line(rng: &mut ChaCha8Rng) -> Sentence {
    let mut s = Sentence::default();
    s.word("The", "the", "DET", 2, "det");
    s.word("marriage", "marriage", "NOUN", 3, "nsubj");
    let root = s.word("broke", "break", "VERB", 0, "root");
    s.word("down", "down", "ADP", root, "compound:prt");
    s.word("in", "in", "ADP", 6, "case");
    let year = rng.gen_range(2005..2020).to_string();
    s.word(&year, &year, "NUM", root, "obl");
    period(&mut s, root);
    s
}

fn body_sentence(ctx: &DocContext, rng: &mut ChaCha8Rng) -> Sentence {
    if rng.gen_bool(0.3) {
        return filler(ctx, rng, true);
    }
    let verb = rng.gen_range(0..VERB_FORMS.len());
    let agent = if rng.gen_bool(0.7) {
        Gender::Male
    } else {
        Gender::Female
    };
    match rng.gen_range(0..10) {
        0..=4 => active(ctx, rng, verb, agent),
        5..=7 if VERB_FORMS[verb].0 != "misbehave" => passive(ctx, rng, verb, agent),
        5..=7 => active(ctx, rng, verb, agent),
        _ => used_to(verb, agent),
    }
}

/// A deterministic corpus of divorce proceedings written with litigant
/// party terms, together with gold dependency parses of the normalized
/// sentences. The second-to-last document is not a divorce proceeding and
/// the last one has no gender evidence; neither has parses.
pub fn divorce_corpus(documents: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2005, 1, 1).expect("valid date");
    let mut out = SyntheticCorpus {
        documents: Vec::with_capacity(documents),
        parses: Vec::new(),
    };
    for i in 0..documents {
        let id = format!("synth-{:03}", i + 1);
        let ctx = DocContext {
            plaintiff: if i % 2 == 0 {
                Gender::Female
            } else {
                Gender::Male
            },
        };
        let divorce = documents < 2 || i != documents - 2;
        let resolvable = documents < 2 || i != documents - 1;
        let mut sentences = vec![opening(&ctx, resolvable, divorce)];
        if !resolvable {
            sentences.extend((0..5).map(|_| marriage_line(&mut rng)));
        } else if !divorce {
            sentences.extend((0..5).map(|_| filler(&ctx, &mut rng, false)));
            sentences.push(marriage_line(&mut rng));
        } else {
            sentences.push(marriage_line(&mut rng));
            let n = rng.gen_range(10..16);
            sentences.extend((0..n).map(|_| body_sentence(&ctx, &mut rng)));
        }
        let text: Vec<String> = sentences.iter().map(|s| s.render(false)).collect();
        out.documents.push(RawDocument {
            id: id.clone(),
            court_group: COURT_GROUPS[i % COURT_GROUPS.len()].to_string(),
            date: start + Duration::days(rng.gen_range(0..5500)),
            text: text.join(" "),
        });
        if divorce && resolvable {
            for (sent_idx, s) in sentences.iter().enumerate() {
                out.parses.push(ParsedSentence {
                    tokens: s
                        .toks
                        .iter()
                        .map(|t| ConlluToken {
                            form: t.norm.clone(),
                            lemma: t.lemma.clone(),
                            upos: t.upos.to_string(),
                            head: t.head,
                            deprel: t.deprel.to_string(),
                        })
                        .collect(),
                    source: Some(SentenceRef {
                        doc_id: id.clone(),
                        sent_idx,
                    }),
                });
            }
        }
    }
    out
}

/// The bundled 50-document corpus.
pub fn bundled_corpus() -> SyntheticCorpus {
    divorce_corpus(SYNTHETIC_DOCUMENTS, SYNTHETIC_SEED)
}

/// Detokenized text of a parse, as the generator renders it.
pub fn render_parse(sent: &ParsedSentence) -> String {
    let mut out = String::new();
    for t in &sent.tokens {
        if !out.is_empty() && t.upos != "PUNCT" {
            out.push(' ');
        }
        out.push_str(&t.form);
    }
    out
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const PARSES_FILE: &str = "parses.conllu";

/// Writes `corpus.jsonl` and `parses.conllu` into `dir`.
pub fn write_corpus(
    corpus: &SyntheticCorpus,
    dir: &std::path::Path,
) -> crate::Result<[std::path::PathBuf; 2]> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut lines = String::new();
    for d in &corpus.documents {
        lines.push_str(&serde_json::to_string(d)?);
        lines.push('\n');
    }
    let docs = dir.join(CORPUS_FILE);
    let parses = dir.join(PARSES_FILE);
    std::fs::write(&docs, lines).map_err(|e| crate::Error::io(&docs, e))?;
    std::fs::write(&parses, crate::roletag::write_conllu(&corpus.parses))
        .map_err(|e| crate::Error::io(&parses, e))?;
    Ok([docs, parses])
}
