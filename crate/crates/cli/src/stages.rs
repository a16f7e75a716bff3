use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use courtbias_core::backend::BackendClient;
use courtbias_core::cloze::{bias_measures, write_outputs};
use courtbias_core::embed::{
    inflected_targets, load_vectors, save_vectors, tokenize_lines, train_skipgram, weat,
    weat_repeated, WeatResult, WeatSpec,
};
use courtbias_core::entail::{
    build_subcorpora, entailment_gap, gaps_csv, materialize_flipped, nli_bias_with,
    write_bias_outputs, GapReport, SubCorpus,
};
use courtbias_core::ingest::{
    correlate, extract_amounts, filter_divorce, keyword_stats, load_corpus, normalize_mentions,
    resolve_litigant_genders, CorpusFormat, Document, GroupBy, MonetaryClaim, Resolution,
    Unresolved,
};
use courtbias_core::roletag::{build_replaced_corpus, parse_conllu, ParsedSentence, RoleSlot};
use courtbias_core::sampling::{
    detect_inconsistencies, read_jsonl, sample_batch, write_jsonl, AnnotationStore, DetectOptions,
    InconsistentPair, POOL_FILE,
};
use courtbias_core::text::Gender;
use serde::{Deserialize, Serialize};

use crate::config::{CorpusKind, RunConfig};
use crate::CliError;

pub const INGEST_DIR: &str = "ingest";
pub const STATS_DIR: &str = "stats";
pub const ROLETAG_DIR: &str = "roletag";
pub const EMBED_DIR: &str = "embed";
pub const ENTAIL_DIR: &str = "entail";
pub const CLOZE_DIR: &str = "cloze";
pub const SAMPLING_DIR: &str = "sampling";

pub const NORMALIZED_FILE: &str = "corpus.normalized.jsonl";
pub const UNRESOLVED_FILE: &str = "unresolved.jsonl";
pub const SKIPPED_FILE: &str = "skipped.jsonl";
pub const INGEST_SUMMARY_FILE: &str = "summary.json";
pub const REPLACED_FILE: &str = "replaced.txt";
pub const BASELINE_FILE: &str = "baseline.txt";
pub const ROLE_COUNTS_FILE: &str = "role_counts.csv";
pub const VECTORS_FILE: &str = "vectors.txt";
pub const WEAT_FILE: &str = "weat.json";
pub const WEAT_CUSTOM_FILE: &str = "weat_custom.json";
pub const GAPS_FILE: &str = "gaps.csv";
pub const PREMISES_FILE: &str = "premises.jsonl";
pub const FLIPPED_DIR: &str = "flipped";
pub const BIAS_HISTORY_FILE: &str = "bias_history.json";

/// Files written by a stage and inputs it read.
#[derive(Debug, Default)]
pub struct StageOutput {
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub summary: String,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Stage(courtbias_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let text = serde_json::to_string_pretty(value).map_err(courtbias_core::Error::from)?;
    write_file(path, text + "\n")
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(serde_json::from_str(&text).map_err(courtbias_core::Error::from)?)
}

fn need(path: PathBuf, stage: &str) -> Result<PathBuf, CliError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::Stage(courtbias_core::Error::InvalidArgument(
            format!("{} is missing; run `{stage}` first", path.display()),
        )))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct UnresolvedRecord {
    id: String,
    court_group: String,
    #[serde(flatten)]
    unresolved: Unresolved,
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestSummary {
    loaded: usize,
    skipped: usize,
    kept: usize,
    resolved: usize,
    unresolved: usize,
    plaintiff_female: usize,
    plaintiff_male: usize,
}

pub fn ingest(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let path = cfg.require("paths.corpus", &cfg.paths.corpus)?;
    let format = match cfg.paths.corpus_format {
        Some(CorpusKind::Jsonl) => CorpusFormat::Jsonl,
        Some(CorpusKind::Directory) => CorpusFormat::Directory,
        None if path.is_dir() => CorpusFormat::Directory,
        None => CorpusFormat::Jsonl,
    };
    let lex = cfg.lexicons()?;
    let loaded = load_corpus(path, format, cfg.strict)?;
    let total = loaded.documents.len();
    let kept = filter_divorce(loaded.documents, &cfg.ingest.filter())?;
    let kept_count = kept.len();
    let mut docs: Vec<Document> = Vec::new();
    let mut unresolved = Vec::new();
    for raw in &kept {
        match resolve_litigant_genders(raw, &lex) {
            Resolution::Resolved(map) => docs.push(normalize_mentions(raw, &map, &lex)),
            Resolution::Unresolved(u) => unresolved.push(UnresolvedRecord {
                id: raw.id.clone(),
                court_group: raw.court_group.clone(),
                unresolved: u,
            }),
        }
    }
    let dir = cfg.out.join(INGEST_DIR);
    let mut out = StageOutput {
        inputs: vec![path.clone()],
        ..Default::default()
    };
    let normalized = dir.join(NORMALIZED_FILE);
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    write_jsonl(&normalized, &docs)?;
    out.outputs.push(normalized);
    let unresolved_path = dir.join(UNRESOLVED_FILE);
    write_jsonl(&unresolved_path, &unresolved)?;
    out.outputs.push(unresolved_path);
    if !loaded.skipped.is_empty() {
        let skipped = dir.join(SKIPPED_FILE);
        write_jsonl(&skipped, &loaded.skipped)?;
        out.outputs.push(skipped);
    }
    let female = docs
        .iter()
        .filter(|d| d.role_map.plaintiff_gender == Gender::Female)
        .count();
    let summary = IngestSummary {
        loaded: total,
        skipped: loaded.skipped.len(),
        kept: kept_count,
        resolved: docs.len(),
        unresolved: unresolved.len(),
        plaintiff_female: female,
        plaintiff_male: docs.len() - female,
    };
    out.outputs
        .push(write_json(&dir.join(INGEST_SUMMARY_FILE), &summary)?);
    out.summary = format!(
        "loaded {total}, kept {kept_count} divorce proceedings, resolved {}, unresolved {}",
        docs.len(),
        unresolved.len()
    );
    Ok(out)
}

fn normalized_docs(cfg: &RunConfig) -> Result<(Vec<Document>, PathBuf), CliError> {
    let path = need(cfg.out.join(INGEST_DIR).join(NORMALIZED_FILE), "ingest")?;
    Ok((read_jsonl(&path)?, path))
}

fn parses(cfg: &RunConfig) -> Result<(Vec<ParsedSentence>, PathBuf), CliError> {
    let path = cfg.require("paths.parses", &cfg.paths.parses)?;
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok((parse_conllu(BufReader::new(file))?, path.clone()))
}

#[derive(Debug, Serialize)]
struct Correlation {
    a: Vec<String>,
    b: Vec<String>,
    pearson: Option<f64>,
    error: Option<String>,
}

pub fn stats(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let (docs, input) = normalized_docs(cfg)?;
    let group = if cfg.stats.group_by_court {
        GroupBy::CourtGroup
    } else {
        GroupBy::None
    };
    let dir = cfg.out.join(STATS_DIR);
    let mut csv = String::from("group,token,hits,total,fraction\n");
    let mut tables = Vec::new();
    for set in &cfg.stats.keywords {
        let table = keyword_stats(&docs, set, group)?;
        for (g, row) in &table.rows {
            let _ = writeln!(
                csv,
                "{g},{},{},{},{}",
                set.join("|"),
                row.hit_count,
                row.total_count,
                row.fraction
            );
        }
        tables.push(table);
    }
    let mut out = StageOutput {
        inputs: vec![input],
        ..Default::default()
    };
    out.outputs.push(write_file(&dir.join("stats.csv"), csv)?);
    if tables.len() == 2 {
        let (pearson, error) = match correlate(&tables[0], &tables[1]) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let c = Correlation {
            a: cfg.stats.keywords[0].clone(),
            b: cfg.stats.keywords[1].clone(),
            pearson,
            error,
        };
        out.outputs
            .push(write_json(&dir.join("correlation.json"), &c)?);
    }
    #[derive(Serialize)]
    struct DocClaim<'a> {
        doc_id: &'a str,
        #[serde(flatten)]
        claim: MonetaryClaim,
    }
    let claims: Vec<DocClaim> = docs
        .iter()
        .flat_map(|d| {
            extract_amounts(d).into_iter().map(move |claim| DocClaim {
                doc_id: &d.id,
                claim,
            })
        })
        .collect();
    let amounts = dir.join("amounts.jsonl");
    write_jsonl(&amounts, &claims)?;
    out.outputs.push(amounts);
    out.summary = format!(
        "{} keyword sets over {} documents, {} amounts",
        tables.len(),
        docs.len(),
        claims.len()
    );
    Ok(out)
}

pub fn roletag(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let (docs, docs_path) = normalized_docs(cfg)?;
    let (parses, parses_path) = parses(cfg)?;
    let verbs = cfg.verb_set()?;
    let sentinels = &cfg.roletag.sentinels;
    let corpus = build_replaced_corpus(&docs, &parses, &verbs, sentinels)?;
    let dir = cfg.out.join(ROLETAG_DIR);
    let lines = |s: &[String]| s.iter().map(|l| format!("{l}\n")).collect::<String>();
    let mut out = StageOutput {
        inputs: vec![docs_path, parses_path],
        ..Default::default()
    };
    out.outputs.push(write_file(
        &dir.join(REPLACED_FILE),
        lines(&corpus.sentences),
    )?);
    out.outputs.push(write_file(
        &dir.join(BASELINE_FILE),
        lines(&corpus.baseline),
    )?);
    out.outputs.push(write_file(
        &dir.join(ROLE_COUNTS_FILE),
        corpus.counts.to_csv(sentinels),
    )?);
    let counts: Vec<String> = RoleSlot::ALL
        .iter()
        .map(|s| format!("{}={}", sentinels.get(*s), corpus.counts.total(*s)))
        .collect();
    out.summary = format!("{} sentences, {}", corpus.sentences.len(), counts.join(" "));
    Ok(out)
}

fn read_tokenized(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(tokenize_lines(&text))
}

pub fn embed_train(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let input = need(cfg.out.join(ROLETAG_DIR).join(REPLACED_FILE), "roletag")?;
    let corpus = read_tokenized(&input)?;
    let mut training = cfg.embed.training.clone();
    training.seed = cfg.stage_seed("embed");
    let model = train_skipgram(&corpus, &training)?;
    let path = cfg.out.join(EMBED_DIR).join(VECTORS_FILE);
    fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| io_err(&path, e))?;
    save_vectors(&model, &path)?;
    Ok(StageOutput {
        seed: Some(training.seed),
        inputs: vec![input],
        summary: format!("{} tokens × {} dimensions", model.len(), model.dimension()),
        outputs: vec![path],
    })
}

/// The three WEAT perspectives over the role-tagged and baseline corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatReport {
    pub runs: usize,
    pub seed: u64,
    pub dimension: usize,
    pub verbs: Vec<String>,
    pub perpetrator: PerspectiveResult,
    pub victim: PerspectiveResult,
    pub baseline: PerspectiveResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveResult {
    pub spec: WeatSpec,
    pub result: WeatResult,
}

pub fn embed_weat(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    if let Some(spec_path) = &cfg.paths.weat_spec {
        return custom_weat(cfg, spec_path);
    }
    let replaced_path = need(cfg.out.join(ROLETAG_DIR).join(REPLACED_FILE), "roletag")?;
    let baseline_path = need(cfg.out.join(ROLETAG_DIR).join(BASELINE_FILE), "roletag")?;
    let replaced = read_tokenized(&replaced_path)?;
    let baseline = read_tokenized(&baseline_path)?;
    let verbs = cfg.verbs()?;
    let mut training = cfg.embed.training.clone();
    training.seed = cfg.stage_seed("embed");
    let runs = cfg.embed.runs;
    let s = &cfg.roletag.sentinels;
    let x = inflected_targets(&replaced, &verbs, training.min_count)?;
    let x_base = inflected_targets(&baseline, &verbs, training.min_count)?;
    let empty: [String; 0] = [];
    let perpetrator = WeatSpec::new(
        x.iter().cloned(),
        empty.clone(),
        [s.male_perpetrator.clone()],
        [s.female_perpetrator.clone()],
    );
    let victim = WeatSpec::new(
        x.iter().cloned(),
        empty.clone(),
        [s.male_victim.clone()],
        [s.female_victim.clone()],
    );
    let base = WeatSpec::new(x_base, empty, ["husband".to_string()], ["wife".to_string()]);
    let run = |corpus: &[Vec<String>], spec: WeatSpec| -> Result<PerspectiveResult, CliError> {
        let result = weat_repeated(corpus, &training, &spec, runs)?;
        Ok(PerspectiveResult { spec, result })
    };
    let report = WeatReport {
        runs,
        seed: training.seed,
        dimension: training.dimension,
        verbs,
        perpetrator: run(&replaced, perpetrator)?,
        victim: run(&replaced, victim)?,
        baseline: run(&baseline, base)?,
    };
    let path = write_json(&cfg.out.join(EMBED_DIR).join(WEAT_FILE), &report)?;
    Ok(StageOutput {
        seed: Some(report.seed),
        inputs: vec![replaced_path, baseline_path],
        outputs: vec![path],
        summary: format!(
            "perpetrator {:.4}, victim {:.4}, baseline {:.4} (mean of {runs} runs)",
            report.perpetrator.result.score,
            report.victim.result.score,
            report.baseline.result.score
        ),
    })
}

fn custom_weat(cfg: &RunConfig, spec_path: &Path) -> Result<StageOutput, CliError> {
    let spec: WeatSpec = read_json(spec_path)?;
    let vectors = match &cfg.paths.vectors {
        Some(p) => p.clone(),
        None => need(cfg.out.join(EMBED_DIR).join(VECTORS_FILE), "embed train")?,
    };
    let model = load_vectors(&vectors)?;
    let result = weat(&spec, &model)?;
    let path = write_json(
        &cfg.out.join(EMBED_DIR).join(WEAT_CUSTOM_FILE),
        &PerspectiveResult {
            spec,
            result: result.clone(),
        },
    )?;
    Ok(StageOutput {
        seed: None,
        inputs: vec![spec_path.to_path_buf(), vectors],
        outputs: vec![path],
        summary: format!("score {:.4}", result.score),
    })
}

pub fn connect(cfg: &RunConfig) -> Result<BackendClient, CliError> {
    let mut client = cfg.backend_spec()?.connect()?;
    client.batch_size = cfg.backend_client.batch_size;
    client.max_attempts = cfg.backend_client.max_attempts;
    Ok(client)
}

#[derive(Serialize)]
struct PremiseLine<'a> {
    verb: &'a str,
    doc_id: &'a str,
    sent_idx: usize,
    premise: &'a str,
}

fn subcorpora(cfg: &RunConfig) -> Result<(Vec<SubCorpus>, Vec<PathBuf>), CliError> {
    let (docs, docs_path) = normalized_docs(cfg)?;
    let (parses, parses_path) = parses(cfg)?;
    Ok((
        build_subcorpora(&docs, &parses, &cfg.verbs()?),
        vec![docs_path, parses_path],
    ))
}

pub fn entail_gap(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let client = connect(cfg)?;
    let (corpora, inputs) = subcorpora(cfg)?;
    let mut gaps: Vec<GapReport> = Vec::new();
    for c in &corpora {
        if c.is_empty() {
            log::warn!("no premises for `{}`", c.verb);
            continue;
        }
        gaps.push(entailment_gap(&client, c)?);
    }
    let dir = cfg.out.join(ENTAIL_DIR);
    let lines: Vec<PremiseLine> = corpora
        .iter()
        .flat_map(|c| {
            c.premises.iter().map(move |p| PremiseLine {
                verb: &c.verb,
                doc_id: &p.source.doc_id,
                sent_idx: p.source.sent_idx,
                premise: &p.text,
            })
        })
        .collect();
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let premises = dir.join(PREMISES_FILE);
    write_jsonl(&premises, &lines)?;
    let csv = write_file(&dir.join(GAPS_FILE), gaps_csv(&gaps))?;
    let mean = if gaps.is_empty() {
        0.0
    } else {
        gaps.iter().map(|g| g.gap).sum::<f64>() / gaps.len() as f64
    };
    Ok(StageOutput {
        seed: None,
        inputs,
        outputs: vec![premises, csv],
        summary: format!("{} verbs with premises, mean gap {mean:.4}", gaps.len()),
    })
}

/// Bias score per iteration, keyed by iteration number.
pub type BiasHistory = BTreeMap<u32, f64>;

pub fn entail_bias(cfg: &RunConfig, iteration: u32) -> Result<StageOutput, CliError> {
    let client = connect(cfg)?;
    let (corpora, inputs) = subcorpora(cfg)?;
    let lex = cfg.flip_lexicon()?;
    let dir = cfg.out.join(ENTAIL_DIR);
    let flipped_dir = dir.join(FLIPPED_DIR);
    let flipped = materialize_flipped(&flipped_dir, &corpora, &lex)?;
    let report = nli_bias_with(&client, &corpora, &flipped)?;
    let mut outputs: Vec<PathBuf> = corpora
        .iter()
        .map(|c| flipped_dir.join(format!("{}.jsonl", c.verb)))
        .filter(|p| p.exists())
        .collect();
    outputs.extend(write_bias_outputs(&dir, &report)?);
    let history_path = dir.join(BIAS_HISTORY_FILE);
    let mut history: BiasHistory = if history_path.exists() {
        read_json(&history_path)?
    } else {
        BiasHistory::new()
    };
    history.insert(iteration, report.bias);
    outputs.push(write_json(&history_path, &history)?);
    let scores: Vec<f64> = history.values().copied().collect();
    let next = if cfg.sampling.policy().should_continue(&scores) {
        "another sampling round is warranted"
    } else {
        "iteration bound or convergence reached"
    };
    Ok(StageOutput {
        seed: None,
        inputs,
        outputs,
        summary: format!(
            "nli_bias {:.4} over {} verbs (iteration {iteration}; {next})",
            report.bias, report.effective_verbs
        ),
    })
}

pub fn cloze_audit(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let client = connect(cfg)?;
    let verbs = cfg.verbs()?;
    let report = bias_measures(&client, &verbs, &cfg.verb_set_name)?;
    let outputs = write_outputs(&cfg.out.join(CLOZE_DIR), &report)?;
    Ok(StageOutput {
        seed: None,
        inputs: cfg.paths.verbs.iter().cloned().collect(),
        outputs,
        summary: format!(
            "bias_agent {:.4}, bias_theme {:.4} over {} verbs",
            report.bias_agent, report.bias_theme, report.effective_verbs
        ),
    })
}

pub fn sample_detect(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let client = connect(cfg)?;
    let (corpora, inputs) = subcorpora(cfg)?;
    let lex = cfg.flip_lexicon()?;
    let flipped: Vec<SubCorpus> = corpora
        .iter()
        .map(|c| courtbias_core::entail::flip_subcorpus(c, &lex))
        .collect();
    let options = DetectOptions {
        contradiction_mismatch: cfg.sampling.contradiction_mismatch,
    };
    let pool = detect_inconsistencies(&client, &corpora, &flipped, options)?;
    let path = cfg.out.join(SAMPLING_DIR).join(POOL_FILE);
    fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| io_err(&path, e))?;
    write_jsonl(&path, &pool)?;
    let verbs: BTreeSet<&str> = pool.iter().map(|p| p.verb.as_str()).collect();
    Ok(StageOutput {
        seed: None,
        inputs,
        outputs: vec![path],
        summary: format!(
            "{} inconsistent pairs across {} verbs",
            pool.len(),
            verbs.len()
        ),
    })
}

pub fn open_store(cfg: &RunConfig) -> Result<AnnotationStore, CliError> {
    let dir = cfg.out.join(SAMPLING_DIR);
    Ok(AnnotationStore::open(
        &dir,
        cfg.sampling.annotators.clone(),
    )?)
}

pub fn sample_batch_stage(
    cfg: &RunConfig,
    iteration: Option<u32>,
) -> Result<StageOutput, CliError> {
    let pool_path = need(cfg.out.join(SAMPLING_DIR).join(POOL_FILE), "sample detect")?;
    let pool: Vec<InconsistentPair> = read_jsonl(&pool_path)?;
    let mut store = open_store(cfg)?;
    let iteration = iteration.unwrap_or_else(|| store.iterations().last().map_or(1, |i| i + 1));
    let used: BTreeSet<String> = store.items(None).map(|i| i.pair_id.clone()).collect();
    let fresh: Vec<InconsistentPair> = pool
        .into_iter()
        .filter(|p| !used.contains(&p.pair_id))
        .collect();
    let seed = cfg.stage_seed(&format!("sample-batch-{iteration}"));
    let batch = sample_batch(&fresh, cfg.sampling.batch_size, &cfg.verbs()?, seed)?;
    let items = store.add_batch(iteration, &batch)?;
    Ok(StageOutput {
        seed: Some(seed),
        inputs: vec![pool_path],
        outputs: vec![cfg
            .out
            .join(SAMPLING_DIR)
            .join(format!("batch_{iteration}.jsonl"))],
        summary: format!(
            "iteration {iteration}: {} pairs, {} annotation items",
            batch.len(),
            items.len()
        ),
    })
}

pub fn kappa(cfg: &RunConfig, iteration: u32) -> Result<StageOutput, CliError> {
    let store = open_store(cfg)?;
    let k = store.kappa(iteration)?;
    let path = write_json(
        &cfg.out
            .join(SAMPLING_DIR)
            .join(format!("kappa_{iteration}.json")),
        &k,
    )?;
    Ok(StageOutput {
        seed: None,
        inputs: vec![],
        outputs: vec![path],
        summary: format!(
            "kappa {:.4} over {} items{}",
            k.kappa,
            k.items,
            if k.degenerate {
                " (degenerate: one shared label)"
            } else {
                ""
            }
        ),
    })
}

pub fn export_train(cfg: &RunConfig, iteration: u32) -> Result<StageOutput, CliError> {
    let store = open_store(cfg)?;
    let n = store.export_training_set(iteration)?.len();
    let path = store.write_export(iteration)?;
    Ok(StageOutput {
        seed: None,
        inputs: vec![],
        outputs: vec![path],
        summary: format!("{n} training records for iteration {iteration}"),
    })
}

pub fn serve_annotation(cfg: &RunConfig) -> Result<(), CliError> {
    let addr: SocketAddr = cfg
        .annotation
        .bind
        .parse()
        .map_err(|e| CliError::Config(format!("`annotation.bind`: {e}")))?;
    let store = open_store(cfg)?;
    eprintln!("serving {} on http://{addr}", store.dir().display());
    courtbias_annotation::serve_blocking(addr, store)
        .map_err(|e| io_err(Path::new(&cfg.annotation.bind), e))
}
