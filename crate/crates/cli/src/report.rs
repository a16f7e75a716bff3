use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use courtbias_core::cloze::BiasReport;
use courtbias_core::entail::NliBiasReport;
use serde::{Deserialize, Serialize};

use crate::stages::{
    BiasHistory, WeatReport, BIAS_HISTORY_FILE, CLOZE_DIR, EMBED_DIR, ENTAIL_DIR, GAPS_FILE,
    WEAT_FILE,
};
use crate::CliError;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// A report section: its content, or a note that the stage output is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "data", rename_all = "lowercase")]
pub enum Section<T> {
    Present(T),
    Absent { expected: String },
}

impl<T> Section<T> {
    pub fn is_present(&self) -> bool {
        matches!(self, Section::Present(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatRow {
    pub perspective: String,
    pub score: f64,
    pub stddev: Option<f64>,
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub verb: String,
    pub ent_fv: f64,
    pub ent_mv: f64,
    pub gap: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliBiasSection {
    pub backend: String,
    pub latest: f64,
    pub effective_verbs: usize,
    pub excluded: Vec<String>,
    pub by_iteration: BiasHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClozeSection {
    pub backend: String,
    pub verb_set_name: String,
    pub bias_agent: f64,
    pub bias_theme: f64,
    pub effective_verbs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub weat: Section<Vec<WeatRow>>,
    pub gaps: Section<Vec<GapRow>>,
    pub nli_bias: Section<NliBiasSection>,
    pub cloze: Section<ClozeSection>,
}

fn absent<T>(path: &Path, out: &Path) -> Section<T> {
    Section::Absent {
        expected: crate::manifest::display_path(path, out),
    }
}

fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Stage(courtbias_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    Ok(Some(
        serde_json::from_str(&text).map_err(courtbias_core::Error::from)?,
    ))
}

fn parse_gaps(path: &Path) -> Result<Option<Vec<GapRow>>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Stage(courtbias_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    let bad = |line: usize| {
        CliError::Stage(courtbias_core::Error::MalformedRecord {
            location: format!("{}:{line}", path.display()),
            message: "expected verb,ent_FV,ent_MV,gap,n".into(),
        })
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1));
        rows.push(GapRow {
            verb: f[0].to_string(),
            ent_fv: num(f[1])?,
            ent_mv: num(f[2])?,
            gap: num(f[3])?,
            n: f[4].parse().map_err(|_| bad(i + 1))?,
        });
    }
    Ok(Some(rows))
}

/// Collects WEAT scores, the gap table, nli_bias per iteration and cloze
/// bias from `out`; stages without output are marked absent.
pub fn emit_report(out: &Path) -> Result<Report, CliError> {
    let weat_path = out.join(EMBED_DIR).join(WEAT_FILE);
    let weat = match read::<WeatReport>(&weat_path)? {
        Some(r) => Section::Present(
            [
                ("perpetrator", &r.perpetrator),
                ("victim", &r.victim),
                ("baseline", &r.baseline),
            ]
            .into_iter()
            .map(|(name, p)| WeatRow {
                perspective: name.to_string(),
                score: p.result.score,
                stddev: p.result.stddev,
                runs: p.result.runs.as_ref().map(Vec::len),
            })
            .collect(),
        ),
        None => absent(&weat_path, out),
    };
    let gaps_path = out.join(ENTAIL_DIR).join(GAPS_FILE);
    let gaps = match parse_gaps(&gaps_path)? {
        Some(rows) => Section::Present(rows),
        None => absent(&gaps_path, out),
    };
    let bias_path = out.join(ENTAIL_DIR).join("nli_bias.json");
    let nli_bias = match read::<NliBiasReport>(&bias_path)? {
        Some(r) => {
            let by_iteration = read::<BiasHistory>(&out.join(ENTAIL_DIR).join(BIAS_HISTORY_FILE))?
                .unwrap_or_default();
            Section::Present(NliBiasSection {
                backend: r.backend,
                latest: r.bias,
                effective_verbs: r.effective_verbs,
                excluded: r.excluded,
                by_iteration,
            })
        }
        None => absent(&bias_path, out),
    };
    let cloze_path = out.join(CLOZE_DIR).join("bias_report.json");
    let cloze = match read::<BiasReport>(&cloze_path)? {
        Some(r) => Section::Present(ClozeSection {
            backend: r.backend,
            verb_set_name: r.verb_set_name,
            bias_agent: r.bias_agent,
            bias_theme: r.bias_theme,
            effective_verbs: r.effective_verbs,
        }),
        None => absent(&cloze_path, out),
    };
    Ok(Report {
        weat,
        gaps,
        nli_bias,
        cloze,
    })
}

pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "WEAT");
    match &report.weat {
        Section::Present(rows) => {
            for r in rows {
                let sd = r.stddev.map_or(String::new(), |v| format!(" ± {v:.4}"));
                let _ = writeln!(s, "  {:<12} {:>8.4}{sd}", r.perspective, r.score);
            }
        }
        Section::Absent { expected } => {
            let _ = writeln!(s, "  absent ({expected})");
        }
    }
    let _ = writeln!(s, "\nEntailment gap (ent_FV - ent_MV)");
    match &report.gaps {
        Section::Present(rows) => {
            let _ = writeln!(
                s,
                "  {:<12} {:>8} {:>8} {:>8} {:>5}",
                "verb", "ent_FV", "ent_MV", "gap", "n"
            );
            for r in rows {
                let _ = writeln!(
                    s,
                    "  {:<12} {:>8.4} {:>8.4} {:>8.4} {:>5}",
                    r.verb, r.ent_fv, r.ent_mv, r.gap, r.n
                );
            }
        }
        Section::Absent { expected } => {
            let _ = writeln!(s, "  absent ({expected})");
        }
    }
    let _ = writeln!(s, "\nnli_bias");
    match &report.nli_bias {
        Section::Present(b) => {
            let _ = writeln!(s, "  backend {}, {} verbs", b.backend, b.effective_verbs);
            for (it, v) in &b.by_iteration {
                let _ = writeln!(s, "  iteration {it:<3} {v:>8.4}");
            }
            if b.by_iteration.is_empty() {
                let _ = writeln!(s, "  latest {:>8.4}", b.latest);
            }
            if !b.excluded.is_empty() {
                let _ = writeln!(s, "  excluded: {}", b.excluded.join(", "));
            }
        }
        Section::Absent { expected } => {
            let _ = writeln!(s, "  absent ({expected})");
        }
    }
    let _ = writeln!(s, "\nCloze bias");
    match &report.cloze {
        Section::Present(c) => {
            let _ = writeln!(
                s,
                "  {} via {}: bias_agent {:.4}, bias_theme {:.4} over {} verbs",
                c.verb_set_name, c.backend, c.bias_agent, c.bias_theme, c.effective_verbs
            );
        }
        Section::Absent { expected } => {
            let _ = writeln!(s, "  absent ({expected})");
        }
    }
    s
}

/// Writes `report.json` and `report.txt` into `out`.
pub fn write_report(out: &Path, report: &Report) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path, e| {
        CliError::Stage(courtbias_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    fs::create_dir_all(out).map_err(|e| io(out, e))?;
    let json = out.join(REPORT_JSON);
    let text = serde_json::to_string_pretty(report).map_err(courtbias_core::Error::from)? + "\n";
    fs::write(&json, text).map_err(|e| io(&json, e))?;
    let txt = out.join(REPORT_TXT);
    fs::write(&txt, render_text(report)).map_err(|e| io(&txt, e))?;
    Ok(vec![json, txt])
}
