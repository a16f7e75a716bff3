use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{EmbeddingConfig, EmbeddingModel};

/// Writes the text vector format: a `<vocab_size> <dimension>` header, then
/// one `token v1 … vd` line per row with six decimals.
pub fn write_vectors<W: Write>(model: &EmbeddingModel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", model.len(), model.dimension())?;
    for t in model.tokens() {
        write!(out, "{t}")?;
        for x in model.vector(t).expect("token from own vocabulary") {
            write!(out, " {x:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_vectors(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_vectors(model, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_vectors<R: BufRead>(reader: R, source: &str) -> Result<EmbeddingModel> {
    let bad = |line: usize, message: String| Error::MalformedRecord {
        location: format!("{source}:{line}"),
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| bad(1, e.to_string()))?,
        None => return Err(bad(1, "missing header".into())),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str| s.parse::<usize>().ok();
    let (n, d) = match fields.as_slice() {
        [n, d] => match (parse(n), parse(d)) {
            (Some(n), Some(d)) if d > 0 => (n, d),
            _ => return Err(bad(1, format!("invalid header `{header}`"))),
        },
        _ => return Err(bad(1, format!("invalid header `{header}`"))),
    };
    let mut tokens = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(|e| bad(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let token = parts.next().unwrap_or_default().to_string();
        let row: Vec<f64> = parts
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(line_no, format!("bad value: {e}")))?;
        if row.len() != d {
            return Err(bad(
                line_no,
                format!("expected {d} values, found {}", row.len()),
            ));
        }
        if row.iter().all(|&x| x == 0.0) {
            return Err(bad(line_no, format!("vector for `{token}` has zero norm")));
        }
        tokens.push(token);
        values.extend(row);
    }
    if tokens.len() != n {
        return Err(bad(
            1,
            format!("header declares {n} rows, found {}", tokens.len()),
        ));
    }
    let config = EmbeddingConfig {
        dimension: d,
        ..Default::default()
    };
    EmbeddingModel::from_flat(tokens, d, values, config)
}

pub fn load_vectors(path: &Path) -> Result<EmbeddingModel> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_vectors(BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_at_six_decimals() {
        let m = EmbeddingModel::from_rows(vec![
            ("husband".into(), vec![0.1234567, -2.0, 3.5]),
            ("wife".into(), vec![1e-7, 0.5, -0.0000004]),
        ])
        .unwrap();
        let mut first = Vec::new();
        write_vectors(&m, &mut first).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(
            text.starts_with("2 3\nhusband 0.123457 -2.000000 3.500000\n"),
            "{text}"
        );
        let back = read_vectors(first.as_slice(), "mem").unwrap();
        let mut second = Vec::new();
        write_vectors(&back, &mut second).unwrap();
        assert_eq!(first, second);
        assert_eq!(back.vector("husband").unwrap()[0], 0.123457);
    }

    #[test]
    fn malformed_files_are_rejected() {
        for text in [
            "",
            "2\n",
            "1 2\na 1.0\n",
            "2 2\na 1 2\n",
            "1 2\na x 1\n",
            "1 2\na 0 0\n",
        ] {
            assert!(read_vectors(text.as_bytes(), "mem").is_err(), "{text:?}");
        }
    }
}
