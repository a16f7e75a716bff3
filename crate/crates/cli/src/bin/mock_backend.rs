//! Line-delimited JSON backend over stdin/stdout, answering with a mock
//! policy: `courtbias-mock-backend [symmetric|fv-only|entail-all|entail-none|<mock.json>]`.

use std::io::{self, BufWriter};
use std::path::Path;

use courtbias_core::backend::{serve_stdio, MockBackend};

fn main() {
    let arg = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "symmetric".to_string());
    let mock = match MockBackend::named(&arg) {
        Some(m) => m,
        None => match MockBackend::load(Path::new(&arg)) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(2);
            }
        },
    };
    let stdin = io::stdin();
    let stdout = io::stdout();
    if let Err(e) = serve_stdio(&mock, stdin.lock(), BufWriter::new(stdout.lock())) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
