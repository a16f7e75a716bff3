use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use crate::error::{Error, Result};

use super::mock::Responder;
use super::{decode_responses, encode_lines, Request, Response};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

/// Moves one batch of requests to a backend and returns its response lines.
pub trait Transport: Send + Sync {
    fn exchange(&self, batch: &[Request]) -> Result<Vec<Response>>;

    fn describe(&self) -> String;
}

/// Calls a [`Responder`] directly, without serialization.
pub struct InProcessTransport<R> {
    responder: R,
}

impl<R: Responder> InProcessTransport<R> {
    pub fn new(responder: R) -> Self {
        InProcessTransport { responder }
    }
}

impl<R: Responder> Transport for InProcessTransport<R> {
    fn exchange(&self, batch: &[Request]) -> Result<Vec<Response>> {
        Ok(batch.iter().map(|r| self.responder.respond(r)).collect())
    }

    fn describe(&self) -> String {
        format!("in-process {}", self.responder.name())
    }
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for ChildIo {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A long-running child process reading requests on stdin and writing one
/// response line per request on stdout. The process is restarted after a
/// failed exchange.
pub struct SubprocessTransport {
    argv: Vec<String>,
    timeout: Duration,
    io: Mutex<Option<ChildIo>>,
}

impl SubprocessTransport {
    pub fn new(argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::InvalidArgument("empty backend command".into()));
        }
        let t = SubprocessTransport {
            argv,
            timeout: DEFAULT_TIMEOUT,
            io: Mutex::new(None),
        };
        *t.io.lock().unwrap() = Some(t.spawn()?);
        Ok(t)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn spawn(&self) -> Result<ChildIo> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| {
                Error::Transport(format!("cannot start `{}`: {e}", self.argv.join(" ")))
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ChildIo {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exchange_with(&self, io: &mut ChildIo, batch: &[Request]) -> Result<Vec<Response>> {
        let payload = encode_lines(batch)?;
        io.stdin
            .write_all(payload.as_bytes())
            .and_then(|_| io.stdin.flush())
            .map_err(|e| Error::Transport(format!("writing to backend: {e}")))?;
        let mut body = String::new();
        for _ in 0..batch.len() {
            match io.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => {
                    body.push_str(&line);
                    body.push('\n');
                }
                Ok(Err(e)) => return Err(Error::Transport(format!("reading from backend: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::Transport(format!(
                        "backend did not answer within {:?}",
                        self.timeout
                    )))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Transport("backend closed its output".into()))
                }
            }
        }
        decode_responses(&body)
    }
}

impl Transport for SubprocessTransport {
    fn exchange(&self, batch: &[Request]) -> Result<Vec<Response>> {
        let mut guard = self.io.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let result = self.exchange_with(guard.as_mut().expect("spawned"), batch);
        if result.is_err() {
            // the stream may be out of step with the requests; start afresh next time
            *guard = None;
        }
        result
    }

    fn describe(&self) -> String {
        format!("cmd:{}", self.argv.join(" "))
    }
}

/// POSTs each batch as NDJSON to `<base>/v1/batch`.
pub struct HttpTransport {
    base: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base: &str) -> Self {
        Self::with_timeout(base, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(base: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTransport {
            base: base.trim_end_matches('/').to_string(),
            agent,
        }
    }
}

impl Transport for HttpTransport {
    fn exchange(&self, batch: &[Request]) -> Result<Vec<Response>> {
        let url = format!("{}/v1/batch", self.base);
        let body = encode_lines(batch)?;
        let mut resp = self
            .agent
            .post(&url)
            .header("Content-Type", "application/x-ndjson")
            .send(body)
            .map_err(|e| Error::Transport(format!("POST {url}: {e}")))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("reading {url}: {e}")))?;
        decode_responses(&text)
    }

    fn describe(&self) -> String {
        self.base.clone()
    }
}
