//! A label oracle that lives behind a subprocess pipe, speaking
//! line-delimited JSON: one `{"point": [..]}` request per line, one
//! `{"label": n}` response per line.

use super::oracle::{Oracle, OracleDescriptor};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct PipeOracleConfig {
    /// The dimensionality and class count the remote model claims.
    pub input_dim: usize,
    pub num_classes: usize,
    /// Per-query response deadline.
    pub timeout: Duration,
    /// Additional attempts after a timed-out query.
    pub retries: usize,
    /// Set when the remote side resizes inputs and accepts any dimension.
    pub adapts_input_dim: bool,
}

impl PipeOracleConfig {
    pub fn new(input_dim: usize, num_classes: usize) -> PipeOracleConfig {
        PipeOracleConfig {
            input_dim,
            num_classes,
            timeout: Duration::from_secs(10),
            retries: 2,
            adapts_input_dim: false,
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    point: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    label: i64,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// Oracle over a child process. Queries are serialized behind a mutex: the
/// wire protocol has no request ids, so responses must be read in order.
pub struct PipeOracle {
    session: Mutex<Session>,
    config: PipeOracleConfig,
    command: String,
}

impl PipeOracle {
    /// Spawn `command` through `sh -c` and speak the line protocol with it.
    pub fn spawn(command: &str, config: PipeOracleConfig) -> Result<PipeOracle> {
        if config.input_dim == 0 || config.num_classes < 2 {
            return Err(Error::Input(format!(
                "remote oracle needs input_dim >= 1 and num_classes >= 2, got {} and {}",
                config.input_dim, config.num_classes
            )));
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Input(format!("failed to spawn oracle '{command}': {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = std::sync::mpsc::channel();
        // Reader thread: decouples the child's output from our deadline.
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        Ok(PipeOracle {
            session: Mutex::new(Session { child, stdin, lines: rx }),
            config,
            command: command.to_string(),
        })
    }

    fn query_once(&self, session: &mut Session, x: &[f64]) -> Result<Option<usize>> {
        let mut line = serde_json::to_string(&Request { point: x })?;
        line.push('\n');
        session
            .stdin
            .write_all(line.as_bytes())
            .map_err(|e| Error::Input(format!("oracle pipe closed: {e}")))?;
        session
            .stdin
            .flush()
            .map_err(|e| Error::Input(format!("oracle pipe closed: {e}")))?;
        match session.lines.recv_timeout(self.config.timeout) {
            Ok(Ok(text)) => {
                let resp: Response = serde_json::from_str(&text).map_err(|e| {
                    Error::Format(format!("bad oracle response '{}': {e}", text.trim()))
                })?;
                if resp.label < 0 || resp.label as usize >= self.config.num_classes {
                    return Err(Error::Format(format!(
                        "oracle label {} out of range for {} classes",
                        resp.label, self.config.num_classes
                    )));
                }
                Ok(Some(resp.label as usize))
            }
            Ok(Err(e)) => Err(Error::Input(format!("oracle read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Input("oracle closed its output".into()))
            }
        }
    }
}

impl Oracle for PipeOracle {
    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        let mut session = self.session.lock().expect("oracle mutex");
        for _ in 0..=self.config.retries {
            if let Some(label) = self.query_once(&mut session, x)? {
                return Ok(label);
            }
        }
        Err(Error::Input(format!(
            "oracle timed out after {} attempts of {:?}",
            self.config.retries + 1,
            self.config.timeout
        )))
    }

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor { kind: format!("pipe:{}", self.command), digest: None }
    }

    fn adapts_input_dim(&self) -> bool {
        self.config.adapts_input_dim
    }

    fn concurrent_safe(&self) -> bool {
        false
    }
}

impl Drop for PipeOracle {
    fn drop(&mut self) {
        if let Ok(mut session) = self.session.lock() {
            let _ = session.child.kill();
            let _ = session.child.wait();
        }
    }
}
