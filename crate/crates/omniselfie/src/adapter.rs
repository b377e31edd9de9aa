//! External detector/recognizer adapters: one child process speaking
//! newline-delimited JSON on stdin/stdout.
//!
//! The pipeline owns a single child for the whole run and serializes
//! requests: write one line, read one line. Two request shapes exist:
//!
//! ```text
//! {"op": "detect", "image": "/path/frame.png"}
//! {"op": "express", "image": "/path/frame.png", "bbox": {"x":..,"y":..,"w":..,"h":..}}
//! ```
//!
//! answered respectively by `{"detections": [{x,y,w,h,confidence}, ..]}` and
//! `{"scores": {"angry":..,"disgust":..,"fear":..,"happy":..,"sad":..,
//! "surprise":..,"neutral":..}}`. Every response must arrive within the
//! per-request timeout (default 30 s, overridable via
//! `OMNISELFIE_ADAPTER_TIMEOUT_SECS`); a silent or misbehaving adapter
//! fails the run with the offending request named.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::DetectionRecord;
use crate::scoring::ExpressionScores;
use crate::tracks::BBox;

/// Environment variable overriding the per-request timeout in whole seconds.
pub const TIMEOUT_ENV: &str = "OMNISELFIE_ADAPTER_TIMEOUT_SECS";
/// Per-request timeout when the environment does not override it.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Errors talking to an adapter process.
#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter command is empty")]
    EmptyCommand,
    #[error("failed to spawn adapter {program}: {source}")]
    Spawn { program: PathBuf, source: std::io::Error },
    #[error("adapter i/o failed for request {request}: {source}")]
    Io { request: String, source: std::io::Error },
    #[error("adapter produced no response for request {request} (stdout closed)")]
    ClosedPipe { request: String },
    #[error("adapter response timed out after {seconds} s for request {request}")]
    Timeout { request: String, seconds: u64 },
    #[error("adapter response to request {request} is invalid: {detail}; got line: {line}")]
    BadResponse { request: String, line: String, detail: String },
    #[error("adapter exited with {status} after request {request}")]
    Exited { request: String, status: String },
    #[error("{TIMEOUT_ENV} is {value:?}: {detail}")]
    BadTimeoutEnv { value: String, detail: String },
}

/// An adapter invocation: program plus arguments, parsed from a single
/// CLI string by whitespace splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterCommand {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl AdapterCommand {
    pub fn parse(spec: &str) -> Result<Self, AdapterError> {
        let mut parts = spec.split_whitespace();
        let program = parts.next().ok_or(AdapterError::EmptyCommand)?;
        Ok(Self { program: PathBuf::from(program), args: parts.map(String::from).collect() })
    }
}

/// The per-request timeout: `OMNISELFIE_ADAPTER_TIMEOUT_SECS` if set (whole
/// positive seconds), else 30 s.
pub fn request_timeout() -> Result<Duration, AdapterError> {
    match std::env::var(TIMEOUT_ENV) {
        Ok(value) => match value.trim().parse::<u64>() {
            Ok(secs) if secs > 0 => Ok(Duration::from_secs(secs)),
            Ok(_) => Err(AdapterError::BadTimeoutEnv {
                value,
                detail: "must be a positive number of seconds".into(),
            }),
            Err(e) => Err(AdapterError::BadTimeoutEnv { value, detail: e.to_string() }),
        },
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_TIMEOUT),
        Err(e) => {
            Err(AdapterError::BadTimeoutEnv { value: String::new(), detail: e.to_string() })
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Detect { image: &'a Path },
    Express { image: &'a Path, bbox: &'a BBox },
}

#[derive(Deserialize)]
struct DetectResponse {
    detections: Vec<DetectionRecord>,
}

#[derive(Deserialize)]
struct ExpressResponse {
    scores: ExpressionScores,
}

/// A live adapter child process.
pub struct AdapterClient {
    child: Child,
    stdin: Option<std::process::ChildStdin>,
    lines: mpsc::Receiver<std::io::Result<String>>,
    timeout: Duration,
    _reader: JoinHandle<()>,
}

impl AdapterClient {
    /// Spawns the adapter with piped stdin/stdout (stderr passes through for
    /// diagnostics) and starts the response reader.
    pub fn spawn(command: &AdapterCommand) -> Result<Self, AdapterError> {
        let timeout = request_timeout()?;
        let mut child = Command::new(&command.program)
            .args(&command.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AdapterError::Spawn { program: command.program.clone(), source })?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut lines = BufReader::new(stdout).lines();
            loop {
                match lines.next() {
                    Some(item) => {
                        let failed = item.is_err();
                        if tx.send(item).is_err() || failed {
                            break;
                        }
                    }
                    None => break,
                }
            }
        });
        Ok(Self { child, stdin: Some(stdin), lines: rx, timeout, _reader: reader })
    }

    /// Asks the adapter to detect faces in the image.
    pub fn detect(&mut self, image: &Path) -> Result<Vec<DetectionRecord>, AdapterError> {
        let request = Request::Detect { image };
        let line = self.round_trip(&request)?;
        let request = describe(&request);
        let parsed: DetectResponse = parse_response(&request, &line)?;
        for rec in &parsed.detections {
            if !(rec.w > 0.0 && rec.h > 0.0) {
                return Err(AdapterError::BadResponse {
                    request,
                    line,
                    detail: format!("detection size {}x{} must be positive", rec.w, rec.h),
                });
            }
            if !(0.0..=1.0).contains(&rec.confidence) {
                return Err(AdapterError::BadResponse {
                    request,
                    line,
                    detail: format!("confidence {} outside [0, 1]", rec.confidence),
                });
            }
        }
        Ok(parsed.detections)
    }

    /// Asks the adapter for the expression distribution of one face box.
    pub fn express(&mut self, image: &Path, bbox: &BBox) -> Result<ExpressionScores, AdapterError> {
        let request = Request::Express { image, bbox };
        let line = self.round_trip(&request)?;
        let request = describe(&request);
        let parsed: ExpressResponse = parse_response(&request, &line)?;
        parsed.scores.validate().map_err(|e| AdapterError::BadResponse {
            request,
            line,
            detail: e.to_string(),
        })?;
        Ok(parsed.scores)
    }

    fn round_trip(&mut self, request: &Request<'_>) -> Result<String, AdapterError> {
        let name = describe(request);
        let mut payload = serde_json::to_string(request).expect("requests serialize");
        payload.push('\n');
        let stdin = self.stdin.as_mut().expect("stdin open until finish");
        if let Err(source) = stdin.write_all(payload.as_bytes()).and_then(|()| stdin.flush()) {
            // A write failure usually means the child died; report how.
            return Err(match self.child.try_wait() {
                Ok(Some(status)) => {
                    AdapterError::Exited { request: name, status: status.to_string() }
                }
                _ => AdapterError::Io { request: name, source },
            });
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(source)) => Err(AdapterError::Io { request: name, source }),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                // Don't keep waiting on a stuck adapter; tear it down.
                let _ = self.child.kill();
                let _ = self.child.wait();
                Err(AdapterError::Timeout { request: name, seconds: self.timeout.as_secs() })
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(match self.child.try_wait() {
                Ok(Some(status)) if !status.success() => {
                    AdapterError::Exited { request: name, status: status.to_string() }
                }
                _ => AdapterError::ClosedPipe { request: name },
            }),
        }
    }

    /// Closes stdin and reaps the child.
    pub fn finish(mut self) -> Result<(), AdapterError> {
        drop(self.stdin.take());
        let status = self.child.wait().map_err(|source| AdapterError::Io {
            request: "(shutdown)".into(),
            source,
        })?;
        if !status.success() {
            return Err(AdapterError::Exited {
                request: "(shutdown)".into(),
                status: status.to_string(),
            });
        }
        Ok(())
    }
}

impl Drop for AdapterClient {
    fn drop(&mut self) {
        // Best effort: never leave a child running.
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn describe(request: &Request<'_>) -> String {
    serde_json::to_string(request).expect("requests serialize")
}

fn parse_response<T: for<'de> Deserialize<'de>>(
    request: &str,
    line: &str,
) -> Result<T, AdapterError> {
    serde_json::from_str(line).map_err(|e| AdapterError::BadResponse {
        request: request.to_owned(),
        line: line.to_owned(),
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_parsing_splits_whitespace() {
        let cmd = AdapterCommand::parse("python3 adapter.py --model big").unwrap();
        assert_eq!(cmd.program, PathBuf::from("python3"));
        assert_eq!(cmd.args, ["adapter.py", "--model", "big"]);
        assert!(matches!(AdapterCommand::parse("  "), Err(AdapterError::EmptyCommand)));
    }

    #[test]
    fn request_lines_match_protocol() {
        let req = Request::Detect { image: Path::new("/tmp/f.png") };
        assert_eq!(describe(&req), r#"{"op":"detect","image":"/tmp/f.png"}"#);
        let bbox = BBox { x: 1.0, y: 2.0, w: 3.0, h: 4.0 };
        let req = Request::Express { image: Path::new("/tmp/f.png"), bbox: &bbox };
        assert_eq!(
            describe(&req),
            r#"{"op":"express","image":"/tmp/f.png","bbox":{"x":1.0,"y":2.0,"w":3.0,"h":4.0}}"#
        );
    }

    /// Tests in this binary that touch the (process-global) timeout
    /// variable serialize through this lock.
    static ENV_LOCK: std::sync::Mutex<()> = std::sync::Mutex::new(());

    #[test]
    fn timeout_env_parsing() {
        let _guard = ENV_LOCK.lock().unwrap();
        std::env::set_var(TIMEOUT_ENV, "5");
        assert_eq!(request_timeout().unwrap(), Duration::from_secs(5));
        std::env::set_var(TIMEOUT_ENV, "0");
        assert!(matches!(request_timeout(), Err(AdapterError::BadTimeoutEnv { .. })));
        std::env::set_var(TIMEOUT_ENV, "soon");
        assert!(matches!(request_timeout(), Err(AdapterError::BadTimeoutEnv { .. })));
        std::env::remove_var(TIMEOUT_ENV);
        assert_eq!(request_timeout().unwrap(), DEFAULT_TIMEOUT);
    }

    #[cfg(unix)]
    mod with_scripts {
        use super::*;
        use std::fs;
        use std::os::unix::fs::PermissionsExt;

        fn script_adapter(body: &str) -> (tempfile::TempDir, AdapterCommand) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("adapter.sh");
            fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
            fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
            let cmd = AdapterCommand { program: path, args: vec![] };
            (dir, cmd)
        }

        #[test]
        fn detect_round_trip_with_fake_adapter() {
            let (_dir, cmd) = script_adapter(
                r#"while read -r line; do
  echo '{"detections": [{"x": 5, "y": 6, "w": 70, "h": 80, "confidence": 0.5}]}'
done"#,
            );
            let mut client = AdapterClient::spawn(&cmd).unwrap();
            let dets = client.detect(Path::new("/tmp/frame.png")).unwrap();
            assert_eq!(dets.len(), 1);
            assert_eq!(dets[0].w, 70.0);
            let dets = client.detect(Path::new("/tmp/frame2.png")).unwrap();
            assert_eq!(dets.len(), 1, "one child serves many requests");
            client.finish().unwrap();
        }

        #[test]
        fn express_round_trip_with_fake_adapter() {
            let (_dir, cmd) = script_adapter(
                r#"while read -r line; do
  echo '{"scores": {"angry": 0, "disgust": 0, "fear": 0, "happy": 1, "sad": 0, "surprise": 0, "neutral": 0}}'
done"#,
            );
            let mut client = AdapterClient::spawn(&cmd).unwrap();
            let bbox = BBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 };
            let scores = client.express(Path::new("/tmp/frame.png"), &bbox).unwrap();
            assert_eq!(scores.happy, 1.0);
            client.finish().unwrap();
        }

        #[test]
        fn malformed_response_names_the_request() {
            let (_dir, cmd) = script_adapter("read -r line; echo 'not json'; read -r line2");
            let mut client = AdapterClient::spawn(&cmd).unwrap();
            let err = client.detect(Path::new("/tmp/f.png")).unwrap_err();
            match err {
                AdapterError::BadResponse { request, line, .. } => {
                    assert!(request.contains("/tmp/f.png"), "request named: {request}");
                    assert_eq!(line, "not json");
                }
                other => panic!("expected BadResponse, got {other:?}"),
            }
        }

        #[test]
        fn unnormalized_scores_are_rejected() {
            let (_dir, cmd) = script_adapter(
                r#"while read -r line; do
  echo '{"scores": {"angry": 0.5, "disgust": 0, "fear": 0, "happy": 0.9, "sad": 0, "surprise": 0, "neutral": 0}}'
done"#,
            );
            let mut client = AdapterClient::spawn(&cmd).unwrap();
            let bbox = BBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 };
            let err = client.express(Path::new("/tmp/f.png"), &bbox).unwrap_err();
            assert!(matches!(err, AdapterError::BadResponse { .. }), "got {err:?}");
        }

        #[test]
        fn early_exit_is_reported() {
            let (_dir, cmd) = script_adapter("read -r line; exit 3");
            let mut client = AdapterClient::spawn(&cmd).unwrap();
            let err = client.detect(Path::new("/tmp/f.png")).unwrap_err();
            assert!(
                matches!(err, AdapterError::ClosedPipe { .. } | AdapterError::Exited { .. }),
                "got {err:?}"
            );
        }

        #[test]
        fn timeout_kills_stuck_adapter() {
            let (_dir, cmd) = script_adapter("read -r line; exec sleep 60");
            let client = {
                let _guard = super::ENV_LOCK.lock().unwrap();
                std::env::set_var(TIMEOUT_ENV, "1");
                let client = AdapterClient::spawn(&cmd);
                std::env::remove_var(TIMEOUT_ENV);
                client
            };
            let mut client = client.unwrap();
            let start = std::time::Instant::now();
            let err = client.detect(Path::new("/tmp/f.png")).unwrap_err();
            assert!(matches!(err, AdapterError::Timeout { seconds: 1, .. }), "got {err:?}");
            assert!(start.elapsed() < Duration::from_secs(10), "did not hang");
        }
    }
}
