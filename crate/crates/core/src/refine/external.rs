//! Newline-delimited JSON exchange with an out-of-process refiner.
//!
//! Request:  `{"type":"refine_request","iteration":N,"program":"<dsl>","report":{...}}`
//! Response: `{"type":"refine_response","program":"<dsl>"}` or
//!           `{"type":"refine_response","no_change":true}`

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{RefineOutcome, Refiner};
use crate::catalog::AssetCatalog;
use crate::constraints::{parse_program, ConstraintProgram};
use crate::diagnostics::ErrorReport;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Serialize)]
pub struct RefineRequest<'a> {
    #[serde(rename = "type")]
    pub kind: String,
    pub iteration: usize,
    pub program: String,
    pub report: &'a ErrorReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineResponse {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    #[serde(default)]
    pub no_change: bool,
}

impl RefineResponse {
    pub fn revised(program: String) -> Self {
        Self { kind: "refine_response".into(), program: Some(program), no_change: false }
    }

    pub fn no_change() -> Self {
        Self { kind: "refine_response".into(), program: None, no_change: true }
    }
}

/// Where the external refiner lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Program and arguments, spoken to over stdin/stdout.
    Command(Vec<String>),
    /// `host:port` of a refiner accepting one connection.
    Tcp(String),
}

impl Endpoint {
    /// Parses `tcp://host:port`, `cmd:<shell-free argv split on spaces>` or a bare command line.
    pub fn parse(s: &str) -> Option<Self> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            return (!addr.is_empty()).then(|| Endpoint::Tcp(addr.to_string()));
        }
        let cmd = s.strip_prefix("cmd:").unwrap_or(s);
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        (!argv.is_empty()).then_some(Endpoint::Command(argv))
    }
}

enum Link {
    Process { child: Child, stdin: ChildStdin, lines: Receiver<std::io::Result<String>> },
    Socket { stream: TcpStream, reader: BufReader<TcpStream> },
}

impl Drop for Link {
    fn drop(&mut self) {
        if let Link::Process { child, .. } = self {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

pub struct ExternalRefiner {
    endpoint: Endpoint,
    catalog: AssetCatalog,
    timeout: Duration,
    link: Option<Link>,
}

impl ExternalRefiner {
    pub fn new(endpoint: Endpoint, catalog: AssetCatalog) -> Self {
        Self { endpoint, catalog, timeout: DEFAULT_TIMEOUT, link: None }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn connect(&self) -> Result<Link, String> {
        match &self.endpoint {
            Endpoint::Command(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::null())
                    .spawn()
                    .map_err(|e| format!("spawn {}: {e}", argv[0]))?;
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
                Ok(Link::Process { child, stdin, lines: rx })
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| format!("connect {addr}: {e}"))?;
                stream.set_read_timeout(Some(self.timeout)).map_err(|e| e.to_string())?;
                let reader = BufReader::new(stream.try_clone().map_err(|e| e.to_string())?);
                Ok(Link::Socket { stream, reader })
            }
        }
    }

    /// One request/response round trip. Any failure drops the link so the
    /// next call reconnects.
    pub fn exchange(&mut self, request_line: &str) -> Result<RefineResponse, String> {
        if self.link.is_none() {
            self.link = Some(self.connect()?);
        }
        let timeout = self.timeout;
        let result = match self.link.as_mut().expect("link just set") {
            Link::Process { stdin, lines, .. } => {
                writeln!(stdin, "{request_line}").and_then(|_| stdin.flush()).map_err(|e| format!("write: {e}"))?;
                match lines.recv_timeout(timeout) {
                    Ok(Ok(line)) => Ok(line),
                    Ok(Err(e)) => Err(format!("read: {e}")),
                    Err(RecvTimeoutError::Timeout) => Err(format!("timed out after {}s", timeout.as_secs_f64())),
                    Err(RecvTimeoutError::Disconnected) => Err("refiner closed its output".into()),
                }
            }
            Link::Socket { stream, reader } => {
                writeln!(stream, "{request_line}").and_then(|_| stream.flush()).map_err(|e| format!("write: {e}"))?;
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => Err("refiner closed the connection".into()),
                    Ok(_) => Ok(line),
                    Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                        Err(format!("timed out after {}s", timeout.as_secs_f64()))
                    }
                    Err(e) => Err(format!("read: {e}")),
                }
            }
        };
        let parsed = result.and_then(|line| {
            let r: RefineResponse = serde_json::from_str(line.trim()).map_err(|e| format!("malformed response: {e}"))?;
            if r.kind != "refine_response" {
                return Err(format!("unexpected record type {:?}", r.kind));
            }
            Ok(r)
        });
        if parsed.is_err() {
            self.link = None;
        }
        parsed
    }
}

pub fn request_line(program: &ConstraintProgram, report: &ErrorReport, iteration: usize) -> String {
    let req = RefineRequest { kind: "refine_request".into(), iteration, program: program.to_dsl(), report };
    serde_json::to_string(&req).expect("request serializes")
}

impl Refiner for ExternalRefiner {
    fn refine(&mut self, program: &ConstraintProgram, report: &ErrorReport, iteration: usize) -> RefineOutcome {
        let resp = match self.exchange(&request_line(program, report, iteration)) {
            Ok(r) => r,
            Err(e) => return RefineOutcome::Fault(e),
        };
        match resp.program {
            Some(text) if !resp.no_change => match parse_program(&text, &self.catalog) {
                Ok(p) if &p == program => RefineOutcome::NoChange,
                Ok(p) => RefineOutcome::Revised { program: p, actions: vec!["external revision".into()] },
                Err(e) => RefineOutcome::Fault(format!("response program does not parse: {e}")),
            },
            _ => RefineOutcome::NoChange,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_parsing() {
        assert_eq!(Endpoint::parse("tcp://127.0.0.1:9000"), Some(Endpoint::Tcp("127.0.0.1:9000".into())));
        assert_eq!(Endpoint::parse("cmd:python3 refiner.py"), Some(Endpoint::Command(vec!["python3".into(), "refiner.py".into()])));
        assert_eq!(Endpoint::parse("  "), None);
    }

    #[test]
    fn response_shapes() {
        let r: RefineResponse = serde_json::from_str(r#"{"type":"refine_response","no_change":true}"#).unwrap();
        assert_eq!(r, RefineResponse::no_change());
        let r: RefineResponse = serde_json::from_str(r#"{"type":"refine_response","program":"count(chair) in [1,2]"}"#).unwrap();
        assert_eq!(r.program.as_deref(), Some("count(chair) in [1,2]"));
    }
}
