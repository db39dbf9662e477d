use std::io::{self, BufRead, Write};
use std::sync::mpsc;

use super::BridgeError;

/// Writes one protocol message per call.
pub trait LineSink: Send {
    fn send_line(&mut self, line: &str) -> io::Result<()>;
}

/// Reads one protocol message per call; `None` at end of stream.
pub trait LineSource: Send {
    fn recv_line(&mut self) -> io::Result<Option<String>>;
}

pub struct WriteSink<W>(pub W);

impl<W: Write + Send> LineSink for WriteSink<W> {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        self.0.write_all(line.as_bytes())?;
        self.0.write_all(b"\n")?;
        self.0.flush()
    }
}

pub struct ReadSource<R>(pub R);

impl<R: BufRead + Send> LineSource for ReadSource<R> {
    fn recv_line(&mut self) -> io::Result<Option<String>> {
        let mut line = String::new();
        if self.0.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        Ok(Some(line))
    }
}

impl LineSink for mpsc::Sender<String> {
    fn send_line(&mut self, line: &str) -> io::Result<()> {
        self.send(line.to_owned()).map_err(|_| io::Error::from(io::ErrorKind::BrokenPipe))
    }
}

impl LineSource for mpsc::Receiver<String> {
    fn recv_line(&mut self) -> io::Result<Option<String>> {
        Ok(self.recv().ok())
    }
}

/// Where the bridge service lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BridgeSpec {
    /// The stub service on threads in this process.
    Stub,
    /// A child process speaking the protocol on stdin/stdout.
    Exec(Vec<String>),
    /// A service listening at `host:port`.
    Tcp(String),
}

impl std::str::FromStr for BridgeSpec {
    type Err = BridgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stub" {
            return Ok(Self::Stub);
        }
        if let Some(cmd) = s.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(str::to_owned).collect();
            if argv.is_empty() {
                return Err(BridgeError::Spec(s.into()));
            }
            return Ok(Self::Exec(argv));
        }
        if let Some(addr) = s.strip_prefix("tcp:") {
            if addr.rsplit_once(':').is_some_and(|(h, p)| !h.is_empty() && p.parse::<u16>().is_ok()) {
                return Ok(Self::Tcp(addr.into()));
            }
        }
        Err(BridgeError::Spec(s.into()))
    }
}

impl std::fmt::Display for BridgeSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Stub => f.write_str("stub"),
            Self::Exec(argv) => write!(f, "exec:{}", argv.join(" ")),
            Self::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}
