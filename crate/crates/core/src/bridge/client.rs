use std::collections::HashMap;
use std::io::{BufReader, BufWriter};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::cache::{CacheOp, EmbeddingCache};
use super::protocol::{to_line, Request, RequestBody, Response, ResponseBody, PROTOCOL_VERSION};
use super::server::serve_lines;
use super::stub::StubModel;
use super::transport::{BridgeSpec, LineSink, LineSource, ReadSource, WriteSink};
use super::BridgeError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const STUB_WORKERS: usize = 4;
const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// What the peer declared in its handshake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub protocol: u64,
    pub embed_dim: usize,
    pub num_classes: usize,
    pub model_tag: String,
}

type Reply = mpsc::Sender<ResponseBody>;

#[derive(Default)]
struct Shared {
    pending: Mutex<HashMap<u64, Reply>>,
    closed: AtomicBool,
    unmatched: AtomicU64,
}

enum Peer {
    InProcess(Option<JoinHandle<()>>),
    Child(Child),
    Tcp(TcpStream),
}

/// A handshaken connection to a bridge service. Requests may be issued from
/// several threads at once; responses are matched to requests by id.
pub struct BridgeClient {
    sink: Mutex<Option<Box<dyn LineSink>>>,
    shared: Arc<Shared>,
    next_id: AtomicU64,
    timeout: Duration,
    capabilities: Capabilities,
    reader: Option<JoinHandle<()>>,
    peer: Peer,
    cache: Option<Arc<EmbeddingCache>>,
}

fn reader_loop(mut source: Box<dyn LineSource>, shared: Arc<Shared>) {
    loop {
        let line = match source.recv_line() {
            Ok(Some(line)) => line,
            Ok(None) => break,
            Err(e) => {
                log::warn!("bridge read failed: {e}");
                break;
            }
        };
        let reply = match serde_json::from_str::<Response>(&line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("unparseable bridge response: {e}");
                shared.unmatched.fetch_add(1, Ordering::Relaxed);
                continue;
            }
        };
        let waiter = shared.pending.lock().expect("pending map").remove(&reply.id);
        match waiter {
            // The waiter may have timed out already; nothing to do then.
            Some(tx) => drop(tx.send(reply.body)),
            None => {
                log::warn!("bridge response for unknown id {}", reply.id);
                shared.unmatched.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
    shared.closed.store(true, Ordering::SeqCst);
    // Dropping the senders wakes every waiter with a disconnect.
    shared.pending.lock().expect("pending map").clear();
}

impl BridgeClient {
    pub fn connect(spec: &BridgeSpec, timeout: Duration) -> Result<Self, BridgeError> {
        match spec {
            BridgeSpec::Stub => {
                let (req_tx, req_rx) = mpsc::channel::<String>();
                let (resp_tx, resp_rx) = mpsc::channel::<String>();
                let server = thread::spawn(move || {
                    if let Err(e) = serve_lines(Arc::new(StubModel::new()), req_rx, resp_tx, STUB_WORKERS) {
                        log::warn!("stub bridge stopped: {e}");
                    }
                });
                Self::over(Box::new(req_tx), Box::new(resp_rx), Peer::InProcess(Some(server)), timeout)
            }
            BridgeSpec::Exec(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|source| BridgeError::Spawn { command: argv.join(" "), source })?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Self::over(
                    Box::new(WriteSink(BufWriter::new(stdin))),
                    Box::new(ReadSource(BufReader::new(stdout))),
                    Peer::Child(child),
                    timeout,
                )
            }
            BridgeSpec::Tcp(addr) => {
                let target = addr
                    .to_socket_addrs()?
                    .next()
                    .ok_or_else(|| BridgeError::Spec(format!("tcp:{addr} does not resolve")))?;
                let stream = TcpStream::connect_timeout(&target, timeout)?;
                stream.set_nodelay(true)?;
                let reader = stream.try_clone()?;
                let writer = stream.try_clone()?;
                Self::over(
                    Box::new(WriteSink(BufWriter::new(writer))),
                    Box::new(ReadSource(BufReader::new(reader))),
                    Peer::Tcp(stream),
                    timeout,
                )
            }
        }
    }

    /// Runs the handshake over an already established line channel.
    fn over(
        sink: Box<dyn LineSink>,
        source: Box<dyn LineSource>,
        peer: Peer,
        timeout: Duration,
    ) -> Result<Self, BridgeError> {
        let shared = Arc::new(Shared::default());
        let reader_shared = Arc::clone(&shared);
        let reader = thread::spawn(move || reader_loop(source, reader_shared));
        let mut client = Self {
            sink: Mutex::new(Some(sink)),
            shared,
            next_id: AtomicU64::new(1),
            timeout,
            capabilities: Capabilities { protocol: 0, embed_dim: 0, num_classes: 0, model_tag: String::new() },
            reader: Some(reader),
            peer,
            cache: None,
        };
        client.capabilities = match client.call(RequestBody::Hello)? {
            ResponseBody::Hello { protocol, embed_dim, num_classes, model_tag } => {
                if protocol != PROTOCOL_VERSION {
                    return Err(BridgeError::Version { peer: protocol });
                }
                if embed_dim == 0 || num_classes == 0 {
                    return Err(BridgeError::Protocol("handshake declared a zero dimension".into()));
                }
                Capabilities { protocol, embed_dim, num_classes, model_tag }
            }
            other => return Err(unexpected("hello", &other)),
        };
        Ok(client)
    }

    pub fn with_cache(mut self, cache: Arc<EmbeddingCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn capabilities(&self) -> &Capabilities {
        &self.capabilities
    }

    /// Responses that arrived for no pending request.
    pub fn unmatched_responses(&self) -> u64 {
        self.shared.unmatched.load(Ordering::Relaxed)
    }

    fn register(&self) -> Result<(u64, mpsc::Receiver<ResponseBody>), BridgeError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel();
        self.shared.pending.lock().expect("pending map").insert(id, tx);
        if self.shared.closed.load(Ordering::SeqCst) {
            self.shared.pending.lock().expect("pending map").remove(&id);
            return Err(BridgeError::Disconnected);
        }
        Ok((id, rx))
    }

    fn send(&self, lines: &[String]) -> Result<(), BridgeError> {
        let mut guard = self.sink.lock().expect("sink");
        let sink = guard.as_mut().ok_or(BridgeError::Disconnected)?;
        for line in lines {
            sink.send_line(line).map_err(|_| BridgeError::Disconnected)?;
        }
        Ok(())
    }

    fn wait(&self, id: u64, rx: mpsc::Receiver<ResponseBody>) -> Result<ResponseBody, BridgeError> {
        match rx.recv_timeout(self.timeout) {
            Ok(ResponseBody::Error { code, message }) => Err(BridgeError::Service { id, code, message }),
            Ok(body) => Ok(body),
            Err(mpsc::RecvTimeoutError::Timeout) => {
                self.shared.pending.lock().expect("pending map").remove(&id);
                Err(BridgeError::Timeout { id, after: self.timeout })
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(BridgeError::Disconnected),
        }
    }

    /// Sends one request and waits for its response.
    pub fn call(&self, body: RequestBody) -> Result<ResponseBody, BridgeError> {
        self.call_many(vec![body]).pop().expect("one response")
    }

    /// Writes every request before reading any response.
    pub fn call_many(&self, bodies: Vec<RequestBody>) -> Vec<Result<ResponseBody, BridgeError>> {
        let mut waiting = Vec::with_capacity(bodies.len());
        let mut lines = Vec::with_capacity(bodies.len());
        for body in bodies {
            let registered = self.register().and_then(|(id, rx)| {
                lines.push(to_line(&Request { id, body })?);
                Ok((id, rx))
            });
            waiting.push(registered);
        }
        if self.send(&lines).is_err() {
            let mut pending = self.shared.pending.lock().expect("pending map");
            return waiting
                .into_iter()
                .map(|w| {
                    if let Ok((id, _)) = w {
                        pending.remove(&id);
                    }
                    Err(BridgeError::Disconnected)
                })
                .collect();
        }
        let mut dead = false;
        waiting
            .into_iter()
            .map(|w| {
                let (id, rx) = w?;
                if dead {
                    self.shared.pending.lock().expect("pending map").remove(&id);
                    return Err(BridgeError::Timeout { id, after: self.timeout });
                }
                let out = self.wait(id, rx);
                // One timeout means the peer is stuck; do not wait again per request.
                dead = matches!(out, Err(BridgeError::Timeout { .. }));
                out
            })
            .collect()
    }

    fn check_dim(&self, v: Vec<f64>, expected: usize) -> Result<Vec<f64>, BridgeError> {
        if v.len() != expected {
            return Err(BridgeError::Dim { expected, got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(BridgeError::Protocol("non-finite value in response".into()));
        }
        Ok(v)
    }

    fn vector(&self, body: ResponseBody, op: &str) -> Result<Vec<f64>, BridgeError> {
        match (op, body) {
            ("embed_image", ResponseBody::EmbedImage { vector }) | ("embed_text", ResponseBody::EmbedText { vector }) => {
                self.check_dim(vector, self.capabilities.embed_dim)
            }
            ("classify", ResponseBody::Classify { probs }) => {
                let probs = self.check_dim(probs, self.capabilities.num_classes)?;
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > SIMPLEX_TOLERANCE {
                    return Err(BridgeError::Protocol(format!("classify returned a non-distribution (sum {total})")));
                }
                Ok(probs)
            }
            (op, other) => Err(unexpected(op, &other)),
        }
    }

    /// Pipelined embedding requests, consulting the cache first when one is attached.
    fn embed_many(&self, op: CacheOp, payloads: &[&[u8]]) -> Result<Vec<Vec<f64>>, BridgeError> {
        let tag = &self.capabilities.model_tag;
        let mut out: Vec<Option<Vec<f64>>> = vec![None; payloads.len()];
        if let Some(cache) = &self.cache {
            for (slot, payload) in out.iter_mut().zip(payloads) {
                *slot = cache.get(tag, op, payload)?;
            }
        }
        let missing: Vec<usize> = (0..payloads.len()).filter(|i| out[*i].is_none()).collect();
        let bodies = missing
            .iter()
            .map(|&i| match op {
                CacheOp::EmbedImage => RequestBody::embed_image(payloads[i]),
                CacheOp::EmbedText => RequestBody::EmbedText { text: String::from_utf8_lossy(payloads[i]).into_owned() },
            })
            .collect();
        for (i, response) in missing.into_iter().zip(self.call_many(bodies)) {
            let vector = self.vector(response?, op.name())?;
            if let Some(cache) = &self.cache {
                cache.put(tag, op, payloads[i], &vector)?;
            }
            out[i] = Some(vector);
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }

    pub fn embed_image(&self, png: &[u8]) -> Result<Vec<f64>, BridgeError> {
        Ok(self.embed_many(CacheOp::EmbedImage, &[png])?.remove(0))
    }

    pub fn embed_images(&self, pngs: &[Vec<u8>]) -> Result<Vec<Vec<f64>>, BridgeError> {
        let refs: Vec<&[u8]> = pngs.iter().map(Vec::as_slice).collect();
        self.embed_many(CacheOp::EmbedImage, &refs)
    }

    pub fn embed_text(&self, text: &str) -> Result<Vec<f64>, BridgeError> {
        Ok(self.embed_many(CacheOp::EmbedText, &[text.as_bytes()])?.remove(0))
    }

    pub fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BridgeError> {
        let refs: Vec<&[u8]> = texts.iter().map(|t| t.as_bytes()).collect();
        self.embed_many(CacheOp::EmbedText, &refs)
    }

    pub fn classify(&self, png: &[u8]) -> Result<Vec<f64>, BridgeError> {
        self.vector(self.call(RequestBody::classify(png))?, "classify")
    }

    pub fn classify_many(&self, pngs: &[Vec<u8>]) -> Result<Vec<Vec<f64>>, BridgeError> {
        let bodies = pngs.iter().map(|p| RequestBody::classify(p)).collect();
        self.call_many(bodies).into_iter().map(|r| self.vector(r?, "classify")).collect()
    }
}

fn unexpected(op: &str, body: &ResponseBody) -> BridgeError {
    BridgeError::Protocol(format!("expected a {op} response, got {body:?}"))
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        // Closing our end lets a well-behaved peer exit on its own.
        self.sink.lock().map(|mut s| s.take()).ok();
        match &mut self.peer {
            Peer::InProcess(server) => {
                if let Some(h) = server.take() {
                    let _ = h.join();
                }
            }
            Peer::Child(child) => {
                let _ = child.kill();
                let _ = child.wait();
            }
            Peer::Tcp(stream) => {
                let _ = stream.shutdown(Shutdown::Both);
            }
        }
        if let Some(h) = self.reader.take() {
            let _ = h.join();
        }
    }
}
