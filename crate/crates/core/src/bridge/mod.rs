//! Client side of the line-delimited JSON protocol used to reach image/text
//! encoders and classifiers, plus a deterministic in-crate stub service.

mod adapters;
mod cache;
mod client;
mod protocol;
mod server;
mod stub;
mod transport;

pub use adapters::{BridgeOracle, BridgeScorer};
pub use cache::{CacheOp, EmbeddingCache};
pub use client::{BridgeClient, Capabilities, DEFAULT_TIMEOUT};
pub use protocol::{
    decode_payload, encode_payload, to_line, ErrorCode, Request, RequestBody, Response, ResponseBody,
    MAX_PAYLOAD_BYTES, PROTOCOL_VERSION,
};
pub use server::{serve_lines, serve_tcp, BridgeService};
pub use stub::{StubModel, STUB_EMBED_DIM, STUB_MODEL_TAG, STUB_NUM_CLASSES};
pub use transport::{BridgeSpec, LineSink, LineSource, ReadSource, WriteSink};

use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum BridgeError {
    #[error("bridge i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not start bridge '{command}': {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("invalid bridge spec '{0}'")]
    Spec(String),
    #[error("request {id} timed out after {after:?}")]
    Timeout { id: u64, after: Duration },
    #[error("bridge connection closed")]
    Disconnected,
    #[error("peer speaks protocol {peer}, expected {}", PROTOCOL_VERSION)]
    Version { peer: u64 },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("request {id} failed ({code}): {message}")]
    Service { id: u64, code: ErrorCode, message: String },
    #[error("bridge returned {got} values, declared {expected}")]
    Dim { expected: usize, got: usize },
    #[error("cache: {0}")]
    Cache(String),
}
