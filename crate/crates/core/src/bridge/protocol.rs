//! Protocol v1 message shapes. See `docs/protocol.md` for the wire format.

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::BridgeError;

pub const PROTOCOL_VERSION: u64 = 1;

/// Largest decoded image payload a service accepts.
pub const MAX_PAYLOAD_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RequestBody {
    Hello,
    /// `png` is base64 (standard alphabet, padded).
    EmbedImage { png: String },
    EmbedText { text: String },
    Classify { png: String },
}

impl RequestBody {
    pub fn embed_image(png: &[u8]) -> Self {
        Self::EmbedImage { png: encode_payload(png) }
    }

    pub fn classify(png: &[u8]) -> Self {
        Self::Classify { png: encode_payload(png) }
    }

    pub fn op(&self) -> &'static str {
        match self {
            Self::Hello => "hello",
            Self::EmbedImage { .. } => "embed_image",
            Self::EmbedText { .. } => "embed_text",
            Self::Classify { .. } => "classify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    MalformedRequest,
    MalformedPayload,
    OversizedImage,
    Internal,
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ResponseBody {
    Hello { protocol: u64, embed_dim: usize, num_classes: usize, model_tag: String },
    EmbedImage { vector: Vec<f64> },
    EmbedText { vector: Vec<f64> },
    Classify { probs: Vec<f64> },
    Error { code: ErrorCode, message: String },
}

impl ResponseBody {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Self::Error { code, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(flatten)]
    pub body: ResponseBody,
}

pub fn encode_payload(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

/// Decodes and size-checks an image payload.
pub fn decode_payload(text: &str) -> Result<Vec<u8>, ResponseBody> {
    // Base64 expands by 4/3; reject before decoding.
    if text.len() / 4 * 3 > MAX_PAYLOAD_BYTES + 3 {
        return Err(ResponseBody::error(ErrorCode::OversizedImage, "payload exceeds the size limit"));
    }
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text)
        .map_err(|e| ResponseBody::error(ErrorCode::MalformedPayload, format!("bad base64: {e}")))?;
    if bytes.is_empty() {
        return Err(ResponseBody::error(ErrorCode::MalformedPayload, "empty payload"));
    }
    if bytes.len() > MAX_PAYLOAD_BYTES {
        return Err(ResponseBody::error(ErrorCode::OversizedImage, "payload exceeds the size limit"));
    }
    Ok(bytes)
}

pub fn to_line<T: Serialize>(message: &T) -> Result<String, BridgeError> {
    serde_json::to_string(message).map_err(|e| BridgeError::Protocol(e.to_string()))
}
