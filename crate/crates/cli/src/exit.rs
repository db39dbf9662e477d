//! Maps failures to process exit codes.

use std::fmt;

use pasta_core::apps::AppError;
use pasta_core::bridge::BridgeError;
use pasta_core::data::DataError;
use pasta_core::encoding::EncodingError;
use pasta_core::metrics::MetricError;
use pasta_core::pipeline::PipelineError;
use pasta_core::scorer::ScorerError;
use pasta_core::xai::XaiError;

pub const OK: u8 = 0;
pub const RUNTIME: u8 = 1;
pub const VALIDATION: u8 = 2;
pub const BRIDGE: u8 = 3;
pub const NUMERIC: u8 = 4;

/// Input that fails a check done by the CLI itself.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(message: impl Into<String>) -> anyhow::Error {
    Invalid(message.into()).into()
}

fn scorer(e: &ScorerError) -> u8 {
    match e {
        ScorerError::NonFiniteForward | ScorerError::NonFiniteLoss { .. } | ScorerError::ZeroNorm => NUMERIC,
        ScorerError::Metric(_) => NUMERIC,
        ScorerError::Io(_) => RUNTIME,
        _ => VALIDATION,
    }
}

fn pipeline(e: &PipelineError) -> u8 {
    match e {
        PipelineError::Bridge(_) => BRIDGE,
        PipelineError::Data(d) => data(d),
        PipelineError::Encoding(_) | PipelineError::MissingEmbedding(_) => VALIDATION,
    }
}

fn data(e: &DataError) -> u8 {
    match e {
        DataError::Io(_) => RUNTIME,
        DataError::NonFinite => NUMERIC,
        _ => VALIDATION,
    }
}

fn boxed(e: &(dyn std::error::Error + 'static)) -> u8 {
    if e.is::<BridgeError>() {
        BRIDGE
    } else if let Some(s) = e.downcast_ref::<ScorerError>() {
        scorer(s)
    } else if e.is::<EncodingError>() {
        VALIDATION
    } else {
        RUNTIME
    }
}

fn xai(e: &XaiError) -> u8 {
    match e {
        XaiError::Backend(src) => boxed(src.as_ref()),
        XaiError::Oracle(_) | XaiError::InvalidDistribution(_) => BRIDGE,
        XaiError::ZeroMass | XaiError::NonFinite | XaiError::Metric(_) => NUMERIC,
        XaiError::Data(d) => data(d),
        XaiError::DimMismatch { .. } | XaiError::Invalid(_) => VALIDATION,
    }
}

fn app(e: &AppError) -> u8 {
    match e {
        AppError::Backend(src) => boxed(src.as_ref()),
        AppError::Xai(x) => xai(x),
        AppError::Encoding(_) | AppError::Invalid(_) => VALIDATION,
        AppError::Scorer(_) => RUNTIME,
    }
}

/// The first error in the chain with a known category decides the code.
pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let code = if cause.is::<Invalid>() {
            VALIDATION
        } else if cause.is::<BridgeError>() {
            BRIDGE
        } else if let Some(e) = cause.downcast_ref::<PipelineError>() {
            pipeline(e)
        } else if let Some(e) = cause.downcast_ref::<DataError>() {
            data(e)
        } else if let Some(e) = cause.downcast_ref::<ScorerError>() {
            scorer(e)
        } else if let Some(e) = cause.downcast_ref::<XaiError>() {
            xai(e)
        } else if let Some(e) = cause.downcast_ref::<AppError>() {
            app(e)
        } else if cause.is::<MetricError>() {
            NUMERIC
        } else if cause.is::<EncodingError>() {
            VALIDATION
        } else {
            continue;
        };
        return code;
    }
    RUNTIME
}
