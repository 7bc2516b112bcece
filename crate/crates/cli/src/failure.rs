//! Exit-code classification.

use std::fmt;

use opencomp_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Validation,
    Runtime,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Validation => 3,
            Stage::Runtime => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn config_error(message: impl Into<String>) -> anyhow::Error {
    Failure {
        stage: Stage::Config,
        message: message.into(),
    }
    .into()
}

pub fn validation_error(message: impl Into<String>) -> anyhow::Error {
    Failure {
        stage: Stage::Validation,
        message: message.into(),
    }
    .into()
}

pub fn runtime_error(message: impl Into<String>) -> anyhow::Error {
    Failure {
        stage: Stage::Runtime,
        message: message.into(),
    }
    .into()
}

fn core_stage(e: &Error) -> Stage {
    match e {
        Error::Mode { source, .. } => core_stage(source),
        Error::StabilityViolation { .. }
        | Error::BoundaryLeak { .. }
        | Error::DomainEscape { .. }
        | Error::ZeroNorm
        | Error::FitFailure(_) => Stage::Runtime,
        _ => Stage::Validation,
    }
}

/// First classifiable cause in the chain; unknown errors count as runtime.
pub fn stage_of(e: &anyhow::Error) -> Stage {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.stage;
        }
        if let Some(c) = cause.downcast_ref::<Error>() {
            return core_stage(c);
        }
    }
    Stage::Runtime
}
