use std::fmt;

use slowfast_core::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Config,
    Assumptions,
    Detection,
    Other,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Other => 1,
            Kind::Config => 2,
            Kind::Assumptions => 3,
            Kind::Detection => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Kind::Config, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn kind_of(e: &Error) -> Kind {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidModel(_)
        | Error::NotCoprime { .. }
        | Error::Document(_)
        | Error::UnorderedBreakpoints => Kind::Config,
        Error::AssumptionsFailed(_) | Error::SlowFlowVanishes { .. } => Kind::Assumptions,
        Error::NoCycle { .. }
        | Error::SectionDegenerate { .. }
        | Error::StepUnderflow { .. }
        | Error::MaxTimeExceeded { .. }
        | Error::Census(_)
        | Error::CurvesIntersect { .. } => Kind::Detection,
        _ => Kind::Other,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(kind_of(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(Kind::Other, e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::new(Kind::Other, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::new(Kind::Other, e.to_string())
    }
}
