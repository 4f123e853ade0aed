//! Crate-wide error type for stream, functional, measure, and topology
//! operations. Ordinal-specific failures are wrapped.

use crate::ordinals::OrdinalError;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A script bit at or past the described depth was queried.
    DepthExceeded { index: usize, depth: usize },
    /// A stage beyond the described range was replayed.
    StageExceeded { stage: usize, depth: usize },
    /// A script violates the `A_s ⊆ [0, s)` discipline or has non-increasing
    /// change stages.
    MalformedScript,
    /// An n-fold join over no streams.
    EmptyList,
    /// A finite explicit index set ran out of elements.
    IndexSetExhausted,
    /// A computation needed data past the evaluation horizon.
    HorizonExceeded,
    /// An input prefix shorter than the block index it must determine.
    PrefixTooShort { needed: usize, got: usize },
    /// A decoded block ran past its stabilization-implied bound.
    MalformedOutput,
    /// A dynamic-join component could not supply a needed bit.
    ComponentStall { component: usize },
    /// An offset was requested for a phase that never completed.
    PhaseIncomplete { phase: usize },
    /// An eq-2 offset was requested but no phase stalled within the horizon.
    NotStalled,
    /// A cylinder list overlaps and normalization was disabled.
    NotPrefixFree,
    /// A symbolic comparison with the designated sequence was not resolved
    /// below the horizon.
    UndecidableEquality,
    /// An input does not have the shape the functional's recipe expects.
    InputShape,
    Ordinal(OrdinalError),
}

impl From<OrdinalError> for Error {
    fn from(e: OrdinalError) -> Self {
        Error::Ordinal(e)
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DepthExceeded { index, depth } => {
                write!(f, "bit {index} is past the script depth {depth}")
            }
            Error::StageExceeded { stage, depth } => {
                write!(f, "stage {stage} is past the script depth {depth}")
            }
            Error::MalformedScript => write!(f, "script violates the stage discipline"),
            Error::EmptyList => write!(f, "n-fold join of an empty list"),
            Error::IndexSetExhausted => write!(f, "finite index set exhausted"),
            Error::HorizonExceeded => write!(f, "evaluation horizon exceeded"),
            Error::PrefixTooShort { needed, got } => {
                write!(f, "input prefix of length {got} cannot determine block {needed}")
            }
            Error::MalformedOutput => write!(f, "output is not a well-formed block image"),
            Error::ComponentStall { component } => {
                write!(f, "component {component} yields no further bits")
            }
            Error::PhaseIncomplete { phase } => write!(f, "phase {phase} never completed"),
            Error::NotStalled => write!(f, "every phase within the horizon completed"),
            Error::NotPrefixFree => write!(f, "cylinder list is not prefix-free"),
            Error::UndecidableEquality => {
                write!(f, "equality with the designated sequence undecided below the horizon")
            }
            Error::InputShape => write!(f, "symbolic input does not match the recipe shape"),
            Error::Ordinal(e) => write!(f, "{e}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
