//! Quasi-static contact simulation: supports, objects, constrained slot
//! resolution and the scenario runners.

mod constrain;
mod env;
mod sim;

use thiserror::Error;

use crate::drive::DriveError;
use crate::linkage::LinkageError;

pub use constrain::{step_constrained, Constrained, Constraint, CONTACT_TOL, ROOT_TOL};
pub use env::{Environment, ObjectShape, PlacedObject, ShapeKind, Support};
pub use sim::{
    run_envelope, run_passive_open, run_scenario, simulate, Approach, Behavior, Event, EventKind, FingerFrame, Frame,
    Phase, ProgressUnit, Scenario, Schedule, SimSettings, SimTrace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("no slot extension up to s_max = {s_max} mm resolves the contact (remaining penetration {penetration:.3e} mm)")]
    NoSolution { s_max: f64, penetration: f64 },
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error("invalid drive schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("envelope unreachable: {0}")]
    EnvelopeUnreachable(String),
    #[error(transparent)]
    Drive(#[from] DriveError),
}

impl From<LinkageError> for ContactError {
    fn from(e: LinkageError) -> Self {
        ContactError::Drive(DriveError::Linkage(e))
    }
}
