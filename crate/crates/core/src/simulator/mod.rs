//! Deterministic synthetic sessions built from half-sine press envelopes.

mod generate;
mod profile;
mod stream;

pub use generate::{
    generate_session, generate_session_with_meta, planned_presses, InfeasibleProfile, PlannedPress, NOISE_MAX,
    SIM_PARTICIPANT, SIM_STEP_MS,
};
pub use profile::{Archetype, SimProfile, UnknownArchetype};
pub use stream::{encode_session, stream_session, StreamError, StreamSummary};
