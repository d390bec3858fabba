//! Candidate verification: intrinsic attributes through binned VQA scores
//! with one deferred re-query, then extrinsic relations through room
//! filtering, viewpoint sampling, frame alignment, and the seven spatial
//! predicates.

mod extrinsic;
mod frame;
mod intrinsic;
mod predicates;

pub use extrinsic::{
    room_filter, sample_viewpoints, verify_extrinsic, ExtrinsicOutcome, InstantiatedTriple,
    RoomFilterOutcome, ViewpointSet, VIEWPOINT_BEARINGS, VIEWPOINT_RADII,
};
pub use frame::{align_frame, to_local, LocalCoords, LocalFrame};
pub use intrinsic::{
    verify_intrinsic, AttributeScorer, Bin, IntrinsicSession, IntrinsicVerdict, QuestionEvent,
    REQUERY_WINDOW,
};
pub use predicates::{bin_score, eval_predicate, Tolerances};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("score {0} outside the 0..=15 range")]
    ScoreOutOfRange(u16),
    #[error("degenerate frame: viewpoint coincides with the reference center")]
    DegenerateFrame,
    #[error("attribute oracle failed: {0}")]
    Oracle(String),
}
