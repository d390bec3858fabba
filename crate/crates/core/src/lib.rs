//! Text-goal instance navigation sandbox.
//!
//! An agent is dropped into a synthetic 2.5D world and asked to reach the one
//! object instance that matches a free-form description such as
//! "a yellow and green picture above the cabinet near the staircase".
//! The crate provides:
//!
//! - [`scene`]: the ground-truth world, a depth sensor by 2D ray casting,
//!   discrete agent embodiment, and configurable perception oracles that stand
//!   in for a detector / VLM stack.
//! - [`goal`]: decomposition of the description into intrinsic attributes,
//!   canonical context categories, and spatial-relation triples, either from
//!   pre-decomposed JSON or from a small constrained grammar.
//! - [`mapping`]: occupancy / wall / room / value grid layers, instance-level
//!   3D point-cloud association, RANSAC wall-plane extraction, and geodesic
//!   queries.
//! - [`exploration`]: a context-conditioned value map over frontiers, the
//!   single-use room-level override, and a grid local planner.
//! - [`verification`]: intrinsic attribute checks over binned VQA scores and
//!   viewpoint-aware evaluation of seven spatial predicates.
//! - [`harness`]: the episode loop, SR/SPL metrics, a procedural scene
//!   generator, and map/trajectory export.

pub mod exploration;
pub mod geom;
pub mod goal;
pub mod harness;
pub mod mapping;
pub mod scene;
pub mod verification;

pub use geom::Vec2;
pub use goal::{AttrKey, AttributeQuestion, GoalSpec, Relation, RelationTriple};
pub use mapping::{GridStack, InstanceRecord, InstanceStore, Occupancy, PlaneModel};
pub use scene::{Action, AgentState, DepthImage, Detection, Scene, SensorConfig};
pub use verification::{LocalFrame, Tolerances};
