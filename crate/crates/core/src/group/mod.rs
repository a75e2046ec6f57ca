//! Finitely generated matrix groups: presentations, normal forms, word balls
//! and their audits.

pub mod audit;
pub mod ball;
pub mod pingpong;
pub mod power;
pub mod presentation;

pub use audit::{faithfulness_audit, Collision, FaithfulnessReport, DEFAULT_COLLISION_TOLERANCE};
pub use ball::{
    configured_budget, enumerate_ball, enumerate_ball_with_budget, evaluate, evaluate_letters, sphere_sizes, BallEnumeration,
};
pub use pingpong::{ping_pong_certificate, Cap, GeneratorDomains, PingPongDomains, PingPongReport};
pub use power::{cartan_power_sequence, power_sequence};
pub use presentation::{reduce, CyclicOrder, Generator, Peripheral, Presentation, PresentationKind, Word};
