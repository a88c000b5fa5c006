//! Timeline mining, well-being scoring and multiple-comparison statistics
//! for studying how pets relate to the happiness of social-media users.

pub mod backend;
pub mod corpus;
pub mod faceclient;
pub mod happiness;
pub mod inference;
pub mod petclass;
pub mod rng;
pub mod sentiment;
pub mod stats;
pub mod synth;
pub mod pipeline;
pub mod report;
