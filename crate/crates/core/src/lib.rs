pub mod characterization;
pub mod eval;
pub mod features;
pub mod fsio;
pub mod par;
pub mod pipeline;
pub mod pooling;
pub mod regress;
pub mod rng;
pub mod synth;
pub mod trajectory;
