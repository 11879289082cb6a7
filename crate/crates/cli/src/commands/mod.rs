pub mod bench;
pub mod diagnose;
pub mod eval;
pub mod increment;
pub mod synth;
pub mod train;
