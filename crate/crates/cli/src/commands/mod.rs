pub mod normalize;
pub mod repelling;
pub mod resonance;
pub mod theorem_a;
