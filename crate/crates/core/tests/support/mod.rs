pub mod markov;
pub mod ssa;
