//! Depth-oriented synthesis of CNOT circuits (linear reversible circuits
//! over GF(2)).

pub mod ancilla;
pub mod baselines;
pub mod bench;
pub mod bruteforce;
pub mod circuit;
pub mod dacsynth;
pub mod error;
pub mod gf2;
pub mod greedy;
pub mod matching;
pub mod portfolio;
pub mod qc;
pub mod resynth;

pub use circuit::{Circuit, Gate, SynthesisResult};
pub use error::{Error, Result};
pub use gf2::{BitMatrix, LuStrategy, Permutation};
