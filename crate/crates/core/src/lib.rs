//! Second-order (tensor) recurrent networks and the automata around them.
//!
//! - [`automata`]: DFAs, the Tomita grammars, minimization, equivalence and
//!   dataset sampling.
//! - [`turing`]: a reference Turing machine interpreter.
//! - [`network`]: the second-order cell, activations, readout and
//!   fixed-point checks.
//! - [`encoding`]: rule insertion of DFAs into cells and of Turing machines
//!   into locally connected neuron lattices.
//! - [`training`]: backpropagation through time and the Tomita protocol.
//! - [`extraction`]: clustering-based DFA extraction from trained cells.

pub mod automata;
pub mod encoding;
pub mod extraction;
pub mod network;
pub mod seed;
pub mod training;
pub mod turing;

pub use automata::{Alphabet, Dataset, Dfa, LabeledString};
pub use network::{Activation, HiddenState, Readout, TensorWeights, TrnnCell, TrnnModel};
pub use turing::{TmConfig, TuringMachine};
