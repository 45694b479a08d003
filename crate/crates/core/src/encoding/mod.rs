//! Programming known machines into second-order networks: finite automata
//! into a single recurrent cell, Turing machines into lattices of cells.

mod dfa;
mod lattice;

pub use dfa::{encode_dfa, first_order_neuron_bound, DfaEncoding, EncodeMode, DEFAULT_EPS, DEFAULT_EPS0};
pub use lattice::{
    encode_tm, verify_simulation, Decoded, LatticeActivation, LatticeError, LatticeProgram,
    LatticeVariant, LatticeWeights, SimulationReport, TmLattice,
};
