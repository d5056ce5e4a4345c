//! Decide whether a timed automaton needs the clocks of the automaton it runs
//! beside, and synthesize an equivalent network without shared clocks when
//! it does not.

pub mod bisim;
pub mod cli;
pub mod contextual;
pub mod corpus;
pub mod model;
pub mod parser;
pub mod regions;
pub mod smod;
pub mod synth;
pub mod zones;
