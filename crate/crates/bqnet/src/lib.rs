//! Compile (timed) Petri-net models of combinatorial optimization
//! problems into binary quadratic nets (QUBO/Ising energy models), solve
//! them exactly or by annealing, and check solutions against token-game
//! semantics.

pub mod bqn;
pub mod cli;
pub mod coeff;
pub mod constructions;
pub mod expr;
pub mod io;
pub mod petri;
pub mod problems;
pub mod solver;
