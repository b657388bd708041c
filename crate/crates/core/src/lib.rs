pub mod fitting;
pub mod hamiltonian;
pub mod lindblad;
pub mod odmr;
pub mod spin_algebra;
pub mod synthetic;
pub mod cli;
