pub mod expander;
pub mod ghdiag;
pub mod level;
pub mod mapspace;
pub mod measures;
pub mod trivsweep;
