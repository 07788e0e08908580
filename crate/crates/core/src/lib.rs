pub mod dirac;
pub mod kernel;
pub mod legendre;
pub mod report;
pub mod symcore;
