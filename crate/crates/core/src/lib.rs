pub mod analysis;
pub mod cli;
pub mod config;
pub mod evolution;
pub mod foliation;
pub mod io;
pub mod kappa_limit;
pub mod models;
pub mod tensor;
