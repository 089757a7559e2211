pub mod algebra;
pub mod cli;
pub mod cohomology;
pub mod deformation;
pub mod field;
pub mod format;
pub mod matrix;
mod modular;
pub mod sample;
