pub mod assembly;
pub mod cli;
pub mod ensemble;
pub mod experiments;
pub mod fespace;
pub mod linsolve;
pub mod mesh;

#[cfg(test)]
pub(crate) mod testutil;
