//! Spectral workbench for travelling water waves in holomorphic coordinates.

pub mod certificate;
pub mod commands;
pub mod config;
pub mod continuation;
pub mod error;
pub mod holomorphic;
pub mod solver;
pub mod search;
pub mod selftest;
pub mod spectral;
pub mod steady;

pub use error::{Error, Result};
