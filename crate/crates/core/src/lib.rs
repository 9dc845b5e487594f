#![allow(clippy::result_large_err)]

pub mod scalar;
pub mod series;
pub mod words;
pub mod saddlenode;
pub mod fixtures;
pub mod moulds;
pub mod normalisation;
pub mod borel;
pub mod io;
pub mod cli;
