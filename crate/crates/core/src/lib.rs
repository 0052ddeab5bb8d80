pub mod age;
pub mod catalog;
pub mod coding;
pub mod diagonal;
pub mod engine;
pub mod error;
pub mod game;
pub mod notation;
pub mod scott;
pub mod serial;
pub mod structure;
pub mod tower;

pub use error::{Error, Result};
