//! Toolchain for a basis-oriented quantum programming language: parser,
//! monomorphizer and type checker, basis engine, classical embeddings,
//! statevector simulator and the classical post-processing used by the
//! algorithm drivers.

pub mod basis;
pub mod classical;
pub mod drivers;
pub mod error;
pub mod host;
pub mod linalg;
pub mod parser;
pub mod post;
pub mod sim;
pub mod syntax;
pub mod typecheck;

pub use error::{Error, ErrorCode, ParseError, RuntimeError, TypeError};
