//! Evolution of type-safe programs: plushy genomes are compiled into
//! Hindley-Milner typed syntax trees, evaluated against benchmark tasks and
//! improved with lexicase selection and UMAD mutation.

pub mod ast;
pub mod compiler;
pub mod evolution;
pub mod genome;
pub mod problems;
pub mod reader;
pub mod runtime;
pub mod types;
