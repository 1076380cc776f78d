//! Values, the builtin library and a strict evaluator for compiled programs.

pub mod builtins;
mod eval;
mod value;

pub use builtins::{builtin_library, library, lookup, Builtin, BuiltinRef};
pub use eval::{evaluate, ErrorKind, Interp, RuntimeError, Scope, DEFAULT_STEP_BUDGET, MAX_EVAL_DEPTH};
pub use value::{Closure, Func, Value};
