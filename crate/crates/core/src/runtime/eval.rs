use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Expr, Symbol, TypedAst};
use crate::runtime::builtins::{self, BuiltinRef};
use crate::runtime::value::{Closure, Func, Value};

/// Default evaluation step budget per test case.
pub const DEFAULT_STEP_BUDGET: u64 = 100_000;

/// Nesting limit for evaluation; deeper programs fail instead of exhausting the stack.
pub const MAX_EVAL_DEPTH: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    IndexOutOfBounds,
    DivideByZero,
    Overflow,
    Timeout,
    Other,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::IndexOutOfBounds => "index-out-of-bounds",
            ErrorKind::DivideByZero => "divide-by-zero",
            ErrorKind::Overflow => "overflow",
            ErrorKind::Timeout => "timeout",
            ErrorKind::Other => "other",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub detail: Cow<'static, str>,
}

impl RuntimeError {
    pub fn new(kind: ErrorKind, detail: impl Into<Cow<'static, str>>) -> Self {
        Self { kind, detail: detail.into() }
    }

    pub fn index(detail: impl Into<Cow<'static, str>>) -> Self {
        Self::new(ErrorKind::IndexOutOfBounds, detail)
    }

    pub fn overflow(detail: impl Into<Cow<'static, str>>) -> Self {
        Self::new(ErrorKind::Overflow, detail)
    }

    pub fn other(detail: impl Into<Cow<'static, str>>) -> Self {
        Self::new(ErrorKind::Other, detail)
    }
}

/// Persistent lexical scope.
#[derive(Clone, Debug, Default)]
pub struct Scope(Option<Arc<ScopeNode>>);

#[derive(Debug)]
struct ScopeNode {
    name: Symbol,
    value: Value,
    parent: Scope,
}

impl Scope {
    pub fn empty() -> Self {
        Self(None)
    }

    pub fn bind(&self, name: Symbol, value: Value) -> Self {
        Scope(Some(Arc::new(ScopeNode { name, value, parent: self.clone() })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = self.0.as_deref();
        while let Some(node) = cur {
            if &*node.name == name {
                return Some(&node.value);
            }
            cur = node.parent.0.as_deref();
        }
        None
    }
}

/// Strict evaluator with a step budget.
pub struct Interp {
    steps_left: u64,
    depth: usize,
}

impl Interp {
    pub fn new(budget: u64) -> Self {
        Self { steps_left: budget, depth: 0 }
    }

    pub fn steps_left(&self) -> u64 {
        self.steps_left
    }

    /// Charges `n` steps against the budget.
    pub fn tick(&mut self, n: u64) -> Result<(), RuntimeError> {
        if self.steps_left < n {
            self.steps_left = 0;
            return Err(RuntimeError::new(ErrorKind::Timeout, "step budget exhausted"));
        }
        self.steps_left -= n;
        Ok(())
    }

    pub fn eval(&mut self, expr: &Expr, scope: &Scope) -> Result<Value, RuntimeError> {
        self.tick(1)?;
        match expr {
            Expr::Lit(v, _) => Ok(v.clone()),
            Expr::Var(name) => match builtins::lookup(name) {
                Some(b) => Ok(Value::Func(Func::Builtin(b))),
                None => scope
                    .lookup(name)
                    .cloned()
                    .ok_or_else(|| RuntimeError::other(format!("unbound variable {name}"))),
            },
            Expr::LocalRef(name) => scope
                .lookup(name)
                .cloned()
                .ok_or_else(|| RuntimeError::other(format!("unbound local {name}"))),
            Expr::App(f, args) => {
                let fv = self.eval(f, scope)?;
                let mut argv = Vec::with_capacity(args.len());
                for a in args {
                    argv.push(self.eval(a, scope)?);
                }
                self.apply(&fv, argv)
            }
            Expr::Abs(params, body) => Ok(Value::Func(Func::Closure(Arc::new(Closure {
                params: params.iter().map(|(n, _)| n.clone()).collect(),
                body: Arc::clone(body),
                scope: scope.clone(),
            })))),
            Expr::Let(name, def, body) => {
                let v = self.eval(def, scope)?;
                let inner = scope.bind(name.clone(), v);
                self.eval(body, &inner)
            }
        }
    }

    pub fn apply(&mut self, f: &Value, args: Vec<Value>) -> Result<Value, RuntimeError> {
        let Value::Func(func) = f else {
            return Err(RuntimeError::other("application of a non-function"));
        };
        if func.arity() != args.len() {
            return Err(RuntimeError::other("arity mismatch"));
        }
        self.depth += 1;
        if self.depth > MAX_EVAL_DEPTH {
            self.depth -= 1;
            return Err(RuntimeError::other("evaluation nested too deeply"));
        }
        let out = match func {
            Func::Builtin(b) => (b.get().imp)(&args, self),
            Func::Closure(c) => {
                let mut scope = c.scope.clone();
                for (p, v) in c.params.iter().zip(args) {
                    scope = scope.bind(p.clone(), v);
                }
                self.eval(&c.body, &scope)
            }
        };
        self.depth -= 1;
        out
    }

    pub fn call_builtin(&mut self, b: BuiltinRef, args: Vec<Value>) -> Result<Value, RuntimeError> {
        self.apply(&Value::Func(Func::Builtin(b)), args)
    }
}

/// Evaluates a program with its arguments bound by name.
pub fn evaluate(
    ast: &TypedAst,
    args: &[(Symbol, Value)],
    budget: u64,
) -> Result<Value, RuntimeError> {
    let mut scope = Scope::empty();
    for (name, v) in args {
        scope = scope.bind(name.clone(), v.clone());
    }
    Interp::new(budget).eval(&ast.expr, &scope)
}
