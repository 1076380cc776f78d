use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::ast::{Expr, Symbol};
use crate::reader::{datum_to_value, read_one, ReadError};
use crate::runtime::builtins::BuiltinRef;
use crate::runtime::eval::Scope;
use crate::types::{Ctor, Ground, Type};

/// Runtime values. Literals in the AST share this representation.
#[derive(Clone, Debug)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Double(f64),
    Char(char),
    Str(Arc<str>),
    Nil,
    Seq(Arc<Vec<Value>>),
    Func(Func),
}

#[derive(Clone, Debug)]
pub enum Func {
    Builtin(BuiltinRef),
    Closure(Arc<Closure>),
}

#[derive(Debug)]
pub struct Closure {
    pub params: Vec<Symbol>,
    pub body: Arc<Expr>,
    pub scope: Scope,
}

impl Func {
    pub fn arity(&self) -> usize {
        match self {
            Func::Builtin(b) => b.get().arity(),
            Func::Closure(c) => c.params.len(),
        }
    }
}

impl PartialEq for Func {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Func::Builtin(a), Func::Builtin(b)) => a == b,
            (Func::Closure(a), Func::Closure(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Double(a), Value::Double(b)) => a == b,
            (Value::Char(a), Value::Char(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Nil, Value::Nil) => true,
            (Value::Seq(a), Value::Seq(b)) => a == b,
            (Value::Func(a), Value::Func(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn seq(items: Vec<Value>) -> Value {
        Value::Seq(Arc::new(items))
    }

    pub fn ints(items: &[i64]) -> Value {
        Value::seq(items.iter().copied().map(Value::Int).collect())
    }

    pub fn doubles(items: &[f64]) -> Value {
        Value::seq(items.iter().copied().map(Value::Double).collect())
    }

    /// The static type of a literal value, when it is determined by the value alone.
    pub fn literal_type(&self) -> Option<Type> {
        Some(match self {
            Value::Bool(_) => Type::BOOLEAN,
            Value::Int(_) => Type::INT,
            Value::Double(_) => Type::DOUBLE,
            Value::Char(_) => Type::CHAR,
            Value::Str(_) => Type::STRING,
            Value::Nil => Type::NIL,
            Value::Seq(items) => Type::seq(items.first()?.literal_type()?),
            Value::Func(_) => return None,
        })
    }

    /// Whether the value inhabits `ty`. Type variables accept anything.
    pub fn conforms(&self, ty: &Type) -> bool {
        match (self, ty) {
            (_, Type::Var(_)) => true,
            (Value::Bool(_), Type::Ground(Ground::Boolean))
            | (Value::Int(_), Type::Ground(Ground::Int))
            | (Value::Double(_), Type::Ground(Ground::Double))
            | (Value::Char(_), Type::Ground(Ground::Char))
            | (Value::Str(_), Type::Ground(Ground::String))
            | (Value::Nil, Type::Ground(Ground::Nil)) => true,
            (Value::Seq(items), Type::Ctor(Ctor::Sequence, ps)) => {
                items.iter().all(|v| v.conforms(&ps[0]))
            }
            (Value::Seq(items), Type::Ctor(Ctor::Tuple, ps)) => {
                items.len() == ps.len() && items.iter().zip(ps).all(|(v, t)| v.conforms(t))
            }
            (Value::Func(f), Type::Fn(args, _)) => f.arity() == args.len(),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    /// Clojure literal syntax; readable back via `FromStr` for everything but functions.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Double(d) => {
                if d.is_nan() {
                    f.write_str("##NaN")
                } else if d.is_infinite() {
                    f.write_str(if *d > 0.0 { "##Inf" } else { "##-Inf" })
                } else {
                    write!(f, "{d:?}")
                }
            }
            Value::Char(c) => match c {
                ' ' => f.write_str("\\space"),
                '\n' => f.write_str("\\newline"),
                '\t' => f.write_str("\\tab"),
                '\r' => f.write_str("\\return"),
                c if c.is_control() || c.is_whitespace() => write!(f, "\\u{:04x}", *c as u32),
                c => write!(f, "\\{c}"),
            },
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        '\r' => f.write_str("\\r")?,
                        c if c.is_control() => write!(f, "\\u{:04x}", c as u32)?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Value::Nil => f.write_str("nil"),
            Value::Seq(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Func(Func::Builtin(b)) => f.write_str(b.get().name),
            Value::Func(Func::Closure(_)) => f.write_str("#<fn>"),
        }
    }
}

impl FromStr for Value {
    type Err = ReadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let d = read_one(s)?;
        datum_to_value(&d).ok_or_else(|| ReadError {
            offset: 0,
            message: format!("not a literal value: {s:?}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_text_round_trips() {
        let vals = [
            Value::Int(-3),
            Value::Double(1.0),
            Value::Double(-0.25),
            Value::Double(1e-7),
            Value::Double(f64::INFINITY),
            Value::Bool(true),
            Value::Nil,
            Value::Char(' '),
            Value::Char('\n'),
            Value::Char('x'),
            Value::Char('\u{1}'),
            Value::str("a \"quoted\"\nline\\"),
            Value::ints(&[1, -2, 3]),
            Value::seq(vec![Value::str("a"), Value::str("")]),
        ];
        for v in vals {
            let text = v.to_string();
            assert_eq!(text.parse::<Value>().unwrap(), v, "{text}");
        }
        let nan: Value = "##NaN".parse().unwrap();
        assert!(matches!(nan, Value::Double(d) if d.is_nan()));
    }

    #[test]
    fn conformance() {
        assert!(Value::ints(&[1, 2]).conforms(&Type::seq(Type::INT)));
        assert!(!Value::ints(&[1, 2]).conforms(&Type::seq(Type::BOOLEAN)));
        assert!(Value::seq(vec![]).conforms(&Type::seq(Type::BOOLEAN)));
        assert!(Value::Int(1).conforms(&Type::var("a")));
        assert!(!Value::Int(1).conforms(&Type::DOUBLE));
    }
}
