//! The builtin function library available to evolved programs.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, LazyLock};

use crate::runtime::eval::{ErrorKind, Interp, RuntimeError};
use crate::runtime::value::Value;
use crate::types::{Scheme, Type};

pub type BuiltinFn = fn(&[Value], &mut Interp) -> Result<Value, RuntimeError>;

pub struct Builtin {
    pub name: &'static str,
    pub scheme: Scheme,
    pub doc: &'static str,
    pub imp: BuiltinFn,
}

impl Builtin {
    pub fn arity(&self) -> usize {
        match self.scheme.body() {
            Type::Fn(args, _) => args.len(),
            _ => 0,
        }
    }
}

impl std::fmt::Debug for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} : {}", self.name, self.scheme)
    }
}

/// Index of a builtin in the static library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BuiltinRef(u16);

impl BuiltinRef {
    pub fn get(self) -> &'static Builtin {
        &LIBRARY[self.0 as usize]
    }
}

static LIBRARY: LazyLock<Vec<Builtin>> = LazyLock::new(|| {
    TABLE
        .iter()
        .map(|(name, scheme, doc, imp)| Builtin {
            name,
            scheme: scheme
                .parse()
                .unwrap_or_else(|e| panic!("bad scheme for builtin {name}: {e}")),
            doc,
            imp: *imp,
        })
        .collect()
});

static INDEX: LazyLock<HashMap<&'static str, BuiltinRef>> = LazyLock::new(|| {
    LIBRARY
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name, BuiltinRef(i as u16)))
        .collect()
});

/// The full curated library.
pub fn library() -> &'static [Builtin] {
    &LIBRARY
}

pub fn lookup(name: &str) -> Option<BuiltinRef> {
    INDEX.get(name).copied()
}

/// Builtins whose schemes mention only ground types and constructors that
/// appear in `problem_types`. Fully polymorphic builtins are always kept.
pub fn builtin_library(problem_types: &[Type]) -> Vec<&'static Builtin> {
    let relevant: BTreeSet<&str> = problem_types.iter().flat_map(|t| t.type_names()).collect();
    LIBRARY
        .iter()
        .filter(|b| b.scheme.body().type_names().is_subset(&relevant))
        .collect()
}

/// Markdown reference page for the library.
pub fn reference_page() -> String {
    let mut out = String::from("| Name | Type | Semantics |\n|---|---|---|\n");
    for b in library() {
        out.push_str(&format!("| `{}` | `{}` | {} |\n", b.name, b.scheme, b.doc));
    }
    out
}

type Entry = (&'static str, &'static str, &'static str, BuiltinFn);

const TABLE: &[Entry] = &[
    // Int arithmetic
    ("+", "(Int, Int) -> Int", "Integer addition.", |a, _| int2(a, i64::checked_add)),
    ("-", "(Int, Int) -> Int", "Integer subtraction.", |a, _| int2(a, i64::checked_sub)),
    ("*", "(Int, Int) -> Int", "Integer multiplication.", |a, _| int2(a, i64::checked_mul)),
    ("quot", "(Int, Int) -> Int", "Truncating division; 0 when the divisor is 0.", |a, _| {
        int2(a, |x, y| if y == 0 { Some(0) } else { x.checked_div(y) })
    }),
    ("mod", "(Int, Int) -> Int", "Modulus with the sign of the divisor; 0 when the divisor is 0.", |a, _| {
        int2(a, |x, y| {
            if y == 0 {
                return Some(0);
            }
            let r = x.checked_rem(y)?;
            Some(if r != 0 && ((r < 0) != (y < 0)) { r + y } else { r })
        })
    }),
    ("inc", "Int -> Int", "Adds one.", |a, _| int1(a, |x| x.checked_add(1))),
    ("dec", "Int -> Int", "Subtracts one.", |a, _| int1(a, |x| x.checked_sub(1))),
    ("abs", "Int -> Int", "Absolute value.", |a, _| int1(a, i64::checked_abs)),
    ("min", "(Int, Int) -> Int", "Smaller of two integers.", |a, _| int2(a, |x, y| Some(x.min(y)))),
    ("max", "(Int, Int) -> Int", "Larger of two integers.", |a, _| int2(a, |x, y| Some(x.max(y)))),
    // Double arithmetic
    ("double-add", "(Double, Double) -> Double", "Floating point addition.", |a, _| dbl2(a, |x, y| x + y)),
    ("double-sub", "(Double, Double) -> Double", "Floating point subtraction.", |a, _| dbl2(a, |x, y| x - y)),
    ("double-mult", "(Double, Double) -> Double", "Floating point multiplication.", |a, _| dbl2(a, |x, y| x * y)),
    ("safe-div", "(Double, Double) -> Double", "Floating point division; 0.0 when the divisor is 0.", |a, _| {
        dbl2(a, |x, y| if y == 0.0 { 0.0 } else { x / y })
    }),
    ("double-min", "(Double, Double) -> Double", "Smaller of two doubles.", |a, _| dbl2(a, f64::min)),
    ("double-max", "(Double, Double) -> Double", "Larger of two doubles.", |a, _| dbl2(a, f64::max)),
    // Casts
    ("float", "Int -> Double", "Converts an integer to a double.", |a, _| Ok(Value::Double(int(&a[0])? as f64))),
    ("int", "Double -> Int", "Truncates a double to an integer.", |a, _| {
        let d = dbl(&a[0])?;
        if !d.is_finite() || d.abs() >= 9.2e18 {
            return Err(RuntimeError::overflow("double out of integer range"));
        }
        Ok(Value::Int(d.trunc() as i64))
    }),
    // Comparisons
    ("<", "(Int, Int) -> Boolean", "Integer less-than.", |a, _| Ok(Value::Bool(int(&a[0])? < int(&a[1])?))),
    ("<=", "(Int, Int) -> Boolean", "Integer less-or-equal.", |a, _| Ok(Value::Bool(int(&a[0])? <= int(&a[1])?))),
    (">", "(Int, Int) -> Boolean", "Integer greater-than.", |a, _| Ok(Value::Bool(int(&a[0])? > int(&a[1])?))),
    (">=", "(Int, Int) -> Boolean", "Integer greater-or-equal.", |a, _| Ok(Value::Bool(int(&a[0])? >= int(&a[1])?))),
    ("double-<", "(Double, Double) -> Boolean", "Double less-than.", |a, _| Ok(Value::Bool(dbl(&a[0])? < dbl(&a[1])?))),
    ("double-<=", "(Double, Double) -> Boolean", "Double less-or-equal.", |a, _| Ok(Value::Bool(dbl(&a[0])? <= dbl(&a[1])?))),
    ("double->", "(Double, Double) -> Boolean", "Double greater-than.", |a, _| Ok(Value::Bool(dbl(&a[0])? > dbl(&a[1])?))),
    ("double->=", "(Double, Double) -> Boolean", "Double greater-or-equal.", |a, _| Ok(Value::Bool(dbl(&a[0])? >= dbl(&a[1])?))),
    ("=", "forall a. (a, a) -> Boolean", "Structural equality.", |a, i| {
        i.tick(size_of(&a[0]))?;
        Ok(Value::Bool(a[0] == a[1]))
    }),
    ("not=", "forall a. (a, a) -> Boolean", "Structural inequality.", |a, i| {
        i.tick(size_of(&a[0]))?;
        Ok(Value::Bool(a[0] != a[1]))
    }),
    // Boolean logic
    ("and", "(Boolean, Boolean) -> Boolean", "Logical and of two evaluated booleans.", |a, _| {
        Ok(Value::Bool(boolean(&a[0])? && boolean(&a[1])?))
    }),
    ("or", "(Boolean, Boolean) -> Boolean", "Logical or of two evaluated booleans.", |a, _| {
        Ok(Value::Bool(boolean(&a[0])? || boolean(&a[1])?))
    }),
    ("not", "Boolean -> Boolean", "Logical negation.", |a, _| Ok(Value::Bool(!boolean(&a[0])?))),
    ("vector", "forall a b. (a, b) -> Tuple[a, b]", "Pairs two values as a two-element vector.", |a, _| {
        Ok(Value::seq(a.to_vec()))
    }),
    ("if", "forall a. (Boolean, a, a) -> a", "Selects the second argument when the condition holds, else the third. Both branches are evaluated.", |a, _| {
        Ok(if boolean(&a[0])? { a[1].clone() } else { a[2].clone() })
    }),
    // Characters
    ("char-digit?", "Char -> Boolean", "True for ASCII digits.", |a, _| Ok(Value::Bool(chr(&a[0])?.is_ascii_digit()))),
    ("char-letter?", "Char -> Boolean", "True for alphabetic characters.", |a, _| Ok(Value::Bool(chr(&a[0])?.is_alphabetic()))),
    ("char-whitespace?", "Char -> Boolean", "True for whitespace.", |a, _| Ok(Value::Bool(chr(&a[0])?.is_whitespace()))),
    ("char->int", "Char -> Int", "Code point of a character.", |a, _| Ok(Value::Int(chr(&a[0])? as i64))),
    ("int->char", "Int -> Char", "Character with code point n mod 128.", |a, _| {
        let code = int(&a[0])?.rem_euclid(128) as u8;
        Ok(Value::Char(code as char))
    }),
    ("char->str", "Char -> String", "One-character string.", |a, _| Ok(Value::str(&chr(&a[0])?.to_string()))),
    // Strings
    ("length", "String -> Int", "Number of characters in a string.", |a, _| Ok(Value::Int(string(&a[0])?.chars().count() as i64))),
    ("str-concat", "(String, String) -> String", "Concatenates two strings.", |a, i| {
        let (x, y) = (string(&a[0])?, string(&a[1])?);
        i.tick((x.len() + y.len()) as u64)?;
        Ok(Value::str(&format!("{x}{y}")))
    }),
    ("str-conj", "(String, Char) -> String", "Appends a character.", |a, i| {
        let mut s = string(&a[0])?.to_string();
        i.tick(s.len() as u64)?;
        s.push(chr(&a[1])?);
        Ok(Value::str(&s))
    }),
    ("str-first", "String -> Char", "First character; fails on the empty string.", |a, _| {
        string(&a[0])?.chars().next().map(Value::Char).ok_or_else(|| RuntimeError::index("first of empty string"))
    }),
    ("str-last", "String -> Char", "Last character; fails on the empty string.", |a, _| {
        string(&a[0])?.chars().next_back().map(Value::Char).ok_or_else(|| RuntimeError::index("last of empty string"))
    }),
    ("str-rest", "String -> String", "All but the first character.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        let mut cs = s.chars();
        cs.next();
        Ok(Value::str(cs.as_str()))
    }),
    ("str-butlast", "String -> String", "All but the last character.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        let mut cs = s.chars();
        cs.next_back();
        Ok(Value::str(cs.as_str()))
    }),
    ("str-reverse", "String -> String", "Reverses a string.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::str(&s.chars().rev().collect::<String>()))
    }),
    ("str-nth", "(String, Int) -> Char", "Character at index n mod length; fails on the empty string.", |a, _| {
        let s: Vec<char> = string(&a[0])?.chars().collect();
        if s.is_empty() {
            return Err(RuntimeError::index("nth of empty string"));
        }
        let idx = int(&a[1])?.rem_euclid(s.len() as i64) as usize;
        Ok(Value::Char(s[idx]))
    }),
    ("str-index-of", "(String, Char) -> Int", "Index of the first occurrence of a character, or -1.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        let c = chr(&a[1])?;
        Ok(Value::Int(s.chars().position(|x| x == c).map_or(-1, |p| p as i64)))
    }),
    ("str-contains?", "(String, Char) -> Boolean", "Whether the string contains a character.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::Bool(s.contains(chr(&a[1])?)))
    }),
    ("str-occurrences", "(String, Char) -> Int", "Number of occurrences of a character.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        let c = chr(&a[1])?;
        Ok(Value::Int(s.chars().filter(|&x| x == c).count() as i64))
    }),
    ("str-replace", "(String, Char, Char) -> String", "Replaces every occurrence of the first character with the second.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        let (from, to) = (chr(&a[1])?, chr(&a[2])?);
        Ok(Value::str(&s.chars().map(|c| if c == from { to } else { c }).collect::<String>()))
    }),
    ("str-remove", "(String, Char) -> String", "Removes every occurrence of a character.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        let c = chr(&a[1])?;
        Ok(Value::str(&s.chars().filter(|&x| x != c).collect::<String>()))
    }),
    ("str-split", "String -> Sequence[String]", "Splits on runs of whitespace.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::seq(s.split_whitespace().map(Value::str).collect()))
    }),
    ("str-join", "(String, Sequence[String]) -> String", "Joins strings with a separator.", |a, i| {
        let sep = string(&a[0])?;
        let parts = seq(&a[1])?;
        let mut out = String::new();
        for (k, p) in parts.iter().enumerate() {
            if k > 0 {
                out.push_str(sep);
            }
            out.push_str(string(p)?);
        }
        i.tick(out.len() as u64 + 1)?;
        Ok(Value::str(&out))
    }),
    ("str->chars", "String -> Sequence[Char]", "Characters of a string.", |a, i| {
        let s = string(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::seq(s.chars().map(Value::Char).collect()))
    }),
    ("chars->str", "Sequence[Char] -> String", "String from a sequence of characters.", |a, i| {
        let cs = seq(&a[0])?;
        i.tick(cs.len() as u64)?;
        Ok(Value::str(&cs.iter().map(chr).collect::<Result<String, _>>()?))
    }),
    ("str-empty?", "String -> Boolean", "Whether the string is empty.", |a, _| Ok(Value::Bool(string(&a[0])?.is_empty()))),
    ("int->str", "Int -> String", "Decimal rendering of an integer.", |a, _| Ok(Value::str(&int(&a[0])?.to_string()))),
    ("double->str", "Double -> String", "Rendering of a double.", |a, _| Ok(Value::str(&Value::Double(dbl(&a[0])?).to_string()))),
    ("str-map", "((Char -> Char), String) -> String", "Applies a function to every character.", |a, i| {
        let s = string(&a[1])?.to_string();
        let mut out = String::with_capacity(s.len());
        for c in s.chars() {
            out.push(chr(&i.apply(&a[0], vec![Value::Char(c)])?)?);
        }
        Ok(Value::str(&out))
    }),
    ("str-filter", "((Char -> Boolean), String) -> String", "Keeps characters satisfying a predicate.", |a, i| {
        let s = string(&a[1])?.to_string();
        let mut out = String::with_capacity(s.len());
        for c in s.chars() {
            if boolean(&i.apply(&a[0], vec![Value::Char(c)])?)? {
                out.push(c);
            }
        }
        Ok(Value::str(&out))
    }),
    // Sequences
    ("count", "forall a. Sequence[a] -> Int", "Number of elements.", |a, _| Ok(Value::Int(seq(&a[0])?.len() as i64))),
    ("first", "forall a. Sequence[a] -> a", "First element; fails on an empty sequence.", |a, _| {
        seq(&a[0])?.first().cloned().ok_or_else(|| RuntimeError::index("first of empty sequence"))
    }),
    ("last", "forall a. Sequence[a] -> a", "Last element; fails on an empty sequence.", |a, _| {
        seq(&a[0])?.last().cloned().ok_or_else(|| RuntimeError::index("last of empty sequence"))
    }),
    ("rest", "forall a. Sequence[a] -> Sequence[a]", "All but the first element.", |a, i| {
        let s = seq(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::seq(s.iter().skip(1).cloned().collect()))
    }),
    ("butlast", "forall a. Sequence[a] -> Sequence[a]", "All but the last element.", |a, i| {
        let s = seq(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::seq(s[..s.len().saturating_sub(1)].to_vec()))
    }),
    ("reverse", "forall a. Sequence[a] -> Sequence[a]", "Reverses a sequence.", |a, i| {
        let s = seq(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::seq(s.iter().rev().cloned().collect()))
    }),
    ("conj", "forall a. (Sequence[a], a) -> Sequence[a]", "Appends an element to the end.", |a, i| {
        let s = seq(&a[0])?;
        i.tick(s.len() as u64 + 1)?;
        let mut v = s.to_vec();
        v.push(a[1].clone());
        Ok(Value::seq(v))
    }),
    ("concat", "forall a. (Sequence[a], Sequence[a]) -> Sequence[a]", "Concatenates two sequences.", |a, i| {
        let (x, y) = (seq(&a[0])?, seq(&a[1])?);
        i.tick((x.len() + y.len()) as u64)?;
        Ok(Value::seq(x.iter().chain(y.iter()).cloned().collect()))
    }),
    ("take", "forall a. (Sequence[a], Int) -> Sequence[a]", "First n elements (clamped).", |a, i| {
        let s = seq(&a[0])?;
        let n = int(&a[1])?.clamp(0, s.len() as i64) as usize;
        i.tick(n as u64)?;
        Ok(Value::seq(s[..n].to_vec()))
    }),
    ("nth", "forall a. (Sequence[a], Int) -> a", "Element at an index; fails when out of bounds.", |a, _| {
        let s = seq(&a[0])?;
        let n = int(&a[1])?;
        usize::try_from(n)
            .ok()
            .and_then(|n| s.get(n))
            .cloned()
            .ok_or_else(|| RuntimeError::index(format!("index {n} out of bounds for length {}", s.len())))
    }),
    ("safe-nth", "forall a. (Sequence[a], Int) -> a", "Element at index n mod length; fails on an empty sequence.", |a, _| {
        let s = seq(&a[0])?;
        if s.is_empty() {
            return Err(RuntimeError::index("nth of empty sequence"));
        }
        Ok(s[int(&a[1])?.rem_euclid(s.len() as i64) as usize].clone())
    }),
    ("index-of", "forall a. (Sequence[a], a) -> Int", "Index of the first equal element, or -1.", |a, i| {
        let s = seq(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::Int(s.iter().position(|x| *x == a[1]).map_or(-1, |p| p as i64)))
    }),
    ("contains?", "forall a. (Sequence[a], a) -> Boolean", "Whether an equal element is present.", |a, i| {
        let s = seq(&a[0])?;
        i.tick(s.len() as u64)?;
        Ok(Value::Bool(s.contains(&a[1])))
    }),
    ("empty?", "forall a. Sequence[a] -> Boolean", "Whether the sequence is empty.", |a, _| Ok(Value::Bool(seq(&a[0])?.is_empty()))),
    ("range", "(Int, Int) -> Sequence[Int]", "Integers from start (inclusive) to end (exclusive).", |a, i| {
        range(int(&a[0])?, int(&a[1])?, 1, i)
    }),
    ("range-step", "(Int, Int, Int) -> Sequence[Int]", "Integers from start to end (exclusive) by a positive step; empty for a non-positive step.", |a, i| {
        range(int(&a[0])?, int(&a[1])?, int(&a[2])?, i)
    }),
    // Higher order
    ("map", "forall a b. ((a -> b), Sequence[a]) -> Sequence[b]", "Applies a function to every element.", |a, i| {
        let s = seq(&a[1])?.clone();
        let mut out = Vec::with_capacity(s.len());
        for x in s.iter() {
            i.tick(1)?;
            out.push(i.apply(&a[0], vec![x.clone()])?);
        }
        Ok(Value::seq(out))
    }),
    ("map2", "forall a b c. ((a, b) -> c, Sequence[a], Sequence[b]) -> Sequence[c]", "Applies a binary function pairwise, stopping at the shorter sequence.", |a, i| {
        let (x, y) = (seq(&a[1])?.clone(), seq(&a[2])?.clone());
        let mut out = Vec::with_capacity(x.len().min(y.len()));
        for (p, q) in x.iter().zip(y.iter()) {
            i.tick(1)?;
            out.push(i.apply(&a[0], vec![p.clone(), q.clone()])?);
        }
        Ok(Value::seq(out))
    }),
    ("filter", "forall a. ((a -> Boolean), Sequence[a]) -> Sequence[a]", "Keeps elements satisfying a predicate.", |a, i| {
        let s = seq(&a[1])?.clone();
        let mut out = Vec::new();
        for x in s.iter() {
            i.tick(1)?;
            if boolean(&i.apply(&a[0], vec![x.clone()])?)? {
                out.push(x.clone());
            }
        }
        Ok(Value::seq(out))
    }),
    ("reduce", "forall a. ((a, a) -> a, Sequence[a]) -> a", "Left fold seeded with the first element; fails on an empty sequence.", |a, i| {
        let s = seq(&a[1])?.clone();
        let mut it = s.iter();
        let mut acc = it.next().cloned().ok_or_else(|| RuntimeError::index("reduce of empty sequence"))?;
        for x in it {
            i.tick(1)?;
            acc = i.apply(&a[0], vec![acc, x.clone()])?;
        }
        Ok(acc)
    }),
    ("fold", "forall a b. ((b, a) -> b, b, Sequence[a]) -> b", "Left fold from an initial value.", |a, i| {
        let s = seq(&a[2])?.clone();
        let mut acc = a[1].clone();
        for x in s.iter() {
            i.tick(1)?;
            acc = i.apply(&a[0], vec![acc, x.clone()])?;
        }
        Ok(acc)
    }),
];

fn type_confusion(expected: &str) -> RuntimeError {
    RuntimeError::new(ErrorKind::Other, format!("expected {expected}"))
}

fn int(v: &Value) -> Result<i64, RuntimeError> {
    match v {
        Value::Int(i) => Ok(*i),
        _ => Err(type_confusion("Int")),
    }
}

fn dbl(v: &Value) -> Result<f64, RuntimeError> {
    match v {
        Value::Double(d) => Ok(*d),
        _ => Err(type_confusion("Double")),
    }
}

fn boolean(v: &Value) -> Result<bool, RuntimeError> {
    match v {
        Value::Bool(b) => Ok(*b),
        _ => Err(type_confusion("Boolean")),
    }
}

fn chr(v: &Value) -> Result<char, RuntimeError> {
    match v {
        Value::Char(c) => Ok(*c),
        _ => Err(type_confusion("Char")),
    }
}

fn string(v: &Value) -> Result<&str, RuntimeError> {
    match v {
        Value::Str(s) => Ok(s),
        _ => Err(type_confusion("String")),
    }
}

fn seq(v: &Value) -> Result<&Arc<Vec<Value>>, RuntimeError> {
    match v {
        Value::Seq(s) => Ok(s),
        _ => Err(type_confusion("Sequence")),
    }
}

fn size_of(v: &Value) -> u64 {
    match v {
        Value::Seq(s) => s.len() as u64,
        Value::Str(s) => s.len() as u64,
        _ => 0,
    }
}

fn int1(a: &[Value], f: fn(i64) -> Option<i64>) -> Result<Value, RuntimeError> {
    f(int(&a[0])?).map(Value::Int).ok_or_else(|| RuntimeError::overflow("integer overflow"))
}

fn int2(a: &[Value], f: impl Fn(i64, i64) -> Option<i64>) -> Result<Value, RuntimeError> {
    f(int(&a[0])?, int(&a[1])?)
        .map(Value::Int)
        .ok_or_else(|| RuntimeError::overflow("integer overflow"))
}

fn dbl2(a: &[Value], f: fn(f64, f64) -> f64) -> Result<Value, RuntimeError> {
    Ok(Value::Double(f(dbl(&a[0])?, dbl(&a[1])?)))
}

fn range(start: i64, end: i64, step: i64, i: &mut Interp) -> Result<Value, RuntimeError> {
    if step <= 0 || end <= start {
        return Ok(Value::seq(Vec::new()));
    }
    let len = ((end as i128 - start as i128 + step as i128 - 1) / step as i128) as u128;
    if len > i.steps_left() as u128 {
        i.tick(u64::MAX)?;
    }
    i.tick(len as u64)?;
    let out = (0..len as i64).map(|k| Value::Int(start + k * step)).collect();
    Ok(Value::seq(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::eval::DEFAULT_STEP_BUDGET;

    fn call(name: &str, args: Vec<Value>) -> Result<Value, RuntimeError> {
        let b = lookup(name).unwrap_or_else(|| panic!("no builtin {name}"));
        Interp::new(DEFAULT_STEP_BUDGET).call_builtin(b, args)
    }

    #[test]
    fn every_scheme_parses_and_names_are_unique() {
        let names: BTreeSet<_> = library().iter().map(|b| b.name).collect();
        assert_eq!(names.len(), library().len());
        for b in library() {
            assert!(b.scheme.body().is_fn(), "{} is not a function", b.name);
        }
    }

    #[test]
    fn required_functions_exist() {
        for name in [
            "map", "max", "count", "reduce", "+", "float", "min", "butlast", "index-of", "reverse",
            "safe-div", "filter", "fold", "if", "map2", "and", "or", "not", "range", "empty?",
        ] {
            assert!(lookup(name).is_some(), "missing {name}");
        }
    }

    #[test]
    fn map_scheme_matches_textbook() {
        let map = lookup("map").unwrap().get();
        assert_eq!(map.scheme.to_string(), "forall a b. ((a -> b), Sequence[a]) -> Sequence[b]");
        assert_eq!(lookup("max").unwrap().get().scheme.to_string(), "(Int, Int) -> Int");
    }

    #[test]
    fn integer_problem_library_has_no_strings() {
        let lib = builtin_library(&[Type::INT, Type::seq(Type::INT)]);
        assert!(lib.iter().all(|b| !b.scheme.body().type_names().contains("String")));
        assert!(lib.iter().any(|b| b.name == "max"));
        assert!(lib.iter().any(|b| b.name == "map"));
        assert!(!lib.iter().any(|b| b.name == "="), "= returns Boolean");
        assert!(!lib.iter().any(|b| b.name == "if"), "if mentions Boolean");
    }

    #[test]
    fn arithmetic_edges() {
        assert_eq!(call("quot", vec![Value::Int(7), Value::Int(0)]).unwrap(), Value::Int(0));
        assert_eq!(call("mod", vec![Value::Int(-7), Value::Int(3)]).unwrap(), Value::Int(2));
        assert_eq!(call("mod", vec![Value::Int(7), Value::Int(-3)]).unwrap(), Value::Int(-2));
        assert_eq!(
            call("safe-div", vec![Value::Double(3.0), Value::Double(0.0)]).unwrap(),
            Value::Double(0.0)
        );
        let err = call("+", vec![Value::Int(i64::MAX), Value::Int(1)]).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Overflow);
        let err = call("int", vec![Value::Double(f64::NAN)]).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Overflow);
    }

    #[test]
    fn sequence_edges() {
        let empty = Value::seq(vec![]);
        assert_eq!(call("nth", vec![empty.clone(), Value::Int(0)]).unwrap_err().kind, ErrorKind::IndexOutOfBounds);
        assert_eq!(call("first", vec![empty.clone()]).unwrap_err().kind, ErrorKind::IndexOutOfBounds);
        assert_eq!(call("butlast", vec![empty.clone()]).unwrap(), empty);
        assert_eq!(
            call("safe-nth", vec![Value::ints(&[1, 2, 3]), Value::Int(-1)]).unwrap(),
            Value::Int(3)
        );
        assert_eq!(
            call("index-of", vec![Value::ints(&[4, 0, 0]), Value::Int(0)]).unwrap(),
            Value::Int(1)
        );
        assert_eq!(call("range-step", vec![Value::Int(0), Value::Int(7), Value::Int(3)]).unwrap(), Value::ints(&[0, 3, 6]));
        assert_eq!(call("range-step", vec![Value::Int(0), Value::Int(7), Value::Int(0)]).unwrap(), empty);
    }

    #[test]
    fn huge_range_times_out() {
        let err = call("range", vec![Value::Int(i64::MIN), Value::Int(i64::MAX)]).unwrap_err();
        assert_eq!(err.kind, ErrorKind::Timeout);
    }

    #[test]
    fn higher_order_builtins() {
        let inc = Value::Func(crate::runtime::value::Func::Builtin(lookup("inc").unwrap()));
        let plus = Value::Func(crate::runtime::value::Func::Builtin(lookup("+").unwrap()));
        assert_eq!(call("map", vec![inc, Value::ints(&[1, 2])]).unwrap(), Value::ints(&[2, 3]));
        assert_eq!(
            call("map2", vec![plus.clone(), Value::ints(&[1, 2, 3]), Value::ints(&[10, 20])]).unwrap(),
            Value::ints(&[11, 22])
        );
        assert_eq!(call("reduce", vec![plus.clone(), Value::ints(&[1, 2, 3])]).unwrap(), Value::Int(6));
        assert_eq!(call("fold", vec![plus, Value::Int(10), Value::ints(&[])]).unwrap(), Value::Int(10));
    }

    #[test]
    fn reference_page_lists_everything() {
        let page = reference_page();
        assert_eq!(page.lines().count(), library().len() + 2);
    }
}
