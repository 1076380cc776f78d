//! Hindley-Milner types, schemes, substitutions and first-order unification.
//!
//! Types are rendered and parsed in a compact textual form:
//!
//! ```text
//! Int
//! Sequence[Int]
//! (Int, Int) -> Int
//! forall a b. ((a -> b), Sequence[a]) -> Sequence[b]
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Atomic, non-parameterized types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ground {
    Boolean,
    Int,
    Double,
    Char,
    String,
    Nil,
}

impl Ground {
    pub const ALL: [Ground; 6] = [
        Ground::Boolean,
        Ground::Int,
        Ground::Double,
        Ground::Char,
        Ground::String,
        Ground::Nil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ground::Boolean => "Boolean",
            Ground::Int => "Int",
            Ground::Double => "Double",
            Ground::Char => "Char",
            Ground::String => "String",
            Ground::Nil => "Nil",
        }
    }

    pub fn from_name(name: &str) -> Option<Ground> {
        Ground::ALL.into_iter().find(|g| g.name() == name)
    }
}

/// Collection type constructors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ctor {
    Sequence,
    Set,
    Map,
    /// Fixed pair; only used for problems with two outputs.
    Tuple,
}

impl Ctor {
    pub const ALL: [Ctor; 4] = [Ctor::Sequence, Ctor::Set, Ctor::Map, Ctor::Tuple];

    pub fn name(self) -> &'static str {
        match self {
            Ctor::Sequence => "Sequence",
            Ctor::Set => "Set",
            Ctor::Map => "Map",
            Ctor::Tuple => "Tuple",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Ctor::Sequence | Ctor::Set => 1,
            Ctor::Map | Ctor::Tuple => 2,
        }
    }

    pub fn from_name(name: &str) -> Option<Ctor> {
        Ctor::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// A type variable. Quantified variables written in scheme text are `Named`;
/// variables minted during a compilation episode are `Fresh` and render as `t<N>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeVar {
    Named(Arc<str>),
    Fresh(u32),
}

impl TypeVar {
    pub fn named(name: &str) -> TypeVar {
        TypeVar::Named(Arc::from(name))
    }
}

impl fmt::Display for TypeVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeVar::Named(n) => f.write_str(n),
            TypeVar::Fresh(id) => write!(f, "t{id}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Ground(Ground),
    Ctor(Ctor, Vec<Type>),
    Fn(Vec<Type>, Box<Type>),
    Var(TypeVar),
}

impl Type {
    pub const BOOLEAN: Type = Type::Ground(Ground::Boolean);
    pub const INT: Type = Type::Ground(Ground::Int);
    pub const DOUBLE: Type = Type::Ground(Ground::Double);
    pub const CHAR: Type = Type::Ground(Ground::Char);
    pub const STRING: Type = Type::Ground(Ground::String);
    pub const NIL: Type = Type::Ground(Ground::Nil);

    pub fn seq(elem: Type) -> Type {
        Type::Ctor(Ctor::Sequence, vec![elem])
    }

    pub fn tuple(a: Type, b: Type) -> Type {
        Type::Ctor(Ctor::Tuple, vec![a, b])
    }

    pub fn func(args: Vec<Type>, ret: Type) -> Type {
        Type::Fn(args, Box::new(ret))
    }

    pub fn var(name: &str) -> Type {
        Type::Var(TypeVar::named(name))
    }

    pub fn is_fn(&self) -> bool {
        matches!(self, Type::Fn(..))
    }

    /// True when no type variable occurs anywhere in the type.
    pub fn is_ground_like(&self) -> bool {
        match self {
            Type::Ground(_) => true,
            Type::Ctor(_, ps) => ps.iter().all(Type::is_ground_like),
            Type::Fn(args, ret) => args.iter().all(Type::is_ground_like) && ret.is_ground_like(),
            Type::Var(_) => false,
        }
    }

    /// Checks constructor arities throughout the type.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Type::Ground(_) | Type::Var(_) => true,
            Type::Ctor(c, ps) => ps.len() == c.arity() && ps.iter().all(Type::is_well_formed),
            Type::Fn(args, ret) => args.iter().all(Type::is_well_formed) && ret.is_well_formed(),
        }
    }

    pub fn occurs(&self, v: &TypeVar) -> bool {
        match self {
            Type::Ground(_) => false,
            Type::Var(w) => w == v,
            Type::Ctor(_, ps) => ps.iter().any(|p| p.occurs(v)),
            Type::Fn(args, ret) => args.iter().any(|a| a.occurs(v)) || ret.occurs(v),
        }
    }

    /// Free type variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<TypeVar> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<TypeVar>) {
        match self {
            Type::Ground(_) => {}
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Type::Ctor(_, ps) => ps.iter().for_each(|p| p.collect_vars(out)),
            Type::Fn(args, ret) => {
                args.iter().for_each(|a| a.collect_vars(out));
                ret.collect_vars(out);
            }
        }
    }

    /// Names of every ground type and constructor mentioned by the type.
    pub fn type_names(&self) -> BTreeSet<&'static str> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<&'static str>) {
        match self {
            Type::Ground(g) => {
                out.insert(g.name());
            }
            Type::Var(_) => {}
            Type::Ctor(c, ps) => {
                out.insert(c.name());
                ps.iter().for_each(|p| p.collect_names(out));
            }
            Type::Fn(args, ret) => {
                args.iter().for_each(|a| a.collect_names(out));
                ret.collect_names(out);
            }
        }
    }

    /// Structural equality up to a consistent, bijective renaming of type variables.
    pub fn alpha_eq(&self, other: &Type) -> bool {
        let mut fwd = HashMap::new();
        let mut bwd = HashMap::new();
        alpha_eq_in(self, other, &mut fwd, &mut bwd)
    }
}

fn alpha_eq_in<'a>(
    a: &'a Type,
    b: &'a Type,
    fwd: &mut HashMap<&'a TypeVar, &'a TypeVar>,
    bwd: &mut HashMap<&'a TypeVar, &'a TypeVar>,
) -> bool {
    match (a, b) {
        (Type::Ground(x), Type::Ground(y)) => x == y,
        (Type::Var(x), Type::Var(y)) => {
            let f = *fwd.entry(x).or_insert(y);
            let g = *bwd.entry(y).or_insert(x);
            f == y && g == x
        }
        (Type::Ctor(c, ps), Type::Ctor(d, qs)) => {
            c == d
                && ps.len() == qs.len()
                && ps.iter().zip(qs).all(|(p, q)| alpha_eq_in(p, q, fwd, bwd))
        }
        (Type::Fn(xa, xr), Type::Fn(ya, yr)) => {
            xa.len() == ya.len()
                && xa.iter().zip(ya).all(|(p, q)| alpha_eq_in(p, q, fwd, bwd))
                && alpha_eq_in(xr, yr, fwd, bwd)
        }
        _ => false,
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Ground(g) => f.write_str(g.name()),
            Type::Var(v) => write!(f, "{v}"),
            Type::Ctor(c, ps) => {
                write!(f, "{}[", c.name())?;
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("]")
            }
            Type::Fn(args, ret) => {
                if let [only] = args.as_slice() {
                    write_fn_arg(f, only)?;
                } else {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write_fn_arg(f, a)?;
                    }
                    f.write_str(")")?;
                }
                write!(f, " -> {ret}")
            }
        }
    }
}

fn write_fn_arg(f: &mut fmt::Formatter<'_>, arg: &Type) -> fmt::Result {
    if arg.is_fn() {
        write!(f, "({arg})")
    } else {
        write!(f, "{arg}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot unify {left} with {right}")]
    Mismatch { left: Type, right: Type },
    #[error("arity mismatch between {left} and {right}")]
    Arity { left: Type, right: Type },
    #[error("occurs check: {var} occurs in {ty}")]
    Occurs { var: TypeVar, ty: Type },
}

/// A normalized (idempotent) mapping from type variables to types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<TypeVar, Type>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a substitution from raw bindings, normalizing as it goes.
    pub fn from_bindings(
        bindings: impl IntoIterator<Item = (TypeVar, Type)>,
    ) -> Result<Self, UnifyError> {
        let mut s = Substitution::new();
        for (v, t) in bindings {
            s.unify_into(&Type::Var(v), &t)?;
        }
        Ok(s)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, v: &TypeVar) -> Option<&Type> {
        self.bindings.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TypeVar, &Type)> {
        self.bindings.iter()
    }

    pub fn apply(&self, t: &Type) -> Type {
        if self.bindings.is_empty() {
            return t.clone();
        }
        match t {
            Type::Ground(_) => t.clone(),
            Type::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            Type::Ctor(c, ps) => Type::Ctor(*c, ps.iter().map(|p| self.apply(p)).collect()),
            Type::Fn(args, ret) => Type::Fn(
                args.iter().map(|a| self.apply(a)).collect(),
                Box::new(self.apply(ret)),
            ),
        }
    }

    /// Adds `v := t`, where `t` has already had this substitution applied.
    fn bind(&mut self, v: &TypeVar, t: Type) -> Result<(), UnifyError> {
        if let Type::Var(w) = &t {
            if w == v {
                return Ok(());
            }
        }
        if t.occurs(v) {
            return Err(UnifyError::Occurs { var: v.clone(), ty: t });
        }
        let single = Substitution {
            bindings: BTreeMap::from([(v.clone(), t.clone())]),
        };
        for range in self.bindings.values_mut() {
            if range.occurs(v) {
                *range = single.apply(range);
            }
        }
        self.bindings.insert(v.clone(), t);
        Ok(())
    }

    /// Extends this substitution so that it also unifies `a` and `b`.
    /// On error the substitution may hold partial bindings; callers discard it.
    pub fn unify_into(&mut self, a: &Type, b: &Type) -> Result<(), UnifyError> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            (Type::Var(x), _) => {
                let t = self.apply(&b);
                self.bind(x, t)
            }
            (_, Type::Var(y)) => {
                let t = self.apply(&a);
                self.bind(y, t)
            }
            (Type::Ground(g), Type::Ground(h)) if g == h => Ok(()),
            (Type::Ctor(c, ps), Type::Ctor(d, qs)) if c == d => {
                if ps.len() != qs.len() {
                    return Err(UnifyError::Arity { left: a.clone(), right: b.clone() });
                }
                for (p, q) in ps.iter().zip(qs) {
                    self.unify_into(p, q)?;
                }
                Ok(())
            }
            (Type::Fn(xa, xr), Type::Fn(ya, yr)) => {
                if xa.len() != ya.len() {
                    return Err(UnifyError::Arity { left: a.clone(), right: b.clone() });
                }
                for (p, q) in xa.iter().zip(ya) {
                    self.unify_into(p, q)?;
                }
                self.unify_into(xr, yr)
            }
            _ => Err(UnifyError::Mismatch {
                left: self.apply(&a),
                right: self.apply(&b),
            }),
        }
    }

    fn resolve(&self, t: &Type) -> Type {
        match t {
            Type::Var(v) => self.bindings.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        }
    }
}

/// Most general unifier of two types.
pub fn unify(a: &Type, b: &Type) -> Result<Substitution, UnifyError> {
    let mut s = Substitution::new();
    s.unify_into(a, b)?;
    Ok(s)
}

/// Composes two substitutions. Variables bound on both sides have their
/// bindings unified rather than overwritten.
pub fn merge(s1: &Substitution, s2: &Substitution) -> Result<Substitution, UnifyError> {
    let mut out = s1.clone();
    for (v, t) in s2.iter() {
        out.unify_into(&Type::Var(v.clone()), t)?;
    }
    Ok(out)
}

pub fn substitute(s: &Substitution, t: &Type) -> Type {
    s.apply(t)
}

/// Monotone source of fresh type variables for one compilation episode.
#[derive(Clone, Debug, Default)]
pub struct FreshIds {
    next: u32,
}

impl FreshIds {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(next: u32) -> Self {
        Self { next }
    }

    pub fn fresh(&mut self) -> TypeVar {
        let v = TypeVar::Fresh(self.next);
        self.next += 1;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("quantified variable {0} listed twice")]
    Duplicate(TypeVar),
    #[error("quantified variable {0} does not occur in the body")]
    Unused(TypeVar),
}

/// A universally quantified type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    vars: Vec<TypeVar>,
    body: Type,
}

impl Scheme {
    pub fn new(vars: Vec<TypeVar>, body: Type) -> Result<Self, SchemeError> {
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(SchemeError::Duplicate(v.clone()));
            }
            if !body.occurs(v) {
                return Err(SchemeError::Unused(v.clone()));
            }
        }
        Ok(Self { vars, body })
    }

    pub fn mono(body: Type) -> Self {
        Self { vars: Vec::new(), body }
    }

    /// Quantifies over every free variable of `t`.
    pub fn generalize(t: Type) -> Self {
        Self { vars: t.free_vars(), body: t }
    }

    pub fn vars(&self) -> &[TypeVar] {
        &self.vars
    }

    pub fn body(&self) -> &Type {
        &self.body
    }

    pub fn is_mono(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn instantiate(&self, fresh: &mut FreshIds) -> Type {
        if self.vars.is_empty() {
            return self.body.clone();
        }
        let renaming: HashMap<&TypeVar, TypeVar> =
            self.vars.iter().map(|v| (v, fresh.fresh())).collect();
        rename(&self.body, &renaming)
    }
}

fn rename(t: &Type, map: &HashMap<&TypeVar, TypeVar>) -> Type {
    match t {
        Type::Ground(_) => t.clone(),
        Type::Var(v) => match map.get(v) {
            Some(w) => Type::Var(w.clone()),
            None => t.clone(),
        },
        Type::Ctor(c, ps) => Type::Ctor(*c, ps.iter().map(|p| rename(p, map)).collect()),
        Type::Fn(args, ret) => Type::Fn(
            args.iter().map(|a| rename(a, map)).collect(),
            Box::new(rename(ret, map)),
        ),
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            f.write_str("forall")?;
            for v in &self.vars {
                write!(f, " {v}")?;
            }
            f.write_str(". ")?;
        }
        write!(f, "{}", self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("type syntax error at offset {offset}: {message}")]
pub struct TypeParseError {
    pub offset: usize,
    pub message: String,
}

impl FromStr for Type {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TypeParser::new(s);
        let t = p.parse_type()?;
        p.expect_end()?;
        Ok(t)
    }
}

impl FromStr for Scheme {
    type Err = TypeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TypeParser::new(s);
        let mut vars = Vec::new();
        if p.peek_word() == Some("forall") {
            p.word();
            while p.peek_char() != Some('.') {
                let start = p.pos;
                let w = p.word().ok_or_else(|| p.err("expected type variable"))?;
                match p.word_to_type(w, start)? {
                    Type::Var(v) => vars.push(v),
                    _ => return Err(p.err_at(start, "expected type variable")),
                }
            }
            p.bump('.')?;
        }
        let body = p.parse_type()?;
        p.expect_end()?;
        Scheme::new(vars, body).map_err(|e| p.err(&e.to_string()))
    }
}

pub(crate) struct TypeParser<'s> {
    src: &'s str,
    pub(crate) pos: usize,
}

impl<'s> TypeParser<'s> {
    pub(crate) fn new(src: &'s str) -> Self {
        Self { src, pos: 0 }
    }

    fn err(&self, message: &str) -> TypeParseError {
        self.err_at(self.pos, message)
    }

    fn err_at(&self, offset: usize, message: &str) -> TypeParseError {
        TypeParseError { offset, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek_char(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn peek_word(&mut self) -> Option<&'s str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    }

    fn word(&mut self) -> Option<&'s str> {
        let w = self.peek_word()?;
        self.pos += w.len();
        Some(w)
    }

    fn bump(&mut self, c: char) -> Result<(), TypeParseError> {
        if self.peek_char() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn eat_arrow(&mut self) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with("->") {
            self.pos += 2;
            true
        } else {
            false
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn expect_end(&mut self) -> Result<(), TypeParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("trailing input"))
        }
    }

    fn word_to_type(&self, w: &str, start: usize) -> Result<Type, TypeParseError> {
        if let Some(g) = Ground::from_name(w) {
            return Ok(Type::Ground(g));
        }
        if w.starts_with(|c: char| c.is_ascii_lowercase()) {
            if let Some(id) = w.strip_prefix('t').and_then(|d| d.parse::<u32>().ok()) {
                return Ok(Type::Var(TypeVar::Fresh(id)));
            }
            return Ok(Type::var(w));
        }
        Err(self.err_at(start, &format!("unknown type name {w:?}")))
    }

    pub(crate) fn parse_type(&mut self) -> Result<Type, TypeParseError> {
        let start = self.pos;
        if self.peek_char() == Some('(') {
            self.bump('(')?;
            let mut items = Vec::new();
            if self.peek_char() != Some(')') {
                loop {
                    items.push(self.parse_type()?);
                    if self.peek_char() == Some(',') {
                        self.bump(',')?;
                    } else {
                        break;
                    }
                }
            }
            self.bump(')')?;
            if self.eat_arrow() {
                let ret = self.parse_type()?;
                return Ok(Type::Fn(items, Box::new(ret)));
            }
            return match items.len() {
                1 => Ok(items.pop().expect("one item")),
                _ => Err(self.err_at(start, "parenthesized list must be followed by '->'")),
            };
        }
        let atom = self.parse_atom()?;
        if self.eat_arrow() {
            let ret = self.parse_type()?;
            return Ok(Type::Fn(vec![atom], Box::new(ret)));
        }
        Ok(atom)
    }

    fn parse_atom(&mut self) -> Result<Type, TypeParseError> {
        self.skip_ws();
        let start = self.pos;
        let w = self.word().ok_or_else(|| self.err("expected a type"))?;
        if let Some(c) = Ctor::from_name(w) {
            self.bump('[')?;
            let mut params = Vec::new();
            loop {
                params.push(self.parse_type()?);
                if self.peek_char() == Some(',') {
                    self.bump(',')?;
                } else {
                    break;
                }
            }
            self.bump(']')?;
            if params.len() != c.arity() {
                return Err(self.err_at(
                    start,
                    &format!("{} takes {} parameter(s), got {}", c.name(), c.arity(), params.len()),
                ));
            }
            return Ok(Type::Ctor(c, params));
        }
        self.word_to_type(w, start)
    }
}
