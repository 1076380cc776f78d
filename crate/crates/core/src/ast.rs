//! Typed expression trees, an independent type checker, size measurement,
//! and rendering to (and parsing from) Clojure-style source.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::reader::{datum_to_value, Datum, ReadError, Reader};
use crate::runtime::{Builtin, Value};
use crate::types::{FreshIds, Scheme, Substitution, Type, TypeVar, UnifyError};

pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Lit(Value, Type),
    /// Reference into the type environment (a builtin).
    Var(Symbol),
    /// Program argument, function parameter or let binding.
    LocalRef(Symbol),
    App(Box<Expr>, Vec<Expr>),
    Abs(Vec<(Symbol, Type)>, Arc<Expr>),
    Let(Symbol, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn app(f: Expr, args: Vec<Expr>) -> Expr {
        Expr::App(Box::new(f), args)
    }

    pub fn abs(params: Vec<(Symbol, Type)>, body: Expr) -> Expr {
        Expr::Abs(params, Arc::new(body))
    }

    pub fn let_in(name: Symbol, def: Expr, body: Expr) -> Expr {
        Expr::Let(name, Box::new(def), Box::new(body))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(sym(name))
    }

    pub fn local(name: &str) -> Expr {
        Expr::LocalRef(sym(name))
    }

    pub fn int(i: i64) -> Expr {
        Expr::Lit(Value::Int(i), Type::INT)
    }

    /// Whether a `LocalRef` to `name` occurs free in this expression.
    pub fn mentions_local(&self, name: &str) -> bool {
        match self {
            Expr::Lit(..) | Expr::Var(_) => false,
            Expr::LocalRef(n) => &**n == name,
            Expr::App(f, args) => f.mentions_local(name) || args.iter().any(|a| a.mentions_local(name)),
            Expr::Abs(params, body) => {
                !params.iter().any(|(p, _)| &**p == name) && body.mentions_local(name)
            }
            Expr::Let(n, def, body) => {
                def.mentions_local(name) || (&**n != name && body.mentions_local(name))
            }
        }
    }
}

/// An expression together with the type inferred for it.
#[derive(Clone, Debug, PartialEq)]
pub struct TypedAst {
    pub expr: Expr,
    pub ty: Type,
}

impl TypedAst {
    pub fn new(expr: Expr, ty: Type) -> Self {
        Self { expr, ty }
    }
}

/// Mapping from symbols to type schemes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TypeEnv {
    bindings: BTreeMap<Symbol, Scheme>,
}

impl TypeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_builtins<'a>(builtins: impl IntoIterator<Item = &'a Builtin>) -> Self {
        let mut env = Self::new();
        for b in builtins {
            env.insert(sym(b.name), b.scheme.clone());
        }
        env
    }

    pub fn insert(&mut self, name: Symbol, scheme: Scheme) {
        self.bindings.insert(name, scheme);
    }

    pub fn with(mut self, name: &str, scheme: Scheme) -> Self {
        self.insert(sym(name), scheme);
        self
    }

    /// A copy of this environment extended with `extra` bindings.
    pub fn extend<'a>(&self, extra: impl IntoIterator<Item = &'a (Symbol, Scheme)>) -> Self {
        let mut env = self.clone();
        for (n, s) in extra {
            env.insert(n.clone(), s.clone());
        }
        env
    }

    pub fn get(&self, name: &str) -> Option<&Scheme> {
        self.bindings.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Scheme)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("unbound symbol {0}")]
    Unbound(Symbol),
    #[error("literal {value} is not of type {ty}")]
    Literal { value: String, ty: Type },
    #[error("ill-typed expression {expr}: {source}")]
    Unify { expr: String, source: UnifyError },
    #[error("expression {expr} derives {derived} but is recorded as {recorded}")]
    Mismatch { expr: String, derived: Type, recorded: Type },
}

/// Re-derives the type of `ast.expr` bottom-up and checks it against `ast.ty`
/// (up to renaming of type variables).
pub fn check_type(ast: &TypedAst, env: &TypeEnv) -> Result<Type, TypeError> {
    let derived = infer_type(&ast.expr, env)?;
    if !derived.alpha_eq(&ast.ty) {
        return Err(TypeError::Mismatch {
            expr: render_expr(&ast.expr),
            derived,
            recorded: ast.ty.clone(),
        });
    }
    Ok(derived)
}

/// Principal type of an expression under `env`, with let-polymorphism.
pub fn infer_type(expr: &Expr, env: &TypeEnv) -> Result<Type, TypeError> {
    let mut inf = Inference::new(env);
    let t = inf.infer(expr)?;
    Ok(inf.subst.apply(&t))
}

struct Inference<'e> {
    env: &'e TypeEnv,
    fresh: FreshIds,
    subst: Substitution,
    locals: Vec<(Symbol, Scheme)>,
}

impl<'e> Inference<'e> {
    fn new(env: &'e TypeEnv) -> Self {
        // Offset keeps these variables apart from any minted by a compiler.
        Self {
            env,
            fresh: FreshIds::starting_at(1 << 30),
            subst: Substitution::new(),
            locals: Vec::new(),
        }
    }

    fn lookup(&self, name: &Symbol, local: bool) -> Result<&Scheme, TypeError> {
        let scoped = local
            .then(|| self.locals.iter().rev().find(|(n, _)| n == name).map(|(_, s)| s))
            .flatten();
        scoped
            .or_else(|| self.env.get(name))
            .ok_or_else(|| TypeError::Unbound(name.clone()))
    }

    fn infer(&mut self, expr: &Expr) -> Result<Type, TypeError> {
        match expr {
            Expr::Lit(v, ty) => {
                if !v.conforms(ty) {
                    return Err(TypeError::Literal { value: v.to_string(), ty: ty.clone() });
                }
                Ok(ty.clone())
            }
            Expr::Var(name) => {
                let s = self.lookup(name, false)?.clone();
                Ok(s.instantiate(&mut self.fresh))
            }
            Expr::LocalRef(name) => {
                let s = self.lookup(name, true)?.clone();
                Ok(s.instantiate(&mut self.fresh))
            }
            Expr::App(f, args) => {
                let tf = self.infer(f)?;
                let mut targs = Vec::with_capacity(args.len());
                for a in args {
                    targs.push(self.infer(a)?);
                }
                let ret = Type::Var(self.fresh.fresh());
                let expected = Type::func(targs, ret.clone());
                self.subst
                    .unify_into(&tf, &expected)
                    .map_err(|source| TypeError::Unify { expr: render_expr(expr), source })?;
                Ok(self.subst.apply(&ret))
            }
            Expr::Abs(params, body) => {
                for (n, t) in params {
                    self.locals.push((n.clone(), Scheme::mono(t.clone())));
                }
                let tb = self.infer(body);
                self.locals.truncate(self.locals.len() - params.len());
                let tb = tb?;
                let args = params.iter().map(|(_, t)| self.subst.apply(t)).collect();
                Ok(Type::func(args, self.subst.apply(&tb)))
            }
            Expr::Let(name, def, body) => {
                let td = self.infer(def)?;
                let td = self.subst.apply(&td);
                let scheme = self.generalize(td);
                self.locals.push((name.clone(), scheme));
                let tb = self.infer(body);
                self.locals.pop();
                tb
            }
        }
    }

    fn generalize(&self, t: Type) -> Scheme {
        let mut in_scope: Vec<TypeVar> = Vec::new();
        for (_, s) in &self.locals {
            for v in self.subst.apply(s.body()).free_vars() {
                if !s.vars().contains(&v) {
                    in_scope.push(v);
                }
            }
        }
        let vars: Vec<TypeVar> = t.free_vars().into_iter().filter(|v| !in_scope.contains(v)).collect();
        Scheme::new(vars, t).expect("generalized variables occur in the body")
    }
}

/// Program size: the number of atoms in the rendered S-expression.
///
/// Leaves count 1. An application contributes only its function and
/// arguments, since its parentheses are not an atom. An abstraction counts
/// its `fn` keyword, one per parameter, and its body; a let counts its `let`
/// keyword, the bound name, the definition and the body.
pub fn ast_size(ast: &TypedAst) -> usize {
    expr_size(&ast.expr)
}

pub fn expr_size(expr: &Expr) -> usize {
    match expr {
        Expr::Lit(..) | Expr::Var(_) | Expr::LocalRef(_) => 1,
        Expr::App(f, args) => expr_size(f) + args.iter().map(expr_size).sum::<usize>(),
        Expr::Abs(params, body) => 1 + params.len() + expr_size(body),
        Expr::Let(_, def, body) => 2 + expr_size(def) + expr_size(body),
    }
}

/// Renders a program as `(defn <name> [<args>] <body>)`.
pub fn render_source(ast: &TypedAst, fn_name: &str, arg_names: &[Symbol]) -> String {
    let mut out = String::new();
    write!(out, "(defn {fn_name} [{}] ", arg_names.join(" ")).unwrap();
    write_expr(&mut out, &ast.expr, false);
    out.push(')');
    out
}

/// Like [`render_source`], with `^Type` hints on every argument and
/// parameter so the exact tree can be parsed back.
pub fn render_typed_source(ast: &TypedAst, fn_name: &str, args: &[(Symbol, Type)]) -> String {
    let mut out = String::new();
    write!(out, "(defn {fn_name} [").unwrap();
    for (i, (n, t)) in args.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write_hinted(&mut out, n, t);
    }
    out.push_str("] ");
    write_expr(&mut out, &ast.expr, true);
    out.push(')');
    out
}

pub fn render_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, false);
    out
}

fn write_hinted(out: &mut String, name: &str, ty: &Type) {
    let text = ty.to_string();
    if text.chars().all(|c| c.is_ascii_alphanumeric()) {
        write!(out, "^{text} {name}").unwrap();
    } else {
        write!(out, "^{} {name}", Value::str(&text)).unwrap();
    }
}

fn write_expr(out: &mut String, expr: &Expr, hints: bool) {
    match expr {
        Expr::Lit(v, _) => write!(out, "{v}").unwrap(),
        Expr::Var(n) | Expr::LocalRef(n) => out.push_str(n),
        Expr::App(f, args) => {
            out.push('(');
            write_expr(out, f, hints);
            for a in args {
                out.push(' ');
                write_expr(out, a, hints);
            }
            out.push(')');
        }
        Expr::Abs(params, body) => {
            out.push_str("(fn [");
            for (i, (n, t)) in params.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                if hints {
                    write_hinted(out, n, t);
                } else {
                    out.push_str(n);
                }
            }
            out.push_str("] ");
            write_expr(out, body, hints);
            out.push(')');
        }
        Expr::Let(n, def, body) => {
            write!(out, "(let [{n} ").unwrap();
            write_expr(out, def, hints);
            out.push_str("] ");
            write_expr(out, body, hints);
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("malformed program: {0}")]
    Syntax(String),
    #[error("bad type hint: {0}")]
    Hint(String),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// A program parsed back from rendered source.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedProgram {
    pub name: String,
    pub args: Vec<(Symbol, Type)>,
    pub ast: TypedAst,
}

/// Parses a `(defn ...)` form. Argument types come from hints, falling back
/// to `default_arg_types` by position. Unhinted `fn` parameters get their
/// types from inference; unconstrained ones stay as type variables.
pub fn parse_source(
    text: &str,
    env: &TypeEnv,
    default_arg_types: &[Type],
) -> Result<ParsedProgram, SourceError> {
    let mut reader = Reader::new(text);
    let datum = reader.read()?;
    if !reader.at_end() {
        return Err(SourceError::Syntax("trailing input after defn".into()));
    }
    let Datum::List(items) = datum else {
        return Err(SourceError::Syntax("expected (defn ...)".into()));
    };
    let [head, name, params, body] = items.as_slice() else {
        return Err(SourceError::Syntax("defn takes a name, an argument vector and a body".into()));
    };
    if !matches!(head, Datum::Symbol(s) if s == "defn") {
        return Err(SourceError::Syntax("expected defn".into()));
    }
    let Datum::Symbol(name) = name else {
        return Err(SourceError::Syntax("defn name must be a symbol".into()));
    };
    let mut builder = SourceBuilder { fresh: FreshIds::starting_at(1 << 29), bound: Vec::new() };
    let Datum::Vector(params) = params else {
        return Err(SourceError::Syntax("expected argument vector".into()));
    };
    let mut args = Vec::new();
    for (i, p) in params.iter().enumerate() {
        let (n, hint) = builder.param(p)?;
        let ty = match hint {
            Some(t) => t,
            None => default_arg_types
                .get(i)
                .cloned()
                .ok_or_else(|| SourceError::Syntax(format!("no type for argument {n}")))?,
        };
        args.push((n, ty));
    }
    builder.bound.extend(args.iter().map(|(n, _)| n.clone()));
    let expr = builder.expr(body)?;

    let arg_env = env.extend(&args.iter().map(|(n, t)| (n.clone(), Scheme::mono(t.clone()))).collect::<Vec<_>>());
    let mut inf = Inference::new(&arg_env);
    let ty = inf.infer(&expr)?;
    let ty = inf.subst.apply(&ty);
    let expr = resolve_params(expr, &inf.subst);
    Ok(ParsedProgram { name: name.clone(), args, ast: TypedAst::new(expr, ty) })
}

struct SourceBuilder {
    fresh: FreshIds,
    bound: Vec<Symbol>,
}

impl SourceBuilder {
    fn param(&mut self, d: &Datum) -> Result<(Symbol, Option<Type>), SourceError> {
        match d {
            Datum::Symbol(s) => Ok((sym(s), None)),
            Datum::Meta(hint, target) => {
                let Datum::Symbol(s) = &**target else {
                    return Err(SourceError::Syntax("type hint must annotate a symbol".into()));
                };
                let text = match &**hint {
                    Datum::Symbol(h) => h.clone(),
                    Datum::Literal(Value::Str(h)) => h.to_string(),
                    _ => return Err(SourceError::Hint(format!("{hint:?}"))),
                };
                let ty = text.parse::<Type>().map_err(|e| SourceError::Hint(e.to_string()))?;
                Ok((sym(s), Some(ty)))
            }
            _ => Err(SourceError::Syntax("parameters must be symbols".into())),
        }
    }

    fn expr(&mut self, d: &Datum) -> Result<Expr, SourceError> {
        match d {
            Datum::Literal(v) => {
                let ty = v
                    .literal_type()
                    .ok_or_else(|| SourceError::Syntax(format!("untyped literal {v}")))?;
                Ok(Expr::Lit(v.clone(), ty))
            }
            Datum::Vector(_) => {
                let v = datum_to_value(d)
                    .ok_or_else(|| SourceError::Syntax("vector literal must hold only literals".into()))?;
                let ty = match v.literal_type() {
                    Some(t) => t,
                    None if matches!(&v, Value::Seq(xs) if xs.is_empty()) => Type::seq(Type::Var(self.fresh.fresh())),
                    None => return Err(SourceError::Syntax(format!("cannot type vector literal {v}"))),
                };
                Ok(Expr::Lit(v, ty))
            }
            Datum::Symbol(s) => {
                let s = sym(s);
                if self.bound.contains(&s) {
                    Ok(Expr::LocalRef(s))
                } else {
                    Ok(Expr::Var(s))
                }
            }
            Datum::Meta(..) => Err(SourceError::Syntax("unexpected type hint".into())),
            Datum::List(items) => match items.first() {
                Some(Datum::Symbol(h)) if h == "fn" => self.abs(items),
                Some(Datum::Symbol(h)) if h == "let" => self.let_form(items),
                Some(f) => {
                    let f = self.expr(f)?;
                    let args = items[1..].iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?;
                    Ok(Expr::app(f, args))
                }
                None => Err(SourceError::Syntax("empty application".into())),
            },
        }
    }

    fn abs(&mut self, items: &[Datum]) -> Result<Expr, SourceError> {
        let [_, Datum::Vector(ps), body] = items else {
            return Err(SourceError::Syntax("fn takes a parameter vector and one body".into()));
        };
        let mut params = Vec::with_capacity(ps.len());
        for p in ps {
            let (n, hint) = self.param(p)?;
            let ty = hint.unwrap_or_else(|| Type::Var(self.fresh.fresh()));
            params.push((n, ty));
        }
        let depth = self.bound.len();
        self.bound.extend(params.iter().map(|(n, _)| n.clone()));
        let body = self.expr(body);
        self.bound.truncate(depth);
        Ok(Expr::abs(params, body?))
    }

    fn let_form(&mut self, items: &[Datum]) -> Result<Expr, SourceError> {
        let [_, Datum::Vector(binding), body] = items else {
            return Err(SourceError::Syntax("let takes a binding vector and one body".into()));
        };
        let [Datum::Symbol(n), def] = binding.as_slice() else {
            return Err(SourceError::Syntax("let binds exactly one symbol".into()));
        };
        let def = self.expr(def)?;
        self.bound.push(sym(n));
        let body = self.expr(body);
        self.bound.pop();
        Ok(Expr::let_in(sym(n), def, body?))
    }
}

fn resolve_params(expr: Expr, s: &Substitution) -> Expr {
    match expr {
        Expr::App(f, args) => Expr::app(
            resolve_params(*f, s),
            args.into_iter().map(|a| resolve_params(a, s)).collect(),
        ),
        Expr::Abs(params, body) => Expr::abs(
            params.into_iter().map(|(n, t)| (n, s.apply(&t))).collect(),
            resolve_params(Arc::unwrap_or_clone(body), s),
        ),
        Expr::Let(n, def, body) => Expr::let_in(n, resolve_params(*def, s), resolve_params(*body, s)),
        other => other,
    }
}
