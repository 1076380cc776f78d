//! Stack-based compilation of push sequences into typed syntax trees.
//!
//! Literal and variable genes push leaves onto the AST stack and nested
//! sequences go to the chunk stack. `APP`, `ABS` and `LET` combine stack
//! entries; whenever their preconditions fail they leave every stack as it
//! was. After the last item the topmost AST of the requested return type is
//! the program.

use thiserror::Error;

use crate::ast::{sym, Expr, Symbol, TypeEnv, TypedAst};
use crate::genome::{translate_plushy, Gene, Genome, PushItem, PushSeq};
use crate::types::{merge, unify, Ctor, FreshIds, Scheme, Substitution, Type};

/// Prefix of generated local names.
pub const LOCAL_PREFIX: &str = "a-";

/// Return type, argument names and argument types of the target program.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    pub return_type: Type,
    pub arg_names: Vec<Symbol>,
    pub arg_types: Vec<Type>,
}

impl Signature {
    pub fn new(args: &[(&str, Type)], return_type: Type) -> Self {
        Self {
            return_type,
            arg_names: args.iter().map(|(n, _)| sym(n)).collect(),
            arg_types: args.iter().map(|(_, t)| t.clone()).collect(),
        }
    }

    pub fn args(&self) -> impl Iterator<Item = (&Symbol, &Type)> {
        self.arg_names.iter().zip(&self.arg_types)
    }

    /// Argument names bound to their monomorphic schemes.
    pub fn locals(&self) -> Vec<(Symbol, Scheme)> {
        self.args().map(|(n, t)| (n.clone(), Scheme::mono(t.clone()))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no AST on the stack has the program's return type")]
pub struct NoProgram;

/// The two compilation stacks plus the locals in scope. Stacks grow at the
/// end: the last element is the top.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompileState {
    pub asts: Vec<TypedAst>,
    pub chunks: Vec<PushSeq>,
    pub locals: Vec<(Symbol, Scheme)>,
}

impl CompileState {
    pub fn new(locals: Vec<(Symbol, Scheme)>) -> Self {
        Self { asts: Vec::new(), chunks: Vec::new(), locals }
    }
}

/// Callback invoked with every AST pushed to any stack and the locals in
/// scope at that point.
pub type Observer<'o> = dyn FnMut(&TypedAst, &[(Symbol, Scheme)]) + 'o;

/// Compiles push sequences under a type environment. Fresh type variables
/// and local names come from counters shared by nested compilations.
pub struct Compiler<'e, 'o> {
    env: &'e TypeEnv,
    fresh: FreshIds,
    next_local: usize,
    observer: Option<&'o mut Observer<'o>>,
}

impl<'e, 'o> Compiler<'e, 'o> {
    pub fn new(env: &'e TypeEnv) -> Self {
        Self { env, fresh: FreshIds::new(), next_local: 0, observer: None }
    }

    pub fn with_observer(env: &'e TypeEnv, observer: &'o mut Observer<'o>) -> Self {
        Self { env, fresh: FreshIds::new(), next_local: 0, observer: Some(observer) }
    }

    /// Compiles `seq` and selects the output for `sig`.
    pub fn compile(&mut self, seq: &PushSeq, sig: &Signature) -> Result<TypedAst, NoProgram> {
        let state = self.run(seq, sig.locals());
        select_output(&state.asts, &sig.return_type)
    }

    /// Processes every item of `seq` on fresh stacks.
    pub fn run(&mut self, seq: &PushSeq, locals: Vec<(Symbol, Scheme)>) -> CompileState {
        let mut state = CompileState::new(locals);
        for item in seq.items() {
            self.step(&mut state, item);
        }
        state
    }

    pub fn step(&mut self, state: &mut CompileState, item: &PushItem) {
        match item {
            PushItem::Chunk(c) => state.chunks.push(c.clone()),
            PushItem::Gene(g) => match g {
                Gene::Lit(v, t) => self.push(state, TypedAst::new(Expr::Lit(v.clone(), t.clone()), t.clone())),
                Gene::Var(name) => self.push_var(state, name),
                Gene::Local(i) => {
                    if let Some((name, scheme)) = resolve_local(*i, &state.locals) {
                        let ast = TypedAst::new(Expr::LocalRef(name.clone()), scheme.instantiate(&mut self.fresh));
                        self.push(state, ast);
                    }
                }
                Gene::App => self.apply_function(state),
                Gene::Abs(arg_types) => self.compile_abs(arg_types, state),
                Gene::Let => self.compile_let(state),
                // Structure tokens never survive translation; treat strays as noops.
                Gene::Open | Gene::Close => {}
            },
        }
    }

    fn push(&mut self, state: &mut CompileState, ast: TypedAst) {
        if let Some(obs) = self.observer.as_mut() {
            obs(&ast, &state.locals);
        }
        state.asts.push(ast);
    }

    /// A variable gene naming a local becomes a local reference; otherwise
    /// the environment scheme is instantiated. Unknown names are noops.
    fn push_var(&mut self, state: &mut CompileState, name: &Symbol) {
        let ast = if let Some((_, s)) = state.locals.iter().rev().find(|(n, _)| n == name) {
            TypedAst::new(Expr::LocalRef(name.clone()), s.instantiate(&mut self.fresh))
        } else if let Some(s) = self.env.get(name) {
            TypedAst::new(Expr::Var(name.clone()), s.instantiate(&mut self.fresh))
        } else {
            return;
        };
        self.push(state, ast);
    }

    fn fresh_local(&mut self) -> Symbol {
        let n = self.next_local;
        self.next_local += 1;
        sym(&format!("{LOCAL_PREFIX}{n}"))
    }

    /// `APP`: the topmost function-typed AST is applied to arguments found by
    /// [`find_app_args`]. Noop when there is no function or an argument is missing.
    pub fn apply_function(&mut self, state: &mut CompileState) {
        let Some(fi) = state.asts.iter().rposition(|a| a.ty.is_fn()) else {
            return;
        };
        let Type::Fn(arg_types, ret) = &state.asts[fi].ty else {
            unreachable!("position matched a function type")
        };
        let (found, subs) = find_app_args(&state.asts, Some(fi), arg_types);
        let Some(picked) = found.into_iter().collect::<Option<Vec<usize>>>() else {
            return;
        };
        let ty = subs.apply(ret);
        let args = picked.iter().map(|&i| state.asts[i].expr.clone()).collect();
        let f = state.asts[fi].expr.clone();
        let mut consumed = picked;
        consumed.push(fi);
        let mut idx = 0;
        state.asts.retain(|_| {
            idx += 1;
            !consumed.contains(&(idx - 1))
        });
        self.push(state, TypedAst::new(Expr::app(f, args), ty));
    }

    /// `ABS[T...]`: mints one local per argument type and compiles the body
    /// from the chunk stack.
    pub fn compile_abs(&mut self, arg_types: &[Type], state: &mut CompileState) {
        if arg_types.iter().any(|t| !t.free_vars().is_empty()) {
            return;
        }
        let params: Vec<(Symbol, Type)> = arg_types.iter().map(|t| (self.fresh_local(), t.clone())).collect();
        let mut locals = state.locals.clone();
        locals.extend(params.iter().map(|(n, t)| (n.clone(), Scheme::mono(t.clone()))));
        let Some(body) = self.compile_body(state, locals) else {
            return;
        };
        let ty = Type::func(arg_types.to_vec(), body.ty.clone());
        self.push(state, TypedAst::new(Expr::abs(params, body.expr), ty));
    }

    /// `LET`: the top AST becomes the definition of a new local and the body
    /// is compiled from the chunk stack.
    pub fn compile_let(&mut self, state: &mut CompileState) {
        let Some(def) = state.asts.last() else {
            return;
        };
        let name = self.fresh_local();
        let mut locals = state.locals.clone();
        locals.push((name.clone(), Scheme::generalize(def.ty.clone())));
        let Some(body) = self.compile_body(state, locals) else {
            return;
        };
        let def = state.asts.pop().expect("definition checked above");
        self.push(state, TypedAst::new(Expr::let_in(name, def.expr, body.expr), body.ty));
    }

    /// Compiles chunks from the top of the chunk stack until one yields an
    /// AST, which is returned; that chunk and the failed ones above it are
    /// consumed. When every chunk fails the chunk stack is left intact.
    fn compile_body(&mut self, state: &mut CompileState, locals: Vec<(Symbol, Scheme)>) -> Option<TypedAst> {
        for k in (0..state.chunks.len()).rev() {
            let mut nested = self.run(&state.chunks[k], locals.clone());
            if let Some(body) = nested.asts.pop() {
                state.chunks.truncate(k);
                return Some(body);
            }
        }
        None
    }
}

/// Looks up local `i` modulo the number of locals.
pub fn resolve_local(i: usize, locals: &[(Symbol, Scheme)]) -> Option<&(Symbol, Scheme)> {
    if locals.is_empty() {
        None
    } else {
        locals.get(i % locals.len())
    }
}

/// Finds one argument per entry of `arg_types`, scanning the stack from the
/// top and skipping `exclude` and ASTs already taken. Bindings from earlier
/// arguments constrain later ones. Returns stack indices (`None` where no
/// AST fits) and the accumulated substitution.
pub fn find_app_args(
    asts: &[TypedAst],
    exclude: Option<usize>,
    arg_types: &[Type],
) -> (Vec<Option<usize>>, Substitution) {
    let mut found: Vec<Option<usize>> = Vec::with_capacity(arg_types.len());
    let mut subs = Substitution::new();
    for t in arg_types {
        let t2 = subs.apply(t);
        let hit = (0..asts.len())
            .rev()
            .filter(|&i| Some(i) != exclude && !found.contains(&Some(i)))
            .find_map(|i| {
                let new = unify(&t2, &asts[i].ty).ok()?;
                Some((i, merge(&subs, &new).ok()?))
            });
        match hit {
            Some((i, merged)) => {
                found.push(Some(i));
                subs = merged;
            }
            None => found.push(None),
        }
    }
    (found, subs)
}

/// The topmost AST whose type unifies with `return_type`, specialised by
/// the unifier.
///
/// A `Tuple[a, b]` return type is filled component-wise, each from the
/// topmost AST unifying with that component, and paired with `vector`.
pub fn select_output(asts: &[TypedAst], return_type: &Type) -> Result<TypedAst, NoProgram> {
    if let Type::Ctor(Ctor::Tuple, parts) = return_type {
        let parts = parts.iter().map(|t| select_output(asts, t)).collect::<Result<Vec<_>, _>>()?;
        let ty = Type::Ctor(Ctor::Tuple, parts.iter().map(|p| p.ty.clone()).collect());
        return Ok(TypedAst::new(Expr::app(Expr::var("vector"), parts.into_iter().map(|p| p.expr).collect()), ty));
    }
    asts.iter()
        .rev()
        .find_map(|a| {
            let s = unify(&a.ty, return_type).ok()?;
            Some(TypedAst::new(a.expr.clone(), s.apply(&a.ty)))
        })
        .ok_or(NoProgram)
}

pub fn compile(seq: &PushSeq, sig: &Signature, env: &TypeEnv) -> Result<TypedAst, NoProgram> {
    Compiler::new(env).compile(seq, sig)
}

pub fn compile_genome(genome: &Genome, sig: &Signature, env: &TypeEnv) -> Result<TypedAst, NoProgram> {
    compile(&translate_plushy(genome.genes()), sig, env)
}
