//! The benchmark problems: signatures, case generation, reference
//! solutions, error functions and type-tuned genetic sources.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};
use std::sync::LazyLock;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{sym, TypeEnv};
use crate::compiler::Signature;
use crate::genome::{random_char, Distribution, Erc, GeneticSource};
use crate::runtime::builtins::lookup;
use crate::runtime::{builtin_library, Builtin, RuntimeError, Value};
use crate::types::{Ctor, Ground, Scheme, Type};

/// Error assigned to a case that fails to run, and to every case of an
/// individual without a program.
pub const PENALTY: f64 = 1e6;

pub const N_TRAIN: usize = 100;
pub const N_TEST: usize = 300;

/// How a case's output is scored.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorFn {
    /// Absolute integer difference.
    AbsInt,
    /// Absolute difference rounded to four decimals.
    AbsDouble,
    /// 0 when equal, 1 otherwise.
    Exact,
    /// Character-level edit distance.
    Levenshtein,
    /// Edit distance over sequence elements.
    SeqLevenshtein,
    /// Summed absolute element differences plus 1000 per missing or extra element.
    SeqAbsSum,
    /// A `[printed count]` pair: edit distance of the strings plus the
    /// absolute difference of the integers.
    PrintedAndCount,
}

/// Per-element weight for a length mismatch in [`ErrorFn::SeqAbsSum`].
pub const LENGTH_MISMATCH_WEIGHT: f64 = 1000.0;

/// Inclusive sampling ranges for a problem's inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ranges {
    pub int: (i64, i64),
    pub double: (f64, f64),
    pub len: (usize, usize),
}

type Inputs = Vec<Value>;

pub struct ProblemSpec {
    pub name: &'static str,
    pub signature: Signature,
    /// Types whose operations belong in the genetic source.
    pub relevant_types: Vec<Type>,
    pub ranges: Ranges,
    pub literals: Vec<(Value, Type)>,
    pub ercs: Vec<Erc>,
    pub error_fn: ErrorFn,
    pub edge_cases: fn() -> Vec<Inputs>,
    pub sampler: fn(&Ranges, &mut dyn RngCore) -> Inputs,
    /// Total oracle that labels every case.
    pub reference: fn(&[Value]) -> Value,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec").field("name", &self.name).field("signature", &self.signature).finish()
    }
}

impl ProblemSpec {
    pub fn edge_inputs(&self) -> Vec<Inputs> {
        (self.edge_cases)()
    }

    pub fn sample_inputs(&self, rng: &mut dyn RngCore) -> Inputs {
        (self.sampler)(&self.ranges, rng)
    }

    pub fn reference_solution(&self, inputs: &[Value]) -> Value {
        (self.reference)(inputs)
    }

    pub fn case(&self, inputs: Inputs) -> Case {
        let expected = self.reference_solution(&inputs);
        Case { inputs, expected }
    }

    pub fn error(&self, expected: &Value, actual: &Result<Value, RuntimeError>) -> f64 {
        case_error(self.error_fn, expected, actual)
    }

    /// The curated builtins restricted to this problem's types.
    pub fn builtins(&self) -> Vec<&'static Builtin> {
        builtin_library(&self.relevant_types)
    }

    /// Builtins plus program arguments. A tuple return type also brings in
    /// the pairing builtin, which stays out of the genetic source.
    pub fn type_env(&self) -> TypeEnv {
        let mut env = TypeEnv::from_builtins(self.builtins());
        if matches!(self.signature.return_type, Type::Ctor(Ctor::Tuple, _)) {
            let pair = lookup("vector").expect("library defines vector").get();
            env.insert(sym(pair.name), pair.scheme.clone());
        }
        for (n, t) in self.signature.args() {
            env.insert(n.clone(), Scheme::mono(t.clone()));
        }
        env
    }

    /// Variables (builtins and arguments), literals, ERCs and an ABS menu of
    /// one argument per relevant ground type plus the zero-argument form.
    pub fn genetic_source(&self) -> GeneticSource {
        let mut vars: Vec<_> = self.builtins().into_iter().map(|b| (sym(b.name), b.scheme.clone())).collect();
        vars.extend(self.signature.locals());
        let mut abs: Vec<Vec<Type>> = Ground::ALL
            .iter()
            .filter(|g| self.relevant_types.iter().any(|t| t.type_names().contains(g.name())))
            .map(|&g| vec![Type::Ground(g)])
            .collect();
        abs.push(vec![]);
        GeneticSource::new(vars, self.literals.clone(), self.ercs.clone(), abs, Distribution::standard())
            .expect("catalog sources are valid")
    }

    /// Training set: edge cases first, then random cases up to `n_train`.
    /// Test cases are random and avoid training inputs where possible.
    pub fn generate_cases_sized(&self, seed: u64, n_train: usize, n_test: usize) -> CaseSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train: Vec<Case> = self.edge_inputs().into_iter().take(n_train).map(|i| self.case(i)).collect();
        while train.len() < n_train {
            let inputs = self.sample_inputs(&mut rng);
            train.push(self.case(inputs));
        }
        let seen: HashSet<String> = train.iter().map(|c| render_inputs(&c.inputs)).collect();
        let mut test = Vec::with_capacity(n_test);
        while test.len() < n_test {
            let mut inputs = self.sample_inputs(&mut rng);
            for _ in 0..100 {
                if !seen.contains(&render_inputs(&inputs)) {
                    break;
                }
                inputs = self.sample_inputs(&mut rng);
            }
            test.push(self.case(inputs));
        }
        CaseSet { train, test }
    }

    pub fn generate_cases(&self, seed: u64) -> CaseSet {
        self.generate_cases_sized(seed, N_TRAIN, N_TEST)
    }
}

fn render_inputs(inputs: &[Value]) -> String {
    inputs.iter().map(Value::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub inputs: Vec<Value>,
    pub expected: Value,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CaseSet {
    pub train: Vec<Case>,
    pub test: Vec<Case>,
}

/// Scores one case. Runtime errors, non-finite numbers and outputs of the
/// wrong shape all receive [`PENALTY`]; every error lies in `[0, PENALTY]`.
pub fn case_error(kind: ErrorFn, expected: &Value, actual: &Result<Value, RuntimeError>) -> f64 {
    let Ok(actual) = actual else {
        return PENALTY;
    };
    let e = match (kind, expected, actual) {
        (ErrorFn::AbsInt, Value::Int(e), Value::Int(a)) => (*e as f64 - *a as f64).abs(),
        (ErrorFn::AbsDouble, Value::Double(e), Value::Double(a)) => round4((e - a).abs()),
        (ErrorFn::Exact, e, a) => f64::from(u8::from(e != a)),
        (ErrorFn::Levenshtein, Value::Str(e), Value::Str(a)) => strsim::levenshtein(e, a) as f64,
        (ErrorFn::SeqLevenshtein, Value::Seq(e), Value::Seq(a)) => {
            strsim::generic_levenshtein(&**e, &**a) as f64
        }
        (ErrorFn::SeqAbsSum, Value::Seq(e), Value::Seq(a)) => {
            let diffs: f64 = e
                .iter()
                .zip(a.iter())
                .map(|(x, y)| match (x, y) {
                    (Value::Int(x), Value::Int(y)) => (*x as f64 - *y as f64).abs(),
                    _ => PENALTY,
                })
                .sum();
            diffs + LENGTH_MISMATCH_WEIGHT * e.len().abs_diff(a.len()) as f64
        }
        (ErrorFn::PrintedAndCount, Value::Seq(e), Value::Seq(a)) => match (&e[..], &a[..]) {
            ([es, en], [as_, an]) => {
                case_error(ErrorFn::Levenshtein, es, &Ok(as_.clone()))
                    + case_error(ErrorFn::AbsInt, en, &Ok(an.clone()))
            }
            _ => PENALTY,
        },
        _ => PENALTY,
    };
    if e.is_finite() {
        e.min(PENALTY)
    } else {
        PENALTY
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Names of every problem in the catalog, in table order.
pub const PROBLEM_NAMES: [&str; 14] = [
    "smallest",
    "mirror-image",
    "number-io",
    "vectors-summed",
    "negative-to-zero",
    "median",
    "vector-average",
    "compare-string-lengths",
    "last-index-of-zero",
    "replace-space-with-newline",
    "small-or-large",
    "count-odds",
    "digits",
    "for-loop-index",
];

static CATALOG: LazyLock<Vec<ProblemSpec>> = LazyLock::new(build_catalog);

pub fn problem_catalog() -> &'static [ProblemSpec] {
    &CATALOG
}

pub fn problem(name: &str) -> Option<&'static ProblemSpec> {
    CATALOG.iter().find(|p| p.name == name)
}

fn int_arg(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        other => panic!("expected Int, got {other}"),
    }
}

fn ints_arg(v: &Value) -> Vec<i64> {
    match v {
        Value::Seq(items) => items.iter().map(int_arg).collect(),
        other => panic!("expected Sequence[Int], got {other}"),
    }
}

fn str_arg(v: &Value) -> &str {
    match v {
        Value::Str(s) => s,
        other => panic!("expected String, got {other}"),
    }
}

fn ints(xs: &[i64]) -> Value {
    Value::ints(xs)
}

fn random_ints(r: &Ranges, len: usize, rng: &mut dyn RngCore) -> Vec<i64> {
    (0..len).map(|_| rng.gen_range(r.int.0..=r.int.1)).collect()
}

fn random_len(r: &Ranges, rng: &mut dyn RngCore) -> usize {
    rng.gen_range(r.len.0..=r.len.1)
}

fn random_string(len: usize, rng: &mut dyn RngCore) -> String {
    (0..len).map(|_| random_char(rng)).collect()
}

const INT: Type = Type::INT;
const BOOL: Type = Type::BOOLEAN;
const DOUBLE: Type = Type::DOUBLE;
const STRING: Type = Type::STRING;
const CHAR: Type = Type::CHAR;

fn seq_int() -> Type {
    Type::seq(INT)
}

fn build_catalog() -> Vec<ProblemSpec> {
    let no_len = (0, 0);
    let no_double = (0.0, 1.0);
    vec![
        ProblemSpec {
            name: "smallest",
            signature: Signature::new(
                &[("input1", INT), ("input2", INT), ("input3", INT), ("input4", INT)],
                INT,
            ),
            relevant_types: vec![INT, BOOL],
            ranges: Ranges { int: (-100, 100), double: no_double, len: no_len },
            literals: vec![],
            ercs: vec![Erc::Int { lo: -100, hi: 100 }],
            error_fn: ErrorFn::AbsInt,
            edge_cases: || {
                let mut out: Vec<Inputs> = [
                    [0, 0, 0, 0],
                    [-100, -100, -100, -100],
                    [100, 100, 100, 100],
                    [-44, -44, -7, -13],
                    [0, 4, -99, -33],
                    [-22, 60, 60, -13],
                    [-7, 33, -98, 98],
                ]
                .iter()
                .map(|xs| xs.iter().map(|&i| Value::Int(i)).collect())
                .collect();
                for k in 0..4 {
                    let mut xs = [5i64, 5, 5, 5];
                    xs[k] = -5;
                    out.push(xs.iter().map(|&i| Value::Int(i)).collect());
                    xs[k] = 100;
                    out.push(xs.iter().map(|&i| Value::Int(i)).collect());
                }
                out
            },
            sampler: |r, rng| random_ints(r, 4, rng).into_iter().map(Value::Int).collect(),
            reference: |a| Value::Int(a.iter().map(int_arg).min().expect("four inputs")),
        },
        ProblemSpec {
            name: "mirror-image",
            signature: Signature::new(&[("input1", seq_int()), ("input2", seq_int())], BOOL),
            relevant_types: vec![INT, BOOL, seq_int()],
            ranges: Ranges { int: (-1000, 1000), double: no_double, len: (0, 50) },
            literals: vec![],
            ercs: vec![Erc::Bool],
            error_fn: ErrorFn::Exact,
            edge_cases: || {
                let pairs: &[(&[i64], &[i64])] = &[
                    (&[], &[]),
                    (&[1], &[1]),
                    (&[1], &[0]),
                    (&[0], &[1]),
                    (&[16], &[-44]),
                    (&[-12], &[-13]),
                    (&[1, 2], &[2, 1]),
                    (&[1, 1], &[0, 1]),
                    (&[7, 0], &[0, 7]),
                    (&[5, 8], &[5, 8]),
                    (&[34, 12], &[34, 12]),
                    (&[456, 456], &[456, 456]),
                    (&[-431, -680], &[40, 831]),
                    (&[1, 2, 1], &[1, 2, 1]),
                    (&[1, 2, 3, 4, 5, 4, 3, 2, 1], &[1, 2, 3, 4, 5, 4, 3, 2, 1]),
                    (&[45, 99, 0, 12, 44, 7, 7, 44, 12, 0, 99, 45], &[45, 99, 0, 12, 44, 7, 7, 44, 12, 0, 99, 45]),
                    (&[33, 45, -941], &[33, 45, -941]),
                    (&[33, -941, 45], &[33, 45, -941]),
                    (&[1, 2, 3], &[3, 2]),
                ];
                pairs.iter().map(|(a, b)| vec![ints(a), ints(b)]).collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                let a = random_ints(r, n, rng);
                let mut rev: Vec<i64> = a.iter().rev().copied().collect();
                let b = match rng.gen_range(0..10) {
                    0..=3 => rev,
                    4..=5 if n > 0 => {
                        let k = rng.gen_range(0..n);
                        rev[k] = rng.gen_range(r.int.0..=r.int.1);
                        rev
                    }
                    6 => a.clone(),
                    _ => random_ints(r, n, rng),
                };
                vec![ints(&a), ints(&b)]
            },
            reference: |a| {
                let x = ints_arg(&a[0]);
                let y = ints_arg(&a[1]);
                Value::Bool(x.iter().rev().eq(y.iter()))
            },
        },
        ProblemSpec {
            name: "number-io",
            signature: Signature::new(&[("input1", INT), ("input2", DOUBLE)], DOUBLE),
            relevant_types: vec![INT, DOUBLE],
            ranges: Ranges { int: (-100, 100), double: (-100.0, 100.0), len: no_len },
            literals: vec![],
            ercs: vec![Erc::Int { lo: -100, hi: 100 }, Erc::Double { lo: -100.0, hi: 100.0 }],
            error_fn: ErrorFn::AbsDouble,
            edge_cases: || {
                [(-100, -100.0), (100, 100.0), (0, 0.0), (-100, 100.0), (100, -100.0), (1, -0.5)]
                    .iter()
                    .map(|&(i, d)| vec![Value::Int(i), Value::Double(d)])
                    .collect()
            },
            sampler: |r, rng| {
                let d = round4(rng.gen_range(r.double.0..r.double.1));
                vec![Value::Int(rng.gen_range(r.int.0..=r.int.1)), Value::Double(d)]
            },
            reference: |a| match (&a[0], &a[1]) {
                (Value::Int(i), Value::Double(d)) => Value::Double(*i as f64 + d),
                _ => panic!("number-io takes Int and Double"),
            },
        },
        ProblemSpec {
            name: "vectors-summed",
            signature: Signature::new(&[("input1", seq_int()), ("input2", seq_int())], seq_int()),
            relevant_types: vec![INT, BOOL, seq_int()],
            ranges: Ranges { int: (-1000, 1000), double: no_double, len: (0, 50) },
            literals: vec![(ints(&[]), seq_int())],
            ercs: vec![Erc::Int { lo: -1000, hi: 1000 }],
            error_fn: ErrorFn::SeqAbsSum,
            edge_cases: || {
                let pairs: &[(&[i64], &[i64])] = &[
                    (&[], &[]),
                    (&[0], &[0]),
                    (&[0], &[10]),
                    (&[3], &[5]),
                    (&[-1000], &[1000]),
                    (&[1000], &[-1000]),
                    (&[1000], &[1000]),
                    (&[-1000], &[-1000]),
                    (&[-5, 3], &[7, -2]),
                    (&[0, 0, 0], &[1, 2, 3]),
                ];
                pairs.iter().map(|(a, b)| vec![ints(a), ints(b)]).collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                vec![ints(&random_ints(r, n, rng)), ints(&random_ints(r, n, rng))]
            },
            reference: |a| {
                let x = ints_arg(&a[0]);
                let y = ints_arg(&a[1]);
                ints(&x.iter().zip(&y).map(|(p, q)| p + q).collect::<Vec<_>>())
            },
        },
        ProblemSpec {
            name: "negative-to-zero",
            signature: Signature::new(&[("input1", seq_int())], seq_int()),
            relevant_types: vec![INT, BOOL, seq_int()],
            ranges: Ranges { int: (-1000, 1000), double: no_double, len: (0, 50) },
            literals: vec![(Value::Int(0), INT), (ints(&[]), seq_int())],
            ercs: vec![],
            error_fn: ErrorFn::SeqLevenshtein,
            edge_cases: || {
                let cases: &[&[i64]] = &[
                    &[],
                    &[-10],
                    &[-1],
                    &[0],
                    &[1],
                    &[10],
                    &[0, 0],
                    &[0, -1],
                    &[-1, 0],
                    &[-90, -6],
                    &[-16, 33],
                    &[412, 111],
                    &[-5, 3, 0],
                    &[-1000, 1000, -1, 1],
                ];
                cases.iter().map(|c| vec![ints(c)]).collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                vec![ints(&random_ints(r, n, rng))]
            },
            reference: |a| ints(&ints_arg(&a[0]).iter().map(|&x| x.max(0)).collect::<Vec<_>>()),
        },
        ProblemSpec {
            name: "median",
            signature: Signature::new(&[("input1", INT), ("input2", INT), ("input3", INT)], INT),
            relevant_types: vec![INT, BOOL],
            ranges: Ranges { int: (-100, 100), double: no_double, len: no_len },
            literals: vec![],
            ercs: vec![Erc::Int { lo: -100, hi: 100 }],
            error_fn: ErrorFn::Exact,
            edge_cases: || {
                [
                    [0, 0, 0],
                    [100, 100, 100],
                    [-100, -100, -100],
                    [5, 5, 5],
                    [1, 2, 3],
                    [3, 2, 1],
                    [2, 3, 1],
                    [-100, 0, 100],
                    [7, 7, -3],
                    [-3, 7, 7],
                    [7, -3, 7],
                    [56, 56, 99],
                    [-99, 12, 12],
                ]
                .iter()
                .map(|xs| xs.iter().map(|&i| Value::Int(i)).collect())
                .collect()
            },
            sampler: |r, rng| {
                let mut xs = random_ints(r, 3, rng);
                // A share of cases repeat a value so ties are exercised.
                if rng.gen_range(0..4) == 0 {
                    let (i, j) = (rng.gen_range(0..3), rng.gen_range(0..3));
                    xs[i] = xs[j];
                }
                xs.into_iter().map(Value::Int).collect()
            },
            reference: |a| {
                let mut xs: Vec<i64> = a.iter().map(int_arg).collect();
                xs.sort_unstable();
                Value::Int(xs[1])
            },
        },
        ProblemSpec {
            name: "vector-average",
            signature: Signature::new(&[("input1", Type::seq(DOUBLE))], DOUBLE),
            relevant_types: vec![INT, DOUBLE, BOOL, Type::seq(DOUBLE)],
            ranges: Ranges { int: (0, 0), double: (-1000.0, 1000.0), len: (1, 50) },
            literals: vec![],
            ercs: vec![],
            error_fn: ErrorFn::AbsDouble,
            edge_cases: || {
                let cases: &[&[f64]] = &[
                    &[0.0],
                    &[100.0],
                    &[-100.0],
                    &[1000.0],
                    &[-1000.0],
                    &[2.0, 1.5],
                    &[-12.5, 12.5],
                    &[1000.0, 1000.0, -1000.0],
                    &[0.5, 0.25, 0.125, 0.0625],
                ];
                cases.iter().map(|c| vec![Value::doubles(c)]).collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                let xs: Vec<f64> = (0..n).map(|_| round4(rng.gen_range(r.double.0..r.double.1))).collect();
                vec![Value::doubles(&xs)]
            },
            reference: |a| match &a[0] {
                Value::Seq(items) => {
                    let sum = items.iter().fold(0.0, |acc, v| match v {
                        Value::Double(d) => acc + d,
                        _ => panic!("vector-average takes doubles"),
                    });
                    Value::Double(sum / items.len() as f64)
                }
                _ => panic!("vector-average takes a sequence"),
            },
        },
        ProblemSpec {
            name: "compare-string-lengths",
            signature: Signature::new(&[("input1", STRING), ("input2", STRING), ("input3", STRING)], BOOL),
            relevant_types: vec![STRING, BOOL, INT],
            ranges: Ranges { int: (0, 0), double: no_double, len: (0, 49) },
            literals: vec![],
            ercs: vec![Erc::Bool],
            error_fn: ErrorFn::Exact,
            edge_cases: || {
                [
                    ["", "", ""],
                    ["a", "bb", "ccc"],
                    ["ccc", "bb", "a"],
                    ["", "a", "bc"],
                    ["", "a", "a"],
                    ["a", "a", "bc"],
                    ["abc", "", "d"],
                    ["", "", "a"],
                    ["a", "", ""],
                    ["", "bbbbbbbbbbbbbb", "ccccccccccccccccccccccccccccccccccccccccccccccccc"],
                ]
                .iter()
                .map(|xs| xs.iter().map(|s| Value::str(s)).collect())
                .collect()
            },
            sampler: |r, rng| {
                let mut lens: Vec<usize> = (0..3).map(|_| random_len(r, rng)).collect();
                // Half the cases are sorted so true outputs are common.
                if rng.gen_bool(0.5) {
                    lens.sort_unstable();
                }
                lens.into_iter().map(|n| Value::str(&random_string(n, rng))).collect()
            },
            reference: |a| {
                let n: Vec<usize> = a.iter().map(|v| str_arg(v).chars().count()).collect();
                Value::Bool(n[0] < n[1] && n[1] < n[2])
            },
        },
        ProblemSpec {
            name: "last-index-of-zero",
            signature: Signature::new(&[("input1", seq_int())], INT),
            relevant_types: vec![INT, BOOL, seq_int()],
            ranges: Ranges { int: (-50, 50), double: no_double, len: (1, 50) },
            literals: vec![(Value::Int(0), INT)],
            ercs: vec![Erc::Int { lo: -50, hi: 50 }],
            error_fn: ErrorFn::AbsInt,
            edge_cases: || {
                let cases: &[&[i64]] = &[
                    &[0],
                    &[0, 0],
                    &[0, 1],
                    &[1, 0],
                    &[0, 0, 0],
                    &[5, 0, 3, 0, 7],
                    &[-50, 0, 50],
                    &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
                    &[9, 8, 7, 6, 5, 4, 3, 2, 1, 0],
                    &[0, -1, 0, -1, 0, -1],
                ];
                cases.iter().map(|c| vec![ints(c)]).collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                let mut xs = random_ints(r, n, rng);
                let zeros = rng.gen_range(1..=n.min(5));
                for _ in 0..zeros {
                    let k = rng.gen_range(0..n);
                    xs[k] = 0;
                }
                vec![ints(&xs)]
            },
            reference: |a| {
                let xs = ints_arg(&a[0]);
                Value::Int(xs.iter().rposition(|&x| x == 0).map_or(-1, |i| i as i64))
            },
        },
        ProblemSpec {
            name: "replace-space-with-newline",
            signature: Signature::new(&[("input1", STRING)], Type::tuple(STRING, INT)),
            relevant_types: vec![STRING, CHAR, INT, BOOL],
            ranges: Ranges { int: (0, 0), double: no_double, len: (0, 20) },
            literals: vec![(Value::Char(' '), CHAR), (Value::Char('\n'), CHAR)],
            ercs: vec![Erc::Char, Erc::Str { max_len: 20 }],
            error_fn: ErrorFn::PrintedAndCount,
            edge_cases: || {
                [
                    "", "A", "*", " ", "s", "B ", "  ", " D", "ef", "!!", " F ", "T L", "4ps", "q  ", "   ",
                    "  e", "hi ", "  $  ", "      9", "i !i !i !i !i", "88888888888888888888",
                    "                    ", "ssssssssssssssssssss", "1 1 1 1 1 1 1 1 1 1 ",
                ]
                .iter()
                .map(|s| vec![Value::str(s)])
                .collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                let s: String = (0..n)
                    .map(|_| if rng.gen_bool(0.25) { ' ' } else { char::from(rng.gen_range(33u8..127)) })
                    .collect();
                vec![Value::str(&s)]
            },
            reference: |a| {
                let s = str_arg(&a[0]);
                let count = s.chars().filter(|c| !c.is_whitespace()).count() as i64;
                Value::seq(vec![Value::str(&s.replace(' ', "\n")), Value::Int(count)])
            },
        },
        ProblemSpec {
            name: "small-or-large",
            signature: Signature::new(&[("input1", INT)], STRING),
            relevant_types: vec![INT, BOOL, STRING],
            ranges: Ranges { int: (-10000, 10000), double: no_double, len: no_len },
            literals: vec![(Value::str("small"), STRING), (Value::str("large"), STRING)],
            ercs: vec![Erc::Int { lo: -10000, hi: 10000 }],
            error_fn: ErrorFn::Levenshtein,
            edge_cases: || {
                [-10000, 0, 980, 999, 1000, 1001, 1500, 1999, 2000, 2001, 2020, 10000]
                    .iter()
                    .map(|&i| vec![Value::Int(i)])
                    .collect()
            },
            sampler: |r, rng| vec![Value::Int(rng.gen_range(r.int.0..=r.int.1))],
            reference: |a| {
                let n = int_arg(&a[0]);
                Value::str(if n < 1000 {
                    "small"
                } else if n >= 2000 {
                    "large"
                } else {
                    ""
                })
            },
        },
        ProblemSpec {
            name: "count-odds",
            signature: Signature::new(&[("input1", seq_int())], INT),
            relevant_types: vec![INT, BOOL, seq_int()],
            ranges: Ranges { int: (-1000, 1000), double: no_double, len: (0, 50) },
            literals: vec![(Value::Int(0), INT), (Value::Int(1), INT), (Value::Int(2), INT)],
            ercs: vec![Erc::Int { lo: -1000, hi: 1000 }],
            error_fn: ErrorFn::AbsInt,
            edge_cases: || {
                let cases: &[&[i64]] = &[
                    &[],
                    &[-10],
                    &[-9],
                    &[-2],
                    &[-1],
                    &[0],
                    &[1],
                    &[2],
                    &[9],
                    &[10],
                    &[-947, 9],
                    &[1, 3, 5, 7, 9],
                    &[2, 4, 6, 8],
                    &[-1000, 999, -999, 1000],
                ];
                cases.iter().map(|c| vec![ints(c)]).collect()
            },
            sampler: |r, rng| {
                let n = random_len(r, rng);
                vec![ints(&random_ints(r, n, rng))]
            },
            reference: |a| Value::Int(ints_arg(&a[0]).iter().filter(|x| *x % 2 != 0).count() as i64),
        },
        ProblemSpec {
            name: "digits",
            signature: Signature::new(&[("input1", INT)], STRING),
            relevant_types: vec![INT, BOOL, CHAR, STRING],
            ranges: Ranges { int: (-9_999_999_999, 9_999_999_999), double: no_double, len: no_len },
            literals: vec![(Value::Char('\n'), CHAR)],
            ercs: vec![Erc::Int { lo: -10, hi: 10 }],
            error_fn: ErrorFn::Levenshtein,
            edge_cases: || {
                [-9_495_969_832, -7_412_512_474, 0, 1, -1, 9, -9, 10, -10, 100, -100, 1000, 9_999_999_999]
                    .iter()
                    .map(|&i| vec![Value::Int(i)])
                    .collect()
            },
            sampler: |r, rng| {
                // Magnitudes are spread over digit counts rather than values.
                let digits = rng.gen_range(1..=10u32);
                let hi = 10i64.pow(digits) - 1;
                let n = rng.gen_range(0..=hi.min(r.int.1));
                vec![Value::Int(if rng.gen_bool(0.5) { -n } else { n })]
            },
            reference: |a| {
                let n = int_arg(&a[0]);
                let mut lines: Vec<String> = n.unsigned_abs().to_string().chars().rev().map(String::from).collect();
                if n < 0 {
                    let last = lines.last_mut().expect("at least one digit");
                    last.insert(0, '-');
                }
                Value::str(&lines.join("\n"))
            },
        },
        ProblemSpec {
            name: "for-loop-index",
            signature: Signature::new(&[("input1", INT), ("input2", INT), ("input3", INT)], STRING),
            relevant_types: vec![INT, BOOL, STRING],
            ranges: Ranges { int: (-500, 500), double: no_double, len: (1, 10) },
            literals: vec![],
            ercs: vec![Erc::Int { lo: -10, hi: 10 }],
            error_fn: ErrorFn::Levenshtein,
            edge_cases: || {
                [[-500, 500, 1], [-500, 500, 10], [0, 1, 1], [0, 10, 10], [-10, 10, 3], [499, 500, 7], [5, 6, 1]]
                    .iter()
                    .map(|xs| xs.iter().map(|&i| Value::Int(i)).collect())
                    .collect()
            },
            sampler: |r, rng| {
                let (start, end) = loop {
                    let a = rng.gen_range(r.int.0..=r.int.1);
                    let b = rng.gen_range(r.int.0..=r.int.1);
                    if a < b {
                        break (a, b);
                    }
                };
                let step = rng.gen_range(r.len.0 as i64..=r.len.1 as i64);
                vec![Value::Int(start), Value::Int(end), Value::Int(step)]
            },
            reference: |a| {
                let (start, end, step) = (int_arg(&a[0]), int_arg(&a[1]), int_arg(&a[2]));
                let lines: Vec<String> = (start..end).step_by(step.max(1) as usize).map(|i| i.to_string()).collect();
                Value::str(&lines.join("\n"))
            },
        },
    ]
}

#[derive(Debug, Error)]
pub enum CaseIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
struct CaseRecord {
    problem: String,
    split: String,
    inputs: Vec<String>,
    expected: String,
}

/// Writes cases as JSON lines: problem, split, inputs and expected output,
/// with values in literal syntax.
pub fn export_cases(problem: &str, cases: &CaseSet, out: &mut impl Write) -> Result<(), CaseIoError> {
    for (split, set) in [("train", &cases.train), ("test", &cases.test)] {
        for c in set {
            let rec = CaseRecord {
                problem: problem.to_string(),
                split: split.to_string(),
                inputs: c.inputs.iter().map(Value::to_string).collect(),
                expected: c.expected.to_string(),
            };
            serde_json::to_writer(&mut *out, &rec).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Reads the records of [`export_cases`], returning the problem name and cases.
pub fn import_cases(input: impl BufRead) -> Result<(String, CaseSet), CaseIoError> {
    let mut name = String::new();
    let mut cases = CaseSet::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CaseIoError::Parse { line: i + 1, message };
        let rec: CaseRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if name.is_empty() {
            name = rec.problem.clone();
        } else if name != rec.problem {
            return Err(bad(format!("mixed problems {name} and {}", rec.problem)));
        }
        let inputs = rec
            .inputs
            .iter()
            .map(|s| s.parse::<Value>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let expected = rec.expected.parse::<Value>().map_err(|e| bad(e.to_string()))?;
        let case = Case { inputs, expected };
        match rec.split.as_str() {
            "train" => cases.train.push(case),
            "test" => cases.test.push(case),
            other => return Err(bad(format!("unknown split {other}"))),
        }
    }
    Ok((name, cases))
}
