//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use cbgp_core::ast::{check_type, render_source, sym, Expr, Symbol, TypeEnv, TypedAst};
use cbgp_core::compiler::{compile_genome, Compiler, Signature};
use cbgp_core::evolution::{
    lexicase_select, simplify_observed, umad, Evaluator, GaConfig, Individual,
};
use cbgp_core::genome::{random_genome, translate_plushy, Genome};
use cbgp_core::problems::problem;
use cbgp_core::runtime::{evaluate, lookup, Value, DEFAULT_STEP_BUDGET};
use cbgp_core::types::{merge, substitute, unify, FreshIds, Scheme, Substitution, Type, TypeVar};
use cbgp_harness::experiment::{execute_run, load_program, log_lines, program_passes};
use cbgp_harness::{run_experiment, ExperimentConfig, ExperimentOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORKED_EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
const FUZZ_GENOMES: usize = 100_000;
const FUZZ_PROBLEMS: [&str; 3] = ["smallest", "negative-to-zero", "compare-string-lengths"];
const FUZZ_LIMIT: Duration = Duration::from_secs(600);
const DESK_PROBLEMS: [&str; 3] = ["smallest", "mirror-image", "number-io"];
const DESK_RUNS: usize = 20;
const DESK_POPULATION: usize = 200;
const DESK_GENERATIONS: usize = 100;
const DESK_MIN_RATE: f64 = 0.80;
const MIN_GENERALIZATION: f64 = 0.95;
const SIZE_RUNS: usize = 10;
const SMALLEST_MAX_SIZE: usize = 9;
const VECTORS_SUMMED_MAX_SIZE: usize = 6;
const SIMPLIFY_CALLS: usize = 1_000;
const SIMPLIFY_STEPS: usize = 25;
const MIN_SHRINKING_SHARE: f64 = 0.99;
const UMAD_SAMPLES: usize = 10_000;
const UMAD_MEAN_RANGE: (f64, f64) = (98.0, 102.0);
const LEXICASE_DRAWS: usize = 10_000;
const LEXICASE_C_MAX: f64 = 0.01;
const LEXICASE_AB_TOLERANCE: f64 = 0.03;
const RANDOM_TYPE_CHECKS: usize = 10_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn desk_config(problems: &[&str], runs: usize, base_seed: u64, dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        problems: problems.iter().map(|p| p.to_string()).collect(),
        runs,
        base_seed,
        output_dir: dir.to_owned(),
        workers: std::thread::available_parallelism().map_or(1, usize::from),
        ga: GaConfig { population_size: DESK_POPULATION, max_generations: DESK_GENERATIONS, ..GaConfig::default() },
    }
}

fn env(names: &[&str]) -> TypeEnv {
    TypeEnv::from_builtins(names.iter().map(|n| lookup(n).expect("builtin").get()))
}

fn worked_example() -> Verdict {
    let start = Instant::now();
    let genome: Genome = "OPEN Local(1) Lit(0:Int) Var(max) APP CLOSE ABS[Int] \
        OPEN Var(input) Local(1) Var(map) APP CLOSE LET"
        .parse()
        .expect("genome text");
    let sig = Signature::new(&[("input", Type::seq(Type::INT))], Type::seq(Type::INT));
    let Ok(ast) = compile_genome(&genome, &sig, &env(&["max", "map"])) else {
        return verdict(false, "no program");
    };
    let tree = Expr::let_in(
        sym("a-1"),
        Expr::abs(
            vec![(sym("a-0"), Type::INT)],
            Expr::app(Expr::var("max"), vec![Expr::int(0), Expr::local("a-0")]),
        ),
        Expr::app(Expr::var("map"), vec![Expr::local("a-1"), Expr::local("input")]),
    );
    let source = render_source(&ast, "negative-to-zero", &[sym("input")]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reference = problem("negative-to-zero").expect("catalog");
    let mismatches = (0..20)
        .filter(|_| {
            let n = rng.gen_range(0..=50);
            let xs: Vec<i64> = (0..n).map(|_| rng.gen_range(-1000..=1000)).collect();
            let input = Value::ints(&xs);
            let out = evaluate(&ast, &[(sym("input"), input.clone())], DEFAULT_STEP_BUDGET);
            out.ok() != Some(reference.reference_solution(&[input]))
        })
        .count();
    let elapsed = start.elapsed();
    let pass = ast.expr == tree
        && ast.ty == Type::seq(Type::INT)
        && source == "(defn negative-to-zero [input] (let [a-1 (fn [a-0] (max 0 a-0))] (map a-1 input)))"
        && mismatches == 0
        && elapsed < WORKED_EXAMPLE_LIMIT;
    verdict(pass, format!("{source} : {}, {mismatches} mismatches, {elapsed:.2?}", ast.ty))
}

fn type_safety_fuzz() -> Verdict {
    let start = Instant::now();
    let ga = GaConfig::default();
    let mut faults = Vec::new();
    let (mut pushed, mut programs, mut values, mut errors) = (0usize, 0usize, 0usize, 0usize);
    for (k, name) in FUZZ_PROBLEMS.iter().enumerate() {
        let p = problem(name).expect("catalog");
        let env = p.type_env();
        let src = p.genetic_source();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        for _ in 0..FUZZ_GENOMES {
            let genome = random_genome(&src, ga.genome_size_range(), &mut rng);
            let mut bad = 0usize;
            let mut count = 0usize;
            let mut obs = |a: &TypedAst, locals: &[(Symbol, Scheme)]| {
                count += 1;
                if check_type(a, &env.extend(locals)).is_err() {
                    bad += 1;
                }
            };
            let out = Compiler::with_observer(&env, &mut obs).compile(&translate_plushy(genome.genes()), &p.signature);
            pushed += count;
            if bad > 0 {
                faults.push(format!("{name}: {bad} ill-typed pushes in {genome}"));
            }
            let Ok(ast) = out else { continue };
            programs += 1;
            let inputs = p.sample_inputs(&mut rng);
            let args: Vec<(Symbol, Value)> = p.signature.arg_names.iter().cloned().zip(inputs).collect();
            match evaluate(&ast, &args, ga.step_budget) {
                Ok(v) if v.conforms(&ast.ty) => values += 1,
                Ok(v) => faults.push(format!("{name}: {v} is not a {}", ast.ty)),
                Err(_) => errors += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{} genomes, {pushed} pushed ASTs checked, {programs} programs, {values} values, {errors} runtime errors, {} faults, {elapsed:.1?}",
        FUZZ_GENOMES * FUZZ_PROBLEMS.len(),
        faults.len()
    );
    if let Some(f) = faults.first() {
        eprintln!("first fault: {f}");
    }
    verdict(faults.is_empty() && elapsed < FUZZ_LIMIT, detail)
}

fn desk_rates(outcome: &ExperimentOutcome) -> Verdict {
    let rows: Vec<String> = DESK_PROBLEMS
        .iter()
        .map(|p| {
            let r = outcome.report.row(p).expect("row");
            format!("{p} {:.0}%", r.solution_rate * 100.0)
        })
        .collect();
    let pass = !outcome.has_failures()
        && DESK_PROBLEMS.iter().all(|p| outcome.report.row(p).is_some_and(|r| r.solution_rate >= DESK_MIN_RATE));
    verdict(pass, rows.join(", "))
}

fn generalization(outcome: &ExperimentOutcome, dir: &std::path::Path) -> Verdict {
    let perfect = outcome.summaries.iter().filter(|s| s.train_perfect).count();
    let general = outcome.summaries.iter().filter(|s| s.is_generalized_solution()).count();
    let rate = if perfect == 0 { 0.0 } else { general as f64 / perfect as f64 };
    // Every claimed solution must reload from its file and pass the test cases again.
    let ga = GaConfig { population_size: DESK_POPULATION, max_generations: DESK_GENERATIONS, ..GaConfig::default() };
    let unreloadable = outcome
        .summaries
        .iter()
        .filter(|s| s.is_generalized_solution())
        .filter(|s| {
            let p = problem(&s.problem).expect("catalog");
            let Some(file) = &s.program_file else { return true };
            let Ok(text) = fs::read_to_string(dir.join(file)) else { return true };
            let Ok(program) = load_program(p, &text) else { return true };
            let cases = p.generate_cases_sized(s.seed, ga.n_train, ga.n_test);
            !program_passes(p, &program, &cases.test, &ga)
        })
        .count();
    verdict(
        rate >= MIN_GENERALIZATION && unreloadable == 0,
        format!("{general}/{perfect} train-perfect runs generalize ({rate:.3}), {unreloadable} persisted solutions fail on reload"),
    )
}

fn solution_sizes(desk: &ExperimentOutcome, dir: &std::path::Path) -> Verdict {
    let vs = run_experiment(&desk_config(&["vectors-summed"], SIZE_RUNS, 500, &dir.join("vectors-summed-runs")))
        .expect("experiment");
    let smallest = desk.report.row("smallest").and_then(|r| r.min_size);
    let vectors = vs.report.row("vectors-summed").and_then(|r| r.min_size);
    let pass = smallest.is_some_and(|s| s <= SMALLEST_MAX_SIZE) && vectors.is_some_and(|s| s <= VECTORS_SUMMED_MAX_SIZE);
    verdict(pass, format!("smallest min {smallest:?}, vectors-summed min {vectors:?}"))
}

fn simplification_safety() -> Verdict {
    let p = problem("smallest").expect("catalog");
    let eval = Evaluator::new(p);
    let cases = p.generate_cases(9);
    let src = p.genetic_source();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worse, mut accepted, mut shrinking) = (0usize, 0usize, 0usize);
    for _ in 0..SIMPLIFY_CALLS {
        let ind = eval.evaluate(random_genome(&src, (20, 120), &mut rng), &cases.train);
        let out = simplify_observed(&ind, SIMPLIFY_STEPS, &eval, &cases.train, &mut rng, |before, after| {
            accepted += 1;
            if after.genome.len() <= before.genome.len() {
                shrinking += 1;
            }
        });
        if out.total_error > ind.total_error {
            worse += 1;
        }
    }
    let share = if accepted == 0 { 1.0 } else { shrinking as f64 / accepted as f64 };
    verdict(
        worse == 0 && share >= MIN_SHRINKING_SHARE,
        format!("{SIMPLIFY_CALLS} calls, {worse} increased error, {shrinking}/{accepted} accepted steps non-increasing"),
    )
}

fn umad_neutrality() -> Verdict {
    let src = problem("smallest").expect("catalog").genetic_source();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let genome = random_genome(&src, (100, 100), &mut rng);
    let total: usize = (0..UMAD_SAMPLES).map(|_| umad(&genome, 0.1, &src, &mut rng).len()).sum();
    let mean = total as f64 / UMAD_SAMPLES as f64;
    verdict(
        genome.len() == 100 && (UMAD_MEAN_RANGE.0..=UMAD_MEAN_RANGE.1).contains(&mean),
        format!("mean length {mean:.2} over {UMAD_SAMPLES} mutations"),
    )
}

fn lexicase_toy() -> Verdict {
    let ind = |errors: [f64; 2], tag: i64| Individual {
        genome: Genome(vec![cbgp_core::genome::Gene::Lit(Value::Int(tag), Type::INT)]),
        program: None,
        errors: errors.to_vec(),
        total_error: errors.iter().sum(),
    };
    let pop = vec![ind([0.0, 5.0], 0), ind([5.0, 0.0], 1), ind([1.0, 1.0], 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = [0usize; 3];
    for _ in 0..LEXICASE_DRAWS {
        let pick = lexicase_select(&pop, &mut rng);
        let i = pop.iter().position(|p| p.genome == pick.genome).expect("member");
        counts[i] += 1;
    }
    let f = counts.map(|c| c as f64 / LEXICASE_DRAWS as f64);
    let pass = f[2] < LEXICASE_C_MAX
        && (f[0] - 0.5).abs() <= LEXICASE_AB_TOLERANCE
        && (f[1] - 0.5).abs() <= LEXICASE_AB_TOLERANCE;
    verdict(pass, format!("A {:.3}, B {:.3}, C {:.3}", f[0], f[1], f[2]))
}

fn random_type(rng: &mut ChaCha8Rng, depth: u32) -> Type {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..6) {
            0 => Type::INT,
            1 => Type::BOOLEAN,
            2 => Type::STRING,
            _ => Type::var(["a", "b", "c"][rng.gen_range(0..3)]),
        };
    }
    match rng.gen_range(0..3) {
        0 => Type::seq(random_type(rng, depth - 1)),
        1 => Type::tuple(random_type(rng, depth - 1), random_type(rng, depth - 1)),
        _ => {
            let n = rng.gen_range(0..3);
            Type::func((0..n).map(|_| random_type(rng, depth - 1)).collect(), random_type(rng, depth - 1))
        }
    }
}

fn unification_suite() -> Verdict {
    let t = |s: &str| s.parse::<Type>().expect("type text");
    let a = TypeVar::named("a");
    let bind = |pairs: &[(&str, Type)]| {
        Substitution::from_bindings(pairs.iter().map(|(v, t)| (TypeVar::named(v), t.clone()))).expect("valid")
    };
    let mut fresh = FreshIds::new();
    let identity: Scheme = "forall a. a -> a".parse().expect("scheme");
    let map: Scheme = "forall a b. ((a -> b), Sequence[a]) -> Sequence[b]".parse().expect("scheme");
    let examples = [
        ("unify Sequence[a] with Sequence[Int]", unify(&t("Sequence[a]"), &t("Sequence[Int]")).ok() == Some(bind(&[("a", Type::INT)]))),
        ("unify Int with Int", unify(&Type::INT, &Type::INT).is_ok_and(|s| s.is_empty())),
        ("unify Int with Boolean fails", unify(&Type::INT, &Type::BOOLEAN).is_err()),
        ("occurs check", unify(&Type::Var(a.clone()), &Type::seq(Type::Var(a.clone()))).is_err()),
        (
            "substitute into map-like type",
            substitute(&bind(&[("a", Type::INT)]), &t("(Sequence[a], a) -> Sequence[a]"))
                == t("(Sequence[Int], Int) -> Sequence[Int]"),
        ),
        ("substitute with empty", substitute(&Substitution::new(), &Type::DOUBLE) == Type::DOUBLE),
        ("unbound var untouched", substitute(&bind(&[("a", Type::INT)]), &t("b")) == t("b")),
        (
            "merge disjoint",
            merge(&bind(&[("a", Type::INT)]), &bind(&[("b", Type::STRING)])).ok()
                == Some(bind(&[("a", Type::INT), ("b", Type::STRING)])),
        ),
        ("merge duplicate", merge(&bind(&[("a", Type::INT)]), &bind(&[("a", Type::INT)])).ok() == Some(bind(&[("a", Type::INT)]))),
        ("merge conflict", merge(&bind(&[("a", Type::INT)]), &bind(&[("a", Type::BOOLEAN)])).is_err()),
        ("instantiate identity", {
            let i = identity.instantiate(&mut fresh);
            i.alpha_eq(&t("a -> a")) && i.free_vars().iter().all(|v| matches!(v, TypeVar::Fresh(_)))
        }),
        ("instantiate map", {
            let m = map.instantiate(&mut fresh);
            m.alpha_eq(map.body()) && m.free_vars().len() == 2
        }),
        ("instantiate monomorphic", Scheme::mono(Type::INT).instantiate(&mut fresh) == Type::INT),
    ];
    let failed: Vec<&str> = examples.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut unified, mut violations) = (0usize, 0usize);
    for _ in 0..RANDOM_TYPE_CHECKS {
        let (x, y) = (random_type(&mut rng, 3), random_type(&mut rng, 3));
        if let Ok(s) = unify(&x, &y) {
            unified += 1;
            let cyclic = s.iter().any(|(v, t)| t.occurs(v));
            if s.apply(&x) != s.apply(&y) || cyclic {
                violations += 1;
            }
        }
    }
    verdict(
        failed.is_empty() && violations == 0,
        format!(
            "{}/{} examples, {RANDOM_TYPE_CHECKS} random pairs ({unified} unifiable), {violations} violations{}",
            examples.len() - failed.len(),
            examples.len(),
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

fn determinism(dir: &std::path::Path) -> Verdict {
    let p = problem("median").expect("catalog");
    let ga = GaConfig { population_size: 100, max_generations: 15, ..GaConfig::default() };
    let same_run = log_lines(&execute_run(p, &ga, 0, 77)) == log_lines(&execute_run(p, &ga, 0, 77));
    let run_batch = |sub: &str| {
        let mut cfg = desk_config(&["median", "count-odds"], 2, 31, &dir.join(sub));
        cfg.ga = ga.clone();
        run_experiment(&cfg).expect("experiment");
        let mut files = Vec::new();
        for problem in ["median", "count-odds"] {
            for run in 0..2 {
                files.push(fs::read(dir.join(sub).join(format!("{problem}/run-{run:03}.jsonl"))).expect("log"));
            }
        }
        files.push(fs::read(dir.join(sub).join("report.csv")).expect("report"));
        files
    };
    let batch = run_batch("first") == run_batch("second");
    verdict(same_run && batch, format!("single run replay identical: {same_run}, batch logs and report identical: {batch}"))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().expect("tempdir");
    let desk_dir = dir.path().join("desk");
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    results.push(("1 golden worked example", worked_example()));
    results.push(("2 type-safety fuzz", type_safety_fuzz()));
    let started = Instant::now();
    let desk = run_experiment(&desk_config(&DESK_PROBLEMS, DESK_RUNS, 0, &desk_dir)).expect("experiment");
    eprintln!("desk-scale batch took {:.1?}", started.elapsed());
    results.push(("3 desk-scale solution rates", desk_rates(&desk)));
    results.push(("4 generalization", generalization(&desk, &desk_dir)));
    results.push(("5 solution size", solution_sizes(&desk, dir.path())));
    results.push(("6 simplification safety", simplification_safety()));
    results.push(("7 UMAD neutrality", umad_neutrality()));
    results.push(("8 lexicase toy oracle", lexicase_toy()));
    results.push(("9 unification suite", unification_suite()));
    results.push(("10 determinism", determinism(dir.path())));
    for (name, v) in &results {
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|(_, v)| !v.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
