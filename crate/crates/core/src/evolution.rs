//! The generational search: evaluation with penalties, lexicase selection,
//! UMAD mutation and hill-climbing simplification.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{ast_size, TypeEnv, TypedAst};
use crate::compiler::{compile_genome, Signature};
use crate::genome::{random_gene, random_genome, GeneticSource, Genome};
use crate::problems::{Case, CaseSet, ProblemSpec, N_TEST, N_TRAIN, PENALTY};
use crate::runtime::{evaluate, Value, DEFAULT_STEP_BUDGET};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub umad_rate: f64,
    pub simplification_steps: usize,
    pub genome_size_min: usize,
    pub genome_size_max: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub penalty: f64,
    pub step_budget: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 1000,
            max_generations: 300,
            umad_rate: 0.1,
            simplification_steps: 2000,
            genome_size_min: 50,
            genome_size_max: 250,
            n_train: N_TRAIN,
            n_test: N_TEST,
            penalty: PENALTY,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("genome_size_min exceeds genome_size_max")]
    SizeRange,
    #[error("umad_rate must lie in [0, 1]")]
    Rate,
    #[error("penalty must exceed every achievable case error")]
    Penalty,
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("population_size", self.population_size),
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("genome_size_max", self.genome_size_max),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::NotPositive(name));
        }
        if self.step_budget == 0 {
            return Err(ConfigError::NotPositive("step_budget"));
        }
        if self.genome_size_min > self.genome_size_max {
            return Err(ConfigError::SizeRange);
        }
        if !(0.0..=1.0).contains(&self.umad_rate) {
            return Err(ConfigError::Rate);
        }
        if self.penalty < PENALTY {
            return Err(ConfigError::Penalty);
        }
        Ok(())
    }

    pub fn genome_size_range(&self) -> (usize, usize) {
        (self.genome_size_min, self.genome_size_max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub program: Option<TypedAst>,
    pub errors: Vec<f64>,
    pub total_error: f64,
}

impl Individual {
    pub fn is_solution(&self) -> bool {
        self.total_error == 0.0
    }

    pub fn program_size(&self) -> Option<usize> {
        self.program.as_ref().map(ast_size)
    }
}

/// Compiles and scores genomes for one problem.
pub struct Evaluator<'p> {
    pub problem: &'p ProblemSpec,
    pub env: TypeEnv,
    pub budget: u64,
    pub penalty: f64,
}

impl<'p> Evaluator<'p> {
    pub fn new(problem: &'p ProblemSpec) -> Self {
        Self { problem, env: problem.type_env(), budget: DEFAULT_STEP_BUDGET, penalty: PENALTY }
    }

    pub fn with_config(problem: &'p ProblemSpec, cfg: &GaConfig) -> Self {
        Self { budget: cfg.step_budget, penalty: cfg.penalty, ..Self::new(problem) }
    }

    pub fn signature(&self) -> &Signature {
        &self.problem.signature
    }

    pub fn compile(&self, genome: &Genome) -> Option<TypedAst> {
        compile_genome(genome, self.signature(), &self.env).ok()
    }

    pub fn run_case(&self, ast: &TypedAst, inputs: &[Value]) -> Result<Value, crate::runtime::RuntimeError> {
        let args: Vec<_> = self.signature().arg_names.iter().cloned().zip(inputs.iter().cloned()).collect();
        evaluate(ast, &args, self.budget)
    }

    /// Per-case errors; failing cases score the penalty.
    pub fn errors(&self, ast: &TypedAst, cases: &[Case]) -> Vec<f64> {
        cases
            .iter()
            .map(|c| {
                let out = self.run_case(ast, &c.inputs);
                if out.is_err() {
                    self.penalty
                } else {
                    self.problem.error(&c.expected, &out)
                }
            })
            .collect()
    }

    pub fn evaluate(&self, genome: Genome, cases: &[Case]) -> Individual {
        let program = self.compile(&genome);
        let errors = match &program {
            Some(ast) => self.errors(ast, cases),
            None => vec![self.penalty; cases.len()],
        };
        let total_error = errors.iter().sum();
        Individual { genome, program, errors, total_error }
    }

    /// Whether the program reproduces every case exactly.
    pub fn passes(&self, ast: &TypedAst, cases: &[Case]) -> bool {
        cases.iter().all(|c| {
            let out = self.run_case(ast, &c.inputs);
            out.is_ok() && self.problem.error(&c.expected, &out) == 0.0
        })
    }
}

/// Lexicase selection: filters the population case by case, in a random
/// order, down to the individuals with the lowest error, then picks one of
/// the survivors uniformly.
pub fn lexicase_select<'a, R: Rng + ?Sized>(pop: &'a [Individual], rng: &mut R) -> &'a Individual {
    let mut order: Vec<usize> = (0..pop.first().map_or(0, |i| i.errors.len())).collect();
    order.shuffle(rng);
    &pop[lexicase_index(pop, &order, rng)]
}

/// Lexicase selection under a given case order.
pub fn lexicase_index<R: Rng + ?Sized>(pop: &[Individual], order: &[usize], rng: &mut R) -> usize {
    assert!(!pop.is_empty(), "lexicase selection needs a population");
    let mut survivors: Vec<usize> = (0..pop.len()).collect();
    for &case in order {
        if survivors.len() <= 1 {
            break;
        }
        let best = survivors.iter().map(|&i| pop[i].errors[case]).fold(f64::INFINITY, f64::min);
        survivors.retain(|&i| pop[i].errors[case] == best);
    }
    *survivors.choose(rng).expect("at least one survivor")
}

/// Uniform mutation by addition and deletion. Each gene gains a new random
/// neighbour (before or after it) with probability `rate`; each gene of the
/// result is then deleted with probability `rate / (1 + rate)`.
pub fn umad<R: Rng + ?Sized>(genome: &Genome, rate: f64, src: &GeneticSource, rng: &mut R) -> Genome {
    let mut grown = Vec::with_capacity(genome.len() * 2);
    for g in genome.genes() {
        if rng.gen_bool(rate) {
            let new = random_gene(src, rng);
            if rng.gen_bool(0.5) {
                grown.push(new);
                grown.push(g.clone());
            } else {
                grown.push(g.clone());
                grown.push(new);
            }
        } else {
            grown.push(g.clone());
        }
    }
    let p_delete = rate / (1.0 + rate);
    Genome(grown.into_iter().filter(|_| !rng.gen_bool(p_delete)).collect())
}

/// Proposes an order-preserving subset by deleting 1 to 4 random genes.
pub fn simplification_proposal<R: Rng + ?Sized>(genome: &Genome, rng: &mut R) -> Genome {
    let n = genome.len();
    let k = rng.gen_range(1..=4).min(n);
    let drop = rand::seq::index::sample(rng, n, k);
    let mut keep = vec![true; n];
    for i in drop.iter() {
        keep[i] = false;
    }
    Genome(genome.genes().iter().zip(keep).filter(|(_, k)| *k).map(|(g, _)| g.clone()).collect())
}

/// Hill climbing on genome subsets: a proposal replaces the incumbent when
/// its total error is no worse.
pub fn simplify<R: Rng + ?Sized>(
    ind: &Individual,
    steps: usize,
    eval: &Evaluator,
    cases: &[Case],
    rng: &mut R,
) -> Individual {
    simplify_observed(ind, steps, eval, cases, rng, |_, _| {})
}

/// [`simplify`] reporting every accepted step as `(previous, accepted)`.
pub fn simplify_observed<R: Rng + ?Sized>(
    ind: &Individual,
    steps: usize,
    eval: &Evaluator,
    cases: &[Case],
    rng: &mut R,
    mut on_accept: impl FnMut(&Individual, &Individual),
) -> Individual {
    let mut best = ind.clone();
    for _ in 0..steps {
        if best.genome.is_empty() {
            break;
        }
        let candidate = eval.evaluate(simplification_proposal(&best.genome, rng), cases);
        if candidate.total_error <= best.total_error {
            on_accept(&best, &candidate);
            best = candidate;
        }
    }
    best
}

/// Summary of one evaluated generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_total_error: f64,
    pub best_of_run_error: f64,
    pub mean_total_error: f64,
    pub solution_count: usize,
    pub mean_genome_length: f64,
    pub mean_program_size: f64,
    pub program_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best: Individual,
    /// Generation in which `best` was found.
    pub best_generation: usize,
    /// Number of generations evaluated.
    pub generations: usize,
    pub stats: Vec<GenerationStats>,
    pub cases: CaseSet,
}

impl RunResult {
    pub fn solved(&self) -> bool {
        self.best.is_solution()
    }
}

/// Order used to pick the best individual: total error, then program size
/// (absent programs last), then position.
fn better(a: &Individual, b: &Individual) -> bool {
    let size = |i: &Individual| i.program_size().unwrap_or(usize::MAX);
    (a.total_error, size(a)) < (b.total_error, size(b))
}

fn generation_stats(pop: &[Individual], generation: usize, best_of_run: f64) -> GenerationStats {
    let n = pop.len() as f64;
    let sizes: Vec<usize> = pop.iter().filter_map(Individual::program_size).collect();
    GenerationStats {
        generation,
        best_total_error: pop.iter().map(|i| i.total_error).fold(f64::INFINITY, f64::min),
        best_of_run_error: best_of_run,
        mean_total_error: pop.iter().map(|i| i.total_error).sum::<f64>() / n,
        solution_count: pop.iter().filter(|i| i.is_solution()).count(),
        mean_genome_length: pop.iter().map(|i| i.genome.len() as f64).sum::<f64>() / n,
        mean_program_size: if sizes.is_empty() {
            0.0
        } else {
            sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
        },
        program_count: sizes.len(),
    }
}

/// Random stream for the search itself; case generation uses stream 0 of
/// the same seed.
pub fn search_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Runs the generational search. Stops at the first generation containing
/// a solution or after `max_generations` rounds of breeding.
pub fn run_evolution(problem: &ProblemSpec, cfg: &GaConfig, seed: u64) -> RunResult {
    let cases = problem.generate_cases_sized(seed, cfg.n_train, cfg.n_test);
    let eval = Evaluator::with_config(problem, cfg);
    let src = problem.genetic_source();
    let mut rng = search_rng(seed);

    let mut genomes: Vec<Genome> =
        (0..cfg.population_size).map(|_| random_genome(&src, cfg.genome_size_range(), &mut rng)).collect();
    let mut best: Option<(Individual, usize)> = None;
    let mut stats = Vec::new();
    let mut generation = 0;
    loop {
        let pop: Vec<Individual> =
            genomes.into_par_iter().map(|g| eval.evaluate(g, &cases.train)).collect();
        let gen_best = pop.iter().reduce(|a, b| if better(b, a) { b } else { a }).expect("nonempty population");
        if best.as_ref().is_none_or(|(b, _)| gen_best.total_error < b.total_error) {
            best = Some((gen_best.clone(), generation));
        }
        let best_err = best.as_ref().expect("set above").0.total_error;
        stats.push(generation_stats(&pop, generation, best_err));
        if best_err == 0.0 || generation >= cfg.max_generations {
            break;
        }
        genomes = (0..cfg.population_size)
            .map(|_| {
                let parent = lexicase_select(&pop, &mut rng);
                umad(&parent.genome, cfg.umad_rate, &src, &mut rng)
            })
            .collect();
        generation += 1;
    }
    let (best, best_generation) = best.expect("at least one generation");
    RunResult { best, best_generation, generations: generation + 1, stats, cases }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Gene;
    use crate::problems::problem;
    use crate::types::Type;

    fn ind(errors: &[f64]) -> Individual {
        Individual {
            genome: Genome::default(),
            program: None,
            errors: errors.to_vec(),
            total_error: errors.iter().sum(),
        }
    }

    fn small_source() -> GeneticSource {
        problem("smallest").unwrap().genetic_source()
    }

    #[test]
    fn dominant_individual_always_wins() {
        let pop = vec![ind(&[1.0, 2.0]), ind(&[0.0, 0.0]), ind(&[3.0, 1.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert_eq!(lexicase_select(&pop, &mut rng).errors, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn identical_vectors_split_evenly() {
        let mut a = ind(&[1.0, 1.0]);
        a.genome = Genome(vec![Gene::App]);
        let pop = vec![a, ind(&[1.0, 1.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let hits = (0..n).filter(|_| !lexicase_select(&pop, &mut rng).genome.is_empty()).count();
        assert!((hits as f64 / n as f64 - 0.5).abs() <= 0.02, "{hits}");
    }

    #[test]
    fn toy_instance_never_selects_generalist() {
        let pop = vec![ind(&[0.0, 5.0]), ind(&[5.0, 0.0]), ind(&[1.0, 1.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        for _ in 0..10_000 {
            let pick = lexicase_select(&pop, &mut rng);
            let i = pop.iter().position(|p| std::ptr::eq(p, pick)).unwrap();
            counts[i] += 1;
        }
        assert_eq!(counts[2], 0);
        assert!((counts[0] as f64 / 1e4 - 0.5).abs() < 0.03);
    }

    #[test]
    fn selected_individual_is_elite_on_first_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pop: Vec<Individual> =
            (0..30).map(|_| ind(&(0..5).map(|_| rng.gen_range(0..4) as f64).collect::<Vec<_>>())).collect();
        for _ in 0..500 {
            let mut order: Vec<usize> = (0..5).collect();
            order.shuffle(&mut rng);
            let pick = lexicase_index(&pop, &order, &mut rng);
            let min = pop.iter().map(|p| p.errors[order[0]]).fold(f64::INFINITY, f64::min);
            assert_eq!(pop[pick].errors[order[0]], min);
        }
    }

    #[test]
    fn umad_edges() {
        let src = small_source();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_genome(&src, (100, 100), &mut rng);
        assert_eq!(umad(&g, 0.0, &src, &mut rng), g);
        assert!(umad(&Genome::default(), 0.1, &src, &mut rng).is_empty());
    }

    #[test]
    fn umad_preserves_expected_length() {
        let src = small_source();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_genome(&src, (100, 100), &mut rng);
        let n = 10_000;
        let mean = (0..n).map(|_| umad(&g, 0.1, &src, &mut rng).len()).sum::<usize>() as f64 / n as f64;
        assert!((98.0..=102.0).contains(&mean), "{mean}");
    }

    #[test]
    fn simplify_never_regresses() {
        let p = problem("smallest").unwrap();
        let eval = Evaluator::new(p);
        let cases = p.generate_cases_sized(1, 20, 5);
        let mut genes: Vec<Gene> = "Var(input1) Var(input2) Var(min) APP Var(input3) Var(min) APP Var(input4) Var(min) APP"
            .parse::<Genome>()
            .unwrap()
            .0;
        let solution = eval.evaluate(Genome(genes.clone()), &cases.train);
        assert!(solution.is_solution());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        genes.extend((0..50).map(|_| Gene::Close));
        let padded = eval.evaluate(Genome(genes), &cases.train);
        let out = simplify(&padded, 200, &eval, &cases.train, &mut rng);
        assert!(out.is_solution());
        assert!(out.genome.len() <= padded.genome.len());
        assert_eq!(simplify(&padded, 0, &eval, &cases.train, &mut rng), padded);
    }

    #[test]
    fn close_only_genome_is_penalised() {
        let p = problem("smallest").unwrap();
        let eval = Evaluator::new(p);
        let cases = p.generate_cases_sized(1, 10, 5);
        let i = eval.evaluate(Genome(vec![Gene::Close; 7]), &cases.train);
        assert!(i.program.is_none());
        assert_eq!(i.errors, vec![PENALTY; 10]);
    }

    #[test]
    fn runtime_failure_is_isolated_per_case() {
        // (nth input1 3) fails only on short inputs.
        let p = problem("last-index-of-zero").unwrap();
        let eval = Evaluator::new(p);
        let ast = TypedAst::new(
            crate::ast::Expr::app(
                crate::ast::Expr::var("nth"),
                vec![crate::ast::Expr::local("input1"), crate::ast::Expr::int(3)],
            ),
            Type::INT,
        );
        let cases: Vec<Case> = [vec![0, 1], vec![0, 1, 2, 3, 4]]
            .iter()
            .map(|xs| p.case(vec![Value::ints(xs)]))
            .collect();
        let errs = eval.errors(&ast, &cases);
        assert_eq!(errs[0], PENALTY);
        assert_eq!(errs[1], 3.0);
    }

    #[test]
    fn zero_generations_and_replay() {
        let p = problem("smallest").unwrap();
        let cfg = GaConfig { population_size: 20, max_generations: 0, n_train: 10, n_test: 10, ..Default::default() };
        let a = run_evolution(p, &cfg, 9);
        assert_eq!(a.generations, 1);
        assert_eq!(a.stats.len(), 1);
        let cfg = GaConfig { max_generations: 3, ..cfg };
        let b = run_evolution(p, &cfg, 9);
        let c = run_evolution(p, &cfg, 9);
        assert_eq!(b, c);
        let errs: Vec<f64> = b.stats.iter().map(|s| s.best_of_run_error).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn constant_target_is_found_immediately() {
        // Every case expects 0 and the only literal is 0.
        let base = problem("smallest").unwrap();
        let p = ProblemSpec {
            name: "constant-zero",
            signature: base.signature.clone(),
            relevant_types: vec![Type::INT],
            ranges: base.ranges,
            literals: vec![(Value::Int(0), Type::INT)],
            ercs: vec![],
            error_fn: base.error_fn,
            edge_cases: Vec::new,
            sampler: base.sampler,
            reference: |_| Value::Int(0),
        };
        let cfg = GaConfig { population_size: 50, max_generations: 5, n_train: 10, n_test: 10, ..Default::default() };
        let r = run_evolution(&p, &cfg, 1);
        assert!(r.solved());
        assert_eq!(r.best_generation, 0);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        let bad = GaConfig { population_size: 0, ..Default::default() };
        assert_eq!(bad.validate(), Err(ConfigError::NotPositive("population_size")));
        let bad = GaConfig { genome_size_min: 10, genome_size_max: 5, ..Default::default() };
        assert_eq!(bad.validate(), Err(ConfigError::SizeRange));
    }
}
