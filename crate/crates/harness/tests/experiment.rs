use std::fs;
use std::path::Path;

use cbgp_core::evolution::GaConfig;
use cbgp_core::problems::problem;
use cbgp_harness::experiment::{
    collect_summaries, execute_run, load_program, log_lines, program_passes, read_log, report_from_logs,
};
use cbgp_harness::{report_table, run_experiment, ExperimentConfig, LogRecord};

fn small(problems: &[&str], runs: usize, base_seed: u64, dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        problems: problems.iter().map(|p| p.to_string()).collect(),
        runs,
        base_seed,
        output_dir: dir.to_owned(),
        workers: 2,
        ga: GaConfig { population_size: 100, max_generations: 20, simplification_steps: 200, ..GaConfig::default() },
    }
}

#[test]
fn two_runs_of_smallest_give_a_discrete_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(&["smallest"], 2, 0, dir.path())).unwrap();
    let row = out.report.row("smallest").unwrap();
    assert!([0.0, 0.5, 1.0].contains(&row.solution_rate));
    assert_eq!(row.runs, 2);
    assert!(dir.path().join("report.csv").is_file());
    assert!(dir.path().join("report.txt").is_file());
    let logs = read_log(&dir.path().join("smallest/run-000.jsonl")).unwrap();
    assert!(matches!(logs.first(), Some(LogRecord::Generation(g)) if g.generation == 0));
    assert!(matches!(logs.last(), Some(LogRecord::Result(s)) if s.seed == 0 && s.problem == "smallest"));
}

#[test]
fn empty_problem_list_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(&[], 3, 0, dir.path())).unwrap();
    assert!(out.report.rows.is_empty());
    assert!(!out.has_failures());
    assert_eq!(report_table(&out.report).lines().count(), 1);
}

#[test]
fn replayed_config_writes_identical_files() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        run_experiment(&small(&["mirror-image", "count-odds"], 2, 11, d.path())).unwrap();
    }
    for rel in ["report.csv", "mirror-image/run-001.jsonl", "count-odds/run-000.jsonl"] {
        assert_eq!(fs::read(dirs[0].path().join(rel)).unwrap(), fs::read(dirs[1].path().join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn run_artifacts_depend_only_on_their_seed() {
    let p = problem("count-odds").unwrap();
    let ga = GaConfig { population_size: 60, max_generations: 5, simplification_steps: 50, ..GaConfig::default() };
    let a = execute_run(p, &ga, 0, 5);
    let b = execute_run(p, &ga, 3, 5);
    let c = execute_run(p, &ga, 0, 6);
    assert_eq!(a.stats, b.stats);
    assert_eq!(a.summary.genome, b.summary.genome);
    assert_ne!(log_lines(&a), log_lines(&c));

    // Within a batch, run i of base seed s equals run i-1 of base seed s+1.
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_experiment(&small(&["number-io"], 2, 20, d1.path())).unwrap();
    run_experiment(&small(&["number-io"], 1, 21, d2.path())).unwrap();
    let run_at = |path: &Path, run: usize| {
        let mut s = collect_summaries(path).unwrap().into_iter().find(|s| s.run == run).unwrap();
        s.run = 0;
        s.program_file = None;
        s
    };
    assert_eq!(run_at(d1.path(), 1), run_at(d2.path(), 0));
}

#[test]
fn persisted_solutions_reload_and_pass_the_test_set() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(&["mirror-image", "vectors-summed"], 2, 0, dir.path());
    cfg.ga.population_size = 200;
    cfg.ga.max_generations = 100;
    let out = run_experiment(&cfg).unwrap();
    let solutions: Vec<_> = out.summaries.iter().filter(|s| s.is_generalized_solution()).collect();
    assert!(!solutions.is_empty());
    for s in solutions {
        let p = problem(&s.problem).unwrap();
        let text = fs::read_to_string(dir.path().join(s.program_file.as_ref().unwrap())).unwrap();
        let program = load_program(p, &text).unwrap();
        let cases = p.generate_cases_sized(s.seed, cfg.ga.n_train, cfg.ga.n_test);
        assert!(program_passes(p, &program, &cases.test, &cfg.ga), "{text}");
        assert!(program_passes(p, &program, &cases.train, &cfg.ga), "{text}");
    }
}

#[test]
fn report_from_logs_matches_the_batch_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(&["smallest", "number-io"], 2, 0, dir.path())).unwrap();
    assert_eq!(report_from_logs(dir.path()).unwrap(), out.report);
}
