//! Run orchestration: independent GA replicas under one of two execution
//! strategies, plus the public fixed-order team reductions.
//!
//! A docking invocation launches `nruns` independent runs (at most
//! `max_parallel_runs` concurrently). Each run drives the same phase
//! sequence — reduce, breed, evaluate, local search — through a
//! [`teams::PhaseRunner`] chosen by [`Strategy`]. Both strategies execute the
//! identical task leaf with identical counter-keyed randomness and combine
//! results by task index, so a given `(input, config, seed)` produces
//! bit-identical populations on either strategy at any team size. Runs never
//! synchronize with each other; their results are combined in run-index
//! order at the end.

pub mod rng;
pub(crate) mod teams;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::model::{DockingResult, GridMaps, Ligand, ParamTable, RunSummary};
use crate::pose::{self, Genotype};
use crate::reduce;
use crate::scoring::ScoreError;
use crate::search::{self, EvalContext, GaParams, Individual, ParamError, Population, SolisWetsParams};
use teams::{PhaseRunner, PhaseSpec, TaskOut, WorkShareRunner};

/// How a run's phases are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Phases are index ranges handed to a scheduler-managed worker pool
    /// with implicit joins at phase boundaries.
    WorkShare,
    /// A fixed worker team per run; workers derive their task subsets from
    /// their indices and meet at explicit barriers between phases.
    ExplicitTeam,
}

/// Execution-strategy configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendConfig {
    pub strategy: Strategy,
    /// Workers cooperating on one run.
    pub team_size: usize,
    /// Upper bound on runs executing concurrently.
    pub max_parallel_runs: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig { strategy: Strategy::WorkShare, team_size: 64, max_parallel_runs: 1 }
    }
}

/// Full configuration of a docking invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct DockingConfig {
    pub nruns: u32,
    pub seed: u64,
    pub ga: GaParams,
    pub sw: SolisWetsParams,
    pub backend: BackendConfig,
}

impl Default for DockingConfig {
    fn default() -> Self {
        DockingConfig {
            nruns: 10,
            seed: 42,
            ga: GaParams::default(),
            sw: SolisWetsParams::default(),
            backend: BackendConfig::default(),
        }
    }
}

impl DockingConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.nruns < 1 {
            return Err(EngineError::InvalidConfig("nruns must be at least 1".into()));
        }
        if self.backend.team_size < 1 {
            return Err(EngineError::InvalidConfig("team_size must be at least 1".into()));
        }
        if self.backend.max_parallel_runs < 1 {
            return Err(EngineError::InvalidConfig("max_parallel_runs must be at least 1".into()));
        }
        self.ga.validate()?;
        self.sw.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("cannot reduce an empty list")]
    EmptyReduction,
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Wall-clock seconds attributed to each kernel class of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelTimings {
    /// Pose construction and energy evaluation phases.
    pub pose_score_s: f64,
    /// Genetic operators: initialization sampling and breeding.
    pub ga_s: f64,
    /// Local-search phases (including the evaluations they perform).
    pub ls_s: f64,
    /// Reduction phases (evaluation budget and best-energy scans).
    pub reduce_s: f64,
}

impl KernelTimings {
    pub fn accumulate(&mut self, other: &KernelTimings) {
        self.pose_score_s += other.pose_score_s;
        self.ga_s += other.ga_s;
        self.ls_s += other.ls_s;
        self.reduce_s += other.reduce_s;
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("pose_score_s".to_string(), self.pose_score_s),
            ("ga_s".to_string(), self.ga_s),
            ("ls_s".to_string(), self.ls_s),
            ("reduce_s".to_string(), self.reduce_s),
        ])
    }
}

/// Outcome of one independent run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run_index: u32,
    /// Best individual of the final population (lowest energy, ties to the
    /// lowest slot).
    pub best: Individual,
    /// Total energy evaluations consumed by the run.
    pub total_evals: u64,
    pub timings: KernelTimings,
}

// ---------------------------------------------------------------------------
// Output scattering: phase outputs arrive tagged with task indices in
// whatever order workers produced them; these place them by index.
// ---------------------------------------------------------------------------

fn scatter<T>(outs: Vec<TaskOut>, n: usize, mut place: impl FnMut(TaskOut) -> (usize, T)) -> Vec<T> {
    let mut slots: Vec<Option<T>> = Vec::with_capacity(n);
    slots.resize_with(n, || None);
    for out in outs {
        let (index, value) = place(out);
        debug_assert!(slots[index].is_none(), "task {index} produced twice");
        slots[index] = Some(value);
    }
    slots.into_iter().enumerate().map(|(i, s)| s.unwrap_or_else(|| panic!("task {i} missing"))).collect()
}

fn scatter_genotypes(outs: Vec<TaskOut>, n: usize) -> Vec<Genotype> {
    scatter(outs, n, |out| match out {
        TaskOut::Genotype { index, genotype } => (index, genotype),
        other => panic!("expected genotype output, got {other:?}"),
    })
}

fn scatter_energies(outs: Vec<TaskOut>, n: usize) -> Vec<f64> {
    scatter(outs, n, |out| match out {
        TaskOut::Energy { index, energy } => (index, energy),
        other => panic!("expected energy output, got {other:?}"),
    })
}

fn scatter_children(outs: Vec<TaskOut>, n: usize) -> Vec<(Genotype, Genotype)> {
    scatter(outs, n, |out| match out {
        TaskOut::Children { index, first, second } => (index, (first, second)),
        other => panic!("expected children output, got {other:?}"),
    })
}

fn scatter_refined(outs: Vec<TaskOut>, n: usize) -> Vec<(Genotype, f64, u64)> {
    scatter(outs, n, |out| match out {
        TaskOut::Refined { index, genotype, energy, evals } => (index, (genotype, energy, evals)),
        other => panic!("expected refined output, got {other:?}"),
    })
}

/// Run a sum reduction over counters as a phase and combine the chunk
/// partials in ascending chunk order.
fn phase_sum_u64(runner: &mut dyn PhaseRunner, values: Vec<u64>) -> u64 {
    let nchunks = reduce::chunk_count(values.len());
    let outs = runner.run_phase(PhaseSpec::ReduceSumU64 { values: Arc::new(values) });
    let partials = scatter(outs, nchunks, |out| match out {
        TaskOut::SumU64 { index, partial } => (index, partial),
        other => panic!("expected sum output, got {other:?}"),
    });
    partials.iter().sum()
}

/// Run a min-with-index reduction over energies as a phase; ascending-chunk
/// combination keeps the lowest index on ties.
fn phase_argmin(runner: &mut dyn PhaseRunner, values: Vec<f64>) -> (f64, usize) {
    let nchunks = reduce::chunk_count(values.len());
    let outs = runner.run_phase(PhaseSpec::ReduceMin { values: Arc::new(values) });
    let partials = scatter(outs, nchunks, |out| match out {
        TaskOut::MinPartial { index, energy, slot } => (index, (energy, slot)),
        other => panic!("expected min output, got {other:?}"),
    });
    let mut best: Option<(f64, usize)> = None;
    for p in partials {
        best = Some(reduce::combine_min_partials(best, p));
    }
    best.expect("population is never empty")
}

/// Drive one complete run through `runner`: initialize, then loop
/// (terminate-check, breed, evaluate, local-search) until the evaluation
/// budget or generation limit is reached. Identical across strategies by
/// construction: every task executes the same leaf with the same keys, and
/// all cross-task combination is by task index or fixed chunk order.
fn drive_run(
    runner: &mut dyn PhaseRunner,
    ctx: &Arc<EvalContext>,
    config: &DockingConfig,
    run_index: u32,
) -> RunOutcome {
    let ga = &config.ga;
    let seed = config.seed;
    let run = run_index as u64;
    let n = ga.pop_size;
    let mut timings = KernelTimings::default();

    // Generation 0: sample every slot, then evaluate every slot.
    let clock = Instant::now();
    let outs = runner.run_phase(PhaseSpec::InitGenotypes {
        ctx: Arc::clone(ctx),
        seed,
        run,
        pop_size: n,
    });
    let genotypes = Arc::new(scatter_genotypes(outs, n));
    timings.ga_s += clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let outs = runner
        .run_phase(PhaseSpec::Evaluate { ctx: Arc::clone(ctx), genotypes: Arc::clone(&genotypes) });
    let energies = scatter_energies(outs, n);
    timings.pose_score_s += clock.elapsed().as_secs_f64();

    let individuals: Vec<Individual> = genotypes
        .iter()
        .zip(energies)
        .map(|(genotype, energy)| Individual { genotype: genotype.clone(), energy, eval_count: 1 })
        .collect();
    let mut population = Population { individuals, generation: 0 };

    loop {
        // Fixed-order reductions feeding the termination test.
        let clock = Instant::now();
        let counts: Vec<u64> = population.individuals.iter().map(|i| i.eval_count).collect();
        let total_evals = phase_sum_u64(runner, counts);
        let energies: Vec<f64> = population.individuals.iter().map(|i| i.energy).collect();
        let (_, best_slot) = phase_argmin(runner, energies);
        timings.reduce_s += clock.elapsed().as_secs_f64();

        if population.generation >= ga.max_generations || total_evals >= ga.max_evals {
            return RunOutcome {
                run_index,
                best: population.individuals[best_slot].clone(),
                total_evals,
                timings,
            };
        }

        let generation = population.generation + 1;

        // Breeding: elites keep their slots; the remaining slots, ascending,
        // are re-bred in pairs (an odd trailing slot takes the first child).
        let clock = Instant::now();
        let elites = search::elite_indices(&population.individuals, ga.elitism_count);
        let mut is_elite = vec![false; n];
        for &e in &elites {
            is_elite[e] = true;
        }
        let bred_slots: Vec<usize> = (0..n).filter(|&s| !is_elite[s]).collect();
        let npairs = bred_slots.len().div_ceil(2);
        let outs = runner.run_phase(PhaseSpec::Breed {
            parents: Arc::new(population.individuals.clone()),
            params: Arc::new(ga.clone()),
            seed,
            run,
            generation,
            npairs,
        });
        let children = scatter_children(outs, npairs);
        let mut bred_genotypes = Vec::with_capacity(bred_slots.len());
        for (pair, chunk) in bred_slots.chunks(2).enumerate() {
            bred_genotypes.push(children[pair].0.clone());
            if chunk.len() == 2 {
                bred_genotypes.push(children[pair].1.clone());
            }
        }
        timings.ga_s += clock.elapsed().as_secs_f64();

        // Score the bred slots.
        let clock = Instant::now();
        let bred_genotypes = Arc::new(bred_genotypes);
        let outs = runner.run_phase(PhaseSpec::Evaluate {
            ctx: Arc::clone(ctx),
            genotypes: Arc::clone(&bred_genotypes),
        });
        let bred_energies = scatter_energies(outs, bred_genotypes.len());
        let mut next = population.individuals.clone();
        for (i, &slot) in bred_slots.iter().enumerate() {
            next[slot] = Individual {
                genotype: bred_genotypes[i].clone(),
                energy: bred_energies[i],
                eval_count: population.individuals[slot].eval_count + 1,
            };
        }
        timings.pose_score_s += clock.elapsed().as_secs_f64();

        // Local search on a fresh sample of non-elite slots, Lamarckian
        // writeback.
        let clock = Instant::now();
        let mut sampler = search::ls_sampler_stream(seed, run, generation, n);
        let picks = search::ls_sample(bred_slots.len(), search::ls_count(ga), &mut sampler);
        let targets: Vec<usize> = picks.into_iter().map(|p| bred_slots[p]).collect();
        let outs = runner.run_phase(PhaseSpec::LocalSearch {
            ctx: Arc::clone(ctx),
            individuals: Arc::new(next.clone()),
            targets: Arc::new(targets.clone()),
            sw: Arc::new(config.sw.clone()),
            seed,
            run,
            generation,
            pop_size: n,
        });
        let refined = scatter_refined(outs, targets.len());
        for (i, &slot) in targets.iter().enumerate() {
            let (genotype, energy, evals) = refined[i].clone();
            next[slot].genotype = genotype;
            next[slot].energy = energy;
            next[slot].eval_count += evals;
        }
        timings.ls_s += clock.elapsed().as_secs_f64();

        population = Population { individuals: next, generation };
    }
}

/// Execute one full GA run under the configured strategy.
pub fn launch_run(
    run_index: u32,
    ctx: &EvalContext,
    config: &DockingConfig,
) -> Result<RunOutcome, EngineError> {
    let ctx = Arc::new(ctx.clone());
    match config.backend.strategy {
        Strategy::WorkShare => {
            let mut runner =
                WorkShareRunner::new(config.backend.team_size).map_err(EngineError::Backend)?;
            Ok(drive_run(&mut runner, &ctx, config, run_index))
        }
        Strategy::ExplicitTeam => Ok(teams::with_explicit_team(config.backend.team_size, |runner| {
            drive_run(runner, &ctx, config, run_index)
        })),
    }
}

/// Execute a full docking invocation: `nruns` independent runs, at most
/// `max_parallel_runs` at a time, combined in run-index order. The reported
/// best pose is the minimum-energy individual over all runs, ties to the
/// lowest run index.
pub fn run_docking(
    ligand: &Ligand,
    grids: &GridMaps,
    config: &DockingConfig,
) -> Result<DockingResult, EngineError> {
    let ctx = EvalContext::new(
        Arc::new(ligand.clone()),
        Arc::new(grids.clone()),
        &ParamTable::builtin(),
    )?;
    run_docking_ctx(&ctx, config)
}

/// [`run_docking`] over an already-built evaluation context.
pub fn run_docking_ctx(ctx: &EvalContext, config: &DockingConfig) -> Result<DockingResult, EngineError> {
    config.validate()?;
    let nruns = config.nruns as usize;
    let wave_width = config.backend.max_parallel_runs;
    let mut outcomes: Vec<RunOutcome> = Vec::with_capacity(nruns);
    let mut start = 0usize;
    while start < nruns {
        let end = (start + wave_width).min(nruns);
        if end - start == 1 {
            outcomes.push(launch_run(start as u32, ctx, config)?);
        } else {
            let wave: Vec<Result<RunOutcome, EngineError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = (start..end)
                    .map(|r| scope.spawn(move || launch_run(r as u32, ctx, config)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect()
            });
            for result in wave {
                outcomes.push(result?);
            }
        }
        start = end;
    }

    let mut best_at = 0usize;
    for (i, outcome) in outcomes.iter().enumerate() {
        if outcome.best.energy < outcomes[best_at].best.energy {
            best_at = i;
        }
    }
    let best = &outcomes[best_at];
    let best_coordinates =
        pose::build_pose(&ctx.ligand, &best.best.genotype).expect("genotype matches ligand");
    let mut timings = KernelTimings::default();
    for outcome in &outcomes {
        timings.accumulate(&outcome.timings);
    }
    Ok(DockingResult {
        best_energy: best.best.energy,
        best_genotype: best.best.genotype.clone(),
        best_coordinates,
        per_run: outcomes
            .iter()
            .map(|o| RunSummary {
                run_index: o.run_index,
                final_best_energy: o.best.energy,
                total_evaluations: o.total_evals,
            })
            .collect(),
        timings: timings.to_map(),
    })
}

/// Evaluate a batch of genotypes under the configured strategy; energies are
/// returned in genotype order.
pub fn evaluate_poses(
    ctx: &EvalContext,
    genotypes: &[Genotype],
    backend: &BackendConfig,
) -> Result<Vec<f64>, EngineError> {
    let phase = PhaseSpec::Evaluate {
        ctx: Arc::new(ctx.clone()),
        genotypes: Arc::new(genotypes.to_vec()),
    };
    let outs = run_one_phase(backend, phase)?;
    Ok(scatter_energies(outs, genotypes.len()))
}

fn run_one_phase(backend: &BackendConfig, phase: PhaseSpec) -> Result<Vec<TaskOut>, EngineError> {
    match backend.strategy {
        Strategy::WorkShare => {
            let mut runner = WorkShareRunner::new(backend.team_size).map_err(EngineError::Backend)?;
            Ok(runner.run_phase(phase))
        }
        Strategy::ExplicitTeam => {
            Ok(teams::with_explicit_team(backend.team_size, |runner| runner.run_phase(phase)))
        }
    }
}

/// Team-executed fixed-order sum of reals: workers produce disjoint chunk
/// partials which are combined in ascending chunk order, so the result is
/// bit-identical to the serial chunked sum at any team size.
pub fn team_reduce_sum(values: &[f64], backend: &BackendConfig) -> Result<f64, EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyReduction);
    }
    let nchunks = reduce::chunk_count(values.len());
    let outs = run_one_phase(backend, PhaseSpec::ReduceSumF64 { values: Arc::new(values.to_vec()) })?;
    let partials = scatter(outs, nchunks, |out| match out {
        TaskOut::SumF64 { index, partial } => (index, partial),
        other => panic!("expected sum output, got {other:?}"),
    });
    Ok(reduce::combine_sum_partials(&partials))
}

/// Team-executed sum of unsigned counters.
pub fn team_reduce_sum_u64(values: &[u64], backend: &BackendConfig) -> Result<u64, EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyReduction);
    }
    let nchunks = reduce::chunk_count(values.len());
    let outs = run_one_phase(backend, PhaseSpec::ReduceSumU64 { values: Arc::new(values.to_vec()) })?;
    let partials = scatter(outs, nchunks, |out| match out {
        TaskOut::SumU64 { index, partial } => (index, partial),
        other => panic!("expected sum output, got {other:?}"),
    });
    Ok(partials.iter().sum())
}

/// Team-executed minimum with index; ties go to the lowest index.
pub fn team_reduce_min(values: &[f64], backend: &BackendConfig) -> Result<(f64, usize), EngineError> {
    if values.is_empty() {
        return Err(EngineError::EmptyReduction);
    }
    let nchunks = reduce::chunk_count(values.len());
    let outs = run_one_phase(backend, PhaseSpec::ReduceMin { values: Arc::new(values.to_vec()) })?;
    let partials = scatter(outs, nchunks, |out| match out {
        TaskOut::MinPartial { index, energy, slot } => (index, (energy, slot)),
        other => panic!("expected min output, got {other:?}"),
    });
    let mut best: Option<(f64, usize)> = None;
    for p in partials {
        best = Some(reduce::combine_min_partials(best, p));
    }
    Ok(best.expect("checked non-empty"))
}
