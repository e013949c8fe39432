//! The two execution strategies behind a run.
//!
//! A run's work is expressed as a sequence of *phases*; each phase is a flat
//! list of independent tasks (sample slot `s`, breed pair `p`, evaluate
//! genotype `i`, reduce chunk `c`). Exactly one function, [`exec_task`],
//! computes a task, and both strategies call it — they differ only in how
//! tasks are handed to workers:
//!
//! * [`WorkShareRunner`] hands each phase's index range to a scheduler-managed
//!   worker pool and joins implicitly at the phase boundary.
//! * [`with_explicit_team`] pins a fixed team of workers for the lifetime of
//!   the run; each worker derives its task subset from
//!   `(worker_index, team_size)` by striding, and explicit barriers separate
//!   phase publication from phase completion.
//!
//! Tasks write into per-worker outboxes and the driver scatters the outputs
//! by task index, so scheduling order never influences results; combined with
//! counter-keyed RNG and fixed-order reductions, both strategies produce
//! bit-identical populations.

use std::sync::{Arc, Barrier, Mutex};

use rayon::prelude::*;

use crate::pose::Genotype;
use crate::reduce;
use crate::search::{self, EvalContext, GaParams, Individual, SolisWetsParams};

/// One parallel phase of a run, with everything a task needs to execute.
#[derive(Debug, Clone)]
pub(crate) enum PhaseSpec {
    /// Sample the initial genotype of each population slot; task = slot.
    InitGenotypes { ctx: Arc<EvalContext>, seed: u64, run: u64, pop_size: usize },
    /// Evaluate each genotype; task = position in `genotypes`.
    Evaluate { ctx: Arc<EvalContext>, genotypes: Arc<Vec<Genotype>> },
    /// Breed each pair of children for the non-elite slots; task = pair index.
    Breed {
        parents: Arc<Vec<Individual>>,
        params: Arc<GaParams>,
        seed: u64,
        run: u64,
        generation: u64,
        npairs: usize,
    },
    /// Locally search selected slots; task = position in `targets`.
    LocalSearch {
        ctx: Arc<EvalContext>,
        individuals: Arc<Vec<Individual>>,
        targets: Arc<Vec<usize>>,
        sw: Arc<SolisWetsParams>,
        seed: u64,
        run: u64,
        generation: u64,
        pop_size: usize,
    },
    /// Partial sums of evaluation counters; task = chunk index.
    ReduceSumU64 { values: Arc<Vec<u64>> },
    /// Partial sums of reals; task = chunk index.
    ReduceSumF64 { values: Arc<Vec<f64>> },
    /// Partial minima (with index) of energies; task = chunk index.
    ReduceMin { values: Arc<Vec<f64>> },
}

/// Output of one task, tagged with its task index so the driver can scatter
/// results regardless of the order workers produced them.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TaskOut {
    Genotype { index: usize, genotype: Genotype },
    Energy { index: usize, energy: f64 },
    Children { index: usize, first: Genotype, second: Genotype },
    Refined { index: usize, genotype: Genotype, energy: f64, evals: u64 },
    SumU64 { index: usize, partial: u64 },
    SumF64 { index: usize, partial: f64 },
    MinPartial { index: usize, energy: f64, slot: usize },
}

/// Number of tasks in a phase.
pub(crate) fn task_count(phase: &PhaseSpec) -> usize {
    match phase {
        PhaseSpec::InitGenotypes { pop_size, .. } => *pop_size,
        PhaseSpec::Evaluate { genotypes, .. } => genotypes.len(),
        PhaseSpec::Breed { npairs, .. } => *npairs,
        PhaseSpec::LocalSearch { targets, .. } => targets.len(),
        PhaseSpec::ReduceSumU64 { values } => reduce::chunk_count(values.len()),
        PhaseSpec::ReduceSumF64 { values } => reduce::chunk_count(values.len()),
        PhaseSpec::ReduceMin { values } => reduce::chunk_count(values.len()),
    }
}

/// Compute task `t` of `phase`. The single leaf both strategies execute.
pub(crate) fn exec_task(phase: &PhaseSpec, t: usize) -> TaskOut {
    match phase {
        PhaseSpec::InitGenotypes { ctx, seed, run, .. } => {
            let mut stream = search::init_stream(*seed, *run, t);
            let genotype =
                search::sample_genotype(ctx.ligand.ntorsions(), &ctx.grids, &mut stream);
            TaskOut::Genotype { index: t, genotype }
        }
        PhaseSpec::Evaluate { ctx, genotypes } => {
            TaskOut::Energy { index: t, energy: ctx.energy_of(&genotypes[t]) }
        }
        PhaseSpec::Breed { parents, params, seed, run, generation, .. } => {
            let mut stream = search::breed_stream(*seed, *run, *generation, t);
            let (first, second) = search::breed_pair(parents, params, &mut stream);
            TaskOut::Children { index: t, first, second }
        }
        PhaseSpec::LocalSearch { ctx, individuals, targets, sw, seed, run, generation, pop_size } => {
            let slot = targets[t];
            let start = &individuals[slot];
            let mut stream = search::ls_stream(*seed, *run, *generation, *pop_size, slot);
            let (genotype, energy, evals) =
                search::solis_wets(&start.genotype, start.energy, |g| ctx.energy_of(g), sw, &mut stream);
            TaskOut::Refined { index: t, genotype, energy, evals }
        }
        PhaseSpec::ReduceSumU64 { values } => {
            TaskOut::SumU64 { index: t, partial: reduce::sum_chunk_u64(values, t) }
        }
        PhaseSpec::ReduceSumF64 { values } => {
            let partial = reduce::sum_chunk_by(values.len(), t, |i| values[i]);
            TaskOut::SumF64 { index: t, partial }
        }
        PhaseSpec::ReduceMin { values } => {
            let (energy, slot) = reduce::min_chunk(values, t).expect("reduce chunks are non-empty");
            TaskOut::MinPartial { index: t, energy, slot }
        }
    }
}

/// Executes phases on behalf of a run driver.
pub(crate) trait PhaseRunner {
    fn run_phase(&mut self, phase: PhaseSpec) -> Vec<TaskOut>;
}

/// Strategy 1: phases are index ranges handed to a scheduler-managed pool
/// with an implicit join at each phase boundary. `team_size == 1` runs
/// inline.
pub(crate) struct WorkShareRunner {
    pool: Option<rayon::ThreadPool>,
}

impl WorkShareRunner {
    pub(crate) fn new(team_size: usize) -> Result<Self, String> {
        if team_size <= 1 {
            return Ok(WorkShareRunner { pool: None });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(team_size)
            .build()
            .map_err(|e| format!("failed to build a {team_size}-worker pool: {e}"))?;
        Ok(WorkShareRunner { pool: Some(pool) })
    }
}

impl PhaseRunner for WorkShareRunner {
    fn run_phase(&mut self, phase: PhaseSpec) -> Vec<TaskOut> {
        let n = task_count(&phase);
        match &self.pool {
            None => (0..n).map(|t| exec_task(&phase, t)).collect(),
            Some(pool) => {
                pool.install(|| (0..n).into_par_iter().map(|t| exec_task(&phase, t)).collect())
            }
        }
    }
}

/// Shared state of one explicit team.
struct TeamShared {
    /// Current phase; `None` tells workers to exit.
    phase: Mutex<Option<Arc<PhaseSpec>>>,
    /// Rendezvous for all `team_size` members (the driver is member 0).
    barrier: Barrier,
    /// One outbox per member, written only by its owner during a phase.
    outboxes: Vec<Mutex<Vec<TaskOut>>>,
    team_size: usize,
}

/// Process the strided task subset of member `w` for `phase`.
fn member_tasks(shared: &TeamShared, phase: &PhaseSpec, w: usize) {
    let n = task_count(phase);
    let mut local = Vec::new();
    let mut t = w;
    while t < n {
        local.push(exec_task(phase, t));
        t += shared.team_size;
    }
    *shared.outboxes[w].lock().unwrap() = local;
}

fn worker_loop(shared: &TeamShared, w: usize) {
    loop {
        // Wait for the driver to publish the next phase.
        shared.barrier.wait();
        let phase = shared.phase.lock().unwrap().clone();
        let Some(phase) = phase else { return };
        member_tasks(shared, &phase, w);
        // Signal completion; the driver drains outboxes only after this.
        shared.barrier.wait();
    }
}

struct ExplicitTeamRunner<'a> {
    shared: &'a TeamShared,
}

impl PhaseRunner for ExplicitTeamRunner<'_> {
    fn run_phase(&mut self, phase: PhaseSpec) -> Vec<TaskOut> {
        let shared = self.shared;
        let phase = Arc::new(phase);
        *shared.phase.lock().unwrap() = Some(Arc::clone(&phase));
        shared.barrier.wait(); // release the team into this phase
        member_tasks(shared, &phase, 0);
        shared.barrier.wait(); // every member has finished and published
        let mut all = Vec::with_capacity(task_count(&phase));
        for outbox in &shared.outboxes {
            all.append(&mut outbox.lock().unwrap());
        }
        all
    }
}

/// Strategy 2: pin `team_size` workers for the whole lifetime of `driver`,
/// with the calling thread serving as member 0. `driver` receives a
/// [`PhaseRunner`] whose phases execute on that fixed team, separated by
/// explicit barriers. `team_size == 1` runs everything inline.
pub(crate) fn with_explicit_team<R>(
    team_size: usize,
    driver: impl FnOnce(&mut dyn PhaseRunner) -> R,
) -> R {
    if team_size <= 1 {
        let mut inline = SerialRunner;
        return driver(&mut inline);
    }
    let shared = TeamShared {
        phase: Mutex::new(None),
        barrier: Barrier::new(team_size),
        outboxes: (0..team_size).map(|_| Mutex::new(Vec::new())).collect(),
        team_size,
    };
    std::thread::scope(|scope| {
        for w in 1..team_size {
            let shared = &shared;
            scope.spawn(move || worker_loop(shared, w));
        }
        let mut runner = ExplicitTeamRunner { shared: &shared };
        let result = driver(&mut runner);
        *shared.phase.lock().unwrap() = None;
        shared.barrier.wait(); // wake the team so it can observe shutdown
        result
    })
}

/// Inline fallback shared by both strategies at `team_size == 1`.
pub(crate) struct SerialRunner;

impl PhaseRunner for SerialRunner {
    fn run_phase(&mut self, phase: PhaseSpec) -> Vec<TaskOut> {
        (0..task_count(&phase)).map(|t| exec_task(&phase, t)).collect()
    }
}
