//! Memetic genetic algorithm: tournament selection, two-point crossover,
//! per-gene mutation, and Solis-Wets local search with Lamarckian writeback.
//!
//! All randomness flows through counter-keyed draw streams
//! ([`crate::engine::rng`]). The stream layout gives every logical unit of
//! work its own key namespace:
//!
//! * initialization of slot `s`: `(generation 0, unit s)`
//! * breeding pair `p` of generation `g`: `(g, unit p)`
//! * the local-search slot sampler of generation `g`: `(g, unit pop_size)`
//! * local search on slot `s` of generation `g`: `(g, unit pop_size + 1 + s)`
//!
//! Because a unit's draws depend only on its key, any worker on any schedule
//! produces the same bits, which is what makes the two execution strategies
//! interchangeable.

use std::sync::Arc;

use thiserror::Error;

use crate::engine::rng::DrawStream;
use crate::model::{GridMaps, Ligand, ParamTable};
use crate::pose::{self, Genotype};
use crate::reduce;
use crate::scoring::{EnergyBreakdown, ScoreError, Scorer};

/// Genetic-algorithm parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GaParams {
    pub pop_size: usize,
    /// Probability that a tournament returns the better of its two
    /// candidates.
    pub tournament_rate: f64,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation half-width for translation genes, in Angstroms.
    pub mutation_magnitude_translation: f64,
    /// Mutation half-width for orientation/torsion genes, in radians.
    pub mutation_magnitude_angle: f64,
    pub elitism_count: usize,
    /// Fraction of the population locally searched each generation.
    pub ls_rate: f64,
    pub max_evals: u64,
    pub max_generations: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            pop_size: 150,
            tournament_rate: 0.60,
            crossover_rate: 0.80,
            mutation_rate: 0.02,
            mutation_magnitude_translation: 2.0,
            mutation_magnitude_angle: 0.523,
            elitism_count: 1,
            ls_rate: 0.06,
            max_evals: 2_500_000,
            max_generations: 27_000,
        }
    }
}

/// Solis-Wets local-search parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolisWetsParams {
    pub rho_init: f64,
    pub rho_min: f64,
    /// Consecutive successes before the step size expands.
    pub cons_succ: u32,
    /// Consecutive failures before the step size contracts.
    pub cons_fail: u32,
    pub expand: f64,
    pub contract: f64,
    pub max_iters: u32,
}

impl Default for SolisWetsParams {
    fn default() -> Self {
        SolisWetsParams {
            rho_init: 1.0,
            rho_min: 0.01,
            cons_succ: 4,
            cons_fail: 4,
            expand: 2.0,
            contract: 0.5,
            max_iters: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{name} must be a probability in [0, 1], got {got}")]
    ProbabilityOutOfRange { name: &'static str, got: String },
    #[error("pop_size must be at least 2, got {0}")]
    PopTooSmall(usize),
    #[error("elitism_count ({elitism}) must not exceed pop_size ({pop})")]
    TooManyElites { elitism: usize, pop: usize },
    #[error("mutation magnitudes must be non-negative")]
    NegativeMagnitude,
    #[error("step bounds must satisfy 0 < rho_min < rho_init")]
    BadRho,
    #[error("expand must exceed 1 and contract must lie in (0, 1)")]
    BadStepFactors,
}

fn check_probability(name: &'static str, p: f64) -> Result<(), ParamError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ParamError::ProbabilityOutOfRange { name, got: format!("{p}") })
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check_probability("tournament_rate", self.tournament_rate)?;
        check_probability("crossover_rate", self.crossover_rate)?;
        check_probability("mutation_rate", self.mutation_rate)?;
        check_probability("ls_rate", self.ls_rate)?;
        if self.pop_size < 2 {
            return Err(ParamError::PopTooSmall(self.pop_size));
        }
        if self.elitism_count > self.pop_size {
            return Err(ParamError::TooManyElites { elitism: self.elitism_count, pop: self.pop_size });
        }
        if self.mutation_magnitude_translation < 0.0 || self.mutation_magnitude_angle < 0.0 {
            return Err(ParamError::NegativeMagnitude);
        }
        Ok(())
    }
}

impl SolisWetsParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.rho_min > 0.0 && self.rho_min < self.rho_init) {
            return Err(ParamError::BadRho);
        }
        if !(self.expand > 1.0) || !(self.contract > 0.0 && self.contract < 1.0) {
            return Err(ParamError::BadStepFactors);
        }
        Ok(())
    }
}

/// One candidate solution with its cached energy and the number of energy
/// evaluations charged to its population slot so far.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    pub energy: f64,
    pub eval_count: u64,
}

/// A fixed-size generation of individuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub generation: u64,
}

impl Population {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// Index and energy of the best individual (lowest energy, ties to the
    /// lowest index), via the fixed-order reduction.
    pub fn best(&self) -> (usize, f64) {
        let energies: Vec<f64> = self.individuals.iter().map(|i| i.energy).collect();
        let (e, i) = reduce::chunked_argmin(&energies).expect("population is never empty");
        (i, e)
    }
}

/// Everything scoring needs about one docking problem, shared read-only by
/// all workers: the ligand, the grids, and a prepared scorer.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub ligand: Arc<Ligand>,
    pub grids: Arc<GridMaps>,
    scorer: Scorer,
}

impl EvalContext {
    pub fn new(
        ligand: Arc<Ligand>,
        grids: Arc<GridMaps>,
        table: &ParamTable,
    ) -> Result<Self, ScoreError> {
        let scorer = Scorer::new(&ligand, Arc::clone(&grids), table)?;
        Ok(EvalContext { ligand, grids, scorer })
    }

    /// Total energy of `genotype`'s pose.
    ///
    /// Panics if the genotype's torsion count does not match the ligand's;
    /// genotypes produced by this module always match.
    pub fn energy_of(&self, genotype: &Genotype) -> f64 {
        self.breakdown_of(genotype).total
    }

    /// Full energy breakdown of `genotype`'s pose.
    pub fn breakdown_of(&self, genotype: &Genotype) -> EnergyBreakdown {
        let coords =
            pose::build_pose(&self.ligand, genotype).expect("genotype dimension matches ligand");
        self.scorer.energy(&coords)
    }

    pub fn scorer(&self) -> &Scorer {
        &self.scorer
    }
}

// ---------------------------------------------------------------------------
// Draw-stream layout
// ---------------------------------------------------------------------------

/// Stream for sampling and anything else tied to initialization slot `slot`.
pub(crate) fn init_stream(seed: u64, run: u64, slot: usize) -> DrawStream {
    DrawStream::new(seed, run, 0, slot as u64)
}

/// Stream for breeding pair `pair` while producing generation `gen`.
pub(crate) fn breed_stream(seed: u64, run: u64, gen: u64, pair: usize) -> DrawStream {
    DrawStream::new(seed, run, gen, pair as u64)
}

/// Stream that picks which slots of generation `gen` get local search.
pub(crate) fn ls_sampler_stream(seed: u64, run: u64, gen: u64, pop_size: usize) -> DrawStream {
    DrawStream::new(seed, run, gen, pop_size as u64)
}

/// Stream for the local search applied to slot `slot` of generation `gen`.
pub(crate) fn ls_stream(seed: u64, run: u64, gen: u64, pop_size: usize, slot: usize) -> DrawStream {
    DrawStream::new(seed, run, gen, pop_size as u64 + 1 + slot as u64)
}

// ---------------------------------------------------------------------------
// GA operators
// ---------------------------------------------------------------------------

/// Sample one genotype: translation uniform over the grid box, all angle
/// genes uniform in `[0, 2*pi)`.
pub(crate) fn sample_genotype(ntorsions: usize, grids: &GridMaps, stream: &mut DrawStream) -> Genotype {
    use std::f64::consts::TAU;
    let lo = grids.box_lo();
    let hi = grids.box_hi();
    let mut g = Genotype::zeros(ntorsions);
    for axis in 0..3 {
        g.translation[axis] = stream.next_range(lo[axis], hi[axis]);
    }
    for axis in 0..3 {
        g.orientation[axis] = stream.next_range(0.0, TAU);
    }
    for t in 0..ntorsions {
        g.torsions[t] = stream.next_range(0.0, TAU);
    }
    g
}

/// Draw two distinct indices and return the better one (lower energy, ties
/// to the lower index) with probability `rate`, else the other.
pub fn tournament_select(pool: &[Individual], rate: f64, stream: &mut DrawStream) -> usize {
    debug_assert!(pool.len() >= 2, "tournament needs at least two individuals");
    let n = pool.len();
    let i = stream.next_index(n);
    let mut j = stream.next_index(n - 1);
    if j >= i {
        j += 1;
    }
    let better_is_i = match pool[i].energy.total_cmp(&pool[j].energy) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => i < j,
    };
    let (better, other) = if better_is_i { (i, j) } else { (j, i) };
    if stream.next_f64() < rate {
        better
    } else {
        other
    }
}

/// Two-point crossover over the flattened gene vector.
///
/// With probability `rate`, draws cut points `0 <= c1 <= c2 <= D` and swaps
/// the genes in `[c1, c2)` between the children; otherwise the children are
/// plain copies of the parents.
pub fn two_point_crossover(
    a: &Genotype,
    b: &Genotype,
    rate: f64,
    stream: &mut DrawStream,
) -> (Genotype, Genotype) {
    debug_assert_eq!(a.dim(), b.dim(), "crossover requires equal genotype dimension");
    let d = a.dim();
    let mut child_a = a.clone();
    let mut child_b = b.clone();
    if stream.next_f64() < rate {
        let r1 = stream.next_index(d + 1);
        let r2 = stream.next_index(d + 1);
        let (c1, c2) = (r1.min(r2), r1.max(r2));
        for g in c1..c2 {
            child_a.set_gene(g, b.gene(g));
            child_b.set_gene(g, a.gene(g));
        }
    }
    (child_a, child_b)
}

/// Perturb each gene independently with probability `mutation_rate` by a
/// uniform delta in plus/minus the class magnitude (translation genes in
/// Angstroms, angle genes in radians).
pub fn mutate(genotype: &mut Genotype, params: &GaParams, stream: &mut DrawStream) {
    for g in 0..genotype.dim() {
        if stream.next_f64() < params.mutation_rate {
            let magnitude = if genotype.is_angle_gene(g) {
                params.mutation_magnitude_angle
            } else {
                params.mutation_magnitude_translation
            };
            let delta = (2.0 * stream.next_f64() - 1.0) * magnitude;
            genotype.set_gene(g, genotype.gene(g) + delta);
        }
    }
}

/// Solis-Wets local search with a bias vector.
///
/// Starts from `start` (already evaluated to `start_energy`) and greedily
/// accepts strict improvements only, so the returned energy never exceeds
/// `start_energy`. Each iteration draws one deviate per gene — the sum of
/// two uniforms, centered and scaled by the step size `rho` — and probes
/// `x + b + d`, then `x - b - d` if the first probe fails. Successes feed
/// the bias (`b <- 0.4 d + 0.2 b`, mirrored for the reverse probe) and
/// eventually expand `rho`; consecutive failures contract `rho` and clear
/// the bias. Stops after `max_iters` iterations or once `rho` falls below
/// `rho_min`. Returns the best point, its energy, and the number of
/// `energy_fn` calls.
pub fn solis_wets<F: FnMut(&Genotype) -> f64>(
    start: &Genotype,
    start_energy: f64,
    mut energy_fn: F,
    params: &SolisWetsParams,
    stream: &mut DrawStream,
) -> (Genotype, f64, u64) {
    let d = start.dim();
    let mut x = start.clone();
    let mut best = start_energy;
    let mut bias = vec![0.0; d];
    let mut deviate = vec![0.0; d];
    let mut rho = params.rho_init;
    let mut succ = 0u32;
    let mut fail = 0u32;
    let mut evals = 0u64;
    let mut candidate = start.clone();

    let mut iter = 0u32;
    while iter < params.max_iters && rho >= params.rho_min {
        for g in 0..d {
            let u1 = stream.next_f64();
            let u2 = stream.next_f64();
            deviate[g] = rho * (u1 + u2 - 1.0);
        }

        for g in 0..d {
            candidate.set_gene(g, x.gene(g) + bias[g] + deviate[g]);
        }
        let forward = energy_fn(&candidate);
        evals += 1;
        if forward < best {
            x.clone_from(&candidate);
            best = forward;
            for g in 0..d {
                bias[g] = 0.4 * deviate[g] + 0.2 * bias[g];
            }
            succ += 1;
            fail = 0;
        } else {
            for g in 0..d {
                candidate.set_gene(g, x.gene(g) - bias[g] - deviate[g]);
            }
            let reverse = energy_fn(&candidate);
            evals += 1;
            if reverse < best {
                x.clone_from(&candidate);
                best = reverse;
                for g in 0..d {
                    bias[g] = -0.4 * deviate[g] - 0.2 * bias[g];
                }
                succ += 1;
                fail = 0;
            } else {
                fail += 1;
                succ = 0;
            }
        }

        if succ >= params.cons_succ {
            rho *= params.expand;
            succ = 0;
        } else if fail >= params.cons_fail {
            rho *= params.contract;
            fail = 0;
            for b in bias.iter_mut() {
                *b = 0.0;
            }
        }
        iter += 1;
    }

    (x, best, evals)
}

// ---------------------------------------------------------------------------
// Generation construction
// ---------------------------------------------------------------------------

/// Number of individuals locally searched per generation:
/// `ceil(ls_rate * pop_size)`, with a tiny guard so products that should be
/// integers are not pushed up by floating-point round-off.
pub(crate) fn ls_count(params: &GaParams) -> usize {
    let raw = (params.ls_rate * params.pop_size as f64 - 1e-9).ceil();
    (raw.max(0.0) as usize).min(params.pop_size)
}

/// Indices (ascending) of the `count` best individuals, ties to the lower
/// index.
pub(crate) fn elite_indices(individuals: &[Individual], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..individuals.len()).collect();
    order.sort_by(|&a, &b| {
        individuals[a].energy.total_cmp(&individuals[b].energy).then(a.cmp(&b))
    });
    order.truncate(count.min(individuals.len()));
    order.sort_unstable();
    order
}

/// Sample `k` distinct slots out of `0..n` (partial Fisher-Yates), returned
/// in ascending order.
pub(crate) fn ls_sample(n: usize, k: usize, stream: &mut DrawStream) -> Vec<usize> {
    let k = k.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + stream.next_index(n - i);
        pool.swap(i, j);
    }
    let mut picked = pool[..k].to_vec();
    picked.sort_unstable();
    picked
}

/// Produce both children for one breeding pair: two tournaments, crossover,
/// then mutation of each child, all on one stream.
pub(crate) fn breed_pair(
    parents: &[Individual],
    params: &GaParams,
    stream: &mut DrawStream,
) -> (Genotype, Genotype) {
    let pa = tournament_select(parents, params.tournament_rate, stream);
    let pb = tournament_select(parents, params.tournament_rate, stream);
    let (mut child_a, mut child_b) = two_point_crossover(
        &parents[pa].genotype,
        &parents[pb].genotype,
        params.crossover_rate,
        stream,
    );
    mutate(&mut child_a, params, stream);
    mutate(&mut child_b, params, stream);
    (child_a, child_b)
}

/// Create generation 0: every slot sampled from its own stream and
/// evaluated once.
pub fn initialize_population(
    ctx: &EvalContext,
    params: &GaParams,
    seed: u64,
    run: u64,
) -> Population {
    let mut individuals = Vec::with_capacity(params.pop_size);
    for slot in 0..params.pop_size {
        let mut stream = init_stream(seed, run, slot);
        let genotype = sample_genotype(ctx.ligand.ntorsions(), &ctx.grids, &mut stream);
        let energy = ctx.energy_of(&genotype);
        individuals.push(Individual { genotype, energy, eval_count: 1 });
    }
    Population { individuals, generation: 0 }
}

/// Produce the next generation.
///
/// The `elitism_count` best individuals stay in their slots unchanged for
/// the whole step. The remaining slots, in ascending order, are grouped into
/// pairs; each pair is re-bred from the previous generation (an odd trailing
/// slot takes only the first child). Each bred slot is re-evaluated and its
/// `eval_count` accumulates the new evaluation. Then
/// `ceil(ls_rate * pop_size)` distinct non-elite slots are sampled; each
/// undergoes Solis-Wets local search, and the improved genotype, energy, and
/// evaluation count are written back (Lamarckian writeback).
pub fn next_generation(
    ctx: &EvalContext,
    current: &Population,
    params: &GaParams,
    sw: &SolisWetsParams,
    seed: u64,
    run: u64,
) -> Population {
    let n = current.individuals.len();
    let gen = current.generation + 1;

    let elites = elite_indices(&current.individuals, params.elitism_count);
    let mut is_elite = vec![false; n];
    for &e in &elites {
        is_elite[e] = true;
    }
    let bred_slots: Vec<usize> = (0..n).filter(|&s| !is_elite[s]).collect();

    // Elite slots carry over verbatim (genotype, energy, and eval_count).
    let mut next = current.individuals.clone();

    for (pair_index, chunk) in bred_slots.chunks(2).enumerate() {
        let mut stream = breed_stream(seed, run, gen, pair_index);
        let (child_a, child_b) = breed_pair(&current.individuals, params, &mut stream);
        let slot_a = chunk[0];
        let energy_a = ctx.energy_of(&child_a);
        next[slot_a] = Individual {
            genotype: child_a,
            energy: energy_a,
            eval_count: current.individuals[slot_a].eval_count + 1,
        };
        if let Some(&slot_b) = chunk.get(1) {
            let energy_b = ctx.energy_of(&child_b);
            next[slot_b] = Individual {
                genotype: child_b,
                energy: energy_b,
                eval_count: current.individuals[slot_b].eval_count + 1,
            };
        }
    }

    let mut sampler = ls_sampler_stream(seed, run, gen, n);
    let picks = ls_sample(bred_slots.len(), ls_count(params), &mut sampler);
    let targets: Vec<usize> = picks.into_iter().map(|p| bred_slots[p]).collect();
    for &slot in &targets {
        let mut stream = ls_stream(seed, run, gen, n, slot);
        let (genotype, energy, used) = solis_wets(
            &next[slot].genotype,
            next[slot].energy,
            |g| ctx.energy_of(g),
            sw,
            &mut stream,
        );
        next[slot].genotype = genotype;
        next[slot].energy = energy;
        next[slot].eval_count += used;
    }

    Population { individuals: next, generation: gen }
}

/// Total evaluations consumed by the population, via the fixed-order
/// reduction; compared against `max_evals` for termination.
pub fn sum_evals(population: &Population) -> u64 {
    let counts: Vec<u64> = population.individuals.iter().map(|i| i.eval_count).collect();
    reduce::chunked_sum_u64(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, GridMap, Torsion};

    /// Tiny but real docking problem: two bonded atoms, one torsion, a 5^3
    /// grid with a quadratic bowl in every type map.
    fn tiny_ctx() -> EvalContext {
        let ligand = Ligand {
            atoms: vec![
                Atom { index: 0, atom_type: "C".into(), charge: 0.1, pos: [0.0, 0.0, 0.0] },
                Atom { index: 1, atom_type: "OA".into(), charge: -0.2, pos: [1.4, 0.0, 0.0] },
            ],
            torsions: vec![Torsion { axis_a: 0, axis_b: 1, moved: vec![] }],
            intra_pairs: vec![(0, 1)],
        };
        let n = 5usize;
        let bowl = |i: usize, j: usize, k: usize| {
            let c = (n - 1) as f64 / 2.0;
            let (x, y, z) = (i as f64 - c, j as f64 - c, k as f64 - c);
            0.05 * (x * x + y * y + z * z)
        };
        let mut values = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    values.push(bowl(i, j, k));
                }
            }
        }
        let grids = GridMaps {
            nx: n,
            ny: n,
            nz: n,
            spacing: 2.0,
            origin: [-4.0, -4.0, -4.0],
            maps: vec![
                GridMap { name: "C".into(), values: values.clone() },
                GridMap { name: "OA".into(), values },
                GridMap { name: "E".into(), values: vec![0.01; n * n * n] },
                GridMap { name: "D".into(), values: vec![0.02; n * n * n] },
            ],
        };
        EvalContext::new(Arc::new(ligand), Arc::new(grids), &ParamTable::builtin()).unwrap()
    }

    fn small_params(pop: usize) -> GaParams {
        GaParams { pop_size: pop, ..GaParams::default() }
    }

    #[test]
    fn default_params_validate() {
        GaParams::default().validate().unwrap();
        SolisWetsParams::default().validate().unwrap();
    }

    #[test]
    fn bad_params_are_rejected() {
        let mut ga = GaParams::default();
        ga.tournament_rate = 1.5;
        assert!(matches!(ga.validate(), Err(ParamError::ProbabilityOutOfRange { .. })));
        let ga = GaParams { pop_size: 1, ..GaParams::default() };
        assert!(matches!(ga.validate(), Err(ParamError::PopTooSmall(1))));
        let ga = GaParams { pop_size: 10, elitism_count: 11, ..GaParams::default() };
        assert!(matches!(ga.validate(), Err(ParamError::TooManyElites { .. })));
        let sw = SolisWetsParams { rho_min: 2.0, ..SolisWetsParams::default() };
        assert!(matches!(sw.validate(), Err(ParamError::BadRho)));
        let sw = SolisWetsParams { contract: 1.0, ..SolisWetsParams::default() };
        assert!(matches!(sw.validate(), Err(ParamError::BadStepFactors)));
    }

    #[test]
    fn initialization_is_deterministic_and_in_box() {
        let ctx = tiny_ctx();
        let params = small_params(40);
        let a = initialize_population(&ctx, &params, 42, 3);
        let b = initialize_population(&ctx, &params, 42, 3);
        assert_eq!(a.individuals.len(), 40);
        assert_eq!(a.generation, 0);
        let lo = ctx.grids.box_lo();
        let hi = ctx.grids.box_hi();
        for (x, y) in a.individuals.iter().zip(&b.individuals) {
            assert_eq!(x.energy.to_bits(), y.energy.to_bits());
            assert_eq!(x.genotype, y.genotype);
            assert_eq!(x.eval_count, 1);
            for axis in 0..3 {
                let t = x.genotype.translation[axis];
                assert!(
                    (lo[axis]..hi[axis]).contains(&t),
                    "translation {t} escapes the box on axis {axis}"
                );
            }
            for axis in 0..3 {
                let o = x.genotype.orientation[axis];
                assert!((0.0..std::f64::consts::TAU).contains(&o));
            }
        }
        // A different run index gives a different population.
        let c = initialize_population(&ctx, &params, 42, 4);
        assert_ne!(
            a.individuals[0].genotype, c.individuals[0].genotype,
            "distinct runs must draw distinct genotypes"
        );
    }

    #[test]
    fn stored_energies_match_fresh_evaluation() {
        let ctx = tiny_ctx();
        let pop = initialize_population(&ctx, &small_params(20), 7, 0);
        for ind in &pop.individuals {
            assert_eq!(
                ind.energy.to_bits(),
                ctx.energy_of(&ind.genotype).to_bits(),
                "cached energy must be bit-identical to a fresh evaluation"
            );
        }
    }

    fn two_individuals(e0: f64, e1: f64) -> Vec<Individual> {
        vec![
            Individual { genotype: Genotype::zeros(0), energy: e0, eval_count: 0 },
            Individual { genotype: Genotype::zeros(0), energy: e1, eval_count: 0 },
        ]
    }

    #[test]
    fn tournament_rate_one_always_selects_the_better() {
        let pool = two_individuals(5.0, 1.0);
        for t in 0..1000 {
            let mut stream = DrawStream::new(11, 0, 0, t);
            assert_eq!(tournament_select(&pool, 1.0, &mut stream), 1);
        }
    }

    #[test]
    fn tournament_tie_goes_to_the_lower_index() {
        let pool = two_individuals(3.0, 3.0);
        for t in 0..1000 {
            let mut stream = DrawStream::new(13, 0, 0, t);
            assert_eq!(tournament_select(&pool, 1.0, &mut stream), 0);
        }
    }

    #[test]
    fn tournament_frequency_matches_the_rate() {
        let pool = two_individuals(1.0, 2.0);
        let trials = 100_000u64;
        let mut better = 0u64;
        for t in 0..trials {
            let mut stream = DrawStream::new(42, 0, 0, t);
            if tournament_select(&pool, 0.60, &mut stream) == 0 {
                better += 1;
            }
        }
        let freq = better as f64 / trials as f64;
        assert!(
            (freq - 0.60).abs() < 0.01,
            "better-candidate frequency {freq} strays from 0.60 by more than 0.01"
        );
    }

    fn arange_genotype(ntors: usize, base: f64) -> Genotype {
        let mut g = Genotype::zeros(ntors);
        for i in 0..g.dim() {
            g.set_gene(i, base + i as f64);
        }
        g
    }

    #[test]
    fn crossover_rate_zero_copies_parents() {
        let a = arange_genotype(4, 0.0);
        let b = arange_genotype(4, 100.0);
        let mut stream = DrawStream::new(1, 0, 0, 0);
        let (ca, cb) = two_point_crossover(&a, &b, 0.0, &mut stream);
        assert_eq!(ca, a);
        assert_eq!(cb, b);
        assert_eq!(stream.draws_used(), 1, "only the gate draw is consumed when crossover skips");
    }

    #[test]
    fn crossover_exchanges_genes_positionwise() {
        let a = arange_genotype(5, 0.0);
        let b = arange_genotype(5, 100.0);
        for t in 0..200 {
            let mut stream = DrawStream::new(21, 0, 0, t);
            let (ca, cb) = two_point_crossover(&a, &b, 1.0, &mut stream);
            for g in 0..a.dim() {
                let pair = (ca.gene(g), cb.gene(g));
                let keep = (a.gene(g), b.gene(g));
                let swap = (b.gene(g), a.gene(g));
                assert!(
                    pair == keep || pair == swap,
                    "gene {g} of trial {t} is neither kept nor swapped: {pair:?}"
                );
            }
            // The swapped region must be contiguous.
            let swapped: Vec<bool> = (0..a.dim()).map(|g| ca.gene(g) == b.gene(g)).collect();
            let first = swapped.iter().position(|&s| s);
            let last = swapped.iter().rposition(|&s| s);
            if let (Some(f), Some(l)) = (first, last) {
                assert!(
                    swapped[f..=l].iter().all(|&s| s),
                    "swap region has a hole in trial {t}: {swapped:?}"
                );
            }
        }
    }

    #[test]
    fn mutation_rate_zero_and_magnitude_zero_are_identities() {
        let base = arange_genotype(6, 0.0);
        let mut params = small_params(10);
        params.mutation_rate = 0.0;
        let mut g = base.clone();
        let mut stream = DrawStream::new(3, 0, 0, 0);
        mutate(&mut g, &params, &mut stream);
        assert_eq!(g, base);

        params.mutation_rate = 1.0;
        params.mutation_magnitude_translation = 0.0;
        params.mutation_magnitude_angle = 0.0;
        let mut g = base.clone();
        let mut stream = DrawStream::new(3, 0, 0, 1);
        mutate(&mut g, &params, &mut stream);
        assert_eq!(g, base, "zero magnitude must leave every gene untouched");
    }

    #[test]
    fn mutation_fraction_tracks_the_rate() {
        let params = small_params(10); // defaults: rate 0.02
        let base = arange_genotype(4, 0.0); // 10 genes
        let trials = 10_000u64;
        let mut changed = 0u64;
        let mut total = 0u64;
        for t in 0..trials {
            let mut g = base.clone();
            let mut stream = DrawStream::new(77, 0, 0, t);
            mutate(&mut g, &params, &mut stream);
            for i in 0..g.dim() {
                total += 1;
                if g.gene(i) != base.gene(i) {
                    changed += 1;
                }
            }
        }
        let frac = changed as f64 / total as f64;
        assert!(
            (frac - 0.02).abs() < 0.002,
            "changed-gene fraction {frac} strays from 0.02 by more than 0.002 over {total} genes"
        );
    }

    #[test]
    fn mutation_deltas_respect_per_class_magnitudes() {
        let mut params = small_params(10);
        params.mutation_rate = 1.0;
        let base = arange_genotype(3, 0.0); // 9 genes: 3 translation + 6 angle
        for t in 0..200 {
            let mut g = base.clone();
            let mut stream = DrawStream::new(5, 0, 0, t);
            mutate(&mut g, &params, &mut stream);
            for i in 0..g.dim() {
                let delta = (g.gene(i) - base.gene(i)).abs();
                let bound = if base.is_angle_gene(i) {
                    params.mutation_magnitude_angle
                } else {
                    params.mutation_magnitude_translation
                };
                assert!(delta <= bound, "gene {i} delta {delta} exceeds magnitude {bound}");
            }
        }
    }

    /// Shifted sphere function over the genotype's genes.
    fn sphere_energy(g: &Genotype) -> f64 {
        let mut sum = 0.0;
        for i in 0..g.dim() {
            let x = g.gene(i);
            sum += x * x;
        }
        sum
    }

    #[test]
    fn solis_wets_never_worsens_and_respects_eval_budget() {
        let params = SolisWetsParams { max_iters: 50, ..SolisWetsParams::default() };
        for t in 0..500 {
            let mut start = Genotype::zeros(2);
            let mut seeder = DrawStream::new(900, 0, 0, t);
            for i in 0..start.dim() {
                start.set_gene(i, seeder.next_range(-4.0, 4.0));
            }
            let e0 = sphere_energy(&start);
            let mut stream = DrawStream::new(901, 0, 0, t);
            let (_, e, used) = solis_wets(&start, e0, sphere_energy, &params, &mut stream);
            assert!(e <= e0, "trial {t}: energy rose from {e0} to {e}");
            assert!(used <= 2 * params.max_iters as u64, "trial {t}: {used} evals");
        }
    }

    #[test]
    fn solis_wets_converges_on_the_sphere_function() {
        let params = SolisWetsParams::default();
        let mut start = Genotype::zeros(0); // 6 genes
        let per_gene = 5.0 / (6.0f64).sqrt(); // Euclidean distance 5 from the origin
        for i in 0..start.dim() {
            start.set_gene(i, per_gene);
        }
        let e0 = sphere_energy(&start);
        let mut converged = 0;
        for t in 0..100 {
            let mut stream = DrawStream::new(4242, 0, 0, t);
            let (g, e, _) = solis_wets(&start, e0, sphere_energy, &params, &mut stream);
            let norm = e.sqrt();
            assert!((sphere_energy(&g) - e).abs() <= f64::EPSILON * e.abs().max(1.0));
            if norm < 0.1 {
                converged += 1;
            }
        }
        assert!(
            converged >= 95,
            "only {converged}/100 trials reached |x| < 0.1 within {} iterations",
            params.max_iters
        );
    }

    #[test]
    fn ls_count_rounds_up_but_tolerates_float_products() {
        let mut params = small_params(150);
        params.ls_rate = 0.06;
        assert_eq!(ls_count(&params), 9);
        params.ls_rate = 0.0;
        assert_eq!(ls_count(&params), 0);
        params.ls_rate = 1.0;
        assert_eq!(ls_count(&params), 150);
        params.ls_rate = 0.001; // 0.15 of an individual still rounds up
        assert_eq!(ls_count(&params), 1);
    }

    #[test]
    fn ls_sample_is_distinct_sorted_and_in_range() {
        let mut stream = DrawStream::new(31, 0, 5, 150);
        for k in [0usize, 1, 9, 150] {
            let picks = ls_sample(150, k, &mut stream);
            assert_eq!(picks.len(), k);
            assert!(picks.windows(2).all(|w| w[0] < w[1]), "picks not strictly ascending: {picks:?}");
            assert!(picks.iter().all(|&p| p < 150));
        }
    }

    #[test]
    fn elite_indices_pick_best_with_index_tie_break() {
        let mut pool = two_individuals(2.0, 1.0);
        pool.push(Individual { genotype: Genotype::zeros(0), energy: 1.0, eval_count: 0 });
        assert_eq!(elite_indices(&pool, 1), vec![1], "energy tie must favor index 1 over 2");
        assert_eq!(elite_indices(&pool, 2), vec![1, 2]);
        assert_eq!(elite_indices(&pool, 3), vec![0, 1, 2]);
    }

    #[test]
    fn full_elitism_reproduces_the_generation_verbatim() {
        let ctx = tiny_ctx();
        let mut params = small_params(12);
        params.elitism_count = 12;
        let pop = initialize_population(&ctx, &params, 3, 0);
        let next = next_generation(&ctx, &pop, &params, &SolisWetsParams::default(), 3, 0);
        assert_eq!(next.generation, 1);
        assert_eq!(next.individuals, pop.individuals);
    }

    #[test]
    fn best_energy_is_non_increasing_and_size_is_stable() {
        let ctx = tiny_ctx();
        let mut params = small_params(14);
        params.elitism_count = 1;
        let sw = SolisWetsParams { max_iters: 15, ..SolisWetsParams::default() };
        for seed in 0..3u64 {
            let mut pop = initialize_population(&ctx, &params, seed, 0);
            let mut best = pop.best().1;
            for _ in 0..100 {
                pop = next_generation(&ctx, &pop, &params, &sw, seed, 0);
                let now = pop.best().1;
                assert!(
                    now <= best,
                    "seed {seed}: best energy rose from {best} to {now} at generation {}",
                    pop.generation
                );
                best = now;
                assert_eq!(pop.individuals.len(), 14);
            }
        }
    }

    #[test]
    fn next_generation_is_deterministic() {
        let ctx = tiny_ctx();
        let params = small_params(16);
        let sw = SolisWetsParams { max_iters: 10, ..SolisWetsParams::default() };
        let pop = initialize_population(&ctx, &params, 9, 2);
        let a = next_generation(&ctx, &pop, &params, &sw, 9, 2);
        let b = next_generation(&ctx, &pop, &params, &sw, 9, 2);
        assert_eq!(a, b);
    }

    #[test]
    fn eval_counts_accumulate_across_generations() {
        let ctx = tiny_ctx();
        let mut params = small_params(10);
        params.ls_rate = 0.0; // isolate breeding: one eval per bred slot
        params.elitism_count = 2;
        let pop = initialize_population(&ctx, &params, 5, 0);
        assert_eq!(sum_evals(&pop), 10);
        let next = next_generation(&ctx, &pop, &params, &SolisWetsParams::default(), 5, 0);
        // 8 bred slots gain one eval each; 2 elites carry their counts.
        assert_eq!(sum_evals(&next), 18);
        let elites = elite_indices(&pop.individuals, 2);
        for (slot, ind) in next.individuals.iter().enumerate() {
            let expected = if elites.contains(&slot) { 1 } else { 2 };
            assert_eq!(ind.eval_count, expected, "slot {slot}");
        }
    }

    #[test]
    fn sum_evals_matches_the_arithmetic_series() {
        let individuals: Vec<Individual> = (1..=150)
            .map(|i| Individual { genotype: Genotype::zeros(0), energy: 0.0, eval_count: i })
            .collect();
        let pop = Population { individuals, generation: 0 };
        assert_eq!(sum_evals(&pop), 11_325);
        let zeros = Population {
            individuals: (0..20)
                .map(|_| Individual { genotype: Genotype::zeros(0), energy: 0.0, eval_count: 0 })
                .collect(),
            generation: 0,
        };
        assert_eq!(sum_evals(&zeros), 0);
    }
}
