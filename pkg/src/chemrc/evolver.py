"""Two-level genetic search over reservoir topologies and kinetics.

The outer level walks an integer topology genome (cycle length, inflow
amount, chord length, chord step). The fitness of one topology is the best
test NRMSE found by a nested inner GA over its kinetic genome (outflow
rate, the two scaling factors, and one reaction rate per edge, so the
inner genome dimension follows the outer genome's edge count).

Both levels run the same machinery: tournament selection among three
uniformly drawn individuals, uniform per-gene crossover, per-gene
plus/minus-step mutation applied with probability ``indpb``, clamping to
the search bounds, and two elites carried unchanged with their recorded
fitness. Evaluations that fail validation score +infinity, which keeps
them out of the elite set without aborting the search.

Every evaluation derives its simulation seed from (master seed,
generation, population index), so fitness values do not depend on
scheduling order and whole runs are reproducible when the wall-clock
budget is left out of play.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .inflow import generate_step_signal
from .readout import fit_ridge, nrmse, split_train_test
from .rng import derive_rng, derive_seed
from .ssa import OUTFLOW_BOUNDS, RATE_BOUNDS, SCALING_BOUNDS, NetworkParams
from .tasks import assemble_dataset
from .topology import TopologySpec, build_topology
from . import ssa

log = logging.getLogger(__name__)

NODE_BOUNDS = (50, 300)
INFLOW_BOUNDS = (50, 200)
CHORD_LENGTH_BOUNDS = (5, 25)
CHORD_STEP_BOUNDS = (5, 25)


@dataclass(frozen=True)
class TopologyGenome:
    """Outer-level genome: integer genes inside the search boundaries."""

    num_nodes: int
    inflow_amount: int
    chord_length: int
    chord_step: int

    def __post_init__(self):
        _check_bounds("num_nodes", self.num_nodes, NODE_BOUNDS)
        _check_bounds("inflow_amount", self.inflow_amount, INFLOW_BOUNDS)
        _check_bounds("chord_length", self.chord_length, CHORD_LENGTH_BOUNDS)
        _check_bounds("chord_step", self.chord_step, CHORD_STEP_BOUNDS)

    def spec(self) -> TopologySpec:
        return TopologySpec(
            num_nodes=self.num_nodes,
            chord_length=self.chord_length,
            chord_step=self.chord_step,
        )

    @property
    def edge_count(self) -> int:
        return self.num_nodes + -(-self.num_nodes // self.chord_step)


@dataclass(frozen=True)
class ParamsGenome:
    """Inner-level genome: kinetic parameters for a fixed topology."""

    outflow_rate: float
    input_rate_scaling: float
    reaction_rate_scaling: float
    reaction_rates: tuple[float, ...]

    def __post_init__(self):
        _check_bounds("outflow_rate", self.outflow_rate, OUTFLOW_BOUNDS)
        _check_bounds("input_rate_scaling", self.input_rate_scaling, SCALING_BOUNDS)
        _check_bounds("reaction_rate_scaling", self.reaction_rate_scaling, SCALING_BOUNDS)
        for k in self.reaction_rates:
            _check_bounds("reaction rate", k, RATE_BOUNDS)

    def network_params(self) -> NetworkParams:
        return NetworkParams(
            reaction_rates=self.reaction_rates,
            outflow_rate=self.outflow_rate,
            input_rate_scaling=self.input_rate_scaling,
            reaction_rate_scaling=self.reaction_rate_scaling,
        )


def _check_bounds(name, value, bounds):
    if not bounds[0] <= value <= bounds[1]:
        raise ValueError(f"{name}={value} outside bounds {bounds}")


@dataclass(frozen=True)
class GAConfig:
    """Shared settings for both GA levels."""

    population_size: int = 4
    elite_size: int = 2
    tournament_size: int = 3
    indpb: float = 0.5
    outer_generations: int = 10
    inner_generations: int = 10
    outer_budget_seconds: float | None = 10_000.0
    inner_budget_seconds: float | None = 500.0
    master_seed: int = 1
    # mutation step sizes, per gene family
    nodes_step: int = 10
    chord_step_size: int = 2
    inflow_step: int = 10
    outflow_step: float = 0.2
    rate_step: float = 0.1
    scaling_step: float = 1.0

    def __post_init__(self):
        if not 0 < self.elite_size < self.population_size:
            raise ValueError("need 0 < elite_size < population_size")
        for b in (self.outer_budget_seconds, self.inner_budget_seconds):
            if b is not None and b <= 0:
                raise ValueError("wall-clock budgets must be positive")


@dataclass(frozen=True)
class EvalContext:
    """Everything one fitness evaluation needs besides the genomes."""

    step_size: float
    signal_seed: int
    sim_seed: int
    total_time: int = 50
    ridge_lambda: float = 1.0


@dataclass(frozen=True)
class FitnessRecord:
    """One logged evaluation (or elite carry-over) in a GA run."""

    generation: int
    index: int
    genome: TopologyGenome | ParamsGenome
    fitness: float
    seed: int


@dataclass
class GARunResult:
    best_genome: object
    best_fitness: float
    best_payload: object
    log: list[FitnessRecord]

    def min_fitness_curve(self) -> list[float]:
        """Per-generation minimum fitness, in generation order."""
        by_gen: dict[int, float] = {}
        for rec in self.log:
            cur = by_gen.get(rec.generation, math.inf)
            by_gen[rec.generation] = min(cur, rec.fitness)
        return [by_gen[g] for g in sorted(by_gen)]


@dataclass
class OuterResult:
    best_topology: TopologyGenome
    best_params: ParamsGenome | None
    best_fitness: float
    outer: GARunResult
    inner_runs: list[tuple[int, int, GARunResult]]  # (generation, index, run)


def evaluate_params(
    topology_genome: TopologyGenome,
    params_genome: ParamsGenome,
    task,
    ctx: EvalContext,
) -> float:
    """Full pipeline fitness: build, simulate, fit, score on the test split.

    Validation failures anywhere in the pipeline yield +infinity instead of
    raising, so the GA can discard the individual and move on.
    """
    try:
        topo = build_topology(topology_genome.spec())
        if len(params_genome.reaction_rates) != topo.num_edges:
            raise ValueError(
                f"genome carries {len(params_genome.reaction_rates)} rates for "
                f"{topo.num_edges} edges"
            )
        signal = generate_step_signal(
            total_time=ctx.total_time,
            step_size=ctx.step_size,
            inflow_amount=float(topology_genome.inflow_amount),
            seed=ctx.signal_seed,
        )
        traj = ssa.simulate(
            topo, params_genome.network_params(), signal, ctx.total_time, ctx.sim_seed
        )
        series = task.target(signal, traj.sample_times)
        dataset = assemble_dataset(traj, series, input_node=topo.input_node)
        train, test = split_train_test(dataset)
        model = fit_ridge(train, ctx.ridge_lambda)
        return float(nrmse(model.predict(test.features), test.targets))
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.warning("evaluation failed, assigning +inf fitness: %s", exc)
        return math.inf


# ---------------------------------------------------------------------------
# shared GA machinery


def _tournament(fits, rng, k):
    """Index of the best of k uniform draws (with replacement)."""
    draws = rng.integers(0, len(fits), size=k)
    best = int(draws[0])
    for d in draws[1:]:
        if fits[int(d)] < fits[best]:
            best = int(d)
    return best


def _uniform_mate(a: tuple, b: tuple, rng) -> tuple[tuple, tuple]:
    """Uniform crossover on flat gene tuples; skipped on dimension mismatch."""
    if len(a) != len(b):
        return a, b
    ca, cb = list(a), list(b)
    for i in range(len(ca)):
        if rng.random() < 0.5:
            ca[i], cb[i] = cb[i], ca[i]
    return tuple(ca), tuple(cb)


def _step_mutate(genes: tuple, specs, indpb, rng) -> tuple:
    """Per-gene +-step mutation with probability indpb, clamped to bounds."""
    out = list(genes)
    for i, (low, high, step, is_int) in enumerate(specs):
        if rng.random() < indpb:
            sign = 1.0 if rng.random() < 0.5 else -1.0
            val = out[i] + sign * step
            val = min(max(val, low), high)
            out[i] = int(round(val)) if is_int else float(val)
    return tuple(out)


def _run_ga(
    population: list,
    eval_batch,
    mate,
    mutate,
    config: GAConfig,
    generations: int,
    budget_seconds: float | None,
    ops_rng,
) -> GARunResult:
    """Elitist generational loop shared by both levels.

    ``eval_batch(genomes, generation, start_index)`` returns a list of
    (fitness, seed, payload) triples. The log records the whole population
    of every generation, elites included, so the per-generation minimum
    curve can be read straight from it.
    """
    start = time.monotonic()
    records: list[FitnessRecord] = []
    evals = eval_batch(population, 0, 0)
    pop = [(g, f, s, p) for g, (f, s, p) in zip(population, evals)]
    for i, (g, f, s, _) in enumerate(pop):
        records.append(FitnessRecord(0, i, g, f, s))

    best = min(pop, key=lambda e: e[1])

    for gen in range(1, generations + 1):
        if budget_seconds is not None and time.monotonic() - start >= budget_seconds:
            log.info("wall-clock budget hit at generation %d", gen)
            break
        order = sorted(range(len(pop)), key=lambda i: pop[i][1])
        elites = [pop[i] for i in order[: config.elite_size]]
        fits = [e[1] for e in pop]
        children = []
        while len(children) < config.population_size - config.elite_size:
            ia = _tournament(fits, ops_rng, config.tournament_size)
            ib = _tournament(fits, ops_rng, config.tournament_size)
            ca, cb = mate(pop[ia][0], pop[ib][0], ops_rng)
            children.append(mutate(ca, ops_rng))
            if len(children) < config.population_size - config.elite_size:
                children.append(mutate(cb, ops_rng))
        evals = eval_batch(children, gen, config.elite_size)
        child_entries = [(g, f, s, p) for g, (f, s, p) in zip(children, evals)]
        pop = elites + child_entries
        for i, (g, f, s, _) in enumerate(pop):
            records.append(FitnessRecord(gen, i, g, f, s))
        gen_best = min(pop, key=lambda e: e[1])
        if gen_best[1] < best[1]:
            best = gen_best

    return GARunResult(
        best_genome=best[0], best_fitness=best[1], best_payload=best[3], log=records
    )


# ---------------------------------------------------------------------------
# inner level: kinetic parameters for one fixed topology


def _params_gene_specs(config: GAConfig, n_edges: int):
    specs = [
        (*OUTFLOW_BOUNDS, config.outflow_step, False),
        (*SCALING_BOUNDS, config.scaling_step, False),
        (*SCALING_BOUNDS, config.scaling_step, False),
    ]
    specs += [(*RATE_BOUNDS, config.rate_step, False)] * n_edges
    return specs


def _params_to_genes(g: ParamsGenome) -> tuple:
    return (
        g.outflow_rate,
        g.input_rate_scaling,
        g.reaction_rate_scaling,
        *g.reaction_rates,
    )


def _params_from_genes(genes: tuple) -> ParamsGenome:
    return ParamsGenome(
        outflow_rate=genes[0],
        input_rate_scaling=genes[1],
        reaction_rate_scaling=genes[2],
        reaction_rates=tuple(genes[3:]),
    )


def _random_params_genome(rng, n_edges: int) -> ParamsGenome:
    return ParamsGenome(
        outflow_rate=float(rng.uniform(*OUTFLOW_BOUNDS)),
        input_rate_scaling=float(rng.uniform(*SCALING_BOUNDS)),
        reaction_rate_scaling=float(rng.uniform(*SCALING_BOUNDS)),
        reaction_rates=tuple(float(v) for v in rng.uniform(*RATE_BOUNDS, size=n_edges)),
    )


def run_inner_ga(
    topology_genome: TopologyGenome,
    task,
    config: GAConfig,
    step_size: float,
    signal_seed: int,
    seed_root: int,
    total_time: int = 50,
    ridge_lambda: float = 1.0,
) -> GARunResult:
    """Search kinetic genomes for one topology; returns the best found.

    ``seed_root`` names this run's private RNG tree: operator draws and
    per-evaluation simulation seeds all derive from it.
    """
    ops_rng = derive_rng(seed_root, rngmod.GA_OPS_STREAM)
    n_edges = topology_genome.edge_count
    population = [
        _random_params_genome(ops_rng, n_edges) for _ in range(config.population_size)
    ]
    specs = _params_gene_specs(config, n_edges)

    def eval_batch(genomes, generation, start_index):
        out = []
        for i, genome in enumerate(genomes):
            seed = derive_seed(
                seed_root, rngmod.GA_EVAL_STREAM, generation, start_index + i
            )
            ctx = EvalContext(
                step_size=step_size,
                signal_seed=signal_seed,
                sim_seed=seed,
                total_time=total_time,
                ridge_lambda=ridge_lambda,
            )
            out.append((evaluate_params(topology_genome, genome, task, ctx), seed, None))
        return out

    def mate(a, b, rng):
        ga, gb = _uniform_mate(_params_to_genes(a), _params_to_genes(b), rng)
        return _params_from_genes(ga), _params_from_genes(gb)

    def mutate(g, rng):
        return _params_from_genes(
            _step_mutate(_params_to_genes(g), specs, config.indpb, rng)
        )

    return _run_ga(
        population,
        eval_batch,
        mate,
        mutate,
        config,
        config.inner_generations,
        config.inner_budget_seconds,
        ops_rng,
    )


# ---------------------------------------------------------------------------
# outer level: topology genomes


def _topology_gene_specs(config: GAConfig):
    return [
        (*NODE_BOUNDS, config.nodes_step, True),
        (*INFLOW_BOUNDS, config.inflow_step, True),
        (*CHORD_LENGTH_BOUNDS, config.chord_step_size, True),
        (*CHORD_STEP_BOUNDS, config.chord_step_size, True),
    ]


def _topology_to_genes(g: TopologyGenome) -> tuple:
    return (g.num_nodes, g.inflow_amount, g.chord_length, g.chord_step)


def _topology_from_genes(genes: tuple) -> TopologyGenome:
    return TopologyGenome(
        num_nodes=genes[0],
        inflow_amount=genes[1],
        chord_length=genes[2],
        chord_step=genes[3],
    )


def _random_topology_genome(rng) -> TopologyGenome:
    return TopologyGenome(
        num_nodes=int(rng.integers(NODE_BOUNDS[0], NODE_BOUNDS[1] + 1)),
        inflow_amount=int(rng.integers(INFLOW_BOUNDS[0], INFLOW_BOUNDS[1] + 1)),
        chord_length=int(rng.integers(CHORD_LENGTH_BOUNDS[0], CHORD_LENGTH_BOUNDS[1] + 1)),
        chord_step=int(rng.integers(CHORD_STEP_BOUNDS[0], CHORD_STEP_BOUNDS[1] + 1)),
    )


def _outer_eval_worker(args):
    """Module-level so it can cross a process boundary."""
    (genome, task, config, step_size, signal_seed, inner_root, total_time,
     ridge_lambda) = args
    return run_inner_ga(
        genome,
        task,
        config,
        step_size=step_size,
        signal_seed=signal_seed,
        seed_root=inner_root,
        total_time=total_time,
        ridge_lambda=ridge_lambda,
    )


def run_outer_ga(
    task,
    config: GAConfig,
    step_size: float,
    total_time: int = 50,
    ridge_lambda: float = 1.0,
    jobs: int = 1,
) -> OuterResult:
    """Search topologies; each one is scored by a nested inner GA.

    With ``jobs > 1`` the inner runs of one generation execute in separate
    processes. Results are identical either way because every inner run's
    seed root comes from its (generation, index) address.
    """
    master = config.master_seed
    signal_seed = derive_seed(master, rngmod.SIGNAL_STREAM)
    ops_rng = derive_rng(master, rngmod.GA_OPS_STREAM)
    population = [_random_topology_genome(ops_rng) for _ in range(config.population_size)]
    specs = _topology_gene_specs(config)
    inner_runs: list[tuple[int, int, GARunResult]] = []

    def eval_batch(genomes, generation, start_index):
        arglist = []
        for i, genome in enumerate(genomes):
            inner_root = derive_seed(
                master, rngmod.GA_INNER_STREAM, generation, start_index + i
            )
            arglist.append(
                (genome, task, config, step_size, signal_seed, inner_root,
                 total_time, ridge_lambda)
            )
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                runs = list(pool.map(_outer_eval_worker, arglist))
        else:
            runs = [_outer_eval_worker(a) for a in arglist]
        out = []
        for i, run in enumerate(runs):
            inner_runs.append((generation, start_index + i, run))
            seed = arglist[i][5]
            out.append((run.best_fitness, seed, run))
        return out

    def mate(a, b, rng):
        ga, gb = _uniform_mate(_topology_to_genes(a), _topology_to_genes(b), rng)
        return _topology_from_genes(ga), _topology_from_genes(gb)

    def mutate(g, rng):
        return _topology_from_genes(
            _step_mutate(_topology_to_genes(g), specs, config.indpb, rng)
        )

    outer = _run_ga(
        population,
        eval_batch,
        mate,
        mutate,
        config,
        config.outer_generations,
        config.outer_budget_seconds,
        ops_rng,
    )
    best_run: GARunResult | None = outer.best_payload
    return OuterResult(
        best_topology=outer.best_genome,
        best_params=best_run.best_genome if best_run is not None else None,
        best_fitness=outer.best_fitness,
        outer=outer,
        inner_runs=inner_runs,
    )
