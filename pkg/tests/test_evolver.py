import math

import numpy as np
import pytest

import chemrc.evolver as evolver
import chemrc.ssa as ssa
from chemrc.evolver import (
    CHORD_LENGTH_BOUNDS,
    CHORD_STEP_BOUNDS,
    INFLOW_BOUNDS,
    NODE_BOUNDS,
    EvalContext,
    GAConfig,
    ParamsGenome,
    TopologyGenome,
    evaluate_params,
    run_inner_ga,
    run_outer_ga,
)
from chemrc.inflow import generate_step_signal
from chemrc.rng import derive_rng, derive_seed
from chemrc.ssa import OUTFLOW_BOUNDS, RATE_BOUNDS, SCALING_BOUNDS, Trajectory
from chemrc.tasks import ShortTermTask
from chemrc.topology import build_topology


def small_genome():
    return TopologyGenome(num_nodes=50, inflow_amount=50, chord_length=5, chord_step=25)


def genome_rates(genome, value=0.5):
    return tuple([value] * genome.edge_count)


def small_params(genome):
    return ParamsGenome(
        outflow_rate=0.5,
        input_rate_scaling=1.0,
        reaction_rate_scaling=1.0,
        reaction_rates=genome_rates(genome),
    )


def ctx(**kw):
    defaults = dict(step_size=2.0, signal_seed=101, sim_seed=202,
                    total_time=50, ridge_lambda=1.0)
    defaults.update(kw)
    return EvalContext(**defaults)


def test_evaluate_params_is_deterministic():
    g = small_genome()
    p = small_params(g)
    task = ShortTermTask()
    a = evaluate_params(g, p, task, ctx())
    b = evaluate_params(g, p, task, ctx())
    assert a == b
    assert math.isfinite(a) and a >= 0


def test_genome_bounds_make_specs_always_valid():
    # chord_length <= 25 < 50 <= num_nodes, so TopologySpec can never reject
    rng = np.random.default_rng(1)
    for _ in range(50):
        g = TopologyGenome(
            num_nodes=int(rng.integers(*NODE_BOUNDS, endpoint=True)),
            inflow_amount=int(rng.integers(*INFLOW_BOUNDS, endpoint=True)),
            chord_length=int(rng.integers(*CHORD_LENGTH_BOUNDS, endpoint=True)),
            chord_step=int(rng.integers(*CHORD_STEP_BOUNDS, endpoint=True)),
        )
        topo = build_topology(g.spec())
        assert topo.num_edges == g.edge_count


def test_genome_validation():
    with pytest.raises(ValueError):
        TopologyGenome(num_nodes=40, inflow_amount=50, chord_length=5, chord_step=5)
    with pytest.raises(ValueError):
        ParamsGenome(outflow_rate=0.01, input_rate_scaling=1, reaction_rate_scaling=1,
                     reaction_rates=(0.5,))


def test_perfect_memory_stub_pipeline(monkeypatch):
    # inject features that are exactly the lagged signal; the ridge readout
    # must then reproduce the target to numerical precision
    def fake_simulate(topology, params, signal, total_time, seed, **kw):
        T = int(total_time)
        states = np.zeros((T, topology.num_nodes))
        for t in range(T):
            if t >= 1:
                states[t, 1] = signal.value_at(t - 1)
            if t >= 2:
                states[t, 2] = signal.value_at(t - 2)
        return Trajectory(states=states, seed=seed)

    monkeypatch.setattr(ssa, "simulate", fake_simulate)
    g = small_genome()
    score = evaluate_params(g, small_params(g), ShortTermTask(), ctx(ridge_lambda=1e-9))
    assert score < 1e-6


def test_failed_evaluation_returns_infinity(monkeypatch):
    def broken_simulate(*a, **kw):
        raise ValueError("injected failure")

    monkeypatch.setattr(ssa, "simulate", broken_simulate)
    g = small_genome()
    assert evaluate_params(g, small_params(g), ShortTermTask(), ctx()) == math.inf


def sphere_fitness(topology_genome, params_genome, task, ctx):
    genes = (
        params_genome.outflow_rate,
        params_genome.input_rate_scaling,
        params_genome.reaction_rate_scaling,
        *params_genome.reaction_rates,
    )
    centers = (0.5, 5.0, 5.0) + (0.5,) * len(params_genome.reaction_rates)
    return float(sum((g - c) ** 2 for g, c in zip(genes, centers)))


def test_inner_ga_improves_sphere_objective(monkeypatch):
    monkeypatch.setattr(evolver, "evaluate_params", sphere_fitness)
    config = GAConfig(inner_generations=30, inner_budget_seconds=None)
    result = run_inner_ga(
        small_genome(), ShortTermTask(), config,
        step_size=2.0, signal_seed=1, seed_root=42,
    )
    curve = result.min_fitness_curve()
    assert len(curve) == 31
    assert curve[-1] < curve[0]
    assert result.best_fitness == min(curve)


def test_min_fitness_curves_never_increase(monkeypatch):
    # deterministic pseudo-random stub keyed on the genome content
    def stub(topology_genome, params_genome, task, ctx):
        return float(abs(hash((params_genome.reaction_rates, ctx.sim_seed))) % 1000)

    monkeypatch.setattr(evolver, "evaluate_params", stub)
    for seed in range(5):
        config = GAConfig(inner_generations=8, inner_budget_seconds=None)
        result = run_inner_ga(
            small_genome(), ShortTermTask(), config,
            step_size=2.0, signal_seed=1, seed_root=seed,
        )
        curve = result.min_fitness_curve()
        assert all(b <= a for a, b in zip(curve, curve[1:]))


def test_population_size_constant_per_generation(monkeypatch):
    monkeypatch.setattr(evolver, "evaluate_params", sphere_fitness)
    config = GAConfig(inner_generations=6, inner_budget_seconds=None)
    result = run_inner_ga(
        small_genome(), ShortTermTask(), config,
        step_size=2.0, signal_seed=1, seed_root=3,
    )
    by_gen = {}
    for rec in result.log:
        by_gen.setdefault(rec.generation, []).append(rec)
    assert set(by_gen) == set(range(7))
    assert all(len(recs) == 4 for recs in by_gen.values())
    for recs in by_gen.values():
        assert [r.index for r in recs] == [0, 1, 2, 3]


def test_all_logged_genomes_within_bounds(monkeypatch):
    monkeypatch.setattr(evolver, "evaluate_params", sphere_fitness)
    config = GAConfig(inner_generations=10, inner_budget_seconds=None)
    result = run_inner_ga(
        small_genome(), ShortTermTask(), config,
        step_size=2.0, signal_seed=1, seed_root=9,
    )
    for rec in result.log:
        g = rec.genome
        assert OUTFLOW_BOUNDS[0] <= g.outflow_rate <= OUTFLOW_BOUNDS[1]
        assert SCALING_BOUNDS[0] <= g.input_rate_scaling <= SCALING_BOUNDS[1]
        assert SCALING_BOUNDS[0] <= g.reaction_rate_scaling <= SCALING_BOUNDS[1]
        assert all(RATE_BOUNDS[0] <= r <= RATE_BOUNDS[1] for r in g.reaction_rates)


def test_mutation_steps_and_clamping():
    config = GAConfig()
    specs = evolver._topology_gene_specs(config)
    g = TopologyGenome(num_nodes=300, inflow_amount=200, chord_length=25, chord_step=5)
    genes = evolver._topology_to_genes(g)
    rng = derive_rng(7)
    seen_nodes = set()
    for _ in range(200):
        mutated = evolver._step_mutate(genes, specs, 1.0, rng)
        m = evolver._topology_from_genes(mutated)  # must stay constructible
        seen_nodes.add(m.num_nodes)
        assert m.num_nodes in (290, 300)  # +10 clamps at the upper bound
        assert m.inflow_amount in (190, 200)
        assert m.chord_length in (23, 25)
        assert m.chord_step in (5, 7)  # 5 - 2 clamps back to the lower bound
    assert seen_nodes == {290, 300}


def test_uniform_crossover_mixes_and_preserves_genes():
    rng = derive_rng(21)
    a = (1.0, 2.0, 3.0, 4.0)
    b = (10.0, 20.0, 30.0, 40.0)
    saw_swap = False
    for _ in range(50):
        ca, cb = evolver._uniform_mate(a, b, rng)
        for i in range(4):
            assert {ca[i], cb[i]} == {a[i], b[i]}
        if ca != a:
            saw_swap = True
    assert saw_swap


def test_crossover_skipped_on_dimension_mismatch():
    rng = derive_rng(22)
    a = (1.0, 2.0, 3.0)
    b = (10.0, 20.0)
    assert evolver._uniform_mate(a, b, rng) == (a, b)


def test_inner_dimension_tracks_outer_genome():
    rng = derive_rng(30)
    config = GAConfig()
    specs = evolver._topology_gene_specs(config)
    g = TopologyGenome(num_nodes=100, inflow_amount=100, chord_length=10, chord_step=10)
    for _ in range(30):
        g = evolver._topology_from_genes(
            evolver._step_mutate(evolver._topology_to_genes(g), specs, 0.5, rng)
        )
        inner = evolver._random_params_genome(rng, g.edge_count)
        topo = build_topology(g.spec())
        assert len(inner.reaction_rates) == topo.num_edges


def test_failed_individuals_never_enter_elite(monkeypatch):
    # genomes with outflow above 0.5 "fail"; the rest score their outflow
    def stub(topology_genome, params_genome, task, ctx):
        if params_genome.outflow_rate > 0.5:
            return math.inf
        return float(params_genome.outflow_rate)

    monkeypatch.setattr(evolver, "evaluate_params", stub)
    config = GAConfig(inner_generations=10, inner_budget_seconds=None)
    result = run_inner_ga(
        small_genome(), ShortTermTask(), config,
        step_size=2.0, signal_seed=1, seed_root=5,
    )
    assert math.isfinite(result.best_fitness)
    assert result.best_genome.outflow_rate <= 0.5


def test_outer_ga_runs_and_logs(monkeypatch):
    monkeypatch.setattr(evolver, "evaluate_params", sphere_fitness)
    config = GAConfig(
        outer_generations=3, inner_generations=2,
        outer_budget_seconds=None, inner_budget_seconds=None, master_seed=7,
    )
    result = run_outer_ga(ShortTermTask(), config, step_size=2.0)
    curve = result.outer.min_fitness_curve()
    assert len(curve) == 4
    assert all(b <= a for a, b in zip(curve, curve[1:]))
    assert isinstance(result.best_topology, TopologyGenome)
    assert isinstance(result.best_params, ParamsGenome)
    assert result.best_params.reaction_rates  # non-empty, matches some topology
    # one inner run per outer evaluation: 4 initial + 3 generations x 2 children
    assert len(result.inner_runs) == 4 + 3 * 2
    for rec in result.outer.log:
        g = rec.genome
        assert NODE_BOUNDS[0] <= g.num_nodes <= NODE_BOUNDS[1]
        assert INFLOW_BOUNDS[0] <= g.inflow_amount <= INFLOW_BOUNDS[1]
        assert CHORD_LENGTH_BOUNDS[0] <= g.chord_length <= CHORD_LENGTH_BOUNDS[1]
        assert CHORD_STEP_BOUNDS[0] <= g.chord_step <= CHORD_STEP_BOUNDS[1]


def test_full_two_level_run_reproducible(monkeypatch):
    monkeypatch.setattr(evolver, "evaluate_params", sphere_fitness)
    config = GAConfig(
        outer_generations=2, inner_generations=2,
        outer_budget_seconds=None, inner_budget_seconds=None, master_seed=11,
    )
    r1 = run_outer_ga(ShortTermTask(), config, step_size=2.0)
    r2 = run_outer_ga(ShortTermTask(), config, step_size=2.0)
    assert r1.best_fitness == r2.best_fitness
    assert r1.best_topology == r2.best_topology
    assert r1.best_params == r2.best_params
    assert [(r.generation, r.index, r.fitness) for r in r1.outer.log] == [
        (r.generation, r.index, r.fitness) for r in r2.outer.log
    ]


def test_evaluation_seeds_are_addressable():
    # the same (root, generation, index) always yields the same seed,
    # different addresses yield different seeds
    s1 = derive_seed(5, 4, 1, 2)
    s2 = derive_seed(5, 4, 1, 2)
    s3 = derive_seed(5, 4, 1, 3)
    s4 = derive_seed(5, 4, 2, 2)
    assert s1 == s2
    assert len({s1, s3, s4}) == 3


def test_ga_config_validation():
    with pytest.raises(ValueError):
        GAConfig(population_size=2, elite_size=2)
    with pytest.raises(ValueError):
        GAConfig(inner_budget_seconds=-5)
