"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.  Wall-clock-bounded criteria assert their own budget.
"""

import itertools
import time

import numpy as np
import pytest

from gridsynth import dsl
from gridsynth.grid import Grid, grid_from_rows, random_grid
from gridsynth.guidance import OracleGuidance, ProbSpace, load_prob_table
from gridsynth.harness import RunConfig, run_benchmark, suite_entries
from gridsynth.ood import OOD_DSL_VERSION, coverage_is_disjoint, gen_ood_suite
from gridsynth.program import (
    EOS,
    IDENTITY,
    NEW_LEVEL,
    Task,
    check_program,
    encode,
    evaluate,
    parse,
    vocabulary,
)
from gridsynth.search import (
    SearchConfig,
    enumerate_candidates,
    execution_guided_solve,
    gridcoder_solve,
    lgs_greedy_solve,
    solve_task,
)
from gridsynth.taskgen import (
    GeneratorConfig,
    curated_two_chains,
    filter_boolean_tokens,
    filter_tokens,
    generate,
    in_place_tokens,
    keep_boolean_tokens,
    keep_tokens,
    recombiner_tokens,
    single_primitive_names,
    split_merge_tokens,
    tiling_tokens,
)

FIXTURE = "tests/data/task_59341089.json"


def _report(name: str, ok: bool, detail: str = ""):
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------- criterion 1

def test_dsl_semantics_suite():
    """Rotation group, mirror involutions, split/concat inverses, cellwise
    identities, and the remaining algebraic laws, on 1000 random grids each."""
    start = time.perf_counter()
    table = dsl.by_name(3)

    def u(name, g):
        return dsl.apply_primitive(table[name], [g])

    checked = 0
    for i in range(1000):
        g = random_grid((7001, i), (2, 12), (2, 12), 0.5)
        blank = Grid(np.zeros_like(g.cells))

        assert u("rot90", u("rot90", u("rot90", u("rot90", g)))) == g
        assert u("rot90", u("rot90", g)) == u("rot180", g)
        assert u("rot90", u("rot180", g)) == u("rot270", g)
        assert u("hmirror", u("hmirror", g)) == g
        assert u("vmirror", u("vmirror", g)) == g

        if g.width % 2 == 0:
            assert dsl.apply_primitive(table["hconcat"], [u("lefthalf", g), u("righthalf", g)]) == g
        if g.height % 2 == 0:
            assert dsl.apply_primitive(table["vconcat"], [u("tophalf", g), u("bottomhalf", g)]) == g

        assert dsl.apply_primitive(table["cellwiseOR"], [g, blank]) == g
        assert dsl.apply_primitive(table["cellwiseXOR"], [g, g]) == blank
        assert dsl.apply_primitive(table["cellwiseAND"], [g, g]) == g
        assert dsl.apply_primitive(table["cellwiseDifference"], [g, blank]) == g
        assert dsl.apply_primitive(table["cellwiseDifference"], [g, g]) == blank

        counts = np.bincount(g.cells[g.cells != 0], minlength=10)
        present = np.nonzero(counts)[0]
        if len(present) >= 2:
            top = counts[present].max()
            low = counts[present].min()
            if top != low and (counts[present] == top).sum() == 1 and (counts[present] == low).sum() == 1:
                assert u("invert_colors", u("invert_colors", g)) == g

        recolored = u("set_fg_color4", g)
        assert np.all((recolored.cells == 0) == (g.cells == 0))
        assert set(np.unique(recolored.cells)) <= {0, 4}

        assert u("upscale_by_two", g).cells.shape == (g.height * 2, g.width * 2)
        assert u("upscale_horizontal_by_two", g).cells.shape == (g.height, g.width * 2)

        source_pixels = {(int(x), int(y), int(g.cells[y, x])) for y, x in zip(*np.nonzero(g.cells))}
        for detector in ("get_objects2", "get_objects3", "get_objects4", "get_objects5", "get_objects6"):
            placed = []
            for obj in dsl.apply_primitive(table[detector], [g]):
                dx, dy = obj.origin
                placed.extend((x + dx, y + dy, c) for x, y, c in obj.pixels)
            assert set(placed) <= source_pixels, detector
        checked += 1
    elapsed = time.perf_counter() - start
    _report("dsl-semantics", checked == 1000 and elapsed < 30.0,
            f"{checked} grids in {elapsed:.1f}s (budget 30s)")


# ---------------------------------------------------------------- criterion 2

def _sequence_pool(rng, version=3):
    """Truth-shaped sequences drawn from every generator template family."""
    singles = [n for n in single_primitive_names(1) if n != "color_change"]
    pairs = curated_two_chains(1)
    splits = list(itertools.product(
        [("h", 2), ("h", 3), ("h", 4), ("v", 2), ("v", 3), ("v", 4), ("quad", 4)],
        ["cellwiseOR", "cellwiseXOR", "cellwiseAND", "cellwiseNOR", "cellwiseDifference"],
    ))
    transforms = (IDENTITY, "hmirror", "vmirror", "rot90", "rot180", "rot270")
    detectors = ("get_objects1", "get_objects2", "get_objects3", "get_objects6")

    def sample():
        kind = rng.integers(8)
        if kind == 0:
            return (singles[rng.integers(len(singles))], EOS)
        if kind == 1:
            p, q = pairs[rng.integers(len(pairs))]
            return (p, NEW_LEVEL, q, EOS)
        if kind == 2:
            split, op = splits[rng.integers(len(splits))]
            post = singles[rng.integers(len(singles))] if rng.random() < 0.5 else None
            return split_merge_tokens(split, op, post)
        if kind == 3:
            template = ("grid2x2", "grid3x3", "h2", "h3", "h4", "v2", "v3", "v4")[rng.integers(8)]
            n = {"grid2x2": 4, "grid3x3": 9}[template] if template.startswith("grid") else int(template[1:])
            tfs = [transforms[rng.integers(len(transforms))] for _ in range(n)]
            return tiling_tokens(template, tfs)
        if kind == 4:
            lam = ("set_fg_color2", "hmirror", "vmirror", "rot180")[rng.integers(4)]
            return in_place_tokens(detectors[rng.integers(4)], lam,
                                   singles[rng.integers(len(singles))] if rng.random() < 0.3 else None)
        if kind == 5:
            metric = ("get_object_size", "count")[rng.integers(2)]
            return keep_tokens(detectors[rng.integers(4)], metric, bool(rng.integers(2)),
                               singles[rng.integers(len(singles))] if rng.random() < 0.3 else None)
        if kind == 6:
            if rng.integers(2):
                return filter_tokens(detectors[rng.integers(4)], "get_object_size", bool(rng.integers(2)))
            negate = bool(rng.integers(2))
            predicate = ("is_h_symmetrical", "is_v_symmetrical")[rng.integers(2)]
            if rng.integers(2):
                return keep_boolean_tokens(detectors[rng.integers(4)], predicate, negate)
            return filter_boolean_tokens(detectors[rng.integers(4)], predicate, negate)
        return recombiner_tokens(("h", "v")[rng.integers(2)], f"set_fg_color{rng.integers(1, 10)}",
                                 bool(rng.integers(2)),
                                 singles[rng.integers(len(singles))] if rng.random() < 0.3 else None)

    return sample


def test_codec_round_trip_suite():
    rng = np.random.default_rng(555)
    sample = _sequence_pool(rng)
    count = 0
    for _ in range(9800):
        seq = sample()
        tree = parse(seq, 3)
        assert encode(tree) == seq
        count += 1
    # plus truth sequences from fully generated tasks
    for gid, version in (("trivial", 1), ("split_merge", 1), ("tiling", 1),
                         ("objects", 2), ("selector", 3)):
        for seed in range(40):
            truth = generate(gid, GeneratorConfig(seed=seed, dsl_version=version)).truth
            assert encode(parse(truth, version)) == truth
            count += 1

    fig_halves = ("lefthalf", "righthalf", NEW_LEVEL, "cellwiseOR", NEW_LEVEL, "set_fg_color3", EOS)
    tree = parse(fig_halves, 1)
    ok_fig1 = [[n.token for n in lvl] for lvl in tree.levels] == [
        ["lefthalf", "righthalf"], ["cellwiseOR"], ["set_fg_color3"]]
    fig_thirds = ("topthird", "hcenterthird", "bottomthird", NEW_LEVEL,
                  IDENTITY, "cellwiseOR", NEW_LEVEL, "cellwiseOR", EOS)
    tree = parse(fig_thirds, 1)
    ok_fig2 = (
        [[n.token for n in lvl] for lvl in tree.levels]
        == [["topthird", "hcenterthird", "bottomthird"], [IDENTITY, "cellwiseOR"], ["cellwiseOR"]]
        and tree.levels[1][0].children == (0,)
        and tree.levels[1][1].children == (1, 2)
    )
    _report("codec-round-trip", count == 10000 and ok_fig1 and ok_fig2,
            f"{count} sequences, figure fixtures {'ok' if ok_fig1 and ok_fig2 else 'BAD'}")


# ---------------------------------------------------------------- criterion 3

def _brute_force(space: ProbSpace, tau: float):
    eos_id = space.vocab.index(EOS)
    sets = []
    for position in range(space.positions):
        above = [i for i in range(len(space.vocab)) if space.rows[position][i] > tau]
        sets.append(above or [int(np.argmax(space.rows[position]))])
    out = []

    def walk(position, ids, prob):
        if position == len(sets):
            out.append((prob, ids))
            return
        for tid in sets[position]:
            p = prob * space.rows[position][tid]
            if tid == eos_id:
                out.append((p, ids + (tid,)))
            else:
                walk(position + 1, ids + (tid,), p)

    walk(0, (), 1.0)
    out.sort(key=lambda item: (-item[0], item[1]))
    return [ids for _, ids in out]


def test_enumeration_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    pool = ("rot90", "hmirror", "hconcat", "lefthalf", NEW_LEVEL, IDENTITY, EOS)
    vocab = vocabulary(1)
    agreements = 0
    for _ in range(1000):
        n_pos = int(rng.integers(1, 7))
        n_cls = int(rng.integers(2, 6))
        chosen = list(rng.choice(len(pool), size=n_cls, replace=False))
        if pool.index(EOS) not in chosen:
            chosen[0] = pool.index(EOS)
        rows = np.zeros((n_pos, len(vocab)))
        for p in range(n_pos):
            mass = rng.dirichlet(np.ones(n_cls) * rng.uniform(0.3, 3.0))
            for token_idx, m in zip(chosen, mass):
                rows[p][vocab.index(pool[token_idx])] = m
        space = ProbSpace(vocab, rows)
        tau = float(rng.uniform(0.02, 0.4))
        candidates, _ = enumerate_candidates(space, tau, cap=10**7)
        got = [tuple(vocab.index(t) for t in c.tokens) for c in candidates]
        expected = [tuple(ids) for ids in _brute_force(space, tau)]
        assert got == expected
        agreements += 1
    elapsed = time.perf_counter() - start
    _report("enumeration-oracle", agreements == 1000 and elapsed < 60.0,
            f"{agreements}/1000 spaces agree in {elapsed:.1f}s (budget 60s)")


# ---------------------------------------------------------------- criterion 4

def test_probability_dump_golden_fixture():
    task_id, space = load_prob_table(FIXTURE, expected_vocab=vocabulary(1))
    assert task_id == "59341089"
    candidates, tau_used = enumerate_candidates(space, 0.01, 100_000, 1)
    truth = ("hmirror", IDENTITY, "hmirror", IDENTITY, NEW_LEVEL,
             "hconcat", "hconcat", NEW_LEVEL, "hconcat", EOS)
    ranked = {c.tokens: (rank, c.joint_prob) for rank, c in enumerate(candidates, 1)}
    assert truth in ranked
    rank, joint = ranked[truth]
    # Product of the ten printed factors, frozen from the dump itself.
    printed_product = 0.17 * 0.43 * 0.33 * 0.31 * 0.99 * 1.00 * 0.99 * 0.99 * 0.99 * 0.99
    # Brute-force rank recomputed independently.
    expected = _brute_force(space, 0.01)
    vocab = vocabulary(1)
    brute_rank = expected.index(tuple(vocab.index(t) for t in truth)) + 1
    ok = (
        abs(joint - printed_product) < 1e-9
        and rank == brute_rank == 21
        and len(candidates) == 1512
        and tau_used == 0.01
    )
    _report("fixture-59341089", ok,
            f"joint={joint:.9f} (printed {printed_product:.9f}), rank={rank}, "
            f"candidates={len(candidates)}")


# ---------------------------------------------------------------- criterion 5

GENERATOR_CYCLE = ("trivial", "split_merge", "tiling", "objects",
                   "selector", "windowing", "recombiner")


def _mixed_suite(n, seed0):
    out = []
    for i in range(n):
        gid = GENERATOR_CYCLE[i % len(GENERATOR_CYCLE)]
        out.append(generate(gid, GeneratorConfig(seed=seed0 + i, dsl_version=3)))
    return out


def test_planted_program_recovery():
    suite = _mixed_suite(500, seed0=20_000)

    exact = 0
    for sample in suite:
        src = OracleGuidance(sample.truth, version=3, epsilon=0.0)
        res = gridcoder_solve(sample.task, src, SearchConfig(timeout=10, dsl_version=3))
        if res.found and res.rank == 1 and res.stats.programs_evaluated == 1:
            exact += 1
    ok_exact = exact == 500

    noisy = 0
    for i, sample in enumerate(suite):
        src = OracleGuidance(sample.truth, version=3, epsilon=0.3, n_distractors=5, seed=i)
        res = gridcoder_solve(sample.task, src, SearchConfig(timeout=10, dsl_version=3, seed=i))
        noisy += bool(res.found)
    ok_noisy = noisy >= 475
    _report("planted-recovery", ok_exact and ok_noisy,
            f"eps0: {exact}/500 at rank 1 with 1 evaluation; eps0.3: {noisy}/500 (need >=475)")


# ---------------------------------------------------------------- criterion 6

def _noise_profile(truth, rng):
    profile = {}
    for position in range(len(truth)):
        if rng.random() < 0.25:
            profile[position] = (0.75, 2)  # the argmax flips to a distractor
    return profile


def test_engine_ordering_table1_analogue():
    suite = []
    for i in range(200):
        gid = ("trivial", "trivial", "split_merge", "split_merge", "tiling")[i % 5]
        suite.append(generate(gid, GeneratorConfig(seed=40_000 + i, dsl_version=1)))

    budgets = {
        "gridcoder": SearchConfig(timeout=10),
        "gridcoder_cond": SearchConfig(timeout=10, max_nodes=3000),
        "mcts": SearchConfig(timeout=10, max_nodes=150),
        "lgs_greedy": SearchConfig(timeout=10, max_depth=6, max_nodes=2000, beam=16),
        "greedy_decode": SearchConfig(timeout=10),
    }
    rates = {}
    for engine, config in budgets.items():
        solved = 0
        for i, sample in enumerate(suite):
            rng = np.random.default_rng((123, i))
            src = OracleGuidance(sample.truth, version=1, epsilon=0.25,
                                 n_distractors=5, profile=_noise_profile(sample.truth, rng),
                                 seed=i)
            res = solve_task(sample.task, engine, src, config)
            solved += bool(res.found)
        rates[engine] = solved / len(suite)
    ok = (
        rates["gridcoder"] >= rates["gridcoder_cond"] >= rates["mcts"]
        > rates["lgs_greedy"] > rates["greedy_decode"]
    )
    _report("engine-ordering", ok,
            " ".join(f"{k}={v:.3f}" for k, v in rates.items()))


# ---------------------------------------------------------------- criterion 7

_DIHEDRAL = ("rot90", "rot180", "rot270", "hmirror", "vmirror")
_CHAIN_CORE = ("shift_left", "shift_right", "shift_up", "shift_down",
               "shear_grid_left", "shear_grid_right", "shear_grid_zigzag", "invert_colors")
_CHAIN_GROWTH = ("duplicate_top_row", "duplicate_bottom_row", "duplicate_left_column",
                 "duplicate_right_column", "insert_outline")


def _sample_chain(rng, depth):
    """Chains over one shared alphabet for both cliff suites: at most two
    dihedral ops (their group collapses longer runs) and at most one
    shape-growth op (a shape trajectory uniquely identifies the path)."""
    k_d = int(rng.integers(0, min(depth, 2) + 1))
    k_g = min(int(rng.integers(0, 2)) if depth > k_d else 0, depth - k_d)
    names = list(rng.choice(_DIHEDRAL, size=k_d, replace=False))
    names += list(rng.choice(_CHAIN_GROWTH, size=k_g, replace=False))
    names += list(rng.choice(_CHAIN_CORE, size=depth - k_d - k_g, replace=False))
    return [names[j] for j in rng.permutation(depth)]


def _chain_task(names, seed):
    tokens = []
    for i, name in enumerate(names):
        if i:
            tokens.append(NEW_LEVEL)
        tokens.append(name)
    truth = tuple(tokens) + (EOS,)
    tree = parse(truth, 1)
    rng = np.random.default_rng(seed)
    pairs = []
    tries = 0
    while len(pairs) < 2 and tries < 200:
        tries += 1
        side = int(rng.integers(4, 8))
        g = Grid(rng.integers(0, 5, size=(side, side)).astype(np.int8))
        try:
            out = evaluate(tree, g)
        except Exception:
            continue
        if max(out.width, out.height) <= 30 and len(out.pixels) >= 2:
            pairs.append((g, out))
    if len(pairs) < 2:
        raise ValueError("no valid inputs for chain")
    return Task(support=tuple(pairs)), truth


def _has_two_step_equivalent(task):
    """Planted deep chains must not collapse to a one- or two-step program."""
    table = dsl.by_name(1)
    moves = [s.name for s in dsl.unary_grid_primitives(1) if not s.needs_latent]
    for name in moves:
        try:
            if all(dsl.apply_primitive(table[name], [x]) == y for x, y in task.support):
                return True
        except Exception:
            pass
    for p in moves:
        try:
            mids = [dsl.apply_primitive(table[p], [x]) for x, _ in task.support]
        except Exception:
            continue
        for q in moves:
            try:
                if all(dsl.apply_primitive(table[q], [m]) == y
                       for m, (_, y) in zip(mids, task.support)):
                    return True
            except Exception:
                pass
    return False


def test_lgs_depth_cliff():
    rng = np.random.default_rng(777)
    config = SearchConfig(timeout=20, max_depth=8, max_nodes=4500, beam=512)

    short_solved, short_total = 0, 0
    for i in range(50):
        depth = (1, 2, 1, 2, 3)[i % 5]
        names = _sample_chain(rng, depth)
        try:
            task, truth = _chain_task(names, seed=(900, i))
        except Exception:
            continue
        if check_program(truth, task, 1).status != "solved":
            continue
        short_total += 1
        short_solved += bool(lgs_greedy_solve(task, config).found)

    long_solved, long_total = 0, 0
    i = 0
    while long_total < 20 and i < 100:
        i += 1
        names = _sample_chain(rng, 7)
        try:
            task, truth = _chain_task(names, seed=(901, i))
        except Exception:
            continue
        if check_program(truth, task, 1).status != "solved":
            continue
        if _has_two_step_equivalent(task):
            continue
        long_total += 1
        long_solved += bool(lgs_greedy_solve(task, config).found)

    short_rate = short_solved / short_total
    long_rate = long_solved / long_total
    ok = short_rate >= 0.9 and long_rate <= 0.2 and short_total >= 40 and long_total >= 20
    _report("lgs-depth-cliff", ok,
            f"1-3 chains {short_solved}/{short_total} ({short_rate:.2f}, need >=0.9); "
            f"7-chains {long_solved}/{long_total} ({long_rate:.2f}, need <=0.2)")


# ---------------------------------------------------------------- criterion 8

def test_out_of_distribution_relaunch_table4_analogue():
    suite = gen_ood_suite(seed=0)
    assert all(coverage_is_disjoint(t) for t in suite)
    config = SearchConfig(tau=0.004, timeout=45.0, bootstrap_k=0, max_programs=30_000,
                          dsl_version=OOD_DSL_VERSION, stages=2, fan_out=8, seed=3)
    flat_wins, relaunch_wins = 0, 0
    outcomes = []
    for t in suite:
        src = t.guidance()
        flat = gridcoder_solve(t.sample.task, src, config)
        relaunch = execution_guided_solve(t.sample.task, src, config)
        if relaunch.found:
            assert check_program(relaunch.program, t.sample.task, OOD_DSL_VERSION).status == "solved"
        flat_wins += bool(flat.found)
        relaunch_wins += bool(relaunch.found)
        outcomes.append(f"{t.name}:{'F' if flat.found else '-'}{'R' if relaunch.found else '-'}")
    ok = flat_wins <= 2 and relaunch_wins >= 7
    _report("ood-relaunch", ok,
            f"flat {flat_wins}/10 (need <=2), relaunch {relaunch_wins}/10 (need >=7); "
            + " ".join(outcomes))


# ---------------------------------------------------------------- criterion 9

def test_scaling_per_primitive_table3_analogue():
    samples = []
    for i in range(45):
        gid = ("trivial", "split_merge", "tiling")[i % 3]
        samples.append(generate(gid, GeneratorConfig(seed=60_000 + i, dsl_version=1)))

    per_primitive = {}
    for version in (1, 2, 3):
        times = []
        for i, sample in enumerate(samples):
            src = OracleGuidance(sample.truth, version=version, epsilon=0.2,
                                 n_distractors=5, seed=i)
            res = gridcoder_solve(
                sample.task, src,
                SearchConfig(timeout=10, dsl_version=version, seed=i, max_programs=20_000),
            )
            assert res.found, f"version {version} failed on sample {i}"
            times.append(res.stats.wall_time)
        per_primitive[version] = float(np.mean(times)) / len(dsl.registry(version))
    lo, hi = min(per_primitive.values()), max(per_primitive.values())
    ok = hi <= 2.0 * lo
    _report("scaling-per-primitive", ok,
            " ".join(f"v{v}={t * 1000:.3f}ms" for v, t in per_primitive.items())
            + f" ratio={hi / lo:.2f} (need <=2)")


# --------------------------------------------------------------- criterion 10

def test_benchmark_determinism():
    samples = [generate("tiling", GeneratorConfig(seed=80_000 + i, dsl_version=1))
               for i in range(10)]
    config = RunConfig(guidance="oracle", oracle_epsilon=0.3, timeout=10, seed=3)
    first = run_benchmark(suite_entries(samples), ["gridcoder", "greedy_decode"], config)
    second = run_benchmark(suite_entries(samples), ["gridcoder", "greedy_decode"], config)
    ok = first.determinism_hash == second.determinism_hash and first.determinism_hash
    _report("benchmark-determinism", bool(ok), f"hash={first.determinism_hash[:16]}...")
