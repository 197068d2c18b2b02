import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from rspbench import classical, qstate
from rspbench.classical import (
    BenchmarkResult,
    Partitioning,
    ProbabilisticStrategy,
    certify,
    exact_threshold,
    heuristic_threshold,
    hull_perfect_check,
    insphere_radius,
    optimal_outputs,
    partition_fidelity,
    perfectly_preparable,
    probabilistic_fidelity,
    upper_bound,
)
from rspbench.ensembles import TargetEnsemble, platonic_ensemble, platonic_vertices, random_rotation
from rspbench.errors import InconsistencyError, InputError

OCTAHEDRON_C2 = 0.9023689270621824
CUBE_C2 = 0.9082482904638631


def brute_force_pure(e, c):
    """Every assignment in K**n; each block answered by the top eigenvector
    of its weighted density sum."""
    k = 2**c
    rhos = np.asarray(e.densities()) * e.probs[:, None, None]
    assigns = np.array(list(itertools.product(range(k), repeat=len(e))))
    total = np.zeros(len(assigns))
    for m in range(k):
        mask = (assigns == m).astype(float)
        block = np.einsum("an,nij->aij", mask, rhos)
        total += np.linalg.eigvalsh(block)[:, -1]
    return float(total.max()), assigns[int(np.argmax(total))]


def qubit_fid_det(a, b):
    # F = Tr(ab) + 2 sqrt(det a det b), valid for qubits
    return float(np.real(np.trace(a @ b)) + 2 * math.sqrt(max(np.real(np.linalg.det(a)), 0)
                                                          * max(np.real(np.linalg.det(b)), 0)))


def block_oracle(rhos, probs):
    """Numerically maximise sum p F(rho, tau) over output states tau."""
    def neg(x):
        v = x / max(1.0, np.linalg.norm(x))
        tau = qstate.bloch_to_density(v)
        return -sum(p * qubit_fid_det(r, tau) for r, p in zip(rhos, probs))

    rng = np.random.default_rng(0)
    starts = [rng.normal(size=3) * 0.5 for _ in range(4)] + [np.zeros(3)]
    return max(-minimize(neg, s, method="Nelder-Mead", options={"xatol": 1e-11, "fatol": 1e-13,
                                                                 "maxiter": 4000}).fun for s in starts)


def oracle_partition_fidelity(e, assignment, k):
    rhos = np.asarray(e.densities())
    total = 0.0
    for m in range(k):
        idx = [i for i, a in enumerate(assignment) if a == m]
        if idx:
            total += block_oracle(rhos[idx], e.probs[idx])
    return total


def random_ensemble(rng, n, radius=1.0, uniform=True):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    p = np.full(n, 1 / n) if uniform else rng.dirichlet(np.ones(n))
    return TargetEnsemble(v * radius, p)


# partition_fidelity


def test_octahedron_hand_partition():
    e = platonic_ensemble("octahedron")
    ax = {tuple(np.round(b).astype(int)): i for i, b in enumerate(e.blochs)}
    assign = [0] * 6
    assign[ax[(0, 1, 0)]] = 1
    assign[ax[(0, 0, 1)]] = 2
    for neg in [(-1, 0, 0), (0, -1, 0), (0, 0, -1)]:
        assign[ax[neg]] = 3
    p = Partitioning(assign, 2)
    hand = 0.5 * (1 + 3 / 6 + (3 / 6) / math.sqrt(3))
    assert partition_fidelity(e, p) == pytest.approx(hand, abs=1e-14)
    assert oracle_partition_fidelity(e, assign, 4) == pytest.approx(hand, abs=1e-8)


def test_singletons_and_single_block():
    for solid in ("tetrahedron", "octahedron", "cube"):
        e = platonic_ensemble(solid)
        singles = Partitioning(range(len(e)), 3)
        assert partition_fidelity(e, singles) == pytest.approx(1, abs=1e-14)
        assert partition_fidelity(e.scaled(0.4), singles) == pytest.approx(1, abs=1e-14)
    assert partition_fidelity(platonic_ensemble("octahedron"), Partitioning([0] * 6, 2)) == pytest.approx(0.5, abs=1e-14)


def test_partition_errors():
    e = platonic_ensemble("cube")
    with pytest.raises(InputError):
        partition_fidelity(e, Partitioning([0, 1], 1))
    with pytest.raises(InputError):
        Partitioning([0, 4], 2)
    mixed = TargetEnsemble(np.array([[0, 0, 1.0], [0, 0, 0.5]]), [0.5, 0.5])
    with pytest.raises(InputError) as exc:
        partition_fidelity(mixed, Partitioning([0, 0], 1))
    assert exc.value.code == "common-radius"


def test_mixed_partition_matches_oracle():
    rng = np.random.default_rng(10)
    for r in (0.3, 0.7, 0.95):
        e = random_ensemble(rng, 5, r, uniform=False)
        assign = rng.integers(0, 2, 5)
        assert partition_fidelity(e, Partitioning(assign, 1)) == pytest.approx(
            oracle_partition_fidelity(e, assign, 2), abs=1e-7)


# exact_threshold


@pytest.mark.parametrize("solid,c", [("tetrahedron", 2), ("tetrahedron", 3), ("octahedron", 3), ("cube", 3)])
def test_trivially_unity(solid, c):
    res = exact_threshold(platonic_ensemble(solid), c)
    assert res.value == 1.0 and res.kind == "exact" and res.certified


@pytest.mark.parametrize("solid,golden", [("octahedron", OCTAHEDRON_C2), ("cube", CUBE_C2)])
def test_exact_against_brute_force(solid, golden):
    e = platonic_ensemble(solid)
    res = exact_threshold(e, 2)
    brute, _ = brute_force_pure(e, 2)
    assert res.value == pytest.approx(brute, abs=1e-12)
    assert res.value == pytest.approx(golden, abs=1e-12)
    assert partition_fidelity(e, res.witness) == res.value


def test_brute_force_witness_scores_the_same():
    e = platonic_ensemble("octahedron")
    brute, assign = brute_force_pure(e, 2)
    assert brute == pytest.approx(partition_fidelity(e, Partitioning(assign, 2)), abs=1e-12)


def test_exact_random_against_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(10):
        e = random_ensemble(rng, 6, uniform=False)
        brute, _ = brute_force_pure(e, 1)
        assert exact_threshold(e, 1).value == pytest.approx(brute, abs=1e-12)


def test_exact_zero_radius_and_guard():
    assert exact_threshold(platonic_ensemble("octahedron", 0.0), 2).value == pytest.approx(1, abs=1e-14)
    with pytest.raises(InputError) as exc:
        exact_threshold(platonic_ensemble("dodecahedron"), 2)
    assert exc.value.code == "too-large"


def test_exact_witness_is_canonical():
    res = exact_threshold(platonic_ensemble("cube"), 2)
    assert res.witness == res.witness.canonical()
    assert res.witness.profile() == (2, 2, 2, 2)


# upper_bound, heuristic, certify


def test_upper_examples():
    tet = upper_bound(platonic_ensemble("tetrahedron"), 2)
    assert tet.value == pytest.approx(1) and tet.ranked_upper_list[0][1] == (1, 1, 1, 1)
    dod = upper_bound(platonic_ensemble("dodecahedron"), 2)
    assert [p for _, p in dod.ranked_upper_list[:2]] == [(5, 5, 5, 5), (6, 5, 5, 4)]
    vals = [v for v, _ in dod.ranked_upper_list]
    assert vals == sorted(vals, reverse=True)
    ico = platonic_ensemble("icosahedron")
    assert upper_bound(ico, 2).value >= exact_threshold(ico, 2).value - 1e-12


def test_upper_requires_uniform():
    e = random_ensemble(np.random.default_rng(0), 5, uniform=False)
    with pytest.raises(InputError) as exc:
        upper_bound(e, 2)
    assert exc.value.code == "uniform-required"


def test_integer_partitions():
    parts = list(classical.integer_partitions(6, 4))
    assert len(parts) == 9 and parts[0] == (6,) and (2, 2, 1, 1) in parts
    assert all(sum(p) == 6 and len(p) <= 4 and list(p) == sorted(p, reverse=True) for p in parts)


def test_heuristic_examples():
    for seed in (0, 5):
        assert heuristic_threshold(platonic_ensemble("tetrahedron"), 2, 10, seed).value == pytest.approx(1, abs=1e-14)
    oc = heuristic_threshold(platonic_ensemble("octahedron"), 2, 50, 0)
    assert oc.kind == "heuristic_lower"
    assert oc.value == pytest.approx(OCTAHEDRON_C2, abs=1e-12)
    e = platonic_ensemble("dodecahedron")
    a = heuristic_threshold(e, 2, 20, 3)
    assert a.witness == heuristic_threshold(e, 2, 20, 3).witness


def test_dodecahedron_certified_at_second_rank():
    e = platonic_ensemble("dodecahedron")
    res = certify(heuristic_threshold(e, 2, 200, 0), upper_bound(e, 2))
    assert res.certified and res.matched_rank == 1
    assert res.witness.profile() == (6, 5, 5, 4)


def test_certify_cases():
    tet = platonic_ensemble("tetrahedron")
    assert certify(exact_threshold(tet, 2), upper_bound(tet, 2)).certified
    e = platonic_ensemble("icosahedron")
    up = upper_bound(e, 2)
    bad = Partitioning([0, 1, 2, 3] * 3, 2)
    low = BenchmarkResult(partition_fidelity(e, bad), "heuristic_lower", witness=bad, cbits=2)
    assert all(abs(u - low.value) > 1e-6 for u, _ in up.ranked_upper_list)
    res = certify(low, up)
    assert not res.certified and res.gap == pytest.approx(up.value - low.value)
    too_high = BenchmarkResult(up.value + 1e-6, "heuristic_lower", cbits=2)
    with pytest.raises(InconsistencyError):
        certify(too_high, up)


# probabilistic strategies


def test_three_state_probabilistic_example():
    e = TargetEnsemble(np.array([[0, 0, 1.0], [0, 0, -1.0], [0, 0, 0.0]]), np.full(3, 1 / 3))
    s = ProbabilisticStrategy([[1, 0], [0, 1], [0.5, 0.5]], [np.diag([1, 0]), np.diag([0, 1])])
    assert probabilistic_fidelity(e, s) == 1.0


def test_deterministic_strategy_equals_partition_bound():
    rng = np.random.default_rng(12)
    for r in (1.0, 0.6):
        for _ in range(10):
            e = random_ensemble(rng, 6, r)
            p = Partitioning(rng.integers(0, 4, 6), 2)
            q = np.eye(4)[list(p.assignment)]
            s = ProbabilisticStrategy(q, optimal_outputs(e, p))
            assert probabilistic_fidelity(e, s) == pytest.approx(partition_fidelity(e, p), abs=1e-10)


def test_uniform_strategy_collapse():
    rng = np.random.default_rng(13)
    e = random_ensemble(rng, 5, 0.8)
    rho0 = qstate.bloch_to_density([0.1, -0.4, 0.3])
    s = ProbabilisticStrategy(np.full((5, 4), 0.25), [rho0] * 4)
    expect = sum(p * qstate.fidelity(r, rho0) for r, p in zip(e.densities(), e.probs))
    assert probabilistic_fidelity(e, s) == pytest.approx(expect, abs=1e-12)


def test_strategy_validation():
    with pytest.raises(InputError):
        ProbabilisticStrategy([[0.7, 0.2]], [np.eye(2) / 2] * 2)
    with pytest.raises(InputError):
        ProbabilisticStrategy([[1.2, -0.2]], [np.eye(2) / 2] * 2)


# perfect-preparation checks


def test_insphere_radius():
    assert insphere_radius(2) == pytest.approx(1 / 3, abs=1e-15)
    assert insphere_radius(3) == pytest.approx(0.5773502691896258, abs=1e-15)
    with pytest.raises(InputError):
        insphere_radius(4)


def test_hull_checks():
    tet = platonic_vertices("tetrahedron")
    assert hull_perfect_check(platonic_ensemble("dodecahedron", 0.25), tet, 2)
    assert not hull_perfect_check(platonic_ensemble("dodecahedron", 0.5), tet, 2)
    ico = platonic_ensemble("icosahedron", 0.9)
    assert hull_perfect_check(ico, platonic_vertices("icosahedron"))
    with pytest.raises(InputError):
        hull_perfect_check(ico, platonic_vertices("cube"), 2)


def test_perfectly_preparable_flags():
    dod = lambda r: platonic_ensemble("dodecahedron", r)  # noqa: E731
    assert perfectly_preparable(dod(1 / 3), 2) and perfectly_preparable(dod(0.2), 2)
    assert perfectly_preparable(dod(math.sqrt(1 / 3)), 3)
    assert not perfectly_preparable(dod(0.5), 2)
    assert not perfectly_preparable(dod(1.0), 3)
    assert classical.benchmark(dod(0.25), 2).extra["perfectly_preparable"]


# properties


@pytest.mark.parametrize("solid", ["octahedron", "cube", "icosahedron"])
def test_ordering(solid):
    e = platonic_ensemble(solid)
    for c in (1, 2, 3):
        h = heuristic_threshold(e, c, 30, 0).value
        x = exact_threshold(e, c).value
        u = upper_bound(e, c).value
        assert h <= x + 1e-12 and x <= u + 1e-12


def test_ordering_random():
    rng = np.random.default_rng(14)
    for _ in range(15):
        e = random_ensemble(rng, int(rng.integers(5, 10)), float(rng.uniform(0.2, 1)))
        c = int(rng.integers(1, 3))
        h, x, u = heuristic_threshold(e, c, 10, 1).value, exact_threshold(e, c).value, upper_bound(e, c).value
        assert h <= x + 1e-12 <= u + 2e-12


def test_rotation_invariance():
    rng = np.random.default_rng(15)
    for solid in ("octahedron", "cube", "icosahedron"):
        base = exact_threshold(platonic_ensemble(solid), 2).value
        for _ in range(3):
            rot = platonic_ensemble(solid, 1.0, random_rotation(rng))
            assert exact_threshold(rot, 2).value == pytest.approx(base, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 8), st.integers(1, 2))
def test_mixed_bound_reduces_and_decreases(seed, n, c):
    rng = np.random.default_rng(seed)
    e = random_ensemble(rng, n, uniform=bool(seed % 2))
    p = Partitioning(rng.integers(0, 2**c, n), c)
    blocks = [b for b in p.blocks() if b]
    pk = np.array([e.probs[b].sum() for b in blocks])
    rk = np.array([np.linalg.norm(e.probs[b] @ e.blochs[b]) for b in blocks]) / pk
    pure = 0.5 * (1 + np.sum(pk * rk))
    assert partition_fidelity(e, p) == pytest.approx(pure, abs=1e-12)
    assert partition_fidelity(e.scaled(1.0), p) == pytest.approx(pure, abs=1e-12)
    vals = [partition_fidelity(e.scaled(r), p) for r in np.linspace(0.01, 1, 12)]
    assert np.all(np.diff(vals) <= 1e-12)


@pytest.mark.parametrize("solid", ["tetrahedron", "octahedron", "cube"])
def test_optimal_partition_stable_for_platonic(solid):
    for c in (1, 2, 3):
        wit = exact_threshold(platonic_ensemble(solid), c).witness
        for r in (0.3, 0.7, 1.0):
            e = platonic_ensemble(solid, r)
            assert partition_fidelity(e, wit) == pytest.approx(exact_threshold(e, c).value, abs=1e-12)


def test_optimal_partition_not_stable_in_general():
    # the r=1 optimum is beaten at lower radius by a different partition
    v = np.array([[0.5, -0.5, -0.8], [0.2, 0.9, -0.4], [-0.8, 0.4, -0.5], [-0.7, -0.4, 0.7]])
    e = TargetEnsemble(v / np.linalg.norm(v, axis=1, keepdims=True), np.full(4, 0.25))
    wit = exact_threshold(e, 1).witness
    assert wit.assignment == (0, 0, 1, 1)
    for r in (0.3, 0.7):
        er = e.scaled(r)
        best = exact_threshold(er, 1)
        assert best.witness.assignment == (0, 0, 0, 1)
        assert best.value - partition_fidelity(er, wit) > 2e-4
        oracle = oracle_partition_fidelity(er, best.witness.assignment, 2)
        assert oracle == pytest.approx(best.value, abs=1e-7)


def test_deterministic_strategies_are_optimal_for_pure_targets():
    rng = np.random.default_rng(16)
    for _ in range(5):
        e = random_ensemble(rng, 5)
        bound = exact_threshold(e, 1).value
        best = 0.0
        for _ in range(200):
            q = rng.dirichlet(np.full(2, 0.5), size=5)
            outs = [qstate.bloch_to_density(x / np.linalg.norm(x)) for x in rng.normal(size=(2, 3))]
            best = max(best, probabilistic_fidelity(e, ProbabilisticStrategy(q, outs)))

        def neg(x):
            logits = x[:10].reshape(5, 2)
            q = np.exp(logits - logits.max(axis=1, keepdims=True))
            q /= q.sum(axis=1, keepdims=True)
            outs = [qstate.bloch_to_density(d / np.linalg.norm(d)) for d in x[10:].reshape(2, 3)]
            return -probabilistic_fidelity(e, ProbabilisticStrategy(q, outs))

        for _ in range(2):
            res = minimize(neg, rng.normal(size=16), method="Nelder-Mead", options={"maxiter": 1500})
            best = max(best, -res.fun)
        assert best <= bound + 1e-9
