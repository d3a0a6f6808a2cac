"""The compiled kernels and the numpy fallback must agree exactly."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogforge import kernels
from cogforge.kernels import _pyback
from cogforge.trees import parse_newick, topological_leaf_distances

from oracles import contract_edges, random_binary_tree, to_newick

native = pytest.importorskip("cogforge.kernels._native")


def test_backend_is_exported():
    assert kernels.BACKEND in ("native", "python")
    assert callable(kernels.align_affine)
    assert callable(kernels.quartet_counts)


def test_native_backend_selected_when_built():
    if os.environ.get("COGFORGE_PURE"):
        pytest.skip("fallback forced by environment")
    assert kernels.BACKEND == "native"


def test_env_var_forces_pure_backend():
    code = "import cogforge.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, COGFORGE_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _random_align_case(rng):
    n_symbols = rng.integers(1, 6)
    subst = rng.uniform(-3.0, 3.0, size=(n_symbols, n_symbols))
    subst = (subst + subst.T) / 2.0
    a = rng.integers(0, n_symbols, size=rng.integers(0, 9))
    b = rng.integers(0, n_symbols, size=rng.integers(0, 9))
    gap_open = float(-rng.uniform(0.2, 3.0))
    gap_extend = float(-rng.uniform(0.1, -gap_open))
    return a.astype(np.int64), b.astype(np.int64), subst, gap_open, gap_extend


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10**9))
def test_alignment_backends_agree(seed):
    rng = np.random.default_rng(seed)
    a, b, subst, gap_open, gap_extend = _random_align_case(rng)
    ns, np_path = native.align_affine(a, b, subst, gap_open, gap_extend)
    ps, pp_path = _pyback.align_affine(a, b, subst, gap_open, gap_extend)
    assert ns == ps
    assert np.array_equal(np_path, pp_path)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10**9))
def test_alignment_path_is_well_formed(seed):
    rng = np.random.default_rng(seed)
    a, b, subst, gap_open, gap_extend = _random_align_case(rng)
    _, path = kernels.align_affine(a, b, subst, gap_open, gap_extend)
    a_used = [i for i, _ in path if i != -1]
    b_used = [j for _, j in path if j != -1]
    assert a_used == list(range(len(a)))
    assert b_used == list(range(len(b)))


def _unit_matrix(newick):
    tree = parse_newick(newick)
    labels, dist = topological_leaf_distances(tree)
    return np.asarray(dist, dtype=np.int64)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10**9),
       n=st.integers(min_value=4, max_value=12))
def test_quartet_backends_agree_on_trees(seed, n):
    rng = np.random.default_rng(seed)
    labels = [f"t{i}" for i in range(n)]
    gold = contract_edges(random_binary_tree(rng, labels), rng, 0.3)
    inferred = contract_edges(random_binary_tree(rng, labels), rng, 0.3)
    dg = _unit_matrix(to_newick(gold))
    di = _unit_matrix(to_newick(inferred))
    assert native.quartet_counts(di, dg) == _pyback.quartet_counts(di, dg)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10**9),
       n=st.integers(min_value=4, max_value=10))
def test_quartet_backends_agree_on_arbitrary_matrices(seed, n):
    # parity must hold even off the tree-metric manifold
    rng = np.random.default_rng(seed)
    raw = rng.integers(1, 8, size=(n, n))
    d = np.triu(raw, k=1)
    d = (d + d.T).astype(np.int64)
    assert native.quartet_counts(d, d)[1] == 0
    other = np.triu(rng.integers(1, 8, size=(n, n)), k=1)
    other = (other + other.T).astype(np.int64)
    assert (native.quartet_counts(d, other)
            == _pyback.quartet_counts(d, other))


def test_empty_sequences_align_to_nothing():
    empty = np.array([], dtype=np.int64)
    sub = np.zeros((2, 2))
    score, path = kernels.align_affine(empty, empty, sub, -1.0, -0.5)
    assert score == 0.0
    assert path.shape == (0, 2)
