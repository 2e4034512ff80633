"""Deterministic chunking, worker resolution, and serialization helpers."""

import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hmc_lab import ConfigurationError, make_rng
from hmc_lab.io import fmt_float, jsonable, write_csv, write_json
from hmc_lab.parallel import N_CHUNKS, chunk_counts, resolve_workers, run_chunked, run_tasks
from hmc_lab.rng import ball_points, sphere_directions, spawn_rngs


# -------------------------------------------------------------------- chunking


@given(n=st.integers(1, 10_000))
def test_chunk_counts_partition(n):
    sizes = chunk_counts(n)
    assert sum(sizes) == n
    assert len(sizes) == min(N_CHUNKS, n)
    assert all(s >= 1 for s in sizes)
    assert max(sizes) - min(sizes) <= 1


def test_run_chunked_is_worker_invariant():
    def draw(n, rng):
        return rng.standard_normal(n)

    a = np.concatenate(run_chunked(draw, make_rng(4), 1000, workers=1))
    b = np.concatenate(run_chunked(draw, make_rng(4), 1000, workers=7))
    assert np.array_equal(a, b)


def test_run_tasks_preserves_order():
    out = run_tasks(lambda x, y: x - y, [(5, 1), (10, 2), (0, 3)], workers=3)
    assert out == [4, 8, -3]


def test_resolve_workers(monkeypatch):
    assert resolve_workers(4) == 4
    monkeypatch.setenv("HMC_LAB_WORKERS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(2) == 2  # explicit argument wins over the env
    monkeypatch.setenv("HMC_LAB_WORKERS", "many")
    with pytest.raises(ConfigurationError, match="HMC_LAB_WORKERS must be an integer"):
        resolve_workers()
    monkeypatch.delenv("HMC_LAB_WORKERS")
    assert resolve_workers() >= 1
    with pytest.raises(ConfigurationError, match="must be >= 1"):
        resolve_workers(0)


# ------------------------------------------------------------------------- rng


def test_make_rng_is_reproducible():
    assert make_rng(11).random() == make_rng(11).random()
    assert make_rng(11).random() != make_rng(12).random()


def test_spawn_rngs_are_distinct():
    streams = spawn_rngs(make_rng(0), 4)
    draws = [r.random() for r in streams]
    assert len(set(draws)) == 4


def test_sphere_directions_are_unit_norm():
    dirs = sphere_directions(make_rng(1), 500, 3)
    assert dirs.shape == (500, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, rtol=1e-12)


def test_ball_points_stay_inside():
    pts = ball_points(make_rng(2), 500, 2, 3.0)
    assert pts.shape == (500, 2)
    assert np.all(np.linalg.norm(pts, axis=1) <= 3.0 + 1e-12)


# --------------------------------------------------------------- serialization


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_float_round_trips(x):
    assert float(fmt_float(x)) == x


def test_write_csv_cells(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b", "c", "d"], [[True, 3, "x", 0.1], [False, -1, "y", 2.0]])
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b,c,d"
    assert lines[1] == "1,3,x,0.10000000000000001"
    assert lines[2] == "0,-1,y,2"


def test_jsonable_handles_the_awkward_types(tmp_path):
    @dataclasses.dataclass
    class Box:
        arr: np.ndarray
        flag: np.bool_
        count: np.int64
        where: Path
        bad: float

    box = Box(np.array([1.0, 2.5]), np.bool_(True), np.int64(7), Path("/x"), math.inf)
    out = jsonable(box)
    assert out == {"arr": [1.0, 2.5], "flag": True, "count": 7, "where": "/x", "bad": "inf"}
    assert jsonable(float("nan")) == "nan"
    assert jsonable({1: (2, 3)}) == {"1": [2, 3]}

    path = tmp_path / "t.json"
    write_json(path, box)
    assert json.loads(path.read_text())["arr"] == [1.0, 2.5]


def test_write_json_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_json(a, {"z": 1, "a": [2.0, 3]})
    write_json(b, {"a": [2.0, 3], "z": 1})
    assert a.read_bytes() == b.read_bytes()
