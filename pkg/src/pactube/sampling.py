"""I.i.d. uniform sampling of times and inputs, and dataset assembly.

All randomness flows through named Philox streams derived from one master
seed: times, inputs, the staged-learning pilot and certification draws, and
Monte-Carlo validation each get an independent counter-based stream, so
changing one sample count never perturbs another draw.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "Stream",
    "rng_stream",
    "InputSet",
    "Box",
    "Ball",
    "PointSet",
    "Dataset",
    "DatasetParseError",
    "sample_times",
    "sample_inputs",
    "collect_dataset",
    "write_dataset",
    "read_dataset",
]


class Stream:
    """Named sub-stream identifiers under one master seed."""

    TIMES = 0
    INPUTS = 1
    VALIDATION = 2
    PILOT_TIMES = 3
    PILOT_INPUTS = 4
    CERT_TIMES = 5
    CERT_INPUTS = 6
    GRID = 99


def rng_stream(seed: int, stream: int) -> np.random.Generator:
    """Counter-based generator for (seed, stream); independent across streams."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,)))
    )


class DatasetParseError(ValueError):
    """Malformed dataset file; message carries the offending line number."""


# ---------------------------------------------------------------------------
# input sets


class InputSet:
    """A compact set of inputs supporting membership and uniform sampling."""

    dimension: int

    def contains(self, x) -> bool:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> "Box":
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Box(InputSet):
    """Axis-aligned box: lower[i] <= x[i] <= upper[i]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box requires lower <= upper per axis")

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random((n, self.dimension))
        return self.lower + u * (self.upper - self.lower)

    def bounding_box(self) -> "Box":
        return self

    def describe(self) -> str:
        lo = " ".join(f"{v:.17g}" for v in self.lower)
        hi = " ".join(f"{v:.17g}" for v in self.upper)
        return f"box {lo} ; {hi}"


@dataclass(frozen=True, eq=False)
class Ball(InputSet):
    """Euclidean ball; sampled by rejection from its bounding box."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", c)
        if self.radius < 0:
            raise ValueError("radius must be >= 0")

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.sum((x - self.center) ** 2) <= self.radius**2 * (1 + 1e-12))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.radius == 0.0:
            return np.tile(self.center, (n, 1))
        out = np.empty((n, self.dimension))
        got = 0
        while got < n:
            cand = self.center + self.radius * (
                2.0 * rng.random((n, self.dimension)) - 1.0
            )
            inside = np.sum((cand - self.center) ** 2, axis=1) <= self.radius**2
            take = cand[inside][: n - got]
            out[got : got + take.shape[0]] = take
            got += take.shape[0]
        return out

    def bounding_box(self) -> Box:
        return Box(self.center - self.radius, self.center + self.radius)

    def describe(self) -> str:
        c = " ".join(f"{v:.17g}" for v in self.center)
        return f"ball {c} ; {self.radius:.17g}"


@dataclass(frozen=True, eq=False)
class PointSet(InputSet):
    """A single fixed input (one-trajectory experiments)."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "point", np.atleast_1d(np.asarray(self.point, dtype=float))
        )

    @property
    def dimension(self) -> int:
        return self.point.shape[0]

    def contains(self, x) -> bool:
        return bool(np.array_equal(np.asarray(x, dtype=float), self.point))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.tile(self.point, (n, 1))

    def bounding_box(self) -> Box:
        return Box(self.point, self.point)

    def describe(self) -> str:
        return "point " + " ".join(f"{v:.17g}" for v in self.point)


def parse_input_set(text: str) -> InputSet:
    """Inverse of InputSet.describe(): 'box lo.. ; hi..' / 'ball c.. ; r' / 'point x..'."""
    parts = text.strip().split()
    if not parts:
        raise ValueError("empty input-set description")
    kind, rest = parts[0], parts[1:]
    if kind == "point":
        return PointSet(np.array([float(v) for v in rest]))
    if ";" in rest:
        cut = rest.index(";")
        head = [float(v) for v in rest[:cut]]
        tail = [float(v) for v in rest[cut + 1 :]]
        if kind == "box":
            return Box(np.array(head), np.array(tail))
        if kind == "ball":
            if len(tail) != 1:
                raise ValueError("ball needs a single radius after ';'")
            return Ball(np.array(head), tail[0])
    raise ValueError(f"unrecognized input-set description: {text!r}")


# ---------------------------------------------------------------------------
# sampling and dataset assembly


def sample_times(
    T: float, M: int, rng_seed: int, stream: int = Stream.TIMES
) -> np.ndarray:
    """M i.i.d. uniform draws on [0, T], in draw order (not sorted)."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if T <= 0:
        raise ValueError("T must be positive")
    rng = rng_stream(rng_seed, stream)
    return T * rng.random(M)


def sample_inputs(
    input_set: InputSet, N: int, rng_seed: int, stream: int = Stream.INPUTS
) -> np.ndarray:
    """N i.i.d. uniform draws from the input set, shape (N, n)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rng = rng_stream(rng_seed, stream)
    return input_set.sample(rng, N)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sampled triples on a shared time grid: values[i, j] = y(x0_i, t_j)."""

    inputs: np.ndarray  # (N, n)
    times: np.ndarray  # (M,)
    values: np.ndarray  # (N, M)
    horizon: float
    seed: int | None = None
    input_set_description: str | None = None

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        times = np.asarray(self.times, dtype=float)
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if values.shape != (inputs.shape[0], times.shape[0]):
            raise ValueError(
                f"values shape {values.shape} != (N, M) = "
                f"({inputs.shape[0]}, {times.shape[0]})"
            )
        if times.size and (times.min() < 0 or times.max() > self.horizon):
            raise ValueError("times must lie in [0, horizon]")

    @property
    def num_inputs(self) -> int:
        return self.inputs.shape[0]

    @property
    def num_times(self) -> int:
        return self.times.shape[0]

    @property
    def input_dimension(self) -> int:
        return self.inputs.shape[1]


def collect_dataset(
    oracle, inputs, times, seed: int | None = None, description: str | None = None
) -> Dataset:
    """Run the oracle on the grid of inputs x times (noise-free readout)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    times = np.asarray(times, dtype=float)
    if inputs.shape[0] == 0 or times.shape[0] == 0:
        raise ValueError("inputs and times must be nonempty")
    T = float(oracle.horizon)
    if times.min() < 0 or times.max() > T:
        raise ValueError("sampled times outside the oracle horizon")
    if hasattr(oracle, "evaluate_matrix"):
        values = oracle.evaluate_matrix(inputs, times)
    else:
        values = np.empty((inputs.shape[0], times.shape[0]))

        def one_input(i: int) -> None:
            for j in range(times.shape[0]):
                try:
                    values[i, j] = oracle.evaluate(inputs[i], float(times[j]))
                except Exception as exc:
                    raise RuntimeError(
                        f"oracle failed at input {i}, time index {j}: {exc}"
                    ) from exc

        workers = int(os.environ.get("PACTUBE_WORKERS", "1"))
        if workers > 1 and inputs.shape[0] > 1:
            # fan out across inputs; each worker owns disjoint rows of values
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for fut in [pool.submit(one_input, i) for i in range(inputs.shape[0])]:
                    fut.result()
        else:
            for i in range(inputs.shape[0]):
                one_input(i)
    return Dataset(
        inputs=inputs,
        times=times,
        values=values,
        horizon=T,
        seed=seed,
        input_set_description=description,
    )


# ---------------------------------------------------------------------------
# CSV persistence: '#' metadata lines, header x0_1,..,x0_n,t,y, one row
# per triple in i-major, j-minor order; floats at 17 significant digits.


def write_dataset(ds: Dataset, path) -> None:
    n = ds.input_dimension
    with open(path, "w") as fh:
        fh.write(f"# T={ds.horizon:.17g}\n")
        fh.write(f"# N={ds.num_inputs} M={ds.num_times}\n")
        if ds.seed is not None:
            fh.write(f"# seed={ds.seed}\n")
        if ds.input_set_description is not None:
            fh.write(f"# input_set={ds.input_set_description}\n")
        header = ",".join([f"x0_{d + 1}" for d in range(n)] + ["t", "y"])
        fh.write(header + "\n")
        for i in range(ds.num_inputs):
            xi = ",".join(f"{v:.17g}" for v in ds.inputs[i])
            for j in range(ds.num_times):
                row = f"{xi},{ds.times[j]:.17g},{ds.values[i, j]:.17g}"
                fh.write((row if n else row.lstrip(",")) + "\n")


def read_dataset(path) -> Dataset:
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                for tokenized in body.split():
                    if "=" in tokenized:
                        key, _, val = tokenized.partition("=")
                        meta.setdefault(key, val)
                if body.startswith("input_set="):
                    meta["input_set"] = body[len("input_set=") :]
                continue
            cells = line.split(",")
            if header is None:
                header = cells
                if header[-2:] != ["t", "y"]:
                    raise DatasetParseError(
                        f"line {lineno}: header must end with t,y"
                    )
                continue
            if cells == header:
                raise DatasetParseError(f"line {lineno}: duplicate header")
            if len(cells) != len(header):
                raise DatasetParseError(
                    f"line {lineno}: expected {len(header)} cells, got {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DatasetParseError(
                    f"line {lineno}: non-numeric or empty cell"
                ) from None
    if header is None or not rows:
        raise DatasetParseError("no data rows found")
    if "T" not in meta or "N" not in meta or "M" not in meta:
        raise DatasetParseError("missing '# T=' / '# N= M=' metadata")
    horizon = float(meta["T"])
    n_inputs, m_times = int(meta["N"]), int(meta["M"])
    n_dim = len(header) - 2
    if len(rows) != n_inputs * m_times:
        raise DatasetParseError(
            f"expected {n_inputs * m_times} data rows, found {len(rows)}"
        )
    data = np.array(rows)
    inputs = data[::m_times, :n_dim]
    times = data[:m_times, n_dim]
    # every block must repeat the shared time grid and its own input
    full_inputs = data[:, :n_dim].reshape(n_inputs, m_times, n_dim)
    full_times = data[:, n_dim].reshape(n_inputs, m_times)
    if not np.array_equal(full_times, np.tile(times, (n_inputs, 1))):
        raise DatasetParseError("time grid differs between input blocks")
    if not np.array_equal(
        full_inputs, np.repeat(inputs[:, None, :], m_times, axis=1)
    ):
        raise DatasetParseError("input varies within a block")
    values = data[:, n_dim + 1].reshape(n_inputs, m_times)
    seed = int(meta["seed"]) if "seed" in meta else None
    return Dataset(
        inputs=inputs,
        times=times,
        values=values,
        horizon=horizon,
        seed=seed,
        input_set_description=meta.get("input_set"),
    )
