"""Domain types for switched autoregressive models with Markov switching.

Time indices follow the usual convention for these models: the input is
known for ``k = -n_c + 1 .. N - 1`` and the measured output for
``k = -n_a + 1 .. N``.  Arrays are stored from their first index, and the
accessors below translate a time index ``k`` into an array position so
callers never have to do offset arithmetic themselves.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DISTINCT_TOL = 1e-9
ROW_SUM_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def normal_moment(d: int, sigma: float) -> float:
    """Raw moment ``E[eta^d]`` of a zero-mean Normal with std ``sigma``."""
    if d < 0:
        raise ValueError("moment order must be non-negative")
    if d % 2:
        return 0.0
    # (d-1)!! sigma^d
    m = 1.0
    for j in range(d - 1, 0, -2):
        m *= j
    return m * sigma**d


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement-noise law.  Only the zero-mean Normal family ships."""

    variance: float
    family: str = "normal"

    def __post_init__(self):
        if self.family != "normal":
            raise ValueError(f"unsupported noise family {self.family!r}")
        if not (self.variance >= 0 and math.isfinite(self.variance)):
            raise ValueError("noise variance must be finite and >= 0")

    @classmethod
    def from_sigma(cls, sigma: float) -> "NoiseSpec":
        return cls(float(sigma) ** 2)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def moment(self, d: int) -> float:
        return normal_moment(d, self.sigma)

    def moments(self, max_order: int) -> np.ndarray:
        """Moments ``m_0 .. m_max_order`` as an array (``m_0 = 1``)."""
        return np.array([self.moment(d) for d in range(max_order + 1)])


@dataclass(frozen=True)
class SubsystemParams:
    a: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = _frozen(np.atleast_1d(self.a))
        c = _frozen(np.asarray(self.c, dtype=float).reshape(-1))
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(c))):
            raise ValueError("subsystem coefficients must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "c", c)

    def __eq__(self, other):
        if not isinstance(other, SubsystemParams):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.c, other.c)

    __hash__ = None


def coefficient_vector(s: SubsystemParams) -> np.ndarray:
    """Return ``b = [-1, a_1..a_na, c_1..c_nc]`` with ``b . r_k = 0`` on clean data."""
    return np.concatenate(([-1.0], s.a, s.c))


@dataclass(frozen=True)
class SarModel:
    """``n`` subsystems sharing AR order ``n_a`` and input order ``n_c``."""

    subsystems: tuple[SubsystemParams, ...]

    def __post_init__(self):
        subs = tuple(self.subsystems)
        if not subs:
            raise ValueError("a model needs at least one subsystem")
        n_a, n_c = subs[0].a.size, subs[0].c.size
        if n_a < 1:
            raise ValueError("AR order n_a must be >= 1")
        for s in subs:
            if s.a.size != n_a or s.c.size != n_c:
                raise ValueError("all subsystems must share n_a and n_c")
        b = np.array([coefficient_vector(s) for s in subs])
        for i in range(len(subs)):
            for j in range(i + 1, len(subs)):
                if np.linalg.norm(b[i] - b[j]) <= DISTINCT_TOL:
                    raise ValueError(f"subsystems {i + 1} and {j + 1} coincide")
        object.__setattr__(self, "subsystems", subs)

    @classmethod
    def from_coefficients(cls, a, c) -> "SarModel":
        """Build from per-mode coefficient lists, e.g. ``a=[[0.3], [-0.5]]``."""
        a = np.asarray(a, dtype=float)
        if a.ndim == 1:
            a = a[:, None]
        c = np.asarray(c, dtype=float)
        if c.ndim == 1:
            c = c[:, None] if c.size else np.zeros((a.shape[0], 0))
        if c.shape[0] != a.shape[0]:
            raise ValueError("a and c must list the same number of subsystems")
        return cls(tuple(SubsystemParams(ai, ci) for ai, ci in zip(a, c)))

    @classmethod
    def from_coefficient_vectors(cls, b, n_a: int) -> "SarModel":
        """Inverse of :meth:`coefficient_vectors` (rows rescaled to lead with -1)."""
        b = np.atleast_2d(np.asarray(b, dtype=float))
        b = b / -b[:, :1]
        return cls.from_coefficients(b[:, 1 : 1 + n_a], b[:, 1 + n_a :])

    @property
    def n(self) -> int:
        return len(self.subsystems)

    @property
    def n_a(self) -> int:
        return self.subsystems[0].a.size

    @property
    def n_c(self) -> int:
        return self.subsystems[0].c.size

    @property
    def a(self) -> np.ndarray:
        """AR coefficients, shape ``(n, n_a)``."""
        return np.array([s.a for s in self.subsystems])

    @property
    def c(self) -> np.ndarray:
        """Input coefficients, shape ``(n, n_c)``."""
        return np.array([s.c for s in self.subsystems]).reshape(self.n, self.n_c)

    def coefficient_vectors(self) -> np.ndarray:
        return np.array([coefficient_vector(s) for s in self.subsystems])


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix, ``p[i, j] = P(delta_{k+1} = j+1 | delta_k = i+1)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition matrix must be square")
        if not np.all((p >= 0) & (p <= 1)):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1) > ROW_SUM_TOL):
            raise ValueError("transition matrix rows must sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def __eq__(self, other):
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return np.array_equal(self.p, other.p)

    __hash__ = None


@dataclass(frozen=True)
class Truth:
    """Ground truth carried by simulated datasets (all optional but the arrays)."""

    x: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    model: SarModel | None = None
    ptm: TransitionMatrix | None = None
    noise: NoiseSpec | None = None
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        object.__setattr__(self, "delta", _frozen(self.delta, dtype=np.int64))
        object.__setattr__(self, "eta", _frozen(self.eta))


@dataclass(frozen=True)
class Dataset:
    """Input/output record.

    ``u`` holds ``u_{-n_c+1} .. u_{N-1}`` and ``y`` holds ``y_{-n_a+1} .. y_N``.
    When ``truth`` is present, ``truth.x`` and ``truth.eta`` share ``y``'s
    layout and ``truth.delta`` holds ``delta_1 .. delta_N`` (modes 1..n).
    """

    u: np.ndarray
    y: np.ndarray
    n_a: int
    n_c: int
    truth: Truth | None = field(default=None, compare=False)

    def __post_init__(self):
        u, y = _frozen(self.u), _frozen(self.y)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        if self.n_a < 1 or self.n_c < 0:
            raise ValueError("need n_a >= 1 and n_c >= 0")
        N = y.size - self.n_a
        if N < 1:
            raise ValueError("output record too short")
        if u.size != max(N + self.n_c - 1, 0):
            raise ValueError(
                f"input length {u.size} inconsistent with N={N}, n_c={self.n_c}"
            )
        t = self.truth
        if t is not None:
            if t.x.size != y.size or t.eta.size != y.size or t.delta.size != N:
                raise ValueError("truth arrays do not match the record layout")
            if not np.array_equal(t.x + t.eta, y):
                raise ValueError("truth violates y = x + eta")

    @property
    def N(self) -> int:
        return self.y.size - self.n_a

    @property
    def s(self) -> int:
        """Regressor length ``n_a + n_c + 1``."""
        return self.n_a + self.n_c + 1

    def y_at(self, k):
        return self.y[np.asarray(k) + self.n_a - 1]

    def u_at(self, k):
        return self.u[np.asarray(k) + self.n_c - 1]

    def x_at(self, k):
        if self.truth is None:
            raise ValueError("dataset carries no ground truth")
        return self.truth.x[np.asarray(k) + self.n_a - 1]

    def regressors(self, use_truth: bool = False, ks=None) -> np.ndarray:
        """Stack regressors ``r_k`` for ``ks`` (default ``1..N``) as rows."""
        ks = np.arange(1, self.N + 1) if ks is None else np.asarray(ks)
        if ks.size and (ks.min() < 1 or ks.max() > self.N):
            raise IndexError(f"regressor index outside 1..{self.N}")
        src = self.truth.x if use_truth else self.y
        if use_truth and self.truth is None:
            raise ValueError("dataset carries no ground truth")
        cols = [src[ks - j + self.n_a - 1] for j in range(self.n_a + 1)]
        cols += [self.u[ks - j + self.n_c - 1] for j in range(1, self.n_c + 1)]
        return np.stack(cols, axis=-1)

    def truncate(self, N: int) -> "Dataset":
        """Keep the first ``N`` samples; ground truth is truncated alongside."""
        if not 1 <= N <= self.N:
            raise ValueError(f"cannot truncate a length-{self.N} record to {N}")
        ny, nu = N + self.n_a, max(N + self.n_c - 1, 0)
        t = self.truth
        if t is not None:
            t = Truth(t.x[:ny], t.delta[:N], t.eta[:ny], t.model, t.ptm, t.noise, t.seed)
        return Dataset(self.u[:nu], self.y[:ny], self.n_a, self.n_c, t)


def regressor(ds: Dataset, k: int, use_truth: bool = False) -> np.ndarray:
    """``[x_k, .., x_{k-n_a}, u_{k-1}, .., u_{k-n_c}]``, with ``y`` for ``x`` unless ``use_truth``."""
    if not 1 <= k <= ds.N:
        raise IndexError(f"time index {k} outside 1..{ds.N}")
    return ds.regressors(use_truth, ks=np.array([k]))[0]


# -- serialization ----------------------------------------------------------


def model_to_dict(model: SarModel, ptm: TransitionMatrix | None = None,
                  noise: NoiseSpec | None = None) -> dict:
    doc = {
        "n": model.n,
        "n_a": model.n_a,
        "n_c": model.n_c,
        "subsystems": [{"a": s.a.tolist(), "c": s.c.tolist()} for s in model.subsystems],
    }
    if ptm is not None:
        doc["ptm"] = ptm.p.tolist()
    if noise is not None:
        doc["noise"] = {"family": noise.family, "variance": noise.variance}
    return doc


def model_from_dict(doc: dict):
    """Parse a model document; returns ``(model, ptm or None, noise or None)``."""
    subs = doc["subsystems"]
    model = SarModel.from_coefficients(
        [s["a"] for s in subs], [s.get("c", []) for s in subs]
    )
    if (model.n, model.n_a, model.n_c) != (doc.get("n", model.n),
                                           doc.get("n_a", model.n_a),
                                           doc.get("n_c", model.n_c)):
        raise ValueError("declared n / n_a / n_c disagree with the subsystem lists")
    ptm = TransitionMatrix(doc["ptm"]) if doc.get("ptm") is not None else None
    if ptm is not None and ptm.n != model.n:
        raise ValueError("ptm dimension differs from the number of subsystems")
    noise = None
    if doc.get("noise") is not None:
        noise = NoiseSpec(float(doc["noise"]["variance"]),
                          doc["noise"].get("family", "normal"))
    return model, ptm, noise


def save_model(path, model: SarModel, ptm: TransitionMatrix | None = None,
               noise: NoiseSpec | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, ptm, noise), indent=2) + "\n")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))


def _fmt(v: float) -> str:
    return repr(float(v))


def save_dataset(path, ds: Dataset) -> None:
    """Write ``k,u,y[,x,delta,eta]`` rows; undefined cells are left empty."""
    has_truth = ds.truth is not None
    k0 = 1 - max(ds.n_a, ds.n_c)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "u", "y"] + (["x", "delta", "eta"] if has_truth else []))
        for k in range(k0, ds.N + 1):
            row = [str(k)]
            row.append(_fmt(ds.u_at(k)) if -ds.n_c + 1 <= k <= ds.N - 1 and ds.u.size else "")
            in_y = k >= -ds.n_a + 1
            row.append(_fmt(ds.y_at(k)) if in_y else "")
            if has_truth:
                row.append(_fmt(ds.x_at(k)) if in_y else "")
                row.append(str(int(ds.truth.delta[k - 1])) if k >= 1 else "")
                row.append(_fmt(ds.truth.eta[k + ds.n_a - 1]) if in_y else "")
            w.writerow(row)


def load_dataset(path) -> Dataset:
    """Read a dataset CSV; ``n_a`` and ``n_c`` are inferred from the first indices."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    ks = np.array([int(r["k"]) for r in rows])
    if np.any(np.diff(ks) != 1):
        raise ValueError(f"{path}: time index must be contiguous")

    def column(name, cast=float):
        present = [(k, cast(r[name])) for k, r in zip(ks, rows) if r.get(name, "") != ""]
        return [k for k, _ in present], [v for _, v in present]

    ky, y = column("y")
    ku, u = column("u")
    n_a = 1 - ky[0]
    n_c = 1 - ku[0] if ku else 0
    truth = None
    if "x" in rows[0] and rows[0].get("x") is not None:
        _, x = column("x")
        _, delta = column("delta", int)
        _, eta = column("eta")
        truth = Truth(np.array(x), np.array(delta), np.array(eta))
    return Dataset(np.array(u), np.array(y), n_a, n_c, truth)
