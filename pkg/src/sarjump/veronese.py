"""Veronese embedding and the noise-corrected second-moment matrix.

For a regressor ``r = [x_k, .., x_{k-n_a}, u_{k-1}, .., u_{k-n_c}]`` every entry
of ``nu_n(r) nu_n(r)^T`` is a monomial of degree ``2n``.  The output samples
in it sit at distinct time instants, so with independent noise the product
factorizes and each power ``x^h`` can be replaced by the unbiased polynomial
``H_h(y)`` defined by

    H_0 = 1,   H_h(y) = y^h - sum_{d=1}^{h} C(h, d) m_d H_{h-d}(y),

where ``m_d`` are the raw noise moments.  ``E[H_h(x + eta)] = x^h``.

Because ``H_h`` is linear in the moments once its coefficients are fixed,
the corrected matrix for any noise level is a fixed linear combination of
raw sample means of monomials in ``(y, u)``.  :class:`MomentStatistics`
makes the single pass over the data and can then be re-evaluated cheaply
for as many noise levels as a search needs.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .model import Dataset, NoiseSpec

DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class VeroneseSpec:
    """Degree-``n`` monomials in ``s`` variables, lexicographic order.

    The first ``n_noisy`` variables are noisy output samples; the rest are
    exactly known inputs.
    """

    n: int
    s: int
    n_noisy: int | None = None
    exponents: np.ndarray = field(init=False, repr=False, compare=False)
    combos: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.s < 1:
            raise ValueError("need n >= 1 and s >= 1")
        if self.n_noisy is None:
            object.__setattr__(self, "n_noisy", self.s)
        combos = np.array(list(itertools.combinations_with_replacement(range(self.s), self.n)))
        exps = np.zeros((len(combos), self.s), dtype=np.int64)
        for row, combo in zip(exps, combos):
            np.add.at(row, combo, 1)
        exps.setflags(write=False)
        combos.setflags(write=False)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "combos", combos)

    @property
    def dim(self) -> int:
        return self.exponents.shape[0]

    @cached_property
    def index(self) -> dict:
        return {tuple(e): i for i, e in enumerate(self.exponents.tolist())}


def veronese_spec(n: int, n_a: int, n_c: int) -> VeroneseSpec:
    """Spec for the regressor layout of an ``(n_a, n_c)`` model with ``n`` modes."""
    return VeroneseSpec(n, n_a + n_c + 1, n_a + 1)


def veronese_map(v, n: int | VeroneseSpec) -> np.ndarray:
    """All degree-``n`` monomials of ``v`` (last axis), lexicographic order."""
    v = np.asarray(v, dtype=float)
    spec = n if isinstance(n, VeroneseSpec) else VeroneseSpec(n, v.shape[-1])
    return v[..., spec.combos].prod(axis=-1)


def decoupling_coefficients(b_list, spec: VeroneseSpec | None = None) -> np.ndarray:
    """Coefficients of ``prod_i (b_i . r)`` in the Veronese basis."""
    b_list = np.atleast_2d(np.asarray(b_list, dtype=float))
    n, s = b_list.shape
    spec = VeroneseSpec(n, s) if spec is None else spec
    if (spec.n, spec.s) != (n, s):
        raise ValueError("coefficient vectors do not match the Veronese spec")
    poly = {(0,) * s: 1.0}
    for b in b_list:
        nxt: dict = {}
        for e, coef in poly.items():
            for i in range(s):
                if b[i] == 0.0:
                    continue
                e2 = e[:i] + (e[i] + 1,) + e[i + 1 :]
                nxt[e2] = nxt.get(e2, 0.0) + coef * b[i]
        poly = nxt
    c = np.zeros(spec.dim)
    for e, coef in poly.items():
        c[spec.index[e]] = coef
    return c


def unbiased_power_table(h_max: int, moments) -> np.ndarray:
    """Coefficients of ``H_0 .. H_h_max``: ``table[h, p]`` multiplies ``y**p``.

    ``moments[d]`` is the raw noise moment ``m_d`` (``moments[0]`` unused).
    """
    m = np.asarray(moments, dtype=float)
    if m.size < h_max + 1:
        raise ValueError("not enough noise moments for the requested degree")
    table = np.zeros((h_max + 1, h_max + 1))
    for h in range(h_max + 1):
        table[h, h] = 1.0
        for d in range(1, h + 1):
            if m[d] != 0.0:
                table[h, : h - d + 1] -= math.comb(h, d) * m[d] * table[h - d, : h - d + 1]
    return table


def unbiased_power(y, h: int, noise: NoiseSpec):
    """``H_h(y)``: an unbiased estimate of ``x^h`` from ``y = x + eta``."""
    if h < 0:
        raise ValueError("degree must be non-negative")
    coef = unbiased_power_table(h, noise.moments(h))[h]
    return np.polynomial.polynomial.polyval(np.asarray(y, dtype=float), coef)


def _pair_exponents(spec: VeroneseSpec):
    iu, ju = np.triu_indices(spec.dim)
    return iu, ju, spec.exponents[iu] + spec.exponents[ju]


def corrected_sample_matrix(ds: Dataset, k: int, spec: VeroneseSpec,
                            noise: NoiseSpec) -> np.ndarray:
    """Single-sample unbiased estimate of ``nu_n(r_k) nu_n(r_k)^T`` (uses ``y`` only)."""
    if not 1 <= k <= ds.N:
        raise IndexError(f"time index {k} outside 1..{ds.N}")
    r = ds.regressors(False, ks=np.array([k]))[0]
    h_max = 2 * spec.n
    table = unbiased_power_table(h_max, noise.moments(h_max))
    nx = spec.n_noisy
    # powers[l, h] = H_h(r_l) for noisy entries, plain r_l**h for inputs
    powers = np.empty((spec.s, h_max + 1))
    for l in range(spec.s):
        if l < nx:
            powers[l] = np.polynomial.polynomial.polyval(r[l], table.T)
        else:
            powers[l] = r[l] ** np.arange(h_max + 1)
    iu, ju, e = _pair_exponents(spec)
    vals = powers[np.arange(spec.s), e].prod(axis=1)
    m = np.empty((spec.dim, spec.dim))
    m[iu, ju] = vals
    m[ju, iu] = vals
    return m


@dataclass(frozen=True)
class CorrectedMatrix:
    m: np.ndarray
    count: int


class MomentStatistics:
    """Raw sample sums of every monomial the corrected matrix needs.

    Sums are formed per fixed-size chunk (numpy pairwise summation) and the
    chunk partials are combined with :func:`math.fsum`, so the result does
    not depend on how the chunks were scheduled and merging a statistic
    with itself doubles the sums exactly.
    """

    def __init__(self, spec: VeroneseSpec, partials=None, count: int = 0, scale: float = 1.0):
        self.spec = spec
        self.scale = float(scale)
        self.monomials, self._terms = self._plan(spec)
        width = len(self.monomials)
        self.partials = np.zeros((0, width)) if partials is None else np.asarray(partials)
        self.count = int(count)

    @staticmethod
    def _plan(spec: VeroneseSpec):
        # raw monomials: pair monomials with their noisy exponents lowered in every way
        nx = spec.n_noisy
        iu, ju, pair_e = _pair_exponents(spec)
        raw_index: dict = {}
        pair_idx, raw_idx, hi, lo = [], [], [], []
        for p, e in enumerate(pair_e.tolist()):
            for reduced in itertools.product(*(range(h + 1) for h in e[:nx])):
                key = tuple(reduced) + tuple(e[nx:])
                r = raw_index.setdefault(key, len(raw_index))
                pair_idx.append(p)
                raw_idx.append(r)
                hi.append(e[:nx])
                lo.append(reduced)
        monomials = np.array(list(raw_index), dtype=np.int64).reshape(len(raw_index), spec.s)
        terms = (iu, ju, np.array(pair_idx), np.array(raw_idx),
                 np.array(hi, dtype=np.int64).reshape(-1, nx),
                 np.array(lo, dtype=np.int64).reshape(-1, nx))
        return monomials, terms

    @classmethod
    def from_dataset(cls, ds: Dataset, spec: VeroneseSpec, chunk_size: int = DEFAULT_CHUNK,
                     scale: bool | float = False) -> "MomentStatistics":
        if spec.s != ds.s or spec.n_noisy != ds.n_a + 1:
            raise ValueError("Veronese spec does not match the dataset's regressor layout")
        if ds.N < spec.dim:
            warnings.warn(f"N={ds.N} is smaller than the embedding dimension {spec.dim}",
                          stacklevel=2)
        if scale is True:
            t = max(float(np.max(np.abs(ds.y))), float(np.max(np.abs(ds.u), initial=0.0)))
            t = t if t > 0 else 1.0
        else:
            t = 1.0 if scale is False else float(scale)
        stats = cls(spec, scale=t)
        rows = []
        for start in range(1, ds.N + 1, chunk_size):
            ks = np.arange(start, min(start + chunk_size, ds.N + 1))
            rows.append(stats._chunk_sums(ds.regressors(False, ks=ks) / t))
        stats.partials = np.array(rows)
        stats.count = ds.N
        return stats

    def _chunk_sums(self, r: np.ndarray) -> np.ndarray:
        deg = int(self.monomials.max(initial=0))
        powers = [[np.ones(r.shape[0])] for _ in range(self.spec.s)]
        for l in range(self.spec.s):
            for _ in range(deg):
                powers[l].append(powers[l][-1] * r[:, l])
        out = np.empty(len(self.monomials))
        for i, e in enumerate(self.monomials.tolist()):
            prod = None
            for l, h in enumerate(e):
                if h:
                    prod = powers[l][h] if prod is None else prod * powers[l][h]
            out[i] = r.shape[0] if prod is None else prod.sum()
        return out

    def merge(self, other: "MomentStatistics") -> "MomentStatistics":
        if other.spec != self.spec or other.scale != self.scale:
            raise ValueError("cannot merge statistics with different specs or scales")
        return MomentStatistics(self.spec, np.vstack([self.partials, other.partials]),
                                self.count + other.count, self.scale)

    def raw_means(self) -> np.ndarray:
        if self.count == 0:
            raise ValueError("no samples accumulated")
        return np.array([math.fsum(col) for col in self.partials.T]) / self.count

    def corrected(self, noise: NoiseSpec | float) -> np.ndarray:
        """Corrected mean matrix for a given noise law (or noise std)."""
        if not isinstance(noise, NoiseSpec):
            noise = NoiseSpec.from_sigma(noise)
        return self.corrected_from_moments(noise.moments(2 * self.spec.n))

    def corrected_from_moments(self, moments) -> np.ndarray:
        h_max = 2 * self.spec.n
        m = np.asarray(moments, dtype=float)[: h_max + 1] / self.scale ** np.arange(h_max + 1)
        table = unbiased_power_table(h_max, m)
        iu, ju, pair_idx, raw_idx, hi, lo = self._terms
        coef = table[hi, lo].prod(axis=1)
        vals = np.bincount(pair_idx, weights=coef * self._means[raw_idx], minlength=iu.size)
        vals *= self.scale ** h_max
        out = np.empty((self.spec.dim, self.spec.dim))
        out[iu, ju] = vals
        out[ju, iu] = vals
        return out

    @property
    def _means(self) -> np.ndarray:
        key = (self.partials.shape, self.count)
        if getattr(self, "_cache_key", None) != key:
            self._cache = self.raw_means()
            self._cache_key = key
        return self._cache


def accumulate(ds: Dataset, spec: VeroneseSpec, noise: NoiseSpec,
               chunk_size: int = DEFAULT_CHUNK, scale: bool = False) -> CorrectedMatrix:
    """Mean corrected matrix over ``k = 1..N``."""
    stats = MomentStatistics.from_dataset(ds, spec, chunk_size, scale)
    return CorrectedMatrix(stats.corrected(noise), stats.count)
