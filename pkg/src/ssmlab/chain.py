"""Lead-state Markov chain for M semi-selfish miners racing an honest pool."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import DomainError, NumericalError, SizeLimitError

MAX_MINERS = 10
DENSE_LIMIT = 729


@dataclass(frozen=True)
class HashDistribution:
    """Strategic hash fractions; the honest pool holds the remainder ``beta``.

    Zero entries mark inactive strategic miners.  They are projected out before
    a chain is built and receive zero revenue.
    """

    alphas: tuple[float, ...]

    def __init__(self, alphas):
        a = tuple(float(x) for x in np.atleast_1d(np.asarray(alphas, dtype=float)))
        object.__setattr__(self, "alphas", a)
        if not a:
            raise DomainError("need at least one strategic miner")
        if len(a) > MAX_MINERS:
            raise SizeLimitError(f"at most {MAX_MINERS} strategic miners, got {len(a)}")
        for i, x in enumerate(a, 1):
            if not np.isfinite(x) or x < 0.0 or x > 0.5:
                raise DomainError(f"alpha_{i}={x:g} out of (0,0.5]")
        if sum(a) >= 1.0:
            raise DomainError(f"sum of alphas {sum(a):g} must be < 1")

    @property
    def m(self) -> int:
        return len(self.alphas)

    @property
    def beta(self) -> float:
        return 1.0 - sum(self.alphas)

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.alphas) if x > 0.0)

    def project(self) -> "HashDistribution | None":
        """Drop inactive miners; ``None`` if nobody is active."""
        act = self.active
        if not act:
            return None
        return HashDistribution([self.alphas[i] for i in act])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alphas)


@dataclass(frozen=True)
class LeadState:
    leads: tuple[int, ...]

    @property
    def A(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.leads) if x == 1)

    @property
    def B(self) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.leads) if x == 2)

    @property
    def name(self) -> str:
        return "S" + "".join(map(str, self.leads))

    def __str__(self):
        return self.name


def enumerate_states(m: int) -> list[LeadState]:
    """All ``3**m`` lead vectors, graded by total lead then lexicographic."""
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_MINERS:
        raise SizeLimitError(f"miner count must be in 1..{MAX_MINERS}, got {m}")
    vecs = sorted(itertools.product(range(3), repeat=m), key=lambda v: (sum(v), v))
    return [LeadState(v) for v in vecs]


def _state_arrays(m: int):
    """Integer code of every state in graded order plus the code -> index map."""
    states = enumerate_states(m)
    leads = np.array([s.leads for s in states], dtype=np.int64).reshape(len(states), m)
    pow3 = 3 ** np.arange(m, dtype=np.int64)
    codes = leads @ pow3
    pos = np.empty(3**m, dtype=np.int64)
    pos[codes] = np.arange(len(states))
    return states, leads, codes, pos, pow3


@dataclass(frozen=True, eq=False)
class ChainModel:
    """Column-stochastic transition matrix ``P`` over ``states`` and its steady state."""

    alpha: HashDistribution
    states: tuple[LeadState, ...]
    P: np.ndarray

    @cached_property
    def pi(self) -> np.ndarray:
        return steady_state(self)

    def dense(self) -> np.ndarray:
        return self.P.toarray() if sparse.issparse(self.P) else self.P

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {s.leads: k for k, s in enumerate(self.states)}


def transition_matrix(alpha: HashDistribution) -> ChainModel:
    """Build ``P[y, x]`` = probability of moving from state ``x`` to ``y``.

    All miners in ``alpha`` must be active (project first).  Chains with more
    than ``DENSE_LIMIT`` states are stored as CSC sparse matrices.
    """
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    a = alpha.as_array()
    if (a <= 0).any():
        raise DomainError("inactive miners must be projected out before building the chain")
    m, beta = alpha.m, alpha.beta
    states, leads, codes, pos, pow3 = _state_arrays(m)
    n = len(states)
    cols = np.arange(n)
    n_b = (leads == 2).sum(axis=1)
    n_a = (leads == 1).sum(axis=1)
    rows_l, cols_l, vals_l = [], [], []

    def put(r, c, v):
        rows_l.append(np.asarray(r, dtype=np.int64).ravel())
        cols_l.append(np.asarray(c, dtype=np.int64).ravel())
        vals_l.append(np.broadcast_to(np.asarray(v, dtype=float), np.shape(c)).ravel())

    for i in range(m):
        # any miner not at lead 2 extends its private chain
        ok = leads[:, i] != 2
        put(pos[codes[ok] + pow3[i]], cols[ok], a[i])
        # lone lead-2 miner with nobody at lead 1 publishes one block and stays put
        stay = (leads[:, i] == 2) & (n_b == 1) & (n_a == 0)
        put(cols[stay], cols[stay], a[i])

    to_zero = np.full(n, beta)
    multi = n_b > 1
    to_zero[multi] += (leads[multi] == 2) @ a
    race = np.flatnonzero((n_b == 1) & (n_a >= 1))
    j = np.argmax(leads[race] == 2, axis=1)
    put(pos[2 * pow3[j]], race, a[j] ** 2)
    to_zero[race] += a[j] * (1.0 - a[j])
    put(np.zeros(n, dtype=np.int64), cols, to_zero)

    P = sparse.csc_matrix(
        (np.concatenate(vals_l), (np.concatenate(rows_l), np.concatenate(cols_l))),
        shape=(n, n),
    )
    P.sum_duplicates()
    if n <= DENSE_LIMIT:
        P = P.toarray()
    return ChainModel(alpha, tuple(states), P)


def steady_state(model: ChainModel, tol: float = 1e-12) -> np.ndarray:
    """Solve ``(P - I) pi = 0`` with ``sum(pi) = 1`` by a direct solve.

    One balance row is redundant for an irreducible chain; it is replaced by
    the normalisation row (dense) or by pinning the all-zero state (sparse).
    """
    P = model.P
    n = P.shape[0]
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        if sparse.issparse(P):
            # Row 0 (return to the all-zero state) is dense; dropping it and
            # pinning pi[0] = 1 keeps the factorisation sparse.
            A = (sparse.identity(n, format="csc") - P)[1:, 1:].tocsc()
            b = P[1:, 0].toarray().ravel()
            # graded order keeps A nearly lower triangular, so no column permutation
            rest = spla.spsolve(A, b, permc_spec="NATURAL")
            pi = np.concatenate([[1.0], np.atleast_1d(rest)])
            pi /= pi.sum()
        else:
            A = P - np.eye(n)
            A[-1, :] = 1.0
            pi = np.linalg.solve(A, rhs)
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        raise NumericalError(f"steady-state solve failed: {exc}") from None
    pi = np.asarray(pi, dtype=float)
    pi[(pi < 0) & (pi >= -1e-15)] = 0.0
    residual = float(np.abs(P @ pi - pi).max())
    if not np.isfinite(residual) or residual > tol or (pi < 0).any():
        raise NumericalError(
            f"steady-state residual {residual:.3e} exceeds {tol:.0e}", residual=residual
        )
    return pi
