"""Per-state block rewards and steady-state relative revenue of all miners."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .chain import ChainModel, HashDistribution, LeadState, transition_matrix
from .errors import DomainError
from .propagation import PropagationModel

VARIANTS = ("appendix", "printed")


def default_variant() -> str:
    v = os.environ.get("SSMLAB_VARIANT", "appendix")
    if v not in VARIANTS:
        raise DomainError(f"SSMLAB_VARIANT must be one of {VARIANTS}, got {v!r}")
    return v


@dataclass(frozen=True)
class RevenueProfile:
    """``rates`` are expected accepted blocks per chain step; ``shares`` normalise them."""

    rates: np.ndarray
    shares: np.ndarray
    residual: float = 0.0
    variant: str = "appendix"

    @property
    def honest(self) -> float:
        return float(self.shares[-1])


class _Ctx:
    """Hash vector over the active miners plus the map back to original indices."""

    def __init__(self, alpha: HashDistribution, prop: PropagationModel, ids=None, m_full=None):
        self.a = alpha.as_array()
        self.beta = alpha.beta
        self.m = alpha.m
        self.w = np.append(self.a, self.beta)
        self.ids = tuple(range(self.m)) if ids is None else tuple(ids)
        self.m_full = self.m if m_full is None else m_full
        self.prop = prop
        self._cache = {}

    def orig(self, k):
        return self.m_full if k == self.m else self.ids[k]

    def tie(self, D, order, resolver_order=None):
        """Expected rewards when the next block resolves a tie among ``D``."""
        key = (D, order, resolver_order)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if resolver_order is None:
            resolver_order = order
        Do = tuple(self.orig(k) for k in D)
        perm = np.argsort(Do)
        Ds = tuple(Do[p] for p in perm)
        t = np.zeros(self.m + 1)
        for i in range(self.m + 1):
            if self.w[i] == 0.0:
                continue
            g_sorted = self.prop.weights(Ds, self.orig(i), self.m_full)
            g = np.empty(len(D))
            g[perm] = g_sorted
            k = resolver_order if i == self.m else order
            for j, gij in zip(D, g):
                t[i] += self.w[i] * gij
                t[j] += self.w[i] * gij * k
        self._cache[key] = t
        return t


def tie_reward(D, order, alpha, prop=None) -> np.ndarray:
    """Expected rewards of every miner when a tie among ``D`` is resolved.

    ``D`` holds miner indices (honest pool = ``alpha.m``); ``order`` is the number
    of blocks each tied branch carries (1 or 2).
    """
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    if order not in (1, 2):
        raise DomainError("tie order must be 1 or 2")
    D = tuple(sorted(set(D)))
    if not D:
        raise DomainError("tie set must be nonempty")
    if any(not 0 <= j <= alpha.m for j in D):
        raise DomainError(f"tie set {D} references an unknown miner")
    return _Ctx(alpha, prop or PropagationModel.uniform()).tie(D, order)


def _rev(ctx: _Ctx, x: LeadState, variant: str) -> np.ndarray:
    A, B = x.A, x.B
    m, a, beta = ctx.m, ctx.a, ctx.beta
    rev = np.zeros(m + 1)
    if not B:
        if not A:
            rev[m] = beta
        else:
            rev += beta * ctx.tie(A + (m,), 1)
    elif len(B) == 1 and not A:
        j = B[0]
        rev[j] = a[j] + 2 * beta
    elif len(B) > 1:
        # honest pool's resolving block carries only one tied block in the
        # printed matrix; the derivation credits both
        rev += beta * ctx.tie(B, 2, resolver_order=1 if variant == "printed" else 2)
        for j in B:
            rev[j] += 3 * a[j]
    else:
        j = B[0]
        rev[j] = 2 * beta + 2 * a[j] ** 2 + 3 * a[j] * (1 - a[j])
    return rev


def state_revenue(x, alpha, prop=None, variant=None) -> np.ndarray:
    """Expected rewards credited to each miner for one step out of lead state ``x``."""
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    if not isinstance(x, LeadState):
        x = LeadState(tuple(x))
    if len(x.leads) != alpha.m or any(v not in (0, 1, 2) for v in x.leads):
        raise DomainError(f"state {x.leads} invalid for {alpha.m} miners")
    return _rev(_Ctx(alpha, prop or PropagationModel.uniform()), x, variant or default_variant())


def revenue_matrix(alpha, prop=None, variant=None, *, _ctx=None, states=None) -> np.ndarray:
    """Rows of per-state rewards, in the chain's state order."""
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    ctx = _ctx or _Ctx(alpha, prop or PropagationModel.uniform())
    variant = variant or default_variant()
    if states is None:
        from .chain import enumerate_states

        states = enumerate_states(alpha.m)
    return np.array([_rev(ctx, x, variant) for x in states])


def relative_revenue(alpha, prop=None, variant=None, chain: ChainModel | None = None) -> RevenueProfile:
    """Steady-state relative revenue of every miner when all active ones run SSM.

    Entry ``i < M`` belongs to strategic miner ``i``; the last entry to the
    honest pool.  Inactive (zero-hash) miners get zero.
    """
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    prop = prop or PropagationModel.uniform()
    variant = variant or default_variant()
    if variant not in VARIANTS:
        raise DomainError(f"unknown revenue variant {variant!r}")
    M = alpha.m
    sub = alpha.project()
    rates = np.zeros(M + 1)
    if sub is None:
        rates[M] = 1.0
        return RevenueProfile(rates, rates.copy(), 0.0, variant)
    ids = alpha.active
    model = chain if chain is not None else transition_matrix(sub)
    pi = model.pi
    ctx = _Ctx(sub, prop, ids, M)
    R = revenue_matrix(sub, prop, variant, _ctx=ctx, states=model.states)
    r = R.T @ pi
    rates[list(ids)] = r[:-1]
    rates[M] = r[-1]
    residual = float(np.abs(model.P @ pi - pi).max())
    return RevenueProfile(rates, rates / rates.sum(), residual, variant)
