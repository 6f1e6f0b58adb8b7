"""Binary SSM games, partition games and the solution concepts built on them.

Miner ``i`` (0-based) chooses honest mining (0, ``H``) or SSM (1, ``S``); in the
partition game it dedicates a fraction ``s_i`` of its hash to SSM.  Utilities
are relative revenues from the all-SSM lead-state chain over the effective
hash vector ``s * alpha``; honest hash shares the honest pool's revenue.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .chain import HashDistribution
from .closedform import sign_changes
from .errors import DomainError, NumericalError, SizeLimitError
from .propagation import PropagationModel
from .revenue import default_variant, relative_revenue

STRICT_TOL = 1e-12
INDIFF_TOL = 1e-9
ENDPOINT_TOL = 1e-6
MAX_GAME_MINERS = 8
PARTITION_VARIANTS = ("literal", "share-consistent")


# -- profiles ----------------------------------------------------------------


@dataclass(frozen=True)
class StrategyProfile:
    actions: tuple[int, ...]

    def __post_init__(self):
        if any(a not in (0, 1) for a in self.actions):
            raise DomainError(f"profile entries must be 0 or 1, got {self.actions}")

    @classmethod
    def from_label(cls, label: str) -> "StrategyProfile":
        m = {"H": 0, "S": 1}
        try:
            return cls(tuple(m[c] for c in label.upper()))
        except KeyError:
            raise DomainError(f"profile label {label!r} must use H and S") from None

    @property
    def label(self) -> str:
        return "".join("S" if a else "H" for a in self.actions)

    def flip(self, i: int) -> "StrategyProfile":
        a = list(self.actions)
        a[i] = 1 - a[i]
        return StrategyProfile(tuple(a))

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class PartitionProfile:
    fractions: tuple[float, ...]

    def __post_init__(self):
        f = tuple(float(x) for x in self.fractions)
        object.__setattr__(self, "fractions", f)
        if any(not 0.0 <= x <= 1.0 for x in f):
            raise DomainError(f"partition fractions must lie in [0,1], got {f}")


@dataclass
class Commitment:
    """Leader commitment ``s1`` with the followers' selected response."""

    s1: float
    response: tuple[int, ...] | None
    v: tuple[float, ...] | None
    n_pne: int = 0

    @property
    def value(self) -> float:
        return -math.inf if self.v is None else self.v[0]


@dataclass
class StackelbergResult:
    best: Commitment
    optimal: list[Commitment]
    no_pne: list[float] = field(default_factory=list)
    follower_gap: float | None = None  # |U_2(s1*,0) - U_2(s1*,1)| in two-player mode
    mode: str = "sse"


@dataclass
class EquilibriumReport:
    alpha: tuple[float, ...]
    pne: list[StrategyProfile] = field(default_factory=list)
    utilities: dict[str, tuple[float, ...]] = field(default_factory=dict)
    sse: StackelbergResult | None = None
    commitment_type: int | None = None
    coalitions: list[tuple[tuple[int, ...], float]] = field(default_factory=list)


# -- utilities ---------------------------------------------------------------

_cache: dict = {}
_lock = threading.Lock()


def _prop_key(prop: PropagationModel):
    if prop.kind == "table":
        return ("table", id(prop.table))
    return (prop.kind, prop.gamma)


def _shares(eff, prop: PropagationModel, variant: str) -> np.ndarray:
    """Chain shares for the effective hash vector, memoised."""
    key = (variant, _prop_key(prop), tuple(round(float(e), 12) for e in eff))
    hit = _cache.get(key)
    if hit is not None:
        return hit
    shares = relative_revenue(HashDistribution(eff), prop, variant).shares
    with _lock:
        _cache[key] = shares
    return shares


def clear_cache() -> None:
    with _lock:
        _cache.clear()


def _setup(alpha, prop, variant):
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    return alpha, prop or PropagationModel.uniform(), variant or default_variant()


def ssm_game_utilities(alpha, x, prop=None, variant=None) -> np.ndarray:
    """Utilities of the binary game at profile ``x``.

    SSM players receive their chain share; honest strategic players split the
    honest pool's share in proportion to hash.
    """
    alpha, prop, variant = _setup(alpha, prop, variant)
    if not isinstance(x, StrategyProfile):
        x = StrategyProfile(tuple(int(v) for v in x))
    if len(x.actions) != alpha.m:
        raise DomainError(f"profile has {len(x.actions)} entries for {alpha.m} miners")
    a = alpha.as_array()
    xs = np.asarray(x.actions, dtype=float)
    R = _shares(a * xs, prop, variant)
    honest_hash = 1.0 - float(a @ xs)
    return np.where(xs == 1, R[:-1], a / honest_hash * R[-1])


def partition_utilities(alpha, s, variant_game="literal", prop=None, variant=None) -> np.ndarray:
    """Utilities when miner ``i`` devotes fraction ``s_i`` of its hash to SSM.

    ``literal`` weights the honest part by ``(1 - s_i)**2``; ``share-consistent``
    by ``(1 - s_i)``.  Both agree on binary profiles.
    """
    alpha, prop, variant = _setup(alpha, prop, variant)
    if variant_game not in PARTITION_VARIANTS:
        raise DomainError(f"partition variant must be one of {PARTITION_VARIANTS}")
    if not isinstance(s, PartitionProfile):
        s = PartitionProfile(tuple(s))
    sv = np.asarray(s.fractions)
    if len(sv) != alpha.m:
        raise DomainError(f"partition has {len(sv)} entries for {alpha.m} miners")
    a = alpha.as_array()
    R = _shares(a * sv, prop, variant)
    honest = (1.0 - sv) * a / (1.0 - float(sv @ a)) * R[-1]
    if variant_game == "literal":
        honest = (1.0 - sv) * honest
    return sv * R[:-1] + honest


def utility_table(alpha, prop=None, variant=None) -> dict[str, np.ndarray]:
    """Utilities for all ``2**M`` binary profiles keyed by label (``"HS"`` etc.)."""
    alpha, prop, variant = _setup(alpha, prop, variant)
    if alpha.m > MAX_GAME_MINERS:
        raise SizeLimitError(f"game enumeration supports at most {MAX_GAME_MINERS} miners")
    out = {}
    for acts in itertools.product((0, 1), repeat=alpha.m):
        x = StrategyProfile(acts)
        out[x.label] = ssm_game_utilities(alpha, x, prop, variant)
    return out


def _is_pne(table, x: StrategyProfile) -> bool:
    u = table[x.label]
    return all(table[x.flip(i).label][i] <= u[i] + STRICT_TOL for i in range(len(x.actions)))


def enumerate_pne(alpha, prop=None, variant=None, table=None) -> list[StrategyProfile]:
    """All pure Nash equilibria of the binary game, by brute force."""
    table = table or utility_table(alpha, prop, variant)
    profs = [StrategyProfile.from_label(k) for k in table]
    return [x for x in profs if _is_pne(table, x)]


# -- best responses and commitments ------------------------------------------


@dataclass(frozen=True)
class BestResponse:
    action: int
    u_honest: float
    u_ssm: float

    @property
    def indifferent(self) -> bool:
        return abs(self.u_honest - self.u_ssm) <= INDIFF_TOL


def best_response(alpha, i: int, s, variant_game="literal", prop=None, variant=None) -> BestResponse:
    """Miner ``i``'s best endpoint reply to the other entries of ``s`` (``s[i]`` ignored)."""
    alpha, prop, variant = _setup(alpha, prop, variant)
    s = list(s.fractions if isinstance(s, PartitionProfile) else s)
    if not 0 <= i < alpha.m:
        raise DomainError(f"miner index {i} outside 0..{alpha.m - 1}")
    s[i] = 0.0
    u0 = partition_utilities(alpha, s, variant_game, prop, variant)[i]
    s[i] = 1.0
    u1 = partition_utilities(alpha, s, variant_game, prop, variant)[i]
    return BestResponse(int(u1 > u0 + INDIFF_TOL), float(u0), float(u1))


def _commit(alpha, leader, s1, mode, variant_game, prop, variant) -> Commitment:
    """Evaluate the leader commitment ``s1`` under the chosen follower selection."""
    m = alpha.m
    followers = [j for j in range(m) if j != leader]
    rows = []
    for acts in itertools.product((0, 1), repeat=len(followers)):
        s = np.empty(m)
        s[leader] = s1
        s[followers] = acts
        rows.append((acts, partition_utilities(alpha, s, variant_game, prop, variant)))
    util = dict(rows)
    eq = []
    for acts, u in rows:
        stable = True
        for k, j in enumerate(followers):
            dev = list(acts)
            dev[k] = 1 - dev[k]
            gain = util[tuple(dev)][j] - u[j]
            # SSE: followers treat near-ties as ties; pessimistic: strict PNE
            tol = INDIFF_TOL if mode == "sse" else STRICT_TOL
            if gain > tol:
                stable = False
                break
        if stable:
            eq.append((acts, u))
    if not eq:
        return Commitment(float(s1), None, None, 0)
    pick = max if mode == "sse" else min
    acts, u = pick(eq, key=lambda r: r[1][leader])
    resp = tuple(acts)
    v = (float(u[leader]),) + tuple(float(u[j]) for j in followers)
    return Commitment(float(s1), resp, v, len(eq))


def _golden_max(f, lo, hi, tol):
    """Golden-section search that returns the best point evaluated."""
    g = (math.sqrt(5) - 1) / 2
    best = max(((lo, f(lo)), (hi, f(hi))), key=lambda t: t[1])
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        for p in ((c, fc), (d, fd)):
            if p[1] > best[1]:
                best = p
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    for p in ((c, fc), (d, fd)):
        if p[1] > best[1]:
            best = p
    return best


def stackelberg(
    alpha,
    leader: int = 0,
    grid_step: float = 1e-3,
    mode: str | None = None,
    variant_game: str = "literal",
    prop=None,
    variant=None,
    refine_tol: float = 1e-5,
) -> StackelbergResult:
    """Optimal leader commitment in the partition game.

    ``mode="sse"`` (two miners) lets the follower break ties for the leader;
    ``mode="pessimistic"`` picks the followers' worst PNE for the leader.
    """
    alpha, prop, variant = _setup(alpha, prop, variant)
    m = alpha.m
    if mode is None:
        mode = "sse" if m == 2 else "pessimistic"
    if mode not in ("sse", "pessimistic"):
        raise DomainError(f"unknown stackelberg mode {mode!r}")
    if mode == "sse" and m != 2:
        raise DomainError("two-player SSE needs exactly 2 miners; use pessimistic mode")
    if m < 2 or m > MAX_GAME_MINERS:
        raise SizeLimitError(f"stackelberg needs 2..{MAX_GAME_MINERS} miners")
    if not 1e-4 <= grid_step <= 1e-2:
        raise DomainError("grid_step must lie in [1e-4, 1e-2]")
    if not 0 <= leader < m:
        raise DomainError(f"leader index {leader} outside 0..{m - 1}")

    def ev(s1):
        return _commit(alpha, leader, float(np.clip(s1, 0.0, 1.0)), mode, variant_game, prop, variant)

    n = int(round(1.0 / grid_step))
    grid = [ev(k / n) for k in range(n + 1)]
    no_pne = [c.s1 for c in grid if c.response is None]
    vals = np.array([c.value for c in grid])
    if not np.isfinite(vals).any():
        raise NumericalError("no commitment admits a follower equilibrium")
    k = int(np.argmax(vals))
    cands = list(grid)

    # refine in the best cell, including any follower switch point in it
    lo, hi = max(k - 1, 0) / n, min(k + 1, n) / n
    memo = {}

    def f(s1):
        c = memo.get(s1)
        if c is None:
            c = memo[s1] = ev(s1)
        return c.value

    s_best, _ = _golden_max(f, lo, hi, refine_tol)
    cands.extend(memo.values())
    cands.extend(_switch_points(ev, alpha, leader, lo, hi, grid[max(k - 1, 0)], grid[min(k + 1, n)], variant_game, prop, variant, mode))

    top = max(c.value for c in cands)
    optimal = [c for c in cands if c.value >= top - INDIFF_TOL]
    optimal = _dedupe(optimal)
    best = max(optimal, key=lambda c: (c.value, -abs(c.s1 - s_best)))
    gap = None
    if mode == "sse":
        br = best_response(alpha, 1 - leader, _full(m, leader, best.s1), variant_game, prop, variant)
        gap = abs(br.u_honest - br.u_ssm)
    return StackelbergResult(best, optimal, no_pne, gap, mode)


def _full(m, leader, s1):
    s = [0.0] * m
    s[leader] = s1
    return s


def _switch_points(ev, alpha, leader, lo, hi, c_lo, c_hi, variant_game, prop, variant, mode):
    """Commitments where a lone follower becomes indifferent inside ``[lo, hi]``."""
    if alpha.m != 2:
        return []
    j = 1 - leader

    def gap(s1):
        br = best_response(alpha, j, _full(2, leader, s1), variant_game, prop, variant)
        return br.u_ssm - br.u_honest

    pts = np.linspace(lo, hi, 9)
    out = []
    for a, b in sign_changes(gap, list(pts)):
        root = brentq(gap, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        out.append(ev(root))
    return out


def _dedupe(cs):
    out = []
    for c in sorted(cs, key=lambda c: c.s1):
        if out and abs(out[-1].s1 - c.s1) <= ENDPOINT_TOL and out[-1].response == c.response:
            continue
        out.append(c)
    return out


def _snap(s1):
    if s1 <= ENDPOINT_TOL:
        return 0
    if s1 >= 1 - ENDPOINT_TOL:
        return 1
    return None


def commitment_type(alpha, sse: StackelbergResult | None = None, pne=None, prop=None, variant=None, variant_game="literal") -> int:
    """Classify how the leader's optimal commitments relate to the binary PNE."""
    alpha, prop, variant = _setup(alpha, prop, variant)
    sse = sse or stackelberg(alpha, prop=prop, variant=variant, variant_game=variant_game)
    pne = pne if pne is not None else enumerate_pne(alpha, prop, variant)
    pne_set = {x.actions for x in pne}
    sse_set = set()
    binary_ok = False
    for c in sse.optimal:
        e = _snap(c.s1)
        if e is None:
            sse_set.add(("interior", round(c.s1, 6)) + tuple(c.response))
            continue
        binary_ok = True
        # the leader is miner 0, followers keep their order
        sse_set.add((e,) + tuple(c.response))
    if sse_set == pne_set:
        return 0
    if sse_set < pne_set:
        return 1
    return 2 if binary_ok else 3


def penalizing_coalitions(alpha, victim: int = 0, prop=None, variant=None, table=None):
    """Coalitions that punish ``victim`` for a profitable unilateral SSM deviation."""
    alpha, prop, variant = _setup(alpha, prop, variant)
    m = alpha.m
    if not 0 <= victim < m:
        raise DomainError(f"victim index {victim} outside 0..{m - 1}")
    table = table or utility_table(alpha, prop, variant)

    def chi(members):
        return StrategyProfile(tuple(int(i in members) for i in range(m))).label

    base = table[chi(())][victim]
    if not table[chi((victim,))][victim] > base:
        return []
    others = [i for i in range(m) if i != victim]
    out = []
    for r in range(1, len(others) + 1):
        for C in itertools.combinations(others, r):
            full = (victim,) + C
            u = table[chi(full)]
            if not u[victim] < base:
                continue
            if all(u[i] > table[chi(tuple(k for k in full if k != i))][i] for i in C):
                out.append((C, float(base - u[victim])))
    return out


# -- uniform profitability threshold -----------------------------------------


@dataclass
class ThresholdReport:
    m: int
    eta: float | None
    welfare_ssm: tuple[float, ...] | None = None
    welfare_honest: tuple[float, ...] | None = None
    gain_below: float | None = None
    gain_above: float | None = None
    crossings: list[tuple[float, float]] = field(default_factory=list)


def all_ssm_gain(m: int, eta: float, prop=None, variant=None) -> float:
    """Advantage of SSM over a unilateral switch to honest when all ``m`` miners use SSM at ``eta``."""
    alpha = HashDistribution([eta] * m)
    u_all = ssm_game_utilities(alpha, (1,) * m, prop, variant)[0]
    u_dev = ssm_game_utilities(alpha, (0,) + (1,) * (m - 1), prop, variant)[0]
    return float(u_all - u_dev)


def uniform_profitability_threshold(m: int, tol: float = 1e-6, prop=None, variant=None, step=0.005) -> ThresholdReport:
    """Smallest symmetric hash rate at which all-SSM is a PNE for ``m`` miners."""
    if not 1 <= m <= MAX_GAME_MINERS:
        raise SizeLimitError(f"threshold search supports 1..{MAX_GAME_MINERS} miners")
    top = min(0.5, (1.0 - 1e-9) / m)
    grid = list(np.round(np.arange(step, top, step), 12))
    if grid[-1] < top:
        grid.append(top)

    def g(e):
        return all_ssm_gain(m, e, prop, variant) + STRICT_TOL

    crossings = sign_changes(g, grid)
    if len(crossings) > 1:
        raise NumericalError(f"all-SSM condition changes sign {len(crossings)} times for M={m}: {crossings}")
    if g(grid[0]) >= 0:
        lo, hi = 0.0, grid[0]
        eta = 0.0
    elif not crossings:
        return ThresholdReport(m, None, crossings=crossings)
    else:
        lo, hi = crossings[0]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if g(mid) >= 0:
                hi = mid
            else:
                lo = mid
        eta = hi
    alpha = HashDistribution([eta] * m) if eta > 0 else None
    w_s = w_h = None
    if alpha is not None:
        w_s = tuple(float(v) for v in ssm_game_utilities(alpha, (1,) * m, prop, variant))
        w_h = tuple(float(v) for v in ssm_game_utilities(alpha, (0,) * m, prop, variant))
    return ThresholdReport(
        m,
        float(eta),
        w_s,
        w_h,
        gain_below=g(lo) - STRICT_TOL if lo > 0 else None,
        gain_above=g(hi) - STRICT_TOL,
        crossings=crossings,
    )


def analyze(alpha, prop=None, variant=None, with_sse=True) -> EquilibriumReport:
    """Utility table, PNE, SSE, commitment type and coalitions against miner 1."""
    alpha, prop, variant = _setup(alpha, prop, variant)
    table = utility_table(alpha, prop, variant)
    pne = enumerate_pne(alpha, table=table)
    rep = EquilibriumReport(alpha.alphas, pne, {k: tuple(map(float, v)) for k, v in table.items()})
    if with_sse and alpha.m >= 2:
        rep.sse = stackelberg(alpha, prop=prop, variant=variant)
        rep.commitment_type = commitment_type(alpha, rep.sse, pne, prop, variant)
    rep.coalitions = penalizing_coalitions(alpha, 0, prop, variant, table)
    return rep
