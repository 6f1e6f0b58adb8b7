"""Monte Carlo execution of honest, selfish (SM) and semi-selfish (SSM) miners.

The world is an explicit block tree.  Each step draws the miner that finds the
next block, applies that miner's find-block rule, then lets every automaton
react to public-chain changes until nobody publishes anything new.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import HashDistribution
from .errors import DomainError, SettlementError, SimulationError
from .propagation import PropagationModel

HONEST, SM, SSM = "honest", "sm", "ssm"
KINDS = (HONEST, SM, SSM)
GENESIS = 0
BATCH = 65536


@dataclass
class MinerAutomaton:
    index: int
    kind: str
    priv: list[int] = field(default_factory=list)
    seen: int = 0  # public height when this miner last looked

    def lead(self, world: "World") -> int:
        if not self.priv:
            return 0
        return world.height[self.priv[-1]] - self.seen


@dataclass
class SimResult:
    counts: np.ndarray
    shares: np.ndarray
    blocks: int
    seed: int
    kinds: tuple[str, ...]
    alphas: tuple[float, ...]
    settle_steps: int = 0

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "strategies": list(self.kinds),
            "blocks": self.blocks,
            "seed": self.seed,
            "counts": [int(c) for c in self.counts],
            "shares": [float(s) for s in self.shares],
            "settle_steps": self.settle_steps,
        }


class World:
    """Block tree, public frontier and one automaton per miner (honest pool last)."""

    def __init__(self, alpha: HashDistribution, kinds, prop: PropagationModel):
        self.alpha = alpha
        self.m = alpha.m
        self.prop = prop
        self.miners = [MinerAutomaton(i, k) for i, k in enumerate(kinds)]
        self.miners.append(MinerAutomaton(self.m, HONEST))
        self.parent = [-1]
        self.owner = [-1]
        self.height = [0]
        self.forced = [False]
        self.pub_height = 0
        self.frontier = [GENESIS]
        self._wcache = {}

    # -- tree ------------------------------------------------------------
    def _new_block(self, parent: int, owner: int, forced: bool) -> int:
        self.parent.append(parent)
        self.owner.append(owner)
        self.height.append(self.height[parent] + 1)
        self.forced.append(forced)
        return len(self.parent) - 1

    def _publish(self, blocks) -> bool:
        changed = False
        for b in blocks:
            h = self.height[b]
            if h > self.pub_height:
                self.pub_height = h
                self.frontier = [b]
                changed = True
            elif h == self.pub_height and b not in self.frontier:
                self.frontier.append(b)
                changed = True
        return changed

    # -- mining targets --------------------------------------------------
    def target(self, i: int, u: float) -> int:
        """Block miner ``i`` extends; ``u`` is a uniform draw used to split ties."""
        mnr = self.miners[i]
        if mnr.priv:
            return mnr.priv[-1]
        F = self.frontier
        if len(F) == 1:
            return F[0]
        owners = [self.owner[b] for b in F]
        if i in owners and i != self.m:
            return F[owners.index(i)]
        D = tuple(sorted(set(owners)))
        w = self._wcache.get((D, i))
        if w is None:
            w = np.cumsum(self.prop.weights(D, i, self.m))
            w = tuple(float(x) for x in w)
            self._wcache[(D, i)] = w
        k = 0
        while k < len(w) - 1 and u >= w[k]:
            k += 1
        return F[owners.index(D[k])]

    # -- dynamics --------------------------------------------------------
    def step(self, winner: int, u: float, forced: bool = False) -> None:
        """Apply one found block by ``winner`` and settle all reactions."""
        mnr = self.miners[winner]
        b = self._new_block(self.target(winner, u), winner, forced)
        published = False
        if mnr.kind == HONEST:
            published = self._publish([b])
        elif not mnr.priv:
            if len(self.frontier) > 1:
                published = self._publish([b])
            else:
                mnr.priv.append(b)
        else:
            mnr.priv.append(b)
            if mnr.kind == SSM and self.height[b] - mnr.seen > 2:
                oldest = mnr.priv.pop(0)
                published = self._publish([oldest])
        mnr.seen = self.pub_height
        if published:
            self._cascade()
        self._check(mnr)

    def _cascade(self) -> None:
        moved = True
        while moved:
            moved = False
            for mnr in self.miners:
                k = self.pub_height - mnr.seen
                if k == 0:
                    continue
                old_lead = mnr.lead(self)
                mnr.seen = self.pub_height
                if not mnr.priv:
                    continue
                if mnr.kind == SM and k <= max(old_lead - 2, 0):
                    prefix = [b for b in mnr.priv if self.height[b] <= self.pub_height]
                    del mnr.priv[: len(prefix)]
                    if self._publish(prefix):
                        moved = True
                else:
                    blocks, mnr.priv = mnr.priv, []
                    if self._publish(blocks):
                        moved = True
                mnr.seen = self.pub_height
                if moved:
                    break

    def _check(self, mnr: MinerAutomaton) -> None:
        if mnr.kind == SSM and mnr.lead(self) > 2:
            raise SimulationError(f"SSM miner {mnr.index + 1} reached lead {mnr.lead(self)}")
        if mnr.kind == HONEST and mnr.priv:
            raise SimulationError(f"honest miner {mnr.index + 1} holds private blocks")

    def max_lead(self) -> int:
        return max(m.lead(self) for m in self.miners)

    def settled(self) -> bool:
        return len(self.frontier) == 1 and not any(m.priv for m in self.miners)

    def main_chain_counts(self) -> np.ndarray:
        counts = np.zeros(self.m + 1, dtype=np.int64)
        b = self.frontier[0]
        while b != GENESIS:
            if not self.forced[b]:
                counts[self.owner[b]] += 1
            b = self.parent[b]
        return counts


def _rng(seed: int, replica: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replica,)))


def simulate(
    alpha,
    specs,
    prop: PropagationModel | None = None,
    n_blocks: int = 1_000_000,
    seed: int = 0,
    replica: int = 0,
    check_every: bool = True,
) -> SimResult:
    """Run ``n_blocks`` found blocks and count each miner's blocks on the final main chain.

    ``specs`` gives one strategy per strategic miner (``honest``, ``sm`` or
    ``ssm``); the last hash share is an implicit honest pool.
    """
    if not isinstance(alpha, HashDistribution):
        alpha = HashDistribution(alpha)
    kinds = tuple(s.lower() for s in specs)
    if len(kinds) != alpha.m:
        raise DomainError(f"{len(kinds)} strategies for {alpha.m} strategic miners")
    bad = [k for k in kinds if k not in KINDS]
    if bad:
        raise DomainError(f"unknown strategy {bad[0]!r}; expected one of {KINDS}")
    if n_blocks < 1:
        raise DomainError("n_blocks must be positive")
    prop = prop or PropagationModel.uniform()
    world = World(alpha, kinds, prop)
    rng = _rng(seed, replica)
    w = np.append(alpha.as_array(), alpha.beta)
    done = 0
    while done < n_blocks:
        size = min(BATCH, n_blocks - done)
        winners = rng.choice(len(w), size=size, p=w).tolist()
        us = rng.random(size).tolist()
        for win, u in zip(winners, us):
            world.step(win, u)
        done += size

    limit = 10 * max(world.max_lead(), 1) + 10
    honest = alpha.m
    extra = 0
    while not world.settled():
        if extra >= limit:
            raise SettlementError(f"forks not settled after {extra} honest blocks")
        world.step(honest, float(rng.random()), forced=True)
        extra += 1
    counts = world.main_chain_counts()
    total = counts.sum()
    shares = counts / total if total else np.zeros_like(counts, dtype=float)
    return SimResult(counts, shares, n_blocks, seed, kinds, alpha.alphas, extra)


def share_sigma(p: float, n_accepted: int) -> float:
    """Binomial standard error of an empirical share."""
    return math.sqrt(max(p * (1 - p), 0.0) / max(n_accepted, 1))
