"""Tie-splitting models: how much of each miner's hash goes to each branch of a tie.

Miners are indexed ``0..M-1`` (strategic) and ``M`` (the honest pool).  A tie is
described by the sorted tuple ``D`` of miners whose blocks sit on the public
frontier.  ``weights(D, i, m)`` returns miner ``i``'s split over the members of
``D``, in the order of ``D``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DomainError, PropagationTableError

TOL = 1e-9


@dataclass(frozen=True)
class PropagationModel:
    """``kind`` is one of ``"uniform"``, ``"gamma"`` or ``"table"``.

    uniform
        A strategic tie participant mines its own branch; everyone else,
        including the honest pool when it owns a branch, splits evenly.
    gamma
        The one-attacker parametrisation: the honest pool sends a fraction
        ``gamma`` of its hash to strategic branches (evenly) and keeps the rest
        on its own branch.  Ties without an honest branch fall back to uniform.
    table
        Explicit weights keyed by tie set; rows for miners not listed default
        to the uniform rule.
    """

    kind: str = "uniform"
    gamma: float | None = None
    table: Mapping[tuple[int, ...], Mapping[int, tuple[float, ...]]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        if self.kind not in ("uniform", "gamma", "table"):
            raise DomainError(f"unknown propagation kind {self.kind!r}")
        if self.kind == "gamma":
            if self.gamma is None or not 0.0 <= self.gamma <= 1.0:
                raise DomainError("gamma must lie in [0, 1]")

    @classmethod
    def uniform(cls) -> "PropagationModel":
        return cls("uniform")

    @classmethod
    def two_way(cls, gamma: float) -> "PropagationModel":
        return cls("gamma", gamma=float(gamma))

    @property
    def label(self) -> str:
        if self.kind == "gamma":
            return f"gamma={self.gamma:g}"
        return self.kind

    def weights(self, D: tuple[int, ...], i: int, m: int) -> np.ndarray:
        """Miner ``i``'s hash split over the branches of tie ``D`` (honest = ``m``)."""
        D = tuple(D)
        if not D:
            raise DomainError("empty tie set")
        if any(j < 0 or j > m for j in D) or not 0 <= i <= m:
            raise DomainError(f"tie {D} or miner {i} outside 0..{m}")
        if i in D and i != m:
            return np.array([1.0 if j == i else 0.0 for j in D])
        if self.kind == "table":
            rows = self.table.get(D)
            if rows is None:
                raise PropagationTableError(f"no propagation entry for tie {_key(D, m)}")
            if i in rows:
                return np.asarray(rows[i], dtype=float)
        if self.kind == "gamma" and i == m and m in D and len(D) > 1:
            others = [j for j in D if j != m]
            w = [self.gamma / len(others) if j != m else 1.0 - self.gamma for j in D]
            return np.asarray(w)
        return np.full(len(D), 1.0 / len(D))


def _key(D, m):
    return ",".join("H" if j == m else str(j + 1) for j in D)


def _parse_member(tok: str, m: int, where: str) -> int:
    tok = tok.strip()
    if tok.upper() == "H":
        return m
    try:
        j = int(tok)
    except ValueError:
        raise PropagationTableError(f"{where}: bad miner label {tok!r}") from None
    if not 1 <= j <= m:
        raise PropagationTableError(f"{where}: miner {j} outside 1..{m}")
    return j - 1


def _line_of(text: str, needle: str) -> int:
    for n, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return n
    return 0


def parse_table(text: str, m: int) -> PropagationModel:
    """Parse a JSON propagation table for ``m`` strategic miners.

    Keys are comma-joined sorted tie members (``"1,3,H"``); values map a miner
    label to its weights over the tie members in key order.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PropagationTableError(f"line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise PropagationTableError("line 1: top level must be an object")
    table = {}
    for key, rows in raw.items():
        where = f"line {_line_of(text, json.dumps(key))}"
        D = tuple(_parse_member(t, m, where) for t in key.split(","))
        if list(D) != sorted(set(D)):
            raise PropagationTableError(f"{where}: tie key {key!r} must be sorted and distinct")
        if not isinstance(rows, dict):
            raise PropagationTableError(f"{where}: value for {key!r} must be an object")
        parsed = {}
        for label, w in rows.items():
            i = _parse_member(label, m, where)
            w = np.asarray(w, dtype=float)
            if w.shape != (len(D),):
                raise PropagationTableError(
                    f"{where}: row {label!r} of tie {key!r} needs {len(D)} weights"
                )
            if (w < 0).any() or abs(w.sum() - 1.0) > TOL:
                raise PropagationTableError(
                    f"{where}: row {label!r} of tie {key!r} must be nonnegative and sum to 1"
                )
            if i in D and i != m and abs(w[D.index(i)] - 1.0) > TOL:
                raise PropagationTableError(
                    f"{where}: strategic miner {label} must mine its own branch in tie {key!r}"
                )
            parsed[i] = tuple(w)
        table[D] = parsed
    return PropagationModel("table", table=table)


def parse_prop(spec: str, m: int) -> PropagationModel:
    """Parse a CLI ``--prop`` value: ``uniform``, ``gamma=G`` or ``table=FILE``."""
    if spec == "uniform":
        return PropagationModel.uniform()
    if spec.startswith("gamma="):
        try:
            g = float(spec[6:])
        except ValueError:
            raise DomainError(f"bad gamma in {spec!r}") from None
        return PropagationModel.two_way(g)
    if spec.startswith("table="):
        with open(spec[6:], encoding="utf-8") as fh:
            return parse_table(fh.read(), m)
    raise DomainError(f"unknown propagation {spec!r}")
