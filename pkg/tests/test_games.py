import itertools

import numpy as np
import pytest

from ssmlab import games
from ssmlab.chain import HashDistribution
from ssmlab.closedform import ssm_relative_revenue
from ssmlab.errors import DomainError, SizeLimitError
from ssmlab.games import StrategyProfile

from conftest import random_alpha


def labels(ps):
    return {p.label for p in ps}


def test_profile_labels():
    x = StrategyProfile.from_label("HSS")
    assert x.actions == (0, 1, 1)
    assert x.flip(0).label == "SSS"
    with pytest.raises(DomainError):
        StrategyProfile.from_label("HX")
    with pytest.raises(DomainError):
        StrategyProfile((0, 2))


def test_all_honest_is_hash_share(rng):
    for m in (1, 2, 3, 4):
        a = random_alpha(rng, m)
        np.testing.assert_allclose(games.ssm_game_utilities(a, (0,) * m), a, atol=1e-15)


def test_lone_ssm_player_matches_single_miner_formula():
    a = (0.33, 0.48)
    u = games.ssm_game_utilities(a, (1, 0))
    assert u[0] == pytest.approx(ssm_relative_revenue(0.33, 0.5), abs=1e-12)
    # the honest strategic miner's cut of the honest pool
    r_h = 1 - ssm_relative_revenue(0.33, 0.5)
    assert u[1] == pytest.approx(0.48 / 0.67 * r_h, abs=1e-12)


@pytest.mark.parametrize(
    "alpha, profile, expected",
    [
        ((0.33, 0.48), "SH", (0.35517387, 0.46196499)),
        ((0.33, 0.48), "HS", (0.26794954, 0.57777649)),
        ((0.2, 0.225), "HS", (0.20352746, 0.21133109)),
        ((0.24, 0.24), "HS", (0.24293956, 0.23069139)),
    ],
)
def test_table_entries_with_one_ssm_player(alpha, profile, expected):
    u = games.ssm_game_utilities(alpha, StrategyProfile.from_label(profile))
    np.testing.assert_allclose(u, expected, atol=1e-8)


def test_pne_examples():
    assert labels(games.enumerate_pne((0.24, 0.24))) == {"HH", "SS"}
    assert labels(games.enumerate_pne((0.05, 0.05))) == {"HH"}


def test_pne_by_definition(rng):
    for _ in range(20):
        a = random_alpha(rng, 3, 0.8)
        table = games.utility_table(a)
        pne = labels(games.enumerate_pne(a, table=table))
        for lab, u in table.items():
            x = StrategyProfile.from_label(lab)
            stable = all(table[x.flip(i).label][i] <= u[i] + 1e-12 for i in range(3))
            assert stable == (lab in pne)


def test_partition_endpoints_match_binary_game(rng):
    for _ in range(10):
        a = random_alpha(rng, 3, 0.8)
        for acts in itertools.product((0, 1), repeat=3):
            binary = games.ssm_game_utilities(a, acts)
            for v in games.PARTITION_VARIANTS:
                np.testing.assert_allclose(games.partition_utilities(a, acts, v), binary, atol=1e-14)


def test_partition_variants_differ_inside():
    a = (0.3, 0.2)
    lit = games.partition_utilities(a, (0.5, 0.0), "literal")
    sc = games.partition_utilities(a, (0.5, 0.0), "share-consistent")
    assert lit[0] < sc[0]
    assert lit[1] == pytest.approx(sc[1])


def test_partition_convex_example():
    a = (0.46, 0.25)
    for other in (0.0, 0.5, 1.0):
        grid = np.linspace(0, 1, 101)
        u = np.array([games.partition_utilities(a, (s, other))[0] for s in grid])
        assert u[1:-1].max() < max(u[0], u[-1])
        assert (np.diff(u, 2) >= -1e-9).all()


def test_best_response_examples():
    br = games.best_response((0.33, 0.48), 1, (1.0, 0.0))
    assert br.action == 1
    assert br.u_ssm == pytest.approx(games.ssm_game_utilities((0.33, 0.48), (1, 1))[1])
    br = games.best_response((0.2, 0.225), 0, (0.0, 1.0))
    assert br.action == 0 and br.u_honest == pytest.approx(0.20352746, abs=1e-8)
    with pytest.raises(DomainError):
        games.best_response((0.2, 0.225), 2, (0.0, 1.0))


def test_stackelberg_dominant_honest():
    r = games.stackelberg((0.05, 0.05))
    assert r.best.s1 == 0.0 and r.best.response == (0,)
    assert r.best.value == pytest.approx(0.05)
    assert games.commitment_type((0.05, 0.05), r) == 0


def test_stackelberg_pareto_selection():
    a = (0.24, 0.24)
    r = games.stackelberg(a)
    assert r.best.s1 == 1.0 and r.best.response == (1,)
    assert games.commitment_type(a, r) == 1


def test_leader_value_bound(rng):
    for _ in range(5):
        a = random_alpha(rng, 2, 0.8)
        r = games.stackelberg(a, grid_step=1e-2)
        table = games.utility_table(a)
        pne = games.enumerate_pne(a, table=table)
        assert r.best.value >= min(table[x.label][0] for x in pne) - 1e-9


def test_pessimistic_three_miners():
    a = (0.2, 0.2, 0.2)
    r = games.stackelberg(a, grid_step=1e-2)
    assert r.mode == "pessimistic"
    assert r.best.response is not None and len(r.best.response) == 2
    t = games.commitment_type(a, r)
    assert t in (0, 1, 2, 3)


def test_stackelberg_argument_checks():
    with pytest.raises(DomainError):
        games.stackelberg((0.2, 0.2, 0.2), mode="sse")
    with pytest.raises(DomainError):
        games.stackelberg((0.2, 0.2), grid_step=0.5)
    with pytest.raises(SizeLimitError):
        games.utility_table([0.01] * 9)


def test_coalitions_examples():
    assert games.penalizing_coalitions((0.33, 0.48), 1) == []
    assert games.penalizing_coalitions((0.05, 0.05), 0) == []
    cs = games.penalizing_coalitions((0.33, 0.48), 0)
    assert [c for c, _ in cs] == [(1,)]
    assert all(p > 0 for _, p in cs)


def test_coalitions_by_definition(rng):
    for _ in range(10):
        a = random_alpha(rng, 3, 0.9)
        table = games.utility_table(a)
        found = dict(games.penalizing_coalitions(a, 0, table=table))
        for C in [(1,), (2,), (1, 2)]:
            full = (0,) + C

            def chi(s):
                return "".join("S" if i in s else "H" for i in range(3))

            ok = (
                table[chi((0,))][0] > table["HHH"][0]
                and all(table[chi(full)][i] > table[chi(tuple(k for k in full if k != i))][i] for i in C)
                and table[chi(full)][0] < table["HHH"][0]
            )
            assert ok == (C in found)


def test_threshold_single_miner():
    r = games.uniform_profitability_threshold(1)
    assert r.eta == pytest.approx(0.26795, abs=1e-3)
    assert r.gain_below < 0 <= r.gain_above + 1e-12


def test_threshold_two_miners_below_single():
    r1 = games.uniform_profitability_threshold(1).eta
    r2 = games.uniform_profitability_threshold(2)
    assert 0.2 < r2.eta < 0.27 and r2.eta < r1
    assert all(s > h for s, h in zip(r2.welfare_ssm, r2.welfare_honest))


def test_cache_is_consistent():
    games.clear_cache()
    a = HashDistribution((0.21, 0.33))
    u1 = games.ssm_game_utilities(a, (1, 1))
    u2 = games.ssm_game_utilities(a, (1, 1))
    np.testing.assert_array_equal(u1, u2)
