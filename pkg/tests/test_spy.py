import itertools

import pytest

from gamearena.errors import ConfigError, IllegalVote
from gamearena.games.spy import (
    Role,
    SpyPhase,
    SpyState,
    apply_descriptions,
    apply_votes,
    spy_check_win,
    spy_init,
    spy_tally_votes,
)
from gamearena.games.types import GameKind, MatchConfig


def spy_config(players=6, words=("ocean", "lake"), seed=7):
    return MatchConfig(
        game=GameKind.WHO_IS_SPY, player_count=players, word_pair=words, rng_seed=seed
    )


def make_state(roles, alive=None, phase=SpyPhase.DESCRIBE, round_no=1):
    roles = tuple(roles)
    words = tuple("lake" if r == Role.SPY else "ocean" for r in roles)
    alive = tuple(alive) if alive is not None else (True,) * len(roles)
    return SpyState(roles=roles, words=words, alive=alive, phase=phase, round_no=round_no)


class TestInit:
    def test_exactly_one_spy(self):
        state = spy_init(spy_config(), seed=123)
        assert sum(1 for r in state.roles if r == Role.SPY) == 1
        assert all(state.alive)
        assert state.phase == SpyPhase.DESCRIBE and state.round_no == 1

    def test_words_follow_roles(self):
        state = spy_init(spy_config(), seed=9)
        for i, role in enumerate(state.roles):
            assert state.words[i] == ("lake" if role == Role.SPY else "ocean")

    def test_deterministic_per_seed(self):
        a = spy_init(spy_config(), seed=55)
        b = spy_init(spy_config(), seed=55)
        assert a == b

    def test_seed_actually_moves_the_spy(self):
        spies = {spy_init(spy_config(), seed=s).spy for s in range(40)}
        assert len(spies) == 6  # uniform-ish over all six seats

    def test_arity_bounds(self):
        with pytest.raises(ConfigError):
            spy_init(spy_config(players=3), seed=1)
        with pytest.raises(ConfigError):
            spy_init(spy_config(players=7), seed=1)

    def test_identical_words_rejected(self):
        with pytest.raises(ConfigError):
            spy_init(spy_config(words=("same", "Same")), seed=1)


class TestTally:
    def test_plurality_with_tie_goes_to_lowest_index(self):
        alive = (True, True, True, True)
        votes = [(1, 0), (2, 0), (3, 1), (0, 1)]
        assert spy_tally_votes(votes, alive) == 0

    def test_unanimity(self):
        alive = (True,) * 6
        votes = [(v, 5) for v in range(5)]
        assert spy_tally_votes(votes, alive) == 5

    def test_four_way_tie(self):
        alive = (True, True, True, True)
        votes = [(0, 1), (1, 0), (2, 3), (3, 2)]
        assert spy_tally_votes(votes, alive) == 0

    def test_no_votes_eliminates_lowest_alive(self):
        assert spy_tally_votes([], (False, True, True, True)) == 1

    def test_illegal_votes(self):
        alive = (True, True, False, True)
        with pytest.raises(IllegalVote):
            spy_tally_votes([(2, 0)], alive)  # dead voter
        with pytest.raises(IllegalVote):
            spy_tally_votes([(0, 2)], alive)  # dead target
        with pytest.raises(IllegalVote):
            spy_tally_votes([(1, 1)], alive)  # self-vote
        with pytest.raises(IllegalVote):
            spy_tally_votes([(0, 1), (0, 3)], alive)  # double vote
        with pytest.raises(IllegalVote):
            spy_tally_votes([(0, 1)], alive, require_all=True)  # missing voters

    def test_brute_force_recount_agrees(self):
        # compare against a direct max-count scan over many vote patterns
        alive = (True,) * 5
        voters = range(5)
        for assignment in itertools.product(range(5), repeat=5):
            votes = [(v, t) for v, t in zip(voters, assignment) if v != t]
            counts = {}
            for _, t in votes:
                counts[t] = counts.get(t, 0) + 1
            best = max(counts.values()) if counts else 0
            expected = min(
                (t for t in range(5) if counts.get(t, 0) == best), default=0
            )
            assert spy_tally_votes(votes, alive) == expected


class TestWinCondition:
    def test_spy_eliminated_means_civilians_win(self):
        state = make_state(
            [Role.CIVILIAN, Role.SPY, Role.CIVILIAN, Role.CIVILIAN],
            alive=[True, False, True, True],
        )
        assert spy_check_win(state) == frozenset({0, 2, 3})

    def test_two_civilians_left_means_spy_wins(self):
        # derived by enumerating the rule over every alive configuration below
        state = make_state(
            [Role.SPY] + [Role.CIVILIAN] * 5,
            alive=[True, True, True, False, False, False],
        )
        assert spy_check_win(state) == frozenset({0})

    def test_game_continues(self):
        state = make_state(
            [Role.SPY] + [Role.CIVILIAN] * 5,
            alive=[True, True, True, True, True, False],
        )
        assert spy_check_win(state) is None

    def test_rule_over_all_alive_configurations(self):
        for n in (4, 5, 6):
            roles = [Role.SPY] + [Role.CIVILIAN] * (n - 1)
            for mask in itertools.product([True, False], repeat=n):
                state = make_state(roles, alive=mask)
                winners = spy_check_win(state)
                alive_civs = sum(mask[1:])
                if not mask[0]:
                    assert winners == frozenset(range(1, n))
                elif alive_civs <= 2:
                    assert winners == frozenset({0})
                else:
                    assert winners is None


class TestPhases:
    def test_describe_then_vote(self):
        state = make_state([Role.SPY] + [Role.CIVILIAN] * 5)
        state, eliminated = apply_descriptions(
            state, {p: f"blah{p}" for p in range(6)}
        )
        assert eliminated == []
        assert state.phase == SpyPhase.VOTE
        assert len(state.descriptions) == 6

    def test_uttering_your_own_word_eliminates_you(self):
        state = make_state([Role.SPY] + [Role.CIVILIAN] * 5)
        texts = {p: "something" for p in range(6)}
        texts[2] = "  OCEAN "  # case-insensitive verbatim match
        state, eliminated = apply_descriptions(state, texts)
        assert eliminated == [2]
        assert not state.alive[2]

    def test_spy_self_exposure_finishes_the_game(self):
        state = make_state([Role.SPY] + [Role.CIVILIAN] * 5)
        texts = {p: "ok" for p in range(6)}
        texts[0] = "lake"
        state, eliminated = apply_descriptions(state, texts)
        assert eliminated == [0]
        assert state.phase == SpyPhase.FINISHED
        assert spy_check_win(state) == frozenset(range(1, 6))

    def test_vote_eliminates_exactly_one_and_recurses_phase(self):
        state = make_state([Role.SPY] + [Role.CIVILIAN] * 5, phase=SpyPhase.VOTE)
        alive_before = sum(state.alive)
        state, out = apply_votes(state, {1: 2, 2: 1, 3: 1, 4: 1, 5: 1, 0: 1})
        assert out == 1
        assert sum(state.alive) == alive_before - 1
        assert state.phase == SpyPhase.DESCRIBE and state.round_no == 2

    def test_voting_out_the_spy_finishes(self):
        state = make_state([Role.SPY] + [Role.CIVILIAN] * 3, phase=SpyPhase.VOTE)
        state, out = apply_votes(state, {1: 0, 2: 0, 3: 0, 0: 1})
        assert out == 0
        assert state.phase == SpyPhase.FINISHED
        assert spy_check_win(state) == frozenset({1, 2, 3})
