"""The unified step interface: transitions, terminal detection, outcomes,
and the replay-determinism property that storage relies on."""

import random

import pytest

from gamearena.errors import IllegalAllocation, IllegalMove
from gamearena.games.engine import (
    actors,
    forfeit_outcome,
    game_step,
    init_state,
    outcome,
)
from gamearena.games.spy import SpyPhase
from gamearena.games.types import BinaryAction, GameKind, MatchConfig

C, D = BinaryAction.COOPERATE, BinaryAction.DEFECT


def play_out(config, chooser):
    """Run a match by asking `chooser(state, player)` for every action."""
    state = init_state(config)
    results = []
    while not state.is_terminal():
        joint = {p: chooser(state, p) for p in actors(state)}
        state, result = game_step(state, joint)
        results.append(result)
    return state, results


class TestMatrixGames:
    def test_pd_round_accumulates(self):
        config = MatchConfig(game=GameKind.PRISONERS_DILEMMA, rounds=5, rng_seed=1)
        state = init_state(config)
        for _ in range(2):
            state, _ = game_step(state, {0: C, 1: C})
        # round 3 of 5: (C, D) adds (0, 5)
        before = state.payoffs
        state, result = game_step(state, {0: C, 1: D})
        assert result.payoffs == (0, 5)
        assert state.payoffs == (before[0], before[1] + 5)
        assert state.round_no == 4
        assert not state.is_terminal()

    def test_terminal_after_configured_rounds(self):
        config = MatchConfig(game=GameKind.PRISONERS_DILEMMA, rounds=3)
        state, results = play_out(config, lambda s, p: D)
        assert state.is_terminal()
        assert len(results) == 3
        assert outcome(state).scores == (0.5, 0.5)

    def test_trust_single_round(self):
        config = MatchConfig(game=GameKind.TRUST_GAME, rounds=1)
        state, _ = game_step(init_state(config), {0: C, 1: D})
        assert state.payoffs == (-1, 2)
        final = outcome(state)
        assert final.scores == (0.0, 1.0)
        assert final.payoffs == (-1, 2)

    def test_actions_recorded_with_game_labels(self):
        config = MatchConfig(game=GameKind.TRUST_GAME, rounds=1)
        _, result = game_step(init_state(config), {0: C, 1: D})
        assert result.actions == {0: "cooperate", 1: "cheat"}

    def test_step_after_terminal_rejected(self):
        config = MatchConfig(game=GameKind.TRUST_GAME, rounds=1)
        state, _ = game_step(init_state(config), {0: C, 1: C})
        with pytest.raises(IllegalMove):
            game_step(state, {0: C, 1: C})


class TestNimGame:
    def test_terminal_move_marks_winner(self):
        config = MatchConfig(game=GameKind.NIM, initial_piles=(1,), rng_seed=3)
        state = init_state(config)
        assert actors(state) == [0]
        state, result = game_step(state, {0: (0, 1)})
        assert state.is_terminal()
        assert result.info["winner"] == 0
        assert result.payoffs == (1, 0)
        assert outcome(state).scores == (1.0, 0.0)

    def test_turns_alternate(self):
        config = MatchConfig(game=GameKind.NIM, initial_piles=(2, 2))
        state = init_state(config)
        state, _ = game_step(state, {0: (0, 1)})
        assert actors(state) == [1]

    def test_illegal_move_carries_the_offender(self):
        config = MatchConfig(game=GameKind.NIM, initial_piles=(2, 2))
        state = init_state(config)
        state, _ = game_step(state, {0: (0, 2)})
        with pytest.raises(IllegalMove) as excinfo:
            game_step(state, {1: (0, 3)})
        assert excinfo.value.offender == 1


class TestDictatorGame:
    def test_roles_alternate(self):
        config = MatchConfig(game=GameKind.DICTATOR, rounds=4, endowment=100)
        state = init_state(config)
        seen = []
        while not state.is_terminal():
            dictator = actors(state)[0]
            seen.append(dictator)
            state, result = game_step(state, {dictator: 70})
            assert result.payoffs[dictator] == 70
            assert result.payoffs[1 - dictator] == 30
        assert seen == [0, 1, 0, 1]
        assert outcome(state).scores == (0.5, 0.5)

    def test_single_round_dictator_is_player_zero(self):
        config = MatchConfig(game=GameKind.DICTATOR, rounds=1, endowment=10)
        state = init_state(config)
        assert actors(state) == [0]
        state, _ = game_step(state, {0: 10})
        assert outcome(state).scores == (1.0, 0.0)

    def test_over_allocation(self):
        config = MatchConfig(game=GameKind.DICTATOR, rounds=1, endowment=100)
        with pytest.raises(IllegalAllocation) as excinfo:
            game_step(init_state(config), {0: 101})
        assert excinfo.value.offender == 0


class TestSpyGame:
    def config(self, seed=11):
        return MatchConfig(
            game=GameKind.WHO_IS_SPY, player_count=6, word_pair=("ocean", "lake"), rng_seed=seed
        )

    def test_describe_phase_flips_to_vote(self):
        state = init_state(self.config())
        joint = {p: f"hint{p}" for p in actors(state)}
        state, result = game_step(state, joint)
        assert state.spy.phase == SpyPhase.VOTE
        assert result.info["phase"] == "describe"
        assert result.info["eliminated"] == []

    def test_alive_count_drops_by_one_per_vote(self):
        state = init_state(self.config())
        state, _ = game_step(state, {p: f"hint{p}" for p in actors(state)})
        alive_before = len(state.spy.alive_players())
        target = [p for p in state.spy.alive_players() if p != 0][0]
        state, result = game_step(state, {p: target for p in state.spy.alive_players() if p != target})
        assert len(state.spy.alive_players()) == alive_before - 1
        assert result.info["phase"] == "vote"
        assert result.info["eliminated"] == [target]

    def test_finished_match_reports_winners(self):
        config = self.config(seed=5)
        rng = random.Random(0)

        def chooser(state, player):
            if state.spy.phase == SpyPhase.DESCRIBE:
                return f"w{rng.randrange(3)}"
            targets = [p for p in state.spy.alive_players() if p != player]
            return rng.choice(targets)

        state, _ = play_out(config, chooser)
        final = outcome(state)
        assert final.winners is not None and final.winners
        spy = final.info["spy"]
        if spy in final.winners:
            assert final.winners == frozenset({spy})
        else:
            assert spy not in final.winners


class TestDeterminism:
    @pytest.mark.parametrize("seed", range(6))
    def test_replaying_actions_reproduces_everything(self, seed):
        rng = random.Random(seed)
        config = MatchConfig(
            game=rng.choice(list(GameKind)),
            rounds=rng.randint(1, 6),
            player_count=5 if rng.random() < 0.5 else 4,
            rng_seed=seed,
        )
        if config.game != GameKind.WHO_IS_SPY:
            config = MatchConfig(
                game=config.game, rounds=config.rounds, player_count=2, rng_seed=seed
            )

        def chooser(state, player):
            if config.game in (GameKind.PRISONERS_DILEMMA, GameKind.TRUST_GAME):
                return rng.choice([C, D])
            if config.game == GameKind.NIM:
                from gamearena.games.nim import nim_legal_moves

                return rng.choice(nim_legal_moves(state.nim))
            if config.game == GameKind.DICTATOR:
                return rng.randint(0, config.endowment)
            if state.spy.phase == SpyPhase.DESCRIBE:
                return f"t{rng.randrange(3)}"
            return rng.choice([p for p in state.spy.alive_players() if p != player])

        state, results = play_out(config, chooser)
        # replay the recorded joint actions: identical states and payoffs
        replay_state = init_state(config)
        for recorded in results:
            joint = {}
            for p, wire in recorded.actions.items():
                if config.game in (GameKind.PRISONERS_DILEMMA, GameKind.TRUST_GAME):
                    from gamearena.games.types import binary_action_from_wire

                    joint[p] = binary_action_from_wire(config.game, wire)
                elif config.game == GameKind.NIM:
                    joint[p] = tuple(wire)
                else:
                    joint[p] = wire
            replay_state, replay_result = game_step(replay_state, joint)
            assert replay_result.payoffs == recorded.payoffs
            assert replay_result.info == recorded.info
        assert replay_state == state
        assert outcome(replay_state) == outcome(state)

    def test_two_player_scores_sum_to_one(self):
        for seed in range(10):
            config = MatchConfig(game=GameKind.PRISONERS_DILEMMA, rounds=3, rng_seed=seed)
            rng = random.Random(seed)
            state, _ = play_out(config, lambda s, p: rng.choice([C, D]))
            assert sum(outcome(state).scores) == 1.0

    def test_forfeit_outcome_awards_the_opponent(self):
        config = MatchConfig(game=GameKind.PRISONERS_DILEMMA, rounds=3)
        state = init_state(config)
        final = forfeit_outcome(state, offender=1, reason="TimeoutForfeit")
        assert final.scores == (1.0, 0.0)
        assert final.info["forfeit"] == 1
