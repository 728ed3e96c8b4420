"""Episode container shared by the critic and the agents."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Trajectory:
    """Ordered transitions of one episode.

    ``terminals[t]`` is True when the environment ended the episode at step
    t; a horizon cut leaves it False so that value targets bootstrap from
    the final state.
    """

    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    next_states: list = field(default_factory=list)
    terminals: list = field(default_factory=list)

    def append(self, state, action, reward, next_state, terminal):
        self.states.append(np.asarray(state, dtype=float))
        self.actions.append(np.asarray(action, dtype=float))
        self.rewards.append(float(reward))
        self.next_states.append(np.asarray(next_state, dtype=float))
        self.terminals.append(bool(terminal))

    def __len__(self):
        return len(self.rewards)

    @property
    def episode_return(self):
        return float(sum(self.rewards))

    def state_array(self):
        return np.stack(self.states)

    def action_array(self):
        return np.stack(self.actions)
