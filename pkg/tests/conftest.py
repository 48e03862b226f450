"""Shared fixtures; heavy artifacts (ladders, fits, curves) are session-cached."""

import numpy as np
import pytest

import stochgames as sg
from stochgames import library

FIT_LADDER = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
VALUE_LADDER = (1e-2, 1e-3, 1e-4, 1e-5)


@pytest.fixture(scope="session")
def big_match():
    return library.big_match()


@pytest.fixture(scope="session")
def absorbing3():
    return library.absorbing3()


@pytest.fixture(scope="session")
def critical2():
    return library.critical2()


@pytest.fixture(scope="session")
def two_state():
    return library.two_state()


@pytest.fixture(scope="session")
def cycle3():
    return library.cycle3()


@pytest.fixture(scope="session")
def const5():
    return library.const5()


class Cache:
    """Memoizes ladders, fitted expansions and propagated curves per game."""

    def __init__(self):
        self.games = {name: fn() for name, fn in library.BUILTINS.items()}
        self._ladders = {}
        self._expansions = {}
        self._curves = {}
        self._values = {}

    def ladder(self, name):
        if name not in self._ladders:
            self._ladders[name] = sg.profile_ladder(self.games[name], FIT_LADDER)
        return self._ladders[name]

    def expansion(self, name):
        if name not in self._expansions:
            if name == "critical2":
                self._expansions[name] = library.critical2_canonical()[0]
            else:
                self._expansions[name] = sg.fit_expansion(self.ladder(name))
        return self._expansions[name]

    def limit_value(self, name):
        if name not in self._values:
            self._values[name] = sg.estimate_limit_value(self.games[name], VALUE_LADDER)
        return self._values[name]

    def curve(self, name, family, norm, grid_points=101):
        key = (name, family, norm, grid_points)
        if key not in self._curves:
            theta = sg.family_for_norm(family, norm)
            strat = self.expansion(name).strategies()
            grid = np.linspace(0.0, 1.0, grid_points)
            self._curves[key] = sg.propagate_exact(self.games[name], strat, theta, grid)
        return self._curves[key]


@pytest.fixture(scope="session")
def cache():
    return Cache()
