"""Shared helpers for the test suite: random model data and brute oracles.

The random generators live in marketforge.selftest (the CLI battery needs
them at runtime) and are re-exported here.  The brute oracles recompute
conditional means and drifts by direct summation over outcomes, independent
of the library's conditional-expectation path, so the calculus operators
are checked against plain arithmetic.
"""

from marketforge.selftest import (  # noqa: F401  (re-exports for tests)
    rand_fraction,
    random_accessible_site,
    random_adapted,
    random_inaccessible_site,
    random_predictable,
    site_to_float,
)
from marketforge.space import PREDICTABLE, Process


def random_martingale(space, filtration, rng, dim=1):
    """Random martingale: center the increments of a random adapted process.

    Centering uses the brute compensator below, not the library's, so tests
    that feed martingales into library operators are not circular.
    """
    X = random_adapted(space, filtration, rng, dim=dim)
    drift = brute_compensator(X, filtration)
    return X - drift


def brute_cond_mean(space, filtration, t, values):
    """E[value | time-(t-1) atom] by direct summation; values per outcome."""
    part = filtration.at(t - 1)
    out = {}
    for atom in part.atoms:
        mass = sum(space.weight(o) for o in atom)
        dim = len(values[space.index(atom[0])])
        avg = tuple(
            sum(space.weight(o) * values[space.index(o)][j] for o in atom) / mass
            for j in range(dim)
        )
        for o in atom:
            out[o] = avg
    return out


def brute_compensator(X, filtration):
    """Predictable dual projection recomputed with raw sums."""
    space = X.space
    paths = []
    per_time = {}
    for t in range(1, X.horizon + 1):
        inc = [X.delta(o, t) for o in space.outcomes]
        per_time[t] = brute_cond_mean(space, filtration, t, inc)
    for o in space.outcomes:
        level = (0,) * X.dim
        path = [level]
        for t in range(1, X.horizon + 1):
            level = tuple(a + b for a, b in zip(level, per_time[t][o]))
            path.append(level)
        paths.append(tuple(path))
    return Process(space, tuple(paths), flavor=PREDICTABLE, shape=X.shape)
