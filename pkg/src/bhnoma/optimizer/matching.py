"""Sparse carrier patterns for the NOMA pairs of one beam.

Service units are the beam's NOMA pairs plus any users served alone. Both
users of a pair get the same pattern, so they always share a carrier, and the
units are kept mutually orthogonal whenever the carriers suffice. Otherwise
each unit gets one carrier on the least-loaded position, which keeps the
number of colliding users as small as possible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InfeasibleMatching


@dataclass
class Matching:
    beta: np.ndarray          # (n_users, K) int8, rows follow ``users``
    users: tuple              # local user indices, one row each
    pairs: tuple              # (center, edge) local indices
    solos: tuple              # local indices served alone
    demoted: tuple = ()       # pairs split into solos by a failed exchange


def unit_patterns(n_units: int, K: int, Q: int) -> list[list[int]]:
    """Carrier index sets for ``n_units`` service units.

    With ``n_units <= K`` the carriers are dealt out disjointly, at most Q
    each, lower unit indices receiving the spare carriers first. With more
    units than carriers every unit takes the currently least-used carrier
    (lowest index on ties).
    """
    if n_units == 0:
        return []
    if n_units <= K:
        sizes = [min(Q, K // n_units + (1 if u < K % n_units else 0)) for u in range(n_units)]
        out, start = [], 0
        for size in sizes:
            out.append(list(range(start, start + size)))
            start += size
        return out
    use = np.zeros(K, dtype=int)
    out = []
    for _ in range(n_units):
        k = int(np.argmin(use))
        use[k] += 1
        out.append([k])
    return out


def overlap_count(beta: np.ndarray, pairs) -> int:
    """Carrier collisions between users that are not NOMA partners.

    Every unordered pair of users counts the carriers both hold.
    """
    beta = np.asarray(beta, dtype=int)
    shared = beta @ beta.T
    total = int(np.triu(shared, 1).sum())
    for n, m in pairs:
        total -= int(shared[n, m])
    return total


def pair_overlap(beta, n, m) -> int:
    """Zero-norm of the elementwise product of the two patterns."""
    return int(np.count_nonzero(np.asarray(beta[n]) * np.asarray(beta[m])))


def match_subcarriers(pairs, solos, K: int, Q: int, n_users: int) -> Matching:
    """Build the carrier matrix for one beam.

    ``pairs`` and ``solos`` use local indices ``0..n_users-1``; pairs are
    taken as ordered by the caller (strongest first), which is also the order
    in which spare carriers are handed out.
    """
    units = [tuple(p) for p in pairs] + [(s,) for s in solos]
    patterns = unit_patterns(len(units), K, Q)
    beta = np.zeros((n_users, K), dtype=np.int8)
    for unit, pat in zip(units, patterns):
        for u in unit:
            beta[u, pat] = 1
    return Matching(beta=beta, users=tuple(range(n_users)), pairs=tuple(tuple(p) for p in pairs),
                    solos=tuple(solos))


def exchange_repair(beta, pairs, Q: int, locked: bool = False):
    """Give every pair a shared carrier.

    For a pair with no common carrier, the edge user takes the center user's
    first carrier, dropping its own last carrier if it is already at Q. With
    ``locked`` patterns no exchange is allowed and the first offending pair
    raises :class:`InfeasibleMatching`.
    """
    beta = np.array(beta, dtype=np.int8, copy=True)
    for n, m in pairs:
        if pair_overlap(beta, n, m) >= 1:
            continue
        if locked:
            raise InfeasibleMatching(f"pair ({n}, {m}) shares no carrier and patterns are fixed")
        k = int(np.flatnonzero(beta[n])[0]) if beta[n].any() else 0
        if not beta[n].any():
            beta[n, k] = 1
        if beta[m].sum() >= Q:
            beta[m, np.flatnonzero(beta[m])[-1]] = 0
        beta[m, k] = 1
    return beta


def demote_infeasible(beta, pairs, Q: int):
    """Keep the locked patterns; pairs without a common carrier become solos."""
    kept, demoted = [], []
    for n, m in pairs:
        try:
            exchange_repair(beta, [(n, m)], Q, locked=True)
            kept.append((n, m))
        except InfeasibleMatching:
            demoted.append((n, m))
    return kept, demoted
