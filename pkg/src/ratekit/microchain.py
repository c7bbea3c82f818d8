"""Run-length chain of consecutive successes/failures at a single bit rate.

This is the absorbing chain behind every closed form in `arf`: position j > 0
counts consecutive successes, j < 0 consecutive failures, and the chain is
absorbed upward after s successes in a row or downward after f failures in a
row.  It is solved in exact rational arithmetic so that it can serve as an
independent oracle for the closed forms even where a float64 linear solve
would lose digits (absorption times reach 1/alpha^s).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Literal

Position = Literal["lowest", "interior", "highest"]

UP = "up"
DOWN = "down"


@dataclass(frozen=True)
class MicroChainSolution:
    """Exact absorption statistics of the run-length chain started at 0.

    Attributes
    ----------
    xbar : float
        Expected number of transmissions until absorption (each visit to a
        transient position is exactly one transmission).
    p_up : float
        Probability of absorbing upward (s-th consecutive success first).
    visits : dict[int, float]
        Expected number of visits to each run position, keyed by j.
    """

    xbar: float
    p_up: float
    visits: dict[int, float]


def chain_positions(s: int, f: int, position: Position) -> list[int]:
    """Transient run positions for a given macro-state position."""
    if position == "lowest":
        return list(range(0, s))
    if position == "highest":
        return list(range(-(f - 1), 1))
    return list(range(-(f - 1), s))


def _check_args(alpha: float, s: int, f: int, position: str) -> None:
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if s < 1 or f < 1:
        raise ValueError(f"thresholds must be >= 1, got s={s} f={f}")
    if position not in ("lowest", "interior", "highest"):
        raise ValueError(f"unknown position {position!r}")


def transitions(s: int, f: int, position: Position, j: int) -> Iterator[tuple[int | str, bool]]:
    """Yield (destination, is_success) for one transmission from position j.

    The destination is a run position, or UP/DOWN for absorption.  At the
    lowest rate failures merely reset the success run; at the highest rate
    successes merely reset the failure run.
    """
    if position == "lowest":
        yield (j + 1 if j + 1 < s else UP), True
        yield 0, False
        return
    if position == "highest":
        yield 0, True
        yield (j - 1 if j - 1 > -f else DOWN), False
        return
    if j >= 0:
        yield (j + 1 if j + 1 < s else UP), True
        yield (-1 if f > 1 else DOWN), False
    else:
        yield (1 if s > 1 else UP), True
        yield (j - 1 if j - 1 > -f else DOWN), False


def _solve_visits_exact(
    alpha: Fraction, s: int, f: int, position: Position
) -> tuple[list[int], list[Fraction], Fraction]:
    """Exact expected visits from entry 0 and the upward absorption mass.

    Solves (I - Q)^T y = e_0 by fraction-exact Gaussian elimination; the
    upward probability is the visit-weighted one-step absorption flux
    sum_j y_j * P(j -> up).
    """
    states = chain_positions(s, f, position)
    index = {j: k for k, j in enumerate(states)}
    n = len(states)
    one = Fraction(1)
    # Augmented system rows: row k is the balance equation of visits to
    # states[k]:  y_k - sum_j y_j Q[j, k] = e0_k.
    aug = [[Fraction(0)] * (n + 1) for _ in range(n)]
    up_flux = [Fraction(0)] * n
    for k in range(n):
        aug[k][k] = one
    for k, j in enumerate(states):
        for dest, is_success in transitions(s, f, position, j):
            prob = alpha if is_success else one - alpha
            if dest == UP:
                up_flux[k] += prob
            elif dest != DOWN:
                aug[index[dest]][k] -= prob
    aug[index[0]][n] = one

    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        if piv != col:
            aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(col + 1, n):
            if aug[r][col] != 0:
                factor = aug[r][col] / aug[col][col]
                row_r, row_c = aug[r], aug[col]
                for c in range(col, n + 1):
                    row_r[c] -= factor * row_c[c]
    visits = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = aug[r][n]
        row = aug[r]
        for c in range(r + 1, n):
            acc -= row[c] * visits[c]
        visits[r] = acc / row[r]
    p_up = sum((v * u for v, u in zip(visits, up_flux)), Fraction(0))
    return states, visits, p_up


def solve_micro_chain(alpha: float, s: int, f: int, position: Position) -> MicroChainSolution:
    """Solve the run-length chain exactly from entry position 0.

    Expected visits are the entry row of the fundamental matrix
    (I - Q)^-1; the expected transmission count is their sum.  The rational
    arithmetic keeps the result exact for the binary float alpha, so the
    only rounding is the final conversion of each quantity to float.
    """
    _check_args(alpha, s, f, position)
    states, visits, p_up = _solve_visits_exact(Fraction(alpha), s, f, position)
    return MicroChainSolution(
        xbar=float(sum(visits)),
        p_up=float(p_up),
        visits={j: float(v) for j, v in zip(states, visits)},
    )


def absorption_probabilities_by_enumeration(
    alpha: float, s: int, f: int, position: Position, max_depth: int
) -> tuple[float, float, float]:
    """Brute-force (p_up, p_down_immediate, p_down_other) by enumerating
    outcome sequences up to max_depth transmissions.

    `p_down_immediate` is the probability of absorbing downward with the
    first f transmissions all failing.  Truncated mass is left unassigned,
    so the three components sum to <= 1.  Test oracle only; exponential in
    max_depth.
    """
    _check_args(alpha, s, f, position)

    def walk(j: int, depth: int, prob: float, virgin: bool) -> tuple[float, float, float]:
        if depth >= max_depth or prob == 0.0:
            return 0.0, 0.0, 0.0
        up = down_imm = down_other = 0.0
        for dest, is_success in transitions(s, f, position, j):
            p = prob * (alpha if is_success else 1.0 - alpha)
            still_virgin = virgin and not is_success
            if dest == UP:
                up += p
            elif dest == DOWN:
                if still_virgin:
                    down_imm += p
                else:
                    down_other += p
            else:
                r = walk(dest, depth + 1, p, still_virgin)
                up, down_imm, down_other = up + r[0], down_imm + r[1], down_other + r[2]
        return up, down_imm, down_other

    return walk(0, 0, 1.0, True)
