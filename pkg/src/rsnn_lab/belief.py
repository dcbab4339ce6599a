"""Mass and belief functions on a budget of focal sets.

A mass function assigns non-negative weight summing to one across the budget.
Belief sums mass over contained budget sets, and the restricted Moebius
transform inverts that sum over budget members only: on a full powerset the
two are the classical pair, on a narrower budget they are each other's
companions by construction and the roundtrip identity is only guaranteed on
full powersets.

Predicted quantities (network outputs, lower-probability transforms) routinely
leave this clean world: masses go negative or fail to normalize. Those values
are representable here on purpose — `repair_mass` is the single gate back to
validity, and operations that need a valid mass say so via `InvalidMass`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidMass, LengthMismatch, OutOfRange
from .frame import Budget, FocalSet, containment_matrix, subset_matrix

MASS_TOL = 1e-9


def _as_float_vector(values, expected: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != expected:
        raise LengthMismatch(f"{what} needs {expected} entries, got shape {arr.shape}")
    out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MassFunction:
    """Mass values over a budget; may be invalid until repaired."""

    budget: Budget
    masses: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "masses", _as_float_vector(self.masses, self.budget.size, "mass vector")
        )
        if not np.all(np.isfinite(self.masses)):
            raise InvalidMass("mass values must be finite")

    @property
    def n(self) -> int:
        return self.budget.n

    def is_valid(self, tol: float = MASS_TOL) -> bool:
        return bool(np.all(self.masses >= -tol) and abs(float(self.masses.sum()) - 1.0) <= tol)

    def require_valid(self, tol: float = MASS_TOL) -> "MassFunction":
        if not self.is_valid(tol):
            raise InvalidMass(
                f"mass function invalid: min={self.masses.min():.3g}, "
                f"sum={self.masses.sum():.17g}"
            )
        return self


@dataclass(frozen=True)
class BeliefFunction:
    """Belief values over a budget.

    Beliefs derived from a valid mass are monotone under set inclusion;
    predicted beliefs need not be, which is why no monotonicity check
    happens here.
    """

    budget: Budget
    beliefs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "beliefs", _as_float_vector(self.beliefs, self.budget.size, "belief vector")
        )
        if not np.all(np.isfinite(self.beliefs)):
            raise OutOfRange("belief values must be finite")
        if np.any(self.beliefs < -MASS_TOL) or np.any(self.beliefs > 1.0 + MASS_TOL):
            raise OutOfRange("belief values must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.budget.n


def belief_from_mass(m: MassFunction) -> BeliefFunction:
    """Bel(A) as the sum of masses of budget sets contained in A."""
    m.require_valid()
    values = subset_matrix(m.budget).astype(float) @ m.masses
    return BeliefFunction(m.budget, np.clip(values, 0.0, 1.0))


def moebius_matrix(budget: Budget) -> np.ndarray:
    """The inverse of the budget's subset matrix, as an exact integer array.

    Row i holds the Moebius coefficients of the budget ordered by inclusion,
    so ``moebius_matrix(b) @ beliefs`` inverts ``belief_from_mass`` on any
    budget, full powerset or not. On a full powerset the entries reduce to
    the familiar alternating signs (−1)^|A_i ∖ A_j|. The map is linear,
    which the loss gradient relies on.

    The subset matrix is unitriangular once sets are sorted by
    (cardinality, bits), so forward substitution in that order stays in
    small integers and the float arithmetic is exact; the result is
    permuted back to the budget's own order.
    """
    order = np.lexsort((budget.bits_array(), budget.cardinalities()))
    zeta = subset_matrix(budget).astype(float)[np.ix_(order, order)]
    size = budget.size
    inverse = np.eye(size)
    for i in range(1, size):
        inverse[i, :i] = -zeta[i, :i] @ inverse[:i, :i]
    result = np.empty_like(inverse)
    result[np.ix_(order, order)] = inverse
    return np.rint(result)


def mass_from_belief(bel: BeliefFunction) -> MassFunction:
    """Restricted-lattice Moebius inverse; entries may be negative, caller repairs."""
    masses = moebius_matrix(bel.budget) @ bel.beliefs
    return MassFunction(bel.budget, masses)


def belief_of(m: MassFunction, focal: FocalSet) -> float:
    """Bel of an arbitrary set (not necessarily a budget member)."""
    if focal.n != m.n:
        raise OutOfRange("focal set and mass function use different frame sizes")
    bits = m.budget.bits_array()
    inside = (bits & np.uint64(~focal.bits & ((1 << m.n) - 1))) == 0
    return float(m.masses[inside].sum())


def plausibility(m: MassFunction, focal: FocalSet) -> float:
    """Pl(A) = 1 − Bel(complement of A)."""
    m.require_valid()
    complement_bits = (~focal.bits) & ((1 << m.n) - 1)
    if complement_bits == 0:
        return 1.0
    return 1.0 - belief_of(m, FocalSet(complement_bits, m.n))


def pignistic(m: MassFunction) -> np.ndarray:
    """Spread each focal set's mass uniformly over its members."""
    m.require_valid()
    shares = m.masses / m.budget.cardinalities()
    return containment_matrix(m.budget).astype(float).T @ shares


def encode_ground_truth(budget: Budget, true_class: int) -> np.ndarray:
    """Belief-space target: 1 for every budget set containing the true class."""
    if not 0 <= true_class < budget.n:
        raise OutOfRange(f"class index {true_class} outside 0..{budget.n - 1}")
    return np.array([1.0 if fs.contains(true_class) else 0.0 for fs in budget])


def repair_mass(budget: Budget, raw) -> MassFunction:
    """Clamp negatives, then restore normalization.

    A shortfall goes to the universal set (appended to the budget when absent);
    an excess is scaled away. Valid input comes back unchanged, which makes
    the operation idempotent.
    """
    from .errors import AllZero

    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.shape[0] != budget.size:
        raise LengthMismatch(f"raw masses need {budget.size} entries, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise InvalidMass("raw mass values must be finite")

    clamped = np.maximum(raw, 0.0)
    total = float(clamped.sum())
    if total <= 0.0:
        raise AllZero("every raw mass is ≤ 0; nothing to repair")
    if abs(total - 1.0) <= MASS_TOL:
        return MassFunction(budget, clamped)
    if total > 1.0:
        return MassFunction(budget, clamped / total)
    extended, universal_pos = budget.with_universal()
    masses = np.zeros(extended.size)
    masses[: clamped.shape[0]] = clamped
    masses[universal_pos] += 1.0 - total
    return MassFunction(extended, masses)
