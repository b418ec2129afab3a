"""Instance generators: the lower-bound family and random benchmark instances.

Lower-bound family
------------------
One unit bin in ``d`` dimensions and ``n = delta * d**((delta+1)*d + 1)``
items, the columns of ``J = n / d`` matrices

    A_j = (1 - eps*j*d**j) * I + eps*j*d**(j-1) * (ones - I),   j = 1..J.

The columns of one matrix fit together; any two columns of different
matrices overflow some coordinate.  Every item independently has profit 1
with probability ``d**-(delta+1)``, else 0.

``eps`` is the exact rational ``1/(4*n*d**n)``.  All entries are kept as
integer numerators over the common denominator ``D = 1/eps`` so every check
is integer arithmetic.  In float-safe mode ``eps = 2**-40`` instead, which
is valid only while ``j*d**j < 2**39`` for every matrix index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import Instance, StructuralError, is_feasible

SIZE_LIMIT = 10**6
FLOAT_SAFE_EPS = Fraction(1, 2**40)


@dataclass(frozen=True)
class LowerBoundSpec:
    d: int
    delta: int
    epsilon: Fraction
    float_safe: bool = False

    @property
    def n(self) -> int:
        return self.delta * self.d ** ((self.delta + 1) * self.d + 1)

    @property
    def matrices(self) -> int:
        return self.delta * self.d ** ((self.delta + 1) * self.d)

    @property
    def profit_probability(self) -> Fraction:
        return Fraction(1, self.d ** (self.delta + 1))

    def check(self) -> None:
        """Raise unless eps*j*d**j < 1/2 for every matrix index j."""
        # j*d**j grows with j, so the last matrix is the binding one
        J = self.matrices
        if not self.epsilon * J * self.d ** J < Fraction(1, 2):
            raise StructuralError(
                f"eps = {self.epsilon} violates eps*j*d^j < 1/2 for d={self.d}, delta={self.delta}")


@dataclass
class LowerBoundInstance:
    spec: LowerBoundSpec
    instance: Instance  # m = 1 vmkp instance with the realised profits
    profits: np.ndarray
    denominator: int = field(repr=False)
    numerators: list = field(repr=False)  # numerators[k][t], item k, coordinate t
    _float_base: Instance | None = field(default=None, repr=False, compare=False)

    def matrix_of(self, k: int) -> int:
        """1-based matrix index of item ``k``."""
        return k // self.spec.d + 1

    def with_profits(self, profits) -> LowerBoundInstance:
        """Same weights, new profit realisation (weight-derived caches are shared)."""
        profits = np.asarray(profits, dtype=float)
        inst = _reprofit(self.instance, profits)
        return LowerBoundInstance(self.spec, inst, profits, self.denominator, self.numerators,
                                  self._float_base)

    def float_view(self) -> Instance:
        """The instance with every weight rounded to the nearest double.

        For large ``d**n`` the tiny perturbations round away and the columns
        become unit vectors.  Heaviness and single-item fit do not change
        (diagonals stay above 1/2 and at most 1), which is all the heavy
        phase of :func:`~ropack.online.run_vgap` looks at, and there are no
        light options; so a run on this view makes the same decisions as a
        run on the exact instance.  Packings should still be validated with
        :meth:`validate_packing`.
        """
        if not self.instance.exact:
            return self.instance
        if self._float_base is None:
            w = np.array([[v / self.denominator for v in row] for row in self.numerators])
            base = Instance.vmkp(1, w, np.zeros(len(w)))
            if not np.array_equal(base.heavy_mask(), self.instance.heavy_mask()) or \
                    not np.array_equal(base.fits_alone(), self.instance.fits_alone()):
                raise StructuralError("float view changes the option classes")
            self._float_base = base
        return _reprofit(self._float_base, self.profits)

    def validate_packing(self, packing) -> bool:
        """Exact feasibility of a packing computed on any view of this instance."""
        return is_feasible(self.instance, packing.pairs())


def _reprofit(instance: Instance, profits: np.ndarray) -> Instance:
    full = np.repeat(profits.reshape(-1, 1), instance.m, axis=1)
    inst = Instance(instance.capacities, instance.weights, full, instance.present,
                    instance.variant, instance.origin, validate=False)
    for key in ("heavy", "fits"):
        if key in instance._cache:
            inst._cache[key] = instance._cache[key]
    return inst


def lower_bound_spec(d: int, delta: int, float_safe: bool = False) -> LowerBoundSpec:
    if d < 2:
        raise StructuralError("the lower-bound construction needs d >= 2")
    if delta < 1:
        raise StructuralError("delta must be a positive integer")
    if d ** ((delta + 1) * d + 1) > SIZE_LIMIT:
        raise StructuralError(
            f"d^((delta+1)d+1) = {d}^{(delta + 1) * d + 1} exceeds size guard {SIZE_LIMIT}")
    n = delta * d ** ((delta + 1) * d + 1)
    eps = FLOAT_SAFE_EPS if float_safe else Fraction(1, 4 * n * d ** n)
    spec = LowerBoundSpec(d, delta, eps, float_safe)
    spec.check()
    return spec


def matrix_numerators(spec: LowerBoundSpec, j: int) -> tuple[int, int, int]:
    """``(D, diagonal, off_diagonal)`` numerators of A_j over D = 1/eps."""
    D = spec.epsilon.denominator
    scale = spec.epsilon.numerator
    d = spec.d
    return D, D - scale * j * d ** j, scale * j * d ** (j - 1)


def gen_lower_bound(d: int, delta: int, rng, float_safe: bool = False,
                    profits=None) -> LowerBoundInstance:
    """Build the lower-bound instance and draw (or take) its 0/1 profits.

    Items are the matrix columns in order: matrix ``j`` ascending, column
    index ascending.  Weights are floats when they are exactly
    representable (power-of-two denominator, small numerators) and
    Fractions otherwise.
    """
    spec = lower_bound_spec(d, delta, float_safe)
    n, J = spec.n, spec.matrices
    numerators = []
    D = spec.epsilon.denominator
    for j in range(1, J + 1):
        _, diag, off = matrix_numerators(spec, j)
        for c in range(d):
            numerators.append([diag if t == c else off for t in range(d)])
    if profits is None:
        profits = (rng.integers(0, d ** (delta + 1), size=n) == 0).astype(float)
    profits = np.asarray(profits, dtype=float).reshape(n)
    representable = D & (D - 1) == 0 and D.bit_length() <= 1000 and all(
        v < 2**53 for row in numerators for v in row)
    if representable:
        weights = np.array([[v / D for v in row] for row in numerators])
        assert all(Fraction(w) == Fraction(v, D) for w, v in zip(weights.flat, _flat(numerators)))
    else:
        weights = np.empty((n, d), dtype=object)
        for k, row in enumerate(numerators):
            for t, v in enumerate(row):
                weights[k, t] = Fraction(v, D)
    inst = Instance.vmkp(1, weights, profits)
    lb = LowerBoundInstance(spec, inst, profits, D, numerators)
    if inst.exact:
        lb.float_view()  # build and check the shared float weights once
    return lb


def _flat(rows):
    return [v for row in rows for v in row]


def _integer_weights(lb: LowerBoundInstance):
    """Weights as integer numerators over their lcm, read back from the instance."""
    fr = [[Fraction(w) for w in lb.instance.weights[k, 0]] for k in range(lb.instance.n)]
    den = 1
    for row in fr:
        for q in row:
            den = den * q.denominator // math.gcd(den, q.denominator)
    return den, [[q.numerator * (den // q.denominator) for q in row] for row in fr]


def verify_structure(lb: LowerBoundInstance, max_reports: int = 20) -> dict:
    """Exact check of the three structural claims on the emitted weights.

    (a) every matrix has row and column sums at most 1;
    (b) any two columns of different matrices overflow some coordinate;
    (c) the columns of one matrix fit together in the unit bin.
    Returns counts of checks and violations plus the first few violations.
    """
    d = lb.spec.d
    den, W = _integer_weights(lb)
    n = len(W)
    J = n // d
    report = {"checked": {"sums": 0, "cross_pairs": 0, "joint": 0},
              "violations": {"sums": 0, "cross_pairs": 0, "joint": 0},
              "examples": []}

    def note(kind, detail):
        report["violations"][kind] += 1
        if len(report["examples"]) < max_reports:
            report["examples"].append({"check": kind, **detail})

    for j in range(J):
        cols = W[j * d:(j + 1) * d]
        for c in range(d):
            report["checked"]["sums"] += 2
            if sum(cols[c]) > den:
                note("sums", {"matrix": j + 1, "column": c + 1})
            if sum(col[c] for col in cols) > den:
                note("sums", {"matrix": j + 1, "row": c + 1})
        report["checked"]["joint"] += 1
        for t in range(d):
            if sum(col[t] for col in cols) > den:
                note("joint", {"matrix": j + 1, "coordinate": t + 1})
    for a in range(n):
        wa = W[a]
        ja = a // d
        first = a % d
        for b in range((ja + 1) * d, n):
            wb = W[b]
            report["checked"]["cross_pairs"] += 1
            if wa[first] + wb[first] > den:
                continue
            if not any(wa[t] + wb[t] > den for t in range(d)):
                note("cross_pairs", {"items": [a + 1, b + 1],
                                     "matrices": [ja + 1, b // d + 1]})
    report["ok"] = not any(report["violations"].values())
    return report


def structural_opt(lb: LowerBoundInstance) -> float:
    """Optimum of a lower-bound instance whose structure has been verified.

    Only columns of a single matrix can share the bin, and all of them fit,
    so the optimum is the best matrix's total profit.
    """
    d = lb.spec.d
    totals = lb.profits.reshape(-1, d).sum(axis=1)
    return float(totals.max()) if totals.size else 0.0


def is_feasible_exact(lb: LowerBoundInstance, items) -> bool:
    """Exact single-bin feasibility of an item set, on the integer numerators."""
    D, W = lb.denominator, lb.numerators
    return all(sum(W[k][t] for k in items) <= D for t in range(lb.spec.d))


@dataclass(frozen=True)
class RandomSpec:
    n: int
    m: int
    d: int
    variant: str = "general"
    heavy_fraction: float = 0.5
    option_prob: float = 1.0
    profit_range: tuple = (0.0, 1.0)
    profit_dist: str = "uniform"
    one_prob: float = 0.3
    capacity: tuple = (1.0, 1.0)

    def check(self) -> None:
        if self.n < 0 or self.m < 1 or self.d < 1:
            raise StructuralError("need n >= 0, m >= 1, d >= 1")
        if self.variant not in ("general", "zero_one", "vmkp"):
            raise StructuralError(f"unknown variant {self.variant!r}")
        for name in ("heavy_fraction", "option_prob", "one_prob"):
            if not 0 <= getattr(self, name) <= 1:
                raise StructuralError(f"{name} must lie in [0, 1]")
        lo, hi = self.profit_range
        if not 0 <= lo <= hi:
            raise StructuralError("profit_range must satisfy 0 <= lo <= hi")
        clo, chi = self.capacity
        if not 0 < clo <= chi:
            raise StructuralError("capacity range must satisfy 0 < lo <= hi")
        if self.variant != "general" and self.capacity != (1.0, 1.0):
            raise StructuralError(f"{self.variant} instances have unit capacities")
        if self.profit_dist not in ("uniform", "correlated"):
            raise StructuralError(f"unknown profit distribution {self.profit_dist!r}")


def _weight_vectors(rng, count: int, d: int, heavy_fraction: float) -> np.ndarray:
    """Weights relative to capacity: light ones in [0, 1/2], heavy ones push
    one random coordinate into (1/2, 1]."""
    w = rng.uniform(0.0, 0.5, size=(count, d))
    heavy = rng.random(count) < heavy_fraction
    coord = rng.integers(0, d, size=count)
    big = 1.0 - rng.uniform(0.0, 0.5, size=count)  # (1/2, 1]
    w[heavy, coord[heavy]] = big[heavy]
    return w


def gen_random(spec: RandomSpec, rng) -> Instance:
    """Random instance drawn from ``spec``; reproducible from the generator state."""
    spec.check()
    n, m, d = spec.n, spec.m, spec.d
    lo, hi = spec.profit_range

    def draw_profits(shape, w):
        if spec.profit_dist == "uniform":
            return rng.uniform(lo, hi, size=shape)
        base = w.sum(axis=-1) / d
        return lo + (hi - lo) * np.clip(base + rng.uniform(-0.1, 0.1, size=shape), 0.0, 1.0)

    if spec.variant == "vmkp":
        w = _weight_vectors(rng, n, d, spec.heavy_fraction)
        return Instance.vmkp(m, w, draw_profits(n, w))
    if spec.variant == "zero_one":
        w = (rng.random((n, m, d)) < spec.one_prob).astype(float)
        present = rng.random((n, m)) < spec.option_prob
        return Instance(np.ones((m, d)), w, draw_profits((n, m), w), present, "zero_one")
    caps = rng.uniform(spec.capacity[0], spec.capacity[1], size=(m, d))
    rel = _weight_vectors(rng, n * m, d, spec.heavy_fraction).reshape(n, m, d)
    w = rel * caps[None, :, :]
    # relative weights in (1/2, 1] must stay heavy after scaling
    w = np.where(rel > 0.5, np.maximum(w, np.nextafter(caps / 2, np.inf)[None]), w)
    present = rng.random((n, m)) < spec.option_prob
    return Instance(caps, w, draw_profits((n, m), rel), present, "general")
