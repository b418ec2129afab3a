"""Instances, packing options, packings and sub-instance partitions.

An :class:`Instance` holds ``m`` bins with ``d``-dimensional capacities and
``n`` items.  Item ``i`` may have a :class:`PackingOption` for bin ``j``
(a weight vector and a profit); a missing option means the item cannot be
placed in that bin at all.  Bin and item indices are 0-based in memory and
1-based in JSON files.

Sums of weights and profits are evaluated with :func:`math.fsum`, which is
correctly rounded and therefore independent of summation order.  Two code
paths that visit the same packing in a different order always agree on its
profit and feasibility.  Capacity checks are exact on the stored doubles:
see :func:`sum_within`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

VARIANTS = ("general", "zero_one", "vmkp")


class StructuralError(ValueError):
    """Malformed instance, option or packing (shape, index or value)."""


def exact_sum(values: Iterable) -> float | Fraction:
    """Order-independent sum: exact for Fractions, correctly rounded otherwise."""
    values = list(values)
    if any(isinstance(v, Fraction) for v in values):
        return sum((Fraction(v) for v in values), Fraction(0))
    return math.fsum(values)


def sum_within(values: Sequence, cap) -> bool:
    """Exact test of ``sum(values) <= cap`` on the stored numbers.

    The correctly rounded sum decides every case except a rounded sum equal
    to ``cap``, which is settled with exact rational arithmetic.
    """
    total = exact_sum(values)
    if total != cap:
        return total < cap
    if isinstance(total, Fraction):
        return True
    return sum((Fraction(v) for v in values), Fraction(0)) <= Fraction(cap)


@dataclass(frozen=True)
class PackingOption:
    weights: tuple
    profit: float

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        for v in self.weights + (self.profit,):
            _check_value(v)


def _check_value(v) -> None:
    if isinstance(v, Fraction):
        if v < 0:
            raise StructuralError(f"negative value {v}")
        return
    v = float(v)
    if not math.isfinite(v) or v < 0:
        raise StructuralError(f"value must be finite and >= 0, got {v}")


def classify_heavy(option: PackingOption, capacity: Sequence) -> str:
    """``"light"`` iff every weight is at most half the capacity, else ``"heavy"``."""
    if len(option.weights) != len(capacity):
        raise StructuralError(
            f"dimension mismatch: {len(option.weights)} weights, {len(capacity)} capacities"
        )
    for w, b in zip(option.weights, capacity):
        if w > b / 2:
            return "heavy"
    return "light"


def classify_dense(option: PackingOption, d: int) -> str:
    """``"dense"`` iff the support size s of a {0,1} weight vector has s*s >= d."""
    if len(option.weights) != d:
        raise StructuralError(f"expected {d} weights, got {len(option.weights)}")
    support = 0
    for w in option.weights:
        if w == 1:
            support += 1
        elif w != 0:
            raise StructuralError(f"non-{{0,1}} weight {w}")
    return "dense" if support * support >= d else "sparse"


class Instance:
    """Immutable VGAP instance.

    Attributes
    ----------
    d, m, n : int
        Dimension, bin count and item count.
    capacities : ndarray, shape (m, d)
    weights : ndarray, shape (n, m, d)
        Zero where the option is absent.
    profits : ndarray, shape (n, m)
        Zero where the option is absent.
    present : ndarray of bool, shape (n, m)
    variant : {"general", "zero_one", "vmkp"}
    origin : tuple of int
        Original index of each item (identity unless produced by :meth:`project`).

    Weight and capacity arrays are ``float64`` unless the instance was
    built with Fraction values, in which case they are ``object`` arrays
    and every comparison is exact.
    """

    __slots__ = ("d", "m", "n", "capacities", "weights", "profits", "present",
                 "variant", "origin", "_cache")

    def __init__(self, capacities, weights, profits, present, variant="general",
                 origin=None, validate=True):
        capacities = _as_array(capacities)
        weights = _as_array(weights)
        if capacities.ndim != 2:
            raise StructuralError("capacities must have shape (m, d)")
        m, d = capacities.shape
        if d < 1:
            raise StructuralError("dimension d must be positive")
        n = len(weights)
        if n == 0:
            weights = np.zeros((0, m, d), dtype=capacities.dtype)
        profits = np.asarray(profits, dtype=float).reshape(n, m)
        present = np.asarray(present, dtype=bool).reshape(n, m)
        if weights.shape != (n, m, d):
            raise StructuralError(f"weights shape {weights.shape} != {(n, m, d)}")
        if variant not in VARIANTS:
            raise StructuralError(f"unknown variant {variant!r}")
        if capacities.dtype == object or weights.dtype == object:
            capacities = capacities.astype(object)
            weights = weights.astype(object)
        weights = weights.copy()
        profits = profits.copy()
        weights[~present] = 0
        profits[~present] = 0.0
        for arr in (capacities, weights, profits, present):
            arr.flags.writeable = False
        self.d, self.m, self.n = d, m, n
        self.capacities = capacities
        self.weights = weights
        self.profits = profits
        self.present = present
        self.variant = variant
        self.origin = tuple(range(n)) if origin is None else tuple(int(o) for o in origin)
        if len(self.origin) != n:
            raise StructuralError("origin map length must equal n")
        self._cache = {}
        if validate:
            self._validate()

    # construction helpers

    @classmethod
    def from_options(cls, capacities, options: Sequence[dict], variant="general",
                     origin=None) -> Instance:
        """Build from one ``{bin: PackingOption}`` mapping per item (0-based bins)."""
        capacities = _as_array(capacities)
        m, d = capacities.shape
        n = len(options)
        exact = capacities.dtype == object or any(
            isinstance(w, Fraction) for opts in options for o in opts.values() for w in o.weights
        )
        weights = np.zeros((n, m, d), dtype=object if exact else float)
        profits = np.zeros((n, m))
        present = np.zeros((n, m), dtype=bool)
        for i, opts in enumerate(options):
            for j, opt in opts.items():
                if not 0 <= j < m:
                    raise StructuralError(f"item {i}: bin index {j} out of range")
                if len(opt.weights) != d:
                    raise StructuralError(f"item {i}, bin {j}: expected {d} weights")
                weights[i, j] = opt.weights
                profits[i, j] = opt.profit
                present[i, j] = True
        return cls(capacities, weights, profits, present, variant, origin)

    @classmethod
    def vmkp(cls, m: int, weights, profits) -> Instance:
        """VMKP instance: ``m`` unit bins, item ``i`` has the same option everywhere."""
        w = _as_array(weights)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        n, d = w.shape if len(w) else (0, 1)
        if w.dtype == object:
            caps = np.full((m, d), Fraction(1), dtype=object)
        else:
            caps = np.ones((m, d))
        full_w = np.repeat(w[:, None, :], m, axis=1) if n else np.zeros((0, m, d))
        full_p = np.repeat(np.asarray(profits, dtype=float).reshape(n, 1), m, axis=1)
        return cls(caps, full_w, full_p, np.ones((n, m), dtype=bool), "vmkp")

    def _validate(self) -> None:
        for arr in (self.capacities, self.weights):
            if arr.dtype == object:
                for v in arr.flat:
                    _check_value(v)
            elif arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
                raise StructuralError("weights and capacities must be finite and >= 0")
        if self.profits.size and (not np.all(np.isfinite(self.profits)) or np.any(self.profits < 0)):
            raise StructuralError("profits must be finite and >= 0")
        if self.variant in ("zero_one", "vmkp"):
            if any(c != 1 for c in self.capacities.flat):
                raise StructuralError(f"{self.variant} instances need unit capacities")
        if self.variant == "zero_one":
            if any(w != 0 and w != 1 for w in self.weights.flat):
                raise StructuralError("zero_one instances need {0,1} weights")
        if self.variant == "vmkp" and self.n:
            if not self.present.all():
                raise StructuralError("vmkp items must have an option in every bin")
            ref_w, ref_p = self.weights[:, :1, :], self.profits[:, :1]
            if np.any(self.weights != ref_w) or np.any(self.profits != ref_p):
                raise StructuralError("vmkp options must be identical across bins")

    # accessors

    @property
    def exact(self) -> bool:
        return self.weights.dtype == object

    def option(self, i: int, j: int) -> PackingOption | None:
        if not self.present[i, j]:
            return None
        return PackingOption(tuple(self.weights[i, j]), float(self.profits[i, j]))

    def options(self, i: int) -> Iterator[tuple[int, PackingOption]]:
        for j in np.flatnonzero(self.present[i]):
            yield int(j), self.option(i, int(j))

    def option_count(self) -> int:
        return int(self.present.sum())

    def heavy_mask(self) -> np.ndarray:
        """Boolean (n, m) mask of present heavy options."""
        if "heavy" not in self._cache:
            if self.exact:
                mask = np.zeros((self.n, self.m), dtype=bool)
                for i in range(self.n):
                    for j in range(self.m):
                        mask[i, j] = any(w > b / 2 for w, b in
                                         zip(self.weights[i, j], self.capacities[j]))
            else:
                mask = np.any(self.weights > self.capacities[None, :, :] / 2, axis=2)
            mask &= self.present
            mask.flags.writeable = False
            self._cache["heavy"] = mask
        return self._cache["heavy"]

    def dense_mask(self) -> np.ndarray:
        """Boolean (n, m) mask of present dense options ({0,1} instances only)."""
        if self.variant != "zero_one" and any(w != 0 and w != 1 for w in self.weights.flat):
            raise StructuralError("density split needs {0,1} weights")
        support = np.count_nonzero(np.asarray(self.weights, dtype=float), axis=2)
        mask = (support * support >= self.d) & self.present
        mask.flags.writeable = False
        return mask

    def fits_alone(self) -> np.ndarray:
        """Boolean (n, m) mask: option present and within capacity on its own."""
        if "fits" not in self._cache:
            if self.exact:
                mask = np.array([[all(w <= b for w, b in zip(self.weights[i, j], self.capacities[j]))
                                  for j in range(self.m)] for i in range(self.n)],
                                dtype=bool).reshape(self.n, self.m)
            else:
                mask = np.all(self.weights <= self.capacities[None, :, :], axis=2)
            mask &= self.present
            mask.flags.writeable = False
            self._cache["fits"] = mask
        return self._cache["fits"]

    def restrict(self, mask: np.ndarray) -> Instance:
        """Same items and bins, keeping only the options where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool) & self.present
        variant = self.variant if self.variant != "vmkp" or mask.all() else "general"
        return Instance(self.capacities, self.weights, self.profits, mask, variant,
                        self.origin, validate=False)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.variant == other.variant and self.origin == other.origin
                and self.capacities.shape == other.capacities.shape
                and self.weights.shape == other.weights.shape
                and np.array_equal(self.present, other.present)
                and bool(np.all(self.capacities == other.capacities))
                and bool(np.all(self.weights == other.weights))
                and np.array_equal(self.profits, other.profits))

    __hash__ = None

    def __repr__(self):
        return f"Instance(d={self.d}, m={self.m}, n={self.n}, variant={self.variant!r})"

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(to_json(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _as_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object:
        return arr
    if arr.dtype.kind not in "fiub":
        raise StructuralError(f"numeric array expected, got dtype {arr.dtype}")
    return arr.astype(float)


def split(instance: Instance, criterion: str = "heavy_light") -> tuple[Instance, Instance]:
    """Partition the options into (heavy, light) or (dense, sparse) sub-instances."""
    if criterion == "heavy_light":
        first = instance.heavy_mask()
    elif criterion == "dense_sparse":
        if instance.variant != "zero_one":
            raise StructuralError("dense/sparse split applies to zero_one instances only")
        first = instance.dense_mask()
    else:
        raise StructuralError(f"unknown split criterion {criterion!r}")
    return instance.restrict(first), instance.restrict(instance.present & ~first)


def project(instance: Instance, items: Iterable[int]) -> Instance:
    """Sub-instance on the given items (ascending order); bins are unchanged."""
    idx = sorted(set(int(i) for i in items))
    for i in idx:
        if not 0 <= i < instance.n:
            raise StructuralError(f"item index {i} out of range")
    idx_arr = np.asarray(idx, dtype=int)
    return Instance(instance.capacities, instance.weights[idx_arr], instance.profits[idx_arr],
                    instance.present[idx_arr], instance.variant,
                    [instance.origin[i] for i in idx], validate=False)


class Packing:
    """A set of (item, bin) pairs with per-bin, per-dimension consumption.

    The object is built up with :meth:`add` by whoever owns it (an online
    run or an oracle); once handed out it is treated as a value.
    """

    def __init__(self, instance: Instance):
        self.instance = instance
        self._bin_of: dict[int, int] = {}
        self._members: list[list[int]] = [[] for _ in range(instance.m)]
        self._total = None
        zero = Fraction(0) if instance.exact else 0.0
        self.consumption = np.full((instance.m, instance.d), zero,
                                   dtype=object if instance.exact else float)

    @classmethod
    def from_pairs(cls, instance: Instance, pairs: Iterable[tuple[int, int]]) -> Packing:
        packing = cls(instance)
        for i, j in pairs:
            packing.add(i, j, check=False)
        return packing

    @property
    def assignments(self) -> frozenset:
        return frozenset(self._bin_of.items())

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._bin_of.items())

    def bin_of(self, i: int) -> int | None:
        return self._bin_of.get(i)

    def items_in(self, j: int) -> list[int]:
        return list(self._members[j])

    def is_empty_bin(self, j: int) -> bool:
        return not self._members[j]

    def __len__(self):
        return len(self._bin_of)

    def __contains__(self, pair):
        i, j = pair
        return self._bin_of.get(i) == j

    def _load_with(self, i: int, j: int) -> list:
        inst = self.instance
        members = self._members[j] + [i]
        return [exact_sum(inst.weights[k, j, t] for k in members) for t in range(inst.d)]

    def fits(self, i: int, j: int) -> bool:
        """Whether adding (i, j) keeps bin ``j`` within capacity in every dimension."""
        inst = self.instance
        if not inst.present[i, j]:
            return False
        members = self._members[j] + [i]
        w = inst.weights
        return all(sum_within([w[k, j, t] for k in members], inst.capacities[j, t])
                   for t in range(inst.d))

    def add(self, i: int, j: int, check: bool = True) -> None:
        inst = self.instance
        if not (0 <= i < inst.n and 0 <= j < inst.m):
            raise StructuralError(f"pair ({i}, {j}) out of range")
        if not inst.present[i, j]:
            raise StructuralError(f"item {i} has no option for bin {j}")
        if i in self._bin_of:
            raise StructuralError(f"item {i} is already packed")
        if check and not self.fits(i, j):
            raise StructuralError(f"item {i} does not fit in bin {j}")
        self.consumption[j] = self._load_with(i, j)
        self._members[j].append(i)
        self._bin_of[i] = j
        self._total = None

    def copy(self) -> Packing:
        other = Packing(self.instance)
        other._bin_of = dict(self._bin_of)
        other._members = [list(ms) for ms in self._members]
        other.consumption = self.consumption.copy()
        other._total = self._total
        return other

    def total_consumption(self):
        """Sum over packed pairs and dimensions of the consumed weight."""
        if self._total is None:
            inst = self.instance
            self._total = exact_sum(inst.weights[i, j, t] for i, j in self._bin_of.items()
                                    for t in range(inst.d))
        return self._total

    def __repr__(self):
        return f"Packing({self.pairs()})"


def profit_of(instance: Instance, packing: Packing | Iterable[tuple[int, int]]) -> float:
    pairs = packing.pairs() if isinstance(packing, Packing) else list(packing)
    for i, j in pairs:
        if not instance.present[i, j]:
            raise StructuralError(f"pair ({i}, {j}) refers to an absent option")
    return math.fsum(instance.profits[i, j] for i, j in pairs)


def is_feasible(instance: Instance, packing: Packing | Iterable[tuple[int, int]]) -> bool:
    """Recompute every bin load from scratch and compare with the capacities."""
    pairs = packing.pairs() if isinstance(packing, Packing) else list(packing)
    seen = set()
    members: list[list[int]] = [[] for _ in range(instance.m)]
    for i, j in pairs:
        if not (0 <= i < instance.n and 0 <= j < instance.m) or not instance.present[i, j]:
            raise StructuralError(f"pair ({i}, {j}) refers to an absent option")
        if i in seen:
            return False
        seen.add(i)
        members[j].append(i)
    for j, ms in enumerate(members):
        for t in range(instance.d):
            if not sum_within([instance.weights[i, j, t] for i in ms], instance.capacities[j, t]):
                return False
    return True


# JSON files

def _num_out(v, exact: bool):
    if isinstance(v, Fraction):
        return fraction_to_str(v) if exact else float(v)
    f = float(v)
    return int(f) if f.is_integer() and abs(f) < 2**53 else f


def fraction_to_str(q: Fraction) -> str:
    """Exact decimal string when the expansion terminates, otherwise ``"p/q"``."""
    den = q.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    scaled = q * 10**digits
    assert scaled.denominator == 1
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    out = s[:-digits] + "." + s[-digits:] if digits else s
    return ("-" if q < 0 else "") + out


def _num_in(v, exact: bool):
    if isinstance(v, str):
        q = Fraction(v)
        return q if exact else float(q)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise StructuralError(f"numeric value expected, got {v!r}")
    return Fraction(v) if exact else float(v)


def to_json(instance: Instance, exact: bool = False) -> dict:
    """JSON-ready dict; bins are 1-based.  VMKP instances use the compact form."""
    out = {"d": instance.d, "variant": instance.variant}
    if instance.variant == "vmkp":
        out["m"] = instance.m
        out["items"] = [{"w": [_num_out(w, exact) for w in instance.weights[i, 0]],
                         "p": _num_out(instance.profits[i, 0], exact)}
                        for i in range(instance.n)]
        return out
    out["bins"] = [[_num_out(b, exact) for b in row] for row in instance.capacities]
    out["items"] = [{"options": {str(j + 1): {"w": [_num_out(w, exact) for w in opt.weights],
                                              "p": _num_out(opt.profit, exact)}
                                 for j, opt in instance.options(i)}}
                    for i in range(instance.n)]
    return out


def from_json(data: dict, exact: bool = False) -> Instance:
    """Parse the instance file format; decimal/rational strings are accepted as numbers."""
    try:
        d = int(data["d"])
        variant = data.get("variant", "general")
        items = data["items"]
        if "bins" in data:
            caps = [[_num_in(b, exact) for b in row] for row in data["bins"]]
        else:
            one = Fraction(1) if exact else 1.0
            caps = [[one] * d for _ in range(int(data["m"]))]
        m = len(caps)
        options = []
        for k, item in enumerate(items):
            if "options" in item:
                opts = {}
                for key, o in item["options"].items():
                    j = int(key) - 1
                    if not 0 <= j < m:
                        raise StructuralError(f"item {k + 1}: bin {key} out of range 1..{m}")
                    opts[j] = PackingOption([_num_in(w, exact) for w in o["w"]],
                                            _num_in(o["p"], False))
            else:
                opt = PackingOption([_num_in(w, exact) for w in item["w"]],
                                    _num_in(item["p"], False))
                opts = {j: opt for j in range(m)}
            options.append(opts)
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"malformed instance file: {exc}") from exc
    cap_arr = np.array(caps, dtype=object if exact else float).reshape(m, d)
    return Instance.from_options(cap_arr, options, variant)


def load_instance(path, exact: bool = False) -> Instance:
    with open(path) as fh:
        return from_json(json.load(fh), exact=exact)


def save_instance(instance: Instance, path, exact: bool = False) -> None:
    with open(path, "w") as fh:
        json.dump(to_json(instance, exact=exact), fh)
        fh.write("\n")
