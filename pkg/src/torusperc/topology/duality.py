"""Winding trichotomy of the positive and negative sets of a field on the 2-torus."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .events import loop_classes

CASES = ("colinear", "positive_surjective", "negative_surjective")


class DualityViolation(AssertionError):
    pass


@dataclass(frozen=True)
class DualityCase:
    case: str
    pos_classes: list
    neg_classes: list


def _rank(classes) -> int:
    if len(classes) == 0:
        return 0
    return int(np.linalg.matrix_rank(np.asarray(classes, dtype=float)))


def _minor_gcd(classes) -> int:
    """gcd of all 2x2 minors: 1 exactly when the classes generate all of Z^2."""
    minors = [int(a[0] * b[1] - a[1] * b[0]) for i, a in enumerate(classes) for b in classes[i + 1:]]
    return reduce(math.gcd, minors, 0)


def _parallel(classes) -> bool:
    return all(a[0] * b[1] - a[1] * b[0] == 0 for a in classes for b in classes)


def classify(pos: list, neg: list) -> str:
    for a in pos:
        for b in neg:
            if a[0] * b[1] - a[1] * b[0] != 0:
                raise DualityViolation(f"classes {a} and {b} of disjoint sets intersect")
    rp, rn = _rank(pos), _rank(neg)
    if rp == 2 and rn == 0 and _minor_gcd(pos) == 1:
        return "positive_surjective"
    if rn == 2 and rp == 0 and _minor_gcd(neg) == 1:
        return "negative_surjective"
    if rp == 1 and rn == 1 and _parallel(pos + neg):
        return "colinear"
    raise DualityViolation(f"no case fits: positive classes {pos}, negative classes {neg}")


def duality_classify(f, connectivity: int = 4) -> DualityCase:
    """Classify ``{f > 0}`` (``connectivity``) against ``{f < 0}`` (the matched dual connectivity)."""
    values = f.shifted_values
    if np.any(values == 0):
        raise ValueError("field takes the value 0 exactly; the sign partition is ambiguous")
    dual = 8 if connectivity == 4 else 4
    pos = [tuple(int(c) for c in row) for row in loop_classes(values > 0, connectivity)]
    neg = [tuple(int(c) for c in row) for row in loop_classes(values < 0, dual)]
    return DualityCase(classify(pos, neg), pos, neg)
