"""Relation predicates over detected event sets.

Each sub-relation is decided by enumerating candidate tuples of detected
events matching the target classes; the relation holds iff some tuple
satisfies the predicate. Spatial sub-relations additionally need the
waveform, since loudness is the L2 norm over an event's detected span.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .detect import DetectedEvent, EventSet
from .errors import RelsceneError
from .wavio import SAMPLE_RATE


@dataclass(frozen=True)
class RelationParams:
    sigma1: float = 0.2          # loudness-reduction ratio for close/far verdicts
    sigma2: float = 0.4          # equal-distance tolerance ratio
    overlap_fraction: float = 0.5
    order_tolerance: float = 0.25  # absorbs the 0.5 s detection grid

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "overlap_fraction"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise RelsceneError(f"{name} must lie in (0, 1], got {v}")
        if self.order_tolerance < 0:
            raise RelsceneError("order_tolerance must be >= 0")


def loudness(waveform: np.ndarray, span: tuple[float, float]) -> float:
    """L2 norm of the samples inside [t1, t2]."""
    t1, t2 = span
    if not (0 <= t1 < t2 <= len(waveform) / SAMPLE_RATE + 1e-9):
        raise RelsceneError(f"empty or invalid span [{t1}, {t2}]")
    i1, i2 = int(round(t1 * SAMPLE_RATE)), int(round(t2 * SAMPLE_RATE))
    return float(np.linalg.norm(waveform[i1:i2]))


def _before(a: DetectedEvent, b: DetectedEvent, tol: float) -> bool:
    return a.t2 <= b.t1 + tol


def _overlap_holds(a: DetectedEvent, b: DetectedEvent, fraction: float) -> bool:
    overlap = min(a.t2, b.t2) - max(a.t1, b.t1)
    shorter = min(a.t2 - a.t1, b.t2 - b.t1)
    return overlap >= fraction * shorter


def _candidates(detected: EventSet, class_id: int) -> list[DetectedEvent]:
    # Highest-confidence candidates first; deterministic tie-break by onset.
    return sorted(
        (e for e in detected.events if e.class_id == class_id),
        key=lambda e: (-e.confidence, e.t1),
    )


def _pairs(detected: EventSet, class_a: int, class_b: int):
    for a, b in product(_candidates(detected, class_a), _candidates(detected, class_b)):
        if a is not b:
            yield a, b


def _same_class_pairs(detected: EventSet, class_id: int):
    yield from combinations(_candidates(detected, class_id), 2)


def check_relation(
    sub_relation: str,
    detected: EventSet,
    target_classes: list[int],
    params: RelationParams | None = None,
    waveform: np.ndarray | None = None,
) -> tuple[bool, tuple | None]:
    """Decide whether the sub-relation holds; returns (holds, witness tuple)."""
    params = params or RelationParams()
    present = detected.labels()

    if sub_relation in ("before", "after"):
        a_cls, b_cls = target_classes
        if sub_relation == "after":
            # A after B is B before A.
            a_cls, b_cls = b_cls, a_cls
        for a, b in _pairs(detected, a_cls, b_cls):
            if _before(a, b, params.order_tolerance):
                return True, (a, b) if sub_relation == "before" else (b, a)
        return False, None

    if sub_relation == "simultaneity":
        for a, b in _pairs(detected, target_classes[0], target_classes[1]):
            if _overlap_holds(a, b, params.overlap_fraction):
                return True, (a, b)
        return False, None

    if sub_relation in ("closefirst", "farfirst", "equaldist"):
        if waveform is None:
            raise RelsceneError(
                f"relation {sub_relation!r} needs the waveform for loudness"
            )
        for a, b in _same_class_pairs(detected, target_classes[0]):
            earlier, later = (a, b) if (a.t1, a.t2) <= (b.t1, b.t2) else (b, a)
            le = loudness(waveform, (earlier.t1, earlier.t2))
            ll = loudness(waveform, (later.t1, later.t2))
            if sub_relation == "closefirst" and le >= (1 + params.sigma1) * ll:
                return True, (earlier, later)
            if sub_relation == "farfirst" and ll >= (1 + params.sigma1) * le:
                return True, (earlier, later)
            if sub_relation == "equaldist" and abs(le - ll) <= params.sigma2 * max(le, ll):
                return True, (earlier, later)
        return False, None

    if sub_relation in ("count", "and"):
        witness = []
        for c in target_classes:
            cands = _candidates(detected, c)
            if not cands:
                return False, None
            witness.append(cands[0])
        return True, tuple(witness)

    if sub_relation == "or":
        a_cls, b_cls = target_classes
        a_in, b_in = a_cls in present, b_cls in present
        if a_in != b_in:
            c = a_cls if a_in else b_cls
            return True, (_candidates(detected, c)[0],)
        return False, None

    if sub_relation == "not":
        return target_classes[0] not in present, None

    if sub_relation == "ifthenelse":
        a_cls, b_cls, c_cls = target_classes
        branch_ab = None
        for a, b in _pairs(detected, a_cls, b_cls):
            if _before(a, b, params.order_tolerance):
                branch_ab = (a, b)
                break
        branch_c = (
            c_cls in present and a_cls not in present and b_cls not in present
        )
        if (branch_ab is not None) != branch_c:
            if branch_ab is not None:
                return True, branch_ab
            return True, (_candidates(detected, c_cls)[0],)
        return False, None

    raise RelsceneError(f"unknown relation {sub_relation!r}")
