"""Sampling-based cross-check for the segment/triangle interference test.

The boolean predicate in :mod:`mmwrelay.geometry` decides contact through
plane classification and in-plane point tests. This module re-derives the
same answer by brute force -- sampling points densely along the segment and
minimizing their distance to the filled triangle -- so the two can be
compared over large random populations. Because sampling can bound a
minimum distance but never certify an exact zero, the driver also plants
constructed cases with known ground truth (segments passing through a
triangle point, and segments held at an exact known clearance), and
excludes cases whose measured minimum falls inside a small band around the
decision threshold where a sampled value is inconclusive.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._fast import exact_seg_tri_distances, refined_seg_tri_minima
from .geometry import Segment3, Triangle3, Vec3, segment_interferes_triangle

__all__ = [
    "CASE_RANDOM",
    "CASE_CONTACT",
    "CASE_CLEARANCE",
    "CASE_BAND",
    "AgreementCase",
    "AgreementReport",
    "generate_cases",
    "sampled_min_distance",
    "exact_min_distance",
    "agreement_suite",
]

CASE_RANDOM = 0
CASE_CONTACT = 1
CASE_CLEARANCE = 2
CASE_BAND = 3

_KIND_NAMES = {
    CASE_RANDOM: "random",
    CASE_CONTACT: "planted-contact",
    CASE_CLEARANCE: "planted-clearance",
    CASE_BAND: "planted-band",
}

# Sampling resolution: coarse pass interval and the refinement interval used
# near candidate minima. The refined minimum overshoots the truth by at most
# _FINE_STEP / 2 wherever it matters, so _RESOLUTION is a safe exclusion
# margin around the decision threshold.
_COARSE_STEP = 0.25
_FINE_STEP = 0.004
_RESOLUTION = _FINE_STEP


@dataclass(frozen=True)
class AgreementCase:
    """One disagreement, kept for diagnostics."""

    index: int
    kind: str
    oracle_min: float
    predicate: bool
    expected: bool
    segment: tuple
    triangle: tuple


@dataclass
class AgreementReport:
    """Outcome of one agreement run between predicate and sampling oracle."""

    total: int = 0
    compared: int = 0
    banded: int = 0
    planted_contacts: int = 0
    planted_clearances: int = 0
    mismatches: list = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        lines = [
            f"cases:            {self.total}",
            f"compared:         {self.compared}",
            f"excluded in band: {self.banded}",
            f"planted contacts: {self.planted_contacts}",
            f"planted clear:    {self.planted_clearances}",
            f"mismatches:       {len(self.mismatches)}",
            f"elapsed:          {self.elapsed_s:.2f} s",
            f"verdict:          {'OK' if self.ok else 'DISAGREE'}",
        ]
        for m in self.mismatches[:10]:
            lines.append(
                f"  case {m.index} [{m.kind}]: predicate={m.predicate} "
                f"expected={m.expected} oracle_min={m.oracle_min:.6f}"
            )
        return "\n".join(lines)


def _uniform_triangle_point(rng: np.random.Generator, tri: np.ndarray) -> np.ndarray:
    """Uniform point on a triangle via the square-root warp."""
    r1, r2 = rng.random(2)
    s = np.sqrt(r1)
    w0 = 1.0 - s
    w1 = s * (1.0 - r2)
    w2 = s * r2
    return w0 * tri[0] + w1 * tri[1] + w2 * tri[2]


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    n = float(np.linalg.norm(v))
    while n < 1e-12:
        v = rng.normal(size=3)
        n = float(np.linalg.norm(v))
    return v / n


def generate_cases(
    n: int,
    seed: int,
    box: float = 100.0,
    contact_frac: float = 0.1,
    clearance_frac: float = 0.08,
    band_frac: float = 0.02,
):
    """Random plus constructed (segment, triangle) populations.

    Returns (seg_a, seg_b, tris, kinds, expected) where `expected` is +1 for
    known contact, 0 for known clearance, and -1 where the truth is left to
    the oracle (random cases).
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5E67)))
    n_contact = int(n * contact_frac)
    n_clear = int(n * clearance_frac)
    n_band = int(n * band_frac)
    n_random = n - n_contact - n_clear - n_band

    seg_a = np.empty((n, 3))
    seg_b = np.empty((n, 3))
    tris = np.empty((n, 3, 3))
    kinds = np.empty(n, dtype=np.int64)
    expected = np.full(n, -1, dtype=np.int64)

    # Fully random pairs: truth determined by the oracle measurement.
    seg_a[:n_random] = rng.uniform(-box, box, (n_random, 3))
    seg_b[:n_random] = rng.uniform(-box, box, (n_random, 3))
    tris[:n_random] = rng.uniform(-box, box, (n_random, 3, 3))
    kinds[:n_random] = CASE_RANDOM

    i = n_random
    for _ in range(n_contact):
        tri = rng.uniform(-box, box, (3, 3))
        style = rng.integers(0, 4)
        if style == 0:  # interior point, transversal pass
            p = _uniform_triangle_point(rng, tri)
        elif style == 1:  # point on an edge
            k = int(rng.integers(0, 3))
            lam = rng.random()
            p = (1.0 - lam) * tri[k] + lam * tri[(k + 1) % 3]
        elif style == 2:  # exactly a vertex
            p = tri[int(rng.integers(0, 3))].copy()
        else:  # interior point again, but touched by a segment endpoint
            p = _uniform_triangle_point(rng, tri)
        d = _unit(rng)
        back = 0.0 if style == 3 else float(rng.uniform(1.0, box / 2))
        fwd = float(rng.uniform(1.0, box / 2))
        seg_a[i] = p - back * d
        seg_b[i] = p + fwd * d
        tris[i] = tri
        kinds[i] = CASE_CONTACT
        expected[i] = 1
        i += 1

    def plant_clearance(r: float) -> None:
        nonlocal i
        tri = rng.uniform(-box, box, (3, 3))
        e1 = tri[1] - tri[0]
        e2 = tri[2] - tri[0]
        nrm = np.cross(e1, e2)
        nn = float(np.linalg.norm(nrm))
        if nn < 1e-9:  # degenerate draw; retry with a fresh triangle
            return plant_clearance(r)
        nrm /= nn
        p = _uniform_triangle_point(rng, tri)
        q = p + r * nrm
        # In-plane direction: every segment point keeps height exactly r
        # above the plane, and the point over p realizes distance r to the
        # filled triangle, so the true minimum is r by construction.
        d = np.cross(nrm, _unit(rng))
        dn = float(np.linalg.norm(d))
        if dn < 1e-9:
            return plant_clearance(r)
        d /= dn
        seg_a[i] = q - float(rng.uniform(0.5, box / 4)) * d
        seg_b[i] = q + float(rng.uniform(0.5, box / 4)) * d
        tris[i] = tri
        i += 1

    for _ in range(n_clear):
        r = float(np.exp(rng.uniform(np.log(0.021), np.log(2.0))))
        kinds[i] = CASE_CLEARANCE
        expected[i] = 0
        plant_clearance(r)

    for _ in range(n_band):
        r = float(rng.uniform(0.002, 0.018))
        kinds[i] = CASE_BAND
        plant_clearance(r)

    return seg_a, seg_b, tris, kinds, expected


def sampled_min_distance(seg: Segment3, tri: Triangle3, delta: float = 0.02) -> float:
    """Scalar convenience wrapper around the sampling kernel."""
    seg_a = np.array([seg.a.as_tuple()])
    seg_b = np.array([seg.b.as_tuple()])
    tris = np.array([[tri.p0.as_tuple(), tri.p1.as_tuple(), tri.p2.as_tuple()]])
    return float(
        refined_seg_tri_minima(seg_a, seg_b, tris, delta, _COARSE_STEP, _FINE_STEP)[0]
    )


def exact_min_distance(seg: Segment3, tri: Triangle3) -> float:
    """Closed-form segment-to-filled-triangle distance (diagnostics)."""
    seg_a = np.array([seg.a.as_tuple()])
    seg_b = np.array([seg.b.as_tuple()])
    tris = np.array([[tri.p0.as_tuple(), tri.p1.as_tuple(), tri.p2.as_tuple()]])
    return float(exact_seg_tri_distances(seg_a, seg_b, tris)[0])


def _warm_kernels() -> None:
    z = np.zeros((1, 3))
    o = np.ones((1, 3))
    t = np.zeros((1, 3, 3))
    t[0, 1, 0] = 1.0
    t[0, 2, 1] = 1.0
    refined_seg_tri_minima(z, o, t, 0.02, _COARSE_STEP, _FINE_STEP)
    exact_seg_tri_distances(z, o, t)


def agreement_suite(
    n: int = 100_000,
    seed: int = 0,
    delta: float = 0.02,
    box: float = 100.0,
) -> AgreementReport:
    """Compare the interference predicate against the sampling oracle.

    Cases whose sampled minimum lands within `delta + resolution` of zero
    without a planted ground truth are excluded (the band); everything else
    must agree exactly.
    """
    _warm_kernels()
    t0 = time.perf_counter()
    seg_a, seg_b, tris, kinds, expected = generate_cases(n, seed, box=box)
    minima = refined_seg_tri_minima(seg_a, seg_b, tris, delta, _COARSE_STEP, _FINE_STEP)

    rep = AgreementReport(total=n)
    cutoff = delta + _RESOLUTION
    for i in range(n):
        seg = Segment3(Vec3(*seg_a[i]), Vec3(*seg_b[i]))
        tri = Triangle3(Vec3(*tris[i, 0]), Vec3(*tris[i, 1]), Vec3(*tris[i, 2]))
        pred = segment_interferes_triangle(seg, tri)
        kind = int(kinds[i])
        if expected[i] == 1:
            rep.planted_contacts += 1
            rep.compared += 1
            want = True
        elif expected[i] == 0 and minima[i] > cutoff:
            rep.planted_clearances += 1
            rep.compared += 1
            want = False
        elif minima[i] > cutoff:
            rep.compared += 1
            want = False
        else:
            rep.banded += 1
            continue
        if pred != want:
            rep.mismatches.append(
                AgreementCase(
                    index=i,
                    kind=_KIND_NAMES[kind],
                    oracle_min=float(minima[i]),
                    predicate=pred,
                    expected=want,
                    segment=(tuple(seg_a[i]), tuple(seg_b[i])),
                    triangle=tuple(map(tuple, tris[i])),
                )
            )
    rep.elapsed_s = time.perf_counter() - t0
    return rep
