"""Deterministic mixture sampling.

Random numbers come from :class:`Pcg64Stream`: the PCG64 generator
(128-bit LCG state, XSL-RR output permutation, 64-bit outputs) seeded through
numpy's ``SeedSequence``.  Each raw 64-bit output ``x`` becomes the uniform
``(x >> 11) * 2**-53`` in ``[0, 1)``.  Every draw then consumes exactly three
uniforms ``(u_c, u_1, u_2)``:

* component: smallest ``k`` with ``u_c < cumsum(weights)[k]``;
* Gaussian: Box-Muller, ``loc + scale * sqrt(-2 log(1 - u_1)) * cos(2 pi u_2)``;
* Cauchy: ``loc + scale * tan(pi * (u_1 - 1/2))``.

Outputs are therefore reproducible bit for bit on any IEEE-754 platform with
the same numpy PCG64 implementation.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import PeakfitError


class Family(enum.Enum):
    GAUSSIAN = "N"
    CAUCHY = "C"


@dataclass(frozen=True)
class Component:
    weight: float
    family: Family
    location: float
    scale: float


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple[Component, ...]

    def __post_init__(self):
        if not self.components:
            raise PeakfitError("mixture needs at least one component")
        for c in self.components:
            if not c.scale > 0:
                raise PeakfitError("component scales must be positive")
            if not 0 < c.weight <= 1:
                raise PeakfitError("component weights must lie in (0, 1]")
        if abs(sum(c.weight for c in self.components) - 1.0) > 1e-12:
            raise PeakfitError("weights must sum to 1")

    @classmethod
    def gaussian(cls, *triples):
        """Build from ``(weight, mean, sd)`` triples."""
        return cls(tuple(Component(w, Family.GAUSSIAN, m, s) for w, m, s in triples))

    @classmethod
    def cauchy(cls, *triples):
        return cls(tuple(Component(w, Family.CAUCHY, m, s) for w, m, s in triples))

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for c in self.components:
            z = (y - c.location) / c.scale
            if c.family is Family.GAUSSIAN:
                out += c.weight * np.exp(-0.5 * z * z) / (c.scale * math.sqrt(2 * math.pi))
            else:
                out += c.weight / (math.pi * c.scale * (1.0 + z * z))
        return out

    def __str__(self):
        return ",".join(f"{c.weight:g}:{c.family.value}({c.location:g},{c.scale:g})"
                        for c in self.components)


class Pcg64Stream:
    """Uniform stream over numpy's PCG64 raw outputs (see module docstring)."""

    def __init__(self, seed: int):
        self._bitgen = np.random.PCG64(int(seed))

    def uniform(self, size: int) -> np.ndarray:
        raw = self._bitgen.random_raw(size)
        return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def sample_mixture(spec: MixtureSpec, n: int, seed: int, return_labels: bool = False):
    """Draw ``n`` points from ``spec`` deterministically given ``seed``."""
    if n < 1:
        raise PeakfitError("n must be at least 1")
    u = Pcg64Stream(seed).uniform(3 * n).reshape(n, 3)
    cum = np.cumsum([c.weight for c in spec.components])
    cum[-1] = 1.0
    labels = np.searchsorted(cum, u[:, 0], side="right")
    out = np.empty(n)
    for k, c in enumerate(spec.components):
        sel = labels == k
        u1, u2 = u[sel, 1], u[sel, 2]
        if c.family is Family.GAUSSIAN:
            z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)
        else:
            z = np.tan(math.pi * (u1 - 0.5))
        out[sel] = c.location + c.scale * z
    return (out, labels) if return_labels else out


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TOKEN = re.compile(rf"({_NUM}):([NC])\(({_NUM}),({_NUM})\)")
GRAMMAR_HINT = ("expected comma-separated terms weight:Family(loc,scale) with Family in {N, C}, "
                "e.g. \"0.6:N(10,1),0.4:N(15,1)\"")


def parse_mixture(text: str) -> MixtureSpec:
    """Parse ``"0.6:N(10,1),0.4:C(15,2)"`` (whitespace-insensitive).

    The second argument is the scale: standard deviation for ``N``, the
    half-width for ``C``.
    """
    s = re.sub(r"\s+", "", text or "")
    pos, comps = 0, []
    while True:
        m = _TOKEN.match(s, pos)
        if not m:
            raise PeakfitError(f"malformed mixture at position {pos}: {GRAMMAR_HINT}")
        w, fam, loc, scale = m.groups()
        comps.append(Component(float(w), Family(fam), float(loc), float(scale)))
        pos = m.end()
        if pos == len(s):
            break
        if s[pos] != ",":
            raise PeakfitError(f"malformed mixture at position {pos}: expected ',' ; {GRAMMAR_HINT}")
        pos += 1
    return MixtureSpec(tuple(comps))


# Reference setups.  Gaussian second parameters are quoted as variances in the
# setup notation (N(20,16) is the diffuse sd-4 population); stored here as
# standard deviations.
SETUPS = {
    "separated_pair": MixtureSpec.gaussian((0.6, 10, 1), (0.4, 15, 1)),
    "diffuse_majority": MixtureSpec.gaussian((0.6, 10, 4), (0.4, 15, 1)),
    "diffuse_minority": MixtureSpec.gaussian((0.6, 10, 1), (0.4, 20, 4)),
    "cauchy_pair": MixtureSpec.cauchy((0.6, 0, 2), (0.4, 10, 1)),
    "cauchy_diffuse": MixtureSpec.cauchy((0.6, 0, 5), (0.4, 10, 1)),
    "three_separated": MixtureSpec.gaussian((0.45, -6, 1), (0.30, 0, math.sqrt(2)),
                                            (0.25, 8, math.sqrt(2.5))),
    "three_overlapping": MixtureSpec.gaussian((0.3, -3, math.sqrt(1.5)), (0.4, 0, 1),
                                              (0.3, 3, math.sqrt(1.5))),
    "five_equal": MixtureSpec.gaussian((0.15, -6, 1), (0.20, -3, 1), (0.25, 0, 1), (0.20, 3, 1),
                                       (0.20, 6, 1)),
}
