import itertools
from dataclasses import dataclass

import numpy as np
from hypothesis import settings

from jetbalance.expr import parse

settings.register_profile("fast", max_examples=60, deadline=None)
settings.load_profile("fast")


@dataclass(frozen=True)
class Poly:
    """Dense polynomial with an exact numpy evaluator, used as an oracle for the CAS."""

    names: tuple
    terms: dict  # exponent tuple -> coefficient

    def text(self) -> str:
        parts = []
        for exps, c in self.terms.items():
            mono = "*".join(f"{n}^{e}" for n, e in zip(self.names, exps) if e)
            parts.append(f"({c!r})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts) if parts else "0"

    def expr(self):
        return parse(self.text())

    def __call__(self, **pts):
        out = 0.0
        for exps, c in self.terms.items():
            term = c
            for n, e in zip(self.names, exps):
                term = term * np.asarray(pts[n], float) ** e
            out = out + term
        return out

    def deriv(self, name: str) -> "Poly":
        k = self.names.index(name)
        terms = {}
        for exps, c in self.terms.items():
            if exps[k]:
                e = list(exps)
                e[k] -= 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + c * exps[k]
        return Poly(self.names, terms)


def random_poly(rng, names, degree=3, density=0.6) -> Poly:
    names = tuple(names)
    terms = {}
    for exps in itertools.product(range(degree + 1), repeat=len(names)):
        if sum(exps) <= degree and rng.random() < density:
            terms[exps] = float(np.round(rng.uniform(-2, 2), 3))
    if not terms:
        terms[(0,) * len(names)] = 1.0
    return Poly(names, terms)


def random_points(rng, names, count=100, lo=-1.0, hi=1.0):
    return {n: rng.uniform(lo, hi, count) for n in names}


def poly_text(rng, names, degree=3, density=0.6) -> str:
    return random_poly(rng, names, degree, density).text()
