"""Battery of algebraic identities, each checked two ways.

The symbolic check computes the identity's defect with the engine and asks
for an exact canonical zero.  The numeric check evaluates one side with the
engine and rebuilds the other with the oracle's own tensor operations
(:mod:`histcalc.oracle`), so a shared bug would have to appear in two
unrelated implementations.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import oracle as O
from .forms import (
    FormExpr,
    coordinate_star,
    exterior_derivative,
    metric_star,
    wedge,
)
from .randexpr import random_form, random_lagrangian, random_registry
from .variational import (
    LagrangianModel,
    euler_lagrange,
    field_variation_form,
    momentaB_check,
    theta,
    vertical_derivative,
)


@dataclass
class IdentityReport:
    name: str
    trials: int
    symbolic_failures: list = field(default_factory=list)  # seeds
    max_dev: float = 0.0
    numeric_failures: list = field(default_factory=list)  # seeds
    tol: float = 1e-9

    @property
    def ok(self) -> bool:
        return not self.symbolic_failures and not self.numeric_failures

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        extra = ""
        if self.symbolic_failures:
            extra += f" symbolic failures at seeds {self.symbolic_failures[:5]}"
        if self.numeric_failures:
            extra += f" numeric failures at seeds {self.numeric_failures[:5]}"
        return f"{status} identity {self.name}: {self.trials} trials, max deviation {self.max_dev:.3g}{extra}"


@dataclass
class _Case:
    """One trial: symbolic defect plus, when a sample was given, a pair of
    numeric arrays that must agree."""

    defect: FormExpr
    engine: Optional[np.ndarray] = None
    oracle: Optional[np.ndarray] = None


def _sample(reg_or_model, seed):
    if isinstance(reg_or_model, LagrangianModel):
        return O.JetSample.for_model(reg_or_model, seed)
    reg = reg_or_model
    funcs = {k: v for k, v in reg.functions.items() if v is not None}
    return O.JetSample(reg.n, seed, functions=funcs, fields=frozenset(reg.fields))


def _case_d2(reg, rng, s):
    n = reg.n
    r = rng.randint(0, max(0, n - 2))
    x = random_form(rng, reg, r)
    ddx = exterior_derivative(exterior_derivative(x, 3), 3)
    if s is None:
        return _Case(ddx)
    sp = s.space
    num = O.num_d(O.num_d(O.evaluate_tensor(x, s, (), r), sp), sp)
    return _Case(ddx, O.components(num), np.zeros(len(O.components(num))))


def _case_leibniz(reg, rng, s):
    n = reg.n
    r = rng.randint(0, n - 1)
    q = rng.randint(0, n - 1 - r)
    a, b = random_form(rng, reg, r), random_form(rng, reg, q)
    lhs = exterior_derivative(wedge(a, b), 3)
    rhs = wedge(exterior_derivative(a, 3), b) + wedge(a, exterior_derivative(b, 3)).scale((-1) ** r)
    if s is None:
        return _Case(lhs - rhs)
    sp = s.space
    A, B = O.evaluate_tensor(a, s, (), r), O.evaluate_tensor(b, s, (), q)
    num = O.num_d(O.num_wedge(A, B, sp), sp)
    return _Case(lhs - rhs, O.components(O.evaluate_tensor(lhs, s, (), r + q + 1)), O.components(num))


def _case_commut(reg, rng, s):
    n = reg.n
    r = rng.randint(0, n)
    q = rng.randint(0, n - r)
    a, b = random_form(rng, reg, r), random_form(rng, reg, q)
    ab, ba = wedge(a, b), wedge(b, a)
    sign = (-1) ** (r * q)
    if s is None:
        return _Case(ab - ba.scale(sign))
    sp = s.space
    num = O.num_wedge(O.evaluate_tensor(b, s, (), q), O.evaluate_tensor(a, s, (), r), sp) * sign
    return _Case(ab - ba.scale(sign), O.components(O.evaluate_tensor(ab, s, (), r + q)), O.components(num))


def _case_star(reg, rng, s):
    n = reg.n
    chart = reg.chart
    r = rng.randint(0, n)
    a, b = random_form(rng, reg, r), random_form(rng, reg, r)
    sgn = 1
    for e in chart.signature or ():
        sgn *= e
    # double dual, then symmetry of the inner product
    defect = coordinate_star(coordinate_star(a)) - a.scale((-1) ** (r * (n - r)))
    if chart.signature is not None:
        defect = defect + metric_star(metric_star(a, chart), chart) - a.scale(sgn * (-1) ** (r * (n - r)))
        defect = defect + wedge(a, metric_star(b, chart)) - wedge(b, metric_star(a, chart))
    if s is None:
        return _Case(defect)
    sp = s.space
    A = O.evaluate_tensor(a, s, (), r)
    eng = [O.components(O.evaluate_tensor(coordinate_star(a), s, (), n - r))]
    num = [O.components(O.num_star(A, sp))]
    if chart.signature is not None:
        eng.append(O.components(O.evaluate_tensor(metric_star(a, chart), s, (), n - r)))
        num.append(O.components(O.num_star(A, sp, chart.signature)))
    return _Case(defect, np.concatenate(eng), np.concatenate(num))


def _case_D2(reg, rng, s):
    n = reg.n
    r = rng.randint(0, n)
    F = random_form(rng, reg, r)
    DF = vertical_derivative(F)
    DDF = vertical_derivative(DF)
    if s is None:
        return _Case(DDF)
    variations = [s.variation(0), s.variation(1)]
    num = O.numeric_vertical(DF, s, variations, r)
    return _Case(DDF, O.components(num), np.zeros(len(O.components(num))))


def _case_Dd(reg, rng, s):
    n = reg.n
    r = rng.randint(0, n - 1)
    F = random_form(rng, reg, r)
    lhs = vertical_derivative(exterior_derivative(F, 3))
    rhs = exterior_derivative(vertical_derivative(F), 3)
    if s is None:
        return _Case(lhs - rhs)
    sp = s.space
    v = [s.variation(0)]
    # D then the oracle's d, against a complex-step derivative of dF
    num = O.num_d(O.evaluate_tensor(vertical_derivative(F), s, v, r), sp)
    eng = O.numeric_vertical(exterior_derivative(F, 3), s, v, r + 1)
    return _Case(lhs - rhs, O.components(eng), O.components(num))


def _case_momentaB(model: LagrangianModel, rng, s):
    n = model.n
    defect = momentaB_check(model)
    if s is None:
        return _Case(defect)
    v = [s.variation(0)]
    sp = s.space
    DL = O.numeric_vertical(model.lagrangian, s, v, n)
    rhs = FormExpr(n)
    for name, inst in model.instances(ordered=True):
        el = euler_lagrange(model, name, inst)
        if el:
            rhs = rhs + wedge(field_variation_form(model, name, inst), el)
    R = O.evaluate_tensor(rhs, s, v, n) - O.num_d(O.evaluate_tensor(theta(model), s, v, n - 1), sp)
    return _Case(defect, O.components(DL), O.components(R))


CASES: dict = {
    "d2": _case_d2,
    "leibniz": _case_leibniz,
    "commut": _case_commut,
    "star": _case_star,
    "D2": _case_D2,
    "Dd": _case_Dd,
    "momentaB": _case_momentaB,
}

NAMES = tuple(CASES)


def run_identity(name: str, trials: int = 100, seed: int = 42, tol: float = 1e-9,
                 model: Optional[LagrangianModel] = None, numeric: bool = True,
                 dims=(1, 2, 3, 4)) -> IdentityReport:
    """Check identity ``name`` on ``trials`` seeded random cases.

    With a ``model`` the random expressions use its fields (and for
    ``momentaB`` the model itself); otherwise each trial draws a random
    registry (or random Lagrangian) with dimension from ``dims``.
    """
    if name not in CASES:
        raise KeyError(f"unknown identity {name!r}; choose from {', '.join(NAMES)}")
    case_fn: Callable = CASES[name]
    rep = IdentityReport(name, trials, tol=tol)
    for t in range(trials):
        tseed = seed + t
        rng = random.Random(tseed)
        if name == "momentaB":
            target = model if model is not None else random_lagrangian(tseed, rng.choice(dims))
        else:
            target = model.registry if model is not None else random_registry(rng, rng.choice(dims))
        case = case_fn(target, rng, _sample(target, tseed) if numeric else None)
        if case.defect:
            rep.symbolic_failures.append(tseed)
        if numeric and case.engine is not None:
            dev = O.deviation(case.engine, case.oracle)
            rep.max_dev = max(rep.max_dev, dev)
            if dev >= tol:
                rep.numeric_failures.append(tseed)
    return rep


def symbolic_only(name: str, trials: int, seed: int = 0, dims=(1, 2, 3, 4)) -> list:
    """Seeds whose symbolic defect is nonzero; no numeric evaluation."""
    return run_identity(name, trials, seed, numeric=False, dims=dims).symbolic_failures


__all__ = ["IdentityReport", "NAMES", "run_identity", "symbolic_only"]
