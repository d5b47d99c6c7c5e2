"""Floating-point oracle for the symbolic engine.

Every field component is sampled as a random polynomial around the origin,
so a jet coordinate ``c_{alpha, mu nu}`` evaluates to an actual mixed partial
derivative (mixed partials commute by construction).  Scalars are carried as
truncated Taylor series, which lets the oracle apply its *own* exterior
derivative, wedge, stars and contractions to dense antisymmetric tensors and
compare with the symbolic results.  Vertical derivatives are taken by the
complex-step method along random variation fields.

None of this reuses the symbolic canonicalization: term signs are re-derived
here from explicit permutation parities.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations, product
from math import factorial
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .forms import FormExpr, GradeError

BAND = 0.05
COMPLEX_STEP = 1e-30


def parity(perm: Sequence[int]) -> int:
    """Sign of a permutation of distinct items, by cycle decomposition."""
    items = list(perm)
    order = sorted(items)
    pos = [order.index(x) for x in items]
    seen = [False] * len(pos)
    sign = 1
    for i in range(len(pos)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = pos[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def signed_permutations(k: int) -> tuple:
    """``((perm, sign), ...)`` over all permutations of ``range(k)``."""
    return tuple((p, parity(p)) for p in permutations(range(k)))


def epsilon(idx: Sequence[int]) -> int:
    if sorted(idx) != list(range(len(idx))):
        return 0
    return parity(idx)


class TaylorSpace:
    """Truncated multivariate Taylor series in ``n`` variables to order ``K``."""

    def __init__(self, n: int, K: int):
        self.n, self.K = n, K
        exps = [e for e in product(range(K + 1), repeat=n) if sum(e) <= K]
        exps.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
        self.exps = exps
        self.index = {e: i for i, e in enumerate(exps)}
        self.size = len(exps)
        ii, jj, kk = [], [], []
        for i, a in enumerate(exps):
            for j, b in enumerate(exps):
                c = tuple(x + y for x, y in zip(a, b))
                if sum(c) <= K:
                    ii.append(i)
                    jj.append(j)
                    kk.append(self.index[c])
        self._ii, self._jj, self._kk = np.array(ii), np.array(jj), np.array(kk)
        self._dsrc, self._dfac = [], []
        for mu in range(n):
            src, fac = np.zeros(self.size, dtype=int), np.zeros(self.size)
            for i, e in enumerate(exps):
                up = list(e)
                up[mu] += 1
                up = tuple(up)
                if up in self.index:
                    src[i] = self.index[up]
                    fac[i] = up[mu]
            self._dsrc.append(src)
            self._dfac.append(fac)

    def const(self, v, dtype=float):
        out = np.zeros(self.size, dtype=dtype)
        out[0] = v
        return out

    def mul(self, a, b):
        prod = a[self._ii] * b[self._jj]
        if np.iscomplexobj(prod):
            re = np.bincount(self._kk, prod.real, self.size)
            return re + 1j * np.bincount(self._kk, prod.imag, self.size)
        return np.bincount(self._kk, prod, self.size)

    def deriv(self, a, mu):
        return a[self._dsrc[mu]] * self._dfac[mu]

    def partial(self, a, multi):
        for mu in multi:
            a = self.deriv(a, mu)
        return a

    def compose_poly(self, coeffs, a):
        """``p(a(x))`` for polynomial coefficients (lowest first)."""
        out = self.const(0, dtype=np.result_type(a, float))
        for c in reversed(list(coeffs)):
            out = self.mul(out, a)
            out[0] += c
        return out


@lru_cache(maxsize=32)
def taylor_space(n: int, K: int) -> TaylorSpace:
    return TaylorSpace(n, K)


def _stable_seed(*parts) -> int:
    return zlib.crc32(repr(parts).encode())


def _banded(rng, size):
    v = rng.uniform(BAND, 1.0, size) * rng.choice([-1.0, 1.0], size)
    return v


class UnboundAtomError(KeyError):
    """An atom has no value in the sample."""


@dataclass
class JetSample:
    """Seeded random jets: a random polynomial per field component.

    Values are drawn uniformly from ``[-1, 1]`` excluding ``|v| < 0.05``.
    ``functions`` optionally maps a function name to a :class:`Polynomial`;
    undeclared ones get a seeded random polynomial of degree 6.
    """

    n: int
    seed: int = 42
    order: int = 4
    functions: dict = field(default_factory=dict)
    fields: Optional[frozenset] = None  # names allowed; None binds any field
    shift: Optional["JetSample"] = None
    shift_scale: complex = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def for_model(cls, model, seed: int = 42, order: int = 4) -> "JetSample":
        """Sample bound to a model's fields and numeric function bindings."""
        funcs = {k: v for k, v in model.registry.functions.items() if v is not None}
        return cls(model.n, seed, order, funcs, frozenset(model.registry.fields))

    @property
    def space(self) -> TaylorSpace:
        return taylor_space(self.n, self.order)

    def base(self, key):
        """Taylor coefficients of one field component ``(field, slots, comp)``."""
        if key not in self._cache:
            rng = np.random.default_rng([self.seed, _stable_seed("jet", key)])
            vals = _banded(rng, self.space.size)
            # scale higher Taylor coefficients down so sums stay O(1)
            scale = np.array([1.0 / factorial(sum(e)) for e in self.space.exps])
            val = vals * scale
            if self.shift is not None:
                val = val + self.shift_scale * self.shift.base(key)
            self._cache[key] = val
        return self._cache[key]

    def poly(self, name) -> Polynomial:
        if name in self.functions and self.functions[name] is not None:
            return Polynomial(self.functions[name])
        key = ("fn", name)
        if key not in self._cache:
            rng = np.random.default_rng([self.seed, _stable_seed("fn", name)])
            self._cache[key] = Polynomial(_banded(rng, 7) / np.arange(1, 8))
        return self._cache[key]

    def atom(self, atom):
        """Taylor series of a scalar atom."""
        key = ("atom", atom)
        if key in self._cache:
            return self._cache[key]
        sp = self.space
        if atom.kind == "j":
            if self.fields is not None and atom.field not in self.fields:
                raise UnboundAtomError(f"no field {atom.field!r} in this sample")
            if len(atom.deriv) > self.order:
                raise UnboundAtomError(f"jet order {len(atom.deriv)} exceeds the sample order {self.order}")
            val = sp.partial(self.base((atom.field, atom.slots, atom.comp)), atom.deriv)
        elif atom.kind == "f":
            p = self.poly(atom.name).deriv(atom.order) if atom.order else self.poly(atom.name)
            val = sp.compose_poly(p.coef, self.atom(atom.arg))
        else:
            rng = np.random.default_rng([self.seed, _stable_seed("param", atom)])
            val = sp.const(_banded(rng, 1)[0])
        self._cache[key] = val
        return val

    def shifted(self, delta: "JetSample", h: float = COMPLEX_STEP) -> "JetSample":
        """Jets moved by ``i h delta`` for complex-step differentiation."""
        if self.shift is not None:
            raise ValueError("nested complex steps are not supported")
        return JetSample(self.n, self.seed, self.order, self.functions, self.fields,
                         shift=delta, shift_scale=1j * h)

    def variation(self, k: int) -> "JetSample":
        """The ``k``-th random variation field tied to this sample's seed."""
        return JetSample(self.n, _stable_seed("variation", self.seed, k) & 0x7FFFFFFF, self.order,
                         fields=self.fields)




def _term_scalar(atoms, coeff, sample: JetSample):
    sp = sample.space
    val = None
    for a, p in atoms:
        v = sample.atom(a)
        for _ in range(p):
            val = v if val is None else sp.mul(val, v)
    c = float(coeff)
    if val is None:
        return sp.const(c)
    return val * c


def _generator_values(gens, variations, sp):
    """Antisymmetrized product of generator values over the variations."""
    v = len(gens)
    if v != len(variations):
        raise GradeError(f"{v} vertical generators need {v} variations, got {len(variations)}")
    if v == 0:
        return None
    total = None
    for perm in permutations(range(v)):
        s = parity(perm)
        prod = None
        for g, k in zip(gens, perm):
            val = sp.partial(variations[k].base((g.field, g.slots, g.comp)), g.deriv)
            prod = val if prod is None else sp.mul(prod, val)
        prod = prod * s
        total = prod if total is None else total + prod
    return total


def evaluate_tensor(expr: FormExpr, sample: JetSample, variations: Sequence[JetSample] = (),
                    grade: Optional[int] = None):
    """Dense antisymmetric tensor of Taylor series, shape ``(n,)*r + (m,)``."""
    n = expr.n
    sp = sample.space
    if grade is None:
        g = expr.grades()
        if len(g) > 1:
            raise GradeError("cannot evaluate a mixed-grade form")
        grade = g.pop() if g else 0
    dtype = complex if sample.shift is not None else float
    T = np.zeros((n,) * grade + (sp.size,), dtype=dtype)
    by_mono: dict = {}
    for (atoms, gens, mono), c in expr.terms.items():
        s = _term_scalar(atoms, c, sample)
        gv = _generator_values(gens, variations, sp)
        if gv is not None:
            s = sp.mul(s, gv)
        by_mono[mono] = by_mono[mono] + s if mono in by_mono else s
    perms = signed_permutations(grade)
    for mono, s in by_mono.items():
        for perm, sign in perms:
            T[tuple(mono[p] for p in perm)] += sign * s
    return T


def components(T) -> np.ndarray:
    """Values at the base point of the ascending components."""
    r = T.ndim - 1
    n = T.shape[0] if r else 0
    if r == 0:
        return np.array([T[0]])
    return np.array([T[idx][0] for idx in combinations(range(n), r)])


def evaluate(expr: FormExpr, sample: JetSample, variations: Sequence[JetSample] = ()) -> np.ndarray:
    """Component values at the sample point, indexed by ascending monomials
    (``itertools.combinations`` order)."""
    return components(evaluate_tensor(expr, sample, variations))


# numeric exterior calculus on dense tensors ------------------------------------


def num_wedge(A, B, sp: TaylorSpace):
    r, s = A.ndim - 1, B.ndim - 1
    n = sp.n
    k = r + s
    out = np.zeros((n,) * k + (sp.size,), dtype=np.result_type(A, B))
    if k > n:
        return out
    norm = 1.0 / (factorial(r) * factorial(s))
    perms = signed_permutations(k)
    for idx in combinations(range(n), k):
        acc = np.zeros(sp.size, dtype=out.dtype)
        for perm, sign in perms:
            I = tuple(idx[p] for p in perm)
            acc = acc + sign * sp.mul(A[I[:r]], B[I[r:]])
        acc *= norm
        for perm, sign in perms:
            out[tuple(idx[p] for p in perm)] = sign * acc
    return out


def num_dx(mu: int, sp: TaylorSpace):
    out = np.zeros((sp.n, sp.size))
    out[mu, 0] = 1.0
    return out


def num_d(A, sp: TaylorSpace):
    r = A.ndim - 1
    out = np.zeros((sp.n,) * (r + 1) + (sp.size,), dtype=A.dtype)
    for mu in range(sp.n):
        dA = np.apply_along_axis(lambda v: sp.deriv(v, mu), -1, A) if r else sp.deriv(A, mu)
        out = out + num_wedge(num_dx(mu, sp), dA, sp)
    return out


def num_interior(mu: int, A):
    return A[mu]


def num_star(A, sp: TaylorSpace, signature=None):
    r = A.ndim - 1
    n = sp.n
    out = np.zeros((n,) * (n - r) + (sp.size,), dtype=A.dtype)
    for J in product(range(n), repeat=n - r):
        acc = np.zeros(sp.size, dtype=A.dtype)
        for I in combinations(range(n), r):
            e = epsilon(I + J)
            if e:
                w = 1.0
                if signature is not None:
                    for i in I:
                        w *= signature[i]
                acc = acc + e * w * A[I]
        out[J] = acc
    return out


# checks -------------------------------------------------------------------------


@dataclass
class Verdict:
    ok: bool
    max_dev: float
    trials: int
    witness: Optional[int] = None  # seed of the first failing sample
    detail: str = ""

    def __bool__(self):
        return self.ok


def deviation(a: np.ndarray, b: np.ndarray, floor: float = 1e-12) -> float:
    """Relative max-norm difference with an absolute floor for tiny references."""
    diff = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0,
                float(np.max(np.abs(b))) if b.size else 0.0)
    if diff <= floor:
        return 0.0
    return diff / max(scale, floor)


def _grade_of(e: FormExpr):
    g = e.grades()
    if len(g) > 1:
        raise GradeError("mixed-grade expression")
    v = e.vgrades()
    if len(v) > 1:
        raise GradeError("mixed vertical grade")
    return (g.pop() if g else None), (v.pop() if v else None)


def equiv(a: FormExpr, b: FormExpr, trials: int = 100, tol: float = 1e-9, seed: int = 42,
          functions: Optional[dict] = None) -> Verdict:
    """Pointwise comparison of two expressions on ``trials`` random jets."""
    ga, va = _grade_of(a)
    gb, vb = _grade_of(b)
    if ga is not None and gb is not None and ga != gb:
        raise GradeError(f"grade mismatch: {ga} vs {gb}")
    if va is not None and vb is not None and va != vb:
        raise GradeError(f"vertical grade mismatch: {va} vs {vb}")
    grade = ga if ga is not None else (gb or 0)
    vgrade = va if va is not None else (vb or 0)
    worst = 0.0
    for t in range(trials):
        s = JetSample(a.n, seed + t, functions=functions or {})
        vars_ = [s.variation(k) for k in range(vgrade)]
        x = components(evaluate_tensor(a, s, vars_, grade))
        y = components(evaluate_tensor(b, s, vars_, grade))
        dev = deviation(x, y)
        worst = max(worst, dev)
        if dev >= tol:
            return Verdict(False, worst, t + 1, seed + t, f"first failure at sample seed {seed + t}")
    return Verdict(True, worst, trials)


def directional(expr: FormExpr, sample: JetSample, delta: JetSample,
                variations: Sequence[JetSample] = (), grade: Optional[int] = None):
    """Complex-step derivative of ``expr`` along the variation ``delta``."""
    shifted = sample.shifted(delta)
    T = evaluate_tensor(expr, shifted, variations, grade)
    return T.imag / COMPLEX_STEP


def numeric_vertical(expr: FormExpr, sample: JetSample, variations: Sequence[JetSample],
                     grade: Optional[int] = None):
    """Value of ``D(expr)`` on ``variations``, computed numerically from
    ``expr`` alone: ``sum_k (-1)^k delta_k[expr(..., omit k, ...)]``."""
    out = None
    for k, dk in enumerate(variations):
        rest = [v for i, v in enumerate(variations) if i != k]
        term = directional(expr, sample, dk, rest, grade) * (-1) ** k
        out = term if out is None else out + term
    return out


# time dynamics cross-check ---------------------------------------------------------


def _lagrangian_density(model):
    """Coefficient of ``dt`` in a one-dimensional Lagrangian."""
    if model.n != 1:
        raise ValueError("discrete_action_gradient needs a time-dynamics model (n = 1)")
    fields = model.registry.dynamical()
    if len(fields) != 1 or fields[0].degree != 0 or fields[0].slots:
        raise ValueError("discrete_action_gradient needs a single scalar history")
    return fields[0].name, model.lagrangian.component((0,))


def _eval_scalar(expr: FormExpr, values: dict, polys: dict):
    """Evaluate a grade-0 expression on arrays of atom values."""
    total = 0
    for (atoms, gens, mono), c in expr.terms.items():
        term = float(c)
        for a, p in atoms:
            if a.kind == "f":
                poly = polys[a.name]
                base = values[a.arg]
                v = poly.deriv(a.order)(base) if a.order else poly(base)
            else:
                v = values[a]
            term = term * v ** p
        total = total + term
    return total


def discrete_action_gradient(model, path: np.ndarray, h: float, functions: Optional[dict] = None,
                             euler_lagrange=None) -> np.ndarray:
    """Difference between the symbolic EL residual on finite-difference jets
    and the gradient of the trapezoid-discretized action, at interior nodes.

    ``path`` holds ``q`` on a uniform grid of spacing ``h``.  The discrete
    action is ``h * sum' l(q_k, v_k)`` with central-difference nodal
    velocities and trapezoid end weights; its gradient is taken by complex
    step.  Returned entries cover nodes ``2 .. N-2`` (wide enough that the
    end weights never enter); the contract is ``max|diff| = O(h^2)``.
    """
    from .atoms import jet
    from .variational import euler_lagrange as _el

    el_fn = euler_lagrange or _el
    name, dens = _lagrangian_density(model)
    q = np.asarray(path, dtype=float)
    N = len(q) - 1
    if N - 3 < 8:
        raise ValueError("need at least 8 interior points")
    polys = {k: Polynomial(v) for k, v in (functions or {}).items()}
    for fname, num in model.registry.functions.items():
        if fname not in polys:
            if num is None:
                raise ValueError(f"function {fname} needs a numeric polynomial binding")
            polys[fname] = Polynomial(num)
    a0, a1, a2 = jet(name), jet(name, (), (0,)), jet(name, (), (0, 0))

    def action(qq):
        v = np.empty_like(qq)
        v[1:-1] = (qq[2:] - qq[:-2]) / (2 * h)
        v[0] = (qq[1] - qq[0]) / h
        v[-1] = (qq[-1] - qq[-2]) / h
        dens_vals = _eval_scalar(dens, {a0: qq, a1: v}, polys)
        dens_vals = np.broadcast_to(dens_vals, qq.shape)
        w = np.full(qq.shape, h)
        w[0] = w[-1] = h / 2
        return np.sum(w * dens_vals)

    interior = np.arange(2, N - 1)
    grad = np.empty(len(interior))
    step = 1e-30
    qc = q.astype(complex)
    for out_i, k in enumerate(interior):
        qq = qc.copy()
        qq[k] += 1j * step
        grad[out_i] = action(qq).imag / step / h
    qdot = (q[2:] - q[:-2]) / (2 * h)
    qddot = (q[2:] - 2 * q[1:-1] + q[:-2]) / h ** 2
    res = el_fn(model, name).component((0,))
    vals = {a0: q[1:-1], a1: qdot, a2: qddot}
    sym = np.broadcast_to(_eval_scalar(res, vals, polys), q[1:-1].shape)
    return sym[interior - 1] - grad


__all__ = [
    "JetSample",
    "TaylorSpace",
    "Verdict",
    "evaluate",
    "evaluate_tensor",
    "equiv",
    "directional",
    "numeric_vertical",
    "num_wedge",
    "num_d",
    "num_star",
    "num_interior",
    "discrete_action_gradient",
    "deviation",
    "parity",
]
