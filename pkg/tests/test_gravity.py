from itertools import product

import pytest

from histcalc import fixtures
from histcalc.atoms import param
from histcalc.eom import EomIdeal, reduce_mod_eom
from histcalc.fields import substitute
from histcalc.forms import FormExpr, diff_atom, exterior_derivative, levi_civita, wedge
from histcalc.gravity import (
    WrongModelError,
    global_lorentz_charge,
    local_lorentz_identity,
    lorentz_symmetry,
)
from histcalc.variational import euler_lagrange, noether_current, partial_c

R = range(4)


@pytest.fixture(scope="module")
def grav():
    model, syms = fixtures.build("palatini")
    reg = model.registry
    eta = model.chart.signature
    e = {I: reg.form("e", (I,)) for I in R}
    w = {(I, J): reg.form("w", (I, J)) for I, J in product(R, R)}
    mixed = {(I, J): w[(I, J)].scale(eta[J]) for I, J in product(R, R)}  # w^I_J
    return model, syms, e, w, mixed


def curvature(w, mixed, K, L):
    out = exterior_derivative(w[(K, L)])
    for M in R:
        out = out + wedge(mixed[(K, M)], w[(M, L)])
    return out


def test_connection_momentum(grav):
    model, _, e, _, _ = grav
    for K, L in product(R, R):
        want = FormExpr(4)
        for I, J in product(R, R):
            eps = levi_civita((I, J, K, L))
            if eps:
                want = want + wedge(e[I], e[J]).scale(eps)
        assert model.momentum("w", (K, L)) == want


def test_tetrad_momentum_vanishes(grav):
    model = grav[0]
    for I in R:
        assert not model.momentum("e", (I,))


def test_tetrad_derivative_and_field_equation(grav):
    model, _, e, w, mixed = grav
    for I in R:
        want = FormExpr(4)
        for J, K, L in product(R, R, R):
            eps = levi_civita((I, J, K, L))
            if eps:
                want = want + wedge(e[J], curvature(w, mixed, K, L)).scale(2 * eps)
        assert partial_c(model.lagrangian, model.registry, "e", (I,)) == want
        assert euler_lagrange(model, "e", (I,)) == want


def _torsion_form(e, mixed, K, L):
    out = FormExpr(4)
    for I, J in product(R, R):
        eps = levi_civita((I, J, K, L))
        if not eps:
            continue
        inner = exterior_derivative(e[J])
        for M in R:
            inner = inner + wedge(mixed[(J, M)], e[M])
        out = out + wedge(e[I], inner).scale(eps)
    return out


def test_connection_derivative_relations(grav):
    # two candidate forms of dL/dw^{KL}: the first (a) is not antisymmetric in KL,
    # the second (b) is its antisymmetrization; the engine returns -b
    model, _, e, _, mixed = grav
    for K, L in product(R, R):
        if K == L:
            continue
        a = lambda k, l: sum(
            (wedge(wedge(e[I], e[J]), mixed[(N, k)]).scale(2 * levi_civita((I, J, N, l)))
             for I, J, N in product(R, R, R) if levi_civita((I, J, N, l))),
            FormExpr(4),
        )
        b = sum(
            (wedge(wedge(e[I], mixed[(J, M)]), e[M]).scale(2 * levi_civita((I, J, K, L)))
             for I, J, M in product(R, R, R) if levi_civita((I, J, K, L))),
            FormExpr(4),
        )
        assert b == (a(K, L) - a(L, K)) / 2
        assert partial_c(model.lagrangian, model.registry, "w", (K, L)) == -b


def test_connection_field_equation_is_torsion(grav):
    model, _, e, _, mixed = grav
    for K, L in product(R, R):
        if K != L:
            assert euler_lagrange(model, "w", (K, L)) == _torsion_form(e, mixed, K, L).scale(-2)


def test_lorentz_spec_matches_fixture(grav):
    model, syms = grav[:2]
    built = lorentz_symmetry(model)
    assert built.variations == syms[0].variations
    parsed_model, parsed_syms = fixtures.load("palatini")
    assert parsed_syms[0].variations == built.variations


def test_global_charge_antisymmetric_and_reassembled(grav):
    model, _, _, _, mixed = grav
    charges = global_lorentz_charge(model)
    assert sorted(charges) == [(A, B) for A in R for B in R if A < B]
    for (A, B), J in charges.items():
        want = FormExpr(4)
        for Jx in R:
            want = want + wedge(model.momentum("w", (A, Jx)), mixed[(Jx, B)])
            want = want - wedge(model.momentum("w", (B, Jx)), mixed[(Jx, A)])
        assert J == want / 2
        assert J.grade == 3


def test_lorentz_current_global_branch(grav):
    model, syms = grav[:2]
    j = noether_current(model, syms[0])
    consts = {("lam", (I, J)): FormExpr.atom(param("l", (I, J)), 4) for I in R for J in R if I < J}
    jg = substitute(j, consts, model.registry)
    assert all(a.kind != "j" or a.field != "lam" for a in jg.atoms())
    for (A, B), JAB in global_lorentz_charge(model).items():
        assert diff_atom(jg, param("l", (A, B))) == JAB.scale(4)


def test_d_global_charge_on_shell_01(grav):
    model = grav[0]
    ideal = EomIdeal.from_model(model)
    dJ = exterior_derivative(global_lorentz_charge(model)[(0, 1)], 3)
    rem, cert = reduce_mod_eom(dJ, ideal)
    assert not rem and cert.verify(dJ)


def test_local_identity_expansion(grav):
    model, _, _, w, mixed = grav
    eta = model.chart.signature
    ident = local_lorentz_identity(model)
    Pi = lambda A, B: model.momentum("w", (A, B))
    for (A, B), expr in ident.items():
        want = exterior_derivative(Pi(A, B))
        for J in R:
            want = want - wedge(Pi(J, B), mixed[(J, A)]) + wedge(Pi(A, J), w[(B, J)].scale(eta[B]))
        assert expr == want


def test_local_identity_without_connection(grav):
    model, _, _, w, _ = grav
    zero = {("w", inst): FormExpr(4) for inst in model.registry["w"].instances()}
    ideal = EomIdeal.from_model(model)
    torsion0 = [substitute(g, zero, model.registry) for _, g in ideal.residuals]
    for (A, B), expr in local_lorentz_identity(model).items():
        reduced = substitute(expr, zero, model.registry)
        assert reduced == exterior_derivative(model.momentum("w", (A, B)))
    # with w = 0 the torsion equation is eps e de = 0 and dPi = 2 eps de e is in its span
    specialised = EomIdeal([(str(i), g) for i, g in enumerate(torsion0) if g], 4, frozenset({"e"}))
    rem, cert = reduce_mod_eom(exterior_derivative(model.momentum("w", (0, 1))), specialised)
    assert not rem


def test_wrong_model():
    model = fixtures.build("em")[0]
    with pytest.raises(WrongModelError):
        global_lorentz_charge(model)
    with pytest.raises(WrongModelError):
        local_lorentz_identity(model)
