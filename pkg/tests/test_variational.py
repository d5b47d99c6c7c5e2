import random
from fractions import Fraction

import pytest

from histcalc import fixtures
from histcalc.atoms import func, jet
from histcalc.fields import FieldDecl, FieldRegistry, SymmetrySpec
from histcalc.forms import (
    Chart,
    FormExpr,
    GradeError,
    coordinate_star,
    dx,
    exterior_derivative,
    interior_product,
    metric_star,
    vol_sub,
    wedge,
)
from histcalc.randexpr import random_form, random_lagrangian, random_registry
from histcalc.variational import (
    LagrangianModel,
    NotASymmetryError,
    NotCovariantError,
    apply_variation,
    euler_lagrange,
    field_variation_form,
    momentaB_check,
    noether_current,
    omega,
    partial_c,
    partial_dc,
    polymomenta,
    theta,
    vertical_derivative,
)
from histcalc.eom import EomIdeal, reduce_mod_eom


def atom(a, n=1):
    return FormExpr.atom(a, n)


q, qd, qdd = jet("q"), jet("q", (), (0,)), jet("q", (), (0, 0))
dt = dx(0, 1)


@pytest.fixture(scope="module")
def osc():
    return fixtures.build("oscillator")[0]


@pytest.fixture(scope="module")
def em():
    return fixtures.build("em")


# partial derivatives ---------------------------------------------------------------


def test_oscillator_force(osc):
    assert partial_c(osc.lagrangian, osc.registry, "q") == -atom(func("V", q, 1)) * dt


def test_oscillator_momentum(osc):
    assert partial_dc(osc.lagrangian, osc.registry, "q") == atom(qd)


def test_independent_field_gives_zero():
    reg = FieldRegistry(Chart(2))
    reg.declare_field(FieldDecl("f", 0))
    reg.declare_field(FieldDecl("g", 0))
    F = wedge(reg.form("f"), dx(0, 2) * dx(1, 2))
    assert not partial_c(F, reg, "g")
    assert not partial_dc(F, reg, "g")


def test_partial_grade_errors():
    reg = FieldRegistry(Chart(3))
    reg.declare_field(FieldDecl("b", 2))
    with pytest.raises(GradeError):
        partial_c(dx(0, 3), reg, "b")
    with pytest.raises(GradeError):
        partial_dc(reg.form("b"), reg, "b")


def test_not_covariant():
    reg = FieldRegistry(Chart(3))
    reg.declare_field(FieldDecl("A", 1))
    # A_0 dx^1 ^ dx^2 is not of the form A ^ G
    F = atom(jet("A", (0,)), 3) * dx(1, 3) * dx(2, 3)
    with pytest.raises(NotCovariantError):
        partial_c(F, reg, "A")


def test_em_momentum_is_star_dA(em):
    model, _ = em
    dA = exterior_derivative(model.registry.form("A"))
    assert partial_dc(model.lagrangian, model.registry, "A") == metric_star(dA, model.chart)


def test_left_convention_sign():
    # F = a ^ b with a, b one-forms: dF/da = b, dF/db = -a
    reg = FieldRegistry(Chart(3))
    reg.declare_field(FieldDecl("a", 1))
    reg.declare_field(FieldDecl("b", 1))
    a, b = reg.form("a"), reg.form("b")
    assert partial_c(wedge(a, b), reg, "a") == b
    assert partial_c(wedge(a, b), reg, "b") == -a


# polymomenta ----------------------------------------------------------------------


def test_polymomenta_time_dynamics(osc):
    assert polymomenta(osc.momentum("q")) == {(0,): atom(qd)}


def test_polymomenta_scalar_field():
    model = fixtures.build("scalar")[0]
    poly = polymomenta(model.momentum("phi"))
    assert set(poly) == {(0,), (1,), (2,), (3,)}
    assert poly[(0,)] == atom(jet("phi", (), (0,)), 4)
    for mu in (1, 2, 3):
        assert poly[(mu,)] == -atom(jet("phi", (), (mu,)), 4)


def test_polymomenta_zero():
    assert polymomenta(FormExpr(4)) == {}


def test_polymomenta_round_trip():
    rng = random.Random(5)
    for _ in range(40):
        n = rng.randint(1, 4)
        reg = random_registry(rng, n)
        P = random_form(rng, reg, rng.randint(0, n - 1))
        back = FormExpr(n)
        for mu, coeff in polymomenta(P).items():
            back = back + wedge(coeff, vol_sub(mu, n))
        assert back == P


# Euler-Lagrange -----------------------------------------------------------------------


def test_oscillator_el(osc):
    assert euler_lagrange(osc, "q") == (-atom(func("V", q, 1)) - atom(qdd)) * dt


def test_em_maxwell(em):
    model, _ = em
    dA = exterior_derivative(model.registry.form("A"))
    assert euler_lagrange(model, "A") == exterior_derivative(metric_star(dA, model.chart))


def test_scalar_klein_gordon():
    model = fixtures.build("scalar")[0]
    phi = lambda *d: atom(jet("phi", (), d), 4)
    m = atom(next(a for a in model.lagrangian.atoms() if a.kind == "p"), 4)
    box = -phi(0, 0) + phi(1, 1) + phi(2, 2) + phi(3, 3)
    assert euler_lagrange(model, "phi").component((0, 1, 2, 3)) == box - m * m * phi()


def test_free_particle_el():
    reg = FieldRegistry(Chart(1, ("t",)))
    reg.declare_field(FieldDecl("q", 0))
    dq = exterior_derivative(reg.form("q"))
    model = LagrangianModel(reg, wedge(dq, coordinate_star(dq)).scale(Fraction(1, 2)))
    assert euler_lagrange(model, "q") == -atom(qdd) * dt


def test_empty_lagrangian():
    reg = FieldRegistry(Chart(2))
    reg.declare_field(FieldDecl("f", 0))
    model = LagrangianModel(reg, FormExpr(2))
    assert not euler_lagrange(model, "f")
    assert not theta(model)
    assert not momentaB_check(model)


def test_lagrangian_validation():
    reg = FieldRegistry(Chart(2))
    reg.declare_field(FieldDecl("f", 0))
    with pytest.raises(GradeError):
        LagrangianModel(reg, reg.form("f"))
    reg2 = FieldRegistry(Chart(1))
    reg2.declare_field(FieldDecl("f", 0))
    with pytest.raises(GradeError):
        LagrangianModel(reg2, atom(jet("f", (), (0, 0))) * dx(0, 1))


# D, Theta, omega -----------------------------------------------------------------------


def test_D_of_field_is_generator(osc):
    assert vertical_derivative(osc.registry.form("q")) == FormExpr.generator(q, 1)


def test_D_of_oscillator_lagrangian(osc):
    Dq, Dqd = FormExpr.generator(q, 1), FormExpr.generator(qd, 1)
    want = wedge(Dq, -atom(func("V", q, 1)) * dt) + wedge(Dqd, atom(qd) * dt)
    assert vertical_derivative(osc.lagrangian) == want
    assert not vertical_derivative(vertical_derivative(osc.lagrangian))


def test_theta_and_omega_time_dynamics(osc):
    Dq, Dqd = FormExpr.generator(q, 1), FormExpr.generator(qd, 1)
    assert theta(osc) == -wedge(Dq, atom(qd))
    assert omega(osc) == wedge(Dq, Dqd)
    assert omega(osc) == vertical_derivative(theta(osc))
    assert not vertical_derivative(omega(osc))


def test_theta_em(em):
    model, _ = em
    A = model.registry.form("A")
    DA = vertical_derivative(A, {"A"})
    assert theta(model) == -wedge(DA, metric_star(exterior_derivative(A), model.chart))
    assert theta(model).bidegree == (1, 3)
    assert omega(model).bidegree == (2, 3)


def test_vertical_grade_limit(em):
    model, _ = em
    w = wedge(omega(model), FormExpr.atom(jet("A", (0,)), 4))
    with pytest.raises(GradeError):
        vertical_derivative(w)


def test_D_commutes_with_d():
    rng = random.Random(9)
    for _ in range(40):
        n = rng.randint(1, 4)
        reg = random_registry(rng, n)
        F = random_form(rng, reg, rng.randint(0, n - 1))
        assert vertical_derivative(exterior_derivative(F, 3)) == exterior_derivative(vertical_derivative(F), 3)
        assert not vertical_derivative(vertical_derivative(F))


@pytest.mark.parametrize("name", ["oscillator", "harmonic", "scalar", "em", "palatini"])
def test_momentaB_fixtures(name):
    assert not momentaB_check(fixtures.build(name)[0])


def test_momentaB_random():
    for seed in range(25):
        assert not momentaB_check(random_lagrangian(seed)), seed


# symmetries --------------------------------------------------------------------------


def test_trivial_symmetry_current_is_zero(em):
    model, _ = em
    assert not noether_current(model, SymmetrySpec("none", {}, FormExpr(4)))


def test_gauge_current_conserved(em):
    model, syms = em
    j = noether_current(model, syms[0])
    assert j.grade == 3
    rem, cert = reduce_mod_eom(exterior_derivative(j, 3), EomIdeal.from_model(model))
    assert not rem and cert.verify(exterior_derivative(j, 3))


def test_broken_symmetry_is_rejected():
    model, syms = fixtures.build("em_broken")
    with pytest.raises(NotASymmetryError) as info:
        noether_current(model, syms[0])
    assert info.value.remainder


@pytest.mark.parametrize("sym", [0, 1])
def test_scalar_translation_currents(sym):
    model, syms = fixtures.build("scalar")
    j = noether_current(model, syms[sym])
    dj = exterior_derivative(j, 3)
    rem, cert = reduce_mod_eom(dj, EomIdeal.from_model(model))
    assert not rem
    assert cert.verify(dj)


def test_time_translation_energy(osc):
    sym = fixtures.build("oscillator")[1][0]
    j = noether_current(osc, sym)
    # energy up to sign: q'^2/2 + V(q)
    energy = atom(qd) * atom(qd) * FormExpr.scalar(Fraction(1, 2), 1) + atom(func("V", q))
    assert j == energy or j == -energy


def test_apply_variation_uses_d_of_delta(em):
    model, syms = em
    delta = apply_variation(model.lagrangian, model, syms[0])
    assert not delta


def test_variation_grade_checked(em):
    model, _ = em
    bad = SymmetrySpec("bad", {("A", ()): FormExpr.scalar(1, 4)}, FormExpr(4))
    with pytest.raises(GradeError):
        noether_current(model, bad)
