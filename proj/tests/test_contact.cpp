#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "contactdyn/contact.hpp"

using namespace contactdyn;
using namespace contactdyn::mech;
using expr::ExprPtr;
using expr::parse;
using expr::SampleDomain;

namespace {

SampleDomain params_positive(std::initializer_list<const char*> names) {
    SampleDomain d;
    for (const char* n : names) d.intervals[n] = {0.5, 2.0};
    return d;
}

ContactLagrangian oscillator() {
    ContactLagrangian lag;
    lag.n = 1;
    lag.q = {"q"};
    lag.v = {"v"};
    lag.p = {"p"};
    lag.L = parse("0.5*m*v^2 - 0.5*m*w^2*q^2 - g*s");
    lag.domain = params_positive({"m", "w", "g"});
    lag.holonomic = true;
    return lag;
}

ContactHamiltonian oscillator_h() {
    ContactHamiltonian sys;
    sys.n = 1;
    sys.q = {"q"};
    sys.p = {"p"};
    sys.H = parse("p^2/(2*m) + 0.5*m*w^2*q^2 + g*s");
    sys.domain = params_positive({"m", "w", "g"});
    return sys;
}

ContactLagrangian gravity_friction() {
    ContactLagrangian lag;
    lag.n = 2;
    lag.q = {"x", "y"};
    lag.v = {"vx", "vy"};
    lag.p = {"px", "py"};
    lag.L = parse("0.5*m*(vx^2 + vy^2) - m*g*y - gamma*s");
    lag.domain = params_positive({"m", "g", "gamma"});
    lag.holonomic = true;
    return lag;
}

ContactLagrangian parachute() {
    ContactLagrangian lag;
    lag.n = 1;
    lag.q = {"y"};
    lag.v = {"v"};
    lag.p = {"p"};
    lag.L = parse("0.5*m*v^2 - (m*g/(2*gamma))*(exp(2*gamma*y) - 1) + 2*gamma*v*s");
    lag.domain = params_positive({"m", "g", "gamma"});
    return lag;
}

ContactLagrangian central_force() {
    ContactLagrangian lag;
    lag.n = 3;
    lag.q = {"q1", "q2", "q3"};
    lag.v = {"v1", "v2", "v3"};
    lag.p = {"p1", "p2", "p3"};
    lag.L = parse("0.5*m*(v1^2 + v2^2 + v3^2) + kU/sqrt(q1^2 + q2^2 + q3^2) - gamma*s");
    lag.domain = params_positive({"m", "kU", "gamma"});
    for (const char* c : {"q1", "q2", "q3"}) lag.domain.intervals[c] = {0.3, 2.0};
    return lag;
}

ContactLagrangian pendulum_lag() {
    ContactLagrangian lag;
    lag.n = 3;
    lag.q = {"r", "th", "lam"};
    lag.v = {"vr", "vth", "vlam"};
    lag.L = parse("0.5*m*(vr^2 + r^2*vth^2) - m*g*r*(1 - cos(th)) + lam*(r - ell) - gamma*s");
    lag.domain = params_positive({"m", "g", "ell", "gamma"});
    lag.domain.intervals["r"] = {0.5, 2.0};
    return lag;
}

ContactLagrangian cawley() {
    ContactLagrangian lag;
    lag.n = 3;
    lag.q = {"q1", "q2", "q3"};
    lag.v = {"v1", "v2", "v3"};
    lag.L = parse("v1*v3 + 0.5*q2*q3^2 - gamma*s");
    lag.domain = params_positive({"gamma"});
    return lag;
}

bool equiv(const ExprPtr& a, const ExprPtr& b, const SampleDomain& d) {
    return expr::equivalent_on_domain(a, b, d);
}

bool equiv(const ExprPtr& a, const std::string& b, const SampleDomain& d) {
    return equiv(a, parse(b), d);
}

// componentwise check of i(X)deta = dH - sigma*eta and i(X)eta = -H
bool defining_equations_hold(const ContactHamiltonian& sys) {
    auto X = hamiltonian_field(sys);
    auto eta = contact_form(sys);
    auto sigma = dissipation_rate(sys);
    auto coords = sys.coords();
    auto eta_at = [&](const std::string& c) { return eta.count(c) ? eta[c] : expr::constant(0); };

    ExprPtr r2 = sys.H;
    for (const auto& c : coords) r2 = expr::add(r2, expr::mul(X.component(c), eta_at(c)));
    if (!expr::is_zero_on(expr::simplify(r2), sys.domain)) return false;

    for (const auto& b : coords) {
        ExprPtr lhs = expr::constant(0);
        for (const auto& a : coords) {
            ExprPtr deta = expr::sub(expr::differentiate(eta_at(b), a),
                                     expr::differentiate(eta_at(a), b));
            lhs = expr::add(lhs, expr::mul(X.component(a), deta));
        }
        ExprPtr rhs = expr::sub(expr::differentiate(sys.H, b), expr::mul(sigma, eta_at(b)));
        if (!expr::is_zero_on(expr::simplify(expr::sub(lhs, rhs)), sys.domain)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("hamiltonian field of the damped oscillator") {
    auto sys = oscillator_h();
    auto X = hamiltonian_field(sys);
    CHECK(equiv(X.component("q"), "p/m", sys.domain));
    CHECK(equiv(X.component("p"), "-m*w^2*q - g*p", sys.domain));
    CHECK(equiv(X.component("s"), "p^2/(2*m) - 0.5*m*w^2*q^2 - g*s", sys.domain));

    expr::EvalContext ctx{{"m", 1}, {"w", 1}, {"g", 0.1}, {"q", 1}, {"p", 0}, {"s", 0}};
    CHECK(expr::evaluate(X.component("q"), ctx) == doctest::Approx(0.0));
    CHECK(expr::evaluate(X.component("p"), ctx) == doctest::Approx(-1.0));
    CHECK(expr::evaluate(X.component("s"), ctx) == doctest::Approx(-0.5));
}

TEST_CASE("s-independent Hamiltonian reduces to canonical equations") {
    ContactHamiltonian sys;
    sys.n = 1;
    sys.q = {"q"};
    sys.p = {"p"};
    sys.H = parse("p^2/(2*m) + 0.5*m*w^2*q^2");
    sys.domain = params_positive({"m", "w"});
    auto X = hamiltonian_field(sys);
    CHECK(equiv(X.component("p"), "-m*w^2*q", sys.domain));
    CHECK(equiv(X.component("s"),
                expr::sub(expr::mul(parse("p"), parse("p/m")), sys.H), sys.domain));
}

TEST_CASE("legendre map") {
    auto osc = oscillator();
    auto pl = legendre_map(osc);
    CHECK(equiv(pl[0], "m*v", osc.domain));

    auto pc = parachute();
    CHECK(equiv(legendre_map(pc)[0], "m*v + 2*gamma*s", pc.domain));

    ContactLagrangian flat;
    flat.n = 1;
    flat.q = {"q"};
    flat.v = {"v"};
    flat.L = parse("q^2 - s");
    CHECK(expr::is_constant(expr::simplify(legendre_map(flat)[0]), 0));
}

TEST_CASE("lagrangian energy") {
    auto osc = oscillator();
    CHECK(equiv(lagrangian_energy(osc), "0.5*m*v^2 + 0.5*m*w^2*q^2 + g*s", osc.domain));

    auto pc = parachute();
    CHECK(equiv(lagrangian_energy(pc), "0.5*m*v^2 + (m*g/(2*gamma))*(exp(2*gamma*y) - 1)",
                pc.domain));

    ContactLagrangian homog;
    homog.n = 1;
    homog.q = {"q"};
    homog.v = {"v"};
    homog.L = parse("a*v");
    homog.domain = params_positive({"a"});
    CHECK(expr::is_zero_on(lagrangian_energy(homog), homog.domain));
}

TEST_CASE("hessian regularity") {
    auto osc = oscillator();
    auto hi = hessian_regularity(osc);
    CHECK(hi.regular);
    CHECK(equiv(hi.W[0][0], "m", osc.domain));

    auto pen = pendulum_lag();
    auto hp = hessian_regularity(pen);
    CHECK_FALSE(hp.regular);
    CHECK(equiv(hp.W[0][0], "m", pen.domain));
    CHECK(equiv(hp.W[1][1], "m*r^2", pen.domain));
    CHECK(expr::is_constant(expr::simplify(hp.W[2][2]), 0));

    auto cw = cawley();
    auto hc = hessian_regularity(cw);
    CHECK_FALSE(hc.regular);
    CHECK(expr::is_constant(expr::simplify(hc.W[0][2]), 1));
    CHECK(expr::is_constant(expr::simplify(hc.W[2][0]), 1));
    CHECK(expr::is_constant(expr::simplify(hc.W[0][0]), 0));
    CHECK(expr::is_constant(expr::simplify(hc.W[1][1]), 0));
}

TEST_CASE("lagrangian reeb field") {
    auto osc = oscillator();
    auto R = lagrangian_reeb_field(osc);
    CHECK(expr::is_constant(R.component("s"), 1));
    CHECK(expr::is_constant(expr::simplify(R.component("v")), 0));

    auto pc = parachute();
    auto Rp = lagrangian_reeb_field(pc);
    CHECK(equiv(Rp.component("v"), "-2*gamma/m", pc.domain));

    CHECK_THROWS_AS(lagrangian_reeb_field(pendulum_lag()), MechError);
}

TEST_CASE("euler-lagrange field") {
    auto osc = oscillator();
    auto X = euler_lagrange_field(osc);
    CHECK(expr::print(X.component("q")) == "v");
    CHECK(equiv(X.component("v"), "-w^2*q - g*v", osc.domain));
    CHECK(equiv(X.component("s"), osc.L, osc.domain));

    auto pc = parachute();
    auto Xp = euler_lagrange_field(pc);
    CHECK(equiv(Xp.component("v"), "gamma*v^2 - g", pc.domain));

    auto gf = gravity_friction();
    auto Xg = euler_lagrange_field(gf);
    CHECK(equiv(Xg.component("vx"), "-gamma*vx", gf.domain));
    CHECK(equiv(Xg.component("vy"), "-g - gamma*vy", gf.domain));
}

TEST_CASE("to_hamiltonian") {
    auto osc = oscillator();
    auto sys = to_hamiltonian(osc);
    CHECK(equiv(sys.H, "p^2/(2*m) + 0.5*m*w^2*q^2 + g*s", sys.domain));

    auto cf = central_force();
    auto sc = to_hamiltonian(cf);
    CHECK(equiv(sc.H, "(p1^2 + p2^2 + p3^2)/(2*m) - kU/sqrt(q1^2 + q2^2 + q3^2) + gamma*s",
                sc.domain));

    CHECK_THROWS_AS(to_hamiltonian(cawley()), MechError);
}

TEST_CASE("dissipation rate") {
    auto sys = oscillator_h();
    CHECK(equiv(dissipation_rate(sys), "g", sys.domain));

    auto pc = parachute();
    CHECK(equiv(dissipation_rate(pc), "-2*gamma*v", pc.domain));

    ContactHamiltonian free_p;
    free_p.n = 1;
    free_p.q = {"q"};
    free_p.p = {"p"};
    free_p.H = parse("p^2/(2*m)");
    free_p.domain = params_positive({"m"});
    CHECK(expr::is_constant(expr::simplify(dissipation_rate(free_p)), 0));
}

TEST_CASE("quantities from symmetries") {
    auto sys = oscillator_h();
    SymbolicVectorField dq;
    dq.comp["q"] = expr::constant(1);
    CHECK(equiv(quantity_from_symmetry(sys, dq), "p", sys.domain));

    auto X = hamiltonian_field(sys);
    CHECK(equiv(quantity_from_symmetry(sys, X), sys.H, sys.domain));

    auto gf = gravity_friction();
    SymbolicVectorField dx;
    dx.comp["x"] = expr::constant(1);
    CHECK(equiv(quantity_from_symmetry(gf, dx), "m*vx", gf.domain));
}

TEST_CASE("check_quantity") {
    auto sys = oscillator_h();
    auto ok = check_quantity(sys, sys.H, QuantityKind::Dissipated);
    CHECK(ok.holds);
    CHECK(ok.max_residual < 1e-9);

    auto bad = check_quantity(sys, parse("q"), QuantityKind::Dissipated);
    CHECK_FALSE(bad.holds);

    auto gf = gravity_friction();
    gf.domain.intervals["vx"] = {0.5, 2.0};  // keep the denominator away from zero
    ExprPtr G = expr::simplify(expr::div(lagrangian_energy(gf), parse("m*vx")));
    CHECK(check_quantity(gf, G, QuantityKind::Conserved).holds);
}

TEST_CASE("ratio and product laws for dissipated quantities") {
    auto gf = gravity_friction();
    gf.domain.intervals["vx"] = {0.5, 2.0};
    ExprPtr E = lagrangian_energy(gf);
    ExprPtr px = parse("m*vx");
    CHECK(check_quantity(gf, E, QuantityKind::Dissipated).holds);
    CHECK(check_quantity(gf, px, QuantityKind::Dissipated).holds);
    ExprPtr G = expr::simplify(expr::div(E, px));
    CHECK(check_quantity(gf, G, QuantityKind::Conserved).holds);
    CHECK(check_quantity(gf, expr::simplify(expr::mul(px, G)), QuantityKind::Dissipated).holds);
}

TEST_CASE("reeb-free form of the dynamical equations") {
    auto sys = oscillator_h();
    CHECK(check_reeb_free_form(sys));

    SymbolicVectorField zero;
    CHECK_FALSE(check_reeb_free_form(sys, &zero));

    ContactHamiltonian free_p;
    free_p.n = 1;
    free_p.q = {"q"};
    free_p.p = {"p"};
    free_p.H = parse("p^2/(2*m)");
    free_p.domain = params_positive({"m"});
    free_p.domain.intervals["p"] = {0.5, 2.0};  // keep H away from zero
    CHECK(check_reeb_free_form(free_p));
}

TEST_CASE("lagrangians with a holonomic dissipation term") {
    auto lag = holonomic_dissipation_lagrangian(parse("0.5*m*v^2 - 0.5*m*w^2*q^2"),
                                                parse("-g*s"), {"q"}, {"v"}, "s",
                                                params_positive({"m", "w", "g"}));
    lag.p = {"p"};
    CHECK(lag.holonomic);
    CHECK(equiv(lag.L, oscillator().L, lag.domain));
    auto R = lagrangian_reeb_field(lag);
    CHECK(expr::is_constant(expr::simplify(R.component("v")), 0));

    auto plain = holonomic_dissipation_lagrangian(parse("0.5*m*v^2"), expr::constant(0), {"q"},
                                                  {"v"}, "s", params_positive({"m"}));
    CHECK(expr::is_zero_on(dissipation_rate(plain), plain.domain));

    CHECK_THROWS_AS(holonomic_dissipation_lagrangian(parse("0.5*m*v^2"), parse("-g*v*s"), {"q"},
                                                     {"v"}, "s", params_positive({"m", "g"})),
                    MechError);
}

TEST_CASE("defining-equation identity for Hamiltonian models") {
    CHECK(defining_equations_hold(oscillator_h()));
    CHECK(defining_equations_hold(to_hamiltonian(central_force())));
    CHECK(defining_equations_hold(to_hamiltonian(parachute())));
}

TEST_CASE("energy dissipation theorem") {
    auto sys = oscillator_h();
    auto X = hamiltonian_field(sys);
    ExprPtr lhs = lie_derivative(X, sys.H);
    ExprPtr rhs = expr::neg(expr::mul(dissipation_rate(sys), sys.H));
    CHECK(equiv(lhs, rhs, sys.domain));

    for (auto lag : {oscillator(), parachute(), gravity_friction(), central_force()}) {
        auto Xl = euler_lagrange_field(lag);
        ExprPtr E = lagrangian_energy(lag);
        ExprPtr r = expr::add(lie_derivative(Xl, E), expr::mul(dissipation_rate(lag), E));
        CHECK(expr::is_zero_on(expr::simplify(r), lag.domain));
    }
}

TEST_CASE("sode property is exact") {
    for (auto lag : {oscillator(), parachute(), gravity_friction(), central_force()}) {
        auto X = euler_lagrange_field(lag);
        for (int i = 0; i < lag.n; ++i)
            CHECK(expr::print(X.component(lag.q[i])) == lag.v[i]);
    }
}

TEST_CASE("legendre pushforward consistency") {
    for (auto lag : {oscillator(), gravity_friction(), central_force(), parachute()}) {
        auto ham = to_hamiltonian(lag);
        auto Xh = hamiltonian_field(ham);
        auto Xl = euler_lagrange_field(lag);
        auto momenta = legendre_map(lag);
        std::map<std::string, ExprPtr> push;  // p_i -> dL/dv_i
        for (int i = 0; i < lag.n; ++i) push[ham.p[i]] = momenta[i];

        for (int i = 0; i < lag.n; ++i) {
            ExprPtr qdot = expr::substitute(Xh.component(lag.q[i]), push);
            CHECK(equiv(qdot, Xl.component(lag.q[i]), lag.domain));
        }
        ExprPtr sdot = expr::substitute(Xh.component(ham.s), push);
        CHECK(equiv(sdot, Xl.component(lag.s), lag.domain));
        for (int i = 0; i < lag.n; ++i) {
            ExprPtr pdot = expr::substitute(Xh.component(ham.p[i]), push);
            ExprPtr dtp = lie_derivative(Xl, momenta[i]);  // d/dt of dL/dv along the flow
            CHECK(equiv(pdot, dtp, lag.domain));
        }
    }
}

TEST_CASE("momentum dissipation theorem") {
    auto gf = gravity_friction();
    CHECK(expr::is_zero_on(expr::differentiate(gf.L, "x"), gf.domain));
    ExprPtr px = expr::differentiate(gf.L, "vx");
    CHECK(check_quantity(gf, px, QuantityKind::Dissipated).holds);
}
