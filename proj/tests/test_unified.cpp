#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "contactdyn/contact.hpp"
#include "contactdyn/unified.hpp"

using namespace contactdyn;
using namespace contactdyn::unified;
using expr::ExprPtr;
using expr::parse;
using expr::SampleDomain;

namespace {

SampleDomain params_positive(std::initializer_list<const char*> names) {
    SampleDomain d;
    for (const char* n : names) d.intervals[n] = {0.5, 2.0};
    return d;
}

UnifiedSystem oscillator_sr() {
    return build_unified(parse("0.5*m*v^2 - 0.5*m*w^2*q^2 - g*s"), {"q"}, {{"v"}}, {{"p"}},
                         {"s"}, params_positive({"m", "w", "g"}));
}

UnifiedSystem pendulum_sr() {
    auto d = params_positive({"m", "g", "ell", "gamma"});
    d.intervals["r"] = {0.5, 2.0};
    return build_unified(
        parse("0.5*m*(vr^2 + r^2*vth^2) - m*g*r*(1 - cos(th)) + lam*(r - ell) - gamma*s"),
        {"r", "th", "lam"}, {{"vr"}, {"vth"}, {"vlam"}}, {{"pr"}, {"pth"}, {"plam"}}, {"s"}, d);
}

UnifiedSystem cawley_sr() {
    return build_unified(parse("v1*v3 + 0.5*q2*q3^2 - gamma*s"), {"q1", "q2", "q3"},
                         {{"v1"}, {"v2"}, {"v3"}}, {{"p1"}, {"p2"}, {"p3"}}, {"s"},
                         params_positive({"gamma"}));
}

UnifiedSystem central_force_sr() {
    auto d = params_positive({"m", "kU", "gamma"});
    for (const char* c : {"q1", "q2", "q3"}) d.intervals[c] = {0.3, 2.0};
    return build_unified(
        parse("0.5*m*(v1^2 + v2^2 + v3^2) + kU/sqrt(q1^2 + q2^2 + q3^2) - gamma*s"),
        {"q1", "q2", "q3"}, {{"v1"}, {"v2"}, {"v3"}}, {{"p1"}, {"p2"}, {"p3"}}, {"s"}, d);
}

UnifiedSystem string_sr() {
    return build_unified(parse("0.5*rho*ut^2 - 0.5*tau*ux^2 - gamma*st"), {"u"},
                         {{"ut", "ux"}}, {{"pt", "px"}}, {"st", "sx"},
                         params_positive({"rho", "tau", "gamma"}));
}

UnifiedSystem klein_gordon_sr() {
    auto d = params_positive({"m2", "g0", "g1", "g2", "g3"});
    return build_unified(
        parse("0.5*(v0^2 - v1^2 - v2^2 - v3^2) - 0.5*m2*q^2 + g0*s0 + g1*s1 + g2*s2 + g3*s3"),
        {"q"}, {{"v0", "v1", "v2", "v3"}}, {{"p0", "p1", "p2", "p3"}},
        {"s0", "s1", "s2", "s3"}, d);
}

bool equiv(const ExprPtr& a, const std::string& b, const SampleDomain& d) {
    return expr::equivalent_on_domain(a, parse(b), d);
}

// semantic check: `e` vanishes once the expected solved forms are substituted
bool vanishes_under(const ExprPtr& e, const std::map<std::string, ExprPtr>& forms,
                    const SampleDomain& d) {
    return expr::is_zero_on(expr::substitute(e, forms), d);
}

}  // namespace

TEST_CASE("build_unified assembles H = coupling - L") {
    auto sys = oscillator_sr();
    CHECK(equiv(sys.H, "p*v - 0.5*m*v^2 + 0.5*m*w^2*q^2 + g*s", sys.domain));

    auto str = string_sr();
    CHECK(equiv(str.H, "pt*ut + px*ux - 0.5*rho*ut^2 + 0.5*tau*ux^2 + gamma*st", str.domain));

    auto trivial = build_unified(expr::constant(0), {"q"}, {{"v"}}, {{"p"}}, {"s"},
                                 SampleDomain{});
    CHECK(equiv(trivial.H, "p*v", trivial.domain));
}

TEST_CASE("primary constraints are the Legendre graph") {
    auto pen = pendulum_sr();
    auto prim = primary_constraints(pen);
    REQUIRE(prim.size() == 3);
    CHECK(equiv(prim[0].expr, "pr - m*vr", pen.domain));
    CHECK(equiv(prim[1].expr, "pth - m*r^2*vth", pen.domain));
    CHECK(equiv(prim[2].expr, "plam", pen.domain));

    auto kg = klein_gordon_sr();
    auto pkg = primary_constraints(kg);
    REQUIRE(pkg.size() == 4);
    CHECK(equiv(pkg[0].expr, "p0 - v0", kg.domain));
    CHECK(equiv(pkg[1].expr, "p1 + v1", kg.domain));
    CHECK(equiv(pkg[2].expr, "p2 + v2", kg.domain));
    CHECK(equiv(pkg[3].expr, "p3 + v3", kg.domain));

    // property: xi + dL/dv - p vanishes identically
    for (auto sys : {oscillator_sr(), cawley_sr()}) {
        auto pc = primary_constraints(sys);
        int idx = 0;
        for (int i = 0; i < sys.n; ++i)
            for (int a = 0; a < sys.k; ++a, ++idx) {
                ExprPtr r = expr::add(pc[idx].expr,
                                      expr::sub(expr::differentiate(sys.L, sys.v[i][a]),
                                                expr::variable(sys.p[i][a])));
                CHECK(expr::is_zero_on(expr::simplify(r), sys.domain));
            }
    }
}

TEST_CASE("base ansatz: holonomy plus trace relations") {
    auto sys = oscillator_sr();
    auto an = base_field_ansatz(sys);
    CHECK(expr::print(an.comps[0].at("q")) == "v");
    REQUIRE(an.ledger.size() == 2);

    auto str = string_sr();
    auto ans = base_field_ansatz(str);
    CHECK(expr::print(ans.comps[0].at("u")) == "ut");
    CHECK(expr::print(ans.comps[1].at("u")) == "ux");
    // momentum trace: G1_pt + G2_px + gamma*pt = 0
    CHECK(equiv(ans.ledger[0], "_G1_pt + _G2_px + gamma*pt", str.domain));

    auto rhs = momentum_trace_rhs(str);
    CHECK(equiv(rhs[0], "-gamma*pt", str.domain));

    // L independent of q and s: momentum components vanish after generation 0
    auto flat = build_unified(parse("0.5*v^2"), {"q"}, {{"v"}}, {{"p"}}, {"s"},
                              SampleDomain{});
    auto tr = run_algorithm(flat);
    CHECK(expr::is_zero_on(tr.ansatz.comps[0].at("p"), flat.domain));
}

TEST_CASE("regular k=1 systems converge in one tangency generation") {
    for (auto sys : {oscillator_sr(), central_force_sr()}) {
        auto trace = run_algorithm(sys);
        CHECK(trace.status == TraceStatus::Converged);
        REQUIRE(trace.generations.size() == 2);  // primaries, then one tangency pass
        CHECK(trace.generations[1].new_constraints.empty());
        CHECK(trace.free_remaining.empty());
    }
}

TEST_CASE("oscillator trace determines the Euler-Lagrange acceleration") {
    auto trace = run_algorithm(oscillator_sr());
    REQUIRE(trace.determined.count("_F1_v"));
    CHECK(equiv(trace.determined.at("_F1_v"), "-w^2*q - g*v", trace.sys.domain));
    CHECK(equiv(trace.ansatz.comps[0].at("p"), "-m*w^2*q - g*p", trace.sys.domain));
    CHECK(equiv(trace.ansatz.comps[0].at("s"), "0.5*m*v^2 - 0.5*m*w^2*q^2 - g*s",
                trace.sys.domain));
}

TEST_CASE("central force: unique acceleration from one pass") {
    auto trace = run_algorithm(central_force_sr());
    REQUIRE(trace.status == TraceStatus::Converged);
    auto red = reduced_field(trace);
    // F^i = -(gamma p^i + U'(r) q^i / r)/m with U = -kU/r, restricted to the manifold
    CHECK(equiv(red[0].at("v1"), "-gamma*v1 - kU*q1/(m*(q1^2 + q2^2 + q3^2)^1.5)",
                trace.sys.domain));
    CHECK(equiv(red[0].at("v3"), "-gamma*v3 - kU*q3/(m*(q1^2 + q2^2 + q3^2)^1.5)",
                trace.sys.domain));
}

TEST_CASE("pendulum constraint chain") {
    auto trace = run_algorithm(pendulum_sr());
    const auto& d = trace.sys.domain;
    REQUIRE(trace.status == TraceStatus::Converged);
    REQUIRE(trace.constraints.size() == 7);
    CHECK(equiv(trace.constraints[3].expr, "r - ell", d));
    CHECK(equiv(trace.constraints[4].expr, "vr", d));
    CHECK(equiv(trace.constraints[5].expr, "lam - (m*g*(1 - cos(th)) - m*ell*vth^2)", d));
    CHECK(equiv(trace.constraints[6].expr,
                "vlam - m*(3*g*vth*sin(th) + 2*ell*gamma*vth^2)", d));
    CHECK(trace.free_remaining.empty());

    auto red = reduced_field(trace);
    CHECK(expr::print(red[0].at("th")) == "vth");
    CHECK(equiv(red[0].at("vth"), "-(g/ell)*sin(th) - gamma*vth", d));
    CHECK(equiv(red[0].at("s"), "0.5*m*ell^2*vth^2 - m*g*ell*(1 - cos(th)) - gamma*s", d));
}

TEST_CASE("pendulum projections recover S_f and P_f") {
    auto trace = run_algorithm(pendulum_sr());
    const auto& d = trace.sys.domain;

    auto lag = project_to_lagrangian(trace);
    REQUIRE(lag.constraints.size() == 4);
    std::map<std::string, ExprPtr> sf{
        {"r", parse("ell")},
        {"vr", expr::constant(0)},
        {"lam", parse("m*g*(1 - cos(th)) - m*ell*vth^2")},
        {"vlam", parse("m*(3*g*vth*sin(th) + 2*ell*gamma*vth^2)")}};
    for (const auto& c : lag.constraints) CHECK(vanishes_under(c, sf, d));

    auto ham = project_to_hamiltonian(trace);
    REQUIRE(ham.constraints.size() == 4);
    std::map<std::string, ExprPtr> pf{
        {"r", parse("ell")},
        {"pr", expr::constant(0)},
        {"plam", expr::constant(0)},
        {"lam", parse("m*g*(1 - cos(th)) - pth^2/(m*ell^3)")}};
    for (const auto& c : ham.constraints) CHECK(vanishes_under(c, pf, d));
}

TEST_CASE("cawley chain and final free direction") {
    auto trace = run_algorithm(cawley_sr());
    const auto& d = trace.sys.domain;
    REQUIRE(trace.status == TraceStatus::Converged);
    REQUIRE(trace.constraints.size() == 5);
    CHECK(equiv(trace.constraints[0].expr, "p1 - v3", d));
    CHECK(equiv(trace.constraints[1].expr, "p2", d));
    CHECK(equiv(trace.constraints[2].expr, "p3 - v1", d));
    CHECK(equiv(trace.constraints[3].expr, "q3", d));
    CHECK(equiv(trace.constraints[4].expr, "v3", d));
    REQUIRE(trace.free_remaining == std::vector<std::string>{"_F1_v2"});

    auto red = reduced_field(trace);
    CHECK(equiv(red[0].at("v1"), "-gamma*v1", d));
    CHECK(equiv(red[0].at("s"), "-gamma*s", d));

    auto lag = project_to_lagrangian(trace);
    REQUIRE(lag.constraints.size() == 2);
    std::map<std::string, ExprPtr> sf{{"q3", expr::constant(0)}, {"v3", expr::constant(0)}};
    for (const auto& c : lag.constraints) CHECK(vanishes_under(c, sf, d));

    auto ham = project_to_hamiltonian(trace);
    REQUIRE(ham.constraints.size() == 3);
    std::map<std::string, ExprPtr> pf{{"p1", expr::constant(0)},
                                      {"p2", expr::constant(0)},
                                      {"q3", expr::constant(0)}};
    for (const auto& c : ham.constraints) CHECK(vanishes_under(c, pf, d));
}

TEST_CASE("damped string: ledger relation and one-pass convergence") {
    auto trace = run_algorithm(string_sr());
    const auto& d = trace.sys.domain;
    REQUIRE(trace.status == TraceStatus::Converged);
    REQUIRE(trace.generations.size() == 2);
    REQUIRE(trace.constraints.size() == 2);
    CHECK(equiv(trace.constraints[0].expr, "pt - rho*ut", d));
    CHECK(equiv(trace.constraints[1].expr, "px + tau*ux", d));

    // G1_pt was pivoted out of the momentum trace relation
    REQUIRE(trace.determined.count("_G1_pt"));
    CHECK(expr::is_zero_on(
        expr::simplify(expr::sub(trace.determined.at("_G1_pt"),
                                 parse("-gamma*pt - _G2_px"))),
        d));
    // tangency determined the v-components against the remaining G's
    // (the stored value lives on the Legendre graph, so pt appears as rho*ut)
    REQUIRE(trace.determined.count("_F1_ut"));
    CHECK(expr::is_zero_on(
        expr::simplify(expr::sub(trace.determined.at("_F1_ut"),
                                 parse("(-gamma*rho*ut - _G2_px)/rho"))),
        d));
    CHECK(trace.free_remaining ==
          std::vector<std::string>{"_G1_px", "_G2_pt", "_G2_px", "_g1_sx", "_g2_st", "_g2_sx"});
}

TEST_CASE("damped Klein-Gordon at k=4 converges after the primaries") {
    auto trace = run_algorithm(klein_gordon_sr());
    REQUIRE(trace.status == TraceStatus::Converged);
    REQUIRE(trace.generations.size() == 2);
    CHECK(trace.generations[1].new_constraints.empty());
    CHECK(trace.constraints.size() == 4);
    // all sixteen v-components pinned; the 15 G's and 15 g's stay free
    CHECK(trace.free_remaining.size() == 30);
    REQUIRE(trace.determined.count("_F1_v0"));
    ExprPtr f0 = expr::substitute(trace.determined.at("_F1_v0"),
                                  {{"_G2_p1", expr::constant(0)},
                                   {"_G3_p2", expr::constant(0)},
                                   {"_G4_p3", expr::constant(0)}});
    // on the Legendre graph: p0 = v0, p_i = -v_i
    CHECK(equiv(f0, "-m2*q + g0*v0 - g1*v1 - g2*v2 - g3*v3", trace.sys.domain));
}

TEST_CASE("projection consistency for the regular oscillator") {
    auto trace = run_algorithm(oscillator_sr());
    const auto& d = trace.sys.domain;

    mech::ContactLagrangian lag;
    lag.n = 1;
    lag.q = {"q"};
    lag.v = {"v"};
    lag.p = {"p"};
    lag.L = trace.sys.L;
    lag.domain = d;

    auto lag_side = project_to_lagrangian(trace);
    CHECK(lag_side.constraints.empty());
    auto X = mech::euler_lagrange_field(lag);
    for (const auto& [coord, comp] : lag_side.field[0])
        CHECK(expr::equivalent_on_domain(comp, X.component(coord), d));

    auto ham_side = project_to_hamiltonian(trace);
    CHECK(ham_side.constraints.empty());
    auto Y = mech::hamiltonian_field(mech::to_hamiltonian(lag));
    for (const auto& [coord, comp] : ham_side.field[0])
        CHECK(expr::equivalent_on_domain(comp, Y.component(coord), d));
}

TEST_CASE("holonomy is never violated") {
    for (auto sys : {oscillator_sr(), pendulum_sr(), cawley_sr(), string_sr()}) {
        auto trace = run_algorithm(sys);
        for (int a = 0; a < sys.k; ++a)
            for (int i = 0; i < sys.n; ++i)
                CHECK(expr::print(trace.ansatz.comps[a].at(sys.q[i])) == sys.v[i][a]);
    }
}

TEST_CASE("solved constraints substitute to zero") {
    auto trace = run_algorithm(pendulum_sr());
    for (const auto& c : trace.constraints) {
        REQUIRE(c.solved.has_value());
        ExprPtr back = expr::substitute(c.expr, trace.solved);
        CHECK(expr::is_zero_on(back, trace.sys.domain));
    }
}

TEST_CASE("trace determinism") {
    auto a = run_algorithm(pendulum_sr());
    auto b = run_algorithm(pendulum_sr());
    REQUIRE(a.constraints.size() == b.constraints.size());
    for (size_t i = 0; i < a.constraints.size(); ++i)
        CHECK(expr::print(a.constraints[i].expr) == expr::print(b.constraints[i].expr));
    REQUIRE(a.determined.size() == b.determined.size());
    for (const auto& [sym, val] : a.determined)
        CHECK(expr::print(val) == expr::print(b.determined.at(sym)));
}

TEST_CASE("inconsistent dynamics is reported as an empty manifold") {
    auto sys = build_unified(parse("q"), {"q"}, {{"v"}}, {{"p"}}, {"s"}, SampleDomain{});
    auto trace = run_algorithm(sys);
    CHECK(trace.status == TraceStatus::EmptyManifold);
}

TEST_CASE("non-affine secondary constraints halt with a diagnostic") {
    auto sys = build_unified(parse("0.5*v1^2 + q2*(q1^2 - 1)"), {"q1", "q2"}, {{"v1"}, {"v2"}},
                             {{"p1"}, {"p2"}}, {"s"}, SampleDomain{});
    auto trace = run_algorithm(sys);
    CHECK(trace.status == TraceStatus::ImplicitConstraint);
    CHECK(!trace.diagnostic.empty());
}
