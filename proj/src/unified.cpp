#include "contactdyn/unified.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace contactdyn::unified {

namespace ex = contactdyn::expr;
using ex::constant;
using ex::differentiate;
using ex::simplify;
using ex::variable;

std::vector<std::string> UnifiedSystem::coords() const {
    std::vector<std::string> out(q);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < k; ++a) out.push_back(v[i][a]);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < k; ++a) out.push_back(p[i][a]);
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

bool is_free_symbol(const std::string& name) { return !name.empty() && name[0] == '_'; }

UnifiedSystem build_unified(ExprPtr L, std::vector<std::string> q,
                            std::vector<std::vector<std::string>> v,
                            std::vector<std::vector<std::string>> p,
                            std::vector<std::string> s, SampleDomain domain) {
    UnifiedSystem sys;
    sys.n = static_cast<int>(q.size());
    sys.k = static_cast<int>(s.size());
    sys.q = std::move(q);
    sys.v = std::move(v);
    sys.p = std::move(p);
    sys.s = std::move(s);
    sys.L = simplify(L);
    ExprPtr coupling = constant(0);
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a)
            coupling = ex::add(coupling, ex::mul(variable(sys.p[i][a]), variable(sys.v[i][a])));
    sys.H = simplify(ex::sub(coupling, sys.L));
    sys.domain = std::move(domain);
    for (const auto& c : sys.coords())
        if (is_free_symbol(c)) throw UnifiedError("coordinate name '" + c + "' uses the reserved prefix");
    return sys;
}

std::string to_string(TraceStatus s) {
    switch (s) {
        case TraceStatus::Converged: return "converged";
        case TraceStatus::EmptyManifold: return "empty-manifold";
        case TraceStatus::ImplicitConstraint: return "implicit-constraint";
        case TraceStatus::MaxGenerations: return "max-generations";
    }
    return "unknown";
}

std::vector<Constraint> primary_constraints(const UnifiedSystem& sys) {
    std::vector<Constraint> out;
    for (int i = 0; i < sys.n; ++i) {
        for (int a = 0; a < sys.k; ++a) {
            Constraint c;
            ExprPtr momentum = differentiate(sys.L, sys.v[i][a]);
            c.expr = simplify(ex::sub(variable(sys.p[i][a]), momentum));
            c.solved = {sys.p[i][a], momentum};
            c.generation = 0;
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::vector<ExprPtr> momentum_trace_rhs(const UnifiedSystem& sys) {
    std::vector<ExprPtr> out;
    for (int i = 0; i < sys.n; ++i) {
        ExprPtr rhs = differentiate(sys.L, sys.q[i]);
        for (int a = 0; a < sys.k; ++a)
            rhs = ex::add(rhs, ex::mul(variable(sys.p[i][a]), differentiate(sys.L, sys.s[a])));
        out.push_back(simplify(rhs));
    }
    return out;
}

FieldAnsatz base_field_ansatz(const UnifiedSystem& sys) {
    FieldAnsatz an;
    an.comps.resize(sys.k);
    auto fresh = [&](const std::string& name) {
        an.free_order.push_back(name);
        return variable(name);
    };
    for (int a = 0; a < sys.k; ++a)
        for (int i = 0; i < sys.n; ++i)
            for (int b = 0; b < sys.k; ++b)
                an.comps[a][sys.v[i][b]] =
                    fresh("_F" + std::to_string(a + 1) + "_" + sys.v[i][b]);
    for (int a = 0; a < sys.k; ++a)
        for (int i = 0; i < sys.n; ++i)
            for (int b = 0; b < sys.k; ++b)
                an.comps[a][sys.p[i][b]] =
                    fresh("_G" + std::to_string(a + 1) + "_" + sys.p[i][b]);
    for (int a = 0; a < sys.k; ++a)
        for (int b = 0; b < sys.k; ++b)
            an.comps[a][sys.s[b]] = fresh("_g" + std::to_string(a + 1) + "_" + sys.s[b]);
    for (int a = 0; a < sys.k; ++a)
        for (int i = 0; i < sys.n; ++i) an.comps[a][sys.q[i]] = variable(sys.v[i][a]);

    auto trace_rhs = momentum_trace_rhs(sys);
    for (int i = 0; i < sys.n; ++i) {
        ExprPtr lhs = constant(0);
        for (int a = 0; a < sys.k; ++a)
            lhs = ex::add(lhs, an.comps[a][sys.p[i][a]]);
        an.ledger.push_back(simplify(ex::sub(lhs, trace_rhs[i])));
    }
    ExprPtr s_lhs = constant(0);
    for (int a = 0; a < sys.k; ++a) s_lhs = ex::add(s_lhs, an.comps[a][sys.s[a]]);
    an.ledger.push_back(simplify(ex::sub(s_lhs, sys.L)));
    return an;
}

namespace {

enum class CoeffClass { Zero, Generic, NonZero };

std::vector<std::string> free_symbols_in(const ExprPtr& e,
                                         const std::vector<std::string>& order) {
    auto vars = ex::free_variables(e);
    std::vector<std::string> out;
    for (const auto& f : order)
        if (vars.count(f)) out.push_back(f);
    return out;
}

ExprPtr reduce(const ExprPtr& e, const std::map<std::string, ExprPtr>& solved) {
    if (solved.empty()) return simplify(e);
    return ex::substitute(e, solved);
}

CoeffClass classify(const ExprPtr& coeff, const SampleDomain& dom) {
    auto vars = ex::free_variables(coeff);
    std::vector<std::string> vv(vars.begin(), vars.end());
    std::vector<ex::EvalContext> pts;
    try {
        pts = ex::sample_points(vv, dom, {coeff});
    } catch (const ex::SampleError&) {
        return CoeffClass::Zero;  // nowhere evaluable: unusable as a pivot
    }
    int nonzero = 0;
    for (const auto& ctx : pts)
        if (std::fabs(ex::evaluate(coeff, ctx)) > dom.tol) ++nonzero;
    if (nonzero == static_cast<int>(pts.size())) return CoeffClass::NonZero;
    if (nonzero == 0) return CoeffClass::Zero;
    return CoeffClass::Generic;
}

struct Engine {
    AlgorithmState& st;

    ExprPtr on_manifold(const ExprPtr& e) const { return reduce(e, st.solved); }

    bool zero_on_manifold(const ExprPtr& e) const {
        return ex::is_zero_on(on_manifold(e), st.sys.domain);
    }

    void substitute_everywhere(const std::string& name, const ExprPtr& value) {
        std::map<std::string, ExprPtr> binding{{name, value}};
        for (auto& comp_map : st.ansatz.comps)
            for (auto& [coord, c] : comp_map) c = ex::substitute(c, binding);
        for (auto& [sym, val] : st.determined) val = ex::substitute(val, binding);
    }

    void record_determination(const std::string& sym, const ExprPtr& value,
                              GenerationLog& log) {
        st.determined[sym] = value;
        substitute_everywhere(sym, value);
        log.determined.push_back({sym, value});
    }

    // Adds a constraint already expressed on the current manifold; finds its
    // solved form and folds it into the solved map.
    void adopt_constraint(ExprPtr e, GenerationLog& log) {
        e = simplify(e);
        // monomial factor reduction: a constraint c*x^m*(...) is replaced by its
        // reduced zero set representative before solving
        ExprPtr reduced = e;
        for (const auto& coord : st.sys.coords()) {
            if (st.solved.count(coord)) continue;
            if (!ex::free_variables(reduced).count(coord)) continue;
            for (;;) {
                ExprPtr at_zero;
                try {
                    at_zero = ex::substitute(reduced, {{coord, constant(0)}});
                } catch (const ex::EvalError&) {
                    break;
                }
                bool divisible;
                try {
                    divisible = ex::is_zero_on(at_zero, st.sys.domain);
                } catch (const ex::SampleError&) {
                    break;
                }
                if (!divisible) break;
                ExprPtr quotient = simplify(ex::div(reduced, variable(coord)));
                ExprPtr q_at_zero;
                try {
                    q_at_zero = ex::substitute(quotient, {{coord, constant(0)}});
                    // stop once the quotient no longer vanishes on {coord = 0}:
                    // the current expression already has the x * unit shape
                    if (!ex::is_zero_on(q_at_zero, st.sys.domain)) break;
                } catch (const ex::EvalError&) {
                    break;
                } catch (const ex::SampleError&) {
                    break;
                }
                reduced = quotient;
            }
        }
        if (!ex::structurally_equal(reduced, e)) {
            st.warnings.push_back("constraint " + ex::print(e) +
                                  " reduced to representative " + ex::print(reduced));
            e = reduced;
        }

        bool touches_coords = false;
        for (const auto& coord : st.sys.coords())
            if (ex::free_variables(e).count(coord)) touches_coords = true;
        if (!touches_coords)
            throw UnifiedError("empty-manifold: constraint " + ex::print(e) +
                               " has no admissible zero set");

        Constraint c;
        c.expr = e;
        c.generation = st.pass;
        for (const auto& coord : st.sys.coords()) {
            if (st.solved.count(coord)) continue;
            auto sol = ex::solve_affine(e, coord, st.sys.domain);
            if (sol) {
                c.solved = {coord, *sol};
                break;
            }
        }
        if (!c.solved)
            throw UnifiedError("implicit-constraint: " + ex::print(e) +
                               " is not affine in any remaining coordinate");
        // canonical representative: var - rhs
        c.expr = simplify(ex::sub(variable(c.solved->first), c.solved->second));

        const auto& [var, rhs] = *c.solved;
        std::map<std::string, ExprPtr> binding{{var, rhs}};
        for (auto& [w, r] : st.solved) r = ex::substitute(r, binding);
        st.solved[var] = rhs;
        for (auto& prev : st.constraints)
            if (prev.solved) {
                prev.solved->second = ex::substitute(prev.solved->second, binding);
                // keep the pair consistent with the stored manifold
            }
        st.constraints.push_back(c);
        log.new_constraints.push_back(c);
    }

    // Classifies one tangency (or ledger) expression.
    void process(ExprPtr e, GenerationLog& log, bool restrict_to_manifold) {
        e = ex::substitute(e, st.determined);
        if (restrict_to_manifold) e = on_manifold(e);
        e = simplify(e);

        auto frees = free_symbols_in(e, st.ansatz.free_order);
        if (frees.empty()) {
            bool zero;
            try {
                zero = ex::is_zero_on(e, st.sys.domain);
            } catch (const ex::SampleError&) {
                throw UnifiedError("tangency expression " + ex::print(e) +
                                   " is nowhere evaluable on the manifold");
            }
            if (zero) {
                ++log.identities;
                return;
            }
            adopt_constraint(e, log);
            return;
        }

        // affine in the free symbols: pick the first pivot whose coefficient
        // does not vanish on the manifold samples
        for (const auto& f : frees) {
            ExprPtr coeff = on_manifold(differentiate(e, f));
            CoeffClass cls = classify(coeff, st.sys.domain);
            if (cls == CoeffClass::Zero) continue;
            if (cls == CoeffClass::Generic) {
                std::string w = "pivot coefficient " + ex::print(coeff) + " for " + f +
                                " vanishes at some sample points; treated as nonzero";
                st.warnings.push_back(w);
                log.warnings.push_back(w);
            }
            std::map<std::string, ExprPtr> zero_pivot{{f, constant(0)}};
            ExprPtr rest = ex::substitute(e, zero_pivot);
            ExprPtr value = simplify(ex::div(ex::neg(rest), differentiate(e, f)));
            record_determination(f, value, log);
            return;
        }

        // every free coefficient vanishes on the manifold: the constant part
        // must vanish or become a new constraint
        std::map<std::string, ExprPtr> all_zero;
        for (const auto& f : frees) all_zero[f] = constant(0);
        ExprPtr constant_part = simplify(ex::substitute(e, all_zero));
        bool zero;
        try {
            zero = ex::is_zero_on(constant_part, st.sys.domain);
        } catch (const ex::SampleError&) {
            throw UnifiedError("tangency constant part " + ex::print(constant_part) +
                               " is nowhere evaluable");
        }
        if (zero) {
            ++log.identities;
            return;
        }
        adopt_constraint(constant_part, log);
    }
};

}  // namespace

GenerationLog tangency_step(AlgorithmState& state) {
    GenerationLog log;
    log.index = state.pass;
    Engine engine{state};
    size_t snapshot = state.constraints.size();
    for (size_t ci = 0; ci < snapshot; ++ci) {
        // the stored expr never mutates; restriction happens inside process()
        ExprPtr xi = state.constraints[ci].expr;
        for (int a = 0; a < state.sys.k; ++a) {
            ExprPtr e = constant(0);
            for (const auto& [coord, comp] : state.ansatz.comps[a]) {
                ExprPtr d = differentiate(xi, coord);
                if (ex::is_constant(d, 0)) continue;
                e = ex::add(e, ex::mul(comp, d));
            }
            engine.process(e, log, /*restrict_to_manifold=*/true);
        }
    }
    return log;
}

ConstraintTrace run_algorithm(const UnifiedSystem& sys, int max_generations) {
    ConstraintTrace trace;
    trace.sys = sys;

    AlgorithmState state;
    state.sys = sys;
    state.ansatz = base_field_ansatz(sys);
    state.pass = 0;

    GenerationLog gen0;
    gen0.index = 0;
    Engine engine{state};
    try {
        for (auto& c : primary_constraints(sys)) {
            state.constraints.push_back(c);
            state.solved[c.solved->first] = c.solved->second;
            gen0.new_constraints.push_back(c);
        }
        // the base relations are processed without restricting to the Legendre
        // graph so momentum components stay expressed through the momenta
        for (const auto& rel : state.ansatz.ledger)
            engine.process(rel, gen0, /*restrict_to_manifold=*/false);
        trace.generations.push_back(gen0);

        trace.status = TraceStatus::MaxGenerations;
        for (int pass = 1; pass <= max_generations; ++pass) {
            state.pass = pass;
            GenerationLog log = tangency_step(state);
            bool stable = log.new_constraints.empty() && log.determined.empty();
            if (!stable) trace.generations.push_back(log);
            if (stable) {
                trace.status = TraceStatus::Converged;
                break;
            }
        }
    } catch (const UnifiedError& err) {
        std::string what = err.what();
        if (what.rfind("empty-manifold", 0) == 0) trace.status = TraceStatus::EmptyManifold;
        else if (what.rfind("implicit-constraint", 0) == 0)
            trace.status = TraceStatus::ImplicitConstraint;
        else trace.status = TraceStatus::ImplicitConstraint;
        trace.diagnostic = what;
    }

    trace.constraints = state.constraints;
    trace.solved = state.solved;
    trace.ansatz = state.ansatz;
    trace.determined = state.determined;
    trace.warnings = state.warnings;
    for (const auto& f : state.ansatz.free_order)
        if (!state.determined.count(f)) {
            bool used = false;
            for (const auto& comp_map : state.ansatz.comps)
                for (const auto& [coord, c] : comp_map)
                    if (ex::free_variables(c).count(f)) used = true;
            if (used) trace.free_remaining.push_back(f);
        }
    return trace;
}

namespace {

std::map<std::string, ExprPtr> primary_bindings(const UnifiedSystem& sys) {
    std::map<std::string, ExprPtr> out;
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a)
            out[sys.p[i][a]] = differentiate(sys.L, sys.v[i][a]);
    return out;
}

std::vector<std::string> collect_frees(const std::vector<std::map<std::string, ExprPtr>>& field,
                                       const std::vector<std::string>& order) {
    std::set<std::string> seen;
    for (const auto& comp_map : field)
        for (const auto& [coord, c] : comp_map)
            for (const auto& v : ex::free_variables(c))
                if (is_free_symbol(v)) seen.insert(v);
    std::vector<std::string> out;
    for (const auto& f : order)
        if (seen.count(f)) out.push_back(f);
    return out;
}

}  // namespace

ProjectedSide project_to_lagrangian(const ConstraintTrace& trace) {
    const auto& sys = trace.sys;
    ProjectedSide side;
    auto bind = primary_bindings(sys);
    for (const auto& c : trace.constraints) {
        ExprPtr e = simplify(ex::substitute(c.expr, bind));
        bool zero;
        try {
            zero = ex::is_zero_on(e, sys.domain);
        } catch (const ex::SampleError&) {
            zero = false;
        }
        if (!zero) side.constraints.push_back(e);
    }
    side.field.resize(sys.k);
    std::vector<std::string> lag_coords(sys.q);
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a) lag_coords.push_back(sys.v[i][a]);
    lag_coords.insert(lag_coords.end(), sys.s.begin(), sys.s.end());
    for (int a = 0; a < sys.k; ++a)
        for (const auto& coord : lag_coords)
            side.field[a][coord] =
                simplify(ex::substitute(trace.ansatz.comps[a].at(coord), bind));
    side.free_symbols = collect_frees(side.field, trace.ansatz.free_order);
    return side;
}

ProjectedSide project_to_hamiltonian(const ConstraintTrace& trace) {
    const auto& sys = trace.sys;
    ProjectedSide side;

    // invert the Legendre relations; each relation may resolve any one of the
    // remaining velocities (they can be cross-coupled)
    std::map<std::string, ExprPtr> elim;
    std::vector<std::string> vnames;
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a) vnames.push_back(sys.v[i][a]);
    std::vector<ExprPtr> legendre;  // p - dL/dv
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a)
            legendre.push_back(simplify(ex::sub(variable(sys.p[i][a]),
                                                differentiate(sys.L, sys.v[i][a]))));
    std::vector<bool> used(legendre.size(), false);
    bool progress = true;
    while (progress) {
        progress = false;
        for (size_t r = 0; r < legendre.size(); ++r) {
            if (used[r]) continue;
            ExprPtr e = ex::substitute(legendre[r], elim);
            for (const auto& vn : vnames) {
                if (elim.count(vn)) continue;
                auto sol = ex::solve_affine(e, vn, sys.domain);
                if (!sol) continue;
                elim[vn] = *sol;
                for (auto& [w, rr] : elim) rr = ex::substitute(rr, {{vn, *sol}});
                used[r] = true;
                progress = true;
                break;
            }
        }
    }

    auto has_velocity = [&](const ExprPtr& e) -> std::optional<std::string> {
        auto vars = ex::free_variables(e);
        for (int i = 0; i < sys.n; ++i)
            for (int a = 0; a < sys.k; ++a)
                if (vars.count(sys.v[i][a])) return sys.v[i][a];
        return std::nullopt;
    };

    for (const auto& c : trace.constraints) {
        ExprPtr e = simplify(ex::substitute(c.expr, elim));
        bool zero;
        try {
            zero = ex::is_zero_on(e, sys.domain);
        } catch (const ex::SampleError&) {
            zero = false;
        }
        if (zero) continue;
        auto vleft = has_velocity(e);
        if (!vleft) {
            side.constraints.push_back(e);
            continue;
        }
        // a constraint that merely pins a leftover fiber velocity does not
        // restrict the projected image
        bool pins_fiber = false;
        for (int i = 0; i < sys.n && !pins_fiber; ++i)
            for (int a = 0; a < sys.k && !pins_fiber; ++a) {
                const std::string& vn = sys.v[i][a];
                if (elim.count(vn)) continue;
                if (!ex::free_variables(e).count(vn)) continue;
                if (ex::solve_affine(e, vn, sys.domain)) pins_fiber = true;
            }
        if (!pins_fiber)
            throw UnifiedError("project_to_hamiltonian: non-eliminable velocity '" + *vleft +
                               "' in constraint " + ex::print(e));
    }

    side.field.resize(sys.k);
    std::vector<std::string> ham_coords(sys.q);
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a) ham_coords.push_back(sys.p[i][a]);
    ham_coords.insert(ham_coords.end(), sys.s.begin(), sys.s.end());
    for (int a = 0; a < sys.k; ++a)
        for (const auto& coord : ham_coords)
            side.field[a][coord] =
                simplify(ex::substitute(trace.ansatz.comps[a].at(coord), elim));
    side.free_symbols = collect_frees(side.field, trace.ansatz.free_order);
    return side;
}

std::vector<std::map<std::string, ExprPtr>> reduced_field(const ConstraintTrace& trace) {
    const auto& sys = trace.sys;
    std::vector<std::map<std::string, ExprPtr>> out(sys.k);
    for (int a = 0; a < sys.k; ++a) {
        for (const auto& coord : sys.coords()) {
            if (trace.solved.count(coord)) continue;
            out[a][coord] = simplify(ex::substitute(trace.ansatz.comps[a].at(coord), trace.solved));
        }
    }
    return out;
}

}  // namespace contactdyn::unified
