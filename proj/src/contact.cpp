#include "contactdyn/contact.hpp"

#include <algorithm>

namespace contactdyn::mech {

namespace ex = contactdyn::expr;
using ex::constant;
using ex::differentiate;
using ex::simplify;
using ex::variable;

ExprPtr SymbolicVectorField::component(const std::string& coord) const {
    auto it = comp.find(coord);
    return it != comp.end() ? it->second : constant(0);
}

std::vector<std::string> ContactHamiltonian::coords() const {
    std::vector<std::string> out(q);
    out.insert(out.end(), p.begin(), p.end());
    out.push_back(s);
    return out;
}

std::vector<std::string> ContactLagrangian::coords() const {
    std::vector<std::string> out(q);
    out.insert(out.end(), v.begin(), v.end());
    out.push_back(s);
    return out;
}

ExprPtr determinant(const Matrix& m) {
    size_t n = m.size();
    if (n == 0) return constant(1);
    if (n == 1) return m[0][0];
    ExprPtr det = constant(0);
    for (size_t j = 0; j < n; ++j) {
        Matrix minor;
        for (size_t r = 1; r < n; ++r) {
            std::vector<ExprPtr> row;
            for (size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        ExprPtr term = ex::mul(m[0][j], determinant(minor));
        det = (j % 2 == 0) ? ex::add(det, term) : ex::sub(det, term);
    }
    return simplify(det);
}

Matrix inverse_adjugate(const Matrix& m, const ExprPtr& det) {
    size_t n = m.size();
    Matrix inv(n, std::vector<ExprPtr>(n));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            Matrix minor;
            for (size_t r = 0; r < n; ++r) {
                if (r == i) continue;
                std::vector<ExprPtr> row;
                for (size_t c = 0; c < n; ++c)
                    if (c != j) row.push_back(m[r][c]);
                minor.push_back(std::move(row));
            }
            ExprPtr cof = determinant(minor);
            if ((i + j) % 2 == 1) cof = ex::neg(cof);
            inv[j][i] = simplify(ex::div(cof, det));  // adjugate transpose
        }
    }
    return inv;
}

ExprPtr lie_derivative(const SymbolicVectorField& X, const ExprPtr& f) {
    ExprPtr out = constant(0);
    for (const auto& [coord, comp] : X.comp)
        out = ex::add(out, ex::mul(comp, differentiate(f, coord)));
    return simplify(out);
}

SymbolicVectorField hamiltonian_field(const ContactHamiltonian& sys) {
    SymbolicVectorField X;
    ExprPtr sdot = ex::neg(sys.H);
    for (int i = 0; i < sys.n; ++i) {
        ExprPtr dHdp = differentiate(sys.H, sys.p[i]);
        X.comp[sys.q[i]] = dHdp;
        X.comp[sys.p[i]] = simplify(ex::neg(ex::add(
            differentiate(sys.H, sys.q[i]),
            ex::mul(variable(sys.p[i]), differentiate(sys.H, sys.s)))));
        sdot = ex::add(sdot, ex::mul(variable(sys.p[i]), dHdp));
    }
    X.comp[sys.s] = simplify(sdot);
    return X;
}

std::vector<ExprPtr> legendre_map(const ContactLagrangian& lag) {
    std::vector<ExprPtr> out;
    out.reserve(lag.n);
    for (int i = 0; i < lag.n; ++i) out.push_back(differentiate(lag.L, lag.v[i]));
    return out;
}

ExprPtr lagrangian_energy(const ContactLagrangian& lag) {
    ExprPtr e = ex::neg(lag.L);
    for (int i = 0; i < lag.n; ++i)
        e = ex::add(e, ex::mul(variable(lag.v[i]), differentiate(lag.L, lag.v[i])));
    return simplify(e);
}

HessianInfo hessian_regularity(const ContactLagrangian& lag) {
    HessianInfo info;
    info.W.assign(lag.n, std::vector<ExprPtr>(lag.n));
    for (int i = 0; i < lag.n; ++i)
        for (int j = 0; j < lag.n; ++j)
            info.W[i][j] = differentiate(differentiate(lag.L, lag.v[i]), lag.v[j]);
    info.det = determinant(info.W);
    info.regular = !ex::is_zero_on(info.det, lag.domain);
    return info;
}

namespace {

Matrix regular_inverse(const ContactLagrangian& lag, const char* op) {
    if (lag.n > 4)
        throw MechError(std::string(op) +
                        ": symbolic Hessian inverse capped at n <= 4; evaluate numerically");
    HessianInfo info = hessian_regularity(lag);
    if (!info.regular) throw MechError(std::string(op) + ": singular Hessian");
    return inverse_adjugate(info.W, info.det);
}

}  // namespace

SymbolicVectorField lagrangian_reeb_field(const ContactLagrangian& lag) {
    Matrix winv = regular_inverse(lag, "lagrangian_reeb_field");
    SymbolicVectorField R;
    R.comp[lag.s] = constant(1);
    for (int i = 0; i < lag.n; ++i) {
        ExprPtr c = constant(0);
        for (int j = 0; j < lag.n; ++j) {
            ExprPtr mixed = differentiate(differentiate(lag.L, lag.s), lag.v[j]);
            c = ex::add(c, ex::mul(winv[j][i], mixed));
        }
        R.comp[lag.v[i]] = simplify(ex::neg(c));
    }
    for (int i = 0; i < lag.n; ++i) R.comp[lag.q[i]] = constant(0);
    return R;
}

SymbolicVectorField euler_lagrange_field(const ContactLagrangian& lag) {
    Matrix winv = regular_inverse(lag, "euler_lagrange_field");
    SymbolicVectorField X;
    ExprPtr dLds = differentiate(lag.L, lag.s);
    for (int i = 0; i < lag.n; ++i) X.comp[lag.q[i]] = variable(lag.v[i]);
    X.comp[lag.s] = lag.L;
    for (int i = 0; i < lag.n; ++i) {
        ExprPtr acc = constant(0);
        for (int k = 0; k < lag.n; ++k) {
            ExprPtr dLdvk = differentiate(lag.L, lag.v[k]);
            ExprPtr rhs = differentiate(lag.L, lag.q[k]);
            for (int j = 0; j < lag.n; ++j)
                rhs = ex::sub(rhs, ex::mul(variable(lag.v[j]),
                                           differentiate(dLdvk, lag.q[j])));
            rhs = ex::sub(rhs, ex::mul(lag.L, differentiate(dLdvk, lag.s)));
            rhs = ex::add(rhs, ex::mul(dLds, dLdvk));
            acc = ex::add(acc, ex::mul(winv[i][k], rhs));
        }
        X.comp[lag.v[i]] = simplify(acc);
    }
    return X;
}

std::map<std::string, ExprPtr> legendre_inverse(const ContactLagrangian& lag) {
    auto momenta = legendre_map(lag);
    std::vector<std::string> pnames = lag.p;
    if (pnames.empty())
        for (const auto& qi : lag.q) pnames.push_back("p_" + qi);
    std::map<std::string, ExprPtr> bindings;
    std::vector<int> remaining(lag.n);
    for (int i = 0; i < lag.n; ++i) remaining[i] = i;
    bool progress = true;
    while (!remaining.empty() && progress) {
        progress = false;
        for (auto it = remaining.begin(); it != remaining.end();) {
            int i = *it;
            ExprPtr e = ex::sub(variable(pnames[i]), momenta[i]);
            e = ex::substitute(e, bindings);
            auto sol = ex::solve_affine(e, lag.v[i], lag.domain);
            if (sol) {
                bindings[lag.v[i]] = *sol;
                it = remaining.erase(it);
                progress = true;
            } else {
                ++it;
            }
        }
    }
    if (!remaining.empty())
        throw MechError("to_hamiltonian: Legendre map not explicitly invertible");
    return bindings;
}

ContactHamiltonian to_hamiltonian(const ContactLagrangian& lag) {
    auto bindings = legendre_inverse(lag);
    ContactHamiltonian sys;
    sys.n = lag.n;
    sys.q = lag.q;
    sys.p = lag.p;
    if (sys.p.empty())
        for (const auto& qi : lag.q) sys.p.push_back("p_" + qi);
    sys.s = lag.s;
    sys.H = ex::substitute(lagrangian_energy(lag), bindings);
    sys.domain = lag.domain;
    return sys;
}

ExprPtr dissipation_rate(const ContactHamiltonian& sys) {
    return differentiate(sys.H, sys.s);
}

ExprPtr dissipation_rate(const ContactLagrangian& lag) {
    return simplify(ex::neg(differentiate(lag.L, lag.s)));
}

std::map<std::string, ExprPtr> contact_form(const ContactHamiltonian& sys) {
    std::map<std::string, ExprPtr> eta;
    eta[sys.s] = constant(1);
    for (int i = 0; i < sys.n; ++i) {
        eta[sys.q[i]] = ex::neg(variable(sys.p[i]));
        eta[sys.p[i]] = constant(0);
    }
    return eta;
}

std::map<std::string, ExprPtr> contact_form(const ContactLagrangian& lag) {
    std::map<std::string, ExprPtr> eta;
    eta[lag.s] = constant(1);
    for (int i = 0; i < lag.n; ++i) {
        eta[lag.q[i]] = simplify(ex::neg(differentiate(lag.L, lag.v[i])));
        eta[lag.v[i]] = constant(0);
    }
    return eta;
}

namespace {

ExprPtr contract_with_form(const std::map<std::string, ExprPtr>& eta,
                           const SymbolicVectorField& Y) {
    ExprPtr out = constant(0);
    for (const auto& [coord, comp] : Y.comp) {
        auto it = eta.find(coord);
        if (it != eta.end()) out = ex::add(out, ex::mul(comp, it->second));
    }
    return out;
}

QuantityVerdict check_quantity_impl(const SymbolicVectorField& X, const ExprPtr& sigma,
                                    const SampleDomain& dom, const ExprPtr& F,
                                    QuantityKind kind) {
    QuantityVerdict verdict;
    verdict.kind = kind;
    ExprPtr residual = lie_derivative(X, F);
    if (kind == QuantityKind::Dissipated)
        residual = simplify(ex::add(residual, ex::mul(sigma, F)));
    verdict.residual = residual;
    verdict.holds = ex::is_zero_on(residual, dom);
    verdict.max_residual = ex::max_abs_on(residual, dom);
    return verdict;
}

}  // namespace

ExprPtr quantity_from_symmetry(const ContactHamiltonian& sys, const SymbolicVectorField& Y) {
    return simplify(ex::neg(contract_with_form(contact_form(sys), Y)));
}

ExprPtr quantity_from_symmetry(const ContactLagrangian& lag, const SymbolicVectorField& Y) {
    return simplify(ex::neg(contract_with_form(contact_form(lag), Y)));
}

QuantityVerdict check_quantity(const ContactHamiltonian& sys, const ExprPtr& F,
                               QuantityKind kind) {
    return check_quantity_impl(hamiltonian_field(sys), dissipation_rate(sys), sys.domain, F,
                               kind);
}

QuantityVerdict check_quantity(const ContactLagrangian& lag, const ExprPtr& F,
                               QuantityKind kind) {
    return check_quantity_impl(euler_lagrange_field(lag), dissipation_rate(lag), lag.domain, F,
                               kind);
}

bool check_reeb_free_form(const ContactHamiltonian& sys, const SymbolicVectorField* Xopt) {
    SymbolicVectorField X = Xopt ? *Xopt : hamiltonian_field(sys);
    auto coords = sys.coords();
    auto eta = contact_form(sys);
    SampleDomain dom = sys.domain.with_guard(sys.H, 1e-6);

    auto eta_at = [&](const std::string& c) {
        auto it = eta.find(c);
        return it != eta.end() ? it->second : constant(0);
    };

    // i(X)eta + H == 0
    ExprPtr r2 = sys.H;
    for (const auto& c : coords) r2 = ex::add(r2, ex::mul(X.component(c), eta_at(c)));
    if (!ex::is_zero_on(simplify(r2), dom)) return false;

    // i(X)Omega == 0 with Omega = -H deta + dH ^ eta, componentwise
    for (const auto& b : coords) {
        ExprPtr rb = constant(0);
        for (const auto& a : coords) {
            ExprPtr deta_ab = ex::sub(differentiate(eta_at(b), a), differentiate(eta_at(a), b));
            ExprPtr omega_ab = ex::add(
                ex::neg(ex::mul(sys.H, deta_ab)),
                ex::sub(ex::mul(differentiate(sys.H, a), eta_at(b)),
                        ex::mul(differentiate(sys.H, b), eta_at(a))));
            rb = ex::add(rb, ex::mul(X.component(a), omega_ab));
        }
        if (!ex::is_zero_on(simplify(rb), dom)) return false;
    }
    return true;
}

ContactLagrangian holonomic_dissipation_lagrangian(const ExprPtr& L0, const ExprPtr& phi,
                                                   std::vector<std::string> q,
                                                   std::vector<std::string> v, std::string s,
                                                   SampleDomain domain) {
    auto phi_vars = ex::free_variables(phi);
    for (const auto& vi : v)
        if (phi_vars.count(vi))
            throw MechError("holonomic dissipation term depends on velocity '" + vi + "'");
    auto l0_vars = ex::free_variables(L0);
    if (l0_vars.count(s))
        throw MechError("holonomic base Lagrangian depends on the action variable '" + s + "'");
    ContactLagrangian lag;
    lag.n = static_cast<int>(q.size());
    lag.q = std::move(q);
    lag.v = std::move(v);
    lag.s = std::move(s);
    lag.L = simplify(ex::add(L0, phi));
    lag.domain = std::move(domain);
    lag.holonomic = true;
    return lag;
}

}  // namespace contactdyn::mech
