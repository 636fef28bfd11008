#include "contactdyn/kcontact.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace contactdyn::kcon {

namespace ex = contactdyn::expr;
using ex::constant;
using ex::differentiate;
using ex::simplify;
using ex::variable;

KContactHamiltonian darboux_hamiltonian(std::vector<std::string> q,
                                        std::vector<std::vector<std::string>> p,
                                        std::vector<std::string> s, ExprPtr H,
                                        SampleDomain domain) {
    KContactHamiltonian sys;
    sys.mode = KContactHamiltonian::Mode::Darboux;
    sys.n = static_cast<int>(q.size());
    sys.k = static_cast<int>(s.size());
    sys.q = std::move(q);
    sys.p = std::move(p);
    sys.s = std::move(s);
    sys.H = simplify(std::move(H));
    sys.domain = std::move(domain);
    sys.roster = sys.q;
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a) sys.roster.push_back(sys.p[i][a]);
    sys.roster.insert(sys.roster.end(), sys.s.begin(), sys.s.end());
    sys.eta.resize(sys.k);
    for (int a = 0; a < sys.k; ++a) {
        sys.eta[a][sys.s[a]] = constant(1);
        for (int i = 0; i < sys.n; ++i)
            sys.eta[a][sys.q[i]] = ex::neg(variable(sys.p[i][a]));
    }
    return sys;
}

KContactHamiltonian explicit_hamiltonian(std::vector<std::string> roster,
                                         std::vector<std::string> s,
                                         std::vector<std::map<std::string, ExprPtr>> eta,
                                         ExprPtr H, SampleDomain domain) {
    KContactHamiltonian sys;
    sys.mode = KContactHamiltonian::Mode::Explicit;
    sys.k = static_cast<int>(s.size());
    sys.n = 0;
    sys.roster = std::move(roster);
    sys.s = std::move(s);
    sys.eta = std::move(eta);
    sys.H = simplify(std::move(H));
    sys.domain = std::move(domain);
    for (const auto& sa : sys.s)
        if (std::find(sys.roster.begin(), sys.roster.end(), sa) == sys.roster.end())
            throw KContactError("action coordinate '" + sa + "' missing from the roster");
    return sys;
}

namespace {

ExprPtr eta_at(const KContactHamiltonian& sys, int a, const std::string& coord) {
    auto it = sys.eta[a].find(coord);
    return it != sys.eta[a].end() ? it->second : constant(0);
}

}  // namespace

bool forms_admissible(const KContactHamiltonian& sys) {
    for (int a = 0; a < sys.k; ++a) {
        for (int b = 0; b < sys.k; ++b) {
            ExprPtr delta = constant(a == b ? 1 : 0);
            if (!ex::is_zero_on(simplify(ex::sub(eta_at(sys, b, sys.s[a]), delta)), sys.domain))
                return false;
            // row of d(eta^b) against d/ds^a must vanish
            for (const auto& coord : sys.roster) {
                ExprPtr d = ex::sub(differentiate(eta_at(sys, b, coord), sys.s[a]),
                                    differentiate(eta_at(sys, b, sys.s[a]), coord));
                if (!ex::is_zero_on(simplify(d), sys.domain)) return false;
            }
        }
    }
    return true;
}

HDWFamily hdw_family(const KContactHamiltonian& sys) {
    if (sys.mode != KContactHamiltonian::Mode::Darboux)
        throw KContactError("hdw_family requires Darboux mode");
    HDWFamily fam;
    fam.q_components.resize(sys.k);
    for (int a = 0; a < sys.k; ++a)
        for (int i = 0; i < sys.n; ++i)
            fam.q_components[a][sys.q[i]] = differentiate(sys.H, sys.p[i][a]);
    for (int i = 0; i < sys.n; ++i) {
        ExprPtr rhs = differentiate(sys.H, sys.q[i]);
        for (int a = 0; a < sys.k; ++a)
            rhs = ex::add(rhs, ex::mul(variable(sys.p[i][a]), differentiate(sys.H, sys.s[a])));
        fam.momentum_trace_rhs.push_back(simplify(ex::neg(rhs)));
    }
    ExprPtr act = ex::neg(sys.H);
    for (int i = 0; i < sys.n; ++i)
        for (int a = 0; a < sys.k; ++a)
            act = ex::add(act,
                          ex::mul(variable(sys.p[i][a]), differentiate(sys.H, sys.p[i][a])));
    fam.action_trace_rhs = simplify(act);
    if (sys.k > 1) {
        for (int a = 0; a < sys.k; ++a) {
            for (int i = 0; i < sys.n; ++i)
                for (int b = 0; b < sys.k; ++b)
                    fam.free_components.push_back("X_" + std::to_string(a + 1) + "[" +
                                                  sys.p[i][b] + "]");
            for (int b = 0; b < sys.k; ++b)
                fam.free_components.push_back("X_" + std::to_string(a + 1) + "[" + sys.s[b] +
                                              "]");
        }
    }
    return fam;
}

std::vector<std::vector<ExprPtr>> k_legendre(const KContactLagrangian& lag) {
    std::vector<std::vector<ExprPtr>> out(lag.n);
    for (int i = 0; i < lag.n; ++i)
        for (int a = 0; a < lag.k; ++a)
            out[i].push_back(differentiate(lag.L, lag.v[i][a]));
    return out;
}

ExprPtr k_lagrangian_energy(const KContactLagrangian& lag) {
    ExprPtr e = ex::neg(lag.L);
    for (int i = 0; i < lag.n; ++i)
        for (int a = 0; a < lag.k; ++a)
            e = ex::add(e, ex::mul(variable(lag.v[i][a]), differentiate(lag.L, lag.v[i][a])));
    return simplify(e);
}

std::vector<std::map<std::string, ExprPtr>> k_contact_forms(const KContactLagrangian& lag) {
    std::vector<std::map<std::string, ExprPtr>> eta(lag.k);
    for (int a = 0; a < lag.k; ++a) {
        eta[a][lag.s[a]] = constant(1);
        for (int i = 0; i < lag.n; ++i)
            eta[a][lag.q[i]] = simplify(ex::neg(differentiate(lag.L, lag.v[i][a])));
    }
    return eta;
}

std::vector<std::vector<ExprPtr>> exterior_derivative_oneform(
    const std::map<std::string, ExprPtr>& components, const std::vector<std::string>& roster) {
    auto comp = [&](const std::string& c) {
        auto it = components.find(c);
        return it != components.end() ? it->second : constant(0);
    };
    size_t m = roster.size();
    std::vector<std::vector<ExprPtr>> d(m, std::vector<ExprPtr>(m));
    for (size_t a = 0; a < m; ++a)
        for (size_t b = 0; b < m; ++b)
            d[a][b] = simplify(ex::sub(differentiate(comp(roster[b]), roster[a]),
                                       differentiate(comp(roster[a]), roster[b])));
    return d;
}

// ---------------------------------------------------------------------------
// Discrete sections
// ---------------------------------------------------------------------------

void DiscreteSection::write_csv(std::ostream& os) const {
    os << "t1";
    if (k == 2) os << ",t2";
    for (const auto& c : coords) os << "," << c;
    os << "\n";
    for (size_t i = 0; i < rows(); ++i) {
        for (size_t j = 0; j < columns(); ++j) {
            os << ex::format_double(t1[i]);
            if (k == 2) os << "," << ex::format_double(t2[j]);
            for (const auto& c : coords) os << "," << ex::format_double(values.at(c)[at(i, j)]);
            os << "\n";
        }
    }
}

DiscreteSection DiscreteSection::read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw KContactError("section csv: missing header");
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    if (cols.empty() || cols[0] != "t1") throw KContactError("section csv: first column must be t1");
    DiscreteSection sec;
    sec.k = (cols.size() > 1 && cols[1] == "t2") ? 2 : 1;
    size_t coord_start = sec.k == 2 ? 2 : 1;
    sec.coords.assign(cols.begin() + coord_start, cols.end());
    std::vector<double> t1_raw, t2_raw;
    std::vector<std::vector<double>> data(sec.coords.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        if (row.size() != cols.size()) throw KContactError("section csv: ragged row");
        t1_raw.push_back(row[0]);
        if (sec.k == 2) t2_raw.push_back(row[1]);
        for (size_t c = 0; c < sec.coords.size(); ++c) data[c].push_back(row[coord_start + c]);
    }
    // recover the axes from the row-major layout
    if (sec.k == 1) {
        sec.t1 = t1_raw;
    } else {
        size_t cols2 = 1;
        while (cols2 < t2_raw.size() && t2_raw[cols2] != t2_raw[0]) ++cols2;
        sec.t2.assign(t2_raw.begin(), t2_raw.begin() + cols2);
        for (size_t i = 0; i < t1_raw.size(); i += cols2) sec.t1.push_back(t1_raw[i]);
    }
    for (size_t c = 0; c < sec.coords.size(); ++c) sec.values[sec.coords[c]] = data[c];
    return sec;
}

namespace {

struct SectionEval {
    const DiscreteSection& psi;
    const expr::EvalContext& params;
    double d1, d2;

    SectionEval(const DiscreteSection& s, const expr::EvalContext& p) : psi(s), params(p) {
        if (s.t1.size() < 3 || (s.k == 2 && s.t2.size() < 3))
            throw KContactError("section grid too small: need at least 3 points per axis");
        d1 = s.t1[1] - s.t1[0];
        d2 = s.k == 2 ? s.t2[1] - s.t2[0] : 1.0;
    }

    expr::EvalContext context(size_t i, size_t j) const {
        expr::EvalContext ctx = params;
        for (const auto& c : psi.coords) ctx[c] = psi.values.at(c)[psi.at(i, j)];
        return ctx;
    }

    // centered difference of a stored coordinate along axis (0 -> t1, 1 -> t2)
    double ddt(const std::string& coord, int axis, size_t i, size_t j) const {
        const auto& g = psi.values.at(coord);
        if (axis == 0) return (g[psi.at(i + 1, j)] - g[psi.at(i - 1, j)]) / (2 * d1);
        return (g[psi.at(i, j + 1)] - g[psi.at(i, j - 1)]) / (2 * d2);
    }
};

ResidualReport finalize(std::map<std::string, std::vector<double>> slots, size_t ir, size_t ic) {
    ResidualReport rep;
    rep.slots = std::move(slots);
    rep.interior_rows = ir;
    rep.interior_cols = ic;
    double sumsq = 0;
    size_t count = 0;
    for (const auto& [name, grid] : rep.slots)
        for (double r : grid) {
            rep.max_abs = std::max(rep.max_abs, std::fabs(r));
            sumsq += r * r;
            ++count;
        }
    rep.rms = count ? std::sqrt(sumsq / static_cast<double>(count)) : 0.0;
    return rep;
}

}  // namespace

ResidualReport hdw_section_residual(const KContactHamiltonian& sys, const DiscreteSection& psi,
                                    const expr::EvalContext& params) {
    if (sys.k > 2) throw KContactError("section residuals limited to k <= 2");
    SectionEval ev(psi, params);
    for (const auto& c : sys.roster)
        if (!psi.values.count(c))
            throw KContactError("section is missing coordinate '" + c + "'");

    // symbolic pieces
    std::vector<std::vector<std::vector<ExprPtr>>> deta;  // [alpha][A][B]
    for (int a = 0; a < sys.k; ++a)
        deta.push_back(exterior_derivative_oneform(sys.eta[a], sys.roster));
    std::map<std::string, ExprPtr> rhs1;
    for (const auto& B : sys.roster) {
        ExprPtr r = differentiate(sys.H, B);
        for (int a = 0; a < sys.k; ++a)
            r = ex::sub(r, ex::mul(differentiate(sys.H, sys.s[a]), eta_at(sys, a, B)));
        rhs1[B] = simplify(r);
    }

    size_t rows = psi.rows(), cols = psi.columns();
    size_t ir = rows - 2, ic = sys.k == 2 ? cols - 2 : 1;
    std::map<std::string, std::vector<double>> slots;
    for (const auto& B : sys.roster) slots["eq1:" + B].assign(ir * ic, 0.0);
    slots["eq2"].assign(ir * ic, 0.0);

    size_t m = sys.roster.size();
    for (size_t i = 1; i + 1 < rows; ++i) {
        size_t jlo = sys.k == 2 ? 1 : 0;
        size_t jhi = sys.k == 2 ? cols - 1 : 1;
        for (size_t j = jlo; j < jhi; ++j) {
            auto ctx = ev.context(i, j);
            size_t out = (i - 1) * ic + (sys.k == 2 ? j - 1 : 0);
            std::vector<std::vector<double>> dpsi(sys.k, std::vector<double>(m));
            for (int a = 0; a < sys.k; ++a)
                for (size_t A = 0; A < m; ++A) dpsi[a][A] = ev.ddt(sys.roster[A], a, i, j);
            for (size_t B = 0; B < m; ++B) {
                double lhs = 0;
                for (int a = 0; a < sys.k; ++a)
                    for (size_t A = 0; A < m; ++A) {
                        const ExprPtr& entry = deta[a][A][B];
                        if (ex::is_constant(entry, 0)) continue;
                        lhs += dpsi[a][A] * ex::evaluate(entry, ctx);
                    }
                slots["eq1:" + sys.roster[B]][out] =
                    lhs - ex::evaluate(rhs1[sys.roster[B]], ctx);
            }
            double lhs2 = 0;
            for (int a = 0; a < sys.k; ++a)
                for (size_t A = 0; A < m; ++A) {
                    ExprPtr entry = eta_at(sys, a, sys.roster[A]);
                    if (ex::is_constant(entry, 0)) continue;
                    lhs2 += dpsi[a][A] * ex::evaluate(entry, ctx);
                }
            slots["eq2"][out] = lhs2 + ex::evaluate(sys.H, ctx);
        }
    }
    return finalize(std::move(slots), ir, ic);
}

ResidualReport el_section_residual(const KContactLagrangian& lag, const DiscreteSection& psi,
                                   const expr::EvalContext& params) {
    if (lag.k > 2) throw KContactError("section residuals limited to k <= 2");
    SectionEval ev(psi, params);

    auto momenta = k_legendre(lag);
    std::vector<ExprPtr> rhs(lag.n);
    for (int i = 0; i < lag.n; ++i) {
        ExprPtr r = differentiate(lag.L, lag.q[i]);
        for (int a = 0; a < lag.k; ++a)
            r = ex::add(r, ex::mul(differentiate(lag.L, lag.s[a]), momenta[i][a]));
        rhs[i] = simplify(r);
    }

    size_t rows = psi.rows(), cols = psi.columns();
    size_t ir = rows - 2, ic = lag.k == 2 ? cols - 2 : 1;

    // evaluate the momenta and the Lagrangian on the whole grid first
    std::vector<std::vector<std::vector<double>>> pgrid(
        lag.n, std::vector<std::vector<double>>(lag.k, std::vector<double>(rows * cols)));
    std::vector<double> lgrid(rows * cols);
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) {
            auto ctx = ev.context(i, j);
            for (int f = 0; f < lag.n; ++f)
                for (int a = 0; a < lag.k; ++a)
                    pgrid[f][a][psi.at(i, j)] = ex::evaluate(momenta[f][a], ctx);
            lgrid[psi.at(i, j)] = ex::evaluate(lag.L, ctx);
        }

    auto ddt_grid = [&](const std::vector<double>& g, int axis, size_t i, size_t j) {
        if (axis == 0) return (g[psi.at(i + 1, j)] - g[psi.at(i - 1, j)]) / (2 * ev.d1);
        return (g[psi.at(i, j + 1)] - g[psi.at(i, j - 1)]) / (2 * ev.d2);
    };

    std::map<std::string, std::vector<double>> slots;
    for (int f = 0; f < lag.n; ++f) slots["el:" + lag.q[f]].assign(ir * ic, 0.0);
    slots["action"].assign(ir * ic, 0.0);

    for (size_t i = 1; i + 1 < rows; ++i) {
        size_t jlo = lag.k == 2 ? 1 : 0;
        size_t jhi = lag.k == 2 ? cols - 1 : 1;
        for (size_t j = jlo; j < jhi; ++j) {
            auto ctx = ev.context(i, j);
            size_t out = (i - 1) * ic + (lag.k == 2 ? j - 1 : 0);
            for (int f = 0; f < lag.n; ++f) {
                double div = 0;
                for (int a = 0; a < lag.k; ++a) div += ddt_grid(pgrid[f][a], a, i, j);
                slots["el:" + lag.q[f]][out] = div - ex::evaluate(rhs[f], ctx);
            }
            double sdiv = 0;
            for (int a = 0; a < lag.k; ++a) sdiv += ev.ddt(lag.s[a], a, i, j);
            slots["action"][out] = sdiv - lgrid[psi.at(i, j)];
        }
    }
    return finalize(std::move(slots), ir, ic);
}

namespace {

std::vector<ExprPtr> dissipation_map_from_forms(
    const std::vector<std::map<std::string, ExprPtr>>& eta, const SymbolicVectorField& Y) {
    std::vector<ExprPtr> F;
    for (const auto& form : eta) {
        ExprPtr c = constant(0);
        for (const auto& [coord, comp] : Y.comp) {
            auto it = form.find(coord);
            if (it != form.end()) c = ex::add(c, ex::mul(comp, it->second));
        }
        F.push_back(simplify(ex::neg(c)));
    }
    return F;
}

}  // namespace

std::vector<ExprPtr> symmetry_dissipation_map(const KContactHamiltonian& sys,
                                              const SymbolicVectorField& Y) {
    return dissipation_map_from_forms(sys.eta, Y);
}

std::vector<ExprPtr> symmetry_dissipation_map(const KContactLagrangian& lag,
                                              const SymbolicVectorField& Y) {
    return dissipation_map_from_forms(k_contact_forms(lag), Y);
}

ResidualReport dissipation_law_residual(const KContactHamiltonian& sys,
                                        const std::vector<ExprPtr>& F,
                                        const DiscreteSection& psi,
                                        const expr::EvalContext& params) {
    if (sys.k > 2) throw KContactError("section residuals limited to k <= 2");
    if (static_cast<int>(F.size()) != sys.k)
        throw KContactError("dissipation map needs one component per contact form");
    SectionEval ev(psi, params);
    size_t rows = psi.rows(), cols = psi.columns();
    size_t ir = rows - 2, ic = sys.k == 2 ? cols - 2 : 1;

    std::vector<ExprPtr> sigma;
    for (int a = 0; a < sys.k; ++a) sigma.push_back(differentiate(sys.H, sys.s[a]));

    std::vector<std::vector<double>> fgrid(sys.k, std::vector<double>(rows * cols));
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) {
            auto ctx = ev.context(i, j);
            for (int a = 0; a < sys.k; ++a) fgrid[a][psi.at(i, j)] = ex::evaluate(F[a], ctx);
        }

    std::map<std::string, std::vector<double>> slots;
    slots["dissipation"].assign(ir * ic, 0.0);
    for (size_t i = 1; i + 1 < rows; ++i) {
        size_t jlo = sys.k == 2 ? 1 : 0;
        size_t jhi = sys.k == 2 ? cols - 1 : 1;
        for (size_t j = jlo; j < jhi; ++j) {
            auto ctx = ev.context(i, j);
            size_t out = (i - 1) * ic + (sys.k == 2 ? j - 1 : 0);
            double div = 0;
            for (int a = 0; a < sys.k; ++a) {
                const auto& g = fgrid[a];
                if (a == 0) div += (g[psi.at(i + 1, j)] - g[psi.at(i - 1, j)]) / (2 * ev.d1);
                else div += (g[psi.at(i, j + 1)] - g[psi.at(i, j - 1)]) / (2 * ev.d2);
            }
            double rate = 0;
            for (int a = 0; a < sys.k; ++a)
                rate += ex::evaluate(sigma[a], ctx) * fgrid[a][psi.at(i, j)];
            slots["dissipation"][out] = div + rate;
        }
    }
    return finalize(std::move(slots), ir, ic);
}

// ---------------------------------------------------------------------------
// Inverse problem
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> invert_matrix(std::vector<std::vector<double>> a) {
    size_t n = a.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-12)
            throw KContactError("inverse_problem_lagrangian: singular coefficient matrix");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        double d = a[col][col];
        for (size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = a[r][col];
            for (size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

// Taylor antiderivative of a polynomial in `u` (parameters allowed in the
// coefficients): gbar = sum_n c_n u^(n+1) / (n! (n+1)), c_n = (d^n G/du^n)(0)
ExprPtr polynomial_antiderivative(const ExprPtr& G, const std::string& u,
                                  const SampleDomain& domain) {
    const int max_degree = 8;
    ExprPtr d = simplify(G);
    std::vector<ExprPtr> coeffs;
    for (int nn = 0; nn <= max_degree; ++nn) {
        coeffs.push_back(ex::substitute(d, {{u, constant(0)}}));
        d = differentiate(d, u);
    }
    if (!ex::is_zero_on(d, domain))
        throw KContactError("inverse_problem_lagrangian: source term is not polynomial in '" +
                            u + "'; supply the antiderivative explicitly");
    ExprPtr gbar = constant(0);
    double fact = 1.0;
    for (int nn = 0; nn <= max_degree; ++nn) {
        if (nn > 0) fact *= nn;
        ExprPtr term = ex::div(ex::mul(coeffs[nn], ex::pow(variable(u), nn + 1.0)),
                               constant(fact * (nn + 1)));
        gbar = ex::add(gbar, term);
    }
    return simplify(gbar);
}

}  // namespace

KContactLagrangian inverse_problem_lagrangian(const std::vector<std::vector<double>>& A,
                                              const std::vector<double>& D, ExprPtr G,
                                              const std::string& u,
                                              std::vector<std::string> velocities,
                                              std::vector<std::string> s, SampleDomain domain,
                                              std::optional<ExprPtr> gbar) {
    size_t k = A.size();
    if (D.size() != k || velocities.size() != k || s.size() != k)
        throw KContactError("inverse_problem_lagrangian: inconsistent dimensions");
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b)
            if (std::fabs(A[a][b] - A[b][a]) > 1e-12)
                throw KContactError("inverse_problem_lagrangian: coefficient matrix not symmetric");
    auto inv = invert_matrix(A);

    ExprPtr L = constant(0);
    for (size_t a = 0; a < k; ++a)
        for (size_t b = 0; b < k; ++b)
            if (A[a][b] != 0.0)
                L = ex::add(L, ex::mul(constant(0.5 * A[a][b]),
                                       ex::mul(variable(velocities[a]),
                                               variable(velocities[b]))));
    for (size_t a = 0; a < k; ++a) {
        double c = 0;
        for (size_t b = 0; b < k; ++b) c += inv[a][b] * D[b];
        if (c != 0.0) L = ex::sub(L, ex::mul(constant(c), variable(s[a])));
    }
    ExprPtr g = gbar ? *gbar : polynomial_antiderivative(G, u, domain);
    L = ex::sub(L, g);

    KContactLagrangian lag;
    lag.n = 1;
    lag.k = static_cast<int>(k);
    lag.q = {u};
    lag.v = {std::move(velocities)};
    lag.s = std::move(s);
    lag.L = simplify(L);
    lag.domain = std::move(domain);
    return lag;
}

std::string jet2_name(const std::string& base, int a, int b) {
    if (a > b) std::swap(a, b);
    return base + "_" + std::to_string(a + 1) + std::to_string(b + 1);
}

ExprPtr symbolic_euler_lagrange(const KContactLagrangian& lag, int field) {
    auto momenta = k_legendre(lag);
    ExprPtr out = constant(0);
    for (int a = 0; a < lag.k; ++a) {
        const ExprPtr& pa = momenta[field][a];
        for (int b = 0; b < lag.k; ++b) {
            ExprPtr mixed = differentiate(pa, lag.s[b]);
            if (!ex::is_constant(simplify(mixed), 0))
                throw KContactError(
                    "symbolic_euler_lagrange: momenta must not depend on the action "
                    "coordinates");
        }
        // total derivative d/dt^a of dL/dv^i_a over the jet variables
        for (int i = 0; i < lag.n; ++i) {
            ExprPtr dq = differentiate(pa, lag.q[i]);
            if (!ex::is_constant(dq, 0))
                out = ex::add(out, ex::mul(dq, variable(lag.v[i][a])));
            for (int b = 0; b < lag.k; ++b) {
                ExprPtr dv = differentiate(pa, lag.v[i][b]);
                if (!ex::is_constant(dv, 0))
                    out = ex::add(out, ex::mul(dv, variable(jet2_name(lag.q[i], b, a))));
            }
        }
    }
    ExprPtr rhs = differentiate(lag.L, lag.q[field]);
    for (int a = 0; a < lag.k; ++a)
        rhs = ex::add(rhs, ex::mul(differentiate(lag.L, lag.s[a]), momenta[field][a]));
    return simplify(ex::sub(out, rhs));
}

}  // namespace contactdyn::kcon
