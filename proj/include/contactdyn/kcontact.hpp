#ifndef CONTACTDYN_KCONTACT_HPP
#define CONTACTDYN_KCONTACT_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contactdyn/contact.hpp"
#include "contactdyn/expr.hpp"

namespace contactdyn::kcon {

using expr::ExprPtr;
using expr::SampleDomain;
using mech::SymbolicVectorField;

struct KContactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Hamiltonian system over k contact forms. Darboux mode carries the
/// canonical forms ds^a - p_i^a dq^i; explicit mode carries arbitrary
/// 1-form components over the roster, with Reeb fields d/ds^a.
struct KContactHamiltonian {
    enum class Mode { Darboux, Explicit };
    Mode mode = Mode::Darboux;
    int n = 1;
    int k = 1;
    std::vector<std::string> q;               // Darboux only
    std::vector<std::vector<std::string>> p;  // Darboux only, [i][alpha]
    std::vector<std::string> s;               // k action coordinates
    std::vector<std::string> roster;          // all coordinates
    std::vector<std::map<std::string, ExprPtr>> eta;  // [alpha][coord]
    ExprPtr H;
    SampleDomain domain;
};

KContactHamiltonian darboux_hamiltonian(std::vector<std::string> q,
                                        std::vector<std::vector<std::string>> p,
                                        std::vector<std::string> s, ExprPtr H,
                                        SampleDomain domain);

KContactHamiltonian explicit_hamiltonian(std::vector<std::string> roster,
                                         std::vector<std::string> s,
                                         std::vector<std::map<std::string, ExprPtr>> eta,
                                         ExprPtr H, SampleDomain domain);

/// i(R_a) eta^b == delta and i(R_a) d(eta^b) == 0, checked by equivalence.
bool forms_admissible(const KContactHamiltonian& sys);

struct KContactLagrangian {
    int n = 1;
    int k = 1;
    std::vector<std::string> q;
    std::vector<std::vector<std::string>> v;  // [i][alpha]
    std::vector<std::string> s;
    ExprPtr L;
    SampleDomain domain;
};

/// Hamilton-De Donder-Weyl family in Darboux coordinates: q-components are
/// determined, momentum/action components are pinned only through their traces.
struct HDWFamily {
    std::vector<std::map<std::string, ExprPtr>> q_components;  // [alpha][q_i]
    std::vector<ExprPtr> momentum_trace_rhs;                   // per field i
    ExprPtr action_trace_rhs;
    std::vector<std::string> free_components;  // e.g. "X_1[p2^x]" labels
};

HDWFamily hdw_family(const KContactHamiltonian& sys);

std::vector<std::vector<ExprPtr>> k_legendre(const KContactLagrangian& lag);  // [i][alpha]

ExprPtr k_lagrangian_energy(const KContactLagrangian& lag);

/// eta^a_L = ds^a - dL/dv^i_a dq^i as component maps over (q, v, s).
std::vector<std::map<std::string, ExprPtr>> k_contact_forms(const KContactLagrangian& lag);

/// (d theta)_{AB} = d theta_B / dx^A - d theta_A / dx^B over the roster order.
std::vector<std::vector<ExprPtr>> exterior_derivative_oneform(
    const std::map<std::string, ExprPtr>& components, const std::vector<std::string>& roster);

/// Rectangular grid data for a section of the phase bundle, k in {1, 2}.
struct DiscreteSection {
    int k = 1;
    std::vector<double> t1;
    std::vector<double> t2;  // empty when k == 1
    std::vector<std::string> coords;
    std::map<std::string, std::vector<double>> values;  // row-major in t1 then t2

    size_t columns() const { return k == 1 ? 1 : t2.size(); }
    size_t rows() const { return t1.size(); }
    size_t at(size_t i, size_t j) const { return i * columns() + j; }

    void write_csv(std::ostream& os) const;
    static DiscreteSection read_csv(std::istream& is);
};

struct ResidualReport {
    double max_abs = 0.0;
    double rms = 0.0;
    std::map<std::string, std::vector<double>> slots;  // per residual slot, interior grid
    size_t interior_rows = 0;
    size_t interior_cols = 0;
};

/// Centered-difference defect of both HDW section equations at interior nodes.
ResidualReport hdw_section_residual(const KContactHamiltonian& sys, const DiscreteSection& psi,
                                    const expr::EvalContext& params);

/// Centered-difference defect of the Euler-Lagrange section equations.
ResidualReport el_section_residual(const KContactLagrangian& lag, const DiscreteSection& psi,
                                   const expr::EvalContext& params);

std::vector<ExprPtr> symmetry_dissipation_map(const KContactHamiltonian& sys,
                                              const SymbolicVectorField& Y);
std::vector<ExprPtr> symmetry_dissipation_map(const KContactLagrangian& lag,
                                              const SymbolicVectorField& Y);

/// Div(F o psi) + (L_{R_a}H F^a) o psi at interior nodes.
ResidualReport dissipation_law_residual(const KContactHamiltonian& sys,
                                        const std::vector<ExprPtr>& F,
                                        const DiscreteSection& psi,
                                        const expr::EvalContext& params);

/// L = 1/2 A^{ab} u_a u_b - (A^-1)_{ab} D^b s^a - gbar(u), with gbar' = G.
/// G must be polynomial in `u` unless gbar is supplied explicitly.
KContactLagrangian inverse_problem_lagrangian(const std::vector<std::vector<double>>& A,
                                              const std::vector<double>& D, ExprPtr G,
                                              const std::string& u,
                                              std::vector<std::string> velocities,
                                              std::vector<std::string> s, SampleDomain domain,
                                              std::optional<ExprPtr> gbar = std::nullopt);

/// Formal Euler-Lagrange expression of field i over jet variables; second
/// derivatives are named q_i + "_" + a + b with a <= b (1-based indices).
/// Requires momenta independent of the action coordinates.
ExprPtr symbolic_euler_lagrange(const KContactLagrangian& lag, int field);

std::string jet2_name(const std::string& base, int a, int b);

}  // namespace contactdyn::kcon

#endif
