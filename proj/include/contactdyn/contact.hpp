#ifndef CONTACTDYN_CONTACT_HPP
#define CONTACTDYN_CONTACT_HPP

#include <map>
#include <string>
#include <vector>

#include "contactdyn/expr.hpp"

namespace contactdyn::mech {

using expr::ExprPtr;
using expr::SampleDomain;

struct MechError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Components of a vector field over named coordinates; missing keys are zero.
struct SymbolicVectorField {
    std::map<std::string, ExprPtr> comp;

    ExprPtr component(const std::string& coord) const;
};

/// Hamiltonian system in Darboux coordinates (q_i, p_i, s) with
/// contact form ds - p_i dq^i and Reeb field d/ds.
struct ContactHamiltonian {
    int n = 1;
    std::vector<std::string> q, p;
    std::string s = "s";
    ExprPtr H;
    SampleDomain domain;

    std::vector<std::string> coords() const;
};

struct ContactLagrangian {
    int n = 1;
    std::vector<std::string> q, v;
    std::vector<std::string> p;  // momentum names used when passing to the Hamiltonian side
    std::string s = "s";
    ExprPtr L;
    SampleDomain domain;
    bool holonomic = false;  // L = L0(q,v) + phi(q,s)

    std::vector<std::string> coords() const;
};

enum class QuantityKind { Dissipated, Conserved };

struct QuantityVerdict {
    QuantityKind kind;
    bool holds = false;
    ExprPtr residual;
    double max_residual = 0.0;
};

using Matrix = std::vector<std::vector<ExprPtr>>;

ExprPtr determinant(const Matrix& m);
Matrix inverse_adjugate(const Matrix& m, const ExprPtr& det);

ExprPtr lie_derivative(const SymbolicVectorField& X, const ExprPtr& f);

/// q' = dH/dp, p' = -(dH/dq + p dH/ds), s' = p dH/dp - H.
SymbolicVectorField hamiltonian_field(const ContactHamiltonian& sys);

std::vector<ExprPtr> legendre_map(const ContactLagrangian& lag);

ExprPtr lagrangian_energy(const ContactLagrangian& lag);

struct HessianInfo {
    Matrix W;
    ExprPtr det;
    bool regular = false;
};

HessianInfo hessian_regularity(const ContactLagrangian& lag);

/// Reeb field of the Lagrangian contact structure; requires a regular
/// Lagrangian and n <= 4 (symbolic adjugate inverse).
SymbolicVectorField lagrangian_reeb_field(const ContactLagrangian& lag);

SymbolicVectorField euler_lagrange_field(const ContactLagrangian& lag);

/// Pushes a hyperregular Lagrangian to the canonical Hamiltonian side by
/// inverting the Legendre map; fails when some momentum equation is not
/// explicitly solvable for its velocity.
ContactHamiltonian to_hamiltonian(const ContactLagrangian& lag);

/// Velocity eliminations v_i -> v_i(q,p,s) produced by to_hamiltonian.
std::map<std::string, ExprPtr> legendre_inverse(const ContactLagrangian& lag);

ExprPtr dissipation_rate(const ContactHamiltonian& sys);
ExprPtr dissipation_rate(const ContactLagrangian& lag);

/// Components of the contact 1-form over the system's coordinates.
std::map<std::string, ExprPtr> contact_form(const ContactHamiltonian& sys);
std::map<std::string, ExprPtr> contact_form(const ContactLagrangian& lag);

ExprPtr quantity_from_symmetry(const ContactHamiltonian& sys, const SymbolicVectorField& Y);
ExprPtr quantity_from_symmetry(const ContactLagrangian& lag, const SymbolicVectorField& Y);

QuantityVerdict check_quantity(const ContactHamiltonian& sys, const ExprPtr& F, QuantityKind kind);
QuantityVerdict check_quantity(const ContactLagrangian& lag, const ExprPtr& F, QuantityKind kind);

/// Verifies i(X)Omega = 0 and i(X)eta = -H with Omega = -H deta + dH ^ eta,
/// sampled away from the zero set of H. X defaults to the Hamiltonian field.
bool check_reeb_free_form(const ContactHamiltonian& sys, const SymbolicVectorField* X = nullptr);

ContactLagrangian holonomic_dissipation_lagrangian(const ExprPtr& L0, const ExprPtr& phi,
                                                   std::vector<std::string> q,
                                                   std::vector<std::string> v, std::string s,
                                                   SampleDomain domain);

}  // namespace contactdyn::mech

#endif
