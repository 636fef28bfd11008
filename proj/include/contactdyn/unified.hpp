#ifndef CONTACTDYN_UNIFIED_HPP
#define CONTACTDYN_UNIFIED_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "contactdyn/expr.hpp"

namespace contactdyn::unified {

using expr::ExprPtr;
using expr::SampleDomain;

struct UnifiedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mixed velocity-momentum phase space for n fields and k independent
/// variables, with H = p_i^alpha v^i_alpha - L.
struct UnifiedSystem {
    int n = 1;
    int k = 1;
    std::vector<std::string> q;                // n
    std::vector<std::vector<std::string>> v;   // [i][alpha]
    std::vector<std::vector<std::string>> p;   // [i][alpha]
    std::vector<std::string> s;                // k
    ExprPtr L;
    ExprPtr H;
    SampleDomain domain;

    /// roster order: q, v, p, s (row-major over i then alpha)
    std::vector<std::string> coords() const;
};

UnifiedSystem build_unified(ExprPtr L, std::vector<std::string> q,
                            std::vector<std::vector<std::string>> v,
                            std::vector<std::vector<std::string>> p,
                            std::vector<std::string> s, SampleDomain domain);

struct Constraint {
    ExprPtr expr;
    std::optional<std::pair<std::string, ExprPtr>> solved;
    int generation = 0;
};

/// Solution-field family: per-alpha component expressions which may mention
/// reserved free symbols (names prefixed with '_'), plus the base linear
/// relations binding momentum and action components.
struct FieldAnsatz {
    std::vector<std::map<std::string, ExprPtr>> comps;  // [alpha][coord]
    std::vector<std::string> free_order;                // creation order
    std::vector<ExprPtr> ledger;                        // relations that must vanish
};

bool is_free_symbol(const std::string& name);

struct Determination {
    std::string symbol;
    ExprPtr value;
};

struct GenerationLog {
    int index = 0;
    std::vector<Constraint> new_constraints;
    std::vector<Determination> determined;
    int identities = 0;
    std::vector<std::string> warnings;
};

enum class TraceStatus { Converged, EmptyManifold, ImplicitConstraint, MaxGenerations };

std::string to_string(TraceStatus s);

struct AlgorithmState {
    UnifiedSystem sys;
    FieldAnsatz ansatz;
    std::vector<Constraint> constraints;        // adoption order
    std::map<std::string, ExprPtr> solved;      // coordinate -> rhs, mutually reduced
    std::map<std::string, ExprPtr> determined;  // free symbol -> value
    std::vector<std::string> warnings;
    int pass = 0;
};

struct ConstraintTrace {
    UnifiedSystem sys;
    TraceStatus status = TraceStatus::Converged;
    std::vector<GenerationLog> generations;
    std::vector<Constraint> constraints;
    std::map<std::string, ExprPtr> solved;
    FieldAnsatz ansatz;
    std::map<std::string, ExprPtr> determined;
    std::vector<std::string> free_remaining;
    std::vector<std::string> warnings;
    std::string diagnostic;
};

/// xi_i^alpha = p_i^alpha - dL/dv^i_alpha, solved for the momentum.
std::vector<Constraint> primary_constraints(const UnifiedSystem& sys);

/// Holonomy-fixed q-components, free v/p/s components, and the momentum and
/// action trace relations. For k = 1 the relations determine p' and s'
/// outright; processing them is part of generation 0.
FieldAnsatz base_field_ansatz(const UnifiedSystem& sys);

/// Momentum trace right-hand sides dL/dq^i + p_i^alpha dL/ds^alpha, one per field.
std::vector<ExprPtr> momentum_trace_rhs(const UnifiedSystem& sys);

/// One full tangency pass over all current constraints.
GenerationLog tangency_step(AlgorithmState& state);

ConstraintTrace run_algorithm(const UnifiedSystem& sys, int max_generations = 16);

struct ProjectedSide {
    std::vector<ExprPtr> constraints;
    std::vector<std::map<std::string, ExprPtr>> field;  // [alpha][coord]
    std::vector<std::string> free_symbols;
};

/// Drops momenta; constraints and field components are rewritten through the
/// primary solved forms and restricted to (q, v, s).
ProjectedSide project_to_lagrangian(const ConstraintTrace& trace);

/// Eliminates velocities through the Legendre relations; constraints that only
/// pin a velocity fiber are dropped. Fails on a velocity that neither
/// eliminates nor disappears.
ProjectedSide project_to_hamiltonian(const ConstraintTrace& trace);

/// Field restricted to the final constraint submanifold, expressed on the
/// unconstrained coordinates only (used for reduced simulation).
std::vector<std::map<std::string, ExprPtr>> reduced_field(const ConstraintTrace& trace);

}  // namespace contactdyn::unified

#endif
