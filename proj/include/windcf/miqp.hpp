#pragma once

#include <limits>
#include <string>
#include <vector>

namespace windcf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { Continuous, Binary, Integer };
enum class ConstraintSense { LessEqual, GreaterEqual, Equal };

struct Variable {
    std::string name;
    double lower = -kInf;
    double upper = kInf;
    VarType type = VarType::Continuous;
};

struct LinearTerm {
    int var = -1;
    double coef = 0.0;
};

struct LinearConstraint {
    std::string name;
    std::vector<LinearTerm> terms;
    ConstraintSense sense = ConstraintSense::LessEqual;
    double rhs = 0.0;
};

// One separable objective term a*(x - center)^2, a >= 0.
struct QuadObjTerm {
    int var = -1;
    double coef = 0.0;
    double center = 0.0;
};

/// Convex MIQP/MILP in minimization form: diagonal quadratic plus linear
/// objective over linear constraints, box bounds, binary and integer
/// variables.
class MiqpProblem {
public:
    int add_variable(const std::string& name, double lower, double upper,
                     VarType type = VarType::Continuous);
    void add_constraint(LinearConstraint c);
    // a*(x-center)^2; throws on negative a (non-convex).
    void add_quadratic_objective_term(int var, double a, double center);
    void add_linear_objective_term(int var, double b);
    void add_objective_constant(double c) { objective_constant_ += c; }

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(constraints_.size()); }
    int num_binaries() const;
    int num_integrals() const;  // binaries + general integers
    bool has_quadratic_objective() const { return !quad_terms_.empty(); }

    const std::vector<Variable>& variables() const { return vars_; }
    std::vector<Variable>& variables() { return vars_; }
    const std::vector<LinearConstraint>& constraints() const { return constraints_; }
    std::vector<LinearConstraint>& constraints() { return constraints_; }
    const std::vector<QuadObjTerm>& quadratic_terms() const { return quad_terms_; }
    const std::vector<double>& linear_objective() const { return linear_obj_; }
    double objective_constant() const { return objective_constant_; }

    // Objective value at a full assignment.
    double objective_value(const std::vector<double>& x) const;
    // Signed violation of constraint i at x (positive = violated amount).
    double constraint_violation(const LinearConstraint& c, const std::vector<double>& x) const;
    double max_violation(const std::vector<double>& x) const;

    // Consistency checks: indices in range, lb <= ub, finite bounds on
    // integral variables. Throws SolverError on failure.
    void validate() const;

    // Plain-text dump in CPLEX LP style, for external cross-checking.
    std::string to_lp_format() const;

private:
    std::vector<Variable> vars_;
    std::vector<LinearConstraint> constraints_;
    std::vector<QuadObjTerm> quad_terms_;
    std::vector<double> linear_obj_;  // dense by var index
    double objective_constant_ = 0.0;
};

} // namespace windcf
