#include "windcf/miqp.hpp"

#include <cmath>
#include <sstream>

#include "windcf/errors.hpp"

namespace windcf {

int MiqpProblem::add_variable(const std::string& name, double lower, double upper, VarType type) {
    if (lower > upper) {
        throw SolverError("variable " + name + ": lower bound exceeds upper bound");
    }
    if (type == VarType::Binary) {
        lower = std::max(lower, 0.0);
        upper = std::min(upper, 1.0);
    }
    vars_.push_back(Variable{name, lower, upper, type});
    linear_obj_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
}

void MiqpProblem::add_constraint(LinearConstraint c) {
    for (const auto& t : c.terms) {
        if (t.var < 0 || t.var >= num_vars()) {
            throw SolverError("constraint " + c.name + " references unknown variable");
        }
    }
    constraints_.push_back(std::move(c));
}

void MiqpProblem::add_quadratic_objective_term(int var, double a, double center) {
    if (var < 0 || var >= num_vars()) throw SolverError("quadratic term: unknown variable");
    if (a < 0.0) throw SolverError("quadratic term: negative coefficient (non-convex objective)");
    if (a == 0.0) return;
    quad_terms_.push_back(QuadObjTerm{var, a, center});
}

void MiqpProblem::add_linear_objective_term(int var, double b) {
    if (var < 0 || var >= num_vars()) throw SolverError("linear term: unknown variable");
    linear_obj_[static_cast<size_t>(var)] += b;
}

int MiqpProblem::num_binaries() const {
    int c = 0;
    for (const auto& v : vars_) c += v.type == VarType::Binary ? 1 : 0;
    return c;
}

int MiqpProblem::num_integrals() const {
    int c = 0;
    for (const auto& v : vars_) c += v.type != VarType::Continuous ? 1 : 0;
    return c;
}

double MiqpProblem::objective_value(const std::vector<double>& x) const {
    double v = objective_constant_;
    for (const auto& q : quad_terms_) {
        const double d = x[static_cast<size_t>(q.var)] - q.center;
        v += q.coef * d * d;
    }
    for (size_t j = 0; j < linear_obj_.size(); ++j) v += linear_obj_[j] * x[j];
    return v;
}

double MiqpProblem::constraint_violation(const LinearConstraint& c,
                                         const std::vector<double>& x) const {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * x[static_cast<size_t>(t.var)];
    switch (c.sense) {
        case ConstraintSense::LessEqual: return lhs - c.rhs;
        case ConstraintSense::GreaterEqual: return c.rhs - lhs;
        case ConstraintSense::Equal: return std::abs(lhs - c.rhs);
    }
    return 0.0;
}

double MiqpProblem::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (const auto& c : constraints_) worst = std::max(worst, constraint_violation(c, x));
    for (size_t j = 0; j < vars_.size(); ++j) {
        worst = std::max(worst, vars_[j].lower - x[j]);
        worst = std::max(worst, x[j] - vars_[j].upper);
    }
    return worst;
}

void MiqpProblem::validate() const {
    for (const auto& v : vars_) {
        if (v.lower > v.upper) throw SolverError("variable " + v.name + ": empty domain");
        if (v.type != VarType::Continuous &&
            (!std::isfinite(v.lower) || !std::isfinite(v.upper))) {
            throw SolverError("integral variable " + v.name + " must have finite bounds");
        }
    }
    for (const auto& q : quad_terms_) {
        if (q.coef < 0.0) throw SolverError("non-convex objective");
    }
}

static std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string MiqpProblem::to_lp_format() const {
    std::ostringstream os;
    os << "Minimize\n obj:";
    bool wrote = false;
    for (size_t j = 0; j < linear_obj_.size(); ++j) {
        if (linear_obj_[j] == 0.0) continue;
        os << (linear_obj_[j] >= 0 ? " + " : " - ") << fmt_num(std::abs(linear_obj_[j])) << " "
           << vars_[j].name;
        wrote = true;
    }
    // Expand a(x-c)^2 = a x^2 - 2ac x + a c^2; the constant joins the free term.
    double constant = objective_constant_;
    for (const auto& q : quad_terms_) {
        const double lin = -2.0 * q.coef * q.center;
        if (lin != 0.0) {
            os << (lin >= 0 ? " + " : " - ") << fmt_num(std::abs(lin)) << " "
               << vars_[static_cast<size_t>(q.var)].name;
        }
        constant += q.coef * q.center * q.center;
        wrote = true;
    }
    if (constant != 0.0) {
        os << (constant >= 0 ? " + " : " - ") << fmt_num(std::abs(constant));
        wrote = true;
    }
    if (!quad_terms_.empty()) {
        os << " + [";
        for (const auto& q : quad_terms_) {
            const double two_a = 2.0 * q.coef;
            os << (two_a >= 0 ? " + " : " - ") << fmt_num(std::abs(two_a)) << " "
               << vars_[static_cast<size_t>(q.var)].name << " ^ 2";
        }
        os << " ] / 2";
    } else if (!wrote) {
        os << " 0";
    }
    os << "\nSubject To\n";
    for (size_t i = 0; i < constraints_.size(); ++i) {
        const auto& c = constraints_[i];
        os << " " << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ":";
        for (const auto& t : c.terms) {
            os << (t.coef >= 0 ? " + " : " - ") << fmt_num(std::abs(t.coef)) << " "
               << vars_[static_cast<size_t>(t.var)].name;
        }
        switch (c.sense) {
            case ConstraintSense::LessEqual: os << " <= "; break;
            case ConstraintSense::GreaterEqual: os << " >= "; break;
            case ConstraintSense::Equal: os << " = "; break;
        }
        os << fmt_num(c.rhs) << "\n";
    }
    os << "Bounds\n";
    for (const auto& v : vars_) {
        if (std::isinf(v.lower) && std::isinf(v.upper)) {
            os << " " << v.name << " free\n";
        } else {
            os << " ";
            if (std::isfinite(v.lower)) os << fmt_num(v.lower) << " <= ";
            else os << "-inf <= ";
            os << v.name;
            if (std::isfinite(v.upper)) os << " <= " << fmt_num(v.upper);
            os << "\n";
        }
    }
    bool any_bin = false, any_int = false;
    for (const auto& v : vars_) {
        any_bin |= v.type == VarType::Binary;
        any_int |= v.type == VarType::Integer;
    }
    if (any_bin) {
        os << "Binaries\n";
        for (const auto& v : vars_) {
            if (v.type == VarType::Binary) os << " " << v.name;
        }
        os << "\n";
    }
    if (any_int) {
        os << "Generals\n";
        for (const auto& v : vars_) {
            if (v.type == VarType::Integer) os << " " << v.name;
        }
        os << "\n";
    }
    os << "End\n";
    return os.str();
}

} // namespace windcf
