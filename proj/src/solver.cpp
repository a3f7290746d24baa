#include "windcf/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <queue>
#include <set>

#include "windcf/errors.hpp"
#include "windcf/simplex.hpp"

namespace windcf {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::FeasibleAtLimit: return "FeasibleAtLimit";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

namespace {

struct RelaxOutcome {
    enum class St { Feasible, Infeasible, Unbounded, Numeric } st = St::Numeric;
    std::vector<double> x;       // problem variables only
    double lower_bound = -kInf;  // valid bound for the node
    double value = kInf;         // true objective at x
    std::vector<double> ray;
};

// Dense LU for the KKT polish step.
struct SquareSolver {
    int n = 0;
    std::vector<double> a;
    std::vector<int> piv;
    bool ok = false;

    bool factor(std::vector<double> m, int dim) {
        n = dim;
        a = std::move(m);
        piv.resize(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(a[static_cast<size_t>(k * n + k)]);
            for (int i = k + 1; i < n; ++i) {
                const double v = std::abs(a[static_cast<size_t>(i * n + k)]);
                if (v > best) { best = v; p = i; }
            }
            if (best < 1e-11) return ok = false;
            piv[static_cast<size_t>(k)] = p;
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(a[static_cast<size_t>(k * n + j)], a[static_cast<size_t>(p * n + j)]);
            }
            const double d = a[static_cast<size_t>(k * n + k)];
            for (int i = k + 1; i < n; ++i) {
                const double f = a[static_cast<size_t>(i * n + k)] / d;
                a[static_cast<size_t>(i * n + k)] = f;
                for (int j = k + 1; j < n; ++j) a[static_cast<size_t>(i * n + j)] -= f * a[static_cast<size_t>(k * n + j)];
            }
        }
        return ok = true;
    }

    std::vector<double> solve(std::vector<double> b) const {
        for (int k = 0; k < n; ++k) std::swap(b[static_cast<size_t>(k)], b[static_cast<size_t>(piv[static_cast<size_t>(k)])]);
        for (int i = 1; i < n; ++i) {
            for (int j = 0; j < i; ++j) b[static_cast<size_t>(i)] -= a[static_cast<size_t>(i * n + j)] * b[static_cast<size_t>(j)];
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) b[static_cast<size_t>(i)] -= a[static_cast<size_t>(i * n + j)] * b[static_cast<size_t>(j)];
            b[static_cast<size_t>(i)] /= a[static_cast<size_t>(i * n + i)];
        }
        return b;
    }
};

// Node relaxation machinery. Linear objectives go straight to the simplex;
// quadratic ones get an epigraph variable plus cutting planes. For integer
// quadratic variables the cuts are secants through adjacent integer points,
// which are exact at integral solutions; continuous quadratic variables get
// tangent cuts.
class RelaxationSolver {
public:
    RelaxationSolver(const MiqpProblem& p, bool integer_aware, double feas_tol)
        : p_(p), integer_aware_(integer_aware) {
        (void)feas_tol;
        n_ = p.num_vars();
        base_.num_vars = n_ + (p.has_quadratic_objective() ? 1 : 0);
        base_.lower.assign(static_cast<size_t>(base_.num_vars), -kInf);
        base_.upper.assign(static_cast<size_t>(base_.num_vars), kInf);
        base_.objective.assign(static_cast<size_t>(base_.num_vars), 0.0);
        for (int j = 0; j < n_; ++j) base_.objective[static_cast<size_t>(j)] = p.linear_objective()[static_cast<size_t>(j)];
        if (p.has_quadratic_objective()) {
            eta_ = n_;
            base_.objective[static_cast<size_t>(eta_)] = 1.0;
        }
        for (const auto& c : p.constraints()) {
            base_.rows.push_back(LpRow{c.terms, c.sense, c.rhs});
        }
        for (const auto& q : p.quadratic_terms()) {
            is_quad_int_.push_back(p.variables()[static_cast<size_t>(q.var)].type != VarType::Continuous);
        }
    }

    RelaxOutcome solve_node(const std::vector<double>& lb, const std::vector<double>& ub) {
        if (!p_.has_quadratic_objective()) return solve_linear(lb, ub);
        return solve_quadratic(lb, ub, integer_aware_);
    }

    // Continuous-objective semantics regardless of integer_aware flag.
    RelaxOutcome solve_continuous(const std::vector<double>& lb, const std::vector<double>& ub) {
        if (!p_.has_quadratic_objective()) return solve_linear(lb, ub);
        return solve_quadratic(lb, ub, /*use_secants=*/false);
    }

private:
    const MiqpProblem& p_;
    bool integer_aware_;
    int n_ = 0;
    int eta_ = -1;
    LpProblem base_;  // rows without cuts; bounds/objective templates
    std::vector<LpRow> cuts_;
    std::set<std::vector<long long>> cut_keys_;  // quantized rows, for dedupe
    std::vector<bool> is_quad_int_;

    double quad_value(const std::vector<double>& x) const {
        double v = 0.0;
        for (const auto& q : p_.quadratic_terms()) {
            const double d = x[static_cast<size_t>(q.var)] - q.center;
            v += q.coef * d * d;
        }
        return v;
    }

    double full_objective(const std::vector<double>& x) const { return p_.objective_value(x); }

    RelaxOutcome solve_linear(const std::vector<double>& lb, const std::vector<double>& ub) {
        LpProblem lp = base_;
        for (int j = 0; j < n_; ++j) {
            lp.lower[static_cast<size_t>(j)] = lb[static_cast<size_t>(j)];
            lp.upper[static_cast<size_t>(j)] = ub[static_cast<size_t>(j)];
        }
        const LpResult r = solve_lp(lp);
        RelaxOutcome out;
        switch (r.status) {
            case LpStatus::Optimal: {
                out.st = RelaxOutcome::St::Feasible;
                out.x = r.x;
                out.value = full_objective(out.x);
                out.lower_bound = out.value;
                break;
            }
            case LpStatus::Infeasible: out.st = RelaxOutcome::St::Infeasible; break;
            case LpStatus::Unbounded:
                out.st = RelaxOutcome::St::Unbounded;
                out.ray = r.ray;
                break;
            case LpStatus::NumericFailure: out.st = RelaxOutcome::St::Numeric; break;
        }
        return out;
    }

    // One cut through the full quadratic at point `at` (tangent), or with
    // integer secants substituted per integer variable.
    void add_cut_at(const std::vector<double>& at, bool use_secants,
                    const std::vector<double>& lb, const std::vector<double>& ub) {
        LpRow row;
        row.sense = ConstraintSense::LessEqual;
        // -eta + sum_k g_k x_k <= sum_k g_k a_k - value_k
        double rhs = 0.0;
        bool nontrivial = false;
        std::map<int, double> coefs;
        for (size_t k = 0; k < p_.quadratic_terms().size(); ++k) {
            const auto& q = p_.quadratic_terms()[k];
            const double a = at[static_cast<size_t>(q.var)];
            double slope, value_at_anchor, anchor;
            if (use_secants && is_quad_int_[k]) {
                // Secant through (f, q(f)) and (f+1, q(f+1)) where f = floor(a),
                // clamped into the node's integer range.
                const double ilo = std::ceil(lb[static_cast<size_t>(q.var)] - 1e-9);
                const double ihi = std::floor(ub[static_cast<size_t>(q.var)] + 1e-9);
                if (ihi - ilo < 1.0) {
                    // No unit interval: fall back to tangent.
                    slope = 2.0 * q.coef * (a - q.center);
                    anchor = a;
                    value_at_anchor = q.coef * (a - q.center) * (a - q.center);
                } else {
                    double f = std::floor(a);
                    f = std::min(std::max(f, ilo), ihi - 1.0);
                    const double q0 = q.coef * (f - q.center) * (f - q.center);
                    const double q1 = q.coef * (f + 1.0 - q.center) * (f + 1.0 - q.center);
                    slope = q1 - q0;
                    anchor = f;
                    value_at_anchor = q0;
                }
            } else {
                slope = 2.0 * q.coef * (a - q.center);
                anchor = a;
                value_at_anchor = q.coef * (a - q.center) * (a - q.center);
            }
            coefs[q.var] += slope;
            rhs += slope * anchor - value_at_anchor;
            nontrivial = nontrivial || slope != 0.0 || value_at_anchor != 0.0;
        }
        if (!nontrivial) return;
        // Quantized identity check: repeated anchors (frequent with secants)
        // must not bloat the pool.
        std::vector<long long> key;
        key.reserve(2 * coefs.size() + 1);
        for (const auto& [var, c] : coefs) {
            key.push_back(var);
            key.push_back(static_cast<long long>(std::llround(c * 1e9)));
        }
        key.push_back(static_cast<long long>(std::llround(rhs * 1e9)));
        if (!cut_keys_.insert(key).second) return;
        row.terms.push_back(LinearTerm{eta_, -1.0});
        for (const auto& [var, c] : coefs) row.terms.push_back(LinearTerm{var, c});
        row.rhs = rhs;
        cuts_.push_back(std::move(row));
        if (cuts_.size() > 600) {
            cuts_.erase(cuts_.begin(), cuts_.begin() + 200);
            cut_keys_.clear();  // coarse reset; duplicates may re-enter later
        }
    }

    RelaxOutcome solve_quadratic(const std::vector<double>& lb, const std::vector<double>& ub,
                                 bool use_secants) {
        LpProblem lp = base_;
        for (int j = 0; j < n_; ++j) {
            lp.lower[static_cast<size_t>(j)] = lb[static_cast<size_t>(j)];
            lp.upper[static_cast<size_t>(j)] = ub[static_cast<size_t>(j)];
        }
        lp.lower[static_cast<size_t>(eta_)] = 0.0;  // the quadratic is a sum of squares
        lp.upper[static_cast<size_t>(eta_)] = kInf;

        RelaxOutcome out;
        double best_lb = -kInf;
        std::vector<double> best_x;
        double best_val = kInf;
        double escape_scale = 1e6;
        const int max_iter = 400;
        for (int it = 0; it < max_iter; ++it) {
            lp.rows.resize(base_.rows.size());
            for (const auto& c : cuts_) lp.rows.push_back(c);
            const LpResult r = solve_lp(lp);
            if (r.status == LpStatus::Infeasible) {
                out.st = RelaxOutcome::St::Infeasible;
                return out;
            }
            if (r.status == LpStatus::NumericFailure) {
                out.st = RelaxOutcome::St::Numeric;
                return out;
            }
            if (r.status == LpStatus::Unbounded) {
                // Zero-curvature ray with negative slope means the QP itself
                // is unbounded; otherwise push a far cut to block the ray.
                double curv = 0.0;
                for (const auto& q : p_.quadratic_terms()) {
                    const double rk = r.ray[static_cast<size_t>(q.var)];
                    curv += q.coef * rk * rk;
                }
                double slope = 0.0;
                for (int j = 0; j < n_; ++j) slope += p_.linear_objective()[static_cast<size_t>(j)] * r.ray[static_cast<size_t>(j)];
                if (curv <= 1e-12) {
                    if (slope < -1e-12) {
                        out.st = RelaxOutcome::St::Unbounded;
                        out.ray = std::vector<double>(r.ray.begin(), r.ray.begin() + n_);
                        return out;
                    }
                    out.st = RelaxOutcome::St::Numeric;  // spurious ray
                    return out;
                }
                std::vector<double> far(static_cast<size_t>(n_), 0.0);
                for (const auto& q : p_.quadratic_terms()) {
                    const double rk = r.ray[static_cast<size_t>(q.var)];
                    far[static_cast<size_t>(q.var)] = q.center + (rk == 0.0 ? 0.0 : (rk > 0 ? 1.0 : -1.0) * escape_scale);
                }
                escape_scale *= 10.0;
                add_cut_at(far, false, lb, ub);
                continue;
            }
            std::vector<double> x(r.x.begin(), r.x.begin() + n_);
            const double lb_here = r.objective + p_.objective_constant();
            const double val_here = full_objective(x);
            if (lb_here > best_lb) best_lb = lb_here;
            if (val_here < best_val) {
                best_val = val_here;
                best_x = x;
            }
            const double tol = std::max(1e-10, 1e-9 * std::abs(best_val));
            if (best_val - best_lb <= tol) break;
            if (!use_secants && it >= 1) {
                if (polish(x, lb, ub, out)) {
                    if (out.lower_bound > best_lb) best_lb = out.lower_bound;
                    if (out.value < best_val) {
                        best_val = out.value;
                        best_x = out.x;
                    }
                    if (best_val - best_lb <= std::max(1e-10, 1e-9 * std::abs(best_val))) break;
                }
            }
            const size_t pool_before = cuts_.size();
            add_cut_at(x, use_secants, lb, ub);
            // Tangent backstop: tight at the current point, so the next LP
            // must move; plain secants can oscillate between two optima.
            if (use_secants) add_cut_at(x, false, lb, ub);
            if (cuts_.size() == pool_before) break;  // nothing new: bound is final
        }
        if (best_x.empty()) {
            out.st = RelaxOutcome::St::Numeric;
            return out;
        }
        out.st = RelaxOutcome::St::Feasible;
        out.x = std::move(best_x);
        out.value = best_val;
        out.lower_bound = std::min(best_lb, best_val);
        return out;
    }

    // Active-set KKT refinement: solve the equality-constrained QP on the
    // constraints tight at x, dropping wrong-signed duals and adding violated
    // rows until consistent. Exact when it verifies.
    bool polish(const std::vector<double>& x0, const std::vector<double>& lb,
                const std::vector<double>& ub, RelaxOutcome& out) {
        const int max_dim = 240;
        if (n_ > max_dim) return false;
        struct ActiveRow {
            std::vector<LinearTerm> terms;
            double rhs;
            int sign;  // +1: <=, -1: >=, 0: ==  (dual sign requirement)
            bool removable;
        };
        // Candidate actives from x0.
        std::vector<ActiveRow> active;
        auto row_value = [&](const std::vector<LinearTerm>& terms, const std::vector<double>& x) {
            double v = 0.0;
            for (const auto& t : terms) v += t.coef * x[static_cast<size_t>(t.var)];
            return v;
        };
        for (const auto& c : p_.constraints()) {
            const double v = row_value(c.terms, x0);
            if (c.sense == ConstraintSense::Equal) {
                active.push_back({c.terms, c.rhs, 0, false});
            } else if (c.sense == ConstraintSense::LessEqual && v >= c.rhs - 1e-7) {
                active.push_back({c.terms, c.rhs, +1, true});
            } else if (c.sense == ConstraintSense::GreaterEqual && v <= c.rhs + 1e-7) {
                active.push_back({c.terms, c.rhs, -1, true});
            }
        }
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lb[static_cast<size_t>(j)]) && lb[static_cast<size_t>(j)] == ub[static_cast<size_t>(j)]) {
                active.push_back({{LinearTerm{j, 1.0}}, lb[static_cast<size_t>(j)], 0, false});
                continue;
            }
            if (std::isfinite(ub[static_cast<size_t>(j)]) && x0[static_cast<size_t>(j)] >= ub[static_cast<size_t>(j)] - 1e-7) {
                active.push_back({{LinearTerm{j, 1.0}}, ub[static_cast<size_t>(j)], +1, true});
            } else if (std::isfinite(lb[static_cast<size_t>(j)]) && x0[static_cast<size_t>(j)] <= lb[static_cast<size_t>(j)] + 1e-7) {
                active.push_back({{LinearTerm{j, 1.0}}, lb[static_cast<size_t>(j)], -1, true});
            }
        }
        // H, g0 of the objective.
        std::vector<double> hdiag(static_cast<size_t>(n_), 0.0), g0(static_cast<size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j) g0[static_cast<size_t>(j)] = p_.linear_objective()[static_cast<size_t>(j)];
        for (const auto& q : p_.quadratic_terms()) {
            hdiag[static_cast<size_t>(q.var)] += 2.0 * q.coef;
            g0[static_cast<size_t>(q.var)] -= 2.0 * q.coef * q.center;
        }
        for (int round = 0; round < 30; ++round) {
            const int na = static_cast<int>(active.size());
            if (n_ + na > max_dim) return false;
            const int dim = n_ + na;
            std::vector<double> kkt(static_cast<size_t>(dim) * static_cast<size_t>(dim), 0.0);
            std::vector<double> rhs(static_cast<size_t>(dim), 0.0);
            for (int j = 0; j < n_; ++j) {
                kkt[static_cast<size_t>(j * dim + j)] = hdiag[static_cast<size_t>(j)];
                rhs[static_cast<size_t>(j)] = -g0[static_cast<size_t>(j)];
            }
            for (int i = 0; i < na; ++i) {
                for (const auto& t : active[static_cast<size_t>(i)].terms) {
                    kkt[static_cast<size_t>(t.var * dim + n_ + i)] += t.coef;
                    kkt[static_cast<size_t>((n_ + i) * dim + t.var)] += t.coef;
                }
                rhs[static_cast<size_t>(n_ + i)] = active[static_cast<size_t>(i)].rhs;
            }
            SquareSolver lu;
            if (!lu.factor(std::move(kkt), dim)) return false;
            const std::vector<double> sol = lu.solve(rhs);
            std::vector<double> x(sol.begin(), sol.begin() + n_);
            // Dual sign screening.
            int worst = -1;
            double worst_amt = 1e-8;
            for (int i = 0; i < na; ++i) {
                if (!active[static_cast<size_t>(i)].removable) continue;
                const double lambda = sol[static_cast<size_t>(n_ + i)];
                const double bad = active[static_cast<size_t>(i)].sign > 0 ? -lambda : lambda;
                if (bad > worst_amt) {
                    worst_amt = bad;
                    worst = i;
                }
            }
            if (worst >= 0) {
                active.erase(active.begin() + worst);
                continue;
            }
            // Primal screening: add the most violated inactive constraint.
            int add = -1;
            double add_amt = 1e-9;
            const auto& cons = p_.constraints();
            for (size_t ci = 0; ci < cons.size(); ++ci) {
                const double viol = p_.constraint_violation(cons[ci], x);
                if (viol > add_amt) {
                    add_amt = viol;
                    add = static_cast<int>(ci);
                }
            }
            int add_bound = -1, add_bound_side = 0;
            for (int j = 0; j < n_; ++j) {
                if (x[static_cast<size_t>(j)] > ub[static_cast<size_t>(j)] + add_amt) {
                    add_amt = x[static_cast<size_t>(j)] - ub[static_cast<size_t>(j)];
                    add_bound = j;
                    add_bound_side = +1;
                    add = -2;
                } else if (x[static_cast<size_t>(j)] < lb[static_cast<size_t>(j)] - add_amt) {
                    add_amt = lb[static_cast<size_t>(j)] - x[static_cast<size_t>(j)];
                    add_bound = j;
                    add_bound_side = -1;
                    add = -2;
                }
            }
            if (add >= 0) {
                const auto& c = cons[static_cast<size_t>(add)];
                active.push_back({c.terms, c.rhs,
                                  c.sense == ConstraintSense::LessEqual ? +1 : -1, true});
                continue;
            }
            if (add == -2) {
                if (add_bound_side > 0) {
                    active.push_back({{LinearTerm{add_bound, 1.0}}, ub[static_cast<size_t>(add_bound)], +1, true});
                } else {
                    active.push_back({{LinearTerm{add_bound, 1.0}}, lb[static_cast<size_t>(add_bound)], -1, true});
                }
                continue;
            }
            // Consistent: x is the exact relaxation optimum.
            out.x = x;
            out.value = full_objective(x);
            out.lower_bound = out.value;
            return true;
        }
        return false;
    }
};

long long pattern_key_hash(const std::vector<long long>& v) {
    long long h = 1469598103934665603LL;
    for (long long x : v) {
        h ^= x + 0x9e3779b97f4a7c15LL;
        h *= 1099511628211LL;
    }
    return h;
}

struct Node {
    std::vector<double> lb, ub;
    double bound = -kInf;
    long id = 0;
    int depth = 0;
    bool repushed = false;
};

}  // namespace

SolveResult solve(const MiqpProblem& problem, const SolveConfig& cfg) {
    problem.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const int n = problem.num_vars();
    std::vector<int> int_vars;
    for (int j = 0; j < n; ++j) {
        if (problem.variables()[static_cast<size_t>(j)].type != VarType::Continuous) int_vars.push_back(j);
    }

    RelaxationSolver relax(problem, /*integer_aware=*/true, cfg.feas_tol);

    SolveResult res;
    res.best_bound = -kInf;

    Node root;
    root.lb.resize(static_cast<size_t>(n));
    root.ub.resize(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        root.lb[static_cast<size_t>(j)] = problem.variables()[static_cast<size_t>(j)].lower;
        root.ub[static_cast<size_t>(j)] = problem.variables()[static_cast<size_t>(j)].upper;
    }

    auto cmp = [](const Node& a, const Node& b) {
        if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
        return a.id > b.id;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> heap(cmp);
    std::vector<Node> stack;
    long next_id = 0;
    root.id = next_id++;
    stack.push_back(std::move(root));

    double ub_val = kInf;
    std::vector<double> incumbent;
    std::set<long long> rejected;
    double abandoned_bound = kInf;  // floor from nodes dropped without proof
    bool timed_out = false;

    auto prune_eps = [&] {
        const double slack = std::max(1e-12, std::min(1e-9, cfg.gap_target));
        return slack * std::max(1.0, std::abs(ub_val));
    };
    auto frontier_bound = [&] {
        double b = kInf;
        if (!heap.empty()) b = std::min(b, heap.top().bound);
        for (const auto& nd : stack) b = std::min(b, nd.bound);
        return b;
    };

    auto log = [&](const std::string& line) {
        if (cfg.node_log) (*cfg.node_log) << line << "\n";
    };

    auto accept_incumbent = [&](const std::vector<double>& x, double val) {
        if (val < ub_val - 1e-12) {
            ub_val = val;
            incumbent = x;
            res.incumbent_history.push_back(val);
            log("incumbent " + std::to_string(val) + " nodes " + std::to_string(res.node_count));
        }
    };

    // Split around integral value v of variable `var`, keeping v in the lower
    // child, and push both children.
    auto push_children = [&](const Node& node, int var, double lo_child_ub, double hi_child_lb,
                             double node_bound, bool plunge_up) {
        Node lo = node, hi = node;
        lo.ub[static_cast<size_t>(var)] = lo_child_ub;
        hi.lb[static_cast<size_t>(var)] = hi_child_lb;
        lo.bound = node_bound;
        hi.bound = node_bound;
        lo.depth = hi.depth = node.depth + 1;
        lo.repushed = hi.repushed = false;
        const bool lo_ok = lo.lb[static_cast<size_t>(var)] <= lo.ub[static_cast<size_t>(var)] + 1e-12;
        const bool hi_ok = hi.lb[static_cast<size_t>(var)] <= hi.ub[static_cast<size_t>(var)] + 1e-12;
        lo.id = next_id++;
        hi.id = next_id++;
        if (cfg.node_selection == NodeSelection::DepthFirst) {
            if (plunge_up) {
                if (lo_ok) stack.push_back(std::move(lo));
                if (hi_ok) stack.push_back(std::move(hi));
            } else {
                if (hi_ok) stack.push_back(std::move(hi));
                if (lo_ok) stack.push_back(std::move(lo));
            }
            return;
        }
        if (plunge_up) {
            if (lo_ok) heap.push(std::move(lo));
            if (hi_ok) stack.push_back(std::move(hi));
        } else {
            if (hi_ok) heap.push(std::move(hi));
            if (lo_ok) stack.push_back(std::move(lo));
        }
    };

    while (!stack.empty() || !heap.empty()) {
        if (elapsed() > cfg.time_limit_sec) {
            timed_out = true;
            break;
        }
        // Global gap termination.
        if (std::isfinite(ub_val)) {
            const double fb = std::min(frontier_bound(), abandoned_bound);
            const double gb = std::min(fb, ub_val);
            if ((ub_val - gb) <= cfg.gap_target * std::max(1.0, std::abs(ub_val))) {
                res.best_bound = gb;
                break;
            }
        }
        Node node;
        if (!stack.empty()) {
            node = std::move(stack.back());
            stack.pop_back();
        } else {
            node = heap.top();
            heap.pop();
        }
        if (node.bound >= ub_val - prune_eps()) continue;

        RelaxOutcome rel = relax.solve_node(node.lb, node.ub);
        ++res.node_count;
        if (rel.st == RelaxOutcome::St::Numeric) {
            ++res.numeric_warnings;
            log("node numeric failure; dropped");
            abandoned_bound = std::min(abandoned_bound, node.bound);
            continue;
        }
        if (rel.st == RelaxOutcome::St::Infeasible) continue;
        if (rel.st == RelaxOutcome::St::Unbounded) {
            // Integral variables have finite bounds, so the ray lives in the
            // continuous variables and survives any integral fixing.
            res.status = SolveStatus::Unbounded;
            res.wall_time_sec = elapsed();
            return res;
        }
        const double node_lb = std::max(node.bound, rel.lower_bound);
        if (node_lb >= ub_val - prune_eps()) continue;

        // Fractionality scan.
        int branch_var = -1;
        double branch_val = 0.0;
        double best_frac = cfg.int_tol;
        bool any_frac = false;
        for (int pass = 0; pass < 2 && branch_var < 0; ++pass) {
            // pass 0: binaries; pass 1: general integers
            for (int j : int_vars) {
                const bool is_bin = problem.variables()[static_cast<size_t>(j)].type == VarType::Binary;
                if ((pass == 0) != is_bin) continue;
                const double v = rel.x[static_cast<size_t>(j)];
                const double frac = std::abs(v - std::round(v));
                if (frac <= cfg.int_tol) continue;
                any_frac = true;
                if (cfg.branch_rule == BranchRule::LowestIndex) {
                    branch_var = j;
                    branch_val = v;
                    break;
                }
                const double dist = std::min(v - std::floor(v), std::ceil(v) - v);
                if (dist > best_frac) {
                    best_frac = dist;
                    branch_var = j;
                    branch_val = v;
                }
            }
            if (pass == 0 && branch_var >= 0) break;
            best_frac = cfg.int_tol;
        }
        (void)any_frac;

        if (branch_var < 0) {
            // Integral within tolerance: verify an exactly-rounded completion.
            std::vector<long long> key;
            key.reserve(int_vars.size());
            std::vector<double> fix_lb = node.lb, fix_ub = node.ub;
            bool in_box = true;
            for (int j : int_vars) {
                const double v = std::round(rel.x[static_cast<size_t>(j)]);
                key.push_back(static_cast<long long>(v));
                if (v < node.lb[static_cast<size_t>(j)] - 1e-9 || v > node.ub[static_cast<size_t>(j)] + 1e-9) in_box = false;
                fix_lb[static_cast<size_t>(j)] = v;
                fix_ub[static_cast<size_t>(j)] = v;
            }
            const long long h = pattern_key_hash(key);
            bool accepted = false;
            if (in_box && !rejected.count(h)) {
                RelaxOutcome comp = relax.solve_continuous(fix_lb, fix_ub);
                if (comp.st == RelaxOutcome::St::Feasible) {
                    const double val = problem.objective_value(comp.x);
                    accept_incumbent(comp.x, val);
                    accepted = true;
                    // If the node bound is still well below the verified value
                    // (outer approximation not fully closed), revisit once;
                    // the grown cut pool tightens the re-solve.
                    if (val - node_lb > std::max(1e-7, 1e-7 * std::abs(val))) {
                        if (!node.repushed) {
                            Node again = node;
                            again.bound = node_lb;
                            again.repushed = true;
                            again.id = next_id++;
                            heap.push(std::move(again));
                        } else {
                            abandoned_bound = std::min(abandoned_bound, node_lb);
                        }
                    }
                } else if (comp.st == RelaxOutcome::St::Numeric) {
                    ++res.numeric_warnings;
                }
                if (!accepted) rejected.insert(h);
            }
            if (!accepted) {
                // The rounded assignment is not usable. Split the box around
                // the first integral variable with room, keeping completeness.
                int var = -1;
                for (size_t k = 0; k < int_vars.size(); ++k) {
                    const int j = int_vars[k];
                    if (node.ub[static_cast<size_t>(j)] - node.lb[static_cast<size_t>(j)] > 0.5) {
                        var = j;
                        break;
                    }
                }
                if (var >= 0) {
                    const double v = std::round(rel.x[static_cast<size_t>(var)]);
                    // children [lb, v] and [v+1, ub] (or [lb, v-1], [v, ub] when
                    // v is at the upper bound) keep every integral point.
                    if (v < node.ub[static_cast<size_t>(var)] - 0.5) {
                        push_children(node, var, v, v + 1.0, node_lb, false);
                    } else {
                        push_children(node, var, v - 1.0, v, node_lb, true);
                    }
                }
                // No room anywhere: the node held exactly this assignment,
                // proven unusable; drop it.
            }
            continue;
        }

        const double fl = std::floor(branch_val), ce = std::ceil(branch_val);
        const bool plunge_up = (branch_val - fl) >= 0.5;
        push_children(node, branch_var, fl, ce, node_lb, plunge_up);
        log("branch x" + std::to_string(branch_var) + " at " + std::to_string(branch_val) +
            " bound " + std::to_string(node_lb));
    }

    res.wall_time_sec = elapsed();
    const double fb = std::min(frontier_bound(), abandoned_bound);
    if (!incumbent.empty()) {
        res.has_incumbent = true;
        res.x = incumbent;
        res.objective = ub_val;
        res.best_bound = std::min(std::isfinite(fb) ? fb : ub_val, ub_val);
        res.gap = (res.objective - res.best_bound) / std::max(1.0, std::abs(res.objective));
        if (!timed_out && res.gap <= cfg.gap_target + 1e-15) {
            res.status = SolveStatus::Optimal;
        } else if (res.gap <= cfg.gap_target + 1e-15) {
            res.status = SolveStatus::Optimal;
        } else {
            res.status = SolveStatus::FeasibleAtLimit;
        }
    } else if (timed_out) {
        res.status = SolveStatus::FeasibleAtLimit;  // limit hit before any incumbent
        res.has_incumbent = false;
        res.gap = kInf;
        res.best_bound = std::isfinite(fb) ? fb : -kInf;
    } else {
        res.status = SolveStatus::Infeasible;
    }
    return res;
}

SolveResult solve_relaxation(const MiqpProblem& problem, const SolveConfig& cfg) {
    problem.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RelaxationSolver relax(problem, /*integer_aware=*/false, cfg.feas_tol);
    const int n = problem.num_vars();
    std::vector<double> lb(static_cast<size_t>(n)), ub(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        lb[static_cast<size_t>(j)] = problem.variables()[static_cast<size_t>(j)].lower;
        ub[static_cast<size_t>(j)] = problem.variables()[static_cast<size_t>(j)].upper;
    }
    RelaxOutcome rel = relax.solve_continuous(lb, ub);
    SolveResult res;
    res.node_count = 1;
    res.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    switch (rel.st) {
        case RelaxOutcome::St::Feasible:
            res.status = SolveStatus::Optimal;
            res.has_incumbent = true;
            res.x = rel.x;
            res.objective = rel.value;
            res.best_bound = rel.lower_bound;
            res.gap = (rel.value - rel.lower_bound) / std::max(1.0, std::abs(rel.value));
            break;
        case RelaxOutcome::St::Infeasible: res.status = SolveStatus::Infeasible; break;
        case RelaxOutcome::St::Unbounded: res.status = SolveStatus::Unbounded; break;
        case RelaxOutcome::St::Numeric:
            throw SolverError("relaxation: numerical failure");
    }
    return res;
}

} // namespace windcf
