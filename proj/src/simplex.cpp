#include "windcf/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace windcf {

namespace {

// Column-major dense LU with partial pivoting, used to cross-check and
// repair the running tableau at termination.
struct DenseLu {
    int n = 0;
    std::vector<double> a;  // n*n, row-major
    std::vector<int> perm;
    bool singular = false;

    void factor(std::vector<double> m, int dim) {
        n = dim;
        a = std::move(m);
        perm.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
        singular = false;
        for (int k = 0; k < n; ++k) {
            int piv = k;
            double best = std::abs(a[static_cast<size_t>(k * n + k)]);
            for (int i = k + 1; i < n; ++i) {
                const double v = std::abs(a[static_cast<size_t>(i * n + k)]);
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (best < 1e-13) {
                singular = true;
                return;
            }
            if (piv != k) {
                for (int j = 0; j < n; ++j) {
                    std::swap(a[static_cast<size_t>(k * n + j)], a[static_cast<size_t>(piv * n + j)]);
                }
                std::swap(perm[static_cast<size_t>(k)], perm[static_cast<size_t>(piv)]);
            }
            const double d = a[static_cast<size_t>(k * n + k)];
            for (int i = k + 1; i < n; ++i) {
                const double f = a[static_cast<size_t>(i * n + k)] / d;
                a[static_cast<size_t>(i * n + k)] = f;
                if (f == 0.0) continue;
                for (int j = k + 1; j < n; ++j) {
                    a[static_cast<size_t>(i * n + j)] -= f * a[static_cast<size_t>(k * n + j)];
                }
            }
        }
    }

    // Solve L U x = P b.
    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = b[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        for (int i = 1; i < n; ++i) {
            double s = x[static_cast<size_t>(i)];
            for (int j = 0; j < i; ++j) s -= a[static_cast<size_t>(i * n + j)] * x[static_cast<size_t>(j)];
            x[static_cast<size_t>(i)] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = x[static_cast<size_t>(i)];
            for (int j = i + 1; j < n; ++j) s -= a[static_cast<size_t>(i * n + j)] * x[static_cast<size_t>(j)];
            x[static_cast<size_t>(i)] = s / a[static_cast<size_t>(i * n + i)];
        }
        return x;
    }
};

enum VarState : signed char { kBasic = 0, kAtLower = 1, kAtUpper = 2, kAtZeroFree = 3 };

class Simplex {
public:
    Simplex(const LpProblem& lp, const LpOptions& opts) : lp_(lp), opts_(opts) {
        n_ = lp.num_vars;
        m_ = static_cast<int>(lp.rows.size());
        // Columns: structural | slack per row | artificial per row (created on
        // demand). Slack bounds encode the row sense.
        ncols_ = n_ + m_;
        lb_ = lp.lower;
        ub_ = lp.upper;
        cost_.assign(static_cast<size_t>(ncols_), 0.0);
        for (int j = 0; j < n_; ++j) cost_[static_cast<size_t>(j)] = lp.objective[static_cast<size_t>(j)];
        lb_.resize(static_cast<size_t>(ncols_));
        ub_.resize(static_cast<size_t>(ncols_));
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            switch (lp.rows[static_cast<size_t>(i)].sense) {
                case ConstraintSense::LessEqual:
                    lb_[static_cast<size_t>(s)] = 0.0;
                    ub_[static_cast<size_t>(s)] = kInf;
                    break;
                case ConstraintSense::GreaterEqual:
                    lb_[static_cast<size_t>(s)] = -kInf;
                    ub_[static_cast<size_t>(s)] = 0.0;
                    break;
                case ConstraintSense::Equal:
                    lb_[static_cast<size_t>(s)] = 0.0;
                    ub_[static_cast<size_t>(s)] = 0.0;
                    break;
            }
        }
        max_iters_ = opts.max_iterations > 0 ? opts.max_iterations
                                             : 20000 + 200 * std::max(m_, n_);
        bland_after_ = 500 + 5 * std::max(m_, n_);
    }

    LpResult run() {
        build_initial_basis();
        if (!artificials_.empty()) {
            // Phase 1: drive the artificial infeasibility to zero.
            std::vector<double> save_cost = cost_;
            std::fill(cost_.begin(), cost_.end(), 0.0);
            for (int a : artificials_) cost_[static_cast<size_t>(a)] = 1.0;
            rebuild_cost_row();
            const LpStatus st = iterate(/*phase1=*/true);
            if (st != LpStatus::Optimal) return fail();  // phase 1 cannot be unbounded
            const double infeas = current_objective();
            if (infeas > 1e-7) {
                LpResult r;
                r.status = LpStatus::Infeasible;
                r.iterations = iters_;
                return r;
            }
            pivot_out_artificials();
            for (int a : artificials_) {
                lb_[static_cast<size_t>(a)] = 0.0;
                ub_[static_cast<size_t>(a)] = 0.0;
            }
            cost_ = save_cost;
            rebuild_cost_row();
        }
        const LpStatus st = iterate(/*phase1=*/false);
        if (st == LpStatus::NumericFailure) return fail();
        if (st == LpStatus::Unbounded) {
            LpResult r;
            r.status = LpStatus::Unbounded;
            r.ray = extract_ray();
            r.iterations = iters_;
            return r;
        }
        // Termination check against a fresh factorization; resume if the
        // updated tableau drifted.
        for (int round = 0; round < 5; ++round) {
            if (verify_and_polish()) break;
            const LpStatus st2 = iterate(false);
            if (st2 == LpStatus::NumericFailure) return fail();
            if (st2 == LpStatus::Unbounded) {
                LpResult r;
                r.status = LpStatus::Unbounded;
                r.ray = extract_ray();
                r.iterations = iters_;
                return r;
            }
        }
        LpResult r;
        r.status = LpStatus::Optimal;
        r.x = structural_values();
        r.objective = 0.0;
        for (int j = 0; j < n_; ++j) r.objective += lp_.objective[static_cast<size_t>(j)] * r.x[static_cast<size_t>(j)];
        r.iterations = iters_;
        return r;
    }

private:
    const LpProblem& lp_;
    LpOptions opts_;
    int n_ = 0, m_ = 0, ncols_ = 0;
    std::vector<double> lb_, ub_, cost_;
    std::vector<int> artificials_;

    // tab_ holds B^-1 * A for every column; xb_ the basic variable values.
    std::vector<double> tab_;  // m_ x ncols_, row-major
    std::vector<double> xb_;
    std::vector<int> basis_;           // column index per row
    std::vector<signed char> state_;   // per column
    std::vector<double> dj_;           // reduced-cost row
    double obj_shift_ = 0.0;           // c_B . x_B bookkeeping is implicit
    int iters_ = 0;
    int max_iters_ = 0;
    int bland_after_ = 0;
    int unbounded_col_ = -1;
    int unbounded_dir_ = 0;

    double& tab(int i, int j) { return tab_[static_cast<size_t>(i) * static_cast<size_t>(ncols_) + static_cast<size_t>(j)]; }
    double tab(int i, int j) const { return tab_[static_cast<size_t>(i) * static_cast<size_t>(ncols_) + static_cast<size_t>(j)]; }

    // Original column entries of structural/slack/artificial column j.
    void original_column(int j, std::vector<double>& col) const {
        std::fill(col.begin(), col.end(), 0.0);
        if (j < n_) {
            for (int i = 0; i < m_; ++i) {
                for (const auto& t : lp_.rows[static_cast<size_t>(i)].terms) {
                    if (t.var == j) col[static_cast<size_t>(i)] += t.coef;
                }
            }
        } else if (j < n_ + m_) {
            col[static_cast<size_t>(j - n_)] = 1.0;
        } else {
            const int k = j - n_ - m_;
            col[static_cast<size_t>(art_row_[static_cast<size_t>(k)])] = art_sign_[static_cast<size_t>(k)];
        }
    }
    std::vector<int> art_row_;
    std::vector<double> art_sign_;

    double nonbasic_value(int j) const {
        switch (state_[static_cast<size_t>(j)]) {
            case kAtLower: return lb_[static_cast<size_t>(j)];
            case kAtUpper: return ub_[static_cast<size_t>(j)];
            default: return 0.0;
        }
    }

    std::vector<double> structural_values() const {
        std::vector<double> x(static_cast<size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j) {
            if (state_[static_cast<size_t>(j)] != kBasic) x[static_cast<size_t>(j)] = nonbasic_value(j);
        }
        for (int i = 0; i < m_; ++i) {
            if (basis_[static_cast<size_t>(i)] < n_) x[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = xb_[static_cast<size_t>(i)];
        }
        return x;
    }

    double current_objective() const {
        double v = 0.0;
        for (int j = 0; j < ncols_; ++j) {
            if (state_[static_cast<size_t>(j)] != kBasic) v += cost_[static_cast<size_t>(j)] * nonbasic_value(j);
        }
        for (int i = 0; i < m_; ++i) v += cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] * xb_[static_cast<size_t>(i)];
        return v;
    }

    void build_initial_basis() {
        // Start from the all-slack basis; absorb out-of-bound slack values
        // with artificial columns so phase 1 starts feasible.
        basis_.resize(static_cast<size_t>(m_));
        xb_.assign(static_cast<size_t>(m_), 0.0);
        state_.assign(static_cast<size_t>(ncols_), kAtLower);
        for (int j = 0; j < n_; ++j) {
            if (std::isfinite(lb_[static_cast<size_t>(j)])) state_[static_cast<size_t>(j)] = kAtLower;
            else if (std::isfinite(ub_[static_cast<size_t>(j)])) state_[static_cast<size_t>(j)] = kAtUpper;
            else state_[static_cast<size_t>(j)] = kAtZeroFree;
        }
        std::vector<double> act(static_cast<size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            double v = 0.0;
            for (const auto& t : lp_.rows[static_cast<size_t>(i)].terms) v += t.coef * nonbasic_value(t.var);
            act[static_cast<size_t>(i)] = v;
        }
        std::vector<int> art_of_row(static_cast<size_t>(m_), -1);
        for (int i = 0; i < m_; ++i) {
            const int s = n_ + i;
            const double slack = lp_.rows[static_cast<size_t>(i)].rhs - act[static_cast<size_t>(i)];
            if (slack >= lb_[static_cast<size_t>(s)] - opts_.feas_tol && slack <= ub_[static_cast<size_t>(s)] + opts_.feas_tol) {
                basis_[static_cast<size_t>(i)] = s;
                state_[static_cast<size_t>(s)] = kBasic;
                xb_[static_cast<size_t>(i)] = slack;
            } else {
                // Pin the slack at its nearest bound, absorb the residual.
                double pin;
                double sign;
                if (slack > ub_[static_cast<size_t>(s)]) {
                    pin = ub_[static_cast<size_t>(s)];
                    state_[static_cast<size_t>(s)] = kAtUpper;
                    sign = 1.0;
                } else {
                    pin = lb_[static_cast<size_t>(s)];
                    state_[static_cast<size_t>(s)] = kAtLower;
                    sign = -1.0;
                }
                art_row_.push_back(i);
                art_sign_.push_back(sign);
                const int a = ncols_;
                ++ncols_;
                lb_.push_back(0.0);
                ub_.push_back(kInf);
                cost_.push_back(0.0);
                state_.push_back(kBasic);
                artificials_.push_back(a);
                art_of_row[static_cast<size_t>(i)] = a;
                basis_[static_cast<size_t>(i)] = a;
                xb_[static_cast<size_t>(i)] = (slack - pin) / sign;
            }
        }
        // With the all-slack/artificial basis, B is the identity up to the
        // artificial signs, so the initial tableau is the original matrix
        // with artificial rows scaled by their sign.
        tab_.assign(static_cast<size_t>(m_) * static_cast<size_t>(ncols_), 0.0);
        for (int i = 0; i < m_; ++i) {
            const double scale = art_of_row[static_cast<size_t>(i)] >= 0 ? art_sign_[static_cast<size_t>(artificial_index(art_of_row[static_cast<size_t>(i)]))] : 1.0;
            for (const auto& t : lp_.rows[static_cast<size_t>(i)].terms) tab(i, t.var) += t.coef / scale;
            tab(i, n_ + i) = 1.0 / scale;
            if (art_of_row[static_cast<size_t>(i)] >= 0) tab(i, art_of_row[static_cast<size_t>(i)]) = 1.0;
        }
        dj_.assign(static_cast<size_t>(ncols_), 0.0);
    }

    size_t artificial_index(int col) const {
        for (size_t k = 0; k < artificials_.size(); ++k) {
            if (artificials_[k] == col) return k;
        }
        return 0;
    }

    void rebuild_cost_row() {
        // d_j = c_j - c_B . tab[:,j]
        dj_.assign(static_cast<size_t>(ncols_), 0.0);
        std::vector<double> cb(static_cast<size_t>(m_));
        bool any = false;
        for (int i = 0; i < m_; ++i) {
            cb[static_cast<size_t>(i)] = cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
            any |= cb[static_cast<size_t>(i)] != 0.0;
        }
        for (int j = 0; j < ncols_; ++j) dj_[static_cast<size_t>(j)] = cost_[static_cast<size_t>(j)];
        if (!any) return;
        for (int i = 0; i < m_; ++i) {
            const double c = cb[static_cast<size_t>(i)];
            if (c == 0.0) continue;
            const double* row = &tab_[static_cast<size_t>(i) * static_cast<size_t>(ncols_)];
            for (int j = 0; j < ncols_; ++j) dj_[static_cast<size_t>(j)] -= c * row[j];
        }
    }

    // Entering column choice. Returns -1 when optimal.
    int price(bool bland) const {
        int best = -1;
        double best_score = opts_.opt_tol;
        for (int j = 0; j < ncols_; ++j) {
            const signed char st = state_[static_cast<size_t>(j)];
            if (st == kBasic) continue;
            if (lb_[static_cast<size_t>(j)] == ub_[static_cast<size_t>(j)] && st != kAtZeroFree) continue;  // pinned
            const double d = dj_[static_cast<size_t>(j)];
            double viol = 0.0;
            if (st == kAtLower && d < -opts_.opt_tol) viol = -d;
            else if (st == kAtUpper && d > opts_.opt_tol) viol = d;
            else if (st == kAtZeroFree && std::abs(d) > opts_.opt_tol) viol = std::abs(d);
            if (viol <= 0.0) continue;
            if (bland) return j;
            if (viol > best_score) {
                best_score = viol;
                best = j;
            }
        }
        return best;
    }

    LpStatus iterate(bool phase1) {
        int stall = 0;
        while (true) {
            if (iters_ >= max_iters_) return LpStatus::NumericFailure;
            const bool bland = stall > bland_after_;
            const int q = price(bland);
            if (q < 0) return LpStatus::Optimal;
            const signed char st = state_[static_cast<size_t>(q)];
            const double d = dj_[static_cast<size_t>(q)];
            const int dir = (st == kAtLower || (st == kAtZeroFree && d < 0.0)) ? +1 : -1;

            // Ratio test: how far can the entering variable move?
            double theta_basic = kInf;
            int leave_row = -1;
            double leave_alpha = 0.0;
            int leave_to = kAtLower;
            const double own_range =
                (st == kAtZeroFree) ? kInf : ub_[static_cast<size_t>(q)] - lb_[static_cast<size_t>(q)];
            for (int i = 0; i < m_; ++i) {
                const double alpha = dir * tab(i, q);
                if (std::abs(alpha) < 1e-10) continue;
                const int b = basis_[static_cast<size_t>(i)];
                double t;
                int to;
                if (alpha > 0.0) {
                    if (!std::isfinite(lb_[static_cast<size_t>(b)])) continue;
                    t = (xb_[static_cast<size_t>(i)] - lb_[static_cast<size_t>(b)]) / alpha;
                    to = kAtLower;
                } else {
                    if (!std::isfinite(ub_[static_cast<size_t>(b)])) continue;
                    t = (xb_[static_cast<size_t>(i)] - ub_[static_cast<size_t>(b)]) / alpha;
                    to = kAtUpper;
                }
                if (t < 0.0) t = 0.0;  // clamp drift
                const bool better =
                    t < theta_basic - 1e-12 ||
                    (t < theta_basic + 1e-12 && leave_row >= 0 &&
                     (bland ? b < basis_[static_cast<size_t>(leave_row)]
                            : std::abs(tab(i, q)) > std::abs(leave_alpha)));
                if (leave_row < 0 ? t < theta_basic : better) {
                    theta_basic = std::min(theta_basic, t);
                    leave_row = i;
                    leave_alpha = tab(i, q);
                    leave_to = to;
                }
            }
            if (!std::isfinite(theta_basic) && !std::isfinite(own_range)) {
                unbounded_col_ = q;
                unbounded_dir_ = dir;
                return LpStatus::Unbounded;
            }
            ++iters_;
            if (std::isfinite(own_range) && own_range <= theta_basic + 1e-12) {
                // Entering variable flips to its opposite bound; no basis change.
                stall = own_range > 1e-12 ? 0 : stall + 1;
                for (int i = 0; i < m_; ++i) {
                    xb_[static_cast<size_t>(i)] -= own_range * dir * tab(i, q);
                }
                state_[static_cast<size_t>(q)] = st == kAtLower ? kAtUpper : kAtLower;
                continue;
            }
            // Pivot: q enters, basis_[leave_row] leaves to `leave_to`.
            const double theta = theta_basic;
            stall = theta > 1e-12 ? 0 : stall + 1;
            const double entering_val = nonbasic_value(q) + dir * theta;
            for (int i = 0; i < m_; ++i) {
                if (i == leave_row) continue;
                xb_[static_cast<size_t>(i)] -= dir * theta * tab(i, q);
            }
            const int leaving = basis_[static_cast<size_t>(leave_row)];
            state_[static_cast<size_t>(leaving)] = static_cast<signed char>(leave_to);
            basis_[static_cast<size_t>(leave_row)] = q;
            state_[static_cast<size_t>(q)] = kBasic;
            xb_[static_cast<size_t>(leave_row)] = entering_val;
            pivot_update(leave_row, q);
            (void)phase1;
        }
    }

    void pivot_update(int r, int q) {
        double* prow = &tab_[static_cast<size_t>(r) * static_cast<size_t>(ncols_)];
        const double piv = prow[q];
        const double inv = 1.0 / piv;
        for (int j = 0; j < ncols_; ++j) prow[j] *= inv;
        prow[q] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* row = &tab_[static_cast<size_t>(i) * static_cast<size_t>(ncols_)];
            const double f = row[q];
            if (f == 0.0) continue;
            for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
            row[q] = 0.0;
        }
        const double fd = dj_[static_cast<size_t>(q)];
        if (fd != 0.0) {
            for (int j = 0; j < ncols_; ++j) dj_[static_cast<size_t>(j)] -= fd * prow[j];
            dj_[static_cast<size_t>(q)] = 0.0;
        }
    }

    void pivot_out_artificials() {
        for (int i = 0; i < m_; ++i) {
            const int b = basis_[static_cast<size_t>(i)];
            if (b < n_ + m_) continue;  // not artificial
            // Degenerate pivot on any usable non-artificial column.
            int q = -1;
            for (int j = 0; j < n_ + m_; ++j) {
                if (state_[static_cast<size_t>(j)] == kBasic) continue;
                if (std::abs(tab(i, j)) > 1e-7) {
                    q = j;
                    break;
                }
            }
            if (q < 0) continue;  // redundant row; artificial stays pinned at 0
            const int dir = 1;
            (void)dir;
            state_[static_cast<size_t>(b)] = kAtLower;
            basis_[static_cast<size_t>(i)] = q;
            const double val = nonbasic_value(q);
            state_[static_cast<size_t>(q)] = kBasic;
            pivot_update(i, q);
            xb_[static_cast<size_t>(i)] = val + 0.0;  // degenerate: basic at its former bound value
            // Recompute this row's basic value exactly below in verify.
        }
        recompute_basics();
        rebuild_cost_row();
    }

    // Solve B xb = b - N xn from original data; also refresh reduced costs.
    bool recompute_basics() {
        DenseLu lu;
        std::vector<double> bmat(static_cast<size_t>(m_) * static_cast<size_t>(m_), 0.0);
        std::vector<double> col(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            original_column(basis_[static_cast<size_t>(i)], col);
            for (int r = 0; r < m_; ++r) bmat[static_cast<size_t>(r * m_ + i)] = col[static_cast<size_t>(r)];
        }
        lu.factor(std::move(bmat), m_);
        if (lu.singular) return false;
        std::vector<double> rhs(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) rhs[static_cast<size_t>(i)] = lp_.rows[static_cast<size_t>(i)].rhs;
        for (int j = 0; j < ncols_; ++j) {
            if (state_[static_cast<size_t>(j)] == kBasic) continue;
            const double v = nonbasic_value(j);
            if (v == 0.0) continue;
            original_column(j, col);
            for (int i = 0; i < m_; ++i) rhs[static_cast<size_t>(i)] -= col[static_cast<size_t>(i)] * v;
        }
        xb_ = lu.solve(rhs);
        return true;
    }

    // Fresh-factorization optimality check; fixes xb_ drift. Returns true
    // when the current basis is primal and dual feasible.
    bool verify_and_polish() {
        DenseLu lu;
        std::vector<double> bmat(static_cast<size_t>(m_) * static_cast<size_t>(m_), 0.0);
        std::vector<double> col(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            original_column(basis_[static_cast<size_t>(i)], col);
            for (int r = 0; r < m_; ++r) bmat[static_cast<size_t>(r * m_ + i)] = col[static_cast<size_t>(r)];
        }
        lu.factor(std::move(bmat), m_);
        if (lu.singular) return true;  // keep tableau answer; nothing better available
        std::vector<double> rhs(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) rhs[static_cast<size_t>(i)] = lp_.rows[static_cast<size_t>(i)].rhs;
        for (int j = 0; j < ncols_; ++j) {
            if (state_[static_cast<size_t>(j)] == kBasic) continue;
            const double v = nonbasic_value(j);
            if (v == 0.0) continue;
            original_column(j, col);
            for (int i = 0; i < m_; ++i) rhs[static_cast<size_t>(i)] -= col[static_cast<size_t>(i)] * v;
        }
        const std::vector<double> xb_exact = lu.solve(rhs);
        double primal_viol = 0.0;
        for (int i = 0; i < m_; ++i) {
            const int b = basis_[static_cast<size_t>(i)];
            primal_viol = std::max(primal_viol, lb_[static_cast<size_t>(b)] - xb_exact[static_cast<size_t>(i)]);
            primal_viol = std::max(primal_viol, xb_exact[static_cast<size_t>(i)] - ub_[static_cast<size_t>(b)]);
        }
        xb_ = xb_exact;
        if (primal_viol > 1e-7) {
            rebuild_tableau(lu);
            return false;
        }
        // Dual check: y = B^-T c_B, d_j = c_j - y . A_j.
        std::vector<double> cb(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) cb[static_cast<size_t>(i)] = cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
        // Transpose solve via factoring B^T directly (m is small enough).
        DenseLu lut;
        std::vector<double> btmat(static_cast<size_t>(m_) * static_cast<size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            original_column(basis_[static_cast<size_t>(i)], col);
            for (int r = 0; r < m_; ++r) btmat[static_cast<size_t>(i * m_ + r)] = col[static_cast<size_t>(r)];
        }
        lut.factor(std::move(btmat), m_);
        if (lut.singular) return true;
        const std::vector<double> y = lut.solve(cb);
        bool dual_ok = true;
        for (int j = 0; j < ncols_ && dual_ok; ++j) {
            const signed char st = state_[static_cast<size_t>(j)];
            if (st == kBasic) continue;
            if (lb_[static_cast<size_t>(j)] == ub_[static_cast<size_t>(j)] && st != kAtZeroFree) continue;
            original_column(j, col);
            double d = cost_[static_cast<size_t>(j)];
            for (int i = 0; i < m_; ++i) d -= y[static_cast<size_t>(i)] * col[static_cast<size_t>(i)];
            if (st == kAtLower && d < -1e-7) dual_ok = false;
            if (st == kAtUpper && d > 1e-7) dual_ok = false;
            if (st == kAtZeroFree && std::abs(d) > 1e-7) dual_ok = false;
        }
        if (!dual_ok) {
            rebuild_tableau(lu);
            rebuild_cost_row();
            return false;
        }
        return true;
    }

    void rebuild_tableau(const DenseLu& lu) {
        std::vector<double> col(static_cast<size_t>(m_));
        for (int j = 0; j < ncols_; ++j) {
            original_column(j, col);
            const std::vector<double> t = lu.solve(col);
            for (int i = 0; i < m_; ++i) tab(i, j) = t[static_cast<size_t>(i)];
        }
        rebuild_cost_row();
    }

    std::vector<double> extract_ray() const {
        // Moving the entering column by +1 in its improving direction changes
        // structural variables by dir on itself and -dir*tab on the basics.
        std::vector<double> ray(static_cast<size_t>(n_), 0.0);
        if (unbounded_col_ < 0) return ray;
        if (unbounded_col_ < n_) ray[static_cast<size_t>(unbounded_col_)] = unbounded_dir_;
        for (int i = 0; i < m_; ++i) {
            const int b = basis_[static_cast<size_t>(i)];
            if (b < n_) ray[static_cast<size_t>(b)] = -unbounded_dir_ * tab(i, unbounded_col_);
        }
        return ray;
    }

    LpResult fail() const {
        LpResult r;
        r.status = LpStatus::NumericFailure;
        r.iterations = iters_;
        return r;
    }
};

}  // namespace

LpResult solve_lp(const LpProblem& lp, const LpOptions& opts) {
    if (lp.rows.empty()) {
        // Pure box problem: each variable sits at its cheapest bound.
        LpResult r;
        r.x.assign(static_cast<size_t>(lp.num_vars), 0.0);
        r.objective = 0.0;
        for (int j = 0; j < lp.num_vars; ++j) {
            const double c = lp.objective[static_cast<size_t>(j)];
            const double lo = lp.lower[static_cast<size_t>(j)], hi = lp.upper[static_cast<size_t>(j)];
            if (lo > hi) {
                r.status = LpStatus::Infeasible;
                return r;
            }
            double v;
            if (c > 0.0) {
                if (!std::isfinite(lo)) {
                    r.status = LpStatus::Unbounded;
                    r.ray.assign(static_cast<size_t>(lp.num_vars), 0.0);
                    r.ray[static_cast<size_t>(j)] = -1.0;
                    return r;
                }
                v = lo;
            } else if (c < 0.0) {
                if (!std::isfinite(hi)) {
                    r.status = LpStatus::Unbounded;
                    r.ray.assign(static_cast<size_t>(lp.num_vars), 0.0);
                    r.ray[static_cast<size_t>(j)] = 1.0;
                    return r;
                }
                v = hi;
            } else {
                v = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
            }
            r.x[static_cast<size_t>(j)] = v;
            r.objective += c * v;
        }
        r.status = LpStatus::Optimal;
        return r;
    }
    Simplex s(lp, opts);
    return s.run();
}

} // namespace windcf
