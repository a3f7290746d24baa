#pragma once

// Deliberately naive textbook simplex (standard form, Big-M, full tableau,
// Bland's rule). Used only as an independent cross-check of the production
// LP path; shares no code with it.

#include <cmath>
#include <limits>
#include <vector>

#include "windcf/miqp.hpp"

namespace testutil {

enum class RefStatus { Optimal, Infeasible, Unbounded, Failed };

struct RefResult {
    RefStatus status = RefStatus::Failed;
    double objective = 0.0;
};

// Minimize c.x subject to rows {<=,>=,=} rhs and finite/infinite bounds.
inline RefResult reference_simplex(const std::vector<double>& c,
                                   const std::vector<double>& lo,
                                   const std::vector<double>& hi,
                                   const std::vector<windcf::LinearConstraint>& rows) {
    using windcf::ConstraintSense;
    const size_t n_orig = c.size();
    // Split every variable into x = p - q with p, q >= 0, and turn the bounds
    // into explicit rows. Crude, but exactly the textbook recipe.
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    std::vector<int> sense;  // -1: <=, 0: =, +1: >=
    for (const auto& r : rows) {
        std::vector<double> row(2 * n_orig, 0.0);
        for (const auto& t : r.terms) {
            row[static_cast<size_t>(t.var)] += t.coef;
            row[n_orig + static_cast<size_t>(t.var)] -= t.coef;
        }
        A.push_back(row);
        b.push_back(r.rhs);
        sense.push_back(r.sense == ConstraintSense::LessEqual ? -1
                        : r.sense == ConstraintSense::Equal  ? 0
                                                             : 1);
    }
    for (size_t j = 0; j < n_orig; ++j) {
        if (std::isfinite(lo[j])) {
            std::vector<double> row(2 * n_orig, 0.0);
            row[j] = 1.0;
            row[n_orig + j] = -1.0;
            A.push_back(row);
            b.push_back(lo[j]);
            sense.push_back(1);
        }
        if (std::isfinite(hi[j])) {
            std::vector<double> row(2 * n_orig, 0.0);
            row[j] = 1.0;
            row[n_orig + j] = -1.0;
            A.push_back(row);
            b.push_back(hi[j]);
            sense.push_back(-1);
        }
    }
    const size_t m = A.size();
    // Normalize rhs >= 0.
    for (size_t i = 0; i < m; ++i) {
        if (b[i] < 0) {
            for (auto& v : A[i]) v = -v;
            b[i] = -b[i];
            sense[i] = -sense[i];
        }
    }
    // Columns: p/q | slacks | artificials.
    size_t ncols = 2 * n_orig;
    std::vector<size_t> slack_col(m, SIZE_MAX), art_col(m, SIZE_MAX);
    for (size_t i = 0; i < m; ++i) {
        if (sense[i] != 0) slack_col[i] = ncols++;
        if (sense[i] != -1) art_col[i] = ncols++;  // >= and = need artificials
    }
    double cmax = 1.0;
    for (double v : c) cmax = std::max(cmax, std::abs(v));
    const double big_m = 1e7 * cmax;
    std::vector<std::vector<double>> T(m, std::vector<double>(ncols + 1, 0.0));
    std::vector<double> cost(ncols, 0.0);
    for (size_t j = 0; j < n_orig; ++j) {
        cost[j] = c[j];
        cost[n_orig + j] = -c[j];
    }
    std::vector<size_t> basis(m);
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < 2 * n_orig; ++j) T[i][j] = A[i][j];
        if (slack_col[i] != SIZE_MAX) T[i][slack_col[i]] = sense[i] == -1 ? 1.0 : -1.0;
        if (art_col[i] != SIZE_MAX) {
            T[i][art_col[i]] = 1.0;
            cost[art_col[i]] = big_m;
            basis[i] = art_col[i];
        } else {
            basis[i] = slack_col[i];
        }
        T[i][ncols] = b[i];
    }
    // Bland-rule simplex.
    for (long iter = 0; iter < 200000; ++iter) {
        // Reduced costs from scratch (slow and simple).
        long enter = -1;
        for (size_t j = 0; j < ncols; ++j) {
            double d = cost[j];
            for (size_t i = 0; i < m; ++i) d -= cost[basis[i]] * T[i][j];
            if (d < -1e-9) {
                enter = static_cast<long>(j);
                break;
            }
        }
        if (enter < 0) {
            // Optimal: check artificials.
            double obj = 0.0;
            bool art_active = false;
            for (size_t i = 0; i < m; ++i) {
                if (art_col[i] != SIZE_MAX && basis[i] == art_col[i] && T[i][ncols] > 1e-7) {
                    art_active = true;
                }
                obj += cost[basis[i]] * T[i][ncols];
            }
            if (art_active) return {RefStatus::Infeasible, 0.0};
            // Remove the Big-M contribution of any degenerate artificial.
            double true_obj = 0.0;
            for (size_t i = 0; i < m; ++i) {
                if (basis[i] < 2 * n_orig) true_obj += cost[basis[i]] * T[i][ncols];
            }
            return {RefStatus::Optimal, true_obj};
        }
        long leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < m; ++i) {
            if (T[i][static_cast<size_t>(enter)] > 1e-9) {
                const double ratio = T[i][ncols] / T[i][static_cast<size_t>(enter)];
                if (ratio < best - 1e-12 ||
                    (ratio < best + 1e-12 &&
                     (leave < 0 || basis[i] < basis[static_cast<size_t>(leave)]))) {
                    best = ratio;
                    leave = static_cast<long>(i);
                }
            }
        }
        if (leave < 0) return {RefStatus::Unbounded, 0.0};
        const size_t r = static_cast<size_t>(leave), q = static_cast<size_t>(enter);
        const double piv = T[r][q];
        for (auto& v : T[r]) v /= piv;
        for (size_t i = 0; i < m; ++i) {
            if (i == r) continue;
            const double f = T[i][q];
            if (f == 0.0) continue;
            for (size_t j = 0; j <= ncols; ++j) T[i][j] -= f * T[r][j];
        }
        basis[r] = q;
    }
    return {RefStatus::Failed, 0.0};
}

} // namespace testutil
