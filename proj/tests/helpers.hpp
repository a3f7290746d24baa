#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "windcf/miqp.hpp"
#include "windcf/predictors.hpp"
#include "windcf/schema.hpp"

namespace testutil {

// Deterministic uniform draws, independent of library distributions.
struct Rand {
    std::mt19937_64 gen;
    explicit Rand(std::uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1.0 - 1e-12));
    }
    bool coin(double p = 0.5) { return uniform() < p; }
};

// Random dense MLP with the given layer widths (hidden ReLU, identity head).
inline windcf::MlpClassifier random_mlp(std::uint64_t seed, std::vector<int> dims,
                                        double weight_scale = 0.8) {
    Rand rnd(seed);
    windcf::MlpClassifier m;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        windcf::MlpLayer layer;
        const int in = dims[l], out = dims[l + 1];
        layer.act =
            l + 2 == dims.size() ? windcf::Activation::Identity : windcf::Activation::Relu;
        layer.weights.assign(static_cast<size_t>(out),
                             std::vector<double>(static_cast<size_t>(in), 0.0));
        layer.biases.assign(static_cast<size_t>(out), 0.0);
        for (auto& row : layer.weights) {
            for (auto& w : row) w = rnd.uniform(-weight_scale, weight_scale);
        }
        for (auto& b : layer.biases) b = rnd.uniform(-0.5, 0.5);
        m.layers.push_back(std::move(layer));
    }
    for (int i = 0; i < dims.front(); ++i) m.inputs.push_back("x" + std::to_string(i));
    m.threshold = 0.0;
    m.epsilon = 0.05;
    m.validate();
    return m;
}

// Random regression tree over `nfeat` inputs with thresholds drawn from
// [lo, hi]; integer_thresholds puts them on the half-integer lattice.
inline windcf::Tree random_tree(Rand& rnd, int nfeat, int depth, double lo, double hi,
                                double leaf_lo, double leaf_hi, bool half_integer) {
    windcf::Tree tree;
    // Build a complete tree of the given depth recursively.
    struct Builder {
        Rand& rnd;
        windcf::Tree& tree;
        int nfeat;
        double lo, hi, leaf_lo, leaf_hi;
        bool half_integer;
        int build(int depth) {
            const int me = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(windcf::TreeNode{});
            if (depth == 0) {
                tree.nodes[static_cast<size_t>(me)].leaf = true;
                tree.nodes[static_cast<size_t>(me)].value = rnd.uniform(leaf_lo, leaf_hi);
                return me;
            }
            double thr = rnd.uniform(lo, hi);
            if (half_integer) thr = std::floor(thr) + 0.5;
            const int f = rnd.integer(0, nfeat - 1);
            const int l = build(depth - 1);
            const int r = build(depth - 1);
            auto& n = tree.nodes[static_cast<size_t>(me)];
            n.leaf = false;
            n.feature = f;
            n.threshold = thr;
            n.left = l;
            n.right = r;
            return me;
        }
    } b{rnd, tree, nfeat, lo, hi, leaf_lo, leaf_hi, half_integer};
    b.build(depth);
    return tree;
}

inline windcf::TreeEnsembleRegressor random_ensemble(std::uint64_t seed, int nfeat, int trees,
                                                     int depth, double thr_lo, double thr_hi,
                                                     double leaf_lo, double leaf_hi,
                                                     bool half_integer = false) {
    Rand rnd(seed);
    windcf::TreeEnsembleRegressor m;
    for (int i = 0; i < nfeat; ++i) m.inputs.push_back("x" + std::to_string(i));
    m.base = rnd.uniform(-1.0, 1.0);
    for (int t = 0; t < trees; ++t) {
        m.trees.push_back(
            random_tree(rnd, nfeat, depth, thr_lo, thr_hi, leaf_lo, leaf_hi, half_integer));
    }
    m.validate();
    return m;
}

// Random bounded convex MIQP for solver/enumeration cross-checks.
// Pattern count stays enumerable: binaries + small-range integers.
inline windcf::MiqpProblem random_miqp(std::uint64_t seed, int* patterns_cap = nullptr) {
    Rand rnd(seed);
    windcf::MiqpProblem p;
    const int nbin = rnd.integer(1, 8);
    const int nint = rnd.integer(0, 2);
    const int ncont = rnd.integer(0, 3);
    std::vector<int> vars;
    for (int i = 0; i < nbin; ++i) {
        vars.push_back(p.add_variable("b" + std::to_string(i), 0, 1, windcf::VarType::Binary));
    }
    long long pat = 1LL << nbin;
    for (int i = 0; i < nint; ++i) {
        const int lo = rnd.integer(-10, 0);
        const int hi = lo + rnd.integer(1, 12);
        vars.push_back(p.add_variable("i" + std::to_string(i), lo, hi, windcf::VarType::Integer));
        pat *= hi - lo + 1;
    }
    for (int i = 0; i < ncont; ++i) {
        const double lo = rnd.uniform(-8.0, 0.0);
        vars.push_back(p.add_variable("c" + std::to_string(i), lo, lo + rnd.uniform(1.0, 10.0)));
    }
    if (patterns_cap) *patterns_cap = static_cast<int>(pat);
    const int n = static_cast<int>(vars.size());
    const int rows = rnd.integer(2, 2 * n);
    for (int r = 0; r < rows; ++r) {
        windcf::LinearConstraint c;
        c.name = "r" + std::to_string(r);
        for (int j = 0; j < n; ++j) {
            if (rnd.coin(0.45)) c.terms.push_back({vars[static_cast<size_t>(j)], rnd.uniform(-3.0, 3.0)});
        }
        if (c.terms.empty()) c.terms.push_back({vars[0], 1.0});
        const double roll = rnd.uniform();
        c.sense = roll < 0.45 ? windcf::ConstraintSense::LessEqual
                 : roll < 0.9 ? windcf::ConstraintSense::GreaterEqual
                              : windcf::ConstraintSense::Equal;
        c.rhs = rnd.uniform(-6.0, 6.0);
        p.add_constraint(std::move(c));
    }
    if (rnd.coin(0.6)) {
        // Convex diagonal quadratic on a random subset.
        for (int j = 0; j < n; ++j) {
            if (rnd.coin(0.6)) {
                p.add_quadratic_objective_term(vars[static_cast<size_t>(j)], rnd.uniform(0.05, 2.0),
                                               rnd.uniform(-6.0, 6.0));
            }
        }
        // Occasionally mix in linear terms as well.
        if (rnd.coin(0.4)) {
            for (int j = 0; j < n; ++j) {
                if (rnd.coin(0.4)) p.add_linear_objective_term(vars[static_cast<size_t>(j)], rnd.uniform(-2.0, 2.0));
            }
        }
    } else {
        for (int j = 0; j < n; ++j) {
            if (rnd.coin(0.7)) p.add_linear_objective_term(vars[static_cast<size_t>(j)], rnd.uniform(-2.0, 2.0));
        }
    }
    return p;
}

} // namespace testutil
