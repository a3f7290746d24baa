#include "windcf/encode.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "windcf/errors.hpp"

namespace windcf {

namespace {

// Affine expression over problem variables, used to fold stable neurons and
// fixed inputs through the network.
struct Affine {
    double constant = 0.0;
    std::map<int, double> terms;

    void add_scaled(const Affine& other, double w) {
        if (w == 0.0) return;
        constant += w * other.constant;
        for (const auto& [v, c] : other.terms) terms[v] += w * c;
    }
};

std::vector<LinearTerm> to_terms(const Affine& a) {
    std::vector<LinearTerm> out;
    out.reserve(a.terms.size());
    for (const auto& [v, c] : a.terms) {
        if (c != 0.0) out.push_back(LinearTerm{v, c});
    }
    return out;
}

}  // namespace

std::vector<std::pair<double, double>> input_intervals(const std::vector<ModelInput>& inputs,
                                                       const MiqpProblem& problem) {
    std::vector<std::pair<double, double>> iv;
    iv.reserve(inputs.size());
    for (const auto& in : inputs) {
        if (in.var < 0) {
            iv.emplace_back(in.value, in.value);
        } else {
            const auto& v = problem.variables()[static_cast<size_t>(in.var)];
            iv.emplace_back(v.lower, v.upper);
        }
    }
    return iv;
}

ActivationBounds propagate_bounds(const MlpClassifier& model,
                                  const std::vector<std::pair<double, double>>& input_bounds) {
    model.validate();
    if (input_bounds.size() != model.in_dim()) {
        throw DataError("propagate_bounds: input bound count mismatch");
    }
    for (const auto& [lo, hi] : input_bounds) {
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            throw DataError("propagate_bounds: all input bounds must be finite");
        }
        if (lo > hi) throw DataError("propagate_bounds: empty input interval");
    }
    ActivationBounds ab;
    std::vector<std::pair<double, double>> cur = input_bounds;
    for (const auto& layer : model.layers) {
        std::vector<std::pair<double, double>> pre(layer.out_dim());
        for (size_t o = 0; o < layer.out_dim(); ++o) {
            double lo = layer.biases[o], hi = layer.biases[o];
            for (size_t i = 0; i < layer.in_dim(); ++i) {
                const double w = layer.weights[o][i];
                if (w >= 0.0) {
                    lo += w * cur[i].first;
                    hi += w * cur[i].second;
                } else {
                    lo += w * cur[i].second;
                    hi += w * cur[i].first;
                }
            }
            pre[o] = {lo, hi};
        }
        ab.pre.push_back(pre);
        cur.resize(pre.size());
        for (size_t o = 0; o < pre.size(); ++o) {
            if (layer.act == Activation::Relu) {
                cur[o] = {std::max(0.0, pre[o].first), std::max(0.0, pre[o].second)};
            } else {
                cur[o] = pre[o];
            }
        }
    }
    return ab;
}

int encode_mlp(const MlpClassifier& model, const std::vector<ModelInput>& inputs,
               MiqpProblem& problem, const std::string& prefix) {
    const ActivationBounds ab = propagate_bounds(model, input_intervals(inputs, problem));

    std::vector<Affine> cur(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].var < 0) {
            cur[i].constant = inputs[i].value;
        } else {
            cur[i].terms[inputs[i].var] = 1.0;
        }
    }

    for (size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        const bool last = l + 1 == model.layers.size();
        std::vector<Affine> next(layer.out_dim());
        for (size_t o = 0; o < layer.out_dim(); ++o) {
            Affine pre;
            pre.constant = layer.biases[o];
            for (size_t i = 0; i < layer.in_dim(); ++i) {
                pre.add_scaled(cur[i], layer.weights[o][i]);
            }
            const auto [lo, hi] = ab.pre[l][o];
            if (last) {
                // Identity score head: one variable pinned to the affine value.
                const int score = problem.add_variable(prefix + "_score", lo, hi);
                LinearConstraint eq;
                eq.name = prefix + "_score_eq";
                eq.terms.push_back(LinearTerm{score, 1.0});
                for (const auto& t : to_terms(pre)) eq.terms.push_back(LinearTerm{t.var, -t.coef});
                eq.sense = ConstraintSense::Equal;
                eq.rhs = pre.constant;
                problem.add_constraint(std::move(eq));
                return score;
            }
            if (hi <= 0.0) {
                next[o] = Affine{};  // dead neuron: output 0
                continue;
            }
            if (lo >= 0.0) {
                next[o] = pre;  // always active: output equals pre-activation
                continue;
            }
            // Unstable: h = max(0, pre) via binary z.
            const std::string nn = prefix + "_h" + std::to_string(l) + "_" + std::to_string(o);
            const int h = problem.add_variable(nn, 0.0, hi);
            const int z = problem.add_variable(nn + "_z", 0.0, 1.0, VarType::Binary);
            const auto pre_terms = to_terms(pre);
            {
                LinearConstraint c;  // h >= pre
                c.name = nn + "_ge_pre";
                c.terms.push_back(LinearTerm{h, 1.0});
                for (const auto& t : pre_terms) c.terms.push_back(LinearTerm{t.var, -t.coef});
                c.sense = ConstraintSense::GreaterEqual;
                c.rhs = pre.constant;
                problem.add_constraint(std::move(c));
            }
            {
                LinearConstraint c;  // h >= 0
                c.name = nn + "_ge_0";
                c.terms.push_back(LinearTerm{h, 1.0});
                c.sense = ConstraintSense::GreaterEqual;
                c.rhs = 0.0;
                problem.add_constraint(std::move(c));
            }
            {
                LinearConstraint c;  // h <= pre - lo*(1-z)
                c.name = nn + "_le_pre";
                c.terms.push_back(LinearTerm{h, 1.0});
                for (const auto& t : pre_terms) c.terms.push_back(LinearTerm{t.var, -t.coef});
                c.terms.push_back(LinearTerm{z, -lo});
                c.sense = ConstraintSense::LessEqual;
                c.rhs = pre.constant - lo;
                problem.add_constraint(std::move(c));
            }
            {
                LinearConstraint c;  // h <= hi*z
                c.name = nn + "_le_hiz";
                c.terms.push_back(LinearTerm{h, 1.0});
                c.terms.push_back(LinearTerm{z, -hi});
                c.sense = ConstraintSense::LessEqual;
                c.rhs = 0.0;
                problem.add_constraint(std::move(c));
            }
            Affine ha;
            ha.terms[h] = 1.0;
            next[o] = std::move(ha);
        }
        cur = std::move(next);
    }
    throw DataError("encode_mlp: network has no output layer");
}

namespace {

struct PathCond {
    int input = 0;    // model input index
    double threshold = 0.0;
    bool left = false;  // true: value < threshold; false: value >= threshold
};

struct ReachableLeaf {
    double value = 0.0;
    std::vector<PathCond> undecided;
};

void collect_leaves(const Tree& tree, int node, const std::vector<std::pair<double, double>>& iv,
                    std::vector<PathCond>& path, std::vector<ReachableLeaf>& out) {
    const TreeNode& n = tree.nodes[static_cast<size_t>(node)];
    if (n.leaf) {
        out.push_back(ReachableLeaf{n.value, path});
        return;
    }
    const auto [lo, hi] = iv[static_cast<size_t>(n.feature)];
    const bool left_reachable = lo < n.threshold;
    const bool right_reachable = hi >= n.threshold;
    if (left_reachable && right_reachable) {
        path.push_back(PathCond{n.feature, n.threshold, true});
        collect_leaves(tree, n.left, iv, path, out);
        path.back().left = false;
        collect_leaves(tree, n.right, iv, path, out);
        path.pop_back();
    } else if (left_reachable) {
        collect_leaves(tree, n.left, iv, path, out);
    } else {
        collect_leaves(tree, n.right, iv, path, out);
    }
}

}  // namespace

std::pair<double, double> tree_ensemble_range(
    const TreeEnsembleRegressor& model,
    const std::vector<std::pair<double, double>>& intervals) {
    double lo = model.base, hi = model.base;
    for (const auto& tree : model.trees) {
        std::vector<ReachableLeaf> leaves;
        std::vector<PathCond> path;
        collect_leaves(tree, 0, intervals, path, leaves);
        double tmin = leaves[0].value, tmax = leaves[0].value;
        for (const auto& l : leaves) {
            tmin = std::min(tmin, l.value);
            tmax = std::max(tmax, l.value);
        }
        lo += tmin;
        hi += tmax;
    }
    return {lo, hi};
}

int encode_tree_ensemble(const TreeEnsembleRegressor& model,
                         const std::vector<ModelInput>& inputs, MiqpProblem& problem,
                         double delta_split, const std::string& prefix) {
    model.validate();
    if (inputs.size() != model.inputs.size()) {
        throw DataError("encode_tree_ensemble: input count mismatch");
    }
    const auto iv = input_intervals(inputs, problem);
    for (size_t i = 0; i < iv.size(); ++i) {
        if (!std::isfinite(iv[i].first) || !std::isfinite(iv[i].second)) {
            throw DataError("encode_tree_ensemble: split feature '" + model.inputs[i] +
                            "' has infinite bounds");
        }
    }

    double const_part = model.base;
    double out_lo = model.base, out_hi = model.base;
    // (leaf value, binary var) pairs contributing to the output equality.
    std::vector<std::pair<double, int>> contributions;

    for (size_t ti = 0; ti < model.trees.size(); ++ti) {
        std::vector<ReachableLeaf> leaves;
        std::vector<PathCond> path;
        collect_leaves(model.trees[ti], 0, iv, path, leaves);
        if (leaves.size() == 1) {
            const_part += leaves[0].value;
            out_lo += leaves[0].value;
            out_hi += leaves[0].value;
            continue;
        }
        double tmin = leaves[0].value, tmax = leaves[0].value;
        LinearConstraint pick;  // exactly one leaf active
        pick.name = prefix + std::to_string(ti) + "_pick";
        pick.sense = ConstraintSense::Equal;
        pick.rhs = 1.0;
        for (size_t li = 0; li < leaves.size(); ++li) {
            const auto& leaf = leaves[li];
            tmin = std::min(tmin, leaf.value);
            tmax = std::max(tmax, leaf.value);
            const std::string zn =
                prefix + std::to_string(ti) + "_z" + std::to_string(li);
            const int z = problem.add_variable(zn, 0.0, 1.0, VarType::Binary);
            pick.terms.push_back(LinearTerm{z, 1.0});
            contributions.emplace_back(leaf.value, z);
            for (const auto& cond : leaf.undecided) {
                const ModelInput& in = inputs[static_cast<size_t>(cond.input)];
                // Undecided conditions always sit on problem variables.
                const int xv = in.var;
                const double xlo = iv[static_cast<size_t>(cond.input)].first;
                const double xhi = iv[static_cast<size_t>(cond.input)].second;
                const bool integral =
                    problem.variables()[static_cast<size_t>(xv)].type != VarType::Continuous;
                if (cond.left) {
                    // value < threshold
                    const double cap = integral ? std::ceil(cond.threshold) - 1.0
                                                : cond.threshold - delta_split;
                    if (cap >= xhi) continue;  // implied by the box
                    LinearConstraint c;
                    c.name = zn + "_l";
                    c.terms.push_back(LinearTerm{xv, 1.0});
                    c.terms.push_back(LinearTerm{z, xhi - cap});
                    c.sense = ConstraintSense::LessEqual;
                    c.rhs = xhi;
                    problem.add_constraint(std::move(c));
                } else {
                    // value >= threshold
                    const double cap = integral ? std::ceil(cond.threshold) : cond.threshold;
                    if (cap <= xlo) continue;
                    LinearConstraint c;
                    c.name = zn + "_r";
                    c.terms.push_back(LinearTerm{xv, 1.0});
                    c.terms.push_back(LinearTerm{z, -(cap - xlo)});
                    c.sense = ConstraintSense::GreaterEqual;
                    c.rhs = xlo;
                    problem.add_constraint(std::move(c));
                }
            }
        }
        problem.add_constraint(std::move(pick));
        out_lo += tmin;
        out_hi += tmax;
    }

    const int out = problem.add_variable(prefix + "_out", out_lo, out_hi);
    LinearConstraint eq;
    eq.name = prefix + "_out_eq";
    eq.terms.push_back(LinearTerm{out, 1.0});
    for (const auto& [v, z] : contributions) eq.terms.push_back(LinearTerm{z, -v});
    eq.sense = ConstraintSense::Equal;
    eq.rhs = const_part;
    problem.add_constraint(std::move(eq));
    return out;
}

} // namespace windcf
