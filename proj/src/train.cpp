#include "windcf/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "windcf/errors.hpp"

namespace windcf {

using nlohmann::json;

namespace {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    size_t index(size_t n) { return std::min<size_t>(static_cast<size_t>(uniform() * static_cast<double>(n)), n - 1); }
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }
};

}  // namespace

TemporalSplit temporal_split(const std::vector<FeatureVector>& dataset, double q) {
    if (q <= 0.0 || q >= 1.0) throw DataError("temporal_split: q must be in (0, 1)");
    if (dataset.empty()) throw DataError("temporal_split: empty dataset");
    for (size_t i = 1; i < dataset.size(); ++i) {
        if (dataset[i].timestamp < dataset[i - 1].timestamp) {
            throw DataError("temporal_split: dataset must be time-sorted");
        }
    }
    long anomalies = 0;
    for (const auto& s : dataset) anomalies += s.label.value_or(0);
    if (anomalies == 0) throw DataError("temporal_split: dataset contains no anomalies");
    const long k = static_cast<long>(std::ceil(q * static_cast<double>(anomalies)));
    long seen = 0;
    std::int64_t cutoff = dataset.back().timestamp;
    for (const auto& s : dataset) {
        seen += s.label.value_or(0);
        if (seen >= k) {
            cutoff = s.timestamp;
            break;
        }
    }
    TemporalSplit out;
    out.cutoff = cutoff;
    for (const auto& s : dataset) {
        (s.timestamp <= cutoff ? out.train : out.test).push_back(s);
    }
    return out;
}

UndersampleResult undersample(const std::vector<FeatureVector>& train, const SamplerSpec& spec) {
    if (spec.ratio <= 0.0) throw DataError("undersample: ratio must be > 0");
    std::vector<size_t> faults, good;
    for (size_t i = 0; i < train.size(); ++i) {
        (train[i].label.value_or(0) == 1 ? faults : good).push_back(i);
    }
    if (faults.empty() || good.empty()) {
        throw DataError("undersample: training set must contain both classes");
    }
    size_t want = static_cast<size_t>(std::floor(static_cast<double>(faults.size()) / spec.ratio));
    UndersampleResult out;
    if (want > good.size()) {
        want = good.size();
        out.clamped = true;
    }
    Rng rng(spec.seed);
    rng.shuffle(good);
    good.resize(want);
    std::vector<size_t> keep = faults;
    keep.insert(keep.end(), good.begin(), good.end());
    std::sort(keep.begin(), keep.end());
    out.samples.reserve(keep.size());
    for (size_t i : keep) out.samples.push_back(train[i]);
    return out;
}

// --- classifier metrics ----------------------------------------------------

TrainReport evaluate_classifier(const MlpClassifier& model,
                                const std::vector<FeatureVector>& samples,
                                const PowerCurve& curve) {
    const auto schema = FeatureSchema::standard();
    TrainReport r;
    std::vector<std::pair<double, int>> scored;  // (score, label)
    scored.reserve(samples.size());
    for (const auto& s : samples) {
        const auto x = model_inputs(model.inputs, s, schema, curve);
        const double sc = score(model, x);
        const int label = s.label.value_or(0);
        scored.emplace_back(sc, label);
        const int pred = sc > model.threshold ? 1 : 0;
        if (pred == 1 && label == 1) ++r.tp;
        else if (pred == 1 && label == 0) ++r.fp;
        else if (pred == 0 && label == 0) ++r.tn;
        else ++r.fn;
    }
    const double total = static_cast<double>(r.total());
    r.standard_accuracy = total > 0 ? (r.tp + r.tn) / total : 0.0;
    const double tpr = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / (r.tp + r.fn) : 0.0;
    const double tnr = (r.tn + r.fp) > 0 ? static_cast<double>(r.tn) / (r.tn + r.fp) : 0.0;
    r.balanced_accuracy = 0.5 * (tpr + tnr);
    // Average precision over the score ranking.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    long npos = r.tp + r.fn;
    if (npos > 0) {
        long tp_at_k = 0;
        double ap = 0.0;
        for (size_t k = 0; k < scored.size(); ++k) {
            if (scored[k].second == 1) {
                ++tp_at_k;
                ap += static_cast<double>(tp_at_k) / static_cast<double>(k + 1);
            }
        }
        r.average_precision = ap / static_cast<double>(npos);
    }
    return r;
}

std::string TrainReport::to_json() const {
    json j;
    j["standard_accuracy"] = standard_accuracy;
    j["balanced_accuracy"] = balanced_accuracy;
    j["average_precision"] = average_precision;
    j["confusion"] = {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
    return j.dump(2) + "\n";
}

// --- MLP training -----------------------------------------------------------

namespace {

struct Matrix {
    std::vector<std::vector<double>> rows;
};

struct Net {
    std::vector<MlpLayer> layers;

    // Returns activations per layer (post-activation), index 0 = input copy.
    double forward(const std::vector<double>& x, std::vector<std::vector<double>>& acts) const {
        acts.clear();
        acts.push_back(x);
        for (const auto& layer : layers) {
            std::vector<double> out(layer.out_dim());
            const auto& in = acts.back();
            for (size_t o = 0; o < layer.out_dim(); ++o) {
                double v = layer.biases[o];
                for (size_t i = 0; i < layer.in_dim(); ++i) v += layer.weights[o][i] * in[i];
                out[o] = layer.act == Activation::Relu ? std::max(0.0, v) : v;
            }
            acts.push_back(std::move(out));
        }
        return acts.back()[0];
    }
};

Net make_net(size_t in_dim, const std::vector<int>& hidden, Rng& rng) {
    Net net;
    size_t prev = in_dim;
    std::vector<size_t> dims;
    for (int h : hidden) dims.push_back(static_cast<size_t>(h));
    dims.push_back(1);
    for (size_t li = 0; li < dims.size(); ++li) {
        MlpLayer layer;
        layer.act = li + 1 == dims.size() ? Activation::Identity : Activation::Relu;
        layer.weights.assign(dims[li], std::vector<double>(prev, 0.0));
        layer.biases.assign(dims[li], 0.0);
        const double scale = std::sqrt(6.0 / static_cast<double>(prev + dims[li]));
        for (auto& row : layer.weights) {
            for (auto& w : row) w = (2.0 * rng.uniform() - 1.0) * scale;
        }
        net.layers.push_back(std::move(layer));
        prev = dims[li];
    }
    return net;
}

// One mini-batch of binary cross-entropy gradient descent.
void sgd_batch(Net& net, const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
               const std::vector<size_t>& batch, double lr) {
    std::vector<MlpLayer> grads;
    for (const auto& layer : net.layers) {
        MlpLayer g;
        g.weights.assign(layer.out_dim(), std::vector<double>(layer.in_dim(), 0.0));
        g.biases.assign(layer.out_dim(), 0.0);
        grads.push_back(std::move(g));
    }
    std::vector<std::vector<double>> acts;
    for (size_t idx : batch) {
        const double s = net.forward(xs[idx], acts);
        const double p = 1.0 / (1.0 + std::exp(-s));
        // dL/ds for BCE with logits.
        std::vector<double> delta{p - static_cast<double>(ys[idx])};
        for (size_t li = net.layers.size(); li-- > 0;) {
            const auto& layer = net.layers[li];
            const auto& in = acts[li];
            auto& g = grads[li];
            std::vector<double> prev_delta(layer.in_dim(), 0.0);
            for (size_t o = 0; o < layer.out_dim(); ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                g.biases[o] += d;
                for (size_t i = 0; i < layer.in_dim(); ++i) {
                    g.weights[o][i] += d * in[i];
                    prev_delta[i] += d * layer.weights[o][i];
                }
            }
            if (li > 0) {
                // Backprop through the previous layer's ReLU.
                for (size_t i = 0; i < prev_delta.size(); ++i) {
                    if (acts[li][i] <= 0.0) prev_delta[i] = 0.0;
                }
            }
            delta = std::move(prev_delta);
        }
    }
    const double scale = lr / static_cast<double>(batch.size());
    for (size_t li = 0; li < net.layers.size(); ++li) {
        auto& layer = net.layers[li];
        const auto& g = grads[li];
        for (size_t o = 0; o < layer.out_dim(); ++o) {
            layer.biases[o] -= scale * g.biases[o];
            for (size_t i = 0; i < layer.in_dim(); ++i) {
                layer.weights[o][i] -= scale * g.weights[o][i];
            }
        }
    }
}

double balanced_accuracy_of(const Net& net, const std::vector<std::vector<double>>& xs,
                            const std::vector<int>& ys, const std::vector<size_t>& idx) {
    long tp = 0, fp = 0, tn = 0, fn = 0;
    std::vector<std::vector<double>> acts;
    for (size_t i : idx) {
        const int pred = net.forward(xs[i], acts) > 0.0 ? 1 : 0;
        if (pred == 1 && ys[i] == 1) ++tp;
        else if (pred == 1) ++fp;
        else if (ys[i] == 0) ++tn;
        else ++fn;
    }
    const double tpr = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0;
    const double tnr = (tn + fp) > 0 ? static_cast<double>(tn) / (tn + fp) : 1.0;
    return 0.5 * (tpr + tnr);
}

// Train one net with early stopping on validation balanced accuracy.
Net fit_net(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys,
            const std::vector<size_t>& train_idx, const std::vector<size_t>& val_idx,
            const MlpTrainConfig& cfg, double lr, std::uint64_t seed) {
    Rng rng(seed);
    Net net = make_net(xs[0].size(), cfg.hidden, rng);
    Net best = net;
    double best_val = -1.0;
    int since_best = 0;
    std::vector<size_t> order = train_idx;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(), off + static_cast<size_t>(cfg.batch_size));
            std::vector<size_t> batch(order.begin() + static_cast<long>(off),
                                      order.begin() + static_cast<long>(end));
            sgd_batch(net, xs, ys, batch, lr);
        }
        const auto& eval_idx = val_idx.empty() ? train_idx : val_idx;
        const double val = balanced_accuracy_of(net, xs, ys, eval_idx);
        if (val > best_val + 1e-9) {
            best_val = val;
            best = net;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return best;
}

}  // namespace

MlpClassifier train_mlp(const std::vector<FeatureVector>& subset, const PowerCurve& curve,
                        const MlpTrainConfig& cfg) {
    if (cfg.k_folds < 2) throw DataError("train_mlp: K must be >= 2");
    if (subset.size() < static_cast<size_t>(cfg.k_folds)) {
        throw DataError("train_mlp: K exceeds the number of samples");
    }
    const auto schema = FeatureSchema::standard();
    const auto input_names = classifier_input_names(schema);

    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    xs.reserve(subset.size());
    long pos = 0;
    for (const auto& s : subset) {
        xs.push_back(model_inputs(input_names, s, schema, curve));
        const int label = s.label.value_or(0);
        ys.push_back(label);
        pos += label;
    }
    if (pos == 0 || pos == static_cast<long>(ys.size())) {
        throw DataError("train_mlp: training subset must contain both classes");
    }

    // Standardize inputs; the affine map is folded into layer 1 afterwards.
    const size_t dim = xs[0].size();
    std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
    for (const auto& x : xs) {
        for (size_t i = 0; i < dim; ++i) mu[i] += x[i];
    }
    for (size_t i = 0; i < dim; ++i) mu[i] /= static_cast<double>(xs.size());
    for (const auto& x : xs) {
        for (size_t i = 0; i < dim; ++i) sd[i] += (x[i] - mu[i]) * (x[i] - mu[i]);
    }
    for (size_t i = 0; i < dim; ++i) {
        sd[i] = std::sqrt(sd[i] / static_cast<double>(xs.size()));
        if (sd[i] < 1e-12) sd[i] = 1.0;
    }
    std::vector<std::vector<double>> zs = xs;
    for (auto& z : zs) {
        for (size_t i = 0; i < dim; ++i) z[i] = (z[i] - mu[i]) / sd[i];
    }

    // K-fold selection over the learning-rate grid on balanced accuracy.
    Rng fold_rng(cfg.seed);
    std::vector<size_t> perm(zs.size());
    std::iota(perm.begin(), perm.end(), 0);
    fold_rng.shuffle(perm);
    double best_lr = cfg.learning_rates.front();
    double best_score = -1.0;
    for (double lr : cfg.learning_rates) {
        double acc = 0.0;
        for (int fold = 0; fold < cfg.k_folds; ++fold) {
            std::vector<size_t> tr, va;
            for (size_t i = 0; i < perm.size(); ++i) {
                (static_cast<int>(i % static_cast<size_t>(cfg.k_folds)) == fold ? va : tr)
                    .push_back(perm[i]);
            }
            const Net net = fit_net(zs, ys, tr, va, cfg, lr, cfg.seed + 1000 + static_cast<std::uint64_t>(fold));
            acc += balanced_accuracy_of(net, zs, ys, va);
        }
        acc /= cfg.k_folds;
        if (acc > best_score + 1e-12) {
            best_score = acc;
            best_lr = lr;
        }
    }

    // Final fit on the full subset with a held-out early-stopping slice
    // (skipped for very small subsets, where training loss is the stop signal).
    std::vector<size_t> tr, va;
    for (size_t i = 0; i < perm.size(); ++i) {
        (perm.size() >= 14 && i % 7 == 0 ? va : tr).push_back(perm[i]);
    }
    const Net net = fit_net(zs, ys, tr, va, cfg, best_lr, cfg.seed + 7777);

    MlpClassifier model;
    model.inputs = input_names;
    model.layers = net.layers;
    // Fold standardization into the first layer: W z = W (x - mu) / sd.
    auto& first = model.layers.front();
    for (size_t o = 0; o < first.out_dim(); ++o) {
        double shift = 0.0;
        for (size_t i = 0; i < dim; ++i) {
            first.weights[o][i] /= sd[i];
            shift += first.weights[o][i] * mu[i];
        }
        first.biases[o] -= shift;
    }
    model.threshold = 0.0;
    // Margin default: a slice of the empirical score range on the subset.
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto& x : xs) {
        const double s = score(model, x);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    model.epsilon = cfg.epsilon_fraction * std::max(1e-9, hi - lo);
    model.validate();
    return model;
}

// --- gradient-boosted regression trees --------------------------------------

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Best variance-reducing split of `idx`; thresholds are midpoints between
// consecutive distinct values.
SplitChoice best_split(const std::vector<std::vector<double>>& xs, const std::vector<double>& r,
                       const std::vector<size_t>& idx, int min_leaf) {
    SplitChoice best;
    const size_t n = idx.size();
    if (n < 2 * static_cast<size_t>(min_leaf)) return best;
    const int nfeat = static_cast<int>(xs[idx[0]].size());
    double total = 0.0;
    for (size_t i : idx) total += r[i];
    std::vector<std::pair<double, double>> vals(n);  // (x_f, residual)
    for (int f = 0; f < nfeat; ++f) {
        for (size_t k = 0; k < n; ++k) vals[k] = {xs[idx[k]][static_cast<size_t>(f)], r[idx[k]]};
        std::sort(vals.begin(), vals.end());
        double left_sum = 0.0;
        for (size_t k = 0; k + 1 < n; ++k) {
            left_sum += vals[k].second;
            if (vals[k].first == vals[k + 1].first) continue;
            const size_t nl = k + 1, nr = n - nl;
            if (nl < static_cast<size_t>(min_leaf) || nr < static_cast<size_t>(min_leaf)) continue;
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                right_sum * right_sum / static_cast<double>(nr) -
                                total * total / static_cast<double>(n);
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.gain = gain;
                best.feature = f;
                best.threshold = 0.5 * (vals[k].first + vals[k + 1].first);
            }
        }
    }
    return best;
}

int grow_tree(Tree& tree, const std::vector<std::vector<double>>& xs, const std::vector<double>& r,
              std::vector<size_t>& idx, int depth, int max_depth, int min_leaf, double lr) {
    const int me = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    SplitChoice split;
    if (depth < max_depth) split = best_split(xs, r, idx, min_leaf);
    if (!split.found) {
        double mean = 0.0;
        for (size_t i : idx) mean += r[i];
        mean /= static_cast<double>(idx.empty() ? 1 : idx.size());
        tree.nodes[static_cast<size_t>(me)].leaf = true;
        tree.nodes[static_cast<size_t>(me)].value = lr * mean;
        return me;
    }
    std::vector<size_t> left_idx, right_idx;
    for (size_t i : idx) {
        (xs[i][static_cast<size_t>(split.feature)] < split.threshold ? left_idx : right_idx)
            .push_back(i);
    }
    const int l = grow_tree(tree, xs, r, left_idx, depth + 1, max_depth, min_leaf, lr);
    const int rt = grow_tree(tree, xs, r, right_idx, depth + 1, max_depth, min_leaf, lr);
    auto& node = tree.nodes[static_cast<size_t>(me)];
    node.leaf = false;
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = rt;
    return me;
}

}  // namespace

RegressorResult train_regressor(const std::vector<FeatureVector>& train, int target_feature,
                                const RegressorTrainConfig& cfg) {
    if (target_feature != F_TN && target_feature != F_TT) {
        throw DataError("train_regressor: target must be TN or TT");
    }
    if (train.empty()) throw DataError("train_regressor: empty training set");
    const auto schema = FeatureSchema::standard();
    const auto input_names = regressor_input_names(schema, target_feature);

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    xs.reserve(train.size());
    const PowerCurve curve = default_power_curve();  // regressor inputs carry no PMAX
    for (const auto& s : train) {
        xs.push_back(model_inputs(input_names, s, schema, curve));
        ys.push_back(s[target_feature]);
    }

    // Seeded holdout for the reported RMSE.
    Rng rng(cfg.seed);
    std::vector<size_t> perm(xs.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const size_t nhold = std::min(xs.size() - 1,
                                  static_cast<size_t>(cfg.holdout_fraction * static_cast<double>(xs.size())));
    std::vector<size_t> hold(perm.begin(), perm.begin() + static_cast<long>(nhold));
    std::vector<size_t> fit(perm.begin() + static_cast<long>(nhold), perm.end());
    if (fit.empty()) {
        fit = perm;
        hold.clear();
    }

    RegressorResult out;
    out.model.inputs = input_names;
    double base = 0.0;
    for (size_t i : fit) base += ys[i];
    base /= static_cast<double>(fit.size());
    out.model.base = base;

    std::vector<double> pred(xs.size(), base);
    std::vector<double> residual(xs.size(), 0.0);
    for (int m = 0; m < cfg.trees; ++m) {
        for (size_t i : fit) residual[i] = ys[i] - pred[i];
        Tree tree;
        std::vector<size_t> idx = fit;
        grow_tree(tree, xs, residual, idx, 0, cfg.max_depth, cfg.min_samples_leaf,
                  cfg.learning_rate);
        if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].value) < 1e-12) {
            if (m == 0) out.note = "constant target: single-leaf ensemble";
            break;
        }
        for (size_t i = 0; i < xs.size(); ++i) pred[i] += tree.predict(xs[i]);
        out.model.trees.push_back(std::move(tree));
    }

    if (!hold.empty()) {
        double sse = 0.0;
        for (size_t i : hold) {
            const double e = ys[i] - predict(out.model, xs[i]);
            sse += e * e;
        }
        out.holdout_rmse = std::sqrt(sse / static_cast<double>(hold.size()));
    }
    out.model.validate();
    return out;
}

TrainedBundle run_training(const std::vector<FeatureVector>& dataset,
                           const PipelineOptions& opts) {
    TrainedBundle out;
    const TemporalSplit split = temporal_split(dataset, opts.q);
    out.cutoff = split.cutoff;

    SamplerSpec sampler;
    sampler.ratio = opts.ratio;
    sampler.seed = opts.seed;
    const UndersampleResult sub = undersample(split.train, sampler);
    if (sub.clamped) out.notes += "undersample clamped to the available good samples; ";

    MlpTrainConfig mlp_cfg;
    mlp_cfg.k_folds = opts.k;
    mlp_cfg.seed = opts.seed;
    out.classifier = train_mlp(sub.samples, opts.curve, mlp_cfg);
    out.report = evaluate_classifier(out.classifier, split.test, opts.curve);

    // Surrogates learn the controller's normal behavior: good samples only.
    std::vector<FeatureVector> good_train;
    for (const auto& s : split.train) {
        if (s.label.value_or(0) == 0) good_train.push_back(s);
    }
    RegressorTrainConfig reg_cfg;
    reg_cfg.trees = opts.trees;
    reg_cfg.max_depth = opts.depth;
    reg_cfg.seed = opts.seed;
    const RegressorResult n_res = train_regressor(good_train, F_TN, reg_cfg);
    const RegressorResult t_res = train_regressor(good_train, F_TT, reg_cfg);
    out.n = n_res.model;
    out.t = t_res.model;
    out.n_rmse = n_res.holdout_rmse;
    out.t_rmse = t_res.holdout_rmse;
    if (!n_res.note.empty()) out.notes += "n: " + n_res.note + "; ";
    if (!t_res.note.empty()) out.notes += "t: " + t_res.note + "; ";

    out.assets.schema = FeatureSchema::standard();
    out.assets.bounds = compute_bounds(dataset);
    out.assets.scales = compute_scales(opts.scales_on_train ? split.train : dataset);
    out.assets.curve = opts.curve;
    return out;
}

} // namespace windcf
