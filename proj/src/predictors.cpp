#include "windcf/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "windcf/errors.hpp"

namespace windcf {

using nlohmann::json;

void MlpClassifier::validate() const {
    if (layers.empty()) throw DataError("mlp: no layers");
    for (size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.weights.size() != layer.out_dim()) {
            throw DataError("mlp: weight/bias row mismatch");
        }
        for (const auto& row : layer.weights) {
            if (row.size() != layer.in_dim()) throw DataError("mlp: ragged weight matrix");
        }
        if (l > 0 && layer.in_dim() != layers[l - 1].out_dim()) {
            throw DataError("mlp: consecutive layer dimensions do not match");
        }
        if (l + 1 < layers.size() && layer.act != Activation::Relu) {
            throw DataError("mlp: hidden layers must be ReLU");
        }
    }
    if (layers.back().out_dim() != 1 || layers.back().act != Activation::Identity) {
        throw DataError("mlp: last layer must be a 1-output identity (score) layer");
    }
    if (!inputs.empty() && inputs.size() != in_dim()) {
        throw DataError("mlp: input name count does not match first layer width");
    }
}

double score(const MlpClassifier& model, std::span<const double> x) {
    if (x.size() != model.in_dim()) {
        throw DataError("mlp: input has " + std::to_string(x.size()) + " values, expected " +
                        std::to_string(model.in_dim()));
    }
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    for (const auto& layer : model.layers) {
        next.assign(layer.out_dim(), 0.0);
        for (size_t o = 0; o < layer.out_dim(); ++o) {
            double v = layer.biases[o];
            const auto& row = layer.weights[o];
            for (size_t i = 0; i < row.size(); ++i) v += row[i] * cur[i];
            if (layer.act == Activation::Relu) v = std::max(0.0, v);
            next[o] = v;
        }
        cur.swap(next);
    }
    return cur[0];
}

int classify(const MlpClassifier& model, std::span<const double> x) {
    return score(model, x) > model.threshold ? 1 : 0;
}

double Tree::predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<size_t>(i)].leaf) {
        const TreeNode& n = nodes[static_cast<size_t>(i)];
        i = x[static_cast<size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<size_t>(i)].value;
}

void Tree::validate(size_t in_dim) const {
    if (nodes.empty()) throw DataError("tree: empty");
    for (const auto& n : nodes) {
        if (n.leaf) continue;
        if (n.feature < 0 || static_cast<size_t>(n.feature) >= in_dim) {
            throw DataError("tree: split feature out of range");
        }
        if (n.left < 0 || n.right < 0 || static_cast<size_t>(n.left) >= nodes.size() ||
            static_cast<size_t>(n.right) >= nodes.size()) {
            throw DataError("tree: bad child index");
        }
    }
}

int Tree::leaf_count() const {
    int c = 0;
    for (const auto& n : nodes) c += n.leaf ? 1 : 0;
    return c;
}

void TreeEnsembleRegressor::validate() const {
    if (inputs.empty()) throw DataError("tree_ensemble: missing input names");
    for (const auto& t : trees) t.validate(inputs.size());
}

double predict(const TreeEnsembleRegressor& model, std::span<const double> x) {
    if (x.size() != model.inputs.size()) {
        throw DataError("tree_ensemble: input has " + std::to_string(x.size()) +
                        " values, expected " + std::to_string(model.inputs.size()));
    }
    double out = model.base;
    for (const auto& t : model.trees) out += t.predict(x);
    return out;
}

std::vector<double> model_inputs(const std::vector<std::string>& input_names,
                                 const FeatureVector& fv, const FeatureSchema& schema,
                                 const PowerCurve& curve) {
    std::vector<double> x;
    x.reserve(input_names.size());
    for (const auto& name : input_names) {
        if (name == "PMAX") {
            x.push_back(curve.p_max(fv[F_WS]));
        } else {
            x.push_back(fv[schema.index_of(name)]);
        }
    }
    return x;
}

std::vector<std::string> classifier_input_names(const FeatureSchema& schema) {
    std::vector<std::string> names = schema.names;
    names.push_back("PMAX");
    return names;
}

std::vector<std::string> regressor_input_names(const FeatureSchema& schema, int target_feature) {
    const int other_temp = target_feature == F_TN ? F_TT : F_TN;
    std::vector<std::string> names = {schema.names[F_TA], schema.names[F_P],
                                      schema.names[static_cast<size_t>(other_temp)],
                                      schema.names[F_WS]};
    for (int f : {F_YEAR, F_MONTH, F_DAY, F_HOUR, F_MINUTE}) {
        names.push_back(schema.names[static_cast<size_t>(f)]);
    }
    return names;
}

// --- JSON -----------------------------------------------------------------

static std::string act_name(Activation a) { return a == Activation::Relu ? "relu" : "id"; }

static Activation act_from_name(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "id") return Activation::Identity;
    throw DataError("mlp: unknown activation '" + s + "'");
}

std::string MlpClassifier::to_json() const {
    json j;
    j["type"] = "mlp";
    j["inputs"] = inputs;
    json jl = json::array();
    for (const auto& layer : layers) {
        jl.push_back({{"w", layer.weights}, {"b", layer.biases}, {"act", act_name(layer.act)}});
    }
    j["layers"] = jl;
    j["threshold"] = threshold;
    j["epsilon"] = epsilon;
    return j.dump(2) + "\n";
}

MlpClassifier MlpClassifier::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("type").get<std::string>() != "mlp") throw DataError("model is not an mlp");
        MlpClassifier m;
        if (j.contains("inputs")) m.inputs = j.at("inputs").get<std::vector<std::string>>();
        for (const auto& jl : j.at("layers")) {
            MlpLayer layer;
            layer.weights = jl.at("w").get<std::vector<std::vector<double>>>();
            layer.biases = jl.at("b").get<std::vector<double>>();
            layer.act = act_from_name(jl.at("act").get<std::string>());
            m.layers.push_back(std::move(layer));
        }
        m.threshold = j.at("threshold").get<double>();
        m.epsilon = j.at("epsilon").get<double>();
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad mlp JSON: ") + e.what());
    }
}

MlpClassifier MlpClassifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void MlpClassifier::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << to_json();
}

std::string TreeEnsembleRegressor::to_json() const {
    json j;
    j["type"] = "tree_ensemble";
    j["inputs"] = inputs;
    j["base"] = base;
    json jt = json::array();
    for (const auto& tree : trees) {
        json nodes = json::array();
        for (const auto& n : tree.nodes) {
            if (n.leaf) {
                nodes.push_back({{"v", n.value}});
            } else {
                nodes.push_back({{"f", n.feature}, {"thr", n.threshold}, {"l", n.left}, {"r", n.right}});
            }
        }
        jt.push_back({{"nodes", nodes}});
    }
    j["trees"] = jt;
    return j.dump(2) + "\n";
}

TreeEnsembleRegressor TreeEnsembleRegressor::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("type").get<std::string>() != "tree_ensemble") {
            throw DataError("model is not a tree_ensemble");
        }
        TreeEnsembleRegressor m;
        m.inputs = j.at("inputs").get<std::vector<std::string>>();
        m.base = j.at("base").get<double>();
        for (const auto& jt : j.at("trees")) {
            Tree tree;
            for (const auto& jn : jt.at("nodes")) {
                TreeNode n;
                if (jn.contains("v")) {
                    n.leaf = true;
                    n.value = jn.at("v").get<double>();
                } else {
                    n.feature = jn.at("f").get<int>();
                    n.threshold = jn.at("thr").get<double>();
                    n.left = jn.at("l").get<int>();
                    n.right = jn.at("r").get<int>();
                }
                tree.nodes.push_back(n);
            }
            m.trees.push_back(std::move(tree));
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad tree_ensemble JSON: ") + e.what());
    }
}

TreeEnsembleRegressor TreeEnsembleRegressor::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void TreeEnsembleRegressor::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << to_json();
}

} // namespace windcf
