#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "abcrf/csv.hpp"
#include "abcrf/forest.hpp"

namespace abcrf {

inline const char* bootstrap_name(Bootstrap b) {
    switch (b) {
    case Bootstrap::stratified: return "stratified";
    case Bootstrap::plain: return "plain";
    case Bootstrap::none: return "none";
    }
    throw std::logic_error("bootstrap_name: unknown mode");
}

inline Bootstrap bootstrap_from_name(const std::string& name) {
    if (name == "stratified") return Bootstrap::stratified;
    if (name == "plain") return Bootstrap::plain;
    if (name == "none") return Bootstrap::none;
    throw std::invalid_argument("unknown bootstrap mode '" + name + "'");
}

/// Versioned forest file: header with dimensions and hyperparameters,
/// then one preorder node list per tree (parallel arrays; feature -1 marks
/// a leaf). Self-describing, so stage 2 can run in a separate process.
inline void save_forest(const Forest& forest, const std::string& path) {
    nlohmann::json j;
    j["format"] = "abcrf-forest";
    j["version"] = 1;
    j["p"] = forest.p;
    j["hyperparams"] = {{"n_trees", forest.params.n_trees},
                        {"mtry", forest.params.mtry},
                        {"min_node_size", forest.params.min_node_size},
                        {"max_depth", forest.params.max_depth},
                        {"bootstrap", bootstrap_name(forest.params.bootstrap)}};
    j["feature_names"] = forest.feature_names;
    j["feature_scales"] = forest.feature_scales;
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json t;
        auto& feature = t["feature"] = nlohmann::json::array();
        auto& threshold = t["threshold"] = nlohmann::json::array();
        auto& left = t["left"] = nlohmann::json::array();
        auto& right = t["right"] = nlohmann::json::array();
        auto& value = t["value"] = nlohmann::json::array();
        for (const auto& node : tree.nodes) {
            feature.push_back(node.feature);
            threshold.push_back(node.threshold);
            left.push_back(node.left);
            right.push_back(node.right);
            value.push_back(node.value);
        }
        trees.push_back(std::move(t));
    }
    auto out = open_output(path);
    out << j.dump() << '\n';
}

inline Forest load_forest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open forest file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": not a valid forest file: " + e.what());
    }
    if (j.value("format", "") != "abcrf-forest")
        throw std::runtime_error(path + ": not an abcrf forest file");
    if (j.value("version", 0) != 1)
        throw std::runtime_error(path + ": unsupported forest file version");

    Forest forest;
    forest.p = j.at("p").get<std::size_t>();
    const auto& hp = j.at("hyperparams");
    forest.params.n_trees = hp.at("n_trees").get<int>();
    forest.params.mtry = hp.at("mtry").get<int>();
    forest.params.min_node_size = hp.at("min_node_size").get<int>();
    forest.params.max_depth = hp.at("max_depth").get<int>();
    forest.params.bootstrap = bootstrap_from_name(hp.at("bootstrap").get<std::string>());
    forest.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    forest.feature_scales = j.at("feature_scales").get<std::vector<std::string>>();

    for (const auto& t : j.at("trees")) {
        Tree tree;
        const auto& feature = t.at("feature");
        const auto& threshold = t.at("threshold");
        const auto& left = t.at("left");
        const auto& right = t.at("right");
        const auto& value = t.at("value");
        const std::size_t n = feature.size();
        if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
            throw std::runtime_error(path + ": inconsistent tree arrays");
        for (std::size_t k = 0; k < n; ++k) {
            TreeNode node;
            node.feature = feature[k].get<int>();
            node.threshold = threshold[k].get<double>();
            node.left = left[k].get<int>();
            node.right = right[k].get<int>();
            node.value = value[k].get<double>();
            if (!node.is_leaf() &&
                (node.left < 0 || node.right < 0 || node.left >= static_cast<int>(n) ||
                 node.right >= static_cast<int>(n)))
                throw std::runtime_error(path + ": internal node with missing child");
            tree.nodes.push_back(node);
        }
        if (tree.nodes.empty()) throw std::runtime_error(path + ": empty tree");
        forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.empty()) throw std::runtime_error(path + ": forest has no trees");
    return forest;
}

} // namespace abcrf
