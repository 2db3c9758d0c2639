#pragma once

#include "stochdp/rational.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stochdp {

using NodeId = std::size_t;

struct Node {
    NodeId id = 0;
    std::size_t stage = 0;
    std::optional<NodeId> parent;     // absent for the root
    Rat cond_prob = 1;                // conditional probability given the parent
    std::vector<NodeId> children;     // filled by validation
    Rat abs_prob = 1;                 // product of conditional probs along the path
};

// Finite scenario tree: stage-t nodes are the atoms of F_t. Immutable once
// validated; downstream code treats it as read-only.
class ScenarioTree {
public:
    // Throws TreeError on any invariant violation; computes children lists
    // and absolute probabilities.
    static ScenarioTree build(std::size_t horizon, std::vector<Node> nodes);

    std::size_t horizon() const { return horizon_; }
    std::size_t node_count() const { return nodes_.size(); }
    const Node& node(NodeId id) const;
    NodeId root() const { return root_; }
    const std::vector<NodeId>& stage_nodes(std::size_t t) const { return by_stage_[t]; }
    const std::vector<NodeId>& leaves() const { return by_stage_[horizon_]; }

    // Node ids along the path root -> id, inclusive.
    std::vector<NodeId> path(NodeId id) const;

private:
    std::size_t horizon_ = 0;
    NodeId root_ = 0;
    std::vector<Node> nodes_;                  // indexed by id
    std::vector<std::vector<NodeId>> by_stage_;
};

struct TreeError : std::runtime_error {
    std::string kind;  // NonUnitProbability | OrphanNode | StageGap | ...
    NodeId node;
    TreeError(std::string k, NodeId n, const std::string& msg)
        : std::runtime_error(msg), kind(std::move(k)), node(n) {}
};

// Adapted decision process: one vector per node, stage-indexed storage.
struct Policy {
    std::map<NodeId, Vec> values;

    const Vec& at(NodeId id) const {
        auto it = values.find(id);
        if (it == values.end()) throw std::out_of_range("Policy: no value for node");
        return it->second;
    }
};

// E_s X node-wise: probability-weighted average of leaf values over the
// descendant leaves of each stage-s node. Throws TreeError(MissingValue) if
// a leaf value is absent.
std::map<NodeId, Rat> cond_exp_scalars(const ScenarioTree& tree, std::size_t stage,
                                       const std::map<NodeId, Rat>& leaf_values);

// Variable layout for the space of adapted processes: one block per node per
// stage. Shared by the solvers and the brute-force oracle.
struct AdaptedLayout {
    std::vector<std::size_t> stage_dims;
    std::map<std::pair<std::size_t, NodeId>, std::size_t> offset;
    std::size_t total = 0;

    AdaptedLayout(const ScenarioTree& tree, std::vector<std::size_t> dims);
    // Index map sending full-x coordinates to layout coordinates along the
    // path of `leaf`.
    std::vector<std::size_t> leaf_map(const ScenarioTree& tree, NodeId leaf) const;
    Policy unpack(const ScenarioTree& tree, const Vec& w) const;
};

}  // namespace stochdp
