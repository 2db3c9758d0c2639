#include "stochdp/tree.hpp"

#include <algorithm>

namespace stochdp {

ScenarioTree ScenarioTree::build(std::size_t horizon, std::vector<Node> nodes) {
    ScenarioTree t;
    t.horizon_ = horizon;
    t.by_stage_.assign(horizon + 1, {});

    // Ids must be unique and dense 0..n-1 (file loader remaps arbitrary ids).
    std::vector<Node> byid(nodes.size());
    std::vector<bool> seen(nodes.size(), false);
    for (auto& n : nodes) {
        if (n.id >= nodes.size() || seen[n.id])
            throw TreeError("DuplicateNode", n.id, "node id duplicated or out of range");
        seen[n.id] = true;
        byid[n.id] = std::move(n);
    }
    t.nodes_ = std::move(byid);

    bool have_root = false;
    for (auto& n : t.nodes_) {
        if (n.stage > horizon)
            throw TreeError("StageGap", n.id, "node stage exceeds horizon");
        if (!n.parent) {
            if (n.stage != 0)
                throw TreeError("OrphanNode", n.id, "non-root node without parent");
            if (have_root) throw TreeError("OrphanNode", n.id, "second root node");
            have_root = true;
            t.root_ = n.id;
        } else {
            if (*n.parent >= t.nodes_.size())
                throw TreeError("OrphanNode", n.id, "parent id unknown");
            const Node& p = t.nodes_[*n.parent];
            if (p.stage + 1 != n.stage)
                throw TreeError("StageGap", n.id, "parent is not at the previous stage");
            if (n.cond_prob <= 0)
                throw TreeError("NonUnitProbability", n.id,
                                "conditional probability must be strictly positive");
            t.nodes_[*n.parent].children.push_back(n.id);
        }
        t.by_stage_[n.stage].push_back(n.id);
    }
    if (!have_root) throw TreeError("OrphanNode", 0, "no root node");

    for (auto& stage : t.by_stage_)
        std::sort(stage.begin(), stage.end());

    // Child probabilities sum to one; leaves are exactly the stage-T nodes.
    for (const auto& n : t.nodes_) {
        if (n.stage < horizon) {
            if (n.children.empty())
                throw TreeError("StageGap", n.id, "interior node without children");
            Rat s = 0;
            for (auto c : n.children) s += t.nodes_[c].cond_prob;
            if (s != 1)
                throw TreeError("NonUnitProbability", n.id,
                                "child probabilities sum to " + rat_str(s));
        } else if (!n.children.empty()) {
            throw TreeError("StageGap", n.id, "stage-T node with children");
        }
    }

    // Absolute probabilities by a top-down pass.
    t.nodes_[t.root_].abs_prob = 1;
    for (std::size_t s = 0; s < horizon; ++s)
        for (auto id : t.by_stage_[s])
            for (auto c : t.nodes_[id].children)
                t.nodes_[c].abs_prob = t.nodes_[id].abs_prob * t.nodes_[c].cond_prob;
    return t;
}

const Node& ScenarioTree::node(NodeId id) const {
    if (id >= nodes_.size()) throw std::out_of_range("ScenarioTree::node");
    return nodes_[id];
}

std::vector<NodeId> ScenarioTree::path(NodeId id) const {
    std::vector<NodeId> p;
    for (std::optional<NodeId> cur = id; cur; cur = node(*cur).parent) p.push_back(*cur);
    std::reverse(p.begin(), p.end());
    return p;
}

std::map<NodeId, Rat> cond_exp_scalars(const ScenarioTree& tree, std::size_t stage,
                                       const std::map<NodeId, Rat>& leaf_values) {
    for (auto leaf : tree.leaves())
        if (!leaf_values.count(leaf))
            throw TreeError("MissingValue", leaf, "no value for leaf");
    // Bottom-up conditional averaging down to the requested stage.
    std::map<NodeId, Rat> cur;
    for (auto leaf : tree.leaves()) cur[leaf] = leaf_values.at(leaf);
    for (std::size_t s = tree.horizon(); s-- > stage;) {
        std::map<NodeId, Rat> up;
        for (auto id : tree.stage_nodes(s)) {
            Rat v = 0;
            for (auto c : tree.node(id).children) v += tree.node(c).cond_prob * cur.at(c);
            up[id] = v;
        }
        cur = std::move(up);
    }
    return cur;
}

}  // namespace stochdp

namespace stochdp {

AdaptedLayout::AdaptedLayout(const ScenarioTree& tree, std::vector<std::size_t> dims)
    : stage_dims(std::move(dims)) {
    for (std::size_t t = 0; t < stage_dims.size(); ++t)
        for (NodeId v : tree.stage_nodes(t)) {
            offset[{t, v}] = total;
            total += stage_dims[t];
        }
}

std::vector<std::size_t> AdaptedLayout::leaf_map(const ScenarioTree& tree, NodeId leaf) const {
    std::vector<std::size_t> m;
    auto p = tree.path(leaf);
    for (std::size_t t = 0; t < stage_dims.size(); ++t) {
        std::size_t base = offset.at({t, p[t]});
        for (std::size_t j = 0; j < stage_dims[t]; ++j) m.push_back(base + j);
    }
    return m;
}

Policy AdaptedLayout::unpack(const ScenarioTree& tree, const Vec& w) const {
    Policy pol;
    for (std::size_t t = 0; t < stage_dims.size(); ++t)
        for (NodeId v : tree.stage_nodes(t)) {
            std::size_t base = offset.at({t, v});
            pol.values[v] = Vec(w.begin() + static_cast<long>(base),
                                w.begin() + static_cast<long>(base + stage_dims[t]));
        }
    return pol;
}

}  // namespace stochdp
