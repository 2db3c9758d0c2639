#include "stochdp/json_io.hpp"

#include <fstream>

using nlohmann::json;

namespace stochdp {

namespace {

[[noreturn]] void bad(const std::string& what) { throw SchemaError(what); }

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad(std::string("missing field '") + key + "'");
    return *it;
}

Vec vec_from(const json& j) {
    if (!j.is_array()) bad("expected an array of rationals");
    Vec v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(rat_from_json(x));
    return v;
}

std::vector<std::size_t> dims_from(const json& j) {
    if (!j.is_array()) bad("expected an array of dimensions");
    std::vector<std::size_t> d;
    for (const auto& x : j) {
        if (!x.is_number_unsigned()) bad("dimensions must be nonnegative integers");
        d.push_back(x.get<std::size_t>());
    }
    return d;
}

NodeId node_from(const json& j) {
    if (!j.is_number_unsigned()) bad("node ids must be nonnegative integers");
    return j.get<NodeId>();
}

Polyhedron poly_from(const json& j) {
    if (!j.is_object()) bad("expected a polyhedron object");
    if (!field(j, "dim").is_number_unsigned()) bad("polyhedron dim must be an integer");
    Polyhedron p(field(j, "dim").get<std::size_t>());
    auto rows = [&](const char* key, bool eq) {
        auto it = j.find(key);
        if (it == j.end()) return;
        if (!it->is_array()) bad(std::string(key) + " must be an array");
        for (const auto& r : *it) {
            Vec a = vec_from(field(r, "a"));
            Rat rhs = rat_from_json(field(r, "rhs"));
            try {
                if (eq)
                    p.add_eq(std::move(a), std::move(rhs));
                else
                    p.add_ineq(std::move(a), std::move(rhs));
            } catch (const std::invalid_argument& e) {
                bad(e.what());
            }
        }
    };
    rows("ineqs", false);
    rows("eqs", true);
    return p;
}

PolyFunc func_from(const json& j) {
    try {
        return PolyFunc::from_epigraph(poly_from(field(j, "epigraph")));
    } catch (const ImproperInput& e) {
        bad(e.what());
    } catch (const UnboundedBelow&) {
        bad("epigraph contains a downward vertical line");
    }
}

ScenarioTree tree_from(const json& j) {
    if (!field(j, "horizon").is_number_unsigned()) bad("horizon must be an integer");
    std::size_t horizon = field(j, "horizon").get<std::size_t>();
    const json& jn = field(j, "nodes");
    if (!jn.is_array()) bad("nodes must be an array");
    std::vector<Node> nodes;
    for (const auto& n : jn) {
        Node node;
        node.id = node_from(field(n, "id"));
        node.stage = field(n, "stage").get<std::size_t>();
        if (n.contains("parent") && !n["parent"].is_null())
            node.parent = node_from(n["parent"]);
        node.cond_prob = rat_from_json(field(n, "prob"));
        nodes.push_back(std::move(node));
    }
    try {
        return ScenarioTree::build(horizon, std::move(nodes));
    } catch (const TreeError& e) {
        bad(std::string("tree: ") + e.what());
    }
}

// Node-keyed list [{"node": id, key: value}, ...]
template <class F>
void per_node(const json& j, const char* key, F&& put) {
    if (!j.is_array()) bad("expected a node-keyed array");
    for (const auto& e : j) put(node_from(field(e, "node")), field(e, key), e);
}

void parse_integrand(const json& m, IntegrandSpec& spec) {
    spec.stage_dims = dims_from(field(m, "stage_dims"));
    per_node(field(m, "leaves"), "epigraph", [&](NodeId id, const json&, const json& e) {
        spec.leaf_functions.emplace(id, func_from(e));
        if (e.contains("lower_bound"))
            spec.lower_bounds.emplace(id, rat_from_json(e["lower_bound"]));
    });
}

void parse_markets(const json& m, Instance& inst) {
    if (!field(m, "assets").is_number_unsigned()) bad("assets must be an integer");
    std::size_t d = field(m, "assets").get<std::size_t>();
    if (inst.model == "cone_market") {
        inst.cone.tree = inst.tree;
        inst.cone.d = d;
        per_node(field(m, "cones"), "C", [&](NodeId id, const json&, const json& e) {
            inst.cone.C.emplace(id, poly_from(field(e, "C")));
            inst.cone.D.emplace(id, poly_from(field(e, "D")));
        });
        if (m.contains("utilities"))
            per_node(m["utilities"], "epigraph", [&](NodeId id, const json&, const json& e) {
                inst.util.neg_u.emplace(id, func_from(e));
                if (e.contains("upper_bound"))
                    inst.util.upper_bound.emplace(id, rat_from_json(e["upper_bound"]));
            });
        if (m.contains("endowment"))
            per_node(m["endowment"], "u", [&](NodeId id, const json& u, const json&) {
                inst.endowment.emplace(id, vec_from(u));
            });
        if (m.contains("grid"))
            for (const auto& g : m["grid"]) inst.grid.push_back(vec_from(g));
        try {
            validate_cone_market(inst.cone);
        } catch (const std::invalid_argument& e) {
            bad(e.what());
        }
        return;
    }
    std::map<NodeId, Vec>* prices =
        inst.model == "hedge" ? &inst.hedge.prices : &inst.liquid.prices;
    per_node(field(m, "prices"), "s", [&](NodeId id, const json& s, const json&) {
        Vec v = vec_from(s);
        if (v.size() != d) bad("price vector has the wrong number of assets");
        prices->emplace(id, std::move(v));
    });
    std::map<NodeId, Rat>* claim = inst.model == "hedge" ? &inst.hedge.claim : &inst.claim;
    if (m.contains("claim"))
        per_node(m["claim"], "value", [&](NodeId id, const json& v, const json&) {
            claim->emplace(id, rat_from_json(v));
        });
    if (inst.model == "hedge") {
        inst.hedge.tree = inst.tree;
        inst.hedge.d = d;
        for (NodeId l : inst.tree.leaves())
            if (!inst.hedge.claim.count(l)) bad("hedge claim missing a leaf");
    } else {
        inst.liquid.tree = inst.tree;
        inst.liquid.d = d;
        for (NodeId l : inst.tree.leaves())
            if (!inst.claim.count(l)) inst.claim.emplace(l, Rat(0));
    }
    for (NodeId v = 0; v < inst.tree.node_count(); ++v)
        if (!prices->count(v)) bad("prices missing a node");
}

}  // namespace

Rat rat_from_json(const json& j) {
    if (j.is_number_integer()) return Rat(j.get<long>());
    if (j.is_string()) {
        try {
            return parse_rat(j.get<std::string>());
        } catch (const std::invalid_argument& e) {
            bad(e.what());
        }
    }
    bad("rationals must be integers or 'p/q' strings");
}

Instance parse_instance(const json& doc) {
    if (!doc.is_object()) bad("instance must be a JSON object");
    const json& schema = field(doc, "schema");
    if (!schema.is_number_integer() || schema.get<int>() != 1)
        bad("unsupported schema version");
    Instance inst;
    inst.tree = tree_from(field(doc, "tree"));
    const json& m = field(doc, "model");
    const json& type = field(m, "type");
    if (!type.is_string()) bad("model type must be a string");
    inst.model = type.get<std::string>();

    if (inst.model == "integrand") {
        parse_integrand(m, inst.integrand);
    } else if (inst.model == "bellman") {
        inst.bellman.initial_state = vec_from(field(m, "initial_state"));
        inst.bellman.stage_dims = dims_from(field(m, "stage_dims"));
        per_node(field(m, "costs"), "epigraph", [&](NodeId id, const json&, const json& e) {
            inst.bellman.stage_costs.emplace(id, func_from(e));
            if (e.contains("lower_bound"))
                inst.bellman.lower_bounds.emplace(id, rat_from_json(e["lower_bound"]));
        });
    } else if (inst.model == "liquid_market" || inst.model == "cone_market" ||
               inst.model == "hedge") {
        parse_markets(m, inst);
    } else {
        bad("unknown model type '" + inst.model + "'");
    }
    return inst;
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open instance file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
    return parse_instance(doc);
}

json json_rat(const Rat& q) { return rat_str(q); }

json json_value(const Rat& q) {
    return json{{"rat", rat_str(q)}, {"decimal", rat_decimal(q)}};
}

json json_vec(const Vec& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(rat_str(x));
    return a;
}

json json_policy(const Policy& p) {
    json o = json::object();
    for (const auto& [id, v] : p.values) o[std::to_string(id)] = json_vec(v);
    return o;
}

json json_basis(const std::vector<Vec>& basis) {
    json a = json::array();
    for (const auto& v : basis) a.push_back(json_vec(v));
    return a;
}

}  // namespace stochdp
