#include "stochdp/json_io.hpp"
#include "stochdp/oracle.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

using nlohmann::json;
using namespace stochdp;

namespace {

struct Options {
    std::string instance;
    std::string out;
    std::string check_level = "fast";
    std::string dual_index = "derivation";
    bool full() const { return check_level == "full"; }
    DualIndexing indexing() const {
        return dual_index == "displayed" ? DualIndexing::Displayed : DualIndexing::Derivation;
    }
};

void require_model(const Instance& inst, const std::string& want) {
    if (inst.model != want)
        throw SchemaError("this command needs a '" + want + "' model, got '" + inst.model + "'");
}

json cones_json(const ScenarioTree& tree, const NodeFunctionTable& table) {
    json o = json::object();
    for (std::size_t t = 0; t < table.lineality.size(); ++t)
        for (const auto& [id, basis] : table.lineality[t])
            o[std::to_string(id)] = json{{"stage", t}, {"lineality", json_basis(basis)}};
    return o;
}

// Shared path for every command that minimizes an integrand over the tree.
int run_integrand(const ScenarioTree& tree, const IntegrandSpec& spec, const Options& opt,
                  json& res) {
    NodeFunctionTable table = backward_pass(tree, spec);
    ForwardResult r = forward_policy(tree, table);
    res["cones"] = cones_json(tree, table);
    if (!r.value) {
        res["status"] = "infeasible";
        return 3;
    }
    res["status"] = "ok";
    res["value"] = json_value(*r.value);
    res["policy"] = json_policy(r.policy);
    if (opt.full()) {
        OptimalityReport v = verify_optimality(tree, table, r.policy);
        json stages = json::array();
        for (const auto& e : v.stage_expectations) stages.push_back(json_rat(e));
        res["checks"]["optimality"] = {{"ok", v.ok},
                                       {"violation", v.violation},
                                       {"stage_expectations", stages}};
        CommutationReport c = recession_commutation_check(tree, spec);
        res["checks"]["recession_commutation"] = {{"ok", c.ok}, {"nodes_checked", c.checked}};
        if (!v.ok || !c.ok) throw std::logic_error("full verification failed on a solved instance");
    }
    return 0;
}

int cmd_solve(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "integrand");
    return run_integrand(inst.tree, inst.integrand, opt, res);
}

int cmd_bellman(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "bellman");
    BellmanResult r = bellman_pass(inst.tree, inst.bellman);
    if (!r.value) {
        res["status"] = "infeasible";
        return 3;
    }
    res["status"] = "ok";
    res["value"] = json_value(*r.value);
    res["policy"] = json_policy(r.policy);
    if (opt.full()) {
        IntegrandSpec flat = bellman_to_integrand(inst.tree, inst.bellman);
        ForwardResult h = forward_policy(inst.tree, backward_pass(inst.tree, flat));
        bool match = h.value && *h.value == *r.value;
        res["checks"]["history_formulation"] = {{"ok", match}};
        if (!match) throw std::logic_error("bellman value disagrees with the history formulation");
    }
    return 0;
}

int cmd_check_linearity(const Instance& inst, const Options&, json& res) {
    IntegrandSpec spec;
    const ScenarioTree* tree = &inst.tree;
    if (inst.model == "integrand") {
        spec = inst.integrand;
    } else if (inst.model == "liquid_market") {
        spec = build_superhedge_feasibility(inst.liquid, inst.claim);
    } else {
        throw SchemaError("check-linearity needs an 'integrand' or 'liquid_market' model");
    }
    LinearityReport rep = check_linearity_L(*tree, spec);
    res["status"] = rep.is_linear ? "ok" : "linearity_violated";
    res["linearity"] = {{"is_linear", rep.is_linear},
                        {"nodewise_verdict", rep.nodewise_verdict},
                        {"direct_verdict", rep.direct_verdict}};
    if (!rep.is_linear) {
        if (rep.node) res["linearity"]["node"] = *rep.node;
        res["linearity"]["stage"] = rep.stage;
        res["witness"] = json_policy(rep.witness);
        return 2;
    }
    return 0;
}

int cmd_no_arbitrage(const Instance& inst, const Options&, json& res) {
    require_model(inst, "liquid_market");
    NoArbitrageReport rep = no_arbitrage_check(inst.liquid);
    res["status"] = rep.holds ? "ok" : "linearity_violated";
    res["no_arbitrage"] = {{"holds", rep.holds}};
    if (!rep.holds) {
        res["witness"] = json_policy(rep.witness);
        return 2;
    }
    return 0;
}

int cmd_superhedge(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "liquid_market");
    return run_integrand(inst.tree, build_superhedge(inst.liquid, inst.claim), opt, res);
}

int cmd_varhedge(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "hedge");
    VarianceHedgeResult r = variance_hedge_solve(inst.hedge);
    res["status"] = "ok";
    res["value"] = json_value(r.value);
    res["initial_capital"] = json_rat(r.v0);
    res["policy"] = json_policy(r.z);
    json nb = json::object();
    for (const auto& [id, basis] : r.null_bases) nb[std::to_string(id)] = json_basis(basis);
    res["null_bases"] = nb;
    if (opt.full()) {
        LeastSquaresSolution ls = least_squares_oracle(inst.hedge);
        bool match = ls.value == r.value && ls.v0 == r.v0;
        res["checks"]["least_squares_oracle"] = {{"ok", match}};
        if (!match) throw std::logic_error("variance hedge disagrees with the oracle");
    }
    return 0;
}

int cmd_consume(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "cone_market");
    return run_integrand(inst.tree, build_consumption(inst.cone, inst.util, inst.endowment),
                         opt, res);
}

json dual_json(const DualSolveResult& d) {
    json o{{"feasible", d.feasible}, {"unbounded", d.unbounded}};
    if (d.value) o["value"] = json_value(*d.value);
    if (d.feasible && !d.unbounded) {
        json y = json::object();
        for (const auto& [id, v] : d.y.y) y[std::to_string(id)] = json_vec(v);
        o["y"] = y;
    }
    return o;
}

int cmd_dual(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "cone_market");
    DualSolveResult d = build_consumption_dual(inst.cone, inst.util, inst.endowment,
                                               opt.indexing());
    res["status"] = d.feasible ? "ok" : "infeasible";
    res["dual"] = dual_json(d);
    return d.feasible ? 0 : 3;
}

int cmd_duality_gap(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "cone_market");
    OcpConditionsReport cond = check_thm_ocp_conditions(inst.cone, inst.util);
    res["conditions"] = {{"z_set_linear", cond.z_set_linear},
                         {"growth_ok", cond.growth_ok},
                         {"bounds_ok", cond.bounds_ok},
                         {"remark2_ok", cond.remark2_ok},
                         {"applicable", cond.applicable}};
    IntegrandSpec spec = build_consumption(inst.cone, inst.util, inst.endowment);
    ForwardResult primal = forward_policy(inst.tree, backward_pass(inst.tree, spec));
    DualSolveResult dual = build_consumption_dual(inst.cone, inst.util, inst.endowment,
                                                 opt.indexing());
    res["dual"] = dual_json(dual);
    if (!primal.value) {
        res["status"] = "infeasible";
        res["gap_zero"] = dual.unbounded;  // -inf dual bound matches a +inf primal
        return 3;
    }
    res["status"] = "ok";
    res["primal"] = json_value(*primal.value);
    if (dual.value) {
        // dual bound caps the attainable utility: bound >= -(primal minimum)
        res["weak_duality"] = *dual.value >= -*primal.value;
        res["gap"] = json_value(*dual.value + *primal.value);
        res["gap_zero"] = *dual.value + *primal.value == 0;
    }
    return 0;
}

int cmd_oracle_compare(const Instance& inst, const Options&, json& res) {
    require_model(inst, "integrand");
    ForwardResult dp = forward_policy(inst.tree, backward_pass(inst.tree, inst.integrand));
    FlatSolution flat = flatten_solve(inst.tree, inst.integrand);
    bool both_inf = !dp.value && !flat.value;
    bool match = both_inf || (dp.value && flat.value && *dp.value == *flat.value);
    res["status"] = match ? "ok" : "mismatch";
    res["match"] = match;
    if (dp.value) res["recursion"] = json_value(*dp.value);
    if (flat.value) res["flatten"] = json_value(*flat.value);
    if (!match) return 1;
    return both_inf ? 3 : 0;
}

int cmd_phi_probe(const Instance& inst, const Options& opt, json& res) {
    require_model(inst, "cone_market");
    if (inst.grid.empty()) throw SchemaError("phi-probe needs a 'grid' in the model");
    for (const auto& u : inst.grid)
        if (u.size() != inst.cone.d) throw SchemaError("grid vectors must have one entry per asset");
    NodeId root = inst.tree.root();
    auto builder = [&](const Vec& u) {
        std::map<NodeId, Vec> endow = inst.endowment;
        Vec& base = endow.try_emplace(root, Vec(inst.cone.d, Rat(0))).first->second;
        for (std::size_t j = 0; j < u.size(); ++j) base[j] += u[j];
        return build_consumption(inst.cone, inst.util, endow);
    };
    std::optional<DualCandidate> cand;
    DualSolveResult dual = build_consumption_dual(inst.cone, inst.util, inst.endowment,
                                                 opt.indexing());
    if (dual.feasible && dual.value) {
        Vec y0 = dual.y.y.at(root);
        Rat g = -*dual.value;
        cand = DualCandidate{[y0](const Vec& u) { return dot(y0, u); }, g};
        res["dual"] = dual_json(dual);
    }
    PhiProbeReport rep = phi_probe(inst.tree, builder, inst.grid, cand);
    json table = json::array();
    for (const auto& e : rep.entries) {
        json row{{"u", json_vec(e.u)}};
        if (e.value) {
            row["value"] = json_value(*e.value);
            row["minimizer"] = json_policy(e.minimizer);
        } else {
            row["value"] = nullptr;
        }
        table.push_back(std::move(row));
    }
    res["status"] = "ok";
    res["phi"] = table;
    res["midpoint_convex"] = rep.midpoint_convex;
    if (cand) {
        res["fenchel_holds"] = rep.fenchel_holds;
        res["fenchel_tight_at_zero"] = rep.fenchel_tight_at_zero;
    }
    return 0;
}

int dispatch(const std::string& cmd, const Instance& inst, const Options& opt, json& res) {
    if (cmd == "solve") return cmd_solve(inst, opt, res);
    if (cmd == "bellman") return cmd_bellman(inst, opt, res);
    if (cmd == "check-linearity") return cmd_check_linearity(inst, opt, res);
    if (cmd == "no-arbitrage") return cmd_no_arbitrage(inst, opt, res);
    if (cmd == "superhedge") return cmd_superhedge(inst, opt, res);
    if (cmd == "varhedge") return cmd_varhedge(inst, opt, res);
    if (cmd == "consume") return cmd_consume(inst, opt, res);
    if (cmd == "dual") return cmd_dual(inst, opt, res);
    if (cmd == "duality-gap") return cmd_duality_gap(inst, opt, res);
    if (cmd == "oracle-compare") return cmd_oracle_compare(inst, opt, res);
    if (cmd == "phi-probe") return cmd_phi_probe(inst, opt, res);
    throw SchemaError("unknown command '" + cmd + "'");
}

void emit(const json& res, const Options& opt) {
    if (opt.out.empty()) {
        std::cout << res.dump(2) << "\n";
        return;
    }
    std::ofstream out(opt.out);
    out << res.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact-rational scenario-tree convex optimization"};
    app.require_subcommand(1);
    Options opt;
    std::vector<std::string> names{"solve",   "bellman", "check-linearity", "no-arbitrage",
                                   "superhedge", "varhedge", "consume",     "dual",
                                   "duality-gap", "oracle-compare", "phi-probe"};
    for (const auto& n : names) {
        CLI::App* sub = app.add_subcommand(n);
        sub->add_option("--instance", opt.instance, "instance JSON file")->required();
        sub->add_option("--out", opt.out, "write the result JSON here (default: stdout)");
        sub->add_option("--check-level", opt.check_level, "fast|full")
            ->check(CLI::IsMember({"fast", "full"}));
        sub->add_option("--dual-index", opt.dual_index, "derivation|displayed")
            ->check(CLI::IsMember({"derivation", "displayed"}));
    }
    CLI11_PARSE(app, argc, argv);
    std::string cmd = app.get_subcommands().front()->get_name();

    json res{{"schema", 1}, {"command", cmd}};
    auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    try {
        Instance inst = load_instance(opt.instance);
        code = dispatch(cmd, inst, opt, res);
    } catch (const SchemaError& e) {
        res["status"] = "schema_error";
        res["error"] = {{"code", "schema"}, {"message", e.what()}};
        code = 4;
    } catch (const LinearityViolated& e) {
        res["status"] = "linearity_violated";
        res["error"] = {{"code", "linearity"},
                        {"message", e.what()},
                        {"node", e.node},
                        {"stage", e.stage},
                        {"witness", json_vec(e.witness)}};
        code = 2;
    } catch (const Infeasible& e) {
        res["status"] = "infeasible";
        res["error"] = {{"code", "infeasible"}, {"message", e.what()}};
        code = 3;
    } catch (const CertificateViolated& e) {
        res["status"] = "certificate_violated";
        res["error"] = {{"code", "certificate"}, {"message", e.what()}};
        code = 1;
    } catch (const FmRowCapExceeded& e) {
        res["status"] = "row_cap_exceeded";
        res["error"] = {{"code", "row_cap"}, {"message", e.what()}};
        code = 1;
    } catch (const std::exception& e) {
        res["status"] = "error";
        res["error"] = {{"code", "internal"}, {"message", e.what()}};
        code = 1;
    }
    auto t1 = std::chrono::steady_clock::now();
    res["timing_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    emit(res, opt);
    return code;
}
