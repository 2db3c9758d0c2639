#include "doctest.h"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// End-to-end tests driving the installed binary through a shell.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int code = -1;
    json out;
};

fs::path scratch() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "stochdp_cli_test";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

fs::path write_instance(const std::string& name, const std::string& body) {
    fs::path p = scratch() / name;
    std::ofstream(p) << body;
    return p;
}

RunResult run(const std::string& args) {
    fs::path out = scratch() / "out.json";
    std::string cmd = std::string(STOCHDP_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WEXITSTATUS(status);
    std::ifstream in(out);
    if (in.peek() != std::ifstream::traits_type::eof()) r.out = json::parse(in);
    return r;
}

const char* kBinomialTree = R"("tree": {"horizon": 1, "nodes": [
    {"id": 0, "stage": 0, "prob": "1"},
    {"id": 1, "stage": 1, "parent": 0, "prob": "1/2"},
    {"id": 2, "stage": 1, "parent": 0, "prob": "1/2"}]})";

std::string superhedge_instance(const std::string& up, const std::string& dn) {
    return std::string(R"({"schema": 1, )") + kBinomialTree + R"(, "model": {
      "type": "liquid_market", "assets": 1,
      "prices": [{"node": 0, "s": ["4"]}, {"node": 1, "s": [")" +
           up + R"("]}, {"node": 2, "s": [")" + dn + R"("]}],
      "claim": [{"node": 1, "value": "3"}, {"node": 2, "value": "0"}]}})";
}

}  // namespace

TEST_CASE("solve: trivial single-node instance") {
    fs::path p = write_instance("single.json", R"({
      "schema": 1,
      "tree": {"horizon": 0, "nodes": [{"id": 0, "stage": 0, "prob": "1"}]},
      "model": {"type": "integrand", "stage_dims": [1],
        "leaves": [{"node": 0, "epigraph": {"dim": 2,
          "ineqs": [{"a": ["1", "-1"], "rhs": "0"}, {"a": ["-1", "-1"], "rhs": "0"}]}}]}})");
    RunResult r = run("solve --instance " + p.string());
    CHECK(r.code == 0);
    CHECK(r.out["status"] == "ok");
    CHECK(r.out["value"]["rat"] == "0");
    CHECK(r.out["policy"]["0"][0] == "0");
}

TEST_CASE("superhedge: binomial call costs 1") {
    fs::path p = write_instance("hedge.json", superhedge_instance("8", "2"));
    RunResult r = run("superhedge --instance " + p.string() + " --check-level full");
    CHECK(r.code == 0);
    CHECK(r.out["value"]["rat"] == "1");
    CHECK(r.out["policy"]["0"][0] == "1");
    CHECK(r.out["policy"]["0"][1] == "1/2");
    CHECK(r.out["checks"]["optimality"]["ok"] == true);
    CHECK(r.out["checks"]["recession_commutation"]["ok"] == true);
}

TEST_CASE("check-linearity: arbitrage market exits 2 with a witness") {
    fs::path p = write_instance("arb.json", superhedge_instance("5", "9/2"));
    RunResult r = run("check-linearity --instance " + p.string());
    CHECK(r.code == 2);
    CHECK(r.out["status"] == "linearity_violated");
    CHECK(r.out["linearity"]["is_linear"] == false);
    CHECK(r.out["witness"]["0"].size() == 1);

    RunResult na = run("no-arbitrage --instance " + p.string());
    CHECK(na.code == 2);
    CHECK(na.out["no_arbitrage"]["holds"] == false);
}

TEST_CASE("solve: LinearityViolated surfaces as exit 2") {
    // f = x with no lower bound: N_0 contains -e_1 but not e_1
    fs::path p = write_instance("unbounded.json", R"({
      "schema": 1,
      "tree": {"horizon": 0, "nodes": [{"id": 0, "stage": 0, "prob": "1"}]},
      "model": {"type": "integrand", "stage_dims": [1],
        "leaves": [{"node": 0, "epigraph": {"dim": 2,
          "ineqs": [{"a": ["1", "-1"], "rhs": "0"}]}}]}})");
    RunResult r = run("solve --instance " + p.string());
    CHECK(r.code == 2);
    CHECK(r.out["error"]["code"] == "linearity");
}

TEST_CASE("solve: infeasible instance exits 3") {
    fs::path p = write_instance("infeasible.json", R"({
      "schema": 1,
      "tree": {"horizon": 0, "nodes": [{"id": 0, "stage": 0, "prob": "1"}]},
      "model": {"type": "integrand", "stage_dims": [1],
        "leaves": [{"node": 0, "epigraph": {"dim": 2,
          "ineqs": [{"a": ["1", "0"], "rhs": "-1"}, {"a": ["-1", "0"], "rhs": "0"}]}}]}})");
    RunResult r = run("solve --instance " + p.string());
    CHECK(r.code == 3);
    CHECK(r.out["status"] == "infeasible");
}

TEST_CASE("schema errors exit 4") {
    SUBCASE("missing schema field") {
        fs::path p = write_instance("noschema.json", R"({"tree": {}, "model": {}})");
        CHECK(run("solve --instance " + p.string()).code == 4);
    }
    SUBCASE("malformed rational") {
        fs::path p = write_instance("badrat.json", R"({
          "schema": 1,
          "tree": {"horizon": 0, "nodes": [{"id": 0, "stage": 0, "prob": "1/0"}]},
          "model": {"type": "integrand", "stage_dims": [1], "leaves": []}})");
        RunResult r = run("solve --instance " + p.string());
        CHECK(r.code == 4);
        CHECK(r.out["status"] == "schema_error");
    }
    SUBCASE("unknown model type") {
        fs::path p = write_instance("badmodel.json", R"({
          "schema": 1,
          "tree": {"horizon": 0, "nodes": [{"id": 0, "stage": 0, "prob": "1"}]},
          "model": {"type": "mystery"}})");
        CHECK(run("solve --instance " + p.string()).code == 4);
    }
    SUBCASE("command/model mismatch") {
        fs::path p = write_instance("mismatch.json", superhedge_instance("8", "2"));
        CHECK(run("varhedge --instance " + p.string()).code == 4);
    }
    SUBCASE("missing file") {
        CHECK(run("solve --instance /nonexistent/path.json").code == 4);
    }
}

TEST_CASE("varhedge: binomial replication with the oracle cross-check") {
    fs::path p = write_instance("var.json", std::string(R"({"schema": 1, )") + kBinomialTree +
                                                R"(, "model": {
      "type": "hedge", "assets": 1,
      "prices": [{"node": 0, "s": ["4"]}, {"node": 1, "s": ["8"]}, {"node": 2, "s": ["2"]}],
      "claim": [{"node": 1, "value": "3"}, {"node": 2, "value": "0"}]}})");
    RunResult r = run("varhedge --instance " + p.string() + " --check-level full");
    CHECK(r.code == 0);
    CHECK(r.out["value"]["rat"] == "0");
    CHECK(r.out["initial_capital"] == "1");
    CHECK(r.out["policy"]["0"][0] == "1/2");
    CHECK(r.out["checks"]["least_squares_oracle"]["ok"] == true);
}

TEST_CASE("oracle-compare matches the recursion") {
    fs::path p = write_instance("cmp.json", R"({
      "schema": 1,
      "tree": {"horizon": 0, "nodes": [{"id": 0, "stage": 0, "prob": "1"}]},
      "model": {"type": "integrand", "stage_dims": [1],
        "leaves": [{"node": 0, "epigraph": {"dim": 2,
          "ineqs": [{"a": ["1", "-1"], "rhs": "-2"}, {"a": ["-1", "-1"], "rhs": "0"}]}}]}})");
    RunResult r = run("oracle-compare --instance " + p.string());
    CHECK(r.code == 0);
    CHECK(r.out["match"] == true);
    CHECK(r.out["recursion"]["rat"] == r.out["flatten"]["rat"]);
}

TEST_CASE("determinism: identical runs give identical results modulo timing") {
    fs::path p = write_instance("det.json", superhedge_instance("8", "2"));
    RunResult a = run("superhedge --instance " + p.string() + " --check-level full");
    RunResult b = run("superhedge --instance " + p.string() + " --check-level full");
    a.out.erase("timing_ms");
    b.out.erase("timing_ms");
    CHECK(a.out.dump() == b.out.dump());
}
