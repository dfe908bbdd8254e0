#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ghlab/cli.hpp"

using namespace ghlab;
using namespace ghlab::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("ghlab_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

json base(const std::string& command) {
    return {{"command", command},
            {"spectrum", {{"weyl", {{"m", 2}, {"mu", 1}, {"d", 1}, {"scale", 1}}}}},
            {"truncation", {{"J", 30}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string pointer_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        return e.pointer();
    }
    return "";
}

int shell(const std::string& args) {
    const int rc = std::system((std::string(GHLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("function literals") {
    const auto f = function_literal(json::parse(R"([{"type":"const","amp":2},{"type":"sin","freq":1}])"), "/x");
    CHECK(std::abs(f(0.7) - cplx(2 + std::sin(0.7))) < 1e-15);
    CHECK(function_literal(json::parse(R"({"re":1,"im":-2})"), "/x")(1.0) == cplx(1, -2));
    CHECK(function_literal(3.5, "/x")(2.0) == cplx(3.5));
    const auto e = function_literal(json::parse(R"([{"type":"exp","freq":-3,"re":0,"im":1}])"), "/x");
    CHECK(std::abs(e(0.4) - cplx(0, 1) * std::exp(cplx(0, -1.2))) < 1e-15);

    CHECK_THROWS_WITH_AS(function_literal(json::parse(R"([{"type":"tan"}])"), "/f"), doctest::Contains("/f/0/type"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(function_literal("sin t", "/f"), doctest::Contains("/f"), ConfigError);
}

TEST_CASE("dotted-path overrides") {
    json doc = base("verdict");
    apply_override(doc, "truncation.J=12");
    CHECK(doc["truncation"]["J"] == 12);
    apply_override(doc, "operator.omega.alpha=sqrt2");
    CHECK(doc["operator"]["omega"]["alpha"] == "sqrt2");
    apply_override(doc, "numeric.epsilons=[1,2]");
    CHECK(doc["numeric"]["epsilons"] == json::array({1, 2}));
    apply_override(doc, "numeric.epsilons.1=3");
    CHECK(doc["numeric"]["epsilons"][1] == 3);
    CHECK_THROWS_AS(apply_override(doc, "numeric.epsilons.7=3"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "truncation.J.x=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "a..b=1"), ConfigError);
}

TEST_CASE("schema violations carry JSON pointers") {
    json doc = base("verdict");
    doc["truncation"].erase("J");
    CHECK(pointer_of(doc) == "/truncation/J");

    doc = base("verdict");
    doc["truncation"]["J"] = 0;
    CHECK(pointer_of(doc) == "/truncation/J");

    doc = base("verdict");
    doc["truncaton"] = json::object();
    CHECK(pointer_of(doc) == "/truncaton");

    doc = base("verdict");
    doc["spectrum"]["weyl"]["m"] = -1;
    CHECK(pointer_of(doc) == "/spectrum/weyl/m");

    doc = base("verdict");
    doc["operator"] = {{"c", {{"b", json::parse(R"([{"type":"sin","freq":1},{"type":"exp","freq":1,"amp":1}])")}}}};
    CHECK(pointer_of(doc) == "/operator/c/b");

    doc = base("verdict");
    doc["operator"] = {{"omega", {{"alpha", "sqrt(x)"}}}};
    CHECK(pointer_of(doc) == "/operator/omega/alpha");

    doc = base("ghx");
    doc["data"] = {{"generator", "gaussian"}};
    CHECK(pointer_of(doc) == "/data/generator");

    doc = base("ghx");
    doc["data"] = {{"generator", "resonance_aligned"}};
    CHECK(pointer_of(doc) == "/data/generator");

    doc = base("nonsense");
    CHECK(pointer_of(doc) == "/command");

    doc = base("spectrum");
    doc["spectrum"] = {{"values", {1, 2, 3}}};
    doc["truncation"]["J"] = 4;
    CHECK(pointer_of(doc) == "/truncation/J");
    doc["spectrum"] = {{"values", {1, 3, 2}}};
    doc["truncation"]["J"] = 3;
    CHECK(pointer_of(doc) == "/spectrum");
}

TEST_CASE("config hash") {
    // Oracle: SHA-256 of the compact dumps, computed independently.
    CHECK(config_hash(json{{"a", 1}}) == "015abd7f5cc57a2dd94b7590f04ad8084273905ee33ec5cebeae62276a97f862");
    CHECK(config_hash(json{{"b", {1, 2}}, {"a", "x"}}) ==
          "721ef82f2d6c0997bffb7a8ab3f40f8fb45b0b52ce2af3afa6b0f05efbdc317f");

    json doc = base("verdict");
    const auto h = config_hash(doc);
    doc["outputs"] = {{"dir", "elsewhere"}};
    CHECK(config_hash(doc) == h);
    apply_override(doc, "truncation.J=31");
    CHECK(config_hash(doc) != h);
}

TEST_CASE("data generators") {
    json doc = base("classify");
    doc["operator"] = {{"omega", {{"alpha", "sqrt2"}}}};
    doc["truncation"]["J"] = 5;
    doc["data"] = {{"generator", "power_decay"}, {"power", 2}};
    auto f = make_data(parse_config(doc));
    CHECK(f.mode(4)(0.3) == cplx(1.0 / 16));

    doc["data"] = {{"generator", "exp_decay_fourier"}, {"rate", 1}, {"freq", 1}};
    f = make_data(parse_config(doc));
    CHECK(std::abs(f.mode(3)(0.5) - std::exp(-3.0) * std::exp(cplx(0, 1.5))) < 1e-16);

    doc["data"] = {{"generator", "resonance_aligned"}, {"rate", 1}};
    f = make_data(parse_config(doc));
    // round(sqrt2 * 5) = 7
    CHECK(std::abs(f.mode(5).coefficient(-7) - std::exp(-5.0)) < 1e-18);
}

TEST_CASE("verdict with omega = i") {
    json doc = base("verdict");
    doc["operator"] = {{"omega", {{"alpha", 0}, {"beta", 1}}}};
    doc["outputs"] = {{"dir", scratch("verdict").string()}};
    const auto r = run("verdict", parse_config(doc));
    REQUIRE(r.exit_code == kOk);
    CHECK(r.report["result"]["result"] == "GH");
    CHECK(r.report["result"]["theorem"] == "3.4-beta");
    CHECK(r.report["config_hash"] == config_hash(doc));
    CHECK(r.report["truncation"]["J"] == 30);
    CHECK(json::parse(slurp(fs::path(doc["outputs"]["dir"].get<std::string>()) / "verdict.json")) == r.report);
}

TEST_CASE("counterexample with c = i sin t") {
    json doc = base("counterexample");
    doc["operator"] = {{"c", {{"b", json::parse(R"([{"type":"sin","freq":1}])")}}}};
    const auto dir = scratch("cx");
    doc["outputs"] = {{"dir", dir.string()}};
    const auto r = run("counterexample", parse_config(doc));
    REQUIRE(r.exit_code == kOk);
    CHECK(r.report["result"]["verification"]["passed"] == true);
    const std::string csv = slurp(dir / "counterexample_witness.csv");
    CHECK(csv.rfind("j,lambda,sup_u,abs_u_at_t_star,sup_f\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
}

TEST_CASE("diophantine with sqrt2 at J = 10^4") {
    json doc = base("diophantine");
    doc["operator"] = {{"omega", {{"alpha", "sqrt2"}}}};
    doc["truncation"]["J"] = 10000;
    doc["outputs"] = {{"dir", scratch("dioph").string()}};
    const auto r = run("diophantine", parse_config(doc));
    REQUIRE(r.exit_code == kOk);
    CHECK(r.report["result"]["per_eps"]["1"]["C"].get<double>() >= 0.28);
    CHECK(r.report["result"]["verdict"] == "holds-up-to-J");
}

TEST_CASE("engine failures become error reports") {
    json doc = base("solve");
    // alpha = 1: the data frequency -lambda_j sits exactly on the divisor zero.
    doc["operator"] = {{"omega", {{"alpha", 1}}}};
    doc["data"] = {{"generator", "resonance_aligned"}};
    const auto dir = scratch("resonance");
    doc["outputs"] = {{"dir", dir.string()}};
    const auto r = run("solve", parse_config(doc));
    CHECK(r.exit_code == kNumeric);
    CHECK(r.report["status"] == "error");
    CHECK(r.report["error"]["failing_modes"].size() == 30);
    CHECK(fs::exists(dir / "error.json"));

    doc = base("diophantine");
    doc["operator"] = {{"c", {{"b", 1}}}};
    doc["outputs"] = {{"dir", scratch("needs_omega").string()}};
    const auto u = run("diophantine", parse_config(doc));
    CHECK(u.exit_code == kUsage);
    CHECK(u.report["error"]["pointer"] == "/operator");
}

TEST_CASE("repeated runs are byte-identical") {
    json doc = base("ghx");
    doc["operator"] = {{"c", {{"b", json::parse(R"([{"type":"const","amp":2},{"type":"sin","freq":1}])")}}}};
    doc["data"] = {{"generator", "exp_decay"}, {"profile", json::parse(R"([{"type":"cos","freq":1}])")}};
    doc["truncation"] = {{"J", 20}, {"M_max", 3}, {"gamma_max", 4}};
    const auto a = scratch("det_a"), b = scratch("det_b");
    doc["outputs"] = {{"dir", a.string()}};
    REQUIRE(run("ghx", parse_config(doc)).exit_code == kOk);
    doc["outputs"] = {{"dir", b.string()}};
    REQUIRE(run("ghx", parse_config(doc)).exit_code == kOk);
    for (const char* name : {"ghx.json", "ghx_divisors.csv"}) CHECK(slurp(a / name) == slurp(b / name));
}

TEST_CASE("binary exit codes") {
    const auto dir = scratch("bin");
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const json& doc) {
        std::ofstream(dir / name) << doc.dump();
        return (dir / name).string();
    };
    json good = base("verdict");
    good["operator"] = {{"omega", {{"beta", 1}}}};
    const auto cfg = write("good.json", good);
    const auto out = (dir / "out").string();
    CHECK(shell("run --config " + cfg + " --out " + out) == 0);
    CHECK(shell("verdict --config " + cfg + " --out " + out + " --set truncation.J=0") == 2);
    CHECK(shell("verdict --config " + cfg + " --bogus") == 2);
    CHECK(shell("verdict") == 2);
    CHECK(shell("spectrum --config " + cfg + " --out " + out + " --precision 40") == 0);

    json cx = base("counterexample");
    cx["operator"] = {{"c", {{"b", json::parse(R"([{"type":"sin","freq":1}])")}}}};
    const auto cx_cfg = write("cx.json", cx);
    CHECK(shell("run --config " + cx_cfg + " --out " + out) == 0);
    CHECK(shell("run --config " + cx_cfg + " --out " + out + " --set numeric.residual_tol=1e-300") == 4);

    json res = base("solve");
    res["operator"] = {{"omega", {{"alpha", 1}}}};
    res["data"] = {{"generator", "resonance_aligned"}};
    CHECK(shell("run --config " + write("res.json", res) + " --out " + out) == 3);

    json nocmd = good;
    nocmd.erase("command");
    CHECK(shell("run --config " + write("nocmd.json", nocmd) + " --out " + out) == 2);
}
