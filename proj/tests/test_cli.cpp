#include "doctest.h"

#include "orthopred/cli.hpp"
#include "orthopred/diagnostics.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace orthopred;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "orthopred_cli_test" / name;
    fs::remove_all(p);
    return p;
}

json summary(const fs::path& dir) { return json::parse(read_text_file(dir / "summary.json")); }

const fs::path kGolden = ORTHOPRED_GOLDEN_DIR;

} // namespace

TEST_CASE("fnv1a") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("usage errors") {
    const fs::path dir = scratch("usage");
    CHECK(run({"--help"}).code == kExitPass);
    CHECK(run({"--version"}).out.find("0.1.0") != std::string::npos);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"sqrt-bench", "--bogus"}).code == kExitUsage);
    CHECK(run({"sqrt-bench", "--format", "xml"}).code == kExitUsage);
    CHECK(run({"sqrt-bench", "--set", "f"}).code == kExitUsage);
    CHECK(run({"sqrt-bench", "--set", "family=hilbert", "--out", dir.string()}).code == kExitUsage);
    CHECK(run({"sqrt-bench", "--set", "cond=0.5", "--out", dir.string()}).code == kExitUsage);
    CHECK(run({"train", "--config", (dir / "missing.cfg").string()}).code == kExitUsage);

    const Outcome unknown = run({"quasi-ortho", "--set", "wibble=3", "--out", dir.string()});
    CHECK(unknown.code == kExitUsage);
    CHECK(unknown.err.find("wibble") != std::string::npos);

    write_text_file(dir / "bad.cfg", "steps = 10\nlearning_rate = 0.1\n");
    const Outcome bad = run({"train", "--config", (dir / "bad.cfg").string(), "--out", dir.string()});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("learning_rate") != std::string::npos);
}

TEST_CASE("sqrt-bench") {
    const fs::path dir = scratch("sqrt");
    CHECK(run({"sqrt-bench", "--set", "f=16", "--set", "family=identity", "--out", dir.string()}).code == kExitPass);
    json s = summary(dir);
    for (const char* m : {"NS", "Visser", "NS2", "Stiefel"}) CHECK(s["metrics"][m]["max_terminal_error"] <= 1e-12);
    CHECK(read_text_file(dir / "residuals.csv").starts_with("method,matrix,iteration,metric,value\n"));

    CHECK(run({"sqrt-bench", "--out", dir.string()}).code == kExitPass);
    s = summary(dir);
    CHECK(s["config"]["f"] == "64");
    CHECK(s["metrics"]["NS"]["max_terminal_error"] <= 1e-6);

    CHECK(run({"sqrt-bench", "--set", "f=8", "--set", "visser_eta=5", "--out", dir.string()}).code == kExitFailure);
    s = summary(dir);
    CHECK(s["status"] == "fail");
    CHECK(s["metrics"]["Visser"]["diverged"] == true);
}

TEST_CASE("predictor-eval") {
    const fs::path dir = scratch("pred");
    CHECK(run({"predictor-eval", "--out", dir.string()}).code == kExitPass);
    const json s = summary(dir);
    CHECK(s["metrics"]["lrp_identity_check"]["distance"] <= 1e-8);
    CHECK(s["metrics"]["predictors"].size() == 8);
    const std::string pairs = read_text_file(dir / "pairwise.csv");
    CHECK(std::count(pairs.begin(), pairs.end(), '\n') == 1 + 28);
}

TEST_CASE("pca-demo") {
    const fs::path dir = scratch("pca");
    CHECK(run({"pca-demo", "--out", dir.string()}).code == kExitPass);
    const json s = summary(dir);
    CHECK(s["metrics"]["oja_hit_step"].is_number());
    CHECK(s["metrics"]["krasulina_hit_step"].is_number());
    CHECK(run({"pca-demo", "--set", "steps=3", "--out", dir.string()}).code == kExitFailure);
}

TEST_CASE("quasi-ortho") {
    const fs::path dir = scratch("quasi");
    CHECK(run({"quasi-ortho", "--out", dir.string()}).code == kExitPass);
    const json first = summary(dir)["metrics"]["first"];
    CHECK(first["eps_proj"] <= 1e-14);
    CHECK(first["eps_sym"] <= 1e-14);
    CHECK(first["eps_orth"] <= 1e-14);
    CHECK(run({"quasi-ortho", "--set", "eps=0.1", "--set", "trials=200", "--out", dir.string()}).code == kExitPass);
}

TEST_CASE("train") {
    const fs::path dir = scratch("train");
    CHECK(run({"train", "--set", "steps=0", "--out", dir.string()}).code == kExitPass);
    CHECK(read_text_file(dir / "train.csv") == std::string(kTrainCsvHeader) + "\n");
    CHECK(read_text_file(dir / "histogram.csv") == std::string(kHistogramCsvHeader) + "\n");

    write_text_file(dir / "run.cfg", "steps = 30\nseed = 4\n");
    CHECK(run({"train", "--config", (dir / "run.cfg").string(), "--seed", "9", "--out", dir.string()}).code ==
          kExitPass);
    json s = summary(dir);
    CHECK(s["seed"] == 9);
    CHECK(s["version"] == "0.1.0");
    CHECK(s["config"]["steps"] == "30");
    CHECK(s["config_hash"].get<std::string>().starts_with("fnv1a64:"));

    CHECK(run({"train", "--set", "steps=200", "--set", "lr=1", "--out", dir.string()}).code == kExitFailure);
    s = summary(dir);
    CHECK(s["metrics"]["aborted"] == true);
    CHECK(s["metrics"]["abort"]["step"] >= 1);

    const Outcome js = run({"train", "--set", "steps=20", "--format", "json-summary", "--out", dir.string()});
    CHECK(js.code == kExitPass);
    CHECK(json::parse(js.out)["command"] == "train");
}

TEST_CASE("ridge sweep") {
    const fs::path dir = scratch("sweep");
    CHECK(run({"train", "--ridge-sweep", "--set", "steps=20", "--set", "init_scale=1", "--out", dir.string()}).code ==
          kExitPass);
    json s = summary(dir);
    REQUIRE(s["metrics"]["sweep"].size() == 7);
    CHECK(s["metrics"]["sweep"][3]["ridge_alpha"] == 0.45);
    for (const char* a : {"0.00", "0.15", "0.30", "0.45", "0.60", "0.75", "0.90"})
        CHECK(fs::exists(dir / (std::string("alpha_") + a) / "train.csv"));

    // At the default initial scale the largest ridge diverges; the sweep
    // still runs every alpha and reports the abort.
    CHECK(run({"train", "--ridge-sweep", "--set", "steps=20", "--out", dir.string()}).code == kExitFailure);
    s = summary(dir);
    REQUIRE(s["metrics"]["sweep"].size() == 7);
    CHECK(s["metrics"]["sweep"][0]["aborted"] == false);
    CHECK(s["metrics"]["sweep"][6]["aborted"] == true);
}

TEST_CASE("determinism and golden files") {
    const fs::path a = scratch("golden_a"), b = scratch("golden_b");
    const std::string cfg = (kGolden / "smoke.cfg").string();
    REQUIRE(run({"train", "--config", cfg, "--out", a.string()}).code == kExitPass);
    REQUIRE(run({"train", "--config", cfg, "--out", b.string()}).code == kExitPass);
    for (const char* f : {"train.csv", "histogram.csv", "summary.json"})
        CHECK(read_text_file(a / f) == read_text_file(b / f));
    CHECK(read_text_file(a / "train.csv") == read_text_file(kGolden / "train.csv"));
    CHECK(read_text_file(a / "histogram.csv") == read_text_file(kGolden / "histogram.csv"));
}
