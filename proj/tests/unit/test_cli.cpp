#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "irtkit/cli.hpp"
#include "irtkit/io.hpp"
#include "irtkit/manifest.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace irtkit;
using nlohmann::json;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = cli::dispatch(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string p(const fs::path& path) { return path.string(); }

// Simulated items + responses in `dir`; returns the item file.
fs::path simulated_responses(const fs::path& dir, const std::string& n_items = "30", const std::string& n = "1500") {
    REQUIRE(run({"simulate", "items", "--n", n_items, "--out", p(dir / "items.json"), "--quiet"}).code == 0);
    REQUIRE(run({"simulate", "population", "--items", p(dir / "items.json"), "--n", n, "--out",
                 p(dir / "responses.csv"), "--quiet"})
                .code == 0);
    return dir / "items.json";
}

}  // namespace

TEST_CASE("help lists every subcommand flag") {
    const auto r = run({"--help-all"});
    CHECK(r.code == 0);
    for (const char* flag : {"--responses", "--wide", "--model", "--b-out", "--summary-out", "--tol", "--max-iter",
                             "--quad-points", "--quad-lo", "--quad-hi", "--chance", "--prior-log-a-sd", "--params",
                             "--pattern", "--annotations", "--gold", "--task", "--aliases", "--binarize", "--strata",
                             "--a-range", "--theta-sd", "--thetas-out", "--sizes", "--alpha", "--beta", "--reps",
                             "--guessing-floor", "--curves", "--difficulties", "--pooled", "--recenter", "--ridge",
                             "--fit", "--difficulty", "--res", "--svg", "--config", "--out-dir", "--manifest",
                             "--seed", "--threads", "--quiet", "--manifest-out"}) {
        CHECK_MESSAGE(r.out.find(flag) != std::string::npos, std::string(flag));
    }
    CHECK(run({"--version"}).code == 0);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"kappa", "--task", "sa"}).code == 1);  // missing --annotations
    const auto unknown = run({"kappa", "--annotations", p(support::fixture("fleiss_3x3.csv")), "--task", "sa",
                              "--colour"});
    CHECK(unknown.code == 1);
    const auto missing = run({"kappa", "--annotations", "/nonexistent/a.csv", "--task", "sa"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("no such file") != std::string::npos);
    CHECK(run({"--seed", "-3", "kappa", "--annotations", p(support::fixture("fleiss_3x3.csv")), "--task", "sa"})
              .code == 1);
}

TEST_CASE("kappa on the 3x3 example") {
    const auto r = run({"kappa", "--annotations", p(support::fixture("fleiss_3x3.csv")), "--task", "sa", "--binarize"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j.at("kappa").get<double>() == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(j.at("n_items") == 3);
}

TEST_CASE("grade reproduces the graded fixtures") {
    const auto dir = support::scratch_dir("cli_grade");
    for (auto [task, stem] : {std::pair{"nli", "nli"}, {"sa", "sa"}}) {
        const auto out = dir / (std::string(stem) + ".csv");
        const auto r = run({"grade", "--annotations", p(support::fixture(std::string(stem) + "_annotations.csv")),
                            "--gold", p(support::fixture(std::string(stem) + "_gold.csv")), "--task", task, "--out",
                            p(out), "--quiet"});
        REQUIRE(r.code == 0);
        CHECK(read_text_file(out) == read_text_file(support::fixture(std::string(stem) + "_graded.csv")));
    }
}

TEST_CASE("simulate, calibrate and score from the command line") {
    const auto dir = support::scratch_dir("cli_calibrate");
    const auto items_file = simulated_responses(dir);
    const auto r = run({"calibrate", "--responses", p(dir / "responses.csv"), "--out", p(dir / "params.json"),
                        "--b-out", p(dir / "b.csv"), "--summary-out", p(dir / "summary.json"), "--quiet"});
    REQUIRE(r.code == 0);
    const auto truth = read_params_file(items_file);
    const auto fitted = read_params_file(dir / "params.json");
    REQUIRE(fitted.size() == truth.size());
    std::vector<double> bt, bf;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(fitted[i].item_id == truth[i].item_id);
        bt.push_back(truth[i].params.b);
        bf.push_back(fitted[i].params.b);
    }
    CHECK(support::pearson(bt, bf) >= 0.95);
    CHECK(read_difficulties_file(dir / "b.csv").size() == truth.size());
    const auto summary = json::parse(read_text_file(dir / "summary.json"));
    CHECK(summary.at("converged") == true);
    CHECK(summary.at("trace").size() >= 2);

    std::ofstream(dir / "pattern.csv") << "item_id,response\nitem001,1\nitem002,1\nitem003,0\n";
    const auto a = run({"ability", "--params", p(dir / "params.json"), "--pattern", p(dir / "pattern.csv")});
    REQUIRE(a.code == 0);
    const auto j = json::parse(a.out);
    CHECK(j.at("n_items") == 3);
    CHECK(j.at("posterior_sd").get<double>() > 0.0);
    CHECK(j.at("percentile").get<double>() > 0.0);

    // Iteration cap reached: outputs written, status 2.
    const auto capped = run({"calibrate", "--responses", p(dir / "responses.csv"), "--out", p(dir / "capped.json"),
                             "--max-iter", "2", "--quiet"});
    CHECK(capped.code == 2);
    CHECK(fs::exists(dir / "capped.json"));
}

TEST_CASE("malformed input names the offending line") {
    const auto dir = support::scratch_dir("cli_malformed");
    std::ofstream(dir / "bad.csv") << "respondent_id,item_id,response\nr1,i1,1\nr1,i2,maybe\n";
    const auto r = run({"calibrate", "--responses", p(dir / "bad.csv"), "--out", p(dir / "x.json"), "--quiet"});
    CHECK(r.code == 1);
    CHECK(r.err.find("bad.csv:3:") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "x.json.manifest.json"));
}

TEST_CASE("separation exits 2 with a ridge hint; ridge resolves it") {
    const auto dir = support::scratch_dir("cli_separation");
    std::ofstream curves(dir / "curves.csv");
    curves << "model_name,training_size,item_id,correct\n";
    for (int k = 0; k < 5; ++k) curves << "m,100,x,0\nm,1000,x,1\nm,100,y,0\nm,1000,y,1\n";
    curves.close();
    std::ofstream(dir / "b.csv") << "item_id,b\nx,0.5\ny,-0.5\n";
    const std::vector<std::string> base{"analyze", "--curves", p(dir / "curves.csv"), "--difficulties",
                                        p(dir / "b.csv"), "--out", p(dir / "fit.json"), "--quiet"};
    const auto r = run(base);
    CHECK(r.code == 2);
    CHECK(r.err.find("--ridge") != std::string::npos);

    auto ridged = base;
    ridged.insert(ridged.end(), {"--ridge", "0.5"});
    CHECK(run(ridged).code == 0);
    CHECK(fs::exists(dir / "fit.json"));

    const auto c = run({"contour", "--fit", p(dir / "fit.json"), "--res", "5x4", "--out", p(dir / "grid.csv"), "--svg",
                        p(dir / "grid.svg"), "--quiet"});
    REQUIRE(c.code == 0);
    const auto text = read_text_file(dir / "grid.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 21);
    CHECK(run({"contour", "--fit", p(dir / "fit.json"), "--res", "5by4", "--out", p(dir / "g.csv")}).code == 1);
    CHECK(run({"contour", "--fit", p(dir / "fit.json"), "--model", "nope", "--out", p(dir / "g.csv")}).code == 1);
}

TEST_CASE("manifests record the invocation and replay byte-identically") {
    const auto dir = support::scratch_dir("cli_manifest");
    REQUIRE(run({"--seed", "42", "simulate", "items", "--n", "12", "--out", p(dir / "items.json"), "--quiet"}).code ==
            0);
    REQUIRE(run({"--seed", "42", "simulate", "population", "--items", p(dir / "items.json"), "--n", "300", "--out",
                 p(dir / "resp.csv"), "--quiet"})
                .code == 0);

    const auto manifest_path = dir / "resp.csv.manifest.json";
    REQUIRE(fs::exists(manifest_path));
    const auto m = RunManifest::parse(read_text_file(manifest_path), p(manifest_path));
    CHECK(m.subcommand == "simulate population");
    CHECK(m.seed == 42);
    CHECK(m.config.at("n") == "300");
    CHECK(m.config.at("theta-sd") == "1");
    CHECK(m.config.at("wide") == false);
    REQUIRE(m.inputs.count("items") == 1);
    CHECK(m.inputs.at("items").sha256 == sha256_file(dir / "items.json"));
    CHECK(fs::path(m.outputs.at("out")).is_absolute());

    const auto replay_dir = dir / "replay";
    const auto r = run({"replay", "--manifest", p(manifest_path), "--out-dir", p(replay_dir), "--quiet"});
    REQUIRE(r.code == 0);
    CHECK(read_text_file(replay_dir / "resp.csv") == read_text_file(dir / "resp.csv"));

    // Changing an input invalidates the manifest.
    std::ofstream(dir / "items.json", std::ios::app) << "\n";
    const auto stale = run({"replay", "--manifest", p(manifest_path), "--out-dir", p(dir / "again"), "--quiet"});
    CHECK(stale.code == 1);
    CHECK(stale.err.find("changed") != std::string::npos);
}

TEST_CASE("pipeline: synthetic run reproduces the geometry and is deterministic") {
    const auto dir = support::scratch_dir("cli_pipeline");
    const auto config = p(support::fixture("pipeline_synthetic.json"));
    REQUIRE(run({"pipeline", "--config", config, "--out-dir", p(dir / "a"), "--quiet"}).code == 0);
    for (const char* f : {"matrix.csv", "items_true.json", "params.json", "difficulties.csv", "calibration.json",
                          "curves.csv", "fit.json", "contour_synthetic.csv", "contour_synthetic.svg", "report.json",
                          "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
    }
    const auto report = json::parse(read_text_file(dir / "a" / "report.json"));
    CHECK(report.at("status") == 0);
    CHECK(report.at("stages").size() == 5);
    const auto& fit = report.at("fits").at(0);
    CHECK(fit.at("coefficients").at("size").get<double>() > 0.0);
    CHECK(fit.at("coefficients").at("size:difficulty").get<double>() < 0.0);
    CHECK(fit.at("odds_growth_rate_at_b_minus_2").get<double>() > fit.at("odds_growth_rate_at_b_plus_2").get<double>());

    REQUIRE(run({"pipeline", "--config", config, "--out-dir", p(dir / "b"), "--quiet"}).code == 0);
    for (const char* f : {"matrix.csv", "params.json", "curves.csv", "fit.json", "report.json"}) {
        CHECK(read_text_file(dir / "a" / f) == read_text_file(dir / "b" / f));
    }
    REQUIRE(run({"--seed", "8", "pipeline", "--config", config, "--out-dir", p(dir / "c"), "--quiet"}).code == 0);
    CHECK(read_text_file(dir / "a" / "matrix.csv") != read_text_file(dir / "c" / "matrix.csv"));
}

TEST_CASE("pipeline: an unknown curve item aborts at the analyze stage") {
    const auto dir = support::scratch_dir("cli_pipeline_bad");
    std::ofstream curves(dir / "curves.csv");
    curves << "model_name,training_size,item_id,correct\n";
    for (int k = 0; k < 4; ++k) curves << "m,100,item001,1\nm,1000,ghost-item,0\n";
    curves.close();
    const json config = {{"seed", 3},
                         {"responses", {{"source", "simulate"}, {"generate", {{"n_items", 10}}}, {"n_respondents", 400}}},
                         {"curves", {{"source", "file"}, {"path", p(dir / "curves.csv")}}}};
    std::ofstream(dir / "config.json") << config.dump(2);
    const auto r = run({"pipeline", "--config", p(dir / "config.json"), "--out-dir", p(dir / "out"), "--quiet"});
    CHECK(r.code == 1);
    CHECK(r.err.find("stage analyze") != std::string::npos);
    CHECK(r.err.find("ghost-item") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "params.json"));
    CHECK_FALSE(fs::exists(dir / "out" / "report.json"));

    std::ofstream(dir / "typo.json") << R"({"seed": 1, "calibraton": {}})";
    CHECK(run({"pipeline", "--config", p(dir / "typo.json"), "--out-dir", p(dir / "t"), "--quiet"}).code == 1);
}
