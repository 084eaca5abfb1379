#include "irtkit/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "irtkit/analysis.hpp"
#include "irtkit/annotations.hpp"
#include "irtkit/calibration.hpp"
#include "irtkit/error.hpp"
#include "irtkit/io.hpp"
#include "irtkit/simulate.hpp"

namespace irtkit {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Copies `key` from `raw` into `out`, or the default when absent.
template <typename T>
void take(ordered_json& out, const json& raw, const char* key, const T& fallback) {
    out[key] = raw.contains(key) ? ordered_json(raw[key]) : ordered_json(fallback);
}

void reject_unknown_keys(const json& raw, const std::vector<std::string>& known, const std::string& section) {
    if (!raw.is_object()) throw ValidationError("pipeline section '" + section + "' must be an object");
    for (const auto& [key, value] : raw.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ValidationError("pipeline section '" + section + "' has unknown key '" + key + "'");
        }
    }
}

ordered_json resolve_responses(const json& raw, std::uint64_t seed) {
    ordered_json out;
    const auto source = raw.value("source", std::string("simulate"));
    out["source"] = source;
    if (source == "simulate") {
        reject_unknown_keys(raw, {"source", "items", "generate", "n_respondents", "theta_mean", "theta_sd", "seed"},
                            "responses");
        take(out, raw, "items", nullptr);
        const json gen = raw.value("generate", json::object());
        reject_unknown_keys(gen, {"n_items", "a", "b", "c"}, "responses.generate");
        ordered_json g;
        take(g, gen, "n_items", 50);
        take(g, gen, "a", std::vector<double>{0.5, 2.5});
        take(g, gen, "b", std::vector<double>{-3.0, 3.0});
        take(g, gen, "c", std::vector<double>{0.0, 0.35});
        out["generate"] = g;
        take(out, raw, "n_respondents", 2000);
        take(out, raw, "theta_mean", 0.0);
        take(out, raw, "theta_sd", 1.0);
        take(out, raw, "seed", seed);
    } else if (source == "file") {
        reject_unknown_keys(raw, {"source", "path", "wide"}, "responses");
        if (!raw.contains("path")) throw ValidationError("responses.path is required for source 'file'");
        take(out, raw, "path", "");
        take(out, raw, "wide", false);
    } else if (source == "annotations") {
        reject_unknown_keys(raw, {"source", "annotations", "gold", "task", "aliases"}, "responses");
        if (!raw.contains("annotations") || !raw.contains("gold")) {
            throw ValidationError("responses.annotations and responses.gold are required for source 'annotations'");
        }
        take(out, raw, "annotations", "");
        take(out, raw, "gold", "");
        take(out, raw, "task", "sa");
        take(out, raw, "aliases", nullptr);
    } else {
        throw ValidationError("unknown responses.source '" + source + "'");
    }
    return out;
}

ordered_json resolve_curves(const json& raw, std::uint64_t seed) {
    ordered_json out;
    const auto source = raw.value("source", std::string("simulate"));
    out["source"] = source;
    if (source == "simulate") {
        reject_unknown_keys(raw, {"source", "sizes", "alpha", "beta", "reps", "guessing_floor", "model_name", "seed"},
                            "curves");
        take(out, raw, "sizes", default_training_sizes());
        take(out, raw, "alpha", -1.0);
        take(out, raw, "beta", 0.4);
        take(out, raw, "reps", 20);
        take(out, raw, "guessing_floor", 0.0);
        take(out, raw, "model_name", "synthetic");
        take(out, raw, "seed", seed);
    } else if (source == "file") {
        reject_unknown_keys(raw, {"source", "path"}, "curves");
        if (!raw.contains("path")) throw ValidationError("curves.path is required for source 'file'");
        take(out, raw, "path", "");
    } else {
        throw ValidationError("unknown curves.source '" + source + "'");
    }
    return out;
}

fs::path resolve_path(const ordered_json& value, const fs::path& base_dir) {
    fs::path p = value.get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
}

std::string csv_text(const auto& writer) {
    std::ostringstream out;
    writer(out);
    return out.str();
}

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const NumericalError& e) {
        throw StageError(stage, e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(stage, e.what(), false);
    }
}

std::string file_safe(const std::string& name) {
    std::string out;
    for (char ch : name) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_');
    return out;
}

}  // namespace

ordered_json resolve_pipeline_config(const json& raw) {
    reject_unknown_keys(raw, {"seed", "responses", "calibration", "curves", "analysis", "contour"}, "top level");
    ordered_json out;
    const auto seed = raw.value("seed", std::uint64_t{7});
    out["seed"] = seed;
    out["responses"] = resolve_responses(raw.value("responses", json::object()), seed);

    const json cal = raw.value("calibration", json::object());
    reject_unknown_keys(cal, {"model", "quad_points", "quad_range", "tol", "max_iter", "chance"}, "calibration");
    ordered_json c;
    take(c, cal, "model", "3pl");
    take(c, cal, "quad_points", 41);
    take(c, cal, "quad_range", std::vector<double>{-4.0, 4.0});
    take(c, cal, "tol", 1e-4);
    take(c, cal, "max_iter", 500);
    take(c, cal, "chance", 0.25);
    out["calibration"] = c;

    out["curves"] = resolve_curves(raw.value("curves", json::object()), seed);

    const json an = raw.value("analysis", json::object());
    reject_unknown_keys(an, {"pooled", "recenter", "ridge"}, "analysis");
    ordered_json a;
    take(a, an, "pooled", false);
    take(a, an, "recenter", false);
    take(a, an, "ridge", 0.0);
    out["analysis"] = a;

    const json co = raw.value("contour", json::object());
    reject_unknown_keys(co, {"sizes", "difficulty", "res", "svg"}, "contour");
    ordered_json k;
    take(k, co, "sizes", nullptr);
    take(k, co, "difficulty", nullptr);
    take(k, co, "res", std::vector<int>{50, 50});
    take(k, co, "svg", false);
    out["contour"] = k;
    return out;
}

std::vector<fs::path> pipeline_inputs(const ordered_json& resolved, const fs::path& base_dir) {
    std::vector<fs::path> inputs;
    const auto& r = resolved.at("responses");
    const auto source = r.at("source").get<std::string>();
    if (source == "simulate" && !r.at("items").is_null()) inputs.push_back(resolve_path(r.at("items"), base_dir));
    if (source == "file") inputs.push_back(resolve_path(r.at("path"), base_dir));
    if (source == "annotations") {
        inputs.push_back(resolve_path(r.at("annotations"), base_dir));
        inputs.push_back(resolve_path(r.at("gold"), base_dir));
        if (!r.at("aliases").is_null()) inputs.push_back(resolve_path(r.at("aliases"), base_dir));
    }
    const auto& cv = resolved.at("curves");
    if (cv.at("source").get<std::string>() == "file") inputs.push_back(resolve_path(cv.at("path"), base_dir));
    return inputs;
}

PipelineResult run_pipeline(const ordered_json& cfg, const fs::path& base_dir, const fs::path& out_dir,
                            unsigned threads) {
    PipelineResult result;
    ordered_json& report = result.report;
    report["stages"] = ordered_json::array();
    fs::create_directories(out_dir);

    // Responses: graded annotations, a file, or a simulated population.
    const auto& rc = cfg.at("responses");
    const auto source = rc.at("source").get<std::string>();
    const std::string response_stage = source == "annotations" ? "grade" : source == "file" ? "ingest-responses"
                                                                                            : "simulate-population";
    const ResponseMatrix matrix = run_stage(response_stage, [&] {
        if (source == "annotations") {
            const LabelAliases aliases =
                rc.at("aliases").is_null() ? LabelAliases{} : read_aliases_csv(resolve_path(rc.at("aliases"), base_dir));
            const auto task = parse_task(rc.at("task").get<std::string>());
            const auto annotations = AnnotationSet::read_csv(resolve_path(rc.at("annotations"), base_dir), task, aliases);
            const auto gold = GoldLabels::read_csv(resolve_path(rc.at("gold"), base_dir), task, aliases);
            return grade(annotations, gold);
        }
        if (source == "file") {
            const auto path = resolve_path(rc.at("path"), base_dir);
            return rc.at("wide").get<bool>() ? ResponseMatrix::read_wide_csv(path) : ResponseMatrix::read_long_csv(path);
        }
        std::vector<NamedItem> items;
        if (!rc.at("items").is_null()) {
            items = read_params_file(resolve_path(rc.at("items"), base_dir));
        } else {
            const auto& g = rc.at("generate");
            ItemRanges ranges;
            ranges.a_lo = g.at("a")[0];
            ranges.a_hi = g.at("a")[1];
            ranges.b_lo = g.at("b")[0];
            ranges.b_hi = g.at("b")[1];
            ranges.c_lo = g.at("c")[0];
            ranges.c_hi = g.at("c")[1];
            items = random_items(g.at("n_items").get<std::size_t>(), ranges, rc.at("seed").get<std::uint64_t>());
        }
        write_params_file(out_dir / "items_true.json", items);
        SimPopulationConfig pop;
        pop.n_respondents = rc.at("n_respondents").get<std::size_t>();
        pop.theta_mean = rc.at("theta_mean").get<double>();
        pop.theta_sd = rc.at("theta_sd").get<double>();
        pop.seed = rc.at("seed").get<std::uint64_t>();
        pop.threads = threads;
        return simulate_responses(items, pop);
    });
    write_text_file(out_dir / "matrix.csv", csv_text([&](std::ostream& o) { matrix.write_long_csv(o); }));
    report["stages"].push_back(response_stage);

    // Calibration.
    const auto& cc = cfg.at("calibration");
    const CalibrationResult calibration = run_stage("calibrate", [&] {
        CalibrationConfig config;
        config.model = parse_model_kind(cc.at("model").get<std::string>());
        config.quad_points = cc.at("quad_points").get<std::size_t>();
        config.quad_lo = cc.at("quad_range")[0];
        config.quad_hi = cc.at("quad_range")[1];
        config.tolerance = cc.at("tol").get<double>();
        config.max_iterations = cc.at("max_iter").get<int>();
        config.chance_rate = cc.at("chance").get<double>();
        config.seed = cfg.at("seed").get<std::uint64_t>();
        config.threads = threads;
        return fit_em(matrix, config);
    });
    write_params_file(out_dir / "params.json", calibration.items);
    const auto difficulties = extract_difficulties(calibration);
    write_text_file(out_dir / "difficulties.csv",
                    csv_text([&](std::ostream& o) { write_difficulties_csv(o, difficulties); }));
    ordered_json cal_report;
    cal_report["converged"] = calibration.converged;
    cal_report["iterations"] = calibration.iterations;
    cal_report["log_likelihood"] = calibration.log_likelihood;
    cal_report["penalized_log_likelihood"] = calibration.penalized_log_likelihood;
    {
        ordered_json detail = cal_report;
        detail["trace"] = calibration.trace;
        write_text_file(out_dir / "calibration.json", detail.dump(2) + "\n");
    }
    report["calibration"] = cal_report;
    report["stages"].push_back("calibrate");
    if (!calibration.converged) result.status = 2;

    // Learning curves.
    const auto& cv = cfg.at("curves");
    const bool simulate_curves = cv.at("source").get<std::string>() == "simulate";
    const std::string curve_stage = simulate_curves ? "simulate-learner" : "ingest-curves";
    const LearningCurveTable curves = run_stage(curve_stage, [&] {
        if (!simulate_curves) return LearningCurveTable::read_file(resolve_path(cv.at("path"), base_dir));
        SyntheticLearnerConfig learner;
        learner.sizes = cv.at("sizes").get<std::vector<std::uint64_t>>();
        learner.alpha = cv.at("alpha").get<double>();
        learner.beta = cv.at("beta").get<double>();
        learner.replications = cv.at("reps").get<int>();
        learner.guessing_floor = cv.at("guessing_floor").get<double>();
        learner.model_name = cv.at("model_name").get<std::string>();
        learner.seed = cv.at("seed").get<std::uint64_t>();
        learner.threads = threads;
        return simulate_learning_curves(calibration.items, learner);
    });
    write_text_file(out_dir / "curves.csv", csv_text([&](std::ostream& o) { curves.write_csv(o); }));
    report["stages"].push_back(curve_stage);

    // Regression.
    const auto& ac = cfg.at("analysis");
    const std::vector<RegressionFit> fits = run_stage("analyze", [&] {
        LogisticOptions options;
        options.recenter_difficulty = ac.at("recenter").get<bool>();
        options.ridge = ac.at("ridge").get<double>();
        if (ac.at("pooled").get<bool>()) {
            options.model_indicators = true;
            return std::vector<RegressionFit>{fit_logistic(curves, difficulties, options)};
        }
        return fit_per_model(curves, difficulties, options);
    });
    write_text_file(out_dir / "fit.json", fits_to_json_text(fits));
    report["stages"].push_back("analyze");

    // Contours.
    const auto& kc = cfg.at("contour");
    ordered_json fit_reports = ordered_json::array();
    run_stage("contour", [&] {
        double s_lo = 0.0;
        double s_hi = 0.0;
        if (kc.at("sizes").is_null()) {
            s_lo = static_cast<double>(curves.rows.front().training_size);
            s_hi = s_lo;
            for (const auto& r : curves.rows) {
                s_lo = std::min(s_lo, static_cast<double>(r.training_size));
                s_hi = std::max(s_hi, static_cast<double>(r.training_size));
            }
        } else {
            s_lo = kc.at("sizes")[0];
            s_hi = kc.at("sizes")[1];
        }
        double b_lo = 0.0;
        double b_hi = 0.0;
        if (kc.at("difficulty").is_null()) {
            b_lo = difficulties.front().b;
            b_hi = b_lo;
            for (const auto& d : difficulties) {
                b_lo = std::min(b_lo, d.b);
                b_hi = std::max(b_hi, d.b);
            }
        } else {
            b_lo = kc.at("difficulty")[0];
            b_hi = kc.at("difficulty")[1];
        }
        const auto nx = kc.at("res")[0].get<std::size_t>();
        const auto ny = kc.at("res")[1].get<std::size_t>();
        for (const auto& fit : fits) {
            const auto grid = contour_grid(fit, s_lo, s_hi, b_lo, b_hi, nx, ny);
            const auto stem = "contour_" + file_safe(fit.model_name);
            write_text_file(out_dir / (stem + ".csv"), csv_text([&](std::ostream& o) { grid.write_csv(o); }));
            if (kc.at("svg").get<bool>()) {
                write_text_file(out_dir / (stem + ".svg"), csv_text([&](std::ostream& o) { grid.write_svg(o); }));
            }
            ordered_json f;
            f["model_name"] = fit.model_name;
            f["converged"] = fit.converged;
            f["coefficients"] = ordered_json::object();
            for (std::size_t k = 0; k < fit.terms.size(); ++k) f["coefficients"][fit.terms[k]] = fit.coefficients[k];
            f["odds_growth_rate_at_b_minus_2"] = odds_growth_rate(fit, -2.0);
            f["odds_growth_rate_at_b_plus_2"] = odds_growth_rate(fit, 2.0);
            f["contour_file"] = stem + ".csv";
            fit_reports.push_back(std::move(f));
            if (!fit.converged) result.status = 2;
        }
        return 0;
    });
    report["stages"].push_back("contour");
    report["fits"] = fit_reports;
    report["status"] = result.status;
    write_text_file(out_dir / "report.json", report.dump(2) + "\n");
    return result;
}

}  // namespace irtkit
