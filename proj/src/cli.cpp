#include "irtkit/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "irtkit/ability.hpp"
#include "irtkit/analysis.hpp"
#include "irtkit/annotations.hpp"
#include "irtkit/calibration.hpp"
#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"
#include "irtkit/io.hpp"
#include "irtkit/manifest.hpp"
#include "irtkit/pipeline.hpp"
#include "irtkit/simulate.hpp"
#include "irtkit/version.hpp"

namespace irtkit::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

enum class Kind { Value, Flag, Input, Output };

struct OptionDef {
    std::string name;  // long name without dashes
    Kind kind = Kind::Value;
    std::string fallback;
    bool required = false;
    std::string help;
};

std::string join_sizes(const std::vector<std::uint64_t>& sizes) {
    std::string s;
    for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "," : "") + std::to_string(sizes[i]);
    return s;
}

const std::vector<OptionDef>& global_options() {
    static const std::vector<OptionDef> defs{
        {"seed", Kind::Value, "7", false, "Random seed for every stochastic step"},
        {"threads", Kind::Value, "0", false, "Worker threads; 0 uses every core. Results do not depend on it"},
        {"quiet", Kind::Flag, "", false, "Suppress progress messages on stderr"},
        {"manifest-out", Kind::Output, "", false,
         "Run manifest path (default: <out>.manifest.json, or manifest.json inside --out-dir)"},
    };
    return defs;
}

class Args {
public:
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    std::set<std::string> explicit_options;

    const std::string& text(const std::string& name) const { return values.at(name); }
    bool given(const std::string& name) const { return !values.at(name).empty(); }
    bool flag(const std::string& name) const { return flags.at(name); }
    fs::path path(const std::string& name) const { return fs::path(values.at(name)); }

    double number(const std::string& name) const { return parse_number(name, text(name)); }

    long long integer(const std::string& name) const { return parse_int(name, text(name)); }

    std::size_t count(const std::string& name) const {
        const auto v = integer(name);
        if (v < 1) throw ValidationError("--" + name + " must be at least 1, got " + text(name));
        return static_cast<std::size_t>(v);
    }

    std::pair<double, double> range(const std::string& name) const {
        const auto& s = text(name);
        const auto colon = s.find(':', 1);
        if (colon == std::string::npos) throw ValidationError("--" + name + " expects lo:hi, got '" + s + "'");
        return {parse_number(name, s.substr(0, colon)), parse_number(name, s.substr(colon + 1))};
    }

    static double parse_number(const std::string& name, const std::string& raw) {
        const auto s = csv::trim(raw);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
            throw ValidationError("--" + name + ": not a finite number: '" + raw + "'");
        }
        return v;
    }

    static long long parse_int(const std::string& name, const std::string& raw) {
        const auto s = csv::trim(raw);
        char* end = nullptr;
        errno = 0;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
            throw ValidationError("--" + name + ": not an integer: '" + raw + "'");
        }
        return v;
    }
};

struct Context {
    Context(Args a, std::ostream& o, std::ostream& e) : args(std::move(a)), out(o), err(e) {}

    Args args;
    std::ostream& out;
    std::ostream& err;
    bool quiet = false;
    std::uint64_t seed = 7;
    unsigned threads = 1;
    /// Handlers may add extra config entries and inputs here.
    RunManifest manifest;
    /// Where the manifest goes when --manifest-out is not given; empty means none.
    fs::path default_manifest;

    void note(const std::string& message) const {
        if (!quiet) err << message << "\n";
    }
};

struct Command {
    std::string name;  // "calibrate", "simulate population", ...
    std::string description;
    std::vector<OptionDef> options;
    std::function<int(Context&)> run;
};

std::string to_text(const auto& write) {
    std::ostringstream s;
    write(s);
    return s.str();
}

ordered_json agreement_json(const AgreementReport& r) {
    ordered_json j;
    j["kappa"] = r.kappa;
    j["n_items"] = r.n_items;
    j["min_raters"] = r.min_raters;
    j["max_raters"] = r.max_raters;
    j["excluded_items"] = r.excluded_items;
    return j;
}

void emit(Context& ctx, const std::string& option, const std::string& text) {
    if (ctx.args.given(option)) {
        write_text_file(ctx.args.path(option), text);
        ctx.note("wrote " + ctx.args.text(option));
    } else {
        ctx.out << text;
    }
}

// ---------------------------------------------------------------- handlers

int run_calibrate(Context& ctx) {
    const auto& a = ctx.args;
    const auto matrix = a.flag("wide") ? ResponseMatrix::read_wide_csv(a.path("responses"))
                                       : ResponseMatrix::read_long_csv(a.path("responses"));
    CalibrationConfig config;
    config.model = parse_model_kind(a.text("model"));
    config.quad_points = a.count("quad-points");
    config.quad_lo = a.number("quad-lo");
    config.quad_hi = a.number("quad-hi");
    config.tolerance = a.number("tol");
    config.max_iterations = static_cast<int>(a.count("max-iter"));
    config.chance_rate = a.number("chance");
    config.priors.log_a_mean = a.number("prior-log-a-mean");
    config.priors.log_a_sd = a.number("prior-log-a-sd");
    config.priors.c_alpha = a.number("prior-c-alpha");
    config.priors.c_beta = a.number("prior-c-beta");
    config.seed = ctx.seed;
    config.threads = ctx.threads;

    const auto result = fit_em(matrix, config);
    write_params_file(a.path("out"), result.items);
    if (a.given("b-out")) {
        const auto b = extract_difficulties(result);
        write_text_file(a.path("b-out"), to_text([&](std::ostream& o) { write_difficulties_csv(o, b); }));
    }
    if (a.given("summary-out")) {
        ordered_json s;
        s["model"] = to_string(config.model);
        s["converged"] = result.converged;
        s["iterations"] = result.iterations;
        s["log_likelihood"] = result.log_likelihood;
        s["penalized_log_likelihood"] = result.penalized_log_likelihood;
        s["trace"] = result.trace;
        write_text_file(a.path("summary-out"), s.dump(2) + "\n");
    }
    ctx.note("calibrated " + std::to_string(result.items.size()) + " items in " + std::to_string(result.iterations) +
             " EM iterations" + (result.converged ? "" : " (NOT converged)"));
    return result.converged ? 0 : 2;
}

int run_ability(Context& ctx) {
    const auto& a = ctx.args;
    const auto params = read_params_file(a.path("params"));
    const auto pattern = parse_pattern_csv(read_text_file(a.path("pattern")), a.text("pattern"));
    const auto grid = QuadratureGrid::standard_normal(a.count("quad-points"), a.number("quad-lo"), a.number("quad-hi"));
    const auto estimate = estimate_ability(pattern, params, grid);
    ordered_json j;
    j["theta"] = estimate.theta;
    j["posterior_sd"] = estimate.posterior_sd;
    j["percentile"] = theta_percentile(estimate);
    j["n_items"] = estimate.n_items_used;
    emit(ctx, "out", j.dump(2) + "\n");
    return 0;
}

LabelAliases aliases_from(const Args& a) {
    return a.given("aliases") ? read_aliases_csv(a.path("aliases")) : LabelAliases{};
}

int run_grade(Context& ctx) {
    const auto& a = ctx.args;
    const auto task = parse_task(a.text("task"));
    const auto aliases = aliases_from(a);
    const auto annotations = AnnotationSet::read_csv(a.path("annotations"), task, aliases);
    const auto gold = GoldLabels::read_csv(a.path("gold"), task, aliases);
    const auto matrix = grade(annotations, gold);
    write_text_file(a.path("out"), to_text([&](std::ostream& o) {
                        a.flag("wide") ? matrix.write_wide_csv(o) : matrix.write_long_csv(o);
                    }));
    ctx.note("graded " + std::to_string(matrix.respondents()) + " workers x " + std::to_string(matrix.items()) +
             " items");
    return 0;
}

int run_kappa(Context& ctx) {
    const auto& a = ctx.args;
    const auto task = parse_task(a.text("task"));
    auto annotations = AnnotationSet::read_csv(a.path("annotations"), task, aliases_from(a));
    std::vector<std::string> categories = label_alphabet(task);
    if (a.flag("binarize")) {
        annotations = annotations.binarized();
        categories = binary_sentiment_alphabet();
    }
    ordered_json j = agreement_json(fleiss_kappa(annotations, categories));
    if (a.given("strata")) {
        const auto table = csv::read_file(a.path("strata"));
        csv::expect_header(table, {"item_id", "stratum"}, a.text("strata"));
        std::unordered_map<std::string, std::string> stratum_of;
        for (const auto& row : table.rows) stratum_of[csv::trim(row.fields[0])] = csv::trim(row.fields[1]);
        j["strata"] = ordered_json::object();
        for (const auto& [name, report] : fleiss_kappa_by_stratum(annotations, categories, stratum_of)) {
            j["strata"][name] = agreement_json(report);
        }
    }
    emit(ctx, "out", j.dump(2) + "\n");
    return 0;
}

int run_simulate_items(Context& ctx) {
    const auto& a = ctx.args;
    ItemRanges ranges;
    std::tie(ranges.a_lo, ranges.a_hi) = a.range("a-range");
    std::tie(ranges.b_lo, ranges.b_hi) = a.range("b-range");
    std::tie(ranges.c_lo, ranges.c_hi) = a.range("c-range");
    const auto items = random_items(a.count("n"), ranges, ctx.seed);
    write_params_file(a.path("out"), items);
    ctx.note("wrote " + std::to_string(items.size()) + " items to " + a.text("out"));
    return 0;
}

int run_simulate_population(Context& ctx) {
    const auto& a = ctx.args;
    const auto items = read_params_file(a.path("items"));
    SimPopulationConfig config;
    config.n_respondents = a.count("n");
    config.theta_mean = a.number("theta-mean");
    config.theta_sd = a.number("theta-sd");
    config.seed = ctx.seed;
    config.threads = ctx.threads;
    const auto population = simulate_population(items, config);
    write_text_file(a.path("out"), to_text([&](std::ostream& o) {
                        a.flag("wide") ? population.matrix.write_wide_csv(o) : population.matrix.write_long_csv(o);
                    }));
    if (a.given("thetas-out")) {
        write_text_file(a.path("thetas-out"), to_text([&](std::ostream& o) {
                            csv::write_row(o, {"respondent_id", "theta"});
                            for (std::size_t j = 0; j < population.thetas.size(); ++j) {
                                csv::write_row(o, {population.matrix.respondent_ids()[j],
                                                   csv::format_double(population.thetas[j])});
                            }
                        }));
    }
    ctx.note("simulated " + std::to_string(config.n_respondents) + " respondents x " + std::to_string(items.size()) +
             " items");
    return 0;
}

std::vector<std::uint64_t> parse_sizes(const std::string& text) {
    std::vector<std::uint64_t> sizes;
    std::stringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
        const auto v = Args::parse_int("sizes", token);
        if (v < 1) throw ValidationError("--sizes: training sizes must be positive, got " + token);
        sizes.push_back(static_cast<std::uint64_t>(v));
    }
    if (sizes.empty()) throw ValidationError("--sizes: empty list");
    return sizes;
}

int run_simulate_learner(Context& ctx) {
    const auto& a = ctx.args;
    const auto items = read_params_file(a.path("items"));
    SyntheticLearnerConfig config;
    config.sizes = parse_sizes(a.text("sizes"));
    config.alpha = a.number("alpha");
    config.beta = a.number("beta");
    config.replications = static_cast<int>(a.count("reps"));
    config.guessing_floor = a.number("guessing-floor");
    config.model_name = a.text("model-name");
    config.seed = ctx.seed;
    config.threads = ctx.threads;
    const auto table = simulate_learning_curves(items, config);
    write_text_file(a.path("out"), to_text([&](std::ostream& o) { table.write_csv(o); }));
    ctx.note("simulated " + std::to_string(table.rows.size()) + " learner responses");
    return 0;
}

int run_analyze(Context& ctx) {
    const auto& a = ctx.args;
    const auto curves = LearningCurveTable::read_file(a.path("curves"));
    const auto difficulties = read_difficulties_file(a.path("difficulties"));
    LogisticOptions options;
    options.recenter_difficulty = a.flag("recenter");
    options.ridge = a.number("ridge");
    options.max_iterations = static_cast<int>(a.count("max-iter"));
    options.tolerance = a.number("tol");
    std::vector<RegressionFit> fits;
    if (a.flag("pooled")) {
        options.model_indicators = true;
        fits.push_back(fit_logistic(curves, difficulties, options));
    } else {
        fits = fit_per_model(curves, difficulties, options);
    }
    write_text_file(a.path("out"), fits_to_json_text(fits));
    int status = 0;
    for (const auto& f : fits) {
        ctx.note(f.model_name + ": beta1=" + csv::format_double(f.size_coefficient()) +
                 " beta3=" + csv::format_double(f.interaction_coefficient()) + (f.converged ? "" : " (NOT converged)"));
        if (!f.converged) status = 2;
    }
    return status;
}

int run_contour(Context& ctx) {
    const auto& a = ctx.args;
    const auto fits = parse_fits_json(read_text_file(a.path("fit")), a.text("fit"));
    if (fits.empty()) throw ValidationError(a.text("fit") + ": no fits");
    const RegressionFit* fit = &fits.front();
    if (a.given("model")) {
        const auto it = std::find_if(fits.begin(), fits.end(), [&](const auto& f) { return f.model_name == a.text("model"); });
        if (it == fits.end()) throw ValidationError("no fit for model '" + a.text("model") + "' in " + a.text("fit"));
        fit = &*it;
    }
    const auto [s_lo, s_hi] = a.range("sizes");
    const auto [b_lo, b_hi] = a.range("difficulty");
    const auto& res = a.text("res");
    const auto x = res.find('x');
    if (x == std::string::npos) throw ValidationError("--res expects NxM, got '" + res + "'");
    const auto ns = Args::parse_int("res", res.substr(0, x));
    const auto nb = Args::parse_int("res", res.substr(x + 1));
    if (ns < 2 || nb < 2) throw ValidationError("--res needs at least 2 points per axis");
    const auto grid = contour_grid(*fit, s_lo, s_hi, b_lo, b_hi, static_cast<std::size_t>(ns), static_cast<std::size_t>(nb));
    write_text_file(a.path("out"), to_text([&](std::ostream& o) { grid.write_csv(o); }));
    if (a.given("svg")) write_text_file(a.path("svg"), to_text([&](std::ostream& o) { grid.write_svg(o); }));
    ctx.note("contour for " + fit->model_name + ": " + std::to_string(ns) + "x" + std::to_string(nb));
    return 0;
}

int run_pipeline_command(Context& ctx) {
    const auto& a = ctx.args;
    nlohmann::json raw;
    try {
        raw = nlohmann::json::parse(read_text_file(a.path("config")));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(a.text("config") + ": malformed JSON: " + e.what());
    }
    if (a.explicit_options.count("seed")) {
        if (!raw.is_object()) throw ValidationError(a.text("config") + ": expected a JSON object");
        raw["seed"] = ctx.seed;
    }
    const auto resolved = resolve_pipeline_config(raw);
    const auto base_dir = a.path("config").parent_path();
    ctx.manifest.seed = resolved.at("seed").get<std::uint64_t>();
    ctx.manifest.config["seed"] = std::to_string(ctx.manifest.seed);
    ctx.manifest.config["pipeline"] = resolved;
    std::size_t k = 0;
    for (const auto& input : pipeline_inputs(resolved, base_dir)) {
        const auto abs = fs::absolute(input).lexically_normal();
        ctx.manifest.inputs["pipeline-input-" + std::to_string(++k)] = {abs.string(), sha256_file(abs)};
    }
    const auto result = run_pipeline(resolved, base_dir, a.path("out-dir"), ctx.threads);
    ctx.note("pipeline report in " + a.text("out-dir") + (result.status == 0 ? "" : " (NOT converged)"));
    return result.status;
}

// ---------------------------------------------------------------- command table

const std::vector<Command>& commands() {
    static const std::vector<Command> table{
        {"calibrate",
         "Fit 1PL/2PL/3PL item parameters by marginal maximum likelihood (EM)",
         {
             {"responses", Kind::Input, "", true, "Response matrix CSV (respondent_id,item_id,response)"},
             {"wide", Kind::Flag, "", false, "Read --responses as a wide matrix (respondent_id, one column per item)"},
             {"model", Kind::Value, "3pl", false, "Item model: 1pl, 2pl or 3pl"},
             {"out", Kind::Output, "", true, "Item parameter JSON"},
             {"b-out", Kind::Output, "", false, "Difficulty table CSV (item_id,b)"},
             {"summary-out", Kind::Output, "", false, "Fit summary JSON with the log-likelihood trace"},
             {"tol", Kind::Value, "1e-4", false, "Stop when no parameter moves more than this"},
             {"max-iter", Kind::Value, "500", false, "EM iteration cap"},
             {"quad-points", Kind::Value, "41", false, "Quadrature nodes for the ability distribution"},
             {"quad-lo", Kind::Value, "-4", false, "Lowest quadrature node"},
             {"quad-hi", Kind::Value, "4", false, "Highest quadrature node"},
             {"chance", Kind::Value, "0.25", false, "Chance rate used to initialise c (3pl)"},
             {"prior-log-a-mean", Kind::Value, "0", false, "Mean of the normal prior on log a (3pl)"},
             {"prior-log-a-sd", Kind::Value, "0.5", false, "Standard deviation of the normal prior on log a (3pl)"},
             {"prior-c-alpha", Kind::Value, "2", false, "Beta prior on c: alpha (3pl)"},
             {"prior-c-beta", Kind::Value, "8", false, "Beta prior on c: beta (3pl)"},
         },
         run_calibrate},
        {"ability",
         "Score a response pattern (EAP theta, posterior sd, percentile)",
         {
             {"params", Kind::Input, "", true, "Item parameter JSON"},
             {"pattern", Kind::Input, "", true, "Pattern CSV (item_id,response)"},
             {"quad-points", Kind::Value, "41", false, "Quadrature nodes"},
             {"quad-lo", Kind::Value, "-4", false, "Lowest quadrature node"},
             {"quad-hi", Kind::Value, "4", false, "Highest quadrature node"},
             {"out", Kind::Output, "", false, "Result JSON (default: stdout)"},
         },
         run_ability},
        {"grade",
         "Grade crowd annotations against gold labels into a response matrix",
         {
             {"annotations", Kind::Input, "", true, "Annotation CSV (worker_id,item_id,label)"},
             {"gold", Kind::Input, "", true, "Gold label CSV (item_id,gold_label)"},
             {"task", Kind::Value, "", true, "Label set: nli or sa"},
             {"aliases", Kind::Input, "", false, "Label alias CSV (raw,canonical)"},
             {"out", Kind::Output, "", true, "Response matrix CSV"},
             {"wide", Kind::Flag, "", false, "Write the matrix in wide form"},
         },
         run_grade},
        {"kappa",
         "Fleiss' kappa of crowd annotations",
         {
             {"annotations", Kind::Input, "", true, "Annotation CSV (worker_id,item_id,label)"},
             {"task", Kind::Value, "", true, "Label set: nli or sa"},
             {"binarize", Kind::Flag, "", false, "Collapse sentiment labels to negative/positive first"},
             {"aliases", Kind::Input, "", false, "Label alias CSV (raw,canonical)"},
             {"strata", Kind::Input, "", false, "Stratum CSV (item_id,stratum); adds per-stratum kappa"},
             {"out", Kind::Output, "", false, "Result JSON (default: stdout)"},
         },
         run_kappa},
        {"simulate items",
         "Draw random 3PL item parameters",
         {
             {"n", Kind::Value, "50", false, "Number of items"},
             {"a-range", Kind::Value, "0.5:2.5", false, "Discrimination range lo:hi"},
             {"b-range", Kind::Value, "-3:3", false, "Difficulty range lo:hi"},
             {"c-range", Kind::Value, "0:0.35", false, "Guessing range lo:hi"},
             {"out", Kind::Output, "", true, "Item parameter JSON"},
         },
         run_simulate_items},
        {"simulate population",
         "Simulate a respondent population answering the items",
         {
             {"items", Kind::Input, "", true, "Item parameter JSON"},
             {"n", Kind::Value, "2000", false, "Number of respondents"},
             {"theta-mean", Kind::Value, "0", false, "Mean ability"},
             {"theta-sd", Kind::Value, "1", false, "Ability standard deviation"},
             {"out", Kind::Output, "", true, "Response matrix CSV"},
             {"wide", Kind::Flag, "", false, "Write the matrix in wide form"},
             {"thetas-out", Kind::Output, "", false, "True abilities CSV (respondent_id,theta)"},
         },
         run_simulate_population},
        {"simulate learner",
         "Simulate learning curves of a synthetic classifier",
         {
             {"items", Kind::Input, "", true, "Item parameter JSON"},
             {"sizes", Kind::Value, join_sizes(default_training_sizes()), false, "Comma-separated training sizes"},
             {"alpha", Kind::Value, "-1", false, "Ability at the largest training size"},
             {"beta", Kind::Value, "0.4", false, "Ability gain per unit of log training size"},
             {"reps", Kind::Value, "200", false, "Replications per training size"},
             {"guessing-floor", Kind::Value, "0", false, "Raise every item's c to at least this"},
             {"model-name", Kind::Value, "synthetic", false, "model_name column value"},
             {"out", Kind::Output, "", true, "Learning-curve CSV"},
         },
         run_simulate_learner},
        {"analyze",
         "Logistic regression of correctness on training size and difficulty",
         {
             {"curves", Kind::Input, "", true, "Learning-curve CSV (model_name,training_size,item_id,correct)"},
             {"difficulties", Kind::Input, "", true, "Difficulty table CSV (item_id,b)"},
             {"out", Kind::Output, "", true, "Fit JSON"},
             {"pooled", Kind::Flag, "", false, "One regression with model indicator terms instead of one per model"},
             {"recenter", Kind::Flag, "", false, "Center difficulties on the mean of the items present"},
             {"ridge", Kind::Value, "0", false, "L2 penalty on non-intercept coefficients (remedy for separation)"},
             {"max-iter", Kind::Value, "100", false, "IRLS iteration cap"},
             {"tol", Kind::Value, "1e-8", false, "IRLS step tolerance"},
         },
         run_analyze},
        {"contour",
         "Tabulate a fitted log-odds surface over size and difficulty",
         {
             {"fit", Kind::Input, "", true, "Fit JSON from analyze"},
             {"model", Kind::Value, "", false, "Model name to plot (default: the first fit)"},
             {"sizes", Kind::Value, "100:500000", false, "Training size range lo:hi (log-spaced)"},
             {"difficulty", Kind::Value, "-3:3", false, "Difficulty range lo:hi"},
             {"res", Kind::Value, "200x200", false, "Grid resolution: sizes x difficulties"},
             {"out", Kind::Output, "", true, "Grid CSV (size,difficulty,log_odds)"},
             {"svg", Kind::Output, "", false, "Heatmap SVG"},
         },
         run_contour},
        {"pipeline",
         "Run grade/simulate -> calibrate -> curves -> analyze -> contour from a JSON config",
         {
             {"config", Kind::Input, "", true, "Pipeline configuration JSON"},
             {"out-dir", Kind::Output, "", true, "Report directory"},
         },
         run_pipeline_command},
    };
    return table;
}

const Command& find_command(const std::string& name) {
    for (const auto& c : commands()) {
        if (c.name == name) return c;
    }
    throw ValidationError("unknown subcommand '" + name + "'");
}

fs::path absolute_path(const std::string& p) { return fs::absolute(fs::path(p)).lexically_normal(); }

// Materialized options and absolute output paths. Input digests are added by
// the caller.
void fill_manifest(Context& ctx, const Command& command) {
    auto& m = ctx.manifest;
    m.subcommand = command.name;
    m.tool_version = kToolVersion;
    if (!m.config.contains("pipeline")) m.seed = ctx.seed;
    auto record = [&](const OptionDef& def) {
        if (def.kind == Kind::Flag) {
            m.config[def.name] = ctx.args.flag(def.name);
            return;
        }
        if (m.config.contains(def.name)) return;  // set by the handler
        auto value = ctx.args.text(def.name);
        if (!value.empty() && def.kind != Kind::Value) value = absolute_path(value).string();
        m.config[def.name] = value;
        if (!value.empty() && def.kind == Kind::Output) m.outputs[def.name] = value;
    };
    for (const auto& def : command.options) record(def);
    for (const auto& def : global_options()) record(def);
}

int run_command(const Command& command, Context& ctx) {
    for (const auto& def : command.options) {
        if (def.kind == Kind::Input && ctx.args.given(def.name) && !fs::exists(ctx.args.path(def.name))) {
            throw ValidationError("--" + def.name + ": no such file: " + ctx.args.text(def.name));
        }
    }
    if (command.name == "pipeline") {
        ctx.default_manifest = ctx.args.path("out-dir") / "manifest.json";
    } else if (std::any_of(command.options.begin(), command.options.end(),
                           [](const OptionDef& s) { return s.name == "out"; }) &&
               ctx.args.given("out")) {
        ctx.default_manifest = ctx.args.text("out") + ".manifest.json";
    }
    if (ctx.args.given("manifest-out")) ctx.default_manifest = ctx.args.path("manifest-out");
    if (!ctx.default_manifest.empty()) ctx.args.values["manifest-out"] = ctx.default_manifest.string();

    // Inputs are hashed before the run so an output overwriting an input
    // cannot corrupt the recorded digest.
    std::map<std::string, ManifestFile> digests;
    for (const auto& def : command.options) {
        if (def.kind == Kind::Input && ctx.args.given(def.name)) {
            const auto abs = absolute_path(ctx.args.text(def.name));
            digests[def.name] = {abs.string(), sha256_file(abs)};
        }
    }

    const int status = command.run(ctx);

    fill_manifest(ctx, command);
    for (const auto& [name, file] : digests) ctx.manifest.inputs[name] = file;
    if (!ctx.default_manifest.empty()) write_text_file(ctx.default_manifest, ctx.manifest.to_json_text());
    return status;
}

int replay(const fs::path& manifest_path, const fs::path& out_dir, std::ostream& out, std::ostream& err, bool quiet);

// --help-all also expands nested subcommands (simulate items/population/learner).
class ExpandingFormatter : public CLI::Formatter {
public:
    std::string make_expanded(const CLI::App* sub) const override {
        std::stringstream out;
        out << sub->get_display_name(true) << "\n";
        out << make_description(sub);
        out << make_positionals(sub);
        out << make_groups(sub, CLI::AppFormatMode::Sub);
        out << make_subcommands(sub, CLI::AppFormatMode::All);
        std::string text = CLI::detail::find_and_replace(out.str(), "\n\n", "\n");
        text = text.substr(0, text.size() - 1);
        return CLI::detail::find_and_replace(text, "\n", "\n  ") + "\n";
    }
};

int parse_and_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Difficulty-aware evaluation toolkit: IRT calibration, ability scoring, annotation grading and "
                 "learning-curve analysis",
                 kToolName};
    app.formatter(std::make_shared<ExpandingFormatter>());
    app.set_help_all_flag("--help-all", "Show help for every subcommand");
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    Args parsed;
    std::map<std::string, CLI::Option*> handles;
    auto add = [&](CLI::App* where, const OptionDef& def, const std::string& key) {
        if (def.kind == Kind::Flag) {
            parsed.flags[def.name] = false;
            handles[key + def.name] = where->add_flag("--" + def.name, parsed.flags[def.name], def.help);
            return;
        }
        parsed.values[def.name] = def.fallback;
        auto* opt = where->add_option("--" + def.name, parsed.values[def.name], def.help);
        if (def.required) opt->required();
        if (!def.fallback.empty()) opt->default_str(def.fallback);
        if (def.kind == Kind::Input) opt->type_name("FILE");
        if (def.kind == Kind::Output) opt->type_name("PATH");
        handles[key + def.name] = opt;
    };
    for (const auto& def : global_options()) add(&app, def, "");

    // Each subcommand has its own option storage keyed by command name.
    std::map<std::string, Args> per_command;
    std::map<std::string, CLI::App*> apps;
    CLI::App* simulate = app.add_subcommand("simulate", "Generate items, response matrices or learning curves");
    simulate->require_subcommand(1);
    simulate->fallthrough();
    for (const auto& command : commands()) {
        const bool nested = command.name.rfind("simulate ", 0) == 0;
        CLI::App* sub = nested ? simulate->add_subcommand(command.name.substr(9), command.description)
                               : app.add_subcommand(command.name, command.description);
        sub->fallthrough();
        apps[command.name] = sub;
        auto& storage = per_command[command.name];
        for (const auto& def : command.options) {
            if (def.kind == Kind::Flag) {
                storage.flags[def.name] = false;
            } else {
                storage.values[def.name] = def.fallback;
            }
        }
        for (const auto& def : command.options) {
            CLI::Option* opt = nullptr;
            if (def.kind == Kind::Flag) {
                opt = sub->add_flag("--" + def.name, storage.flags[def.name], def.help);
            } else {
                opt = sub->add_option("--" + def.name, storage.values[def.name], def.help);
                if (def.required) opt->required();
                if (!def.fallback.empty()) opt->default_str(def.fallback);
                if (def.kind == Kind::Input) opt->type_name("FILE");
                if (def.kind == Kind::Output) opt->type_name("PATH");
            }
            handles[command.name + ":" + def.name] = opt;
        }
    }
    std::string replay_manifest;
    std::string replay_out;
    CLI::App* replay_app = app.add_subcommand("replay", "Re-run an invocation from its manifest into a new directory");
    replay_app->fallthrough();
    replay_app->add_option("--manifest", replay_manifest, "Manifest written by an earlier run")
        ->required()
        ->type_name("FILE");
    replay_app->add_option("--out-dir", replay_out, "Directory receiving the replayed outputs")
        ->required()
        ->type_name("PATH");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    if (replay_app->parsed()) return replay(replay_manifest, replay_out, out, err, parsed.flags["quiet"]);

    const Command* selected = nullptr;
    for (const auto& command : commands()) {
        if (apps[command.name]->parsed()) selected = &command;
    }
    if (selected == nullptr) throw ValidationError("no subcommand given");

    Context ctx(per_command[selected->name], out, err);
    for (const auto& [k, v] : parsed.values) ctx.args.values[k] = v;
    for (const auto& [k, v] : parsed.flags) ctx.args.flags[k] = v;
    for (const auto& def : global_options()) {
        if (handles.at(def.name)->count() > 0) ctx.args.explicit_options.insert(def.name);
    }
    for (const auto& def : selected->options) {
        if (handles.at(selected->name + ":" + def.name)->count() > 0) ctx.args.explicit_options.insert(def.name);
    }
    ctx.quiet = ctx.args.flag("quiet");
    const auto seed = ctx.args.integer("seed");
    if (seed < 0) throw ValidationError("--seed must be non-negative");
    ctx.seed = static_cast<std::uint64_t>(seed);
    const auto threads = ctx.args.integer("threads");
    if (threads < 0) throw ValidationError("--threads must be non-negative");
    ctx.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : static_cast<unsigned>(threads);
    return run_command(*selected, ctx);
}

int replay(const fs::path& manifest_path, const fs::path& out_dir, std::ostream& out, std::ostream& err, bool quiet) {
    const auto manifest = RunManifest::parse(read_text_file(manifest_path), manifest_path.string());
    if (manifest.subcommand == "replay") throw ValidationError("cannot replay a replay manifest");
    const auto& command = find_command(manifest.subcommand);
    if (manifest.tool_version != kToolVersion && !quiet) {
        err << "warning: manifest written by version " << manifest.tool_version << ", replaying with " << kToolVersion
            << "\n";
    }
    for (const auto& [name, file] : manifest.inputs) {
        if (!fs::exists(file.path)) throw ValidationError("input '" + name + "' is missing: " + file.path);
        if (sha256_file(file.path) != file.sha256) {
            throw ValidationError("input '" + name + "' changed since the manifest was written: " + file.path);
        }
    }

    std::vector<std::string> argv;
    std::stringstream words(command.name);
    for (std::string w; words >> w;) argv.push_back(w);
    auto append = [&](const OptionDef& def) {
        if (!manifest.config.contains(def.name)) return;
        const auto& value = manifest.config.at(def.name);
        if (def.kind == Kind::Flag) {
            if (value.get<bool>()) argv.push_back("--" + def.name);
            return;
        }
        auto text = value.get<std::string>();
        if (text.empty()) return;
        if (def.kind == Kind::Output) {
            text = def.name == "out-dir" ? out_dir.string() : (out_dir / fs::path(text).filename()).string();
        }
        argv.push_back("--" + def.name + "=" + text);
    };
    for (const auto& def : command.options) append(def);
    for (const auto& def : global_options()) append(def);
    if (quiet && std::find(argv.begin(), argv.end(), "--quiet") == argv.end()) argv.push_back("--quiet");
    fs::create_directories(out_dir);
    return parse_and_run(argv, out, err);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return parse_and_run(args, out, err);
    } catch (const StageError& e) {
        err << "error: " << e.what() << "\n";
        return e.numerical() ? 2 : 1;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        if (dynamic_cast<const SeparationError*>(&e) != nullptr) {
            err << "hint: --ridge adds an L2 penalty that keeps the coefficients finite\n";
        }
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace irtkit::cli
