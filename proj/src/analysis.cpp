#include "irtkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"

namespace irtkit {

double SizeTransform::operator()(double size) const {
    return std::log(size) - std::log(reference_size) + shift;
}

namespace {

double bernoulli_log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log sigma(eta) = -softplus(-eta); log(1 - sigma(eta)) = -softplus(eta)
        const double e = eta[i];
        const double softplus_pos = std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e)));
        ll += y[i] * e - softplus_pos;
    }
    return ll;
}

double sigmoid(double eta) {
    const double e = std::exp(-std::abs(eta));
    return eta >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

// Norm beyond which steadily growing coefficients are taken as separation.
constexpr double kSeparationNorm = 25.0;
constexpr int kSeparationRun = 5;

}  // namespace

DesignFit fit_logistic_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                              const std::vector<std::string>& terms, double ridge, int max_iterations,
                              double tolerance) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (static_cast<std::size_t>(p) != terms.size()) throw ValidationError("one term name per design column required");
    if (outcome.size() != n) throw ValidationError("outcome length differs from design rows");
    if (n < 4) throw ValidationError("logistic regression needs at least 4 observations");
    if (!(ridge >= 0.0)) throw ValidationError("ridge penalty must be non-negative");
    const double successes = outcome.sum();
    if (successes == 0.0 || successes == static_cast<double>(n)) {
        throw SeparationError("outcome has no variation (all observations " +
                              std::string(successes == 0.0 ? "incorrect" : "correct") +
                              "); coefficients are not identifiable");
    }

    if (ridge == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < p) {
            std::vector<std::string> dependent;
            for (Eigen::Index k = qr.rank(); k < p; ++k) dependent.push_back(terms[qr.colsPermutation().indices()[k]]);
            std::sort(dependent.begin(), dependent.end());
            std::string msg = "design matrix is rank deficient; collinear columns:";
            for (const auto& d : dependent) msg += " " + d;
            throw RankDeficientError(msg, dependent);
        }
    }

    // Canonical row order: identical multisets of observations give identical sums.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        for (Eigen::Index c = 0; c < p; ++c) {
            if (design(x, c) != design(y, c)) return design(x, c) < design(y, c);
        }
        return outcome[x] < outcome[y];
    });
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        X.row(r) = design.row(order[static_cast<std::size_t>(r)]);
        y[r] = outcome[order[static_cast<std::size_t>(r)]];
    }

    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, ridge);
    for (Eigen::Index c = 0; c < p; ++c) {
        if (terms[static_cast<std::size_t>(c)] == "intercept") penalty[c] = 0.0;
    }
    auto objective = [&](const Eigen::VectorXd& beta) {
        return bernoulli_log_likelihood(X * beta, y) - 0.5 * (penalty.array() * beta.array().square()).sum();
    };

    DesignFit fit;
    fit.terms = terms;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double current = objective(beta);
    double last_norm = 0.0;
    int growth_run = 0;
    Eigen::MatrixXd info(p, p);

    for (int iter = 1; iter <= max_iterations; ++iter) {
        const Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd residual(n);
        Eigen::VectorXd weight(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta[i]);
            residual[i] = y[i] - mu;
            weight[i] = mu * (1.0 - mu);
        }
        const Eigen::VectorXd gradient = X.transpose() * residual - penalty.cwiseProduct(beta);
        info = X.transpose() * weight.asDiagonal() * X;
        info.diagonal() += penalty;
        Eigen::LDLT<Eigen::MatrixXd> solver(info);
        if (solver.info() != Eigen::Success || solver.isNegative()) {
            throw SeparationError("information matrix became singular; outcome is separable (try --ridge)");
        }
        Eigen::VectorXd step = solver.solve(gradient);
        if (!step.allFinite()) throw SeparationError("IRLS step is not finite; outcome is separable (try --ridge)");

        double scale = 1.0;
        Eigen::VectorXd next = beta + step;
        double value = objective(next);
        for (int halving = 0; halving < 20 && !(value >= current - 1e-12 * std::abs(current)); ++halving) {
            scale *= 0.5;
            next = beta + scale * step;
            value = objective(next);
        }
        beta = next;
        current = value;
        fit.iterations = iter;

        const double norm = beta.norm();
        growth_run = norm > last_norm ? growth_run + 1 : 0;
        last_norm = norm;
        if (norm > kSeparationNorm && growth_run >= kSeparationRun) {
            throw SeparationError("coefficients diverge (norm " + csv::format_double(norm) +
                                  "); outcome is (quasi-)separable, consider a ridge penalty");
        }
        if ((scale * step).cwiseAbs().maxCoeff() < tolerance) {
            fit.converged = true;
            break;
        }
    }

    // Information at the final coefficients for the standard errors.
    {
        const Eigen::VectorXd eta = X * beta;
        Eigen::VectorXd weight(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta[i]);
            weight[i] = mu * (1.0 - mu);
        }
        info = X.transpose() * weight.asDiagonal() * X;
        info.diagonal() += penalty;
    }
    const Eigen::MatrixXd covariance = info.inverse();
    fit.coefficients = beta;
    fit.standard_errors = covariance.diagonal().cwiseSqrt();
    fit.log_likelihood = bernoulli_log_likelihood(X * beta, y);
    return fit;
}

double RegressionFit::coefficient(const std::string& term) const {
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k] == term) return coefficients[k];
    }
    return 0.0;
}

double RegressionFit::log_odds(double size, double difficulty) const {
    const double t = transform(size);
    const double b = difficulty - difficulty_center;
    return intercept() + size_coefficient() * t + difficulty_coefficient() * b + interaction_coefficient() * t * b;
}

namespace {

SizeTransform default_transform(const LearningCurveTable& table) {
    std::uint64_t largest = 0;
    for (const auto& r : table.rows) largest = std::max(largest, r.training_size);
    return SizeTransform{static_cast<double>(largest), 0.0};
}

struct Prepared {
    std::unordered_map<std::string, double> difficulty;
    double center = 0.0;
    SizeTransform transform;
};

Prepared prepare(const LearningCurveTable& table, const std::vector<ItemDifficulty>& difficulties,
                 const LogisticOptions& options) {
    if (table.rows.empty()) throw ValidationError("learning-curve table is empty");
    Prepared prep;
    for (const auto& d : difficulties) prep.difficulty.emplace(d.item_id, d.b);
    std::vector<std::string> unknown;
    std::unordered_set<std::string> unknown_seen;
    std::unordered_set<std::string> present;
    for (const auto& r : table.rows) {
        if (r.training_size == 0) throw ValidationError("training sizes must be positive");
        if (prep.difficulty.count(r.item_id)) {
            present.insert(r.item_id);
        } else if (unknown_seen.insert(r.item_id).second) {
            unknown.push_back(r.item_id);
        }
    }
    if (!unknown.empty()) {
        std::string msg = "no difficulty for item_id:";
        for (const auto& id : unknown) msg += " " + id;
        throw ValidationError(msg);
    }
    if (options.recenter_difficulty) {
        std::vector<double> values;
        for (const auto& id : present) values.push_back(prep.difficulty.at(id));
        std::sort(values.begin(), values.end());
        prep.center = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    }
    prep.transform = options.transform.value_or(default_transform(table));
    if (!(prep.transform.reference_size > 0.0)) throw ValidationError("size transform reference must be positive");
    return prep;
}

RegressionFit fit_rows(const std::vector<const LearningCurveRow*>& rows, const Prepared& prep,
                       const LogisticOptions& options, const std::vector<std::string>& models,
                       const std::string& name) {
    std::vector<std::string> terms{"intercept"};
    if (options.include_size) terms.push_back("size");
    if (options.include_difficulty) terms.push_back("difficulty");
    if (options.include_interaction) terms.push_back("size:difficulty");
    const std::size_t base_terms = terms.size();
    if (options.model_indicators) {
        for (std::size_t m = 1; m < models.size(); ++m) terms.push_back("model[" + models[m] + "]");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < 4) throw ValidationError("logistic regression needs at least 4 observations");
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(terms.size()));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = *rows[static_cast<std::size_t>(i)];
        const double t = prep.transform(static_cast<double>(r.training_size));
        const double b = prep.difficulty.at(r.item_id) - prep.center;
        Eigen::Index c = 0;
        X(i, c++) = 1.0;
        if (options.include_size) X(i, c++) = t;
        if (options.include_difficulty) X(i, c++) = b;
        if (options.include_interaction) X(i, c++) = t * b;
        if (options.model_indicators) {
            for (std::size_t m = 1; m < models.size(); ++m) {
                X(i, static_cast<Eigen::Index>(base_terms + m - 1)) = r.model_name == models[m] ? 1.0 : 0.0;
            }
        }
        y[i] = r.correct;
    }
    const auto design = fit_logistic_design(X, y, terms, options.ridge, options.max_iterations, options.tolerance);
    RegressionFit fit;
    fit.model_name = name;
    fit.terms = design.terms;
    fit.coefficients.assign(design.coefficients.data(), design.coefficients.data() + design.coefficients.size());
    fit.standard_errors.assign(design.standard_errors.data(),
                               design.standard_errors.data() + design.standard_errors.size());
    fit.log_likelihood = design.log_likelihood;
    fit.n_observations = rows.size();
    fit.iterations = design.iterations;
    fit.converged = design.converged;
    fit.transform = prep.transform;
    fit.difficulty_center = prep.center;
    return fit;
}

std::string joined_name(const std::vector<std::string>& models) {
    std::string name;
    for (const auto& m : models) name += (name.empty() ? "" : "+") + m;
    return name;
}

}  // namespace

RegressionFit fit_logistic(const LearningCurveTable& table, const std::vector<ItemDifficulty>& difficulties,
                           const LogisticOptions& options) {
    const auto prep = prepare(table, difficulties, options);
    std::vector<const LearningCurveRow*> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) rows.push_back(&r);
    const auto models = table.model_names();
    return fit_rows(rows, prep, options, models, joined_name(models));
}

std::vector<RegressionFit> fit_per_model(const LearningCurveTable& table, const std::vector<ItemDifficulty>& difficulties,
                                         const LogisticOptions& options) {
    auto per_model = options;
    per_model.model_indicators = false;
    const auto prep = prepare(table, difficulties, per_model);
    std::vector<RegressionFit> fits;
    for (const auto& model : table.model_names()) {
        std::vector<const LearningCurveRow*> rows;
        for (const auto& r : table.rows) {
            if (r.model_name == model) rows.push_back(&r);
        }
        fits.push_back(fit_rows(rows, prep, per_model, {model}, model));
    }
    return fits;
}

double odds_growth_rate(const RegressionFit& fit, double difficulty) {
    return fit.size_coefficient() + fit.interaction_coefficient() * (difficulty - fit.difficulty_center);
}

ContourGrid contour_grid(const RegressionFit& fit, double size_min, double size_max, double difficulty_min,
                         double difficulty_max, std::size_t size_points, std::size_t difficulty_points) {
    if (!(size_min > 0.0 && size_max > size_min) || !std::isfinite(size_max)) {
        throw ValidationError("size range must satisfy 0 < min < max");
    }
    if (!(difficulty_max > difficulty_min) || !std::isfinite(difficulty_min) || !std::isfinite(difficulty_max)) {
        throw ValidationError("difficulty range must satisfy min < max");
    }
    if (size_points < 2 || difficulty_points < 2) throw ValidationError("contour resolution must be at least 2x2");
    ContourGrid grid;
    const double log_lo = std::log(size_min);
    const double log_hi = std::log(size_max);
    for (std::size_t s = 0; s < size_points; ++s) {
        const double u = static_cast<double>(s) / static_cast<double>(size_points - 1);
        grid.sizes.push_back(s == 0 ? size_min : s + 1 == size_points ? size_max : std::exp(log_lo + u * (log_hi - log_lo)));
    }
    for (std::size_t d = 0; d < difficulty_points; ++d) {
        const double u = static_cast<double>(d) / static_cast<double>(difficulty_points - 1);
        grid.difficulties.push_back(d + 1 == difficulty_points ? difficulty_max
                                                               : difficulty_min + u * (difficulty_max - difficulty_min));
    }
    grid.log_odds.reserve(size_points * difficulty_points);
    for (double b : grid.difficulties) {
        for (double s : grid.sizes) {
            const double eta = fit.log_odds(s, b);
            if (!std::isfinite(eta)) throw NumericalError("log-odds surface is not finite");
            grid.log_odds.push_back(eta);
        }
    }
    return grid;
}

void ContourGrid::write_csv(std::ostream& out) const {
    out << "size,difficulty,log_odds\n";
    for (std::size_t d = 0; d < difficulties.size(); ++d) {
        for (std::size_t s = 0; s < sizes.size(); ++s) {
            csv::write_row(out, {csv::format_double(sizes[s]), csv::format_double(difficulties[d]),
                                 csv::format_double(at(s, d))});
        }
    }
}

void ContourGrid::write_svg(std::ostream& out) const {
    constexpr double kWidth = 640.0;
    constexpr double kHeight = 480.0;
    constexpr double kMargin = 60.0;
    const double lo = *std::min_element(log_odds.begin(), log_odds.end());
    const double hi = *std::max_element(log_odds.begin(), log_odds.end());
    const double span = hi > lo ? hi - lo : 1.0;
    const double cell_w = (kWidth - 2 * kMargin) / static_cast<double>(sizes.size());
    const double cell_h = (kHeight - 2 * kMargin) / static_cast<double>(difficulties.size());
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    for (std::size_t d = 0; d < difficulties.size(); ++d) {
        for (std::size_t s = 0; s < sizes.size(); ++s) {
            // Blue for low log-odds through pink for high.
            const double u = (at(s, d) - lo) / span;
            const int r = static_cast<int>(std::lround(60 + 195 * u));
            const int g = static_cast<int>(std::lround(90 + 60 * u));
            const int b = static_cast<int>(std::lround(220 - 20 * u));
            // Difficulty increases upwards.
            const double y = kHeight - kMargin - static_cast<double>(d + 1) * cell_h;
            std::snprintf(buf, sizeof buf,
                          "<rect x=\"%.3f\" y=\"%.3f\" width=\"%.3f\" height=\"%.3f\" fill=\"rgb(%d,%d,%d)\"/>\n",
                          kMargin + static_cast<double>(s) * cell_w, y, cell_w + 0.05, cell_h + 0.05, r, g, b);
            out << buf;
        }
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"14\" text-anchor=\"middle\">training size (log scale, %g to %g)</text>\n",
                  kWidth / 2, kHeight - 20.0, sizes.front(), sizes.back());
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"20\" y=\"%.1f\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 %.1f)\">difficulty (%g to %g)</text>\n",
                  kHeight / 2, kHeight / 2, difficulties.front(), difficulties.back());
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"30\" font-size=\"14\" text-anchor=\"middle\">log-odds of a correct label, %.3g (blue) to %.3g (pink)</text>\n",
                  kWidth / 2, lo, hi);
    out << buf << "</svg>\n";
}

std::string fits_to_json_text(const std::vector<RegressionFit>& fits) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["fits"] = ordered_json::array();
    for (const auto& f : fits) {
        ordered_json o;
        o["model_name"] = f.model_name;
        o["terms"] = f.terms;
        o["coefficients"] = f.coefficients;
        o["standard_errors"] = f.standard_errors;
        o["log_likelihood"] = f.log_likelihood;
        o["n_observations"] = f.n_observations;
        o["iterations"] = f.iterations;
        o["converged"] = f.converged;
        o["transform"] = {{"kind", "log"}, {"reference_size", f.transform.reference_size}, {"shift", f.transform.shift}};
        o["difficulty_center"] = f.difficulty_center;
        doc["fits"].push_back(std::move(o));
    }
    return doc.dump(2) + "\n";
}

std::vector<RegressionFit> parse_fits_json(const std::string& text, const std::string& source) {
    using nlohmann::json;
    std::vector<RegressionFit> out;
    try {
        const auto doc = json::parse(text);
        for (const auto& o : doc.at("fits")) {
            RegressionFit f;
            f.model_name = o.at("model_name").get<std::string>();
            f.terms = o.at("terms").get<std::vector<std::string>>();
            f.coefficients = o.at("coefficients").get<std::vector<double>>();
            f.standard_errors = o.at("standard_errors").get<std::vector<double>>();
            f.log_likelihood = o.at("log_likelihood").get<double>();
            f.n_observations = o.at("n_observations").get<std::size_t>();
            f.iterations = o.at("iterations").get<int>();
            f.converged = o.at("converged").get<bool>();
            const auto& t = o.at("transform");
            if (t.at("kind").get<std::string>() != "log") throw ValidationError(source + ": unsupported size transform");
            f.transform = {t.at("reference_size").get<double>(), t.at("shift").get<double>()};
            f.difficulty_center = o.at("difficulty_center").get<double>();
            if (f.terms.size() != f.coefficients.size()) throw ValidationError(source + ": terms and coefficients differ in length");
            out.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw ValidationError(source + ": malformed fit file: " + e.what());
    }
    if (out.empty()) throw ValidationError(source + ": no fits");
    return out;
}

}  // namespace irtkit
