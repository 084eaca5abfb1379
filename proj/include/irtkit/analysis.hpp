#pragma once

// Logistic regression of classifier correctness on training size and item
// difficulty, and the log-odds surface it implies.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "irtkit/curves.hpp"
#include "irtkit/io.hpp"

namespace irtkit {

/// t(s) = ln(s) - ln(reference_size) + shift. With the default shift the
/// largest training size maps to 0.
struct SizeTransform {
    double reference_size = 1.0;
    double shift = 0.0;

    double operator()(double size) const;
};

struct LogisticOptions {
    bool include_size = true;
    bool include_difficulty = true;
    bool include_interaction = true;
    /// Adds one indicator column per model after the first (pooled fits).
    bool model_indicators = false;
    /// Subtract the mean difficulty of the items present in the table.
    bool recenter_difficulty = false;
    /// L2 penalty on every coefficient except the intercept; 0 disables.
    double ridge = 0.0;
    int max_iterations = 100;
    double tolerance = 1e-8;
    /// Defaults to a log transform referenced to the table's largest size.
    std::optional<SizeTransform> transform;
};

/// Result of maximizing a Bernoulli log-likelihood over a design matrix.
struct DesignFit {
    std::vector<std::string> terms;
    Eigen::VectorXd coefficients;
    Eigen::VectorXd standard_errors;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Iteratively reweighted least squares. Rows are processed in sorted order so
/// the result does not depend on observation order.
/// Throws SeparationError for a constant outcome or diverging coefficients,
/// RankDeficientError (naming the dependent columns) for a singular design.
/// Hitting the iteration cap is reported through `converged`.
DesignFit fit_logistic_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                              const std::vector<std::string>& terms, double ridge = 0.0, int max_iterations = 100,
                              double tolerance = 1e-8);

struct RegressionFit {
    std::string model_name;
    std::vector<std::string> terms;
    std::vector<double> coefficients;
    std::vector<double> standard_errors;
    double log_likelihood = 0.0;
    std::size_t n_observations = 0;
    int iterations = 0;
    bool converged = false;
    SizeTransform transform;
    double difficulty_center = 0.0;

    /// Coefficient of `term`, or 0 when the term was not fitted.
    double coefficient(const std::string& term) const;
    double intercept() const { return coefficient("intercept"); }
    double size_coefficient() const { return coefficient("size"); }
    double difficulty_coefficient() const { return coefficient("difficulty"); }
    double interaction_coefficient() const { return coefficient("size:difficulty"); }

    /// beta0 + beta1 t(s) + beta2 b + beta3 t(s) b, with b re-centered if the fit was.
    double log_odds(double size, double difficulty) const;
};

/// One regression over every row of `table`. Throws ValidationError for items
/// missing from `difficulties` or fewer than 4 observations.
RegressionFit fit_logistic(const LearningCurveTable& table, const std::vector<ItemDifficulty>& difficulties,
                           const LogisticOptions& options = {});

/// One regression per model_name, all sharing the table-wide size transform.
std::vector<RegressionFit> fit_per_model(const LearningCurveTable& table, const std::vector<ItemDifficulty>& difficulties,
                                         const LogisticOptions& options = {});

/// d(log-odds)/d t(s) at difficulty b: beta1 + beta3 b.
double odds_growth_rate(const RegressionFit& fit, double difficulty);

struct ContourGrid {
    std::vector<double> sizes;         // log-spaced
    std::vector<double> difficulties;  // linear
    /// log_odds[d * sizes.size() + s]
    std::vector<double> log_odds;

    double at(std::size_t size_index, std::size_t difficulty_index) const {
        return log_odds[difficulty_index * sizes.size() + size_index];
    }
    /// `size,difficulty,log_odds`
    void write_csv(std::ostream& out) const;
    /// Self-contained heatmap.
    void write_svg(std::ostream& out) const;
};

ContourGrid contour_grid(const RegressionFit& fit, double size_min, double size_max, double difficulty_min,
                         double difficulty_max, std::size_t size_points, std::size_t difficulty_points);

std::string fits_to_json_text(const std::vector<RegressionFit>& fits);
std::vector<RegressionFit> parse_fits_json(const std::string& text, const std::string& source);

}  // namespace irtkit
