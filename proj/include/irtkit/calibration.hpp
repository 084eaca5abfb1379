#pragma once

// Marginal maximum likelihood calibration of item parameters by EM.

#include <cstdint>
#include <string>
#include <vector>

#include "irtkit/io.hpp"
#include "irtkit/item_model.hpp"
#include "irtkit/quadrature.hpp"
#include "irtkit/response_matrix.hpp"

namespace irtkit {

enum class ModelKind { OnePL, TwoPL, ThreePL };

std::string to_string(ModelKind kind);
/// Accepts "1pl", "2pl", "3pl" (case-insensitive).
ModelKind parse_model_kind(const std::string& text);

/// Stabilizing priors. Only applied to 3PL fits: log a ~ N(log_a_mean,
/// log_a_sd^2) and c ~ Beta(c_alpha, c_beta). b has a flat prior.
struct ItemPriors {
    double log_a_mean = 0.0;
    double log_a_sd = 0.5;
    double c_alpha = 2.0;
    double c_beta = 8.0;
};

struct CalibrationConfig {
    ModelKind model = ModelKind::ThreePL;
    std::size_t quad_points = 41;
    double quad_lo = -4.0;
    double quad_hi = 4.0;
    ItemPriors priors;
    /// Guessing start value is half of this.
    double chance_rate = 0.25;
    double tolerance = 1e-4;
    int max_iterations = 500;
    std::uint64_t seed = 7;
    unsigned threads = 1;

    void validate() const;
};

struct CalibrationResult {
    std::vector<NamedItem> items;
    double log_likelihood = 0.0;            // marginal, at the returned parameters
    double penalized_log_likelihood = 0.0;  // plus log priors
    int iterations = 0;
    bool converged = false;
    /// Penalized marginal log-likelihood before each M-step, followed by the
    /// value at the returned parameters.
    std::vector<double> trace;
};

/// Sum over respondents of log sum_k w_k prod_i p^y q^(1-y), skipping missing
/// cells. `params` must cover exactly the matrix's items (matched by item_id).
double marginal_log_likelihood(const ResponseMatrix& matrix, const std::vector<NamedItem>& params,
                               const QuadratureGrid& grid);

/// Bock-Aitkin EM with a per-item damped Newton M-step.
CalibrationResult fit_em(const ResponseMatrix& matrix, const CalibrationConfig& config);

/// Log prior density of one item's (a, c) under `priors`, dropping constants.
double log_prior(const ItemParameters& params, const ItemPriors& priors);

std::vector<ItemDifficulty> extract_difficulties(const CalibrationResult& result);

}  // namespace irtkit
