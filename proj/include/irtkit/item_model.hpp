#pragma once

// Three-parameter logistic item characteristic curve and its log-likelihood.

#include <array>
#include <string>
#include <vector>

namespace irtkit {

/// Natural-scale parameters of one item: discrimination a > 0, difficulty b,
/// lower asymptote (guessing) 0 <= c < 1.
struct ItemParameters {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;

    friend bool operator==(const ItemParameters&, const ItemParameters&) = default;
};

/// Item parameters tagged with the item identifier they belong to.
struct NamedItem {
    std::string item_id;
    ItemParameters params;
};

/// Throws ValidationError unless a > 0, 0 <= c < 1 and all fields are finite.
void validate(const ItemParameters& params);

/// Probabilities are clamped into [kProbabilityFloor, 1 - kProbabilityFloor]
/// before any logarithm is taken.
inline constexpr double kProbabilityFloor = 1e-12;

/// Probability of a correct response and its complement, each computed
/// without cancellation.
struct ResponseProbability {
    double p;
    double q;
};

/// Evaluates the curve without validating parameters. Used by inner loops
/// that have already validated.
ResponseProbability icc_unchecked(const ItemParameters& params, double theta) noexcept;

/// c + (1 - c) / (1 + exp(-a (theta - b))). Exactly (1 + c) / 2 at theta == b.
double icc_probability(const ItemParameters& params, double theta);

/// y log p + (1 - y) log(1 - p) with p clamped to the probability floor.
double response_log_likelihood(const ItemParameters& params, double theta, int y);

/// Partial derivatives of response_log_likelihood with respect to (a, b, c).
std::array<double, 3> icc_gradient(const ItemParameters& params, double theta, int y);

/// Logistic sigma(z) and 1 - sigma(z), both to full relative precision.
struct LogisticPair {
    double value;
    double complement;
};
LogisticPair logistic(double z) noexcept;

}  // namespace irtkit
