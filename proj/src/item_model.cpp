#include "irtkit/item_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "irtkit/error.hpp"

namespace irtkit {

void validate(const ItemParameters& params) {
    if (!std::isfinite(params.a) || !std::isfinite(params.b) || !std::isfinite(params.c)) {
        throw ValidationError("item parameters must be finite");
    }
    if (params.a <= 0.0) {
        throw ValidationError("discrimination a must be positive, got " + std::to_string(params.a));
    }
    if (params.c < 0.0 || params.c >= 1.0) {
        throw ValidationError("guessing c must lie in [0, 1), got " + std::to_string(params.c));
    }
}

LogisticPair logistic(double z) noexcept {
    const double e = std::exp(-std::abs(z));
    const double large = 1.0 / (1.0 + e);
    const double small = e / (1.0 + e);
    return z >= 0.0 ? LogisticPair{large, small} : LogisticPair{small, large};
}

ResponseProbability icc_unchecked(const ItemParameters& params, double theta) noexcept {
    const double z = params.a * (theta - params.b);
    const double e = std::exp(-std::abs(z));
    const double large = 1.0 / (1.0 + e);
    const double small = e / (1.0 + e);
    if (z >= 0.0) {
        // tanh(z / 2) vanishes at the midpoint, so p there is exactly (1 + c) / 2.
        const double spread = -std::expm1(-z) / (1.0 + e);
        return {0.5 * (1.0 + params.c) + 0.5 * (1.0 - params.c) * spread, (1.0 - params.c) * small};
    }
    return {params.c + (1.0 - params.c) * small, (1.0 - params.c) * large};
}

namespace {

void check_theta(double theta) {
    if (!std::isfinite(theta)) throw ValidationError("theta must be finite");
}

}  // namespace

double icc_probability(const ItemParameters& params, double theta) {
    validate(params);
    check_theta(theta);
    return icc_unchecked(params, theta).p;
}

double response_log_likelihood(const ItemParameters& params, double theta, int y) {
    validate(params);
    check_theta(theta);
    if (y != 0 && y != 1) throw ValidationError("response must be 0 or 1");
    const auto [p, q] = icc_unchecked(params, theta);
    const double v = y == 1 ? p : q;
    return std::log(std::clamp(v, kProbabilityFloor, 1.0 - kProbabilityFloor));
}

std::array<double, 3> icc_gradient(const ItemParameters& params, double theta, int y) {
    validate(params);
    check_theta(theta);
    if (y != 0 && y != 1) throw ValidationError("response must be 0 or 1");
    const auto [a, b, c] = params;
    const double d = theta - b;
    const auto sig = logistic(a * d);
    const auto [p, q] = icc_unchecked(params, theta);
    const double pc = std::max(p, kProbabilityFloor);
    const double qc = std::max(q, kProbabilityFloor);
    if (y == 1) {
        // dp = (1 - c) s (1 - s) * (d, -a) and (1 - s) for c.
        const double w = (1.0 - c) * sig.value * sig.complement / pc;
        return {w * d, -w * a, sig.complement / pc};
    }
    // q = (1 - c)(1 - s), so the ratios simplify.
    const double w = (1.0 - c) * sig.value * sig.complement / qc;
    return {-w * d, w * a, -sig.complement / qc};
}

}  // namespace irtkit
