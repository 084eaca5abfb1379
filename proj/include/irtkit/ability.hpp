#pragma once

// Expected-a-posteriori scoring of a response pattern against calibrated items.

#include <cstddef>
#include <string>
#include <vector>

#include "irtkit/item_model.hpp"
#include "irtkit/quadrature.hpp"

namespace irtkit {

struct PatternResponse {
    std::string item_id;
    int response = 0;
};

struct AbilityEstimate {
    double theta = 0.0;
    double posterior_sd = 0.0;
    std::size_t n_items_used = 0;
};

/// Posterior mean and standard deviation of theta over `grid`. The pattern
/// is scored in item_id order, so permuting it cannot change the result.
/// Throws ValidationError for an empty pattern, an unknown or repeated
/// item_id, or a response other than 0/1.
AbilityEstimate estimate_ability(const std::vector<PatternResponse>& pattern, const std::vector<NamedItem>& params,
                                 const QuadratureGrid& grid = QuadratureGrid::standard_normal());

/// 100 * Phi(theta).
double theta_percentile(const AbilityEstimate& estimate);

/// `item_id,response` CSV.
std::vector<PatternResponse> parse_pattern_csv(const std::string& text, const std::string& source);

}  // namespace irtkit
