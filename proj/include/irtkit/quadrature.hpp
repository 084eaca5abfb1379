#pragma once

#include <cstddef>
#include <vector>

namespace irtkit {

/// Discrete latent-ability prior: nodes strictly increasing, weights positive
/// and summing to one.
class QuadratureGrid {
public:
    QuadratureGrid(std::vector<double> nodes, std::vector<double> weights);

    /// Equally spaced nodes on [lo, hi] with trapezoid-rule weights for the
    /// standard normal density (end nodes halved), normalized to sum to 1.
    static QuadratureGrid standard_normal(std::size_t points = 41, double lo = -4.0, double hi = 4.0);

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace irtkit
