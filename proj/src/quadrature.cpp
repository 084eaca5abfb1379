#include "irtkit/quadrature.hpp"

#include <cmath>
#include <numeric>

#include "irtkit/error.hpp"

namespace irtkit {

QuadratureGrid::QuadratureGrid(std::vector<double> nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
    if (nodes_.empty() || nodes_.size() != weights_.size()) {
        throw ValidationError("quadrature nodes and weights must be non-empty and of equal length");
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (!std::isfinite(nodes_[k]) || !(weights_[k] > 0.0)) {
            throw ValidationError("quadrature nodes must be finite and weights positive");
        }
        if (k > 0 && !(nodes_[k] > nodes_[k - 1])) {
            throw ValidationError("quadrature nodes must be strictly increasing");
        }
    }
    const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("quadrature weights must sum to 1");
    }
}

QuadratureGrid QuadratureGrid::standard_normal(std::size_t points, double lo, double hi) {
    if (points < 2 || !(hi > lo)) throw ValidationError("invalid quadrature range or point count");
    std::vector<double> nodes(points);
    std::vector<double> weights(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    double total = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        nodes[k] = k + 1 == points ? hi : lo + step * static_cast<double>(k);
        // Trapezoid weights: the end nodes carry half a cell each.
        weights[k] = std::exp(-0.5 * nodes[k] * nodes[k]) * (k == 0 || k + 1 == points ? 0.5 : 1.0);
        total += weights[k];
    }
    for (double& w : weights) w /= total;
    return QuadratureGrid(std::move(nodes), std::move(weights));
}

}  // namespace irtkit
