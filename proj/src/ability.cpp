#include "irtkit/ability.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "irtkit/csv.hpp"
#include "irtkit/error.hpp"

namespace irtkit {

AbilityEstimate estimate_ability(const std::vector<PatternResponse>& pattern, const std::vector<NamedItem>& params,
                                 const QuadratureGrid& grid) {
    if (pattern.empty()) throw ValidationError("response pattern is empty");
    std::unordered_map<std::string, const ItemParameters*> lookup;
    for (const auto& item : params) lookup.emplace(item.item_id, &item.params);

    std::vector<const PatternResponse*> ordered;
    ordered.reserve(pattern.size());
    for (const auto& r : pattern) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const PatternResponse* x, const PatternResponse* y) { return x->item_id < y->item_id; });

    const std::size_t K = grid.size();
    std::vector<double> log_post(K);
    for (std::size_t k = 0; k < K; ++k) log_post[k] = std::log(grid.weights()[k]);
    for (std::size_t n = 0; n < ordered.size(); ++n) {
        const auto& r = *ordered[n];
        if (n > 0 && ordered[n - 1]->item_id == r.item_id) {
            throw ValidationError("item '" + r.item_id + "' appears twice in the pattern");
        }
        const auto it = lookup.find(r.item_id);
        if (it == lookup.end()) throw ValidationError("unknown item_id '" + r.item_id + "'");
        if (r.response != 0 && r.response != 1) throw ValidationError("response must be 0 or 1");
        validate(*it->second);
        for (std::size_t k = 0; k < K; ++k) {
            const auto [p, q] = icc_unchecked(*it->second, grid.nodes()[k]);
            const double v = r.response == 1 ? p : q;
            log_post[k] += std::log(std::clamp(v, kProbabilityFloor, 1.0 - kProbabilityFloor));
        }
    }

    const double peak = *std::max_element(log_post.begin(), log_post.end());
    double total = 0.0;
    double first = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        log_post[k] = std::exp(log_post[k] - peak);
        total += log_post[k];
        first += log_post[k] * grid.nodes()[k];
    }
    const double mean = first / total;
    double second = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double d = grid.nodes()[k] - mean;
        second += log_post[k] * d * d;
    }
    return {mean, std::sqrt(second / total), pattern.size()};
}

double theta_percentile(const AbilityEstimate& estimate) {
    return 50.0 * std::erfc(-estimate.theta / std::sqrt(2.0));
}

std::vector<PatternResponse> parse_pattern_csv(const std::string& text, const std::string& source) {
    const auto table = csv::parse(text, source);
    csv::expect_header(table, {"item_id", "response"}, source);
    std::vector<PatternResponse> out;
    for (const auto& row : table.rows) {
        const auto v = csv::parse_integer(row.fields[1], row.line, source);
        if (v != 0 && v != 1) {
            throw ValidationError(source + ":" + std::to_string(row.line) + ": response must be 0 or 1");
        }
        out.push_back({csv::trim(row.fields[0]), static_cast<int>(v)});
    }
    return out;
}

}  // namespace irtkit
