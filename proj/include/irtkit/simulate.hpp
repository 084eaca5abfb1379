#pragma once

// Generative counterparts of the calibration and analysis inputs.
//
// Random streams: every simulated entity (a respondent, or one learner at one
// training size and replication) owns a std::mt19937_64 seeded through
// std::seed_seq from (seed, stream domain, entity indices). Entities draw in a
// fixed item order, so output depends only on the seed, never on scheduling.
// Normal and uniform variates come from Boost.Random, whose algorithms are
// platform independent.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "irtkit/curves.hpp"
#include "irtkit/item_model.hpp"
#include "irtkit/response_matrix.hpp"

namespace irtkit {

/// Independent engine for the stream identified by `ids` under `seed`.
std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

struct ItemRanges {
    double a_lo = 0.5, a_hi = 2.5;
    double b_lo = -3.0, b_hi = 3.0;
    double c_lo = 0.0, c_hi = 0.35;

    void validate() const;
};

/// `count` items with parameters uniform in `ranges`, ids item001, item002, ...
std::vector<NamedItem> random_items(std::size_t count, const ItemRanges& ranges, std::uint64_t seed);

struct SimPopulationConfig {
    std::size_t n_respondents = 2000;
    double theta_mean = 0.0;
    double theta_sd = 1.0;
    std::uint64_t seed = 7;
    unsigned threads = 1;

    void validate() const;
};

struct SimulatedPopulation {
    ResponseMatrix matrix;
    std::vector<double> thetas;
};

/// Each cell ~ Bernoulli(p_ij(theta_j)) with theta_j ~ N(mean, sd^2).
SimulatedPopulation simulate_population(const std::vector<NamedItem>& items, const SimPopulationConfig& config);
ResponseMatrix simulate_responses(const std::vector<NamedItem>& items, const SimPopulationConfig& config);

/// Training sizes sampled for NLI in the original experiments.
std::vector<std::uint64_t> default_training_sizes();

/// Synthetic learner with ability theta(s) = alpha + beta * ln(s / s_max).
struct SyntheticLearnerConfig {
    std::vector<std::uint64_t> sizes = default_training_sizes();
    double alpha = -1.0;
    double beta = 0.4;
    /// Each item's c is raised to at least this value.
    double guessing_floor = 0.0;
    int replications = 200;
    std::string model_name = "synthetic";
    std::uint64_t seed = 7;
    unsigned threads = 1;

    void validate() const;
    double ability(std::uint64_t size) const;
};

/// Rows ordered by size, then replication, then item.
LearningCurveTable simulate_learning_curves(const std::vector<NamedItem>& items, const SyntheticLearnerConfig& config);

}  // namespace irtkit
