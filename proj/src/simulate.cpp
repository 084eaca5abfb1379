#include "irtkit/simulate.hpp"

#include <cmath>
#include <cstdio>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "irtkit/error.hpp"
#include "irtkit/parallel.hpp"

namespace irtkit {

namespace {

// Stream domains keep populations, item draws and learners independent.
enum StreamDomain : std::uint64_t { kItemStream = 1, kRespondentStream = 2, kLearnerStream = 3 };

std::string padded_id(const char* prefix, std::size_t index, std::size_t count) {
    int width = 1;
    for (std::size_t n = count; n >= 10; n /= 10) ++width;
    width = std::max(width, 3);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, index + 1);
    return buf;
}

int bernoulli(std::mt19937_64& engine, double p) {
    boost::random::uniform_01<double> u;
    return u(engine) < p ? 1 : 0;
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (auto id : ids) {
        words.push_back(static_cast<std::uint32_t>(id));
        words.push_back(static_cast<std::uint32_t>(id >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

void ItemRanges::validate() const {
    if (!(a_lo > 0.0 && a_hi >= a_lo)) throw ValidationError("discrimination range must be positive and ordered");
    if (!(b_hi >= b_lo) || !std::isfinite(b_lo) || !std::isfinite(b_hi)) throw ValidationError("invalid difficulty range");
    if (!(c_lo >= 0.0 && c_hi >= c_lo && c_hi < 1.0)) throw ValidationError("guessing range must lie in [0, 1)");
}

std::vector<NamedItem> random_items(std::size_t count, const ItemRanges& ranges, std::uint64_t seed) {
    ranges.validate();
    auto engine = make_stream(seed, {kItemStream});
    boost::random::uniform_01<double> u;
    std::vector<NamedItem> items;
    items.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        ItemParameters p;
        p.a = ranges.a_lo + (ranges.a_hi - ranges.a_lo) * u(engine);
        p.b = ranges.b_lo + (ranges.b_hi - ranges.b_lo) * u(engine);
        p.c = ranges.c_lo + (ranges.c_hi - ranges.c_lo) * u(engine);
        items.push_back({padded_id("item", i, count), p});
    }
    return items;
}

void SimPopulationConfig::validate() const {
    if (n_respondents < 1) throw ValidationError("need at least one respondent");
    if (!(theta_sd > 0.0) || !std::isfinite(theta_mean)) throw ValidationError("invalid ability distribution");
}

SimulatedPopulation simulate_population(const std::vector<NamedItem>& items, const SimPopulationConfig& config) {
    config.validate();
    std::vector<std::string> item_ids;
    for (const auto& item : items) {
        validate(item.params);
        item_ids.push_back(item.item_id);
    }
    std::vector<std::string> respondent_ids;
    respondent_ids.reserve(config.n_respondents);
    for (std::size_t j = 0; j < config.n_respondents; ++j) {
        respondent_ids.push_back(padded_id("r", j, config.n_respondents));
    }
    SimulatedPopulation out{ResponseMatrix(std::move(respondent_ids), std::move(item_ids)),
                            std::vector<double>(config.n_respondents)};
    std::vector<std::int8_t> cells(config.n_respondents * items.size());
    parallel_for(config.n_respondents, config.threads, [&](std::size_t j) {
        auto engine = make_stream(config.seed, {kRespondentStream, j});
        boost::random::normal_distribution<double> normal(config.theta_mean, config.theta_sd);
        const double theta = normal(engine);
        out.thetas[j] = theta;
        for (std::size_t i = 0; i < items.size(); ++i) {
            cells[j * items.size() + i] = static_cast<std::int8_t>(bernoulli(engine, icc_unchecked(items[i].params, theta).p));
        }
    });
    for (std::size_t j = 0; j < config.n_respondents; ++j) {
        for (std::size_t i = 0; i < items.size(); ++i) out.matrix.set(j, i, cells[j * items.size() + i]);
    }
    return out;
}

ResponseMatrix simulate_responses(const std::vector<NamedItem>& items, const SimPopulationConfig& config) {
    return simulate_population(items, config).matrix;
}

std::vector<std::uint64_t> default_training_sizes() {
    return {100, 1000, 2000, 5000, 10000, 50000, 100000, 200000, 500000};
}

void SyntheticLearnerConfig::validate() const {
    if (sizes.empty()) throw ValidationError("need at least one training size");
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] == 0) throw ValidationError("training sizes must be positive");
        if (k > 0 && sizes[k] <= sizes[k - 1]) throw ValidationError("training sizes must be strictly increasing");
    }
    if (!(beta >= 0.0) || !std::isfinite(alpha)) throw ValidationError("learner curve needs finite alpha and beta >= 0");
    if (!(guessing_floor >= 0.0 && guessing_floor < 1.0)) throw ValidationError("guessing floor must lie in [0, 1)");
    if (replications < 1) throw ValidationError("need at least one replication");
    if (model_name.empty()) throw ValidationError("model name must not be empty");
}

double SyntheticLearnerConfig::ability(std::uint64_t size) const {
    return alpha + beta * std::log(static_cast<double>(size) / static_cast<double>(sizes.back()));
}

LearningCurveTable simulate_learning_curves(const std::vector<NamedItem>& items, const SyntheticLearnerConfig& config) {
    config.validate();
    std::vector<ItemParameters> params;
    for (const auto& item : items) {
        validate(item.params);
        auto p = item.params;
        p.c = std::max(p.c, config.guessing_floor);
        params.push_back(p);
    }
    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t runs = config.sizes.size() * reps;
    std::vector<int> correct(runs * items.size());
    parallel_for(runs, config.threads, [&](std::size_t run) {
        const std::size_t size_index = run / reps;
        const std::size_t rep = run % reps;
        auto engine = make_stream(config.seed, {kLearnerStream, size_index, rep});
        const double theta = config.ability(config.sizes[size_index]);
        for (std::size_t i = 0; i < items.size(); ++i) {
            correct[run * items.size() + i] = bernoulli(engine, icc_unchecked(params[i], theta).p);
        }
    });
    LearningCurveTable table;
    table.rows.reserve(correct.size());
    for (std::size_t run = 0; run < runs; ++run) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            table.rows.push_back({config.model_name, config.sizes[run / reps], items[i].item_id,
                                  correct[run * items.size() + i], static_cast<int>(run % reps)});
        }
    }
    return table;
}

}  // namespace irtkit
