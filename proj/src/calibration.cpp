#include "irtkit/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "irtkit/error.hpp"
#include "irtkit/parallel.hpp"

namespace irtkit {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::OnePL: return "1pl";
        case ModelKind::TwoPL: return "2pl";
        case ModelKind::ThreePL: return "3pl";
    }
    return "3pl";
}

ModelKind parse_model_kind(const std::string& text) {
    std::string s = text;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "1pl") return ModelKind::OnePL;
    if (s == "2pl") return ModelKind::TwoPL;
    if (s == "3pl") return ModelKind::ThreePL;
    throw ValidationError("unknown model '" + text + "' (expected 1pl, 2pl or 3pl)");
}

void CalibrationConfig::validate() const {
    if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
    if (quad_points < 11) throw ValidationError("quadrature needs at least 11 points");
    if (max_iterations < 1) throw ValidationError("max iterations must be at least 1");
    if (!(quad_hi > quad_lo)) throw ValidationError("quadrature range is empty");
    if (!(chance_rate >= 0.0 && chance_rate < 1.0)) throw ValidationError("chance rate must lie in [0, 1)");
    if (!(priors.log_a_sd > 0.0) || !(priors.c_alpha >= 1.0) || !(priors.c_beta >= 1.0)) {
        throw ValidationError("invalid prior settings");
    }
}

double log_prior(const ItemParameters& params, const ItemPriors& priors) {
    const double la = std::log(params.a);
    const double z = (la - priors.log_a_mean) / priors.log_a_sd;
    double lp = -0.5 * z * z - la;
    lp += (priors.c_alpha - 1.0) * std::log(params.c) + (priors.c_beta - 1.0) * std::log1p(-params.c);
    return lp;
}

namespace {

std::vector<ItemParameters> align(const ResponseMatrix& matrix, const std::vector<NamedItem>& params) {
    if (params.size() != matrix.items()) {
        throw ValidationError("parameter set does not match the response matrix items");
    }
    std::vector<ItemParameters> out(matrix.items());
    std::vector<bool> seen(matrix.items(), false);
    for (const auto& item : params) {
        const auto idx = matrix.item_index(item.item_id);
        if (!idx) throw ValidationError("no responses for item '" + item.item_id + "'");
        if (seen[*idx]) throw ValidationError("duplicate parameters for item '" + item.item_id + "'");
        validate(item.params);
        seen[*idx] = true;
        out[*idx] = item.params;
    }
    return out;
}

double clamp_prob(double v) { return std::clamp(v, kProbabilityFloor, 1.0 - kProbabilityFloor); }

// Log p and log q for every (item, node), item-major.
struct NodeTables {
    std::vector<double> log_p;
    std::vector<double> log_q;
};

NodeTables node_tables(const std::vector<ItemParameters>& items, const QuadratureGrid& grid) {
    const std::size_t K = grid.size();
    NodeTables t{std::vector<double>(items.size() * K), std::vector<double>(items.size() * K)};
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            const auto [p, q] = icc_unchecked(items[i], grid.nodes()[k]);
            t.log_p[i * K + k] = std::log(clamp_prob(p));
            t.log_q[i * K + k] = std::log(clamp_prob(q));
        }
    }
    return t;
}

struct EStep {
    double log_likelihood = 0.0;
    std::vector<double> expected_correct;  // items x nodes
    std::vector<double> expected_total;    // items x nodes
};

// Posterior over nodes for respondent j (written into `post`), returning the
// log marginal likelihood of its pattern.
double respondent_posterior(const ResponseMatrix& m, std::size_t j, const NodeTables& t,
                            const QuadratureGrid& grid, double* post) {
    const std::size_t K = grid.size();
    for (std::size_t k = 0; k < K; ++k) post[k] = std::log(grid.weights()[k]);
    for (std::size_t i = 0; i < m.items(); ++i) {
        const auto y = m.at(j, i);
        if (y == ResponseMatrix::kMissing) continue;
        const double* row = (y == 1 ? t.log_p.data() : t.log_q.data()) + i * K;
        for (std::size_t k = 0; k < K; ++k) post[k] += row[k];
    }
    const double peak = *std::max_element(post, post + K);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        post[k] = std::exp(post[k] - peak);
        total += post[k];
    }
    for (std::size_t k = 0; k < K; ++k) post[k] /= total;
    return peak + std::log(total);
}

EStep e_step(const ResponseMatrix& m, const std::vector<ItemParameters>& items, const QuadratureGrid& grid,
             unsigned threads, bool with_counts) {
    const std::size_t K = grid.size();
    const std::size_t N = m.respondents();
    const auto tables = node_tables(items, grid);
    std::vector<double> posterior(N * K);
    std::vector<double> log_marginal(N);
    parallel_for(N, threads, [&](std::size_t j) {
        log_marginal[j] = respondent_posterior(m, j, tables, grid, posterior.data() + j * K);
    });
    EStep out;
    for (double v : log_marginal) out.log_likelihood += v;
    if (!with_counts) return out;
    out.expected_correct.assign(m.items() * K, 0.0);
    out.expected_total.assign(m.items() * K, 0.0);
    parallel_for(m.items(), threads, [&](std::size_t i) {
        double* r = out.expected_correct.data() + i * K;
        double* n = out.expected_total.data() + i * K;
        for (std::size_t j = 0; j < N; ++j) {
            const auto y = m.at(j, i);
            if (y == ResponseMatrix::kMissing) continue;
            const double* post = posterior.data() + j * K;
            for (std::size_t k = 0; k < K; ++k) n[k] += post[k];
            if (y == 1) {
                for (std::size_t k = 0; k < K; ++k) r[k] += post[k];
            }
        }
    });
    return out;
}

// Unconstrained coordinates: (log a, b, logit c).
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Objective {
    double value = 0.0;
    Vec3 gradient = Vec3::Zero();
    Mat3 hessian = Mat3::Zero();
};

ItemParameters to_natural(const Vec3& u, ModelKind model) {
    ItemParameters p;
    p.b = u[1];
    p.a = model == ModelKind::OnePL ? 1.0 : std::exp(u[0]);
    p.c = model == ModelKind::ThreePL ? logistic(u[2]).value : 0.0;
    return p;
}

Vec3 to_unconstrained(const ItemParameters& p, ModelKind model) {
    Vec3 u;
    u[0] = std::log(p.a);
    u[1] = p.b;
    u[2] = model == ModelKind::ThreePL ? std::log(p.c) - std::log1p(-p.c) : 0.0;
    return u;
}

// Expected complete-data log-likelihood of one item plus its log prior.
Objective item_objective(const Vec3& u, ModelKind model, const ItemPriors& priors, bool use_priors,
                         const double* r, const double* n, const QuadratureGrid& grid, bool derivatives) {
    const ItemParameters par = to_natural(u, model);
    const double a = par.a;
    const double c = par.c;
    Objective obj;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (n[k] == 0.0) continue;
        const double theta = grid.nodes()[k];
        const auto [p, q] = icc_unchecked(par, theta);
        const double pc = clamp_prob(p);
        const double qc = clamp_prob(q);
        const double wrong = n[k] - r[k];
        obj.value += r[k] * std::log(pc) + wrong * std::log(qc);
        if (!derivatives) continue;

        const double z = a * (theta - par.b);
        const auto sig = logistic(z);
        const double s = sig.value * sig.complement;
        const double s1 = s * (sig.complement - sig.value);
        const double cc = c * (1.0 - c);
        Vec3 dp;
        dp << (1.0 - c) * s * z, -(1.0 - c) * s * a, cc * sig.complement;
        Mat3 d2p;
        d2p(0, 0) = (1.0 - c) * (s1 * z * z + s * z);
        d2p(0, 1) = d2p(1, 0) = -(1.0 - c) * a * (s1 * z + s);
        d2p(1, 1) = (1.0 - c) * a * a * s1;
        d2p(0, 2) = d2p(2, 0) = -cc * s * z;
        d2p(1, 2) = d2p(2, 1) = cc * s * a;
        d2p(2, 2) = sig.complement * cc * (1.0 - 2.0 * c);
        const double g1 = r[k] / pc - wrong / qc;
        const double g2 = -r[k] / (pc * pc) - wrong / (qc * qc);
        obj.gradient += g1 * dp;
        obj.hessian += g2 * dp * dp.transpose() + g1 * d2p;
    }
    if (use_priors) {
        const double var = priors.log_a_sd * priors.log_a_sd;
        const double dev = u[0] - priors.log_a_mean;
        obj.value += log_prior(par, priors);
        obj.gradient[0] += -dev / var - 1.0;
        obj.hessian(0, 0) += -1.0 / var;
        obj.gradient[2] += (priors.c_alpha - 1.0) * (1.0 - c) - (priors.c_beta - 1.0) * c;
        obj.hessian(2, 2) += -(priors.c_alpha + priors.c_beta - 2.0) * c * (1.0 - c);
    }
    return obj;
}

// Coordinates optimized for each model.
std::vector<int> active_coordinates(ModelKind model) {
    switch (model) {
        case ModelKind::OnePL: return {1};
        case ModelKind::TwoPL: return {0, 1};
        case ModelKind::ThreePL: return {0, 1, 2};
    }
    return {0, 1, 2};
}

constexpr int kNewtonIterations = 25;
constexpr int kMaxHalvings = 10;

ItemParameters m_step_item(const ItemParameters& start, ModelKind model, const ItemPriors& priors,
                           const double* r, const double* n, const QuadratureGrid& grid) {
    const bool use_priors = model == ModelKind::ThreePL;
    const auto active = active_coordinates(model);
    const int d = static_cast<int>(active.size());
    Vec3 u = to_unconstrained(start, model);
    auto current = item_objective(u, model, priors, use_priors, r, n, grid, true);

    for (int iter = 0; iter < kNewtonIterations; ++iter) {
        Eigen::VectorXd g(d);
        Eigen::MatrixXd h(d, d);
        for (int x = 0; x < d; ++x) {
            g[x] = current.gradient[active[x]];
            for (int y = 0; y < d; ++y) h(x, y) = current.hessian(active[x], active[y]);
        }
        if (g.cwiseAbs().maxCoeff() < 1e-10) break;

        Eigen::VectorXd step;
        Eigen::LLT<Eigen::MatrixXd> llt(-h);
        if (llt.info() == Eigen::Success) {
            step = llt.solve(g);
        } else {
            // Not concave here: one gradient-ascent step instead.
            step = g / std::max(1.0, g.norm());
        }
        // Keep a single trial step from jumping across the whole latent scale.
        const double biggest = step.cwiseAbs().maxCoeff();
        if (biggest > 2.0) step *= 2.0 / biggest;

        bool improved = false;
        double scale = 1.0;
        for (int halving = 0; halving <= kMaxHalvings; ++halving, scale *= 0.5) {
            Vec3 trial = u;
            for (int x = 0; x < d; ++x) trial[active[x]] += scale * step[x];
            const auto next = item_objective(trial, model, priors, use_priors, r, n, grid, false);
            if (std::isfinite(next.value) && next.value >= current.value) {
                u = trial;
                improved = true;
                break;
            }
        }
        if (!improved) break;
        current = item_objective(u, model, priors, use_priors, r, n, grid, true);
        if (scale * step.cwiseAbs().maxCoeff() < 1e-10) break;
    }
    return to_natural(u, model);
}

double total_log_prior(const std::vector<ItemParameters>& items, const CalibrationConfig& config) {
    if (config.model != ModelKind::ThreePL) return 0.0;
    double lp = 0.0;
    for (const auto& p : items) lp += log_prior(p, config.priors);
    return lp;
}

ItemParameters initial_parameters(const ResponseMatrix& m, std::size_t i, const CalibrationConfig& config) {
    std::size_t correct = 0;
    std::size_t observed = 0;
    for (std::size_t j = 0; j < m.respondents(); ++j) {
        const auto y = m.at(j, i);
        if (y == ResponseMatrix::kMissing) continue;
        ++observed;
        correct += static_cast<std::size_t>(y);
    }
    const double proportion = std::clamp(static_cast<double>(correct) / static_cast<double>(observed), 1e-3, 1.0 - 1e-3);
    const boost::math::normal standard;
    ItemParameters p;
    p.a = 1.0;
    p.b = -boost::math::quantile(standard, proportion);
    p.c = config.model == ModelKind::ThreePL ? 0.5 * config.chance_rate : 0.0;
    if (config.model == ModelKind::ThreePL && p.c <= 0.0) p.c = 1e-3;
    return p;
}

}  // namespace

double marginal_log_likelihood(const ResponseMatrix& matrix, const std::vector<NamedItem>& params,
                               const QuadratureGrid& grid) {
    const auto items = align(matrix, params);
    return e_step(matrix, items, grid, 1, false).log_likelihood;
}

namespace {

// EM on a matrix whose columns are already in canonical (item_id) order.
CalibrationResult fit_em_sorted(const ResponseMatrix& matrix, const CalibrationConfig& config) {
    const auto grid = QuadratureGrid::standard_normal(config.quad_points, config.quad_lo, config.quad_hi);
    const std::size_t K = grid.size();

    std::vector<ItemParameters> items(matrix.items());
    for (std::size_t i = 0; i < matrix.items(); ++i) items[i] = initial_parameters(matrix, i, config);

    CalibrationResult result;
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        const auto e = e_step(matrix, items, grid, config.threads, true);
        result.trace.push_back(e.log_likelihood + total_log_prior(items, config));

        std::vector<ItemParameters> next(items.size());
        parallel_for(items.size(), config.threads, [&](std::size_t i) {
            next[i] = m_step_item(items[i], config.model, config.priors, e.expected_correct.data() + i * K,
                                  e.expected_total.data() + i * K, grid);
        });
        double change = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            change = std::max({change, std::abs(next[i].a - items[i].a), std::abs(next[i].b - items[i].b),
                               std::abs(next[i].c - items[i].c)});
        }
        items = std::move(next);
        result.iterations = iter;
        if (change < config.tolerance) {
            result.converged = true;
            break;
        }
    }

    const auto final_e = e_step(matrix, items, grid, config.threads, false);
    result.log_likelihood = final_e.log_likelihood;
    result.penalized_log_likelihood = final_e.log_likelihood + total_log_prior(items, config);
    result.trace.push_back(result.penalized_log_likelihood);
    result.items.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) result.items.push_back({matrix.item_ids()[i], items[i]});
    return result;
}

}  // namespace

CalibrationResult fit_em(const ResponseMatrix& matrix, const CalibrationConfig& config) {
    config.validate();
    matrix.validate_for_calibration();
    // Per-respondent likelihood products run in item_id order, so a column
    // permutation of the input cannot change a single bit of the result.
    std::vector<std::size_t> order(matrix.items());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return matrix.item_ids()[x] < matrix.item_ids()[y]; });
    auto result = fit_em_sorted(matrix.with_item_order(order), config);
    std::vector<NamedItem> restored(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) restored[order[k]] = std::move(result.items[k]);
    result.items = std::move(restored);
    return result;
}

std::vector<ItemDifficulty> extract_difficulties(const CalibrationResult& result) {
    std::vector<ItemDifficulty> out;
    out.reserve(result.items.size());
    for (const auto& item : result.items) out.push_back({item.item_id, item.params.b});
    return out;
}

}  // namespace irtkit
