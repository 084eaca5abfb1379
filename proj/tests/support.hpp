#pragma once

// Reference computations shared by the unit and acceptance suites. They are
// deliberately naive: direct formulas, dense grids, brute-force search.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace support {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(IRTKIT_FIXTURE_DIR) / name; }

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() / ("irtkit_" + tag + "_" + std::to_string(rng()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// 3PL probability straight from the textbook formula.
inline double naive_icc(double a, double b, double c, double theta) {
    return c + (1.0 - c) / (1.0 + std::exp(-a * (theta - b)));
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Trapezoid rule of f over [lo, hi] on `points` equally spaced nodes.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, int points) {
    const double h = (hi - lo) / (points - 1);
    double sum = 0.5 * (f(lo) + f(hi));
    for (int k = 1; k < points - 1; ++k) sum += f(lo + k * h);
    return sum * h;
}

struct Item3 {
    double a, b, c;
};

/// Posterior mean and sd of theta under N(0,1) by dense trapezoid integration.
inline std::pair<double, double> dense_eap(const std::vector<Item3>& items, const std::vector<int>& y, double lo = -4.0,
                                           double hi = 4.0, int points = 10001) {
    auto like = [&](double t) {
        double l = normal_pdf(t);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double p = naive_icc(items[i].a, items[i].b, items[i].c, t);
            l *= y[i] ? p : 1.0 - p;
        }
        return l;
    };
    const double z = trapezoid(like, lo, hi, points);
    const double m = trapezoid([&](double t) { return t * like(t); }, lo, hi, points) / z;
    const double v = trapezoid([&](double t) { return (t - m) * (t - m) * like(t); }, lo, hi, points) / z;
    return {m, std::sqrt(v)};
}

/// Central difference of f at x with step h.
inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-6) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Bernoulli log-likelihood of a logistic model with linear predictor X beta.
inline double logistic_loglik(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                              const std::vector<double>& beta) {
    double ll = 0.0;
    for (std::size_t r = 0; r < x.size(); ++r) {
        double eta = 0.0;
        for (std::size_t k = 0; k < beta.size(); ++k) eta += x[r][k] * beta[k];
        ll += y[r] ? -std::log1p(std::exp(-eta)) : -std::log1p(std::exp(eta));
    }
    return ll;
}

/// Dense grid search over [-range, range]^k followed by coordinate ascent
/// with shrinking steps.
inline std::vector<double> brute_force_logistic(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                                std::size_t k, double range = 6.0, int grid = 41) {
    std::vector<double> best(k, 0.0);
    double best_ll = logistic_loglik(x, y, best);
    std::vector<int> idx(k, 0);
    const double h = 2.0 * range / (grid - 1);
    while (true) {
        std::vector<double> beta(k);
        for (std::size_t j = 0; j < k; ++j) beta[j] = -range + idx[j] * h;
        const double ll = logistic_loglik(x, y, beta);
        if (ll > best_ll) {
            best_ll = ll;
            best = beta;
        }
        std::size_t j = 0;
        while (j < k && ++idx[j] == grid) idx[j++] = 0;
        if (j == k) break;
    }
    for (double step = h; step > 1e-9; step *= 0.5) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t j = 0; j < k; ++j) {
                for (double dir : {-1.0, 1.0}) {
                    auto trial = best;
                    trial[j] += dir * step;
                    const double ll = logistic_loglik(x, y, trial);
                    if (ll > best_ll) {
                        best_ll = ll;
                        best = trial;
                        moved = true;
                    }
                }
            }
        }
    }
    return best;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace support
