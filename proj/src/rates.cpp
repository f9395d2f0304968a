#include "pderm/rates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pderm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_common(const RateInputs& in) {
    if (!(in.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(in.n >= 1.0)) throw std::invalid_argument("n must be >= 1");
    if (!(in.sigma_prime > 0.0)) throw std::invalid_argument("sigma' must be positive");
    if (!(in.nu > 0.0) || in.nu > 1.0) throw std::invalid_argument("nu must be in (0,1]");
    if (in.theta < 0.0 || in.theta > 1.0) throw std::invalid_argument("theta must be in [0,1]");
    if (in.sigma_max < 0.0) throw std::invalid_argument("sigma_max must be >= 0");
}

void validate_smooth(const RateInputs& in) {
    validate_common(in);
    if (!(in.gamma > 0.0)) throw std::invalid_argument("smooth bounds need gamma > 0");
}

}  // namespace

double smooth_leading_factor(const RateInputs& in) {
    validate_smooth(in);
    if (in.theta >= 1.0) return kInf;
    const double lgn = in.lambda * in.gamma * in.n;
    return (lgn + in.sigma_max * in.sigma_prime) / (lgn * in.nu * (1.0 - in.theta));
}

double smooth_rounds_dual(const RateInputs& in) {
    if (!(in.epsilon_d > 0.0)) throw std::invalid_argument("epsilon_D must be positive");
    const double factor = smooth_leading_factor(in);
    return factor * std::log(1.0 / in.epsilon_d);
}

double smooth_rounds_gap(const RateInputs& in) {
    if (!(in.epsilon_gap > 0.0)) throw std::invalid_argument("epsilon_Gap must be positive");
    const double factor = smooth_leading_factor(in);
    if (!std::isfinite(factor)) return kInf;
    const double t = factor * std::log(factor / in.epsilon_gap);
    return std::max(t, 0.0);
}

LipschitzRounds lipschitz_rounds(const RateInputs& in) {
    validate_common(in);
    if (!(in.epsilon_gap > 0.0)) throw std::invalid_argument("epsilon_Gap must be positive");
    if (!(in.lipschitz > 0.0)) throw std::invalid_argument("Lipschitz bounds need L > 0");
    if (!(in.sigma_sum > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (in.theta >= 1.0) return {kInf, kInf, kInf};

    const double inv_rate = 1.0 / (in.nu * (1.0 - in.theta));
    const double q = 4.0 * in.lipschitz * in.lipschitz * in.sigma_sum * in.sigma_prime;
    const double n2 = in.n * in.n;

    double t0 = 0.0;
    if (in.initial_dual_subopt > 0.0) {
        t0 = std::max(0.0,
                      std::ceil(inv_rate * std::log(2.0 * in.lambda * n2 *
                                                    in.initial_dual_subopt / q)));
    }
    const double tail = std::max(0.0, 2.0 * inv_rate *
                                          (2.0 * q / (in.lambda * n2 * in.epsilon_gap) - 1.0));
    const double t_head = t0 + tail;
    const double dominant = q / (in.lambda * n2 * in.epsilon_gap) * inv_rate;
    const double rounds = t_head + std::max(std::ceil(inv_rate), dominant);
    return {t0, t_head, rounds};
}

double smooth_gap_rounds_adding(double lambda, double gamma, double n, double sigma_max,
                                double machines, double theta, double epsilon_gap) {
    RateInputs in;
    in.lambda = lambda;
    in.gamma = gamma;
    in.n = n;
    in.sigma_max = sigma_max;
    in.sigma_prime = machines;
    in.nu = 1.0;
    in.theta = theta;
    in.epsilon_gap = epsilon_gap;
    return smooth_rounds_gap(in);
}

double smooth_gap_rounds_averaging(double lambda, double gamma, double n, double sigma_max,
                                   double machines, double theta, double epsilon_gap) {
    RateInputs in;
    in.lambda = lambda;
    in.gamma = gamma;
    in.n = n;
    in.sigma_max = sigma_max;
    in.sigma_prime = 1.0;
    in.nu = 1.0 / machines;
    in.theta = theta;
    in.epsilon_gap = epsilon_gap;
    return smooth_rounds_gap(in);
}

std::vector<double> averaged_iterate(std::span<const std::vector<double>> history,
                                     std::int64_t t_head, std::int64_t t_final) {
    const std::int64_t first = t_head + 1, last = t_final - 1;
    if (first > last) throw std::invalid_argument("empty averaging window");
    if (first < 0 || last >= std::int64_t(history.size()))
        throw std::invalid_argument("averaging window outside retained history");
    const std::size_t dim = history[std::size_t(first)].size();
    std::vector<double> mean(dim, 0.0);
    for (std::int64_t t = first; t <= last; ++t) {
        const auto& it = history[std::size_t(t)];
        if (it.size() != dim) throw std::invalid_argument("ragged iterate history");
        for (std::size_t j = 0; j < dim; ++j) mean[j] += it[j];
    }
    const double inv = 1.0 / double(last - first + 1);
    for (auto& m : mean) m *= inv;
    return mean;
}

}  // namespace pderm
