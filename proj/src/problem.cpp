#include "pderm/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "pderm/kernels.hpp"

namespace pderm {

double SquaredL2::value(std::span<const double> w) {
    return 0.5 * kern::nrm2sq(w.data(), w.size());
}

double SquaredL2::conj_value(std::span<const double> v) {
    return 0.5 * kern::nrm2sq(v.data(), v.size());
}

void SquaredL2::conj_grad(std::span<const double> v, std::span<double> out) {
    std::copy(v.begin(), v.end(), out.begin());
}

ProblemSpec::ProblemSpec(Dataset ds, Loss l, double lam)
    : dataset(std::move(ds)), loss(l), lambda(lam) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    validate_labels(loss, labels_span());
}

std::span<const double> ProblemSpec::labels_span() const {
    return {dataset.labels.data(), dataset.labels.size()};
}

std::vector<double> compute_v(const ProblemSpec& spec, std::span<const double> alpha) {
    std::vector<double> v(std::size_t(spec.d()), 0.0);
    const double inv = 1.0 / (spec.lambda * double(spec.n()));
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        if (alpha[std::size_t(i)] == 0.0) continue;
        const auto c = spec.dataset.col(i);
        kern::scatter_axpy(c.idx.data(), c.val.data(), c.nnz(), inv * alpha[std::size_t(i)],
                           v.data());
    }
    return v;
}

DualState make_state(const ProblemSpec& spec, std::vector<double> alpha) {
    if (std::int64_t(alpha.size()) != spec.n()) throw std::invalid_argument("alpha length != n");
    check_alpha_feasible(spec, alpha);
    DualState st;
    st.v = compute_v(spec, alpha);
    st.alpha = std::move(alpha);
    return st;
}

DualState zero_state(const ProblemSpec& spec) {
    return make_state(spec, std::vector<double>(std::size_t(spec.n()), 0.0));
}

bool state_consistent(const ProblemSpec& spec, const DualState& state, double tol) {
    const auto fresh = compute_v(spec, state.alpha);
    double diff = 0.0;
    for (std::size_t j = 0; j < fresh.size(); ++j) {
        const double e = fresh[j] - state.v[j];
        diff += e * e;
    }
    const double vnorm = std::sqrt(kern::nrm2sq(state.v.data(), state.v.size()));
    return std::sqrt(diff) <= tol * (1.0 + vnorm);
}

void check_alpha_feasible(const ProblemSpec& spec, std::span<const double> alpha) {
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        if (!alpha_feasible(spec.loss, spec.dataset.labels[std::size_t(i)], alpha[std::size_t(i)]))
            throw std::domain_error("alpha_" + std::to_string(i) + " outside dual feasible set");
    }
}

double primal_value(const ProblemSpec& spec, std::span<const double> w) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        const auto c = spec.dataset.col(i);
        const double margin = kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), w.data());
        sum += loss_value(spec.loss, spec.dataset.labels[std::size_t(i)], margin);
    }
    return sum / double(spec.n()) + spec.lambda * SquaredL2::value(w);
}

double dual_value_unchecked(const ProblemSpec& spec, const DualState& state) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        sum -= conjugate_value_unchecked(spec.loss, spec.dataset.labels[std::size_t(i)],
                                         -state.alpha[std::size_t(i)]);
    }
    return sum / double(spec.n()) - spec.lambda * SquaredL2::conj_value(state.v);
}

double dual_value(const ProblemSpec& spec, const DualState& state) {
    check_alpha_feasible(spec, state.alpha);
    return dual_value_unchecked(spec, state);
}

std::vector<double> primal_from_dual(const ProblemSpec& spec, const DualState& state) {
    std::vector<double> w(static_cast<std::size_t>(spec.d()));
    (void)spec;
    SquaredL2::conj_grad(state.v, w);
    return w;
}

double duality_gap(const ProblemSpec& spec, const DualState& state) {
    check_alpha_feasible(spec, state.alpha);
    const auto w = primal_from_dual(spec, state);
    return primal_value(spec, w) - dual_value_unchecked(spec, state);
}

double dual_f(const ProblemSpec& spec, std::span<const double> v) {
    return spec.lambda * SquaredL2::conj_value(v);
}

std::vector<double> grad_f(const ProblemSpec& spec, std::span<const double> v) {
    std::vector<double> w(static_cast<std::size_t>(spec.d()));
    SquaredL2::conj_grad(v, w);
    std::vector<double> g(static_cast<std::size_t>(spec.n()));
    const double inv_n = 1.0 / double(spec.n());
    for (std::int64_t i = 0; i < spec.n(); ++i) {
        const auto c = spec.dataset.col(i);
        g[std::size_t(i)] = inv_n * kern::gather_dot(c.idx.data(), c.val.data(), c.nnz(), w.data());
    }
    return g;
}

}  // namespace pderm
