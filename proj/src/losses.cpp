#include "pderm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pderm {

namespace {

// log(1 + e^z) without overflow
double log1pexp(double z) {
    if (z > 35.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// u log u + (1-u) log(1-u), with 0 log 0 := 0
double neg_entropy(double u) {
    double s = 0.0;
    if (u > 0.0) s += u * std::log(u);
    if (u < 1.0) s += (1.0 - u) * std::log(1.0 - u);
    return s;
}

}  // namespace

Loss parse_loss(const std::string& s) {
    if (s == "quadratic") return Loss::quadratic;
    if (s == "hinge") return Loss::hinge;
    if (s == "sqhinge") return Loss::sqhinge;
    if (s == "logistic") return Loss::logistic;
    throw std::invalid_argument("unknown loss: " + s);
}

const char* loss_name(Loss loss) {
    switch (loss) {
        case Loss::quadratic: return "quadratic";
        case Loss::hinge: return "hinge";
        case Loss::sqhinge: return "sqhinge";
        case Loss::logistic: return "logistic";
    }
    return "?";
}

LossConstants loss_constants(Loss loss) {
    switch (loss) {
        case Loss::quadratic: return {1.0, 0.0, true, false};
        case Loss::hinge: return {0.0, 1.0, false, true};
        case Loss::sqhinge: return {0.5, 0.0, true, false};
        case Loss::logistic: return {0.25, 0.0, true, false};
    }
    return {};
}

bool loss_is_smooth(Loss loss) { return loss != Loss::hinge; }

bool loss_requires_pm1_labels(Loss loss) { return loss != Loss::quadratic; }

void validate_labels(Loss loss, std::span<const double> labels) {
    if (!loss_requires_pm1_labels(loss)) return;
    for (double y : labels) {
        if (y != 1.0 && y != -1.0)
            throw std::invalid_argument(std::string(loss_name(loss)) +
                                        " loss requires labels in {-1,+1}");
    }
}

double loss_value(Loss loss, double y, double a) {
    switch (loss) {
        case Loss::quadratic: return 0.5 * (a - y) * (a - y);
        case Loss::hinge: return std::max(0.0, y - a);
        case Loss::sqhinge: {
            const double m = std::max(0.0, y - a);
            return m * m;
        }
        case Loss::logistic: return log1pexp(-y * a);
    }
    return 0.0;
}

double loss_derivative(Loss loss, double y, double a) {
    switch (loss) {
        case Loss::quadratic: return a - y;
        case Loss::hinge: return a < y ? -1.0 : (a > y ? 0.0 : -1.0);
        case Loss::sqhinge: return -2.0 * std::max(0.0, y - a);
        case Loss::logistic: return -y / (1.0 + std::exp(y * a));
    }
    return 0.0;
}

Interval loss_subdifferential(Loss loss, double y, double a) {
    if (loss == Loss::hinge) {
        if (a < y) return {-1.0, -1.0};
        if (a > y) return {0.0, 0.0};
        return {-1.0, 0.0};
    }
    const double g = loss_derivative(loss, y, a);
    return {g, g};
}

Interval conjugate_domain(Loss loss, double y) {
    switch (loss) {
        case Loss::quadratic: return {-kInf, kInf};
        case Loss::hinge: return {-1.0, 0.0};
        case Loss::sqhinge: return {-kInf, 0.0};
        case Loss::logistic: return y > 0 ? Interval{-1.0, 0.0} : Interval{0.0, 1.0};
    }
    return {};
}

Interval alpha_interval(Loss loss, double y) {
    const Interval b = conjugate_domain(loss, y);  // alpha = -b
    return {-b.hi, -b.lo};
}

bool alpha_feasible(Loss loss, double y, double alpha, double tol) {
    return alpha_interval(loss, y).contains(alpha, tol);
}

double conjugate_value_unchecked(Loss loss, double y, double b) {
    switch (loss) {
        case Loss::quadratic: return 0.5 * b * b + y * b;
        case Loss::hinge: return y * b;
        case Loss::sqhinge: return 0.25 * b * b + y * b;
        case Loss::logistic: {
            const double u = std::clamp(-b / y, 0.0, 1.0);
            return neg_entropy(u);
        }
    }
    return 0.0;
}

double conjugate_value(Loss loss, double y, double b) {
    const Interval dom = conjugate_domain(loss, y);
    if (!dom.contains(b, 1e-12))
        throw std::domain_error(std::string("conjugate argument outside feasible set for ") +
                                loss_name(loss));
    return conjugate_value_unchecked(loss, y, std::clamp(b, dom.lo, dom.hi));
}

}  // namespace pderm
