#pragma once

#include <limits>
#include <span>
#include <string>

namespace pderm {

// The four loss families, each with its convex conjugate, subdifferential,
// dual feasible interval and constants:
//
//   quadratic  l(a) = (a-y)^2/2         l*(b) = b^2/2 + y b        b in R
//   hinge      l(a) = max{0, y-a}       l*(b) = y b                b in [-1,0]
//   sq.hinge   l(a) = max{0, y-a}^2     l*(b) = b^2/4 + y b        b in (-inf,0]
//   logistic   l(a) = log(1+e^{-ya})    l*(b) = u log u + (1-u)log(1-u),
//                                       u = -b/y in [0,1]
//
// The squared-hinge conjugate carries the y b cross term; dropping it breaks
// Fenchel-Young equality at subgradient points (checked by the grid oracle).
enum class Loss { quadratic, hinge, sqhinge, logistic };

Loss parse_loss(const std::string& s);
const char* loss_name(Loss loss);

struct Interval {
    double lo, hi;
    bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
};

// gamma is the strong-convexity constant used for l* (0 for hinge);
// lipschitz is set only for hinge (L = 1).
struct LossConstants {
    double gamma;
    double lipschitz;
    bool has_gamma;      // smooth losses only
    bool has_lipschitz;  // hinge only
};
LossConstants loss_constants(Loss loss);

bool loss_is_smooth(Loss loss);
// hinge / squared hinge / logistic require labels in {-1, +1}
bool loss_requires_pm1_labels(Loss loss);
void validate_labels(Loss loss, std::span<const double> labels);

double loss_value(Loss loss, double y, double a);
// For hinge this returns a subgradient (the left slope at the kink).
double loss_derivative(Loss loss, double y, double a);
Interval loss_subdifferential(Loss loss, double y, double a);

// Domain of l* in b; the dual value evaluates l*(-alpha_i), so the feasible
// interval for alpha_i is the reflection of this domain.
Interval conjugate_domain(Loss loss, double y);
Interval alpha_interval(Loss loss, double y);
bool alpha_feasible(Loss loss, double y, double alpha, double tol = 1e-12);

// Throws std::domain_error outside the feasible set (an infeasible dual
// iterate); boundary values within 1e-12 are clamped.
double conjugate_value(Loss loss, double y, double b);
double conjugate_value_unchecked(Loss loss, double y, double b);

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace pderm
