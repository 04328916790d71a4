#include "risklab/tdist.hpp"

#include <cmath>

namespace risklab {

namespace {

// Continued fraction for the incomplete beta, modified Lentz iteration.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 3e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta: a and b must be > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw Error("incomplete beta: x must be in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // Use the side of the symmetry relation where the fraction converges fast.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double t_sf(double t, int df) {
    if (df < 1) throw Error("t_sf: df must be >= 1");
    if (std::isnan(t)) return std::nan("");
    if (t == 0.0) return 0.5;
    const double nu = static_cast<double>(df);
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(nu / 2.0, 0.5, x);
    return t > 0.0 ? tail : 1.0 - tail;
}

double t_cdf(double t, int df) { return 1.0 - t_sf(t, df); }

double t_two_sided_p(double t, int df) { return 2.0 * t_sf(std::fabs(t), df); }

}  // namespace risklab
