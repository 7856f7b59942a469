#include "nvsk/optimize.hpp"

#include <cmath>
#include <string>

#include "nvsk/core_types.hpp"
#include "nvsk/numfmt.hpp"

namespace nvsk {

ScalarMinimum minimize_log_domain(const std::function<double(double)>& f, double lo, double hi,
                                  double rel_tol, int coarse_points) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
        throw ValidationError("minimize_log_domain: need 0 < lo < hi < inf");
    if (coarse_points < 3) coarse_points = 3;

    int evaluations = 0;
    auto g = [&](double u) {
        const double x = std::exp(u);
        const double v = f(x);
        ++evaluations;
        if (!std::isfinite(v))
            throw ComputationError("objective is not finite at x = " + format_g9(x));
        return v;
    };

    const double ulo = std::log(lo);
    const double uhi = std::log(hi);
    const double step = (uhi - ulo) / (coarse_points - 1);

    int best = 0;
    double best_val = g(ulo);
    for (int i = 1; i < coarse_points; ++i) {
        const double u = (i == coarse_points - 1) ? uhi : ulo + i * step;
        const double v = g(u);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }

    double a = ulo + std::max(best - 1, 0) * step;
    double b = (best + 1 >= coarse_points - 1) ? uhi : ulo + (best + 1) * step;

    // Golden-section on [a, b] in log space. A bracket of width w in log(x)
    // corresponds to a relative width of about w in x.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double tol = std::log1p(rel_tol);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = g(c);
    double fd = g(d);
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }

    double u_best = 0.5 * (a + b);
    double v_best = g(u_best);
    // Edges are candidates too: a monotone objective pins the minimizer there.
    for (double edge : {ulo, uhi}) {
        if (std::abs(u_best - edge) <= 2.0 * step) {
            const double ve = g(edge);
            if (ve <= v_best) {
                u_best = edge;
                v_best = ve;
            }
        }
    }

    ScalarMinimum out;
    out.x = std::exp(u_best);
    out.value = v_best;
    out.at_boundary = (u_best - ulo) <= tol || (uhi - u_best) <= tol;
    out.evaluations = evaluations;
    return out;
}

}  // namespace nvsk
