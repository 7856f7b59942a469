#pragma once

#include <functional>

namespace nvsk {

struct ScalarMinimum {
    double x = 0.0;
    double value = 0.0;
    bool at_boundary = false;  // minimizer sits on (or within tolerance of) a domain edge
    int evaluations = 0;
};

/// Deterministic derivative-free minimization of f over [lo, hi] (lo > 0),
/// searched in log(x): a coarse log-spaced scan brackets the best grid
/// point, then golden-section refinement shrinks the bracket until its
/// relative width is below rel_tol.
///
/// Throws ComputationError if f returns a non-finite value.
ScalarMinimum minimize_log_domain(const std::function<double(double)>& f, double lo, double hi,
                                  double rel_tol, int coarse_points = 96);

}  // namespace nvsk
