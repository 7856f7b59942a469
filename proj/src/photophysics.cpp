#include "nvsk/photophysics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "nvsk/butterworth.hpp"
#include "nvsk/numfmt.hpp"
#include "nvsk/parallel.hpp"

namespace nvsk {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

void require_rate(double v, const char* name) {
    require(std::isfinite(v) && v >= 0.0, std::string(name) + " must be finite and >= 0");
}

std::size_t step_count(double t_end, double dt) {
    require(std::isfinite(t_end) && t_end >= 0.0, "t_end must be >= 0");
    require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
    return static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
}

void check_step(const FiveLevelParams& params, double s, double dt) {
    const double limit = max_output_step(params, s);
    if (dt > limit * (1.0 + 1e-12))
        throw ValidationError("dt = " + format_g9(dt) + " us too large for s = " + format_g9(s) +
                              "; required dt <= " + format_g9(limit) + " us");
}

// Dormand-Prince 5(4) coefficients.
constexpr double kA[7][6] = {
    {},
    {1.0 / 5.0},
    {3.0 / 40.0, 9.0 / 40.0},
    {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0},
    {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0},
    {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0},
    {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0},
};
constexpr double kB5[7] = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
constexpr double kB4[7] = {5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
                           -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0};

// One DP step of y' = G y applied to every basis vector at once: returns the
// step matrix and the embedded error matrix.
std::pair<RateMatrix, RateMatrix> dopri_step_matrices(const RateMatrix& g, double h) {
    RateMatrix k[7];
    for (int i = 0; i < 7; ++i) {
        RateMatrix y = RateMatrix::Identity();
        for (int j = 0; j < i; ++j)
            if (kA[i][j] != 0.0) y += h * kA[i][j] * k[j];
        k[i] = g * y;
    }
    RateMatrix step = RateMatrix::Identity();
    RateMatrix err = RateMatrix::Zero();
    for (int i = 0; i < 7; ++i) {
        step += h * kB5[i] * k[i];
        err += h * (kB5[i] - kB4[i]) * k[i];
    }
    return {step, err};
}

double induced_one_norm(const RateMatrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

}  // namespace

void FiveLevelParams::validate() const {
    require(std::isfinite(gamma_per_us) && gamma_per_us > 0.0, "Gamma must be > 0");
    require_rate(kappa_45, "kappa_45");
    require_rate(kappa_35, "kappa_35");
    require_rate(kappa_52, "kappa_52");
    require_rate(kappa_51, "kappa_51");
    require(i_sat_low.mw_per_um2() > 0.0 && i_sat_high.mw_per_um2() > 0.0, "i_sat must be > 0");
}

RateMatrix rate_matrix(const FiveLevelParams& params, double s) {
    params.validate();
    require(std::isfinite(s) && s >= 0.0, "saturation parameter s must be >= 0");
    const double k45 = params.kappa_45, k35 = params.kappa_35;
    const double k52 = params.kappa_52, k51 = params.kappa_51;
    RateMatrix m;
    // clang-format off
    m << -s,   0.0,  1.0,         0.0,         k51,
          0.0, -s,   0.0,         1.0,         k52,
          s,   0.0, -(1.0 + k35), 0.0,         0.0,
          0.0, s,    0.0,        -(1.0 + k45), 0.0,
          0.0, 0.0,  k35,         k45,        -(k51 + k52);
    // clang-format on
    return params.gamma_per_us * m;
}

double max_output_step(const FiveLevelParams& params, double s) {
    params.validate();
    const double outflow = std::max({1.0, s, 1.0 + params.kappa_35, 1.0 + params.kappa_45,
                                     params.kappa_51 + params.kappa_52});
    return 0.01 / (params.gamma_per_us * outflow);
}

void StateVector::validate() const {
    for (int i = 0; i < 5; ++i)
        require(std::isfinite(n[i]) && n[i] >= 0.0 && n[i] <= 1.0,
                "population n" + std::to_string(i + 1) + " out of [0,1]");
    require(std::abs(sum() - 1.0) <= 1e-9, "populations must sum to 1");
}

RateEquationIntegrator::RateEquationIntegrator(const FiveLevelParams& params, double s, double dt,
                                               double tolerance) {
    const RateMatrix g = rate_matrix(params, s);
    require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
    // Populations are non-negative with unit sum, so the induced 1-norm of
    // the error matrix bounds the local error of every admissible state.
    RateMatrix step;
    for (substeps_ = 1;; substeps_ *= 2) {
        const auto [st, err] = dopri_step_matrices(g, dt / substeps_);
        step = st;
        if (induced_one_norm(err) <= tolerance || substeps_ >= (1 << 20)) break;
    }
    propagator_ = RateMatrix::Identity();
    for (int i = 0; i < substeps_; ++i) propagator_ = step * propagator_;
    // Columns of the exact propagator sum to one.
    for (int j = 0; j < 5; ++j) {
        double off = 0.0;
        for (int i = 0; i < 5; ++i)
            if (i != j) off += propagator_(i, j);
        propagator_(j, j) = 1.0 - off;
    }
}

StateVector RateEquationIntegrator::step(const StateVector& state) const noexcept {
    StateVector out;
    for (int i = 0; i < 5; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 5; ++j) acc += propagator_(i, j) * state.n[j];
        out.n[i] = acc;
    }
    return out;
}

void evolve(const FiveLevelParams& params, double s, const StateVector& initial, double t_end,
            double dt, const StateObserver& observer) {
    initial.validate();
    const std::size_t steps = step_count(t_end, dt);
    check_step(params, s, dt);
    const RateEquationIntegrator integrator(params, s, dt);
    StateVector state = initial;
    observer(0, state);
    for (std::size_t k = 1; k <= steps; ++k) {
        state = integrator.step(state);
        observer(k, state);
    }
}

Trajectory evolve(const FiveLevelParams& params, double s, const StateVector& initial,
                  double t_end, double dt) {
    Trajectory traj;
    traj.dt = dt;
    traj.s = s;
    traj.states.reserve(step_count(t_end, dt) + 1);
    evolve(params, s, initial, t_end, dt,
           [&](std::size_t, const StateVector& st) { traj.states.push_back(st); });
    return traj;
}

PLTrace pl_rate(const Trajectory& trajectory, const FiveLevelParams& params) {
    PLTrace trace;
    trace.dt = trajectory.dt;
    trace.s = trajectory.s;
    trace.params = params;
    trace.values.reserve(trajectory.states.size());
    for (const auto& st : trajectory.states)
        trace.values.push_back(params.gamma_per_us * (st.n[2] + st.n[3]));
    return trace;
}

PLTrace lowpass(const PLTrace& trace, int order, double f_cut_mhz) {
    require(trace.dt > 0.0, "trace dt must be > 0");
    const double fs = 1.0 / trace.dt;  // MHz, dt in us
    if (fs < 10.0 * f_cut_mhz)
        throw ValidationError("undersampled trace: sample rate " + format_g9(fs) +
                              " MHz < 10 x cutoff " + format_g9(f_cut_mhz) + " MHz");
    ButterworthLowpass filter(order, f_cut_mhz, fs);
    PLTrace out = trace;
    filter.process(out.values);
    out.filtered = true;
    return out;
}

ContrastCurve contrast_trace(const FiveLevelParams& params, double s, const StateVector& sig_initial,
                             const StateVector& ref_initial, double t_end, double dt,
                             const ContrastOptions& options) {
    sig_initial.validate();
    ref_initial.validate();
    check_step(params, s, dt);
    const std::size_t steps = step_count(t_end, dt);
    const double fs = 1.0 / dt;
    if (options.filter && fs < 10.0 * options.f_cut_mhz)
        throw ValidationError("undersampled trace: sample rate " + format_g9(fs) +
                              " MHz < 10 x cutoff");

    std::optional<ButterworthLowpass> sig_filter;
    std::optional<ButterworthLowpass> ref_filter;
    if (options.filter) {
        sig_filter.emplace(options.filter_order, options.f_cut_mhz, fs);
        ref_filter = sig_filter;
    }
    const std::size_t max_points = std::max<std::size_t>(options.max_points, 2);
    const std::size_t stride = (steps + 1 + max_points - 1) / max_points;

    ContrastCurve curve;
    curve.s = s;
    curve.dt = dt;
    const std::size_t kept = steps / stride + 1;
    curve.time_us.reserve(kept);
    curve.sig.reserve(kept);
    curve.ref.reserve(kept);
    curve.contrast.reserve(kept);

    const RateEquationIntegrator integrator(params, s, dt);
    StateVector sig_state = sig_initial;
    StateVector ref_state = ref_initial;
    const double gamma = params.gamma_per_us;
    for (std::size_t k = 0; k <= steps; ++k) {
        if (k > 0) {
            sig_state = integrator.step(sig_state);
            ref_state = integrator.step(ref_state);
        }
        double sig = gamma * (sig_state.n[2] + sig_state.n[3]);
        double ref = gamma * (ref_state.n[2] + ref_state.n[3]);
        if (options.filter) {
            sig = sig_filter->process(sig);
            ref = ref_filter->process(ref);
        }
        if (k % stride == 0) {
            curve.time_us.push_back(static_cast<double>(k) * dt);
            curve.sig.push_back(sig);
            curve.ref.push_back(ref);
            curve.contrast.push_back(ref > 0.0 ? sig / ref : 1.0);
        }
    }
    return curve;
}

ContrastCurve contrast_trace(const FiveLevelParams& params, Intensity intensity, Intensity i_sat,
                             double t_end, double dt, const ContrastOptions& options) {
    require(i_sat.mw_per_um2() > 0.0, "i_sat must be > 0");
    const double s = intensity.mw_per_um2() / i_sat.mw_per_um2();
    return contrast_trace(params, s, StateVector::ground_ms1(), StateVector::ground_ms0(), t_end,
                          dt, options);
}

InitializationTime initialization_time(std::span<const double> time_us,
                                       std::span<const double> contrast) {
    require(time_us.size() == contrast.size(), "time and contrast lengths differ");
    const std::size_t n = contrast.size();
    require(n >= 3, "contrast curve needs at least 3 samples");

    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) dev[i] = std::abs(1.0 - contrast[i]);

    std::size_t peak = 0;
    double peak_smoothed = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = std::min(i + 1, n - 1);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += dev[j];
        const double sm = acc / static_cast<double>(hi - lo + 1);
        if (sm > peak_smoothed) {
            peak_smoothed = sm;
            peak = i;
        }
    }
    if (!(peak_smoothed > 1e-6))
        throw ComputationError("no polarization dynamics at this intensity (peak deviation " +
                               format_g9(peak_smoothed) + ")");

    const double d_peak = dev[peak];
    const double t_peak = time_us[peak];

    // Weighted log-linear fit, weights d^2 (the variance-stabilizing choice
    // for log-transformed exponential data).
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t used = 0;
    for (std::size_t i = peak; i < n; ++i) {
        if (dev[i] < 0.01 * d_peak) break;
        const double x = time_us[i] - t_peak;
        const double y = std::log(dev[i]);
        const double w = dev[i] * dev[i];
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
        ++used;
    }
    if (used < 2) throw ComputationError("too few post-peak samples for the exponential fit");
    const double denom = sw * sxx - sx * sx;
    if (!(denom > 0.0)) throw ComputationError("degenerate exponential fit window");
    const double slope = (sw * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / sw;
    if (!(slope < 0.0)) throw ComputationError("contrast deviation does not decay after its peak");

    InitializationTime out;
    out.decay_tau_us = -1.0 / slope;
    out.t_peak_us = t_peak;
    out.peak_deviation = d_peak;
    out.fit_points = used;
    out.t_i_us = t_peak + out.decay_tau_us * (intercept - std::log(d_peak) + 3.0);
    return out;
}

InitializationTime initialization_time(const ContrastCurve& curve) {
    return initialization_time(curve.time_us, curve.contrast);
}

double relaxation_horizon_us(const FiveLevelParams& params, double s) {
    const RateMatrix g = rate_matrix(params, s);
    const Eigen::EigenSolver<RateMatrix> solver(g, false);
    const auto ev = solver.eigenvalues();
    double largest = 0.0;
    for (int i = 0; i < 5; ++i) largest = std::max(largest, std::abs(ev[i]));
    double slowest = largest;
    for (int i = 0; i < 5; ++i) {
        const double r = std::abs(ev[i].real());
        if (r > 1e-10 * largest) slowest = std::min(slowest, r);
    }
    return 12.0 / slowest;
}

InitializationTime simulate_initialization_time(const FiveLevelParams& params, Intensity intensity,
                                                Intensity i_sat, const ContrastOptions& options) {
    require(i_sat.mw_per_um2() > 0.0, "i_sat must be > 0");
    const double s = intensity.mw_per_um2() / i_sat.mw_per_um2();
    require(s > 0.0, "intensity must be > 0 for an initialization time");
    const double dt = max_output_step(params, s);
    const double t_end = relaxation_horizon_us(params, s);
    return initialization_time(contrast_trace(params, intensity, i_sat, t_end, dt, options));
}

std::vector<TiBandPoint> ti_band(const FiveLevelParams& params, std::span<const Intensity> grid,
                                 const ContrastOptions& options) {
    params.validate();
    std::vector<double> times(2 * grid.size());
    parallel_for(times.size(), [&](std::size_t task) {
        const std::size_t i = task / 2;
        const Intensity i_sat = task % 2 == 0 ? params.i_sat_low : params.i_sat_high;
        times[task] = simulate_initialization_time(params, grid[i], i_sat, options).t_i_us;
    });
    std::vector<TiBandPoint> band;
    band.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        band.push_back({grid[i], times[2 * i], times[2 * i + 1]});
    return band;
}

}  // namespace nvsk
