#pragma once

// Five-level NV rate-equation model under optical pumping.
//
// States: 1 = ground m_s=0, 2 = ground m_s=+-1, 3 = excited m_s=0,
// 4 = excited m_s=+-1, 5 = singlet (shelving) manifold. Excitation from the
// ground states runs at s*Gamma, radiative decay at Gamma, and the
// intersystem and singlet decays at kappa_ij*Gamma.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nvsk/core_types.hpp"

namespace nvsk {

struct FiveLevelParams {
    double gamma_per_us = 0.67;
    double kappa_45 = 1.0;
    double kappa_35 = 1.0 / 7.0;
    double kappa_52 = 1.0 / 50.0;
    double kappa_51 = 1.0 / 25.0;
    Intensity i_sat_low{1.0};   // lower edge of the saturation-intensity band
    Intensity i_sat_high{3.0};

    void validate() const;
};

using RateMatrix = Eigen::Matrix<double, 5, 5>;

/// Generator G of dn/dt = G n (already scaled by Gamma). Columns sum to 0.
RateMatrix rate_matrix(const FiveLevelParams& params, double s);

/// Largest output step accepted by evolve: 0.01 / (Gamma * max(1, s, k)),
/// k the largest total outflow coefficient of any state.
double max_output_step(const FiveLevelParams& params, double s);

struct StateVector {
    std::array<double, 5> n{};

    static constexpr StateVector ground_ms0() noexcept { return {{1.0, 0.0, 0.0, 0.0, 0.0}}; }
    static constexpr StateVector ground_ms1() noexcept { return {{0.0, 1.0, 0.0, 0.0, 0.0}}; }

    [[nodiscard]] double sum() const noexcept { return n[0] + n[1] + n[2] + n[3] + n[4]; }
    /// Each population in [0,1] and the sum equal to 1 within 1e-9.
    void validate() const;
};

/// Populations on the uniform grid t_k = k * dt, k = 0..size-1.
struct Trajectory {
    double dt = 0.0;
    double s = 0.0;
    std::vector<StateVector> states;

    [[nodiscard]] double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
};

/// Called for every output sample (index k at t = k*dt).
using StateObserver = std::function<void(std::size_t, const StateVector&)>;

/// Dormand-Prince 5(4) integration of the rate equations onto a fixed output
/// grid. Because the equations are linear with constant coefficients, the
/// embedded error estimate selects the number of substeps per output
/// interval once; the resulting one-interval propagator is then reused.
class RateEquationIntegrator {
public:
    RateEquationIntegrator(const FiveLevelParams& params, double s, double dt,
                           double tolerance = 1e-13);

    [[nodiscard]] StateVector step(const StateVector& state) const noexcept;
    [[nodiscard]] int substeps() const noexcept { return substeps_; }
    [[nodiscard]] const RateMatrix& propagator() const noexcept { return propagator_; }

private:
    RateMatrix propagator_;
    int substeps_ = 1;
};

/// Streams the trajectory from t = 0 to t_end into observer. Throws
/// ValidationError if dt exceeds max_output_step (the message names it).
void evolve(const FiveLevelParams& params, double s, const StateVector& initial, double t_end,
            double dt, const StateObserver& observer);

/// Materialized trajectory.
Trajectory evolve(const FiveLevelParams& params, double s, const StateVector& initial,
                  double t_end, double dt);

struct PLTrace {
    double dt = 0.0;
    std::vector<double> values;  // 1/us
    double s = 0.0;
    FiveLevelParams params;
    bool filtered = false;

    [[nodiscard]] double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
};

/// R(t) = Gamma (n3 + n4).
PLTrace pl_rate(const Trajectory& trajectory, const FiveLevelParams& params);

inline constexpr int kDefaultFilterOrder = 4;
inline constexpr double kDefaultCutoffMhz = 1.7;

/// Causal Butterworth low-pass of a PL trace. Requires 1/dt >= 10 f_cut.
PLTrace lowpass(const PLTrace& trace, int order = kDefaultFilterOrder,
                double f_cut_mhz = kDefaultCutoffMhz);

struct ContrastOptions {
    bool filter = true;
    int filter_order = kDefaultFilterOrder;
    double f_cut_mhz = kDefaultCutoffMhz;
    /// Recorded samples are decimated so at most this many are kept
    /// (simulation and filtering still run on the full dt grid).
    std::size_t max_points = 20000;
};

/// Sig/Ref versus delay. time_us[k] is the delay of sample k.
struct ContrastCurve {
    std::vector<double> time_us;
    std::vector<double> sig;  // PL of the m_s=+-1-initialized run
    std::vector<double> ref;  // PL of the m_s=0-initialized run
    std::vector<double> contrast;
    double s = 0.0;
    double dt = 0.0;  // simulation step
};

/// Pumps both initial states with the same s and returns Sig/Ref. Where the
/// reference PL is still zero (t = 0) the contrast is defined as 1.
ContrastCurve contrast_trace(const FiveLevelParams& params, double s, const StateVector& sig_initial,
                             const StateVector& ref_initial, double t_end, double dt,
                             const ContrastOptions& options = {});

/// The measurement protocol: Sig starts in m_s=+-1, Ref in m_s=0, s = I/I_sat.
ContrastCurve contrast_trace(const FiveLevelParams& params, Intensity intensity, Intensity i_sat,
                             double t_end, double dt, const ContrastOptions& options = {});

struct InitializationTime {
    double t_i_us = 0.0;
    double t_peak_us = 0.0;
    double peak_deviation = 0.0;  // |1 - contrast| at the peak
    double decay_tau_us = 0.0;    // fitted exponential time constant
    std::size_t fit_points = 0;
};

/// Locates the peak of |1 - contrast| (3-sample smoothed), fits an
/// exponential to the decay that follows (down to 1% of the peak) and
/// returns the delay at which the fitted deviation reaches peak/e^3.
/// Throws ComputationError("no polarization dynamics ...") without a peak.
InitializationTime initialization_time(std::span<const double> time_us,
                                       std::span<const double> contrast);
InitializationTime initialization_time(const ContrastCurve& curve);

/// Delay long enough for the contrast to relax: 12 / |slowest nonzero rate|.
double relaxation_horizon_us(const FiveLevelParams& params, double s);

struct TiBandPoint {
    Intensity intensity;
    double lower_us = 0.0;  // I_sat = i_sat_low (stronger pumping)
    double upper_us = 0.0;  // I_sat = i_sat_high
};

/// Initialization time over an intensity grid at both ends of the
/// saturation-intensity band. Each point uses t_end = relaxation_horizon_us
/// and the largest admissible dt; points run in parallel.
std::vector<TiBandPoint> ti_band(const FiveLevelParams& params, std::span<const Intensity> grid,
                                 const ContrastOptions& options = {});

/// Initialization time for a single (intensity, I_sat) pair with the same
/// automatic horizon and step as ti_band.
InitializationTime simulate_initialization_time(const FiveLevelParams& params, Intensity intensity,
                                                Intensity i_sat, const ContrastOptions& options = {});

}  // namespace nvsk
