#pragma once

// Photon-shot-noise-limited Ramsey sensitivity, its optimization over
// free-precession time and nitrogen content, and volume-normalized
// comparisons driven by intensity-dependent measured tables.

#include <optional>
#include <vector>

#include "nvsk/core_types.hpp"
#include "nvsk/dephasing.hpp"

namespace nvsk {

/// Every argument of the shot-noise sensitivity formula.
///
/// n_sensors is an NV- count, or a concentration in ppm when evaluating
/// volume-normalized sensitivity. n_avg may be +inf (ideal readout).
/// With gamma_e in MHz/G and times in us, the result is in G*sqrt(us)
/// (multiply by kNanoteslaPerHzPerGaussSqrtUs for nT/sqrt(Hz)).
struct SensingParams {
    int delta_ms = 1;
    double gamma_e = 2.8024;
    double n_sensors = 1.0;
    double tau_us = 1.0;
    DephasingTime t2_star = DephasingTime::unbounded();
    double p = 1.0;
    double contrast = 1.0;
    double n_avg = 1.0;
    double t_overhead_us = 0.0;

    void validate() const;
};

/// 1 G*sqrt(us) = 1e5 nT * 1e-3 sqrt(s) = 100 nT/sqrt(Hz).
inline constexpr double kNanoteslaPerHzPerGaussSqrtUs = 100.0;

/// (dm*gamma)^-1 (N tau)^-1/2 exp((tau/T2*)^p) sqrt(1 + 1/(C^2 n_avg)) sqrt((tau + tO)/tau)
double ramsey_sensitivity(const SensingParams& params);

struct TauOptimum {
    double tau_us = 0.0;
    double eta = 0.0;
    bool at_boundary = false;
};

/// Minimizes the sensitivity over tau in (0, tau_max], tau_max defaulting
/// to 5*T2*. params.tau_us is ignored. An unbounded T2* requires an explicit
/// tau_max. Relative tolerance 1e-6 on tau.
TauOptimum optimal_tau(const SensingParams& params, std::optional<double> tau_max_us = std::nullopt);

/// Configuration of the simplified nitrogen-content metric: spin-bath T2*
/// from the N0s and 13C terms only.
struct MetricConfig {
    Concentration c13{50.0};  // 99.995 % 12C
    double t_overhead_us = 10.0;
    BathCoefficients bath;
};

/// Spin-bath T2* (us) from the N0s and 13C terms for the metric.
double metric_t2_star_us(Concentration ns0, const MetricConfig& cfg);

/// Relative sensitivity sqrt((T2* + tO) / (N * T2*^2)); only ratios are
/// meaningful. ns0 must be > 0.
double simplified_metric(Concentration ns0, const MetricConfig& cfg);

struct NitrogenOptimum {
    Concentration ns0;
    double metric = 0.0;
    bool interior = true;  // false: objective monotone on the search domain
};

inline constexpr double kNitrogenSearchLowPpm = 0.01;
inline constexpr double kNitrogenSearchHighPpm = 100.0;

/// argmin of simplified_metric over [0.01, 100] ppm at the given overhead
/// (cfg.t_overhead_us is replaced). Relative tolerance 1e-4.
NitrogenOptimum optimal_nitrogen(double t_overhead_us, const MetricConfig& cfg);

/// One measured (or synthetic) row of intensity-dependent quantities.
struct IntensityRow {
    Intensity intensity;
    double contrast = 0.0;
    double psi = 0.0;
    double t_overhead_us = 0.0;
    std::optional<double> photon_rate_kcps;
    std::optional<double> readout_us;
};

struct InterpolatedRow {
    double contrast = 0.0;
    double psi = 0.0;
    double t_overhead_us = 0.0;
    std::optional<double> photon_rate_kcps;
    std::optional<double> readout_us;
};

/// Rows with strictly increasing intensity. Quantities are interpolated
/// piecewise-linearly in log10(intensity); there is no extrapolation.
class IntensityTable {
public:
    IntensityTable() = default;
    /// Validates: non-empty, strictly increasing positive intensities,
    /// finite fields, contrast in (0,1], psi in [0,1], overhead >= 0.
    explicit IntensityTable(std::vector<IntensityRow> rows);

    [[nodiscard]] const std::vector<IntensityRow>& rows() const noexcept { return rows_; }
    [[nodiscard]] Intensity min_intensity() const { return rows_.front().intensity; }
    [[nodiscard]] Intensity max_intensity() const { return rows_.back().intensity; }
    [[nodiscard]] bool has_photon_rate() const noexcept { return has_rate_; }
    [[nodiscard]] bool has_readout() const noexcept { return has_readout_; }

    /// Throws ValidationError outside [min_intensity, max_intensity].
    [[nodiscard]] InterpolatedRow at(Intensity intensity) const;

private:
    std::vector<IntensityRow> rows_;
    bool has_rate_ = false;
    bool has_readout_ = false;
};

/// Detected photon rate per NV-: a saturation curve s/(1+s), s = I/I_sat,
/// scaled so the rate at the reference intensity equals the reference rate.
struct PhotonModel {
    double reference_rate_kcps = 30.0;
    double reference_intensity_mw_um2 = 1.0;
    double i_sat_mw_um2 = 2.0;
    std::optional<double> readout_window_us;  // default: the row's overhead time

    [[nodiscard]] double rate_kcps(Intensity intensity) const;
    void validate() const;
};

enum class Protocol { SQ, DQ };
[[nodiscard]] const char* to_string(Protocol p) noexcept;
[[nodiscard]] Protocol protocol_from_string(const std::string& s);

/// Free-precession time choice in sensitivity evaluations.
enum class TauPolicy {
    Optimal,  // optimal_tau per evaluation
    AtT2Star  // tau = T2*, the approximation behind simplified_metric
};

/// The material side of a comparison: the sample plus what sets its T2*.
struct SensorMaterial {
    DiamondSample sample;
    BathCoefficients bath;
    double strain_fwhm_khz = 0.0;
    double bias_rate_per_us = 0.0;
    double stretch_p = 1.0;

    [[nodiscard]] DephasingBudget sq_budget() const;
    [[nodiscard]] DephasingTime t2_star(Protocol protocol) const;
};

struct EvaluationOptions {
    PhysicalConstants constants;
    PhotonModel photon;
    TauPolicy tau_policy = TauPolicy::Optimal;
};

struct VolumeSensitivity {
    double eta = 0.0;           // G*sqrt(us)*sqrt(ppm)
    double tau_us = 0.0;
    double t2_star_us = 0.0;
    double n_sensors_ppm = 0.0; // effective sensing [NV-]
    double n_avg = 0.0;
    double contrast = 0.0;
    double t_overhead_us = 0.0;
    bool tau_at_boundary = false;
};

/// Sensitivity with N replaced by the sensing [NV-] concentration
/// nv_total * psi(I) * n_orientations/4, n_avg from the photon model times
/// the readout window, T2* from the dephasing budget of the chosen protocol.
VolumeSensitivity volume_normalized_sensitivity(const SensorMaterial& material,
                                                const IntensityTable& table, Intensity intensity,
                                                Protocol protocol, const EvaluationOptions& options);

/// eta_a / eta_b at one intensity.
double sensitivity_ratio(const SensorMaterial& a, const IntensityTable& table_a,
                         const SensorMaterial& b, const IntensityTable& table_b, Intensity intensity,
                         Protocol protocol, const EvaluationOptions& options);

}  // namespace nvsk
