#include "nvsk/sensitivity.hpp"

#include <cmath>
#include <string>

#include "nvsk/numfmt.hpp"
#include "nvsk/optimize.hpp"

namespace nvsk {

namespace {

constexpr double kTauRelTol = 1e-6;
constexpr double kNitrogenRelTol = 1e-4;
// Lower end of the tau search, relative to tau_max.
constexpr double kTauSearchSpan = 1e-7;

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

double lerp(double a, double b, double w) { return a + (b - a) * w; }

}  // namespace

void SensingParams::validate() const {
    require(delta_ms == 1 || delta_ms == 2, "delta_ms must be 1 or 2");
    require(std::isfinite(gamma_e) && gamma_e > 0.0, "gamma_e must be > 0");
    require(std::isfinite(n_sensors) && n_sensors > 0.0, "n_sensors must be > 0");
    require(std::isfinite(tau_us) && tau_us > 0.0, "tau must be > 0");
    require(std::isfinite(p) && p >= 1.0, "stretch exponent p must be >= 1");
    require(std::isfinite(contrast) && contrast > 0.0 && contrast <= 1.0,
            "contrast must be in (0,1], got " + format_g9(contrast));
    require(!std::isnan(n_avg) && n_avg >= 0.0, "n_avg must be >= 0");
    require(std::isfinite(t_overhead_us) && t_overhead_us >= 0.0, "t_overhead must be >= 0");
}

double ramsey_sensitivity(const SensingParams& params) {
    params.validate();
    if (params.n_avg == 0.0) throw ValidationError("readout noise term undefined: n_avg = 0");

    const double prefactor = 1.0 / (params.delta_ms * params.gamma_e);
    const double counting = 1.0 / std::sqrt(params.n_sensors * params.tau_us);
    const double decay =
        params.t2_star.is_unbounded()
            ? 1.0
            : std::exp(std::pow(params.tau_us * params.t2_star.rate_per_us(), params.p));
    const double readout =
        std::isinf(params.n_avg)
            ? 1.0
            : std::sqrt(1.0 + 1.0 / (params.contrast * params.contrast * params.n_avg));
    const double duty = std::sqrt((params.tau_us + params.t_overhead_us) / params.tau_us);
    return prefactor * counting * decay * readout * duty;
}

TauOptimum optimal_tau(const SensingParams& params, std::optional<double> tau_max_us) {
    double hi = 0.0;
    if (tau_max_us) {
        hi = *tau_max_us;
    } else if (!params.t2_star.is_unbounded()) {
        hi = 5.0 * params.t2_star.us();
    } else {
        throw ValidationError("optimal_tau: unbounded T2* requires an explicit tau_max");
    }
    require(std::isfinite(hi) && hi > 0.0, "optimal_tau: tau_max must be finite and > 0");

    SensingParams trial = params;
    trial.tau_us = hi;
    trial.validate();
    if (trial.n_avg == 0.0) throw ValidationError("readout noise term undefined: n_avg = 0");

    const auto objective = [&](double tau) {
        trial.tau_us = tau;
        return ramsey_sensitivity(trial);
    };
    const ScalarMinimum m = minimize_log_domain(objective, hi * kTauSearchSpan, hi, kTauRelTol);
    return {m.x, m.value, m.at_boundary};
}

double metric_t2_star_us(Concentration ns0, const MetricConfig& cfg) {
    cfg.bath.validate();
    const double rate =
        cfg.bath.a_ns0_per_us_ppm * ns0.ppm() + cfg.bath.a_c13_per_us_ppm * cfg.c13.ppm();
    require(rate > 0.0, "metric T2* is unbounded: zero bath rate");
    return 1.0 / rate;
}

double simplified_metric(Concentration ns0, const MetricConfig& cfg) {
    require(ns0.ppm() > 0.0, "simplified_metric: [N0s] must be > 0");
    require(std::isfinite(cfg.t_overhead_us) && cfg.t_overhead_us >= 0.0,
            "t_overhead must be >= 0");
    const double t2 = metric_t2_star_us(ns0, cfg);
    return std::sqrt((t2 + cfg.t_overhead_us) / (ns0.ppm() * t2 * t2));
}

NitrogenOptimum optimal_nitrogen(double t_overhead_us, const MetricConfig& cfg) {
    require(std::isfinite(t_overhead_us) && t_overhead_us >= 0.0, "t_overhead must be >= 0");
    MetricConfig c = cfg;
    c.t_overhead_us = t_overhead_us;
    const auto objective = [&](double n) { return simplified_metric(Concentration(n), c); };
    const ScalarMinimum m = minimize_log_domain(objective, kNitrogenSearchLowPpm,
                                                kNitrogenSearchHighPpm, kNitrogenRelTol, 128);
    return {Concentration(m.x), m.value, !m.at_boundary};
}

IntensityTable::IntensityTable(std::vector<IntensityRow> rows) : rows_(std::move(rows)) {
    require(!rows_.empty(), "intensity table is empty");
    has_rate_ = true;
    has_readout_ = true;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        const std::string where = " (row " + std::to_string(i + 1) + ")";
        require(r.intensity.mw_per_um2() > 0.0, "intensity must be > 0" + where);
        if (i > 0) {
            require(r.intensity != rows_[i - 1].intensity, "duplicate intensity" + where);
            require(r.intensity > rows_[i - 1].intensity, "non-monotone intensity" + where);
        }
        require(std::isfinite(r.contrast) && r.contrast > 0.0 && r.contrast <= 1.0,
                "contrast must be in (0,1]" + where);
        require(std::isfinite(r.psi) && r.psi >= 0.0 && r.psi <= 1.0, "psi out of [0,1]" + where);
        require(std::isfinite(r.t_overhead_us) && r.t_overhead_us >= 0.0,
                "overhead must be >= 0" + where);
        if (r.photon_rate_kcps)
            require(std::isfinite(*r.photon_rate_kcps) && *r.photon_rate_kcps >= 0.0,
                    "photon rate must be >= 0" + where);
        if (r.readout_us)
            require(std::isfinite(*r.readout_us) && *r.readout_us > 0.0,
                    "readout window must be > 0" + where);
        has_rate_ = has_rate_ && r.photon_rate_kcps.has_value();
        has_readout_ = has_readout_ && r.readout_us.has_value();
    }
}

InterpolatedRow IntensityTable::at(Intensity intensity) const {
    require(!rows_.empty(), "intensity table is empty");
    if (intensity < min_intensity() || intensity > max_intensity())
        throw ValidationError("intensity " + format_g9(intensity.mw_per_um2()) +
                              " mW/um^2 outside table range [" +
                              format_g9(min_intensity().mw_per_um2()) + ", " +
                              format_g9(max_intensity().mw_per_um2()) + "] (no extrapolation)");

    std::size_t hi = 0;
    while (hi < rows_.size() && rows_[hi].intensity < intensity) ++hi;
    InterpolatedRow out;
    if (rows_[hi].intensity == intensity) {
        const auto& r = rows_[hi];
        out = {r.contrast, r.psi, r.t_overhead_us, r.photon_rate_kcps, r.readout_us};
        if (!has_rate_) out.photon_rate_kcps.reset();
        if (!has_readout_) out.readout_us.reset();
        return out;
    }
    const auto& a = rows_[hi - 1];
    const auto& b = rows_[hi];
    const double la = std::log10(a.intensity.mw_per_um2());
    const double lb = std::log10(b.intensity.mw_per_um2());
    const double w = (std::log10(intensity.mw_per_um2()) - la) / (lb - la);
    out.contrast = lerp(a.contrast, b.contrast, w);
    out.psi = lerp(a.psi, b.psi, w);
    out.t_overhead_us = lerp(a.t_overhead_us, b.t_overhead_us, w);
    if (has_rate_) out.photon_rate_kcps = lerp(*a.photon_rate_kcps, *b.photon_rate_kcps, w);
    if (has_readout_) out.readout_us = lerp(*a.readout_us, *b.readout_us, w);
    return out;
}

void PhotonModel::validate() const {
    require(std::isfinite(reference_rate_kcps) && reference_rate_kcps > 0.0,
            "photon reference rate must be > 0");
    require(std::isfinite(reference_intensity_mw_um2) && reference_intensity_mw_um2 > 0.0,
            "photon reference intensity must be > 0");
    require(std::isfinite(i_sat_mw_um2) && i_sat_mw_um2 > 0.0, "photon i_sat must be > 0");
    if (readout_window_us)
        require(std::isfinite(*readout_window_us) && *readout_window_us > 0.0,
                "readout window must be > 0");
}

double PhotonModel::rate_kcps(Intensity intensity) const {
    validate();
    const auto sat = [this](double i) {
        const double s = i / i_sat_mw_um2;
        return s / (1.0 + s);
    };
    return reference_rate_kcps * sat(intensity.mw_per_um2()) / sat(reference_intensity_mw_um2);
}

const char* to_string(Protocol p) noexcept { return p == Protocol::SQ ? "sq" : "dq"; }

Protocol protocol_from_string(const std::string& s) {
    if (s == "sq" || s == "SQ") return Protocol::SQ;
    if (s == "dq" || s == "DQ") return Protocol::DQ;
    throw ValidationError("protocol must be 'sq' or 'dq', got '" + s + "'");
}

DephasingBudget SensorMaterial::sq_budget() const {
    const StrainDephasing strain = strain_rate_from_fwhm(strain_fwhm_khz);
    return combine_budget(spin_bath_budget(sample, bath), strain.rate_per_us, bias_rate_per_us);
}

DephasingTime SensorMaterial::t2_star(Protocol protocol) const {
    const DephasingBudget sq = sq_budget();
    return protocol == Protocol::SQ ? sq.t2_star_total() : dq_t2star(sq);
}

VolumeSensitivity volume_normalized_sensitivity(const SensorMaterial& material,
                                                const IntensityTable& table, Intensity intensity,
                                                Protocol protocol, const EvaluationOptions& options) {
    options.constants.validate();
    options.photon.validate();
    const DiamondSample sample = validate_sample(material.sample);
    const InterpolatedRow row = table.at(intensity);

    const double rate_kcps =
        row.photon_rate_kcps ? *row.photon_rate_kcps : options.photon.rate_kcps(intensity);
    const double readout_us = row.readout_us                        ? *row.readout_us
                              : options.photon.readout_window_us ? *options.photon.readout_window_us
                                                                 : row.t_overhead_us;

    SensingParams params;
    params.delta_ms = protocol == Protocol::SQ ? 1 : 2;
    params.gamma_e = options.constants.gamma_e_mhz_per_g;
    params.n_sensors = sample.nv_total.ppm() * row.psi * sample.n_orientations_sensing / 4.0;
    params.t2_star = material.t2_star(protocol);
    params.p = material.stretch_p;
    params.contrast = row.contrast;
    params.n_avg = rate_kcps * 1e-3 * readout_us;  // kcps = 1e-3 per us
    params.t_overhead_us = row.t_overhead_us;

    VolumeSensitivity out;
    out.n_sensors_ppm = params.n_sensors;
    out.n_avg = params.n_avg;
    out.contrast = params.contrast;
    out.t_overhead_us = params.t_overhead_us;
    out.t2_star_us = params.t2_star.us();
    if (options.tau_policy == TauPolicy::Optimal) {
        const TauOptimum opt = optimal_tau(params);
        out.tau_us = opt.tau_us;
        out.eta = opt.eta;
        out.tau_at_boundary = opt.at_boundary;
    } else {
        params.tau_us = out.t2_star_us;
        out.tau_us = params.tau_us;
        out.eta = ramsey_sensitivity(params);
    }
    return out;
}

double sensitivity_ratio(const SensorMaterial& a, const IntensityTable& table_a,
                         const SensorMaterial& b, const IntensityTable& table_b, Intensity intensity,
                         Protocol protocol, const EvaluationOptions& options) {
    const double eta_a =
        volume_normalized_sensitivity(a, table_a, intensity, protocol, options).eta;
    const double eta_b =
        volume_normalized_sensitivity(b, table_b, intensity, protocol, options).eta;
    return eta_a / eta_b;
}

}  // namespace nvsk
