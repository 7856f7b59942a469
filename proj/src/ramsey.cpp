#include "nvsk/ramsey.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "nvsk/core_types.hpp"
#include "nvsk/levenberg_marquardt.hpp"
#include "nvsk/numfmt.hpp"

namespace nvsk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Parameter layout of the fit vector.
enum Param : int { kBaseline, kAmplitude, kT2, kP, kDetuning, kPhase, kSplitting };

struct LineSet {
    std::vector<double> offsets;  // j values
};

LineSet make_lines(int n) {
    LineSet l;
    for (int i = 0; i < n; ++i) l.offsets.push_back(hyperfine_offset(i, n));
    return l;
}

double stretched(double tau, double t2, double p) {
    if (tau <= 0.0) return 1.0;
    return std::exp(-std::pow(tau / t2, p));
}

// Linear least squares for S = b + c1 * E*Bc + c2 * E*Bs, returning
// (baseline, amplitude, phase, rss).
struct LinearSeed {
    double baseline, amplitude, phase, rss;
};

LinearSeed linear_seed(std::span<const double> tau, std::span<const double> y, double detuning,
                       double splitting, const LineSet& lines, double t2) {
    const auto m = static_cast<Eigen::Index>(tau.size());
    Eigen::MatrixXd a(m, 3);
    Eigen::VectorXd rhs(m);
    const double inv_n = 1.0 / static_cast<double>(lines.offsets.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        double bc = 0.0, bs = 0.0;
        for (double o : lines.offsets) {
            const double th = kTwoPi * (detuning + o * splitting) * tau[i];
            bc += std::cos(th);
            bs -= std::sin(th);
        }
        const double e = stretched(tau[i], t2, 1.0);
        a(i, 0) = 1.0;
        a(i, 1) = e * bc * inv_n;
        a(i, 2) = e * bs * inv_n;
        rhs(i) = y[i];
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(rhs);
    const double rss = (a * c - rhs).squaredNorm();
    return {c(0), std::hypot(c(1), c(2)), std::atan2(c(2), c(1)), rss};
}

// Weighted regression of log((y - b) / B(tau)) on tau over points where the
// beat factor is large, giving a p = 1 envelope time constant.
double log_envelope_t2(std::span<const double> tau, std::span<const double> y, double detuning,
                       double splitting, const LineSet& lines, const LinearSeed& seed,
                       double fallback) {
    const double inv_n = 1.0 / static_cast<double>(lines.offsets.size());
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        double beat = 0.0;
        for (double o : lines.offsets)
            beat += std::cos(kTwoPi * (detuning + o * splitting) * tau[i] + seed.phase);
        beat *= inv_n;
        if (std::abs(beat) < 0.5) continue;
        const double z = (y[i] - seed.baseline) / (seed.amplitude * beat);
        if (!(z > 0.0)) continue;
        const double w = z * z;
        const double ly = std::log(z);
        sw += w;
        sx += w * tau[i];
        sy += w * ly;
        sxx += w * tau[i] * tau[i];
        sxy += w * tau[i] * ly;
        ++used;
    }
    const double denom = sw * sxx - sx * sx;
    if (used < 3 || !(denom > 0.0)) return fallback;
    const double slope = (sw * sxy - sx * sy) / denom;
    if (!(slope < 0.0)) return fallback;
    return -1.0 / slope;
}

// Local maxima of the periodogram of y - mean, strongest first.
std::vector<double> spectral_peaks(std::span<const double> tau, std::span<const double> y,
                                   double f_max, std::size_t count) {
    const double span = tau.back() - tau.front();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());

    const double df = 1.0 / (4.0 * span);
    const auto nf = static_cast<std::size_t>(f_max / df) + 1;
    std::vector<double> power(nf);
    for (std::size_t k = 0; k < nf; ++k) {
        const double f = static_cast<double>(k) * df;
        std::complex<double> acc = 0.0;
        // Recurrence for exp(-i 2 pi f tau) on a uniform grid would be
        // faster; the direct sum keeps non-uniform grids correct.
        for (std::size_t i = 0; i < tau.size(); ++i)
            acc += (y[i] - mean) * std::polar(1.0, -kTwoPi * f * tau[i]);
        power[k] = std::norm(acc);
    }
    std::vector<std::pair<double, double>> peaks;
    for (std::size_t k = 1; k + 1 < nf; ++k)
        if (power[k] > power[k - 1] && power[k] >= power[k + 1])
            peaks.emplace_back(power[k], static_cast<double>(k) * df);
    std::sort(peaks.begin(), peaks.end(), [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<double> out;
    for (std::size_t i = 0; i < std::min(count, peaks.size()); ++i) out.push_back(peaks[i].second);
    return out;
}

struct Candidate {
    double detuning, splitting;
};

std::vector<Candidate> frequency_candidates(const std::vector<double>& peaks, int n_lines,
                                            bool fit_splitting, double fixed_splitting) {
    std::vector<Candidate> out;
    if (n_lines == 1 || !fit_splitting) {
        for (double f : peaks) {
            out.push_back({f, fixed_splitting});
            if (n_lines > 1) {
                // The strongest peak may be an outer line.
                const double half = 0.5 * (n_lines - 1);
                for (double o = -half; o <= half; o += 1.0)
                    out.push_back({std::abs(f - o * fixed_splitting), fixed_splitting});
            }
        }
        return out;
    }
    for (std::size_t i = 0; i < peaks.size(); ++i)
        for (std::size_t j = 0; j < peaks.size(); ++j) {
            if (i == j) continue;
            for (double a : {std::abs(peaks[i] - peaks[j]), peaks[i] + peaks[j],
                             0.5 * std::abs(peaks[i] - peaks[j]), 0.5 * (peaks[i] + peaks[j])}) {
                if (!(a > 0.0)) continue;
                for (double d : peaks) out.push_back({d, a});
            }
        }
    return out;
}

}  // namespace

double hyperfine_offset(int i, int n) noexcept { return i - 0.5 * (n - 1); }

void RamseyModel::validate() const {
    if (!(t2_star_us > 0.0) || !std::isfinite(t2_star_us))
        throw ValidationError("Ramsey T2* must be > 0");
    if (!(p >= 0.5 && p <= 3.0)) throw ValidationError("Ramsey stretch exponent p must be in [0.5, 3]");
    if (n_hyperfine < 1) throw ValidationError("n_hyperfine must be >= 1");
    if (!phases.empty() && static_cast<int>(phases.size()) != n_hyperfine)
        throw ValidationError("phases must be empty or have one entry per line");
}

double RamseyModel::envelope(double tau_us) const { return stretched(tau_us, t2_star_us, p); }

double RamseyModel::evaluate(double tau_us) const {
    double beat = 0.0;
    for (int i = 0; i < n_hyperfine; ++i) {
        const double f = detuning_mhz + hyperfine_offset(i, n_hyperfine) * hyperfine_splitting_mhz;
        const double phi = phases.empty() ? 0.0 : phases[static_cast<std::size_t>(i)];
        beat += std::cos(kTwoPi * f * tau_us + phi);
    }
    return baseline + amplitude * envelope(tau_us) * beat / n_hyperfine;
}

std::vector<double> RamseyModel::line_frequencies() const {
    std::vector<double> out;
    for (int i = 0; i < n_hyperfine; ++i)
        out.push_back(detuning_mhz + hyperfine_offset(i, n_hyperfine) * hyperfine_splitting_mhz);
    return out;
}

std::vector<double> synthesize(const RamseyModel& model, std::span<const double> tau_us,
                               double noise_sigma, std::uint64_t seed) {
    model.validate();
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise sigma must be >= 0");
    for (std::size_t i = 0; i < tau_us.size(); ++i) {
        if (!(tau_us[i] >= 0.0) || (i > 0 && !(tau_us[i] > tau_us[i - 1])))
            throw ValidationError("tau grid must be non-negative and strictly increasing");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> out;
    out.reserve(tau_us.size());
    for (double t : tau_us) {
        double v = model.evaluate(t);
        if (noise_sigma > 0.0) v += noise_sigma * noise(rng);
        out.push_back(v);
    }
    return out;
}

std::vector<double> uniform_tau_grid(double t_max_us, double dt_us) {
    if (!(dt_us > 0.0) || !(t_max_us > 0.0)) throw ValidationError("tau grid needs t_max, dt > 0");
    const auto n = static_cast<std::size_t>(std::floor(t_max_us / dt_us + 1e-9)) + 1;
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) * dt_us;
    return g;
}

RamseyModel RamseyFitResult::model() const {
    RamseyModel m;
    m.t2_star_us = t2_star_us;
    m.p = std::clamp(p, 0.5, 3.0);
    m.detuning_mhz = detuning_mhz;
    m.hyperfine_splitting_mhz = hyperfine_splitting_mhz;
    m.n_hyperfine = n_hyperfine;
    m.amplitude = amplitude;
    m.baseline = baseline;
    m.phases.assign(static_cast<std::size_t>(n_hyperfine), phase_rad);
    return m;
}

RamseyFitResult fit_ramsey(std::span<const double> tau_us, std::span<const double> signal,
                           const RamseyFitOptions& options,
                           const std::optional<RamseyModel>& initial_guess) {
    if (tau_us.size() != signal.size()) throw ValidationError("tau and signal lengths differ");
    if (tau_us.size() < 16) throw ValidationError("Ramsey fit needs at least 16 samples");
    if (options.n_hyperfine < 1) throw ValidationError("n_hyperfine must be >= 1");
    double max_dt = 0.0;
    for (std::size_t i = 0; i < tau_us.size(); ++i) {
        if (!std::isfinite(tau_us[i]) || !std::isfinite(signal[i]))
            throw ValidationError("Ramsey data contains non-finite values");
        if (tau_us[i] < 0.0 || (i > 0 && !(tau_us[i] > tau_us[i - 1])))
            throw ValidationError("tau grid must be non-negative and strictly increasing");
        if (i > 0) max_dt = std::max(max_dt, tau_us[i] - tau_us[i - 1]);
    }
    const double span = tau_us.back() - tau_us.front();
    const double nyquist = 0.5 / max_dt;
    const LineSet lines = make_lines(options.n_hyperfine);
    const bool fit_splitting = options.fit_splitting && options.n_hyperfine > 1;

    double b0 = 0, a0 = 0, t20 = 0, p0 = 1, d0 = 0, ph0 = 0, s0 = options.hyperfine_splitting_mhz;
    if (initial_guess) {
        initial_guess->validate();
        b0 = initial_guess->baseline;
        a0 = initial_guess->amplitude;
        t20 = initial_guess->t2_star_us;
        p0 = initial_guess->p;
        d0 = initial_guess->detuning_mhz;
        ph0 = initial_guess->phases.empty() ? 0.0 : initial_guess->phases.front();
        if (fit_splitting) s0 = initial_guess->hyperfine_splitting_mhz;
    } else {
        const std::vector<double> peaks = spectral_peaks(tau_us, signal, nyquist, 5);
        if (peaks.empty()) throw ComputationError("no spectral peaks found in Ramsey signal");
        for (double f : peaks)
            if (f > 0.25 / max_dt)
                throw ValidationError("under-sampled Ramsey signal: spectral peak at " +
                                      format_g9(f) + " MHz exceeds 1/(4 dt) = " +
                                      format_g9(0.25 / max_dt) + " MHz");
        const auto cands = frequency_candidates(peaks, options.n_hyperfine, fit_splitting,
                                                options.hyperfine_splitting_mhz);
        double best_rss = std::numeric_limits<double>::infinity();
        const double t2_start = span / 3.0;
        for (const auto& c : cands) {
            LinearSeed ls = linear_seed(tau_us, signal, c.detuning, c.splitting, lines, t2_start);
            double t2 = t2_start;
            for (int pass = 0; pass < 2; ++pass) {
                t2 = log_envelope_t2(tau_us, signal, c.detuning, c.splitting, lines, ls, t2);
                t2 = std::clamp(t2, 4.0 * max_dt, 10.0 * span);
                ls = linear_seed(tau_us, signal, c.detuning, c.splitting, lines, t2);
            }
            if (ls.rss < best_rss) {
                best_rss = ls.rss;
                b0 = ls.baseline;
                a0 = ls.amplitude;
                ph0 = ls.phase;
                t20 = t2;
                d0 = c.detuning;
                s0 = c.splitting;
            }
        }
    }

    double fastest = 0.0;
    for (double o : lines.offsets) fastest = std::max(fastest, std::abs(d0 + o * s0));
    if (fastest > 0.0) {
        if (max_dt > 0.25 / fastest * (1.0 + 1e-9))
            throw ValidationError("under-sampled Ramsey signal: need >= 4 samples per period of the " +
                                  format_g9(fastest) + " MHz line");
        if (span * fastest < 8.0)
            throw ValidationError("Ramsey record spans fewer than 8 periods of the fastest line");
    }

    const int n_params = fit_splitting ? 7 : 6;
    Eigen::VectorXd x0(n_params);
    x0(kBaseline) = b0;
    x0(kAmplitude) = a0;
    x0(kT2) = t20;
    x0(kP) = p0;
    x0(kDetuning) = d0;
    x0(kPhase) = ph0;
    if (fit_splitting) x0(kSplitting) = s0;
    const double fixed_splitting = s0;
    const double inv_n = 1.0 / static_cast<double>(lines.offsets.size());

    const ResidualFunction residuals = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                           Eigen::MatrixXd* jac) {
        const double b = x(kBaseline), a = x(kAmplitude), t2 = x(kT2), p = x(kP);
        const double d = x(kDetuning), ph = x(kPhase);
        const double sp = fit_splitting ? x(kSplitting) : fixed_splitting;
        for (std::size_t i = 0; i < tau_us.size(); ++i) {
            const double t = tau_us[i];
            double beat = 0.0, dbeat_dd = 0.0, dbeat_ds = 0.0, dbeat_dph = 0.0;
            for (double o : lines.offsets) {
                const double th = kTwoPi * (d + o * sp) * t + ph;
                const double sn = std::sin(th);
                beat += std::cos(th);
                dbeat_dd -= sn * kTwoPi * t;
                dbeat_ds -= sn * kTwoPi * o * t;
                dbeat_dph -= sn;
            }
            beat *= inv_n;
            const double u = t > 0.0 ? std::pow(t / t2, p) : 0.0;
            const double e = std::exp(-u);
            const auto k = static_cast<Eigen::Index>(i);
            r(k) = b + a * e * beat - signal[i];
            if (jac) {
                auto row = jac->row(k);
                row(kBaseline) = 1.0;
                row(kAmplitude) = e * beat;
                row(kT2) = a * beat * e * u * p / t2;
                row(kP) = t > 0.0 ? -a * beat * e * u * std::log(t / t2) : 0.0;
                row(kDetuning) = a * e * dbeat_dd * inv_n;
                row(kPhase) = a * e * dbeat_dph * inv_n;
                if (fit_splitting) row(kSplitting) = a * e * dbeat_ds * inv_n;
            }
        }
    };
    const ParameterGuard guard = [](const Eigen::VectorXd& x) {
        return x(kT2) > 0.0 && x(kP) > 0.2 && x(kP) < 6.0 && x.allFinite();
    };

    LevenbergMarquardtOptions lm;
    lm.max_iterations = options.max_iterations;
    lm.relative_step_tolerance = options.relative_step_tolerance;
    const auto res = levenberg_marquardt(residuals, x0, static_cast<int>(tau_us.size()), lm, guard);
    if (!res.converged) throw ComputationError("Ramsey fit did not converge: " + res.message);

    const auto sigma = [&](int i) { return std::sqrt(std::max(res.covariance(i, i), 0.0)); };
    RamseyFitResult out;
    out.baseline = res.x(kBaseline);
    out.baseline_sigma = sigma(kBaseline);
    out.amplitude = res.x(kAmplitude);
    out.amplitude_sigma = sigma(kAmplitude);
    out.t2_star_us = res.x(kT2);
    out.t2_star_sigma = sigma(kT2);
    out.p = res.x(kP);
    out.p_sigma = sigma(kP);
    out.detuning_mhz = res.x(kDetuning);
    out.detuning_sigma = sigma(kDetuning);
    out.phase_rad = res.x(kPhase);
    out.phase_sigma = sigma(kPhase);
    out.hyperfine_splitting_mhz = fit_splitting ? res.x(kSplitting) : fixed_splitting;
    out.hyperfine_splitting_sigma = fit_splitting ? sigma(kSplitting) : 0.0;
    // Negative amplitude is the same curve with the phase shifted by pi.
    if (out.amplitude < 0.0) {
        out.amplitude = -out.amplitude;
        out.phase_rad += std::numbers::pi;
    }
    out.phase_rad = std::remainder(out.phase_rad, kTwoPi);
    out.n_hyperfine = options.n_hyperfine;
    for (double o : lines.offsets)
        out.line_frequencies_mhz.push_back(out.detuning_mhz + o * out.hyperfine_splitting_mhz);
    out.residual_rms = res.residual_rms;
    out.iterations = res.iterations;
    out.envelope.reserve(tau_us.size());
    for (double t : tau_us) out.envelope.push_back(stretched(t, out.t2_star_us, out.p));
    return out;
}

std::string parenthesis_notation(double value, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) return format_g9(value);
    int decimals = -static_cast<int>(std::floor(std::log10(sigma)));
    long digit = std::lround(sigma * std::pow(10.0, decimals));
    if (digit >= 10) {  // rounding 0.96 -> 10
        --decimals;
        digit = std::lround(sigma * std::pow(10.0, decimals));
    }
    char buf[64];
    if (decimals > 0) {
        std::snprintf(buf, sizeof buf, "%.*f(%ld)", decimals, value, digit);
    } else {
        const double unit = std::pow(10.0, -decimals);
        std::snprintf(buf, sizeof buf, "%.0f(%.0f)", std::round(value / unit) * unit,
                      static_cast<double>(digit) * unit);
    }
    return buf;
}

}  // namespace nvsk
