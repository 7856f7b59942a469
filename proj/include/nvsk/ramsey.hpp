#pragma once

// Ramsey free-induction signals: stretched-exponential envelope times an
// equal-weight sum of hyperfine lines.
//
//   S(tau) = baseline + amplitude * exp(-(tau/T2*)^p)
//            * (1/n) sum_j cos(2 pi (detuning + j a_hf) tau + phi_j)
//
// with j running symmetrically about 0 (j = -1, 0, 1 for the 14N triplet).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nvsk {

struct RamseyModel {
    double t2_star_us = 1.0;
    double p = 1.0;
    double detuning_mhz = 0.0;
    double hyperfine_splitting_mhz = 2.16;
    int n_hyperfine = 3;
    double amplitude = 1.0;
    double baseline = 0.0;
    std::vector<double> phases;  // per line, radians; empty means all zero

    void validate() const;
    [[nodiscard]] double envelope(double tau_us) const;
    [[nodiscard]] double evaluate(double tau_us) const;
    /// detuning + j * splitting for each line, j ascending.
    [[nodiscard]] std::vector<double> line_frequencies() const;
};

/// Offset index of line i (0-based) among n lines, centered on zero.
[[nodiscard]] double hyperfine_offset(int i, int n) noexcept;

/// Samples the model on tau_us (positive, increasing) and adds Gaussian
/// noise of standard deviation noise_sigma drawn from a seeded mt19937_64.
std::vector<double> synthesize(const RamseyModel& model, std::span<const double> tau_us,
                               double noise_sigma, std::uint64_t seed);

/// Uniform grid 0, dt, ..., <= t_max.
std::vector<double> uniform_tau_grid(double t_max_us, double dt_us);

struct RamseyFitOptions {
    int n_hyperfine = 3;
    bool fit_splitting = true;
    double hyperfine_splitting_mhz = 2.16;  // used when fit_splitting is false
    int max_iterations = 200;
    double relative_step_tolerance = 1e-8;
};

struct RamseyFitResult {
    double t2_star_us = 0.0, t2_star_sigma = 0.0;
    double p = 0.0, p_sigma = 0.0;
    double detuning_mhz = 0.0, detuning_sigma = 0.0;
    double hyperfine_splitting_mhz = 0.0, hyperfine_splitting_sigma = 0.0;
    double amplitude = 0.0, amplitude_sigma = 0.0;
    double baseline = 0.0, baseline_sigma = 0.0;
    double phase_rad = 0.0, phase_sigma = 0.0;
    int n_hyperfine = 0;
    std::vector<double> line_frequencies_mhz;
    double residual_rms = 0.0;
    int iterations = 0;
    std::vector<double> envelope;  // exp(-(tau/T2*)^p) on the input grid

    /// The fitted model (common phase on every line).
    [[nodiscard]] RamseyModel model() const;
};

/// Nonlinear least-squares fit of the model with a common line phase.
///
/// Initialization is deterministic: line frequencies are picked from the
/// periodogram peaks, (detuning, splitting) is chosen among peak-derived
/// candidates by linear residual, and T2* comes from a weighted regression
/// of the log envelope; p starts at 1. An explicit guess skips this.
///
/// Throws ValidationError for under-sampled input (< 4 samples per period
/// of the fastest line, or < 8 periods of it in the record) and
/// ComputationError on non-convergence.
RamseyFitResult fit_ramsey(std::span<const double> tau_us, std::span<const double> signal,
                           const RamseyFitOptions& options = {},
                           const std::optional<RamseyModel>& initial_guess = std::nullopt);

/// Formats value(uncertainty) in parenthesis notation, e.g. 17.7(4).
std::string parenthesis_notation(double value, double sigma);

}  // namespace nvsk
