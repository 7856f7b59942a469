// nvsk: command-line front end. Every command that writes a file also
// writes a manifest sidecar with digests of its inputs and outputs.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nvsk/charge.hpp"
#include "nvsk/config.hpp"
#include "nvsk/dephasing.hpp"
#include "nvsk/emit.hpp"
#include "nvsk/numfmt.hpp"
#include "nvsk/photophysics.hpp"
#include "nvsk/ramsey.hpp"
#include "nvsk/sensitivity.hpp"
#include "nvsk/strainmap.hpp"
#include "nvsk/table_io.hpp"

using namespace nvsk;
using nlohmann::ordered_json;

namespace {

struct Globals {
    std::vector<std::string> config_paths;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string command_line;

    [[nodiscard]] Config config(const std::vector<std::string>& extra = {}) const {
        std::vector<std::string> paths = config_paths;
        paths.insert(paths.end(), extra.begin(), extra.end());
        return resolve_config(paths, overrides);
    }
};

// "lo:hi[:log|lin[:n]]" -> grid points.
std::vector<double> parse_grid(const std::string& text, std::size_t default_n = 50) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    if (parts.size() < 2 || parts.size() > 4)
        throw ValidationError("grid must be lo:hi[:log|lin[:n]], got '" + text + "'");
    double lo = 0, hi = 0;
    try {
        lo = std::stod(parts[0]);
        hi = std::stod(parts[1]);
    } catch (const std::exception&) {
        throw ValidationError("grid bounds are not numbers: '" + text + "'");
    }
    const std::string scale = parts.size() > 2 ? parts[2] : "log";
    std::size_t n = default_n;
    if (parts.size() > 3) {
        try {
            n = static_cast<std::size_t>(std::stoul(parts[3]));
        } catch (const std::exception&) {
            throw ValidationError("grid point count is not an integer: '" + text + "'");
        }
    }
    if (scale != "log" && scale != "lin") throw ValidationError("grid scale must be log or lin");
    if (!(hi > lo) || n < 2) throw ValidationError("grid needs hi > lo and n >= 2");
    if (scale == "log" && !(lo > 0.0)) throw ValidationError("log grid needs lo > 0");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = scale == "log" ? std::pow(10.0, std::log10(lo) + f * (std::log10(hi) - std::log10(lo)))
                              : lo + f * (hi - lo);
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::string basename_of(const std::string& p) {
    const auto slash = p.find_last_of('/');
    return slash == std::string::npos ? p : p.substr(slash + 1);
}

void finish(const Globals& g, const Config& cfg, std::vector<std::string> inputs,
            const std::vector<std::string>& outputs, std::optional<std::uint64_t> seed = std::nullopt) {
    RunManifest m;
    m.command = g.command_line;
    m.config = cfg.to_json();
    inputs.insert(inputs.begin(), g.config_paths.begin(), g.config_paths.end());
    m.inputs = std::move(inputs);
    m.outputs = outputs;
    m.seed = seed ? seed : g.seed;
    m.gamma_e_mhz_per_g = cfg.constants.gamma_e_mhz_per_g;
    m.gamma_convention = to_string(cfg.constants.gamma_convention);
    write_manifest(m);
}

void write_json_output(const Globals& g, const Config& cfg, const std::string& out, ordered_json body,
                       const std::vector<std::string>& inputs, std::optional<std::uint64_t> seed = std::nullopt) {
    if (out.empty()) {
        std::cout << format_json(body);
        return;
    }
    body["manifest"] = basename_of(manifest_path(out));
    write_file(out, format_json(body));
    finish(g, cfg, inputs, {out}, seed);
}

void write_csv_output(const Globals& g, const Config& cfg, const std::string& out, const CsvTable& table,
                      const std::vector<std::string>& inputs, std::optional<std::uint64_t> seed = std::nullopt) {
    if (out.empty()) {
        std::cout << format_csv(table);
        return;
    }
    write_file(out, format_csv(table));
    finish(g, cfg, inputs, {out}, seed);
}

ordered_json time_or_null(const DephasingTime& t) {
    const auto us = t.maybe_us();
    return us ? ordered_json(*us) : ordered_json(nullptr);
}

ordered_json rate_entry(double rate) {
    return {{"rate_per_us", rate}, {"t2_star_us", time_or_null(DephasingTime::from_rate(rate))}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nvsk: NV-ensemble magnetometry sensitivity toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Globals g;
    for (int i = 0; i < argc; ++i) g.command_line += (i ? " " : "") + std::string(argv[i]);
    std::uint64_t seed_value = 0;
    app.add_option("--config", g.config_paths, "Config file(s), applied in order")->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "Override section.key=value");
    auto* seed_opt = app.add_option("--seed", seed_value, "Random seed for synthetic data");
    app.fallthrough();

    // dephasing
    auto* deph = app.add_subcommand("dephasing", "T2* budget of the configured sample");
    std::optional<double> deph_strain;
    std::string deph_out;
    deph->add_option("--strain-fwhm-khz", deph_strain, "Strain linewidth (kHz)");
    deph->add_option("--out", deph_out, "Output JSON (stdout if omitted)");

    // sensitivity
    auto* sens = app.add_subcommand("sensitivity", "Sensitivity sweeps and comparisons");
    sens->require_subcommand(1);
    auto* sweep = sens->add_subcommand("sweep", "Volume-normalized sensitivity versus intensity");
    std::string sweep_sample, sweep_table, sweep_protocol = "sq", sweep_grid, sweep_out;
    sweep->add_option("--sample", sweep_sample, "Sample config")->check(CLI::ExistingFile);
    sweep->add_option("--table", sweep_table, "Intensity table CSV")->required()->check(CLI::ExistingFile);
    sweep->add_option("--protocol", sweep_protocol, "sq or dq");
    sweep->add_option("--grid", sweep_grid, "Intensity grid lo:hi:log:n (default: table rows)");
    sweep->add_option("--out", sweep_out, "Output CSV");

    auto* optn = sens->add_subcommand("optimal-n", "Optimal nitrogen versus overhead time");
    std::string optn_grid = "0.1:100:log:50", optn_out;
    optn->add_option("--to-grid", optn_grid, "Overhead grid lo:hi:log:n (us)");
    optn->add_option("--out", optn_out, "Output CSV");

    auto* cmp = sens->add_subcommand("compare", "Sensitivity ratio of two materials");
    std::string cmp_a, cmp_b, cmp_ta, cmp_tb, cmp_protocol = "sq", cmp_grid, cmp_out;
    cmp->add_option("--a", cmp_a, "Sample config A")->required()->check(CLI::ExistingFile);
    cmp->add_option("--a-table", cmp_ta, "Intensity table A")->required()->check(CLI::ExistingFile);
    cmp->add_option("--b", cmp_b, "Sample config B")->required()->check(CLI::ExistingFile);
    cmp->add_option("--b-table", cmp_tb, "Intensity table B")->required()->check(CLI::ExistingFile);
    cmp->add_option("--protocol", cmp_protocol, "sq or dq");
    cmp->add_option("--grid", cmp_grid, "Intensity grid (default: overlap of the tables, 40 log points)");
    cmp->add_option("--out", cmp_out, "Output CSV");

    // photophysics
    auto* photo = app.add_subcommand("photophysics", "Five-level rate-equation simulations");
    photo->require_subcommand(1);
    auto* sim = photo->add_subcommand("simulate", "Contrast versus delay at one intensity");
    double sim_i = 1.0;
    std::optional<double> sim_isat, sim_tend, sim_dt;
    std::string sim_out;
    sim->add_option("--intensity", sim_i, "Intensity (mW/um^2)")->required();
    sim->add_option("--isat", sim_isat, "Saturation intensity (default: lower band edge)");
    sim->add_option("--t-end", sim_tend, "Simulated delay (us)");
    sim->add_option("--dt", sim_dt, "Output step (us)");
    sim->add_option("--out", sim_out, "Output CSV");

    auto* band = photo->add_subcommand("ti-band", "Initialization time band versus intensity");
    std::string band_grid = "1e-3:10:log:40", band_out;
    band->add_option("--grid", band_grid, "Intensity grid lo:hi:log:n");
    band->add_option("--out", band_out, "Output CSV");

    // ramsey
    auto* ram = app.add_subcommand("ramsey", "Ramsey signal synthesis and fitting");
    ram->require_subcommand(1);
    auto* rsyn = ram->add_subcommand("synth", "Synthetic Ramsey signal");
    RamseyModel rmodel;
    double r_tmax = 60.0, r_dt = 0.05, r_noise = 0.0;
    std::string rsyn_out;
    rsyn->add_option("--t2", rmodel.t2_star_us, "T2* (us)")->required();
    rsyn->add_option("--p", rmodel.p, "Stretch exponent");
    rsyn->add_option("--detuning", rmodel.detuning_mhz, "Detuning (MHz)");
    rsyn->add_option("--splitting", rmodel.hyperfine_splitting_mhz, "Hyperfine splitting (MHz)");
    rsyn->add_option("--lines", rmodel.n_hyperfine, "Number of hyperfine lines");
    rsyn->add_option("--amplitude", rmodel.amplitude, "Amplitude");
    rsyn->add_option("--baseline", rmodel.baseline, "Baseline");
    rsyn->add_option("--noise", r_noise, "Gaussian noise sigma");
    rsyn->add_option("--t-max", r_tmax, "Last delay (us)");
    rsyn->add_option("--dt", r_dt, "Delay step (us)");
    rsyn->add_option("--out", rsyn_out, "Output CSV");

    auto* rfit = ram->add_subcommand("fit", "Fit a Ramsey signal");
    std::string rfit_in, rfit_out;
    rfit->add_option("signal", rfit_in, "CSV with tau_us, signal")->required()->check(CLI::ExistingFile);
    rfit->add_option("--out", rfit_out, "Output JSON");

    // strain
    auto* strain = app.add_subcommand("strain", "Strain-map statistics");
    strain->require_subcommand(1);
    auto* san = strain->add_subcommand("analyze", "Linewidth versus sensor size");
    std::string san_in, san_sizes = "30:3000:log:12", san_out, san_sidecar;
    std::optional<double> san_other;
    std::optional<std::size_t> san_offset;
    san->add_option("map", san_in, "Strain map CSV (kHz)")->required()->check(CLI::ExistingFile);
    san->add_option("--sidecar", san_sidecar, "Sidecar JSON (default: map path with .json)");
    san->add_option("--sizes", san_sizes, "Sensor sizes lo:hi:log:n (um)");
    san->add_option("--other-rate-per-us", san_other,
                    "Non-strain dephasing rate (default: configured sample bath, or 0)");
    san->add_option("--tile-offset", san_offset, "Tile origin offset (px)");
    san->add_option("--out", san_out, "Output JSON");

    auto* ssyn = strain->add_subcommand("synth", "Synthetic strain map");
    SyntheticStrainOptions sopt;
    std::string ssyn_model = "stationary", ssyn_out;
    ssyn->add_option("--model", ssyn_model, "stationary, two-region or gradient");
    ssyn->add_option("--rows", sopt.rows, "Rows");
    ssyn->add_option("--cols", sopt.cols, "Columns");
    ssyn->add_option("--pitch", sopt.pixel_pitch_um, "Pixel pitch (um)");
    ssyn->add_option("--scale-khz", sopt.scale_khz, "Cauchy scale (kHz)");
    ssyn->add_option("--high-scale-khz", sopt.high_scale_khz, "Patch Cauchy scale (kHz)");
    ssyn->add_option("--gradient", sopt.gradient_khz_per_px, "Ramp slope (kHz/px)");
    ssyn->add_option("--out", ssyn_out, "Output CSV")->required();

    // charge
    auto* chg = app.add_subcommand("charge", "Charge-state analysis");
    chg->require_subcommand(1);
    auto* dec = chg->add_subcommand("decompose", "NV-/NV0 spectral decomposition");
    std::string dec_m, dec_bm, dec_b0, dec_out;
    std::optional<double> dec_i;
    dec->add_option("--measured", dec_m, "Measured spectrum CSV")->required()->check(CLI::ExistingFile);
    dec->add_option("--basis-minus", dec_bm, "NV- basis CSV")->required()->check(CLI::ExistingFile);
    dec->add_option("--basis-zero", dec_b0, "NV0 basis CSV")->required()->check(CLI::ExistingFile);
    dec->add_option("--intensity", dec_i, "Excitation intensity (mW/um^2) for the validity flag");
    dec->add_option("--out", dec_out, "Output JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    if (seed_opt->count()) g.seed = seed_value;

    try {
        if (*deph) {
            const Config cfg = g.config();
            const SensorMaterial mat = cfg.material();
            const double strain_khz = deph_strain.value_or(cfg.strain_fwhm_khz);
            const DephasingBudget bath = spin_bath_budget(mat.sample, cfg.bath);
            const DephasingBudget sq =
                combine_budget(bath, strain_rate_from_fwhm(strain_khz).rate_per_us, cfg.bias_rate_per_us);
            const Concentration ns0_post = nitrogen_bookkeeping(mat.sample.ns0_as_grown, mat.sample.nv_total,
                                                                mat.sample.charge_fraction_psi);
            ordered_json j;
            j["ns0_post_ppm"] = ns0_post.ppm();
            j["nv_minus_ppm"] = mat.sample.nv_total.ppm() * mat.sample.charge_fraction_psi;
            j["strain_fwhm_khz"] = strain_khz;
            j["terms"] = {{"ns0", rate_entry(sq.rate_ns0)},       {"c13", rate_entry(sq.rate_c13)},
                          {"nv_nv", rate_entry(sq.rate_nv_nv)},   {"strain", rate_entry(sq.rate_strain)},
                          {"bias", rate_entry(sq.rate_bias)}};
            j["bath"] = rate_entry(sq.bath_rate());
            j["total_sq"] = rate_entry(sq.total_rate());
            const DephasingTime dq = dq_t2star(sq);
            j["total_dq"] = rate_entry(dq.rate_per_us());
            write_json_output(g, cfg, deph_out, j, {});
        } else if (*sweep) {
            const Config cfg = sweep_sample.empty() ? g.config() : g.config({sweep_sample});
            const SensorMaterial mat = cfg.material();
            const IntensityTable table = read_intensity_table(sweep_table);
            const Protocol protocol = protocol_from_string(sweep_protocol);
            std::vector<double> grid;
            if (sweep_grid.empty())
                for (const auto& r : table.rows()) grid.push_back(r.intensity.mw_per_um2());
            else
                grid = parse_grid(sweep_grid);
            CsvTable out{{"intensity_mw_um2", "tau_opt_us", "t2_star_us", "n_avg", "eta_nt_sqrt_ppm_per_sqrt_hz"}, {}};
            for (double i : grid) {
                const auto v = volume_normalized_sensitivity(mat, table, Intensity(i), protocol, cfg.evaluation());
                out.rows.push_back({i, v.tau_us, v.t2_star_us, v.n_avg, v.eta * kNanoteslaPerHzPerGaussSqrtUs});
            }
            std::vector<std::string> inputs{sweep_table};
            if (!sweep_sample.empty()) inputs.insert(inputs.begin(), sweep_sample);
            write_csv_output(g, cfg, sweep_out, out, inputs);
        } else if (*optn) {
            const Config cfg = g.config();
            CsvTable out{{"t_overhead_us", "n_opt_ppm", "metric", "interior"}, {}};
            for (double t : parse_grid(optn_grid)) {
                const auto r = optimal_nitrogen(t, cfg.metric);
                out.rows.push_back({t, r.ns0.ppm(), r.metric, r.interior ? 1.0 : 0.0});
            }
            write_csv_output(g, cfg, optn_out, out, {});
        } else if (*cmp) {
            const Config cfg_a = g.config({cmp_a});
            const Config cfg_b = g.config({cmp_b});
            const SensorMaterial ma = cfg_a.material(), mb = cfg_b.material();
            const IntensityTable ta = read_intensity_table(cmp_ta), tb = read_intensity_table(cmp_tb);
            const Protocol protocol = protocol_from_string(cmp_protocol);
            std::vector<double> grid;
            if (cmp_grid.empty()) {
                const double lo = std::max(ta.min_intensity().mw_per_um2(), tb.min_intensity().mw_per_um2());
                const double hi = std::min(ta.max_intensity().mw_per_um2(), tb.max_intensity().mw_per_um2());
                if (!(hi > lo)) throw ValidationError("intensity tables do not overlap");
                grid = parse_grid(format_g9(lo) + ":" + format_g9(hi) + ":log:40");
            } else {
                grid = parse_grid(cmp_grid);
            }
            const EvaluationOptions opts = cfg_a.evaluation();
            CsvTable out{{"intensity_mw_um2", "eta_a_nt_sqrt_ppm_per_sqrt_hz", "eta_b_nt_sqrt_ppm_per_sqrt_hz",
                          "ratio_a_over_b", "sq_over_dq_a", "sq_over_dq_b"},
                         {}};
            for (double i : grid) {
                const Intensity I(i);
                const auto va = volume_normalized_sensitivity(ma, ta, I, protocol, opts);
                const auto vb = volume_normalized_sensitivity(mb, tb, I, protocol, opts);
                const double sq_dq_a = volume_normalized_sensitivity(ma, ta, I, Protocol::SQ, opts).eta /
                                       volume_normalized_sensitivity(ma, ta, I, Protocol::DQ, opts).eta;
                const double sq_dq_b = volume_normalized_sensitivity(mb, tb, I, Protocol::SQ, opts).eta /
                                       volume_normalized_sensitivity(mb, tb, I, Protocol::DQ, opts).eta;
                out.rows.push_back({i, va.eta * kNanoteslaPerHzPerGaussSqrtUs, vb.eta * kNanoteslaPerHzPerGaussSqrtUs,
                                    va.eta / vb.eta, sq_dq_a, sq_dq_b});
            }
            write_csv_output(g, cfg_a, cmp_out, out, {cmp_a, cmp_ta, cmp_b, cmp_tb});
        } else if (*sim) {
            const Config cfg = g.config();
            const Intensity I(sim_i);
            const Intensity isat = sim_isat ? Intensity(*sim_isat) : cfg.photophysics.i_sat_low;
            const double s = I.mw_per_um2() / isat.mw_per_um2();
            const double t_end = sim_tend.value_or(relaxation_horizon_us(cfg.photophysics, s));
            const double dt = sim_dt.value_or(max_output_step(cfg.photophysics, s));
            const ContrastCurve curve = contrast_trace(cfg.photophysics, I, isat, t_end, dt, cfg.contrast);
            CsvTable out{{"time_us", "sig", "ref", "contrast"}, {}};
            for (std::size_t k = 0; k < curve.time_us.size(); ++k)
                out.rows.push_back({curve.time_us[k], curve.sig[k], curve.ref[k], curve.contrast[k]});
            write_csv_output(g, cfg, sim_out, out, {});
            if (!sim_out.empty()) {
                const auto ti = initialization_time(curve);
                std::cout << "t_I_us " << format_g9(ti.t_i_us) << "\n";
            }
        } else if (*band) {
            const Config cfg = g.config();
            std::vector<Intensity> grid;
            for (double i : parse_grid(band_grid, 40)) grid.emplace_back(i);
            const auto pts = ti_band(cfg.photophysics, grid, cfg.contrast);
            CsvTable out{{"intensity_mw_um2", "t_i_lower_us", "t_i_upper_us"}, {}};
            for (const auto& p : pts) out.rows.push_back({p.intensity.mw_per_um2(), p.lower_us, p.upper_us});
            write_csv_output(g, cfg, band_out, out, {});
        } else if (*rsyn) {
            const Config cfg = g.config();
            const std::uint64_t seed = g.seed.value_or(1);
            const auto tau = uniform_tau_grid(r_tmax, r_dt);
            const auto y = synthesize(rmodel, tau, r_noise, seed);
            CsvTable out{{"tau_us", "signal"}, {}};
            for (std::size_t i = 0; i < tau.size(); ++i) out.rows.push_back({tau[i], y[i]});
            write_csv_output(g, cfg, rsyn_out, out, {}, seed);
        } else if (*rfit) {
            const Config cfg = g.config();
            const RamseyData d = read_ramsey_signal(rfit_in);
            const RamseyFitResult r = fit_ramsey(d.tau_us, d.signal, cfg.ramsey);
            const auto param = [](double v, double s) {
                return ordered_json{{"value", v}, {"sigma", s}, {"text", parenthesis_notation(v, s)}};
            };
            ordered_json j;
            j["t2_star_us"] = param(r.t2_star_us, r.t2_star_sigma);
            j["p"] = param(r.p, r.p_sigma);
            j["detuning_mhz"] = param(r.detuning_mhz, r.detuning_sigma);
            j["hyperfine_splitting_mhz"] = param(r.hyperfine_splitting_mhz, r.hyperfine_splitting_sigma);
            j["amplitude"] = param(r.amplitude, r.amplitude_sigma);
            j["baseline"] = param(r.baseline, r.baseline_sigma);
            j["phase_rad"] = param(r.phase_rad, r.phase_sigma);
            j["n_hyperfine"] = r.n_hyperfine;
            j["line_frequencies_mhz"] = r.line_frequencies_mhz;
            j["residual_rms"] = r.residual_rms;
            j["iterations"] = r.iterations;
            write_json_output(g, cfg, rfit_out, j, {rfit_in});
        } else if (*san) {
            const Config cfg = g.config();
            const StrainMap map = read_strain_map(san_in, san_sidecar);
            PartitionOptions po;
            po.histogram = cfg.histogram;
            po.tile_offset_px = san_offset.value_or(cfg.tile_offset_px);
            double other = 0.0;
            if (san_other) {
                other = *san_other;
            } else if (cfg.provenance.count("sample.psi")) {
                other = spin_bath_budget(cfg.material().sample, cfg.bath).bath_rate() + cfg.bias_rate_per_us;
            }
            const auto sizes = parse_grid(san_sizes, 12);
            const auto stats = partition_sweep(map, sizes, po);
            const LorentzianFit full = histogram_fwhm(mean_subtract(map), cfg.histogram);
            ordered_json j;
            j["orientation"] = map.orientation;
            j["pixel_pitch_um"] = map.pixel_pitch_um;
            j["full_map"] = {{"fwhm_khz", full.fwhm_khz},
                             {"center_khz", full.center_khz},
                             {"t2_star_strain_us", time_or_null(strain_rate_from_fwhm(full.fwhm_khz).t2_star)},
                             {"bin_width_khz", full.bin_width_khz},
                             {"residual_rms", full.residual_rms}};
            ordered_json rows = ordered_json::array();
            for (const auto& s : stats) {
                ordered_json row{{"sensor_size_um", s.sensor_size_um},
                                 {"tile_px", s.tile_px},
                                 {"n_tiles", s.n_tiles},
                                 {"n_failed", s.n_failed},
                                 {"min_khz", s.min_khz},
                                 {"median_khz", s.median_khz}};
                if (s.quantiles)
                    row["quantiles_khz"] = {{"p10", s.quantiles->p10},
                                            {"p25", s.quantiles->p25},
                                            {"p75", s.quantiles->p75},
                                            {"p90", s.quantiles->p90}};
                rows.push_back(row);
            }
            j["partitions"] = rows;
            if (stats.size() >= 3) {
                const ScalingResult sc = scaling_metric(stats, other);
                ordered_json pts = ordered_json::array();
                for (const auto& p : sc.points)
                    pts.push_back({{"sensor_size_um", p.sensor_size_um},
                                   {"t2_eff_us", p.t2_eff_us},
                                   {"metric", p.metric}});
                j["scaling"] = {{"other_rate_per_us", other},
                                {"exponent", sc.exponent},
                                {"exponent_sigma", sc.exponent_sigma},
                                {"points", pts}};
            }
            write_json_output(g, cfg, san_out, j, {san_in, san_sidecar.empty() ? strain_sidecar_path(san_in) : san_sidecar});
        } else if (*ssyn) {
            const Config cfg = g.config();
            sopt.model = synthetic_strain_from_string(ssyn_model);
            sopt.seed = g.seed.value_or(1);
            const StrainMap map = synthesize_strain_map(sopt);
            write_strain_map(map, ssyn_out);
            finish(g, cfg, {}, {ssyn_out, strain_sidecar_path(ssyn_out)}, sopt.seed);
        } else if (*dec) {
            const Config cfg = g.config();
            const Spectrum m = read_spectrum(dec_m, cfg.longpass_nm);
            const Spectrum bm = read_spectrum(dec_bm, cfg.longpass_nm);
            const Spectrum b0 = read_spectrum(dec_b0, cfg.longpass_nm);
            DecomposeOptions o;
            o.brightness_ratio = cfg.brightness_ratio;
            o.intensity_mw_um2 = dec_i;
            o.max_condition_number = cfg.max_condition_number;
            const ChargeDecomposition r = decompose(m, bm, b0, o);
            ordered_json j;
            j["w_minus"] = r.w_minus;
            j["w_zero"] = r.w_zero;
            j["psi"] = r.psi;
            j["brightness_ratio"] = r.brightness_ratio;
            j["residual_rms"] = r.residual_rms;
            j["relative_residual"] = r.relative_residual;
            j["condition_number"] = r.condition_number;
            j["grid_points"] = r.grid_nm.size();
            j["outside_validated_regime"] = r.outside_validated_regime;
            write_json_output(g, cfg, dec_out, j, {dec_m, dec_bm, dec_b0});
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ComputationError& e) {
        std::cerr << "computation failed: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "computation failed: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
