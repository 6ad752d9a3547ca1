#pragma once

// Configuration-driven experiment runner: JSON config in, a directory of
// CSV/JSON/markdown artifacts out, plus cross-run comparison tables.
// Outputs carry no timestamps so identical configs rerun byte-identically.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>

#include "json.hpp"

#include "e8sim/compress.hpp"
#include "e8sim/noise.hpp"
#include "e8sim/spectral.hpp"

namespace e8sim {

using json = nlohmann::json;

// ===== configuration =====

struct SpectralOptions {
    double min_prominence = 1e-3;
    std::optional<double> hint_m1;
    double match_tol = 0.0;  // <= 0: one resolution bin
    double band_lo = 0.0;
    double band_hi = std::numeric_limits<double>::infinity();
};

struct ExperimentConfig {
    ModelSpec model{8, 1.0, 3.0};
    std::string initial = "UUDDDDUU";
    double dt = 0.1;
    double t_max = 10.0;
    double t_cut = 10.0;
    std::string backend = "trotter";  // exact | trotter | compressed
    long long shots = 8192;           // -1: exact expectation values
    NoiseModel noise;                 // all-zero: disabled
    LayerSchedule schedule;           // empty: default schedule (compressed)
    bool mitigation = false;
    std::uint64_t seed = 1;
    std::string output_dir = "run_out";
    SpectralOptions spectral;
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<std::string> issues)
        : std::runtime_error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& e : v) s += "\n  - " + e;
        return s;
    }
    std::vector<std::string> issues_;
};

namespace detail {

inline double json_number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError({field + ": expected a number"});
    return j.get<double>();
}

inline void parse_model(const json& j, ModelSpec& m) {
    if (!j.is_object()) throw ConfigError({"model: expected an object"});
    for (const auto& [key, val] : j.items()) {
        if (key == "L") {
            if (!val.is_number_integer()) throw ConfigError({"model.L: expected an integer"});
            m.L = val.get<int>();
        } else if (key == "h_x") {
            m.h_x = json_number(val, "model.h_x");
        } else if (key == "h_z") {
            m.h_z = json_number(val, "model.h_z");
        } else {
            throw ConfigError({"model." + key + ": unknown field"});
        }
    }
}

inline void parse_noise(const json& j, NoiseModel& n) {
    if (!j.is_object()) throw ConfigError({"noise: expected an object"});
    for (const auto& [key, val] : j.items()) {
        if (key == "p1") n.p1 = json_number(val, "noise.p1");
        else if (key == "p2") n.p2 = json_number(val, "noise.p2");
        else if (key == "readout_flip") n.readout_flip = json_number(val, "noise.readout_flip");
        else if (key == "global_depol_per_step")
            n.global_depol_per_step = json_number(val, "noise.global_depol_per_step");
        else throw ConfigError({"noise." + key + ": unknown field"});
    }
}

inline void parse_schedule(const json& j, LayerSchedule& s) {
    if (!j.is_array()) throw ConfigError({"schedule: expected an array of [t, layers] pairs"});
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number_integer())
            throw ConfigError({"schedule: each entry must be a [t, layers] pair"});
        s.breakpoints.emplace_back(entry[0].get<double>(), entry[1].get<int>());
    }
}

inline void parse_spectral(const json& j, SpectralOptions& s) {
    if (!j.is_object()) throw ConfigError({"spectral: expected an object"});
    for (const auto& [key, val] : j.items()) {
        if (key == "min_prominence") s.min_prominence = json_number(val, "spectral.min_prominence");
        else if (key == "hint_m1") s.hint_m1 = json_number(val, "spectral.hint_m1");
        else if (key == "match_tol") s.match_tol = json_number(val, "spectral.match_tol");
        else if (key == "band_lo") s.band_lo = json_number(val, "spectral.band_lo");
        else if (key == "band_hi") s.band_hi = json_number(val, "spectral.band_hi");
        else throw ConfigError({"spectral." + key + ": unknown field"});
    }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError({"config root must be an object"});
    ExperimentConfig cfg;
    for (const auto& [key, val] : j.items()) {
        if (key == "model") detail::parse_model(val, cfg.model);
        else if (key == "initial") {
            if (!val.is_string()) throw ConfigError({"initial: expected a string"});
            cfg.initial = val.get<std::string>();
        } else if (key == "dt") cfg.dt = detail::json_number(val, "dt");
        else if (key == "t_max") cfg.t_max = detail::json_number(val, "t_max");
        else if (key == "t_cut") cfg.t_cut = detail::json_number(val, "t_cut");
        else if (key == "backend") {
            if (!val.is_string()) throw ConfigError({"backend: expected a string"});
            cfg.backend = val.get<std::string>();
        } else if (key == "shots") {
            if (val.is_null()) cfg.shots = -1;
            else if (val.is_number_integer()) cfg.shots = val.get<long long>();
            else throw ConfigError({"shots: expected an integer or null"});
        } else if (key == "noise") detail::parse_noise(val, cfg.noise);
        else if (key == "schedule") detail::parse_schedule(val, cfg.schedule);
        else if (key == "mitigation") {
            if (!val.is_boolean()) throw ConfigError({"mitigation: expected a boolean"});
            cfg.mitigation = val.get<bool>();
        } else if (key == "seed") {
            if (!val.is_number_integer()) throw ConfigError({"seed: expected an integer"});
            cfg.seed = val.get<std::uint64_t>();
        } else if (key == "output_dir") {
            if (!val.is_string()) throw ConfigError({"output_dir: expected a string"});
            cfg.output_dir = val.get<std::string>();
        } else if (key == "spectral") detail::parse_spectral(val, cfg.spectral);
        else throw ConfigError({key + ": unknown field"});
    }
    return cfg;
}

inline ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    return config_from_json(j);
}

inline ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError({"config file not found: " + path});
    std::ostringstream ss;
    ss << is.rdbuf();
    return config_from_json_text(ss.str());
}

// Fully-resolved config (defaults materialized) for the manifest.
inline json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["model"] = {{"L", cfg.model.L}, {"h_x", cfg.model.h_x}, {"h_z", cfg.model.h_z}};
    j["initial"] = cfg.initial;
    j["dt"] = cfg.dt;
    j["t_max"] = cfg.t_max;
    j["t_cut"] = cfg.t_cut;
    j["backend"] = cfg.backend;
    if (cfg.shots > 0) j["shots"] = cfg.shots;
    else j["shots"] = nullptr;
    j["noise"] = {{"p1", cfg.noise.p1},
                  {"p2", cfg.noise.p2},
                  {"readout_flip", cfg.noise.readout_flip},
                  {"global_depol_per_step", cfg.noise.global_depol_per_step}};
    json sched = json::array();
    const LayerSchedule& s =
        (cfg.backend == "compressed" && cfg.schedule.breakpoints.empty()) ? default_layer_schedule()
                                                                          : cfg.schedule;
    for (const auto& [t, n] : s.breakpoints) {
        if (std::isinf(t)) sched.push_back({json(), n});
        else sched.push_back({t, n});
    }
    j["schedule"] = sched;
    j["mitigation"] = cfg.mitigation;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["spectral"] = {{"min_prominence", cfg.spectral.min_prominence},
                     {"match_tol", cfg.spectral.match_tol},
                     {"band_lo", cfg.spectral.band_lo},
                     {"band_hi", std::isinf(cfg.spectral.band_hi) ? json() : json(cfg.spectral.band_hi)}};
    if (cfg.spectral.hint_m1) j["spectral"]["hint_m1"] = *cfg.spectral.hint_m1;
    else j["spectral"]["hint_m1"] = nullptr;
    return j;
}

// Field-level validation; returns every problem found, not just the first.
inline std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> issues;
    if (cfg.model.L < 2) issues.push_back("model.L: must be at least 2");
    if (cfg.model.L > 14) issues.push_back("model.L: capped at 14 for dense simulation");
    if (static_cast<int>(cfg.initial.size()) != cfg.model.L)
        issues.push_back("initial: length " + std::to_string(cfg.initial.size()) +
                         " does not match model.L = " + std::to_string(cfg.model.L));
    for (char c : cfg.initial)
        if (c != 'U' && c != 'D') {
            issues.push_back("initial: only 'U' and 'D' characters are allowed");
            break;
        }
    if (!(cfg.dt > 0.0)) issues.push_back("dt: must be positive");
    if (!(cfg.t_max > 0.0)) issues.push_back("t_max: must be positive");
    if (!(cfg.t_cut > 0.0)) issues.push_back("t_cut: must be positive");
    if (cfg.t_cut > cfg.t_max + 1e-9) issues.push_back("t_cut: must not exceed t_max");
    if (cfg.dt > 0.0 && cfg.t_max > 0.0 && !approx_multiple(cfg.t_max, cfg.dt))
        issues.push_back("t_max: must be a multiple of dt");
    if (cfg.dt > 0.0 && cfg.t_cut > 0.0 && !approx_multiple(cfg.t_cut, cfg.dt))
        issues.push_back("t_cut: must be a multiple of dt");
    if (cfg.dt > 0.0 && cfg.t_cut > 0.0 && cfg.t_cut / cfg.dt < 8.0 - 1e-9)
        issues.push_back("t_cut: the analysis window needs at least 8 samples");

    const bool known_backend =
        cfg.backend == "exact" || cfg.backend == "trotter" || cfg.backend == "compressed";
    if (!known_backend)
        issues.push_back("backend: must be one of exact | trotter | compressed");
    if (cfg.shots == 0 || cfg.shots < -1)
        issues.push_back("shots: must be a positive count, or null for exact expectations");
    if (cfg.backend == "exact" && cfg.shots > 0)
        issues.push_back("shots: not supported on the exact backend (it serves as the oracle)");

    try {
        validate(cfg.noise);
    } catch (const std::invalid_argument& e) {
        issues.push_back(std::string("noise: ") + e.what());
    }
    if (cfg.noise.enabled() && cfg.backend != "trotter")
        issues.push_back("noise: only supported on the trotter backend");
    if (cfg.noise.enabled() && cfg.model.L > 10)
        issues.push_back("model.L: capped at 10 when a noise model is enabled");
    if (cfg.mitigation && cfg.backend != "trotter")
        issues.push_back("mitigation: requires the trotter backend");
    if (cfg.mitigation && !cfg.noise.enabled())
        issues.push_back("mitigation: requires a noise model (nothing to divide out otherwise)");
    if (cfg.backend == "compressed" && cfg.model.L > 10)
        issues.push_back("model.L: capped at 10 for the compressed backend");
    if (!cfg.schedule.breakpoints.empty()) {
        try {
            layers_for_time(cfg.schedule, 0.0);
        } catch (const std::invalid_argument& e) {
            issues.push_back(std::string("schedule: ") + e.what());
        }
        for (const auto& [t, n] : cfg.schedule.breakpoints)
            if (n < 1 || n % 2 == 0) {
                issues.push_back("schedule: layer counts must be odd and positive");
                break;
            }
    }
    if (!(cfg.spectral.min_prominence >= 0.0))
        issues.push_back("spectral.min_prominence: must be non-negative");
    if (cfg.spectral.hint_m1 && !(*cfg.spectral.hint_m1 > 0.0))
        issues.push_back("spectral.hint_m1: must be positive");
    if (!(cfg.spectral.band_hi > cfg.spectral.band_lo))
        issues.push_back("spectral.band_hi: must exceed spectral.band_lo");
    if (cfg.output_dir.empty()) issues.push_back("output_dir: must not be empty");
    return issues;
}

// ===== report rendering =====

inline json peak_report_to_json(const PeakReport& rep) {
    json j;
    j["m1"] = rep.m1;
    j["match_tol"] = rep.match_tol;
    j["peaks"] = json::array();
    for (const Peak& p : rep.peaks) {
        json e = {{"omega", p.omega}, {"magnitude", p.magnitude}, {"bin", p.bin},
                  {"label", p.label}};
        if (!p.provenance.empty()) e["provenance"] = p.provenance;
        j["peaks"].push_back(e);
    }
    j["lines"] = json::array();
    for (const LineResult& l : rep.lines)
        j["lines"].push_back({{"label", l.label},
                              {"predicted", l.predicted},
                              {"measured", l.measured},
                              {"deviation", l.deviation},
                              {"magnitude", l.magnitude}});
    return j;
}

inline std::string peak_report_markdown(const PeakReport& rep) {
    std::ostringstream os;
    os << "| Label | E8 prediction | Value | Deviation |\n";
    os << "|---|---|---|---|\n";
    os.precision(6);
    for (const LineResult& l : rep.lines)
        os << "| " << l.label << " | " << l.predicted << " | " << l.measured << " | "
           << (l.deviation >= 0 ? "+" : "") << l.deviation << " |\n";
    return os.str();
}

// ===== experiment runner =====

struct RunOutputs {
    std::string dir;
    TimeSeries series;                       // raw backend output
    std::optional<MitigationPair> mitigated;
    Spectrum spectrum;
    PeakReport report;                       // empty lines if assignment failed
    std::vector<std::string> notes;
    std::vector<std::string> files;          // basenames written, sorted
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
}

}  // namespace detail

inline RunOutputs run_experiment(const ExperimentConfig& cfg) {
    auto issues = validate_config(cfg);
    if (!issues.empty()) throw ConfigError(std::move(issues));

    RunOutputs out;
    out.dir = cfg.output_dir;
    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    // --- time series ---
    std::optional<CompressedSeriesResult> comp;
    if (cfg.backend == "exact") {
        out.series = run_exact_series(cfg.model, cfg.initial, cfg.dt, cfg.t_max);
    } else if (cfg.backend == "trotter") {
        out.series = cfg.noise.enabled()
                         ? run_noisy_series(cfg.model, cfg.initial, cfg.dt, cfg.t_max, cfg.noise,
                                            cfg.shots, cfg.seed)
                         : run_trotter_series(cfg.model, cfg.initial, cfg.dt, cfg.t_max, cfg.shots,
                                              cfg.seed);
        if (cfg.mitigation) {
            TimeSeries ref = run_noisy_reference_series(cfg.model, cfg.initial, cfg.dt, cfg.t_max,
                                                        cfg.noise, cfg.shots, cfg.seed);
            out.mitigated = mitigate(out.series, ref);
        }
    } else {  // compressed
        const LayerSchedule sched =
            cfg.schedule.breakpoints.empty() ? default_layer_schedule() : cfg.schedule;
        OptimizeOptions opts;
        opts.max_iters = 200;
        opts.grad_tol = 1e-6;
        opts.cost_tol = 1e-4;
        comp = run_compressed_series(cfg.model, cfg.initial, cfg.dt, cfg.t_max, sched, opts,
                                     cfg.shots, cfg.seed);
        out.series = comp->series;
        for (const auto& note : comp->series.meta.notes) out.notes.push_back(note);
    }

    // --- analysis window ---
    const TimeSeries& analysis = out.mitigated ? out.mitigated->mitigated : out.series;
    double t_cut = cfg.t_cut;
    if (out.mitigated) {
        const double valid = valid_prefix_t_cut(*out.mitigated);
        if (valid < t_cut - 1e-12) {
            t_cut = valid;
            out.notes.push_back("analysis window clipped to t = " + format_g17(valid) +
                                " where the reference series stays above the threshold");
        }
    }
    if (t_cut / cfg.dt < 8.0 - 1e-9)
        throw std::runtime_error(
            "run_experiment: fewer than 8 valid samples before the analysis cutoff");
    out.spectrum = fourier(analysis, t_cut);

    // --- peaks ---
    FindPeaksOptions fopts;
    fopts.min_prominence = cfg.spectral.min_prominence;
    fopts.band_lo = cfg.spectral.band_lo;
    fopts.band_hi = std::min(cfg.spectral.band_hi, out.spectrum.omega.back());
    const std::vector<Peak> found = find_peaks(out.spectrum, fopts);
    AssignOptions aopts;
    aopts.hint_m1 = cfg.spectral.hint_m1;
    aopts.match_tol = cfg.spectral.match_tol;
    if (found.empty()) {
        out.notes.push_back("no peaks cleared the prominence threshold; no E8 assignment");
    } else {
        try {
            out.report = assign_e8(found, out.spectrum.d_omega, aopts);
        } catch (const std::exception& e) {
            out.report.peaks = found;
            out.notes.push_back(std::string("E8 assignment failed: ") + e.what());
        }
    }

    // --- artifacts ---
    series_to_csv(out.series, (dir / "series.csv").string());
    out.files.push_back("series.csv");
    if (out.mitigated) {
        series_to_csv(out.mitigated->reference, (dir / "series_ref.csv").string());
        series_to_csv(out.mitigated->mitigated, (dir / "series_mitigated.csv").string());
        mitigation_to_csv(*out.mitigated, (dir / "mitigation.csv").string());
        const auto plan = interleaved_plan({"main"});
        detail::write_text(dir / "jobplan.txt", plan_to_text(plan));
        out.files.insert(out.files.end(),
                         {"series_ref.csv", "series_mitigated.csv", "mitigation.csv",
                          "jobplan.txt"});
    }
    spectrum_to_csv(out.spectrum, (dir / "spectrum.csv").string());
    out.files.push_back("spectrum.csv");
    if (comp) {
        std::ostringstream os;
        os << "t,layers,final_cost,status\n";
        for (std::size_t k = 0; k < comp->final_costs.size(); ++k) {
            const char* st = comp->statuses[k] == OptStatus::converged ? "converged"
                             : comp->statuses[k] == OptStatus::max_iters ? "max_iters"
                                                                         : "line_search_failure";
            os << format_g17(cfg.dt * static_cast<double>(k)) << ',' << comp->layer_counts[k]
               << ',' << format_g17(comp->final_costs[k]) << ',' << st << '\n';
        }
        detail::write_text(dir / "compress_stats.csv", os.str());
        out.files.push_back("compress_stats.csv");
        if (!comp->last_trace.empty()) {
            trace_to_csv(comp->last_trace, (dir / "trace.csv").string());
            out.files.push_back("trace.csv");
        }
    }

    // report.json
    json jrep = peak_report_to_json(out.report);
    jrep["d_omega"] = out.spectrum.d_omega;
    jrep["t_cut"] = out.spectrum.t_cut;
    jrep["backend"] = cfg.backend;
    jrep["initial"] = cfg.initial;
    jrep["notes"] = out.notes;
    detail::write_text(dir / "report.json", jrep.dump(2) + "\n");
    out.files.push_back("report.json");

    // report.md
    {
        std::ostringstream os;
        os << "# Meson spectroscopy run\n\n";
        os << "- backend: " << cfg.backend << "\n";
        os << "- chain: L = " << cfg.model.L << ", h_x = " << cfg.model.h_x
           << ", h_z = " << cfg.model.h_z << "\n";
        os << "- initial state: " << cfg.initial << " (observable site "
           << central_site(cfg.model.L) << ")\n";
        os << "- grid: dt = " << cfg.dt << ", t_max = " << cfg.t_max
           << ", analysis window t_cut = " << out.spectrum.t_cut << "\n";
        os << "- resolution: d_omega = " << format_g17(out.spectrum.d_omega) << "\n";
        if (cfg.shots > 0) os << "- shots per point: " << cfg.shots << "\n";
        if (cfg.noise.enabled())
            os << "- noise: p1 = " << cfg.noise.p1 << ", p2 = " << cfg.noise.p2
               << ", readout_flip = " << cfg.noise.readout_flip
               << ", global_depol_per_step = " << cfg.noise.global_depol_per_step
               << (cfg.mitigation ? " (mitigated)" : "") << "\n";
        os << "\n";
        if (!out.report.lines.empty()) {
            os << "## E8 line assignment (m1 = " << format_g17(out.report.m1) << ")\n\n";
            os << peak_report_markdown(out.report);
        } else {
            os << "## E8 line assignment\n\nNo lines assigned.\n";
        }
        if (!out.notes.empty()) {
            os << "\n## Notes\n\n";
            for (const auto& n : out.notes) os << "- " << n << "\n";
        }
        detail::write_text(dir / "report.md", os.str());
        out.files.push_back("report.md");
    }

    // manifest.json — the resolved config plus the artifact inventory;
    // deliberately no timestamps so reruns are byte-identical.
    std::sort(out.files.begin(), out.files.end());
    json manifest;
    manifest["config"] = config_to_json(cfg);
    manifest["files"] = out.files;
    manifest["series_points"] = out.series.values.size();
    manifest["effective_t_cut"] = out.spectrum.t_cut;
    detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    out.files.push_back("manifest.json");
    std::sort(out.files.begin(), out.files.end());
    return out;
}

// ===== cross-run comparison =====

struct ComparisonReport {
    std::string markdown;
    json data;
};

// reference = "ed": per-label differences against a baseline run (the
// first run whose backend is "exact", else the first run given);
// reference = "table1": each run's own measured value and deviation from
// its E8 prediction, side by side.
inline ComparisonReport compare_runs(const std::vector<std::string>& run_dirs,
                                     const std::string& reference) {
    if (run_dirs.empty()) throw std::invalid_argument("compare_runs: no run directories given");
    if (reference != "ed" && reference != "table1")
        throw std::invalid_argument("compare_runs: reference must be 'ed' or 'table1'");

    struct Loaded {
        std::string name;
        std::string backend;
        double d_omega = 0.0;
        std::map<std::string, LineResult> lines;
    };
    std::vector<Loaded> runs;
    for (const std::string& d : run_dirs) {
        std::ifstream is(std::filesystem::path(d) / "report.json");
        if (!is) throw std::runtime_error("compare_runs: missing report.json in " + d);
        json j = json::parse(is);
        Loaded r;
        r.name = std::filesystem::path(d).filename().string();
        if (r.name.empty()) r.name = d;
        r.backend = j.value("backend", "?");
        r.d_omega = j.at("d_omega").get<double>();
        for (const auto& l : j.at("lines")) {
            LineResult lr;
            lr.label = l.at("label").get<std::string>();
            lr.predicted = l.at("predicted").get<double>();
            lr.measured = l.at("measured").get<double>();
            lr.deviation = l.at("deviation").get<double>();
            r.lines[lr.label] = lr;
        }
        runs.push_back(std::move(r));
    }
    for (const Loaded& r : runs)
        if (std::abs(r.d_omega - runs.front().d_omega) > 1e-9 * runs.front().d_omega)
            throw std::runtime_error("compare_runs: incompatible resolutions across runs");
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (runs[i].backend == "exact") {
            std::rotate(runs.begin(), runs.begin() + i, runs.begin() + i + 1);
            break;
        }

    const std::vector<std::string> label_order = {"m2-m1", "m1", "m2", "m1+m2"};
    ComparisonReport rep;
    rep.data["reference"] = reference;
    rep.data["d_omega"] = runs.front().d_omega;
    rep.data["runs"] = json::array();
    for (const Loaded& r : runs)
        rep.data["runs"].push_back({{"name", r.name}, {"backend", r.backend}});

    std::ostringstream os;
    os.precision(6);
    json rows = json::array();
    if (reference == "ed") {
        os << "| Label | " << runs.front().name << " (reference) |";
        for (std::size_t i = 1; i < runs.size(); ++i)
            os << " " << runs[i].name << " | delta |";
        os << "\n|---|---|";
        for (std::size_t i = 1; i < runs.size(); ++i) os << "---|---|";
        os << "\n";
        for (const std::string& label : label_order) {
            const auto base = runs.front().lines.find(label);
            if (base == runs.front().lines.end()) continue;
            json row = {{"label", label}, {"reference_value", base->second.measured}};
            os << "| " << label << " | " << base->second.measured << " |";
            json deltas = json::array();
            for (std::size_t i = 1; i < runs.size(); ++i) {
                const auto it = runs[i].lines.find(label);
                if (it == runs[i].lines.end()) {
                    os << " - | - |";
                    deltas.push_back(nullptr);
                } else {
                    const double delta = it->second.measured - base->second.measured;
                    os << " " << it->second.measured << " | " << (delta >= 0 ? "+" : "") << delta
                       << " |";
                    deltas.push_back(delta);
                }
            }
            row["deltas"] = deltas;
            rows.push_back(row);
            os << "\n";
        }
    } else {  // table1
        os << "| Label | E8 prediction |";
        for (const Loaded& r : runs) os << " " << r.name << " value | deviation |";
        os << "\n|---|---|";
        for (std::size_t i = 0; i < runs.size(); ++i) os << "---|---|";
        os << "\n";
        for (const std::string& label : label_order) {
            double predicted = 0.0;
            bool have = false;
            for (const Loaded& r : runs) {
                const auto it = r.lines.find(label);
                if (it != r.lines.end()) {
                    predicted = it->second.predicted;
                    have = true;
                    break;
                }
            }
            if (!have) continue;
            json row = {{"label", label}, {"predicted", predicted}};
            os << "| " << label << " | " << predicted << " |";
            json vals = json::array();
            for (const Loaded& r : runs) {
                const auto it = r.lines.find(label);
                if (it == r.lines.end()) {
                    os << " - | - |";
                    vals.push_back(nullptr);
                } else {
                    os << " " << it->second.measured << " | "
                       << (it->second.deviation >= 0 ? "+" : "") << it->second.deviation << " |";
                    vals.push_back({{"value", it->second.measured},
                                    {"deviation", it->second.deviation}});
                }
            }
            row["runs"] = vals;
            rows.push_back(row);
            os << "\n";
        }
    }
    rep.data["rows"] = rows;
    rep.markdown = os.str();
    return rep;
}

}  // namespace e8sim
