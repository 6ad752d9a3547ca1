// Command-line driver: config-driven experiment runs plus standalone
// compression, mitigation, and spectrum analysis utilities.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.

#include <iostream>

#include "CLI11.hpp"

#include "e8sim/kak.hpp"
#include "e8sim/runner.hpp"

namespace {

int do_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
           const std::string& out, const std::string& backend, double t_cut) {
    e8sim::ExperimentConfig cfg = config_path.empty()
                                      ? e8sim::ExperimentConfig{}
                                      : e8sim::config_from_file(config_path);
    if (seed) cfg.seed = *seed;
    if (!out.empty()) cfg.output_dir = out;
    if (!backend.empty()) cfg.backend = backend;
    if (t_cut > 0.0) cfg.t_cut = t_cut;

    const e8sim::RunOutputs res = e8sim::run_experiment(cfg);
    std::cout << "wrote " << res.files.size() << " files to " << res.dir << "\n";
    if (!res.report.lines.empty()) {
        std::cout << "m1 = " << e8sim::format_g17(res.report.m1) << "\n"
                  << e8sim::peak_report_markdown(res.report);
    } else {
        std::cout << "no E8 lines assigned\n";
    }
    for (const auto& note : res.notes) std::cout << "note: " << note << "\n";
    return 0;
}

int do_compare(const std::vector<std::string>& dirs, const std::string& reference,
               const std::string& out) {
    const e8sim::ComparisonReport rep = e8sim::compare_runs(dirs, reference);
    std::cout << rep.markdown;
    if (!out.empty()) {
        std::ofstream md(out + ".md"), js(out + ".json");
        if (!md || !js) throw std::runtime_error("cannot write comparison to " + out + ".{md,json}");
        md << rep.markdown;
        js << rep.data.dump(2) << "\n";
        std::cout << "wrote " << out << ".md and " << out << ".json\n";
    }
    return 0;
}

int do_compress(int L, double h_x, double h_z, double t, int layers, int max_iters,
                double cost_tol, bool native, const std::string& out,
                const std::string& trace_path) {
    const e8sim::ModelSpec spec{L, h_x, h_z};
    const e8sim::TargetOperator target = e8sim::target_operator(spec, t, "dense");
    e8sim::OptimizeOptions opts;
    opts.max_iters = max_iters;
    opts.cost_tol = cost_tol;
    opts.grad_tol = 1e-8;
    const e8sim::OptimizeResult res =
        e8sim::optimize(target.dense, e8sim::strang_ansatz(spec, t, layers), opts);

    e8sim::Circuit circuit = e8sim::to_circuit(res.ansatz);
    if (native) circuit = e8sim::decompose_circuit_to_native(circuit);
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write circuit to " + out);
    os << e8sim::circuit_to_text(circuit);
    if (!trace_path.empty()) e8sim::trace_to_csv(res.trace, trace_path);

    const char* status = res.status == e8sim::OptStatus::converged          ? "converged"
                         : res.status == e8sim::OptStatus::max_iters        ? "max_iters"
                                                                            : "line_search_failure";
    std::cout << "layers " << layers << "  final cost " << e8sim::format_g17(res.final_cost)
              << "  status " << status << "\nwrote " << out << "\n";
    return res.status == e8sim::OptStatus::line_search_failure ? 3 : 0;
}

int do_mitigate(const std::string& raw_path, const std::string& ref_path, double eps_den,
                const std::string& out) {
    const e8sim::TimeSeries raw = e8sim::series_from_csv_file(raw_path);
    const e8sim::TimeSeries ref = e8sim::series_from_csv_file(ref_path);
    const e8sim::MitigationPair pair = e8sim::mitigate(raw, ref, eps_den);
    e8sim::mitigation_to_csv(pair, out);
    std::size_t invalid = 0;
    for (char v : pair.valid)
        if (!v) ++invalid;
    std::cout << "wrote " << out << " (" << pair.valid.size() << " points, " << invalid
              << " below the denominator threshold)\n";
    return 0;
}

int do_spectrum(const std::string& series_path, double t_cut, double min_prominence,
                double match_tol, std::optional<double> hint_m1, const std::string& out_dir) {
    const e8sim::TimeSeries series = e8sim::series_from_csv_file(series_path);
    const double window = t_cut > 0.0 ? t_cut : series.duration();
    const e8sim::Spectrum spec = e8sim::fourier(series, window);

    e8sim::FindPeaksOptions fopts;
    fopts.min_prominence = min_prominence;
    const auto found = e8sim::find_peaks(spec, fopts);
    e8sim::AssignOptions aopts;
    aopts.hint_m1 = hint_m1;
    aopts.match_tol = match_tol;

    std::filesystem::create_directories(out_dir);
    e8sim::spectrum_to_csv(spec, (std::filesystem::path(out_dir) / "spectrum.csv").string());
    e8sim::PeakReport report;
    std::string note;
    if (found.empty()) {
        note = "no peaks cleared the prominence threshold";
    } else {
        try {
            report = e8sim::assign_e8(found, spec.d_omega, aopts);
        } catch (const std::exception& e) {
            report.peaks = found;
            note = e.what();
        }
    }
    e8sim::json j = e8sim::peak_report_to_json(report);
    j["d_omega"] = spec.d_omega;
    j["t_cut"] = spec.t_cut;
    if (!note.empty()) j["notes"] = {note};
    std::ofstream js(std::filesystem::path(out_dir) / "report.json");
    js << j.dump(2) << "\n";

    std::cout << "d_omega = " << e8sim::format_g17(spec.d_omega) << ", " << found.size()
              << " peaks\n";
    if (!report.lines.empty()) std::cout << e8sim::peak_report_markdown(report);
    if (!note.empty()) std::cout << "note: " << note << "\n";
    std::cout << "wrote " << out_dir << "/spectrum.csv and report.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ising meson spectroscopy toolkit: simulate kink dynamics, compress circuits,"
                 " mitigate noise, and extract E8 mass lines"};
    app.require_subcommand(0, 1);

    // run
    auto* run_cmd = app.add_subcommand("run", "execute an experiment config end to end");
    std::string run_config, run_out, run_backend;
    std::optional<std::uint64_t> run_seed;
    double run_t_cut = 0.0;
    run_cmd->add_option("--config", run_config, "JSON experiment config (defaults if omitted)");
    run_cmd->add_option("--seed", run_seed, "override the sampling seed");
    run_cmd->add_option("--out", run_out, "override output_dir");
    run_cmd->add_option("--backend", run_backend, "override backend: exact | trotter | compressed");
    run_cmd->add_option("--t-cut", run_t_cut, "override the analysis window");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "tabulate E8 lines across finished runs");
    std::vector<std::string> cmp_dirs;
    std::string cmp_reference = "table1", cmp_out;
    cmp_cmd->add_option("dirs", cmp_dirs, "run directories (each holding report.json)")
        ->required()
        ->expected(-1);
    cmp_cmd->add_option("--reference", cmp_reference,
                        "'ed' (deltas vs first run) or 'table1' (per-run deviations)");
    cmp_cmd->add_option("--out", cmp_out, "basename for .md/.json comparison files");

    // compress
    auto* cpr_cmd = app.add_subcommand("compress", "compress the propagator into a brickwall circuit");
    int cpr_L = 6, cpr_layers = 9, cpr_max_iters = 300;
    double cpr_hx = 1.0, cpr_hz = 3.0, cpr_t = 1.0, cpr_cost_tol = 1e-6;
    bool cpr_native = false;
    std::string cpr_out = "circuit.txt", cpr_trace;
    cpr_cmd->add_option("--L", cpr_L, "chain length (<= 10)");
    cpr_cmd->add_option("--h-x", cpr_hx, "transverse field");
    cpr_cmd->add_option("--h-z", cpr_hz, "longitudinal field");
    cpr_cmd->add_option("--t", cpr_t, "evolution time to compress");
    cpr_cmd->add_option("--layers", cpr_layers, "brickwall depth (odd)");
    cpr_cmd->add_option("--max-iters", cpr_max_iters, "optimizer iteration cap");
    cpr_cmd->add_option("--cost-tol", cpr_cost_tol, "stop once the cost falls below this");
    cpr_cmd->add_flag("--native", cpr_native, "lower dense gates to RZZ/RX/RZ via KAK");
    cpr_cmd->add_option("--out", cpr_out, "circuit text file to write");
    cpr_cmd->add_option("--trace", cpr_trace, "optional optimizer trace CSV");

    // mitigate
    auto* mit_cmd = app.add_subcommand("mitigate", "divide a reference decay out of a raw series");
    std::string mit_raw, mit_ref, mit_out = "mitigation.csv";
    double mit_eps = 0.05;
    mit_cmd->add_option("--raw", mit_raw, "raw series CSV (t,sz_cen)")->required();
    mit_cmd->add_option("--ref", mit_ref, "reference series CSV")->required();
    mit_cmd->add_option("--eps-den", mit_eps, "denominator validity threshold");
    mit_cmd->add_option("--out", mit_out, "mitigation CSV to write");

    // spectrum
    auto* spc_cmd = app.add_subcommand("spectrum", "Fourier-analyze a series CSV");
    std::string spc_series, spc_out = "spectrum_out";
    double spc_t_cut = 0.0, spc_min_prom = 1e-3, spc_match_tol = 0.0;
    std::optional<double> spc_hint;
    spc_cmd->add_option("--series", spc_series, "series CSV (t,sz_cen)")->required();
    spc_cmd->add_option("--t-cut", spc_t_cut, "analysis window (default: full series)");
    spc_cmd->add_option("--min-prominence", spc_min_prom, "relative prominence threshold");
    spc_cmd->add_option("--match-tol", spc_match_tol, "E8 matching tolerance (0: one bin)");
    spc_cmd->add_option("--hint-m1", spc_hint, "pin m1 instead of searching");
    spc_cmd->add_option("--out", spc_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run_cmd->parsed())
            return do_run(run_config, run_seed, run_out, run_backend, run_t_cut);
        if (cmp_cmd->parsed()) return do_compare(cmp_dirs, cmp_reference, cmp_out);
        if (cpr_cmd->parsed())
            return do_compress(cpr_L, cpr_hx, cpr_hz, cpr_t, cpr_layers, cpr_max_iters,
                               cpr_cost_tol, cpr_native, cpr_out, cpr_trace);
        if (mit_cmd->parsed()) return do_mitigate(mit_raw, mit_ref, mit_eps, mit_out);
        if (spc_cmd->parsed())
            return do_spectrum(spc_series, spc_t_cut, spc_min_prom, spc_match_tol, spc_hint,
                               spc_out);
        std::cout << app.help();
        return 0;
    } catch (const e8sim::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
