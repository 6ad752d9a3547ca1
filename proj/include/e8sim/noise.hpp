#pragma once

// Density-matrix simulation with depolarizing gate noise and readout bias,
// the zero-angle reference-circuit error mitigation scheme, and the
// interleaved hardware job plan.

#include "e8sim/circuit.hpp"

namespace e8sim {

struct NoiseModel {
    double p1 = 0.0;                    // depolarizing weight after 1q gates
    double p2 = 0.0;                    // depolarizing weight after 2q gates
    double readout_flip = 0.0;          // symmetric readout flip probability
    double global_depol_per_step = 0.0; // whole-register channel per step

    bool enabled() const {
        return p1 > 0 || p2 > 0 || readout_flip > 0 || global_depol_per_step > 0;
    }
};

inline void validate(const NoiseModel& n) {
    for (double p : {n.p1, n.p2, n.readout_flip, n.global_depol_per_step})
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("NoiseModel: probabilities must lie in [0, 1]");
}

// ===== density-matrix primitives =====

inline MatC dm_from_state(const VecC& psi) {
    return psi * psi.adjoint();
}

inline void apply_gate_dm(MatC& rho, int L, const Gate& g) {
    apply_gate_columns(rho, L, g);  // rho <- U rho
    apply_gate_rows_dag(rho, L, g); // rho <- rho U^dag
}

// With probability p the gate's support is replaced by the maximally mixed
// state: rho <- (1-p) rho + p (I/2^k (x) Tr_support rho).
inline void depolarize_support(MatC& rho, int L, int site, int n_sites, double p) {
    if (p <= 0.0) return;
    const std::size_t d = dim_for(L);
    const int shift = L - site - (n_sites - 1);  // lowest bit of the support
    const std::size_t mask = ((std::size_t{1} << n_sites) - 1) << shift;
    const std::size_t sub = std::size_t{1} << n_sites;
    MatC mixed = MatC::Zero(d, d);
    for (std::size_t r = 0; r < d; ++r) {
        const std::size_t r_base = r & ~mask;
        for (std::size_t c = 0; c < d; ++c) {
            if (((r ^ c) & mask) != 0) continue;  // mixed part is diagonal on the support
            const std::size_t c_base = c & ~mask;
            cplx tr = 0.0;
            for (std::size_t b = 0; b < sub; ++b)
                tr += rho(r_base | (b << shift), c_base | (b << shift));
            mixed(r, c) = tr / static_cast<double>(sub);
        }
    }
    rho = (1.0 - p) * rho + p * mixed;
}

inline void depolarize_global(MatC& rho, double lambda) {
    if (lambda <= 0.0) return;
    const double d = static_cast<double>(rho.rows());
    const cplx tr = rho.trace();
    rho = (1.0 - lambda) * rho;
    rho.diagonal().array() += lambda * tr / d;
}

inline double expectation_z_dm(const MatC& rho, int site) {
    const int n = site_count_for(static_cast<std::size_t>(rho.rows()));
    if (site < 1 || site > n)
        throw std::invalid_argument("expectation_z_dm: site out of range");
    cplx acc = 0.0;
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(rho.rows()); ++idx)
        acc += rho(idx, idx) * z_value(idx, n, site);
    if (std::abs(acc.imag()) > 1e-10)
        throw std::runtime_error("expectation_z_dm: imaginary residue exceeds 1e-10");
    return acc.real();
}

// Finite-shot Bernoulli estimate given an up-probability.
inline double sample_expectation_from_p(double p_up, long long shots, std::uint64_t seed) {
    if (shots < 1)
        throw std::invalid_argument("sample_expectation_from_p: shots must be positive");
    p_up = std::clamp(p_up, 0.0, 1.0);
    std::mt19937_64 rng(seed);
    long long ups = 0;
    for (long long s = 0; s < shots; ++s)
        if (uniform01(rng()) < p_up) ++ups;
    return 2.0 * static_cast<double>(ups) / static_cast<double>(shots) - 1.0;
}

// ===== reference circuits =====

// Zero out every single-qubit rotation, keep the RZZ pattern; the reference
// evolution is classical on Z-basis states, which is what makes the ratio
// mitigation work.
inline Circuit reference_circuit(const Circuit& c) {
    validate(c);
    Circuit ref = c;
    for (auto& layer : ref.layers)
        for (Gate& g : layer) {
            switch (g.kind) {
                case GateKind::RX:
                case GateKind::RZ:
                    g.angle = 0.0;
                    break;
                case GateKind::RZZ:
                    break;
                case GateKind::DENSE2Q:
                    throw std::invalid_argument(
                        "reference_circuit: decompose DENSE2Q gates to native gates first");
            }
        }
    return ref;
}

// ===== noisy series =====

// Central-site magnetization after k noisy applications of `step` to the
// kink state; gate channels follow each gate, the global channel each step.
inline TimeSeries run_noisy_step_series(const ModelSpec& spec, const std::string& pattern,
                                        const Circuit& step, double dt, double t_max,
                                        const NoiseModel& noise, long long shots = -1,
                                        std::uint64_t seed = 0) {
    validate(spec);
    validate(noise);
    validate(step);
    if (spec.L > 10)
        throw std::invalid_argument("run_noisy_step_series: density matrices capped at L = 10");
    if (static_cast<int>(pattern.size()) != spec.L || step.L != spec.L)
        throw std::invalid_argument("run_noisy_step_series: inconsistent register sizes");
    const std::size_t n_points = series_point_count(dt, t_max);
    const int site = central_site(spec.L);

    TimeSeries out;
    out.dt = dt;
    out.meta = {"noisy", spec, pattern, site, shots, seed, {}};
    out.values.reserve(n_points);
    MatC rho = dm_from_state(kink_state(pattern));
    for (std::size_t k = 0; k < n_points; ++k) {
        if (k > 0) {
            for (const auto& layer : step.layers)
                for (const Gate& g : layer) {
                    apply_gate_dm(rho, spec.L, g);
                    if (g.two_qubit())
                        depolarize_support(rho, spec.L, g.q1, 2, noise.p2);
                    else
                        depolarize_support(rho, spec.L, g.q1, 1, noise.p1);
                }
            depolarize_global(rho, noise.global_depol_per_step);
        }
        const double e = (1.0 - 2.0 * noise.readout_flip) * expectation_z_dm(rho, site);
        out.values.push_back(shots > 0 ? sample_expectation_from_p((1.0 + e) / 2.0, shots,
                                                                   derive_seed(seed, k))
                                       : e);
    }
    return out;
}

inline TimeSeries run_noisy_series(const ModelSpec& spec, const std::string& pattern, double dt,
                                   double t_max, const NoiseModel& noise, long long shots = -1,
                                   std::uint64_t seed = 0) {
    return run_noisy_step_series(spec, pattern, trotter_first_order(spec, dt), dt, t_max, noise,
                                 shots, seed);
}

inline TimeSeries run_noisy_reference_series(const ModelSpec& spec, const std::string& pattern,
                                             double dt, double t_max, const NoiseModel& noise,
                                             long long shots = -1, std::uint64_t seed = 0) {
    TimeSeries ref = run_noisy_step_series(
        spec, pattern, reference_circuit(trotter_first_order(spec, dt)), dt, t_max, noise, shots,
        seed == 0 ? 0 : derive_seed(seed, 0x5ef5));
    ref.meta.backend = "noisy-reference";
    return ref;
}

// ===== mitigation =====

struct MitigationPair {
    TimeSeries raw;
    TimeSeries reference;
    TimeSeries mitigated;
    std::vector<char> valid;  // entries with |reference| >= eps_den
    double eps_den = 0.0;
};

// mitigated(t) = raw(t) * reference(0) / reference(t); entries whose
// denominator falls under eps_den keep the raw value and are flagged.
inline MitigationPair mitigate(const TimeSeries& raw, const TimeSeries& reference,
                               double eps_den = 0.05) {
    if (raw.values.size() != reference.values.size() ||
        std::abs(raw.dt - reference.dt) > 1e-12)
        throw std::invalid_argument("mitigate: raw and reference series must share the grid");
    if (!(eps_den > 0.0))
        throw std::invalid_argument("mitigate: eps_den must be positive");
    if (std::abs(reference.values[0]) < eps_den)
        throw std::runtime_error("mitigate: reference series is invalid at t = 0");

    MitigationPair pair;
    pair.raw = raw;
    pair.reference = reference;
    pair.mitigated = raw;
    pair.mitigated.meta.backend = "mitigated";
    pair.eps_den = eps_den;
    pair.valid.resize(raw.values.size(), 0);
    const double ref0 = reference.values[0];
    bool any_valid = false;
    for (std::size_t k = 0; k < raw.values.size(); ++k) {
        if (std::abs(reference.values[k]) >= eps_den) {
            pair.mitigated.values[k] = raw.values[k] * ref0 / reference.values[k];
            pair.valid[k] = 1;
            any_valid = true;
        }
    }
    if (!any_valid)
        throw std::runtime_error("mitigate: every entry was flagged invalid");
    return pair;
}

// Largest t_cut whose window [0, t_cut) holds only valid entries.
inline double valid_prefix_t_cut(const MitigationPair& pair) {
    std::size_t n = 0;
    while (n < pair.valid.size() && pair.valid[n]) ++n;
    return static_cast<double>(n) * pair.mitigated.dt;
}

inline void mitigation_to_csv(const MitigationPair& pair, std::ostream& os) {
    os << "t,raw,ref,mitigated,valid\n";
    for (std::size_t k = 0; k < pair.raw.values.size(); ++k)
        os << format_g17(pair.raw.dt * static_cast<double>(k)) << ','
           << format_g17(pair.raw.values[k]) << ',' << format_g17(pair.reference.values[k])
           << ',' << format_g17(pair.mitigated.values[k]) << ','
           << static_cast<int>(pair.valid[k]) << '\n';
}

inline void mitigation_to_csv(const MitigationPair& pair, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("mitigation_to_csv: cannot open " + path);
    mitigation_to_csv(pair, os);
}

// ===== hardware job plan =====

// Every physics circuit is immediately followed by its reference twin, and
// the stream is cut into submission chunks that never split a pair.
struct JobPlan {
    std::vector<std::string> entries;
    std::size_t chunk_size = 200;
    std::vector<std::size_t> chunk_starts;  // entry index of each chunk
};

inline JobPlan interleaved_plan(const std::vector<std::string>& circuit_labels,
                                std::size_t chunk_size = 200) {
    if (circuit_labels.empty())
        throw std::invalid_argument("interleaved_plan: no circuits");
    if (chunk_size < 2 || chunk_size % 2 != 0)
        throw std::invalid_argument("interleaved_plan: chunk size must be even and at least 2");
    JobPlan plan;
    plan.chunk_size = chunk_size;
    for (const std::string& label : circuit_labels) {
        plan.entries.push_back(label);
        plan.entries.push_back(label + "_ref");
    }
    for (std::size_t start = 0; start < plan.entries.size(); start += chunk_size)
        plan.chunk_starts.push_back(start);
    return plan;
}

inline std::string plan_to_text(const JobPlan& plan) {
    std::string out;
    for (std::size_t i = 0; i < plan.entries.size(); ++i) {
        if (i > 0 && i % plan.chunk_size == 0) out += "=== submit ===\n";
        out += plan.entries[i] + "\n";
    }
    return out;
}

}  // namespace e8sim
