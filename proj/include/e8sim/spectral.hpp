#pragma once

// Frequency-domain analysis: windowed Fourier spectra of magnetization
// series, peak extraction with topographic prominence, and assignment of
// peaks to the E8 meson reference lines.

#include <limits>
#include <optional>

#include "e8sim/exact.hpp"

namespace e8sim {

struct Spectrum {
    std::vector<double> omega;      // bin centers, ascending from zero
    std::vector<double> magnitude;  // |X_j|, one-sided
    double d_omega = 0.0;           // exactly 2*pi / t_cut
    double t_cut = 0.0;             // window [0, t_cut)
};

// Rectangular-window DFT of the mean-subtracted series over [0, t_cut).
inline Spectrum fourier(const TimeSeries& series, double t_cut) {
    if (!(series.dt > 0.0))
        throw std::invalid_argument("fourier: series needs a positive dt");
    if (!(t_cut > 0.0) || t_cut > series.duration() + 1e-9)
        throw std::invalid_argument("fourier: t_cut must lie within the series duration");
    if (!approx_multiple(t_cut, series.dt, 1e-9))
        throw std::invalid_argument("fourier: t_cut must be a multiple of dt");
    const std::size_t n = static_cast<std::size_t>(std::round(t_cut / series.dt));
    if (n < 8)
        throw std::invalid_argument("fourier: window must hold at least eight samples");

    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += series.values[k];
    mean /= static_cast<double>(n);

    Spectrum spec;
    spec.t_cut = t_cut;
    spec.d_omega = 2.0 * pi / t_cut;
    const std::size_t n_bins = n / 2 + 1;
    spec.omega.resize(n_bins);
    spec.magnitude.resize(n_bins);
    for (std::size_t j = 0; j < n_bins; ++j) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double arg = -2.0 * pi * static_cast<double>(j) * static_cast<double>(k) /
                               static_cast<double>(n);
            acc += (series.values[k] - mean) * std::polar(1.0, arg);
        }
        spec.omega[j] = spec.d_omega * static_cast<double>(j);
        spec.magnitude[j] = std::abs(acc);
    }
    return spec;
}

// ===== peaks =====

struct Peak {
    double omega = 0.0;
    double magnitude = 0.0;
    int bin = 0;
    std::string label;       // set by assign_e8
    std::string provenance;  // initial-state pattern, for aggregated runs
};

struct FindPeaksOptions {
    double min_prominence = 1e-3;  // relative to the tallest magnitude
    double band_lo = 0.0;
    double band_hi = std::numeric_limits<double>::infinity();
};

namespace detail {

// Topographic prominence: on each side walk to the first strictly higher
// bin (or the edge) and take the lowest value passed; the peak stands
// above the higher of the two bases.
inline double prominence(const std::vector<double>& mag, std::size_t i) {
    double left = mag[i], right = mag[i];
    for (std::size_t j = i; j-- > 0;) {
        if (mag[j] > mag[i]) break;
        left = std::min(left, mag[j]);
    }
    for (std::size_t j = i + 1; j < mag.size(); ++j) {
        if (mag[j] > mag[i]) break;
        right = std::min(right, mag[j]);
    }
    return mag[i] - std::max(left, right);
}

}  // namespace detail

// Strict local maxima inside the band, filtered by relative prominence and
// sorted tallest first.
inline std::vector<Peak> find_peaks(const Spectrum& spec, const FindPeaksOptions& opts = {}) {
    if (spec.magnitude.size() < 3)
        throw std::invalid_argument("find_peaks: spectrum too short");
    if (!(opts.band_lo < opts.band_hi))
        throw std::invalid_argument("find_peaks: empty band");
    if (opts.band_lo > spec.omega.back() || opts.band_hi < spec.omega.front())
        throw std::invalid_argument("find_peaks: band outside the spectrum");
    if (!(opts.min_prominence >= 0.0))
        throw std::invalid_argument("find_peaks: min_prominence must be non-negative");

    const double mag_max = *std::max_element(spec.magnitude.begin(), spec.magnitude.end());
    std::vector<Peak> peaks;
    if (mag_max <= 0.0) return peaks;
    for (std::size_t i = 1; i + 1 < spec.magnitude.size(); ++i) {
        if (spec.omega[i] < opts.band_lo || spec.omega[i] > opts.band_hi) continue;
        if (!(spec.magnitude[i] > spec.magnitude[i - 1] &&
              spec.magnitude[i] > spec.magnitude[i + 1]))
            continue;
        if (detail::prominence(spec.magnitude, i) < opts.min_prominence * mag_max) continue;
        peaks.push_back({spec.omega[i], spec.magnitude[i], static_cast<int>(i), "", ""});
    }
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.magnitude > b.magnitude;
    });
    return peaks;
}

// ===== E8 assignment =====

struct AssignOptions {
    std::optional<double> hint_m1;  // skip the automatic m1 search
    double match_tol = 0.0;         // <= 0: use the spectrum's d_omega
    double m1_band_lo = 0.7;        // automatic search band, relative to the
    double m1_band_hi = 1.3;        //   tallest peak below m1_search_max
    double m1_search_max = 3.0;
};

struct LineResult {
    std::string label;
    double predicted = 0.0;
    double measured = 0.0;
    double deviation = 0.0;  // measured - predicted
    double magnitude = 0.0;
};

struct PeakReport {
    double m1 = 0.0;
    double match_tol = 0.0;
    std::vector<Peak> peaks;        // magnitude-descending, labels filled in
    std::vector<LineResult> lines;  // claimed reference lines, ascending
};

inline PeakReport assign_e8(const std::vector<Peak>& found, double d_omega,
                            const AssignOptions& opts = {}) {
    if (found.empty())
        throw std::invalid_argument("assign_e8: no peaks to assign");
    if (!(d_omega > 0.0))
        throw std::invalid_argument("assign_e8: d_omega must be positive");

    std::vector<Peak> peaks = found;
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.magnitude > b.magnitude;
    });

    double m1 = 0.0;
    if (opts.hint_m1) {
        if (!(*opts.hint_m1 > 0.0))
            throw std::invalid_argument("assign_e8: hint_m1 must be positive");
        m1 = *opts.hint_m1;
    } else {
        // Coarse guess: tallest peak at low frequency; refine to the tallest
        // peak inside the relative band around it.
        const Peak* coarse = nullptr;
        for (const Peak& p : peaks)
            if (p.omega < opts.m1_search_max && (!coarse || p.magnitude > coarse->magnitude))
                coarse = &p;
        if (!coarse)
            throw std::runtime_error("assign_e8: no candidate peak below the m1 search cutoff");
        for (const Peak& p : peaks)
            if (p.omega >= opts.m1_band_lo * coarse->omega &&
                p.omega <= opts.m1_band_hi * coarse->omega && m1 == 0.0)
                m1 = p.omega;  // peaks are magnitude-sorted: first hit is tallest
    }

    const double tol = opts.match_tol > 0.0 ? opts.match_tol : d_omega;
    const auto refs = e8_reference(m1);
    std::array<int, 4> claimed_by;
    claimed_by.fill(-1);
    for (std::size_t pi = 0; pi < peaks.size(); ++pi) {
        int best = -1;
        double best_dist = tol;
        for (int r = 0; r < 4; ++r) {
            if (claimed_by[r] >= 0) continue;
            const double dist = std::abs(peaks[pi].omega - refs[r].value);
            if (dist <= best_dist) {
                best_dist = dist;
                best = r;
            }
        }
        if (best >= 0) {
            claimed_by[best] = static_cast<int>(pi);
            peaks[pi].label = refs[best].label;
        }
    }

    PeakReport report;
    report.m1 = m1;
    report.match_tol = tol;
    report.peaks = std::move(peaks);
    for (int r = 0; r < 4; ++r) {
        if (claimed_by[r] < 0) continue;
        const Peak& p = report.peaks[claimed_by[r]];
        report.lines.push_back(
            {refs[r].label, refs[r].value, p.omega, p.omega - refs[r].value, p.magnitude});
    }
    if (report.lines.empty())
        throw std::runtime_error("assign_e8: no peak matches any reference entry");
    return report;
}

// ===== multi-initial-state aggregation =====
// Union of per-run peaks, deduplicated within half a bin (tallest wins),
// then assigned as one spectrum.

inline PeakReport aggregate_initial_states(
    const std::vector<std::pair<std::string, Spectrum>>& runs,
    const FindPeaksOptions& find_opts = {}, const AssignOptions& assign_opts = {}) {
    if (runs.empty())
        throw std::invalid_argument("aggregate_initial_states: no runs");
    const double d_omega = runs.front().second.d_omega;
    for (const auto& [pattern, spec] : runs)
        if (std::abs(spec.d_omega - d_omega) > 1e-12 * d_omega)
            throw std::invalid_argument(
                "aggregate_initial_states: runs must share the frequency grid");

    std::vector<Peak> pool;
    for (const auto& [pattern, spec] : runs) {
        auto peaks = find_peaks(spec, find_opts);
        for (Peak& p : peaks) {
            p.provenance = pattern;
            pool.push_back(p);
        }
    }
    std::stable_sort(pool.begin(), pool.end(), [](const Peak& a, const Peak& b) {
        return a.magnitude > b.magnitude;
    });
    std::vector<Peak> merged;
    for (const Peak& p : pool) {
        bool duplicate = false;
        for (const Peak& kept : merged)
            if (std::abs(kept.omega - p.omega) <= d_omega / 2.0) duplicate = true;
        if (!duplicate) merged.push_back(p);
    }
    return assign_e8(merged, d_omega, assign_opts);
}

// ===== CSV =====

inline void spectrum_to_csv(const Spectrum& spec, std::ostream& os) {
    os << "omega,magnitude\n";
    for (std::size_t j = 0; j < spec.omega.size(); ++j)
        os << format_g17(spec.omega[j]) << ',' << format_g17(spec.magnitude[j]) << '\n';
}

inline void spectrum_to_csv(const Spectrum& spec, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("spectrum_to_csv: cannot open " + path);
    spectrum_to_csv(spec, os);
}

}  // namespace e8sim
