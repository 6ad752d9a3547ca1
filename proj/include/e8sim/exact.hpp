#pragma once

// Exact-diagonalization backend: spectra, unitary time evolution, and the
// reference time series of the central-site magnetization.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "e8sim/model.hpp"

namespace e8sim {

struct EigenSystem {
    VecR eigenvalues;   // ascending
    MatC eigenvectors;  // columns match eigenvalues
};

inline EigenSystem diagonalize(const MatC& h) {
    if (h.rows() != h.cols())
        throw std::invalid_argument("diagonalize: matrix must be square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw std::invalid_argument("diagonalize: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatC> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("diagonalize: eigensolver failed");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// psi(t) = V exp(-i lambda t) V^dag psi0
inline VecC evolve_exact(const EigenSystem& eig, const VecC& psi0, double t) {
    if (psi0.size() != eig.eigenvectors.rows())
        throw std::invalid_argument("evolve_exact: state dimension mismatch");
    VecC coeffs = eig.eigenvectors.adjoint() * psi0;
    for (Eigen::Index j = 0; j < coeffs.size(); ++j)
        coeffs(j) *= std::polar(1.0, -eig.eigenvalues(j) * t);
    return eig.eigenvectors * coeffs;
}

// ===== time series container =====

struct SeriesMeta {
    std::string backend;  // "exact", "trotter", "compressed", "noisy", "csv"
    ModelSpec model;
    std::string pattern;
    int site = 0;
    long long shots = -1;  // -1: exact expectation values
    std::uint64_t seed = 0;
    std::vector<std::string> notes;
};

struct TimeSeries {
    double dt = 0.0;
    std::vector<double> values;  // sample k is time k*dt
    SeriesMeta meta;

    double duration() const {
        return values.empty() ? 0.0 : dt * static_cast<double>(values.size() - 1);
    }
};

// <sigma^z_site> of a pure state; the site is 1-based.
inline double expectation_z_state(const VecC& psi, int site) {
    const int n = site_count_for(static_cast<std::size_t>(psi.size()));
    if (site < 1 || site > n)
        throw std::invalid_argument("expectation_z_state: site out of range");
    cplx acc = 0.0;
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(psi.size()); ++idx)
        acc += std::conj(psi(idx)) * psi(idx) * z_value(idx, n, site);
    if (std::abs(acc.imag()) > 1e-10)
        throw std::runtime_error("expectation_z_state: imaginary residue exceeds 1e-10");
    return acc.real();
}

inline std::size_t series_point_count(double dt, double t_max) {
    if (!(dt > 0.0))
        throw std::invalid_argument("time series: dt must be positive");
    if (t_max < 0.0)
        throw std::invalid_argument("time series: t_max must be non-negative");
    const double k = std::round(t_max / dt);
    if (std::abs(k * dt - t_max) > 1e-9 * std::max(1.0, t_max))
        throw std::invalid_argument("time series: dt must divide t_max");
    return static_cast<std::size_t>(k) + 1;
}

// Central-site magnetization under exact evolution from a kink state.
inline TimeSeries run_exact_series(const ModelSpec& spec, const std::string& pattern,
                                   double dt, double t_max) {
    validate(spec);
    if (static_cast<int>(pattern.size()) != spec.L)
        throw std::invalid_argument("run_exact_series: pattern length must equal L");
    const std::size_t n_points = series_point_count(dt, t_max);
    const EigenSystem eig = diagonalize(build_hamiltonian(spec));
    const int site = central_site(spec.L);
    const VecC psi0 = kink_state(pattern);
    const VecC coeffs0 = eig.eigenvectors.adjoint() * psi0;

    TimeSeries out;
    out.dt = dt;
    out.meta = {"exact", spec, pattern, site, -1, 0, {}};
    out.values.reserve(n_points);
    VecC coeffs(coeffs0.size());
    for (std::size_t k = 0; k < n_points; ++k) {
        const double t = dt * static_cast<double>(k);
        for (Eigen::Index j = 0; j < coeffs.size(); ++j)
            coeffs(j) = coeffs0(j) * std::polar(1.0, -eig.eigenvalues(j) * t);
        out.values.push_back(expectation_z_state(eig.eigenvectors * coeffs, site));
    }
    return out;
}

// ===== CSV round trip =====

inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline void series_to_csv(const TimeSeries& series, std::ostream& os) {
    os << "t,sz_cen\n";
    for (std::size_t k = 0; k < series.values.size(); ++k)
        os << format_g17(series.dt * static_cast<double>(k)) << ','
           << format_g17(series.values[k]) << '\n';
}

inline void series_to_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("series_to_csv: cannot open " + path);
    series_to_csv(series, os);
}

inline TimeSeries series_from_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,sz_cen")
        throw std::invalid_argument("series_from_csv: expected header 't,sz_cen'");
    std::vector<double> times, values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("series_from_csv: malformed row '" + line + "'");
        times.push_back(std::stod(line.substr(0, comma)));
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (times.size() < 2)
        throw std::invalid_argument("series_from_csv: need at least two samples");
    const double dt = times[1] - times[0];
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - dt * static_cast<double>(k)) > 1e-9 * std::max(1.0, times.back()))
            throw std::invalid_argument("series_from_csv: time grid is not uniform from zero");
    TimeSeries out;
    out.dt = dt;
    out.values = std::move(values);
    out.meta.backend = "csv";
    return out;
}

inline TimeSeries series_from_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("series_from_csv: cannot open " + path);
    return series_from_csv(is);
}

}  // namespace e8sim
