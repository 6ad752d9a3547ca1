#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace e8sim {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;
using MatC = Eigen::MatrixXcd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr double pi = std::numbers::pi;

// Basis convention: site 1 is the most significant bit of the computational
// index, bit value 0 = spin up (+1 under sigma^z), 1 = spin down (-1).
inline std::size_t dim_for(int n_sites) {
    return std::size_t{1} << n_sites;
}

inline int site_count_for(std::size_t dim) {
    int n = 0;
    while ((std::size_t{1} << n) < dim) ++n;
    if ((std::size_t{1} << n) != dim)
        throw std::invalid_argument("state dimension is not a power of two");
    return n;
}

// sigma^z eigenvalue of `site` (1-based) in basis state `idx`.
inline double z_value(std::size_t idx, int n_sites, int site) {
    const int bit = n_sites - site;
    return ((idx >> bit) & 1u) ? -1.0 : 1.0;
}

// ===== deterministic RNG helpers =====

// splitmix64: used both as a stream generator and to derive sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Independent sub-seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0xa076bc9b05116f2bull * (index + 1));
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Uniform double in [0, 1) from 53 random bits.
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// ===== small numeric utilities =====

inline bool approx_multiple(double value, double step, double tol = 1e-9) {
    const double k = std::round(value / step);
    return std::abs(k * step - value) <= tol * std::max(1.0, std::abs(value));
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_slope: need two or more paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300)
        throw std::invalid_argument("fit_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace e8sim
