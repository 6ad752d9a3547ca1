#pragma once

// Transverse+longitudinal-field Ising chain with open boundaries:
//   H = -( sum_i Z_i Z_{i+1} + h_x sum_i X_i + h_z sum_i Z_i )
// plus the kink product states and E8 reference lines used by the
// spectroscopy analysis.

#include <array>
#include <cmath>

#include "e8sim/common.hpp"

namespace e8sim {

struct ModelSpec {
    int L = 8;
    double h_x = 1.0;
    double h_z = 3.0;
};

inline void validate(const ModelSpec& spec) {
    if (spec.L < 2)
        throw std::invalid_argument("ModelSpec: need at least two sites");
}

// Dense Hamiltonian; exact workflows only, so the size is capped.
inline MatC build_hamiltonian(const ModelSpec& spec) {
    validate(spec);
    if (spec.L > 14)
        throw std::invalid_argument("build_hamiltonian: dense construction capped at L = 14");
    const std::size_t d = dim_for(spec.L);
    MatC h = MatC::Zero(d, d);
    for (std::size_t idx = 0; idx < d; ++idx) {
        double zz = 0.0, z = 0.0;
        for (int s = 1; s <= spec.L; ++s) {
            const double zs = z_value(idx, spec.L, s);
            z += zs;
            if (s < spec.L) zz += zs * z_value(idx, spec.L, s + 1);
        }
        h(idx, idx) = -(zz + spec.h_z * z);
        for (int s = 1; s <= spec.L; ++s) {
            const std::size_t flipped = idx ^ (std::size_t{1} << (spec.L - s));
            h(flipped, idx) += -spec.h_x;
        }
    }
    return h;
}

// ===== kink product states =====

// Pattern letters: 'U' spin up, 'D' spin down; position k is site k.
inline std::size_t kink_index(const std::string& pattern) {
    if (pattern.size() < 2)
        throw std::invalid_argument("kink pattern: need at least two sites");
    std::size_t idx = 0;
    for (char c : pattern) {
        idx <<= 1;
        if (c == 'D')
            idx |= 1;
        else if (c != 'U')
            throw std::invalid_argument("kink pattern: letters must be 'U' or 'D'");
    }
    return idx;
}

inline VecC kink_state(const std::string& pattern) {
    const std::size_t idx = kink_index(pattern);
    VecC psi = VecC::Zero(dim_for(static_cast<int>(pattern.size())));
    psi(idx) = 1.0;
    return psi;
}

// Measurement site: middle of the chain, rounded up for odd L (1-based).
inline int central_site(int L) {
    if (L < 2)
        throw std::invalid_argument("central_site: need at least two sites");
    return (L % 2 == 0) ? L / 2 : (L + 1) / 2;
}

// ===== E8 reference lines =====

struct E8Entry {
    std::string label;
    double value;
};

// The four dominant lines of the perturbed-Ising meson spectrum, in units of
// the lightest meson mass m1; m2/m1 is the golden ratio.
inline std::array<E8Entry, 4> e8_reference(double m1) {
    if (!(m1 > 0.0))
        throw std::invalid_argument("e8_reference: m1 must be positive");
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    return {E8Entry{"m2-m1", (phi - 1.0) * m1}, E8Entry{"m1", m1},
            E8Entry{"m2", phi * m1}, E8Entry{"m1+m2", (phi + 1.0) * m1}};
}

}  // namespace e8sim
