#pragma once

// Layered quantum circuits over a line of qubits: native gate set
// {RX, RZ, RZZ} plus dense two-qubit blocks, statevector simulation,
// Trotterized evolution circuits, and a plain-text serialization.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>

#include "e8sim/exact.hpp"

namespace e8sim {

// ===== gates =====

enum class GateKind { RX, RZ, RZZ, DENSE2Q };

struct Gate {
    GateKind kind;
    int q1 = 0;       // 1-based site
    int q2 = 0;       // second site of a two-qubit gate (always q1 + 1)
    double angle = 0.0;
    Mat4 mat;         // DENSE2Q payload only

    static Gate rx(int q, double angle) { return {GateKind::RX, q, 0, angle, Mat4::Zero()}; }
    static Gate rz(int q, double angle) { return {GateKind::RZ, q, 0, angle, Mat4::Zero()}; }

    static Gate rzz(int q1, int q2, double angle) {
        if (q2 != q1 + 1)
            throw std::invalid_argument("Gate::rzz: gate must act on an adjacent pair");
        return {GateKind::RZZ, q1, q2, angle, Mat4::Zero()};
    }

    static Gate dense2q(int q1, int q2, const Mat4& u) {
        if (q2 != q1 + 1)
            throw std::invalid_argument("Gate::dense2q: gate must act on an adjacent pair");
        if (((u.adjoint() * u) - Mat4::Identity()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("Gate::dense2q: matrix is not unitary");
        return {GateKind::DENSE2Q, q1, q2, 0.0, u};
    }

    bool two_qubit() const { return kind == GateKind::RZZ || kind == GateKind::DENSE2Q; }
};

// RX(a) = exp(-i a X / 2), RZ(a) = exp(-i a Z / 2)
inline Mat2 rx_matrix(double a) {
    const double c = std::cos(a / 2), s = std::sin(a / 2);
    Mat2 m;
    m << cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0);
    return m;
}

inline Mat2 rz_matrix(double a) {
    Mat2 m = Mat2::Zero();
    m(0, 0) = std::polar(1.0, -a / 2);
    m(1, 1) = std::polar(1.0, a / 2);
    return m;
}

// RZZ(a) = exp(-i a Z(x)Z / 2)
inline Mat4 rzz_matrix(double a) {
    Mat4 m = Mat4::Zero();
    const cplx even = std::polar(1.0, -a / 2), odd = std::polar(1.0, a / 2);
    m(0, 0) = even;
    m(1, 1) = odd;
    m(2, 2) = odd;
    m(3, 3) = even;
    return m;
}

inline Mat2 gate_matrix_1q(const Gate& g) {
    switch (g.kind) {
        case GateKind::RX: return rx_matrix(g.angle);
        case GateKind::RZ: return rz_matrix(g.angle);
        default: throw std::invalid_argument("gate_matrix_1q: not a one-qubit gate");
    }
}

inline Mat4 gate_matrix_2q(const Gate& g) {
    switch (g.kind) {
        case GateKind::RZZ: return rzz_matrix(g.angle);
        case GateKind::DENSE2Q: return g.mat;
        default: throw std::invalid_argument("gate_matrix_2q: not a two-qubit gate");
    }
}

// ===== circuits =====

struct Circuit {
    int L = 0;
    std::vector<std::vector<Gate>> layers;
};

inline void validate(const Circuit& c) {
    if (c.L < 1) throw std::invalid_argument("Circuit: need at least one qubit");
    for (const auto& layer : c.layers) {
        std::set<int> used;
        for (const Gate& g : layer) {
            if (g.q1 < 1 || g.q1 > c.L || (g.two_qubit() && g.q2 > c.L))
                throw std::invalid_argument("Circuit: gate site out of range");
            if (!used.insert(g.q1).second || (g.two_qubit() && !used.insert(g.q2).second))
                throw std::invalid_argument("Circuit: overlapping gates within a layer");
        }
    }
}

// ===== state kernels =====
// Elements are addressed as data[idx * stride]; site 1 is the most
// significant bit of idx.

inline void apply_1q_strided(cplx* data, std::ptrdiff_t stride, int L, int site, const Mat2& u) {
    const std::size_t d = dim_for(L);
    const std::size_t st = std::size_t{1} << (L - site);
    for (std::size_t g = 0; g < d; g += 2 * st)
        for (std::size_t i = g; i < g + st; ++i) {
            cplx& a0 = data[i * stride];
            cplx& a1 = data[(i + st) * stride];
            const cplx v0 = a0, v1 = a1;
            a0 = u(0, 0) * v0 + u(0, 1) * v1;
            a1 = u(1, 0) * v0 + u(1, 1) * v1;
        }
}

inline void apply_2q_strided(cplx* data, std::ptrdiff_t stride, int L, int site, const Mat4& u) {
    const std::size_t d = dim_for(L);
    const std::size_t lo = std::size_t{1} << (L - site - 1);  // site + 1
    const std::size_t hi = lo << 1;                           // site
    for (std::size_t g = 0; g < d; g += 2 * hi)
        for (std::size_t h = g; h < g + hi; h += 2 * lo)
            for (std::size_t i = h; i < h + lo; ++i) {
                cplx* p[4] = {&data[i * stride], &data[(i + lo) * stride],
                              &data[(i + hi) * stride], &data[(i + hi + lo) * stride]};
                const cplx v[4] = {*p[0], *p[1], *p[2], *p[3]};
                for (int r = 0; r < 4; ++r)
                    *p[r] = u(r, 0) * v[0] + u(r, 1) * v[1] + u(r, 2) * v[2] + u(r, 3) * v[3];
            }
}

inline void apply_gate_state(VecC& psi, int L, const Gate& g) {
    if (g.two_qubit())
        apply_2q_strided(psi.data(), 1, L, g.q1, gate_matrix_2q(g));
    else
        apply_1q_strided(psi.data(), 1, L, g.q1, gate_matrix_1q(g));
}

// M <- emb(gate) * M, one kernel pass per column.
inline void apply_gate_columns(MatC& m, int L, const Gate& g) {
    const bool two = g.two_qubit();
    const Mat4 u4 = two ? gate_matrix_2q(g) : Mat4(Mat4::Zero());
    const Mat2 u2 = two ? Mat2(Mat2::Zero()) : gate_matrix_1q(g);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        cplx* col = m.data() + c * m.rows();
        if (two)
            apply_2q_strided(col, 1, L, g.q1, u4);
        else
            apply_1q_strided(col, 1, L, g.q1, u2);
    }
}

// Same as apply_gate_columns, but with an explicit local matrix (used for
// transposed/conjugated sweeps).
inline void apply_1q_matrix_columns(MatC& m, int L, int site, const Mat2& u) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        apply_1q_strided(m.data() + c * m.rows(), 1, L, site, u);
}

inline void apply_2q_matrix_columns(MatC& m, int L, int site, const Mat4& u) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        apply_2q_strided(m.data() + c * m.rows(), 1, L, site, u);
}

// M <- M * emb(gate)^dag, one strided kernel pass per row.
inline void apply_gate_rows_dag(MatC& m, int L, const Gate& g) {
    const bool two = g.two_qubit();
    const Mat4 u4 = two ? gate_matrix_2q(g).conjugate().eval() : Mat4::Zero().eval();
    const Mat2 u2 = two ? Mat2::Zero().eval() : gate_matrix_1q(g).conjugate().eval();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        cplx* row = m.data() + r;
        if (two)
            apply_2q_strided(row, m.rows(), L, g.q1, u4);
        else
            apply_1q_strided(row, m.rows(), L, g.q1, u2);
    }
}

// ===== circuit application =====

inline VecC apply_circuit(const VecC& psi0, const Circuit& c) {
    validate(c);
    if (psi0.size() != static_cast<Eigen::Index>(dim_for(c.L)))
        throw std::invalid_argument("apply_circuit: state dimension mismatch");
    const double norm_in = psi0.norm();
    VecC psi = psi0;
    for (const auto& layer : c.layers)
        for (const Gate& g : layer)
            apply_gate_state(psi, c.L, g);
    if (std::abs(psi.norm() - norm_in) > 1e-12 * std::max(1.0, norm_in))
        throw std::runtime_error("apply_circuit: norm drift exceeds 1e-12");
    return psi;
}

inline MatC circuit_to_matrix(const Circuit& c) {
    validate(c);
    if (c.L > 12)
        throw std::invalid_argument("circuit_to_matrix: dense form capped at L = 12");
    MatC m = MatC::Identity(dim_for(c.L), dim_for(c.L));
    for (const auto& layer : c.layers)
        for (const Gate& g : layer)
            apply_gate_columns(m, c.L, g);
    return m;
}

// ===== Trotter circuits =====
// One step approximates exp(-i H dt) for the Ising chain; the splitting is
// exp(i dt ZZ) factors (even bonds, then odd), then the X and Z field
// rotations. exp(i a P) on the native gates means angle -2a.

inline Circuit trotter_first_order(const ModelSpec& spec, double dt) {
    validate(spec);
    Circuit c;
    c.L = spec.L;
    c.layers.assign(4, {});
    for (int i = 2; i + 1 <= spec.L; i += 2) c.layers[0].push_back(Gate::rzz(i, i + 1, -2 * dt));
    for (int i = 1; i + 1 <= spec.L; i += 2) c.layers[1].push_back(Gate::rzz(i, i + 1, -2 * dt));
    for (int i = 1; i <= spec.L; ++i) c.layers[2].push_back(Gate::rx(i, -2 * spec.h_x * dt));
    for (int i = 1; i <= spec.L; ++i) c.layers[3].push_back(Gate::rz(i, -2 * spec.h_z * dt));
    return c;
}

// Symmetric splitting: half-step field layers around the full interaction.
inline Circuit trotter_second_order(const ModelSpec& spec, double dt) {
    validate(spec);
    Circuit c;
    c.L = spec.L;
    c.layers.assign(6, {});
    for (int i = 1; i <= spec.L; ++i) c.layers[0].push_back(Gate::rz(i, -spec.h_z * dt));
    for (int i = 1; i <= spec.L; ++i) c.layers[1].push_back(Gate::rx(i, -spec.h_x * dt));
    for (int i = 1; i + 1 <= spec.L; i += 2) c.layers[2].push_back(Gate::rzz(i, i + 1, -2 * dt));
    for (int i = 2; i + 1 <= spec.L; i += 2) c.layers[3].push_back(Gate::rzz(i, i + 1, -2 * dt));
    for (int i = 1; i <= spec.L; ++i) c.layers[4].push_back(Gate::rx(i, -spec.h_x * dt));
    for (int i = 1; i <= spec.L; ++i) c.layers[5].push_back(Gate::rz(i, -spec.h_z * dt));
    return c;
}

// ===== measurement =====

inline double expectation_z(const VecC& psi, int site) {
    return expectation_z_state(psi, site);
}

// Finite-shot estimate of <sigma^z_site> from independent Z-basis samples.
inline double sample_expectation_z(const VecC& psi, int site, long long shots,
                                   std::uint64_t seed) {
    if (shots < 1)
        throw std::invalid_argument("sample_expectation_z: shots must be positive");
    const double p_up = std::clamp((1.0 + expectation_z(psi, site)) / 2.0, 0.0, 1.0);
    std::mt19937_64 rng(seed);
    long long ups = 0;
    for (long long s = 0; s < shots; ++s)
        if (uniform01(rng()) < p_up) ++ups;
    return 2.0 * static_cast<double>(ups) / static_cast<double>(shots) - 1.0;
}

// ===== Trotter time series =====
// Point k of the series is the central-site magnetization after k
// applications of the one-step circuit to the kink state; evolving the
// cached state forward replays exactly the per-point rebuild gate for gate.

inline TimeSeries run_trotter_series(const ModelSpec& spec, const std::string& pattern,
                                     double dt, double t_max, long long shots = -1,
                                     std::uint64_t seed = 0) {
    validate(spec);
    if (static_cast<int>(pattern.size()) != spec.L)
        throw std::invalid_argument("run_trotter_series: pattern length must equal L");
    const std::size_t n_points = series_point_count(dt, t_max);
    const Circuit step = trotter_first_order(spec, dt);
    const int site = central_site(spec.L);

    TimeSeries out;
    out.dt = dt;
    out.meta = {"trotter", spec, pattern, site, shots, seed, {}};
    out.values.reserve(n_points);
    VecC psi = kink_state(pattern);
    for (std::size_t k = 0; k < n_points; ++k) {
        if (k > 0) psi = apply_circuit(psi, step);
        out.values.push_back(shots > 0
                                 ? sample_expectation_z(psi, site, shots, derive_seed(seed, k))
                                 : expectation_z(psi, site));
    }
    return out;
}

// ===== plain-text serialization =====
// One gate per line, layers separated by `---`; `# qubits=L` pins the
// register size. DENSE2Q entries are row-major re/im pairs.

inline std::string circuit_to_text(const Circuit& c) {
    validate(c);
    std::string out = "# qubits=" + std::to_string(c.L) + "\n";
    for (std::size_t li = 0; li < c.layers.size(); ++li) {
        if (li > 0) out += "---\n";
        for (const Gate& g : c.layers[li]) {
            switch (g.kind) {
                case GateKind::RX:
                    out += "RX q" + std::to_string(g.q1) + " " + format_g17(g.angle) + "\n";
                    break;
                case GateKind::RZ:
                    out += "RZ q" + std::to_string(g.q1) + " " + format_g17(g.angle) + "\n";
                    break;
                case GateKind::RZZ:
                    out += "RZZ q" + std::to_string(g.q1) + " q" + std::to_string(g.q2) + " " +
                           format_g17(g.angle) + "\n";
                    break;
                case GateKind::DENSE2Q: {
                    out += "DENSE2Q q" + std::to_string(g.q1) + " q" + std::to_string(g.q2);
                    for (int r = 0; r < 4; ++r)
                        for (int col = 0; col < 4; ++col)
                            out += " " + format_g17(g.mat(r, col).real()) + " " +
                                   format_g17(g.mat(r, col).imag());
                    out += "\n";
                    break;
                }
            }
        }
    }
    return out;
}

namespace detail {

inline int parse_site(const std::string& tok) {
    if (tok.size() < 2 || tok[0] != 'q')
        throw std::invalid_argument("circuit_from_text: expected site token, got '" + tok + "'");
    return std::stoi(tok.substr(1));
}

}  // namespace detail

inline Circuit circuit_from_text(const std::string& text) {
    Circuit c;
    c.layers.emplace_back();
    int max_site = 1;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind("# qubits=", 0) == 0) {
            c.L = std::stoi(line.substr(9));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        if (line == "---") {
            c.layers.emplace_back();
            continue;
        }
        std::istringstream ls(line);
        std::string op;
        ls >> op;
        if (op == "RX" || op == "RZ") {
            std::string site;
            double angle;
            if (!(ls >> site >> angle))
                throw std::invalid_argument("circuit_from_text: malformed line '" + line + "'");
            const int q = detail::parse_site(site);
            c.layers.back().push_back(op == "RX" ? Gate::rx(q, angle) : Gate::rz(q, angle));
            max_site = std::max(max_site, q);
        } else if (op == "RZZ") {
            std::string s1, s2;
            double angle;
            if (!(ls >> s1 >> s2 >> angle))
                throw std::invalid_argument("circuit_from_text: malformed line '" + line + "'");
            const int q1 = detail::parse_site(s1), q2 = detail::parse_site(s2);
            c.layers.back().push_back(Gate::rzz(q1, q2, angle));
            max_site = std::max(max_site, q2);
        } else if (op == "DENSE2Q") {
            std::string s1, s2;
            if (!(ls >> s1 >> s2))
                throw std::invalid_argument("circuit_from_text: malformed line '" + line + "'");
            const int q1 = detail::parse_site(s1), q2 = detail::parse_site(s2);
            Mat4 u;
            for (int r = 0; r < 4; ++r)
                for (int col = 0; col < 4; ++col) {
                    double re, im;
                    if (!(ls >> re >> im))
                        throw std::invalid_argument(
                            "circuit_from_text: DENSE2Q needs 16 complex entries");
                    u(r, col) = cplx(re, im);
                }
            c.layers.back().push_back(Gate::dense2q(q1, q2, u));
            max_site = std::max(max_site, q2);
        } else {
            throw std::invalid_argument("circuit_from_text: unknown op '" + op + "'");
        }
    }
    if (c.L == 0) c.L = max_site;
    validate(c);
    return c;
}

}  // namespace e8sim
