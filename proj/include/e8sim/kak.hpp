#pragma once

// Canonical (Cartan) decomposition of two-qubit unitaries via the magic
// basis, and lowering of dense two-qubit blocks onto the native gate set
// {RZ, RX, RZZ}: U = phase * (a1 (x) b1) * exp(i sum_k c_k P_k(x)P_k) *
// (a2 (x) b2), with the interaction emitted as at most three RZZ factors.

#include "e8sim/circuit.hpp"

namespace e8sim {

struct KakResult {
    Mat2 a1, b1, a2, b2;  // outer/inner single-qubit factors
    double cx = 0, cy = 0, cz = 0;
    double phase = 0;  // global phase of the recomposition
};

namespace detail {

inline Mat4 magic_basis() {
    Mat4 q;
    const cplx i(0, 1), one(1, 0);
    q << one, 0, 0, i,
        0, i, one, 0,
        0, i, -one, 0,
        one, 0, 0, -i;
    return q / std::sqrt(2.0);
}

inline Mat2 pauli_x() { Mat2 m; m << 0, 1, 1, 0; return m; }
inline Mat2 pauli_y() { Mat2 m; m << 0, cplx(0, -1), cplx(0, 1), 0; return m; }
inline Mat2 pauli_z() { Mat2 m; m << 1, 0, 0, -1; return m; }

inline Mat4 kron2(const Mat2& a, const Mat2& b) {
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

// Diagonal of Q^dag (P (x) P) Q; the magic basis diagonalizes all three.
inline Eigen::Vector4d pauli_signature(const Mat2& p) {
    const Mat4 q = magic_basis();
    const Mat4 m = q.adjoint() * kron2(p, p) * q;
    Eigen::Vector4d sig;
    for (int j = 0; j < 4; ++j) sig(j) = m(j, j).real();
    if ((m - Mat4(sig.cast<cplx>().asDiagonal())).cwiseAbs().maxCoeff() > 1e-12)
        throw std::runtime_error("kak: magic-basis signature is not diagonal");
    return sig;
}

// Split an exact Kronecker product into unitary factors (rank-one
// rearrangement + normalization).
inline void split_kron(const Mat4& k, Mat2& a, Mat2& b) {
    Mat4 r;
    for (int ar = 0; ar < 2; ++ar)
        for (int ac = 0; ac < 2; ++ac)
            for (int br = 0; br < 2; ++br)
                for (int bc = 0; bc < 2; ++bc)
                    r(2 * ar + ac, 2 * br + bc) = k(2 * ar + br, 2 * ac + bc);
    Eigen::JacobiSVD<Mat4> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) > 1e-9)
        throw std::runtime_error("kak: matrix is not a Kronecker product");
    const double s = std::sqrt(svd.singularValues()(0));
    const Eigen::Vector4cd u = svd.matrixU().col(0) * s;
    const Eigen::Vector4cd v = svd.matrixV().col(0).conjugate() * s;
    Mat2 a_raw, b_raw;
    a_raw << u(0), u(1), u(2), u(3);
    b_raw << v(0), v(1), v(2), v(3);
    const double ca = std::sqrt((a_raw.adjoint() * a_raw).trace().real() / 2.0);
    a = a_raw / ca;
    b = b_raw * ca;
}

}  // namespace detail

// Cartan decomposition of a 4x4 unitary; the recomposition reproduces the
// input to numerical precision (including the global phase).
inline KakResult canonical_decompose(const Mat4& u) {
    if (((u.adjoint() * u) - Mat4::Identity()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("canonical_decompose: input is not unitary");
    const Mat4 q = detail::magic_basis();

    const double det_phase = std::arg(u.determinant());
    const Mat4 u_su = u * std::polar(1.0, -det_phase / 4.0);
    const Mat4 m = q.adjoint() * u_su * q;
    const Mat4 s = m.transpose() * m;

    // Simultaneously diagonalize Re(s) and Im(s) with one real orthogonal
    // transform; scan mixing angles until the combination is non-degenerate.
    const Eigen::Matrix4d sr = s.real(), si = s.imag();
    Eigen::Matrix4d o2 = Eigen::Matrix4d::Identity();
    bool ok = false;
    for (double w = 0.1234; w < 40.0 && !ok; w += 1.017) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(std::cos(w) * sr + std::sin(w) * si);
        const Eigen::Matrix4d cand = es.eigenvectors();
        const Mat4 check = cand.transpose().cast<cplx>() * s * cand.cast<cplx>();
        double off = 0.0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (i != j) off = std::max(off, std::abs(check(i, j)));
        if (off < 1e-11) {
            o2 = cand;
            ok = true;
        }
    }
    if (!ok) throw std::runtime_error("kak: failed to diagonalize the Cartan form");
    if (o2.determinant() < 0) o2.col(0) *= -1.0;

    // Half eigenphases of s give the interaction content.
    const Mat4 diag = o2.transpose().cast<cplx>() * s * o2.cast<cplx>();
    Eigen::Vector4d theta;
    for (int j = 0; j < 4; ++j) theta(j) = std::arg(diag(j, j)) / 2.0;
    // det(D) must be +1 so that the left factor lands in SO(4).
    double theta_sum = theta.sum();
    if (std::abs(std::remainder(theta_sum, 2 * pi)) > pi / 2) theta(0) -= pi;

    Eigen::Vector4cd d;
    for (int j = 0; j < 4; ++j) d(j) = std::polar(1.0, theta(j));
    const Mat4 o1c = m * o2.cast<cplx>() * Mat4(d.asDiagonal()).adjoint();
    if (o1c.imag().cwiseAbs().maxCoeff() > 1e-9)
        throw std::runtime_error("kak: left factor failed to be real orthogonal");
    const Eigen::Matrix4d o1 = o1c.real();

    // theta_j = c0 + cx Sx_j + cy Sy_j + cz Sz_j; the signature columns are
    // orthogonal with squared norm 4.
    const Eigen::Vector4d sx = detail::pauli_signature(detail::pauli_x());
    const Eigen::Vector4d sy = detail::pauli_signature(detail::pauli_y());
    const Eigen::Vector4d sz = detail::pauli_signature(detail::pauli_z());
    const double c0 = theta.sum() / 4.0;

    KakResult res;
    res.cx = sx.dot(theta) / 4.0;
    res.cy = sy.dot(theta) / 4.0;
    res.cz = sz.dot(theta) / 4.0;
    res.phase = det_phase / 4.0 + c0;

    const Mat4 k1 = q * o1.cast<cplx>() * q.adjoint();
    const Mat4 k2 = q * o2.transpose().cast<cplx>() * q.adjoint();
    detail::split_kron(k1, res.a1, res.b1);
    detail::split_kron(k2, res.a2, res.b2);
    return res;
}

// exp(i(cx XX + cy YY + cz ZZ)) including the c0 part folded into phase.
inline Mat4 kak_interaction(const KakResult& r) {
    const Mat4 xx = detail::kron2(detail::pauli_x(), detail::pauli_x());
    const Mat4 yy = detail::kron2(detail::pauli_y(), detail::pauli_y());
    const Mat4 zz = detail::kron2(detail::pauli_z(), detail::pauli_z());
    // The three terms commute; exponentiate factor by factor.
    Mat4 out = Mat4::Identity();
    const std::array<std::pair<const Mat4*, double>, 3> terms = {
        std::pair<const Mat4*, double>{&xx, r.cx}, {&yy, r.cy}, {&zz, r.cz}};
    for (const auto& [mat, c] : terms) {
        Eigen::SelfAdjointEigenSolver<Mat4> es(*mat);
        Mat4 f = Mat4::Zero();
        for (int j = 0; j < 4; ++j) f(j, j) = std::polar(1.0, c * es.eigenvalues()(j));
        out = es.eigenvectors() * f * es.eigenvectors().adjoint() * out;
    }
    return out;
}

inline Mat4 kak_recompose(const KakResult& r) {
    return std::polar(1.0, r.phase) * detail::kron2(r.a1, r.b1) * kak_interaction(r) *
           detail::kron2(r.a2, r.b2);
}

// ===== lowering to native gates =====

// v = exp(i delta) RZ(alpha) RX(beta) RZ(gamma); returns {alpha, beta, gamma}.
inline std::array<double, 3> euler_zxz(const Mat2& v) {
    if (((v.adjoint() * v) - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("euler_zxz: input is not unitary");
    const double delta = std::arg(v.determinant()) / 2.0;
    const Mat2 w = v * std::polar(1.0, -delta);
    const double beta = 2.0 * std::atan2(std::abs(w(0, 1)), std::abs(w(0, 0)));
    double alpha = 0.0, gamma = 0.0;
    if (std::abs(w(0, 0)) > 1e-9 && std::abs(w(0, 1)) > 1e-9) {
        const double sum = -2.0 * std::arg(w(0, 0));   // alpha + gamma
        const double diff = -2.0 * std::arg(w(0, 1)) - pi;  // alpha - gamma
        alpha = (sum + diff) / 2.0;
        gamma = (sum - diff) / 2.0;
    } else if (std::abs(w(0, 0)) > 1e-9) {
        alpha = -2.0 * std::arg(w(0, 0));
    } else {
        alpha = -2.0 * std::arg(w(0, 1)) - pi;
    }
    return {alpha, beta, gamma};
}

namespace detail {

// Append v on sites (q1, q2) as native Euler layers (global phase dropped).
inline void emit_1q_pair(std::vector<std::vector<Gate>>& layers, int q1, int q2, const Mat2& va,
                         const Mat2& vb) {
    const auto ea = euler_zxz(va), eb = euler_zxz(vb);
    layers.push_back({Gate::rz(q1, ea[2]), Gate::rz(q2, eb[2])});
    layers.push_back({Gate::rx(q1, ea[1]), Gate::rx(q2, eb[1])});
    layers.push_back({Gate::rz(q1, ea[0]), Gate::rz(q2, eb[0])});
}

}  // namespace detail

// Native realization of a dense two-qubit gate on adjacent sites: Euler
// single-qubit layers interleaved with up to three RZZ factors, equal to
// the input up to a global phase.
inline std::vector<std::vector<Gate>> decompose_to_native(const Gate& g) {
    if (g.kind != GateKind::DENSE2Q)
        throw std::invalid_argument("decompose_to_native: expected a DENSE2Q gate");
    const KakResult r = canonical_decompose(g.mat);

    // Conjugators V with V Z V^dag = P: X uses the Hadamard, Y uses S*H.
    Mat2 h;
    h << 1, 1, 1, -1;
    h /= std::sqrt(2.0);
    Mat2 sh = Mat2::Zero();
    sh(0, 0) = 1;
    sh(1, 1) = cplx(0, 1);
    sh = sh * h;

    std::vector<std::vector<Gate>> layers;
    Mat2 p1 = r.a2, p2 = r.b2;  // pending single-qubit factors, applied first
    const Mat2 id2 = Mat2::Identity();
    const std::array<std::pair<Mat2, double>, 3> factors = {
        std::pair<Mat2, double>{id2, r.cz}, {sh, r.cy}, {h, r.cx}};
    for (const auto& [v, c] : factors) {
        if (std::abs(c) < 1e-12) continue;
        p1 = Mat2(v.adjoint() * p1);
        p2 = Mat2(v.adjoint() * p2);
        detail::emit_1q_pair(layers, g.q1, g.q2, p1, p2);
        layers.push_back({Gate::rzz(g.q1, g.q2, -2.0 * c)});
        p1 = v;
        p2 = v;
    }
    p1 = Mat2(r.a1 * p1);
    p2 = Mat2(r.b1 * p2);
    detail::emit_1q_pair(layers, g.q1, g.q2, p1, p2);
    return layers;
}

// Expand every DENSE2Q in the circuit; native gates pass through.
inline Circuit decompose_circuit_to_native(const Circuit& c) {
    validate(c);
    Circuit out;
    out.L = c.L;
    for (const auto& layer : c.layers) {
        std::vector<Gate> natives;
        for (const Gate& g : layer)
            if (g.kind != GateKind::DENSE2Q) natives.push_back(g);
        if (!natives.empty() || layer.empty()) out.layers.push_back(natives);
        for (const Gate& g : layer)
            if (g.kind == GateKind::DENSE2Q)
                for (auto& sub : decompose_to_native(g)) out.layers.push_back(std::move(sub));
    }
    return out;
}

}  // namespace e8sim
