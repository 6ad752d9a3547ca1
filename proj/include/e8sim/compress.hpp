#pragma once

// Brickwall circuit compression of the exact propagator: dense and MPO
// target operators, Hilbert-Schmidt cost, per-gate environments, Riemannian
// gradient descent on U(4)^n with a polar retraction, the layer schedule,
// and the compressed time-series driver.

#include <functional>

#include "e8sim/circuit.hpp"

namespace e8sim {

// ===== brickwall ansatz =====

struct BrickwallAnsatz {
    int L = 0;
    bool first_layer_odd = true;
    std::vector<std::vector<Mat4>> layer_gates;  // [layer][bond slot]

    int n_layers() const { return static_cast<int>(layer_gates.size()); }
};

// Left sites of the bonds a layer acts on (1-based).
inline std::vector<int> layer_bonds(int L, int layer, bool first_layer_odd) {
    const bool odd = (layer % 2 == 0) == first_layer_odd;
    std::vector<int> bonds;
    for (int i = odd ? 1 : 2; i + 1 <= L; i += 2) bonds.push_back(i);
    return bonds;
}

inline void validate(const BrickwallAnsatz& a) {
    if (a.L < 2) throw std::invalid_argument("BrickwallAnsatz: need at least two sites");
    for (int l = 0; l < a.n_layers(); ++l) {
        const auto bonds = layer_bonds(a.L, l, a.first_layer_odd);
        if (a.layer_gates[l].size() != bonds.size())
            throw std::invalid_argument("BrickwallAnsatz: wrong gate count in layer");
        for (const Mat4& g : a.layer_gates[l])
            if (((g.adjoint() * g) - Mat4::Identity()).cwiseAbs().maxCoeff() > 1e-10)
                throw std::invalid_argument("BrickwallAnsatz: non-unitary gate");
    }
}

inline BrickwallAnsatz identity_ansatz(int L, int n_layers, bool first_layer_odd = true) {
    BrickwallAnsatz a;
    a.L = L;
    a.first_layer_odd = first_layer_odd;
    a.layer_gates.resize(n_layers);
    for (int l = 0; l < n_layers; ++l)
        a.layer_gates[l].assign(layer_bonds(L, l, first_layer_odd).size(), Mat4::Identity());
    return a;
}

inline Circuit to_circuit(const BrickwallAnsatz& a) {
    validate(a);
    Circuit c;
    c.L = a.L;
    for (int l = 0; l < a.n_layers(); ++l) {
        const auto bonds = layer_bonds(a.L, l, a.first_layer_odd);
        std::vector<Gate> layer;
        for (std::size_t b = 0; b < bonds.size(); ++b)
            layer.push_back(Gate::dense2q(bonds[b], bonds[b] + 1, a.layer_gates[l][b]));
        c.layers.push_back(std::move(layer));
    }
    return c;
}

// ===== bond-split Strang initializer =====

namespace detail {

// h_bond = -(Z Z + h_x (wl X1 + wr X2) + h_z (wl Z1 + wr Z2)); interior
// sites carry weight 1/2 so the bond terms sum to the full Hamiltonian.
inline Eigen::Matrix4cd bond_hamiltonian(const ModelSpec& spec, int left_site) {
    const double wl = (left_site == 1) ? 1.0 : 0.5;
    const double wr = (left_site + 1 == spec.L) ? 1.0 : 0.5;
    Mat4 h = Mat4::Zero();
    const double z[2] = {1.0, -1.0};
    for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2)
            h(2 * b1 + b2, 2 * b1 + b2) =
                -(z[b1] * z[b2] + spec.h_z * (wl * z[b1] + wr * z[b2]));
    for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2) {
            h((1 - b1) * 2 + b2, 2 * b1 + b2) += -spec.h_x * wl;
            h(2 * b1 + (1 - b2), 2 * b1 + b2) += -spec.h_x * wr;
        }
    return h;
}

inline Mat4 bond_gate(const ModelSpec& spec, int left_site, double tau) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(bond_hamiltonian(spec, left_site));
    Mat4 f = Mat4::Zero();
    for (int j = 0; j < 4; ++j) f(j, j) = std::polar(1.0, -tau * es.eigenvalues()(j));
    return es.eigenvectors() * f * es.eigenvectors().adjoint();
}

}  // namespace detail

// Second-order bond-split circuit with 2k+1 layers: half-step odd layers
// bracket k alternating full steps. Serves as the optimizer's starting
// point.
inline BrickwallAnsatz strang_ansatz(const ModelSpec& spec, double t, int n_layers) {
    validate(spec);
    if (n_layers < 1) throw std::invalid_argument("strang_ansatz: need at least one layer");
    if (t == 0.0) return identity_ansatz(spec.L, n_layers);
    if (n_layers % 2 == 0) {  // odd-depth splitting plus one identity layer
        BrickwallAnsatz a = strang_ansatz(spec, t, n_layers - 1);
        a.layer_gates.push_back(std::vector<Mat4>(
            layer_bonds(spec.L, n_layers - 1, a.first_layer_odd).size(), Mat4::Identity()));
        return a;
    }
    if (n_layers < 3)
        throw std::invalid_argument("strang_ansatz: need at least three layers for t > 0");
    const int k = (n_layers - 1) / 2;
    const double dt_s = t / static_cast<double>(k);

    BrickwallAnsatz a = identity_ansatz(spec.L, n_layers);
    for (int l = 0; l < n_layers; ++l) {
        const bool half = (l == 0 || l == n_layers - 1);
        const double tau = half ? dt_s / 2.0 : dt_s;
        const auto bonds = layer_bonds(spec.L, l, a.first_layer_odd);
        for (std::size_t b = 0; b < bonds.size(); ++b)
            a.layer_gates[l][b] = detail::bond_gate(spec, bonds[b], tau);
    }
    return a;
}

// ===== matrix product operators =====

struct MpoTensor {
    int bl = 1, br = 1;             // left/right bond dimensions
    std::vector<cplx> data;         // [((l*2+po)*2+pi)*br + r]

    cplx& at(int l, int po, int pi, int r) { return data[((l * 2 + po) * 2 + pi) * br + r]; }
    cplx at(int l, int po, int pi, int r) const {
        return data[((l * 2 + po) * 2 + pi) * br + r];
    }
};

struct MPOperator {
    int L = 0;
    std::vector<MpoTensor> sites;
    double trunc_error = 0.0;  // accumulated relative Frobenius truncation

    int max_bond() const {
        int m = 1;
        for (const auto& s : sites) m = std::max({m, s.bl, s.br});
        return m;
    }
};

inline MPOperator mpo_identity(int L) {
    if (L < 2) throw std::invalid_argument("mpo_identity: need at least two sites");
    MPOperator mpo;
    mpo.L = L;
    mpo.sites.resize(L);
    for (auto& s : mpo.sites) {
        s.bl = s.br = 1;
        s.data.assign(4, 0.0);
        s.at(0, 0, 0, 0) = 1.0;
        s.at(0, 1, 1, 0) = 1.0;
    }
    return mpo;
}

namespace detail {

inline constexpr int mpo_bond_cap = 64;

// Split a two-site block [(l,po1,pi1) x (po2,pi2,r)] by SVD with relative
// truncation; throws if the hard cap would discard weight above tol.
inline void mpo_split(MPOperator& mpo, int s, const MatC& theta, int bl, int br, double tol) {
    Eigen::BDCSVD<MatC> svd(theta, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    int keep = 0;
    double total2 = 0.0;
    for (Eigen::Index j = 0; j < sv.size(); ++j) total2 += sv(j) * sv(j);
    for (Eigen::Index j = 0; j < sv.size(); ++j)
        if (sv(j) > tol * smax) ++keep;
    keep = std::max(keep, 1);
    if (keep > mpo_bond_cap) {
        if (sv(mpo_bond_cap) > tol * smax)
            throw std::runtime_error("mpo: bond cap would discard weight above tolerance");
        keep = mpo_bond_cap;
    }
    double drop2 = 0.0;
    for (Eigen::Index j = keep; j < sv.size(); ++j) drop2 += sv(j) * sv(j);
    if (total2 > 0.0) mpo.trunc_error += std::sqrt(drop2 / total2);

    MpoTensor& a = mpo.sites[s];
    MpoTensor& b = mpo.sites[s + 1];
    a.bl = bl;
    a.br = keep;
    a.data.assign(static_cast<std::size_t>(bl) * 4 * keep, 0.0);
    for (int l = 0; l < bl; ++l)
        for (int po = 0; po < 2; ++po)
            for (int pi = 0; pi < 2; ++pi)
                for (int r = 0; r < keep; ++r)
                    a.at(l, po, pi, r) = svd.matrixU()((l * 2 + po) * 2 + pi, r);
    b.bl = keep;
    b.br = br;
    b.data.assign(static_cast<std::size_t>(keep) * 4 * br, 0.0);
    for (int l = 0; l < keep; ++l)
        for (int po = 0; po < 2; ++po)
            for (int pi = 0; pi < 2; ++pi)
                for (int r = 0; r < br; ++r)
                    b.at(l, po, pi, r) =
                        sv(l) * std::conj(svd.matrixV()((po * 2 + pi) * br + r, l));
}

}  // namespace detail

// Left-multiply the operator by a two-qubit gate on (s, s+1), 1-based.
inline void mpo_apply_2q(MPOperator& mpo, int s, const Mat4& g, double tol) {
    if (s < 1 || s + 1 > mpo.L) throw std::invalid_argument("mpo_apply_2q: bond out of range");
    const MpoTensor a = mpo.sites[s - 1];
    const MpoTensor b = mpo.sites[s];
    const int bl = a.bl, mid = a.br, br = b.br;

    // theta[(l,po1,pi1), (po2,pi2,r)] = sum_q g[(po1,po2),(q1,q2)] A B
    MatC theta = MatC::Zero(bl * 4, 4 * br);
    for (int l = 0; l < bl; ++l)
        for (int r = 0; r < br; ++r)
            for (int pi1 = 0; pi1 < 2; ++pi1)
                for (int pi2 = 0; pi2 < 2; ++pi2) {
                    cplx ab[4];  // indexed by (q1, q2)
                    for (int q1 = 0; q1 < 2; ++q1)
                        for (int q2 = 0; q2 < 2; ++q2) {
                            cplx acc = 0.0;
                            for (int m = 0; m < mid; ++m)
                                acc += a.at(l, q1, pi1, m) * b.at(m, q2, pi2, r);
                            ab[q1 * 2 + q2] = acc;
                        }
                    for (int po1 = 0; po1 < 2; ++po1)
                        for (int po2 = 0; po2 < 2; ++po2) {
                            cplx acc = 0.0;
                            for (int q = 0; q < 4; ++q) acc += g(po1 * 2 + po2, q) * ab[q];
                            theta((l * 2 + po1) * 2 + pi1, (po2 * 2 + pi2) * br + r) = acc;
                        }
                }
    detail::mpo_split(mpo, s - 1, theta, bl, br, tol);
}

inline void mpo_apply_1q(MPOperator& mpo, int s, const Mat2& g) {
    if (s < 1 || s > mpo.L) throw std::invalid_argument("mpo_apply_1q: site out of range");
    MpoTensor& a = mpo.sites[s - 1];
    MpoTensor out = a;
    for (int l = 0; l < a.bl; ++l)
        for (int pi = 0; pi < 2; ++pi)
            for (int r = 0; r < a.br; ++r)
                for (int po = 0; po < 2; ++po)
                    out.at(l, po, pi, r) =
                        g(po, 0) * a.at(l, 0, pi, r) + g(po, 1) * a.at(l, 1, pi, r);
    a = std::move(out);
}

// Re-truncate every bond with identity two-site splits (one full sweep).
inline void mpo_compress(MPOperator& mpo, double tol) {
    for (int s = 1; s + 1 <= mpo.L; ++s) mpo_apply_2q(mpo, s, Mat4::Identity(), tol);
    for (int s = mpo.L - 1; s >= 1; --s) mpo_apply_2q(mpo, s, Mat4::Identity(), tol);
}

// Operator product A*B via zip-up contraction with on-the-fly truncation.
inline MPOperator mpo_product(const MPOperator& a, const MPOperator& b, double tol) {
    if (a.L != b.L) throw std::invalid_argument("mpo_product: length mismatch");
    MPOperator c;
    c.L = a.L;
    c.trunc_error = a.trunc_error + b.trunc_error;
    c.sites.resize(a.L);
    for (int s = 0; s < a.L; ++s) {
        const MpoTensor& ta = a.sites[s];
        const MpoTensor& tb = b.sites[s];
        MpoTensor& tc = c.sites[s];
        tc.bl = ta.bl * tb.bl;
        tc.br = ta.br * tb.br;
        tc.data.assign(static_cast<std::size_t>(tc.bl) * 4 * tc.br, 0.0);
        for (int la = 0; la < ta.bl; ++la)
            for (int lb = 0; lb < tb.bl; ++lb)
                for (int ra = 0; ra < ta.br; ++ra)
                    for (int rb = 0; rb < tb.br; ++rb)
                        for (int po = 0; po < 2; ++po)
                            for (int pi = 0; pi < 2; ++pi) {
                                cplx acc = 0.0;
                                for (int q = 0; q < 2; ++q)
                                    acc += ta.at(la, po, q, ra) * tb.at(lb, q, pi, rb);
                                tc.at(la * tb.bl + lb, po, pi, ra * tb.br + rb) = acc;
                            }
    }
    mpo_compress(c, tol);
    return c;
}

inline MatC mpo_to_matrix(const MPOperator& mpo) {
    if (mpo.L > 12) throw std::invalid_argument("mpo_to_matrix: dense form capped at L = 12");
    // running[(out,in), r]
    MatC running = MatC::Ones(1, 1);
    std::size_t block = 1;
    for (int s = 0; s < mpo.L; ++s) {
        const MpoTensor& t = mpo.sites[s];
        MatC next = MatC::Zero(block * block * 4, t.br);
        for (std::size_t oi = 0; oi < block * block; ++oi) {
            const std::size_t out = oi / block, in = oi % block;
            for (int po = 0; po < 2; ++po)
                for (int pi = 0; pi < 2; ++pi) {
                    const std::size_t row =
                        ((out * 2 + po) * block * 2) + (in * 2 + pi);
                    for (int r = 0; r < t.br; ++r) {
                        cplx acc = 0.0;
                        for (int l = 0; l < t.bl; ++l)
                            acc += running(oi, l) * t.at(l, po, pi, r);
                        next(row, r) += acc;
                    }
                }
        }
        running = std::move(next);
        block *= 2;
    }
    MatC out(block, block);
    for (std::size_t o = 0; o < block; ++o)
        for (std::size_t i = 0; i < block; ++i) out(o, i) = running(o * block + i, 0);
    return out;
}

// Tr(A^dag B) by transfer contraction; never forms dense matrices.
inline cplx mpo_trace_overlap(const MPOperator& a, const MPOperator& b) {
    if (a.L != b.L) throw std::invalid_argument("mpo_trace_overlap: length mismatch");
    MatC env = MatC::Ones(1, 1);
    for (int s = 0; s < a.L; ++s) {
        const MpoTensor& ta = a.sites[s];
        const MpoTensor& tb = b.sites[s];
        MatC next = MatC::Zero(ta.br, tb.br);
        for (int po = 0; po < 2; ++po)
            for (int pi = 0; pi < 2; ++pi) {
                using StridedMap =
                    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>,
                               0, Eigen::OuterStride<>>;
                StridedMap ma(ta.data.data() + (po * 2 + pi) * ta.br, ta.bl, ta.br,
                              Eigen::OuterStride<>(4 * ta.br));
                StridedMap mb(tb.data.data() + (po * 2 + pi) * tb.br, tb.bl, tb.br,
                              Eigen::OuterStride<>(4 * tb.br));
                next += ma.conjugate().transpose() * env * mb;
            }
        env = std::move(next);
    }
    return env(0, 0);
}

// ===== target operator =====

struct TargetOperator {
    std::string mode;  // "dense" or "mpo"
    double t = 0.0;
    MatC dense;
    MPOperator mpo;
};

inline MatC propagator_dense(const EigenSystem& eig, double t) {
    MatC vd = eig.eigenvectors;
    for (Eigen::Index j = 0; j < vd.cols(); ++j)
        vd.col(j) *= std::polar(1.0, -eig.eigenvalues(j) * t);
    return vd * eig.eigenvectors.adjoint();
}

// exp(-i H t): dense via full diagonalization, or an MPO built from a fine
// bond-split Strang step amplified by repeated squaring.
inline TargetOperator target_operator(const ModelSpec& spec, double t, const std::string& mode,
                                      double tol = 0.0) {
    validate(spec);
    TargetOperator target;
    target.mode = mode;
    target.t = t;
    if (mode == "dense") {
        if (spec.L > 12)
            throw std::invalid_argument("target_operator: dense mode capped at L = 12");
        target.dense = propagator_dense(diagonalize(build_hamiltonian(spec)), t);
    } else if (mode == "mpo") {
        if (!(tol > 0.0))
            throw std::invalid_argument("target_operator: mpo mode needs a positive tolerance");
        if (t == 0.0) {
            target.mpo = mpo_identity(spec.L);
            return target;
        }
        int k = 1;
        while (std::abs(t) / std::pow(2.0, k) > 1e-5 && k < 26) ++k;
        const double dt_f = t / std::pow(2.0, k);
        MPOperator step = mpo_identity(spec.L);
        // Strang: odd half, even full, odd half (bond gates commute within
        // a parity class).
        for (int s = 1; s + 1 <= spec.L; s += 2)
            mpo_apply_2q(step, s, detail::bond_gate(spec, s, dt_f / 2.0), tol);
        for (int s = 2; s + 1 <= spec.L; s += 2)
            mpo_apply_2q(step, s, detail::bond_gate(spec, s, dt_f), tol);
        for (int s = 1; s + 1 <= spec.L; s += 2)
            mpo_apply_2q(step, s, detail::bond_gate(spec, s, dt_f / 2.0), tol);
        for (int j = 0; j < k; ++j) step = mpo_product(step, step, tol);
        target.mpo = std::move(step);
    } else {
        throw std::invalid_argument("target_operator: mode must be 'dense' or 'mpo'");
    }
    return target;
}

// ===== cost =====

inline double cost_from_trace(cplx tr, std::size_t d) {
    return 1.0 - tr.real() / static_cast<double>(d);
}

inline MatC ansatz_dense(const BrickwallAnsatz& a) {
    return circuit_to_matrix(to_circuit(a));
}

inline double cost_dense(const MatC& target, const BrickwallAnsatz& a) {
    validate(a);
    const std::size_t d = dim_for(a.L);
    if (target.rows() != static_cast<Eigen::Index>(d) || target.cols() != target.rows())
        throw std::invalid_argument("cost_dense: dimension mismatch");
    MatC w = MatC::Identity(d, d);
    const Circuit c = to_circuit(a);
    for (const auto& layer : c.layers)
        for (const Gate& g : layer) apply_gate_columns(w, a.L, g);
    const cplx tr = (target.conjugate().cwiseProduct(w)).sum();
    return cost_from_trace(tr, d);
}

inline double cost_mpo(const MPOperator& target, const BrickwallAnsatz& a, double tol) {
    validate(a);
    if (target.L != a.L) throw std::invalid_argument("cost_mpo: length mismatch");
    MPOperator w = mpo_identity(a.L);
    for (int l = 0; l < a.n_layers(); ++l) {
        const auto bonds = layer_bonds(a.L, l, a.first_layer_odd);
        for (std::size_t b = 0; b < bonds.size(); ++b)
            mpo_apply_2q(w, bonds[b], a.layer_gates[l][b], tol);
    }
    return cost_from_trace(mpo_trace_overlap(target, w), dim_for(a.L));
}

// C = 1 - Re Tr(U^dag W) / d for either representation.
inline double cost(const TargetOperator& target, const BrickwallAnsatz& a, double tol = 1e-12) {
    if (target.mode == "dense") return cost_dense(target.dense, a);
    if (target.mode == "mpo") return cost_mpo(target.mpo, a, tol);
    throw std::invalid_argument("cost: unknown target mode");
}

// ===== environments =====
// E is defined by Tr(U^dag W) = Tr(E^dag G) as G varies; the sweep keeps
// the suffix product transposed so every kernel touches contiguous columns.

namespace detail {

// Accumulate E^dag for the gate at `site` given prefix T and Ct = C^T.
inline Mat4 environment_adjoint(const MatC& t_mat, const MatC& ct, int L, int site) {
    const std::size_t d = dim_for(L);
    const std::size_t lo = std::size_t{1} << (L - site - 1);
    const std::size_t hi = lo << 1;
    Mat4 e_dag = Mat4::Zero();
    for (std::size_t y = 0; y < d; ++y) {
        const cplx* tc = t_mat.data() + y * d;
        const cplx* cc = ct.data() + y * d;
        for (std::size_t g = 0; g < d; g += 2 * hi)
            for (std::size_t h = g; h < g + hi; h += 2 * lo)
                for (std::size_t base = h; base < h + lo; ++base) {
                    const std::size_t ix[4] = {base, base + lo, base + hi, base + hi + lo};
                    for (int p = 0; p < 4; ++p)
                        for (int q = 0; q < 4; ++q) e_dag(p, q) += tc[ix[p]] * cc[ix[q]];
                }
    }
    return e_dag;
}

}  // namespace detail

// Environments of every gate, plus the current trace (any gate contracts
// back to it). Layout mirrors layer_gates.
inline std::vector<std::vector<Mat4>> environments_all(const MatC& target,
                                                       const BrickwallAnsatz& a, cplx* trace_out) {
    validate(a);
    if (a.L > 10)
        throw std::invalid_argument("environments_all: dense sweep capped at L = 10");
    const std::size_t d = dim_for(a.L);
    if (target.rows() != static_cast<Eigen::Index>(d) || target.cols() != target.rows())
        throw std::invalid_argument("environments_all: dimension mismatch");
    const int m = a.n_layers();

    // Prefix products T[l] = L_{l-1} ... L_0 (T[0] = I).
    std::vector<MatC> prefix(m);
    MatC t_run = MatC::Identity(d, d);
    for (int l = 0; l < m; ++l) {
        prefix[l] = t_run;
        const auto bonds = layer_bonds(a.L, l, a.first_layer_odd);
        for (std::size_t b = 0; b < bonds.size(); ++b)
            apply_2q_matrix_columns(t_run, a.L, bonds[b], a.layer_gates[l][b]);
    }

    std::vector<std::vector<Mat4>> envs(m);
    MatC bt = target.adjoint().transpose().eval();  // (U^dag)^T, suffix accumulator
    cplx trace = 0.0;
    for (int l = m - 1; l >= 0; --l) {
        const auto bonds = layer_bonds(a.L, l, a.first_layer_odd);
        envs[l].resize(bonds.size());
        // Fold the whole layer in (transposed local matrices).
        MatC ct_full = bt;
        for (std::size_t b = 0; b < bonds.size(); ++b)
            apply_2q_matrix_columns(ct_full, a.L, bonds[b],
                                    a.layer_gates[l][b].transpose().eval());
        for (std::size_t b = 0; b < bonds.size(); ++b) {
            // Un-apply this gate: right-multiplication by emb(G)^dag
            // transposes to a conj(G) kernel.
            MatC ct_g = ct_full;
            apply_2q_matrix_columns(ct_g, a.L, bonds[b],
                                    a.layer_gates[l][b].conjugate().eval());
            const Mat4 e_dag = detail::environment_adjoint(prefix[l], ct_g, a.L, bonds[b]);
            envs[l][b] = e_dag.adjoint();
            if (l == 0 && b == 0)
                trace = (e_dag * a.layer_gates[l][b]).trace();
        }
        bt = std::move(ct_full);
    }
    if (m == 0) trace = bt.conjugate().cwiseProduct(MatC::Identity(d, d)).sum();
    if (trace_out) *trace_out = trace;
    return envs;
}

// Single-gate convenience wrapper.
inline Mat4 gate_environment(const MatC& target, const BrickwallAnsatz& a, int layer, int slot) {
    if (layer < 0 || layer >= a.n_layers())
        throw std::invalid_argument("gate_environment: layer out of range");
    if (slot < 0 || slot >= static_cast<int>(a.layer_gates[layer].size()))
        throw std::invalid_argument("gate_environment: gate slot out of range");
    return environments_all(target, a, nullptr)[layer][slot];
}

// ===== Riemannian machinery =====

// Projection of the Euclidean gradient D = -(1/d) E onto the tangent space
// at G: grad = G skew(G^dag D).
inline Mat4 riemannian_gradient(const Mat4& g, const Mat4& env, std::size_t d) {
    const Mat4 euclid = -env / static_cast<double>(d);
    const Mat4 gd = g.adjoint() * euclid;
    return g * ((gd - gd.adjoint()) / 2.0);
}

// Polar retraction of G + step * xi back onto U(4).
inline Mat4 retract(const Mat4& g, const Mat4& xi, double step) {
    const Mat4 tangency = g.adjoint() * xi;
    if ((tangency + tangency.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + xi.norm()))
        throw std::invalid_argument("retract: direction is not in the tangent space");
    const Mat4 y = g + step * xi;
    Eigen::JacobiSVD<Mat4> svd(y, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

// ===== optimizer =====

enum class OptStatus { converged, max_iters, line_search_failure };

struct TraceRow {
    int iter = 0;
    double cost = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct OptimizeOptions {
    int max_iters = 500;
    double grad_tol = 1e-6;
    double cost_tol = 0.0;  // 0: disabled
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    int max_backtracks = 40;
    double step_init = 1.0;
    double step_grow = 1.3;
    double step_max = 4.0;
};

struct OptimizeResult {
    BrickwallAnsatz ansatz;
    std::vector<TraceRow> trace;
    OptStatus status = OptStatus::max_iters;
    double final_cost = 0.0;
};

// Batch gradient descent with a global Armijo backtracking line search;
// the cost trace is strictly non-increasing by construction.
inline OptimizeResult optimize(
    const MatC& target, const BrickwallAnsatz& init, const OptimizeOptions& opts = {},
    const std::function<void(int, const BrickwallAnsatz&)>& observer = nullptr) {
    validate(init);
    const std::size_t d = dim_for(init.L);
    OptimizeResult res;
    res.ansatz = init;
    double step = opts.step_init;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        cplx trace = 0.0;
        const auto envs = environments_all(target, res.ansatz, &trace);
        const double cost_now = cost_from_trace(trace, d);
        std::vector<std::vector<Mat4>> grads(envs.size());
        double g2 = 0.0;
        for (std::size_t l = 0; l < envs.size(); ++l) {
            grads[l].resize(envs[l].size());
            for (std::size_t b = 0; b < envs[l].size(); ++b) {
                grads[l][b] = riemannian_gradient(res.ansatz.layer_gates[l][b], envs[l][b], d);
                g2 += grads[l][b].squaredNorm();
            }
        }
        if (iter == 0) res.trace.push_back({0, cost_now, std::sqrt(g2), 0.0});
        if (std::sqrt(g2) <= opts.grad_tol || (opts.cost_tol > 0.0 && cost_now <= opts.cost_tol)) {
            res.status = OptStatus::converged;
            res.final_cost = cost_now;
            return res;
        }

        double alpha = std::min(step * opts.step_grow, opts.step_max);
        bool accepted = false;
        for (int bt = 0; bt <= opts.max_backtracks && !accepted; ++bt) {
            BrickwallAnsatz trial = res.ansatz;
            for (std::size_t l = 0; l < grads.size(); ++l)
                for (std::size_t b = 0; b < grads[l].size(); ++b)
                    trial.layer_gates[l][b] =
                        retract(res.ansatz.layer_gates[l][b], -grads[l][b], alpha);
            const double cost_try = cost_dense(target, trial);
            if (cost_try <= cost_now - opts.armijo_c1 * alpha * g2) {
                for (auto& layer : trial.layer_gates)
                    for (Mat4& g : layer)
                        if (((g.adjoint() * g) - Mat4::Identity()).cwiseAbs().maxCoeff() > 1e-12)
                            throw std::runtime_error("optimize: retraction lost unitarity");
                res.ansatz = std::move(trial);
                res.trace.push_back({iter + 1, cost_try, std::sqrt(g2), alpha});
                res.final_cost = cost_try;
                step = alpha;
                accepted = true;
                if (observer) observer(iter + 1, res.ansatz);
            } else {
                alpha *= opts.backtrack_factor;
            }
        }
        if (!accepted) {
            res.status = OptStatus::line_search_failure;
            res.final_cost = cost_now;
            return res;
        }
    }
    res.status = OptStatus::max_iters;
    if (res.trace.empty()) res.final_cost = cost_dense(target, res.ansatz);
    return res;
}

inline void trace_to_csv(const std::vector<TraceRow>& trace, std::ostream& os) {
    os << "iter,cost,grad_norm,step\n";
    for (const TraceRow& row : trace)
        os << row.iter << ',' << format_g17(row.cost) << ',' << format_g17(row.grad_norm) << ','
           << format_g17(row.step) << '\n';
}

inline void trace_to_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("trace_to_csv: cannot open " + path);
    trace_to_csv(trace, os);
}

// ===== layer schedule =====

struct LayerSchedule {
    // First breakpoint with t <= threshold wins; thresholds ascend.
    std::vector<std::pair<double, int>> breakpoints;
};

inline LayerSchedule default_layer_schedule() {
    return {{{3.0, 9}, {5.0, 17}, {7.0, 25}, {9.0, 33},
             {std::numeric_limits<double>::infinity(), 41}}};
}

inline int layers_for_time(const LayerSchedule& sched, double t) {
    if (sched.breakpoints.empty())
        throw std::invalid_argument("LayerSchedule: no breakpoints");
    double prev_thr = -std::numeric_limits<double>::infinity();
    int prev_n = 0;
    for (const auto& [thr, n] : sched.breakpoints) {
        if (thr <= prev_thr || n < prev_n)
            throw std::invalid_argument("LayerSchedule: breakpoints must ascend");
        prev_thr = thr;
        prev_n = n;
        if (t <= thr + 1e-9) return n;
    }
    return sched.breakpoints.back().second;
}

// ===== compressed time series =====

struct CompressedSeriesResult {
    TimeSeries series;
    std::vector<double> final_costs;   // per time point
    std::vector<int> layer_counts;     // per time point
    std::vector<OptStatus> statuses;   // per time point
    std::vector<TraceRow> last_trace;  // optimizer trace of the final point
};

// Optimize a brickwall circuit per time point (warm-started along the
// series: same depth reuses the previous solution, a deeper breakpoint
// pads it with identity layers) and measure on the compressed state.
inline CompressedSeriesResult run_compressed_series(
    const ModelSpec& spec, const std::string& pattern, double dt, double t_max,
    const LayerSchedule& sched = default_layer_schedule(), const OptimizeOptions& opts = {},
    long long shots = -1, std::uint64_t seed = 0) {
    validate(spec);
    if (spec.L > 10)
        throw std::invalid_argument("run_compressed_series: capped at L = 10");
    if (static_cast<int>(pattern.size()) != spec.L)
        throw std::invalid_argument("run_compressed_series: pattern length must equal L");
    const std::size_t n_points = series_point_count(dt, t_max);
    const EigenSystem eig = diagonalize(build_hamiltonian(spec));
    const int site = central_site(spec.L);
    const VecC psi0 = kink_state(pattern);

    CompressedSeriesResult res;
    res.series.dt = dt;
    res.series.meta = {"compressed", spec, pattern, site, shots, seed, {}};
    BrickwallAnsatz warm;
    for (std::size_t k = 0; k < n_points; ++k) {
        const double t = dt * static_cast<double>(k);
        if (k == 0) {
            res.series.values.push_back(shots > 0 ? sample_expectation_z(psi0, site, shots,
                                                                         derive_seed(seed, 0))
                                                  : expectation_z(psi0, site));
            res.final_costs.push_back(0.0);
            res.layer_counts.push_back(0);
            res.statuses.push_back(OptStatus::converged);
            continue;
        }
        const int n_layers = layers_for_time(sched, t);
        BrickwallAnsatz init;
        if (warm.n_layers() == 0) {
            init = strang_ansatz(spec, t, n_layers);
        } else if (warm.n_layers() == n_layers) {
            init = warm;
        } else {
            init = warm;  // pad to the new depth with identity layers
            while (init.n_layers() < n_layers)
                init.layer_gates.push_back(std::vector<Mat4>(
                    layer_bonds(spec.L, init.n_layers(), init.first_layer_odd).size(),
                    Mat4::Identity()));
        }
        const MatC target = propagator_dense(eig, t);
        OptimizeResult opt = optimize(target, init, opts);
        if (opt.status == OptStatus::line_search_failure)
            res.series.meta.notes.push_back("line search stalled at t=" + format_g17(t) +
                                            "; kept best iterate");
        warm = opt.ansatz;
        const VecC psi = apply_circuit(psi0, to_circuit(opt.ansatz));
        res.series.values.push_back(shots > 0 ? sample_expectation_z(psi, site, shots,
                                                                     derive_seed(seed, k))
                                              : expectation_z(psi, site));
        res.final_costs.push_back(opt.final_cost);
        res.layer_counts.push_back(n_layers);
        res.statuses.push_back(opt.status);
        res.last_trace = std::move(opt.trace);
    }
    return res;
}

}  // namespace e8sim
