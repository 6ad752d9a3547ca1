#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "e8sim/compress.hpp"
#include "e8sim/exact.hpp"

namespace {

using e8sim::cplx;
using e8sim::Mat4;
using e8sim::MatC;

Mat4 haar4(std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Mat4 z;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) z(i, j) = cplx(n01(rng), n01(rng));
    Eigen::HouseholderQR<Mat4> qr(z);
    Mat4 q = qr.householderQ();
    Mat4 r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < 4; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
    return q;
}

double dense_cost_of(const MatC& target, const e8sim::BrickwallAnsatz& a) {
    return e8sim::cost_dense(target, a);
}

}  // namespace

TEST_CASE("brickwall layers alternate bond parity", "[compress]") {
    REQUIRE(e8sim::layer_bonds(8, 0, true) == std::vector<int>{1, 3, 5, 7});
    REQUIRE(e8sim::layer_bonds(8, 1, true) == std::vector<int>{2, 4, 6});
    REQUIRE(e8sim::layer_bonds(8, 2, true) == std::vector<int>{1, 3, 5, 7});
    REQUIRE(e8sim::layer_bonds(8, 0, false) == std::vector<int>{2, 4, 6});
    REQUIRE(e8sim::layer_bonds(5, 0, true) == std::vector<int>{1, 3});
    REQUIRE(e8sim::layer_bonds(5, 1, true) == std::vector<int>{2, 4});

    e8sim::BrickwallAnsatz bad = e8sim::identity_ansatz(6, 3);
    bad.layer_gates[1].pop_back();  // wrong slot count for its parity
    REQUIRE_THROWS_AS(e8sim::validate(bad), std::invalid_argument);
}

TEST_CASE("identity ansatz represents the identity operator", "[compress]") {
    const auto a = e8sim::identity_ansatz(4, 4);
    REQUIRE(a.n_layers() == 4);
    const MatC u = e8sim::ansatz_dense(a);
    REQUIRE((u - MatC::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-14);

    const e8sim::Circuit c = e8sim::to_circuit(a);
    REQUIRE(c.L == 4);
    REQUIRE(c.layers.size() == 4);
    REQUIRE(c.layers[0].size() == 2);  // bonds 1-2 and 3-4
    REQUIRE(c.layers[1].size() == 1);  // bond 2-3
}

TEST_CASE("bond-split initialization is a second-order propagator", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const double t = 0.4;
    const MatC target = e8sim::propagator_dense(
        e8sim::diagonalize(e8sim::build_hamiltonian(spec)), t);

    SECTION("structure") {
        const auto a = e8sim::strang_ansatz(spec, t, 5);
        REQUIRE(a.n_layers() == 5);
        REQUIRE(a.first_layer_odd);
        // Zero time collapses every slab to the identity.
        const auto id = e8sim::strang_ansatz(spec, 0.0, 7);
        for (const auto& layer : id.layer_gates)
            for (const auto& g : layer)
                REQUIRE((g - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-15);
        // Even depths reuse the next odd splitting plus one identity layer.
        const auto even = e8sim::strang_ansatz(spec, t, 6);
        REQUIRE(even.n_layers() == 6);
        for (const auto& g : even.layer_gates[5])
            REQUIRE((g - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-15);
        REQUIRE(e8sim::cost_dense(target, even) ==
                Catch::Approx(e8sim::cost_dense(target, e8sim::strang_ansatz(spec, t, 5)))
                    .margin(1e-14));
        REQUIRE_THROWS_AS(e8sim::strang_ansatz(spec, t, 0), std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::strang_ansatz(spec, t, 1), std::invalid_argument);
    }
    SECTION("deeper splittings converge toward the target") {
        const double c3 = dense_cost_of(target, e8sim::strang_ansatz(spec, t, 3));
        const double c5 = dense_cost_of(target, e8sim::strang_ansatz(spec, t, 5));
        const double c9 = dense_cost_of(target, e8sim::strang_ansatz(spec, t, 9));
        REQUIRE(c3 > c5);
        REQUIRE(c5 > c9);
        REQUIRE(c9 < 1e-4);
    }
}

TEST_CASE("mpo target agrees with dense diagonalization", "[compress]") {
    const e8sim::ModelSpec spec{6, 1.0, 3.0};
    const double t = 0.7;
    const auto dense = e8sim::target_operator(spec, t, "dense");
    const auto mpo = e8sim::target_operator(spec, t, "mpo", 1e-12);
    REQUIRE(mpo.mpo.L == 6);
    REQUIRE((e8sim::mpo_to_matrix(mpo.mpo) - dense.dense).cwiseAbs().maxCoeff() < 5e-8);
    REQUIRE(mpo.mpo.trunc_error >= 0.0);

    SECTION("zero time is a rank-one identity") {
        const auto id = e8sim::target_operator(spec, 0.0, "mpo", 1e-10);
        REQUIRE(id.mpo.max_bond() == 1);
        REQUIRE((e8sim::mpo_to_matrix(id.mpo) - MatC::Identity(64, 64)).cwiseAbs().maxCoeff() <
                1e-14);
    }
    SECTION("bad arguments") {
        REQUIRE_THROWS_AS(e8sim::target_operator(spec, t, "mpo"), std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::target_operator(spec, t, "banana"), std::invalid_argument);
    }
}

TEST_CASE("mpo product composes propagators", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const auto u1 = e8sim::target_operator(spec, 0.2, "mpo", 1e-12).mpo;
    const auto u2 = e8sim::target_operator(spec, 0.3, "mpo", 1e-12).mpo;
    const auto prod = e8sim::mpo_product(u1, u2, 1e-12);
    const MatC expect = e8sim::target_operator(spec, 0.5, "dense").dense;
    REQUIRE((e8sim::mpo_to_matrix(prod) - expect).cwiseAbs().maxCoeff() < 5e-8);

    const auto id = e8sim::mpo_identity(4);
    REQUIRE(std::abs(e8sim::mpo_trace_overlap(id, id) - cplx(16.0, 0.0)) < 1e-13);
    REQUIRE_THROWS_AS(e8sim::mpo_identity(1), std::invalid_argument);
}

TEST_CASE("mpo and dense cost evaluations coincide", "[compress]") {
    const e8sim::ModelSpec spec{6, 1.0, 3.0};
    // Deliberate mismatch between target time and ansatz time: nonzero cost.
    const auto a = e8sim::strang_ansatz(spec, 0.35, 5);
    const auto dense = e8sim::target_operator(spec, 0.4, "dense");
    const auto mpo = e8sim::target_operator(spec, 0.4, "mpo", 1e-10);
    const double cd = e8sim::cost(dense, a);
    const double cm = e8sim::cost(mpo, a, 1e-10);
    REQUIRE(cd > 1e-6);  // genuinely away from the optimum
    REQUIRE(cm == Catch::Approx(cd).margin(1e-8));

    e8sim::TargetOperator broken;
    broken.mode = "neither";
    REQUIRE_THROWS_AS(e8sim::cost(broken, a), std::invalid_argument);
}

TEST_CASE("cost is sensitive to a global phase on the target", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const auto a = e8sim::strang_ansatz(spec, 0.3, 3);
    const MatC u = e8sim::ansatz_dense(a);
    REQUIRE(e8sim::cost_dense(u, a) == Catch::Approx(0.0).margin(1e-13));
    const double phi = 0.8;
    const MatC shifted = std::polar(1.0, phi) * u;
    REQUIRE(e8sim::cost_dense(shifted, a) ==
            Catch::Approx(1.0 - std::cos(phi)).margin(1e-12));
}

TEST_CASE("gate environments contract back to the overlap trace", "[compress]") {
    std::mt19937_64 rng(9301);
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const auto a = e8sim::strang_ansatz(spec, 0.3, 3);
    const MatC target = e8sim::target_operator(spec, 0.45, "dense").dense;

    cplx trace = 0.0;
    const auto envs = e8sim::environments_all(target, a, &trace);
    const MatC w = e8sim::ansatz_dense(a);
    const cplx direct = (target.conjugate().cwiseProduct(w)).sum();
    REQUIRE(std::abs(trace - direct) < 1e-11);

    // Tr(E^dag G) must reproduce the trace for every gate in the network.
    for (std::size_t l = 0; l < envs.size(); ++l)
        for (std::size_t b = 0; b < envs[l].size(); ++b) {
            const cplx back = (envs[l][b].adjoint() * a.layer_gates[l][b]).trace();
            REQUIRE(std::abs(back - trace) < 1e-11);
        }

    SECTION("the environment is the exact linearization in one gate") {
        const Mat4 r = haar4(rng);
        e8sim::BrickwallAnsatz b = a;
        b.layer_gates[1][0] = r;
        const cplx swapped =
            (target.conjugate().cwiseProduct(e8sim::ansatz_dense(b))).sum();
        const cplx predicted = (envs[1][0].adjoint() * r).trace();
        REQUIRE(std::abs(swapped - predicted) < 1e-11);
    }
    SECTION("the convenience wrapper matches the batch sweep") {
        const Mat4 e10 = e8sim::gate_environment(target, a, 1, 0);
        REQUIRE((e10 - envs[1][0]).cwiseAbs().maxCoeff() < 1e-13);
        REQUIRE_THROWS_AS(e8sim::gate_environment(target, a, 3, 0), std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::gate_environment(target, a, 0, 5), std::invalid_argument);
    }
}

TEST_CASE("riemannian gradient agrees with finite differences", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const auto a = e8sim::strang_ansatz(spec, 0.25, 3);
    const MatC target = e8sim::target_operator(spec, 0.4, "dense").dense;
    const std::size_t d = 16;

    const auto envs = e8sim::environments_all(target, a, nullptr);
    std::vector<std::vector<Mat4>> grads(envs.size());
    double g2 = 0.0;
    for (std::size_t l = 0; l < envs.size(); ++l) {
        grads[l].resize(envs[l].size());
        for (std::size_t b = 0; b < envs[l].size(); ++b) {
            grads[l][b] = e8sim::riemannian_gradient(a.layer_gates[l][b], envs[l][b], d);
            g2 += grads[l][b].squaredNorm();
        }
    }
    REQUIRE(g2 > 1e-10);  // away from stationarity

    const auto cost_at = [&](double s) {
        e8sim::BrickwallAnsatz trial = a;
        for (std::size_t l = 0; l < grads.size(); ++l)
            for (std::size_t b = 0; b < grads[l].size(); ++b)
                trial.layer_gates[l][b] =
                    e8sim::retract(a.layer_gates[l][b], -grads[l][b], s);
        return e8sim::cost_dense(target, trial);
    };
    const double h = 1e-4;
    const double fd = (cost_at(h) - cost_at(-h)) / (2.0 * h);
    REQUIRE(fd == Catch::Approx(-g2).epsilon(1e-4));
}

TEST_CASE("polar retraction stays on the unitary group", "[compress]") {
    std::mt19937_64 rng(9302);
    const Mat4 g = haar4(rng);
    std::normal_distribution<double> n01(0.0, 1.0);
    Mat4 m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = cplx(n01(rng), n01(rng));
    const Mat4 skew = (m - m.adjoint()) / 2.0;
    const Mat4 xi = g * skew;

    const Mat4 r = e8sim::retract(g, xi, 0.7);
    REQUIRE(((r.adjoint() * r) - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-13);
    // A zero step must return the base point.
    REQUIRE((e8sim::retract(g, xi, 0.0) - g).cwiseAbs().maxCoeff() < 1e-13);

    const Mat4 herm = (m + m.adjoint()) / 2.0;
    REQUIRE_THROWS_AS(e8sim::retract(g, Mat4(g * herm), 0.5), std::invalid_argument);
}

TEST_CASE("optimizer descends monotonically and reports its stop reason", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const double t = 0.5;
    const MatC target = e8sim::target_operator(spec, t, "dense").dense;
    const auto init = e8sim::strang_ansatz(spec, t, 7);

    e8sim::OptimizeOptions opts;
    opts.max_iters = 400;
    opts.grad_tol = 1e-12;
    opts.cost_tol = 1e-8;
    std::vector<int> observed;
    const auto res = e8sim::optimize(target, init, opts,
                                     [&](int it, const e8sim::BrickwallAnsatz&) {
                                         observed.push_back(it);
                                     });

    REQUIRE(res.status == e8sim::OptStatus::converged);
    REQUIRE(res.final_cost <= 1e-8);
    REQUIRE(res.final_cost < e8sim::cost_dense(target, init));
    REQUIRE(res.trace.size() >= 2);
    REQUIRE(res.trace.front().iter == 0);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
        REQUIRE(res.trace[i].cost <= res.trace[i - 1].cost);
        REQUIRE(res.trace[i].iter == res.trace[i - 1].iter + 1);
    }
    REQUIRE(observed.size() == res.trace.size() - 1);

    SECTION("a zero iteration budget still reports the initial cost") {
        e8sim::OptimizeOptions none;
        none.max_iters = 0;
        const auto idle = e8sim::optimize(target, init, none);
        REQUIRE(idle.status == e8sim::OptStatus::max_iters);
        REQUIRE(idle.final_cost == Catch::Approx(e8sim::cost_dense(target, init)).margin(1e-15));
    }
    SECTION("trace csv serialization") {
        std::ostringstream os;
        e8sim::trace_to_csv(res.trace, os);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        REQUIRE(line == "iter,cost,grad_norm,step");
        std::getline(is, line);
        REQUIRE(line.rfind("0,", 0) == 0);
    }
}

TEST_CASE("a representable target is already stationary", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const auto a = e8sim::strang_ansatz(spec, 0.4, 5);
    const MatC target = e8sim::ansatz_dense(a);
    const auto res = e8sim::optimize(target, a);
    REQUIRE(res.status == e8sim::OptStatus::converged);
    REQUIRE(res.trace.size() == 1);
    REQUIRE(res.trace[0].grad_norm < 1e-8);
    REQUIRE(res.final_cost < 1e-12);
}

TEST_CASE("layer schedule picks the first breakpoint at or above t", "[compress]") {
    const auto sched = e8sim::default_layer_schedule();
    REQUIRE(e8sim::layers_for_time(sched, 0.5) == 9);
    REQUIRE(e8sim::layers_for_time(sched, 3.0) == 9);
    REQUIRE(e8sim::layers_for_time(sched, 3.0 + 1e-12) == 9);  // tolerant at the seam
    REQUIRE(e8sim::layers_for_time(sched, 3.1) == 17);
    REQUIRE(e8sim::layers_for_time(sched, 5.0) == 17);
    REQUIRE(e8sim::layers_for_time(sched, 6.9) == 25);
    REQUIRE(e8sim::layers_for_time(sched, 8.5) == 33);
    REQUIRE(e8sim::layers_for_time(sched, 1e6) == 41);

    REQUIRE_THROWS_AS(e8sim::layers_for_time(e8sim::LayerSchedule{}, 1.0),
                      std::invalid_argument);
    e8sim::LayerSchedule bad{{{5.0, 9}, {3.0, 17}}};
    REQUIRE_THROWS_AS(e8sim::layers_for_time(bad, 10.0), std::invalid_argument);
    e8sim::LayerSchedule shrink{{{3.0, 17}, {5.0, 9}}};
    REQUIRE_THROWS_AS(e8sim::layers_for_time(shrink, 10.0), std::invalid_argument);
}

TEST_CASE("compressed series tracks exact dynamics over a short window", "[compress]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const std::string pattern = "UDDU";
    const double dt = 0.1, t_max = 0.4;

    e8sim::LayerSchedule sched;
    sched.breakpoints = {{0.25, 3}, {std::numeric_limits<double>::infinity(), 5}};
    e8sim::OptimizeOptions opts;
    opts.max_iters = 300;
    opts.grad_tol = 1e-9;
    opts.cost_tol = 1e-9;

    const auto res = e8sim::run_compressed_series(spec, pattern, dt, t_max, sched, opts);
    const auto exact = e8sim::run_exact_series(spec, pattern, dt, t_max);

    REQUIRE(res.series.meta.backend == "compressed");
    REQUIRE(res.series.values.size() == 5);
    REQUIRE(res.layer_counts == std::vector<int>{0, 3, 3, 5, 5});
    REQUIRE(res.final_costs[0] == 0.0);
    for (std::size_t k = 1; k < res.final_costs.size(); ++k)
        REQUIRE(res.final_costs[k] < 1e-6);
    for (std::size_t k = 0; k < res.series.values.size(); ++k)
        REQUIRE(res.series.values[k] == Catch::Approx(exact.values[k]).margin(1e-3));
    REQUIRE_FALSE(res.last_trace.empty());

    REQUIRE_THROWS_AS(
        e8sim::run_compressed_series(spec, "UDU", dt, t_max, sched, opts),
        std::invalid_argument);
}
