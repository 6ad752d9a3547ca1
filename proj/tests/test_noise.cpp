#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "e8sim/noise.hpp"

namespace {

e8sim::TimeSeries make_series(double dt, std::vector<double> values) {
    e8sim::TimeSeries s;
    s.dt = dt;
    s.values = std::move(values);
    return s;
}

e8sim::MatC random_density_matrix(int L, std::mt19937_64& rng) {
    const std::size_t d = e8sim::dim_for(L);
    std::normal_distribution<double> n01(0.0, 1.0);
    e8sim::MatC a(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) a(i, j) = e8sim::cplx(n01(rng), n01(rng));
    e8sim::MatC rho = a * a.adjoint();
    rho /= rho.trace().real();
    return rho;
}

}  // namespace

TEST_CASE("zero-noise density-matrix evolution matches the statevector backend", "[noise]") {
    const e8sim::ModelSpec spec{5, 1.0, 3.0};
    const std::string pattern = "UUDUU";
    const auto sv = e8sim::run_trotter_series(spec, pattern, 0.1, 2.0);
    const auto dm = e8sim::run_noisy_series(spec, pattern, 0.1, 2.0, e8sim::NoiseModel{});
    REQUIRE(sv.values.size() == dm.values.size());
    for (std::size_t k = 0; k < sv.values.size(); ++k)
        REQUIRE(dm.values[k] == Catch::Approx(sv.values[k]).margin(1e-12));
}

TEST_CASE("support depolarization is trace preserving and unital", "[noise]") {
    std::mt19937_64 rng(8201);
    const int L = 4;
    const std::size_t d = e8sim::dim_for(L);

    e8sim::MatC rho = random_density_matrix(L, rng);
    e8sim::MatC one_site = rho;
    e8sim::depolarize_support(one_site, L, 2, 1, 0.3);
    REQUIRE(one_site.trace().real() == Catch::Approx(1.0).margin(1e-13));
    REQUIRE(std::abs(one_site.trace().imag()) < 1e-13);

    e8sim::MatC two_site = rho;
    e8sim::depolarize_support(two_site, L, 3, 2, 0.45);
    REQUIRE(two_site.trace().real() == Catch::Approx(1.0).margin(1e-13));

    // The maximally mixed state is a fixed point.
    e8sim::MatC mixed = e8sim::MatC::Identity(d, d) / static_cast<double>(d);
    e8sim::MatC after = mixed;
    e8sim::depolarize_support(after, L, 1, 2, 0.7);
    REQUIRE((after - mixed).cwiseAbs().maxCoeff() < 1e-14);

    SECTION("full strength erases the supported site's magnetization only") {
        e8sim::VecC up = e8sim::kink_state("UUUU");
        e8sim::MatC pure = e8sim::dm_from_state(up);
        e8sim::depolarize_support(pure, L, 2, 1, 1.0);
        REQUIRE(e8sim::expectation_z_dm(pure, 2) == Catch::Approx(0.0).margin(1e-14));
        REQUIRE(e8sim::expectation_z_dm(pure, 1) == Catch::Approx(1.0).margin(1e-14));
        REQUIRE(e8sim::expectation_z_dm(pure, 3) == Catch::Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("global depolarization contracts the signal by (1-lambda)^k", "[noise]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    const std::string pattern = "UDDU";
    const double lambda = 0.03;
    e8sim::NoiseModel noise;
    noise.global_depol_per_step = lambda;

    const auto clean = e8sim::run_noisy_series(spec, pattern, 0.1, 1.5, e8sim::NoiseModel{});
    const auto noisy = e8sim::run_noisy_series(spec, pattern, 0.1, 1.5, noise);
    for (std::size_t k = 0; k < clean.values.size(); ++k)
        REQUIRE(noisy.values[k] ==
                Catch::Approx(clean.values[k] * std::pow(1.0 - lambda, static_cast<double>(k)))
                    .margin(1e-12));
}

TEST_CASE("readout bias rescales every point by (1-2r)", "[noise]") {
    const e8sim::ModelSpec spec{4, 1.0, 3.0};
    e8sim::NoiseModel noise;
    noise.readout_flip = 0.07;
    const auto clean = e8sim::run_noisy_series(spec, "UDDU", 0.1, 1.0, e8sim::NoiseModel{});
    const auto biased = e8sim::run_noisy_series(spec, "UDDU", 0.1, 1.0, noise);
    for (std::size_t k = 0; k < clean.values.size(); ++k)
        REQUIRE(biased.values[k] == Catch::Approx(clean.values[k] * 0.86).margin(1e-13));
}

TEST_CASE("noise model validation rejects out-of-range probabilities", "[noise]") {
    e8sim::NoiseModel bad;
    bad.p2 = 1.5;
    REQUIRE_THROWS_AS(e8sim::validate(bad), std::invalid_argument);
    bad.p2 = -0.1;
    REQUIRE_THROWS_AS(e8sim::validate(bad), std::invalid_argument);
    REQUIRE_FALSE(e8sim::NoiseModel{}.enabled());
    e8sim::NoiseModel on;
    on.p1 = 1e-4;
    REQUIRE(on.enabled());
}

TEST_CASE("reference circuit zeroes rotations but keeps the coupling pattern", "[noise]") {
    const e8sim::ModelSpec spec{6, 1.0, 3.0};
    const e8sim::Circuit step = e8sim::trotter_first_order(spec, 0.1);
    const e8sim::Circuit ref = e8sim::reference_circuit(step);
    REQUIRE(ref.layers.size() == step.layers.size());
    for (std::size_t li = 0; li < step.layers.size(); ++li) {
        REQUIRE(ref.layers[li].size() == step.layers[li].size());
        for (std::size_t gi = 0; gi < step.layers[li].size(); ++gi) {
            const auto& orig = step.layers[li][gi];
            const auto& g = ref.layers[li][gi];
            REQUIRE(g.kind == orig.kind);
            REQUIRE(g.q1 == orig.q1);
            if (g.kind == e8sim::GateKind::RZZ)
                REQUIRE(g.angle == orig.angle);
            else
                REQUIRE(g.angle == 0.0);
        }
    }

    SECTION("dense blocks must be lowered first") {
        e8sim::Circuit c;
        c.L = 2;
        c.layers.push_back({e8sim::Gate::dense2q(1, 2, e8sim::Mat4::Identity())});
        REQUIRE_THROWS_WITH(e8sim::reference_circuit(c),
                            Catch::Matchers::ContainsSubstring("decompose DENSE2Q"));
    }

    SECTION("the reference evolution is classical on basis states") {
        // Only diagonal gates survive, so the central-site signal is frozen.
        const auto series =
            e8sim::run_noisy_reference_series(spec, "UUDDUU", 0.1, 1.0, e8sim::NoiseModel{});
        REQUIRE(series.meta.backend == "noisy-reference");
        for (double v : series.values) REQUIRE(v == Catch::Approx(series.values[0]).margin(1e-12));
        REQUIRE(std::abs(series.values[0]) == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("ratio mitigation undoes a pure global depolarization channel", "[noise]") {
    const e8sim::ModelSpec spec{5, 1.0, 3.0};
    const std::string pattern = "UUDUU";
    const double lambda = 0.05;
    e8sim::NoiseModel noise;
    noise.global_depol_per_step = lambda;

    const auto clean = e8sim::run_noisy_series(spec, pattern, 0.1, 8.0, e8sim::NoiseModel{});
    const auto raw = e8sim::run_noisy_series(spec, pattern, 0.1, 8.0, noise);
    const auto ref = e8sim::run_noisy_reference_series(spec, pattern, 0.1, 8.0, noise);
    const auto pair = e8sim::mitigate(raw, ref, 0.05);

    REQUIRE(pair.mitigated.meta.backend == "mitigated");
    // |ref(k)| = 0.95^k crosses eps_den = 0.05 at k = 59.
    const double expected_cut = 59 * 0.1;
    REQUIRE(e8sim::valid_prefix_t_cut(pair) == Catch::Approx(expected_cut).margin(1e-12));
    for (std::size_t k = 0; k < pair.mitigated.values.size(); ++k) {
        if (pair.valid[k])
            REQUIRE(pair.mitigated.values[k] == Catch::Approx(clean.values[k]).margin(1e-10));
        else
            REQUIRE(pair.mitigated.values[k] == raw.values[k]);  // untouched, just flagged
    }
}

TEST_CASE("mitigation rejects inconsistent or hopeless inputs", "[noise]") {
    const auto raw = make_series(0.1, {1.0, 0.9, 0.8});

    SECTION("grid mismatch") {
        REQUIRE_THROWS_AS(e8sim::mitigate(raw, make_series(0.2, {1.0, 0.9, 0.8})),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::mitigate(raw, make_series(0.1, {1.0, 0.9})),
                          std::invalid_argument);
    }
    SECTION("bad eps_den") {
        REQUIRE_THROWS_AS(e8sim::mitigate(raw, raw, 0.0), std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::mitigate(raw, raw, -1.0), std::invalid_argument);
    }
    SECTION("reference dead at t = 0") {
        REQUIRE_THROWS_AS(e8sim::mitigate(raw, make_series(0.1, {0.01, 0.9, 0.8}), 0.05),
                          std::runtime_error);
    }
    SECTION("interior dropouts keep the raw value and break the prefix") {
        const auto ref = make_series(0.1, {1.0, 0.8, 0.3, 0.9});
        const auto r = make_series(0.1, {0.5, 0.4, 0.3, 0.2});
        const auto pair = e8sim::mitigate(r, ref, 0.5);
        REQUIRE(pair.valid == std::vector<char>{1, 1, 0, 1});
        REQUIRE(pair.mitigated.values[2] == r.values[2]);
        REQUIRE(pair.mitigated.values[3] == Catch::Approx(0.2 * 1.0 / 0.9).margin(1e-15));
        REQUIRE(e8sim::valid_prefix_t_cut(pair) == Catch::Approx(0.2).margin(1e-12));
    }
}

TEST_CASE("mitigation csv lists raw, reference, mitigated and validity columns", "[noise]") {
    const auto raw = make_series(0.5, {1.0, 0.5});
    const auto ref = make_series(0.5, {1.0, 0.25});
    const auto pair = e8sim::mitigate(raw, ref, 0.1);
    std::ostringstream os;
    e8sim::mitigation_to_csv(pair, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    REQUIRE(line == "t,raw,ref,mitigated,valid");
    std::getline(is, line);
    REQUIRE(line == "0,1,1,1,1");
    std::getline(is, line);
    REQUIRE(line == "0.5,0.5,0.25,2,1");
}

TEST_CASE("interleaved job plan pairs each circuit with its reference twin", "[noise]") {
    const auto plan = e8sim::interleaved_plan({"a", "b", "c"});
    REQUIRE(plan.entries ==
            std::vector<std::string>{"a", "a_ref", "b", "b_ref", "c", "c_ref"});
    REQUIRE(plan.chunk_starts == std::vector<std::size_t>{0});
    const std::string text = e8sim::plan_to_text(plan);
    REQUIRE(text.find("=== submit ===") == std::string::npos);

    SECTION("long runs are chunked without splitting a pair") {
        std::vector<std::string> labels;
        for (int i = 0; i < 101; ++i) labels.push_back("t" + std::to_string(i));
        const auto big = e8sim::interleaved_plan(labels, 200);
        REQUIRE(big.entries.size() == 202);
        REQUIRE(big.chunk_starts == std::vector<std::size_t>{0, 200});
        const std::string t = e8sim::plan_to_text(big);
        std::size_t markers = 0, pos = 0;
        while ((pos = t.find("=== submit ===", pos)) != std::string::npos) {
            ++markers;
            pos += 1;
        }
        REQUIRE(markers == 1);
        // Entry 200 (first of the second chunk) is a physics circuit, not a _ref.
        REQUIRE(big.entries[200] == "t100");
    }
    SECTION("invalid chunk sizes and empty label lists are rejected") {
        REQUIRE_THROWS_AS(e8sim::interleaved_plan({"a"}, 3), std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::interleaved_plan({"a"}, 0), std::invalid_argument);
        REQUIRE_THROWS_AS(e8sim::interleaved_plan({}, 200), std::invalid_argument);
    }
}

TEST_CASE("finite shots on the noisy backend are seeded deterministically", "[noise]") {
    const e8sim::ModelSpec spec{3, 1.0, 3.0};
    e8sim::NoiseModel noise;
    noise.p1 = 0.001;
    const auto a = e8sim::run_noisy_series(spec, "UDU", 0.2, 1.0, noise, 2048, 99);
    const auto b = e8sim::run_noisy_series(spec, "UDU", 0.2, 1.0, noise, 2048, 99);
    const auto c = e8sim::run_noisy_series(spec, "UDU", 0.2, 1.0, noise, 2048, 100);
    REQUIRE(a.values == b.values);
    REQUIRE(a.values != c.values);
    const auto exact = e8sim::run_noisy_series(spec, "UDU", 0.2, 1.0, noise);
    for (std::size_t k = 0; k < a.values.size(); ++k)
        REQUIRE(std::abs(a.values[k] - exact.values[k]) < 6.0 / std::sqrt(2048.0));
}
