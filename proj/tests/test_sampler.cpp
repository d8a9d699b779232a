#include <catch2/catch_amalgamated.hpp>

#include "qnn/dense_oracle.hpp"
#include "qnn/mpo.hpp"
#include "qnn/sampler.hpp"

using namespace qnn;
using namespace qnn::sampling;

TEST_CASE("fully x-polarized states sample deterministically") {
    // |+>^N always measures +1, |->^N always -1
    const auto plus = tn::product_state_mps(0.5, 0.0, 0.0, 6);
    const auto est_p = estimate_magnetization(plus, 200, 31);
    CHECK(est_p.estimate == Catch::Approx(0.5).margin(1e-14));
    CHECK(est_p.clamped_mass < 1e-10);

    const auto minus = tn::product_state_mps(-0.5, 0.0, 0.0, 6);
    const auto est_m = estimate_magnetization(minus, 200, 32);
    CHECK(est_m.estimate == Catch::Approx(-0.5).margin(1e-14));
}

TEST_CASE("z-polarized states give a binomial x-outcome mean") {
    // |0>^N has <sigma^x> = 0 per site; the estimator is a mean of 2SN
    // fair coin flips, so |m_S| should stay within a few CLT widths
    const int shots = 4000, n = 4;
    const auto zero = tn::product_state_mps(0.0, 0.0, 0.5, n);
    const auto est = estimate_magnetization(zero, shots, 33);
    const double sigma = 1.0 / (2.0 * std::sqrt(static_cast<double>(shots) * n));
    CHECK(std::abs(est.estimate) < 5.0 * sigma);
}

TEST_CASE("shot mean converges to the exact magnetization") {
    rng::Stream s(34);
    NetworkConfig cfg{4, 2, 0.1, "open"};
    const ParamSet p = random_paramset(dataset1_mask(), s);
    const auto mpo = tn::build_layer_mpo(p, cfg, 16, {});
    tn::LayerMps state = tn::product_state_mps(0.2, 0.1, std::sqrt(0.25 - 0.05), 4);
    for (int l = 0; l < cfg.layers; ++l) state = tn::apply_mpo(state, mpo, 64, {});
    const double exact = tn::magnetization_expectation(state, 1);
    const int shots = 20000;
    const auto est = estimate_magnetization(state, shots, 35);
    // variance per site outcome is at most 1, so the estimator sd is
    // bounded by 1 / (2 sqrt(S N))
    const double bound = 5.0 / (2.0 * std::sqrt(static_cast<double>(shots) * 4));
    CHECK(std::abs(est.estimate - exact) < bound);
}

TEST_CASE("joint outcome distribution matches the dense born rule at N=4") {
    rng::Stream s(36);
    NetworkConfig cfg{4, 2, 0.1, "open"};
    const ParamSet p = random_paramset(dataset2_mask(), s);
    const double mx = 0.15, my = -0.2, mz = std::sqrt(0.25 - mx * mx - my * my);

    tn::LayerMps state = tn::product_state_mps(mx, my, mz, 4);
    const auto mpo = tn::build_layer_mpo(p, cfg, 16, {});
    for (int l = 0; l < cfg.layers; ++l) state = tn::apply_mpo(state, mpo, 64, {});
    const Matrix rho =
        oracle::evolve_dense(p, cfg, oracle::bloch_product_dm(mx, my, mz, 4), 1).final_rho;
    const auto dense_probs = oracle::born_x_probabilities(rho, 4);

    const ShotSampler sampler(state);
    double tv = 0.0;
    for (std::int64_t m = 0; m < 16; ++m) {
        std::vector<int> outcomes;
        for (int k = 0; k < 4; ++k) outcomes.push_back(((m >> (3 - k)) & 1) ? -1 : 1);
        tv += 0.5 * std::abs(sampler.joint_probability(outcomes) -
                             dense_probs[static_cast<std::size_t>(m)]);
    }
    CHECK(tv < 1e-9);

    // chain-rule consistency: probabilities over all outcomes sum to one
    double total = 0.0;
    for (std::int64_t m = 0; m < 16; ++m) {
        std::vector<int> outcomes;
        for (int k = 0; k < 4; ++k) outcomes.push_back(((m >> (3 - k)) & 1) ? -1 : 1);
        total += sampler.joint_probability(outcomes);
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("empirical outcome frequencies match the joint distribution") {
    rng::Stream s(37);
    NetworkConfig cfg{3, 2, 0.1, "open"};
    const ParamSet p = random_paramset(dataset1_mask(), s);
    const auto mpo = tn::build_layer_mpo(p, cfg, 16, {});
    tn::LayerMps state = tn::product_state_mps(0.1, 0.2, std::sqrt(0.25 - 0.05), 3);
    for (int l = 0; l < cfg.layers; ++l) state = tn::apply_mpo(state, mpo, 32, {});

    const int shots = 30000;
    const auto est = estimate_magnetization(state, shots, 38, /*keep_outcomes=*/true);
    REQUIRE(est.outcomes.size() == shots);
    std::array<double, 8> freq{};
    for (const auto& o : est.outcomes) {
        int idx = 0;
        for (int k = 0; k < 3; ++k) idx = idx * 2 + (o[static_cast<std::size_t>(k)] < 0 ? 1 : 0);
        freq[static_cast<std::size_t>(idx)] += 1.0 / shots;
    }
    const ShotSampler sampler(state);
    for (std::int64_t m = 0; m < 8; ++m) {
        std::vector<int> outcomes;
        for (int k = 0; k < 3; ++k) outcomes.push_back(((m >> (2 - k)) & 1) ? -1 : 1);
        const double exact = sampler.joint_probability(outcomes);
        CHECK(freq[static_cast<std::size_t>(m)] ==
              Catch::Approx(exact).margin(5.0 * std::sqrt(exact * (1 - exact) / shots) + 2e-3));
    }
}

TEST_CASE("estimates are reproducible and independent of request order") {
    const auto state = tn::product_state_mps(0.1, -0.1, std::sqrt(0.25 - 0.02), 5);
    const auto a = estimate_magnetization(state, 500, 40);
    const auto b = estimate_magnetization(state, 500, 40);
    CHECK(a.estimate == b.estimate);
    // shot s draws from a stream derived from (key, s): a longer run shares
    // its prefix with a shorter one
    const auto full = estimate_magnetization(state, 300, 41, true);
    const auto prefix = estimate_magnetization(state, 100, 41, true);
    for (int s = 0; s < 100; ++s)
        CHECK(full.outcomes[static_cast<std::size_t>(s)] ==
              prefix.outcomes[static_cast<std::size_t>(s)]);
}

TEST_CASE("sampler rejects unnormalized states") {
    auto state = tn::product_state_mps(0.0, 0.0, 0.5, 3);
    for (auto& x : state.sites[0].data) x *= 2.0;  // break the trace
    CHECK_THROWS_AS(ShotSampler(state), NumericalError);
    CHECK_THROWS_AS(estimate_magnetization(state, 10, 42), NumericalError);
}

TEST_CASE("shot count must be positive") {
    const auto state = tn::product_state_mps(0.0, 0.0, 0.5, 2);
    CHECK_THROWS_AS(estimate_magnetization(state, 0, 43), std::invalid_argument);
}
