#include <catch2/catch_amalgamated.hpp>

#include "qnn/dense_oracle.hpp"

using namespace qnn;
using namespace qnn::oracle;

TEST_CASE("zero parameters give the identity channel") {
    ParamSet p;
    p.mask = dataset1_mask();
    NetworkConfig cfg{3, 1, 0.1, "open"};
    rng::Stream s(11);
    for (int t = 0; t < 5; ++t) {
        const Matrix rho = random_product_dm(3, s);
        const Matrix out = layer_step_dense(p, cfg, rho);
        CHECK((out - rho).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("layer channel is trace preserving and positive on states") {
    rng::Stream s(12);
    NetworkConfig cfg{3, 1, 0.17, "open"};
    for (int t = 0; t < 8; ++t) {
        const ParamSet p = random_paramset(t % 2 ? dataset1_mask() : dataset2_mask(), s);
        const Matrix rho = random_product_dm(3, s);
        const Matrix out = layer_step_dense(p, cfg, rho);
        CHECK(std::abs(out.trace() - cd(1.0, 0.0)) < 1e-12);
        CHECK(is_hermitian(out, 1e-11));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(out);
        CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("channel matrix applied to a vectorized state matches the direct step") {
    rng::Stream s(13);
    NetworkConfig cfg{2, 1, 0.1, "open"};
    const ParamSet p = random_paramset(dataset1_mask(), s);
    const Matrix channel = build_dense_channel(p, cfg);
    for (int t = 0; t < 4; ++t) {
        const Matrix rho = random_product_dm(2, s);
        const Matrix direct = layer_step_dense(p, cfg, rho);
        const Matrix via_channel = unvectorize(channel * vectorize(rho, 2), 2);
        CHECK((direct - via_channel).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("two layer steps equal the squared channel") {
    rng::Stream s(14);
    NetworkConfig cfg{2, 2, 0.13, "open"};
    const ParamSet p = random_paramset(dataset2_mask(), s);
    const Matrix channel = build_dense_channel(p, cfg);
    const Matrix rho = random_product_dm(2, s);
    const Matrix direct = layer_step_dense(p, cfg, layer_step_dense(p, cfg, rho));
    const Matrix via_channel = unvectorize(channel * channel * vectorize(rho, 2), 2);
    CHECK((direct - via_channel).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("vectorize and unvectorize are inverse") {
    rng::Stream s(15);
    const Matrix rho = random_product_dm(3, s);
    CHECK((unvectorize(vectorize(rho, 3), 3) - rho).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero couplings keep pure states pure") {
    // with j = 0 every gate is a Hamiltonian evolution followed by a swap,
    // each Hamiltonian acts before its qubits are swapped out, and each old
    // qubit ends in an untouched vacuum: the layer map is unitary on the
    // state, so a pure input stays pure even for non-commuting h terms
    rng::Stream s(77);
    ParamSet p;
    p.mask = dataset1_mask();
    p.set_flat({s.uniform(-1, 1), s.uniform(-1, 1), s.uniform(-1, 1), s.uniform(-1, 1),
                s.uniform(-1, 1), 0, 0, 0, 0, 0});  // random h slots, zero j slots
    NetworkConfig cfg{3, 4, 0.2, "open"};
    const Matrix rho = bloch_product_dm(0.1, 0.2, std::sqrt(0.25 - 0.01 - 0.04), 3);
    const auto traj = evolve_dense(p, cfg, rho, 1);
    const double purity = (traj.final_rho * traj.final_rho).trace().real();
    CHECK(purity == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("bloch product states reproduce their magnetizations") {
    const double mx = 0.15, my = -0.3;
    const double mz = std::sqrt(0.25 - mx * mx - my * my);
    const Matrix rho = bloch_product_dm(mx, my, mz, 3);
    CHECK(magnetization_dense(rho, 1, 3) == Catch::Approx(mx).margin(1e-12));
    CHECK(magnetization_dense(rho, 2, 3) == Catch::Approx(my).margin(1e-12));
    CHECK(magnetization_dense(rho, 3, 3) == Catch::Approx(mz).margin(1e-12));
    CHECK(std::abs(rho.trace() - cd(1.0, 0.0)) < 1e-12);
}

TEST_CASE("x magnetization equals the born-probability expectation") {
    // oracle: m^x from Tr(sigma^x rho) must match sum_m p(m) * mean(outcomes)
    rng::Stream s(16);
    NetworkConfig cfg{3, 2, 0.1, "open"};
    const ParamSet p = random_paramset(dataset1_mask(), s);
    const Matrix rho0 = random_product_dm(3, s);
    const Matrix rho = evolve_dense(p, cfg, rho0, 1).final_rho;
    const auto probs = born_x_probabilities(rho, 3);
    double total = 0.0, mean = 0.0;
    for (std::size_t m = 0; m < probs.size(); ++m) {
        total += probs[m];
        double outcome_sum = 0.0;
        for (int k = 0; k < 3; ++k)
            outcome_sum += ((m >> (2 - k)) & 1) ? -1.0 : 1.0;
        mean += probs[m] * outcome_sum / (2.0 * 3.0);
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    CHECK(mean == Catch::Approx(magnetization_dense(rho, 1, 3)).margin(1e-12));
}

TEST_CASE("discrete step approaches the lindblad limit as dt shrinks") {
    rng::Stream s(17);
    ParamSet p = random_paramset(dataset1_mask(), s);
    NetworkConfig cfg{2, 1, 0.1, "open"};
    const std::vector<double> dt_list{0.2, 0.1, 0.05, 0.025};
    const auto errors = lindblad_limit_error(p, cfg, dt_list, 123, 6);
    REQUIRE(errors.size() == 4);
    for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] < errors[i - 1]);
    // first-order convergence: halving dt should at least halve the error
    // once dt is small (allow slack for the prefactor)
    CHECK(errors[3] < 0.6 * errors[2]);
    CHECK(errors[3] < 0.2 * errors[0]);
}

TEST_CASE("dense guard rejects large systems") {
    ParamSet p = dataset1_initial();
    NetworkConfig cfg{7, 1, 0.1, "open"};
    const Matrix rho = Matrix::Identity(128, 128) / 128.0;
    CHECK_THROWS_AS(layer_step_dense(p, cfg, rho), std::invalid_argument);
}
