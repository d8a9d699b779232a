#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "qnn/training.hpp"

using namespace qnn;
using namespace qnn::train;

namespace {

std::vector<LabeledOutput> outputs_of(const std::vector<double>& m, const std::string& labels) {
    std::vector<LabeledOutput> out;
    for (std::size_t i = 0; i < m.size(); ++i)
        out.push_back({m[i], labels.at(i), static_cast<int>(i)});
    return out;
}

EvalConfig tiny_dense_eval() {
    EvalConfig ec;
    ec.net = NetworkConfig{3, 2, 0.1, "open"};
    ec.backend = Backend::dense;
    ec.loss.exact = true;
    ec.loss.margin = 0.25;
    return ec;
}

}  // namespace

TEST_CASE("contrastive loss reproduces a hand-computed value") {
    // two states, opposite labels, d = 0.25:
    // diagonal terms vanish, the two cross terms give (0.25 - 0.1)^2 each,
    // so L = 2 * 0.0225 / 4 = 0.01125
    const auto outputs = outputs_of({0.1, 0.0}, "AB");
    CHECK(contrastive_loss(outputs, 0.25) == Catch::Approx(0.01125).margin(1e-15));
    // same labels instead: L = 2 * 0.1^2 / 4
    const auto same = outputs_of({0.1, 0.0}, "AA");
    CHECK(contrastive_loss(same, 0.25) == Catch::Approx(0.005).margin(1e-15));
    // well-separated opposite labels cost nothing
    const auto separated = outputs_of({0.3, -0.3}, "AB");
    CHECK(contrastive_loss(separated, 0.25) == 0.0);
}

TEST_CASE("contrastive loss is invariant under permutations and label swaps") {
    rng::Stream s(52);
    std::vector<double> m;
    std::string labels;
    for (int i = 0; i < 9; ++i) {
        m.push_back(s.uniform(-0.5, 0.5));
        labels.push_back(s.bernoulli(0.5) ? 'A' : 'B');
    }
    const double base = contrastive_loss(outputs_of(m, labels), 0.3);

    std::vector<std::size_t> perm(m.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(s.below(i))]);
    std::vector<double> pm;
    std::string pl;
    for (auto i : perm) {
        pm.push_back(m[i]);
        pl.push_back(labels[i]);
    }
    CHECK(contrastive_loss(outputs_of(pm, pl), 0.3) == Catch::Approx(base).margin(1e-15));

    std::string swapped = labels;
    for (auto& c : swapped) c = c == 'A' ? 'B' : 'A';
    CHECK(contrastive_loss(outputs_of(m, swapped), 0.3) == Catch::Approx(base).margin(1e-15));
    CHECK_THROWS_AS(contrastive_loss({}, 0.3), std::invalid_argument);
}

TEST_CASE("nadam first step matches the hand-derived value") {
    // g = 2, beta1 = 0.75, beta2 = 0.98, delta = 1e-7:
    // m1 = 0.5, v1 = 0.08, m1hat = 2, v1hat = 4,
    // f1 = (0.75*2 + 1*2) / (2 + 1e-7) = 1.74999991...
    NadamConfig cfg{0.75, 0.98, 0.05, 1e-7};
    OptimizerState st(1);
    const auto f = nadam_step(st, {2.0}, cfg);
    CHECK(f[0] == Catch::Approx(1.7499999).margin(1e-6));
    CHECK(st.round == 2);
}

TEST_CASE("nadam with zero betas reduces to sign-like normalized descent") {
    // beta1 = beta2 = 0: m = g, v = g^2, f = g / (|g| + delta)
    NadamConfig cfg{0.0, 0.0, 0.1, 1e-9};
    OptimizerState st(2);
    const auto f = nadam_step(st, {3.0, -0.2}, cfg);
    CHECK(f[0] == Catch::Approx(1.0).margin(1e-8));
    CHECK(f[1] == Catch::Approx(-1.0).margin(1e-7));
}

TEST_CASE("nadam minimizes a quadratic") {
    NadamConfig cfg{0.75, 0.98, 0.05, 1e-7};
    OptimizerState st(1);
    double x = 3.0;
    for (int r = 0; r < 400; ++r) {
        const auto f = nadam_step(st, {2.0 * x}, cfg);
        x -= cfg.lambda * f[0];
    }
    CHECK(std::abs(x) < 0.05);
    CHECK_THROWS_AS(nadam_step(st, {1.0, 2.0}, cfg), std::invalid_argument);
}

TEST_CASE("exact dense and mpo evaluations agree on a small network") {
    data::Dataset d = data::sample_dataset("I", 6, 53);
    std::vector<int> ids{0, 1, 2, 3, 4, 5};
    const ParamSet p = dataset1_initial();
    EvalConfig dense = tiny_dense_eval();
    EvalConfig mpo = dense;
    mpo.backend = Backend::mpo;
    const auto a = evaluate_outputs(p, d.samples, ids, dense, 1);
    const auto b = evaluate_outputs(p, d.samples, ids, mpo, 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].m == Catch::Approx(b[i].m).margin(1e-9));
        CHECK(a[i].label == b[i].label);
    }
}

TEST_CASE("finite differences recover the gradient of an exact loss") {
    // oracle: central differences at much smaller step
    data::Dataset d = data::sample_dataset("I", 4, 54);
    std::vector<int> ids{0, 1, 2, 3};
    const ParamSet p = dataset1_initial();
    const EvalConfig ec = tiny_dense_eval();
    const double eps = 1e-3;
    double base = 0.0;
    const auto grad = finite_diff_gradient(p, d.samples, ids, ec, eps, 1,
                                           [](std::size_t) { return std::uint64_t(1); }, &base);
    REQUIRE(grad.size() == 10);
    CHECK(base == Catch::Approx(loss_of_params(p, d.samples, ids, ec, 1)).margin(1e-14));
    for (std::size_t s = 0; s < grad.size(); ++s) {
        const double h = 1e-5;
        const double up = loss_of_params(p.perturbed(s, h), d.samples, ids, ec, 1);
        const double dn = loss_of_params(p.perturbed(s, -h), d.samples, ids, ec, 1);
        const double central = (up - dn) / (2.0 * h);
        CHECK(grad[s] == Catch::Approx(central).margin(5e-3 + 0.05 * std::abs(central)));
    }
}

TEST_CASE("training runs, records history and is deterministic") {
    data::Dataset d = data::sample_dataset("I", 8, 55);
    d.train_count = 6;
    TrainConfig tc;
    tc.rounds = 2;
    tc.minibatch = 4;
    tc.eps = 0.1;
    tc.seed = 99;
    const NadamConfig nc{0.75, 0.98, 0.05, 1e-7};
    const EvalConfig ec = tiny_dense_eval();

    const auto h1 = train::train(d, dataset1_initial(), ec, nc, tc);
    REQUIRE(h1.rounds.size() == 2);
    CHECK(h1.rounds[0].round == 1);
    CHECK(h1.rounds[1].round == 2);
    for (const auto& r : h1.rounds) {
        CHECK(std::isfinite(r.training_loss));
        CHECK(std::isfinite(r.validation_loss));
        REQUIRE(r.params_flat.size() == 10);
    }
    CHECK(h1.rounds[0].params_flat != dataset1_initial().flat());
    CHECK(h1.best_params.flat() == h1.rounds[h1.best_index].params_flat);

    const auto h2 = train::train(d, dataset1_initial(), ec, nc, tc);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(h1.rounds[i].training_loss == h2.rounds[i].training_loss);
        CHECK(h1.rounds[i].validation_loss == h2.rounds[i].validation_loss);
        CHECK(h1.rounds[i].params_flat == h2.rounds[i].params_flat);
    }
}

TEST_CASE("training resumed from a checkpoint replays the uninterrupted run") {
    data::Dataset d = data::sample_dataset("II", 8, 56);
    d.train_count = 6;
    TrainConfig tc;
    tc.rounds = 4;
    tc.minibatch = 3;
    tc.eps = 0.1;
    tc.seed = 7;
    const NadamConfig nc{0.85, 0.9995, 0.05, 1e-7};
    EvalConfig ec = tiny_dense_eval();
    ec.loss.margin = 0.35;

    ParamSet mid = dataset2_initial();
    OptimizerState mid_opt(0);
    const auto full = train::train(d, dataset2_initial(), ec, nc, tc, {},
                            [&](const TrainRound& row, const OptimizerState& opt) {
                                if (row.round == 2) {
                                    mid = dataset2_initial();
                                    mid.set_flat(row.params_flat);
                                    mid_opt = opt;
                                }
                            });
    REQUIRE(full.rounds.size() == 4);
    const auto resumed = train::train(d, mid, ec, nc, tc, {}, {}, mid_opt);
    REQUIRE(resumed.rounds.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(resumed.rounds[i].round == full.rounds[i + 2].round);
        CHECK(resumed.rounds[i].training_loss == full.rounds[i + 2].training_loss);
        CHECK(resumed.rounds[i].validation_loss == full.rounds[i + 2].validation_loss);
        CHECK(resumed.rounds[i].params_flat == full.rounds[i + 2].params_flat);
    }
}

TEST_CASE("invalid split and minibatch sizes are rejected") {
    data::Dataset d = data::sample_dataset("I", 6, 57);
    const EvalConfig ec = tiny_dense_eval();
    const NadamConfig nc;
    TrainConfig tc;
    tc.rounds = 1;
    d.train_count = 0;
    CHECK_THROWS_AS(train::train(d, dataset1_initial(), ec, nc, tc), std::invalid_argument);
    d.train_count = 4;
    tc.minibatch = 5;
    CHECK_THROWS_AS(train::train(d, dataset1_initial(), ec, nc, tc), std::invalid_argument);
}

TEST_CASE("classification at the centroids is perfect") {
    const Centroids c{0.2, -0.1};
    const auto outputs = outputs_of({0.2, -0.1, 0.2}, "ABA");
    const auto cls = classify(outputs, c);
    CHECK_FALSE(cls.degenerate);
    CHECK(cls.accuracy == 1.0);
    CHECK(cls.margin == Catch::Approx(0.3));
    CHECK(cls.predictions == std::vector<char>({'A', 'B', 'A'}));
}

TEST_CASE("centroids are class means and degenerate pairs are flagged") {
    const auto outputs = outputs_of({0.1, 0.3, -0.2}, "AAB");
    const auto c = class_centroids(outputs);
    CHECK(c.a == Catch::Approx(0.2));
    CHECK(c.b == Catch::Approx(-0.2));
    CHECK_THROWS_AS(class_centroids(outputs_of({0.1}, "A")), std::invalid_argument);

    const auto cls = classify(outputs, Centroids{0.1, 0.1 + 1e-8});
    CHECK(cls.degenerate);
}

TEST_CASE("misclassified states lower accuracy and the margin goes negative") {
    const Centroids c{0.2, -0.2};
    const auto outputs = outputs_of({0.15, 0.18, -0.25, 0.1}, "AABB");
    const auto cls = classify(outputs, c);
    CHECK(cls.accuracy == Catch::Approx(0.75));
    CHECK(cls.margin < 0.0);
}
