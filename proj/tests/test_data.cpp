#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "qnn/data.hpp"

using namespace qnn;
using namespace qnn::data;

TEST_CASE("arctan2 handles every quadrant and axis") {
    CHECK(arctan2(0.0, 1.0) == 0.0);
    CHECK(arctan2(1.0, 0.0) == Catch::Approx(kPi / 2));
    CHECK(arctan2(-1.0, 0.0) == Catch::Approx(-kPi / 2));
    CHECK(arctan2(0.0, -1.0) == Catch::Approx(kPi));             // +pi, not -pi
    CHECK(arctan2(1.0, 1.0) == Catch::Approx(kPi / 4));
    CHECK(arctan2(1.0, -1.0) == Catch::Approx(3 * kPi / 4));     // atan(y/x) + pi
    CHECK(arctan2(-1.0, -1.0) == Catch::Approx(-3 * kPi / 4));   // atan(y/x) - pi
    CHECK(arctan2(-1.0, 1.0) == Catch::Approx(-kPi / 4));
    CHECK_THROWS_AS(arctan2(0.0, 0.0), std::invalid_argument);
    // azimuth round trip on a dataset sample
    const BlochSample s = sample_from_mz('A', 0.2, 2.1);
    const double phi = wrap_to_2pi(arctan2(s.my(), s.mx()));
    CHECK(phi == Catch::Approx(2.1).margin(1e-12));
}

TEST_CASE("all samples live on the radius-1/2 bloch sphere") {
    for (const auto& tag : {std::string("I"), std::string("II")}) {
        const Dataset d = sample_dataset(tag, 200, 44);
        for (const auto& s : d.samples) {
            const double r2 = s.mx() * s.mx() + s.my() * s.my() + s.mz() * s.mz();
            CHECK(r2 == Catch::Approx(0.25).margin(1e-12));
            CHECK((s.label == 'A' || s.label == 'B'));
            CHECK(s.phi >= 0.0);
            CHECK(s.phi < 2 * kPi);
        }
    }
}

TEST_CASE("dataset I classes split by the sign and range of mz") {
    const Dataset d = sample_dataset_I(500, 45);
    int n_a = 0;
    for (const auto& s : d.samples) {
        if (s.label == 'A') {
            ++n_a;
            CHECK(s.mz() >= 0.15);
            CHECK(s.mz() <= 0.4);
        } else {
            CHECK(s.mz() >= -0.4);
            CHECK(s.mz() <= -0.15);
        }
    }
    // both classes in reasonable proportion
    CHECK(n_a > 180);
    CHECK(n_a < 320);
}

TEST_CASE("dataset II obeys the (label, theta) to azimuth-interval rule") {
    const Dataset d = sample_dataset_II(500, 46);
    int upper_a = 0, lower_a = 0;
    for (const auto& s : d.samples) {
        const bool upper = std::abs(s.theta - kPi / 4) < 1e-12;
        if (!upper) CHECK(std::abs(s.theta - 3 * kPi / 4) < 1e-12);
        const bool in_first = s.phi >= kPi / 4 && s.phi <= 3 * kPi / 4;
        const bool in_second = s.phi >= 5 * kPi / 4 && s.phi <= 7 * kPi / 4;
        CHECK((in_first || in_second));
        // class A: first interval on the upper cone, second on the lower;
        // class B mirrored
        if (s.label == 'A') {
            CHECK(in_first == upper);
            (upper ? upper_a : lower_a) += 1;
        } else {
            CHECK(in_second == upper);
        }
    }
    CHECK(upper_a > 50);
    CHECK(lower_a > 50);
}

TEST_CASE("sampling is deterministic in the seed") {
    const Dataset a = sample_dataset("I", 50, 47);
    const Dataset b = sample_dataset("I", 50, 47);
    const Dataset c = sample_dataset("I", 50, 48);
    REQUIRE(a.samples.size() == b.samples.size());
    bool identical = true, differs = false;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        identical = identical && a.samples[i].label == b.samples[i].label &&
                    a.samples[i].theta == b.samples[i].theta && a.samples[i].phi == b.samples[i].phi;
        differs = differs || a.samples[i].phi != c.samples[i].phi;
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("dataset serialization round-trips bit-exactly") {
    Dataset d = sample_dataset("II", 40, 49);
    d.train_count = 30;
    std::stringstream ss;
    write_dataset(d, ss);
    const Dataset back = read_dataset(ss);
    CHECK(back.tag == d.tag);
    CHECK(back.seed == d.seed);
    CHECK(back.train_count == 30);
    CHECK(back.validation_count() == 10);
    REQUIRE(back.samples.size() == d.samples.size());
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        CHECK(back.samples[i].label == d.samples[i].label);
        CHECK(back.samples[i].theta == d.samples[i].theta);
        CHECK(back.samples[i].phi == d.samples[i].phi);
    }
}

TEST_CASE("corrupt headers are rejected") {
    Dataset d = sample_dataset("I", 5, 50);
    std::stringstream ss;
    write_dataset(d, ss);
    std::string text = ss.str();
    text = text.substr(0, text.rfind('{'));  // drop the last sample line
    std::stringstream broken(text);
    CHECK_THROWS_AS(read_dataset(broken), std::runtime_error);
}

TEST_CASE("input-state conversions agree between backends") {
    const BlochSample s = sample_dataset("I", 3, 51).samples[0];
    const auto mps = to_input_state(s, 3);
    const Matrix dm = to_input_dense(s, 3);
    CHECK(tn::magnetization_expectation(mps, 1) ==
          Catch::Approx(oracle::magnetization_dense(dm, 1, 3)).margin(1e-12));
    CHECK(tn::magnetization_expectation(mps, 3) == Catch::Approx(s.mz()).margin(1e-12));
}

TEST_CASE("unknown tags and tiny counts are rejected") {
    CHECK_THROWS_AS(sample_dataset("III", 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_dataset("I", 1, 1), std::invalid_argument);
}
