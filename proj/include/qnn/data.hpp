#pragma once

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qnn/dense_oracle.hpp"
#include "qnn/mps.hpp"
#include "qnn/rng.hpp"

// Labeled Bloch-sphere product-state datasets I and II. Samples are stored
// as (label, theta, phi); the magnetizations are always re-derived.

namespace qnn::data {

inline constexpr double kPi = 3.14159265358979323846;

// Quadrant-correct inverse tangent with codomain (-pi, pi]; the x<0, y=0
// branch returns +pi.
inline double arctan2(double y, double x) {
    if (x == 0.0 && y == 0.0) throw std::invalid_argument("arctan2: origin input");
    if (x > 0.0) return std::atan(y / x);
    if (x < 0.0) {
        if (y > 0.0) return std::atan(y / x) + kPi;
        if (y < 0.0) return std::atan(y / x) - kPi;
        return kPi;
    }
    return y > 0.0 ? kPi / 2.0 : -kPi / 2.0;
}

struct BlochSample {
    char label = 'A';  // 'A' or 'B'
    double theta = 0.0;
    double phi = 0.0;

    double mz() const { return std::cos(theta) / 2.0; }
    double radius_xy() const { return std::sqrt(std::max(0.0, 0.25 - mz() * mz())); }
    double mx() const { return radius_xy() * std::cos(phi); }
    double my() const { return radius_xy() * std::sin(phi); }
};

struct Dataset {
    std::string tag;  // "I" or "II"
    std::uint64_t seed = 0;
    int train_count = 0;  // first train_count samples form the training split
    std::vector<BlochSample> samples;

    int validation_count() const { return static_cast<int>(samples.size()) - train_count; }
};

inline double wrap_to_2pi(double phi) {
    double out = std::fmod(phi, 2.0 * kPi);
    if (out < 0.0) out += 2.0 * kPi;
    return out;
}

inline BlochSample sample_from_mz(char label, double mz, double phi) {
    BlochSample s;
    s.label = label;
    s.theta = std::acos(2.0 * mz);
    s.phi = wrap_to_2pi(phi);
    return s;
}

// Dataset I: m^z uniform in [0.15, 0.4] (A) or [-0.4, -0.15] (B), azimuth
// uniform in [0, 2pi).
inline Dataset sample_dataset_I(int count, std::uint64_t seed) {
    if (count < 2) throw std::invalid_argument("sample_dataset_I: count >= 2 required");
    Dataset out;
    out.tag = "I";
    out.seed = seed;
    rng::Stream stream(rng::derive(seed, 1));
    for (int i = 0; i < count; ++i) {
        const char label = stream.bernoulli(0.5) ? 'A' : 'B';
        const double mz = label == 'A' ? stream.uniform(0.15, 0.4) : stream.uniform(-0.4, -0.15);
        out.samples.push_back(sample_from_mz(label, mz, stream.uniform(0.0, 2.0 * kPi)));
    }
    return out;
}

// Dataset II: theta in {pi/4, 3pi/4} with equal probability; phi in
// I1 = [pi/4, 3pi/4] or I2 = [5pi/4, 7pi/4] according to the (label, theta)
// rule.
inline Dataset sample_dataset_II(int count, std::uint64_t seed) {
    if (count < 2) throw std::invalid_argument("sample_dataset_II: count >= 2 required");
    Dataset out;
    out.tag = "II";
    out.seed = seed;
    rng::Stream stream(rng::derive(seed, 2));
    for (int i = 0; i < count; ++i) {
        const char label = stream.bernoulli(0.5) ? 'A' : 'B';
        const bool upper = stream.bernoulli(0.5);  // theta = pi/4
        const double theta = upper ? kPi / 4.0 : 3.0 * kPi / 4.0;
        const bool first_interval = (label == 'A') == upper;
        const double phi = first_interval ? stream.uniform(kPi / 4.0, 3.0 * kPi / 4.0)
                                          : stream.uniform(5.0 * kPi / 4.0, 7.0 * kPi / 4.0);
        BlochSample s;
        s.label = label;
        s.theta = theta;
        s.phi = phi;
        out.samples.push_back(s);
    }
    return out;
}

inline Dataset sample_dataset(const std::string& tag, int count, std::uint64_t seed) {
    if (tag == "I") return sample_dataset_I(count, seed);
    if (tag == "II") return sample_dataset_II(count, seed);
    throw std::invalid_argument("sample_dataset: unknown dataset tag " + tag);
}

inline tn::LayerMps to_input_state(const BlochSample& s, int n_sites) {
    return tn::product_state_mps(s.mx(), s.my(), s.mz(), n_sites);
}

inline Matrix to_input_dense(const BlochSample& s, int n_sites) {
    return oracle::bloch_product_dm(s.mx(), s.my(), s.mz(), n_sites);
}

// ---------- file format: JSON lines with a header line ----------

inline void write_dataset(const Dataset& d, std::ostream& out) {
    nlohmann::json header = {{"dataset", d.tag},
                             {"seed", d.seed},
                             {"count", d.samples.size()},
                             {"train_count", d.train_count}};
    out << header.dump() << "\n";
    for (const auto& s : d.samples) {
        nlohmann::json line = {{"label", std::string(1, s.label)},
                               {"theta", s.theta},
                               {"phi", s.phi}};
        out << line.dump() << "\n";
    }
}

inline void write_dataset_file(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    write_dataset(d, out);
}

inline Dataset read_dataset(std::istream& in) {
    Dataset d;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset stream: missing header");
    nlohmann::json header = nlohmann::json::parse(line);
    d.tag = header.at("dataset").get<std::string>();
    d.seed = header.at("seed").get<std::uint64_t>();
    d.train_count = header.value("train_count", 0);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        BlochSample s;
        s.label = j.at("label").get<std::string>().at(0);
        s.theta = j.at("theta").get<double>();
        s.phi = j.at("phi").get<double>();
        d.samples.push_back(s);
    }
    if (header.at("count").get<std::size_t>() != d.samples.size())
        throw std::runtime_error("dataset stream: sample count mismatch");
    return d;
}

inline Dataset read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read dataset file: " + path);
    return read_dataset(in);
}

}  // namespace qnn::data
