#pragma once

#include <cstdint>
#include <vector>

#include "qnn/mps.hpp"
#include "qnn/rng.hpp"

// Finite-shot x-basis measurement of the output layer by sequential
// conditional sampling on the MPS. Outcome +1 at a site selects the
// T^+ = (M^00 + M^01 + M^10 + M^11)/2 contraction, outcome -1 selects
// T^- = (M^00 - M^01 - M^10 + M^11)/2; conditional probabilities are ratios
// of partial contractions with all remaining sites closed by the trace
// vector.

namespace qnn::sampling {

struct ShotEstimate {
    int shots = 0;
    double estimate = 0.0;        // (1/2SN) sum_{s,k} m_k^s
    double clamped_mass = 0.0;    // total probability mass repaired after truncation noise
    std::uint64_t stream_key = 0;
    std::vector<std::vector<int>> outcomes;  // retained only on request
};

// Per-state sampling engine; precomputes the site contractions and the
// right trace environments once, then each shot is a single left sweep.
class ShotSampler {
public:
    explicit ShotSampler(const tn::LayerMps& state) {
        static const std::array<cd, 4> t_plus = {cd(0.5, 0), cd(0.5, 0), cd(0.5, 0), cd(0.5, 0)};
        static const std::array<cd, 4> t_minus = {cd(0.5, 0), cd(-0.5, 0), cd(-0.5, 0), cd(0.5, 0)};
        const int n = state.n_sites();
        plus_.reserve(n);
        minus_.reserve(n);
        for (const auto& site : state.sites) {
            plus_.push_back(tn::contract_phys(site, t_plus));
            minus_.push_back(tn::contract_phys(site, t_minus));
        }
        right_.assign(static_cast<std::size_t>(n) + 1, Matrix::Ones(1, 1));
        for (int i = n - 1; i >= 0; --i)
            right_[i] = (plus_[i] + minus_[i]) * right_[i + 1];

        const double trace = right_[0](0, 0).real();
        if (std::abs(trace - 1.0) > 1e-4)
            throw NumericalError("sample_shot: state trace deviates from 1 beyond 1e-4");
    }

    int n_sites() const { return static_cast<int>(plus_.size()); }

    // One shot; outcomes are +-1 per site. Clamped probability mass is
    // accumulated into `clamped`.
    std::vector<int> sample(rng::Stream& stream, double& clamped) const {
        const int n = n_sites();
        std::vector<int> outcomes(static_cast<std::size_t>(n));
        Matrix left = Matrix::Ones(1, 1);
        for (int i = 0; i < n; ++i) {
            const double denom = (left * (plus_[i] + minus_[i]) * right_[i + 1])(0, 0).real();
            const double numer = (left * plus_[i] * right_[i + 1])(0, 0).real();
            if (denom <= 0.0)
                throw NumericalError("sample_shot: nonpositive normalization, state too corrupted");
            double p_plus = numer / denom;
            if (p_plus < -1e-6 || p_plus > 1.0 + 1e-6)
                throw NumericalError("sample_shot: probability outside [0,1] beyond tolerance");
            if (p_plus < 0.0) {
                clamped += -p_plus;
                p_plus = 0.0;
            } else if (p_plus > 1.0) {
                clamped += p_plus - 1.0;
                p_plus = 1.0;
            }
            const bool up = stream.uniform() < p_plus;
            outcomes[static_cast<std::size_t>(i)] = up ? 1 : -1;
            left = left * (up ? plus_[i] : minus_[i]);
        }
        return outcomes;
    }

    // Joint probability of a fixed outcome string (oracle cross-checks).
    double joint_probability(const std::vector<int>& outcomes) const {
        Matrix left = Matrix::Ones(1, 1);
        for (int i = 0; i < n_sites(); ++i)
            left = left * (outcomes[static_cast<std::size_t>(i)] > 0 ? plus_[i] : minus_[i]);
        return (left * right_[static_cast<std::size_t>(n_sites())])(0, 0).real() /
               right_[0](0, 0).real();
    }

private:
    std::vector<Matrix> plus_, minus_;
    std::vector<Matrix> right_;
};

inline std::vector<int> sample_shot(const tn::LayerMps& state, rng::Stream& stream) {
    double clamped = 0.0;
    return ShotSampler(state).sample(stream, clamped);
}

// Shot streams are derived per (stream_key, shot index): reproducible and
// order-independent.
inline ShotEstimate estimate_magnetization(const tn::LayerMps& state, int shots,
                                           std::uint64_t stream_key, bool keep_outcomes = false) {
    if (shots < 1) throw std::invalid_argument("estimate_magnetization: S >= 1 required");
    const ShotSampler sampler(state);
    ShotEstimate est;
    est.shots = shots;
    est.stream_key = stream_key;
    long long total = 0;
    for (int s = 0; s < shots; ++s) {
        rng::Stream stream(rng::derive(stream_key, static_cast<std::uint64_t>(s)));
        std::vector<int> outcome = sampler.sample(stream, est.clamped_mass);
        for (int o : outcome) total += o;
        if (keep_outcomes) est.outcomes.push_back(std::move(outcome));
    }
    est.estimate = static_cast<double>(total) /
                   (2.0 * static_cast<double>(shots) * sampler.n_sites());
    return est;
}

}  // namespace qnn::sampling
