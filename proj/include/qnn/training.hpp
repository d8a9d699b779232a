#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "qnn/data.hpp"
#include "qnn/dense_oracle.hpp"
#include "qnn/mpo.hpp"
#include "qnn/sampler.hpp"

// Optimization stack: contrastive loss on shot estimates, shared-base
// finite-difference gradients, Nadam updates and the minibatch training
// loop with validation tracking and best-round selection.

namespace qnn::train {

enum class Backend { dense, mpo, sweep };

inline Backend backend_from_string(const std::string& s) {
    if (s == "dense") return Backend::dense;
    if (s == "mpo") return Backend::mpo;
    if (s == "sweep") return Backend::sweep;
    throw std::invalid_argument("unknown backend: " + s);
}

struct LossConfig {
    double margin = 0.25;  // d
    int shots = 5000;      // S; ignored in exact mode
    bool exact = false;    // exact-expectation mode (S -> infinity)
};

struct TnConfig {
    std::int64_t chi_mps = 48;
    std::int64_t chi_mpo = 16;
    double rel_cutoff = 1e-12;

    SvdTruncation trunc() const { return {-1, rel_cutoff}; }
};

struct EvalConfig {
    NetworkConfig net;
    TnConfig tn;
    LossConfig loss;
    Backend backend = Backend::mpo;
};

struct LabeledOutput {
    double m = 0.0;
    char label = 'A';
    int state_id = 0;
};

// Output magnetization m_S (or exact m^x) for each input state. Shot streams
// derive from (eval_key, global state id), so results are reproducible and
// independent of evaluation order.
inline std::vector<LabeledOutput> evaluate_outputs(const ParamSet& params,
                                                   const std::vector<data::BlochSample>& states,
                                                   const std::vector<int>& state_ids,
                                                   const EvalConfig& cfg,
                                                   std::uint64_t eval_key) {
    const auto trunc = cfg.tn.trunc();
    std::vector<LabeledOutput> out(states.size());

    tn::LayerMpo mpo;  // built once, reused for all states and layers
    if (cfg.backend == Backend::mpo)
        mpo = tn::build_layer_mpo(params, cfg.net, cfg.tn.chi_mpo, trunc);

    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        double m = 0.0;
        if (cfg.backend == Backend::dense) {
            const Matrix rho = data::to_input_dense(s, cfg.net.n_sites);
            m = oracle::evolve_dense(params, cfg.net, rho, 1).values.back();
        } else {
            tn::LayerMps state = data::to_input_state(s, cfg.net.n_sites);
            for (int l = 0; l < cfg.net.layers; ++l) {
                state = cfg.backend == Backend::mpo
                            ? tn::apply_mpo(state, mpo, cfg.tn.chi_mps, trunc)
                            : tn::sweep_evolve(state, params, cfg.net, cfg.tn.chi_mps, trunc);
                tn::normalize_trace(state);
            }
            if (cfg.loss.exact) {
                m = tn::magnetization_expectation(state, 1);
            } else {
                const std::uint64_t key =
                    rng::derive(eval_key, static_cast<std::uint64_t>(state_ids[i]));
                m = sampling::estimate_magnetization(state, cfg.loss.shots, key).estimate;
            }
        }
        out[i] = {m, s.label, state_ids[i]};
    }
    return out;
}

// L = (1/P^2) sum_{i,l} [ y_il (m_i - m_l)^2 + (1 - y_il) max(0, d - |m_i - m_l|)^2 ]
inline double contrastive_loss(const std::vector<LabeledOutput>& outputs, double margin) {
    if (outputs.empty()) throw std::invalid_argument("contrastive_loss: empty output list");
    const std::size_t p = outputs.size();
    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t l = 0; l < p; ++l) {
            const double diff = outputs[i].m - outputs[l].m;
            if (outputs[i].label == outputs[l].label) {
                total += diff * diff;
            } else {
                const double hinge = std::max(0.0, margin - std::abs(diff));
                total += hinge * hinge;
            }
        }
    return total / (static_cast<double>(p) * static_cast<double>(p));
}

inline double loss_of_params(const ParamSet& params, const std::vector<data::BlochSample>& states,
                             const std::vector<int>& state_ids, const EvalConfig& cfg,
                             std::uint64_t eval_key) {
    return contrastive_loss(evaluate_outputs(params, states, state_ids, cfg, eval_key),
                            cfg.loss.margin);
}

// Forward differences with one shared base evaluation:
// grad_s = [L(params + eps E_s) - L(params)] / eps.
// `perturbed_key(slot)` supplies the shot stream for each perturbed
// evaluation (fresh-shots vs common-random-numbers policy lives there).
inline std::vector<double> finite_diff_gradient(
    const ParamSet& params, const std::vector<data::BlochSample>& states,
    const std::vector<int>& state_ids, const EvalConfig& cfg, double eps,
    std::uint64_t base_key, const std::function<std::uint64_t(std::size_t)>& perturbed_key,
    double* base_loss_out = nullptr) {
    if (eps <= 0.0) throw std::invalid_argument("finite_diff_gradient: eps > 0 required");
    const double base = loss_of_params(params, states, state_ids, cfg, base_key);
    if (base_loss_out) *base_loss_out = base;
    std::vector<double> grad(params.dim());
    for (std::size_t s = 0; s < params.dim(); ++s) {
        const double shifted =
            loss_of_params(params.perturbed(s, eps), states, state_ids, cfg, perturbed_key(s));
        grad[s] = (shifted - base) / eps;
    }
    return grad;
}

// ---------- Nadam ----------

struct NadamConfig {
    double beta1 = 0.75;
    double beta2 = 0.98;
    double lambda = 0.05;
    double delta = 1e-7;
};

struct OptimizerState {
    int round = 1;  // r of the next update
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment

    explicit OptimizerState(std::size_t dim = 0) : m(dim, 0.0), v(dim, 0.0) {}
};

// One Nadam update; returns the applied direction f_r (parameters move by
// -lambda * f_r via ParamSet::set_flat outside).
inline std::vector<double> nadam_step(OptimizerState& state, const std::vector<double>& grad,
                                      const NadamConfig& cfg) {
    if (grad.size() != state.m.size())
        throw std::invalid_argument("nadam_step: gradient length mismatch");
    const int r = state.round;
    const double bias1 = 1.0 - std::pow(cfg.beta1, r);
    const double bias2 = 1.0 - std::pow(cfg.beta2, r);
    std::vector<double> update(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        update[i] = (cfg.beta1 * m_hat + (1.0 - cfg.beta1) / bias1 * grad[i]) /
                    (std::sqrt(v_hat) + cfg.delta);
    }
    state.round += 1;
    return update;
}

// ---------- training loop ----------

struct TrainConfig {
    int rounds = 50;
    int minibatch = 25;       // P'
    double eps = 0.1;         // finite-difference step
    std::uint64_t seed = 1;
    bool fresh_shots = true;  // false: common random numbers within a gradient
    int checkpoint_cadence = 10;
};

struct TrainRound {
    int round = 0;
    double training_loss = 0.0;
    double validation_loss = 0.0;
    std::vector<double> params_flat;  // after this round's update
};

struct TrainHistory {
    std::vector<TrainRound> rounds;
    std::size_t best_index = 0;  // argmin of validation loss over rounds
    ParamSet best_params;

    int best_round() const { return rounds.at(best_index).round; }
    double best_validation_loss() const { return rounds.at(best_index).validation_loss; }
};

// Per round: draw a minibatch without replacement, take one Nadam step on
// the finite-difference gradient, then score the full validation split.
// All per-round randomness derives from (seed, round number), so a run
// resumed from a (params, optimizer-state, round) checkpoint replays the
// same batches and shot streams as an uninterrupted run.
// An optional callback can stop training early (history so far is kept).
inline TrainHistory train(
    const data::Dataset& dataset, ParamSet params, const EvalConfig& eval_cfg,
    const NadamConfig& nadam_cfg, const TrainConfig& train_cfg,
    const std::function<bool(const TrainHistory&)>& stop_early = {},
    const std::function<void(const TrainRound&, const OptimizerState&)>& on_round = {},
    OptimizerState resume_opt = OptimizerState(0)) {
    const int train_count = dataset.train_count;
    if (train_count < 1 || train_count > static_cast<int>(dataset.samples.size()))
        throw std::invalid_argument("train: invalid dataset split");
    if (train_cfg.minibatch < 1 || train_cfg.minibatch > train_count)
        throw std::invalid_argument("train: 1 <= P' <= P required");

    std::vector<data::BlochSample> val_states(dataset.samples.begin() + train_count,
                                              dataset.samples.end());
    std::vector<int> val_ids(val_states.size());
    std::iota(val_ids.begin(), val_ids.end(), train_count);

    const std::uint64_t key_batch = rng::derive(train_cfg.seed, 0x10);
    const std::uint64_t key_grad = rng::derive(train_cfg.seed, 0x20);
    const std::uint64_t key_val = rng::derive(train_cfg.seed, 0x30);

    OptimizerState opt =
        resume_opt.m.size() == params.dim() ? std::move(resume_opt) : OptimizerState(params.dim());
    TrainHistory history;
    for (int r = opt.round; r <= train_cfg.rounds; ++r) {
        // minibatch without replacement (partial Fisher-Yates)
        rng::Stream batch_stream(rng::derive(key_batch, static_cast<std::uint64_t>(r)));
        std::vector<int> pool(static_cast<std::size_t>(train_count));
        std::iota(pool.begin(), pool.end(), 0);
        std::vector<int> batch_ids;
        for (int i = 0; i < train_cfg.minibatch; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) + batch_stream.below(static_cast<std::uint64_t>(train_count - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            batch_ids.push_back(pool[static_cast<std::size_t>(i)]);
        }
        std::vector<data::BlochSample> batch;
        for (int id : batch_ids) batch.push_back(dataset.samples[static_cast<std::size_t>(id)]);

        const std::uint64_t round_key = rng::derive(key_grad, static_cast<std::uint64_t>(r));
        const std::uint64_t base_key = rng::derive(round_key, 0);
        auto perturbed_key = [&](std::size_t slot) {
            return train_cfg.fresh_shots ? rng::derive(round_key, slot + 1) : base_key;
        };

        TrainRound row;
        row.round = r;
        const std::vector<double> grad =
            finite_diff_gradient(params, batch, batch_ids, eval_cfg, train_cfg.eps, base_key,
                                 perturbed_key, &row.training_loss);
        const std::vector<double> update = nadam_step(opt, grad, nadam_cfg);
        std::vector<double> flat = params.flat();
        for (std::size_t i = 0; i < flat.size(); ++i) flat[i] -= nadam_cfg.lambda * update[i];
        params.set_flat(flat);

        row.validation_loss = loss_of_params(params, val_states, val_ids, eval_cfg,
                                             rng::derive(key_val, static_cast<std::uint64_t>(r)));
        row.params_flat = flat;
        history.rounds.push_back(row);
        if (row.validation_loss < history.best_validation_loss())
            history.best_index = history.rounds.size() - 1;
        if (on_round) on_round(history.rounds.back(), opt);
        if (stop_early && stop_early(history)) break;
    }
    if (history.rounds.empty()) throw std::invalid_argument("train: no rounds to run");

    history.best_params = params;
    history.best_params.set_flat(history.rounds.at(history.best_index).params_flat);
    return history;
}

// ---------- nearest-centroid classification ----------

struct Centroids {
    double a = 0.0;
    double b = 0.0;
};

inline Centroids class_centroids(const std::vector<LabeledOutput>& training_outputs) {
    double sum_a = 0.0, sum_b = 0.0;
    int n_a = 0, n_b = 0;
    for (const auto& o : training_outputs) {
        if (o.label == 'A') {
            sum_a += o.m;
            ++n_a;
        } else {
            sum_b += o.m;
            ++n_b;
        }
    }
    if (n_a == 0 || n_b == 0)
        throw std::invalid_argument("class_centroids: both classes required");
    return {sum_a / n_a, sum_b / n_b};
}

struct Classification {
    std::vector<char> predictions;
    double accuracy = 0.0;
    double margin = 0.0;  // min over states of |m - other| - |m - own|
    bool degenerate = false;
};

inline Classification classify(const std::vector<LabeledOutput>& outputs, const Centroids& c) {
    Classification out;
    if (std::abs(c.a - c.b) < 1e-6) {
        out.degenerate = true;
        return out;
    }
    int correct = 0;
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& o : outputs) {
        const double da = std::abs(o.m - c.a);
        const double db = std::abs(o.m - c.b);
        const char predicted = da <= db ? 'A' : 'B';
        out.predictions.push_back(predicted);
        if (predicted == o.label) ++correct;
        const double own = o.label == 'A' ? da : db;
        const double other = o.label == 'A' ? db : da;
        margin = std::min(margin, other - own);
    }
    out.accuracy = outputs.empty() ? 0.0 : static_cast<double>(correct) / outputs.size();
    out.margin = margin;
    return out;
}

}  // namespace qnn::train
