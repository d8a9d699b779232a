// Command-line front end: dataset generation, training, trajectory
// recording, evaluation and a quick self-test of the numerical backends.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure,
// 3 accuracy-threshold failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qnn/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qnn;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "run";
};

io::RunConfig resolve_config(const CommonOpts& opts, const std::string& preset_dataset,
                             bool reduced) {
    json j = io::runconfig_to_json(io::preset_config(preset_dataset, reduced));
    if (!opts.config_path.empty()) {
        const json loaded = json::parse(io::read_text_file(opts.config_path));
        for (auto it = loaded.begin(); it != loaded.end(); ++it) {
            if (it.key() == "schema") continue;
            if (!j.contains(it.key()))
                throw std::invalid_argument("unknown config key: " + it.key());
            j[it.key()] = it.value();
        }
    }
    for (const auto& kv : opts.overrides) io::apply_override(j, kv);
    io::RunConfig cfg = io::runconfig_from_json(j);
    if (cfg.backend == "dense" && cfg.net.n_sites > 6)
        throw std::invalid_argument("backend=dense requires n_sites <= 6");
    if (cfg.backend != "dense" && cfg.backend != "mpo" && cfg.backend != "sweep")
        throw std::invalid_argument("unknown backend: " + cfg.backend);
    if (cfg.dataset_tag != "I" && cfg.dataset_tag != "II")
        throw std::invalid_argument("dataset must be I or II");
    return cfg;
}

void write_resolved(const io::RunConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    io::write_text_file(dir + "/config.resolved.json", io::runconfig_to_json(cfg).dump(2) + "\n");
}

ParamSet initial_params(const io::RunConfig& cfg) {
    if (cfg.init == "preset")
        return cfg.dataset_tag == "I" ? dataset1_initial() : dataset2_initial();
    if (cfg.init == "random") {
        rng::Stream s(rng::derive(cfg.training.seed, 0x7a));
        return random_paramset(cfg.dataset_tag == "I" ? dataset1_mask() : dataset2_mask(), s);
    }
    return paramset_from_json(json::parse(io::read_text_file(cfg.init)));
}

train::EvalConfig eval_config(const io::RunConfig& cfg) {
    train::EvalConfig ec;
    ec.net = cfg.net;
    ec.tn = cfg.tn;
    ec.loss = cfg.loss;
    ec.backend = train::backend_from_string(cfg.backend);
    return ec;
}

int cmd_gen_data(const CommonOpts& opts, const std::string& dataset, int count, int train_count,
                 std::uint64_t seed) {
    if (count < 2) throw std::invalid_argument("gen-data: count >= 2 required");
    if (train_count <= 0) train_count = count * 5 / 6;  // default 5/6 train split
    if (train_count >= count)
        throw std::invalid_argument("gen-data: train_count must leave a validation split");
    data::Dataset d = data::sample_dataset(dataset, count, seed);
    d.train_count = train_count;
    fs::create_directories(opts.out_dir);
    const std::string data_path = opts.out_dir + "/dataset.jsonl";
    data::write_dataset_file(d, data_path);
    const json manifest = {{"schema", io::kSchemaVersion},
                           {"dataset", dataset},
                           {"seed", seed},
                           {"count", count},
                           {"train_count", train_count},
                           {"validation_count", count - train_count},
                           {"file", "dataset.jsonl"}};
    io::write_text_file(opts.out_dir + "/dataset.manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << data_path << " (" << train_count << " train / "
              << count - train_count << " validation)\n";
    return 0;
}

int cmd_train(const CommonOpts& opts, const io::RunConfig& cfg, const std::string& data_path,
              int resume_round) {
    write_resolved(cfg, opts.out_dir);
    data::Dataset d;
    if (!data_path.empty()) {
        d = data::read_dataset_file(data_path);
    } else {
        d = data::sample_dataset(cfg.dataset_tag, cfg.count, cfg.data_seed);
        d.train_count = cfg.train_count;
        data::write_dataset_file(d, opts.out_dir + "/dataset.jsonl");
    }
    if (d.train_count <= 0 || d.validation_count() <= 0)
        throw std::invalid_argument("train: dataset needs both splits (check the manifest)");

    ParamSet params = initial_params(cfg);
    train::OptimizerState opt(0);
    if (resume_round > 0) {
        const std::string stem = opts.out_dir + "/checkpoint_" + std::to_string(resume_round);
        params = paramset_from_json(json::parse(io::read_text_file(stem + "_params.json")));
        opt = io::optimizer_from_json(json::parse(io::read_text_file(stem + "_optimizer.json")));
    }

    const train::EvalConfig ec = eval_config(cfg);
    auto on_round = [&](const train::TrainRound& row, const train::OptimizerState& opt_now) {
        std::cout << "round " << row.round << "  train " << row.training_loss << "  val "
                  << row.validation_loss << std::endl;
        if (cfg.training.checkpoint_cadence > 0 &&
            (row.round % cfg.training.checkpoint_cadence == 0 ||
             row.round == cfg.training.rounds)) {
            ParamSet snap = params;
            snap.set_flat(row.params_flat);
            io::write_checkpoint(opts.out_dir, row.round, snap, opt_now);
        }
    };
    const train::TrainHistory history = train::train(d, params, ec, cfg.nadam, cfg.training,
                                                     /*stop_early=*/{}, on_round, opt);

    io::write_text_file(opts.out_dir + "/loss.csv", io::loss_history_csv(history.rounds));
    io::write_text_file(opts.out_dir + "/best_params.json",
                        paramset_to_json(history.best_params).dump(2) + "\n");

    // centroids from training-split outputs under the best parameters
    std::vector<data::BlochSample> train_states(d.samples.begin(),
                                                d.samples.begin() + d.train_count);
    std::vector<int> train_ids(train_states.size());
    std::iota(train_ids.begin(), train_ids.end(), 0);
    const auto outputs = train::evaluate_outputs(history.best_params, train_states, train_ids, ec,
                                                 rng::derive(cfg.training.seed, 0xce));
    const auto centroids = train::class_centroids(outputs);
    io::write_text_file(opts.out_dir + "/centroids.json",
                        json{{"schema", io::kSchemaVersion},
                             {"a", centroids.a},
                             {"b", centroids.b},
                             {"best_round", history.best_round()}}
                                .dump(2) +
                            "\n");

    io::Series tr{"training", "#1f77b4", {}, {}}, va{"validation", "#d62728", {}, {}};
    for (const auto& r : history.rounds) {
        tr.x.push_back(r.round);
        tr.y.push_back(r.training_loss);
        va.x.push_back(r.round);
        va.y.push_back(r.validation_loss);
    }
    io::write_text_file(opts.out_dir + "/loss.svg",
                        io::svg_line_plot("loss history", "round", "loss", {tr, va}));
    std::cout << "best round " << history.best_round() << "  val loss "
              << history.best_validation_loss() << "\n";
    return 0;
}

int cmd_trajectory(const CommonOpts& opts, const io::RunConfig& cfg, const std::string& params_path,
                   const std::string& data_path) {
    write_resolved(cfg, opts.out_dir);
    const ParamSet params =
        params_path.empty() ? initial_params(cfg)
                            : paramset_from_json(json::parse(io::read_text_file(params_path)));
    data::Dataset d = data_path.empty()
                          ? [&] {
                                data::Dataset g =
                                    data::sample_dataset(cfg.dataset_tag, cfg.count, cfg.data_seed);
                                g.train_count = cfg.train_count;
                                return g;
                            }()
                          : data::read_dataset_file(data_path);

    const SvdTruncation trunc = cfg.tn.trunc();
    tn::LayerMpo mpo;
    if (cfg.backend == "mpo") mpo = tn::build_layer_mpo(params, cfg.net, cfg.tn.chi_mpo, trunc);
    std::vector<io::TrajectoryRow> rows;
    std::vector<io::Series> series;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& s = d.samples[i];
        std::vector<double> mx;
        if (cfg.backend == "dense") {
            mx = oracle::evolve_dense(params, cfg.net, data::to_input_dense(s, cfg.net.n_sites), 1)
                     .values;
        } else {
            const tn::LayerMps state = data::to_input_state(s, cfg.net.n_sites);
            mx = cfg.backend == "mpo"
                     ? tn::evolve_trajectory_mpo(state, mpo, cfg.net.layers, cfg.tn.chi_mps, trunc)
                           .mx
                     : tn::evolve_trajectory_sweep(state, params, cfg.net, cfg.tn.chi_mps, trunc)
                           .mx;
        }
        io::Series line{"", s.label == 'A' ? "#1f77b4" : "#d62728", {}, {}};
        for (std::size_t l = 0; l < mx.size(); ++l) {
            rows.push_back({static_cast<int>(i), s.label, static_cast<int>(l), mx[l]});
            line.x.push_back(static_cast<double>(l));
            line.y.push_back(mx[l]);
        }
        series.push_back(std::move(line));
    }
    series.push_back({"class A", "#1f77b4", {}, {}});
    series.push_back({"class B", "#d62728", {}, {}});
    io::write_text_file(opts.out_dir + "/trajectory.csv", io::trajectory_csv(rows));
    io::write_text_file(opts.out_dir + "/trajectory.svg",
                        io::svg_line_plot("layer trajectories", "layer", "mx", series));
    std::cout << "wrote " << opts.out_dir << "/trajectory.csv (" << d.samples.size()
              << " states)\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const io::RunConfig& cfg, const std::string& params_path,
                 const std::string& centroids_path, const std::string& data_path,
                 double min_accuracy) {
    const ParamSet params = paramset_from_json(json::parse(io::read_text_file(params_path)));
    const json cj = json::parse(io::read_text_file(centroids_path));
    const train::Centroids centroids{cj.at("a").get<double>(), cj.at("b").get<double>()};
    if (std::abs(centroids.a - centroids.b) < 1e-6) {
        std::cerr << "degenerate centroids (|a-b| < 1e-6): network looks untrained\n";
        return 2;
    }
    data::Dataset d = data::read_dataset_file(data_path);
    // evaluate the validation split if one is marked, else everything
    const int first = d.validation_count() > 0 ? d.train_count : 0;
    std::vector<data::BlochSample> states(d.samples.begin() + first, d.samples.end());
    std::vector<int> ids(states.size());
    std::iota(ids.begin(), ids.end(), first);
    const auto outputs = train::evaluate_outputs(params, states, ids, eval_config(cfg),
                                                 rng::derive(cfg.training.seed, 0xe7));
    const auto cls = train::classify(outputs, centroids);
    for (std::size_t i = 0; i < outputs.size(); ++i)
        std::printf("state %d  label %c  m_S %+0.6f  predicted %c\n", outputs[i].state_id,
                    outputs[i].label, outputs[i].m, cls.predictions[i]);
    std::printf("accuracy %.4f  margin %+0.6f\n", cls.accuracy, cls.margin);
    (void)opts;
    return cls.accuracy >= min_accuracy ? 0 : 3;
}

int cmd_selftest() {
    // oracle equivalence: dense vs both tensor-network backends, N=4
    NetworkConfig cfg{4, 3, 0.1, "open"};
    rng::Stream s(20260826);
    for (int trial = 0; trial < 4; ++trial) {
        const ParamSet p =
            random_paramset(trial % 2 == 0 ? dataset1_mask() : dataset2_mask(), s);
        const double mx = s.uniform(-0.3, 0.3), my = s.uniform(-0.3, 0.3);
        const double mz = std::sqrt(0.25 - mx * mx - my * my);
        const Matrix rho = oracle::bloch_product_dm(mx, my, mz, cfg.n_sites);
        const auto dense = oracle::evolve_dense(p, cfg, rho, 1);
        const auto state = tn::product_state_mps(mx, my, mz, cfg.n_sites);
        const auto mpo = tn::build_layer_mpo(p, cfg, 16, {});
        const auto a = tn::evolve_trajectory_mpo(state, mpo, cfg.layers, 64, {});
        const auto b = tn::evolve_trajectory_sweep(state, p, cfg, 64, {});
        for (int l = 0; l <= cfg.layers; ++l) {
            if (std::abs(dense.values[l] - a.mx[l]) > 1e-9 ||
                std::abs(dense.values[l] - b.mx[l]) > 1e-9) {
                std::cerr << "selftest: backend mismatch at trial " << trial << " layer " << l
                          << "\n";
                return 2;
            }
        }
    }
    // sampler consistency: exact |+>^N gives deterministic +1 outcomes
    {
        const auto plus = tn::product_state_mps(0.5, 0.0, 0.0, 5);
        const auto est = sampling::estimate_magnetization(plus, 64, 99);
        if (std::abs(est.estimate - 0.5) > 1e-12) {
            std::cerr << "selftest: sampler failed on the x-polarized product state\n";
            return 2;
        }
    }
    // data invariants: labels balanced-ish, radius 1/2
    {
        const auto d = data::sample_dataset("II", 64, 11);
        for (const auto& smp : d.samples) {
            const double r2 = smp.mx() * smp.mx() + smp.my() * smp.my() + smp.mz() * smp.mz();
            if (std::abs(r2 - 0.25) > 1e-12) {
                std::cerr << "selftest: dataset state off the radius-1/2 sphere\n";
                return 2;
            }
        }
    }
    std::cout << "selftest passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layered quantum neural network simulator and trainer"};
    app.require_subcommand(1);
    CommonOpts opts;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "sample a labeled dataset");
    std::string gd_dataset = "I";
    int gd_count = 300, gd_train = -1;
    std::uint64_t gd_seed = 7;
    gen->add_option("--dataset", gd_dataset, "dataset family (I or II)");
    gen->add_option("--count", gd_count, "number of states");
    gen->add_option("--train-count", gd_train, "training-split size (default 5/6 of count)");
    gen->add_option("--seed", gd_seed, "sampling seed");
    gen->add_option("--out", opts.out_dir, "output directory");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON config file");
        sub->add_option("--set", opts.overrides, "override config field, key=value");
        sub->add_option("--out", opts.out_dir, "output directory");
    };

    // train
    auto* tr = app.add_subcommand("train", "optimize gate parameters");
    std::string tr_dataset = "I", tr_data;
    bool tr_reduced = false;
    int tr_resume = 0;
    tr->add_option("--dataset", tr_dataset, "preset family (I or II)");
    tr->add_flag("--reduced", tr_reduced, "use the reduced desk-scale preset");
    tr->add_option("--data", tr_data, "dataset JSON-lines file (default: sample fresh)");
    tr->add_option("--resume", tr_resume, "resume from checkpoint round");
    add_common(tr);

    // trajectory
    auto* tj = app.add_subcommand("trajectory", "record per-layer magnetization");
    std::string tj_dataset = "I", tj_params, tj_data;
    bool tj_reduced = true;
    tj->add_option("--dataset", tj_dataset, "preset family (I or II)");
    tj->add_flag("--reduced,!--full", tj_reduced, "reduced desk-scale preset (default)");
    tj->add_option("--params", tj_params, "ParamSet JSON (default: preset initialization)");
    tj->add_option("--data", tj_data, "dataset JSON-lines file (default: sample fresh)");
    add_common(tj);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "classify a dataset with trained parameters");
    std::string ev_dataset = "I", ev_params, ev_centroids, ev_data;
    bool ev_reduced = true;
    double ev_min_acc = 0.0;
    ev->add_option("--dataset", ev_dataset, "preset family (I or II)");
    ev->add_flag("--reduced,!--full", ev_reduced, "reduced desk-scale preset (default)");
    ev->add_option("--params", ev_params, "ParamSet JSON")->required();
    ev->add_option("--centroids", ev_centroids, "centroids JSON")->required();
    ev->add_option("--data", ev_data, "dataset JSON-lines file")->required();
    ev->add_option("--min-accuracy", ev_min_acc, "exit 3 below this accuracy");
    add_common(ev);

    // selftest
    app.add_subcommand("selftest", "run backend-equivalence and invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(opts, gd_dataset, gd_count, gd_train, gd_seed);
        if (tr->parsed())
            return cmd_train(opts, resolve_config(opts, tr_dataset, tr_reduced), tr_data,
                             tr_resume);
        if (tj->parsed())
            return cmd_trajectory(opts, resolve_config(opts, tj_dataset, tj_reduced), tj_params,
                                  tj_data);
        if (ev->parsed())
            return cmd_evaluate(opts, resolve_config(opts, ev_dataset, ev_reduced), ev_params,
                                ev_centroids, ev_data, ev_min_acc);
        return cmd_selftest();
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
