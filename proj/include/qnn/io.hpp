#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnn/training.hpp"

// Run artifacts: CSV emitters, a minimal SVG line-plot writer, optimizer
// checkpoints and the resolved run configuration. All files carry a schema
// version so downstream tooling can detect format changes.

namespace qnn::io {

inline constexpr const char* kSchemaVersion = "qnn-1";

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

// ---------- CSV ----------

inline std::string loss_history_csv(const std::vector<train::TrainRound>& rounds) {
    std::ostringstream ss;
    ss << "# schema " << kSchemaVersion << "\n";
    ss << "round,training_loss,validation_loss\n";
    for (const auto& r : rounds)
        ss << r.round << ',' << format_double(r.training_loss) << ','
           << format_double(r.validation_loss) << '\n';
    return ss.str();
}

struct TrajectoryRow {
    int state_id = 0;
    char label = 'A';
    int layer = 0;
    double mx = 0.0;
};

inline std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::ostringstream ss;
    ss << "# schema " << kSchemaVersion << "\n";
    ss << "state_id,label,layer,mx\n";
    for (const auto& r : rows)
        ss << r.state_id << ',' << r.label << ',' << r.layer << ',' << format_double(r.mx) << '\n';
    return ss.str();
}

struct ShotRow {
    int state_id = 0;
    int shot = 0;
    int site = 0;
    int outcome = 0;  // +1 / -1
};

inline std::string shots_csv(const std::vector<ShotRow>& rows) {
    std::ostringstream ss;
    ss << "# schema " << kSchemaVersion << "\n";
    ss << "state_id,shot,site,outcome\n";
    for (const auto& r : rows)
        ss << r.state_id << ',' << r.shot << ',' << r.site << ',' << r.outcome << '\n';
    return ss.str();
}

// ---------- SVG line plots ----------

struct Series {
    std::string name;
    std::string color;
    std::vector<double> x;
    std::vector<double> y;
};

// Axes, tick labels, one polyline per series and a legend. Enough for loss
// curves and layer trajectories without pulling in a plotting library.
inline std::string svg_line_plot(const std::string& title, const std::string& x_label,
                                 const std::string& y_label, const std::vector<Series>& series) {
    const double width = 720, height = 480;
    const double ml = 70, mr = 170, mt = 50, mb = 55;  // margins
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                x_min = x_max = s.x[i];
                y_min = y_max = s.y[i];
                first = false;
            }
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            y_min = std::min(y_min, s.y[i]);
            y_max = std::max(y_max, s.y[i]);
        }
    if (x_max - x_min < 1e-12) x_max = x_min + 1;
    if (y_max - y_min < 1e-12) y_max = y_min + 1;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return mt + plot_h - (y - y_min) / (y_max - y_min) * plot_h; };

    std::ostringstream ss;
    ss << std::setprecision(6);
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    ss << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    ss << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
       << title << "</text>\n";
    // axes
    ss << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
       << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    ss << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
       << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = x_min + (x_max - x_min) * t / 4.0;
        const double fy = y_min + (y_max - y_min) * t / 4.0;
        ss << "<text x=\"" << px(fx) << "\" y=\"" << mt + plot_h + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << std::setprecision(4) << fx
           << "</text>\n";
        ss << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fy << "</text>\n"
           << std::setprecision(6);
    }
    ss << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    ss << "<text x=\"18\" y=\"" << mt + plot_h / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << mt + plot_h / 2
       << ")\">" << y_label << "</text>\n";
    // series
    int legend_row = 0;
    for (const auto& s : series) {
        ss << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            ss << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        ss << "\"/>\n";
        if (!s.name.empty()) {
            const double ly = mt + 14 + 18 * legend_row++;
            ss << "<line x1=\"" << ml + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\""
               << ml + plot_w + 36 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
               << "\" stroke-width=\"2\"/>\n";
            ss << "<text x=\"" << ml + plot_w + 42 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
               << s.name << "</text>\n";
        }
    }
    ss << "</svg>\n";
    return ss.str();
}

// ---------- optimizer / checkpoint JSON ----------

inline nlohmann::json optimizer_to_json(const train::OptimizerState& s) {
    return {{"schema", kSchemaVersion}, {"round", s.round}, {"m", s.m}, {"v", s.v}};
}

inline train::OptimizerState optimizer_from_json(const nlohmann::json& j) {
    train::OptimizerState s(j.at("m").size());
    s.round = j.at("round").get<int>();
    s.m = j.at("m").get<std::vector<double>>();
    s.v = j.at("v").get<std::vector<double>>();
    if (s.v.size() != s.m.size())
        throw std::invalid_argument("optimizer_from_json: moment length mismatch");
    return s;
}

inline void write_checkpoint(const std::string& dir, int round, const ParamSet& params,
                             const train::OptimizerState& opt) {
    write_text_file(dir + "/checkpoint_" + std::to_string(round) + "_params.json",
                    paramset_to_json(params).dump(2) + "\n");
    write_text_file(dir + "/checkpoint_" + std::to_string(round) + "_optimizer.json",
                    optimizer_to_json(opt).dump(2) + "\n");
}

// ---------- run configuration ----------

struct RunConfig {
    std::string dataset_tag = "I";  // "I" | "II"
    int count = 300;
    int train_count = 250;
    std::uint64_t data_seed = 7;

    NetworkConfig net{50, 10, 0.1, "open"};
    train::TnConfig tn;
    train::LossConfig loss;
    std::string backend = "mpo";
    int threads = 1;

    train::NadamConfig nadam;
    train::TrainConfig training;
    std::string init = "preset";  // "preset" | "random" | path to ParamSet JSON
};

inline nlohmann::json runconfig_to_json(const RunConfig& c) {
    return {{"schema", kSchemaVersion},
            {"dataset", c.dataset_tag},
            {"count", c.count},
            {"train_count", c.train_count},
            {"data_seed", c.data_seed},
            {"n_sites", c.net.n_sites},
            {"layers", c.net.layers},
            {"dt", c.net.dt},
            {"boundary", c.net.boundary},
            {"chi_mps", c.tn.chi_mps},
            {"chi_mpo", c.tn.chi_mpo},
            {"rel_cutoff", c.tn.rel_cutoff},
            {"margin", c.loss.margin},
            {"shots", c.loss.shots},
            {"exact", c.loss.exact},
            {"backend", c.backend},
            {"threads", c.threads},
            {"beta1", c.nadam.beta1},
            {"beta2", c.nadam.beta2},
            {"lambda", c.nadam.lambda},
            {"delta", c.nadam.delta},
            {"rounds", c.training.rounds},
            {"minibatch", c.training.minibatch},
            {"eps", c.training.eps},
            {"seed", c.training.seed},
            {"fresh_shots", c.training.fresh_shots},
            {"checkpoint_cadence", c.training.checkpoint_cadence},
            {"init", c.init}};
}

inline RunConfig runconfig_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.dataset_tag = j.value("dataset", c.dataset_tag);
    c.count = j.value("count", c.count);
    c.train_count = j.value("train_count", c.train_count);
    c.data_seed = j.value("data_seed", c.data_seed);
    c.net.n_sites = j.value("n_sites", c.net.n_sites);
    c.net.layers = j.value("layers", c.net.layers);
    c.net.dt = j.value("dt", c.net.dt);
    c.net.boundary = j.value("boundary", c.net.boundary);
    c.tn.chi_mps = j.value("chi_mps", c.tn.chi_mps);
    c.tn.chi_mpo = j.value("chi_mpo", c.tn.chi_mpo);
    c.tn.rel_cutoff = j.value("rel_cutoff", c.tn.rel_cutoff);
    c.loss.margin = j.value("margin", c.loss.margin);
    c.loss.shots = j.value("shots", c.loss.shots);
    c.loss.exact = j.value("exact", c.loss.exact);
    c.backend = j.value("backend", c.backend);
    c.threads = j.value("threads", c.threads);
    c.nadam.beta1 = j.value("beta1", c.nadam.beta1);
    c.nadam.beta2 = j.value("beta2", c.nadam.beta2);
    c.nadam.lambda = j.value("lambda", c.nadam.lambda);
    c.nadam.delta = j.value("delta", c.nadam.delta);
    c.training.rounds = j.value("rounds", c.training.rounds);
    c.training.minibatch = j.value("minibatch", c.training.minibatch);
    c.training.eps = j.value("eps", c.training.eps);
    c.training.seed = j.value("seed", c.training.seed);
    c.training.fresh_shots = j.value("fresh_shots", c.training.fresh_shots);
    c.training.checkpoint_cadence = j.value("checkpoint_cadence", c.training.checkpoint_cadence);
    c.init = j.value("init", c.init);
    return c;
}

// Override a single field with `key=value`, where value is parsed as JSON
// when possible (numbers, booleans) and as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& kv) {
    const auto pos = kv.find('=');
    if (pos == std::string::npos || pos == 0)
        throw std::invalid_argument("override must be key=value: " + kv);
    const std::string key = kv.substr(0, pos);
    const std::string value = kv.substr(pos + 1);
    if (!j.contains(key)) throw std::invalid_argument("unknown config key: " + key);
    const nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded() || parsed.is_string())
        j[key] = value;
    else
        j[key] = parsed;
}

// Published-experiment defaults per dataset; a reduced flavor for desk-scale runs.
inline RunConfig preset_config(const std::string& dataset, bool reduced) {
    RunConfig c;
    c.dataset_tag = dataset;
    if (dataset == "I") {
        c.nadam = {0.75, 0.98, 0.05, 1e-7};
        c.loss.margin = 0.25;
        c.training.rounds = 50;
        c.training.minibatch = 25;
    } else if (dataset == "II") {
        c.nadam = {0.85, 0.9995, 0.05, 1e-7};
        c.loss.margin = 0.35;
        c.training.rounds = 20;
        c.training.minibatch = 23;
    } else {
        throw std::invalid_argument("unknown dataset tag: " + dataset);
    }
    c.net = {50, 10, 0.1, "open"};
    c.tn.chi_mps = 48;
    c.tn.chi_mpo = 16;
    c.loss.shots = 5000;
    c.training.eps = 0.1;
    if (reduced) {
        c.net = {12, 6, 0.1, "open"};
        c.tn.chi_mps = 24;
        c.count = 80;
        c.train_count = 60;
        c.loss.shots = 2000;
        c.training.rounds = std::min(c.training.rounds, 50);
        c.training.minibatch = std::min(c.training.minibatch, 20);
    }
    return c;
}

}  // namespace qnn::io
