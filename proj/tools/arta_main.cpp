// arta: train / score / eval / corrupt / sweep / stability over CSV
// time-series. Every command is deterministic given --seed, and the seed
// is echoed as a comment in every output CSV.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure,
// 4 evaluation undefined.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arta/config.hpp"
#include "arta/corruption.hpp"
#include "arta/data.hpp"
#include "arta/metrics.hpp"
#include "arta/model.hpp"
#include "arta/model_io.hpp"
#include "arta/scoring.hpp"
#include "arta/stability.hpp"
#include "arta/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitEval = 4;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// atomic CSV write: temp file + rename
class CsvOut {
  public:
    CsvOut(const std::string& path, std::uint64_t seed) : path_(path), tmp_(path + ".tmp") {
        out_.open(tmp_);
        if (!out_) throw arta::ConfigError("cannot write file: " + path);
        out_ << "# seed=" << seed << "\n";
    }
    template <typename T>
    CsvOut& operator<<(const T& v) {
        out_ << v;
        return *this;
    }
    void close() {
        out_.flush();
        if (!out_) throw arta::ConfigError("write failed: " + tmp_);
        out_.close();
        if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
            throw arta::ConfigError("cannot move output into place: " + path_);
    }

  private:
    std::string path_, tmp_;
    std::ofstream out_;
};

void write_report_csv(const arta::TrainReport& report, const std::string& path, std::uint64_t seed) {
    CsvOut out(path, seed);
    out << "phase,epoch,l_d,l_g,mask_l1_mean,grad_check\n";
    for (const auto& r : report.records) {
        out << r.phase << "," << r.epoch << "," << fmt(r.mean_ld) << ",";
        if (r.mean_lg) out << fmt(*r.mean_lg);
        out << ",";
        if (r.mean_mask_l1) out << fmt(*r.mean_mask_l1);
        out << ",";
        if (r.grad_check) out << fmt(*r.grad_check);
        out << "\n";
    }
    out.close();
}

struct ScoreColumn {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;  // may be empty
};

// scores CSV written by cmd_score: timestamp,score[,label]
ScoreColumn load_scores_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw arta::ConfigError("cannot open scores file: " + path);
    ScoreColumn out;
    std::string line;
    bool header_seen = false;
    bool has_label = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto cells = arta::detail::split_csv_line(line);
        if (!header_seen) {
            header_seen = true;
            if (cells.size() < 2 || arta::detail::lower(cells[1]) != "score")
                throw arta::ParseError(path + ": expected header timestamp,score[,label]");
            has_label = cells.size() >= 3 && arta::detail::lower(cells[2]) == "label";
            continue;
        }
        out.scores.push_back(arta::detail::parse_number(cells[1], lineno, 2));
        if (has_label) {
            double v = arta::detail::parse_number(cells[2], lineno, 3);
            if (v != 0.0 && v != 1.0) throw arta::ParseError(path + ": label must be 0 or 1");
            out.labels.push_back(static_cast<std::uint8_t>(v));
        }
    }
    if (out.scores.empty()) throw arta::ParseError(path + ": no score rows");
    return out;
}

struct EvalNumbers {
    double auc_roc = 0.0, auc_pr = 0.0, vus_pr = 0.0, vus_roc = 0.0;
    double vus_pr_raw = 0.0, vus_roc_raw = 0.0;
    double best_f1 = 0.0;
};

EvalNumbers evaluate(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                     int I, int J, int l_max) {
    EvalNumbers e;
    e.auc_roc = arta::auc_roc(scores, labels, I);
    e.auc_pr = arta::auc_pr(scores, labels, I);
    auto vpr = arta::vus(scores, labels, arta::VusMode::pr, I, J, l_max);
    auto vroc = arta::vus(scores, labels, arta::VusMode::roc, I, J, l_max);
    e.vus_pr = vpr.volume;
    e.vus_roc = vroc.volume;
    e.vus_pr_raw = vpr.raw_sum;
    e.vus_roc_raw = vroc.raw_sum;
    auto norm = arta::minmax_normalize(scores);
    for (int i = 0; i <= I; ++i) {
        auto c = arta::confusion(norm, labels, static_cast<double>(i) / I, 0);
        auto pr = arta::pr_f1(c.tp, c.fp, c.fn);
        e.best_f1 = std::max(e.best_f1, pr.f1);
    }
    return e;
}

int run(int argc, char** argv) {
    CLI::App app{"adversarially trained time-series anomaly detection"};
    app.require_subcommand(1);

    // --- train ---
    auto* train = app.add_subcommand("train", "train a model on the leading split of a series");
    std::string t_data, t_config, t_out, t_ablation, t_report;
    std::optional<std::uint64_t> t_seed;
    train->add_option("--data", t_data, "input CSV")->required();
    train->add_option("--config", t_config, "key=value config file");
    train->add_option("--out", t_out, "output model path")->required();
    train->add_option("--ablation", t_ablation, "no_generator|no_adversarial|no_sparsity|no_baseline");
    train->add_option("--report", t_report, "training report CSV (default <out>.report.csv)");
    train->add_option("--seed", t_seed, "master seed (overrides config)");

    // --- score ---
    auto* score = app.add_subcommand("score", "score a series with a trained model");
    std::string s_model, s_data, s_strategy = "detector", s_out = "scores.csv";
    score->add_option("--model", s_model, "model file")->required();
    score->add_option("--data", s_data, "input CSV")->required();
    score->add_option("--strategy", s_strategy, "detector|mask_weighted|sensitivity_gap");
    score->add_option("--out", s_out, "output scores CSV");

    // --- eval ---
    auto* eval = app.add_subcommand("eval", "compute detection metrics from scores");
    std::string e_scores, e_labels_from, e_out = "metrics.csv", e_metric = "all";
    int e_i = 50, e_j = 10, e_lmax = 20;
    eval->add_option("--scores", e_scores, "scores CSV from the score command")->required();
    eval->add_option("--labels-from", e_labels_from, "labeled data CSV (optional if scores carry labels)");
    eval->add_option("--metric", e_metric, "all|auc_roc|auc_pr|vus_pr|vus_roc|f1");
    eval->add_option("--I", e_i, "threshold count");
    eval->add_option("--J", e_j, "tolerance count");
    eval->add_option("--lmax", e_lmax, "max tolerance");
    eval->add_option("--out", e_out, "output metrics CSV");
    std::string e_surface;
    eval->add_option("--surface", e_surface, "also write the VUS-PR surface grids to this CSV");

    // --- corrupt ---
    auto* corrupt = app.add_subcommand("corrupt", "write a noise-corrupted copy of a series");
    std::string c_data, c_out, c_kind;
    double c_snr = 20.0, c_p = 0.05, c_rho = 0.5;
    std::uint64_t c_seed = 0;
    corrupt->add_option("--data", c_data, "input CSV")->required();
    corrupt->add_option("--kind", c_kind, "gaussian|salt_pepper|colored")->required();
    corrupt->add_option("--snr-db", c_snr, "target SNR in dB (gaussian/colored)");
    corrupt->add_option("--p", c_p, "corruption probability (salt_pepper)");
    corrupt->add_option("--rho", c_rho, "AR(1) coefficient (colored)");
    corrupt->add_option("--seed", c_seed, "noise seed");
    corrupt->add_option("--out", c_out, "output CSV")->required();

    // --- sweep ---
    auto* sweep = app.add_subcommand("sweep", "degradation sweep over noise severities");
    std::string w_model, w_data, w_noise, w_out = "sweep.csv", w_grid;
    double w_rho = 0.5;
    std::uint64_t w_seed = 0;
    int w_i = 50, w_j = 10, w_lmax = 20;
    sweep->add_option("--model", w_model, "model file")->required();
    sweep->add_option("--data", w_data, "labeled data CSV")->required();
    sweep->add_option("--noise", w_noise, "gaussian|salt_pepper|colored")->required();
    sweep->add_option("--grid", w_grid, "comma-separated severities (p or SNR dB)");
    sweep->add_option("--rho", w_rho, "AR(1) coefficient (colored)");
    sweep->add_option("--seed", w_seed, "master seed");
    sweep->add_option("--I", w_i, "threshold count");
    sweep->add_option("--J", w_j, "tolerance count");
    sweep->add_option("--lmax", w_lmax, "max tolerance");
    sweep->add_option("--out", w_out, "output CSV");

    // --- masks ---
    auto* masks = app.add_subcommand("masks", "export generator masks per window");
    std::string m_model, m_data, m_out = "masks.csv";
    int m_stride = 0;  // 0: one window length (non-overlapping)
    masks->add_option("--model", m_model, "model file")->required();
    masks->add_option("--data", m_data, "input CSV")->required();
    masks->add_option("--stride", m_stride, "window stride (default: window length)");
    masks->add_option("--out", m_out, "output CSV");

    // --- stability ---
    auto* stab = app.add_subcommand("stability", "empirical score-stability report");
    std::string b_model, b_data, b_out = "stability.csv";
    double b_eps = 0.1;
    int b_trials = 1000, b_pairs = 1000;
    std::uint64_t b_seed = 0;
    stab->add_option("--model", b_model, "model file")->required();
    stab->add_option("--data", b_data, "data CSV")->required();
    stab->add_option("--eps", b_eps, "perturbation bound (inf norm)");
    stab->add_option("--trials", b_trials, "number of trials");
    stab->add_option("--pairs", b_pairs, "pairs for the Lipschitz estimate");
    stab->add_option("--seed", b_seed, "master seed");
    stab->add_option("--out", b_out, "output CSV");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed()) {
        arta::TrainConfig cfg;
        if (!t_config.empty()) apply_config(cfg, arta::load_config_file(t_config));
        if (t_seed) cfg.seed = *t_seed;
        if (!t_ablation.empty()) apply_ablation(cfg, t_ablation);
        cfg.validate();
        arta::TimeSeries ts = arta::load_csv(t_data, false);
        auto [model, report] = arta::joint_train(cfg, ts);
        arta::save_model(model, t_out);
        write_report_csv(report, t_report.empty() ? t_out + ".report.csv" : t_report, cfg.seed);
        std::cout << "trained " << (model.has_generator() ? "full" : "detector-only")
                  << " model on " << ts.n << " rows, " << ts.f << " sensors -> " << t_out << "\n";
        return kExitOk;
    }

    if (score->parsed()) {
        arta::ModelParams model = arta::load_model(s_model);
        arta::Strategy strategy = arta::strategy_from_string(s_strategy);
        arta::TimeSeries ts = arta::load_csv(s_data, false);
        arta::ScoreSeries ss = arta::score_series(model, ts, strategy);
        CsvOut out(s_out, model.seed);
        out << "timestamp,score" << (ts.has_labels() ? ",label" : "") << "\n";
        for (int i = 0; i < ts.n; ++i) {
            out << i << "," << fmt(ss.s[static_cast<std::size_t>(i)]);
            if (ts.has_labels()) out << "," << static_cast<int>(ts.labels[static_cast<std::size_t>(i)]);
            out << "\n";
        }
        out.close();
        return kExitOk;
    }

    if (eval->parsed()) {
        ScoreColumn sc = load_scores_csv(e_scores);
        std::vector<std::uint8_t> labels = sc.labels;
        if (!e_labels_from.empty()) {
            arta::TimeSeries ts = arta::load_csv(e_labels_from, true);
            labels = ts.labels;
        }
        if (labels.empty()) throw arta::ConfigError("no labels: pass --labels-from or score labeled data");
        if (labels.size() != sc.scores.size())
            throw arta::ConfigError("labels and scores have different lengths");
        EvalNumbers e = evaluate(sc.scores, labels, e_i, e_j, e_lmax);
        CsvOut out(e_out, 0);
        out << "metric,value,I,J,lmax\n";
        auto emit = [&](const std::string& name, double v) {
            out << name << "," << fmt(v) << "," << e_i << "," << e_j << "," << e_lmax << "\n";
            std::cout << name << " = " << fmt(v) << "\n";
        };
        if (e_metric == "all" || e_metric == "auc_roc") emit("auc_roc", e.auc_roc);
        if (e_metric == "all" || e_metric == "auc_pr") emit("auc_pr", e.auc_pr);
        if (e_metric == "all" || e_metric == "vus_pr") emit("vus_pr", e.vus_pr);
        if (e_metric == "all" || e_metric == "vus_roc") emit("vus_roc", e.vus_roc);
        if (e_metric == "all") {
            emit("vus_pr_raw", e.vus_pr_raw);
            emit("vus_roc_raw", e.vus_roc_raw);
        }
        if (e_metric == "all" || e_metric == "f1") emit("best_f1", e.best_f1);
        out.close();
        if (!e_surface.empty()) {
            auto vpr = arta::vus(sc.scores, labels, arta::VusMode::pr, e_i, e_j, e_lmax);
            CsvOut sout(e_surface, 0);
            sout << "grid,threshold_i,tolerance_j,value\n";
            for (int i = 0; i <= vpr.surface.I; ++i)
                for (int j = 0; j <= vpr.surface.J; ++j) {
                    sout << "precision," << i << "," << j << "," << fmt(vpr.surface.a(i, j)) << "\n";
                    sout << "recall," << i << "," << j << "," << fmt(vpr.surface.b(i, j)) << "\n";
                }
            sout.close();
        }
        return kExitOk;
    }

    if (corrupt->parsed()) {
        arta::TimeSeries ts = arta::load_csv(c_data, false);
        arta::NoiseSpec spec;
        spec.kind = arta::noise_kind_from_string(c_kind);
        spec.snr_db = c_snr;
        spec.p = c_p;
        spec.rho = c_rho;
        spec.seed = c_seed;
        arta::TimeSeries out_ts = arta::corrupt(ts, spec);
        arta::save_csv(out_ts, c_out, "seed=" + std::to_string(c_seed));
        return kExitOk;
    }

    if (sweep->parsed()) {
        arta::ModelParams model = arta::load_model(w_model);
        arta::TimeSeries ts = arta::load_csv(w_data, true);
        arta::NoiseKind kind = arta::noise_kind_from_string(w_noise);
        std::vector<double> grid;
        if (!w_grid.empty()) {
            for (const auto& cell : arta::detail::split_csv_line(w_grid))
                grid.push_back(arta::detail::parse_number(cell, 0, 0));
        } else {
            grid = kind == arta::NoiseKind::salt_pepper ? arta::default_p_grid()
                                                        : arta::default_snr_grid();
        }
        arta::Rng master(w_seed);
        CsvOut out(w_out, w_seed);
        out << "noise,severity,vus_pr,auc_roc,point_seed\n";
        auto eval_series = [&](const arta::TimeSeries& series) {
            arta::ScoreSeries ss = arta::score_series(model, series, arta::Strategy::detector);
            auto vpr = arta::vus(ss.s, series.labels, arta::VusMode::pr, w_i, w_j, w_lmax);
            double roc = arta::auc_roc(ss.s, series.labels, w_i);
            return std::pair<double, double>(vpr.volume, roc);
        };
        auto [clean_vus, clean_roc] = eval_series(ts);
        out << w_noise << ",clean," << fmt(clean_vus) << "," << fmt(clean_roc) << ",\n";
        for (std::size_t k = 0; k < grid.size(); ++k) {
            std::uint64_t point_seed = master.split("sweep.point." + std::to_string(k)).next_u64();
            arta::NoiseSpec spec;
            spec.kind = kind;
            spec.seed = point_seed;
            spec.rho = w_rho;
            if (kind == arta::NoiseKind::salt_pepper) spec.p = grid[k];
            else spec.snr_db = grid[k];
            arta::TimeSeries corrupted = arta::corrupt(ts, spec);
            auto [v, r] = eval_series(corrupted);
            out << w_noise << "," << fmt(grid[k]) << "," << fmt(v) << "," << fmt(r) << ","
                << point_seed << "\n";
        }
        out.close();
        return kExitOk;
    }

    if (masks->parsed()) {
        arta::ModelParams model = arta::load_model(m_model);
        if (!model.has_generator())
            throw arta::ConfigError("mask export requires a model with a generator");
        arta::TimeSeries ts = arta::load_csv(m_data, false);
        model.normalizer.apply(ts);
        int stride = m_stride > 0 ? m_stride : model.window;
        auto windows = arta::make_windows(ts, model.window, stride);
        CsvOut out(m_out, model.seed);
        out << "window_start,timestamp,mask_value\n";
        for (const auto& w : windows) {
            arta::TemporalMask mask = arta::generate_mask(*model.generator, w);
            for (int t = 0; t < model.window; ++t)
                out << w.start_index << "," << (w.start_index + t) << ","
                    << fmt(mask.values[static_cast<std::size_t>(t)]) << "\n";
        }
        out.close();
        return kExitOk;
    }

    if (stab->parsed()) {
        arta::ModelParams model = arta::load_model(b_model);
        arta::TimeSeries raw = arta::load_csv(b_data, false);
        arta::TimeSeries ts = raw;
        model.normalizer.apply(ts);
        std::vector<arta::Window> windows = arta::make_windows(ts, model.window, model.window / 2 + 1);
        arta::Rng rng(b_seed);
        CsvOut out(b_out, b_seed);
        if (b_trials == 0) {
            out << "trial,deviation,bound,ratio\n";
            out.close();
            return kExitOk;
        }
        arta::Rng lr = rng.split("lipschitz");
        auto est = arta::estimate_lipschitz(model, windows, b_pairs, b_eps, lr);
        arta::Rng tr = rng.split("trials");
        auto rep = arta::check_masked_stability(model, windows, b_eps, b_trials, est.l_hat, tr);
        out << "# l_hat=" << fmt(est.l_hat) << " eps=" << fmt(b_eps)
            << " violation_rate=" << fmt(rep.violation_rate) << "\n";
        out << "trial,deviation,bound,ratio\n";
        for (std::size_t i = 0; i < rep.trials.size(); ++i)
            out << i << "," << fmt(rep.trials[i].deviation) << "," << fmt(rep.trials[i].bound) << ","
                << fmt(rep.trials[i].ratio) << "\n";
        out.close();
        std::cout << "l_hat = " << fmt(est.l_hat) << ", violation_rate = " << fmt(rep.violation_rate)
                  << "\n";
        return kExitOk;
    }

    return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const arta::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const arta::EvalError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return kExitEval;
    } catch (const arta::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const arta::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
