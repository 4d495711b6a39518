#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "arta/data.hpp"
#include "arta/model_io.hpp"
#include "support/synthetic.hpp"

#ifndef ARTA_CLI_PATH
#error "ARTA_CLI_PATH must point at the built binary"
#endif

using namespace arta;

namespace {

const std::string kDir = "/tmp/arta_cli_test";

int run_cli(const std::string& args) {
    std::string cmd = std::string(ARTA_CLI_PATH) + " " + args + " >> " + kDir + "/log.txt 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int count_data_rows(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        ++rows;
    }
    return rows;
}

// one small labeled fixture reused by every CLI test
struct Fixture {
    std::string data_csv = kDir + "/data.csv";
    std::string model = kDir + "/model.arta";
    std::string config = kDir + "/train.cfg";

    Fixture() {
        std::system(("mkdir -p " + kDir).c_str());
        synth::Config sc;
        sc.n = 420;
        sc.sensors = 2;
        sc.seed = 5;
        sc.anomaly_count = 6;
        sc.margin = 40;
        sc.spike_magnitude = 4.0;
        auto series = synth::make_series(sc);
        save_csv(series.ts, data_csv);
        std::ofstream cfg(config);
        cfg << "window=24\nhidden=8\nwarmup_epochs=4\njoint_epochs=3\nbatch=16\n"
               "lr=0.003\nseed=9\nstride=2\n";
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

bool train_once() {
    static bool trained = [] {
        Fixture& f = fixture();
        int rc = run_cli("train --data " + f.data_csv + " --config " + f.config + " --out " + f.model);
        return rc == 0;
    }();
    return trained;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train: writes a loadable model and a report") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    ModelParams m = load_model(f.model);
    CHECK(m.window == 24);
    CHECK(m.has_generator());
    std::string report = read_file(f.model + ".report.csv");
    CHECK(report.find("phase,epoch,l_d,l_g,mask_l1_mean,grad_check") != std::string::npos);
    CHECK(report.find("# seed=9") != std::string::npos);
    CHECK(report.find("warmup") != std::string::npos);
    CHECK(report.find("joint") != std::string::npos);
}

TEST_CASE("train: fixed seed reproduces the model file byte for byte") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string second = kDir + "/model2.arta";
    REQUIRE(run_cli("train --data " + f.data_csv + " --config " + f.config + " --out " + second) == 0);
    CHECK(read_file(f.model) == read_file(second));
}

TEST_CASE("train: ablation no_generator leaves the l_g column empty") {
    Fixture& f = fixture();
    std::string out = kDir + "/model_ng.arta";
    REQUIRE(run_cli("train --data " + f.data_csv + " --config " + f.config + " --out " + out +
                    " --ablation no_generator") == 0);
    ModelParams m = load_model(out);
    CHECK_FALSE(m.has_generator());
    std::istringstream report(read_file(out + ".report.csv"));
    std::string line;
    while (std::getline(report, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'p') continue;
        // phase,epoch,l_d,l_g,... -> the fourth field is empty
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 + 1);
        std::size_t c3 = line.find(',', c2 + 1);
        std::size_t c4 = line.find(',', c3 + 1);
        CHECK(c4 == c3 + 1);
    }
}

TEST_CASE("train: unknown config key exits 2 naming the key") {
    Fixture& f = fixture();
    std::string bad = kDir + "/bad.cfg";
    std::ofstream(bad) << "window=24\nwat=1\n";
    CHECK(run_cli("train --data " + f.data_csv + " --config " + bad + " --out /tmp/x.arta") == 2);
    CHECK(run_cli("train --data /missing.csv --out /tmp/x.arta") == 2);
}

TEST_CASE("score: one row per input timestamp") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string scores = kDir + "/scores.csv";
    REQUIRE(run_cli("score --model " + f.model + " --data " + f.data_csv + " --out " + scores) == 0);
    CHECK(count_data_rows(read_file(scores)) == 420);
}

TEST_CASE("score: generator strategies on a detector-only model exit 2") {
    Fixture& f = fixture();
    std::string out = kDir + "/model_ng2.arta";
    REQUIRE(run_cli("train --data " + f.data_csv + " --config " + f.config + " --out " + out +
                    " --ablation no_generator") == 0);
    CHECK(run_cli("score --model " + out + " --data " + f.data_csv +
                  " --strategy mask_weighted --out /tmp/never.csv") == 2);
    CHECK(run_cli("score --model " + out + " --data " + f.data_csv +
                  " --strategy detector --out " + kDir + "/ng_scores.csv") == 0);
}

TEST_CASE("eval: metrics emitted; single-class labels exit 4") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string scores = kDir + "/scores_eval.csv";
    REQUIRE(run_cli("score --model " + f.model + " --data " + f.data_csv + " --out " + scores) == 0);
    std::string metrics = kDir + "/metrics.csv";
    REQUIRE(run_cli("eval --scores " + scores + " --out " + metrics) == 0);
    std::string text = read_file(metrics);
    CHECK(text.find("auc_roc,") != std::string::npos);
    CHECK(text.find("vus_pr,") != std::string::npos);

    // strip labels to all-zero and expect the evaluation-undefined exit
    TimeSeries flat = load_csv(f.data_csv, true);
    for (auto& l : flat.labels) l = 0;
    std::string flat_csv = kDir + "/flat.csv";
    save_csv(flat, flat_csv);
    std::string flat_scores = kDir + "/flat_scores.csv";
    REQUIRE(run_cli("score --model " + f.model + " --data " + flat_csv + " --out " + flat_scores) == 0);
    CHECK(run_cli("eval --scores " + flat_scores + " --out /tmp/never2.csv") == 4);
}

TEST_CASE("corrupt: preserves labels and honors the seed") {
    Fixture& f = fixture();
    std::string out1 = kDir + "/corr1.csv";
    std::string out2 = kDir + "/corr2.csv";
    REQUIRE(run_cli("corrupt --data " + f.data_csv + " --kind colored --snr-db 15 --seed 3 --out " + out1) == 0);
    REQUIRE(run_cli("corrupt --data " + f.data_csv + " --kind colored --snr-db 15 --seed 3 --out " + out2) == 0);
    CHECK(read_file(out1) == read_file(out2));
    TimeSeries orig = load_csv(f.data_csv, true);
    TimeSeries corr = load_csv(out1, true);
    REQUIRE(corr.labels.size() == orig.labels.size());
    for (std::size_t i = 0; i < corr.labels.size(); ++i) CHECK(corr.labels[i] == orig.labels[i]);
}

TEST_CASE("sweep: clean row plus one row per severity") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string out = kDir + "/sweep.csv";
    REQUIRE(run_cli("sweep --model " + f.model + " --data " + f.data_csv +
                    " --noise salt_pepper --grid 0.01,0.1,0.2 --seed 4 --I 20 --J 3 --lmax 6 --out " +
                    out) == 0);
    std::string text = read_file(out);
    CHECK(count_data_rows(text) == 4);
    CHECK(text.find("clean") != std::string::npos);
}

TEST_CASE("masks: per-window export with values in (0,1)") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string out = kDir + "/masks.csv";
    REQUIRE(run_cli("masks --model " + f.model + " --data " + f.data_csv + " --out " + out) == 0);
    std::istringstream is(read_file(out));
    std::string line;
    int rows = 0;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            CHECK(line == "window_start,timestamp,mask_value");
            header = true;
            continue;
        }
        auto cells = detail::split_csv_line(line);
        REQUIRE(cells.size() == 3);
        double v = detail::parse_number(cells[2], 0, 3);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        ++rows;
    }
    // non-overlapping windows of length 24 over 420 rows: 17 windows x 24
    CHECK(rows == 17 * 24);
}

TEST_CASE("eval: surface export carries both grids at full resolution") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string scores = kDir + "/scores_surface.csv";
    REQUIRE(run_cli("score --model " + f.model + " --data " + f.data_csv + " --out " + scores) == 0);
    std::string surface = kDir + "/surface.csv";
    REQUIRE(run_cli("eval --scores " + scores + " --I 10 --J 3 --lmax 6 --out " + kDir +
                    "/m2.csv --surface " + surface) == 0);
    CHECK(count_data_rows(read_file(surface)) == 2 * 11 * 4);
}

TEST_CASE("stability: zero trials yields an empty report with exit 0") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string out = kDir + "/stab0.csv";
    REQUIRE(run_cli("stability --model " + f.model + " --data " + f.data_csv +
                    " --trials 0 --out " + out) == 0);
    CHECK(count_data_rows(read_file(out)) == 0);
}

TEST_CASE("stability: report carries deviation, bound and ratio columns") {
    REQUIRE(train_once());
    Fixture& f = fixture();
    std::string out = kDir + "/stab.csv";
    REQUIRE(run_cli("stability --model " + f.model + " --data " + f.data_csv +
                    " --eps 0.1 --trials 50 --pairs 100 --seed 8 --out " + out) == 0);
    std::string text = read_file(out);
    CHECK(count_data_rows(text) == 50);
    CHECK(text.find("violation_rate=") != std::string::npos);
}

}  // TEST_SUITE
