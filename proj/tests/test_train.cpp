#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/train.hpp"
#include "oracles.hpp"

using namespace mvsgnn;

namespace {

std::string tmp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "mvsgnn_train_test";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TrainConfig tiny_config(const std::string& strategy, const std::string& out_name) {
    TrainConfig cfg;
    cfg.synth_blocks = 3;
    cfg.synth_nodes_per_block = 12;
    cfg.synth_feature_dim = 6;
    cfg.hidden_dim = 8;
    cfg.layers = 2;
    cfg.strategy = strategy;
    cfg.batch_size = 8;
    cfg.max_iters = 8;
    cfg.k = 4;
    cfg.seed = 3;
    cfg.out = tmp_path(out_name);
    return cfg;
}

} // namespace

TEST_CASE("f1_micro: single-label equals accuracy") {
    CHECK(f1_micro(std::vector<Index>{1, 2, 0}, std::vector<Index>{1, 2, 0}) == 1.0);
    CHECK(f1_micro(std::vector<Index>{1, 1, 1}, std::vector<Index>{0, 0, 0}) == 0.0);
    CHECK(f1_micro(std::vector<Index>{1, 0}, std::vector<Index>{1, 1}) == 0.5);
}

TEST_CASE("f1_micro: multi-label counts TP/FP/FN") {
    // TP = 2, FP = 1, FN = 1 -> 2*2 / (2*2 + 1 + 1) = 2/3.
    DenseMatrix pred(2, 2), truth(2, 2);
    pred(0, 0) = 1.0;
    pred(0, 1) = 1.0;
    pred(1, 0) = 1.0;
    truth(0, 0) = 1.0;
    truth(0, 1) = 1.0;
    truth(1, 1) = 1.0;
    CHECK(f1_micro(pred, truth) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("config: json parse, overrides and rejection of unknown fields") {
    TrainConfig cfg;
    apply_json_overrides(cfg, R"({"strategy":"mvs","batch_size":16,"gamma":0.5,"k":7})");
    CHECK(cfg.strategy == "mvs");
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.gamma == 0.5);
    CHECK(cfg.k == 7);
    CHECK(cfg.lr == 0.01);  // untouched default

    CHECK_THROWS_AS(apply_json_overrides(cfg, R"({"no_such_field":1})"), ConfigError);
    CHECK_THROWS_AS(apply_json_overrides(cfg, R"({"batch_size":"large"})"), ConfigError);
    CHECK_THROWS_AS(apply_json_overrides(cfg, "not json"), ConfigError);

    TrainConfig bad;
    bad.gamma = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("run_train: every strategy completes with finite metrics") {
    for (const std::string strategy :
         {"uniform", "node_wise", "layer_wise", "subgraph", "mvs", "mvs_bandit"}) {
        TrainConfig cfg = tiny_config(strategy, "smoke_" + strategy + ".csv");
        if (strategy == "mvs" || strategy == "mvs_bandit") cfg.exact_inference = false;
        const TrainResult res = run_train(cfg);
        CHECK(res.steps_run == 8);
        CHECK(std::isfinite(res.final_train_loss));
        CHECK(res.final_val_metric >= 0.0);
        const std::string body = slurp(cfg.out);
        CHECK(body.rfind("step,loss,val_metric,test_metric,grad_var,wall_ms\n", 0) == 0);
        CHECK(std::count(body.begin(), body.end(), '\n') == 9);  // header + 8 rows
    }
}

TEST_CASE("run_train: identical config and seed produce byte-identical CSV") {
    TrainConfig cfg = tiny_config("mvs", "det_a.csv");
    cfg.exact_inference = false;
    run_train(cfg);
    const std::string first = slurp(cfg.out);
    cfg.out = tmp_path("det_b.csv");
    run_train(cfg);
    CHECK(first == slurp(cfg.out));
    CHECK(first.find("nan") == std::string::npos);
}

TEST_CASE("run_train: concat aggregation and multi-label loss") {
    TrainConfig cfg = tiny_config("node_wise", "concat.csv");
    cfg.aggregation = "concat";
    cfg.loss = "sigmoid_bce";
    cfg.synth_label_mode = "multi";
    const TrainResult res = run_train(cfg);
    CHECK(std::isfinite(res.final_train_loss));
}

TEST_CASE("run_train: early stopping fires on a stalled metric") {
    TrainConfig cfg = tiny_config("uniform", "early.csv");
    cfg.max_iters = 200;
    cfg.patience = 5;
    // Zero learning rate: the validation metric can never improve, so the
    // run must stop after exactly `patience` evaluations beyond the first.
    cfg.lr = 1e-12;
    const TrainResult res = run_train(cfg);
    CHECK(res.early_stopped);
    CHECK(res.steps_run == 5);
}

TEST_CASE("run_train: full-batch descent decreases the loss") {
    TrainConfig cfg = tiny_config("uniform", "descent.csv");
    cfg.synth_blocks = 4;
    cfg.synth_nodes_per_block = 20;
    cfg.max_iters = 50;
    cfg.batch_size = 1 << 20;  // clipped to |train|
    run_train(cfg);

    std::ifstream in(cfg.out);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> losses;
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        losses.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
    }
    REQUIRE(losses.size() == 50);
    for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 1]);
}

TEST_CASE("run_variance_experiment: smoke run emits a well-formed CSV") {
    TrainConfig cfg = tiny_config("mvs", "var_smoke.csv");
    cfg.trials = 2;
    cfg.warmup_iters = 2;
    cfg.strategies = {"uniform", "mvs", "subgraph"};
    const auto reports = run_variance_experiment(cfg);
    write_variance_csv(reports, cfg.out);
    const std::string body = slurp(cfg.out);
    CHECK(body.rfind("strategy,layer,v_hat,v_se,bias_hat,grad_var_hat,total_mse_hat,D,beta,"
                     "delta_gamma,bound,trials,seed\n",
                     0) == 0);
    CHECK(std::count(body.begin(), body.end(), '\n') == 1 + 3 * 2);  // header + 3 arms x 2 layers
    CHECK(body.find("nan") == std::string::npos);
    CHECK(body.find("inf") == std::string::npos);
    for (const auto& rep : reports) {
        CHECK(rep.trials == 2);
        for (const auto& v : rep.v_per_layer) CHECK(std::isfinite(v.mean));
    }
}

TEST_CASE("dataset_from_config: synthetic default is the desk-scale SBM") {
    const TrainConfig cfg;
    const GraphDataset ds = dataset_from_config(cfg);
    CHECK(ds.num_nodes() == 300);
    CHECK(ds.num_classes() == 4);
    ds.validate();
}
