#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvsgnn/dataset.hpp"
#include "mvsgnn/gcn.hpp"
#include "mvsgnn/variance.hpp"

namespace mvsgnn {

// Flat run configuration. JSON config files carry exactly these field names;
// CLI flags override file values.
struct TrainConfig {
    // Dataset: file paths, or a synthetic graph when edge_path is empty.
    std::string edge_path, feature_path, label_path, split_path;
    Index synth_blocks = 4;
    Index synth_nodes_per_block = 75;
    double synth_p_in = 0.3;
    double synth_p_out = 0.02;
    Index synth_feature_dim = 16;
    std::string synth_label_mode = "single";
    double synth_noise = 1.0;
    std::uint64_t dataset_seed = 7;

    // Model.
    Index layers = 2;
    Index hidden_dim = 64;
    std::string aggregation = "plain";      // plain | concat
    std::string loss = "softmax_ce";        // softmax_ce | sigmoid_bce
    std::string norm_kind = "rw";           // rw | sym
    bool add_self_loops = true;

    // Sampling.
    std::string strategy = "uniform";
    Index batch_size = 32;
    Index neighbor_s = 5;
    std::vector<Index> layer_sizes;         // empty -> batch_size per layer
    std::string layer_dist = "uniform";     // uniform | degree
    double gamma = 1.0;
    Index k = 20;                           // inner-loop length (checkpoint counts as k = 1)
    bool exact_inference = true;
    std::string grad_norm_mode = "last_preactivation";
    std::string history_init = "full_forward";  // full_forward | zeros
    double bandit_eta = 0.4;
    double bandit_delta = 0.0;              // <= 0: appendix default

    // Optimization.
    double lr = 0.01;
    Index max_iters = 300;
    Index patience = 0;                     // 0 disables early stopping
    double early_stop_threshold = 0.01;

    // Variance experiments.
    Index trials = 500;
    Index warmup_iters = 30;
    std::vector<std::string> strategies = {"uniform", "mvs"};

    // Output.
    std::uint64_t seed = 1;
    std::string out = "metrics.csv";
    bool record_wall_time = false;          // keeps default CSV bit-reproducible
    bool track_grad_var = false;

    void validate() const;
};

TrainConfig config_from_json_file(const std::string& path);
void apply_json_overrides(TrainConfig& cfg, const std::string& json_text);

// Micro-averaged F1. Single-label predictions reduce to accuracy.
double f1_micro(const std::vector<Index>& pred, const std::vector<Index>& truth);
double f1_micro(const DenseMatrix& pred01, const DenseMatrix& truth01);

// Validation/test metric from an exact-inference pass: accuracy (argmax) for
// single-label data, micro-F1 at threshold 0.5 for multi-label.
double metric_on_split(const ModelParams& params, const SparseMatrix& l, const GraphDataset& ds,
                       Split split);

struct TrainResult {
    Index steps_run = 0;
    double final_train_loss = 0.0;
    double final_val_metric = 0.0;
    double final_test_metric = 0.0;
    bool early_stopped = false;
};

// Runs the configured strategy end to end, appending one metrics row per
// iteration to cfg.out (header: step,loss,val_metric,test_metric,grad_var,
// wall_ms) plus a final summary line on stdout. Deterministic per seed.
TrainResult run_train(const TrainConfig& cfg);

// Variance experiment: warm-up training for heterogeneous per-sample norms,
// one checkpoint + K-1 inner steps to produce realistically stale history,
// then Monte-Carlo variance measurement per strategy at the final weights.
// Rows: strategy,layer,v_hat,v_se,bias_hat,grad_var_hat,total_mse_hat,D,
// beta,delta_gamma,bound,trials,seed.
std::vector<VarianceReport> run_variance_experiment(const TrainConfig& cfg);
void write_variance_csv(const std::vector<VarianceReport>& reports, const std::string& path);

// Shared by run_* and tests.
GraphDataset dataset_from_config(const TrainConfig& cfg);

} // namespace mvsgnn
