#include "mvsgnn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "mvsgnn/bandit.hpp"
#include "mvsgnn/errors.hpp"
#include "mvsgnn/rng.hpp"

namespace mvsgnn {

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

LossMode loss_from_string(const std::string& s) {
    if (s == "softmax_ce") return LossMode::softmax_ce;
    if (s == "sigmoid_bce") return LossMode::sigmoid_bce;
    throw ConfigError("loss: expected softmax_ce or sigmoid_bce, got '" + s + "'");
}

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "plain") return Aggregation::plain;
    if (s == "concat") return Aggregation::concat;
    throw ConfigError("aggregation: expected plain or concat, got '" + s + "'");
}

GradNormMode norm_mode_from_string(const std::string& s) {
    if (s == "last_preactivation") return GradNormMode::last_preactivation;
    if (s == "last_layer_weight") return GradNormMode::last_layer_weight;
    throw ConfigError("grad_norm_mode: expected last_preactivation or last_layer_weight");
}

LayerDist layer_dist_from_string(const std::string& s) {
    if (s == "uniform") return LayerDist::uniform;
    if (s == "degree") return LayerDist::degree;
    throw ConfigError("layer_dist: expected uniform or degree");
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    strategy_from_name(strategy);
    loss_from_string(loss);
    aggregation_from_string(aggregation);
    norm_mode_from_string(grad_norm_mode);
    layer_dist_from_string(layer_dist);
    if (norm_kind != "rw" && norm_kind != "sym") throw ConfigError("norm_kind: rw or sym");
    if (history_init != "full_forward" && history_init != "zeros") {
        throw ConfigError("history_init: full_forward or zeros");
    }
    if (synth_label_mode != "single" && synth_label_mode != "multi") {
        throw ConfigError("synth_label_mode: single or multi");
    }
}

void apply_json_overrides(TrainConfig& cfg, const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "edge_path") cfg.edge_path = value.get<std::string>();
            else if (key == "feature_path") cfg.feature_path = value.get<std::string>();
            else if (key == "label_path") cfg.label_path = value.get<std::string>();
            else if (key == "split_path") cfg.split_path = value.get<std::string>();
            else if (key == "synth_blocks") cfg.synth_blocks = value.get<Index>();
            else if (key == "synth_nodes_per_block") cfg.synth_nodes_per_block = value.get<Index>();
            else if (key == "synth_p_in") cfg.synth_p_in = value.get<double>();
            else if (key == "synth_p_out") cfg.synth_p_out = value.get<double>();
            else if (key == "synth_feature_dim") cfg.synth_feature_dim = value.get<Index>();
            else if (key == "synth_label_mode") cfg.synth_label_mode = value.get<std::string>();
            else if (key == "synth_noise") cfg.synth_noise = value.get<double>();
            else if (key == "dataset_seed") cfg.dataset_seed = value.get<std::uint64_t>();
            else if (key == "layers") cfg.layers = value.get<Index>();
            else if (key == "hidden_dim") cfg.hidden_dim = value.get<Index>();
            else if (key == "aggregation") cfg.aggregation = value.get<std::string>();
            else if (key == "loss") cfg.loss = value.get<std::string>();
            else if (key == "norm_kind") cfg.norm_kind = value.get<std::string>();
            else if (key == "add_self_loops") cfg.add_self_loops = value.get<bool>();
            else if (key == "strategy") cfg.strategy = value.get<std::string>();
            else if (key == "batch_size") cfg.batch_size = value.get<Index>();
            else if (key == "neighbor_s") cfg.neighbor_s = value.get<Index>();
            else if (key == "layer_sizes") cfg.layer_sizes = value.get<std::vector<Index>>();
            else if (key == "layer_dist") cfg.layer_dist = value.get<std::string>();
            else if (key == "gamma") cfg.gamma = value.get<double>();
            else if (key == "k") cfg.k = value.get<Index>();
            else if (key == "exact_inference") cfg.exact_inference = value.get<bool>();
            else if (key == "grad_norm_mode") cfg.grad_norm_mode = value.get<std::string>();
            else if (key == "history_init") cfg.history_init = value.get<std::string>();
            else if (key == "bandit_eta") cfg.bandit_eta = value.get<double>();
            else if (key == "bandit_delta") cfg.bandit_delta = value.get<double>();
            else if (key == "lr") cfg.lr = value.get<double>();
            else if (key == "max_iters") cfg.max_iters = value.get<Index>();
            else if (key == "patience") cfg.patience = value.get<Index>();
            else if (key == "early_stop_threshold") cfg.early_stop_threshold = value.get<double>();
            else if (key == "trials") cfg.trials = value.get<Index>();
            else if (key == "warmup_iters") cfg.warmup_iters = value.get<Index>();
            else if (key == "strategies") cfg.strategies = value.get<std::vector<std::string>>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "out") cfg.out = value.get<std::string>();
            else if (key == "record_wall_time") cfg.record_wall_time = value.get<bool>();
            else if (key == "track_grad_var") cfg.track_grad_var = value.get<bool>();
            else throw ConfigError("unknown config field '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("config field '" + key + "' has the wrong type");
        }
    }
}

TrainConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    TrainConfig cfg;
    apply_json_overrides(cfg, ss.str());
    return cfg;
}

GraphDataset dataset_from_config(const TrainConfig& cfg) {
    if (!cfg.edge_path.empty()) {
        return load_dataset(cfg.edge_path, cfg.feature_path, cfg.label_path, cfg.split_path);
    }
    return synth_sbm(cfg.synth_blocks, cfg.synth_nodes_per_block, cfg.synth_p_in, cfg.synth_p_out,
                     cfg.synth_feature_dim,
                     cfg.synth_label_mode == "multi" ? LabelMode::multi : LabelMode::single,
                     cfg.dataset_seed, cfg.synth_noise);
}

double f1_micro(const std::vector<Index>& pred, const std::vector<Index>& truth) {
    if (pred.size() != truth.size()) throw ShapeMismatchError("f1_micro: size mismatch");
    if (pred.empty()) return 0.0;
    // Single-label micro-F1: every prediction is one TP or one (FP, FN) pair,
    // so the score collapses to accuracy.
    Index correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double f1_micro(const DenseMatrix& pred01, const DenseMatrix& truth01) {
    if (!pred01.same_shape(truth01)) throw ShapeMismatchError("f1_micro: shape mismatch");
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < pred01.data.size(); ++i) {
        const bool p = pred01.data[i] != 0.0;
        const bool t = truth01.data[i] != 0.0;
        if (p && t) tp += 1.0;
        else if (p && !t) fp += 1.0;
        else if (!p && t) fn += 1.0;
    }
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 1.0 : 2.0 * tp / denom;
}

double metric_on_split(const ModelParams& params, const SparseMatrix& l, const GraphDataset& ds,
                       Split split) {
    const auto ids = ds.ids_in_split(split);
    if (ids.empty()) return 0.0;
    const FullPass fp = full_forward(params, l, ds.features);
    const DenseMatrix& z = fp.z.back();

    if (ds.label_mode == LabelMode::single) {
        std::vector<Index> pred, truth;
        pred.reserve(ids.size());
        truth.reserve(ids.size());
        for (Index id : ids) {
            const double* row = z.row_ptr(id);
            Index best = 0;
            for (Index c = 1; c < z.cols; ++c) {
                if (row[c] > row[best]) best = c;
            }
            pred.push_back(best);
            truth.push_back(ds.labels_single[static_cast<std::size_t>(id)]);
        }
        return f1_micro(pred, truth);
    }

    // sigmoid(z) > 0.5 <=> z > 0
    DenseMatrix pred(static_cast<Index>(ids.size()), z.cols);
    DenseMatrix truth(static_cast<Index>(ids.size()), z.cols);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        for (Index c = 0; c < z.cols; ++c) {
            pred(static_cast<Index>(r), c) = z(ids[r], c) > 0.0 ? 1.0 : 0.0;
            truth(static_cast<Index>(r), c) = ds.labels_multi(ids[r], c);
        }
    }
    return f1_micro(pred, truth);
}

namespace {

struct RunContext {
    GraphDataset ds;
    SparseMatrix laplacian;
    ModelParams params;
    AdamState adam;
    LossMode loss_mode;
    GradNormMode norm_mode;
    std::vector<Index> train_ids;
    std::vector<Index> model_dims;
};

RunContext make_context(const TrainConfig& cfg) {
    RunContext ctx;
    ctx.ds = dataset_from_config(cfg);
    LaplacianConfig lcfg;
    lcfg.norm_kind = cfg.norm_kind == "sym" ? NormKind::sym : NormKind::rw;
    lcfg.add_self_loops = cfg.add_self_loops;
    ctx.laplacian = normalize_laplacian(ctx.ds.adjacency, lcfg);

    ctx.model_dims.push_back(ctx.ds.feature_dim());
    for (Index l = 1; l < cfg.layers; ++l) ctx.model_dims.push_back(cfg.hidden_dim);
    ctx.model_dims.push_back(ctx.ds.num_classes());
    ctx.params = init_params(ctx.model_dims, aggregation_from_string(cfg.aggregation), cfg.seed);
    ctx.adam = make_adam(ctx.params, cfg.lr);
    ctx.loss_mode = loss_from_string(cfg.loss);
    ctx.norm_mode = norm_mode_from_string(cfg.grad_norm_mode);
    ctx.train_ids = ctx.ds.train_ids();
    if (ctx.train_ids.empty()) throw ConfigError("dataset has no training nodes");
    return ctx;
}

std::vector<Index> draw_uniform_ids(const std::vector<Index>& pool, Index b, Rng& rng) {
    std::vector<Index> out;
    const auto picks = rng.sample_without_replacement(static_cast<Index>(pool.size()), b);
    for (auto p : picks) out.push_back(pool[static_cast<std::size_t>(p)]);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TrainResult run_train(const TrainConfig& cfg) {
    cfg.validate();
    RunContext ctx = make_context(cfg);
    const Strategy strategy = strategy_from_name(cfg.strategy);
    const Index depth = cfg.layers;
    const Index n_train = static_cast<Index>(ctx.train_ids.size());
    const Index batch_size = std::min(cfg.batch_size, n_train);
    Rng rng(cfg.seed, 0x7a1);

    const bool wants_history = (strategy == Strategy::mvs || strategy == Strategy::mvs_bandit) &&
                               !cfg.exact_inference && depth > 1;
    HistoryStore history = make_history(ctx.ds.features, ctx.model_dims);
    if (wants_history && cfg.history_init == "full_forward") {
        init_history_full_forward(history, ctx.params, ctx.laplacian, ctx.ds.features, 0);
    }

    std::optional<CheckpointState> ckpt;
    std::optional<BanditState> bandit;
    if (strategy == Strategy::mvs_bandit) {
        double delta = cfg.bandit_delta;
        if (delta <= 0.0) {
            // Appendix choice: delta = sqrt(eta^4 ln n / (T sum g_i^2)), with
            // the norm mass taken from the initial exact pass.
            MiniBatchPlan plan = exact_plan(ctx.laplacian, ctx.train_ids, depth);
            ForwardTape tape = forward(ctx.params, plan, ctx.ds.features);
            const std::vector<double> unit(ctx.train_ids.size(), 1.0);
            LossResult lr0 = loss_and_output_grad(tape, ctx.ds, ctx.loss_mode, unit);
            const auto norms = per_sample_grad_norms(tape, lr0.dz_raw, ctx.norm_mode);
            double sum_sq = 0.0;
            for (double g : norms) sum_sq += g * g;
            if (sum_sq <= 0.0) sum_sq = 1.0;
            delta = std::sqrt(std::pow(cfg.bandit_eta, 4) *
                              std::log(static_cast<double>(n_train)) /
                              (static_cast<double>(cfg.max_iters) * sum_sq));
        }
        bandit = make_bandit(n_train, batch_size, cfg.bandit_eta, delta);
    }
    std::unordered_map<Index, Index> train_pos;
    for (std::size_t i = 0; i < ctx.train_ids.size(); ++i) {
        train_pos[ctx.train_ids[i]] = static_cast<Index>(i);
    }

    std::ofstream csv(cfg.out);
    if (!csv) throw ConfigError("cannot open output file '" + cfg.out + "'");
    csv << "step,loss,val_metric,test_metric,grad_var,wall_ms\n";

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    double best_val = -1.0;
    Index stall = 0;

    for (Index step = 1; step <= cfg.max_iters; ++step) {
        MiniBatchPlan plan;
        std::vector<double> weights;

        switch (strategy) {
            case Strategy::uniform:
                plan = uniform_batch(ctx.laplacian, ctx.train_ids, batch_size, depth, rng);
                break;
            case Strategy::node_wise: {
                const auto batch = draw_uniform_ids(ctx.train_ids, batch_size, rng);
                const std::vector<double> probs(batch.size(),
                                                static_cast<double>(batch_size) / n_train);
                plan = node_wise_plan(ctx.laplacian, batch, cfg.neighbor_s, depth, rng, probs);
                break;
            }
            case Strategy::layer_wise: {
                const auto batch = draw_uniform_ids(ctx.train_ids, batch_size, rng);
                const std::vector<double> probs(batch.size(),
                                                static_cast<double>(batch_size) / n_train);
                std::vector<Index> sizes = cfg.layer_sizes;
                if (sizes.empty()) sizes.assign(static_cast<std::size_t>(depth), batch_size);
                plan = layer_wise_plan(ctx.laplacian, batch, sizes,
                                       layer_dist_from_string(cfg.layer_dist), depth, rng, probs);
                break;
            }
            case Strategy::subgraph: {
                const auto batch = draw_uniform_ids(ctx.train_ids, batch_size, rng);
                const std::vector<double> probs(batch.size(),
                                                static_cast<double>(batch_size) / n_train);
                plan = subgraph_plan(ctx.laplacian, batch, depth, probs);
                break;
            }
            case Strategy::mvs: {
                if (!ckpt || ckpt->inner_step >= ckpt->inner_len) {
                    auto [cp, st] = mvs_checkpoint(ctx.laplacian, ctx.train_ids, cfg.gamma, cfg.k,
                                                   depth, rng);
                    plan = std::move(cp);
                    ckpt = std::move(st);
                } else {
                    plan = mvs_minibatch(*ckpt, ctx.laplacian, batch_size, cfg.exact_inference,
                                         depth, rng);
                    ckpt->inner_step += 1;
                }
                break;
            }
            case Strategy::mvs_bandit: {
                const std::vector<double> p = current_probs(*bandit);
                std::vector<Index> batch;
                std::vector<double> probs;
                for (int attempt = 0; attempt < 16 && batch.empty(); ++attempt) {
                    for (Index i = 0; i < n_train; ++i) {
                        if (rng.bernoulli(p[static_cast<std::size_t>(i)])) {
                            batch.push_back(ctx.train_ids[static_cast<std::size_t>(i)]);
                            probs.push_back(p[static_cast<std::size_t>(i)]);
                        }
                    }
                }
                if (batch.empty()) throw EmptyBatchError("bandit draw failed 16 times");
                plan = importance_plan(ctx.laplacian, batch, probs,
                                       cfg.exact_inference || depth == 1, depth,
                                       Strategy::mvs_bandit);
                break;
            }
        }

        weights.resize(plan.batch_nodes().size());
        for (std::size_t i = 0; i < weights.size(); ++i) {
            weights[i] = 1.0 / plan.inclusion_probs[i];
        }

        const HistoryStore* hist_ptr = wants_history ? &history : nullptr;
        ForwardTape tape = forward(ctx.params, plan, ctx.ds.features, hist_ptr);
        LossResult lr = loss_and_output_grad(tape, ctx.ds, ctx.loss_mode, weights);

        // Optional estimator-quality column, measured before the update.
        std::string grad_var_field;
        if (cfg.track_grad_var) {
            const GradBundle grad_f =
                full_gradient_oracle(ctx.params, ctx.ds, ctx.laplacian, ctx.loss_mode);
            std::vector<double> lab_weights(weights.size());
            for (std::size_t i = 0; i < weights.size(); ++i) {
                lab_weights[i] = static_cast<double>(weights.size()) /
                                 (static_cast<double>(n_train) * plan.inclusion_probs[i]);
            }
            LossResult lab = loss_and_output_grad(tape, ctx.ds, ctx.loss_mode, lab_weights);
            const GradBundle g_tilde = backward(ctx.params, plan, tape, lab.dz_weighted);
            grad_var_field = fmt_real(g_tilde.squared_distance(grad_f));
        }

        GradBundle grads = backward(ctx.params, plan, tape, lr.dz_weighted);

        // Cache refresh uses this step's raw output gradients (pre-update).
        if (strategy == Strategy::mvs && ckpt) {
            const auto norms = per_sample_grad_norms(tape, lr.dz_raw, ctx.norm_mode);
            update_grad_cache(*ckpt, plan.batch_nodes(), norms, step);
        }
        if (strategy == Strategy::mvs_bandit) {
            const auto norms = per_sample_grad_norms(tape, lr.dz_raw, ctx.norm_mode);
            std::vector<Index> positions(plan.batch_nodes().size());
            std::vector<double> grad_sq(norms.size());
            for (std::size_t i = 0; i < positions.size(); ++i) {
                positions[i] = train_pos[plan.batch_nodes()[i]];
                grad_sq[i] = norms[i] * norms[i];
            }
            bandit_update(*bandit, positions, grad_sq, plan.inclusion_probs);
        }

        adam_step(ctx.params, grads, ctx.adam);
        if (wants_history) refresh_from_tape(history, plan, tape, step);

        const double val = metric_on_split(ctx.params, ctx.laplacian, ctx.ds, Split::val);
        const double test = metric_on_split(ctx.params, ctx.laplacian, ctx.ds, Split::test);
        long wall_ms = 0;
        if (cfg.record_wall_time) {
            wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        }
        csv << step << ',' << fmt_real(lr.loss) << ',' << fmt_real(val) << ',' << fmt_real(test)
            << ',' << grad_var_field << ',' << wall_ms << '\n';

        result.steps_run = step;
        result.final_train_loss = lr.loss;
        result.final_val_metric = val;
        result.final_test_metric = test;

        if (cfg.patience > 0) {
            if (val > best_val + cfg.early_stop_threshold) {
                best_val = val;
                stall = 0;
            } else {
                stall += 1;
                if (stall >= cfg.patience) {
                    result.early_stopped = true;
                    break;
                }
            }
        }
    }
    return result;
}

namespace {

SamplerSpec spec_for_strategy(const TrainConfig& cfg, const std::string& name) {
    SamplerSpec spec;
    spec.strategy = strategy_from_name(name);
    spec.batch_size = cfg.batch_size;
    spec.neighbor_s = cfg.neighbor_s;
    spec.layer_sizes = cfg.layer_sizes;
    spec.layer_dist = layer_dist_from_string(cfg.layer_dist);
    spec.exact_inference = cfg.exact_inference;
    spec.norm_source = NormSource::true_full;
    return spec;
}

} // namespace

std::vector<VarianceReport> run_variance_experiment(const TrainConfig& cfg) {
    cfg.validate();
    RunContext ctx = make_context(cfg);
    const Index depth = cfg.layers;
    Rng rng(cfg.seed, 0xaab);

    // Warm-up: full-batch descent so per-sample norms spread out.
    MiniBatchPlan full_plan = exact_plan(ctx.laplacian, ctx.train_ids, depth);
    const std::vector<double> unit(ctx.train_ids.size(), 1.0);
    for (Index it = 0; it < cfg.warmup_iters; ++it) {
        ForwardTape tape = forward(ctx.params, full_plan, ctx.ds.features);
        LossResult lr = loss_and_output_grad(tape, ctx.ds, ctx.loss_mode, unit);
        GradBundle g = backward(ctx.params, full_plan, tape, lr.dz_weighted);
        adam_step(ctx.params, g, ctx.adam);
    }

    // One checkpoint plus K-1 history-backed inner steps leaves the store
    // realistically stale (bounded by the inner-loop length).
    HistoryStore history = make_history(ctx.ds.features, ctx.model_dims);
    if (cfg.history_init == "full_forward") {
        init_history_full_forward(history, ctx.params, ctx.laplacian, ctx.ds.features, 0);
    }
    if (depth > 1) {
        auto [cplan, ckpt] = mvs_checkpoint(ctx.laplacian, ctx.train_ids, cfg.gamma, cfg.k, depth, rng);
        ForwardTape ctape = forward(ctx.params, cplan, ctx.ds.features);
        std::vector<double> cw(cplan.batch_nodes().size(), 1.0 / cfg.gamma);
        LossResult clr = loss_and_output_grad(ctape, ctx.ds, ctx.loss_mode, cw);
        GradBundle cg = backward(ctx.params, cplan, ctape, clr.dz_weighted);
        update_grad_cache(ckpt, cplan.batch_nodes(),
                          per_sample_grad_norms(ctape, clr.dz_raw, ctx.norm_mode), 1);
        adam_step(ctx.params, cg, ctx.adam);
        refresh_from_tape(history, cplan, ctape, 1);

        const Index inner_batch = std::min(cfg.batch_size, static_cast<Index>(ckpt.nodes.size()));
        for (Index kk = 2; kk <= cfg.k; ++kk) {
            MiniBatchPlan plan = mvs_minibatch(ckpt, ctx.laplacian, inner_batch, false, depth, rng);
            ForwardTape tape = forward(ctx.params, plan, ctx.ds.features, &history);
            std::vector<double> w(plan.batch_nodes().size());
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / plan.inclusion_probs[i];
            LossResult lr = loss_and_output_grad(tape, ctx.ds, ctx.loss_mode, w);
            GradBundle g = backward(ctx.params, plan, tape, lr.dz_weighted);
            update_grad_cache(ckpt, plan.batch_nodes(),
                              per_sample_grad_norms(tape, lr.dz_raw, ctx.norm_mode), kk);
            adam_step(ctx.params, g, ctx.adam);
            refresh_from_tape(history, plan, tape, kk);
        }
    }

    std::vector<VarianceReport> reports;
    std::uint64_t arm = 0;
    for (const std::string& name : cfg.strategies) {
        SamplerSpec spec = spec_for_strategy(cfg, name);
        VarianceReport rep;
        rep.strategy = name;
        rep.trials = cfg.trials;
        rep.seed = cfg.seed;
        const std::uint64_t arm_seed = cfg.seed + 1000003 * (++arm);
        for (Index layer = 1; layer <= depth; ++layer) {
            rep.v_per_layer.push_back(mc_embedding_variance(
                spec, ctx.params, ctx.ds, ctx.laplacian, layer, cfg.trials, arm_seed + layer,
                &history));
        }
        rep.grad = mc_gradient_mse(spec, ctx.params, ctx.ds, ctx.laplacian, ctx.loss_mode,
                                   cfg.trials, arm_seed + 101, &history);
        rep.ingredients = bound_ingredients(ctx.ds, ctx.params, ctx.laplacian, history);
        if (spec.strategy != Strategy::mvs && spec.strategy != Strategy::mvs_bandit) {
            // The history bound describes the stale-store estimator only.
            std::fill(rep.ingredients.delta_gamma.begin(), rep.ingredients.delta_gamma.end(), 0.0);
            std::fill(rep.ingredients.bound.begin(), rep.ingredients.bound.end(), 0.0);
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

void write_variance_csv(const std::vector<VarianceReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << "strategy,layer,v_hat,v_se,bias_hat,grad_var_hat,total_mse_hat,D,beta,delta_gamma,"
           "bound,trials,seed\n";
    for (const auto& rep : reports) {
        for (std::size_t l = 0; l < rep.v_per_layer.size(); ++l) {
            out << rep.strategy << ',' << (l + 1) << ',' << fmt_real(rep.v_per_layer[l].mean)
                << ',' << fmt_real(rep.v_per_layer[l].se) << ',' << fmt_real(rep.grad.bias_hat)
                << ',' << fmt_real(rep.grad.grad_var_hat) << ','
                << fmt_real(rep.grad.total_mse_hat) << ',' << fmt_real(rep.ingredients.avg_degree)
                << ',' << fmt_real(rep.ingredients.beta[l]) << ','
                << fmt_real(rep.ingredients.delta_gamma[l]) << ','
                << fmt_real(rep.ingredients.bound[l]) << ',' << rep.trials << ',' << rep.seed
                << '\n';
        }
    }
}

} // namespace mvsgnn
