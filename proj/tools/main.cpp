// Command-line front end: training runs, variance experiments, and direct
// inspection of the sampling-probability solver.
//
//   mvsgnn train    --config cfg.json [--seed N] [--strategy S] [--batch-size B] [--out x.csv]
//   mvsgnn variance --config cfg.json --trials T --strategies a,b,c --out x.csv
//   mvsgnn probs    --gbar norms.csv --budget B
//
// Exit codes: 0 success, 2 configuration error, 1 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvsgnn/errors.hpp"
#include "mvsgnn/solver.hpp"
#include "mvsgnn/train.hpp"

namespace {

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<double> read_gbar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mvsgnn::ConfigError("cannot open '" + path + "'");
    std::vector<double> g;
    std::string token;
    while (in) {
        char c = static_cast<char>(in.get());
        if (!in) break;
        if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') {
            if (!token.empty()) {
                g.push_back(std::stod(token));
                token.clear();
            }
        } else {
            token.push_back(c);
        }
    }
    if (!token.empty()) g.push_back(std::stod(token));
    if (g.empty()) throw mvsgnn::ConfigError("'" + path + "' holds no numbers");
    return g;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampling-based GCN training laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_override, strategy_override, strategies_csv, gbar_path;
    std::int64_t seed_override = -1, batch_override = -1, trials_override = -1, budget = 0;

    CLI::App* train_cmd = app.add_subcommand("train", "run one training configuration");
    train_cmd->add_option("--config", config_path, "JSON config file")->required();
    train_cmd->add_option("--seed", seed_override, "override config seed");
    train_cmd->add_option("--strategy", strategy_override, "override sampling strategy");
    train_cmd->add_option("--batch-size", batch_override, "override batch size");
    train_cmd->add_option("--out", out_override, "override metrics CSV path");

    CLI::App* var_cmd = app.add_subcommand("variance", "Monte-Carlo variance comparison");
    var_cmd->add_option("--config", config_path, "JSON config file")->required();
    var_cmd->add_option("--trials", trials_override, "Monte-Carlo trials per arm");
    var_cmd->add_option("--strategies", strategies_csv, "comma-separated strategy list");
    var_cmd->add_option("--seed", seed_override, "override config seed");
    var_cmd->add_option("--out", out_override, "override CSV path");

    CLI::App* probs_cmd = app.add_subcommand("probs", "print solver output for a norm vector");
    probs_cmd->add_option("--gbar", gbar_path, "file of gradient norms (CSV or whitespace)")
        ->required();
    probs_cmd->add_option("--budget", budget, "expected batch size B")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(train_cmd)) {
            mvsgnn::TrainConfig cfg = mvsgnn::config_from_json_file(config_path);
            if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
            if (!strategy_override.empty()) cfg.strategy = strategy_override;
            if (batch_override > 0) cfg.batch_size = batch_override;
            if (!out_override.empty()) cfg.out = out_override;
            const mvsgnn::TrainResult res = mvsgnn::run_train(cfg);
            std::cout << "steps=" << res.steps_run << " loss=" << fmt(res.final_train_loss)
                      << " val=" << fmt(res.final_val_metric)
                      << " test=" << fmt(res.final_test_metric)
                      << " early_stopped=" << (res.early_stopped ? 1 : 0) << "\n";
        } else if (app.got_subcommand(var_cmd)) {
            mvsgnn::TrainConfig cfg = mvsgnn::config_from_json_file(config_path);
            if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
            if (trials_override > 0) cfg.trials = trials_override;
            if (!strategies_csv.empty()) cfg.strategies = split_csv_list(strategies_csv);
            if (!out_override.empty()) cfg.out = out_override;
            const auto reports = mvsgnn::run_variance_experiment(cfg);
            mvsgnn::write_variance_csv(reports, cfg.out);
            for (const auto& rep : reports) {
                std::cout << rep.strategy << ": grad_var=" << fmt(rep.grad.grad_var_hat)
                          << " bias=" << fmt(rep.grad.bias_hat)
                          << " total=" << fmt(rep.grad.total_mse_hat) << "\n";
            }
        } else if (app.got_subcommand(probs_cmd)) {
            const auto g = read_gbar(gbar_path);
            const auto pv = mvsgnn::optimal_probs(g, budget);
            const double mu_qs = mvsgnn::quickselect_threshold(g, budget);
            double total = 0.0;
            for (double p : pv.probs) total += p;
            std::cout << "n=" << g.size() << " budget=" << budget << " kappa=" << pv.kappa
                      << " mu=" << fmt(pv.mu) << " mu_quickselect=" << fmt(mu_qs)
                      << " sum_p=" << fmt(total) << "\n";
            for (std::size_t i = 0; i < pv.probs.size(); ++i) {
                std::cout << i << "," << fmt(g[i]) << "," << fmt(pv.probs[i]) << "\n";
            }
        }
    } catch (const mvsgnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mvsgnn::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
