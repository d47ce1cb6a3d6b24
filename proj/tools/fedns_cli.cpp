// Experiment runner for the federated Newton-sketch library.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedns/errors.hpp"
#include "fedns/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string resolve_out_dir(const fedns::ExperimentConfig& config,
                            const std::string& flag) {
    if (!flag.empty()) return flag;
    if (!config.output_dir.empty()) return config.output_dir;
    throw fedns::ConfigError("no output directory: pass --out or set output.dir");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated Newton sketch experiments (fednewton / fedns / fedndes / fedavg)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::uint64_t> seed_override;
    int threads = 1;

    auto add_common = [&](CLI::App* cmd, bool with_out) {
        cmd->add_option("--config", config_path, "Experiment config file (JSON)")
            ->required();
        if (with_out) {
            cmd->add_option("--out", out_dir, "Output directory (overrides output.dir)");
            cmd->add_option("--seeds", seed_override, "Override the config seed list")
                ->delimiter(',');
            cmd->add_option("--threads", threads, "Seed-level parallelism")
                ->check(CLI::PositiveNumber);
        }
    };

    CLI::App* run = app.add_subcommand("run", "Run the configured algorithm per seed");
    add_common(run, true);
    CLI::App* sweep = app.add_subcommand(
        "sweep-k", "Re-run the fedns config over sweep.k_values, one CSV of final gaps");
    add_common(sweep, true);
    CLI::App* effdim = app.add_subcommand(
        "effdim", "Estimate the effective dimension of the configured problem");
    add_common(effdim, false);
    CLI::App* validate =
        app.add_subcommand("validate-config", "Parse and schema-check the config");
    add_common(validate, false);

    CLI11_PARSE(app, argc, argv);

    try {
        fedns::ExperimentConfig config = fedns::load_config_file(config_path);
        if (!seed_override.empty()) config.seeds = seed_override;

        if (validate->parsed()) {
            std::printf("config ok (hash %s)\n", fedns::config_hash_hex(config).c_str());
            return 0;
        }
        if (effdim->parsed()) {
            const auto report = fedns::estimate_effective_dimension(config);
            std::printf("effective_dim %.6f  (M = %d, N = %lld, lambda = %g)\n",
                        report.effective_dim, report.M, report.N, report.lambda);
            return 0;
        }
        if (run->parsed()) {
            const std::string dir = resolve_out_dir(config, out_dir);
            const auto result = fedns::run_experiment(config, dir, threads);
            for (const auto& file : result.files_written)
                std::printf("wrote %s\n", file.c_str());
            if (!result.mean_trace.empty())
                std::printf("mean final gap: %.17g\n",
                            result.mean_trace.back().optimal_gap);
            return 0;
        }
        if (sweep->parsed()) {
            const std::string dir = resolve_out_dir(config, out_dir);
            const auto points =
                fedns::sweep_sketch_size(config, config.sweep_k_values, dir, threads);
            for (const auto& p : points)
                std::printf("k = %d  mean final gap = %.17g\n", p.k, p.mean_final_gap);
            std::printf("wrote %s/sweep.csv\n", dir.c_str());
            return 0;
        }
    } catch (const fedns::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const fedns::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const fedns::NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
