#include "fedns/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fedns/errors.hpp"
#include "fedns/rng.hpp"

namespace fedns {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

const json& require(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    return obj.at(key);
}

double get_number(const json& obj, const std::string& where, const std::string& key) {
    const json& v = require(obj, where, key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key) {
    const json& v = require(obj, where, key);
    if (!v.is_number_integer())
        throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

std::uint64_t get_seed(const json& obj, const std::string& where, const std::string& key) {
    const json& v = require(obj, where, key);
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(where + "." + key + ": expected an integer seed");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key) {
    const json& v = require(obj, where, key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

DatasetSource parse_dataset(const json& node) {
    DatasetSource src;
    const std::string source = get_string(node, "dataset", "source");
    if (source == "file") {
        require_keys(node, "dataset", {"source", "path"});
        src.synthetic = false;
        src.path = get_string(node, "dataset", "path");
    } else if (source == "synthetic") {
        require_keys(node, "dataset", {"source", "synthetic"});
        const json& synth = require(node, "dataset", "synthetic");
        require_keys(synth, "dataset.synthetic", {"kind", "n", "d", "separability", "seed"});
        if (get_string(synth, "dataset.synthetic", "kind") != "logistic")
            throw ConfigError("dataset.synthetic.kind: only 'logistic' is supported");
        src.synthetic = true;
        src.synth.n = get_int(synth, "dataset.synthetic", "n");
        src.synth.d = get_int(synth, "dataset.synthetic", "d");
        src.synth.separability = get_number(synth, "dataset.synthetic", "separability");
        src.synth.seed = get_seed(synth, "dataset.synthetic", "seed");
        if (src.synth.n < 1 || src.synth.d < 1)
            throw ConfigError("dataset.synthetic: n and d must be >= 1");
    } else {
        throw ConfigError("dataset.source must be 'file' or 'synthetic'");
    }
    return src;
}

FeatureMap parse_feature_map(const json& node) {
    FeatureMap fm;
    const std::string kind = get_string(node, "feature_map", "kind");
    if (kind == "identity") {
        require_keys(node, "feature_map", {"kind"});
        fm.kind = FeatureMapKind::Identity;
    } else if (kind == "random_fourier") {
        require_keys(node, "feature_map", {"kind", "output_dim", "bandwidth", "seed"});
        fm.kind = FeatureMapKind::RandomFourier;
        fm.output_dim = get_int(node, "feature_map", "output_dim");
        fm.bandwidth = get_number(node, "feature_map", "bandwidth");
        fm.seed = get_seed(node, "feature_map", "seed");
        if (fm.output_dim < 1) throw ConfigError("feature_map.output_dim must be >= 1");
        if (fm.bandwidth <= 0.0) throw ConfigError("feature_map.bandwidth must be > 0");
    } else {
        throw ConfigError("feature_map.kind must be 'identity' or 'random_fourier'");
    }
    return fm;
}

Objective parse_objective(const json& node) {
    require_keys(node, "objective", {"family", "lambda"});
    Objective obj;
    const std::string family = get_string(node, "objective", "family");
    if (family == "logistic")
        obj.family = LossFamily::Logistic;
    else if (family == "squared")
        obj.family = LossFamily::Squared;
    else
        throw ConfigError("objective.family must be 'logistic' or 'squared'");
    obj.lambda = get_number(node, "objective", "lambda");
    if (obj.lambda <= 0.0) throw ConfigError("objective.lambda must be > 0");
    return obj;
}

PartitionPlan parse_partition(const json& node) {
    PartitionPlan plan;
    const std::string strategy = get_string(node, "partition", "strategy");
    if (strategy == "iid") {
        require_keys(node, "partition", {"strategy", "workers", "seed"});
        plan.strategy = PartitionStrategy::Iid;
    } else if (strategy == "label_skew") {
        require_keys(node, "partition", {"strategy", "workers", "seed", "dirichlet_alpha"});
        plan.strategy = PartitionStrategy::LabelSkew;
        plan.dirichlet_alpha = get_number(node, "partition", "dirichlet_alpha");
        if (plan.dirichlet_alpha <= 0.0)
            throw ConfigError("partition.dirichlet_alpha must be > 0");
    } else {
        throw ConfigError("partition.strategy must be 'iid' or 'label_skew'");
    }
    plan.workers = get_int(node, "partition", "workers");
    plan.seed = get_seed(node, "partition", "seed");
    if (plan.workers < 1) throw ConfigError("partition.workers must be >= 1");
    return plan;
}

AlgorithmSpec parse_algorithm(const json& node) {
    AlgorithmSpec alg;
    alg.name = get_string(node, "algorithm", "name");
    if (alg.name == "fednewton") {
        require_keys(node, "algorithm", {"name", "rounds", "mu"});
        alg.mu = get_number(node, "algorithm", "mu");
    } else if (alg.name == "fedns") {
        require_keys(node, "algorithm", {"name", "rounds", "mu", "k", "sketch"});
        alg.mu = get_number(node, "algorithm", "mu");
        alg.k = get_int(node, "algorithm", "k");
        alg.sketch = sketch_kind_from_string(get_string(node, "algorithm", "sketch"));
        if (alg.k < 1 && alg.sketch != SketchKind::Identity)
            throw ConfigError("algorithm.k must be >= 1");
    } else if (alg.name == "fedndes") {
        require_keys(node, "algorithm",
                     {"name", "rounds", "sketch", "delta", "a", "b", "mbar1", "mbar2",
                      "eta", "exit_rule"});
        alg.sketch = sketch_kind_from_string(get_string(node, "algorithm", "sketch"));
        alg.ndes.delta = get_number(node, "algorithm", "delta");
        alg.ndes.armijo_a = get_number(node, "algorithm", "a");
        alg.ndes.backtrack_b = get_number(node, "algorithm", "b");
        const int mbar1 = get_int(node, "algorithm", "mbar1");
        const int mbar2 = get_int(node, "algorithm", "mbar2");
        if (mbar1 < 0 || mbar2 < 0)
            throw ConfigError("algorithm.mbar1/mbar2 must be >= 0 (0 = auto-size)");
        alg.mbar1_auto = mbar1 == 0;
        alg.mbar2_auto = mbar2 == 0;
        alg.ndes.mbar1 = std::max(1, mbar1);
        alg.ndes.mbar2 = std::max(1, mbar2);
        alg.ndes.eta = get_number(node, "algorithm", "eta");
        const std::string rule = get_string(node, "algorithm", "exit_rule");
        if (rule == "paper")
            alg.ndes.exit_rule = FedNdesConfig::ExitRule::Paper;
        else if (rule == "linear")
            alg.ndes.exit_rule = FedNdesConfig::ExitRule::Linear;
        else
            throw ConfigError("algorithm.exit_rule must be 'paper' or 'linear'");
        if (alg.ndes.delta <= 0.0) throw ConfigError("algorithm.delta must be > 0");
        if (alg.ndes.armijo_a <= 0.0 || alg.ndes.armijo_a >= 0.5)
            throw ConfigError("algorithm.a must be in (0, 1/2)");
        if (alg.ndes.backtrack_b <= 0.0 || alg.ndes.backtrack_b >= 1.0)
            throw ConfigError("algorithm.b must be in (0, 1)");
        if (alg.ndes.eta <= 0.0) throw ConfigError("algorithm.eta must be > 0");
    } else if (alg.name == "fedavg") {
        require_keys(node, "algorithm", {"name", "rounds", "local_steps", "step_size"});
        alg.local_steps = get_int(node, "algorithm", "local_steps");
        alg.step_size = get_number(node, "algorithm", "step_size");
        if (alg.local_steps < 1) throw ConfigError("algorithm.local_steps must be >= 1");
        if (alg.step_size <= 0.0) throw ConfigError("algorithm.step_size must be > 0");
    } else {
        throw ConfigError(
            "algorithm.name must be one of fednewton, fedns, fedndes, fedavg");
    }
    alg.rounds = get_int(node, "algorithm", "rounds");
    if (alg.rounds < 0) throw ConfigError("algorithm.rounds must be >= 0");
    return alg;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Runs fn(0..count-1) across at most `threads` threads; outputs must be
// per-index so the schedule cannot change results.
void parallel_indices(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    const int workers = std::min(threads, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double test_accuracy(const Dataset& test, const Eigen::VectorXd& w) {
    if (test.num_samples() == 0) return std::numeric_limits<double>::quiet_NaN();
    const Eigen::ArrayXd scores = (test.features * w).array();
    int correct = 0;
    for (int i = 0; i < test.num_samples(); ++i) {
        const double predicted = scores[i] >= 0.0 ? 1.0 : -1.0;
        if (predicted == test.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.num_samples());
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(root, "config",
                 {"dataset", "feature_map", "objective", "partition", "algorithm",
                  "seeds", "test_split", "sweep", "output"});

    ExperimentConfig config;
    config.dataset = parse_dataset(require(root, "config", "dataset"));
    if (root.contains("feature_map"))
        config.feature_map = parse_feature_map(root.at("feature_map"));
    config.objective = parse_objective(require(root, "config", "objective"));
    config.partition_plan = parse_partition(require(root, "config", "partition"));
    config.algorithm = parse_algorithm(require(root, "config", "algorithm"));

    const json& seeds = require(root, "config", "seeds");
    if (!seeds.is_array() || seeds.empty())
        throw ConfigError("seeds must be a non-empty array of integers");
    for (const auto& s : seeds) {
        if (!s.is_number_integer() && !s.is_number_unsigned())
            throw ConfigError("seeds entries must be integers");
        config.seeds.push_back(s.get<std::uint64_t>());
    }

    if (root.contains("test_split")) {
        const json& split = root.at("test_split");
        require_keys(split, "test_split", {"fraction", "seed"});
        TestSplitSpec spec;
        spec.fraction = get_number(split, "test_split", "fraction");
        spec.seed = get_seed(split, "test_split", "seed");
        if (spec.fraction <= 0.0 || spec.fraction >= 1.0)
            throw ConfigError("test_split.fraction must be in (0, 1)");
        config.test_split = spec;
    }

    if (root.contains("sweep")) {
        const json& sweep = root.at("sweep");
        require_keys(sweep, "sweep", {"k_values"});
        const json& ks = require(sweep, "sweep", "k_values");
        if (!ks.is_array()) throw ConfigError("sweep.k_values must be an array");
        for (const auto& k : ks) {
            if (!k.is_number_integer() || k.get<int>() < 1)
                throw ConfigError("sweep.k_values entries must be integers >= 1");
            config.sweep_k_values.push_back(k.get<int>());
        }
    }

    if (root.contains("output")) {
        const json& output = root.at("output");
        require_keys(output, "output", {"dir"});
        config.output_dir = get_string(output, "output", "dir");
    }

    config.canonical_text = root.dump();
    return config;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string config_hash_hex(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : config.canonical_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
    PreparedExperiment prep;
    Dataset raw = config.dataset.synthetic
                      ? synth_logistic(config.dataset.synth.n, config.dataset.synth.d,
                                       config.dataset.synth.separability,
                                       config.dataset.synth.seed)
                      : load_libsvm_file(config.dataset.path);
    Dataset mapped = apply_feature_map(config.feature_map, raw);

    if (config.test_split) {
        const int N = mapped.num_samples();
        const int n_test = std::max(
            1, static_cast<int>(std::lround(config.test_split->fraction * N)));
        if (n_test >= N) throw ConfigError("test_split leaves no training data");
        std::vector<int> order(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
        rng::Counter gen(rng::derive(config.test_split->seed, 0));
        rng::shuffle(order, gen);
        std::vector<bool> is_test(static_cast<std::size_t>(N), false);
        for (int i = 0; i < n_test; ++i)
            is_test[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

        const int M = mapped.feature_dim();
        prep.test.features.resize(n_test, M);
        prep.test.labels.resize(n_test);
        prep.train.features.resize(N - n_test, M);
        prep.train.labels.resize(N - n_test);
        int it = 0, ir = 0;
        for (int i = 0; i < N; ++i) {
            if (is_test[static_cast<std::size_t>(i)]) {
                prep.test.features.row(it) = mapped.features.row(i);
                prep.test.labels[it++] = mapped.labels[i];
            } else {
                prep.train.features.row(ir) = mapped.features.row(i);
                prep.train.labels[ir++] = mapped.labels[i];
            }
        }
        prep.train.name = mapped.name;
        prep.test.name = mapped.name + ":test";
    } else {
        prep.train = std::move(mapped);
    }

    prep.objective = config.objective;
    prep.shards = partition(prep.train, config.partition_plan);

    const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(prep.train.feature_dim());
    const NewtonResult ref = centralized_newton(prep.objective, prep.train, w0,
                                                {.mu = 1.0, .tol = 1e-12, .max_iter = 100});
    if (!ref.converged)
        throw NumericError("reference optimum did not converge to tolerance 1e-12");
    prep.w_star = ref.state.w;
    prep.reference_loss = loss(prep.objective, prep.train, prep.w_star);

    Eigen::MatrixXd loss_hess = hessian(prep.objective, prep.train, w0);
    loss_hess.diagonal().array() -= prep.objective.lambda;
    prep.effective_dim = effective_dimension(loss_hess, prep.objective.lambda);

    prep.resolved_mbar1 = config.algorithm.mbar1_auto
                              ? static_cast<int>(std::ceil(4.0 * prep.effective_dim))
                              : config.algorithm.ndes.mbar1;
    prep.resolved_mbar2 = config.algorithm.mbar2_auto
                              ? static_cast<int>(std::ceil(16.0 * prep.effective_dim))
                              : config.algorithm.ndes.mbar2;
    prep.resolved_mbar1 = std::max(1, prep.resolved_mbar1);
    prep.resolved_mbar2 = std::max(1, prep.resolved_mbar2);
    return prep;
}

TraceFile run_single_seed(const PreparedExperiment& prep, const ExperimentConfig& config,
                          std::uint64_t seed) {
    const AlgorithmSpec& alg = config.algorithm;
    TraceFile trace;
    trace.header.config_hash = config_hash_hex(config);
    trace.header.seed = seed;
    trace.header.algorithm = alg.name;
    trace.header.m = static_cast<int>(prep.shards.size());
    trace.header.M = prep.train.feature_dim();
    trace.header.N = prep.train.num_samples();
    trace.header.effective_dim = prep.effective_dim;
    trace.header.lambda = prep.objective.lambda;

    const Eigen::VectorXd w0 = Eigen::VectorXd::Zero(prep.train.feature_dim());
    FedRunOptions opts;
    opts.reference_loss = prep.reference_loss;
    if (prep.test.num_samples() > 0)
        opts.on_round = [&](int, const Eigen::VectorXd& w) {
            trace.test_accuracy.push_back(test_accuracy(prep.test, w));
        };

    FedRunResult run;
    if (alg.name == "fednewton") {
        run = fednewton_run(prep.shards, prep.objective, w0, alg.mu, alg.rounds, opts);
    } else if (alg.name == "fedns") {
        trace.header.k = alg.k;
        run = fedns_run(prep.shards, prep.objective, w0, alg.mu, alg.k, alg.rounds, seed,
                        alg.sketch, opts);
    } else if (alg.name == "fedndes") {
        FedNdesConfig ndes = alg.ndes;
        ndes.mbar1 = prep.resolved_mbar1;
        ndes.mbar2 = prep.resolved_mbar2;
        trace.header.k = ndes.mbar1;
        run = fedndes_run(prep.shards, prep.objective, w0, ndes, alg.rounds, seed,
                          alg.sketch, opts);
        trace.exited = run.exited;
    } else if (alg.name == "fedavg") {
        run = fedavg_baseline_run(prep.shards, prep.objective, w0, alg.local_steps,
                                  alg.step_size, alg.rounds, seed, opts);
    } else {
        throw ConfigError("unknown algorithm: " + alg.name);
    }
    trace.rows = std::move(run.trace);
    return trace;
}

std::string trace_csv(const TraceFile& trace) {
    std::string out =
        "round,loss,optimal_gap,grad_norm,decrement,step_size,scalars_up,"
        "scalars_down,test_accuracy\n";
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const RoundMetrics& r = trace.rows[i];
        out += std::to_string(r.round);
        out += ',' + format_double(r.loss);
        out += ',' + format_double(r.optimal_gap);
        out += ',' + format_double(r.grad_norm);
        out += ',' + format_double(r.decrement);
        out += ',' + format_double(r.step_size);
        out += ',' + std::to_string(r.scalars_up);
        out += ',' + std::to_string(r.scalars_down);
        out += ',' + format_double(i < trace.test_accuracy.size()
                                       ? trace.test_accuracy[i]
                                       : std::numeric_limits<double>::quiet_NaN());
        out += '\n';
    }
    return out;
}

std::string trace_sidecar_json(const TraceFile& trace) {
    json header;
    header["config_hash"] = trace.header.config_hash;
    header["seed"] = trace.header.seed;
    header["algorithm"] = trace.header.algorithm;
    header["k"] = trace.header.k;
    header["m"] = trace.header.m;
    header["M"] = trace.header.M;
    header["N"] = trace.header.N;
    header["effective_dim"] = trace.header.effective_dim;
    header["lambda"] = trace.header.lambda;
    header["rounds_recorded"] = trace.rows.size();
    header["exited"] = trace.exited;
    return header.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp);
        out << content;
        if (!out) throw DataError("short write: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

namespace {

std::vector<RoundMetrics> mean_aggregate(const std::vector<TraceFile>& traces) {
    std::size_t max_rows = 0;
    for (const auto& t : traces) max_rows = std::max(max_rows, t.rows.size());
    std::vector<RoundMetrics> mean(max_rows);
    if (max_rows == 0) return mean;
    const double count = static_cast<double>(traces.size());
    for (std::size_t r = 0; r < max_rows; ++r) {
        RoundMetrics& row = mean[r];
        row.round = static_cast<int>(r);
        row.loss = row.optimal_gap = row.grad_norm = row.decrement = row.step_size = 0.0;
        for (const auto& t : traces) {
            // Traces that exited early stay at their final recorded row.
            const RoundMetrics& src = t.rows[std::min(r, t.rows.size() - 1)];
            row.loss += src.loss;
            row.optimal_gap += src.optimal_gap;
            row.grad_norm += src.grad_norm;
            row.decrement += src.decrement;
            row.step_size += src.step_size;
            row.scalars_up += src.scalars_up;
            row.scalars_down += src.scalars_down;
        }
        row.loss /= count;
        row.optimal_gap /= count;
        row.grad_norm /= count;
        row.decrement /= count;
        row.step_size /= count;
    }
    return mean;
}

std::string mean_trace_csv(const std::vector<RoundMetrics>& rows) {
    std::string out =
        "round,mean_loss,mean_optimal_gap,mean_grad_norm,mean_decrement,"
        "mean_step_size,total_scalars_up,total_scalars_down\n";
    for (const auto& r : rows) {
        out += std::to_string(r.round);
        out += ',' + format_double(r.loss);
        out += ',' + format_double(r.optimal_gap);
        out += ',' + format_double(r.grad_norm);
        out += ',' + format_double(r.decrement);
        out += ',' + format_double(r.step_size);
        out += ',' + std::to_string(r.scalars_up);
        out += ',' + std::to_string(r.scalars_down);
        out += '\n';
    }
    return out;
}

}  // namespace

RunExperimentResult run_experiment(const ExperimentConfig& config,
                                   const std::string& out_dir, int threads) {
    if (out_dir.empty()) throw ConfigError("no output directory configured");
    std::filesystem::create_directories(out_dir);

    const PreparedExperiment prep = prepare_experiment(config);

    RunExperimentResult result;
    result.traces.resize(config.seeds.size());
    parallel_indices(static_cast<int>(config.seeds.size()), threads, [&](int i) {
        result.traces[static_cast<std::size_t>(i)] =
            run_single_seed(prep, config, config.seeds[static_cast<std::size_t>(i)]);
    });

    for (const auto& trace : result.traces) {
        const std::string stem =
            out_dir + "/trace_seed" + std::to_string(trace.header.seed);
        write_file_atomic(stem + ".csv", trace_csv(trace));
        write_file_atomic(stem + ".json", trace_sidecar_json(trace));
        result.files_written.push_back(stem + ".csv");
        result.files_written.push_back(stem + ".json");
    }

    result.mean_trace = mean_aggregate(result.traces);
    const std::string mean_path = out_dir + "/trace_mean.csv";
    write_file_atomic(mean_path, mean_trace_csv(result.mean_trace));
    result.files_written.push_back(mean_path);

    json summary;
    summary["config_hash"] = config_hash_hex(config);
    summary["algorithm"] = config.algorithm.name;
    summary["seeds"] = config.seeds;
    summary["m"] = static_cast<int>(prep.shards.size());
    summary["M"] = prep.train.feature_dim();
    summary["N"] = prep.train.num_samples();
    summary["lambda"] = prep.objective.lambda;
    summary["effective_dim"] = prep.effective_dim;
    if (!result.mean_trace.empty())
        summary["mean_final_gap"] = result.mean_trace.back().optimal_gap;
    const std::string summary_path = out_dir + "/run_summary.json";
    write_file_atomic(summary_path, summary.dump(2) + "\n");
    result.files_written.push_back(summary_path);
    return result;
}

std::vector<SweepPoint> sweep_sketch_size(const ExperimentConfig& config,
                                          const std::vector<int>& k_values,
                                          const std::string& out_dir, int threads) {
    if (k_values.empty()) throw ConfigError("sweep: k_values must be non-empty");
    if (config.algorithm.name != "fedns")
        throw ConfigError("sweep: algorithm must be fedns");
    std::filesystem::create_directories(out_dir);

    const PreparedExperiment prep = prepare_experiment(config);

    std::vector<SweepPoint> points(k_values.size());
    const int seeds = static_cast<int>(config.seeds.size());
    const int jobs = static_cast<int>(k_values.size()) * seeds;
    std::vector<double> final_gaps(static_cast<std::size_t>(jobs));
    parallel_indices(jobs, threads, [&](int job) {
        const int ki = job / seeds;
        const int si = job % seeds;
        ExperimentConfig local = config;
        local.algorithm.k = k_values[static_cast<std::size_t>(ki)];
        const TraceFile trace =
            run_single_seed(prep, local, config.seeds[static_cast<std::size_t>(si)]);
        final_gaps[static_cast<std::size_t>(job)] = trace.rows.back().optimal_gap;
    });

    std::string csv = "k,mean_final_gap\n";
    for (std::size_t ki = 0; ki < k_values.size(); ++ki) {
        double total = 0.0;
        for (int si = 0; si < seeds; ++si)
            total += final_gaps[ki * static_cast<std::size_t>(seeds) +
                                static_cast<std::size_t>(si)];
        points[ki].k = k_values[ki];
        points[ki].mean_final_gap = total / static_cast<double>(seeds);
        csv += std::to_string(points[ki].k) + ',' +
               format_double(points[ki].mean_final_gap) + '\n';
    }
    write_file_atomic(out_dir + "/sweep.csv", csv);
    return points;
}

EffDimReport estimate_effective_dimension(const ExperimentConfig& config) {
    const PreparedExperiment prep = prepare_experiment(config);
    EffDimReport report;
    report.effective_dim = prep.effective_dim;
    report.M = prep.train.feature_dim();
    report.N = prep.train.num_samples();
    report.lambda = prep.objective.lambda;
    return report;
}

}  // namespace fedns
