#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedns/dataset.hpp"
#include "fedns/federation.hpp"
#include "fedns/objective.hpp"
#include "fedns/sketch.hpp"

namespace fedns {

// Experiment configuration, parsed from a single JSON file. The schema is
// validated strictly before any compute: unknown keys anywhere are rejected.
// See README.md for the documented schema.

struct SyntheticSpec {
    int n = 0;
    int d = 0;
    double separability = 1.0;
    std::uint64_t seed = 0;
};

struct DatasetSource {
    bool synthetic = true;
    std::string path;       // file source
    SyntheticSpec synth;    // synthetic source
};

struct TestSplitSpec {
    double fraction = 0.0;
    std::uint64_t seed = 0;
};

struct AlgorithmSpec {
    std::string name;  // fednewton | fedns | fedndes | fedavg
    int rounds = 0;
    // fednewton / fedns
    double mu = 1.0;
    // fedns / fedndes
    int k = 0;  // fedns sketch rows
    SketchKind sketch = SketchKind::Srht;
    FedNdesConfig ndes;       // fedndes; mbar1/mbar2 == 0 means auto-size
    bool mbar1_auto = true;   // ceil(4 d~) at w0
    bool mbar2_auto = true;   // ceil(16 d~) at w0
    // fedavg
    int local_steps = 1;
    double step_size = 0.1;
};

struct ExperimentConfig {
    DatasetSource dataset;
    FeatureMap feature_map;
    Objective objective;
    PartitionPlan partition_plan;
    AlgorithmSpec algorithm;
    std::vector<std::uint64_t> seeds;
    std::optional<TestSplitSpec> test_split;
    std::vector<int> sweep_k_values;  // optional; used by the sweep-k verb
    std::string output_dir;           // optional; --out overrides

    std::string canonical_text;  // canonical JSON, input to the config hash
};

ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// FNV-1a 64 over the canonical config serialization, as 16 hex digits.
std::string config_hash_hex(const ExperimentConfig& config);

struct TraceHeader {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string algorithm;
    int k = 0;  // fedns k or resolved fedndes mbar1; 0 when not applicable
    int m = 0;
    int M = 0;
    long long N = 0;
    double effective_dim = 0.0;  // d~ of the loss-term Hessian at w0
    double lambda = 0.0;
};

struct TraceFile {
    TraceHeader header;
    std::vector<RoundMetrics> rows;
    std::vector<double> test_accuracy;  // empty, or one entry per row
    bool exited = false;                // fedndes decrement exit fired
};

// Dataset, shards, reference optimum and sizing shared by every seed of a run.
struct PreparedExperiment {
    Dataset train;
    Dataset test;  // empty unless a test split is configured
    std::vector<Shard> shards;
    Objective objective;
    Eigen::VectorXd w_star;
    double reference_loss = 0.0;
    double effective_dim = 0.0;
    int resolved_mbar1 = 0;
    int resolved_mbar2 = 0;
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

TraceFile run_single_seed(const PreparedExperiment& prep, const ExperimentConfig& config,
                          std::uint64_t seed);

struct RunExperimentResult {
    std::vector<TraceFile> traces;          // one per seed, config order
    std::vector<RoundMetrics> mean_trace;   // carry-forward mean across seeds
    std::vector<std::string> files_written;
};

// Computes w* once, runs the configured algorithm per seed (optionally in
// parallel), and writes one trace per seed plus the mean-aggregate trace.
// Outputs are written atomically and are byte-identical across reruns and
// thread counts.
RunExperimentResult run_experiment(const ExperimentConfig& config,
                                   const std::string& out_dir, int threads = 1);

struct SweepPoint {
    int k = 0;
    double mean_final_gap = 0.0;
};

// Sketch-size sweep: rerun the fedns configuration at each sketch size and
// record the mean final gap over seeds; emits <out_dir>/sweep.csv.
std::vector<SweepPoint> sweep_sketch_size(const ExperimentConfig& config,
                                          const std::vector<int>& k_values,
                                          const std::string& out_dir, int threads = 1);

struct EffDimReport {
    double effective_dim = 0.0;
    int M = 0;
    long long N = 0;
    double lambda = 0.0;
};

// d~ of the loss-term Hessian at w0 = 0 for the configured problem.
EffDimReport estimate_effective_dimension(const ExperimentConfig& config);

// Trace serialization (fixed column order; doubles as %.17g).
std::string trace_csv(const TraceFile& trace);
std::string trace_sidecar_json(const TraceFile& trace);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace fedns
