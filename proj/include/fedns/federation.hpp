#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fedns/dataset.hpp"
#include "fedns/objective.hpp"
#include "fedns/sketch.hpp"

namespace fedns {

// Inputs of the decrement-driven sketched Newton run: accuracy tolerance
// delta, Armijo parameters (a, b), the two phase sketch sizes, and the
// decrement threshold eta that switches between them.
struct FedNdesConfig {
    double delta = 1e-12;         // > 0
    double armijo_a = 0.1;        // in (0, 1/2)
    double backtrack_b = 0.5;     // in (0, 1)
    int mbar1 = 1;                // phase-1 sketch rows
    int mbar2 = 1;                // phase-2 sketch rows
    double eta = 1.0 / 16.0;      // decrement threshold, > 0
    enum class ExitRule { Paper, Linear } exit_rule = ExitRule::Paper;
    int max_backtracks = 50;
};

// Per-round instrumentation. Rows are recorded after the round's model update;
// `decrement` and `step_size` belong to the update that produced the row.
// `wall_ns` is diagnostic only and excluded from the reproducibility contract
// (it is never serialized into trace files).
//
// Uploaded scalar counts per round, exact:
//   fednewton  m * (M^2 + M)
//   fedns      m * (k M + M)
//   fedavg     m * M
//   fedndes    m * (k M + M) + m   (+m for the step sizes; exit rounds upload
//                                   only m * (k M + M))
struct RoundMetrics {
    int round = 0;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double optimal_gap = std::numeric_limits<double>::quiet_NaN();
    double grad_norm = std::numeric_limits<double>::quiet_NaN();
    double decrement = std::numeric_limits<double>::quiet_NaN();
    double step_size = std::numeric_limits<double>::quiet_NaN();
    long long scalars_up = 0;
    long long scalars_down = 0;
    long long wall_ns = 0;
};

// Shared run plumbing. `reference_loss` is L(w*) for optimal-gap columns (NaN
// leaves the gap NaN). `worker_threads` > 1 runs the per-worker local steps
// concurrently; results are bit-identical to the serial schedule because all
// worker randomness is pre-derived from (seed, round, worker) and aggregation
// happens in ascending worker order after a barrier. `on_round` observes each
// recorded iterate (round 0 included).
struct FedRunOptions {
    double reference_loss = std::numeric_limits<double>::quiet_NaN();
    int worker_threads = 1;
    std::function<void(int round, const Eigen::VectorXd& w)> on_round;
};

struct FedRunResult {
    std::vector<RoundMetrics> trace;
    ModelState state;
    bool exited = false;  // fedndes only: decrement exit rule fired
};

// One worker's upload: Upsilon_j = S_j * sqrt_hessian factor, and the local
// gradient (loss term plus lambda w, so the weighted sum over workers is the
// global gradient).
struct LocalSketchUpload {
    Eigen::MatrixXd upsilon;  // k x M
    Eigen::VectorXd grad;     // M
    int worker_id = -1;
    double weight = 0.0;
};

LocalSketchUpload local_sketch_round(const Shard& shard, const Objective& obj,
                                     const Eigen::VectorXd& w, const SketchOperator& S);

// sum_j weight_j * Upsilon_j^T Upsilon_j + lambda I, accumulated in list
// order (callers pass ascending worker_id for bit-reproducibility).
Eigen::MatrixXd aggregate_sketched_hessian(
    const std::vector<std::pair<Eigen::MatrixXd, double>>& uploads, double lambda);

// One exact federated Newton step: w <- w - mu H^{-1} g with H, g the
// weight-aggregated per-shard Hessians and gradients.
ModelState fednewton_round(const std::vector<Shard>& shards, const Objective& obj,
                           const Eigen::VectorXd& w, double mu);

FedRunResult fednewton_run(const std::vector<Shard>& shards, const Objective& obj,
                           const Eigen::VectorXd& w0, double mu, int rounds,
                           const FedRunOptions& opts = {});

// T rounds of sketched federated Newton with fresh per-(round, worker)
// operators seeded by derive(derive(seed, t), worker). Identity kind ignores
// `k` and uses each shard's own row count.
FedRunResult fedns_run(const std::vector<Shard>& shards, const Objective& obj,
                       const Eigen::VectorXd& w0, double mu, int k, int rounds,
                       std::uint64_t seed, SketchKind kind = SketchKind::Srht,
                       const FedRunOptions& opts = {});

// lambda_tilde = -g . delta_w = g^T H~^{-1} g for delta_w = -H~^{-1} g;
// nonnegative whenever H~ is positive semidefinite.
double newton_decrement(const Eigen::VectorXd& g, const Eigen::VectorXd& delta_w);

// Armijo backtracking on the shard's local loss, from mu = 1, shrinking by b:
// accept the first mu with L_j(w + mu dw) <= L_j(w) - a mu lambda_tilde.
// Throws NumericError once max_backtracks is exceeded (non-descent direction).
double local_line_search(const Shard& shard, const Objective& obj,
                         const Eigen::VectorXd& w, const Eigen::VectorXd& delta_w,
                         double lambda_tilde, double a, double b,
                         int max_backtracks = 50);

// Sketched Newton with the decrement exit test, per-worker Armijo searches,
// mu = min over workers, and the eta-threshold switch from mbar1 to mbar2.
FedRunResult fedndes_run(const std::vector<Shard>& shards, const Objective& obj,
                         const Eigen::VectorXd& w0, const FedNdesConfig& cfg,
                         int max_rounds, std::uint64_t seed,
                         SketchKind kind = SketchKind::Srht,
                         const FedRunOptions& opts = {});

// First-order baseline: each worker takes `local_steps` full-batch gradient
// steps per round; the server averages models by weight.
FedRunResult fedavg_baseline_run(const std::vector<Shard>& shards, const Objective& obj,
                                 const Eigen::VectorXd& w0, int local_steps,
                                 double step_size, int rounds, std::uint64_t seed,
                                 const FedRunOptions& opts = {});

// Exact scalar counts aggregated from a trace; bytes assume 64-bit floats.
struct LedgerSummary {
    std::vector<long long> up_per_round;
    std::vector<long long> down_per_round;
    long long total_up = 0;
    long long total_down = 0;
    long long bytes_up = 0;
    long long bytes_down = 0;
};

LedgerSummary communication_ledger(const std::vector<RoundMetrics>& trace);

}  // namespace fedns
