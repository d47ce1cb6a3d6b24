#include "fedns/federation.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "fedns/errors.hpp"
#include "fedns/linalg.hpp"
#include "fedns/rng.hpp"

namespace fedns {

namespace {

using Clock = std::chrono::steady_clock;

long long elapsed_ns(Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since)
        .count();
}

void check_shards(const std::vector<Shard>& shards, const Eigen::VectorXd& w0) {
    if (shards.empty()) throw Error("federation: no shards");
    double total = 0.0;
    for (std::size_t j = 0; j < shards.size(); ++j) {
        if (shards[j].worker_id != static_cast<int>(j))
            throw Error("federation: shards must arrive in ascending worker_id order");
        if (shards[j].feature_dim() != w0.size())
            throw Error("federation: shard feature dim and w0 disagree");
        if (shards[j].num_samples() < 1) throw Error("federation: empty shard");
        total += shards[j].weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error("federation: shard weights must sum to 1");
}

// Runs fn(0..count-1), optionally across threads. Each index writes only its
// own outputs, so the schedule cannot affect results.
void for_each_worker(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    const int workers = std::min(threads, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
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

// Server-side instrumentation: global loss and gradient as weighted shard
// sums (exact because sum_j weight_j = 1 and each local term carries the
// lambda part).
double global_loss(const std::vector<Shard>& shards, const Objective& obj,
                   const Eigen::VectorXd& w) {
    double total = 0.0;
    for (const auto& s : shards) total += s.weight * loss(obj, s, w);
    return total;
}

Eigen::VectorXd global_gradient(const std::vector<Shard>& shards, const Objective& obj,
                                const Eigen::VectorXd& w) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
    for (const auto& s : shards) g += s.weight * gradient(obj, s, w);
    return g;
}

RoundMetrics observe(const std::vector<Shard>& shards, const Objective& obj,
                     const Eigen::VectorXd& w, int round, double reference_loss) {
    RoundMetrics m;
    m.round = round;
    m.loss = global_loss(shards, obj, w);
    m.grad_norm = global_gradient(shards, obj, w).norm();
    if (!std::isnan(reference_loss))
        m.optimal_gap = std::isfinite(m.loss)
                            ? m.loss - reference_loss
                            : std::numeric_limits<double>::infinity();
    return m;
}

void notify(const FedRunOptions& opts, int round, const Eigen::VectorXd& w) {
    if (opts.on_round) opts.on_round(round, w);
}

}  // namespace

LocalSketchUpload local_sketch_round(const Shard& shard, const Objective& obj,
                                     const Eigen::VectorXd& w, const SketchOperator& S) {
    if (S.n != shard.num_samples())
        throw Error("local_sketch_round: sketch input rows != shard samples");
    LocalSketchUpload up;
    up.worker_id = shard.worker_id;
    up.weight = shard.weight;
    up.upsilon = apply_sketch(S, sqrt_hessian(obj, shard, w).factor);
    up.grad = gradient(obj, shard, w);
    return up;
}

Eigen::MatrixXd aggregate_sketched_hessian(
    const std::vector<std::pair<Eigen::MatrixXd, double>>& uploads, double lambda) {
    if (uploads.empty()) throw Error("aggregate_sketched_hessian: no uploads");
    const Eigen::Index M = uploads.front().first.cols();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, M);
    for (const auto& [upsilon, weight] : uploads) {
        if (upsilon.cols() != M)
            throw Error("aggregate_sketched_hessian: inconsistent widths");
        H.selfadjointView<Eigen::Lower>().rankUpdate(upsilon.transpose(), weight);
    }
    H = H.selfadjointView<Eigen::Lower>();
    H.diagonal().array() += lambda;
    return H;
}

ModelState fednewton_round(const std::vector<Shard>& shards, const Objective& obj,
                           const Eigen::VectorXd& w, double mu) {
    check_shards(shards, w);
    const Eigen::Index M = w.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, M);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(M);
    for (const auto& s : shards) {
        H += s.weight * hessian(obj, s, w);
        g += s.weight * gradient(obj, s, w);
    }
    ModelState next;
    next.w = w - mu * solve_spd(H, g);
    next.round = 1;
    return next;
}

FedRunResult fednewton_run(const std::vector<Shard>& shards, const Objective& obj,
                           const Eigen::VectorXd& w0, double mu, int rounds,
                           const FedRunOptions& opts) {
    check_shards(shards, w0);
    const auto start = Clock::now();
    const int m = static_cast<int>(shards.size());
    const long long M = w0.size();

    FedRunResult result;
    result.state.w = w0;
    RoundMetrics first = observe(shards, obj, w0, 0, opts.reference_loss);
    first.wall_ns = elapsed_ns(start);
    result.trace.push_back(first);
    notify(opts, 0, result.state.w);

    for (int t = 1; t <= rounds; ++t) {
        const Eigen::Index dim = w0.size();
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        std::vector<Eigen::MatrixXd> hs(shards.size());
        std::vector<Eigen::VectorXd> gs(shards.size());
        long long uploaded = 0;
        for_each_worker(m, opts.worker_threads, [&](int j) {
            const auto idx = static_cast<std::size_t>(j);
            hs[idx] = hessian(obj, shards[idx], result.state.w);
            gs[idx] = gradient(obj, shards[idx], result.state.w);
        });
        for (std::size_t j = 0; j < shards.size(); ++j) {
            H += shards[j].weight * hs[j];
            g += shards[j].weight * gs[j];
            uploaded += hs[j].size() + gs[j].size();
        }
        const Eigen::VectorXd step = solve_spd(H, g);
        result.state.w -= mu * step;
        result.state.round = t;

        RoundMetrics row = observe(shards, obj, result.state.w, t, opts.reference_loss);
        row.decrement = g.dot(step);
        row.step_size = mu;
        row.scalars_up = uploaded;
        row.scalars_down = static_cast<long long>(m) * M;
        row.wall_ns = elapsed_ns(start);
        result.trace.push_back(row);
        notify(opts, t, result.state.w);
    }
    return result;
}

FedRunResult fedns_run(const std::vector<Shard>& shards, const Objective& obj,
                       const Eigen::VectorXd& w0, double mu, int k, int rounds,
                       std::uint64_t seed, SketchKind kind, const FedRunOptions& opts) {
    check_shards(shards, w0);
    if (kind != SketchKind::Identity && k < 1) throw Error("fedns_run: k must be >= 1");
    const auto start = Clock::now();
    const int m = static_cast<int>(shards.size());
    const long long M = w0.size();

    FedRunResult result;
    result.state.w = w0;
    RoundMetrics first = observe(shards, obj, w0, 0, opts.reference_loss);
    first.wall_ns = elapsed_ns(start);
    result.trace.push_back(first);
    notify(opts, 0, result.state.w);

    for (int t = 1; t <= rounds; ++t) {
        std::vector<LocalSketchUpload> uploads(shards.size());
        const std::uint64_t round_seed = rng::derive(seed, static_cast<std::uint64_t>(t));
        for_each_worker(m, opts.worker_threads, [&](int j) {
            const auto idx = static_cast<std::size_t>(j);
            const Shard& shard = shards[idx];
            const int rows = kind == SketchKind::Identity ? shard.num_samples() : k;
            const SketchOperator S =
                make_sketch(kind, rows, shard.num_samples(),
                            rng::derive(round_seed, static_cast<std::uint64_t>(j)));
            uploads[idx] = local_sketch_round(shard, obj, result.state.w, S);
        });

        std::vector<std::pair<Eigen::MatrixXd, double>> gram;
        gram.reserve(uploads.size());
        Eigen::VectorXd g = Eigen::VectorXd::Zero(w0.size());
        long long uploaded = 0;
        for (const auto& up : uploads) {
            gram.emplace_back(up.upsilon, up.weight);
            g += up.weight * up.grad;
            uploaded += up.upsilon.size() + up.grad.size();
        }
        const Eigen::MatrixXd H = aggregate_sketched_hessian(gram, obj.lambda);
        const Eigen::VectorXd step = solve_spd(H, g);
        result.state.w -= mu * step;
        result.state.round = t;

        RoundMetrics row = observe(shards, obj, result.state.w, t, opts.reference_loss);
        row.decrement = g.dot(step);
        row.step_size = mu;
        row.scalars_up = uploaded;
        row.scalars_down = static_cast<long long>(m) * M;
        row.wall_ns = elapsed_ns(start);
        result.trace.push_back(row);
        notify(opts, t, result.state.w);
    }
    return result;
}

double newton_decrement(const Eigen::VectorXd& g, const Eigen::VectorXd& delta_w) {
    if (g.size() != delta_w.size()) throw Error("newton_decrement: size mismatch");
    return -g.dot(delta_w);
}

double local_line_search(const Shard& shard, const Objective& obj,
                         const Eigen::VectorXd& w, const Eigen::VectorXd& delta_w,
                         double lambda_tilde, double a, double b, int max_backtracks) {
    if (a <= 0.0 || a >= 0.5) throw Error("local_line_search: a must be in (0, 1/2)");
    if (b <= 0.0 || b >= 1.0) throw Error("local_line_search: b must be in (0, 1)");
    const double base = loss(obj, shard, w);
    double mu = 1.0;
    for (int i = 0; i <= max_backtracks; ++i, mu *= b) {
        if (loss(obj, shard, w + mu * delta_w) <= base - a * mu * lambda_tilde) return mu;
    }
    throw NumericError("local_line_search: worker " + std::to_string(shard.worker_id) +
                       " exceeded " + std::to_string(max_backtracks) +
                       " backtracks (non-descent direction)");
}

FedRunResult fedndes_run(const std::vector<Shard>& shards, const Objective& obj,
                         const Eigen::VectorXd& w0, const FedNdesConfig& cfg,
                         int max_rounds, std::uint64_t seed, SketchKind kind,
                         const FedRunOptions& opts) {
    check_shards(shards, w0);
    if (cfg.delta <= 0.0) throw Error("fedndes: delta must be > 0");
    if (cfg.armijo_a <= 0.0 || cfg.armijo_a >= 0.5)
        throw Error("fedndes: a must be in (0, 1/2)");
    if (cfg.backtrack_b <= 0.0 || cfg.backtrack_b >= 1.0)
        throw Error("fedndes: b must be in (0, 1)");
    if (cfg.mbar1 < 1 || cfg.mbar2 < 1) throw Error("fedndes: sketch sizes must be >= 1");
    if (cfg.eta <= 0.0) throw Error("fedndes: eta must be > 0");

    const auto start = Clock::now();
    const int m = static_cast<int>(shards.size());
    const long long M = w0.size();

    FedRunResult result;
    result.state.w = w0;
    RoundMetrics first = observe(shards, obj, w0, 0, opts.reference_loss);
    first.wall_ns = elapsed_ns(start);
    result.trace.push_back(first);
    notify(opts, 0, result.state.w);

    int k = cfg.mbar1;
    for (int t = 1; t <= max_rounds; ++t) {
        std::vector<LocalSketchUpload> uploads(shards.size());
        const std::uint64_t round_seed = rng::derive(seed, static_cast<std::uint64_t>(t));
        const int k_round = k;
        for_each_worker(m, opts.worker_threads, [&](int j) {
            const auto idx = static_cast<std::size_t>(j);
            const Shard& shard = shards[idx];
            const int rows = kind == SketchKind::Identity ? shard.num_samples() : k_round;
            const SketchOperator S =
                make_sketch(kind, rows, shard.num_samples(),
                            rng::derive(round_seed, static_cast<std::uint64_t>(j)));
            uploads[idx] = local_sketch_round(shard, obj, result.state.w, S);
        });

        std::vector<std::pair<Eigen::MatrixXd, double>> gram;
        gram.reserve(uploads.size());
        Eigen::VectorXd g = Eigen::VectorXd::Zero(w0.size());
        long long uploaded = 0;
        for (const auto& up : uploads) {
            gram.emplace_back(up.upsilon, up.weight);
            g += up.weight * up.grad;
            uploaded += up.upsilon.size() + up.grad.size();
        }
        const Eigen::MatrixXd H = aggregate_sketched_hessian(gram, obj.lambda);
        const Eigen::VectorXd delta_w = -solve_spd(H, g);
        const double lambda_tilde = newton_decrement(g, delta_w);

        const bool exit_now = cfg.exit_rule == FedNdesConfig::ExitRule::Paper
                                  ? lambda_tilde * lambda_tilde <= 0.75 * cfg.delta
                                  : lambda_tilde <= 0.75 * cfg.delta;
        if (exit_now) {
            RoundMetrics row = observe(shards, obj, result.state.w, t, opts.reference_loss);
            row.decrement = lambda_tilde;
            row.step_size = 0.0;
            row.scalars_up = uploaded;  // sketches and gradients were uploaded
            row.scalars_down = 0;
            row.wall_ns = elapsed_ns(start);
            result.trace.push_back(row);
            notify(opts, t, result.state.w);
            result.exited = true;
            return result;
        }

        // Broadcast (delta_w, lambda_tilde), collect per-worker step sizes.
        std::vector<double> mus(shards.size());
        for_each_worker(m, opts.worker_threads, [&](int j) {
            const auto idx = static_cast<std::size_t>(j);
            mus[idx] = local_line_search(shards[idx], obj, result.state.w, delta_w,
                                         lambda_tilde, cfg.armijo_a, cfg.backtrack_b,
                                         cfg.max_backtracks);
        });
        double mu = mus.front();
        for (double v : mus) mu = std::min(mu, v);

        result.state.w += mu * delta_w;
        result.state.round = t;

        RoundMetrics row = observe(shards, obj, result.state.w, t, opts.reference_loss);
        row.decrement = lambda_tilde;
        row.step_size = mu;
        row.scalars_up = uploaded + m;                              // + mu_j
        row.scalars_down = 2 * static_cast<long long>(m) * (M + 1); // (dw, l~), (w, k)
        row.wall_ns = elapsed_ns(start);
        result.trace.push_back(row);
        notify(opts, t, result.state.w);

        k = lambda_tilde > cfg.eta ? cfg.mbar1 : cfg.mbar2;
    }
    return result;  // max_rounds reached without the exit test firing
}

FedRunResult fedavg_baseline_run(const std::vector<Shard>& shards, const Objective& obj,
                                 const Eigen::VectorXd& w0, int local_steps,
                                 double step_size, int rounds, std::uint64_t seed,
                                 const FedRunOptions& opts) {
    check_shards(shards, w0);
    if (local_steps < 1) throw Error("fedavg: local_steps must be >= 1");
    (void)seed;  // full-batch local descent is deterministic; kept for interface parity
    const auto start = Clock::now();
    const int m = static_cast<int>(shards.size());
    const long long M = w0.size();

    FedRunResult result;
    result.state.w = w0;
    RoundMetrics first = observe(shards, obj, w0, 0, opts.reference_loss);
    first.wall_ns = elapsed_ns(start);
    result.trace.push_back(first);
    notify(opts, 0, result.state.w);

    for (int t = 1; t <= rounds; ++t) {
        std::vector<Eigen::VectorXd> locals(shards.size());
        for_each_worker(m, opts.worker_threads, [&](int j) {
            const auto idx = static_cast<std::size_t>(j);
            Eigen::VectorXd w = result.state.w;
            for (int s = 0; s < local_steps; ++s)
                w -= step_size * gradient(obj, shards[idx], w);
            locals[idx] = std::move(w);
        });
        Eigen::VectorXd next = Eigen::VectorXd::Zero(w0.size());
        for (std::size_t j = 0; j < shards.size(); ++j)
            next += shards[j].weight * locals[j];
        result.state.w = std::move(next);
        result.state.round = t;

        RoundMetrics row = observe(shards, obj, result.state.w, t, opts.reference_loss);
        row.step_size = step_size;
        row.scalars_up = static_cast<long long>(m) * M;
        row.scalars_down = static_cast<long long>(m) * M;
        row.wall_ns = elapsed_ns(start);
        result.trace.push_back(row);
        notify(opts, t, result.state.w);
    }
    return result;
}

LedgerSummary communication_ledger(const std::vector<RoundMetrics>& trace) {
    LedgerSummary summary;
    summary.up_per_round.reserve(trace.size());
    summary.down_per_round.reserve(trace.size());
    for (const auto& row : trace) {
        summary.up_per_round.push_back(row.scalars_up);
        summary.down_per_round.push_back(row.scalars_down);
        summary.total_up += row.scalars_up;
        summary.total_down += row.scalars_down;
    }
    summary.bytes_up = summary.total_up * 8;
    summary.bytes_down = summary.total_down * 8;
    return summary;
}

}  // namespace fedns
