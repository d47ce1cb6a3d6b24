#include "fedns/sketch.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fedns/errors.hpp"
#include "fedns/rng.hpp"

namespace fedns {

namespace {

// Stream ids for the independent pieces of operator randomness.
constexpr std::uint64_t kStreamEntries = 0;  // Gaussian entries / Sjlt rows
constexpr std::uint64_t kStreamSigns = 1;    // Srht sign diagonal / Sjlt signs
constexpr std::uint64_t kStreamRows = 2;     // Srht row sampling

}  // namespace

namespace rng {

std::vector<int> sample_without_replacement(int k, int n, Counter& rng) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<double> dirichlet(int m, double alpha, Counter& rng) {
    std::vector<double> p(static_cast<std::size_t>(m));
    double total = 0.0;
    for (auto& v : p) {
        v = rng.gamma(alpha);
        total += v;
    }
    if (total <= 0.0) {  // all draws underflowed; fall back to uniform
        for (auto& v : p) v = 1.0 / static_cast<double>(m);
        return p;
    }
    for (auto& v : p) v /= total;
    return p;
}

}  // namespace rng

void fwht_inplace(std::span<double> x) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw Error("fwht_inplace: length must be a power of two");
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const double a = x[j];
                const double b = x[j + h];
                x[j] = a + b;
                x[j + h] = a - b;
            }
        }
    }
}

SketchOperator make_sketch(SketchKind kind, int k, int n, std::uint64_t seed) {
    if (k < 1 || n < 1) throw Error("make_sketch: k and n must be >= 1");

    SketchOperator op;
    op.kind = kind;
    op.k = k;
    op.n = n;
    op.seed = seed;

    switch (kind) {
        case SketchKind::Gaussian: {
            rng::Counter gen(rng::derive(seed, kStreamEntries));
            const double scale = 1.0 / std::sqrt(static_cast<double>(k));
            op.dense.resize(k, n);
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < k; ++i) op.dense(i, j) = gen.normal() * scale;
            break;
        }
        case SketchKind::Srht: {
            op.n_pad = static_cast<int>(std::bit_ceil(static_cast<unsigned>(n)));
            if (k > op.n_pad)
                throw Error("make_sketch: Srht needs k <= n_pad (distinct sampled rows)");
            rng::Counter sign_gen(rng::derive(seed, kStreamSigns));
            op.signs.resize(static_cast<std::size_t>(op.n_pad));
            for (auto& s : op.signs) s = sign_gen.sign();
            rng::Counter row_gen(rng::derive(seed, kStreamRows));
            op.sampled_rows = rng::sample_without_replacement(k, op.n_pad, row_gen);
            break;
        }
        case SketchKind::Sjlt: {
            rng::Counter row_gen(rng::derive(seed, kStreamEntries));
            rng::Counter sign_gen(rng::derive(seed, kStreamSigns));
            op.target_row.resize(static_cast<std::size_t>(n));
            op.column_sign.resize(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) {
                op.target_row[static_cast<std::size_t>(j)] =
                    static_cast<int>(row_gen.below(static_cast<std::uint64_t>(k)));
                op.column_sign[static_cast<std::size_t>(j)] = sign_gen.sign();
            }
            break;
        }
        case SketchKind::Identity: {
            if (k != n) throw Error("make_sketch: Identity requires k == n");
            break;
        }
        default:
            throw Error("make_sketch: invalid kind");
    }
    return op;
}

Eigen::MatrixXd apply_sketch(const SketchOperator& S, const Eigen::MatrixXd& A) {
    if (A.rows() != S.n) throw Error("apply_sketch: A must have exactly S.n rows");
    const auto cols = A.cols();

    switch (S.kind) {
        case SketchKind::Gaussian:
            return S.dense * A;
        case SketchKind::Srht: {
            // Column at a time: sign flip -> zero-padded FWHT -> subsample.
            // Overall scale sqrt(n_pad/k) * 1/sqrt(n_pad) = 1/sqrt(k).
            Eigen::MatrixXd out(S.k, cols);
            const double scale = 1.0 / std::sqrt(static_cast<double>(S.k));
            std::vector<double> buf(static_cast<std::size_t>(S.n_pad));
            for (Eigen::Index c = 0; c < cols; ++c) {
                for (int i = 0; i < S.n; ++i)
                    buf[static_cast<std::size_t>(i)] =
                        A(i, c) * S.signs[static_cast<std::size_t>(i)];
                std::fill(buf.begin() + S.n, buf.end(), 0.0);
                fwht_inplace(buf);
                for (int r = 0; r < S.k; ++r)
                    out(r, c) = scale * buf[static_cast<std::size_t>(S.sampled_rows[static_cast<std::size_t>(r)])];
            }
            return out;
        }
        case SketchKind::Sjlt: {
            Eigen::MatrixXd out = Eigen::MatrixXd::Zero(S.k, cols);
            for (int j = 0; j < S.n; ++j)
                out.row(S.target_row[static_cast<std::size_t>(j)]) +=
                    S.column_sign[static_cast<std::size_t>(j)] * A.row(j);
            return out;
        }
        case SketchKind::Identity:
            return A;
    }
    throw Error("apply_sketch: invalid kind");
}

Eigen::MatrixXd materialize(const SketchOperator& S) {
    if (static_cast<long long>(S.k) * static_cast<long long>(S.n) > 100'000'000LL)
        throw Error("materialize: k*n exceeds the 1e8 size guard");
    return apply_sketch(S, Eigen::MatrixXd::Identity(S.n, S.n));
}

SketchKind sketch_kind_from_string(const std::string& name) {
    if (name == "gaussian") return SketchKind::Gaussian;
    if (name == "srht") return SketchKind::Srht;
    if (name == "sjlt") return SketchKind::Sjlt;
    if (name == "identity") return SketchKind::Identity;
    throw Error("unknown sketch kind: " + name);
}

const char* to_string(SketchKind kind) {
    switch (kind) {
        case SketchKind::Gaussian: return "gaussian";
        case SketchKind::Srht: return "srht";
        case SketchKind::Sjlt: return "sjlt";
        case SketchKind::Identity: return "identity";
    }
    return "?";
}

}  // namespace fedns
