#include "fedns/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "fedns/errors.hpp"
#include "fedns/rng.hpp"

namespace fedns {

namespace {

double parse_number(const std::string& token, int line_no, const char* what) {
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &consumed);
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": non-numeric " + what +
                        " '" + token + "'");
    }
    if (consumed != token.size())
        throw DataError("line " + std::to_string(line_no) + ": non-numeric " + what +
                        " '" + token + "'");
    return value;
}

void normalize_labels(Eigen::VectorXd& labels) {
    bool has_zero = false;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        const double y = labels[i];
        if (y == 0.0)
            has_zero = true;
        else if (y != 1.0 && y != -1.0)
            throw DataError("unsupported label " + std::to_string(y) +
                            "; expected binary labels in {0,1} or {-1,+1}");
    }
    if (!has_zero) return;
    if ((labels.array() == -1.0).any())
        throw DataError("labels mix the {0,1} and {-1,+1} schemes");
    for (Eigen::Index i = 0; i < labels.size(); ++i)
        labels[i] = labels[i] == 0.0 ? -1.0 : 1.0;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const std::string& name, int dim_override) {
    struct Row {
        double label;
        std::vector<std::pair<int, double>> entries;  // 0-based
    };
    std::vector<Row> rows;
    int max_index = 0;

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (!line.empty() && line.back() == '\r') line.pop_back();

        std::istringstream tokens(line);
        std::string tok;
        if (!(tokens >> tok)) continue;  // blank or comment-only line

        Row row;
        row.label = parse_number(tok, line_no, "label");
        int prev_index = 0;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw DataError("line " + std::to_string(line_no) +
                                ": expected idx:val, got '" + tok + "'");
            const double idx_raw =
                parse_number(tok.substr(0, colon), line_no, "index");
            const int idx = static_cast<int>(idx_raw);
            if (idx_raw != static_cast<double>(idx) || idx < 1)
                throw DataError("line " + std::to_string(line_no) +
                                ": index must be a positive integer, got '" +
                                tok.substr(0, colon) + "'");
            if (idx <= prev_index)
                throw DataError("line " + std::to_string(line_no) +
                                ": non-ascending index " + std::to_string(idx));
            prev_index = idx;
            const double val = parse_number(tok.substr(colon + 1), line_no, "value");
            row.entries.emplace_back(idx - 1, val);
        }
        max_index = std::max(max_index, prev_index);
        rows.push_back(std::move(row));
    }

    if (rows.empty()) throw DataError("empty file");

    const int d = dim_override > 0 ? dim_override : max_index;
    if (dim_override > 0 && max_index > dim_override)
        throw DataError("feature index " + std::to_string(max_index) +
                        " exceeds dimension override " + std::to_string(dim_override));
    if (d < 1) throw DataError("no feature indices found");

    Dataset data;
    data.name = name;
    data.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), d);
    data.labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        data.labels[static_cast<Eigen::Index>(i)] = rows[i].label;
        for (const auto& [j, v] : rows[i].entries)
            data.features(static_cast<Eigen::Index>(i), j) = v;
    }
    normalize_labels(data.labels);
    if (!data.features.allFinite() || !data.labels.allFinite())
        throw DataError("dataset contains non-finite values");
    return data;
}

Dataset load_libsvm_file(const std::string& path, int dim_override) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    return parse_libsvm(in, path, dim_override);
}

std::string format_libsvm(const Dataset& data) {
    std::string out;
    char buf[64];
    for (int i = 0; i < data.num_samples(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", data.labels[i]);
        out += buf;
        for (int j = 0; j < data.feature_dim(); ++j) {
            const double v = data.features(i, j);
            if (v == 0.0) continue;
            std::snprintf(buf, sizeof buf, " %d:%.17g", j + 1, v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

Dataset apply_feature_map(const FeatureMap& fm, const Dataset& input) {
    if (fm.kind == FeatureMapKind::Identity) return input;

    if (fm.output_dim < 1)
        throw ConfigError("random_fourier feature map needs output_dim >= 1");
    if (fm.bandwidth <= 0.0)
        throw ConfigError("random_fourier feature map needs bandwidth > 0");

    const int d = input.feature_dim();
    const int M = fm.output_dim;
    rng::Counter freq_gen(rng::derive(fm.seed, 0));
    rng::Counter phase_gen(rng::derive(fm.seed, 1));
    Eigen::MatrixXd omega(d, M);
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < d; ++i) omega(i, j) = freq_gen.normal() / fm.bandwidth;
    Eigen::VectorXd phase(M);
    for (int j = 0; j < M; ++j)
        phase[j] = 2.0 * std::numbers::pi * phase_gen.uniform();

    Dataset out;
    out.name = input.name;
    out.labels = input.labels;
    out.features = (((input.features * omega).rowwise() + phase.transpose()).array().cos() *
                    std::sqrt(2.0 / static_cast<double>(M)))
                       .matrix();
    return out;
}

namespace {

std::vector<Shard> gather_shards(const Dataset& data,
                                 const std::vector<std::vector<int>>& assignment) {
    const double N = static_cast<double>(data.num_samples());
    const int M = data.feature_dim();
    std::vector<Shard> shards(assignment.size());
    for (std::size_t w = 0; w < assignment.size(); ++w) {
        const auto& ids = assignment[w];
        Shard& s = shards[w];
        s.worker_id = static_cast<int>(w);
        s.weight = static_cast<double>(ids.size()) / N;
        s.features.resize(static_cast<Eigen::Index>(ids.size()), M);
        s.labels.resize(static_cast<Eigen::Index>(ids.size()));
        for (std::size_t r = 0; r < ids.size(); ++r) {
            s.features.row(static_cast<Eigen::Index>(r)) = data.features.row(ids[r]);
            s.labels[static_cast<Eigen::Index>(r)] = data.labels[ids[r]];
        }
    }
    return shards;
}

// Largest-remainder apportionment of `total` items by `proportions`.
std::vector<int> quota_counts(int total, const std::vector<double>& proportions) {
    const int m = static_cast<int>(proportions.size());
    std::vector<int> counts(static_cast<std::size_t>(m));
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (int w = 0; w < m; ++w) {
        const double exact = proportions[static_cast<std::size_t>(w)] * total;
        counts[static_cast<std::size_t>(w)] = static_cast<int>(std::floor(exact));
        assigned += counts[static_cast<std::size_t>(w)];
        remainders.emplace_back(exact - std::floor(exact), w);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic tie-break
    });
    for (int r = 0; r < total - assigned; ++r)
        ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(r)].second)];
    return counts;
}

}  // namespace

std::vector<Shard> partition(const Dataset& data, const PartitionPlan& plan) {
    const int N = data.num_samples();
    const int m = plan.workers;
    if (m < 1) throw ConfigError("partition: workers must be >= 1");
    if (m > N) throw ConfigError("partition: more workers than samples (" +
                                 std::to_string(m) + " > " + std::to_string(N) + ")");

    std::vector<std::vector<int>> assignment(static_cast<std::size_t>(m));

    if (plan.strategy == PartitionStrategy::Iid) {
        std::vector<int> order(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) order[static_cast<std::size_t>(i)] = i;
        if (m > 1) {  // a single shard keeps the dataset order
            rng::Counter gen(rng::derive(plan.seed, 0));
            rng::shuffle(order, gen);
        }
        const int base = N / m;
        const int extra = N % m;
        int pos = 0;
        for (int w = 0; w < m; ++w) {
            const int size = base + (w < extra ? 1 : 0);
            assignment[static_cast<std::size_t>(w)].assign(order.begin() + pos,
                                                           order.begin() + pos + size);
            pos += size;
        }
    } else {
        // Group samples by class, ascending label order.
        std::map<double, std::vector<int>> by_class;
        for (int i = 0; i < N; ++i) by_class[data.labels[i]].push_back(i);

        int c = 0;
        for (auto& [label, ids] : by_class) {
            rng::Counter prop_gen(rng::derive(rng::derive(plan.seed, 0),
                                              static_cast<std::uint64_t>(c)));
            const auto proportions = rng::dirichlet(m, plan.dirichlet_alpha, prop_gen);
            rng::Counter shuffle_gen(rng::derive(rng::derive(plan.seed, 1),
                                                 static_cast<std::uint64_t>(c)));
            rng::shuffle(ids, shuffle_gen);
            const auto counts = quota_counts(static_cast<int>(ids.size()), proportions);
            int pos = 0;
            for (int w = 0; w < m; ++w) {
                const int take = counts[static_cast<std::size_t>(w)];
                auto& dst = assignment[static_cast<std::size_t>(w)];
                dst.insert(dst.end(), ids.begin() + pos, ids.begin() + pos + take);
                pos += take;
            }
            ++c;
        }

        // Repair pass: no shard may be empty.
        for (int w = 0; w < m; ++w) {
            auto& dst = assignment[static_cast<std::size_t>(w)];
            while (dst.empty()) {
                int donor = -1;
                std::size_t largest = 1;
                for (int v = 0; v < m; ++v) {
                    const auto size = assignment[static_cast<std::size_t>(v)].size();
                    if (size > largest) {
                        largest = size;
                        donor = v;
                    }
                }
                if (donor < 0) throw DataError("partition: cannot repair empty shard");
                auto& src = assignment[static_cast<std::size_t>(donor)];
                dst.push_back(src.back());
                src.pop_back();
            }
        }
    }

    return gather_shards(data, assignment);
}

Dataset synth_logistic(int n, int d, double separability, std::uint64_t seed) {
    if (n < 1 || d < 1) throw ConfigError("synth_logistic: n and d must be >= 1");

    rng::Counter w_gen(rng::derive(seed, 0));
    Eigen::VectorXd w_true(d);
    for (int j = 0; j < d; ++j) w_true[j] = w_gen.normal();
    w_true.normalize();

    rng::Counter x_gen(rng::derive(seed, 1));
    rng::Counter y_gen(rng::derive(seed, 2));
    Dataset data;
    data.name = "synth_logistic";
    data.features.resize(n, d);
    data.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j)
            data.features(i, j) = x_gen.normal() / static_cast<double>(j + 1);
        const double z = separability * data.features.row(i).dot(w_true);
        const double p = 1.0 / (1.0 + std::exp(-z));
        data.labels[i] = y_gen.uniform() < p ? 1.0 : -1.0;
    }
    return data;
}

}  // namespace fedns
