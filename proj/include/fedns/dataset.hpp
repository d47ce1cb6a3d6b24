#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fedns {

// Dense feature-mapped samples with labels. Classification labels are
// normalized to {-1, +1}.
struct Dataset {
    Eigen::MatrixXd features;  // N x d
    Eigen::VectorXd labels;    // length N
    std::string name;

    int num_samples() const { return static_cast<int>(features.rows()); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
};

// One worker's local data plus its federation weight n_j / N.
struct Shard {
    Eigen::MatrixXd features;  // n_j x M
    Eigen::VectorXd labels;
    double weight = 0.0;
    int worker_id = 0;

    int num_samples() const { return static_cast<int>(features.rows()); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
};

enum class FeatureMapKind { Identity, RandomFourier };

// phi: R^d -> R^M. Identity keeps the input (M = d). RandomFourier maps
// x -> sqrt(2/M) cos(x^T Omega + b) with Omega_ij ~ N(0, 1/bandwidth^2) and
// b uniform in [0, 2pi); the map is a deterministic function of
// (seed, d, output_dim, bandwidth).
struct FeatureMap {
    FeatureMapKind kind = FeatureMapKind::Identity;
    int output_dim = 0;       // M; ignored for Identity
    double bandwidth = 1.0;   // RandomFourier only
    std::uint64_t seed = 0;   // RandomFourier only
};

enum class PartitionStrategy { Iid, LabelSkew };

// How to split a dataset across m workers.
//
// Iid: seeded shuffle, then contiguous blocks with sizes differing by at most
// one (the first N mod m shards get the extra sample); m = 1 keeps the
// dataset order.
//
// LabelSkew: for class index c (classes in ascending label order), worker
// proportions are Dirichlet(dirichlet_alpha) drawn from
// Counter(derive(derive(seed, 0), c)), the class's samples are shuffled with
// Counter(derive(derive(seed, 1), c)) and dealt to workers by
// largest-remainder quotas; a repair pass then moves single samples from the
// largest shard to any empty one.
struct PartitionPlan {
    PartitionStrategy strategy = PartitionStrategy::Iid;
    int workers = 1;
    double dirichlet_alpha = 1.0;  // LabelSkew only
    std::uint64_t seed = 0;
};

// Parses LIBSVM/SVMlight text: `label idx:val idx:val ...`, 1-based strictly
// ascending indices, `#` starts a trailing comment, LF or CRLF. Absent indices
// are zero; d is the largest index seen unless dim_override > 0. Labels {0,1}
// or {-1,+1} are normalized to {-1,+1}; anything else is rejected. Malformed
// lines raise DataError with the line number.
Dataset parse_libsvm(std::istream& in, const std::string& name = "",
                     int dim_override = 0);
Dataset load_libsvm_file(const std::string& path, int dim_override = 0);

// Serializes to the same format (nonzero entries only, round-trip exact).
std::string format_libsvm(const Dataset& data);

Dataset apply_feature_map(const FeatureMap& fm, const Dataset& input);

std::vector<Shard> partition(const Dataset& data, const PartitionPlan& plan);

// Synthetic logistic benchmark: w_true uniform on the sphere, rows
// x ~ N(0, diag(1/i^2)), labels drawn from the logistic model with slope
// `separability`. The 1/i^2 spectral decay keeps the effective dimension well
// below d.
Dataset synth_logistic(int n, int d, double separability, std::uint64_t seed);

}  // namespace fedns
