#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fedns {

enum class SketchKind { Gaussian, Srht, Sjlt, Identity };

// A seeded random embedding S in R^{k x n}, scaled so that E[S^T S] = I_n.
// Folding the 1/sqrt(k) into the entries makes (S B)^T (S B) an unbiased
// estimate of B^T B; equivalently, the unit-variance operator S' = sqrt(k) S
// satisfies the conventional normalization E[S'^T S' / k] = I.
//
// Entry scales per kind:
//   Gaussian: i.i.d. N(0, 1) / sqrt(k).
//   Srht:     sign flip, Walsh-Hadamard transform on n_pad = next power of two
//             >= n, k rows sampled uniformly without replacement, scaled
//             sqrt(n_pad / k) relative to the orthonormal transform. Entries
//             come out as +-1/sqrt(k).
//   Sjlt:     exactly one +-1 per column at a uniformly chosen row (s = 1).
//   Identity: the exact k = n embedding; degenerate kind used for exact-sketch
//             runs and equivalence tests.
//
// Same (kind, k, n, seed) reproduces a bit-identical operator. Immutable after
// construction and safe to share across threads.
struct SketchOperator {
    SketchKind kind = SketchKind::Gaussian;
    int k = 0;           // sketch rows
    int n = 0;           // input rows
    std::uint64_t seed = 0;

    // Gaussian: dense k x n entries.
    Eigen::MatrixXd dense;
    // Srht: sign vector (length n_pad) and sampled row indices (ascending).
    int n_pad = 0;
    std::vector<double> signs;
    std::vector<int> sampled_rows;
    // Sjlt: per-column target row and sign.
    std::vector<int> target_row;
    std::vector<double> column_sign;
};

SketchOperator make_sketch(SketchKind kind, int k, int n, std::uint64_t seed);

// S * A for A with exactly S.n rows. The Srht path sign-flips each column,
// runs the fast Walsh-Hadamard transform on the zero-padded column, then
// subsamples and scales; S is never formed densely. Pure function.
Eigen::MatrixXd apply_sketch(const SketchOperator& S, const Eigen::MatrixXd& A);

// Dense k x n matrix whose action equals apply_sketch. Testing oracle,
// guarded against k * n > 1e8 entries.
Eigen::MatrixXd materialize(const SketchOperator& S);

// In-place unnormalized Walsh-Hadamard transform; x.size() must be a power of
// two. The transform matrix W satisfies W W^T = n I.
void fwht_inplace(std::span<double> x);

SketchKind sketch_kind_from_string(const std::string& name);
const char* to_string(SketchKind kind);

}  // namespace fedns
