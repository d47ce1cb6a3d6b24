#pragma once

#include <Eigen/Dense>

#include "fedns/errors.hpp"

namespace fedns {

// Solves H x = b for symmetric positive definite H by Cholesky. On a reported
// factorization failure, retries with diagonal jitter 1e-12 * tr(H)/M,
// escalated tenfold, up to three times. The regularized Hessians this library
// produces are positive definite by construction, so jitter only ever absorbs
// rounding.
inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& H, const Eigen::VectorXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() == Eigen::Success) {
        Eigen::VectorXd x = llt.solve(b);
        if (x.allFinite()) return x;
    }
    double jitter = 1e-12 * H.trace() / static_cast<double>(H.rows());
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd Hj = H;
        Hj.diagonal().array() += jitter;
        llt.compute(Hj);
        if (llt.info() == Eigen::Success) {
            Eigen::VectorXd x = llt.solve(b);
            if (x.allFinite()) return x;
        }
    }
    throw NumericError("solve_spd: Cholesky failed after jitter escalation");
}

}  // namespace fedns
