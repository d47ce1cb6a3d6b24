#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fedns/dataset.hpp"

namespace fedns {

enum class LossFamily { Logistic, Squared };

// Regularized GLM objective
//   L(D, w) = (1/n) sum_i l(x_i^T w, y_i) + lambda * (1/2) ||w||^2
// with l the logistic loss log(1 + exp(-y x^T w)) for y in {-1,+1}, or the
// squared loss (1/2)(x^T w - y)^2. The ridge penalty alpha(w) = ||w||^2 / 2
// has exactly the identity Hessian.
struct Objective {
    LossFamily family = LossFamily::Logistic;
    double lambda = 0.0;  // > 0
};

// Iterate plus round counter.
struct ModelState {
    Eigen::VectorXd w;
    int round = 0;
};

// B with B^T B equal to the loss-term Hessian (regularizer excluded):
// B = D(w)^{1/2} X / sqrt(n).
struct SqrtHessianFactor {
    Eigen::MatrixXd factor;  // n x M
    int worker_id = -1;
};

double loss(const Objective& obj, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
            const Eigen::VectorXd& w);
Eigen::VectorXd gradient(const Objective& obj, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w);
// Loss-term Hessian plus lambda * I; symmetric positive definite.
Eigen::MatrixXd hessian(const Objective& obj, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& w);
SqrtHessianFactor sqrt_hessian(const Objective& obj, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const Eigen::VectorXd& w);

double loss(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w);
double loss(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w);
Eigen::VectorXd gradient(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w);
Eigen::VectorXd gradient(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w);
Eigen::MatrixXd hessian(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w);
Eigen::MatrixXd hessian(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w);
SqrtHessianFactor sqrt_hessian(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w);
SqrtHessianFactor sqrt_hessian(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w);

// Tr(H (H + lambda I)^{-1}) for a symmetric PSD H, in [0, M]. The argument is
// the loss-term Hessian, i.e. hessian(...) minus its lambda * I part.
double effective_dimension(const Eigen::MatrixXd& loss_hessian, double lambda);

struct NewtonOptions {
    double mu = 1.0;        // step size
    double tol = 1e-12;     // gradient-norm stop
    int max_iter = 100;
};

struct NewtonTracePoint {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

struct NewtonResult {
    ModelState state;
    std::vector<NewtonTracePoint> trace;
    bool converged = false;
};

// Exact Newton iteration w <- w - mu H^{-1} g until ||g|| <= tol or max_iter.
// Non-convergence is flagged, not fatal. Serves as the reference-optimum
// oracle for optimal-gap measurements.
NewtonResult centralized_newton(const Objective& obj, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, const Eigen::VectorXd& w0,
                                const NewtonOptions& opts = {});
NewtonResult centralized_newton(const Objective& obj, const Dataset& data,
                                const Eigen::VectorXd& w0, const NewtonOptions& opts = {});

// Ridge-regression closed form w = (X^T X + lambda N I)^{-1} X^T y, which is
// the exact minimizer of Objective{Squared, lambda} under this library's
// (1/N) sum (1/2)(x^T w - y)^2 + (lambda/2) ||w||^2 convention.
Eigen::VectorXd krr_closed_form(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                double lambda);
Eigen::VectorXd krr_closed_form(const Dataset& data, double lambda);

}  // namespace fedns
