#include "fedns/objective.hpp"

#include <cmath>

#include "fedns/errors.hpp"
#include "fedns/linalg.hpp"

namespace fedns {

namespace {

double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) {
    return std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z);
}

void check_inputs(const Objective& obj, const Eigen::MatrixXd& X,
                  const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    if (obj.lambda <= 0.0) throw Error("objective: lambda must be > 0");
    if (X.rows() != y.size()) throw Error("objective: X rows and labels disagree");
    if (X.cols() != w.size()) throw Error("objective: X cols and w length disagree");
    if (!w.allFinite()) throw Error("objective: non-finite iterate");
    if (obj.family == LossFamily::Logistic) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y[i] != 1.0 && y[i] != -1.0)
                throw Error("logistic loss requires labels in {-1,+1}");
    }
}

// sigma(z_i) (1 - sigma(z_i)) with z_i = y_i x_i^T w; the diagonal of the
// logistic Hessian weight matrix.
Eigen::ArrayXd logistic_weights(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w) {
    Eigen::ArrayXd z = (X * w).array() * y.array();
    return z.unaryExpr([](double t) { return sigmoid(t) * sigmoid(-t); });
}

}  // namespace

double loss(const Objective& obj, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
            const Eigen::VectorXd& w) {
    check_inputs(obj, X, y, w);
    const double n = static_cast<double>(X.rows());
    const double reg = 0.5 * obj.lambda * w.squaredNorm();
    if (obj.family == LossFamily::Squared) {
        return 0.5 * (X * w - y).squaredNorm() / n + reg;
    }
    const Eigen::ArrayXd z = (X * w).array() * y.array();
    return z.unaryExpr(&softplus_neg).sum() / n + reg;
}

Eigen::VectorXd gradient(const Objective& obj, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    check_inputs(obj, X, y, w);
    const double n = static_cast<double>(X.rows());
    if (obj.family == LossFamily::Squared)
        return X.transpose() * (X * w - y) / n + obj.lambda * w;
    const Eigen::ArrayXd z = (X * w).array() * y.array();
    // d/dz log(1+exp(-z)) = -sigma(-z)
    const Eigen::VectorXd coeff =
        (-y.array() * z.unaryExpr([](double t) { return sigmoid(-t); })).matrix();
    return X.transpose() * coeff / n + obj.lambda * w;
}

Eigen::MatrixXd hessian(const Objective& obj, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    check_inputs(obj, X, y, w);
    const double n = static_cast<double>(X.rows());
    const Eigen::Index M = X.cols();
    Eigen::MatrixXd H;
    if (obj.family == LossFamily::Squared) {
        H = X.transpose() * X / n;
    } else {
        const Eigen::ArrayXd d = logistic_weights(X, y, w);
        H = X.transpose() * d.matrix().asDiagonal() * X / n;
    }
    H = ((H + H.transpose()) * 0.5).eval();  // kill rounding asymmetry
    H.diagonal().array() += obj.lambda;
    return H;
}

SqrtHessianFactor sqrt_hessian(const Objective& obj, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    check_inputs(obj, X, y, w);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(X.rows()));
    SqrtHessianFactor out;
    if (obj.family == LossFamily::Squared) {
        out.factor = X * inv_sqrt_n;
    } else {
        const Eigen::ArrayXd d = logistic_weights(X, y, w).sqrt();
        out.factor = (d.matrix().asDiagonal() * X) * inv_sqrt_n;
    }
    return out;
}

double loss(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w) {
    return loss(obj, data.features, data.labels, w);
}
double loss(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w) {
    return loss(obj, shard.features, shard.labels, w);
}
Eigen::VectorXd gradient(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w) {
    return gradient(obj, data.features, data.labels, w);
}
Eigen::VectorXd gradient(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w) {
    return gradient(obj, shard.features, shard.labels, w);
}
Eigen::MatrixXd hessian(const Objective& obj, const Dataset& data, const Eigen::VectorXd& w) {
    return hessian(obj, data.features, data.labels, w);
}
Eigen::MatrixXd hessian(const Objective& obj, const Shard& shard, const Eigen::VectorXd& w) {
    return hessian(obj, shard.features, shard.labels, w);
}
SqrtHessianFactor sqrt_hessian(const Objective& obj, const Dataset& data,
                               const Eigen::VectorXd& w) {
    return sqrt_hessian(obj, data.features, data.labels, w);
}
SqrtHessianFactor sqrt_hessian(const Objective& obj, const Shard& shard,
                               const Eigen::VectorXd& w) {
    SqrtHessianFactor out = sqrt_hessian(obj, shard.features, shard.labels, w);
    out.worker_id = shard.worker_id;
    return out;
}

double effective_dimension(const Eigen::MatrixXd& loss_hessian, double lambda) {
    if (lambda <= 0.0) throw Error("effective_dimension: lambda must be > 0");
    if (loss_hessian.rows() != loss_hessian.cols())
        throw Error("effective_dimension: matrix must be square");
    const double scale = std::max(1.0, loss_hessian.cwiseAbs().maxCoeff());
    if ((loss_hessian - loss_hessian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error("effective_dimension: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(loss_hessian);
    if (eig.info() != Eigen::Success)
        throw NumericError("effective_dimension: eigendecomposition failed");
    double total = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double e = std::max(0.0, eig.eigenvalues()[i]);
        total += e / (e + lambda);
    }
    return total;
}

NewtonResult centralized_newton(const Objective& obj, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, const Eigen::VectorXd& w0,
                                const NewtonOptions& opts) {
    NewtonResult result;
    result.state.w = w0;
    result.state.round = 0;

    for (int t = 0; t <= opts.max_iter; ++t) {
        const double value = loss(obj, X, y, result.state.w);
        const Eigen::VectorXd g = gradient(obj, X, y, result.state.w);
        const double gnorm = g.norm();
        result.trace.push_back({t, value, gnorm, t == 0 ? 0.0 : opts.mu});
        if (gnorm <= opts.tol) {
            result.converged = true;
            break;
        }
        if (t == opts.max_iter) break;  // trace holds max_iter + 1 points
        const Eigen::MatrixXd H = hessian(obj, X, y, result.state.w);
        const Eigen::VectorXd step = solve_spd(H, g);
        if (!step.allFinite()) throw NumericError("centralized_newton: non-finite step");
        result.state.w -= opts.mu * step;
        result.state.round = t + 1;
    }
    return result;
}

NewtonResult centralized_newton(const Objective& obj, const Dataset& data,
                                const Eigen::VectorXd& w0, const NewtonOptions& opts) {
    return centralized_newton(obj, data.features, data.labels, w0, opts);
}

Eigen::VectorXd krr_closed_form(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                double lambda) {
    if (lambda <= 0.0) throw Error("krr_closed_form: lambda must be > 0");
    const double n = static_cast<double>(X.rows());
    Eigen::MatrixXd A = X.transpose() * X;
    A.diagonal().array() += lambda * n;
    return solve_spd(A, X.transpose() * y);
}

Eigen::VectorXd krr_closed_form(const Dataset& data, double lambda) {
    return krr_closed_form(data.features, data.labels, lambda);
}

}  // namespace fedns
