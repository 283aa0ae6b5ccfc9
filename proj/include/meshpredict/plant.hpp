#pragma once

// Linear plant x' = A x + nu B u + w and realized LQG costs.

#include <vector>

#include <Eigen/Dense>

#include "meshpredict/controller.hpp"
#include "meshpredict/error.hpp"
#include "meshpredict/rng.hpp"

namespace meshpredict {

struct PlantState {
    Vector x;
    int k = 0;
};

struct Trajectory {
    std::vector<Vector> states;  // x_0 .. x_N
    std::vector<Vector> inputs;  // u_0 .. u_{N-1}
    std::vector<int> deliveries; // nu_0 .. nu_{N-1}
};

inline Vector step(const PlantParams& plant, const Vector& x, const Vector& u, int nu, const Vector& w) {
    Vector next = plant.A * x + w;
    if (nu != 0) next += plant.B * u;
    return next;
}

/// Zero-mean Gaussian with covariance F F', where F = V sqrt(Lambda) from the symmetric
/// eigendecomposition of the covariance.
class GaussianSampler {
public:
    explicit GaussianSampler(const Matrix& covariance) {
        if (covariance.rows() != covariance.cols())
            throw Error(ErrorCode::NonPSDCovariance, "covariance must be square");
        const double scale = covariance.cwiseAbs().maxCoeff();
        if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + scale))
            throw Error(ErrorCode::NonPSDCovariance, "covariance must be symmetric");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
        Vector lambda = eig.eigenvalues();
        if (lambda.size() > 0 && lambda.minCoeff() < -1e-9 * (1.0 + scale))
            throw Error(ErrorCode::NonPSDCovariance, "covariance has a negative eigenvalue");
        lambda = lambda.cwiseMax(0.0).cwiseSqrt();
        factor_ = eig.eigenvectors() * lambda.asDiagonal();
        zero_ = scale == 0.0;
    }

    Vector sample(Rng& rng) const {
        const auto n = factor_.rows();
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
        if (zero_) return Vector::Zero(n);
        return factor_ * z;
    }

    const Matrix& factor() const { return factor_; }

private:
    Matrix factor_;
    bool zero_ = false;
};

inline Vector sample_initial_state(const Matrix& R0, Rng& rng) { return GaussianSampler(R0).sample(rng); }
inline Vector sample_noise(const Matrix& Rw, Rng& rng) { return GaussianSampler(Rw).sample(rng); }

/// x_N' Q0 x_N + sum_n x_n' Q1 x_n + nu_n u_n' Q2 u_n.
inline double realized_cost(const Trajectory& traj, const Matrix& Q0, const Matrix& Q1, const Matrix& Q2) {
    double cost = traj.states.back().dot(Q0 * traj.states.back());
    for (std::size_t n = 0; n < traj.inputs.size(); ++n) {
        cost += traj.states[n].dot(Q1 * traj.states[n]);
        if (traj.deliveries[n] != 0) cost += traj.inputs[n].dot(Q2 * traj.inputs[n]);
    }
    return cost;
}

} // namespace meshpredict
