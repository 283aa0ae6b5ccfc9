#pragma once

// Finite-horizon LQG over a lossy actuation channel. The FPD controller runs a backward
// dynamic program over every future delivery suffix, weighting branches by conditionals
// of the joint delivery pdf; IID and ON controllers are the classical special cases.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshpredict/error.hpp"
#include "meshpredict/estimator.hpp"

namespace meshpredict {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct PlantParams {
    Matrix A;  // l x l
    Matrix B;  // l x m
    Matrix Rw; // process noise covariance
    Matrix R0; // initial state covariance
    Matrix Q0; // terminal weight
    Matrix Q1; // state weight
    Matrix Q2; // input weight
    int N = 1; // horizon

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B.cols(); }

    void validate() const {
        const auto l = A.rows();
        const auto m = B.cols();
        auto square = [](const Matrix& M, Eigen::Index n) { return M.rows() == n && M.cols() == n; };
        if (l < 1 || m < 1 || !square(A, l) || B.rows() != l || !square(Rw, l) || !square(R0, l) || !square(Q0, l) ||
            !square(Q1, l) || !square(Q2, m))
            throw Error(ErrorCode::InvalidConfig, "plant matrix dimensions are inconsistent");
        if (N < 1) throw Error(ErrorCode::InvalidConfig, "plant horizon N must be positive");
        if (N > kMaxHorizon) throw Error(ErrorCode::HorizonTooLarge, "plant horizon exceeds the ledger cap");
        auto symmetric = [](const Matrix& M) { return (M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()); };
        for (const Matrix* Q : {&Q0, &Q1, &Q2})
            if (!symmetric(*Q) || Eigen::LLT<Matrix>(*Q).info() != Eigen::Success)
                throw Error(ErrorCode::InvalidConfig, "weights Q0, Q1, Q2 must be symmetric positive definite");
        for (const Matrix* R : {&Rw, &R0})
            if (!symmetric(*R) || Eigen::SelfAdjointEigenSolver<Matrix>(*R).eigenvalues().minCoeff() < -1e-12)
                throw Error(ErrorCode::InvalidConfig, "covariances Rw, R0 must be symmetric positive semidefinite");
    }
};

/// Feedback gains u_n = -L x_n. Entry n holds either one history-independent gain or 2^n
/// gains indexed by the delivery history nu_0..nu_{n-1} (most-significant bit earliest).
struct GainSchedule {
    std::vector<std::vector<Matrix>> by_sample;

    std::size_t horizon() const { return by_sample.size(); }

    const Matrix& gain(int n, std::size_t history_index = 0) const {
        const auto& g = by_sample[static_cast<std::size_t>(n)];
        return g.size() == 1 ? g.front() : g[history_index];
    }
};

namespace detail {

inline void symmetrize(Matrix& S) { S = 0.5 * (S + S.transpose()).eval(); }

/// Probability of every delivery prefix: level d holds 2^d entries.
inline std::vector<std::vector<double>> prefix_probabilities(const PredictionTable& table) {
    std::vector<std::vector<double>> levels(static_cast<std::size_t>(table.horizon) + 1);
    levels.back() = table.joint;
    for (int d = table.horizon - 1; d >= 0; --d) {
        const auto& finer = levels[static_cast<std::size_t>(d) + 1];
        auto& coarse = levels[static_cast<std::size_t>(d)];
        coarse.resize(std::size_t{1} << d);
        for (std::size_t s = 0; s < coarse.size(); ++s) coarse[s] = finer[2 * s] + finer[2 * s + 1];
    }
    return levels;
}

/// (Q2 + B' S B)^{-1} B' S A via a Cholesky solve.
inline Matrix optimal_gain(const PlantParams& plant, const Matrix& S_next_delivered) {
    Matrix M = plant.Q2 + plant.B.transpose() * S_next_delivered * plant.B;
    symmetrize(M);
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "Q2 + B'SB is not positive definite");
    return llt.solve(plant.B.transpose() * S_next_delivered * plant.A);
}

} // namespace detail

/// Pr(next delivery = 1 | prefix) from a joint table.
inline double conditional_from_joint(const PredictionTable& table, std::span<const int> prefix) {
    if (static_cast<int>(prefix.size()) >= table.horizon)
        throw Error(ErrorCode::HorizonMismatch, "prefix must be shorter than the table horizon");
    const int rest = table.horizon - static_cast<int>(prefix.size());
    const std::size_t base = PredictionTable::index_of(prefix) << rest;
    const std::size_t block = std::size_t{1} << rest;
    double all = 0.0;
    double delivered = 0.0;
    for (std::size_t i = 0; i < block; ++i) {
        all += table.joint[base + i];
        if (i >= block / 2) delivered += table.joint[base + i];
    }
    if (!(all > 0.0)) throw Error(ErrorCode::ZeroProbabilityPrefix, "prefix has zero probability");
    return delivered / all;
}

/// S_n and s_n for every delivery suffix nu_k..nu_{n-1}, n = k..N.
class CostToGoLedger {
public:
    /// Returns the gain to plug in at (n, suffix), or nullptr to minimize.
    using GainPolicy = std::function<const Matrix*(int n, std::size_t suffix)>;

    CostToGoLedger(const PlantParams& plant, int k, const PredictionTable& prediction, const GainPolicy& policy = {})
        : plant_(&plant), k_(k) {
        if (k < 0 || k >= plant.N || prediction.horizon != plant.N - k)
            throw Error(ErrorCode::HorizonMismatch, "prediction horizon " + std::to_string(prediction.horizon) +
                                                        " does not equal N - k = " + std::to_string(plant.N - k));
        const int depth = plant.N - k;
        const auto prefix = detail::prefix_probabilities(prediction);
        S_.resize(static_cast<std::size_t>(depth) + 1);
        s_.resize(static_cast<std::size_t>(depth) + 1);
        S_.back().assign(std::size_t{1} << depth, plant.Q0);
        s_.back().assign(std::size_t{1} << depth, 0.0);
        expected_S_.resize(static_cast<std::size_t>(depth));

        const Matrix& A = plant.A;
        const Matrix& B = plant.B;
        for (int d = depth - 1; d >= 0; --d) {
            const auto du = static_cast<std::size_t>(d);
            const auto& S_next = S_[du + 1];
            const auto& s_next = s_[du + 1];
            const std::size_t count = std::size_t{1} << d;
            S_[du].resize(count);
            s_[du].resize(count);
            expected_S_[du].resize(count);
            for (std::size_t suffix = 0; suffix < count; ++suffix) {
                const double denom = prefix[du][suffix];
                const double p1 = denom > 0.0 ? prefix[du + 1][2 * suffix + 1] / denom : 0.0;
                const Matrix& S1 = S_next[2 * suffix + 1];
                const Matrix& S0 = S_next[2 * suffix];
                Matrix ES = p1 * S1 + (1.0 - p1) * S0;
                const double Es = p1 * s_next[2 * suffix + 1] + (1.0 - p1) * s_next[2 * suffix];

                Matrix S = plant.Q1 + A.transpose() * ES * A;
                const Matrix* fixed = policy ? policy(k + d, suffix) : nullptr;
                if (p1 > 0.0) {
                    if (fixed) {
                        Matrix M = plant.Q2 + B.transpose() * S1 * B;
                        Matrix cross = A.transpose() * S1 * B * (*fixed);
                        S += p1 * (fixed->transpose() * M * (*fixed) - cross - cross.transpose());
                    } else {
                        S -= p1 * (A.transpose() * S1 * B) * detail::optimal_gain(plant, S1);
                    }
                }
                detail::symmetrize(S);
                S_[du][suffix] = std::move(S);
                s_[du][suffix] = (ES * plant.Rw).trace() + Es;
                expected_S_[du][suffix] = std::move(ES);
            }
        }
    }

    int base_sample() const { return k_; }
    int horizon() const { return plant_->N; }

    /// S_n for suffix nu_k..nu_{n-1} packed MSB-first.
    const Matrix& S(int n, std::size_t suffix) const { return S_[static_cast<std::size_t>(n - k_)][suffix]; }
    double s(int n, std::size_t suffix) const { return s_[static_cast<std::size_t>(n - k_)][suffix]; }
    /// E[S_{n+1} | suffix nu_k..nu_{n-1}].
    const Matrix& expected_next_S(int n, std::size_t suffix) const {
        return expected_S_[static_cast<std::size_t>(n - k_)][suffix];
    }

    /// Optimal gain at sample n >= k after suffix nu_k..nu_{n-1}.
    Matrix gain(int n, std::size_t suffix) const { return detail::optimal_gain(*plant_, S(n + 1, 2 * suffix + 1)); }

    /// tr(S_k R0) + s_k: expected cost-to-go from k for x_k ~ N(0, R0).
    double expected_cost() const { return (S_.front().front() * plant_->R0).trace() + s_.front().front(); }

    /// Every optimal gain of the ledger, usable as a history-dependent schedule when k = 0.
    GainSchedule gain_schedule() const {
        GainSchedule schedule;
        for (int n = k_; n < plant_->N; ++n) {
            std::vector<Matrix> gains;
            for (std::size_t suffix = 0; suffix < (std::size_t{1} << (n - k_)); ++suffix) gains.push_back(gain(n, suffix));
            schedule.by_sample.push_back(std::move(gains));
        }
        return schedule;
    }

private:
    const PlantParams* plant_;
    int k_;
    std::vector<std::vector<Matrix>> S_;
    std::vector<std::vector<double>> s_;
    std::vector<std::vector<Matrix>> expected_S_;
};

struct FpdGain {
    Matrix gain;
    CostToGoLedger ledger;
};

/// Optimal gain at sample k given the history-conditioned prediction of nu_k..nu_{N-1}.
inline FpdGain fpd_gain(const PlantParams& plant, int k, const PredictionTable& prediction) {
    CostToGoLedger ledger(plant, k, prediction);
    Matrix L = ledger.gain(k, 0);
    return {std::move(L), std::move(ledger)};
}

inline double fpd_expected_cost(const PlantParams& plant, const PredictionTable& prediction) {
    if (prediction.horizon != plant.N)
        throw Error(ErrorCode::HorizonMismatch, "expected-cost prediction must cover the full horizon");
    return CostToGoLedger(plant, 0, prediction).expected_cost();
}

/// Expected cost of a fixed (possibly history-dependent) gain schedule.
inline double comparative_cost(const PlantParams& plant, const GainSchedule& gains, const PredictionTable& prediction) {
    if (prediction.horizon != plant.N || static_cast<int>(gains.horizon()) != plant.N)
        throw Error(ErrorCode::HorizonMismatch, "gains and prediction must both cover the full horizon");
    CostToGoLedger ledger(plant, 0, prediction,
                          [&gains](int n, std::size_t history) { return &gains.gain(n, history); });
    return ledger.expected_cost();
}

/// Optimal gains before `control_start` replaced by zero input; returns the expected cost.
inline double fpd_expected_cost(const PlantParams& plant, const PredictionTable& prediction, int control_start) {
    if (prediction.horizon != plant.N)
        throw Error(ErrorCode::HorizonMismatch, "expected-cost prediction must cover the full horizon");
    const Matrix zero = Matrix::Zero(plant.input_dim(), plant.state_dim());
    CostToGoLedger ledger(plant, 0, prediction,
                          [&](int n, std::size_t) { return n < control_start ? &zero : nullptr; });
    return ledger.expected_cost();
}

/// Riccati recursion assuming i.i.d. deliveries with probability p; returns S_0..S_N.
inline std::vector<Matrix> iid_riccati(const PlantParams& plant, double p) {
    std::vector<Matrix> S(static_cast<std::size_t>(plant.N) + 1);
    S.back() = plant.Q0;
    for (int n = plant.N - 1; n >= 0; --n) {
        const Matrix& next = S[static_cast<std::size_t>(n) + 1];
        Matrix cur = plant.Q1 + plant.A.transpose() * next * plant.A;
        if (p > 0.0) cur -= p * (plant.A.transpose() * next * plant.B) * detail::optimal_gain(plant, next);
        detail::symmetrize(cur);
        S[static_cast<std::size_t>(n)] = std::move(cur);
    }
    return S;
}

inline GainSchedule iid_gains(const PlantParams& plant, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "delivery probability must lie in [0,1]");
    const auto S = iid_riccati(plant, p);
    GainSchedule schedule;
    for (int n = 0; n < plant.N; ++n)
        schedule.by_sample.push_back({detail::optimal_gain(plant, S[static_cast<std::size_t>(n) + 1])});
    return schedule;
}

/// Classical finite-horizon LQR: every packet assumed delivered.
inline GainSchedule on_gains(const PlantParams& plant) { return iid_gains(plant, 1.0); }

inline GainSchedule zero_before(GainSchedule gains, int control_start, Eigen::Index m, Eigen::Index l) {
    for (int n = 0; n < control_start && n < static_cast<int>(gains.horizon()); ++n)
        gains.by_sample[static_cast<std::size_t>(n)] = {Matrix::Zero(m, l)};
    return gains;
}

} // namespace meshpredict
