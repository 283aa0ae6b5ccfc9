#pragma once

// Recursive Bayesian estimation of the network's topology realization from end-to-end
// delivery bits, and the joint pdf over the next H deliveries.
//
// Chain semantics shared by every estimator and the brute-force oracle: the realization
// G(k) decides delivery nu_k; the kernel advances G(k) -> G(k+1) between samples.

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "meshpredict/error.hpp"
#include "meshpredict/link_models.hpp"
#include "meshpredict/mesh_model.hpp"

namespace meshpredict {

enum class BeliefKind { SihsPosterior, GeihsFiltered, GeihsPredicted };

/// Distribution over all 2^E realization masks.
struct BeliefState {
    std::vector<double> probs;
    std::int64_t k = 0;
    BeliefKind kind = BeliefKind::SihsPosterior;

    double total() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }
};

/// Joint pdf over nu_k .. nu_{k+H-1}. Index bit (H-1-h) holds nu_{k+h}, i.e. the
/// most-significant bit is the earliest sample.
struct PredictionTable {
    int horizon = 0;
    std::int64_t base_sample = 0;
    std::vector<double> joint;

    double total() const { return std::accumulate(joint.begin(), joint.end(), 0.0); }

    static std::size_t index_of(std::span<const int> bits) {
        std::size_t idx = 0;
        for (int b : bits) idx = (idx << 1) | static_cast<std::size_t>(b != 0);
        return idx;
    }

    /// "101" style key, earliest sample first.
    std::string key(std::size_t index) const {
        std::string s(static_cast<std::size_t>(horizon), '0');
        for (int h = 0; h < horizon; ++h)
            if ((index >> (horizon - 1 - h)) & 1u) s[static_cast<std::size_t>(h)] = '1';
        return s;
    }
};

struct DeliveryHistory {
    std::vector<int> bits;

    void append(int nu) { bits.push_back(nu != 0 ? 1 : 0); }
    std::size_t size() const { return bits.size(); }
};

/// Pr(nu_{k+h} = 1) for h = 0..H-1.
inline std::vector<double> marginal_predictions(const PredictionTable& table) {
    std::vector<double> marginals(static_cast<std::size_t>(table.horizon), 0.0);
    for (std::size_t idx = 0; idx < table.joint.size(); ++idx)
        for (int h = 0; h < table.horizon; ++h)
            if ((idx >> (table.horizon - 1 - h)) & 1u) marginals[static_cast<std::size_t>(h)] += table.joint[idx];
    return marginals;
}

/// Drops the last sample of an H-step table.
inline PredictionTable drop_last_step(const PredictionTable& table) {
    PredictionTable out{table.horizon - 1, table.base_sample, std::vector<double>(table.joint.size() / 2, 0.0)};
    for (std::size_t idx = 0; idx < table.joint.size(); ++idx) out.joint[idx >> 1] += table.joint[idx];
    return out;
}

namespace detail {

inline void check_horizon(int H) {
    if (H < 1 || H > kMaxHorizon)
        throw Error(ErrorCode::HorizonTooLarge, "prediction horizon " + std::to_string(H) + " outside [1, " +
                                                    std::to_string(kMaxHorizon) + "]");
}

/// belief <- delta(nu) * belief / Z; returns Z. Leaves belief untouched when Z = 0.
inline double innovate(std::vector<double>& belief, std::span<const std::uint8_t> delivered, int nu, std::int64_t k) {
    const std::uint8_t want = nu != 0 ? 1 : 0;
    double z = 0.0;
    for (std::size_t m = 0; m < belief.size(); ++m)
        if (delivered[m] == want) z += belief[m];
    if (!(z > 0.0))
        throw Error(ErrorCode::InconsistentObservation,
                    "no realization with positive belief explains nu_" + std::to_string(k) + " = " + std::to_string(nu));
    for (std::size_t m = 0; m < belief.size(); ++m) belief[m] = delivered[m] == want ? belief[m] / z : 0.0;
    return z;
}

inline void normalize(std::vector<double>& v) {
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= total;
}

} // namespace detail

/// Static links: the realization never changes, so each observation only prunes.
class SihsEstimator {
public:
    SihsEstimator(MeshNetwork net, const StaticLinkParams& params) : net_(std::move(net)) {
        if (static_cast<int>(params.p.size()) != net_.edge_count())
            throw Error(ErrorCode::InvalidConfig, "static_p must have one entry per edge");
        belief_.probs = prior_belief(params.p);
        belief_.k = 0;
        belief_.kind = BeliefKind::SihsPosterior;
    }

    /// Consumes nu for the current sample and advances k.
    void update(int nu) {
        auto probs = belief_.probs;
        const double z = detail::innovate(probs, net_.delivery_table(belief_.k), nu, belief_.k);
        belief_.probs = std::move(probs);
        normalizers_.push_back(z);
        history_.append(nu);
        ++belief_.k;
    }

    /// Push-forward of the belief through the deterministic H-step delivery map.
    PredictionTable predict(int H) const {
        detail::check_horizon(H);
        PredictionTable table{H, belief_.k, std::vector<double>(std::size_t{1} << H, 0.0)};
        std::vector<std::span<const std::uint8_t>> delivered;
        for (int h = 0; h < H; ++h) delivered.push_back(net_.delivery_table(belief_.k + h));
        for (std::size_t m = 0; m < belief_.probs.size(); ++m) {
            if (belief_.probs[m] == 0.0) continue;
            std::size_t idx = 0;
            for (int h = 0; h < H; ++h) idx = (idx << 1) | delivered[static_cast<std::size_t>(h)][m];
            table.joint[idx] += belief_.probs[m];
        }
        return table;
    }

    const BeliefState& belief() const { return belief_; }
    const DeliveryHistory& history() const { return history_; }
    const std::vector<double>& normalizers() const { return normalizers_; }
    const MeshNetwork& network() const { return net_; }

private:
    MeshNetwork net_;
    BeliefState belief_;
    DeliveryHistory history_;
    std::vector<double> normalizers_;
};

/// Markov links: innovation on the observed bit, then a time update through the kernel.
/// Holds beta_{k|k-1} between steps.
class GeihsEstimator {
public:
    GeihsEstimator(MeshNetwork net, const LinkModel& links)
        : net_(std::move(net)), kernel_(make_kernel(links, net_.edge_count())) {
        links.validate(net_.edge_count());
        predicted_.probs = prior_belief(links.prior_probabilities());
        predicted_.k = 0;
        predicted_.kind = BeliefKind::GeihsPredicted;
    }

    /// Consumes nu_k, producing beta_{k|k} and then beta_{k+1|k}.
    void step(int nu) {
        auto filtered = predicted_.probs;
        const double z = detail::innovate(filtered, net_.delivery_table(predicted_.k), nu, predicted_.k);
        std::vector<double> next(filtered.size());
        kernel_.apply(filtered, next);
        detail::normalize(next);

        filtered_ = BeliefState{std::move(filtered), predicted_.k, BeliefKind::GeihsFiltered};
        predicted_ = BeliefState{std::move(next), predicted_.k + 1, BeliefKind::GeihsPredicted};
        normalizers_.push_back(z);
        history_.append(nu);
    }

    /// Forward (alpha) recursion over delivery prefixes: alpha_h is a 2^h x 2^E table of
    /// Pr(prefix, G(k+h) | history).
    PredictionTable predict(int H) const {
        detail::check_horizon(H);
        const std::size_t n = predicted_.probs.size();
        PredictionTable table{H, predicted_.k, std::vector<double>(std::size_t{1} << H, 0.0)};
        std::vector<double> alpha = predicted_.probs;
        std::vector<double> masked(n);
        for (int h = 0; h < H; ++h) {
            const auto delivered = net_.delivery_table(predicted_.k + h);
            const std::size_t rows = std::size_t{1} << h;
            const bool last = h == H - 1;
            std::vector<double> next_alpha(last ? 0 : 2 * rows * n);
            for (std::size_t prefix = 0; prefix < rows; ++prefix) {
                const double* row = &alpha[prefix * n];
                for (std::uint8_t bit = 0; bit < 2; ++bit) {
                    const std::size_t child = (prefix << 1) | bit;
                    if (last) {
                        double acc = 0.0;
                        for (std::size_t m = 0; m < n; ++m)
                            if (delivered[m] == bit) acc += row[m];
                        table.joint[child] = acc;
                    } else {
                        for (std::size_t m = 0; m < n; ++m) masked[m] = delivered[m] == bit ? row[m] : 0.0;
                        kernel_.apply(masked, std::span<double>(&next_alpha[child * n], n));
                    }
                }
            }
            if (!last) alpha = std::move(next_alpha);
        }
        return table;
    }

    const BeliefState& belief() const { return predicted_; }
    const std::optional<BeliefState>& filtered() const { return filtered_; }
    const DeliveryHistory& history() const { return history_; }
    const std::vector<double>& normalizers() const { return normalizers_; }
    const TransitionKernel& kernel() const { return kernel_; }
    const MeshNetwork& network() const { return net_; }

private:
    MeshNetwork net_;
    TransitionKernel kernel_;
    BeliefState predicted_;
    std::optional<BeliefState> filtered_;
    DeliveryHistory history_;
    std::vector<double> normalizers_;
};

/// The estimator matching a link model: SIHS for static links, GEIHS otherwise.
class NetworkEstimator {
public:
    NetworkEstimator(const MeshNetwork& net, const LinkModel& links)
        : impl_(links.is_static() ? Impl{SihsEstimator(net, *links.static_params)} : Impl{GeihsEstimator(net, links)}) {}

    void observe(int nu) {
        std::visit(
            [nu](auto& est) {
                if constexpr (std::is_same_v<std::decay_t<decltype(est)>, SihsEstimator>) est.update(nu);
                else est.step(nu);
            },
            impl_);
    }

    PredictionTable predict(int H) const {
        return std::visit([H](const auto& est) { return est.predict(H); }, impl_);
    }
    const BeliefState& belief() const {
        return std::visit([](const auto& est) -> const BeliefState& { return est.belief(); }, impl_);
    }
    const std::vector<double>& normalizers() const {
        return std::visit([](const auto& est) -> const std::vector<double>& { return est.normalizers(); }, impl_);
    }
    std::int64_t sample() const { return belief().k; }
    bool is_static() const { return std::holds_alternative<SihsEstimator>(impl_); }

private:
    using Impl = std::variant<SihsEstimator, GeihsEstimator>;
    Impl impl_;
};

} // namespace meshpredict
