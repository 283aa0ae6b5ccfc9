#pragma once

// Exhaustive reference for the estimators: sums over every hidden realization sequence
// G(0..k+H-1). Deliberately shares nothing with the recursive code paths beyond the
// topology types: delivery comes from simulate_packet, transitions and priors from
// per-link products written out here.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "meshpredict/error.hpp"
#include "meshpredict/estimator.hpp"
#include "meshpredict/link_models.hpp"
#include "meshpredict/mesh_model.hpp"

namespace meshpredict {

namespace detail {

class SequenceEnumerator {
public:
    SequenceEnumerator(const MeshNetwork& net, const LinkModel& links, const DeliveryHistory& history, int H)
        : net_(net), links_(links), history_(history), H_(H), E_(net.edge_count()),
          steps_(static_cast<int>(history.size()) + H),
          posterior_(std::size_t{1} << E_, 0.0), joint_(std::size_t{1} << H, 0.0) {
        const auto& g = net.topology();
        delivers_.assign(static_cast<std::size_t>(steps_), std::vector<char>(std::size_t{1} << E_));
        for (int t = 0; t < steps_; ++t)
            for (Mask m = 0; m < (Mask{1} << E_); ++m)
                delivers_[t][m] = simulate_packet(g, net.schedule(), {m, E_}, net.timing().packet_slot(t),
                                                  net.timing().deadline_slot(t))
                                      .delivered;
        prior_ = links.prior_probabilities();
    }

    void run() {
        const bool frozen = links_.is_static() || links_.identity_kernel;
        for (Mask g0 = 0; g0 < (Mask{1} << E_); ++g0) {
            double w = 1.0;
            for (int e = 0; e < E_; ++e) w *= ((g0 >> e) & 1u) ? prior_[e] : 1.0 - prior_[e];
            if (frozen) {
                // Only the constant sequence has nonzero weight.
                walk_frozen(g0, w);
            } else {
                visit(0, g0, w, 0);
            }
        }
    }

    BeliefState posterior() const {
        BeliefState b{posterior_, static_cast<std::int64_t>(history_.size()), BeliefKind::GeihsPredicted};
        for (double& p : b.probs) p /= total_;
        return b;
    }

    PredictionTable prediction() const {
        PredictionTable t{H_, static_cast<std::int64_t>(history_.size()), joint_};
        for (double& p : t.joint) p /= total_;
        return t;
    }

    double total() const { return total_; }

private:
    double gamma(Mask from, Mask to) const {
        const auto& ge = *links_.ge;
        double p = 1.0;
        for (int e = 0; e < E_; ++e) {
            const bool a = (from >> e) & 1u;
            const bool b = (to >> e) & 1u;
            const double pu = ge.p_up[e];
            const double pd = ge.p_down[e];
            p *= a ? (b ? 1.0 - pd : pd) : (b ? pu : 1.0 - pu);
        }
        return p;
    }

    void walk_frozen(Mask g, double w) {
        std::size_t seq = 0;
        const int k = static_cast<int>(history_.size());
        for (int t = 0; t < steps_; ++t) {
            const int bit = delivers_[t][g] ? 1 : 0;
            if (t < k) {
                if (bit != history_.bits[t]) return;
            } else {
                seq = (seq << 1) | static_cast<std::size_t>(bit);
            }
        }
        accumulate(g, seq, w);
    }

    // g is the realization at time t, weight includes everything up to and including its choice.
    void visit(int t, Mask g, double w, std::size_t seq) {
        if (w == 0.0) return;
        const int k = static_cast<int>(history_.size());
        const int bit = delivers_[t][g] ? 1 : 0;
        if (t < k) {
            if (bit != history_.bits[t]) return;
        } else {
            seq = (seq << 1) | static_cast<std::size_t>(bit);
        }
        if (t == k) g_at_k_ = g;
        if (t == steps_ - 1) {
            accumulate(g_at_k_, seq, w);
            return;
        }
        for (Mask next = 0; next < (Mask{1} << E_); ++next) visit(t + 1, next, w * gamma(g, next), seq);
    }

    void accumulate(Mask g_at_k, std::size_t seq, double w) {
        posterior_[g_at_k] += w;
        joint_[seq] += w;
        total_ += w;
    }

    const MeshNetwork& net_;
    const LinkModel& links_;
    const DeliveryHistory& history_;
    int H_;
    int E_;
    int steps_;
    std::vector<double> prior_;
    std::vector<std::vector<char>> delivers_;
    std::vector<double> posterior_;
    std::vector<double> joint_;
    double total_ = 0.0;
    Mask g_at_k_ = 0;
};

} // namespace detail

/// Exact Pr(G(k) | history) and joint prediction over the next H samples, by summing over
/// all (2^E)^(k+H) hidden sequences. Limited to E <= 4 and k + H <= 8.
inline std::pair<BeliefState, PredictionTable> brute_force_posterior_and_prediction(const MeshNetwork& net,
                                                                                    const LinkModel& links,
                                                                                    const DeliveryHistory& history,
                                                                                    int H) {
    if (net.edge_count() > 4 || static_cast<int>(history.size()) + H > 8 || H < 1)
        throw Error(ErrorCode::BoundExceeded, "brute-force oracle needs E <= 4 and 1 <= H, k + H <= 8");
    links.validate(net.edge_count());
    detail::SequenceEnumerator enumerator(net, links, history, H);
    enumerator.run();
    if (!(enumerator.total() > 0.0))
        throw Error(ErrorCode::InconsistentObservation, "history has zero probability under the model");
    return {enumerator.posterior(), enumerator.prediction()};
}

} // namespace meshpredict
