#pragma once

// Static and Gilbert-Elliott link models: the prior over topology realizations and the
// one-sample transition kernel between realizations.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meshpredict/error.hpp"
#include "meshpredict/mesh_model.hpp"
#include "meshpredict/rng.hpp"

namespace meshpredict {

struct StaticLinkParams {
    std::vector<double> p; // a-priori up probability per edge
};

struct GEParams {
    std::vector<double> p_up;   // down -> up per sample
    std::vector<double> p_down; // up -> down per sample
};

inline double stationary_up_probability(const GEParams& ge, int e) {
    return ge.p_up[e] / (ge.p_up[e] + ge.p_down[e]);
}

inline std::vector<double> stationary_up_probabilities(const GEParams& ge) {
    std::vector<double> p(ge.p_up.size());
    for (std::size_t e = 0; e < p.size(); ++e) p[e] = stationary_up_probability(ge, static_cast<int>(e));
    return p;
}

/// Link section of a network config. Exactly one of the following holds:
///  - static_params only: static links (SIHS estimator);
///  - ge set, identity_kernel false: Gilbert-Elliott links (GEIHS estimator);
///  - identity_kernel true: frozen network run through the GEIHS machinery, prior from static_params.
struct LinkModel {
    std::optional<StaticLinkParams> static_params;
    std::optional<GEParams> ge;
    bool identity_kernel = false;

    bool is_static() const { return !ge && !identity_kernel; }
    bool is_markov() const { return !is_static(); }

    /// Up probabilities used for the prior belief at k = 0.
    std::vector<double> prior_probabilities() const {
        if (ge && !identity_kernel) return stationary_up_probabilities(*ge);
        return static_params->p;
    }

    void validate(int edge_count) const {
        auto check_len = [&](const std::vector<double>& v, const char* what) {
            if (static_cast<int>(v.size()) != edge_count)
                throw Error(ErrorCode::InvalidConfig, std::string(what) + " must have one entry per edge");
        };
        if (identity_kernel && !static_params)
            throw Error(ErrorCode::InvalidConfig, "identity_kernel requires static_p for the prior");
        if (!static_params && !ge) throw Error(ErrorCode::InvalidConfig, "links need static_p or ge parameters");
        if (static_params) {
            check_len(static_params->p, "static_p");
            for (double p : static_params->p)
                if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidConfig, "static_p entries must lie in [0,1]");
        }
        if (ge) {
            check_len(ge->p_up, "p_up");
            check_len(ge->p_down, "p_down");
            for (int e = 0; e < edge_count; ++e)
                if (!(ge->p_up[e] > 0.0 && ge->p_up[e] < 1.0 && ge->p_down[e] > 0.0 && ge->p_down[e] < 1.0))
                    throw Error(ErrorCode::InvalidConfig, "Gilbert-Elliott probabilities must lie in (0,1)");
        }
    }
};

/// Independent-link product prior over all 2^E masks (bit e = edge e).
inline std::vector<double> prior_belief(std::span<const double> p) {
    std::vector<double> belief{1.0};
    belief.reserve(std::size_t{1} << p.size());
    for (std::size_t e = 0; e < p.size(); ++e) {
        const std::size_t half = belief.size();
        belief.resize(2 * half);
        for (std::size_t m = 0; m < half; ++m) {
            belief[m + half] = belief[m] * p[e];
            belief[m] *= 1.0 - p[e];
        }
    }
    return belief;
}

/// Probability that realization `from` becomes `to` after one sample.
inline double transition_probability(const GEParams& ge, Mask from, Mask to) {
    double prob = 1.0;
    for (std::size_t e = 0; e < ge.p_up.size(); ++e) {
        const bool was_up = (from >> e) & 1u;
        const bool is_up = (to >> e) & 1u;
        if (was_up) prob *= is_up ? 1.0 - ge.p_down[e] : ge.p_down[e];
        else prob *= is_up ? ge.p_up[e] : 1.0 - ge.p_up[e];
    }
    return prob;
}

/// One-sample kernel over realizations. Dense 2^E x 2^E table up to kDenseEdgeLimit
/// edges; above that it is applied link by link, which is exact because links are
/// independent.
class TransitionKernel {
public:
    static constexpr int kDenseEdgeLimit = 10;

    static TransitionKernel identity(int edge_count) {
        TransitionKernel k;
        k.edge_count_ = edge_count;
        k.identity_ = true;
        return k;
    }

    TransitionKernel(GEParams ge, bool force_factorized = false) : edge_count_(static_cast<int>(ge.p_up.size())), ge_(std::move(ge)) {
        if (edge_count_ <= kDenseEdgeLimit && !force_factorized) {
            const std::size_t n = size();
            dense_.resize(n * n);
            for (Mask to = 0; to < n; ++to)
                for (Mask from = 0; from < n; ++from) dense_[to * n + from] = transition_probability(ge_, from, to);
        }
    }

    int edge_count() const { return edge_count_; }
    std::size_t size() const { return std::size_t{1} << edge_count_; }
    bool is_identity() const { return identity_; }
    bool is_dense() const { return !dense_.empty(); }

    double operator()(Mask from, Mask to) const {
        if (identity_) return from == to ? 1.0 : 0.0;
        if (is_dense()) return dense_[to * size() + from];
        return transition_probability(ge_, from, to);
    }

    /// out[to] = sum_from Gamma(to; from) * in[from]. `in` and `out` must not alias.
    void apply(std::span<const double> in, std::span<double> out) const {
        const std::size_t n = size();
        if (identity_) {
            std::copy(in.begin(), in.end(), out.begin());
            return;
        }
        if (is_dense()) {
            for (std::size_t to = 0; to < n; ++to) {
                const double* row = &dense_[to * n];
                double acc = 0.0;
                for (std::size_t from = 0; from < n; ++from) acc += row[from] * in[from];
                out[to] = acc;
            }
            return;
        }
        std::copy(in.begin(), in.end(), out.begin());
        apply_factorized_in_place(out);
    }

    /// Link-by-link 2x2 sweeps; O(E 2^E).
    void apply_factorized_in_place(std::span<double> v) const {
        if (identity_) return;
        for (int e = 0; e < edge_count_; ++e) {
            const Mask bit = Mask{1} << e;
            const double pu = ge_.p_up[e];
            const double pd = ge_.p_down[e];
            for (Mask m = 0; m < v.size(); ++m) {
                if (m & bit) continue;
                const double down = v[m];
                const double up = v[m | bit];
                v[m] = (1.0 - pu) * down + pd * up;
                v[m | bit] = pu * down + (1.0 - pd) * up;
            }
        }
    }

private:
    TransitionKernel() = default;

    int edge_count_ = 0;
    bool identity_ = false;
    GEParams ge_;
    std::vector<double> dense_;
};

inline TransitionKernel make_kernel(const LinkModel& links, int edge_count) {
    if (links.identity_kernel || !links.ge) return TransitionKernel::identity(edge_count);
    return TransitionKernel(*links.ge);
}

inline TopologyRealization sample_initial_realization(std::span<const double> p, Rng& rng) {
    TopologyRealization r{0, static_cast<int>(p.size())};
    for (std::size_t e = 0; e < p.size(); ++e)
        if (rng.bernoulli(p[e])) r.up_mask |= Mask{1} << e;
    return r;
}

inline TopologyRealization sample_next_realization(const GEParams& ge, const TopologyRealization& current, Rng& rng) {
    TopologyRealization next{0, current.width};
    for (int e = 0; e < current.width; ++e) {
        const bool up = current.is_up(e) ? !rng.bernoulli(ge.p_down[e]) : rng.bernoulli(ge.p_up[e]);
        if (up) next.up_mask |= Mask{1} << e;
    }
    return next;
}

/// Ground-truth evolution under a link model; static and identity-kernel links never change.
inline TopologyRealization sample_next_realization(const LinkModel& links, const TopologyRealization& current,
                                                   Rng& rng) {
    if (links.identity_kernel || !links.ge) return current;
    return sample_next_realization(*links.ge, current, rng);
}

} // namespace meshpredict
