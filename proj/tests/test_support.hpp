#pragma once

// Small fixed networks and random generators shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "meshpredict/meshpredict.hpp"

namespace meshpredict::testing {

inline MeshNetwork make_network(int nodes, std::vector<Edge> edges, std::vector<std::vector<Edge>> slots, int delta,
                                int deadline, int phase = 0, int source = 0, int sink = -1) {
    RoutingTopology g{nodes, std::move(edges), source, sink < 0 ? nodes - 1 : sink};
    return MeshNetwork(std::move(g), Schedule{std::move(slots)}, TimingConfig{delta, phase, deadline});
}

// a -> b, one slot.
inline MeshNetwork single_link() { return make_network(2, {{0, 1}}, {{{0, 1}}}, 1, 1); }

// a -> 2 -> b, slots [(a,2)], [(2,b)].
inline MeshNetwork chain3() { return make_network(3, {{0, 1}, {1, 2}}, {{{0, 1}}, {{1, 2}}}, 2, 2); }

// a -> 2 -> 3 -> b with a three-slot cycle and sample period shorter than the schedule.
inline MeshNetwork chain4() {
    return make_network(4, {{0, 1}, {1, 2}, {2, 3}}, {{{0, 1}, {2, 3}}, {{1, 2}}, {{2, 3}}}, 2, 2);
}

// Direct link a -> b in parallel with the detour a -> 2 -> b.
inline MeshNetwork parallel_paths() {
    return make_network(3, {{0, 2}, {0, 1}, {1, 2}}, {{{0, 2}}, {{0, 1}}, {{1, 2}}}, 3, 3, 1);
}

// a -> 2 -> b with a shortcut a -> b scheduled in a different slot.
inline MeshNetwork triangle_retry() {
    return make_network(3, {{0, 1}, {1, 2}, {0, 2}}, {{{0, 1}}, {{1, 2}, {0, 2}}}, 3, 3);
}

// a -> 2, a -> 3 with only 3 reaching b; node 2 is a dead end.
inline MeshNetwork dead_branch() {
    return make_network(4, {{0, 1}, {0, 2}, {2, 3}}, {{{0, 1}}, {{0, 2}}, {{2, 3}}}, 2, 2);
}

// a -> 2 -> b and a -> 3 -> b.
inline MeshNetwork diamond() {
    return make_network(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}, {{{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}}, 2, 2);
}

inline LinkModel static_links(std::vector<double> p) {
    LinkModel links;
    links.static_params = StaticLinkParams{std::move(p)};
    return links;
}

inline LinkModel ge_links(std::vector<double> p_up, std::vector<double> p_down) {
    LinkModel links;
    links.ge = GEParams{std::move(p_up), std::move(p_down)};
    return links;
}

inline LinkModel identity_links(std::vector<double> p) {
    LinkModel links = static_links(std::move(p));
    links.identity_kernel = true;
    return links;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline int uniform_int(std::mt19937_64& gen, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

/// Random valid network with exactly E edges (nodes in topological order, source 0, sink last).
inline MeshNetwork random_network(std::mt19937_64& gen, int E) {
    for (;;) {
        const int max_nodes = std::min(E + 1, 7);
        int nodes = uniform_int(gen, 2, max_nodes);
        while (nodes * (nodes - 1) / 2 < E) ++nodes;
        const int sink = nodes - 1;
        std::vector<Edge> all;
        for (int i = 0; i < sink; ++i)
            for (int j = i + 1; j < nodes; ++j) all.push_back({i, j});
        std::shuffle(all.begin(), all.end(), gen);
        std::vector<Edge> edges(all.begin(), all.begin() + E);

        const int period = uniform_int(gen, 1, 4);
        std::vector<std::vector<Edge>> slots(static_cast<std::size_t>(period));
        for (auto& slot : slots)
            for (int v = 0; v < sink; ++v) {
                std::vector<Edge> out;
                for (const auto& e : edges)
                    if (e.from == v) out.push_back(e);
                if (out.empty() || uniform(gen, 0, 1) < 0.25) continue;
                slot.push_back(out[static_cast<std::size_t>(uniform_int(gen, 0, static_cast<int>(out.size()) - 1))]);
            }
        const int delta = uniform_int(gen, 1, 9);
        const int deadline = uniform_int(gen, 1, delta);
        const int phase = uniform_int(gen, 0, period - 1);
        try {
            return make_network(nodes, edges, slots, delta, deadline, phase);
        } catch (const Error&) {
        }
    }
}

inline std::vector<double> random_probs(std::mt19937_64& gen, int E, double lo, double hi) {
    std::vector<double> p(static_cast<std::size_t>(E));
    for (auto& x : p) x = uniform(gen, lo, hi);
    return p;
}

inline LinkModel random_ge(std::mt19937_64& gen, int E) {
    return ge_links(random_probs(gen, E, 0.02, 0.6), random_probs(gen, E, 0.02, 0.6));
}

/// Draws the next delivery bit from the estimator's own one-step prediction, so the history
/// always has positive probability under the model.
inline int draw_consistent(const PredictionTable& one_step, std::mt19937_64& gen) {
    return uniform(gen, 0, 1) < one_step.joint[1] ? 1 : 0;
}

inline PredictionTable random_table(std::mt19937_64& gen, int H, double zero_fraction = 0.0) {
    PredictionTable t{H, 0, std::vector<double>(std::size_t{1} << H)};
    double total = 0.0;
    for (auto& x : t.joint) {
        x = uniform(gen, 0, 1) < zero_fraction ? 0.0 : -std::log(uniform(gen, 1e-12, 1.0));
        total += x;
    }
    if (total == 0.0) {
        t.joint.back() = 1.0;
        total = 1.0;
    }
    for (auto& x : t.joint) x /= total;
    return t;
}

inline PredictionTable point_mass(const std::vector<int>& bits) {
    PredictionTable t{static_cast<int>(bits.size()), 0, std::vector<double>(std::size_t{1} << bits.size(), 0.0)};
    t.joint[PredictionTable::index_of(bits)] = 1.0;
    return t;
}

inline PredictionTable product_bernoulli(int H, double p) {
    PredictionTable t{H, 0, std::vector<double>(std::size_t{1} << H)};
    for (std::size_t i = 0; i < t.joint.size(); ++i) {
        double w = 1.0;
        for (int h = 0; h < H; ++h) w *= ((i >> h) & 1u) ? p : 1.0 - p;
        t.joint[i] = w;
    }
    return t;
}

inline Matrix random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = uniform(gen, -scale, scale);
    return M;
}

inline Matrix random_pd(std::mt19937_64& gen, Eigen::Index n) {
    Matrix F = random_matrix(gen, n, n);
    return F * F.transpose() + 0.1 * Matrix::Identity(n, n);
}

inline PlantParams random_plant(std::mt19937_64& gen, int l, int m, int N) {
    PlantParams p;
    p.A = random_matrix(gen, l, l, 1.2);
    p.B = random_matrix(gen, l, m);
    p.Rw = random_pd(gen, l);
    p.R0 = random_pd(gen, l);
    p.Q0 = random_pd(gen, l);
    p.Q1 = random_pd(gen, l);
    p.Q2 = random_pd(gen, m);
    p.N = N;
    p.validate();
    return p;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    return (a - b).cwiseAbs().maxCoeff();
}

/// Plant used in the reconstructed mesh scenario.
inline PlantParams mesh_example_plant() {
    PlantParams p;
    p.A = (Matrix(2, 2) << 0, 1.5, 1.5, 0).finished();
    p.B = (Matrix(2, 2) << 5, 0, 0, 0.2).finished();
    p.Rw = 0.1 * Matrix::Identity(2, 2);
    p.R0 = 10 * Matrix::Identity(2, 2);
    p.Q0 = 10 * Matrix::Identity(2, 2);
    p.Q1 = Matrix::Identity(2, 2);
    p.Q2 = Matrix::Identity(2, 2);
    p.N = 3;
    return p;
}

inline PlantParams scalar_plant(double a, double b, double q0, double q1, double q2, double r0, double rw, int N) {
    PlantParams p;
    p.A = Matrix::Constant(1, 1, a);
    p.B = Matrix::Constant(1, 1, b);
    p.Q0 = Matrix::Constant(1, 1, q0);
    p.Q1 = Matrix::Constant(1, 1, q1);
    p.Q2 = Matrix::Constant(1, 1, q2);
    p.R0 = Matrix::Constant(1, 1, r0);
    p.Rw = Matrix::Constant(1, 1, rw);
    p.N = N;
    return p;
}

} // namespace meshpredict::testing
