#pragma once

// Routing topology, TDMA schedule and the deterministic hop-by-hop packet walk
// that maps a topology realization to a delivery outcome.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "meshpredict/error.hpp"

namespace meshpredict {

struct Edge {
    int from = 0;
    int to = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline std::string to_string(const Edge& e) {
    return "(" + std::to_string(e.from) + "," + std::to_string(e.to) + ")";
}

struct RoutingTopology {
    int node_count = 0;
    std::vector<Edge> edges;
    int source = 0;
    int sink = 0;

    int edge_count() const { return static_cast<int>(edges.size()); }

    std::optional<int> edge_index(const Edge& e) const {
        auto it = std::find(edges.begin(), edges.end(), e);
        if (it == edges.end()) return std::nullopt;
        return static_cast<int>(it - edges.begin());
    }
};

/// Repeating slot assignment; slot t of the global clock uses slots[t mod period].
struct Schedule {
    std::vector<std::vector<Edge>> slots;

    int period() const { return static_cast<int>(slots.size()); }
};

/// Packet for sample k is generated right before slot k*slots_per_sample + phase and
/// must arrive before slot (that + deadline) begins.
struct TimingConfig {
    int slots_per_sample = 1;
    int phase = 0;
    int deadline = 1;

    std::int64_t packet_slot(std::int64_t k) const { return k * slots_per_sample + phase; }
    std::int64_t deadline_slot(std::int64_t k) const { return packet_slot(k) + deadline; }
};

using Mask = std::uint32_t;

/// Bit e of up_mask is set iff edge e (position in the topology's edge list) is up.
struct TopologyRealization {
    Mask up_mask = 0;
    int width = 0;

    bool is_up(int e) const { return ((up_mask >> e) & 1u) != 0; }

    friend bool operator==(const TopologyRealization&, const TopologyRealization&) = default;
};

struct DeliveryOutcome {
    bool delivered = false;
    std::optional<std::int64_t> arrival_slot;
    std::vector<int> visited_nodes;
};

namespace detail {

inline bool node_in_range(const RoutingTopology& g, int v) { return v >= 0 && v < g.node_count; }

inline bool has_cycle(const RoutingTopology& g) {
    // Kahn's algorithm; leftover nodes lie on a cycle.
    std::vector<int> indegree(g.node_count, 0);
    std::vector<std::vector<int>> out(g.node_count);
    for (const auto& e : g.edges) {
        out[e.from].push_back(e.to);
        ++indegree[e.to];
    }
    std::vector<int> ready;
    for (int v = 0; v < g.node_count; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    int seen = 0;
    while (!ready.empty()) {
        int v = ready.back();
        ready.pop_back();
        ++seen;
        for (int w : out[v])
            if (--indegree[w] == 0) ready.push_back(w);
    }
    return seen != g.node_count;
}

inline bool weakly_connected(const RoutingTopology& g) {
    std::vector<int> parent(g.node_count);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const auto& e : g.edges) parent[find(e.from)] = find(e.to);
    for (int v = 1; v < g.node_count; ++v)
        if (find(v) != find(0)) return false;
    return true;
}

inline bool sink_reachable(const RoutingTopology& g) {
    std::vector<char> seen(g.node_count, 0);
    std::vector<int> stack{g.source};
    seen[g.source] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& e : g.edges) {
            if (e.from == v && !seen[e.to]) {
                seen[e.to] = 1;
                stack.push_back(e.to);
            }
        }
    }
    return seen[g.sink] != 0;
}

} // namespace detail

/// Checks every structural constraint on the network description; throws Error on the
/// first violation found.
inline void validate(const RoutingTopology& g, const Schedule& schedule, const TimingConfig& timing) {
    if (g.node_count < 2) throw Error(ErrorCode::InvalidConfig, "need at least two nodes");
    if (!detail::node_in_range(g, g.source) || !detail::node_in_range(g, g.sink))
        throw Error(ErrorCode::InvalidConfig, "source or sink out of range");
    if (g.source == g.sink) throw Error(ErrorCode::InvalidConfig, "source equals sink");
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        if (!detail::node_in_range(g, e.from) || !detail::node_in_range(g, e.to))
            throw Error(ErrorCode::InvalidConfig, "edge " + to_string(e) + " references unknown node");
        if (e.from == e.to) throw Error(ErrorCode::InvalidConfig, "self-loop " + to_string(e));
        for (std::size_t j = 0; j < i; ++j)
            if (g.edges[j] == e) throw Error(ErrorCode::InvalidConfig, "duplicate edge " + to_string(e));
    }
    if (g.edge_count() > kMaxEdges)
        throw Error(ErrorCode::TooManyEdges,
                    std::to_string(g.edge_count()) + " edges exceeds the cap of " + std::to_string(kMaxEdges));
    if (detail::has_cycle(g)) throw Error(ErrorCode::CyclicGraph, "routing topology contains a directed cycle");
    for (const auto& e : g.edges)
        if (e.from == g.sink)
            throw Error(ErrorCode::SinkHasOutgoingEdge, "sink has outgoing edge " + to_string(e));
    if (!detail::weakly_connected(g) || !detail::sink_reachable(g))
        throw Error(ErrorCode::DisconnectedGraph, "graph is disconnected or the sink is unreachable from the source");

    if (schedule.period() < 1) throw Error(ErrorCode::InvalidConfig, "schedule must have at least one slot");
    for (int t = 0; t < schedule.period(); ++t) {
        const auto& slot = schedule.slots[t];
        for (std::size_t i = 0; i < slot.size(); ++i) {
            if (!g.edge_index(slot[i]))
                throw Error(ErrorCode::InvalidConfig,
                            "slot " + std::to_string(t) + " schedules non-edge " + to_string(slot[i]));
            for (std::size_t j = 0; j < i; ++j)
                if (slot[j].from == slot[i].from)
                    throw Error(ErrorCode::UnicastViolation, "slot " + std::to_string(t) + " schedules " +
                                                                 to_string(slot[j]) + " and " + to_string(slot[i]));
        }
    }

    if (timing.slots_per_sample < 1 || timing.deadline < 1 || timing.phase < 0)
        throw Error(ErrorCode::InvalidConfig, "slots_per_sample and deadline must be positive, phase non-negative");
    if (timing.deadline > timing.slots_per_sample)
        throw Error(ErrorCode::DeadlineExceedsSample, "deadline " + std::to_string(timing.deadline) +
                                                          " exceeds slots_per_sample " +
                                                          std::to_string(timing.slots_per_sample));
}

/// Token walk over slots [t_start, t_deadline). A node forwards over its scheduled link
/// when that link is up and holds the packet otherwise.
inline DeliveryOutcome simulate_packet(const RoutingTopology& g, const Schedule& schedule,
                                       const TopologyRealization& realization, std::int64_t t_start,
                                       std::int64_t t_deadline) {
    DeliveryOutcome out;
    int node = g.source;
    out.visited_nodes.push_back(node);
    const auto period = static_cast<std::int64_t>(schedule.period());
    for (std::int64_t t = t_start; t < t_deadline && node != g.sink; ++t) {
        for (const auto& link : schedule.slots[static_cast<std::size_t>(t % period)]) {
            if (link.from != node) continue;
            auto e = g.edge_index(link);
            if (e && realization.is_up(*e)) {
                node = link.to;
                out.visited_nodes.push_back(node);
                if (node == g.sink) out.arrival_slot = t;
            }
            break;
        }
    }
    out.delivered = node == g.sink;
    return out;
}

inline std::vector<TopologyRealization> enumerate_realizations(const RoutingTopology& g) {
    const int E = g.edge_count();
    if (E > kMaxEdges)
        throw Error(ErrorCode::TooManyEdges, std::to_string(E) + " edges exceeds the cap of " + std::to_string(kMaxEdges));
    std::vector<TopologyRealization> all;
    all.reserve(std::size_t{1} << E);
    for (Mask m = 0; m < (Mask{1} << E); ++m) all.push_back({m, E});
    return all;
}

/// Validated, immutable network description plus a memo of delivery outcomes keyed by
/// (packet slot mod period, up_mask). Copies share the memo.
class MeshNetwork {
public:
    MeshNetwork(RoutingTopology topology, Schedule schedule, TimingConfig timing)
        : topology_(std::move(topology)), schedule_(std::move(schedule)), timing_(timing),
          cache_(std::make_shared<Cache>()) {
        validate(topology_, schedule_, timing_);
        next_edge_.assign(schedule_.period(), std::vector<int>(topology_.node_count, -1));
        for (int t = 0; t < schedule_.period(); ++t)
            for (const auto& link : schedule_.slots[t]) next_edge_[t][link.from] = *topology_.edge_index(link);
    }

    const RoutingTopology& topology() const { return topology_; }
    const Schedule& schedule() const { return schedule_; }
    const TimingConfig& timing() const { return timing_; }
    int edge_count() const { return topology_.edge_count(); }
    std::size_t realization_count() const { return std::size_t{1} << edge_count(); }

    DeliveryOutcome simulate(const TopologyRealization& r, std::int64_t k) const {
        return simulate_packet(topology_, schedule_, r, timing_.packet_slot(k), timing_.deadline_slot(k));
    }

    /// Whether the packet generated at sample k reaches the sink in time under `mask`.
    bool delivered(std::int64_t k, Mask mask) const { return table_for(k)[mask] != 0; }

    /// Delivery bit for every realization mask at sample k.
    std::span<const std::uint8_t> delivery_table(std::int64_t k) const { return table_for(k); }

private:
    struct Cache {
        std::shared_mutex mutex;
        std::map<int, std::shared_ptr<const std::vector<std::uint8_t>>> tables;
    };

    const std::vector<std::uint8_t>& table_for(std::int64_t k) const {
        const int offset = static_cast<int>(timing_.packet_slot(k) % schedule_.period());
        {
            std::shared_lock lock(cache_->mutex);
            auto it = cache_->tables.find(offset);
            if (it != cache_->tables.end()) return *it->second;
        }
        auto table = std::make_shared<std::vector<std::uint8_t>>(realization_count());
        for (Mask m = 0; m < realization_count(); ++m) (*table)[m] = walk(offset, m) ? 1 : 0;
        std::unique_lock lock(cache_->mutex);
        auto [it, inserted] = cache_->tables.emplace(offset, std::move(table));
        return *it->second;
    }

    bool walk(int offset, Mask mask) const {
        int node = topology_.source;
        const int period = schedule_.period();
        for (int step = 0; step < timing_.deadline; ++step) {
            int e = next_edge_[(offset + step) % period][node];
            if (e >= 0 && ((mask >> e) & 1u)) {
                node = topology_.edges[e].to;
                if (node == topology_.sink) return true;
            }
        }
        return false;
    }

    RoutingTopology topology_;
    Schedule schedule_;
    TimingConfig timing_;
    std::vector<std::vector<int>> next_edge_;
    std::shared_ptr<Cache> cache_;
};

/// Consistency of a claimed delivery bit with a realization at sample k.
inline bool delivery_indicator(const MeshNetwork& net, const TopologyRealization& r, std::int64_t k,
                               int claimed_delivery) {
    return net.simulate(r, k).delivered == (claimed_delivery != 0);
}

} // namespace meshpredict
