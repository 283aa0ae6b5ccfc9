#pragma once

// JSON config file: network, link model, plant and scenario sections in one document.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "meshpredict/controller.hpp"
#include "meshpredict/error.hpp"
#include "meshpredict/link_models.hpp"
#include "meshpredict/mesh_model.hpp"

namespace meshpredict {

using json = nlohmann::json;

enum class ControllerKind { Fpd, Iid, On };
enum class NetworkMode { Stochastic, Scripted };

inline std::string to_string(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::Fpd: return "fpd";
    case ControllerKind::Iid: return "iid";
    case ControllerKind::On: return "on";
    }
    return "?";
}

inline ControllerKind parse_controller(const std::string& name) {
    if (name == "fpd") return ControllerKind::Fpd;
    if (name == "iid") return ControllerKind::Iid;
    if (name == "on") return ControllerKind::On;
    throw Error(ErrorCode::InvalidConfig, "unknown controller '" + name + "'");
}

/// Ground-truth change applied before the packet of sample k is sent.
struct FaultEvent {
    int k = 0;
    int edge = 0;
    bool up = false;
};

struct ScenarioConfig {
    MeshNetwork network;
    LinkModel links;
    PlantParams plant;
    ControllerKind controller = ControllerKind::Fpd;
    NetworkMode mode = NetworkMode::Stochastic;
    std::vector<FaultEvent> faults;
    std::optional<Mask> initial_up; // scripted mode; all links up when absent
    int plant_start = 0;            // network sample at which plant step 0 happens
    int control_start = 0;          // plant step before which u = 0
    int runs = 1000;
    std::uint64_t seed = 1;
    std::optional<double> iid_p;
    int trace_samples = 0;
    int trace_horizon = 4;
    bool reuse_ledger = false;
    json source; // the parsed document, for fingerprinting
};

namespace detail {

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::InvalidConfig, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + e.what());
    }
}

inline Edge parse_edge(const json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::InvalidConfig, "edges are [from, to] pairs");
    return {j[0].get<int>(), j[1].get<int>()};
}

inline Matrix parse_matrix(const json& j, const char* name) {
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw Error(ErrorCode::InvalidConfig, std::string("plant.") + name + " must be a nested row-major array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols)
            throw Error(ErrorCode::InvalidConfig, std::string("plant.") + name + " has ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
    }
    return M;
}

} // namespace detail

inline MeshNetwork parse_network(const json& j) {
    RoutingTopology g;
    g.node_count = detail::required<int>(j, "nodes");
    for (const auto& e : detail::required<json>(j, "edges")) g.edges.push_back(detail::parse_edge(e));
    g.source = detail::required<int>(j, "source");
    g.sink = detail::required<int>(j, "sink");
    Schedule schedule;
    for (const auto& slot : detail::required<json>(j, "schedule")) {
        std::vector<Edge> links;
        for (const auto& e : slot) links.push_back(detail::parse_edge(e));
        schedule.slots.push_back(std::move(links));
    }
    TimingConfig timing;
    timing.slots_per_sample = detail::required<int>(j, "slots_per_sample");
    timing.phase = j.value("phase", 0);
    timing.deadline = detail::required<int>(j, "deadline");
    return MeshNetwork(std::move(g), std::move(schedule), timing);
}

inline LinkModel parse_links(const json& j, int edge_count) {
    LinkModel links;
    if (j.contains("static_p")) links.static_params = StaticLinkParams{j.at("static_p").get<std::vector<double>>()};
    if (j.contains("ge")) {
        const auto& ge = j.at("ge");
        links.ge = GEParams{detail::required<std::vector<double>>(ge, "p_up"),
                            detail::required<std::vector<double>>(ge, "p_down")};
    }
    links.identity_kernel = j.value("identity_kernel", false);
    links.validate(edge_count);
    return links;
}

inline PlantParams parse_plant(const json& j) {
    PlantParams p;
    const auto& obj = j;
    auto get = [&](const char* name) {
        if (!obj.contains(name)) throw Error(ErrorCode::InvalidConfig, std::string("missing plant.") + name);
        return detail::parse_matrix(obj.at(name), name);
    };
    p.A = get("A");
    p.B = get("B");
    p.Rw = get("Rw");
    p.R0 = get("R0");
    p.Q0 = get("Q0");
    p.Q1 = get("Q1");
    p.Q2 = get("Q2");
    p.N = detail::required<int>(obj, "N");
    p.validate();
    return p;
}

inline ScenarioConfig parse_scenario(const json& doc) {
    try {
        MeshNetwork net = parse_network(doc);
        ScenarioConfig cfg{.network = net,
                           .links = parse_links(detail::required<json>(doc, "links"), net.edge_count()),
                           .plant = parse_plant(detail::required<json>(doc, "plant")),
                           .faults = {},
                           .initial_up = std::nullopt,
                           .iid_p = std::nullopt,
                           .source = doc};
        const json sc = doc.value("scenario", json::object());
        cfg.controller = parse_controller(sc.value("controller", std::string("fpd")));
        const std::string mode = sc.value("network_mode", std::string("stochastic"));
        if (mode == "scripted") cfg.mode = NetworkMode::Scripted;
        else if (mode != "stochastic") throw Error(ErrorCode::InvalidConfig, "network_mode must be stochastic or scripted");

        const auto& g = net.topology();
        if (sc.contains("initial_up")) {
            const auto bits = sc.at("initial_up").get<std::vector<int>>();
            if (static_cast<int>(bits.size()) != g.edge_count())
                throw Error(ErrorCode::InvalidConfig, "initial_up needs one entry per edge");
            Mask m = 0;
            for (std::size_t e = 0; e < bits.size(); ++e)
                if (bits[e]) m |= Mask{1} << e;
            cfg.initial_up = m;
        }
        for (const auto& ev : sc.value("faults", json::array())) {
            const Edge edge = detail::parse_edge(ev.at("edge"));
            const auto idx = g.edge_index(edge);
            if (!idx) throw Error(ErrorCode::InvalidConfig, "fault references non-edge " + to_string(edge));
            const std::string state = detail::required<std::string>(ev, "state");
            if (state != "up" && state != "down") throw Error(ErrorCode::InvalidConfig, "fault state must be up or down");
            cfg.faults.push_back({detail::required<int>(ev, "k"), *idx, state == "up"});
        }
        if (!cfg.faults.empty() && cfg.mode != NetworkMode::Scripted)
            throw Error(ErrorCode::InvalidConfig, "fault script requires network_mode = scripted");
        if (cfg.initial_up && cfg.mode != NetworkMode::Scripted)
            throw Error(ErrorCode::InvalidConfig, "initial_up requires network_mode = scripted");

        cfg.plant_start = sc.value("plant_start", 0);
        cfg.control_start = sc.value("control_start", 0);
        if (cfg.plant_start < 0) throw Error(ErrorCode::InvalidConfig, "plant_start must be non-negative");
        if (cfg.control_start < 0 || cfg.control_start >= cfg.plant.N)
            throw Error(ErrorCode::InvalidConfig, "control_start must lie in [0, N)");
        cfg.runs = sc.value("runs", 1000);
        cfg.seed = sc.value("seed", std::uint64_t{1});
        if (sc.contains("iid_p")) cfg.iid_p = sc.at("iid_p").get<double>();
        cfg.trace_samples = sc.value("trace_samples", cfg.plant_start + cfg.plant.N);
        cfg.trace_horizon = sc.value("trace_horizon", 4);
        cfg.reuse_ledger = sc.value("reuse_ledger", false);
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IOError, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
}

inline ScenarioConfig load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

} // namespace meshpredict
