#pragma once

// Closed-loop orchestration: ground-truth network, estimator fed by the ACK channel,
// controller, plant, and Monte-Carlo aggregation with common random numbers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "meshpredict/config.hpp"
#include "meshpredict/controller.hpp"
#include "meshpredict/estimator.hpp"
#include "meshpredict/link_models.hpp"
#include "meshpredict/mesh_model.hpp"
#include "meshpredict/plant.hpp"
#include "meshpredict/rng.hpp"

namespace meshpredict {

/// Pr(nu_k = 1) under the link model's prior (the a-priori end-to-end delivery probability).
inline double prior_delivery_probability(const MeshNetwork& net, const LinkModel& links, std::int64_t k) {
    const auto prior = prior_belief(links.prior_probabilities());
    const auto delivered = net.delivery_table(k);
    double p = 0.0;
    for (std::size_t m = 0; m < prior.size(); ++m)
        if (delivered[m]) p += prior[m];
    return p;
}

/// Delivery probability assumed by the IID controller: the override when given, else the
/// prior delivery probability averaged over the samples of the plant horizon.
inline double iid_probability(const ScenarioConfig& sc) {
    if (sc.iid_p) return *sc.iid_p;
    double sum = 0.0;
    for (int n = 0; n < sc.plant.N; ++n) sum += prior_delivery_probability(sc.network, sc.links, sc.plant_start + n);
    return sum / sc.plant.N;
}

/// Ground-truth realization sequence: scripted faults or the link model's own evolution.
class NetworkTruth {
public:
    NetworkTruth(const ScenarioConfig& sc, Rng& rng) : sc_(sc), rng_(rng) {}

    /// Realization governing the packet of sample k; must be called with k = 0, 1, 2, ...
    const TopologyRealization& at(int k) {
        const int E = sc_.network.edge_count();
        if (sc_.mode == NetworkMode::Scripted) {
            if (k == 0) current_ = {sc_.initial_up.value_or((Mask{1} << E) - 1), E};
            for (const auto& ev : sc_.faults) {
                if (ev.k != k) continue;
                if (ev.up) current_.up_mask |= Mask{1} << ev.edge;
                else current_.up_mask &= ~(Mask{1} << ev.edge);
            }
        } else if (k == 0) {
            const auto p = sc_.links.prior_probabilities();
            current_ = sample_initial_realization(p, rng_);
        } else {
            current_ = sample_next_realization(sc_.links, current_, rng_);
        }
        return current_;
    }

private:
    const ScenarioConfig& sc_;
    Rng& rng_;
    TopologyRealization current_;
};

/// Controller state shared by every run: fixed gain schedules for IID/ON.
struct PreparedController {
    ControllerKind kind = ControllerKind::Fpd;
    GainSchedule fixed_gains;
};

inline PreparedController prepare_controller(const ScenarioConfig& sc, ControllerKind kind) {
    PreparedController pc{kind, {}};
    const auto m = sc.plant.input_dim();
    const auto l = sc.plant.state_dim();
    if (kind == ControllerKind::Iid) pc.fixed_gains = zero_before(iid_gains(sc.plant, iid_probability(sc)), sc.control_start, m, l);
    if (kind == ControllerKind::On) pc.fixed_gains = zero_before(on_gains(sc.plant), sc.control_start, m, l);
    return pc;
}

struct RunResult {
    Trajectory trajectory;
    double cost = 0.0;
    std::vector<int> network_deliveries; // nu for every network sample 0 .. plant_start + N - 1
    GainSchedule applied_gains;          // gain actually used at each plant step
};

inline RunResult run_closed_loop(const ScenarioConfig& sc, const PreparedController& controller, std::uint64_t run) {
    Rng plant_rng(derive_seed(sc.seed, run, StreamId::Plant));
    Rng network_rng(derive_seed(sc.seed, run, StreamId::Network));
    NetworkTruth truth(sc, network_rng);
    NetworkEstimator estimator(sc.network, sc.links);
    const GaussianSampler initial(sc.plant.R0);
    const GaussianSampler noise(sc.plant.Rw);
    const PlantParams& plant = sc.plant;
    const auto m = plant.input_dim();
    const auto l = plant.state_dim();

    RunResult result;
    auto& traj = result.trajectory;
    std::optional<CostToGoLedger> reusable;
    std::size_t reuse_suffix = 0;
    std::size_t history_index = 0;
    Vector x;

    const int total = sc.plant_start + plant.N;
    for (int k = 0; k < total; ++k) {
        const int n = k - sc.plant_start;
        Vector u;
        if (n >= 0) {
            if (n == 0) {
                x = initial.sample(plant_rng);
                traj.states.push_back(x);
            }
            Matrix L = Matrix::Zero(m, l);
            if (n >= sc.control_start) {
                if (controller.kind == ControllerKind::Fpd) {
                    const bool reuse = reusable && estimator.is_static() &&
                                       std::all_of(estimator.normalizers().end() - (n - reusable->base_sample()),
                                                   estimator.normalizers().end(), [](double z) { return z == 1.0; });
                    if (reuse) {
                        L = reusable->gain(n, reuse_suffix);
                    } else {
                        try {
                            auto fpd = fpd_gain(plant, n, estimator.predict(plant.N - n));
                            L = std::move(fpd.gain);
                            if (sc.reuse_ledger) reusable.emplace(std::move(fpd.ledger));
                            reuse_suffix = 0;
                        } catch (const Error& e) {
                            throw Error(e.code(), "run " + std::to_string(run) + ", sample " + std::to_string(k) + ": " + e.what());
                        }
                    }
                } else {
                    L = controller.fixed_gains.gain(n, history_index);
                }
            }
            u = -L * x;
            result.applied_gains.by_sample.push_back({L});
        }

        const int nu = sc.network.delivered(k, truth.at(k).up_mask) ? 1 : 0;
        result.network_deliveries.push_back(nu);

        if (n >= 0) {
            x = step(plant, x, u, nu, noise.sample(plant_rng));
            traj.inputs.push_back(u);
            traj.deliveries.push_back(nu);
            traj.states.push_back(x);
            history_index = (history_index << 1) | static_cast<std::size_t>(nu);
            reuse_suffix = (reuse_suffix << 1) | static_cast<std::size_t>(nu);
        }
        try {
            estimator.observe(nu);
        } catch (const Error& e) {
            throw Error(e.code(), "run " + std::to_string(run) + ", sample " + std::to_string(k) + ": " + e.what());
        }
    }
    result.cost = realized_cost(traj, plant.Q0, plant.Q1, plant.Q2);
    return result;
}

inline RunResult run_closed_loop(const ScenarioConfig& sc, ControllerKind kind, std::uint64_t run) {
    return run_closed_loop(sc, prepare_controller(sc, kind), run);
}

struct ControllerSummary {
    std::string name;
    int runs = 0;
    double mean_cost = 0.0;
    double std_error = 0.0;
    std::vector<double> costs; // per run, not serialized
};

struct AggregateReport {
    std::string fingerprint;
    std::uint64_t seed = 0;
    int runs = 0;
    std::vector<ControllerSummary> controllers;

    const ControllerSummary& summary(const std::string& name) const {
        for (const auto& c : controllers)
            if (c.name == name) return c;
        throw Error(ErrorCode::InvalidConfig, "no controller " + name + " in report");
    }
};

/// FNV-1a over the canonical config dump plus the effective seed and run count.
inline std::string scenario_fingerprint(const ScenarioConfig& sc) {
    const std::string text = sc.source.dump() + "|seed=" + std::to_string(sc.seed) + "|runs=" + std::to_string(sc.runs);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

inline ControllerSummary summarize(std::string name, std::vector<double> costs) {
    ControllerSummary s;
    s.name = std::move(name);
    s.runs = static_cast<int>(costs.size());
    double sum = 0.0;
    for (double c : costs) sum += c;
    s.mean_cost = sum / s.runs;
    double ss = 0.0;
    for (double c : costs) ss += (c - s.mean_cost) * (c - s.mean_cost);
    s.std_error = s.runs > 1 ? std::sqrt(ss / (s.runs - 1)) / std::sqrt(static_cast<double>(s.runs)) : 0.0;
    s.costs = std::move(costs);
    return s;
}

/// Runs every controller on the same per-run seeds. Results are independent of the
/// thread count: each run writes its own slot and the reduction walks runs in order.
inline AggregateReport monte_carlo(const ScenarioConfig& sc, const std::vector<ControllerKind>& kinds,
                                   unsigned threads = 0) {
    if (sc.runs < 2) throw Error(ErrorCode::InvalidConfig, "monte_carlo needs at least two runs");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    AggregateReport report;
    report.fingerprint = scenario_fingerprint(sc);
    report.seed = sc.seed;
    report.runs = sc.runs;
    for (ControllerKind kind : kinds) {
        const auto prepared = prepare_controller(sc, kind);
        std::vector<double> costs(static_cast<std::size_t>(sc.runs));
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            for (int r = next++; r < sc.runs; r = next++) {
                try {
                    costs[static_cast<std::size_t>(r)] = run_closed_loop(sc, prepared, static_cast<std::uint64_t>(r)).cost;
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = sc.runs;
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
        report.controllers.push_back(summarize(to_string(kind), std::move(costs)));
    }
    return report;
}

struct PredictionTraceRow {
    int k = 0;
    int observed = 0; // nu_k revealed after the prediction was made
    PredictionTable table;
    std::vector<double> marginals;
};

/// Predictions over the next H samples at every sample k, made before nu_k is observed.
inline std::vector<PredictionTraceRow> run_estimator_trace(const ScenarioConfig& sc, int H) {
    if (sc.mode != NetworkMode::Scripted)
        throw Error(ErrorCode::InvalidConfig, "estimator trace requires network_mode = scripted");
    Rng unused(0);
    NetworkTruth truth(sc, unused);
    NetworkEstimator estimator(sc.network, sc.links);
    std::vector<PredictionTraceRow> rows;
    for (int k = 0; k < sc.trace_samples; ++k) {
        PredictionTraceRow row;
        row.k = k;
        row.table = estimator.predict(H);
        row.marginals = marginal_predictions(row.table);
        row.observed = sc.network.delivered(k, truth.at(k).up_mask) ? 1 : 0;
        estimator.observe(row.observed);
        rows.push_back(std::move(row));
    }
    return rows;
}

// Output files.

namespace detail {

inline std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IOError, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::IOError, "write failed for " + path);
}

} // namespace detail

inline json report_to_json(const AggregateReport& report) {
    json j;
    j["fingerprint"] = report.fingerprint;
    j["seed"] = report.seed;
    j["runs"] = report.runs;
    j["controllers"] = json::array();
    for (const auto& c : report.controllers)
        j["controllers"].push_back({{"controller", c.name}, {"runs", c.runs}, {"mean_cost", c.mean_cost}, {"std_error", c.std_error}});
    return j;
}

inline AggregateReport report_from_json(const json& j) {
    AggregateReport report;
    report.fingerprint = j.at("fingerprint").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.runs = j.at("runs").get<int>();
    for (const auto& c : j.at("controllers")) {
        ControllerSummary s;
        s.name = c.at("controller").get<std::string>();
        s.runs = c.at("runs").get<int>();
        s.mean_cost = c.at("mean_cost").get<double>();
        s.std_error = c.at("std_error").get<double>();
        report.controllers.push_back(std::move(s));
    }
    return report;
}

inline std::string report_to_csv(const AggregateReport& report) {
    std::string out = "controller,runs,mean_cost,std_error\n";
    for (const auto& c : report.controllers)
        out += c.name + "," + std::to_string(c.runs) + "," + detail::format_double(c.mean_cost) + "," +
               detail::format_double(c.std_error) + "\n";
    return out;
}

enum class ReportFormat { Csv, Json };

inline void emit_report(const AggregateReport& report, ReportFormat format, const std::string& path) {
    detail::write_file(path, format == ReportFormat::Csv ? report_to_csv(report) : report_to_json(report).dump(2) + "\n");
}

inline std::string predictions_to_csv(const std::vector<PredictionTraceRow>& rows) {
    std::string out = "k,h,marginal\n";
    for (const auto& row : rows)
        for (std::size_t h = 0; h < row.marginals.size(); ++h)
            out += std::to_string(row.k) + "," + std::to_string(h) + "," + detail::format_double(row.marginals[h]) + "\n";
    return out;
}

inline json predictions_to_json(const std::vector<PredictionTraceRow>& rows) {
    json j = json::array();
    for (const auto& row : rows) {
        json joint = json::object();
        for (std::size_t i = 0; i < row.table.joint.size(); ++i) joint[row.table.key(i)] = row.table.joint[i];
        j.push_back({{"k", row.k}, {"horizon", row.table.horizon}, {"observed", row.observed}, {"joint", joint}});
    }
    return j;
}

/// One row per plant step (plus the terminal state) per run.
inline std::string trace_to_csv(const std::vector<std::pair<std::uint64_t, RunResult>>& runs, Eigen::Index m,
                                Eigen::Index l) {
    std::string out = "run,k,nu";
    for (Eigen::Index i = 0; i < m; ++i) out += ",u" + std::to_string(i);
    for (Eigen::Index i = 0; i < l; ++i) out += ",x" + std::to_string(i);
    out += ",realized_cost\n";
    for (const auto& [run, res] : runs) {
        const auto& t = res.trajectory;
        for (std::size_t n = 0; n < t.states.size(); ++n) {
            const bool terminal = n == t.inputs.size();
            out += std::to_string(run) + "," + std::to_string(n) + "," + (terminal ? "" : std::to_string(t.deliveries[n]));
            for (Eigen::Index i = 0; i < m; ++i) out += "," + (terminal ? std::string() : detail::format_double(t.inputs[n][i]));
            for (Eigen::Index i = 0; i < l; ++i) out += "," + detail::format_double(t.states[n][i]);
            out += "," + detail::format_double(res.cost) + "\n";
        }
    }
    return out;
}

} // namespace meshpredict
