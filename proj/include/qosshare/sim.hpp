#pragma once

// Two-time-scale simulation: one policy decision per frame, one activation
// per InP per slot, queue update at the frame boundary.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qosshare/model.hpp"
#include "qosshare/policy.hpp"
#include "qosshare/solve.hpp"

namespace qosshare {

struct Instance {
    Topology topo;
    QosSpec spec;
    ArrivalProcess arrivals;
    UtilityFunction utility;
};

enum class Record { PerFrame, Summary };

struct RunConfig {
    std::int64_t horizon = 1;
    std::uint64_t seed = 1;
    Record record = Record::PerFrame;
    bool debug_slack = false;
};

struct FrameMetrics {
    std::int64_t frame = 0;
    std::vector<std::int64_t> arrivals;  // per pair
    std::vector<std::int64_t> service;
    std::vector<std::int64_t> backlog;   // after the frame's queue update
    std::vector<double> delivery_ratio;  // service / (K T_s)
    std::vector<std::uint8_t> qos_met;   // delivery_ratio > gamma
    std::vector<double> expected_service;
    double utility = 0.0;                // f(p(t))
    double solver_gap = 0.0;
    int solver_iterations = 0;
};

struct FrameService {
    std::vector<std::int64_t> service;   // per pair
    std::vector<std::int64_t> attempts;  // activations per pair
};

/// Play one frame of the prior. Each InP draws its (client, class) per slot by
/// inverse CDF over its links in canonical order (class-minor), using one
/// uniform from its activation stream; success uses one uniform from its
/// success stream. Blocks are renormalized before sampling.
FrameService run_frame(const SchedulePrior& prior, const Topology& topo,
                       std::span<RandomStream> activation, std::span<RandomStream> success);

struct RunSummary {
    std::string policy;
    double v = 0.0;
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    std::vector<double> reliability;                // fraction of frames with qos_met
    std::vector<std::optional<double>> mean_delay;  // frames; absent when lambda = 0
    std::vector<double> mean_service;
    std::vector<std::int64_t> final_backlog;
    std::int64_t total_final_backlog = 0;
    double time_avg_utility = 0.0;
    double mean_gap = 0.0;
    double max_gap = 0.0;
    double mean_iterations = 0.0;
    int max_iteration_frames = 0;  // frames where the solver hit its cap
    std::optional<double> min_slack;  // debug slack checks only
};

struct RunResult {
    std::vector<FrameMetrics> frames;  // empty unless Record::PerFrame
    RunSummary summary;
};

RunResult run_scenario(const Instance& inst, Policy& policy, const RunConfig& cfg);

}  // namespace qosshare
