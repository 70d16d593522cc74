// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qy/graph.hpp"
#include "qy/observers.hpp"
#include "qy/uh.hpp"

namespace qy {

enum class QuantMode { weights_only, activation_only, both };

const char* quant_mode_name(QuantMode m);
QuantMode quant_mode_from_name(const std::string& name);

/// Optional observation points for external auditing (the compare --audit
/// hook runs the brute-force oracles here). Non-owning, may outlive nothing.
struct CalibHooks {
    std::function<void(const std::string& node_id,
                       const ActivationHistogram& hist,
                       const UhSearchTrace& trace)>
        on_uh_search;
    std::function<void(const std::string& node_id,
                       std::span<const float> values, const ClipRange& chosen)>
        on_mse_range;
};

/// End-to-end PTQ configuration. Weights always use symmetric per-channel
/// MinMax (the reference policy); activations use the configured observer.
struct CalibConfig {
    int weight_bits = 8;
    int act_bits = 8;
    ObserverConfig act_scheme{};
    bool act_symmetric = false;
    QuantMode mode = QuantMode::both;
    bool skip_first_last = true;
    int calib_sample_limit = 1500;
    const CalibHooks* hooks = nullptr;

    void validate() const;
};

struct NodeReport {
    std::string node_id;
    // Activation observer range and the per-tensor params built from it.
    double range_lower = 0.0;
    double range_upper = 0.0;
    double scale = 0.0;
    int zero_point = 0;
    int bits = 32;
    double weight_mse = 0.0;
    double act_mse = 0.0;
    double sqnr_db = 0.0;
    std::optional<UhSearchTrace> uh_trace;
};

struct CalibrationReport {
    uint64_t seed = 0;
    std::vector<NodeReport> nodes;
    double output_mse = 0.0;
    double output_cosine = 1.0;
    std::optional<double> wall_time_ms;
};

struct CalibrationResult {
    QuantAssignment assignment;
    CalibrationReport report;
};

/// Convolution node ids in topological order.
std::vector<std::string> conv_ids_in_topo_order(const GraphModel& model);

/// Node ids whose outputs receive activation quantization: every node except
/// the input/output markers, skip-set members, and convs feeding exactly one
/// activation node (those are pre-activation tensors).
std::vector<std::string> activation_quant_ids(
    const GraphModel& model, const std::set<std::string>& skip);

/// Runs the two-pass calibration (min/max, then histograms for the UH
/// scheme), selects ranges, builds the assignment under the configured
/// policy, and measures per-node and end-to-end error on the calibration set.
CalibrationResult calibrate(const GraphModel& model,
                            const WeightBundle& weights,
                            const std::vector<Tensor>& calib_data,
                            const CalibConfig& cfg);

struct EvalMetrics {
    double output_mse = 0.0;
    double output_cosine = 1.0;
    std::map<std::string, double> sqnr_db;  // per quantized node
    int samples = 0;

    double mean_sqnr_db() const;
};

/// Full-precision vs fake-quantized comparison over an evaluation stream.
EvalMetrics evaluate(const GraphModel& model, const WeightBundle& weights,
                     const QuantAssignment& qa,
                     const std::vector<Tensor>& eval_data);

/// 10*log10(signal / noise) with the zero-noise case capped at +300 dB so
/// reports stay JSON round-trippable.
double sqnr_db_from_powers(double signal_power, double noise_power);

}  // namespace qy
