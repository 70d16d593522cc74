// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/calibrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <unordered_map>

#include "qy/errors.hpp"
#include "qy/histogram.hpp"

namespace qy {

namespace {

bool valid_bits(int b) { return b == 32 || (b >= 2 && b <= 8); }

struct ActStats {
    float min_v = std::numeric_limits<float>::infinity();
    float max_v = -std::numeric_limits<float>::infinity();
    std::vector<float> values;  // filled only for percentile/mse schemes
};

QuantParams weight_params_per_channel(const Tensor& kernel, int bits) {
    const int64_t oc = kernel.shape[0];
    const int64_t per_ch = kernel.numel() / oc;
    std::vector<ClipRange> ranges;
    ranges.reserve(static_cast<size_t>(oc));
    for (int64_t o = 0; o < oc; ++o) {
        const std::span<const float> slice(
            kernel.data.data() + o * per_ch, static_cast<size_t>(per_ch));
        ranges.push_back(observe_minmax(slice));
    }
    return make_qparams_per_channel(ranges, /*axis=*/0, bits,
                                    /*is_signed=*/true, /*symmetric=*/true);
}

double tensor_mse(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

double tensor_cosine(const Tensor& a, const Tensor& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        dot += static_cast<double>(a.data[i]) * b.data[i];
        na += static_cast<double>(a.data[i]) * a.data[i];
        nb += static_cast<double>(b.data[i]) * b.data[i];
    }
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace

const char* quant_mode_name(QuantMode m) {
    switch (m) {
        case QuantMode::weights_only: return "weights-only";
        case QuantMode::activation_only: return "activation-only";
        case QuantMode::both: return "both";
    }
    return "?";
}

QuantMode quant_mode_from_name(const std::string& name) {
    if (name == "weights-only") return QuantMode::weights_only;
    if (name == "activation-only") return QuantMode::activation_only;
    if (name == "both") return QuantMode::both;
    throw InvalidConfig("unknown quantization mode: " + name);
}

void CalibConfig::validate() const {
    if (!valid_bits(weight_bits) || !valid_bits(act_bits)) {
        throw InvalidConfig("bit-widths must be in {2..8, 32}");
    }
    if (calib_sample_limit < 1) {
        throw InvalidConfig("calibration sample limit must be >= 1");
    }
    act_scheme.validate();
}

std::vector<std::string> conv_ids_in_topo_order(const GraphModel& model) {
    std::vector<std::string> out;
    for (size_t idx : model.topo_order()) {
        if (model.nodes[idx].op == OpKind::conv2d) {
            out.push_back(model.nodes[idx].id);
        }
    }
    return out;
}

std::vector<std::string> activation_quant_ids(
    const GraphModel& model, const std::set<std::string>& skip) {
    const auto consumers = model.consumers();
    std::vector<std::string> out;
    for (size_t idx : model.topo_order()) {
        const NodeSpec& n = model.nodes[idx];
        if (n.op == OpKind::input || n.op == OpKind::output) continue;
        if (skip.count(n.id) > 0) continue;
        if (n.op == OpKind::conv2d) {
            const auto& users = consumers.at(n.id);
            if (users.size() == 1) {
                const NodeSpec* u = model.find(users[0]);
                if (u != nullptr && (u->op == OpKind::silu ||
                                     u->op == OpKind::leaky_relu)) {
                    continue;  // pre-activation tensor; the activation's
                               // output is observed instead
                }
            }
        }
        out.push_back(n.id);
    }
    return out;
}

CalibrationResult calibrate(const GraphModel& model,
                            const WeightBundle& weights,
                            const std::vector<Tensor>& calib_data,
                            const CalibConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    model.validate();
    if (calib_data.empty()) {
        throw EmptyCalibrationSet("calibration needs at least one sample");
    }
    const size_t n_samples = std::min(
        calib_data.size(), static_cast<size_t>(cfg.calib_sample_limit));

    const std::vector<std::string> convs = conv_ids_in_topo_order(model);
    QuantAssignment qa;
    if (cfg.skip_first_last && !convs.empty()) {
        qa.skip.insert(convs.front());
        qa.skip.insert(convs.back());
    }
    const std::vector<std::string> act_ids =
        activation_quant_ids(model, qa.skip);

    // Weight side needs no data: symmetric per-out-channel MinMax.
    const bool quantize_weights =
        cfg.mode != QuantMode::activation_only && cfg.weight_bits != 32;
    for (const std::string& id : convs) {
        if (qa.skip.count(id) > 0) continue;
        auto it = weights.entries.find(id);
        if (it == weights.entries.end()) {
            throw MissingWeight("no weights for conv node '" + id + "'");
        }
        qa.nodes[id].weight_qp =
            quantize_weights
                ? weight_params_per_channel(it->second.kernel, cfg.weight_bits)
                : QuantParams::identity_sentinel();
    }

    // Pass 1: full-precision traces; per-node min/max, plus raw values for
    // the sort-based observers.
    const Scheme scheme = cfg.act_scheme.scheme;
    const bool keep_values =
        scheme == Scheme::percentile || scheme == Scheme::mse;
    std::unordered_map<std::string, ActStats> stats;
    for (const std::string& id : act_ids) stats[id];
    for (size_t s = 0; s < n_samples; ++s) {
        const auto trace = execute_trace(model, weights, calib_data[s]);
        for (const std::string& id : act_ids) {
            const Tensor& y = trace.at(id);
            ActStats& st = stats[id];
            for (float v : y.data) {
                st.min_v = std::min(st.min_v, v);
                st.max_v = std::max(st.max_v, v);
            }
            if (keep_values) {
                st.values.insert(st.values.end(), y.data.begin(),
                                 y.data.end());
            }
        }
    }

    // Pass 2 (histogram scheme only): fixed bins anchored at the truncation
    // floor, upper edge at the pass-1 running max.
    std::unordered_map<std::string, ActivationHistogram> hists;
    if (scheme == Scheme::uh) {
        for (const std::string& id : act_ids) {
            const double lo = cfg.act_scheme.uh_fixed_lower;
            const double hi = stats[id].max_v;
            if (!(hi > lo)) {
                throw InvalidDomain("node '" + id +
                                    "' never exceeds the fixed lower bound");
            }
            hists.emplace(id, make_histogram(lo, hi));
        }
        for (size_t s = 0; s < n_samples; ++s) {
            const auto trace = execute_trace(model, weights, calib_data[s]);
            for (const std::string& id : act_ids) {
                hists.at(id).add(trace.at(id));
            }
        }
    }

    // Range selection + activation params.
    const bool quantize_acts =
        cfg.mode != QuantMode::weights_only && cfg.act_bits != 32;
    CalibrationReport report;
    std::unordered_map<std::string, size_t> report_index;
    for (const std::string& id : act_ids) {
        const ActStats& st = stats[id];
        ClipRange range{};
        std::optional<UhSearchTrace> trace;
        switch (scheme) {
            case Scheme::minmax: {
                const float mm[2] = {st.min_v, st.max_v};
                range = observe_minmax(std::span<const float>(mm, 2));
                break;
            }
            case Scheme::percentile:
                range = observe_percentile(
                    std::span<const float>(st.values),
                    cfg.act_scheme.percentile_keep);
                break;
            case Scheme::mse:
                range = observe_mse(std::span<const float>(st.values),
                                    cfg.act_bits == 32 ? 8 : cfg.act_bits,
                                    cfg.act_symmetric, cfg.act_symmetric,
                                    cfg.act_scheme.mse_grid_steps);
                if (cfg.hooks != nullptr && cfg.hooks->on_mse_range) {
                    cfg.hooks->on_mse_range(
                        id, std::span<const float>(st.values), range);
                }
                break;
            case Scheme::uh: {
                const UhSearchTrace t =
                    uh_search(hists.at(id), cfg.act_scheme);
                if (cfg.hooks != nullptr && cfg.hooks->on_uh_search) {
                    cfg.hooks->on_uh_search(id, hists.at(id), t);
                }
                range = ClipRange{cfg.act_scheme.uh_fixed_lower, t.best_upper};
                trace = t;
                break;
            }
        }

        QuantParams act_qp = QuantParams::identity_sentinel();
        if (quantize_acts) {
            act_qp = make_qparams(range, cfg.act_bits,
                                  /*is_signed=*/cfg.act_symmetric,
                                  /*symmetric=*/cfg.act_symmetric);
        }
        qa.nodes[id].act_qp = act_qp;

        NodeReport nr;
        nr.node_id = id;
        nr.range_lower = range.lower;
        nr.range_upper = range.upper;
        nr.bits = act_qp.bits;
        if (!act_qp.identity()) {
            nr.scale = act_qp.scales[0];
            nr.zero_point = act_qp.zero_points[0];
        }
        nr.uh_trace = std::move(trace);
        report_index[id] = report.nodes.size();
        report.nodes.push_back(std::move(nr));
    }

    // Convs whose output is not act-quantized still appear once (weight side).
    for (const std::string& id : convs) {
        if (qa.skip.count(id) > 0) continue;
        if (report_index.count(id) > 0) continue;
        NodeReport nr;
        nr.node_id = id;
        nr.bits = 32;
        report_index[id] = report.nodes.size();
        report.nodes.push_back(std::move(nr));
    }

    // Weight-quant error is data-free.
    for (const std::string& id : convs) {
        auto idx = report_index.find(id);
        if (idx == report_index.end()) continue;
        const NodeQuant* nq = qa.find(id);
        if (nq == nullptr || !nq->weight_qp.has_value() ||
            nq->weight_qp->identity()) {
            continue;
        }
        const Tensor& kernel = weights.entries.at(id).kernel;
        report.nodes[idx->second].weight_mse =
            tensor_mse(kernel, fake_quantize(kernel, *nq->weight_qp));
    }

    // Pass 3: per-node activation error and end-to-end error on the
    // calibration stream, with the final params in place.
    std::unordered_map<std::string, double> signal_power;
    std::unordered_map<std::string, double> noise_power;
    std::unordered_map<std::string, double> noise_count;
    double out_mse = 0.0;
    double out_cos = 0.0;
    for (size_t s = 0; s < n_samples; ++s) {
        const auto ref = execute_trace(model, weights, calib_data[s]);
        for (const std::string& id : act_ids) {
            const Tensor& y = ref.at(id);
            const NodeQuant* nq = qa.find(id);
            if (nq == nullptr || !nq->act_qp.has_value()) continue;
            const Tensor fq = fake_quantize(y, *nq->act_qp);
            for (size_t i = 0; i < y.data.size(); ++i) {
                const double yv = y.data[i];
                const double d = yv - fq.data[i];
                signal_power[id] += yv * yv;
                noise_power[id] += d * d;
            }
            noise_count[id] += static_cast<double>(y.numel());
        }
        const Tensor& ref_out = ref.at(model.output_node().id);
        const Tensor q_out = execute(model, weights, calib_data[s], &qa);
        out_mse += tensor_mse(ref_out, q_out);
        out_cos += tensor_cosine(ref_out, q_out);
    }
    for (const std::string& id : act_ids) {
        NodeReport& nr = report.nodes[report_index.at(id)];
        if (noise_count.count(id) == 0) continue;
        nr.act_mse = noise_power[id] / noise_count[id];
        nr.sqnr_db = sqnr_db_from_powers(signal_power[id], noise_power[id]);
    }
    report.output_mse = out_mse / static_cast<double>(n_samples);
    report.output_cosine = out_cos / static_cast<double>(n_samples);
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();

    return CalibrationResult{std::move(qa), std::move(report)};
}

double sqnr_db_from_powers(double signal_power, double noise_power) {
    constexpr double kCapDb = 300.0;
    if (noise_power <= 0.0 || signal_power <= 0.0) return kCapDb;
    const double db = 10.0 * std::log10(signal_power / noise_power);
    return std::min(db, kCapDb);
}

double EvalMetrics::mean_sqnr_db() const {
    if (sqnr_db.empty()) return sqnr_db_from_powers(1.0, 0.0);
    double acc = 0.0;
    for (const auto& [id, v] : sqnr_db) acc += v;
    return acc / static_cast<double>(sqnr_db.size());
}

EvalMetrics evaluate(const GraphModel& model, const WeightBundle& weights,
                     const QuantAssignment& qa,
                     const std::vector<Tensor>& eval_data) {
    model.validate();
    if (eval_data.empty()) {
        throw EmptyCalibrationSet("evaluation needs at least one sample");
    }
    std::unordered_map<std::string, double> signal_power;
    std::unordered_map<std::string, double> noise_power;

    EvalMetrics m;
    m.samples = static_cast<int>(eval_data.size());
    double mse_acc = 0.0;
    double cos_acc = 0.0;
    for (const Tensor& x : eval_data) {
        const auto ref = execute_trace(model, weights, x);
        const auto qt = execute_trace(model, weights, x, &qa);
        for (const auto& [id, nq] : qa.nodes) {
            if (qa.skip.count(id) > 0) continue;
            if (!nq.act_qp.has_value() || nq.act_qp->identity()) continue;
            const Tensor& a = ref.at(id);
            const Tensor& b = qt.at(id);
            for (size_t i = 0; i < a.data.size(); ++i) {
                const double av = a.data[i];
                const double d = av - b.data[i];
                signal_power[id] += av * av;
                noise_power[id] += d * d;
            }
        }
        const std::string& out_id = model.output_node().id;
        mse_acc += tensor_mse(ref.at(out_id), qt.at(out_id));
        cos_acc += tensor_cosine(ref.at(out_id), qt.at(out_id));
    }
    for (const auto& [id, sp] : signal_power) {
        m.sqnr_db[id] = sqnr_db_from_powers(sp, noise_power[id]);
    }
    m.output_mse = mse_acc / static_cast<double>(eval_data.size());
    m.output_cosine = cos_acc / static_cast<double>(eval_data.size());
    return m;
}

}  // namespace qy
