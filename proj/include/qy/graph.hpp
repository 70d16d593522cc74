// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qy/quant.hpp"
#include "qy/tensor.hpp"

namespace qy {

enum class OpKind {
    input,
    output,
    conv2d,
    silu,
    leaky_relu,
    add,
    concat,
    maxpool,
    upsample_nearest,
};

const char* op_kind_name(OpKind k);
OpKind op_kind_from_name(const std::string& name);

/// One node of the compute graph. Attribute fields are op-specific; unused
/// ones keep their defaults. Activations use the [1, C, H, W] layout.
struct NodeSpec {
    std::string id;
    OpKind op = OpKind::input;
    std::vector<std::string> inputs;

    int stride = 1;        // conv2d
    int padding = 0;       // conv2d
    int out_channels = 0;  // conv2d
    int kernel_h = 0;      // conv2d
    int kernel_w = 0;      // conv2d
    int axis = 1;          // concat
    int pool_k = 2;        // maxpool
    int pool_stride = 2;   // maxpool
    int factor = 2;        // upsample_nearest
    float slope = 0.1f;    // leaky_relu
    int in_channels = 0;   // input declaration
    int in_h = 0;
    int in_w = 0;
};

struct GraphModel {
    std::vector<NodeSpec> nodes;

    const NodeSpec* find(const std::string& id) const;
    const NodeSpec& input_node() const;
    const NodeSpec& output_node() const;

    /// Kahn topological order over node indices; throws CyclicGraph.
    std::vector<size_t> topo_order() const;

    /// Node id -> ids of nodes consuming its output.
    std::map<std::string, std::vector<std::string>> consumers() const;

    /// Checks id uniqueness, input existence, single input/output node,
    /// acyclicity, and op attribute sanity.
    void validate() const;
};

struct ConvWeights {
    Tensor kernel;  // [out_ch, in_ch, kh, kw]
    Tensor bias;    // [out_ch]
};

struct WeightBundle {
    std::map<std::string, ConvWeights> entries;
};

struct NodeQuant {
    std::optional<QuantParams> weight_qp;
    std::optional<QuantParams> act_qp;
};

/// Which tensors get fake-quantized where. Nodes in `skip` always run in
/// full precision regardless of any entry.
struct QuantAssignment {
    std::map<std::string, NodeQuant> nodes;
    std::set<std::string> skip;

    const NodeQuant* find(const std::string& id) const;
};

Tensor silu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, float slope);

/// Cross-correlation (no kernel flip) with zero padding; output spatial dims
/// are floor((H + 2p - kh)/stride) + 1.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride, int padding);

/// Topological-order reference evaluation. With `qa`, conv kernels pass
/// through fake_quantize(weight_qp) before use and each node's output passes
/// through fake_quantize(act_qp); skip-set nodes and bits=32 sentinels run in
/// full precision.
Tensor execute(const GraphModel& model, const WeightBundle& weights,
               const Tensor& input, const QuantAssignment* qa = nullptr);

/// Same evaluation but returns every node's output (used by calibration and
/// per-layer metrics).
std::map<std::string, Tensor> execute_trace(const GraphModel& model,
                                            const WeightBundle& weights,
                                            const Tensor& input,
                                            const QuantAssignment* qa = nullptr);

}  // namespace qy
