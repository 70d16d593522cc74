// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <unordered_map>

#include "qy/errors.hpp"

namespace qy {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw ShapeMismatch(msg);
}

// Activations are [1, C, H, W].
struct Chw {
    int64_t c, h, w;
};

Chw chw(const Tensor& t, const char* what) {
    if (t.rank() != 4 || t.shape[0] != 1) {
        throw ShapeMismatch(std::string(what) +
                            ": expected [1, C, H, W] activation layout");
    }
    return Chw{t.shape[1], t.shape[2], t.shape[3]};
}

}  // namespace

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::input: return "input";
        case OpKind::output: return "output";
        case OpKind::conv2d: return "conv2d";
        case OpKind::silu: return "silu";
        case OpKind::leaky_relu: return "leaky_relu";
        case OpKind::add: return "add";
        case OpKind::concat: return "concat";
        case OpKind::maxpool: return "maxpool";
        case OpKind::upsample_nearest: return "upsample_nearest";
    }
    return "?";
}

OpKind op_kind_from_name(const std::string& name) {
    static const std::map<std::string, OpKind> table = {
        {"input", OpKind::input},
        {"output", OpKind::output},
        {"conv2d", OpKind::conv2d},
        {"silu", OpKind::silu},
        {"leaky_relu", OpKind::leaky_relu},
        {"add", OpKind::add},
        {"concat", OpKind::concat},
        {"maxpool", OpKind::maxpool},
        {"upsample_nearest", OpKind::upsample_nearest},
    };
    auto it = table.find(name);
    if (it == table.end()) throw InvalidConfig("unknown op kind: " + name);
    return it->second;
}

const NodeSpec* GraphModel::find(const std::string& id) const {
    for (const NodeSpec& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const NodeSpec& GraphModel::input_node() const {
    for (const NodeSpec& n : nodes) {
        if (n.op == OpKind::input) return n;
    }
    throw InvalidConfig("model has no input node");
}

const NodeSpec& GraphModel::output_node() const {
    for (const NodeSpec& n : nodes) {
        if (n.op == OpKind::output) return n;
    }
    throw InvalidConfig("model has no output node");
}

std::vector<size_t> GraphModel::topo_order() const {
    std::unordered_map<std::string, size_t> index;
    for (size_t i = 0; i < nodes.size(); ++i) index[nodes[i].id] = i;

    std::vector<int> indegree(nodes.size(), 0);
    std::vector<std::vector<size_t>> out_edges(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        for (const std::string& in : nodes[i].inputs) {
            auto it = index.find(in);
            if (it == index.end()) {
                throw InvalidConfig("node '" + nodes[i].id +
                                    "' references unknown input '" + in + "'");
            }
            out_edges[it->second].push_back(i);
            ++indegree[i];
        }
    }

    std::deque<size_t> ready;
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (indegree[i] == 0) ready.push_back(i);
    }
    std::vector<size_t> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        const size_t i = ready.front();
        ready.pop_front();
        order.push_back(i);
        for (size_t j : out_edges[i]) {
            if (--indegree[j] == 0) ready.push_back(j);
        }
    }
    if (order.size() != nodes.size()) {
        throw CyclicGraph("compute graph contains a cycle");
    }
    return order;
}

std::map<std::string, std::vector<std::string>> GraphModel::consumers() const {
    std::map<std::string, std::vector<std::string>> out;
    for (const NodeSpec& n : nodes) out[n.id];
    for (const NodeSpec& n : nodes) {
        for (const std::string& in : n.inputs) {
            out[in].push_back(n.id);
        }
    }
    return out;
}

void GraphModel::validate() const {
    std::set<std::string> ids;
    int n_input = 0;
    int n_output = 0;
    for (const NodeSpec& n : nodes) {
        if (!ids.insert(n.id).second) {
            throw InvalidConfig("duplicate node id '" + n.id + "'");
        }
        switch (n.op) {
            case OpKind::input:
                ++n_input;
                if (!n.inputs.empty()) {
                    throw InvalidConfig("input node cannot have inputs");
                }
                if (n.in_channels <= 0 || n.in_h <= 0 || n.in_w <= 0) {
                    throw InvalidConfig("input node needs a declared shape");
                }
                break;
            case OpKind::output:
                ++n_output;
                [[fallthrough]];
            case OpKind::silu:
            case OpKind::leaky_relu:
            case OpKind::maxpool:
            case OpKind::upsample_nearest:
                if (n.inputs.size() != 1) {
                    throw InvalidConfig("node '" + n.id +
                                        "' needs exactly one input");
                }
                break;
            case OpKind::conv2d:
                if (n.inputs.size() != 1 || n.out_channels <= 0 ||
                    n.kernel_h <= 0 || n.kernel_w <= 0 || n.stride < 1 ||
                    n.padding < 0) {
                    throw InvalidConfig("conv node '" + n.id +
                                        "' has invalid attributes");
                }
                break;
            case OpKind::add:
                if (n.inputs.size() != 2) {
                    throw InvalidConfig("add node needs exactly two inputs");
                }
                break;
            case OpKind::concat:
                if (n.inputs.size() < 2 || n.axis != 1) {
                    throw InvalidConfig(
                        "concat needs >= 2 inputs and channel axis 1");
                }
                break;
        }
    }
    if (n_input != 1 || n_output != 1) {
        throw InvalidConfig("model must have exactly one input node and one "
                            "output node");
    }
    topo_order();  // throws on cycles / unknown inputs
}

const NodeQuant* QuantAssignment::find(const std::string& id) const {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
}

Tensor silu(const Tensor& x) {
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.data.size());
    for (size_t i = 0; i < x.data.size(); ++i) {
        const float v = x.data[i];
        out.data[i] = v / (1.0f + std::exp(-v));
    }
    return out;
}

Tensor leaky_relu(const Tensor& x, float slope) {
    Tensor out;
    out.shape = x.shape;
    out.data.resize(x.data.size());
    for (size_t i = 0; i < x.data.size(); ++i) {
        const float v = x.data[i];
        out.data[i] = v >= 0.0f ? v : slope * v;
    }
    return out;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride, int padding) {
    const Chw in = chw(x, "conv2d input");
    if (kernel.rank() != 4) {
        throw ShapeMismatch("conv2d kernel must be [out_ch, in_ch, kh, kw]");
    }
    const int64_t oc = kernel.shape[0];
    const int64_t ic = kernel.shape[1];
    const int64_t kh = kernel.shape[2];
    const int64_t kw = kernel.shape[3];
    require(ic == in.c, "conv2d kernel in-channels disagree with input");
    require(bias.rank() == 1 && bias.shape[0] == oc,
            "conv2d bias must be [out_ch]");
    require(stride >= 1 && padding >= 0, "conv2d needs stride>=1, padding>=0");

    const int64_t oh = (in.h + 2 * padding - kh) / stride + 1;
    const int64_t ow = (in.w + 2 * padding - kw) / stride + 1;
    require(oh >= 1 && ow >= 1, "conv2d kernel larger than padded input");

    // A zero-padded copy keeps the accumulation loops branch-free.
    const int64_t ph = in.h + 2 * padding;
    const int64_t pw = in.w + 2 * padding;
    std::vector<float> padded(static_cast<size_t>(in.c * ph * pw), 0.0f);
    for (int64_t c = 0; c < in.c; ++c) {
        for (int64_t y = 0; y < in.h; ++y) {
            const float* src = x.data.data() + (c * in.h + y) * in.w;
            float* dst = padded.data() +
                         (c * ph + y + padding) * pw + padding;
            std::copy(src, src + in.w, dst);
        }
    }

    Tensor out = Tensor::zeros({1, oc, oh, ow});
    for (int64_t o = 0; o < oc; ++o) {
        float* out_plane = out.data.data() + o * oh * ow;
        const float b = bias.data[static_cast<size_t>(o)];
        for (int64_t i = 0; i < oh * ow; ++i) out_plane[i] = b;
        for (int64_t c = 0; c < ic; ++c) {
            const float* in_plane = padded.data() + c * ph * pw;
            const float* kplane =
                kernel.data.data() + ((o * ic + c) * kh) * kw;
            for (int64_t ky = 0; ky < kh; ++ky) {
                for (int64_t kx = 0; kx < kw; ++kx) {
                    const float kv = kplane[ky * kw + kx];
                    if (kv == 0.0f) continue;
                    for (int64_t oy = 0; oy < oh; ++oy) {
                        const float* row =
                            in_plane + (oy * stride + ky) * pw + kx;
                        float* orow = out_plane + oy * ow;
                        for (int64_t ox = 0; ox < ow; ++ox) {
                            orow[ox] += kv * row[ox * stride];
                        }
                    }
                }
            }
        }
    }
    return out;
}

namespace {

Tensor maxpool(const Tensor& x, int k, int stride) {
    const Chw in = chw(x, "maxpool input");
    require(k >= 1 && stride >= 1, "maxpool needs k>=1, stride>=1");
    const int64_t oh = (in.h - k) / stride + 1;
    const int64_t ow = (in.w - k) / stride + 1;
    require(oh >= 1 && ow >= 1, "maxpool window larger than input");
    Tensor out = Tensor::zeros({1, in.c, oh, ow});
    for (int64_t c = 0; c < in.c; ++c) {
        for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
                float m = -std::numeric_limits<float>::infinity();
                for (int64_t ky = 0; ky < k; ++ky) {
                    for (int64_t kx = 0; kx < k; ++kx) {
                        const int64_t y = oy * stride + ky;
                        const int64_t xx = ox * stride + kx;
                        m = std::max(m, x.data[static_cast<size_t>(
                                            (c * in.h + y) * in.w + xx)]);
                    }
                }
                out.data[static_cast<size_t>((c * oh + oy) * ow + ox)] = m;
            }
        }
    }
    return out;
}

Tensor upsample_nearest(const Tensor& x, int factor) {
    const Chw in = chw(x, "upsample input");
    require(factor >= 1, "upsample factor must be >= 1");
    const int64_t oh = in.h * factor;
    const int64_t ow = in.w * factor;
    Tensor out = Tensor::zeros({1, in.c, oh, ow});
    for (int64_t c = 0; c < in.c; ++c) {
        for (int64_t y = 0; y < oh; ++y) {
            for (int64_t xx = 0; xx < ow; ++xx) {
                out.data[static_cast<size_t>((c * oh + y) * ow + xx)] =
                    x.data[static_cast<size_t>(
                        (c * in.h + y / factor) * in.w + xx / factor)];
            }
        }
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.shape == b.shape, "add inputs must share a shape");
    Tensor out;
    out.shape = a.shape;
    out.data.resize(a.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = a.data[i] + b.data[i];
    }
    return out;
}

Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    const Chw first = chw(*parts[0], "concat input");
    int64_t total_c = 0;
    for (const Tensor* p : parts) {
        const Chw s = chw(*p, "concat input");
        require(s.h == first.h && s.w == first.w,
                "concat inputs must share spatial dims");
        total_c += s.c;
    }
    Tensor out = Tensor::zeros({1, total_c, first.h, first.w});
    int64_t c0 = 0;
    for (const Tensor* p : parts) {
        const Chw s = chw(*p, "concat input");
        std::copy(p->data.begin(), p->data.end(),
                  out.data.begin() +
                      static_cast<size_t>(c0 * first.h * first.w));
        c0 += s.c;
    }
    return out;
}

std::map<std::string, Tensor> run_graph(const GraphModel& model,
                                        const WeightBundle& weights,
                                        const Tensor& input,
                                        const QuantAssignment* qa) {
    model.validate();
    check_finite(input, "execute input");

    std::map<std::string, Tensor> values;
    for (size_t idx : model.topo_order()) {
        const NodeSpec& n = model.nodes[idx];
        const bool skipped = qa != nullptr && qa->skip.count(n.id) > 0;
        const NodeQuant* nq =
            (qa != nullptr && !skipped) ? qa->find(n.id) : nullptr;

        Tensor y;
        switch (n.op) {
            case OpKind::input: {
                const Chw s = chw(input, "execute input");
                if (s.c != n.in_channels || s.h != n.in_h || s.w != n.in_w) {
                    throw ShapeMismatch(
                        "input tensor does not match the input declaration");
                }
                y = input;
                break;
            }
            case OpKind::output:
                y = values.at(n.inputs[0]);
                break;
            case OpKind::conv2d: {
                auto it = weights.entries.find(n.id);
                if (it == weights.entries.end()) {
                    throw MissingWeight("no weights for conv node '" + n.id +
                                        "'");
                }
                const Tensor* kernel = &it->second.kernel;
                Tensor quantized_kernel;
                if (nq != nullptr && nq->weight_qp.has_value() &&
                    !nq->weight_qp->identity()) {
                    quantized_kernel = fake_quantize(*kernel, *nq->weight_qp);
                    kernel = &quantized_kernel;
                }
                if (kernel->shape[0] != n.out_channels ||
                    kernel->shape[2] != n.kernel_h ||
                    kernel->shape[3] != n.kernel_w) {
                    throw ShapeMismatch("conv weights disagree with node '" +
                                        n.id + "' attributes");
                }
                y = conv2d(values.at(n.inputs[0]), *kernel, it->second.bias,
                           n.stride, n.padding);
                break;
            }
            case OpKind::silu:
                y = silu(values.at(n.inputs[0]));
                break;
            case OpKind::leaky_relu:
                y = leaky_relu(values.at(n.inputs[0]), n.slope);
                break;
            case OpKind::add:
                y = add(values.at(n.inputs[0]), values.at(n.inputs[1]));
                break;
            case OpKind::concat: {
                std::vector<const Tensor*> parts;
                parts.reserve(n.inputs.size());
                for (const std::string& in : n.inputs) {
                    parts.push_back(&values.at(in));
                }
                y = concat_channels(parts);
                break;
            }
            case OpKind::maxpool:
                y = maxpool(values.at(n.inputs[0]), n.pool_k, n.pool_stride);
                break;
            case OpKind::upsample_nearest:
                y = upsample_nearest(values.at(n.inputs[0]), n.factor);
                break;
        }

        if (nq != nullptr && nq->act_qp.has_value() &&
            !nq->act_qp->identity()) {
            y = fake_quantize(y, *nq->act_qp);
        }
        values[n.id] = std::move(y);
    }
    return values;
}

}  // namespace

Tensor execute(const GraphModel& model, const WeightBundle& weights,
               const Tensor& input, const QuantAssignment* qa) {
    std::map<std::string, Tensor> values = run_graph(model, weights, input, qa);
    return values.at(model.output_node().id);
}

std::map<std::string, Tensor> execute_trace(const GraphModel& model,
                                            const WeightBundle& weights,
                                            const Tensor& input,
                                            const QuantAssignment* qa) {
    return run_graph(model, weights, input, qa);
}

}  // namespace qy
