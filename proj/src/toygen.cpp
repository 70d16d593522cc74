// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/toygen.hpp"

#include <cmath>
#include <random>

namespace qy {

namespace {

// mt19937_64 has a standard-specified bit stream; the Gaussian transform is
// spelled out here so generated files do not depend on the C++ library's
// distribution internals.
class SeededGaussian {
public:
    explicit SeededGaussian(uint64_t seed) : rng_(seed) {}

    double uniform() {
        // 53 random bits -> [0, 1)
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    uint64_t bits() { return rng_(); }

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct ConvShape {
    const char* id;
    int out_ch, in_ch, kh, kw, stride, padding;
};

constexpr ConvShape kConvs[] = {
    {"conv0", 8, 3, 3, 3, 1, 1},   {"conv1", 16, 8, 3, 3, 2, 1},
    {"conv2", 16, 16, 3, 3, 1, 1}, {"conv3", 32, 16, 3, 3, 2, 1},
    {"conv4", 32, 32, 3, 3, 1, 1}, {"conv5", 16, 48, 3, 3, 1, 1},
    {"conv6", 8, 16, 1, 1, 1, 0},
};

// Response channels on conv5: a single large center tap plus a cancelling
// negative bias makes the channel fire rarely and linearly above the
// threshold, which is where the long one-sided activation tails come from.
constexpr int kGateChannels = 2;
constexpr double kGateGain = 20.0;
constexpr double kGateThreshold = 4.75;
constexpr double kHeadGateDamp = 0.1;
constexpr double kBiasMean = 0.4;
constexpr double kBiasStd = 0.2;

NodeSpec conv_node(const ConvShape& s, const std::string& input) {
    NodeSpec n;
    n.id = s.id;
    n.op = OpKind::conv2d;
    n.inputs = {input};
    n.stride = s.stride;
    n.padding = s.padding;
    n.out_channels = s.out_ch;
    n.kernel_h = s.kh;
    n.kernel_w = s.kw;
    return n;
}

NodeSpec unary_node(OpKind op, const std::string& id,
                    const std::string& input) {
    NodeSpec n;
    n.id = id;
    n.op = op;
    n.inputs = {input};
    return n;
}

}  // namespace

ToyModel make_toy_model(uint64_t seed) {
    ToyModel toy;
    GraphModel& g = toy.model;

    NodeSpec in;
    in.id = "in";
    in.op = OpKind::input;
    in.in_channels = kToyChannels;
    in.in_h = kToyHeight;
    in.in_w = kToyWidth;
    g.nodes.push_back(in);

    g.nodes.push_back(conv_node(kConvs[0], "in"));
    g.nodes.push_back(unary_node(OpKind::silu, "silu0", "conv0"));
    g.nodes.push_back(conv_node(kConvs[1], "silu0"));
    g.nodes.push_back(unary_node(OpKind::silu, "silu1", "conv1"));
    g.nodes.push_back(conv_node(kConvs[2], "silu1"));
    g.nodes.push_back(unary_node(OpKind::silu, "silu2", "conv2"));

    NodeSpec add0;
    add0.id = "add0";
    add0.op = OpKind::add;
    add0.inputs = {"silu1", "silu2"};
    g.nodes.push_back(add0);

    g.nodes.push_back(conv_node(kConvs[3], "add0"));
    g.nodes.push_back(unary_node(OpKind::silu, "silu3", "conv3"));
    g.nodes.push_back(conv_node(kConvs[4], "silu3"));
    g.nodes.push_back(unary_node(OpKind::silu, "silu4", "conv4"));

    NodeSpec up0 = unary_node(OpKind::upsample_nearest, "up0", "silu4");
    up0.factor = 2;
    g.nodes.push_back(up0);

    NodeSpec cat0;
    cat0.id = "cat0";
    cat0.op = OpKind::concat;
    cat0.inputs = {"up0", "add0"};
    cat0.axis = 1;
    g.nodes.push_back(cat0);

    g.nodes.push_back(conv_node(kConvs[5], "cat0"));
    g.nodes.push_back(unary_node(OpKind::silu, "silu5", "conv5"));

    NodeSpec pool0 = unary_node(OpKind::maxpool, "pool0", "silu5");
    pool0.pool_k = 2;
    pool0.pool_stride = 2;
    g.nodes.push_back(pool0);

    g.nodes.push_back(conv_node(kConvs[6], "pool0"));
    g.nodes.push_back(unary_node(OpKind::output, "out", "conv6"));

    g.validate();

    SeededGaussian rng(seed);
    for (const ConvShape& s : kConvs) {
        const int64_t fan_in =
            static_cast<int64_t>(s.in_ch) * s.kh * s.kw;
        const double std_w = std::sqrt(2.0 / static_cast<double>(fan_in));
        Tensor kernel = Tensor::zeros({s.out_ch, s.in_ch, s.kh, s.kw});
        for (float& v : kernel.data) {
            v = static_cast<float>(rng.normal() * std_w);
        }
        Tensor bias = Tensor::zeros({s.out_ch});
        for (float& v : bias.data) {
            v = static_cast<float>(kBiasMean + rng.normal() * kBiasStd);
        }

        if (std::string(s.id) == "conv5") {
            const int64_t plane = static_cast<int64_t>(s.in_ch) * s.kh * s.kw;
            for (int gch = 0; gch < kGateChannels; ++gch) {
                const int64_t oc = s.out_ch - 1 - gch;
                for (int64_t i = 0; i < plane; ++i) {
                    kernel.data[static_cast<size_t>(oc * plane + i)] = 0.0f;
                }
                const int64_t ic =
                    static_cast<int64_t>(rng.bits() % kConvs[5].in_ch);
                const int64_t tap =
                    ((oc * s.in_ch + ic) * s.kh + s.kh / 2) * s.kw + s.kw / 2;
                kernel.data[static_cast<size_t>(tap)] =
                    static_cast<float>(kGateGain);
                bias.data[static_cast<size_t>(oc)] =
                    static_cast<float>(-kGateGain * kGateThreshold);
            }
        }
        if (std::string(s.id) == "conv6") {
            // The head reads the response channels at low gain.
            const int64_t plane = static_cast<int64_t>(s.in_ch) * s.kh * s.kw;
            for (int64_t o = 0; o < s.out_ch; ++o) {
                for (int gch = 0; gch < kGateChannels; ++gch) {
                    const int64_t ic = kConvs[5].out_ch - 1 - gch;
                    const int64_t idx = o * plane + ic;  // 1x1 kernel
                    kernel.data[static_cast<size_t>(idx)] *=
                        static_cast<float>(kHeadGateDamp);
                }
            }
        }
        toy.weights.entries[s.id] = ConvWeights{std::move(kernel),
                                                std::move(bias)};
    }
    return toy;
}

std::vector<Tensor> make_gaussian_tensors(uint64_t seed, int count, int c,
                                          int h, int w) {
    std::vector<Tensor> out;
    out.reserve(static_cast<size_t>(count));
    SeededGaussian rng(seed);
    for (int i = 0; i < count; ++i) {
        Tensor t = Tensor::zeros({1, c, h, w});
        for (float& v : t.data) v = static_cast<float>(rng.normal());
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace qy
