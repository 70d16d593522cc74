// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "qy/errors.hpp"
#include "qy/graph.hpp"
#include "qy/testkit.hpp"
#include "qy/toygen.hpp"

using namespace qy;

namespace {

GraphModel tiny_conv_model(int channels, int h, int w, int out_ch, int k,
                           int stride, int padding) {
    GraphModel g;
    NodeSpec in;
    in.id = "in";
    in.op = OpKind::input;
    in.in_channels = channels;
    in.in_h = h;
    in.in_w = w;
    g.nodes.push_back(in);
    NodeSpec conv;
    conv.id = "c";
    conv.op = OpKind::conv2d;
    conv.inputs = {"in"};
    conv.out_channels = out_ch;
    conv.kernel_h = k;
    conv.kernel_w = k;
    conv.stride = stride;
    conv.padding = padding;
    g.nodes.push_back(conv);
    NodeSpec out;
    out.id = "out";
    out.op = OpKind::output;
    out.inputs = {"c"};
    g.nodes.push_back(out);
    return g;
}

Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed,
                     float scale = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(-1.0f, 1.0f);
    Tensor t = Tensor::zeros(std::move(shape));
    for (float& v : t.data) v = unit(rng) * scale;
    return t;
}

}  // namespace

TEST_CASE("identity 1x1 conv reproduces its input") {
    const GraphModel g = tiny_conv_model(1, 4, 4, 1, 1, 1, 0);
    WeightBundle w;
    w.entries["c"] = ConvWeights{Tensor({1, 1, 1, 1}, {1.0f}),
                                 Tensor({1}, {0.0f})};
    const Tensor x = random_tensor({1, 1, 4, 4}, 3);
    const Tensor y = execute(g, w, x);
    CHECK(y.data == x.data);
}

TEST_CASE("1x1 conv with weight 2 doubles every element") {
    const Tensor x({1, 1, 2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
    const Tensor y = conv2d(x, Tensor({1, 1, 1, 1}, {2.0f}),
                            Tensor({1}, {0.0f}), 1, 0);
    CHECK(y.data == std::vector<float>{2.0f, 4.0f, 6.0f, 8.0f});
}

TEST_CASE("3x3 ones kernel over constant ones sums to nine") {
    Tensor x = Tensor::zeros({1, 1, 5, 5});
    for (float& v : x.data) v = 1.0f;
    Tensor k = Tensor::zeros({1, 1, 3, 3});
    for (float& v : k.data) v = 1.0f;
    const Tensor y = conv2d(x, k, Tensor({1}, {0.0f}), 1, 0);
    CHECK(y.shape == std::vector<int64_t>{1, 1, 3, 3});
    for (float v : y.data) CHECK(v == 9.0f);
}

TEST_CASE("conv2d matches the naive oracle on random instances") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int ic = 1 + static_cast<int>(rng() % 4);
        const int oc = 1 + static_cast<int>(rng() % 4);
        const int k = 1 + 2 * static_cast<int>(rng() % 2);  // 1 or 3
        const int stride = 1 + static_cast<int>(rng() % 2);
        const int padding = static_cast<int>(rng() % 2);
        const int h = k + 2 + static_cast<int>(rng() % 6);
        const int w = k + 2 + static_cast<int>(rng() % 6);
        const Tensor x = random_tensor({1, ic, h, w}, 1000 + trial);
        const Tensor kernel =
            random_tensor({oc, ic, k, k}, 2000 + trial);
        const Tensor bias = random_tensor({oc}, 3000 + trial, 0.1f);
        const Tensor a = conv2d(x, kernel, bias, stride, padding);
        const Tensor b = testkit::oracle_conv(x, kernel, bias, stride,
                                              padding);
        REQUIRE(a.shape == b.shape);
        double scale = 1.0;
        for (float v : b.data) {
            scale = std::max(scale, std::fabs(static_cast<double>(v)));
        }
        for (size_t i = 0; i < a.data.size(); ++i) {
            CHECK(std::fabs(a.data[i] - b.data[i]) / scale < 1e-5);
        }
    }
}

TEST_CASE("silu values") {
    CHECK(silu(Tensor({1}, {0.0f})).data[0] == 0.0f);
    const float big = silu(Tensor({1}, {30.0f})).data[0];
    CHECK(big == doctest::Approx(30.0f).epsilon(1e-6));
    const float near_min = silu(Tensor({1}, {-1.2785f})).data[0];
    CHECK(near_min == doctest::Approx(-0.27846).epsilon(1e-3));
}

TEST_CASE("leaky_relu, maxpool, upsample, concat, add fixtures") {
    const Tensor x({1, 1, 2, 2}, {-4.0f, 2.0f, 0.0f, -1.0f});
    const Tensor lr = leaky_relu(x, 0.1f);
    CHECK(lr.data == std::vector<float>{-0.4f, 2.0f, 0.0f, -0.1f});

    GraphModel g;
    NodeSpec in;
    in.id = "in";
    in.op = OpKind::input;
    in.in_channels = 1;
    in.in_h = 4;
    in.in_w = 4;
    g.nodes.push_back(in);
    NodeSpec pool;
    pool.id = "p";
    pool.op = OpKind::maxpool;
    pool.inputs = {"in"};
    pool.pool_k = 2;
    pool.pool_stride = 2;
    g.nodes.push_back(pool);
    NodeSpec up;
    up.id = "u";
    up.op = OpKind::upsample_nearest;
    up.inputs = {"p"};
    up.factor = 2;
    g.nodes.push_back(up);
    NodeSpec cat;
    cat.id = "cat";
    cat.op = OpKind::concat;
    cat.inputs = {"u", "in"};
    cat.axis = 1;
    g.nodes.push_back(cat);
    NodeSpec out;
    out.id = "out";
    out.op = OpKind::output;
    out.inputs = {"cat"};
    g.nodes.push_back(out);

    Tensor ramp = Tensor::zeros({1, 1, 4, 4});
    for (int i = 0; i < 16; ++i) ramp.data[static_cast<size_t>(i)] = i;
    const WeightBundle none;
    const Tensor y = execute(g, none, ramp);
    CHECK(y.shape == std::vector<int64_t>{1, 2, 4, 4});
    // channel 0: upsampled 2x2 maxima {5,7,13,15}
    CHECK(y.data[0] == 5.0f);
    CHECK(y.data[1] == 5.0f);
    CHECK(y.data[2] == 7.0f);
    CHECK(y.data[15] == 15.0f);
    // channel 1: the original ramp
    CHECK(y.data[16] == 0.0f);
    CHECK(y.data[31] == 15.0f);

    const Tensor s = random_tensor({1, 2, 3, 3}, 5);
    Tensor doubled;
    doubled.shape = s.shape;
    for (float v : s.data) doubled.data.push_back(v + v);
    // add via a two-input graph
    GraphModel ga;
    NodeSpec in2;
    in2.id = "in";
    in2.op = OpKind::input;
    in2.in_channels = 2;
    in2.in_h = 3;
    in2.in_w = 3;
    ga.nodes.push_back(in2);
    NodeSpec add0;
    add0.id = "a";
    add0.op = OpKind::add;
    add0.inputs = {"in", "in"};
    ga.nodes.push_back(add0);
    NodeSpec out2;
    out2.id = "out";
    out2.op = OpKind::output;
    out2.inputs = {"a"};
    ga.nodes.push_back(out2);
    CHECK(execute(ga, none, s).data == doubled.data);
}

TEST_CASE("executor determinism and sentinel equivalence on the toy model") {
    const ToyModel toy = make_toy_model(42);
    const Tensor x = make_gaussian_tensors(7, 1, kToyChannels, kToyHeight,
                                           kToyWidth)[0];
    const Tensor a = execute(toy.model, toy.weights, x);
    const Tensor b = execute(toy.model, toy.weights, x);
    CHECK(a.data == b.data);

    // All-sentinel assignment runs bit-identically to no assignment.
    QuantAssignment qa;
    for (const NodeSpec& n : toy.model.nodes) {
        if (n.op == OpKind::conv2d) {
            qa.nodes[n.id].weight_qp = QuantParams::identity_sentinel();
        }
        if (n.op != OpKind::input && n.op != OpKind::output) {
            qa.nodes[n.id].act_qp = QuantParams::identity_sentinel();
        }
    }
    const Tensor c = execute(toy.model, toy.weights, x, &qa);
    CHECK(c.data == a.data);
}

TEST_CASE("graph validation catches structural errors") {
    GraphModel g = tiny_conv_model(1, 4, 4, 1, 1, 1, 0);
    // cycle
    g.nodes[1].inputs = {"out"};
    CHECK_THROWS_AS(g.validate(), CyclicGraph);
    g.nodes[1].inputs = {"nope"};
    CHECK_THROWS_AS(g.validate(), InvalidConfig);

    const GraphModel good = tiny_conv_model(1, 4, 4, 1, 1, 1, 0);
    const WeightBundle empty;
    const Tensor x = random_tensor({1, 1, 4, 4}, 1);
    CHECK_THROWS_AS(execute(good, empty, x), MissingWeight);

    WeightBundle w;
    w.entries["c"] = ConvWeights{Tensor({1, 1, 1, 1}, {1.0f}),
                                 Tensor({1}, {0.0f})};
    const Tensor bad_shape = random_tensor({1, 2, 4, 4}, 2);
    CHECK_THROWS_AS(execute(good, w, bad_shape), ShapeMismatch);

    Tensor nan_input = random_tensor({1, 1, 4, 4}, 3);
    nan_input.data[5] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(execute(good, w, nan_input), NonFiniteValue);
}

TEST_CASE("toy model passes validation and has the advertised structure") {
    const ToyModel toy = make_toy_model(42);
    toy.model.validate();
    int convs = 0, silus = 0, cats = 0, ups = 0, adds = 0, pools = 0;
    for (const NodeSpec& n : toy.model.nodes) {
        switch (n.op) {
            case OpKind::conv2d: ++convs; break;
            case OpKind::silu: ++silus; break;
            case OpKind::concat: ++cats; break;
            case OpKind::upsample_nearest: ++ups; break;
            case OpKind::add: ++adds; break;
            case OpKind::maxpool: ++pools; break;
            default: break;
        }
    }
    CHECK(convs >= 6);
    CHECK(silus >= 6);
    CHECK(cats == 1);
    CHECK(ups == 1);
    CHECK(adds == 1);
    CHECK(pools == 1);

    // Same seed, same bytes.
    const ToyModel again = make_toy_model(42);
    for (const auto& [id, wts] : toy.weights.entries) {
        CHECK(again.weights.entries.at(id).kernel.data == wts.kernel.data);
        CHECK(again.weights.entries.at(id).bias.data == wts.bias.data);
    }
}
