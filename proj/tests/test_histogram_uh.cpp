// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <doctest.h>

#include "qy/errors.hpp"
#include "qy/histogram.hpp"
#include "qy/testkit.hpp"
#include "qy/uh.hpp"

using namespace qy;

namespace {

ActivationHistogram random_histogram(uint64_t seed) {
    std::mt19937_64 rng(seed);
    ActivationHistogram h = make_histogram(-0.2785, 1.0 + (seed % 7));
    const int mode = static_cast<int>(seed % 4);
    const int bins = ActivationHistogram::kBins;
    switch (mode) {
        case 0:  // dense everywhere
            for (int i = 0; i < bins; ++i) h.counts[i] = rng() % 1000;
            break;
        case 1: {  // heavy prefix, sparse tail
            const int edge = 64 + static_cast<int>(rng() % 512);
            for (int i = 0; i < edge; ++i) h.counts[i] = 100 + rng() % 5000;
            for (int i = edge; i < bins; ++i) {
                h.counts[i] = (rng() % 97 == 0) ? 1 + rng() % 4 : 0;
            }
            break;
        }
        case 2:  // degenerate: all mass in a short prefix
            for (int i = 0; i < 100; ++i) h.counts[i] = 1 + rng() % 50;
            break;
        default:  // degenerate: all mass above the search start
            for (int i = 1500; i < bins; ++i) h.counts[i] = rng() % 20;
            h.counts[bins - 1] += 5;
            break;
    }
    h.clamped_low = seed % 3;
    for (uint64_t c : h.counts) h.total += c;
    h.total += h.clamped_low;
    return h;
}

}  // namespace

TEST_CASE("histogram binning edges") {
    ActivationHistogram h = make_histogram(-0.2785, 1.0);
    const float w = static_cast<float>(h.bin_width());

    const float at_lower[] = {-0.2785f};
    h.add(std::span<const float>(at_lower, 1));
    CHECK(h.counts[0] == 1);

    const float near_upper[] = {1.0f - w / 2};
    h.add(std::span<const float>(near_upper, 1));
    CHECK(h.counts[2047] == 1);

    const float below[] = {-5.0f};
    h.add(std::span<const float>(below, 1));
    CHECK(h.clamped_low == 1);
    CHECK(h.counts[0] == 1);  // not folded until finalization
    CHECK(h.finalized().counts[0] == 2);

    const float above[] = {42.0f};
    h.add(std::span<const float>(above, 1));
    CHECK(h.counts[2047] == 2);

    CHECK(h.total == 4);
    h.validate();
}

TEST_CASE("histogram build conserves mass over silu-shaped samples") {
    testkit::SyntheticDistribution d;
    d.kind = testkit::DistKind::silu_gaussian;
    d.count = 10000;
    d.seed = 2;
    std::vector<float> vals = testkit::generate(d);
    float mx = vals[0];
    for (float v : vals) mx = std::max(mx, v);
    const int64_t n_vals = static_cast<int64_t>(vals.size());
    const Tensor t({n_vals}, std::move(vals));
    const ActivationHistogram h =
        build_histogram({t}, ClipRange{-0.2785, static_cast<double>(mx) + 1e-3});
    uint64_t sum = h.clamped_low;
    for (uint64_t c : h.counts) sum += c;
    CHECK(sum == 10000);
    CHECK(h.total == 10000);
}

TEST_CASE("histogram merge matches single-writer accumulation") {
    testkit::SyntheticDistribution d;
    d.kind = testkit::DistKind::gaussian;
    d.count = 5000;
    d.seed = 9;
    const std::vector<float> vals = testkit::generate(d);

    ActivationHistogram whole = make_histogram(-0.2785, 3.0);
    whole.add(std::span<const float>(vals));

    ActivationHistogram a = make_histogram(-0.2785, 3.0);
    ActivationHistogram b = make_histogram(-0.2785, 3.0);
    a.add(std::span<const float>(vals.data(), 2000));
    b.add(std::span<const float>(vals.data() + 2000, 3000));
    a.merge(b);

    CHECK(a.counts == whole.counts);
    CHECK(a.clamped_low == whole.clamped_low);
    CHECK(a.total == whole.total);

    ActivationHistogram other = make_histogram(0.0, 1.0);
    CHECK_THROWS_AS(a.merge(other), InvalidDomain);
}

TEST_CASE("empty histogram is rejected by the search") {
    const ActivationHistogram h = make_histogram(-0.2785, 1.0);
    ObserverConfig cfg;
    CHECK_THROWS_AS(uh_search(h, cfg), DegenerateHistogram);
    CHECK_THROWS_AS(testkit::oracle_uh(h, 128, 128), DegenerateHistogram);
}

TEST_CASE("all mass in the first 128 bins gives a zero-error prefix") {
    std::mt19937_64 rng(21);
    ActivationHistogram h = make_histogram(-0.2785, 1.0);
    for (int i = 0; i < 128; ++i) {
        h.counts[i] = 1 + rng() % 100;
        h.total += h.counts[i];
    }
    ObserverConfig cfg;
    const UhSearchTrace trace = uh_search(h, cfg);
    CHECK(trace.best_index == 128);  // ties break toward smaller i
    CHECK(trace.mse_at(128) == 0.0);
    CHECK(trace.best_upper ==
          h.domain_lower + 128.0 * h.bin_width());
    CHECK(testkit::oracle_uh(h, 128, 128) == 128);
}

TEST_CASE("uniform histogram agrees with the oracle") {
    ActivationHistogram h = make_histogram(-0.2785, 4.0);
    for (auto& c : h.counts) c = 10;
    h.total = 10 * 2048;
    ObserverConfig cfg;
    const UhSearchTrace trace = uh_search(h, cfg);
    CHECK(trace.best_index == testkit::oracle_uh(h, 128, 128));
}

TEST_CASE("silu-shaped histogram truncates below the domain maximum") {
    // Heavy mass near the lower bound, thin long tail: the shape from the
    // activation study the method is built around.
    testkit::SyntheticDistribution bulk;
    bulk.kind = testkit::DistKind::silu_gaussian;
    bulk.sigma = 0.5;
    bulk.count = 50000;
    bulk.seed = 4;
    std::vector<float> vals = testkit::generate(bulk);
    std::mt19937_64 rng(40);
    for (int i = 0; i < 120; ++i) {
        // sparse tail out to ~20x the bulk edge
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        vals.push_back(static_cast<float>(2.0 * std::exp(u * std::log(10.0))));
    }
    float mx = vals[0];
    for (float v : vals) mx = std::max(mx, v);
    const int64_t n_vals = static_cast<int64_t>(vals.size());
    const Tensor t({n_vals}, std::move(vals));
    const ActivationHistogram h =
        build_histogram({t}, ClipRange{-0.2785, static_cast<double>(mx)});
    ObserverConfig cfg;
    const UhSearchTrace trace = uh_search(h, cfg);
    CHECK(trace.best_index < 2047);
    CHECK(trace.best_upper < h.domain_upper);
    CHECK(trace.best_index == testkit::oracle_uh(h, 128, 128));
}

TEST_CASE("search equals the oracle on random mixed histograms") {
    for (uint64_t seed = 0; seed < 24; ++seed) {
        const ActivationHistogram h = random_histogram(seed);
        ObserverConfig cfg;
        const UhSearchTrace trace = uh_search(h, cfg);
        CHECK(trace.best_index == testkit::oracle_uh(h, cfg.uh_levels,
                                                     cfg.uh_start_index));
    }
}

TEST_CASE("identical histograms yield bit-identical traces") {
    const ActivationHistogram h = random_histogram(12);
    ObserverConfig cfg;
    const UhSearchTrace a = uh_search(h, cfg);
    const UhSearchTrace b = uh_search(h, cfg);
    CHECK(a.best_index == b.best_index);
    CHECK(a.best_upper == b.best_upper);
    CHECK(a.mse_by_index == b.mse_by_index);
}

TEST_CASE("merge and expand conserve prefix mass") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int i = 128 + static_cast<int>(rng() % 1920);
        std::vector<uint64_t> prefix(static_cast<size_t>(i));
        uint64_t mass = 0;
        for (auto& c : prefix) {
            c = (rng() % 3 == 0) ? 0 : rng() % 1000;
            mass += c;
        }
        const std::vector<uint64_t> merged =
            uh_merge(std::span<const uint64_t>(prefix), 128);
        uint64_t merged_mass = 0;
        for (uint64_t g : merged) merged_mass += g;
        CHECK(merged_mass == mass);  // exact, integer arithmetic

        const std::vector<double> expanded =
            uh_expand(std::span<const uint64_t>(prefix), merged, 128);
        double exp_mass = 0.0;
        for (double v : expanded) exp_mass += v;
        CHECK(exp_mass ==
              doctest::Approx(static_cast<double>(mass)).epsilon(1e-12));
        // Zero bins stay zero: the expansion preserves the support.
        for (size_t k = 0; k < prefix.size(); ++k) {
            if (prefix[k] == 0) CHECK(expanded[k] == 0.0);
        }
    }
}

TEST_CASE("normalized P and Q sum to one for occupied histograms") {
    const ActivationHistogram h = random_histogram(1).finalized();
    const int i = 700;
    std::span<const uint64_t> prefix(h.counts.data(), i);
    uint64_t c = 0;
    for (int j = i; j < 2048; ++j) c += h.counts[j];
    double p_sum = 0.0;
    for (int j = 0; j < i; ++j) p_sum += static_cast<double>(h.counts[j]);
    p_sum += static_cast<double>(c);
    double p_norm = 0.0;
    for (int j = 0; j < i; ++j) {
        double pj = static_cast<double>(h.counts[j]);
        if (j == i - 1) pj += static_cast<double>(c);
        p_norm += pj / p_sum;
    }
    CHECK(p_norm == doctest::Approx(1.0).epsilon(1e-9));

    const auto merged = uh_merge(prefix, 128);
    const auto expanded = uh_expand(prefix, merged, 128);
    double q_sum = 0.0;
    for (double v : expanded) q_sum += v;
    if (q_sum > 0.0) {
        double q_norm = 0.0;
        for (double v : expanded) q_norm += v / q_sum;
        CHECK(q_norm == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("observe_uh pins the lower bound and respects the domain") {
    ObserverConfig cfg;

    testkit::SyntheticDistribution d;
    d.kind = testkit::DistKind::uniform;
    d.mu = 0.5;
    d.sigma = 0.5;  // values in [0, 1]
    d.count = 4000;
    d.seed = 8;
    std::vector<float> vals = testkit::generate(d);
    const int64_t n_vals = static_cast<int64_t>(vals.size());
    const Tensor t({n_vals}, std::move(vals));
    const ClipRange r = observe_uh({t}, cfg, 1.0);
    CHECK(r.lower == -0.2785);

    testkit::SyntheticDistribution sg;
    sg.kind = testkit::DistKind::silu_gaussian;
    sg.count = 6000;
    sg.seed = 12;
    std::vector<float> sv = testkit::generate(sg);
    float mx = sv[0];
    for (float v : sv) mx = std::max(mx, v);
    const int64_t n_sv = static_cast<int64_t>(sv.size());
    const Tensor st({n_sv}, std::move(sv));
    const ClipRange sr = observe_uh({st}, cfg, static_cast<double>(mx));
    CHECK(sr.upper <= static_cast<double>(mx));

    // Fixed-seed stream equals the range the oracle index implies.
    const ActivationHistogram h = build_histogram(
        {st}, ClipRange{cfg.uh_fixed_lower, static_cast<double>(mx)});
    const int oracle_m = testkit::oracle_uh(h, cfg.uh_levels,
                                            cfg.uh_start_index);
    CHECK(sr.upper ==
          cfg.uh_fixed_lower + static_cast<double>(oracle_m) * h.bin_width());

    CHECK_THROWS_AS(observe_uh({st}, cfg, -1.0), InvalidDomain);
}
