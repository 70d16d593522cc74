// Copyright (c) 2026 the qy authors
// SPDX-License-Identifier: Apache-2.0
#include "qy/testkit.hpp"

#include <cmath>
#include <limits>

#include "qy/errors.hpp"

namespace qy::testkit {

int oracle_uh(const ActivationHistogram& hist, int levels, int start_index) {
    if (hist.total == 0) {
        throw DegenerateHistogram("oracle: histogram holds no observations");
    }
    const int bins = ActivationHistogram::kBins;
    std::vector<uint64_t> H(hist.counts);
    H[0] += hist.clamped_low;  // finalization rule

    int best_index = -1;
    double best_mse = std::numeric_limits<double>::infinity();
    for (int i = start_index; i < bins; ++i) {
        // Reference distribution P <- H[0:i]
        std::vector<double> P(static_cast<size_t>(i));
        for (int j = 0; j < i; ++j) {
            P[static_cast<size_t>(j)] =
                static_cast<double>(H[static_cast<size_t>(j)]);
        }
        // Outliers count c <- sum_{j=i}^{2047} H[j]
        double c = 0.0;
        for (int j = i; j < bins; ++j) {
            c += static_cast<double>(H[static_cast<size_t>(j)]);
        }
        P[static_cast<size_t>(i - 1)] += c;
        double p_sum = 0.0;
        for (int j = 0; j < i; ++j) p_sum += P[static_cast<size_t>(j)];

        double mse;
        if (p_sum == 0.0) {
            mse = std::numeric_limits<double>::infinity();
        } else {
            for (int j = 0; j < i; ++j) P[static_cast<size_t>(j)] /= p_sum;

            // Candidate distribution C <- quantize H[0:i] into `levels`
            // groups, group j covering [floor(j*i/L), floor((j+1)*i/L)).
            std::vector<double> C(static_cast<size_t>(levels), 0.0);
            for (int j = 0; j < levels; ++j) {
                const int a = static_cast<int>(
                    static_cast<int64_t>(j) * i / levels);
                const int b = static_cast<int>(
                    static_cast<int64_t>(j + 1) * i / levels);
                for (int k = a; k < b; ++k) {
                    C[static_cast<size_t>(j)] +=
                        static_cast<double>(H[static_cast<size_t>(k)]);
                }
            }

            // Expand C to have i bins: equal shares over the originally
            // nonzero member bins; all-zero groups stay zero.
            std::vector<double> Q(static_cast<size_t>(i), 0.0);
            for (int j = 0; j < levels; ++j) {
                const int a = static_cast<int>(
                    static_cast<int64_t>(j) * i / levels);
                const int b = static_cast<int>(
                    static_cast<int64_t>(j + 1) * i / levels);
                int nonzero = 0;
                for (int k = a; k < b; ++k) {
                    if (H[static_cast<size_t>(k)] != 0) ++nonzero;
                }
                if (nonzero == 0) continue;
                const double share =
                    C[static_cast<size_t>(j)] / static_cast<double>(nonzero);
                for (int k = a; k < b; ++k) {
                    if (H[static_cast<size_t>(k)] != 0) {
                        Q[static_cast<size_t>(k)] = share;
                    }
                }
            }
            double q_sum = 0.0;
            for (int j = 0; j < i; ++j) q_sum += Q[static_cast<size_t>(j)];
            if (q_sum > 0.0) {
                for (int j = 0; j < i; ++j) {
                    Q[static_cast<size_t>(j)] /= q_sum;
                }
            }

            double acc = 0.0;
            for (int j = 0; j < i; ++j) {
                const double d =
                    P[static_cast<size_t>(j)] - Q[static_cast<size_t>(j)];
                acc += d * d;
            }
            mse = acc / static_cast<double>(i);
        }
        if (mse < best_mse) {
            best_mse = mse;
            best_index = i;
        }
    }
    return best_index;
}

ClipRange oracle_best_range(const Tensor& x, int bits, bool is_signed,
                            bool symmetric,
                            const std::vector<ClipRange>& candidates) {
    ClipRange best = candidates.at(0);
    double best_mse = -1.0;
    // Later candidates win ties, matching the larger-alpha preference when
    // the list is ordered by growing alpha.
    for (const ClipRange& cand : candidates) {
        const QuantParams qp = make_qparams(cand, bits, is_signed, symmetric);
        const double s = qp.scales[0];
        const int32_t zp = qp.zero_points[0];
        const int32_t cmin = qp.code_min();
        const int32_t cmax = qp.code_max();
        double acc = 0.0;
        for (float v : x.data) {
            const double d =
                v - fake_quantize_scalar(v, s, zp, cmin, cmax);
            acc += d * d;
        }
        const double mse = acc / static_cast<double>(x.data.size());
        if (best_mse < 0.0 || mse <= best_mse) {
            best_mse = mse;
            best = cand;
        }
    }
    return best;
}

Tensor oracle_conv(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                   int stride, int padding) {
    if (x.rank() != 4 || kernel.rank() != 4 || bias.rank() != 1 ||
        x.shape[0] != 1 || kernel.shape[1] != x.shape[1] ||
        bias.shape[0] != kernel.shape[0]) {
        throw ShapeMismatch("oracle_conv: inconsistent shapes");
    }
    const int64_t ic = x.shape[1];
    const int64_t ih = x.shape[2];
    const int64_t iw = x.shape[3];
    const int64_t oc = kernel.shape[0];
    const int64_t kh = kernel.shape[2];
    const int64_t kw = kernel.shape[3];
    const int64_t oh = (ih + 2 * padding - kh) / stride + 1;
    const int64_t ow = (iw + 2 * padding - kw) / stride + 1;
    if (oh < 1 || ow < 1) {
        throw ShapeMismatch("oracle_conv: kernel larger than padded input");
    }

    Tensor out = Tensor::zeros({1, oc, oh, ow});
    for (int64_t o = 0; o < oc; ++o) {
        for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
                double acc = bias.data[static_cast<size_t>(o)];
                for (int64_t c = 0; c < ic; ++c) {
                    for (int64_t ky = 0; ky < kh; ++ky) {
                        for (int64_t kx = 0; kx < kw; ++kx) {
                            const int64_t y = oy * stride + ky - padding;
                            const int64_t xx = ox * stride + kx - padding;
                            if (y < 0 || y >= ih || xx < 0 || xx >= iw) {
                                continue;  // zero padding
                            }
                            const double xv = x.data[static_cast<size_t>(
                                (c * ih + y) * iw + xx)];
                            const double kv = kernel.data[static_cast<size_t>(
                                ((o * ic + c) * kh + ky) * kw + kx)];
                            acc += kv * xv;
                        }
                    }
                }
                out.data[static_cast<size_t>((o * oh + oy) * ow + ox)] =
                    static_cast<float>(acc);
            }
        }
    }
    return out;
}

namespace {

// splitmix64; deliberately a different generator family from the toy model's.
struct SplitMix {
    uint64_t state;
    explicit SplitMix(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

}  // namespace

std::vector<float> generate(const SyntheticDistribution& dist) {
    SplitMix rng(dist.seed * 0x2545f4914f6cdd1dull + 1);
    std::vector<float> out;
    out.reserve(static_cast<size_t>(dist.count));
    for (int i = 0; i < dist.count; ++i) {
        double v = 0.0;
        switch (dist.kind) {
            case DistKind::gaussian:
                v = dist.mu + dist.sigma * rng.normal();
                break;
            case DistKind::uniform:
                v = dist.mu + dist.sigma * (2.0 * rng.uniform() - 1.0);
                break;
            case DistKind::silu_gaussian: {
                const double z = dist.mu + dist.sigma * rng.normal();
                v = z / (1.0 + std::exp(-z));
                break;
            }
            case DistKind::long_tail: {
                // Student-t via a normal over the root of a scaled chi-square.
                double chi = 0.0;
                for (int k = 0; k < dist.degrees_of_freedom; ++k) {
                    const double z = rng.normal();
                    chi += z * z;
                }
                v = dist.mu +
                    dist.sigma *
                        (rng.normal() /
                         std::sqrt(chi /
                                   static_cast<double>(
                                       dist.degrees_of_freedom)));
                break;
            }
        }
        out.push_back(static_cast<float>(v));
    }
    return out;
}

}  // namespace qy::testkit
