#pragma once

#include <algorithm>

#include "irforge/exchange/tensor.hpp"
#include "irforge/exchange/weights.hpp"

namespace irforge::exchange {

template <typename T>
T sigmoid(T v) {
    return T(1) / (T(1) + std::exp(-v));
}

// Forward intermediates kept for the backward pass.
template <typename T>
struct AttentionTapeT {
    std::vector<T> avg;      // H*W channel-mean descriptor
    std::vector<T> mx;       // H*W channel-max descriptor
    std::vector<int> argmax; // H*W winning channel of mx
    std::vector<T> gate;     // H*W spatial gate after sigmoid
    std::vector<T> local;    // C*H*W depthwise conv output
    std::vector<T> m;        // C attention logits
};
using AttentionTape = AttentionTapeT<double>;

// Channel attention: spatial descriptors -> 7x7 gate conv -> sigmoid,
// depthwise 5x5 local features, elementwise fusion with the input,
// global average pool, outer sigmoid. Returns per-channel logits in
// (0, 1).
template <typename T>
std::vector<T> channel_attention(const Tensor3<T>& x, const AttentionParamsT<T>& p,
                                 AttentionTapeT<T>* tape = nullptr) {
    if (p.channels != x.channels) throw ParamError("attention params do not match C");
    require_finite(x, "channel_attention");
    const int C = x.channels, H = x.height, W = x.width;
    const size_t plane = static_cast<size_t>(H) * W;

    std::vector<T> avg(plane, T(0)), mx(plane);
    std::vector<int> argmax(plane, 0);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            size_t i = static_cast<size_t>(y) * W + xx;
            T sum = T(0), best = x.at(0, y, xx);
            int best_c = 0;
            for (int c = 0; c < C; ++c) {
                T v = x.at(c, y, xx);
                sum += v;
                if (v > best) {
                    best = v;
                    best_c = c;
                }
            }
            avg[i] = sum / T(C);
            mx[i] = best;
            argmax[i] = best_c;
        }

    constexpr int kg = kGateKernelSize, hg = kGateKernelSize / 2;
    std::vector<T> gate(plane);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            T acc = p.gate_bias;
            for (int ky = 0; ky < kg; ++ky) {
                int sy = y + ky - hg;
                if (sy < 0 || sy >= H) continue;
                for (int kx = 0; kx < kg; ++kx) {
                    int sx = xx + kx - hg;
                    if (sx < 0 || sx >= W) continue;
                    size_t si = static_cast<size_t>(sy) * W + sx;
                    acc += avg[si] * p.gate_kernel[(0 * kg + ky) * kg + kx];
                    acc += mx[si] * p.gate_kernel[(1 * kg + ky) * kg + kx];
                }
            }
            gate[static_cast<size_t>(y) * W + xx] = sigmoid(acc);
        }

    constexpr int kl = kLocalKernelSize, hl = kLocalKernelSize / 2;
    std::vector<T> local(x.size());
    for (int c = 0; c < C; ++c) {
        const T* kernel = &p.local_kernel[static_cast<size_t>(c) * kl * kl];
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) {
                T acc = p.local_bias[c];
                for (int ky = 0; ky < kl; ++ky) {
                    int sy = y + ky - hl;
                    if (sy < 0 || sy >= H) continue;
                    for (int kx = 0; kx < kl; ++kx) {
                        int sx = xx + kx - hl;
                        if (sx < 0 || sx >= W) continue;
                        acc += x.at(c, sy, sx) * kernel[ky * kl + kx];
                    }
                }
                local[x.index(c, y, xx)] = acc;
            }
    }

    std::vector<T> m(C);
    for (int c = 0; c < C; ++c) {
        T pool = T(0);
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) {
                size_t i = static_cast<size_t>(y) * W + xx;
                pool += x.at(c, y, xx) * local[x.index(c, y, xx)] * gate[i];
            }
        m[c] = sigmoid(pool / T(plane));
    }

    if (tape) {
        tape->avg = std::move(avg);
        tape->mx = std::move(mx);
        tape->argmax = std::move(argmax);
        tape->gate = std::move(gate);
        tape->local = std::move(local);
        tape->m = m;
    }
    return m;
}

// Per-position importance for spatial exchange: the same fused product
// as above, pooled over channels instead of space.
template <typename T>
std::vector<T> spatial_scores(const Tensor3<T>& x, const AttentionTapeT<T>& tape) {
    const int C = x.channels, H = x.height, W = x.width;
    std::vector<T> s(static_cast<size_t>(H) * W);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            size_t i = static_cast<size_t>(y) * W + xx;
            T pool = T(0);
            for (int c = 0; c < C; ++c)
                pool += x.at(c, y, xx) * tape.local[x.index(c, y, xx)] * tape.gate[i];
            s[i] = sigmoid(pool / T(C));
        }
    return s;
}

struct AttentionGrads {
    FeatureMap dx;
    std::vector<double> dgate_kernel;
    double dgate_bias = 0.0;
    std::vector<double> dlocal_kernel;
    std::vector<double> dlocal_bias;
};

// Exact reverse pass for channel_attention given d(loss)/d(m). The max
// descriptor routes its gradient to the recorded argmax channel.
AttentionGrads channel_attention_backward(const FeatureMap& x, const AttentionParams& p,
                                          const AttentionTape& tape,
                                          const std::vector<double>& dm);

}  // namespace irforge::exchange
