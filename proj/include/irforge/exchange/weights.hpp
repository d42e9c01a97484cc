#pragma once

#include <string>
#include <vector>

#include "irforge/exchange/tensor.hpp"

namespace irforge::exchange {

inline constexpr int kGateKernelSize = 7;   // 7x7 conv over [avg; max], 2 -> 1 channels
inline constexpr int kLocalKernelSize = 5;  // depthwise 5x5 conv

// Parameters of the channel-attention block. The depthwise kernels are
// per-channel, which keeps the whole block equivariant to channel
// permutations.
template <typename T>
struct AttentionParamsT {
    int channels = 0;
    std::vector<T> gate_kernel;   // 2 * 7 * 7, [in][ky][kx]
    T gate_bias = T(0);
    std::vector<T> local_kernel;  // C * 5 * 5
    std::vector<T> local_bias;    // C

    AttentionParamsT() = default;
    explicit AttentionParamsT(int c)
        : channels(c),
          gate_kernel(2 * kGateKernelSize * kGateKernelSize, T(0)),
          local_kernel(static_cast<size_t>(c) * kLocalKernelSize * kLocalKernelSize, T(0)),
          local_bias(c, T(0)) {
        if (c < 1) throw ParamError("attention params need channels >= 1");
    }
};

// Two dense layers applied to the channel vector at every spatial
// location: C -> hidden -> C with a ReLU in between.
template <typename T>
struct AdapterWeightsT {
    int channels = 0;
    int hidden = 0;
    std::vector<T> w1;  // hidden x C
    std::vector<T> b1;  // hidden
    std::vector<T> w2;  // C x hidden
    std::vector<T> b2;  // C

    AdapterWeightsT() = default;
    AdapterWeightsT(int c, int h)
        : channels(c),
          hidden(h),
          w1(static_cast<size_t>(h) * c, T(0)),
          b1(h, T(0)),
          w2(static_cast<size_t>(c) * h, T(0)),
          b2(c, T(0)) {
        if (c < 1 || h < 1) throw ParamError("adapter needs channels >= 1 and hidden >= 1");
    }
};

// One stream's parameter bundle: attention block plus the adapter that
// projects this stream's features before they are handed to the other
// task.
template <typename T>
struct ExchangeWeightsT {
    AttentionParamsT<T> attention;
    AdapterWeightsT<T> adapter;
};

using AttentionParams = AttentionParamsT<double>;
using AdapterWeights = AdapterWeightsT<double>;
using ExchangeWeights = ExchangeWeightsT<double>;

template <typename T>
ExchangeWeightsT<T> random_weights(int channels, int hidden, SeededRng& rng) {
    ExchangeWeightsT<T> w;
    w.attention = AttentionParamsT<T>(channels);
    w.adapter = AdapterWeightsT<T>(channels, hidden);
    auto fill = [&rng](std::vector<T>& v, double scale) {
        for (auto& e : v) e = static_cast<T>(rng.uniform_real(-scale, scale));
    };
    fill(w.attention.gate_kernel, 1.0 / kGateKernelSize);
    w.attention.gate_bias = static_cast<T>(rng.uniform_real(-0.1, 0.1));
    fill(w.attention.local_kernel, 1.0 / kLocalKernelSize);
    fill(w.attention.local_bias, 0.1);
    fill(w.adapter.w1, 1.0 / std::sqrt(static_cast<double>(channels)));
    fill(w.adapter.b1, 0.1);
    fill(w.adapter.w2, 1.0 / std::sqrt(static_cast<double>(hidden)));
    fill(w.adapter.b2, 0.1);
    return w;
}

// Flat little-endian doubles plus a JSON sidecar describing the shapes.
void save_weights(const std::string& bin_path, const ExchangeWeights& w);
ExchangeWeights load_weights(const std::string& bin_path);

}  // namespace irforge::exchange
