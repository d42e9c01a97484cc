#include "irforge/exchange/attention.hpp"

namespace irforge::exchange {

AttentionGrads channel_attention_backward(const FeatureMap& x, const AttentionParams& p,
                                          const AttentionTape& tape,
                                          const std::vector<double>& dm) {
    const int C = x.channels, H = x.height, W = x.width;
    const size_t plane = static_cast<size_t>(H) * W;
    if (static_cast<int>(dm.size()) != C) throw ParamError("dm length must equal C");

    AttentionGrads g;
    g.dx = FeatureMap(C, H, W);
    g.dgate_kernel.assign(p.gate_kernel.size(), 0.0);
    g.dlocal_kernel.assign(p.local_kernel.size(), 0.0);
    g.dlocal_bias.assign(p.local_bias.size(), 0.0);

    // m = sigmoid(pool), pool = mean(z), z = x * local * gate
    std::vector<double> dz(x.size());
    for (int c = 0; c < C; ++c) {
        double dpool = dm[c] * tape.m[c] * (1.0 - tape.m[c]) / static_cast<double>(plane);
        for (size_t i = 0; i < plane; ++i) dz[static_cast<size_t>(c) * plane + i] = dpool;
    }

    std::vector<double> dgate(plane, 0.0);
    std::vector<double> dlocal(x.size());
    for (int c = 0; c < C; ++c)
        for (size_t i = 0; i < plane; ++i) {
            size_t ci = static_cast<size_t>(c) * plane + i;
            double xv = x.data[ci];
            g.dx.data[ci] = dz[ci] * tape.local[ci] * tape.gate[i];
            dlocal[ci] = dz[ci] * xv * tape.gate[i];
            dgate[i] += dz[ci] * xv * tape.local[ci];
        }

    // gate = sigmoid(conv7x7([avg; max]))
    std::vector<double> dpre(plane);
    for (size_t i = 0; i < plane; ++i) dpre[i] = dgate[i] * tape.gate[i] * (1.0 - tape.gate[i]);

    constexpr int kg = kGateKernelSize, hg = kGateKernelSize / 2;
    std::vector<double> davg(plane, 0.0), dmx(plane, 0.0);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            double d = dpre[static_cast<size_t>(y) * W + xx];
            g.dgate_bias += d;
            for (int ky = 0; ky < kg; ++ky) {
                int sy = y + ky - hg;
                if (sy < 0 || sy >= H) continue;
                for (int kx = 0; kx < kg; ++kx) {
                    int sx = xx + kx - hg;
                    if (sx < 0 || sx >= W) continue;
                    size_t si = static_cast<size_t>(sy) * W + sx;
                    g.dgate_kernel[(0 * kg + ky) * kg + kx] += d * tape.avg[si];
                    g.dgate_kernel[(1 * kg + ky) * kg + kx] += d * tape.mx[si];
                    davg[si] += d * p.gate_kernel[(0 * kg + ky) * kg + kx];
                    dmx[si] += d * p.gate_kernel[(1 * kg + ky) * kg + kx];
                }
            }
        }

    // avg: 1/C to every channel; max: all to the winning channel.
    for (size_t i = 0; i < plane; ++i) {
        double da = davg[i] / static_cast<double>(C);
        for (int c = 0; c < C; ++c) g.dx.data[static_cast<size_t>(c) * plane + i] += da;
        g.dx.data[static_cast<size_t>(tape.argmax[i]) * plane + i] += dmx[i];
    }

    // local = depthwise conv5x5(x) + bias
    constexpr int kl = kLocalKernelSize, hl = kLocalKernelSize / 2;
    for (int c = 0; c < C; ++c) {
        double* dkernel = &g.dlocal_kernel[static_cast<size_t>(c) * kl * kl];
        const double* kernel = &p.local_kernel[static_cast<size_t>(c) * kl * kl];
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) {
                double d = dlocal[x.index(c, y, xx)];
                g.dlocal_bias[c] += d;
                for (int ky = 0; ky < kl; ++ky) {
                    int sy = y + ky - hl;
                    if (sy < 0 || sy >= H) continue;
                    for (int kx = 0; kx < kl; ++kx) {
                        int sx = xx + kx - hl;
                        if (sx < 0 || sx >= W) continue;
                        dkernel[ky * kl + kx] += d * x.at(c, sy, sx);
                        g.dx.at(c, sy, sx) += d * kernel[ky * kl + kx];
                    }
                }
            }
    }
    return g;
}

}  // namespace irforge::exchange
