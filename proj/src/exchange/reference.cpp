#include "irforge/exchange/reference.hpp"

#include <cmath>

namespace irforge::exchange::ref {

namespace {

double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Zero-padded plane lookup.
double plane_at(const std::vector<double>& plane, int h, int w, int y, int x) {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return plane[static_cast<size_t>(y) * w + x];
}

struct FusedProduct {
    std::vector<double> gate;  // H*W
    FeatureMap z;              // x * local * gate
};

FusedProduct fused_product(const FeatureMap& x, const AttentionParams& p) {
    const int C = x.channels, H = x.height, W = x.width;

    std::vector<double> avg(static_cast<size_t>(H) * W), mx(avg.size());
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            double s = 0.0, best = x.at(0, y, xx);
            for (int c = 0; c < C; ++c) {
                s += x.at(c, y, xx);
                if (x.at(c, y, xx) > best) best = x.at(c, y, xx);
            }
            avg[static_cast<size_t>(y) * W + xx] = s / C;
            mx[static_cast<size_t>(y) * W + xx] = best;
        }

    FusedProduct out;
    out.gate.resize(avg.size());
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            double acc = p.gate_bias;
            for (int ky = 0; ky < 7; ++ky)
                for (int kx = 0; kx < 7; ++kx) {
                    acc += plane_at(avg, H, W, y + ky - 3, xx + kx - 3) *
                           p.gate_kernel[(0 * 7 + ky) * 7 + kx];
                    acc += plane_at(mx, H, W, y + ky - 3, xx + kx - 3) *
                           p.gate_kernel[(1 * 7 + ky) * 7 + kx];
                }
            out.gate[static_cast<size_t>(y) * W + xx] = sig(acc);
        }

    out.z = FeatureMap(C, H, W);
    for (int c = 0; c < C; ++c) {
        std::vector<double> chan(static_cast<size_t>(H) * W);
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) chan[static_cast<size_t>(y) * W + xx] = x.at(c, y, xx);
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) {
                double acc = p.local_bias[c];
                for (int ky = 0; ky < 5; ++ky)
                    for (int kx = 0; kx < 5; ++kx)
                        acc += plane_at(chan, H, W, y + ky - 2, xx + kx - 2) *
                               p.local_kernel[(static_cast<size_t>(c) * 5 + ky) * 5 + kx];
                out.z.at(c, y, xx) =
                    x.at(c, y, xx) * acc * out.gate[static_cast<size_t>(y) * W + xx];
            }
    }
    return out;
}

std::vector<int> naive_topk(const std::vector<double>& logits, int k) {
    std::vector<uint8_t> taken(logits.size(), 0);
    std::vector<int> idx;
    for (int round = 0; round < k; ++round) {
        int best = -1;
        for (size_t i = 0; i < logits.size(); ++i) {
            if (taken[i]) continue;
            if (best < 0 || logits[i] > logits[best]) best = static_cast<int>(i);
        }
        taken[best] = 1;
        idx.push_back(best);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<int> pick_indices(const std::vector<double>& logits, const ExchangeConfig& cfg,
                              SeededRng* rng, bool allow_empty) {
    int k = static_cast<int>(std::floor(static_cast<double>(logits.size()) * cfg.p));
    if (k == 0 && !allow_empty) throw ParamError("floor(C * p) must be >= 1");
    if (cfg.selection == SelectionMode::kDynamic) return naive_topk(logits, k);
    if (cfg.selection == SelectionMode::kFixed) {
        std::vector<int> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }
    if (!rng) throw ParamError("random selection needs an rng");
    std::vector<int> pool(logits.size());
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> idx;
    for (int i = 0; i < k; ++i) {
        size_t j = rng->uniform_below(pool.size());
        idx.push_back(pool[j]);
        pool.erase(pool.begin() + j);
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

FeatureMap expand_channel_mask(const std::vector<int>& idx, int c, int h, int w) {
    std::vector<uint8_t> e(c, 0);
    for (int i : idx) e[i] = 1;
    FeatureMap out(c, h, w);
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(ci, y, x) = e[ci];
    return out;
}

FeatureMap expand_position_mask(const std::vector<int>& idx, int c, int h, int w) {
    std::vector<uint8_t> e(static_cast<size_t>(h) * w, 0);
    for (int i : idx) e[i] = 1;
    FeatureMap out(c, h, w);
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(ci, y, x) = e[static_cast<size_t>(y) * w + x];
    return out;
}

FeatureMap hadamard(const FeatureMap& a, const FeatureMap& b) {
    FeatureMap out(a.channels, a.height, a.width);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

FeatureMap one_minus(const FeatureMap& a) {
    FeatureMap out(a.channels, a.height, a.width);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = 1.0 - a.data[i];
    return out;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
    FeatureMap out(a.channels, a.height, a.width);
    for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
    return out;
}

struct StageResult {
    FeatureMap y1, y2;
    std::vector<int> idx1, idx2;
};

StageResult one_stage(const FeatureMap& x1, const FeatureMap& x2, const ExchangeConfig& cfg,
                      const ExchangeWeights& w1, const ExchangeWeights& w2, bool spatial,
                      SeededRng* rng) {
    const int C = x1.channels, H = x1.height, W = x1.width;

    auto logits_of = [&](const FeatureMap& x, const ExchangeWeights& w) -> std::vector<double> {
        if (cfg.selection != SelectionMode::kDynamic)
            return std::vector<double>(spatial ? static_cast<size_t>(H) * W : C, 0.0);
        return spatial ? spatial_scores(x, w.attention) : channel_attention(x, w.attention);
    };

    std::vector<int> idx1 = pick_indices(logits_of(x1, w1), cfg, rng, spatial);
    std::vector<int> idx2 = pick_indices(logits_of(x2, w2), cfg, rng, spatial);

    FeatureMap e1 = spatial ? expand_position_mask(idx1, C, H, W)
                            : expand_channel_mask(idx1, C, H, W);
    FeatureMap e2 = spatial ? expand_position_mask(idx2, C, H, W)
                            : expand_channel_mask(idx2, C, H, W);

    FeatureMap give1 = hadamard(x1, e1);
    FeatureMap give2 = hadamard(x2, e2);
    FeatureMap recv1 = cfg.adapter_enabled ? adapter_forward(give2, w2.adapter) : give2;
    FeatureMap recv2 = cfg.adapter_enabled ? adapter_forward(give1, w1.adapter) : give1;

    StageResult out;
    out.y1 = add(hadamard(x1, one_minus(e1)), recv1);
    out.y2 = add(hadamard(x2, one_minus(e2)), recv2);
    out.idx1 = std::move(idx1);
    out.idx2 = std::move(idx2);
    return out;
}

ExchangeSelection to_selection(const std::vector<int>& idx, size_t n) {
    ExchangeSelection sel;
    sel.k = static_cast<int>(idx.size());
    sel.indices = idx;
    sel.mask.assign(n, 0);
    for (int i : idx) sel.mask[i] = 1;
    return sel;
}

}  // namespace

std::vector<double> channel_attention(const FeatureMap& x, const AttentionParams& p) {
    FusedProduct fp = fused_product(x, p);
    const int C = x.channels;
    const size_t plane = static_cast<size_t>(x.height) * x.width;
    std::vector<double> m(C);
    for (int c = 0; c < C; ++c) {
        double pool = 0.0;
        for (size_t i = 0; i < plane; ++i) pool += fp.z.data[static_cast<size_t>(c) * plane + i];
        m[c] = sig(pool / static_cast<double>(plane));
    }
    return m;
}

std::vector<double> spatial_scores(const FeatureMap& x, const AttentionParams& p) {
    FusedProduct fp = fused_product(x, p);
    const int C = x.channels;
    const size_t plane = static_cast<size_t>(x.height) * x.width;
    std::vector<double> s(plane);
    for (size_t i = 0; i < plane; ++i) {
        double pool = 0.0;
        for (int c = 0; c < C; ++c) pool += fp.z.data[static_cast<size_t>(c) * plane + i];
        s[i] = sig(pool / static_cast<double>(C));
    }
    return s;
}

FeatureMap adapter_forward(const FeatureMap& x, const AdapterWeights& w) {
    const int C = x.channels, H = x.height, W = x.width;
    FeatureMap out(C, H, W);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            std::vector<double> hidden(w.hidden);
            for (int j = 0; j < w.hidden; ++j) {
                double acc = w.b1[j];
                for (int c = 0; c < C; ++c)
                    acc += w.w1[static_cast<size_t>(j) * C + c] * x.at(c, y, xx);
                hidden[j] = acc > 0.0 ? acc : 0.0;
            }
            for (int c = 0; c < C; ++c) {
                double acc = w.b2[c];
                for (int j = 0; j < w.hidden; ++j)
                    acc += w.w2[static_cast<size_t>(c) * w.hidden + j] * hidden[j];
                out.at(c, y, xx) = acc;
            }
        }
    return out;
}

ExchangePair<double> run_exchange(const FeatureMap& x1, const FeatureMap& x2,
                                  const ExchangeConfig& cfg, const ExchangeWeights& w1,
                                  const ExchangeWeights& w2, SeededRng* rng) {
    if (!x1.same_shape(x2)) throw ParamError("exchange inputs must share a shape");
    const size_t plane = static_cast<size_t>(x1.height) * x1.width;

    auto stage_pair = [&](const FeatureMap& a, const FeatureMap& b, bool spatial) {
        return one_stage(a, b, cfg, w1, w2, spatial, rng);
    };

    StageResult r;
    switch (cfg.mechanism) {
        case Mechanism::kChannel:
            r = stage_pair(x1, x2, false);
            return {std::move(r.y1), std::move(r.y2), to_selection(r.idx1, x1.channels),
                    to_selection(r.idx2, x1.channels)};
        case Mechanism::kSpatial:
            r = stage_pair(x1, x2, true);
            return {std::move(r.y1), std::move(r.y2), to_selection(r.idx1, plane),
                    to_selection(r.idx2, plane)};
        case Mechanism::kChannelThenSpatial: {
            StageResult a = stage_pair(x1, x2, false);
            StageResult b = stage_pair(a.y1, a.y2, true);
            return {std::move(b.y1), std::move(b.y2), to_selection(a.idx1, x1.channels),
                    to_selection(a.idx2, x1.channels)};
        }
        case Mechanism::kSpatialThenChannel: {
            StageResult a = stage_pair(x1, x2, true);
            StageResult b = stage_pair(a.y1, a.y2, false);
            return {std::move(b.y1), std::move(b.y2), to_selection(b.idx1, x1.channels),
                    to_selection(b.idx2, x1.channels)};
        }
    }
    throw ParamError("unknown exchange mechanism");
}

}  // namespace irforge::exchange::ref
