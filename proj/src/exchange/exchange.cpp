#include "irforge/exchange/exchange.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace irforge::exchange {

using nlohmann::json;

Mechanism mechanism_from_string(const std::string& s) {
    if (s == "channel") return Mechanism::kChannel;
    if (s == "spatial") return Mechanism::kSpatial;
    if (s == "channel_then_spatial") return Mechanism::kChannelThenSpatial;
    if (s == "spatial_then_channel") return Mechanism::kSpatialThenChannel;
    throw ParamError("unknown mechanism: " + s);
}

SelectionMode selection_from_string(const std::string& s) {
    if (s == "dynamic") return SelectionMode::kDynamic;
    if (s == "fixed") return SelectionMode::kFixed;
    if (s == "random") return SelectionMode::kRandom;
    throw ParamError("unknown selection mode: " + s);
}

std::string to_string(Mechanism m) {
    switch (m) {
        case Mechanism::kChannel: return "channel";
        case Mechanism::kSpatial: return "spatial";
        case Mechanism::kChannelThenSpatial: return "channel_then_spatial";
        case Mechanism::kSpatialThenChannel: return "spatial_then_channel";
    }
    return "?";
}

std::string to_string(SelectionMode s) {
    switch (s) {
        case SelectionMode::kDynamic: return "dynamic";
        case SelectionMode::kFixed: return "fixed";
        case SelectionMode::kRandom: return "random";
    }
    return "?";
}

namespace {

int slot_count(size_t n, double p, bool allow_empty) {
    if (!(p > 0.0) || !(p < 1.0)) throw ParamError("exchange fraction p must be in (0, 1)");
    int k = static_cast<int>(std::floor(static_cast<double>(n) * p));
    if (k == 0 && !allow_empty) throw ParamError("floor(C * p) must be >= 1");
    return k;
}

ExchangeSelection finish_selection(std::vector<int> indices, const std::vector<double>& logits,
                                   int k) {
    ExchangeSelection sel;
    sel.k = k;
    std::sort(indices.begin(), indices.end());
    sel.indices = std::move(indices);
    sel.mask.assign(logits.size(), 0);
    sel.values.reserve(k);
    for (int i : sel.indices) {
        sel.mask[i] = 1;
        sel.values.push_back(logits[i]);
    }
    return sel;
}

}  // namespace

ExchangeSelection topk_select(const std::vector<double>& logits, double p) {
    int k = slot_count(logits.size(), p, /*allow_empty=*/false);
    std::vector<int> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (logits[a] != logits[b]) return logits[a] > logits[b];
        return a < b;  // ties toward the lower index
    });

    std::vector<int> chosen(order.begin(), order.begin() + k);
    ExchangeSelection sel = finish_selection(std::move(chosen), logits, k);
    if (k < static_cast<int>(logits.size())) {
        sel.tie_gap = logits[order[k - 1]] - logits[order[k]];
        sel.near_tie = sel.tie_gap < kNearTieGap;
    } else {
        sel.tie_gap = std::numeric_limits<double>::infinity();
    }
    return sel;
}

ExchangeSelection select_slots(const std::vector<double>& logits, double p, SelectionMode mode,
                               SeededRng* rng, bool allow_empty) {
    if (mode == SelectionMode::kDynamic) {
        if (allow_empty && slot_count(logits.size(), p, true) == 0)
            return finish_selection({}, logits, 0);
        return topk_select(logits, p);
    }
    int k = slot_count(logits.size(), p, allow_empty);
    ExchangeSelection sel;
    if (mode == SelectionMode::kFixed) {
        std::vector<int> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        sel = finish_selection(std::move(idx), logits, k);
        sel.tie_gap = std::numeric_limits<double>::infinity();
        return sel;
    }
    if (!rng) throw ParamError("random selection needs an rng");
    std::vector<int> pool(logits.size());
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> idx;
    idx.reserve(k);
    for (int i = 0; i < k; ++i) {
        size_t j = rng->uniform_below(pool.size());
        idx.push_back(pool[j]);
        pool.erase(pool.begin() + j);
    }
    sel = finish_selection(std::move(idx), logits, k);
    sel.tie_gap = std::numeric_limits<double>::infinity();
    return sel;
}

Tensor3<uint8_t> expand_mask(const std::vector<uint8_t>& e, int h, int w) {
    Tensor3<uint8_t> out(static_cast<int>(e.size()), h, w);
    for (int c = 0; c < out.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = e[c];
    return out;
}

AdapterGrads adapter_backward(const FeatureMap& x, const AdapterWeights& w,
                              const FeatureMap& hidden_pre, const FeatureMap& dy) {
    const int C = x.channels, H = x.height, W = x.width;
    if (!dy.same_shape(x)) throw ParamError("adapter_backward: dy shape mismatch");

    AdapterGrads g;
    g.dx = FeatureMap(C, H, W);
    g.dw1.assign(w.w1.size(), 0.0);
    g.db1.assign(w.b1.size(), 0.0);
    g.dw2.assign(w.w2.size(), 0.0);
    g.db2.assign(w.b2.size(), 0.0);

    std::vector<double> dh(w.hidden);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            for (int j = 0; j < w.hidden; ++j) dh[j] = 0.0;
            for (int c = 0; c < C; ++c) {
                double d = dy.at(c, y, xx);
                g.db2[c] += d;
                const double* row = &w.w2[static_cast<size_t>(c) * w.hidden];
                double* grow = &g.dw2[static_cast<size_t>(c) * w.hidden];
                for (int j = 0; j < w.hidden; ++j) {
                    double pre = hidden_pre.at(j, y, xx);
                    double hv = pre > 0.0 ? pre : 0.0;
                    grow[j] += d * hv;
                    if (pre > 0.0) dh[j] += d * row[j];
                }
            }
            for (int j = 0; j < w.hidden; ++j) {
                g.db1[j] += dh[j];
                const double* row = &w.w1[static_cast<size_t>(j) * C];
                double* grow = &g.dw1[static_cast<size_t>(j) * C];
                for (int c = 0; c < C; ++c) {
                    double xv = x.at(c, y, xx);
                    grow[c] += dh[j] * xv;
                    g.dx.at(c, y, xx) += dh[j] * row[c];
                }
            }
        }
    return g;
}

ExchangeGrads hard_exchange_backward(const FeatureMap& x1, const FeatureMap& x2,
                                     const ExchangeConfig& cfg, const ExchangeWeights& w1,
                                     const ExchangeWeights& w2, const ExchangeTape& tape,
                                     const FeatureMap& dy1, const FeatureMap& dy2) {
    if (!x1.same_shape(x2) || !dy1.same_shape(x1) || !dy2.same_shape(x1))
        throw ParamError("hard_exchange_backward: shape mismatch");
    const int C = x1.channels, H = x1.height, W = x1.width;
    const size_t plane = static_cast<size_t>(H) * W;

    ExchangeGrads g;
    g.dx1 = FeatureMap(C, H, W);
    g.dx2 = FeatureMap(C, H, W);

    // Kept-channel paths: Y_i picks X_i where the mask is off.
    for (int c = 0; c < C; ++c)
        for (size_t i = 0; i < plane; ++i) {
            size_t ci = static_cast<size_t>(c) * plane + i;
            if (!tape.sel1.mask[c]) g.dx1.data[ci] += dy1.data[ci];
            if (!tape.sel2.mask[c]) g.dx2.data[ci] += dy2.data[ci];
        }

    // Handed-over paths. With the adapter on, dY1 flows through w2's
    // adapter into X2 o E2 (and symmetrically); the mask then zeroes the
    // gradient on unselected channels.
    auto masked_add = [&](FeatureMap& dst, const FeatureMap& src, const std::vector<uint8_t>& e) {
        for (int c = 0; c < C; ++c) {
            if (!e[c]) continue;
            for (size_t i = 0; i < plane; ++i) {
                size_t ci = static_cast<size_t>(c) * plane + i;
                dst.data[ci] += src.data[ci];
            }
        }
    };

    if (cfg.adapter_enabled) {
        g.adapter2 = adapter_backward(tape.masked2, w2.adapter, tape.hidden2, dy1);
        g.adapter1 = adapter_backward(tape.masked1, w1.adapter, tape.hidden1, dy2);
        masked_add(g.dx2, g.adapter2.dx, tape.sel2.mask);
        masked_add(g.dx1, g.adapter1.dx, tape.sel1.mask);
    } else {
        masked_add(g.dx2, dy1, tape.sel2.mask);
        masked_add(g.dx1, dy2, tape.sel1.mask);
        g.adapter1.dw1.assign(w1.adapter.w1.size(), 0.0);
        g.adapter1.db1.assign(w1.adapter.b1.size(), 0.0);
        g.adapter1.dw2.assign(w1.adapter.w2.size(), 0.0);
        g.adapter1.db2.assign(w1.adapter.b2.size(), 0.0);
        g.adapter2.dw1.assign(w2.adapter.w1.size(), 0.0);
        g.adapter2.db1.assign(w2.adapter.b1.size(), 0.0);
        g.adapter2.dw2.assign(w2.adapter.w2.size(), 0.0);
        g.adapter2.db2.assign(w2.adapter.b2.size(), 0.0);
    }

    // Selection is discrete: masks are constants in this pass, so the
    // attention parameters receive exactly zero gradient.
    auto zero_attention = [C](const AttentionParams& p) {
        AttentionGrads z;
        z.dx = FeatureMap(C, 1, 1);
        z.dgate_kernel.assign(p.gate_kernel.size(), 0.0);
        z.dlocal_kernel.assign(p.local_kernel.size(), 0.0);
        z.dlocal_bias.assign(p.local_bias.size(), 0.0);
        return z;
    };
    g.attention1 = zero_attention(w1.attention);
    g.attention2 = zero_attention(w2.attention);
    return g;
}

namespace {

void append_le64(std::string& out, const double* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits;
        std::memcpy(&bits, &data[i], sizeof(bits));
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
}

void read_le64(const std::string& in, size_t& pos, double* data, size_t n) {
    if (pos + 8 * n > in.size()) throw IoError("weight file truncated");
    for (size_t i = 0; i < n; ++i) {
        uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<uint64_t>(static_cast<unsigned char>(in[pos++])) << (8 * b);
        std::memcpy(&data[i], &bits, sizeof(bits));
    }
}

}  // namespace

void save_weights(const std::string& bin_path, const ExchangeWeights& w) {
    const int C = w.attention.channels, hidden = w.adapter.hidden;
    std::string blob;
    append_le64(blob, w.attention.gate_kernel.data(), w.attention.gate_kernel.size());
    append_le64(blob, &w.attention.gate_bias, 1);
    append_le64(blob, w.attention.local_kernel.data(), w.attention.local_kernel.size());
    append_le64(blob, w.attention.local_bias.data(), w.attention.local_bias.size());
    append_le64(blob, w.adapter.w1.data(), w.adapter.w1.size());
    append_le64(blob, w.adapter.b1.data(), w.adapter.b1.size());
    append_le64(blob, w.adapter.w2.data(), w.adapter.w2.size());
    append_le64(blob, w.adapter.b2.data(), w.adapter.b2.size());

    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw IoError("cannot write: " + bin_path);
    out << blob;
    if (!out) throw IoError("write failed: " + bin_path);

    json side;
    side["dtype"] = "f64le";
    side["channels"] = C;
    side["hidden"] = hidden;
    side["tensors"] = json::array({
        json{{"name", "gate_kernel"}, {"shape", {2, kGateKernelSize, kGateKernelSize}}},
        json{{"name", "gate_bias"}, {"shape", {1}}},
        json{{"name", "local_kernel"}, {"shape", {C, kLocalKernelSize, kLocalKernelSize}}},
        json{{"name", "local_bias"}, {"shape", {C}}},
        json{{"name", "adapter_w1"}, {"shape", {hidden, C}}},
        json{{"name", "adapter_b1"}, {"shape", {hidden}}},
        json{{"name", "adapter_w2"}, {"shape", {C, hidden}}},
        json{{"name", "adapter_b2"}, {"shape", {C}}},
    });
    std::ofstream side_out(bin_path + ".json", std::ios::binary);
    if (!side_out) throw IoError("cannot write: " + bin_path + ".json");
    side_out << side.dump(2) << "\n";
}

ExchangeWeights load_weights(const std::string& bin_path) {
    std::ifstream side_in(bin_path + ".json", std::ios::binary);
    if (!side_in) throw IoError("cannot open sidecar: " + bin_path + ".json");
    json side;
    try {
        side_in >> side;
    } catch (const json::exception& e) {
        throw IoError("malformed sidecar " + bin_path + ".json: " + e.what());
    }
    int C = 0, hidden = 0;
    try {
        C = side.at("channels").get<int>();
        hidden = side.at("hidden").get<int>();
    } catch (const json::exception& e) {
        throw IoError("malformed sidecar " + bin_path + ".json: " + e.what());
    }
    if (C < 1 || hidden < 1) throw IoError("invalid shapes in sidecar: " + bin_path + ".json");

    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + bin_path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    ExchangeWeights w;
    w.attention = AttentionParams(C);
    w.adapter = AdapterWeights(C, hidden);
    size_t pos = 0;
    read_le64(blob, pos, w.attention.gate_kernel.data(), w.attention.gate_kernel.size());
    read_le64(blob, pos, &w.attention.gate_bias, 1);
    read_le64(blob, pos, w.attention.local_kernel.data(), w.attention.local_kernel.size());
    read_le64(blob, pos, w.attention.local_bias.data(), w.attention.local_bias.size());
    read_le64(blob, pos, w.adapter.w1.data(), w.adapter.w1.size());
    read_le64(blob, pos, w.adapter.b1.data(), w.adapter.b1.size());
    read_le64(blob, pos, w.adapter.w2.data(), w.adapter.w2.size());
    read_le64(blob, pos, w.adapter.b2.data(), w.adapter.b2.size());
    if (pos != blob.size()) throw IoError("weight file has trailing bytes: " + bin_path);
    return w;
}

}  // namespace irforge::exchange
