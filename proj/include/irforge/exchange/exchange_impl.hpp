#pragma once

// Template bodies for exchange.hpp; include that header instead.

namespace irforge::exchange {

template <typename T>
Tensor3<T> adapter_forward(const Tensor3<T>& x, const AdapterWeightsT<T>& w,
                           Tensor3<T>* hidden_tape) {
    if (w.channels != x.channels) throw ParamError("adapter weights do not match C");
    const int C = x.channels, H = x.height, W = x.width;
    Tensor3<T> out(C, H, W);
    Tensor3<T> pre(w.hidden, H, W);
    std::vector<T> v(C), hv(w.hidden);
    for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) {
            for (int c = 0; c < C; ++c) v[c] = x.at(c, y, xx);
            for (int j = 0; j < w.hidden; ++j) {
                T acc = w.b1[j];
                const T* row = &w.w1[static_cast<size_t>(j) * C];
                for (int c = 0; c < C; ++c) acc += row[c] * v[c];
                pre.at(j, y, xx) = acc;
                hv[j] = acc > T(0) ? acc : T(0);
            }
            for (int c = 0; c < C; ++c) {
                T acc = w.b2[c];
                const T* row = &w.w2[static_cast<size_t>(c) * w.hidden];
                for (int j = 0; j < w.hidden; ++j) acc += row[j] * hv[j];
                out.at(c, y, xx) = acc;
            }
        }
    if (hidden_tape) *hidden_tape = std::move(pre);
    return out;
}

// Exchange core with caller-provided masks:
//   Y1 = X1 o (1 - E1) + A2(X2 o E2)
//   Y2 = X2 o (1 - E2) + A1(X1 o E1)
// mask1/mask2 index channels when spatial == false, positions otherwise.
template <typename T>
ExchangePair<T> apply_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                               const std::vector<uint8_t>& mask1,
                               const std::vector<uint8_t>& mask2, bool spatial,
                               bool adapter_enabled, const ExchangeWeightsT<T>& w1,
                               const ExchangeWeightsT<T>& w2, ExchangeTapeT<T>* tape) {
    if (!x1.same_shape(x2)) throw ParamError("exchange inputs must share a shape");
    const int C = x1.channels, H = x1.height, W = x1.width;
    const size_t plane = static_cast<size_t>(H) * W;
    const size_t slots = spatial ? plane : static_cast<size_t>(C);
    if (mask1.size() != slots || mask2.size() != slots)
        throw ParamError("exchange mask length does not match slot count");

    auto split = [&](const Tensor3<T>& x, const std::vector<uint8_t>& mask, Tensor3<T>& kept,
                     Tensor3<T>& given) {
        kept = Tensor3<T>(C, H, W);
        given = Tensor3<T>(C, H, W);
        for (int c = 0; c < C; ++c)
            for (size_t i = 0; i < plane; ++i) {
                size_t ci = static_cast<size_t>(c) * plane + i;
                bool on = spatial ? mask[i] != 0 : mask[c] != 0;
                (on ? given : kept).data[ci] = x.data[ci];
            }
    };

    Tensor3<T> kept1, given1, kept2, given2;
    split(x1, mask1, kept1, given1);
    split(x2, mask2, kept2, given2);

    Tensor3<T> recv1, recv2;
    if (adapter_enabled) {
        recv1 = adapter_forward(given2, w2.adapter, tape ? &tape->hidden2 : nullptr);
        recv2 = adapter_forward(given1, w1.adapter, tape ? &tape->hidden1 : nullptr);
    } else {
        recv1 = given2;
        recv2 = given1;
    }

    ExchangePair<T> out;
    out.y1 = Tensor3<T>(C, H, W);
    out.y2 = Tensor3<T>(C, H, W);
    for (size_t i = 0; i < x1.size(); ++i) {
        out.y1.data[i] = kept1.data[i] + recv1.data[i];
        out.y2.data[i] = kept2.data[i] + recv2.data[i];
    }

    if (tape) {
        tape->masked1 = std::move(given1);
        tape->masked2 = std::move(given2);
    }
    return out;
}

namespace detail {

template <typename T>
std::vector<double> to_double_vec(const std::vector<T>& v) {
    return std::vector<double>(v.begin(), v.end());
}

template <typename T>
ExchangePair<T> exchange_stage(const Tensor3<T>& x1, const Tensor3<T>& x2,
                               const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                               const ExchangeWeightsT<T>& w2, bool spatial, SeededRng* rng,
                               ExchangeTapeT<T>* tape) {
    if (!x1.same_shape(x2)) throw ParamError("exchange inputs must share a shape");
    require_finite(x1, "exchange");
    require_finite(x2, "exchange");
    if (cfg.adapter_enabled &&
        (w1.adapter.channels != x1.channels || w2.adapter.channels != x2.channels))
        throw ParamError("adapter weights do not match C");

    const int H = x1.height, W = x1.width;
    auto pick = [&](const Tensor3<T>& x, const ExchangeWeightsT<T>& w,
                    AttentionTapeT<T>* att_tape) {
        std::vector<double> logits;
        if (cfg.selection == SelectionMode::kDynamic) {
            AttentionTapeT<T> local_tape;
            AttentionTapeT<T>* use = att_tape ? att_tape : &local_tape;
            std::vector<T> m = channel_attention(x, w.attention, use);
            logits = spatial ? to_double_vec(spatial_scores(x, *use)) : to_double_vec(m);
        } else {
            logits.assign(spatial ? static_cast<size_t>(H) * W : x.channels, 0.0);
        }
        return select_slots(logits, cfg.p, cfg.selection, rng, /*allow_empty=*/spatial);
    };

    ExchangeSelection sel1 = pick(x1, w1, tape ? &tape->att1 : nullptr);
    ExchangeSelection sel2 = pick(x2, w2, tape ? &tape->att2 : nullptr);

    ExchangePair<T> out = apply_exchange(x1, x2, sel1.mask, sel2.mask, spatial,
                                         cfg.adapter_enabled, w1, w2, tape);
    out.sel1 = sel1;
    out.sel2 = sel2;
    if (tape) {
        tape->sel1 = std::move(sel1);
        tape->sel2 = std::move(sel2);
    }
    return out;
}

}  // namespace detail

template <typename T>
ExchangePair<T> hard_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                              const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                              const ExchangeWeightsT<T>& w2, SeededRng* rng,
                              ExchangeTapeT<T>* tape) {
    return detail::exchange_stage(x1, x2, cfg, w1, w2, /*spatial=*/false, rng, tape);
}

template <typename T>
ExchangePair<T> spatial_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                                 const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                                 const ExchangeWeightsT<T>& w2, SeededRng* rng) {
    return detail::exchange_stage(x1, x2, cfg, w1, w2, /*spatial=*/true, rng,
                                  static_cast<ExchangeTapeT<T>*>(nullptr));
}

template <typename T>
ExchangePair<T> run_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                             const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                             const ExchangeWeightsT<T>& w2, SeededRng* rng) {
    switch (cfg.mechanism) {
        case Mechanism::kChannel:
            return hard_exchange(x1, x2, cfg, w1, w2, rng);
        case Mechanism::kSpatial:
            return spatial_exchange(x1, x2, cfg, w1, w2, rng);
        case Mechanism::kChannelThenSpatial: {
            auto a = hard_exchange(x1, x2, cfg, w1, w2, rng);
            auto b = spatial_exchange(a.y1, a.y2, cfg, w1, w2, rng);
            return {std::move(b.y1), std::move(b.y2), std::move(a.sel1), std::move(a.sel2)};
        }
        case Mechanism::kSpatialThenChannel: {
            auto a = spatial_exchange(x1, x2, cfg, w1, w2, rng);
            auto b = hard_exchange(a.y1, a.y2, cfg, w1, w2, rng);
            return {std::move(b.y1), std::move(b.y2), std::move(b.sel1), std::move(b.sel2)};
        }
    }
    throw ParamError("unknown exchange mechanism");
}

}  // namespace irforge::exchange
