#pragma once

#include <numeric>
#include <string>

#include "irforge/exchange/attention.hpp"

namespace irforge::exchange {

enum class Mechanism { kChannel, kSpatial, kChannelThenSpatial, kSpatialThenChannel };
enum class SelectionMode { kDynamic, kFixed, kRandom };

Mechanism mechanism_from_string(const std::string& s);
SelectionMode selection_from_string(const std::string& s);
std::string to_string(Mechanism m);
std::string to_string(SelectionMode s);

struct ExchangeConfig {
    double p = 0.5;
    Mechanism mechanism = Mechanism::kChannel;
    SelectionMode selection = SelectionMode::kDynamic;
    int adapter_hidden = 64;
    bool adapter_enabled = true;
};

// Result of Top-K selection over attention logits: indices ascending,
// values in matching order, plus the per-slot binary mask. near_tie
// marks samples whose K-th / (K+1)-th logit gap falls below 1e-6; such
// samples are unsuitable for finite-difference comparisons.
struct ExchangeSelection {
    int k = 0;
    std::vector<double> values;
    std::vector<int> indices;
    std::vector<uint8_t> mask;
    double tie_gap = 0.0;
    bool near_tie = false;
};

inline constexpr double kNearTieGap = 1e-6;

// K = floor(n * p); ties broken toward the lower index. K == 0 is a
// parameter error.
ExchangeSelection topk_select(const std::vector<double>& logits, double p);

// Selection dispatch: dynamic ranks the logits, fixed takes the first
// floor(n*p) slots, random draws floor(n*p) distinct slots from rng.
// allow_empty permits K == 0 (spatial exchange treats that as "exchange
// nothing").
ExchangeSelection select_slots(const std::vector<double>& logits, double p, SelectionMode mode,
                               SeededRng* rng, bool allow_empty);

// E[c, y, x] = e[c].
Tensor3<uint8_t> expand_mask(const std::vector<uint8_t>& e, int h, int w);

// MLP over the channel vector at each spatial location. When hidden_tape
// is non-null the pre-activation values are kept for the backward pass.
template <typename T>
Tensor3<T> adapter_forward(const Tensor3<T>& x, const AdapterWeightsT<T>& w,
                           Tensor3<T>* hidden_tape = nullptr);

struct AdapterGrads {
    FeatureMap dx;
    std::vector<double> dw1, db1, dw2, db2;
};

AdapterGrads adapter_backward(const FeatureMap& x, const AdapterWeights& w,
                              const FeatureMap& hidden_pre, const FeatureMap& dy);

// Everything the backward pass needs from one hard_exchange call.
template <typename T>
struct ExchangeTapeT {
    AttentionTapeT<T> att1, att2;
    ExchangeSelection sel1, sel2;
    Tensor3<T> masked1, masked2;  // X1 o E1, X2 o E2 (adapter inputs)
    Tensor3<T> hidden1, hidden2;  // adapter pre-activations
};
using ExchangeTape = ExchangeTapeT<double>;

template <typename T>
struct ExchangePair {
    Tensor3<T> y1, y2;
    ExchangeSelection sel1, sel2;
};

// The exchange core with caller-provided masks:
//   Y1 = X1 o (1 - E1) + A2(X2 o E2)
//   Y2 = X2 o (1 - E2) + A1(X1 o E1)
// Masks index channels (spatial == false) or positions (spatial == true)
// and are expanded across the remaining axes.
template <typename T>
ExchangePair<T> apply_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                               const std::vector<uint8_t>& mask1,
                               const std::vector<uint8_t>& mask2, bool spatial,
                               bool adapter_enabled, const ExchangeWeightsT<T>& w1,
                               const ExchangeWeightsT<T>& w2, ExchangeTapeT<T>* tape = nullptr);

// Channel hard exchange:
//   Y1 = X1 o (1 - E1) + A2(X2 o E2)
//   Y2 = X2 o (1 - E2) + A1(X1 o E1)
// Each stream derives its own mask (dynamic: attention + Top-K) and the
// source stream's adapter projects the features it hands over.
template <typename T>
ExchangePair<T> hard_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                              const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                              const ExchangeWeightsT<T>& w2, SeededRng* rng = nullptr,
                              ExchangeTapeT<T>* tape = nullptr);

// Spatial variant: masks select whole pixel columns across channels.
// floor(H*W*p) may be zero, in which case nothing is exchanged.
template <typename T>
ExchangePair<T> spatial_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                                 const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                                 const ExchangeWeightsT<T>& w2, SeededRng* rng = nullptr);

// Dispatch on cfg.mechanism; composed modes chain the two stages.
template <typename T>
ExchangePair<T> run_exchange(const Tensor3<T>& x1, const Tensor3<T>& x2,
                             const ExchangeConfig& cfg, const ExchangeWeightsT<T>& w1,
                             const ExchangeWeightsT<T>& w2, SeededRng* rng = nullptr);

struct ExchangeGrads {
    FeatureMap dx1, dx2;
    AdapterGrads adapter1, adapter2;        // for w1.adapter / w2.adapter
    AttentionGrads attention1, attention2;  // identically zero: masks are constants
};

// Reverse pass of the channel hard exchange. Selection masks are
// constants here, so no gradient reaches the attention parameters.
ExchangeGrads hard_exchange_backward(const FeatureMap& x1, const FeatureMap& x2,
                                     const ExchangeConfig& cfg, const ExchangeWeights& w1,
                                     const ExchangeWeights& w2, const ExchangeTape& tape,
                                     const FeatureMap& dy1, const FeatureMap& dy2);

}  // namespace irforge::exchange

#include "irforge/exchange/exchange_impl.hpp"
