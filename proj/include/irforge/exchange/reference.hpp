#pragma once

#include "irforge/exchange/exchange.hpp"

// Deliberately naive reference implementation of the exchange kernel,
// written directly from the defining equations with explicit loops and
// materialized masks. It shares no code with the fast path and exists
// to cross-check it; keep it simple, not fast.
namespace irforge::exchange::ref {

std::vector<double> channel_attention(const FeatureMap& x, const AttentionParams& p);
std::vector<double> spatial_scores(const FeatureMap& x, const AttentionParams& p);
FeatureMap adapter_forward(const FeatureMap& x, const AdapterWeights& w);

ExchangePair<double> run_exchange(const FeatureMap& x1, const FeatureMap& x2,
                                  const ExchangeConfig& cfg, const ExchangeWeights& w1,
                                  const ExchangeWeights& w2, SeededRng* rng = nullptr);

}  // namespace irforge::exchange::ref
