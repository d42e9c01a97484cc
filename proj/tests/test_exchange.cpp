#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <numeric>

#include "irforge/exchange/exchange.hpp"
#include "irforge/exchange/reference.hpp"

using namespace irforge;
using namespace irforge::exchange;
namespace fs = std::filesystem;

namespace {

std::vector<int> random_permutation(int n, SeededRng& rng) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.uniform_below(static_cast<uint64_t>(i) + 1)]);
    return perm;
}

// Move channel c of the input to channel perm[c] of the output, with the
// matching reshuffle of every per-channel parameter.
FeatureMap permute_channels(const FeatureMap& x, const std::vector<int>& perm) {
    FeatureMap out(x.channels, x.height, x.width);
    for (int c = 0; c < x.channels; ++c)
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) out.at(perm[c], y, xx) = x.at(c, y, xx);
    return out;
}

ExchangeWeights permute_weights(const ExchangeWeights& w, const std::vector<int>& perm) {
    const int C = w.attention.channels;
    ExchangeWeights out = w;
    constexpr int k2 = kLocalKernelSize * kLocalKernelSize;
    for (int c = 0; c < C; ++c) {
        for (int i = 0; i < k2; ++i)
            out.attention.local_kernel[static_cast<size_t>(perm[c]) * k2 + i] =
                w.attention.local_kernel[static_cast<size_t>(c) * k2 + i];
        out.attention.local_bias[perm[c]] = w.attention.local_bias[c];
        for (int j = 0; j < w.adapter.hidden; ++j)
            out.adapter.w1[static_cast<size_t>(j) * C + perm[c]] =
                w.adapter.w1[static_cast<size_t>(j) * C + c];
        for (int j = 0; j < w.adapter.hidden; ++j)
            out.adapter.w2[static_cast<size_t>(perm[c]) * w.adapter.hidden + j] =
                w.adapter.w2[static_cast<size_t>(c) * w.adapter.hidden + j];
        out.adapter.b2[perm[c]] = w.adapter.b2[c];
    }
    return out;
}

}  // namespace

TEST_CASE("channel_attention: zero input and zero weights give 0.5 logits") {
    FeatureMap x(4, 3, 3, 0.0);
    AttentionParams p(4);
    std::vector<double> m = channel_attention(x, p);
    for (double v : m) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("channel_attention: matches the straight-line reference") {
    SeededRng rng(100, 0);
    for (int trial = 0; trial < 20; ++trial) {
        int c = static_cast<int>(rng.uniform_int(1, 8));
        int h = static_cast<int>(rng.uniform_int(1, 4));
        int w = static_cast<int>(rng.uniform_int(1, 4));
        ExchangeWeights wts = random_weights<double>(c, 4, rng);
        FeatureMap x = random_tensor<double>(c, h, w, rng);
        std::vector<double> fast = channel_attention(x, wts.attention);
        std::vector<double> slow = ref::channel_attention(x, wts.attention);
        REQUIRE(fast.size() == slow.size());
        for (size_t i = 0; i < fast.size(); ++i) {
            CHECK(std::abs(fast[i] - slow[i]) < 1e-12);
            CHECK(fast[i] > 0.0);
            CHECK(fast[i] < 1.0);
        }
    }
}

TEST_CASE("channel_attention: permuting channels permutes the logits") {
    SeededRng rng(101, 0);
    FeatureMap x = random_tensor<double>(6, 3, 2, rng);
    ExchangeWeights w = random_weights<double>(6, 4, rng);
    std::vector<int> perm = random_permutation(6, rng);

    std::vector<double> m = channel_attention(x, w.attention);
    std::vector<double> mp =
        channel_attention(permute_channels(x, perm), permute_weights(w, perm).attention);
    for (int c = 0; c < 6; ++c) CHECK(mp[perm[c]] == doctest::Approx(m[c]).epsilon(1e-15));
}

TEST_CASE("topk_select: definition, ties, floor, errors") {
    ExchangeSelection sel = topk_select({0.9, 0.1, 0.5, 0.7}, 0.5);
    CHECK(sel.k == 2);
    CHECK(sel.indices == std::vector<int>{0, 3});
    CHECK(sel.mask == std::vector<uint8_t>{1, 0, 0, 1});
    CHECK(sel.values == std::vector<double>{0.9, 0.7});

    ExchangeSelection ties = topk_select({0.4, 0.4, 0.4, 0.4}, 0.5);
    CHECK(ties.indices == std::vector<int>{0, 1});
    CHECK(ties.near_tie);

    CHECK(topk_select({0.1, 0.2, 0.3, 0.4, 0.5}, 0.5).k == 2);
    CHECK_THROWS_AS(topk_select({0.5, 0.5}, 0.25), ParamError);
    CHECK_THROWS_AS(topk_select({0.5, 0.5}, 1.5), ParamError);
}

TEST_CASE("topk_select: cardinality and optimality over random draws") {
    SeededRng rng(102, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        int c = static_cast<int>(rng.uniform_int(2, 32));
        double p = rng.uniform_real(0.05, 0.95);
        if (static_cast<int>(std::floor(c * p)) == 0) continue;
        std::vector<double> logits(c);
        for (auto& v : logits) v = rng.uniform_real(0, 1);
        ExchangeSelection sel = topk_select(logits, p);
        CHECK(sel.k == static_cast<int>(std::floor(c * p)));
        CHECK(static_cast<int>(sel.indices.size()) == sel.k);
        int mask_sum = 0;
        double sel_min = 1e9, unsel_max = -1e9;
        for (int i = 0; i < c; ++i) {
            mask_sum += sel.mask[i];
            (sel.mask[i] ? sel_min : unsel_max) =
                sel.mask[i] ? std::min(sel_min, logits[i]) : std::max(unsel_max, logits[i]);
        }
        CHECK(mask_sum == sel.k);
        if (sel.k < c) CHECK(sel_min >= unsel_max);
        CHECK(std::is_sorted(sel.indices.begin(), sel.indices.end()));
    }
}

TEST_CASE("expand_mask: broadcast semantics") {
    Tensor3<uint8_t> e = expand_mask({1, 0}, 2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            CHECK(e.at(0, y, x) == 1);
            CHECK(e.at(1, y, x) == 0);
        }

    Tensor3<uint8_t> zeros = expand_mask({0, 0, 0}, 2, 3);
    int sum = 0;
    for (uint8_t v : zeros.data) sum += v;
    CHECK(sum == 0);

    Tensor3<uint8_t> some = expand_mask({1, 0, 1, 1}, 3, 5);
    sum = 0;
    for (uint8_t v : some.data) sum += v;
    CHECK(sum == 3 * 3 * 5);  // K * H * W
}

TEST_CASE("adapter_forward: zero weights give zero output") {
    SeededRng rng(103, 0);
    FeatureMap x = random_tensor<double>(3, 2, 2, rng);
    AdapterWeights w(3, 4);
    FeatureMap y = adapter_forward(x, w);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("adapter_forward: matches the per-location reference") {
    SeededRng rng(104, 0);
    ExchangeWeights w = random_weights<double>(3, 4, rng);
    FeatureMap x = random_tensor<double>(3, 2, 2, rng);
    FeatureMap fast = adapter_forward(x, w.adapter);
    FeatureMap slow = ref::adapter_forward(x, w.adapter);
    CHECK(max_abs_diff(fast, slow) < 1e-12);

    FeatureMap wrong(4, 2, 2);
    CHECK_THROWS_AS(adapter_forward(wrong, w.adapter), ParamError);
}

TEST_CASE("hard_exchange: fixed e=[1,0] without adapter is a channel swap") {
    SeededRng rng(105, 0);
    FeatureMap x1 = random_tensor<double>(2, 3, 3, rng);
    FeatureMap x2 = random_tensor<double>(2, 3, 3, rng);
    ExchangeWeights w1 = random_weights<double>(2, 4, rng);
    ExchangeWeights w2 = random_weights<double>(2, 4, rng);
    ExchangeConfig cfg;
    cfg.selection = SelectionMode::kFixed;  // K = 1 -> e = [1, 0]
    cfg.adapter_enabled = false;

    auto [y1, y2, s1, s2] = hard_exchange(x1, x2, cfg, w1, w2);
    CHECK(s1.mask == std::vector<uint8_t>{1, 0});
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            CHECK(y1.at(0, y, x) == x2.at(0, y, x));
            CHECK(y1.at(1, y, x) == x1.at(1, y, x));
            CHECK(y2.at(0, y, x) == x1.at(0, y, x));
            CHECK(y2.at(1, y, x) == x2.at(1, y, x));
        }
}

TEST_CASE("hard_exchange: identical inputs and weights give identical outputs") {
    SeededRng rng(106, 0);
    FeatureMap x = random_tensor<double>(4, 2, 2, rng);
    ExchangeWeights w = random_weights<double>(4, 8, rng);
    ExchangeConfig cfg;
    auto [y1, y2, s1, s2] = hard_exchange(x, x, cfg, w, w);
    CHECK(max_abs_diff(y1, y2) == 0.0);
}

TEST_CASE("hard_exchange: equals the brute-force reference") {
    SeededRng rng(107, 0);
    ExchangeConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        ExchangeWeights w1 = random_weights<double>(8, 16, rng);
        ExchangeWeights w2 = random_weights<double>(8, 16, rng);
        FeatureMap x1 = random_tensor<double>(8, 4, 4, rng);
        FeatureMap x2 = random_tensor<double>(8, 4, 4, rng);
        auto fast = hard_exchange(x1, x2, cfg, w1, w2);
        auto slow = ref::run_exchange(x1, x2, cfg, w1, w2);
        CHECK(max_abs_diff(fast.y1, slow.y1) < 1e-12);
        CHECK(max_abs_diff(fast.y2, slow.y2) < 1e-12);
        CHECK(fast.sel1.indices == slow.sel1.indices);
        CHECK(fast.sel2.indices == slow.sel2.indices);
    }
}

TEST_CASE("hard_exchange: deterministic across repeated calls") {
    SeededRng rng(108, 0);
    ExchangeWeights w1 = random_weights<double>(4, 8, rng);
    ExchangeWeights w2 = random_weights<double>(4, 8, rng);
    FeatureMap x1 = random_tensor<double>(4, 3, 3, rng);
    FeatureMap x2 = random_tensor<double>(4, 3, 3, rng);
    ExchangeConfig cfg;
    auto a = hard_exchange(x1, x2, cfg, w1, w2);
    auto b = hard_exchange(x1, x2, cfg, w1, w2);
    CHECK(a.y1.data == b.y1.data);
    CHECK(a.y2.data == b.y2.data);
}

TEST_CASE("apply_exchange: pass-through on a shared forced mask") {
    SeededRng rng(109, 0);
    FeatureMap x1 = random_tensor<double>(5, 2, 3, rng);
    FeatureMap x2 = random_tensor<double>(5, 2, 3, rng);
    ExchangeWeights w1 = random_weights<double>(5, 4, rng);
    ExchangeWeights w2 = random_weights<double>(5, 4, rng);
    std::vector<uint8_t> e = {1, 0, 1, 0, 0};
    auto out = apply_exchange(x1, x2, e, e, /*spatial=*/false, /*adapter_enabled=*/false, w1, w2);
    for (int c = 0; c < 5; ++c)
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 3; ++x) {
                CHECK(out.y1.at(c, y, x) == (e[c] ? x2.at(c, y, x) : x1.at(c, y, x)));
                CHECK(out.y2.at(c, y, x) == (e[c] ? x1.at(c, y, x) : x2.at(c, y, x)));
            }
}

TEST_CASE("spatial_exchange: empty and full masks") {
    SeededRng rng(110, 0);
    FeatureMap x1 = random_tensor<double>(3, 1, 1, rng);
    FeatureMap x2 = random_tensor<double>(3, 1, 1, rng);
    ExchangeWeights w1 = random_weights<double>(3, 4, rng);
    ExchangeWeights w2 = random_weights<double>(3, 4, rng);

    // floor(1 * 1 * 0.25) = 0 positions: nothing moves
    ExchangeConfig cfg;
    cfg.p = 0.25;
    cfg.adapter_enabled = false;
    auto none = spatial_exchange(x1, x2, cfg, w1, w2);
    CHECK(none.sel1.k == 0);
    CHECK(max_abs_diff(none.y1, x1) == 0.0);
    CHECK(max_abs_diff(none.y2, x2) == 0.0);

    // forced full position mask: a complete swap
    FeatureMap a = random_tensor<double>(3, 2, 2, rng);
    FeatureMap b = random_tensor<double>(3, 2, 2, rng);
    std::vector<uint8_t> full(4, 1);
    auto swapped = apply_exchange(a, b, full, full, /*spatial=*/true, false, w1, w2);
    CHECK(max_abs_diff(swapped.y1, b) == 0.0);
    CHECK(max_abs_diff(swapped.y2, a) == 0.0);
}

TEST_CASE("spatial_exchange: equals the brute-force reference") {
    SeededRng rng(111, 0);
    ExchangeConfig cfg;
    cfg.mechanism = Mechanism::kSpatial;
    for (int trial = 0; trial < 10; ++trial) {
        ExchangeWeights w1 = random_weights<double>(2, 4, rng);
        ExchangeWeights w2 = random_weights<double>(2, 4, rng);
        FeatureMap x1 = random_tensor<double>(2, 2, 2, rng);
        FeatureMap x2 = random_tensor<double>(2, 2, 2, rng);
        auto fast = spatial_exchange(x1, x2, cfg, w1, w2);
        auto slow = ref::run_exchange(x1, x2, cfg, w1, w2);
        CHECK(max_abs_diff(fast.y1, slow.y1) < 1e-12);
        CHECK(max_abs_diff(fast.y2, slow.y2) < 1e-12);
    }

    // randomized position selection consumes the stream identically
    cfg.selection = SelectionMode::kRandom;
    ExchangeWeights w1 = random_weights<double>(3, 4, rng);
    ExchangeWeights w2 = random_weights<double>(3, 4, rng);
    FeatureMap x1 = random_tensor<double>(3, 4, 4, rng);
    FeatureMap x2 = random_tensor<double>(3, 4, 4, rng);
    SeededRng ra(60, 2), rb(60, 2);
    auto fast = spatial_exchange(x1, x2, cfg, w1, w2, &ra);
    auto slow = ref::run_exchange(x1, x2, cfg, w1, w2, &rb);
    CHECK(fast.sel1.indices == slow.sel1.indices);
    CHECK(static_cast<int>(fast.sel1.indices.size()) == 8);  // floor(16 * 0.5)
    CHECK(max_abs_diff(fast.y1, slow.y1) < 1e-12);
}

TEST_CASE("run_exchange: composed mechanisms match the reference") {
    SeededRng rng(112, 0);
    for (Mechanism mech : {Mechanism::kChannelThenSpatial, Mechanism::kSpatialThenChannel}) {
        ExchangeConfig cfg;
        cfg.mechanism = mech;
        ExchangeWeights w1 = random_weights<double>(4, 8, rng);
        ExchangeWeights w2 = random_weights<double>(4, 8, rng);
        FeatureMap x1 = random_tensor<double>(4, 4, 2, rng);
        FeatureMap x2 = random_tensor<double>(4, 4, 2, rng);
        auto fast = run_exchange(x1, x2, cfg, w1, w2);
        auto slow = ref::run_exchange(x1, x2, cfg, w1, w2);
        CHECK(max_abs_diff(fast.y1, slow.y1) < 1e-12);
        CHECK(max_abs_diff(fast.y2, slow.y2) < 1e-12);
    }
}

TEST_CASE("selection modes: fixed indices and seeded random agree with the reference") {
    SeededRng rng(113, 0);
    ExchangeWeights w1 = random_weights<double>(8, 8, rng);
    ExchangeWeights w2 = random_weights<double>(8, 8, rng);
    FeatureMap x1 = random_tensor<double>(8, 2, 2, rng);
    FeatureMap x2 = random_tensor<double>(8, 2, 2, rng);

    ExchangeConfig cfg;
    cfg.selection = SelectionMode::kFixed;
    auto fixed = hard_exchange(x1, x2, cfg, w1, w2);
    CHECK(fixed.sel1.indices == std::vector<int>{0, 1, 2, 3});

    cfg.selection = SelectionMode::kRandom;
    CHECK_THROWS_AS(hard_exchange(x1, x2, cfg, w1, w2), ParamError);  // rng required
    SeededRng ra(50, 1), rb(50, 1);
    auto fast = hard_exchange(x1, x2, cfg, w1, w2, &ra);
    auto slow = ref::run_exchange(x1, x2, cfg, w1, w2, &rb);
    CHECK(fast.sel1.indices == slow.sel1.indices);
    CHECK(fast.sel2.indices == slow.sel2.indices);
    CHECK(max_abs_diff(fast.y1, slow.y1) < 1e-12);
    CHECK(static_cast<int>(fast.sel1.indices.size()) == 4);
}

TEST_CASE("full exchange is equivariant to channel permutations") {
    SeededRng rng(114, 0);
    for (int trial = 0; trial < 10; ++trial) {
        int c = static_cast<int>(rng.uniform_int(2, 10));
        ExchangeWeights w1 = random_weights<double>(c, 6, rng);
        ExchangeWeights w2 = random_weights<double>(c, 6, rng);
        FeatureMap x1 = random_tensor<double>(c, 2, 2, rng);
        FeatureMap x2 = random_tensor<double>(c, 2, 2, rng);
        std::vector<int> perm = random_permutation(c, rng);
        ExchangeConfig cfg;
        if (static_cast<int>(std::floor(c * cfg.p)) == 0) continue;

        auto base = hard_exchange(x1, x2, cfg, w1, w2);
        if (base.sel1.near_tie || base.sel2.near_tie) continue;
        auto conj = hard_exchange(permute_channels(x1, perm), permute_channels(x2, perm), cfg,
                                  permute_weights(w1, perm), permute_weights(w2, perm));

        std::vector<uint8_t> expect_mask(c);
        for (int i = 0; i < c; ++i) expect_mask[perm[i]] = base.sel1.mask[i];
        CHECK(conj.sel1.mask == expect_mask);
        CHECK(max_abs_diff(conj.y1, permute_channels(base.y1, perm)) < 1e-12);
        CHECK(max_abs_diff(conj.y2, permute_channels(base.y2, perm)) < 1e-12);
    }
}

TEST_CASE("float32 forward path stays close to the double reference") {
    SeededRng rng(115, 0);
    ExchangeWeightsT<float> w1f, w2f;
    ExchangeWeights w1 = random_weights<double>(4, 8, rng);
    ExchangeWeights w2 = random_weights<double>(4, 8, rng);
    auto narrow = [](const ExchangeWeights& src) {
        ExchangeWeightsT<float> dst;
        dst.attention = AttentionParamsT<float>(src.attention.channels);
        dst.attention.gate_kernel.assign(src.attention.gate_kernel.begin(),
                                         src.attention.gate_kernel.end());
        dst.attention.gate_bias = static_cast<float>(src.attention.gate_bias);
        dst.attention.local_kernel.assign(src.attention.local_kernel.begin(),
                                          src.attention.local_kernel.end());
        dst.attention.local_bias.assign(src.attention.local_bias.begin(),
                                        src.attention.local_bias.end());
        dst.adapter = AdapterWeightsT<float>(src.adapter.channels, src.adapter.hidden);
        dst.adapter.w1.assign(src.adapter.w1.begin(), src.adapter.w1.end());
        dst.adapter.b1.assign(src.adapter.b1.begin(), src.adapter.b1.end());
        dst.adapter.w2.assign(src.adapter.w2.begin(), src.adapter.w2.end());
        dst.adapter.b2.assign(src.adapter.b2.begin(), src.adapter.b2.end());
        return dst;
    };
    w1f = narrow(w1);
    w2f = narrow(w2);
    FeatureMap x1 = random_tensor<double>(4, 3, 3, rng);
    FeatureMap x2 = random_tensor<double>(4, 3, 3, rng);
    FeatureMap32 x1f(4, 3, 3), x2f(4, 3, 3);
    x1f.data.assign(x1.data.begin(), x1.data.end());
    x2f.data.assign(x2.data.begin(), x2.data.end());

    ExchangeConfig cfg;
    cfg.selection = SelectionMode::kFixed;  // keep both precisions on one mask
    auto yd = hard_exchange(x1, x2, cfg, w1, w2);
    auto yf = hard_exchange(x1f, x2f, cfg, w1f, w2f);
    for (size_t i = 0; i < yd.y1.data.size(); ++i) {
        CHECK(std::abs(yd.y1.data[i] - yf.y1.data[i]) < 1e-4);
        CHECK(std::abs(yd.y2.data[i] - yf.y2.data[i]) < 1e-4);
    }
}

TEST_CASE("exchange rejects malformed inputs") {
    SeededRng rng(116, 0);
    ExchangeWeights w = random_weights<double>(4, 8, rng);
    FeatureMap x = random_tensor<double>(4, 2, 2, rng);
    FeatureMap other(4, 3, 2);
    ExchangeConfig cfg;
    CHECK_THROWS_AS(hard_exchange(x, other, cfg, w, w), ParamError);

    FeatureMap bad = x;
    bad.data[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(hard_exchange(bad, x, cfg, w, w), ParamError);

    ExchangeWeights small = random_weights<double>(3, 8, rng);
    CHECK_THROWS_AS(hard_exchange(x, x, cfg, small, small), ParamError);
}

TEST_CASE("weights: little-endian round-trip with sidecar") {
    fs::path dir = fs::temp_directory_path() / "irforge_weights";
    fs::remove_all(dir);
    fs::create_directories(dir);
    SeededRng rng(117, 0);
    ExchangeWeights w = random_weights<double>(6, 16, rng);
    std::string path = (dir / "weights.bin").string();
    save_weights(path, w);
    ExchangeWeights back = load_weights(path);
    CHECK(back.attention.gate_kernel == w.attention.gate_kernel);
    CHECK(back.attention.gate_bias == w.attention.gate_bias);
    CHECK(back.attention.local_kernel == w.attention.local_kernel);
    CHECK(back.attention.local_bias == w.attention.local_bias);
    CHECK(back.adapter.w1 == w.adapter.w1);
    CHECK(back.adapter.b1 == w.adapter.b1);
    CHECK(back.adapter.w2 == w.adapter.w2);
    CHECK(back.adapter.b2 == w.adapter.b2);

    // truncated payload must fail loudly
    std::error_code ec;
    fs::resize_file(path, 64, ec);
    REQUIRE(!ec);
    CHECK_THROWS_AS(load_weights(path), IoError);
}
