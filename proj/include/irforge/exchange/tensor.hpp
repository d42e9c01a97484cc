#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "irforge/errors.hpp"
#include "irforge/rng.hpp"

namespace irforge::exchange {

// Dense C x H x W tensor, channel-major. double for checked numerics,
// float available as the fast runtime variant.
template <typename T>
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Tensor3() = default;
    Tensor3(int c, int h, int w, T fill = T(0)) : channels(c), height(h), width(w) {
        if (c < 1 || h < 1 || w < 1) throw ParamError("tensor dims must be >= 1");
        data.assign(static_cast<size_t>(c) * h * w, fill);
    }

    size_t index(int c, int y, int x) const {
        return (static_cast<size_t>(c) * height + y) * width + x;
    }
    T& at(int c, int y, int x) { return data[index(c, y, x)]; }
    T at(int c, int y, int x) const { return data[index(c, y, x)]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

using FeatureMap = Tensor3<double>;
using FeatureMap32 = Tensor3<float>;

template <typename T>
void require_finite(const Tensor3<T>& t, const char* what) {
    for (T v : t.data)
        if (!std::isfinite(v)) throw ParamError(std::string(what) + ": non-finite entry");
}

template <typename T>
Tensor3<T> random_tensor(int c, int h, int w, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor3<T> t(c, h, w);
    for (auto& v : t.data) v = static_cast<T>(rng.uniform_real(lo, hi));
    return t;
}

template <typename T>
double max_abs_diff(const Tensor3<T>& a, const Tensor3<T>& b) {
    if (!a.same_shape(b)) throw ParamError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

}  // namespace irforge::exchange
