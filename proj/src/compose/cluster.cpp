#include "irforge/compose/cluster.hpp"

#include <algorithm>
#include <cstdint>

namespace irforge::compose {

void validate(const ClusterSpec& spec) {
    if (spec.clusters_min < 0 || spec.clusters_min > spec.clusters_max)
        throw ParamError("cluster counts must satisfy 0 <= min <= max");
    if (spec.targets_min < 1 || spec.targets_min > spec.targets_max)
        throw ParamError("target counts must satisfy 1 <= min <= max");
    if (spec.chip_min < 1 || spec.chip_min > spec.chip_max ||
        spec.chip_max > synth::kChipDimCap)
        throw ParamError("chip dims must satisfy 1 <= min <= max <= " +
                         std::to_string(synth::kChipDimCap));
    if (spec.spacing_min < 1 || spec.spacing_min > spec.spacing_max)
        throw ParamError("spacing must satisfy 1 <= min <= max");
    if (spec.region_size < spec.chip_max + spec.spacing_max)
        throw ParamError("region_size must be >= chip_max + spacing_max");
}

std::vector<BBox> select_dense_areas(const SkyMask& mask, const ClusterSpec& spec, SeededRng& rng,
                                     bool sky_only) {
    validate(spec);
    if (spec.clusters_max == 0) return {};
    int r = spec.region_size;
    if (mask.width < r || mask.height < r)
        throw SkyTooSmallError("frame smaller than one dense area");

    // Summed-area table over the mask makes the all-sky window test O(1).
    int w = mask.width, h = mask.height;
    std::vector<int64_t> sat(static_cast<size_t>(w + 1) * (h + 1), 0);
    auto sat_at = [&](int x, int y) -> int64_t& {
        return sat[static_cast<size_t>(y) * (w + 1) + x];
    };
    for (int y = 1; y <= h; ++y)
        for (int x = 1; x <= w; ++x)
            sat_at(x, y) = (sky_only ? mask.at(x - 1, y - 1) : 1) + sat_at(x - 1, y) +
                           sat_at(x, y - 1) - sat_at(x - 1, y - 1);

    std::vector<std::pair<int, int>> candidates;
    int64_t full = static_cast<int64_t>(r) * r;
    for (int y = 0; y + r <= h; ++y)
        for (int x = 0; x + r <= w; ++x) {
            int64_t sum = sat_at(x + r, y + r) - sat_at(x, y + r) - sat_at(x + r, y) + sat_at(x, y);
            if (sum == full) candidates.emplace_back(x, y);
        }
    if (candidates.empty())
        throw SkyTooSmallError("no all-sky " + std::to_string(r) + "x" + std::to_string(r) +
                               " window");

    int want = static_cast<int>(rng.uniform_int(spec.clusters_min, spec.clusters_max));
    std::vector<BBox> areas;
    constexpr int kMaxDraws = 1000;
    int draws = 0;
    while (static_cast<int>(areas.size()) < want && draws < kMaxDraws) {
        ++draws;
        auto [x, y] = candidates[rng.uniform_below(candidates.size())];
        BBox b(x, y, x + r, y + r);
        // areas keep at least spacing_min between them, so boxes from
        // different clusters inherit the same minimum gap as boxes
        // within one cluster
        bool ok = std::all_of(areas.begin(), areas.end(), [&](const BBox& a) {
            return border_gap(a, b) >= spec.spacing_min;
        });
        if (ok) areas.push_back(b);
    }
    return areas;
}

namespace {

bool respects_spacing(const BBox& candidate, const std::vector<Placement>& placed,
                      const ClusterSpec& spec) {
    bool has_close_neighbor = placed.empty();
    for (const Placement& p : placed) {
        int gap = border_gap(candidate, p.box);
        if (gap < spec.spacing_min) return false;
        if (gap <= spec.spacing_max) has_close_neighbor = true;
    }
    return has_close_neighbor;
}

}  // namespace

std::vector<Placement> place_cluster(const BBox& region, size_t library_size,
                                     const ClusterSpec& spec, SeededRng& rng,
                                     const synth::GaussianParamRanges& ranges) {
    validate(spec);
    if (library_size == 0) throw ParamError("empty chip library");
    if (region.width() != spec.region_size || region.height() != spec.region_size)
        throw ParamError("region does not match spec.region_size");

    int want = static_cast<int>(rng.uniform_int(spec.targets_min, spec.targets_max));

    constexpr int kMaxRestarts = 1000;
    constexpr int kDrawsPerBox = 64;
    std::vector<Placement> best;
    for (int restart = 0; restart < kMaxRestarts; ++restart) {
        std::vector<Placement> placed;
        placed.reserve(want);
        while (static_cast<int>(placed.size()) < want) {
            Placement p;
            p.chip_index = rng.uniform_below(library_size);
            int cw = static_cast<int>(rng.uniform_int(spec.chip_min, spec.chip_max));
            int ch = static_cast<int>(rng.uniform_int(spec.chip_min, spec.chip_max));
            bool ok = false;
            for (int attempt = 0; attempt < kDrawsPerBox; ++attempt) {
                int x = static_cast<int>(rng.uniform_int(region.x_min, region.x_max - cw));
                int y = static_cast<int>(rng.uniform_int(region.y_min, region.y_max - ch));
                BBox b(x, y, x + cw, y + ch);
                if (respects_spacing(b, placed, spec)) {
                    p.box = b;
                    ok = true;
                    break;
                }
            }
            if (!ok) break;
            p.params = synth::sample_params(rng, ranges);
            placed.push_back(p);
        }
        if (static_cast<int>(placed.size()) == want) return placed;
        if (placed.size() > best.size()) best = std::move(placed);
    }

    if (static_cast<int>(best.size()) >= spec.targets_min) return best;
    throw ClusterPackingError("packed only " + std::to_string(best.size()) + " of the required " +
                              std::to_string(spec.targets_min) + " targets");
}

}  // namespace irforge::compose
