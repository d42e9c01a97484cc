#pragma once

#include <vector>

#include "irforge/box.hpp"
#include "irforge/image.hpp"
#include "irforge/rng.hpp"
#include "irforge/synth/chip.hpp"
#include "irforge/synth/gaussian.hpp"

namespace irforge::compose {

// Layout constraints for dense areas and the clusters inside them.
struct ClusterSpec {
    int region_size = 20;
    int clusters_min = 1;
    int clusters_max = 3;
    int targets_min = 8;
    int targets_max = 12;
    int chip_min = 1;
    int chip_max = 5;
    int spacing_min = 1;
    int spacing_max = 2;
};

void validate(const ClusterSpec& spec);

// One pasted target: which library chip, where it lands in the scene,
// and the weight-field parameters used to blend it.
struct Placement {
    size_t chip_index = 0;
    BBox box;
    synth::GaussianParams params;
};

// Pick clusters_min..clusters_max all-sky region_size x region_size
// boxes, uniformly over the feasible positions, keeping at least
// spacing_min between areas. When sky_only is false the whole frame
// counts as feasible. Throws SkyTooSmallError when no feasible square
// exists.
std::vector<BBox> select_dense_areas(const SkyMask& mask, const ClusterSpec& spec, SeededRng& rng,
                                     bool sky_only = true);

// Pack targets_min..targets_max chip boxes into one region. Every pair
// keeps a border gap >= spacing_min and each box has some neighbor at a
// gap <= spacing_max. Rejection-sampled with a bounded attempt budget;
// if the budget runs out, the largest packed subset is returned when it
// still reaches targets_min, otherwise ClusterPackingError is thrown.
std::vector<Placement> place_cluster(const BBox& region, size_t library_size,
                                     const ClusterSpec& spec, SeededRng& rng,
                                     const synth::GaussianParamRanges& ranges = {});

}  // namespace irforge::compose
