#pragma once

#include <utility>
#include <vector>

#include "irforge/annotation.hpp"
#include "irforge/compose/cluster.hpp"

namespace irforge::compose {

// A chip pixel joins the target mask once the intensity it adds reaches
// this many levels out of 255; dimmer Gaussian tails stay background.
inline constexpr double kMaskThreshold = 5.0;

struct SceneOptions {
    ClusterSpec cluster;
    synth::GaussianParamRanges gauss;
    bool sky_only = true;
    double mask_threshold = kMaskThreshold;
};

// Paste clustered targets from the library into sky regions of base.
// The returned image differs from base only inside placement boxes; the
// annotation carries one box, one peak point, and the thresholded mask
// pixels per placement. Throws SkyTooSmallError / ClusterPackingError.
std::pair<GrayImage, Annotation> compose_scene(const GrayImage& base, const SkyMask& mask,
                                               const synth::ChipLibrary& library,
                                               const SceneOptions& opt, SeededRng& rng);

// Training-time augmentation: same pasting pipeline applied on top of an
// already annotated image. Frames without a feasible sky window come
// back unchanged instead of failing.
std::pair<GrayImage, Annotation> bag_cp_augment(const GrayImage& img, const SkyMask& mask,
                                                const Annotation& ann,
                                                const synth::ChipLibrary& library,
                                                const SceneOptions& opt, SeededRng& rng);

}  // namespace irforge::compose
