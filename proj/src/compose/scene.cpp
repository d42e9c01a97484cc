#include "irforge/compose/scene.hpp"

#include <algorithm>

namespace irforge::compose {

namespace {

struct PasteResult {
    std::vector<Placement> placements;
    GrayImage image;
    Annotation annotation;
};

PasteResult paste_clusters(const GrayImage& base, const SkyMask& mask,
                           const synth::ChipLibrary& library, const SceneOptions& opt,
                           SeededRng& rng) {
    std::vector<BBox> areas = select_dense_areas(mask, opt.cluster, rng, opt.sky_only);

    PasteResult res;
    for (const BBox& area : areas) {
        auto cluster = place_cluster(area, library.size(), opt.cluster, rng, opt.gauss);
        res.placements.insert(res.placements.end(), cluster.begin(), cluster.end());
    }

    res.image = base;
    res.annotation.mask = SkyMask(base.width, base.height, 0);
    for (const Placement& p : res.placements) {
        int w = p.box.width(), h = p.box.height();
        synth::TargetChip chip = synth::resize_chip(library.chip(p.chip_index), w, h);

        std::vector<double> window(static_cast<size_t>(w) * h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                window[static_cast<size_t>(y) * w + x] = base.at(p.box.x_min + x, p.box.y_min + y);

        std::vector<double> blended = synth::paste_target(window, chip, p.params);

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                res.image.at(p.box.x_min + x, p.box.y_min + y) = quantize_intensity(blended[i]);
                if (blended[i] - window[i] >= opt.mask_threshold)
                    res.annotation.mask.at(p.box.x_min + x, p.box.y_min + y) = 1;
            }
        }

        res.annotation.boxes.push_back(p.box);
        auto [cx, cy] = synth::gaussian_center(w, h, p.params);
        res.annotation.points.push_back({p.box.x_min + cx, p.box.y_min + cy});
    }
    return res;
}

}  // namespace

std::pair<GrayImage, Annotation> compose_scene(const GrayImage& base, const SkyMask& mask,
                                               const synth::ChipLibrary& library,
                                               const SceneOptions& opt, SeededRng& rng) {
    if (base.width != mask.width || base.height != mask.height)
        throw ParamError("base image and sky mask dims differ");
    if (opt.cluster.clusters_max == 0) {
        Annotation empty;
        empty.mask = SkyMask(base.width, base.height, 0);
        return {base, empty};
    }
    PasteResult res = paste_clusters(base, mask, library, opt, rng);
    return {std::move(res.image), std::move(res.annotation)};
}

std::pair<GrayImage, Annotation> bag_cp_augment(const GrayImage& img, const SkyMask& mask,
                                                const Annotation& ann,
                                                const synth::ChipLibrary& library,
                                                const SceneOptions& opt, SeededRng& rng) {
    if (img.width != mask.width || img.height != mask.height)
        throw ParamError("image and sky mask dims differ");

    PasteResult res;
    try {
        res = paste_clusters(img, mask, library, opt, rng);
    } catch (const SkyTooSmallError&) {
        return {img, ann};
    }

    Annotation merged = ann;
    if (merged.mask.width == 0)
        merged.mask = SkyMask(img.width, img.height, 0);
    else if (merged.mask.width != img.width || merged.mask.height != img.height)
        throw ParamError("annotation mask dims do not match the image");
    merged.boxes.insert(merged.boxes.end(), res.annotation.boxes.begin(),
                        res.annotation.boxes.end());
    merged.points.insert(merged.points.end(), res.annotation.points.begin(),
                         res.annotation.points.end());
    for (size_t i = 0; i < merged.mask.bits.size(); ++i)
        merged.mask.bits[i] = merged.mask.bits[i] | res.annotation.mask.bits[i];
    return {std::move(res.image), std::move(merged)};
}

}  // namespace irforge::compose
