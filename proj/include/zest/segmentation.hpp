#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "zest/image.hpp"

namespace zest {

// Region ids are 1..region_count and every id is used by at least one pixel.
struct LabelMap {
    int width = 0;
    int height = 0;
    int region_count = 0;
    std::vector<int> labels;

    int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
};

struct RegionInfo {
    int id = 0;
    int centroid_x = 0;  // pixel whose label equals id (nearest interior to the mean)
    int centroid_y = 0;
    std::uint64_t pixel_count = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

struct RegionRegistry {
    std::vector<RegionInfo> regions;  // index id-1

    const RegionInfo& by_id(int id) const { return regions[static_cast<std::size_t>(id) - 1]; }
};

struct Lab {
    double l, a, b;
};

Lab rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// SLIC superpixels: localized 5D k-means over (Lab, x, y) with grid-seeded
// centers, followed by 4-connectivity enforcement and compact relabeling.
// Deterministic for fixed inputs.
LabelMap slic(const Image& image, int k, double compactness = 10.0, int iters = 10);

RegionRegistry build_registry(const LabelMap& labels);

// Draws each region id at its interior centroid; returns the annotated image
// and the registry used for placement.
std::pair<Image, RegionRegistry> number_masks(const LabelMap& labels, const Image& image);

}  // namespace zest
