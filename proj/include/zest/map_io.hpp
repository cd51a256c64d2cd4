#pragma once

#include <string>

#include "zest/voxel_map.hpp"

namespace zest {

// JSON snapshot of a voxel map. Cells are sorted by key so the output is
// deterministic; doubles use round-trip-exact decimal form. Re-importing and
// re-exporting yields byte-identical text.
std::string map_to_json(const VoxelMap& map);
VoxelMap map_from_json(const std::string& text);

void save_map(const VoxelMap& map, const std::string& path);
VoxelMap load_map(const std::string& path);

}  // namespace zest
