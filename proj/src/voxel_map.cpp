#include "zest/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zest/errors.hpp"

namespace zest {

VoxelMap::VoxelMap(double resolution, std::array<double, 3> origin, NigPrior prior)
    : resolution_(resolution), origin_(origin), prior_(prior) {
    if (!(resolution_ > 0.0)) throw ValidationError("VoxelMap: resolution must be positive");
    static_cast<void>(NigState(prior_));  // validates the NIG prior
    if (!(prior_.alpha0 > 0.0 && prior_.beta0 > 0.0)) {
        throw ValidationError("VoxelMap: prior alpha0, beta0 must be positive");
    }
}

VoxelKey VoxelMap::key_at(double x, double y, double z) const {
    return VoxelKey{static_cast<int>(std::floor((x - origin_[0]) / resolution_)),
                    static_cast<int>(std::floor((y - origin_[1]) / resolution_)),
                    static_cast<int>(std::floor((z - origin_[2]) / resolution_))};
}

std::array<double, 3> VoxelMap::center_of(const VoxelKey& key) const {
    return {origin_[0] + (key.ix + 0.5) * resolution_, origin_[1] + (key.iy + 0.5) * resolution_,
            origin_[2] + (key.iz + 0.5) * resolution_};
}

CellState VoxelMap::cell(const VoxelKey& key) const {
    auto it = cells_.find(key);
    if (it != cells_.end()) return it->second;
    return CellState{NigState(prior_), prior_.alpha0, prior_.beta0};
}

void VoxelMap::insert_observations(const std::vector<std::pair<VoxelKey, double>>& obs) {
    if (obs.empty()) return;
    for (const auto& [key, sample] : obs) {
        double x = sample;
        if (x < 0.0 || x > 1.0) {
            x = std::clamp(x, 0.0, 1.0);
            ++clamped_;
        }
        auto [it, inserted] = cells_.try_emplace(
            key, CellState{NigState(prior_), prior_.alpha0, prior_.beta0});
        it->second.nig.fold(x);
        it->second.alpha += 1.0;
    }
    ++revision_;
}

RiskGrid::RiskGrid(double resolution, double origin_x, double origin_y, int ix0, int iy0, int nx,
                   int ny, RiskCell prior_cell, std::uint64_t revision)
    : resolution_(resolution),
      origin_x_(origin_x),
      origin_y_(origin_y),
      ix0_(ix0),
      iy0_(iy0),
      nx_(nx),
      ny_(ny),
      prior_cell_(prior_cell),
      revision_(revision) {
    if (!(resolution_ > 0.0)) throw ValidationError("RiskGrid: resolution must be positive");
    if (nx_ < 0 || ny_ < 0) throw ValidationError("RiskGrid: negative extent");
    cells_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), prior_cell_);
}

const RiskCell& RiskGrid::at_index(int ix, int iy) const {
    const int cx = ix - ix0_;
    const int cy = iy - iy0_;
    if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return prior_cell_;
    return cells_[static_cast<std::size_t>(cy) * nx_ + cx];
}

const RiskCell& RiskGrid::at_world(double x, double y) const {
    const auto [ix, iy] = index_at(x, y);
    return at_index(ix, iy);
}

std::pair<int, int> RiskGrid::index_at(double x, double y) const {
    return {static_cast<int>(std::floor((x - origin_x_) / resolution_)),
            static_cast<int>(std::floor((y - origin_y_) / resolution_))};
}

void RiskGrid::set_index(int ix, int iy, RiskCell cell) {
    const int cx = ix - ix0_;
    const int cy = iy - iy0_;
    if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) {
        throw ValidationError("RiskGrid: set_index out of bounds");
    }
    cells_[static_cast<std::size_t>(cy) * nx_ + cx] = cell;
}

RiskGrid compress_pillars(const VoxelMap& map, const RiskEvaluator& risk, double level,
                          double z_min, double z_max) {
    if (!(z_min < z_max)) throw ValidationError("compress_pillars: need z_min < z_max");

    const NigState prior_state{map.prior()};
    const RiskCell prior_cell{risk.cvar_for_cell(prior_state, level), 0, false};

    int min_ix = std::numeric_limits<int>::max(), max_ix = std::numeric_limits<int>::min();
    int min_iy = std::numeric_limits<int>::max(), max_iy = std::numeric_limits<int>::min();
    bool any = false;
    for (const auto& [key, cell] : map.cells()) {
        const double z = map.center_of(key)[2];
        if (z < z_min || z > z_max) continue;
        any = true;
        min_ix = std::min(min_ix, key.ix);
        max_ix = std::max(max_ix, key.ix);
        min_iy = std::min(min_iy, key.iy);
        max_iy = std::max(max_iy, key.iy);
    }
    if (!any) {
        return RiskGrid(map.resolution(), map.origin()[0], map.origin()[1], 0, 0, 0, 0,
                        prior_cell, map.revision());
    }

    RiskGrid grid(map.resolution(), map.origin()[0], map.origin()[1], min_ix, min_iy,
                  max_ix - min_ix + 1, max_iy - min_iy + 1, prior_cell, map.revision());
    for (const auto& [key, cell] : map.cells()) {
        const double z = map.center_of(key)[2];
        if (z < z_min || z > z_max) continue;
        const double cvar = risk.cvar_for_cell(cell.nig, level);
        const RiskCell& prev = grid.at_index(key.ix, key.iy);
        RiskCell next = prev;
        if (!prev.observed) {
            next = RiskCell{cvar, cell.nig.n(), true};
        } else {
            next.cvar = std::min(prev.cvar, cvar);
            next.count = std::min(prev.count, cell.nig.n());
        }
        grid.set_index(key.ix, key.iy, next);
    }
    return grid;
}

MapStore::MapStore(VoxelMap initial)
    : current_(std::make_shared<const VoxelMap>(std::move(initial))) {}

std::shared_ptr<const VoxelMap> MapStore::snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
}

void MapStore::insert_observations(const std::vector<std::pair<VoxelKey, double>>& obs) {
    if (obs.empty()) return;
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<VoxelMap>(*current_);
    next->insert_observations(obs);
    current_ = std::move(next);
}

}  // namespace zest
