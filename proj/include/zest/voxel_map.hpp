#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "zest/nig.hpp"
#include "zest/risk.hpp"

namespace zest {

struct VoxelKey {
    int ix;
    int iy;
    int iz;

    bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        const std::uint64_t h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.ix)) *
                                    0x9e3779b97f4a7c15ULL ^
                                static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.iy)) *
                                    0xc2b2ae3d27d4eb4fULL ^
                                static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.iz)) *
                                    0x165667b19e3779f9ULL;
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

// Sparse voxel map: absent keys behave as prior-only cells.
class VoxelMap {
  public:
    using CellTable = std::unordered_map<VoxelKey, CellState, VoxelKeyHash>;

    VoxelMap(double resolution, std::array<double, 3> origin, NigPrior prior);

    double resolution() const { return resolution_; }
    const std::array<double, 3>& origin() const { return origin_; }
    const NigPrior& prior() const { return prior_; }
    std::uint64_t revision() const { return revision_; }
    std::uint64_t clamped_samples() const { return clamped_; }

    VoxelKey key_at(double x, double y, double z) const;
    std::array<double, 3> center_of(const VoxelKey& key) const;

    CellState cell(const VoxelKey& key) const;
    bool observed(const VoxelKey& key) const { return cells_.contains(key); }
    const CellTable& cells() const { return cells_; }

    // Applies the whole batch and bumps the revision once; out-of-range
    // samples are clamped to [0,1] and tallied in clamped_samples().
    void insert_observations(const std::vector<std::pair<VoxelKey, double>>& obs);

    // Restore-path mutators used by the snapshot importer.
    void restore_cell(const VoxelKey& key, CellState cell) { cells_[key] = std::move(cell); }
    void set_revision(std::uint64_t revision) { revision_ = revision; }

  private:
    double resolution_;
    std::array<double, 3> origin_;
    NigPrior prior_;
    CellTable cells_;
    std::uint64_t revision_ = 0;
    std::uint64_t clamped_ = 0;
};

struct RiskCell {
    double cvar;
    std::uint64_t count;
    bool observed;
};

// Dense window over the observed footprint; queries outside fall back to the
// prior cell so planners can treat the grid as unbounded.
class RiskGrid {
  public:
    RiskGrid(double resolution, double origin_x, double origin_y, int ix0, int iy0, int nx,
             int ny, RiskCell prior_cell, std::uint64_t revision);

    double resolution() const { return resolution_; }
    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }
    std::uint64_t revision() const { return revision_; }
    const RiskCell& prior_cell() const { return prior_cell_; }

    const RiskCell& at_index(int ix, int iy) const;
    const RiskCell& at_world(double x, double y) const;
    std::pair<int, int> index_at(double x, double y) const;

    void set_index(int ix, int iy, RiskCell cell);

    int ix0() const { return ix0_; }
    int iy0() const { return iy0_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }

  private:
    double resolution_;
    double origin_x_;
    double origin_y_;
    int ix0_;
    int iy0_;
    int nx_;
    int ny_;
    RiskCell prior_cell_;
    std::uint64_t revision_;
    std::vector<RiskCell> cells_;
};

// Worst-case pillar compression: per (ix, iy), cvar = min CVaR and
// count = min n over observed voxels with center z inside [z_min, z_max].
RiskGrid compress_pillars(const VoxelMap& map, const RiskEvaluator& risk, double level,
                          double z_min, double z_max);

// Single-writer map holder handing out immutable snapshots by revision.
class MapStore {
  public:
    explicit MapStore(VoxelMap initial);

    std::shared_ptr<const VoxelMap> snapshot() const;
    void insert_observations(const std::vector<std::pair<VoxelKey, double>>& obs);

  private:
    mutable std::mutex mutex_;
    std::shared_ptr<const VoxelMap> current_;
};

}  // namespace zest
