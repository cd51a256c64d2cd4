#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "zest/pose.hpp"

namespace zest {

struct TerrainClass {
    std::string name;
    double m = 0.5;      // ground-truth mean traversability
    double sigma = 0.0;  // ground-truth sample std
    std::array<std::uint8_t, 3> color{128, 128, 128};
};

// 2D synthetic world: a grid of terrain class ids with per-class ground-truth
// traversability distributions. Loaded from a JSON file with a character
// legend; row 0 of the file is the northernmost (max y) row.
class World {
  public:
    static World from_json(const std::string& text);
    static World load(const std::string& path);

    const std::string& name() const { return name_; }
    double width() const { return cols_ * cell_size_; }
    double height() const { return rows_ * cell_size_; }
    double cell_size() const { return cell_size_; }
    int cols() const { return cols_; }
    int rows() const { return rows_; }

    bool inside(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && x < width() && y < height();
    }
    // -1 outside the extents.
    int class_at(double x, double y) const;
    const TerrainClass& terrain(int class_id) const { return classes_[class_id]; }
    int class_count() const { return static_cast<int>(classes_.size()); }

    const PoseSE2& start() const { return start_; }
    const std::array<double, 2>& goal() const { return goal_; }
    double goal_tolerance() const { return goal_tolerance_; }
    std::uint64_t seed() const { return seed_; }

  private:
    std::string name_;
    double cell_size_ = 0.25;
    int cols_ = 0;
    int rows_ = 0;
    std::vector<int> grid_;  // row-major, row 0 = southernmost (min y)
    std::vector<TerrainClass> classes_;
    PoseSE2 start_;
    std::array<double, 2> goal_{0.0, 0.0};
    double goal_tolerance_ = 0.5;
    std::uint64_t seed_ = 1;
};

}  // namespace zest
