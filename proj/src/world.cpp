#include "zest/world.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "zest/errors.hpp"

namespace zest {

namespace {

double require_number(const nlohmann::json& obj, const char* key) {
    if (!obj.contains(key) || !obj[key].is_number()) {
        throw ParseError(std::string("world: missing numeric field '") + key + "'");
    }
    return obj[key].get<double>();
}

}  // namespace

int World::class_at(double x, double y) const {
    if (!inside(x, y)) return -1;
    int cx = static_cast<int>(std::floor(x / cell_size_));
    int cy = static_cast<int>(std::floor(y / cell_size_));
    if (cx >= cols_) cx = cols_ - 1;
    if (cy >= rows_) cy = rows_ - 1;
    return grid_[static_cast<std::size_t>(cy) * cols_ + cx];
}

World World::from_json(const std::string& text) {
    nlohmann::json root = nlohmann::json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        throw ParseError("world: not a JSON object");
    }
    if (!root.contains("format") || root["format"] != "world") {
        throw ParseError("world: missing format marker");
    }

    World w;
    w.name_ = root.value("name", std::string("unnamed"));
    w.cell_size_ = require_number(root, "cell_size");
    if (!(w.cell_size_ > 0.0)) throw ParseError("world: cell_size must be positive");

    if (!root.contains("classes") || !root["classes"].is_array() || root["classes"].empty()) {
        throw ParseError("world: missing classes array");
    }
    std::map<std::string, int> class_index;
    for (const auto& entry : root["classes"]) {
        TerrainClass tc;
        if (!entry.contains("name") || !entry["name"].is_string()) {
            throw ParseError("world: class without name");
        }
        tc.name = entry["name"].get<std::string>();
        tc.m = require_number(entry, "m");
        tc.sigma = require_number(entry, "sigma");
        if (tc.m < 0.0 || tc.m > 1.0 || tc.sigma < 0.0) {
            throw ParseError("world: class '" + tc.name + "' has out-of-range m or sigma");
        }
        if (entry.contains("color")) {
            const auto& c = entry["color"];
            if (!c.is_array() || c.size() != 3) throw ParseError("world: color must be [r,g,b]");
            for (int i = 0; i < 3; ++i) {
                int v = c[i].get<int>();
                if (v < 0 || v > 255) throw ParseError("world: color channel out of range");
                tc.color[i] = static_cast<std::uint8_t>(v);
            }
        }
        if (class_index.count(tc.name)) throw ParseError("world: duplicate class '" + tc.name + "'");
        class_index[tc.name] = static_cast<int>(w.classes_.size());
        w.classes_.push_back(tc);
    }

    if (!root.contains("legend") || !root["legend"].is_object()) {
        throw ParseError("world: missing legend");
    }
    std::map<char, int> legend;
    for (const auto& [key, value] : root["legend"].items()) {
        if (key.size() != 1 || !value.is_string()) {
            throw ParseError("world: legend entries map one character to a class name");
        }
        auto it = class_index.find(value.get<std::string>());
        if (it == class_index.end()) {
            throw ParseError("world: legend refers to unknown class '" + value.get<std::string>() + "'");
        }
        legend[key[0]] = it->second;
    }

    if (!root.contains("rows") || !root["rows"].is_array() || root["rows"].empty()) {
        throw ParseError("world: missing rows");
    }
    const auto& rows = root["rows"];
    w.rows_ = static_cast<int>(rows.size());
    w.cols_ = static_cast<int>(rows[0].get<std::string>().size());
    if (w.cols_ == 0) throw ParseError("world: empty row");
    w.grid_.assign(static_cast<std::size_t>(w.rows_) * w.cols_, 0);
    for (int r = 0; r < w.rows_; ++r) {
        const std::string line = rows[r].get<std::string>();
        if (static_cast<int>(line.size()) != w.cols_) {
            throw ParseError("world: ragged rows");
        }
        // file row 0 is the top of the map (max y)
        const int gy = w.rows_ - 1 - r;
        for (int c = 0; c < w.cols_; ++c) {
            auto it = legend.find(line[c]);
            if (it == legend.end()) {
                throw ParseError(std::string("world: character '") + line[c] + "' not in legend");
            }
            w.grid_[static_cast<std::size_t>(gy) * w.cols_ + c] = it->second;
        }
    }

    if (!root.contains("start") || !root["start"].is_object()) throw ParseError("world: missing start");
    w.start_.x = require_number(root["start"], "x");
    w.start_.y = require_number(root["start"], "y");
    w.start_.psi = root["start"].value("psi", 0.0);
    if (!root.contains("goal") || !root["goal"].is_object()) throw ParseError("world: missing goal");
    w.goal_[0] = require_number(root["goal"], "x");
    w.goal_[1] = require_number(root["goal"], "y");
    w.goal_tolerance_ = root.value("goal_tolerance", 0.5);
    if (!(w.goal_tolerance_ > 0.0)) throw ParseError("world: goal_tolerance must be positive");
    w.seed_ = root.value("seed", std::uint64_t{1});

    if (!w.inside(w.start_.x, w.start_.y)) throw ParseError("world: start outside extents");
    if (!w.inside(w.goal_[0], w.goal_[1])) throw ParseError("world: goal outside extents");
    return w;
}

World World::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("world: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

}  // namespace zest
