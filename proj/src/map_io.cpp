#include "zest/map_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "zest/errors.hpp"

namespace zest {

namespace {

using nlohmann::json;

bool close_enough(double actual, double expected) {
    return std::fabs(actual - expected) <= 1e-9 * (1.0 + std::fabs(expected));
}

double require_number(const json& node, const char* field) {
    if (!node.contains(field) || !node[field].is_number()) {
        std::ostringstream msg;
        msg << "map snapshot: missing or non-numeric field '" << field << "'";
        throw ParseError(msg.str());
    }
    return node[field].get<double>();
}

}  // namespace

std::string map_to_json(const VoxelMap& map) {
    json root;
    root["format"] = "trav-map-snapshot";
    root["version"] = 1;
    root["resolution"] = map.resolution();
    root["origin"] = {map.origin()[0], map.origin()[1], map.origin()[2]};
    const NigPrior& p = map.prior();
    root["prior"] = {{"gamma0", p.gamma0}, {"kappa0", p.kappa0}, {"a0", p.a0},
                     {"b0", p.b0},         {"alpha0", p.alpha0}, {"beta0", p.beta0}};
    root["revision"] = map.revision();

    std::vector<std::pair<VoxelKey, CellState>> cells(map.cells().begin(), map.cells().end());
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.ix, a.first.iy, a.first.iz) <
               std::tie(b.first.ix, b.first.iy, b.first.iz);
    });

    json arr = json::array();
    for (const auto& [key, cell] : cells) {
        json entry;
        entry["key"] = {key.ix, key.iy, key.iz};
        entry["gamma"] = cell.nig.gamma();
        entry["kappa"] = cell.nig.kappa();
        entry["a"] = cell.nig.a();
        entry["b"] = cell.nig.b();
        entry["n"] = cell.nig.n();
        entry["mean"] = cell.nig.sample_mean();
        entry["m2"] = cell.nig.sample_m2();
        entry["alpha"] = cell.alpha;
        entry["beta"] = cell.beta;
        arr.push_back(std::move(entry));
    }
    root["cells"] = std::move(arr);
    return root.dump(2) + "\n";
}

VoxelMap map_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("map snapshot: invalid JSON: ") + e.what());
    }
    if (!root.is_object() || root.value("format", "") != "trav-map-snapshot") {
        throw ParseError("map snapshot: missing format marker");
    }
    if (!root.contains("prior") || !root.contains("origin") || !root.contains("cells") ||
        !root["origin"].is_array() || root["origin"].size() != 3 || !root["cells"].is_array()) {
        throw ParseError("map snapshot: malformed header");
    }

    const json& pj = root["prior"];
    NigPrior prior;
    prior.gamma0 = require_number(pj, "gamma0");
    prior.kappa0 = require_number(pj, "kappa0");
    prior.a0 = require_number(pj, "a0");
    prior.b0 = require_number(pj, "b0");
    prior.alpha0 = require_number(pj, "alpha0");
    prior.beta0 = require_number(pj, "beta0");

    VoxelMap map(require_number(root, "resolution"),
                 {root["origin"][0].get<double>(), root["origin"][1].get<double>(),
                  root["origin"][2].get<double>()},
                 prior);

    for (const json& entry : root["cells"]) {
        if (!entry.contains("key") || !entry["key"].is_array() || entry["key"].size() != 3) {
            throw ParseError("map snapshot: malformed cell key");
        }
        const VoxelKey key{entry["key"][0].get<int>(), entry["key"][1].get<int>(),
                           entry["key"][2].get<int>()};
        const auto n = entry["n"].get<std::uint64_t>();
        NigState nig = NigState::restore(prior, n, require_number(entry, "mean"),
                                         require_number(entry, "m2"));
        if (!close_enough(nig.gamma(), require_number(entry, "gamma")) ||
            !close_enough(nig.kappa(), require_number(entry, "kappa")) ||
            !close_enough(nig.a(), require_number(entry, "a")) ||
            !close_enough(nig.b(), require_number(entry, "b"))) {
            std::ostringstream msg;
            msg << "map snapshot: inconsistent hyperparameters at key [" << key.ix << ", "
                << key.iy << ", " << key.iz << "]";
            throw ParseError(msg.str());
        }
        CellState cell{nig, require_number(entry, "alpha"), require_number(entry, "beta")};
        if (!(cell.alpha > 0.0 && cell.beta > 0.0)) {
            throw ParseError("map snapshot: non-positive Beta hyperparameters");
        }
        map.restore_cell(key, std::move(cell));
    }
    map.set_revision(root.value("revision", std::uint64_t{0}));
    return map;
}

void save_map(const VoxelMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("save_map: cannot open " + path);
    out << map_to_json(map);
    if (!out) throw ValidationError("save_map: write failed for " + path);
}

VoxelMap load_map(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("load_map: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return map_from_json(buf.str());
}

}  // namespace zest
