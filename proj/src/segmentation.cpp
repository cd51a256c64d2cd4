#include "zest/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "zest/errors.hpp"

namespace zest {

namespace {

double srgb_to_linear(std::uint8_t v) {
    const double c = v / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t)
                                     : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

struct Center {
    double x, y, l, a, b;
    std::uint64_t members = 0;
};

}  // namespace

Lab rgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
    const double r = srgb_to_linear(r8);
    const double g = srgb_to_linear(g8);
    const double b = srgb_to_linear(b8);
    // sRGB to XYZ, D65 white point.
    const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(x / 0.95047);
    const double fy = lab_f(y);
    const double fz = lab_f(z / 1.08883);
    return Lab{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabelMap slic(const Image& image, int k, double compactness, int iters) {
    const int w = image.width;
    const int h = image.height;
    const std::size_t n_px = static_cast<std::size_t>(w) * h;
    if (w <= 0 || h <= 0) throw ValidationError("slic: empty image");
    if (k < 1) throw ValidationError("slic: k must be at least 1");
    if (static_cast<std::size_t>(k) > n_px) throw ValidationError("slic: k exceeds pixel count");
    if (!(compactness > 0.0)) throw ValidationError("slic: compactness must be positive");
    if (iters < 1) throw ValidationError("slic: iters must be at least 1");

    std::vector<Lab> lab(n_px);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto* p = image.at(x, y);
            lab[static_cast<std::size_t>(y) * w + x] = rgb_to_lab(p[0], p[1], p[2]);
        }
    }

    // Seed a grid shaped to the image aspect so nx*ny tracks k.
    int ny = std::clamp(static_cast<int>(std::lround(
                            std::sqrt(static_cast<double>(k) * h / std::max(1, w)))),
                        1, h);
    int nx = std::clamp(static_cast<int>(std::lround(static_cast<double>(k) / ny)), 1, w);
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Center c;
            c.x = (i + 0.5) * static_cast<double>(w) / nx - 0.5;
            c.y = (j + 0.5) * static_cast<double>(h) / ny - 0.5;
            const int px = std::clamp(static_cast<int>(std::lround(c.x)), 0, w - 1);
            const int py = std::clamp(static_cast<int>(std::lround(c.y)), 0, h - 1);
            const Lab& seed = lab[static_cast<std::size_t>(py) * w + px];
            c.l = seed.l;
            c.a = seed.a;
            c.b = seed.b;
            centers.push_back(c);
        }
    }

    const double S = std::sqrt(static_cast<double>(n_px) / centers.size());
    const double spatial_w = (compactness / S) * (compactness / S);
    std::vector<int> assign(n_px, -1);
    std::vector<double> best(n_px);

    for (int it = 0; it < iters; ++it) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        std::fill(assign.begin(), assign.end(), -1);
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
            const Center& c = centers[ci];
            const int x_lo = std::max(0, static_cast<int>(std::floor(c.x - 2.0 * S)));
            const int x_hi = std::min(w - 1, static_cast<int>(std::ceil(c.x + 2.0 * S)));
            const int y_lo = std::max(0, static_cast<int>(std::floor(c.y - 2.0 * S)));
            const int y_hi = std::min(h - 1, static_cast<int>(std::ceil(c.y + 2.0 * S)));
            for (int y = y_lo; y <= y_hi; ++y) {
                const double dy = y - c.y;
                for (int x = x_lo; x <= x_hi; ++x) {
                    const std::size_t idx = static_cast<std::size_t>(y) * w + x;
                    const Lab& px = lab[idx];
                    const double dl = px.l - c.l;
                    const double da = px.a - c.a;
                    const double db = px.b - c.b;
                    const double dx = x - c.x;
                    const double d2 =
                        dl * dl + da * da + db * db + spatial_w * (dx * dx + dy * dy);
                    if (d2 < best[idx]) {
                        best[idx] = d2;
                        assign[idx] = static_cast<int>(ci);
                    }
                }
            }
        }
        // Window misses are possible only for degenerate grids; resolve globally.
        for (std::size_t idx = 0; idx < n_px; ++idx) {
            if (assign[idx] >= 0) continue;
            const int x = static_cast<int>(idx % w);
            const int y = static_cast<int>(idx / w);
            const Lab& px = lab[idx];
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t ci = 0; ci < centers.size(); ++ci) {
                const Center& c = centers[ci];
                const double dl = px.l - c.l, da = px.a - c.a, db = px.b - c.b;
                const double dx = x - c.x, dy = y - c.y;
                const double d2 = dl * dl + da * da + db * db + spatial_w * (dx * dx + dy * dy);
                if (d2 < best_d) {
                    best_d = d2;
                    assign[idx] = static_cast<int>(ci);
                }
            }
        }

        if (it + 1 == iters) break;
        std::vector<Center> next(centers.size());
        for (std::size_t idx = 0; idx < n_px; ++idx) {
            Center& c = next[assign[idx]];
            c.x += static_cast<double>(idx % w);
            c.y += static_cast<double>(idx / w);
            c.l += lab[idx].l;
            c.a += lab[idx].a;
            c.b += lab[idx].b;
            c.members += 1;
        }
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
            if (next[ci].members == 0) {
                next[ci] = centers[ci];  // orphaned center keeps its position
                next[ci].members = 0;
                continue;
            }
            const double inv = 1.0 / static_cast<double>(next[ci].members);
            next[ci].x *= inv;
            next[ci].y *= inv;
            next[ci].l *= inv;
            next[ci].a *= inv;
            next[ci].b *= inv;
        }
        centers = std::move(next);
    }

    // Connected-component analysis (4-connectivity) over the raw assignment.
    static constexpr int kDx[4] = {1, -1, 0, 0};
    static constexpr int kDy[4] = {0, 0, 1, -1};
    std::vector<int> comp(n_px, -1);
    std::vector<int> comp_label;
    std::vector<std::vector<std::size_t>> comp_pixels;
    std::deque<std::size_t> queue;
    for (std::size_t start = 0; start < n_px; ++start) {
        if (comp[start] >= 0) continue;
        const int cid = static_cast<int>(comp_label.size());
        comp_label.push_back(assign[start]);
        comp_pixels.emplace_back();
        comp[start] = cid;
        queue.push_back(start);
        while (!queue.empty()) {
            const std::size_t idx = queue.front();
            queue.pop_front();
            comp_pixels[cid].push_back(idx);
            const int x = static_cast<int>(idx % w);
            const int y = static_cast<int>(idx / w);
            for (int d = 0; d < 4; ++d) {
                const int qx = x + kDx[d];
                const int qy = y + kDy[d];
                if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                const std::size_t nidx = static_cast<std::size_t>(qy) * w + qx;
                if (comp[nidx] >= 0 || assign[nidx] != assign[start]) continue;
                comp[nidx] = cid;
                queue.push_back(nidx);
            }
        }
    }
    const int n_comps = static_cast<int>(comp_label.size());

    // The largest component of each SLIC label survives; the rest merge into
    // their dominant resolved neighbor.
    std::vector<int> keeper_of_label(centers.size(), -1);
    for (int cid = 0; cid < n_comps; ++cid) {
        int& best_cid = keeper_of_label[comp_label[cid]];
        if (best_cid < 0 || comp_pixels[cid].size() > comp_pixels[best_cid].size()) {
            best_cid = cid;
        }
    }
    std::vector<int> resolved(n_comps, -1);  // final component each comp maps to
    for (int cid = 0; cid < n_comps; ++cid) {
        if (keeper_of_label[comp_label[cid]] == cid) resolved[cid] = cid;
    }
    bool progress = true;
    while (progress) {
        progress = false;
        for (int cid = 0; cid < n_comps; ++cid) {
            if (resolved[cid] >= 0) continue;
            std::vector<std::pair<int, std::uint64_t>> votes;
            for (std::size_t idx : comp_pixels[cid]) {
                const int x = static_cast<int>(idx % w);
                const int y = static_cast<int>(idx / w);
                for (int d = 0; d < 4; ++d) {
                    const int qx = x + kDx[d];
                    const int qy = y + kDy[d];
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    const int ncid = comp[static_cast<std::size_t>(qy) * w + qx];
                    if (ncid == cid || resolved[ncid] < 0) continue;
                    const int target = resolved[ncid];
                    auto it = std::find_if(votes.begin(), votes.end(),
                                           [&](const auto& v) { return v.first == target; });
                    if (it == votes.end()) {
                        votes.push_back({target, 1});
                    } else {
                        it->second += 1;
                    }
                }
            }
            if (votes.empty()) continue;
            std::sort(votes.begin(), votes.end(), [](const auto& a, const auto& b) {
                return a.second != b.second ? a.second > b.second : a.first < b.first;
            });
            resolved[cid] = votes.front().first;
            progress = true;
        }
    }

    // Compact relabel to 1..N in scan order of first appearance.
    LabelMap out;
    out.width = w;
    out.height = h;
    out.labels.assign(n_px, 0);
    std::vector<int> final_label(n_comps, 0);
    int next_id = 0;
    for (std::size_t idx = 0; idx < n_px; ++idx) {
        const int target = resolved[comp[idx]];
        if (final_label[target] == 0) final_label[target] = ++next_id;
        out.labels[idx] = final_label[target];
    }
    out.region_count = next_id;
    return out;
}

RegionRegistry build_registry(const LabelMap& labels) {
    const int w = labels.width;
    const int h = labels.height;
    if (w <= 0 || h <= 0 || labels.region_count < 1 ||
        labels.labels.size() != static_cast<std::size_t>(w) * h) {
        throw ValidationError("build_registry: malformed label map");
    }
    for (int v : labels.labels) {
        if (v < 1 || v > labels.region_count) {
            throw ValidationError("build_registry: label out of range");
        }
    }
    RegionRegistry reg;
    reg.regions.resize(labels.region_count);
    std::vector<double> sum_x(labels.region_count, 0.0), sum_y(labels.region_count, 0.0);
    for (int id = 1; id <= labels.region_count; ++id) {
        RegionInfo& info = reg.regions[id - 1];
        info.id = id;
        info.min_x = w;
        info.min_y = h;
        info.max_x = -1;
        info.max_y = -1;
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int id = labels.at(x, y);
            RegionInfo& info = reg.regions[id - 1];
            info.pixel_count += 1;
            sum_x[id - 1] += x;
            sum_y[id - 1] += y;
            info.min_x = std::min(info.min_x, x);
            info.min_y = std::min(info.min_y, y);
            info.max_x = std::max(info.max_x, x);
            info.max_y = std::max(info.max_y, y);
        }
    }
    // Snap each centroid to an interior pixel of its region.
    std::vector<double> best_d(labels.region_count, std::numeric_limits<double>::infinity());
    std::vector<double> want_x(labels.region_count), want_y(labels.region_count);
    for (int id = 1; id <= labels.region_count; ++id) {
        want_x[id - 1] = sum_x[id - 1] / reg.regions[id - 1].pixel_count;
        want_y[id - 1] = sum_y[id - 1] / reg.regions[id - 1].pixel_count;
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int i = labels.at(x, y) - 1;
            const double dx = x - want_x[i];
            const double dy = y - want_y[i];
            const double d = dx * dx + dy * dy;
            if (d < best_d[i]) {
                best_d[i] = d;
                reg.regions[i].centroid_x = x;
                reg.regions[i].centroid_y = y;
            }
        }
    }
    return reg;
}

std::pair<Image, RegionRegistry> number_masks(const LabelMap& labels, const Image& image) {
    if (labels.width != image.width || labels.height != image.height) {
        throw ValidationError("number_masks: label map does not match image dimensions");
    }
    RegionRegistry reg = build_registry(labels);
    Image annotated = image;
    for (const RegionInfo& info : reg.regions) {
        const int bw = info.max_x - info.min_x + 1;
        const int bh = info.max_y - info.min_y + 1;
        const int scale = (std::min(bw, bh) >= 16) ? 2 : 1;
        draw_label(annotated, info.centroid_x, info.centroid_y, info.id, scale);
    }
    return {std::move(annotated), std::move(reg)};
}

}  // namespace zest
