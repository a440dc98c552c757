#include "rvc/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace rvc {

namespace {

// Signed doubled area of (a, b, c) in long double.
long double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    long double abx = (long double)b.x() - a.x(), aby = (long double)b.y() - a.y();
    long double acx = (long double)c.x() - a.x(), acy = (long double)c.y() - a.y();
    return abx * acy - aby * acx;
}

// > 0 when p is strictly inside the circumcircle of ccw triangle (a, b, c).
long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
    long double adx = (long double)a.x() - p.x(), ady = (long double)a.y() - p.y();
    long double bdx = (long double)b.x() - p.x(), bdy = (long double)b.y() - p.y();
    long double cdx = (long double)c.x() - p.x(), cdy = (long double)c.y() - p.y();
    long double ad = adx * adx + ady * ady;
    long double bd = bdx * bdx + bdy * bdy;
    long double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
           ad * (bdx * cdy - bdy * cdx);
}

struct BwTriangle {
    int v[3];
    bool alive = true;
};

} // namespace

std::vector<std::array<int, 3>> delaunay_2d(const std::vector<Vec2>& points) {
    const int n = int(points.size());
    if (n < 3) throw Error("delaunay_2d needs at least 3 points");

    // Canonical insertion order: lexicographic by (x, y).  Makes the result
    // independent of the caller's point order.
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        const Vec2 &a = points[size_t(i)], &b = points[size_t(j)];
        if (a.x() != b.x()) return a.x() < b.x();
        if (a.y() != b.y()) return a.y() < b.y();
        return i < j;
    });
    // drop exact duplicates
    std::vector<int> insert_order;
    for (int idx : order) {
        if (!insert_order.empty()) {
            const Vec2& prev = points[size_t(insert_order.back())];
            if (prev == points[size_t(idx)]) continue;
        }
        insert_order.push_back(idx);
    }
    if (insert_order.size() < 3) throw Error("delaunay_2d: fewer than 3 distinct points");

    // collinearity check
    {
        bool noncollinear = false;
        const Vec2& a = points[size_t(insert_order.front())];
        const Vec2& b = points[size_t(insert_order.back())];
        double span = (b - a).norm();
        for (int idx : insert_order) {
            if (std::abs((double)orient2d(a, b, points[size_t(idx)])) > 1e-12 * span * span) {
                noncollinear = true;
                break;
            }
        }
        if (!noncollinear) throw Error("delaunay_2d: all points are collinear");
    }

    Vec2 lo(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
    Vec2 hi = -lo;
    for (const Vec2& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec2 center = 0.5 * (lo + hi);
    const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-9});

    // Super-triangle far outside the data
    std::vector<Vec2> pts(points);
    const int s0 = n, s1 = n + 1, s2 = n + 2;
    pts.push_back(center + Vec2(-40 * span, -20 * span));
    pts.push_back(center + Vec2(40 * span, -20 * span));
    pts.push_back(center + Vec2(0, 40 * span));

    std::vector<BwTriangle> tris;
    tris.push_back({{s0, s1, s2}, true});

    std::vector<int> bad;
    std::map<std::pair<int, int>, std::pair<int, int>> edge_count; // edge -> (count, third vtx)
    for (int idx : insert_order) {
        const Vec2& p = pts[size_t(idx)];
        bad.clear();
        for (size_t t = 0; t < tris.size(); ++t) {
            if (!tris[t].alive) continue;
            const Vec2& a = pts[size_t(tris[t].v[0])];
            const Vec2& b = pts[size_t(tris[t].v[1])];
            const Vec2& c = pts[size_t(tris[t].v[2])];
            // ties (cocircular) count as outside, keeping the cavity minimal
            if (incircle(a, b, c, p) > 0) bad.push_back(int(t));
        }
        edge_count.clear();
        auto add_edge = [&](int u, int v) {
            auto key = std::minmax(u, v);
            auto it = edge_count.find(key);
            if (it == edge_count.end())
                edge_count[key] = {1, 0};
            else
                ++it->second.first;
        };
        for (int t : bad) {
            add_edge(tris[size_t(t)].v[0], tris[size_t(t)].v[1]);
            add_edge(tris[size_t(t)].v[1], tris[size_t(t)].v[2]);
            add_edge(tris[size_t(t)].v[2], tris[size_t(t)].v[0]);
            tris[size_t(t)].alive = false;
        }
        for (const auto& [edge, info] : edge_count) {
            if (info.first != 1) continue; // interior cavity edge
            int u = edge.first, v = edge.second;
            // wind the new triangle counterclockwise
            if (orient2d(pts[size_t(u)], pts[size_t(v)], p) < 0) std::swap(u, v);
            tris.push_back({{u, v, idx}, true});
        }
    }

    std::vector<std::array<int, 3>> out;
    for (const auto& t : tris) {
        if (!t.alive) continue;
        if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
        out.push_back({t.v[0], t.v[1], t.v[2]});
    }
    // canonical triangle ordering for reproducible output
    for (auto& t : out) {
        int k = 0;
        if (t[1] < t[k]) k = 1;
        if (t[2] < t[k]) k = 2;
        std::rotate(t.begin(), t.begin() + k, t.end());
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) throw Error("delaunay_2d produced no triangles");
    return out;
}

FlatTriangulation::FlatTriangulation(std::vector<Vec2> points2d,
                                     std::vector<std::array<int, 3>> triangles,
                                     std::vector<Vec3> positions3d)
    : points2d_(std::move(points2d)),
      triangles_(std::move(triangles)),
      positions3d_(std::move(positions3d)) {
    if (points2d_.size() != positions3d_.size())
        throw Error("FlatTriangulation: 2D/3D point count mismatch");
    build_index();
}

void FlatTriangulation::build_index() {
    if (triangles_.empty()) throw Error("FlatTriangulation: no triangles");
    Vec2 lo(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
    Vec2 hi = -lo;
    for (const Vec2& p : points2d_) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    grid_min_ = lo;
    const double w = std::max(hi.x() - lo.x(), 1e-12);
    const double h = std::max(hi.y() - lo.y(), 1e-12);
    const double target_cells = std::max(4.0, double(triangles_.size()));
    cell_ = std::sqrt(w * h / target_cells);
    nx_ = std::max(1, int(std::ceil(w / cell_)));
    ny_ = std::max(1, int(std::ceil(h / cell_)));
    buckets_.assign(size_t(nx_) * size_t(ny_), {});

    auto cell_of = [&](double x, double lo0, int ncell) {
        int c = int(std::floor((x - lo0) / cell_));
        return std::clamp(c, 0, ncell - 1);
    };
    for (size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        Vec2 tlo = points2d_[size_t(tri[0])].cwiseMin(points2d_[size_t(tri[1])])
                       .cwiseMin(points2d_[size_t(tri[2])]);
        Vec2 thi = points2d_[size_t(tri[0])].cwiseMax(points2d_[size_t(tri[1])])
                       .cwiseMax(points2d_[size_t(tri[2])]);
        int cx0 = cell_of(tlo.x(), grid_min_.x(), nx_), cx1 = cell_of(thi.x(), grid_min_.x(), nx_);
        int cy0 = cell_of(tlo.y(), grid_min_.y(), ny_), cy1 = cell_of(thi.y(), grid_min_.y(), ny_);
        for (int cy = cy0; cy <= cy1; ++cy)
            for (int cx = cx0; cx <= cx1; ++cx)
                buckets_[size_t(cy) * size_t(nx_) + size_t(cx)].push_back(int(t));
    }

    // boundary edges = edges used by exactly one triangle
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& tri : triangles_) {
        for (int k = 0; k < 3; ++k) {
            auto key = std::minmax(tri[size_t(k)], tri[size_t((k + 1) % 3)]);
            ++edge_use[key];
        }
    }
    boundary_edges_.clear();
    for (const auto& [edge, count] : edge_use)
        if (count == 1) boundary_edges_.push_back({edge.first, edge.second});
}

FlatTriangulation::Location FlatTriangulation::locate(const Vec2& query) const {
    Location loc;
    int cx = std::clamp(int(std::floor((query.x() - grid_min_.x()) / cell_)), 0, nx_ - 1);
    int cy = std::clamp(int(std::floor((query.y() - grid_min_.y()) / cell_)), 0, ny_ - 1);

    double scale = cell_ * std::max(nx_, ny_);
    const double tol = 1e-9 * std::max(1.0, scale);

    auto try_triangle = [&](int t) {
        const auto& tri = triangles_[size_t(t)];
        std::array<Vec2, 3> corners{points2d_[size_t(tri[0])], points2d_[size_t(tri[1])],
                                    points2d_[size_t(tri[2])]};
        std::array<double, 3> w;
        try {
            w = barycentric_2d(corners, query);
        } catch (const Error&) {
            return false;
        }
        if (w[0] >= -tol && w[1] >= -tol && w[2] >= -tol) {
            loc.triangle = t;
            loc.bary = w;
            return true;
        }
        return false;
    };

    // expanding ring search around the query cell; ring 1 covers queries that
    // fall in an empty cell adjacent to the hull
    for (int ring = 0; ring <= std::max(nx_, ny_); ++ring) {
        bool any_cell = false;
        for (int dy = -ring; dy <= ring; ++dy) {
            for (int dx = -ring; dx <= ring; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                int gx = cx + dx, gy = cy + dy;
                if (gx < 0 || gx >= nx_ || gy < 0 || gy >= ny_) continue;
                any_cell = true;
                for (int t : buckets_[size_t(gy) * size_t(nx_) + size_t(gx)])
                    if (try_triangle(t)) return loc;
            }
        }
        if (ring > 1 && !any_cell) break;
        if (loc.triangle >= 0) break;
    }

    // outside: closest point on the hull boundary
    double best = std::numeric_limits<double>::max();
    for (const auto& e : boundary_edges_) {
        const Vec2& a = points2d_[size_t(e[0])];
        const Vec2& b = points2d_[size_t(e[1])];
        Vec2 ab = b - a;
        double len2 = ab.squaredNorm();
        double t = len2 > 0 ? std::clamp((query - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        Vec2 p = a + t * ab;
        double d = (p - query).norm();
        if (d < best) {
            best = d;
            loc.nearest_boundary = p;
        }
    }
    return loc;
}

Vec3 FlatTriangulation::to_3d(const Vec2& query) const {
    Location loc = locate(query);
    if (loc.triangle < 0) {
        std::ostringstream ss;
        ss.precision(12);
        ss << "query (" << query.x() << ", " << query.y()
           << ") lies outside the flattened domain; nearest boundary point ("
           << loc.nearest_boundary.x() << ", " << loc.nearest_boundary.y() << ")";
        throw Error(ss.str());
    }
    const auto& tri = triangles_[size_t(loc.triangle)];
    Vec3 out = Vec3::Zero();
    for (int k = 0; k < 3; ++k)
        out += loc.bary[size_t(k)] * positions3d_[size_t(tri[size_t(k)])];
    return out;
}

} // namespace rvc
