#include "rvc/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace rvc {

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<Vec3> normals)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      normals_(std::move(normals)) {
    validate_and_build();
}

void Mesh::validate_and_build() {
    const int nv = int(vertices_.size());
    for (size_t t = 0; t < triangles_.size(); ++t) {
        for (int k = 0; k < 3; ++k) {
            int idx = triangles_[t][size_t(k)];
            if (idx < 0 || idx >= nv)
                throw Error("triangle " + std::to_string(t) + " references vertex " +
                            std::to_string(idx) + " outside [0, " + std::to_string(nv) + ")");
        }
        double area = triangle_area(int(t));
        if (area < 1e-12)
            throw Error("triangle " + std::to_string(t) + " is degenerate (area " +
                        std::to_string(area) + " mm^2 < 1e-12); remove or merge its "
                        "duplicate vertices before loading");
    }
    if (!normals_.empty() && normals_.size() != vertices_.size())
        throw Error("normal count does not match vertex count");

    neighbors_.assign(size_t(nv), {});
    vertex_tris_.assign(size_t(nv), {});
    for (size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (int k = 0; k < 3; ++k) {
            int a = tri[size_t(k)], b = tri[size_t((k + 1) % 3)];
            neighbors_[size_t(a)].push_back(b);
            neighbors_[size_t(b)].push_back(a);
            vertex_tris_[size_t(a)].push_back(int(t));
        }
    }
    for (auto& n : neighbors_) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    for (auto& vt : vertex_tris_) {
        std::sort(vt.begin(), vt.end());
        vt.erase(std::unique(vt.begin(), vt.end()), vt.end());
    }
}

double Mesh::triangle_area(int t) const {
    const auto& tri = triangles_[size_t(t)];
    const Vec3& a = vertices_[size_t(tri[0])];
    const Vec3& b = vertices_[size_t(tri[1])];
    const Vec3& c = vertices_[size_t(tri[2])];
    return 0.5 * (b - a).cross(c - a).norm();
}

Vec3 Mesh::triangle_normal(int t) const {
    const auto& tri = triangles_[size_t(t)];
    const Vec3& a = vertices_[size_t(tri[0])];
    const Vec3& b = vertices_[size_t(tri[1])];
    const Vec3& c = vertices_[size_t(tri[2])];
    Vec3 n = (b - a).cross(c - a);
    double len = n.norm();
    if (len <= 0.0) throw Error("triangle " + std::to_string(t) + " has zero normal");
    return n / len;
}

Vec3 Mesh::vertex_normal(int v) const {
    const auto& tris = vertex_tris_[size_t(v)];
    if (tris.empty())
        throw Error("vertex " + std::to_string(v) + " is isolated (no incident triangle)");
    Vec3 sum = Vec3::Zero();
    for (int t : tris) sum += triangle_normal(t);
    double len = sum.norm();
    if (len < 1e-14)
        throw Error("vertex " + std::to_string(v) + " has cancelling face normals");
    return sum / len;
}

std::vector<Vec3> Mesh::vertex_normals() const {
    std::vector<Vec3> out(vertices_.size());
    for (int v = 0; v < vertex_count(); ++v) out[size_t(v)] = vertex_normal(v);
    return out;
}

std::vector<int> Mesh::neighborhood(int seed, double radius) const {
    if (seed < 0 || seed >= vertex_count())
        throw Error("neighborhood seed " + std::to_string(seed) + " out of range");
    if (!(radius > 0)) throw Error("neighborhood radius must be positive");

    const Vec3& origin = vertices_[size_t(seed)];
    std::vector<char> visited(vertices_.size(), 0);
    std::deque<int> queue{seed};
    visited[size_t(seed)] = 1;
    std::vector<int> result{seed};
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w : neighbors_[size_t(v)]) {
            if (visited[size_t(w)]) continue;
            if ((vertices_[size_t(w)] - origin).norm() <= radius) {
                visited[size_t(w)] = 1;
                queue.push_back(w);
                result.push_back(w);
            }
        }
    }
    std::sort(result.begin(), result.end());
    return result;
}

Mesh::SurfacePoint Mesh::closest_surface_point(const Vec3& query) const {
    SurfacePoint best;
    best.distance = std::numeric_limits<double>::infinity();
    for (int t = 0; t < triangle_count(); ++t) {
        const auto& tri = triangles_[size_t(t)];
        std::array<double, 3> bary;
        Vec3 p = closest_point_on_triangle(vertices_[size_t(tri[0])], vertices_[size_t(tri[1])],
                                           vertices_[size_t(tri[2])], query, &bary);
        double d = (p - query).norm();
        if (d < best.distance) {
            best = SurfacePoint{p, t, bary, d};
        }
    }
    if (best.triangle < 0) throw Error("closest_surface_point on empty mesh");
    return best;
}

LandmarkSet::LandmarkSet(const std::map<std::string, Vec3>& raw, const Mesh& mesh) {
    for (const auto& [name, p] : raw) {
        points_[name] = mesh.closest_surface_point(p).position;
    }
}

const Vec3& LandmarkSet::at(const std::string& name) const {
    auto it = points_.find(name);
    if (it == points_.end()) throw Error("unknown landmark '" + name + "'");
    return it->second;
}

SurfaceCurve SurfaceCurve::from_points(std::vector<Vec3> pts) {
    SurfaceCurve c;
    c.points = std::move(pts);
    if (c.points.empty()) return c;
    c.arc_lengths.resize(c.points.size());
    c.arc_lengths[0] = 0.0;
    for (size_t i = 1; i < c.points.size(); ++i) {
        double step = (c.points[i] - c.points[i - 1]).norm();
        if (!(step > 0))
            throw Error("surface curve has coincident consecutive points at index " +
                        std::to_string(i));
        c.arc_lengths[i] = c.arc_lengths[i - 1] + step;
    }
    return c;
}

Vec3 SurfaceCurve::point_at(double s) const {
    if (points.empty()) throw Error("point_at on empty curve");
    if (points.size() == 1) return points[0];
    s = std::clamp(s, arc_lengths.front(), arc_lengths.back());
    auto it = std::upper_bound(arc_lengths.begin(), arc_lengths.end(), s);
    size_t hi = std::min(size_t(it - arc_lengths.begin()), points.size() - 1);
    if (hi == 0) hi = 1;
    size_t lo = hi - 1;
    double seg = arc_lengths[hi] - arc_lengths[lo];
    double t = seg > 0 ? (s - arc_lengths[lo]) / seg : 0.0;
    return points[lo] + t * (points[hi] - points[lo]);
}

std::array<double, 3> barycentric_2d(const std::array<Vec2, 3>& tri, const Vec2& query) {
    const Vec2 e1 = tri[1] - tri[0];
    const Vec2 e2 = tri[2] - tri[0];
    double det = e1.x() * e2.y() - e1.y() * e2.x();
    if (std::abs(det) < 2e-12) // 2*area
        throw Error("barycentric_2d: degenerate triangle (area < 1e-12)");
    const Vec2 q = query - tri[0];
    double w1 = (q.x() * e2.y() - q.y() * e2.x()) / det;
    double w2 = (e1.x() * q.y() - e1.y() * q.x()) / det;
    return {1.0 - w1 - w2, w1, w2};
}

Vec3 closest_point_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c,
                               const Vec3& p, std::array<double, 3>* bary) {
    // Ericson, Real-Time Collision Detection, 5.1.5.
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    auto fill = [&](double u, double v, double w, const Vec3& q) {
        if (bary) *bary = {u, v, w};
        return q;
    };
    if (d1 <= 0 && d2 <= 0) return fill(1, 0, 0, a);

    const Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return fill(0, 1, 0, b);

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double v = d1 / (d1 - d3);
        return fill(1 - v, v, 0, a + v * ab);
    }

    const Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return fill(0, 0, 1, c);

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        double w = d2 / (d2 - d6);
        return fill(1 - w, 0, w, a + w * ac);
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return fill(0, 1 - w, w, b + w * (c - b));
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return fill(1 - v - w, v, w, a + ab * v + ac * w);
}

} // namespace rvc
