#include "rvc/flatten.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace rvc {

double FlatDomain::d_min() const {
    double m = 0;
    for (const auto& p : points) m = std::min(m, p.d);
    return m;
}

double FlatDomain::d_max() const {
    double m = 0;
    for (const auto& p : points) m = std::max(m, p.d);
    return m;
}

namespace {

struct Foot {
    double s, dist;
    Vec3 point;
};

Foot closest_on_path(const SurfaceCurve& path, const Vec3& query) {
    Foot best{0, std::numeric_limits<double>::infinity(), path.points.front()};
    for (size_t i = 1; i < path.points.size(); ++i) {
        const Vec3& a = path.points[i - 1];
        const Vec3& b = path.points[i];
        const Vec3 ab = b - a;
        const double len2 = ab.squaredNorm();
        // segment bounding sphere prune
        const double r = std::sqrt(len2) * 0.5;
        if ((query - 0.5 * (a + b)).norm() - r > best.dist) continue;
        double t = len2 > 0 ? std::clamp((query - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const Vec3 p = a + t * ab;
        double dist = (p - query).norm();
        if (dist < best.dist) {
            best.dist = dist;
            best.point = p;
            best.s = path.arc_lengths[i - 1] +
                     t * (path.arc_lengths[i] - path.arc_lengths[i - 1]);
        }
    }
    return best;
}

// do the interiors of two 2D triangles intersect? (separating axis test)
bool triangles_overlap(const std::array<Vec2, 3>& t1, const std::array<Vec2, 3>& t2) {
    auto project = [](const std::array<Vec2, 3>& t, const Vec2& axis, double& lo, double& hi) {
        lo = hi = t[0].dot(axis);
        for (int k = 1; k < 3; ++k) {
            double v = t[size_t(k)].dot(axis);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    };
    const std::array<Vec2, 3>* tris[2] = {&t1, &t2};
    for (int which = 0; which < 2; ++which) {
        for (int k = 0; k < 3; ++k) {
            const Vec2 e =
                (*tris[which])[size_t((k + 1) % 3)] - (*tris[which])[size_t(k)];
            const Vec2 axis(-e.y(), e.x());
            double lo1, hi1, lo2, hi2;
            project(t1, axis, lo1, hi1);
            project(t2, axis, lo2, hi2);
            const double eps = 1e-12 * (std::abs(hi1 - lo1) + std::abs(hi2 - lo2) + 1);
            if (hi1 <= lo2 + eps || hi2 <= lo1 + eps) return false;
        }
    }
    return true;
}

} // namespace

FlatDomain flatten_region(const Mesh& mesh, const LocalRegion& region, const PlaneCut& cut,
                          const CurvatureField& field, bool d_flip) {
    if (region.vertices.empty()) throw Error("flatten_region: empty region");
    if (cut.path.points.size() < 2) throw Error("flatten_region: path has fewer than 2 points");

    FlatDomain domain;
    domain.baseline_length = cut.path.length();
    domain.d_flipped = d_flip;
    const double sign = d_flip ? -1.0 : 1.0;

    std::vector<Vec2> flat2d;
    std::vector<Vec3> pos3d;
    std::vector<int> vertex_to_flat(size_t(mesh.vertex_count()), -1);

    for (int v : region.vertices) {
        const Vec3& p = mesh.vertices()[size_t(v)];
        const Foot foot = closest_on_path(cut.path, p);
        double side = (p - foot.point).dot(cut.plane_normal) >= 0 ? 1.0 : -1.0;
        FlatPoint fp;
        fp.s = foot.s;
        fp.d = sign * side * foot.dist;
        const auto& vc = field.vertices[size_t(v)];
        fp.nu = vc.defined ? vc.strength : 0.0;
        fp.source_vertex = v;
        vertex_to_flat[size_t(v)] = int(domain.points.size());
        domain.points.push_back(fp);
        flat2d.emplace_back(fp.s, fp.d);
        pos3d.push_back(p);
    }

    // reference-path points anchor the d = 0 baseline
    size_t n_vertex_points = domain.points.size();
    for (size_t j = 0; j < cut.path.points.size(); ++j) {
        const Vec3& p = cut.path.points[j];
        bool duplicate = false;
        for (int v : region.vertices) {
            if ((mesh.vertices()[size_t(v)] - p).norm() < 1e-9) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        FlatPoint fp;
        fp.s = cut.path.arc_lengths[j];
        fp.d = 0.0;
        fp.nu = cut.nu[j];
        fp.source_vertex = -1;
        domain.points.push_back(fp);
        flat2d.emplace_back(fp.s, fp.d);
        pos3d.push_back(p);
    }

    // inherit mesh connectivity when the flattening is injective on it and no
    // extra baseline points were needed; otherwise rebuild with Delaunay
    bool inherit = domain.points.size() == n_vertex_points;
    std::vector<std::array<int, 3>> triangles;
    if (inherit) {
        triangles.reserve(region.triangles.size());
        double orientation = 0;
        for (int t : region.triangles) {
            const auto& tri = mesh.triangles()[size_t(t)];
            std::array<int, 3> flat_tri{vertex_to_flat[size_t(tri[0])],
                                        vertex_to_flat[size_t(tri[1])],
                                        vertex_to_flat[size_t(tri[2])]};
            const Vec2 a = flat2d[size_t(flat_tri[0])];
            const Vec2 b = flat2d[size_t(flat_tri[1])];
            const Vec2 c = flat2d[size_t(flat_tri[2])];
            double area2 = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
            if (std::abs(area2) < 1e-12) {
                inherit = false; // collapsed triangle
                break;
            }
            if (orientation == 0)
                orientation = area2 > 0 ? 1 : -1;
            else if ((area2 > 0 ? 1 : -1) != orientation) {
                inherit = false; // fold-over flips orientation
                break;
            }
            triangles.push_back(flat_tri);
        }
    }
    if (inherit) {
        // non-adjacent overlapping pairs also signal a fold
        // broad phase: sort by min-x of the triangle bbox
        std::vector<std::pair<double, int>> order;
        std::vector<double> max_x(triangles.size());
        for (size_t i = 0; i < triangles.size() && inherit; ++i) {
            const auto& t = triangles[i];
            double lo = std::min({flat2d[size_t(t[0])].x(), flat2d[size_t(t[1])].x(),
                                  flat2d[size_t(t[2])].x()});
            max_x[i] = std::max({flat2d[size_t(t[0])].x(), flat2d[size_t(t[1])].x(),
                                 flat2d[size_t(t[2])].x()});
            order.push_back({lo, int(i)});
        }
        std::sort(order.begin(), order.end());
        for (size_t i = 0; i < order.size() && inherit; ++i) {
            const int ti = order[i].second;
            const auto& a = triangles[size_t(ti)];
            const std::array<Vec2, 3> ca{flat2d[size_t(a[0])], flat2d[size_t(a[1])],
                                         flat2d[size_t(a[2])]};
            for (size_t j = i + 1; j < order.size(); ++j) {
                if (order[j].first > max_x[size_t(ti)]) break;
                const auto& b = triangles[size_t(order[j].second)];
                bool share = false;
                for (int p : a)
                    for (int q : b)
                        if (p == q) share = true;
                if (share) continue;
                const std::array<Vec2, 3> cb{flat2d[size_t(b[0])], flat2d[size_t(b[1])],
                                             flat2d[size_t(b[2])]};
                if (triangles_overlap(ca, cb)) {
                    inherit = false;
                    break;
                }
            }
        }
    }

    if (!inherit) {
        triangles = delaunay_2d(flat2d);
        domain.rebuilt_by_delaunay = true;
    }
    domain.tri = FlatTriangulation(std::move(flat2d), std::move(triangles), std::move(pos3d));
    return domain;
}

void save_flat_csv(const FlatDomain& domain, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    out << "vertex,s,d,nu\n";
    for (const auto& p : domain.points)
        out << p.source_vertex << "," << p.s << "," << p.d << "," << p.nu << "\n";
}

} // namespace rvc
