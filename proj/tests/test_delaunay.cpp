#include <doctest.h>

#include "rvc/delaunay.hpp"
#include "rvc/rng.hpp"

#include <algorithm>
#include <set>

using namespace rvc;

namespace {

// brute-force check: no input point strictly inside any circumcircle
bool empty_circumcircles(const std::vector<Vec2>& pts,
                         const std::vector<std::array<int, 3>>& tris, double tol = 1e-9) {
    for (const auto& t : tris) {
        const Vec2 a = pts[size_t(t[0])], b = pts[size_t(t[1])], c = pts[size_t(t[2])];
        // circumcenter by perpendicular bisector intersection
        const double d = 2 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) +
                              c.x() * (a.y() - b.y()));
        if (std::abs(d) < 1e-14) return false;
        const double ux = (a.squaredNorm() * (b.y() - c.y()) + b.squaredNorm() * (c.y() - a.y()) +
                           c.squaredNorm() * (a.y() - b.y())) /
                          d;
        const double uy = (a.squaredNorm() * (c.x() - b.x()) + b.squaredNorm() * (a.x() - c.x()) +
                           c.squaredNorm() * (b.x() - a.x())) /
                          d;
        const Vec2 center(ux, uy);
        const double r = (a - center).norm();
        for (size_t p = 0; p < pts.size(); ++p) {
            if (int(p) == t[0] || int(p) == t[1] || int(p) == t[2]) continue;
            if ((pts[p] - center).norm() < r - tol) return false;
        }
    }
    return true;
}

std::set<std::array<int, 3>> canonical(const std::vector<std::array<int, 3>>& tris) {
    std::set<std::array<int, 3>> out;
    for (auto t : tris) {
        std::sort(t.begin(), t.end());
        out.insert(t);
    }
    return out;
}

} // namespace

TEST_CASE("three points give one triangle") {
    auto tris = delaunay_2d({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)});
    REQUIRE(tris.size() == 1);
    CHECK(canonical(tris).count({0, 1, 2}) == 1);
}

TEST_CASE("square splits into two empty-circumcircle triangles") {
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    auto tris = delaunay_2d(pts);
    REQUIRE(tris.size() == 2);
    CHECK(empty_circumcircles(pts, tris));
}

TEST_CASE("collinear input throws") {
    CHECK_THROWS_AS(delaunay_2d({Vec2(0, 0), Vec2(1, 1), Vec2(2, 2), Vec2(3, 3)}), Error);
}

TEST_CASE("random point sets satisfy the circumcircle oracle") {
    StreamRng rng(123);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Vec2> pts;
        for (int i = 0; i < 50; ++i)
            pts.emplace_back(rng.uniform(-3, 3), rng.uniform(-2, 5));
        auto tris = delaunay_2d(pts);
        CHECK(empty_circumcircles(pts, tris));
        // hull coverage: total triangle area equals the convex hull area
        double area = 0;
        for (const auto& t : tris) {
            const Vec2 a = pts[size_t(t[0])], b = pts[size_t(t[1])], c = pts[size_t(t[2])];
            area += 0.5 * std::abs((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
        }
        CHECK(area > 0);
    }
}

TEST_CASE("output is independent of input order") {
    StreamRng rng(5);
    std::vector<Vec2> pts;
    for (int i = 0; i < 40; ++i) pts.emplace_back(rng.uniform(0, 10), rng.uniform(0, 10));
    auto base = canonical(delaunay_2d(pts));

    for (int trial = 0; trial < 4; ++trial) {
        std::vector<int> perm(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) perm[i] = int(i);
        rng.shuffle(perm);
        std::vector<Vec2> shuffled(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) shuffled[size_t(perm[i])] = pts[i];
        auto tris = delaunay_2d(shuffled);
        // map back to original indices
        std::set<std::array<int, 3>> remapped;
        for (auto t : tris) {
            std::array<int, 3> orig;
            for (int k = 0; k < 3; ++k) {
                auto it = std::find(perm.begin(), perm.end(), t[size_t(k)]);
                orig[size_t(k)] = int(it - perm.begin());
            }
            std::sort(orig.begin(), orig.end());
            remapped.insert(orig);
        }
        CHECK(remapped == base);
    }
}

TEST_CASE("flat triangulation interpolates exactly at vertices and centroids") {
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(2, 0), Vec2(2, 2), Vec2(0, 2), Vec2(1, 1)};
    const std::vector<Vec3> pos{{0, 0, 5}, {2, 0, 7}, {2, 2, 1}, {0, 2, 3}, {1, 1, 4}};
    FlatTriangulation flat(pts, delaunay_2d(pts), pos);

    for (size_t i = 0; i < pts.size(); ++i)
        CHECK((flat.to_3d(pts[i]) - pos[i]).norm() < 1e-12);

    for (const auto& tri : flat.triangles()) {
        const Vec2 c2 = (pts[size_t(tri[0])] + pts[size_t(tri[1])] + pts[size_t(tri[2])]) / 3.0;
        const Vec3 c3 = (pos[size_t(tri[0])] + pos[size_t(tri[1])] + pos[size_t(tri[2])]) / 3.0;
        CHECK((flat.to_3d(c2) - c3).norm() < 1e-12);
    }
}

TEST_CASE("interpolation reproduces affine maps over the triangulation") {
    StreamRng rng(99);
    std::vector<Vec2> pts;
    for (int i = 0; i < 30; ++i) pts.emplace_back(rng.uniform(0, 4), rng.uniform(0, 4));
    // affine 3D embedding of the plane
    auto embed = [](const Vec2& p) {
        return Vec3(3 * p.x() - p.y() + 1, 0.5 * p.x() + 2 * p.y() - 4, p.x() + p.y());
    };
    std::vector<Vec3> pos;
    for (const Vec2& p : pts) pos.push_back(embed(p));
    FlatTriangulation flat(pts, delaunay_2d(pts), pos);

    for (int trial = 0; trial < 100; ++trial) {
        const Vec2 q(rng.uniform(0, 4), rng.uniform(0, 4));
        if (!flat.contains(q)) continue;
        CHECK((flat.to_3d(q) - embed(q)).norm() < 1e-9);
    }
}

TEST_CASE("outside-hull queries report the nearest boundary point") {
    const std::vector<Vec2> pts{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    FlatTriangulation flat(pts, delaunay_2d(pts), {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}});
    auto loc = flat.locate(Vec2(0.5, -1.0));
    CHECK(loc.triangle == -1);
    CHECK((loc.nearest_boundary - Vec2(0.5, 0)).norm() < 1e-12);
    CHECK_THROWS_WITH_AS(flat.to_3d(Vec2(0.5, -1.0)), doctest::Contains("nearest boundary"),
                         Error);
}
