#include <doctest.h>

#include "rvc/flatten.hpp"
#include "rvc/rng.hpp"
#include "support/test_surfaces.hpp"

#include <cmath>

using namespace rvc;
namespace ts = rvc::testsupport;

namespace {

struct ValleyFixture {
    Mesh mesh;
    CurvatureField field;
    LocalRegion region;
    PlaneCut cut;

    ValleyFixture()
        : mesh(ts::grid_surface(21, 0.5, [](double, double y) {
              double yc = y - 5;
              return 0.5 * yc * yc;
          })) {
        field = compute_curvature_field(mesh, 1.0, CurveClass::Valley,
                                        {FitFailurePolicy::MarkUndefined});
        const Vec3 l1 = mesh.closest_surface_point(Vec3(1, 5, 0)).position;
        const Vec3 l2 = mesh.closest_surface_point(Vec3(9, 5, 0)).position;
        region = localize(mesh, l1, l2);
        cut = plane_cut(mesh, region, 0.0, &field);
    }
};

} // namespace

TEST_CASE("on-path vertices flatten to (arc length, 0)") {
    ValleyFixture fx;
    FlatDomain domain = flatten_region(fx.mesh, fx.region, fx.cut, fx.field);
    // vertices on the valley line y = 5 within the path's span lie on it
    for (const auto& p : domain.points) {
        if (p.source_vertex < 0) continue;
        const Vec3& v = fx.mesh.vertices()[size_t(p.source_vertex)];
        if (std::abs(v.y() - 5.0) < 1e-12 && v.x() >= 1.0 && v.x() <= 9.0) {
            CHECK(std::abs(p.d) < 1e-9);
            CHECK(p.s == doctest::Approx(v.x() - 1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("path endpoints map to s = 0 and s = L at d = 0") {
    ValleyFixture fx;
    FlatDomain domain = flatten_region(fx.mesh, fx.region, fx.cut, fx.field);
    const double L = domain.baseline_length;
    bool saw_start = false, saw_end = false;
    for (const auto& p : domain.points) {
        if (std::abs(p.s) < 1e-9 && std::abs(p.d) < 1e-9) saw_start = true;
        if (std::abs(p.s - L) < 1e-9 && std::abs(p.d) < 1e-9) saw_end = true;
    }
    CHECK(saw_start);
    CHECK(saw_end);
    CHECK(L == doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("d is signed consistently by the side of the cutting plane") {
    ValleyFixture fx;
    FlatDomain domain = flatten_region(fx.mesh, fx.region, fx.cut, fx.field);
    for (const auto& p : domain.points) {
        if (p.source_vertex < 0) continue;
        const Vec3& v = fx.mesh.vertices()[size_t(p.source_vertex)];
        const double side = (v - fx.cut.plane_point).dot(fx.cut.plane_normal);
        if (std::abs(side) > 1e-9) CHECK(p.d * side > 0);
    }
    // the flip flag mirrors d
    FlatDomain flipped = flatten_region(fx.mesh, fx.region, fx.cut, fx.field, true);
    REQUIRE(flipped.points.size() == domain.points.size());
    for (size_t i = 0; i < domain.points.size(); ++i)
        CHECK(flipped.points[i].d == doctest::Approx(-domain.points[i].d));
}

TEST_CASE("flattening a developable strip preserves nearby distances") {
    // bent-paper surface: x-direction rolled over a cylinder of radius 2
    const double radius = 2.0;
    Mesh mesh = ts::grid_surface(25, 0.25, [](double, double) { return 0.0; });
    std::vector<Vec3> bent;
    for (const Vec3& v : mesh.vertices()) {
        const double theta = v.x() / radius;
        bent.emplace_back(radius * std::sin(theta), v.y(), radius * (1 - std::cos(theta)));
    }
    Mesh cyl(bent, mesh.triangles());

    auto field = compute_curvature_field(cyl, 0.6, CurveClass::Valley,
                                         {FitFailurePolicy::MarkUndefined});
    // landmarks at the middle row ends; the cut runs across the bend
    const Vec3 l1 = cyl.closest_surface_point(bent[size_t(12 * 25)]).position;
    const Vec3 l2 = cyl.closest_surface_point(bent[size_t(12 * 25 + 24)]).position;
    LocalRegion region = localize(cyl, l1, l2, 100.0);
    PlaneCut cut = plane_cut(cyl, region, 0.0, &field);
    FlatDomain domain = flatten_region(cyl, region, cut, field);

    // intrinsic (unrolled) distances vs flattened distances for nearby pairs
    StreamRng rng(4);
    int checked = 0;
    for (int trial = 0; trial < 4000 && checked < 300; ++trial) {
        size_t i = rng.next_below(domain.points.size());
        size_t j = rng.next_below(domain.points.size());
        if (i == j) continue;
        const auto& a = domain.points[i];
        const auto& b = domain.points[j];
        if (a.source_vertex < 0 || b.source_vertex < 0) continue;
        const Vec2 fa(a.s, a.d), fb(b.s, b.d);
        if ((fa - fb).norm() > 1.5) continue; // nearby pairs only
        const Vec3& ua = mesh.vertices()[size_t(a.source_vertex)]; // unrolled
        const Vec3& ub = mesh.vertices()[size_t(b.source_vertex)];
        const double intrinsic = (ua - ub).norm();
        CHECK((fa - fb).norm() == doctest::Approx(intrinsic).epsilon(0.02));
        ++checked;
    }
    CHECK(checked >= 300);
}

TEST_CASE("flatten is equivariant under rigid motion") {
    Mesh mesh = ts::grid_surface(21, 0.5, [](double, double y) {
        double yc = y - 5;
        return 0.5 * yc * yc;
    });
    auto base_field = compute_curvature_field(mesh, 0.95, CurveClass::Valley,
                                              {FitFailurePolicy::MarkUndefined});
    const Vec3 b1 = mesh.closest_surface_point(Vec3(1, 5, 0)).position;
    const Vec3 b2 = mesh.closest_surface_point(Vec3(9, 5, 0)).position;
    LocalRegion base_region = localize(mesh, b1, b2);
    PlaneCut base_cut = plane_cut(mesh, base_region, 0.0, &base_field);
    FlatDomain base = flatten_region(mesh, base_region, base_cut, base_field);

    StreamRng rng(31);
    const Eigen::Matrix3d rot = ts::random_rotation(rng);
    const Vec3 shift(-3, 9, 1);
    Mesh moved = ts::transform_mesh(mesh, rot, shift);
    // 0.95 sits in a gap of the pairwise-distance spectrum, so ball
    // membership cannot flip under the rotation's roundoff
    auto field = compute_curvature_field(moved, 0.95, CurveClass::Valley,
                                         {FitFailurePolicy::MarkUndefined});
    LocalRegion region = localize(moved, rot * b1 + shift, rot * b2 + shift);
    PlaneCut cut = plane_cut(moved, region, 0.0, &field);
    FlatDomain turned = flatten_region(moved, region, cut, field);

    REQUIRE(turned.points.size() == base.points.size());
    // compare per source vertex (s, d, nu)
    std::map<int, FlatPoint> by_vertex;
    for (const auto& p : base.points) by_vertex[p.source_vertex] = p;
    for (const auto& p : turned.points) {
        if (p.source_vertex < 0) continue;
        const auto& q = by_vertex.at(p.source_vertex);
        CHECK(p.s == doctest::Approx(q.s).epsilon(1e-6));
        CHECK(std::abs(p.d) == doctest::Approx(std::abs(q.d)).epsilon(1e-6));
        CHECK(p.nu == doctest::Approx(q.nu).epsilon(1e-5));
    }
}

TEST_CASE("foot arc length varies continuously along near-path edges") {
    ValleyFixture fx;
    FlatDomain domain = flatten_region(fx.mesh, fx.region, fx.cut, fx.field);
    const double L = domain.baseline_length;

    std::map<int, const FlatPoint*> by_vertex;
    for (const auto& p : domain.points)
        if (p.source_vertex >= 0) by_vertex[p.source_vertex] = &p;

    for (const auto& [v, p] : by_vertex) {
        if (std::abs(p->d) > 0.1 * L) continue;
        for (int w : fx.mesh.vertex_neighbors(v)) {
            auto it = by_vertex.find(w);
            if (it == by_vertex.end() || std::abs(it->second->d) > 0.1 * L) continue;
            const double edge =
                (fx.mesh.vertices()[size_t(v)] - fx.mesh.vertices()[size_t(w)]).norm();
            const double max_seg = 0.5; // longest path segment on this fixture
            CHECK(std::abs(p->s - it->second->s) <= max_seg + edge + 1e-9);
        }
    }
}

TEST_CASE("flatten rejects empty regions") {
    ValleyFixture fx;
    LocalRegion empty = fx.region;
    empty.vertices.clear();
    CHECK_THROWS_AS(flatten_region(fx.mesh, empty, fx.cut, fx.field), Error);
}
