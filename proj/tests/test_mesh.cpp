#include <doctest.h>

#include "rvc/mesh.hpp"
#include "rvc/mesh_io.hpp"
#include "rvc/rng.hpp"
#include "support/test_surfaces.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace rvc;
namespace ts = rvc::testsupport;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "rvcurve_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("single-triangle OBJ loads") {
    auto path = temp_file("tri.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    }
    Mesh mesh = load_mesh(path.string());
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.triangle_count() == 1);
    CHECK(mesh.vertices()[1].x() == 1.0);
}

TEST_CASE("quad face is rejected with position") {
    auto path = temp_file("quad.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
    }
    CHECK_THROWS_WITH_AS(load_mesh(path.string()),
                         doctest::Contains("non-triangular face"), Error);
}

TEST_CASE("degenerate triangle is rejected at load") {
    auto path = temp_file("degen.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n";
    }
    CHECK_THROWS_AS(load_mesh(path.string()), Error);
}

TEST_CASE("out-of-range face index is reported") {
    auto path = temp_file("range.obj");
    {
        std::ofstream out(path);
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 7\n";
    }
    CHECK_THROWS_WITH_AS(load_mesh(path.string()), doctest::Contains("out of range"), Error);
}

TEST_CASE("obj and ply round-trips preserve vertices") {
    StreamRng rng(42);
    Mesh mesh = ts::grid_surface(7, 0.5, [&](double x, double y) {
        return 0.1 * std::sin(x) * std::cos(y);
    });

    auto check_roundtrip = [&](const std::string& name, MeshFormat format) {
        auto path = temp_file(name);
        save_mesh(mesh, path.string(), format);
        Mesh loaded = load_mesh(path.string(), format);
        REQUIRE(loaded.vertex_count() == mesh.vertex_count());
        REQUIRE(loaded.triangle_count() == mesh.triangle_count());
        for (int v = 0; v < mesh.vertex_count(); ++v)
            CHECK((loaded.vertices()[size_t(v)] - mesh.vertices()[size_t(v)]).norm() < 1e-9);
        CHECK(loaded.triangles() == mesh.triangles());
    };
    check_roundtrip("rt.obj", MeshFormat::Obj);
    check_roundtrip("rt_ascii.ply", MeshFormat::PlyAscii);
    check_roundtrip("rt_bin.ply", MeshFormat::PlyBinaryLE);
}

TEST_CASE("flat grid normals point up") {
    Mesh mesh = ts::grid_surface(5, 1.0, [](double, double) { return 0.0; });
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        CHECK((mesh.vertex_normal(v) - Vec3(0, 0, 1)).norm() < 1e-12);
        CHECK(std::abs(mesh.vertex_normal(v).norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("sphere normals align with the radial direction") {
    Mesh mesh = ts::icosphere(1.0, 3);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const Vec3 radial = mesh.vertices()[size_t(v)].normalized();
        const double angle =
            std::acos(std::clamp(mesh.vertex_normal(v).dot(radial), -1.0, 1.0));
        CHECK(angle < 2.0 * M_PI / 180.0);
    }
}

TEST_CASE("single triangle: all vertex normals equal the face normal") {
    Mesh mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{{0, 1, 2}}});
    for (int v = 0; v < 3; ++v)
        CHECK((mesh.vertex_normal(v) - mesh.triangle_normal(0)).norm() < 1e-15);
}

TEST_CASE("isolated vertex is named in the normal error") {
    Mesh mesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}}, {{{0, 1, 2}}});
    CHECK_THROWS_WITH_AS(mesh.vertex_normal(3), doctest::Contains("3"), Error);
}

TEST_CASE("neighborhood: degenerate radius returns only the seed") {
    Mesh mesh = ts::grid_surface(5, 1.0, [](double, double) { return 0.0; });
    CHECK(mesh.neighborhood(12, 0.5) == std::vector<int>{12});
}

TEST_CASE("neighborhood matches a brute-force BFS oracle on the grid") {
    const int n = 9;
    const double h = 1.0;
    Mesh mesh = ts::grid_surface(n, h, [](double, double) { return 0.0; });
    const int seed = 4 * n + 4;
    const double radius = 2.5 * h;

    // oracle: breadth-first growth admitting vertices within the seed ball
    std::set<int> oracle{seed};
    bool grew = true;
    while (grew) {
        grew = false;
        for (int v : std::vector<int>(oracle.begin(), oracle.end())) {
            for (int w : mesh.vertex_neighbors(v)) {
                if (oracle.count(w)) continue;
                if ((mesh.vertices()[size_t(w)] - mesh.vertices()[size_t(seed)]).norm() <=
                    radius) {
                    oracle.insert(w);
                    grew = true;
                }
            }
        }
    }
    const std::vector<int> got = mesh.neighborhood(seed, radius);
    CHECK(got == std::vector<int>(oracle.begin(), oracle.end()));
    CHECK(got.size() == 21); // seed + all offsets with dx^2 + dy^2 <= 6.25
}

TEST_CASE("neighborhood does not leak across disconnected components") {
    // two parallel strips, spatially close but unconnected
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    for (int strip = 0; strip < 2; ++strip) {
        int base = int(vertices.size());
        for (int i = 0; i < 4; ++i) {
            vertices.emplace_back(i, strip * 0.2, 0);
            vertices.emplace_back(i, strip * 0.2 + 0.1, 0);
        }
        for (int i = 0; i < 3; ++i) {
            int a = base + 2 * i;
            triangles.push_back({a, a + 2, a + 1});
            triangles.push_back({a + 1, a + 2, a + 3});
        }
    }
    Mesh mesh(vertices, triangles);
    const auto ball = mesh.neighborhood(0, 10.0);
    for (int v : ball) CHECK(v < 8);
}

TEST_CASE("neighborhood is monotone in the radius") {
    Mesh mesh = ts::grid_surface(9, 0.7, [](double x, double y) { return 0.05 * x * y; });
    StreamRng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int seed = int(rng.next_below(std::uint64_t(mesh.vertex_count())));
        double r1 = rng.uniform(0.3, 3.0);
        double r2 = r1 + rng.uniform(0.0, 2.0);
        auto small = mesh.neighborhood(seed, r1);
        auto large = mesh.neighborhood(seed, r2);
        CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
    }
}

TEST_CASE("barycentric weights: vertices, centroid, and a linear-solve oracle") {
    const std::array<Vec2, 3> tri{Vec2(0, 0), Vec2(2, 0.3), Vec2(0.5, 1.7)};

    auto w = barycentric_2d(tri, tri[0]);
    CHECK(std::abs(w[0] - 1) < 1e-12);
    CHECK(std::abs(w[1]) < 1e-12);
    CHECK(std::abs(w[2]) < 1e-12);

    const Vec2 centroid = (tri[0] + tri[1] + tri[2]) / 3.0;
    w = barycentric_2d(tri, centroid);
    for (double wi : w) CHECK(std::abs(wi - 1.0 / 3.0) < 1e-12);

    StreamRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        double u = rng.next_double(), v = rng.uniform(0, 1 - u);
        const Vec2 q = (1 - u - v) * tri[0] + u * tri[1] + v * tri[2];
        w = barycentric_2d(tri, q);

        // oracle: direct 3x3 solve of [v1 v2 v3; 1 1 1] w = [q; 1]
        Eigen::Matrix3d m;
        m << tri[0].x(), tri[1].x(), tri[2].x(), tri[0].y(), tri[1].y(), tri[2].y(), 1, 1, 1;
        Eigen::Vector3d rhs(q.x(), q.y(), 1.0);
        Eigen::Vector3d expect = m.fullPivLu().solve(rhs);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(w[size_t(k)] - expect[k]) < 1e-9);

        // reconstruction invariant
        const Vec2 rec = w[0] * tri[0] + w[1] * tri[1] + w[2] * tri[2];
        CHECK((rec - q).norm() < 1e-9);
        CHECK(std::abs(w[0] + w[1] + w[2] - 1) < 1e-12);
    }
}

TEST_CASE("degenerate barycentric triangle throws") {
    CHECK_THROWS_AS(barycentric_2d({Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)}, Vec2(0.5, 0)), Error);
}

TEST_CASE("landmarks snap onto the surface") {
    Mesh mesh = ts::grid_surface(5, 1.0, [](double, double) { return 0.0; });
    LandmarkSet set({{"a", Vec3(1.3, 1.2, 0.4)}, {"b", Vec3(2, 2, -0.7)}}, mesh);
    CHECK((set.at("a") - Vec3(1.3, 1.2, 0.0)).norm() < 1e-12);
    CHECK((set.at("b") - Vec3(2, 2, 0)).norm() < 1e-12);
    CHECK_THROWS_WITH_AS(set.at("missing"), doctest::Contains("missing"), Error);
}

TEST_CASE("landmark json round-trip") {
    auto path = temp_file("landmarks.json");
    std::map<std::string, Vec3> lm{{"left", Vec3(1, 2, 3)}, {"right", Vec3(-1, 0.5, 9)}};
    save_landmarks(lm, path.string());
    auto loaded = load_landmarks(path.string());
    REQUIRE(loaded.size() == 2);
    CHECK((loaded["left"] - lm["left"]).norm() == 0);
    CHECK((loaded["right"] - lm["right"]).norm() == 0);
}

TEST_CASE("surface curve arc lengths and interpolation") {
    SurfaceCurve c = SurfaceCurve::from_points({{0, 0, 0}, {1, 0, 0}, {1, 2, 0}});
    CHECK(c.length() == doctest::Approx(3.0));
    CHECK((c.point_at(0.5) - Vec3(0.5, 0, 0)).norm() < 1e-12);
    CHECK((c.point_at(2.0) - Vec3(1, 1, 0)).norm() < 1e-12);
    CHECK((c.point_at(99) - Vec3(1, 2, 0)).norm() < 1e-12); // clamped

    auto path = temp_file("curve.csv");
    save_curve_csv(c, path.string());
    SurfaceCurve back = load_curve_csv(path.string());
    REQUIRE(back.points.size() == 3);
    for (size_t i = 0; i < 3; ++i) CHECK((back.points[i] - c.points[i]).norm() < 1e-12);
}
