#include "rvc/curvature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numbers>

namespace rvc {

std::optional<double> shape_index(double kappa1, double kappa2, ShapeIndexScale scale) {
    if (kappa1 == 0.0 && kappa2 == 0.0) return std::nullopt;
    double unit; // the (0, 1) scale: 1/2 - atan(ratio)/pi
    if (kappa1 == kappa2) {
        unit = kappa1 > 0 ? 0.0 : 1.0; // umbilic limit
    } else {
        unit = 0.5 - std::atan((kappa1 + kappa2) / (kappa1 - kappa2)) / std::numbers::pi;
    }
    return scale == ShapeIndexScale::UnitInterval ? unit : 2.0 * unit - 1.0;
}

double class_strength(double kappa1, double kappa2, std::optional<double> s, CurveClass mode) {
    if (!s) return 0.0;
    if (mode == CurveClass::Valley) return *s < 0 ? std::max(kappa1, kappa2) : 0.0;
    return *s > 0 ? -std::min(kappa1, kappa2) : 0.0;
}

TangentFrame make_frame(const Vec3& normal) {
    TangentFrame f;
    f.normal = normal.normalized();
    // pick the world axis least aligned with the normal
    Vec3 axis = std::abs(f.normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    f.t1 = (axis - axis.dot(f.normal) * f.normal).normalized();
    f.t2 = f.normal.cross(f.t1);
    return f;
}

QuadCoeffs fit_quadratic_patch(const Mesh& mesh, int vertex,
                               const std::vector<int>& neighborhood,
                               const TangentFrame& frame) {
    if (neighborhood.size() < 6)
        throw Error("vertex " + std::to_string(vertex) + ": neighbourhood has only " +
                    std::to_string(neighborhood.size()) + " points (need >= 6)");
    const Vec3& origin = mesh.vertices()[size_t(vertex)];

    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (int w : neighborhood) {
        const Vec3 local = mesh.vertices()[size_t(w)] - origin;
        const double u = local.dot(frame.t1);
        const double v = local.dot(frame.t2);
        const double h = local.dot(frame.normal);
        Eigen::Vector3d row(0.5 * u * u, u * v, 0.5 * v * v);
        ata.noalias() += row * row.transpose();
        atb.noalias() += row * h;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
    lu.setThreshold(1e-10);
    if (lu.rank() < 3)
        throw Error("vertex " + std::to_string(vertex) +
                    ": rank-deficient quadratic design (points nearly collinear in the "
                    "tangent plane)");
    Eigen::Vector3d sol = lu.solve(atb);
    return QuadCoeffs{sol[0], sol[1], sol[2]};
}

PrincipalCurvature principal_from_patch(const QuadCoeffs& coeffs, const TangentFrame& frame) {
    Eigen::Matrix2d w;
    w << coeffs.a, coeffs.b, coeffs.b, coeffs.c;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(w);
    // Eigen sorts ascending
    PrincipalCurvature pc;
    pc.kappa2 = eig.eigenvalues()[0];
    pc.kappa1 = eig.eigenvalues()[1];
    const Eigen::Vector2d v1 = eig.eigenvectors().col(1);
    const Eigen::Vector2d v2 = eig.eigenvectors().col(0);
    pc.dir1 = (v1[0] * frame.t1 + v1[1] * frame.t2).normalized();
    pc.dir2 = (v2[0] * frame.t1 + v2[1] * frame.t2).normalized();
    pc.umbilic = pc.kappa1 == pc.kappa2;
    return pc;
}

std::vector<Vec3> consistent_vertex_normals(const Mesh& mesh) {
    const auto& tris = mesh.triangles();
    const int nt = mesh.triangle_count();

    // flip[t] records whether triangle t's winding disagrees with the
    // orientation propagated from the largest triangle of its patch
    std::vector<char> flip(size_t(nt), 0), seen(size_t(nt), 0);

    // adjacency via shared directed edges
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (int t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            auto key = std::minmax(tris[size_t(t)][size_t(k)], tris[size_t(t)][size_t((k + 1) % 3)]);
            edge_tris[key].push_back(t);
        }
    }
    auto directed_contains = [&](int t, int a, int b, bool flipped) {
        // does triangle t (after optional flip) traverse edge a->b?
        const auto& tri = tris[size_t(t)];
        for (int k = 0; k < 3; ++k) {
            int u = tri[size_t(k)], v = tri[size_t((k + 1) % 3)];
            if (flipped) std::swap(u, v);
            if (u == a && v == b) return true;
        }
        return false;
    };

    std::vector<int> order(static_cast<size_t>(nt));
    for (int t = 0; t < nt; ++t) order[size_t(t)] = t;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return mesh.triangle_area(a) > mesh.triangle_area(b); });

    for (int root : order) {
        if (seen[size_t(root)]) continue;
        seen[size_t(root)] = 1;
        std::deque<int> queue{root};
        while (!queue.empty()) {
            int t = queue.front();
            queue.pop_front();
            const auto& tri = tris[size_t(t)];
            for (int k = 0; k < 3; ++k) {
                int a = tri[size_t(k)], b = tri[size_t((k + 1) % 3)];
                if (flip[size_t(t)]) std::swap(a, b);
                auto key = std::minmax(a, b);
                for (int other : edge_tris[key]) {
                    if (other == t || seen[size_t(other)]) continue;
                    seen[size_t(other)] = 1;
                    // consistent winding means the neighbour traverses b->a
                    flip[size_t(other)] = directed_contains(other, a, b, false) ? 1 : 0;
                    queue.push_back(other);
                }
            }
        }
    }

    std::vector<Vec3> normals(size_t(mesh.vertex_count()), Vec3::Zero());
    for (int t = 0; t < nt; ++t) {
        Vec3 n = mesh.triangle_normal(t);
        if (flip[size_t(t)]) n = -n;
        for (int k = 0; k < 3; ++k) normals[size_t(tris[size_t(t)][size_t(k)])] += n;
    }
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        double len = normals[size_t(v)].norm();
        if (len < 1e-14)
            throw Error("vertex " + std::to_string(v) +
                        " is isolated or has cancelling face normals");
        normals[size_t(v)] /= len;
    }
    return normals;
}

CurvatureField compute_curvature_field(const Mesh& mesh, double radius, CurveClass mode,
                                       const FieldOptions& options) {
    CurvatureField field;
    field.mode = mode;
    field.radius = radius;
    field.vertices.resize(size_t(mesh.vertex_count()));

    const std::vector<Vec3> normals = consistent_vertex_normals(mesh);

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (failure) continue;
        try {
            const std::vector<int>& ring =
                options.neighborhood_override
                    ? (*options.neighborhood_override)[size_t(v)]
                    : mesh.neighborhood(v, radius);
            TangentFrame frame = make_frame(normals[size_t(v)]);
            QuadCoeffs coeffs;
            try {
                coeffs = fit_quadratic_patch(mesh, v, ring, frame);
            } catch (const Error&) {
                if (options.on_failure == FitFailurePolicy::MarkUndefined) {
                    field.vertices[size_t(v)] = VertexCurvature{};
                    continue;
                }
                throw;
            }
            VertexCurvature vc;
            vc.principal = principal_from_patch(coeffs, frame);
            vc.shape_index = shape_index(vc.principal.kappa1, vc.principal.kappa2, options.scale);
            vc.strength =
                class_strength(vc.principal.kappa1, vc.principal.kappa2, vc.shape_index, mode);
            vc.defined = true;
            field.vertices[size_t(v)] = vc;
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return field;
}

void save_curvature_csv(const CurvatureField& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    out << "vertex_index,kappa1,kappa2,shape_index,strength\n";
    for (size_t v = 0; v < field.vertices.size(); ++v) {
        const auto& vc = field.vertices[v];
        out << v << "," << vc.principal.kappa1 << "," << vc.principal.kappa2 << ",";
        if (vc.shape_index)
            out << *vc.shape_index;
        else
            out << "nan";
        out << "," << vc.strength << "\n";
    }
}

} // namespace rvc
