#pragma once

#include "rvc/core.hpp"
#include "rvc/mesh.hpp"

#include <optional>
#include <vector>

namespace rvc {

/// Orthonormal frame at a vertex: two tangent axes plus the normal used as
/// the height axis of the local quadratic fit.
struct TangentFrame {
    Vec3 t1, t2, normal;
};

/// Coefficients of the local model  h = (a u^2 + 2 b u v + c v^2) / 2
/// expressed in a tangent frame; [[a, b], [b, c]] is the Weingarten matrix.
struct QuadCoeffs {
    double a = 0, b = 0, c = 0;
};

struct PrincipalCurvature {
    double kappa1 = 0; // larger eigenvalue, positive when bending toward the normal
    double kappa2 = 0;
    Vec3 dir1 = Vec3::Zero();
    Vec3 dir2 = Vec3::Zero();
    bool umbilic = false; // directions are arbitrary within the tangent plane
};

enum class CurveClass { Valley, Ridge };

/// Scale of the shape index.  Symmetric runs from -1 (cup) through 0 (saddle)
/// to +1 (cap); UnitInterval is the equivalent (0, 1) form, related by
/// symmetric = 2 * unit - 1.
enum class ShapeIndexScale { Symmetric, UnitInterval };

/// Shape index of a curvature pair (kappa1 >= kappa2).  Undefined (nullopt)
/// exactly when both curvatures vanish.  Depends only on the kappa ratio, so
/// it classifies the type of curvature but not its strength.
std::optional<double> shape_index(double kappa1, double kappa2,
                                  ShapeIndexScale scale = ShapeIndexScale::Symmetric);

/// Strength of one vertex for the requested curve class: valleys score
/// max(kappa1, kappa2) where the shape index is negative, ridges score
/// -min(kappa1, kappa2) where it is positive; zero outside the class mask.
double class_strength(double kappa1, double kappa2, std::optional<double> s, CurveClass mode);

/// Least-squares fit of the quadratic model to neighbourhood points expressed
/// in the vertex frame.  Needs at least 6 points with full-rank design.
QuadCoeffs fit_quadratic_patch(const Mesh& mesh, int vertex,
                               const std::vector<int>& neighborhood,
                               const TangentFrame& frame);

/// Eigen-decomposition of the Weingarten matrix, rotated into 3D by the frame.
PrincipalCurvature principal_from_patch(const QuadCoeffs& coeffs, const TangentFrame& frame);

/// Frame with the given normal as height axis and arbitrary orthogonal
/// tangent axes.
TangentFrame make_frame(const Vec3& normal);

/// Unit vertex normals after winding has been made consistent by propagation
/// from the largest triangle.  Identical to Mesh::vertex_normals() when the
/// stored winding is already consistent.
std::vector<Vec3> consistent_vertex_normals(const Mesh& mesh);

struct VertexCurvature {
    PrincipalCurvature principal;
    std::optional<double> shape_index;
    double strength = 0; // >= 0; zero outside the class mask
    bool defined = false;
};

struct CurvatureField {
    std::vector<VertexCurvature> vertices;
    CurveClass mode = CurveClass::Valley;
    double radius = 0;

    double strength(int v) const { return vertices[size_t(v)].strength; }
};

enum class FitFailurePolicy {
    Throw,         // propagate patch-fit errors (the per-vertex contract)
    MarkUndefined, // leave the vertex undefined with zero strength
};

struct FieldOptions {
    FitFailurePolicy on_failure = FitFailurePolicy::Throw;
    ShapeIndexScale scale = ShapeIndexScale::Symmetric;
    /// Per-vertex neighbourhoods to use instead of the mesh BFS ball.
    const std::vector<std::vector<int>>* neighborhood_override = nullptr;
    int threads = 0; // 0 = default
};

/// Per-vertex principal curvatures, shape index and class strength.
/// Per-vertex fits are independent and run in parallel.
CurvatureField compute_curvature_field(const Mesh& mesh, double radius, CurveClass mode,
                                       const FieldOptions& options = {});

/// CSV export: vertex_index, kappa1, kappa2, shape_index, strength.
void save_curvature_csv(const CurvatureField& field, const std::string& path);

} // namespace rvc
