#include "rvc/refpath.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <set>

namespace rvc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

LocalRegion localize(const Mesh& mesh, const Vec3& l1, const Vec3& l2, double radius) {
    const Vec3 d = l2 - l1;
    const double length = d.norm();
    if (!(length > 0)) throw Error("localize: landmarks coincide");
    const Vec3 axis = d / length;
    double r = radius > 0 ? radius : 0.5 * length;

    LocalRegion region;
    region.l1 = l1;
    region.l2 = l2;
    region.radius = r;
    region.axis = axis;

    const int nv = mesh.vertex_count();
    std::vector<char> in_cyl(size_t(nv), 0);
    const double axial_pad = std::isfinite(r) ? 0.1 * length : kInf;
    for (int v = 0; v < nv; ++v) {
        const Vec3 rel = mesh.vertices()[size_t(v)] - l1;
        const double t = rel.dot(axis);
        const double radial = (rel - t * axis).norm();
        if (radial <= r && t >= -axial_pad && t <= length + axial_pad) in_cyl[size_t(v)] = 1;
    }
    // the triangles holding the landmarks must survive the mask, or no plane
    // cut could start there
    for (const Vec3* lm : {&l1, &l2}) {
        const auto sp = mesh.closest_surface_point(*lm);
        for (int k = 0; k < 3; ++k)
            in_cyl[size_t(mesh.triangles()[size_t(sp.triangle)][size_t(k)])] = 1;
    }

    auto nearest_masked = [&](const Vec3& p) {
        int best = -1;
        double best_d = kInf;
        for (int v = 0; v < nv; ++v) {
            if (!in_cyl[size_t(v)]) continue;
            double dist = (mesh.vertices()[size_t(v)] - p).norm();
            if (dist < best_d) {
                best_d = dist;
                best = v;
            }
        }
        return best;
    };
    const int seed1 = nearest_masked(l1);
    const int seed2 = nearest_masked(l2);
    if (seed1 < 0 || seed2 < 0) throw Error("localize: cylinder mask is empty");

    // component of seed1 over edges between masked vertices
    std::vector<char> comp(size_t(nv), 0);
    std::deque<int> queue{seed1};
    comp[size_t(seed1)] = 1;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w : mesh.vertex_neighbors(v)) {
            if (!in_cyl[size_t(w)] || comp[size_t(w)]) continue;
            comp[size_t(w)] = 1;
            queue.push_back(w);
        }
    }
    if (!comp[size_t(seed2)])
        throw Error("localize: landmarks lie in different components of the masked region");

    region.vertex_mask = comp;
    for (int v = 0; v < nv; ++v)
        if (comp[size_t(v)]) region.vertices.push_back(v);

    Vec3 mean_normal = Vec3::Zero();
    std::vector<double> edge_lengths;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles()[size_t(t)];
        if (!(comp[size_t(tri[0])] && comp[size_t(tri[1])] && comp[size_t(tri[2])])) continue;
        region.triangles.push_back(t);
        mean_normal += mesh.triangle_normal(t);
        for (int k = 0; k < 3; ++k) {
            if (tri[size_t(k)] < tri[size_t((k + 1) % 3)])
                edge_lengths.push_back((mesh.vertices()[size_t(tri[size_t(k)])] -
                                        mesh.vertices()[size_t(tri[size_t((k + 1) % 3)])]
                                       ).norm());
        }
    }
    if (region.triangles.empty()) throw Error("localize: no triangles survive the mask");

    std::sort(edge_lengths.begin(), edge_lengths.end());
    region.median_edge = edge_lengths[edge_lengths.size() / 2];

    // gamma = 0 direction: mean normal projected orthogonal to the axis
    Vec3 e0 = mean_normal - mean_normal.dot(axis) * axis;
    if (e0.norm() < 1e-9) {
        // mean normal parallel to the axis; fall back to any perpendicular
        Vec3 seed = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        e0 = seed - seed.dot(axis) * axis;
    }
    region.e0 = e0.normalized();
    region.e90 = axis.cross(region.e0);
    return region;
}

namespace {

// Symbolic node on the plane-mesh intersection: either a mesh vertex lying on
// the plane or a crossing point in the interior of a mesh edge.
struct NodeKey {
    int a = -1, b = -1; // vertex node: (v, -1); edge node: (min, max)
    bool operator<(const NodeKey& o) const { return std::tie(a, b) < std::tie(o.a, o.b); }
    bool operator==(const NodeKey& o) const { return a == o.a && b == o.b; }
};

struct CutGraph {
    std::vector<Vec3> position;
    std::vector<double> nu;
    std::vector<std::vector<std::pair<int, double>>> adj; // (node, length)
    std::map<NodeKey, int> index;

    int node(const NodeKey& key, const Vec3& pos, double strength) {
        auto it = index.find(key);
        if (it != index.end()) return it->second;
        int id = int(position.size());
        index[key] = id;
        position.push_back(pos);
        nu.push_back(strength);
        adj.emplace_back();
        return id;
    }

    void connect(int u, int v) {
        if (u == v) return;
        double len = (position[size_t(u)] - position[size_t(v)]).norm();
        for (const auto& [w, l] : adj[size_t(u)])
            if (w == v) return;
        adj[size_t(u)].push_back({v, len});
        adj[size_t(v)].push_back({u, len});
    }
};

} // namespace

PlaneCut plane_cut(const Mesh& mesh, const LocalRegion& region, double gamma,
                   const CurvatureField* field) {
    const Vec3 normal = (std::cos(gamma) * region.e90 - std::sin(gamma) * region.e0).normalized();
    const Vec3& l1 = region.l1;
    const Vec3& l2 = region.l2;
    const double scale = std::max(1.0, (l2 - l1).norm());
    const double tol = 1e-9 * scale;

    auto height = [&](int v) { return (mesh.vertices()[size_t(v)] - l1).dot(normal); };
    auto strength_at = [&](int v) { return field ? field->strength(v) : 0.0; };
    auto snap = [&](const Vec3& p) { return p - ((p - l1).dot(normal)) * normal; };

    CutGraph graph;
    auto vertex_node = [&](int v) {
        return graph.node(NodeKey{v, -1}, snap(mesh.vertices()[size_t(v)]), strength_at(v));
    };
    auto edge_node = [&](int u, int v, double hu, double hv) {
        auto [a, b] = std::minmax(u, v);
        double t = hu / (hu - hv); // hu, hv have opposite signs
        const Vec3 p = mesh.vertices()[size_t(u)] +
                       t * (mesh.vertices()[size_t(v)] - mesh.vertices()[size_t(u)]);
        double s = strength_at(u) + t * (strength_at(v) - strength_at(u));
        return graph.node(NodeKey{a, b}, snap(p), s);
    };

    for (int t : region.triangles) {
        const auto& tri = mesh.triangles()[size_t(t)];
        double h[3];
        int side[3];
        for (int k = 0; k < 3; ++k) {
            h[k] = height(tri[size_t(k)]);
            side[k] = std::abs(h[k]) <= tol ? 0 : (h[k] > 0 ? 1 : -1);
        }
        std::vector<int> nodes;
        // on-plane vertices participate directly
        std::vector<int> zero, pos, neg;
        for (int k = 0; k < 3; ++k)
            (side[k] == 0 ? zero : side[k] > 0 ? pos : neg).push_back(k);

        if (zero.size() == 3) {
            // coplanar triangle: contribute its edges
            for (int k = 0; k < 3; ++k)
                graph.connect(vertex_node(tri[size_t(k)]), vertex_node(tri[size_t((k + 1) % 3)]));
            continue;
        }
        if (zero.size() == 2) {
            graph.connect(vertex_node(tri[size_t(zero[0])]), vertex_node(tri[size_t(zero[1])]));
            continue;
        }
        if (zero.size() == 1 && pos.size() == 1 && neg.size() == 1) {
            int u = tri[size_t(pos[0])], v = tri[size_t(neg[0])];
            graph.connect(vertex_node(tri[size_t(zero[0])]),
                          edge_node(u, v, h[pos[0]], h[neg[0]]));
            continue;
        }
        if (!pos.empty() && !neg.empty()) {
            // classic straddle: two crossing edges
            int lone = pos.size() == 1 ? pos[0] : neg[0];
            int other1 = (lone + 1) % 3, other2 = (lone + 2) % 3;
            int n1 = edge_node(tri[size_t(lone)], tri[size_t(other1)], h[lone], h[other1]);
            int n2 = edge_node(tri[size_t(lone)], tri[size_t(other2)], h[lone], h[other2]);
            graph.connect(n1, n2);
        }
        // single on-plane vertex with both others on one side: point touch, ignored
    }

    if (graph.position.empty())
        throw Error("plane_cut: the plane misses the region at gamma = " + std::to_string(gamma));

    // attach the landmarks to the graph (they lie on the intersection curve)
    auto attach = [&](const Vec3& p) {
        int best_u = -1, best_v = -1;
        double best_d = kInf, best_t = 0;
        for (size_t u = 0; u < graph.adj.size(); ++u) {
            for (const auto& [v, len] : graph.adj[u]) {
                if (int(u) > v) continue;
                const Vec3& a = graph.position[u];
                const Vec3& b = graph.position[size_t(v)];
                Vec3 ab = b - a;
                double t = len > 0 ? std::clamp((p - a).dot(ab) / (len * len), 0.0, 1.0) : 0.0;
                double dist = (a + t * ab - p).norm();
                if (dist < best_d) {
                    best_d = dist;
                    best_u = int(u);
                    best_v = v;
                    best_t = t;
                }
            }
        }
        if (best_u < 0 || best_d > 1e-6 * scale + 1e-9)
            throw Error("plane_cut: landmark does not lie on the plane-mesh intersection "
                        "(distance " + std::to_string(best_d) + ")");
        double nu_c = graph.nu[size_t(best_u)] +
                      best_t * (graph.nu[size_t(best_v)] - graph.nu[size_t(best_u)]);
        int id = int(graph.position.size());
        graph.position.push_back(p);
        graph.nu.push_back(nu_c);
        graph.adj.emplace_back();
        graph.connect(id, best_u);
        graph.connect(id, best_v);
        return id;
    };
    const int start = attach(l1);
    const int goal = attach(l2);

    // shortest intersection path between the landmarks
    const size_t n_nodes = graph.position.size();
    std::vector<double> dist(n_nodes, kInf);
    std::vector<int> prev(n_nodes, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[size_t(start)] = 0;
    heap.push({0, start});
    while (!heap.empty()) {
        auto [d0, u] = heap.top();
        heap.pop();
        if (d0 > dist[size_t(u)]) continue;
        if (u == goal) break;
        for (const auto& [v, len] : graph.adj[size_t(u)]) {
            double nd = d0 + len;
            if (nd < dist[size_t(v)]) {
                dist[size_t(v)] = nd;
                prev[size_t(v)] = u;
                heap.push({nd, v});
            }
        }
    }
    if (!std::isfinite(dist[size_t(goal)]))
        throw Error("plane_cut: no intersection component joins the landmarks at gamma = " +
                    std::to_string(gamma));

    std::vector<int> chain;
    for (int v = goal; v != -1; v = prev[size_t(v)]) chain.push_back(v);
    std::reverse(chain.begin(), chain.end());

    // assemble, dropping interior nodes that crowd the endpoints
    const double crowd = 0.5 * region.median_edge;
    std::vector<Vec3> pts;
    std::vector<double> nu;
    for (size_t i = 0; i < chain.size(); ++i) {
        const Vec3& p = graph.position[size_t(chain[i])];
        const bool endpoint = i == 0 || i + 1 == chain.size();
        if (!endpoint) {
            if ((p - l1).norm() < crowd || (p - l2).norm() < crowd) continue;
            if (!pts.empty() && (p - pts.back()).norm() < 1e-12) continue;
        }
        if (endpoint && !pts.empty() && (p - pts.back()).norm() < 1e-12) {
            pts.pop_back();
            nu.pop_back();
        }
        pts.push_back(p);
        nu.push_back(graph.nu[size_t(chain[i])]);
    }
    if (pts.size() < 2) throw Error("plane_cut: degenerate path");

    PlaneCut cut;
    cut.gamma = gamma;
    cut.plane_point = l1;
    cut.plane_normal = normal;
    cut.path = SurfaceCurve::from_points(std::move(pts));
    cut.nu = std::move(nu);
    return cut;
}

double standardized_curvature_integral(const PlaneCut& cut) {
    const auto& pts = cut.path.points;
    if (pts.size() < 2) throw Error("standardized integral needs at least 2 path points");
    double num = 0, den = 0;
    for (size_t j = 1; j < pts.size(); ++j) {
        double w = cut.path.arc_lengths[j] - cut.path.arc_lengths[j - 1];
        num += w * cut.nu[j];
        den += w;
    }
    if (!(den > 0)) throw Error("standardized integral of zero-length path");
    return num / den;
}

ReferencePathResult optimal_reference_path(const Mesh& mesh, const LocalRegion& region,
                                           const CurvatureField* field, PathObjective objective,
                                           int n_angles, bool refine) {
    if (n_angles < 2) throw Error("optimal_reference_path needs n_angles >= 2");

    const bool maximize = objective == PathObjective::MaxCurvature;
    ReferencePathResult result;
    bool have = false;
    double best_score = maximize ? -kInf : kInf;

    auto evaluate = [&](double gamma) -> double {
        PlaneCut cut = plane_cut(mesh, region, gamma, field);
        double value = maximize ? standardized_curvature_integral(cut) : cut.length();
        bool better = maximize ? value > best_score : value < best_score;
        if (!have || better) {
            have = true;
            best_score = value;
            result.best = std::move(cut);
            result.objective = value;
        }
        return value;
    };

    double grid_best_gamma = 0;
    bool grid_have = false;
    for (int k = 0; k < n_angles; ++k) {
        const double gamma = k * std::numbers::pi / n_angles;
        try {
            double prev = best_score;
            double value = evaluate(gamma);
            result.samples.push_back({gamma, value});
            bool better = maximize ? value > prev : value < prev;
            if (!grid_have || better) {
                grid_have = true;
                grid_best_gamma = gamma;
            }
        } catch (const Error&) {
            // this angle produced no valid cut
        }
    }
    if (!have) throw Error("optimal_reference_path: every sampled angle failed");

    if (refine) {
        // one golden-section pass in the bracket around the best grid angle
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        const double half = std::numbers::pi / n_angles;
        double lo = grid_best_gamma - half, hi = grid_best_gamma + half;
        auto safe_eval = [&](double gamma) {
            try {
                return evaluate(gamma) * (maximize ? 1.0 : -1.0);
            } catch (const Error&) {
                return -kInf;
            }
        };
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = safe_eval(x1), f2 = safe_eval(x2);
        for (int iter = 0; iter < 30 && hi - lo > 1e-6; ++iter) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = safe_eval(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = safe_eval(x1);
            }
        }
    }
    return result;
}

} // namespace rvc
