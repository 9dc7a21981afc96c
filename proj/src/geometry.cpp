#include "esfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace esfem {

void triangle_geometry(const Vec3& a, const Vec3& b, const Vec3& c, TriangleGeometry& out)
{
    const Vec3 cross = (b - a).cross(c - a);
    const double twice_area = cross.norm();
    const double h2 = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    out.area = 0.5 * twice_area;
    out.diameter = std::sqrt(h2);
    if (!(out.area >= 1e-14 * h2) || h2 == 0.0) {
        out.normal.setZero();
        return;
    }
    out.normal = cross / twice_area;
    // grad phi_i = n x (p_{i+2} - p_{i+1}) / (2|S|)
    out.basis_gradients[0] = out.normal.cross(c - b) / twice_area;
    out.basis_gradients[1] = out.normal.cross(a - c) / twice_area;
    out.basis_gradients[2] = out.normal.cross(b - a) / twice_area;
}

TriangleGeometry triangle_geometry(const SurfaceMesh& mesh, int t)
{
    const Tri& tri = mesh.triangle(t);
    TriangleGeometry g;
    triangle_geometry(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]), g);
    if (g.normal.isZero()) throw DegenerateTriangleError(t, "degenerate triangle");
    return g;
}

std::vector<TriangleGeometry> compute_geometry(const SurfaceMesh& mesh)
{
    std::vector<TriangleGeometry> out(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        triangle_geometry(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]), out[t]);
        if (out[t].normal.isZero()) throw DegenerateTriangleError(t, "degenerate triangle");
    }
    return out;
}

double triangle_area(const SurfaceMesh& mesh, int t)
{
    const Tri& tri = mesh.triangle(t);
    const Vec3& a = mesh.vertex(tri[0]);
    return 0.5 * (mesh.vertex(tri[1]) - a).cross(mesh.vertex(tri[2]) - a).norm();
}

double triangle_quality(const Vec3& a, const Vec3& b, const Vec3& c)
{
    const double lab = (b - a).norm();
    const double lbc = (c - b).norm();
    const double lca = (a - c).norm();
    const double h = std::max({lab, lbc, lca});
    const double area = 0.5 * (b - a).cross(c - a).norm();
    if (!(area >= 1e-14 * h * h) || h == 0.0) throw DegenerateTriangleError(-1, "degenerate triangle");
    const double semi_perimeter = 0.5 * (lab + lbc + lca);
    return h * semi_perimeter / area;
}

double triangle_quality(const SurfaceMesh& mesh, int t)
{
    const Tri& tri = mesh.triangle(t);
    try {
        return triangle_quality(mesh.vertex(tri[0]), mesh.vertex(tri[1]), mesh.vertex(tri[2]));
    } catch (const DegenerateTriangleError&) {
        throw DegenerateTriangleError(t, "degenerate triangle");
    }
}

QualityReport sigma_max(const SurfaceMesh& mesh)
{
    if (mesh.num_triangles() == 0) throw MeshError("sigma_max of a mesh without triangles");
    QualityReport r;
    r.triangle_count = mesh.num_triangles();
    r.vertex_count = mesh.num_vertices();
    r.h_min = std::numeric_limits<double>::infinity();
    r.area_min = std::numeric_limits<double>::infinity();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double q = triangle_quality(mesh, t);
        const Tri& tri = mesh.triangle(t);
        const Vec3& a = mesh.vertex(tri[0]);
        const Vec3& b = mesh.vertex(tri[1]);
        const Vec3& c = mesh.vertex(tri[2]);
        const double h = std::sqrt(std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()}));
        const double area = 0.5 * (b - a).cross(c - a).norm();
        if (q > r.sigma_max) {
            r.sigma_max = q;
            r.worst_triangle = t;
        }
        r.h_min = std::min(r.h_min, h);
        r.h_max = std::max(r.h_max, h);
        r.area_min = std::min(r.area_min, area);
        r.area_max = std::max(r.area_max, area);
        r.total_area += area;
    }
    return r;
}

Mat3 tangential_projection(const SurfaceMesh& mesh, int t)
{
    const Vec3 n = triangle_geometry(mesh, t).normal;
    return Mat3::Identity() - n * n.transpose();
}

Vec3 tangential_gradient(const SurfaceMesh& mesh, int t, const std::array<double, 3>& values)
{
    const TriangleGeometry g = triangle_geometry(mesh, t);
    return values[0] * g.basis_gradients[0] + values[1] * g.basis_gradients[1] + values[2] * g.basis_gradients[2];
}

Vec3 edge_conormal(const SurfaceMesh& mesh, int e)
{
    const Edge& be = mesh.boundary_edges()[e];
    const TriangleGeometry g = triangle_geometry(mesh, mesh.boundary_edge_triangle(e));
    return (mesh.vertex(be[1]) - mesh.vertex(be[0])).cross(g.normal).normalized();
}

Vec3 vertex_conormal(const SurfaceMesh& mesh, int v)
{
    const Edge edges = mesh.boundary_edges_at(v);
    const Vec3 sum = edge_conormal(mesh, edges[0]) + edge_conormal(mesh, edges[1]);
    const double len = sum.norm();
    if (len < 1e-12) throw MeshError("co-normals cancel at boundary vertex " + std::to_string(v));
    return sum / len;
}

Vec3 boundary_tangent(const SurfaceMesh& mesh, int v)
{
    const Edge edges = mesh.boundary_edges_at(v);
    const Edge& in = mesh.boundary_edges()[edges[0]];
    const Edge& out = mesh.boundary_edges()[edges[1]];
    const Vec3 t_in = (mesh.vertex(in[1]) - mesh.vertex(in[0])).normalized();
    Vec3 t_out = (mesh.vertex(out[1]) - mesh.vertex(out[0])).normalized();
    if (t_in.dot(t_out) < 0.0) t_out = -t_out;
    const Vec3 sum = t_in + t_out;
    const double len = sum.norm();
    if (len < 1e-12) throw MeshError("boundary tangents cancel at vertex " + std::to_string(v));
    return sum / len;
}

Mat3 boundary_tangent_projection(const SurfaceMesh& mesh, int v)
{
    const Vec3 t = boundary_tangent(mesh, v);
    return t * t.transpose();
}

MeshMetrics mesh_metrics(const SurfaceMesh& mesh)
{
    MeshMetrics m;
    m.h_min = std::numeric_limits<double>::infinity();
    m.areas.resize(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        const Vec3& a = mesh.vertex(tri[0]);
        const Vec3& b = mesh.vertex(tri[1]);
        const Vec3& c = mesh.vertex(tri[2]);
        m.areas[t] = 0.5 * (b - a).cross(c - a).norm();
        m.total_area += m.areas[t];
        m.h_min = std::min(m.h_min, std::sqrt(std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()})));
    }
    return m;
}

double boundary_length(const SurfaceMesh& mesh)
{
    double len = 0.0;
    for (const Edge& e : mesh.boundary_edges()) len += (mesh.vertex(e[1]) - mesh.vertex(e[0])).norm();
    return len;
}

double loop_signed_area(const SurfaceMesh& mesh, int loop, const Vec3& plane_normal)
{
    const auto& vs = mesh.boundary_loops()[loop];
    double twice = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const Vec3& a = mesh.vertex(vs[i]);
        const Vec3& b = mesh.vertex(vs[(i + 1) % vs.size()]);
        twice += plane_normal.dot(a.cross(b));
    }
    return 0.5 * twice;
}

}  // namespace esfem
