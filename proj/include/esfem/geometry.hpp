#pragma once

#include <array>
#include <vector>

#include "esfem/mesh.hpp"

namespace esfem {

/// Constant per-triangle quantities of a P1 surface element.
struct TriangleGeometry {
    double area = 0.0;
    double diameter = 0.0;                // longest edge
    Vec3 normal = Vec3::Zero();           // unit, follows the vertex orientation
    std::array<Vec3, 3> basis_gradients;  // tangential gradients of the barycentric basis
};

/// Geometry of triangle t.  Throws DegenerateTriangleError when
/// area < 1e-14 * diameter^2.
TriangleGeometry triangle_geometry(const SurfaceMesh& mesh, int t);
void triangle_geometry(const Vec3& a, const Vec3& b, const Vec3& c, TriangleGeometry& out);

/// Geometry of all triangles, in triangle order.
std::vector<TriangleGeometry> compute_geometry(const SurfaceMesh& mesh);

double triangle_area(const SurfaceMesh& mesh, int t);

/// Diameter over inradius, h(S) / rho(S) with rho = area / semi-perimeter.
double triangle_quality(const SurfaceMesh& mesh, int t);
double triangle_quality(const Vec3& a, const Vec3& b, const Vec3& c);

struct QualityReport {
    double sigma_max = 0.0;
    int worst_triangle = -1;
    double h_min = 0.0;
    double h_max = 0.0;
    double area_min = 0.0;
    double area_max = 0.0;
    double total_area = 0.0;
    int triangle_count = 0;
    int vertex_count = 0;
};

/// Mesh quality sigma_max = max_S h(S)/rho(S) plus summary statistics.
/// Throws MeshError for a mesh without triangles.
QualityReport sigma_max(const SurfaceMesh& mesh);

/// I - n n^T for the unit normal of triangle t.
Mat3 tangential_projection(const SurfaceMesh& mesh, int t);

/// Tangential gradient of the affine interpolant of the given nodal values
/// (ordered like the triangle's vertices).
Vec3 tangential_gradient(const SurfaceMesh& mesh, int t, const std::array<double, 3>& values);

/// Outward in-plane unit co-normal of boundary edge e (w.r.t. its triangle).
Vec3 edge_conormal(const SurfaceMesh& mesh, int e);

/// Normalised sum of the outward co-normals of the two boundary edges at v.
Vec3 vertex_conormal(const SurfaceMesh& mesh, int v);

/// Rank-one projection t (x) t onto the discrete boundary tangent at v.  The
/// two edge tangents are taken along the loop direction; the second one is
/// flipped when their dot product is negative.
Mat3 boundary_tangent_projection(const SurfaceMesh& mesh, int v);

/// Unit tangent whose outer product is boundary_tangent_projection().
Vec3 boundary_tangent(const SurfaceMesh& mesh, int v);

struct MeshMetrics {
    double h_min = 0.0;
    double total_area = 0.0;
    std::vector<double> areas;
};

MeshMetrics mesh_metrics(const SurfaceMesh& mesh);

double boundary_length(const SurfaceMesh& mesh);

/// Signed area enclosed by a boundary loop after projection onto the plane
/// with the given normal (positive when the loop runs counter-clockwise).
double loop_signed_area(const SurfaceMesh& mesh, int loop, const Vec3& plane_normal = Vec3::UnitZ());

}  // namespace esfem
