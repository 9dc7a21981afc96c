#pragma once

#include <vector>

#include "esfem/mesh.hpp"

namespace esfem {

enum class ManifoldKind { HalfSphere, Cylinder };

///
/// Reference manifold with totally geodesic boundary.
///
///   HalfSphere:  |x| = 1,  x1 >= 0            boundary x1 = 0
///   Cylinder:    x2^2 + x3^2 = 1, |x1| <= 1   boundary x1 = +-1
///
class ReferenceManifold {
public:
    explicit ReferenceManifold(ManifoldKind kind) : kind_(kind) {}

    static ReferenceManifold half_sphere() { return ReferenceManifold(ManifoldKind::HalfSphere); }
    static ReferenceManifold cylinder() { return ReferenceManifold(ManifoldKind::Cylinder); }

    ManifoldKind kind() const noexcept { return kind_; }

    bool contains(const Vec3& q, double tol = 1e-10) const;
    bool on_boundary(const Vec3& q, double tol = 1e-10) const;

    /// Unit normal of M at q (radial for the sphere, cross-sectional for the
    /// cylinder).
    Vec3 normal(const Vec3& q) const;

    /// Co-normal lambda_h at a boundary point: (1,0,0) on the half-sphere,
    /// (sign(q1),0,0) on the cylinder.  Throws MeshError off the boundary.
    Vec3 conormal(const Vec3& q) const;

    /// Projection onto the tangent space of M at q.  q must lie within 1e-8
    /// of M; it is projected onto M first.
    Mat3 tangent_projection(const Vec3& q) const;

    /// Closest-point style rescaling onto M (see project_to_manifold).
    Vec3 project(const Vec3& x) const;

private:
    ManifoldKind kind_;
};

/// Reference map: one point of the reference manifold per vertex of the
/// current surface mesh.  The component vector is left untouched by the flow
/// and only changes when the mesh is refined or coarsened.
struct ReferenceMap {
    ReferenceManifold manifold{ManifoldKind::HalfSphere};
    std::vector<Vec3> points;
};

Mat3 tangent_projection_PM(const ReferenceManifold& manifold, const Vec3& q);
Vec3 conormal_lambda(const ReferenceManifold& manifold, const Vec3& q);
Vec3 project_to_manifold(const ReferenceManifold& manifold, const Vec3& x);

/// Half-sphere approximation: the half-octahedron with apex (1,0,0) refined
/// n times by midpoint quadrisection, new vertices rescaled to unit length.
SurfaceMesh build_half_sphere(int levels);

/// Structured cylinder grid with a axial and b angular segments.
SurfaceMesh build_cylinder(int axial, int angular);

struct InitialSurface {
    SurfaceMesh mesh;
    ReferenceMap ymap;
};

/// Stereographic projection from (-1,0,0) of a half-sphere mesh onto the unit
/// disk in the plane x3 = 0.  The reference map holds the sphere vertices.
InitialSurface stereographic_disk(const SurfaceMesh& half_sphere);

/// Inverse of the stereographic projection for a disk point (u, w, 0).
Vec3 inverse_stereographic(const Vec3& disk_point);

/// Cylinder (x1, cos t, sin t) -> r(x1) (cos t, sin t, 0) with
/// r(x1) = r_inner (r_outer / r_inner)^((x1 + 1) / 2).
InitialSurface annulus_from_cylinder(const SurfaceMesh& cylinder, double r_outer, double r_inner);

/// Checks that every reference point lies on M and that boundary vertices of
/// the mesh map to the boundary of M.
bool reference_map_valid(const SurfaceMesh& mesh, const ReferenceMap& ymap, double tol = 1e-10);

}  // namespace esfem
