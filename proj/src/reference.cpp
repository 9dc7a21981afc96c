#include "esfem/reference.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace esfem {

bool ReferenceManifold::contains(const Vec3& q, double tol) const
{
    if (kind_ == ManifoldKind::HalfSphere) return std::abs(q.norm() - 1.0) <= tol && q.x() >= -tol;
    return std::abs(std::hypot(q.y(), q.z()) - 1.0) <= tol && std::abs(q.x()) <= 1.0 + tol;
}

bool ReferenceManifold::on_boundary(const Vec3& q, double tol) const
{
    if (!contains(q, tol)) return false;
    if (kind_ == ManifoldKind::HalfSphere) return std::abs(q.x()) <= tol;
    return std::abs(std::abs(q.x()) - 1.0) <= tol;
}

Vec3 ReferenceManifold::normal(const Vec3& q) const
{
    if (kind_ == ManifoldKind::HalfSphere) return q.normalized();
    return Vec3(0.0, q.y(), q.z()).normalized();
}

Vec3 ReferenceManifold::conormal(const Vec3& q) const
{
    if (!on_boundary(q)) throw MeshError("co-normal requested away from the reference boundary");
    if (kind_ == ManifoldKind::HalfSphere) return Vec3::UnitX();
    return Vec3(q.x() > 0.0 ? 1.0 : -1.0, 0.0, 0.0);
}

Mat3 ReferenceManifold::tangent_projection(const Vec3& q) const
{
    if (!contains(q, 1e-8)) throw MeshError("point is not on the reference manifold");
    const Vec3 n = normal(project(q));
    return Mat3::Identity() - n * n.transpose();
}

Vec3 ReferenceManifold::project(const Vec3& x) const
{
    if (kind_ == ManifoldKind::HalfSphere) {
        const double len = x.norm();
        if (len == 0.0) throw MeshError("cannot project the origin onto the half-sphere");
        Vec3 p = x / len;
        if (p.x() < 0.0) {
            const double r = std::hypot(p.y(), p.z());
            if (r == 0.0) throw MeshError("cannot project onto the half-sphere boundary");
            p = Vec3(0.0, p.y() / r, p.z() / r);
        }
        return p;
    }
    const double r = std::hypot(x.y(), x.z());
    if (r == 0.0) throw MeshError("cannot project a point on the cylinder axis");
    return Vec3(std::clamp(x.x(), -1.0, 1.0), x.y() / r, x.z() / r);
}

Mat3 tangent_projection_PM(const ReferenceManifold& manifold, const Vec3& q) { return manifold.tangent_projection(q); }
Vec3 conormal_lambda(const ReferenceManifold& manifold, const Vec3& q) { return manifold.conormal(q); }
Vec3 project_to_manifold(const ReferenceManifold& manifold, const Vec3& x) { return manifold.project(x); }

SurfaceMesh build_half_sphere(int levels)
{
    if (levels < 0) throw MeshError("refinement level must be non-negative");
    std::vector<Vec3> x{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, -1, 0}, {0, 0, -1}};
    std::vector<Tri> tris{{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}};
    for (int level = 0; level < levels; ++level) {
        std::map<Edge, int> midpoint;
        auto mid = [&](int a, int b) {
            const Edge key{std::min(a, b), std::max(a, b)};
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = (0.5 * (x[a] + x[b])).normalized();
            if (x[a].x() == 0.0 && x[b].x() == 0.0) m.x() = 0.0;
            x.push_back(m);
            const int id = static_cast<int>(x.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Tri> next;
        next.reserve(4 * tris.size());
        for (const Tri& t : tris) {
            const int ab = mid(t[0], t[1]);
            const int bc = mid(t[1], t[2]);
            const int ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({ab, t[1], bc});
            next.push_back({ca, bc, t[2]});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }
    return SurfaceMesh::build(std::move(x), std::move(tris));
}

SurfaceMesh build_cylinder(int axial, int angular)
{
    if (axial < 1 || angular < 3) throw MeshError("cylinder needs at least 1 axial and 3 angular segments");
    std::vector<Vec3> x;
    x.reserve((axial + 1) * angular);
    for (int i = 0; i <= axial; ++i) {
        const double x1 = -1.0 + 2.0 * i / axial;
        for (int j = 0; j < angular; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / angular;
            x.emplace_back(x1, std::cos(theta), std::sin(theta));
        }
    }
    // Orientation is chosen so that the annulus image is counter-clockwise.
    std::vector<Tri> tris;
    tris.reserve(2 * axial * angular);
    auto id = [angular](int i, int j) { return i * angular + (j % angular); };
    for (int i = 0; i < axial; ++i) {
        for (int j = 0; j < angular; ++j) {
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return SurfaceMesh::build(std::move(x), std::move(tris));
}

InitialSurface stereographic_disk(const SurfaceMesh& half_sphere)
{
    std::vector<Vec3> disk;
    std::vector<Vec3> y;
    disk.reserve(half_sphere.num_vertices());
    for (const Vec3& p : half_sphere.vertices()) {
        const double s = 1.0 + p.x();
        disk.emplace_back(p.y() / s, p.z() / s, 0.0);
        y.push_back(p);
    }
    std::vector<Tri> tris(half_sphere.triangles().begin(), half_sphere.triangles().end());
    InitialSurface out{SurfaceMesh::build(std::move(disk), std::move(tris)), ReferenceMap{ReferenceManifold::half_sphere(), std::move(y)}};
    return out;
}

Vec3 inverse_stereographic(const Vec3& d)
{
    const double rho2 = d.x() * d.x() + d.y() * d.y();
    const double s = 1.0 + rho2;
    return {(1.0 - rho2) / s, 2.0 * d.x() / s, 2.0 * d.y() / s};
}

InitialSurface annulus_from_cylinder(const SurfaceMesh& cylinder, double r_outer, double r_inner)
{
    if (!(r_inner > 0.0 && r_inner < r_outer)) throw MeshError("annulus radii must satisfy 0 < r_inner < r_outer");
    std::vector<Vec3> plane;
    std::vector<Vec3> y;
    for (const Vec3& p : cylinder.vertices()) {
        double r;
        if (p.x() <= -1.0) r = r_inner;
        else if (p.x() >= 1.0) r = r_outer;
        else r = r_inner * std::pow(r_outer / r_inner, 0.5 * (p.x() + 1.0));
        const double len = std::hypot(p.y(), p.z());
        plane.emplace_back(r * p.y() / len, r * p.z() / len, 0.0);
        y.push_back(p);
    }
    std::vector<Tri> tris(cylinder.triangles().begin(), cylinder.triangles().end());
    return {SurfaceMesh::build(std::move(plane), std::move(tris)), ReferenceMap{ReferenceManifold::cylinder(), std::move(y)}};
}

bool reference_map_valid(const SurfaceMesh& mesh, const ReferenceMap& ymap, double tol)
{
    if (static_cast<int>(ymap.points.size()) != mesh.num_vertices()) return false;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3& q = ymap.points[v];
        if (!ymap.manifold.contains(q, tol)) return false;
        if (mesh.is_boundary_vertex(v) && !ymap.manifold.on_boundary(q, tol)) return false;
    }
    return true;
}

}  // namespace esfem
