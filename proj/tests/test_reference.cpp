#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "esfem/geometry.hpp"
#include "esfem/reference.hpp"

using namespace esfem;

TEST_CASE("half-sphere construction")
{
    const auto h0 = build_half_sphere(0);
    CHECK(h0.num_triangles() == 4);
    CHECK(h0.num_vertices() == 5);
    CHECK(h0.boundary_edge_count() == 4);

    const auto h1 = build_half_sphere(1);
    CHECK(h1.num_triangles() == 16);
    for (const Vec3& p : h1.vertices()) CHECK(std::abs(p.norm() - 1.0) < 1e-15);

    const auto h2 = build_half_sphere(2);
    CHECK(h2.num_boundary_vertices() == 16);
    for (int v = 0; v < h2.num_vertices(); ++v)
        if (h2.is_boundary_vertex(v)) CHECK(h2.vertex(v).x() == 0.0);
    CHECK_THROWS_AS(build_half_sphere(-1), MeshError);
}

TEST_CASE("cylinder construction")
{
    const auto c = build_cylinder(1, 3);
    CHECK(c.num_vertices() == 6);
    CHECK(c.num_triangles() == 6);
    REQUIRE(c.boundary_loops().size() == 2);
    CHECK(c.boundary_loops()[0].size() == 3);
    CHECK(c.boundary_loops()[1].size() == 3);

    const auto c2 = build_cylinder(2, 4);
    CHECK(c2.num_vertices() == 12);
    CHECK(c2.num_triangles() == 16);
    const auto cyl = ReferenceManifold::cylinder();
    for (const Vec3& p : c2.vertices()) CHECK(cyl.contains(p, 1e-15));
}

TEST_CASE("co-normal")
{
    const auto hs = ReferenceManifold::half_sphere();
    const auto cyl = ReferenceManifold::cylinder();
    CHECK(conormal_lambda(hs, Vec3(0, 1, 0)) == Vec3(1, 0, 0));
    CHECK(conormal_lambda(cyl, Vec3(1, 0, 1)) == Vec3(1, 0, 0));
    CHECK(conormal_lambda(cyl, Vec3(-1, 1, 0)) == Vec3(-1, 0, 0));
    CHECK_THROWS_AS(conormal_lambda(hs, Vec3(1, 0, 0)), MeshError);
}

TEST_CASE("co-normal is orthogonal to boundary tangent and manifold normal")
{
    for (const auto& [mesh, manifold] :
         {std::pair{build_half_sphere(4), ReferenceManifold::half_sphere()}, std::pair{build_cylinder(4, 24), ReferenceManifold::cylinder()}}) {
        for (int v = 0; v < mesh.num_vertices(); ++v) {
            if (!mesh.is_boundary_vertex(v)) continue;
            const Vec3 q = mesh.vertex(v);
            const Vec3 lambda = manifold.conormal(q);
            CHECK(std::abs(lambda.dot(boundary_tangent(mesh, v))) < 1e-10);
            CHECK(std::abs(lambda.dot(manifold.normal(q))) < 1e-10);
        }
    }
}

TEST_CASE("tangent projection P_M")
{
    const auto hs = ReferenceManifold::half_sphere();
    const auto cyl = ReferenceManifold::cylinder();
    auto diag = [](double a, double b, double c) { return Eigen::Vector3d(a, b, c).asDiagonal().toDenseMatrix(); };
    CHECK((tangent_projection_PM(hs, Vec3(0, 0, 1)) - diag(1, 1, 0)).norm() < 1e-15);
    CHECK((tangent_projection_PM(cyl, Vec3(0.5, 1, 0)) - diag(1, 0, 1)).norm() < 1e-15);
    CHECK((tangent_projection_PM(hs, Vec3(1, 0, 0)) - diag(0, 1, 1)).norm() < 1e-15);
    CHECK_THROWS_AS(tangent_projection_PM(hs, Vec3(0, 0, 2)), MeshError);
}

TEST_CASE("P_M kills normals and keeps tangents")
{
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    const auto hs = ReferenceManifold::half_sphere();
    const auto cyl = ReferenceManifold::cylinder();
    for (int trial = 0; trial < 100; ++trial) {
        Vec3 x(std::abs(g(rng)), g(rng), g(rng));
        for (const auto& m : {hs, cyl}) {
            const Vec3 q = m.project(x);
            const Mat3 P = m.tangent_projection(q);
            const Vec3 n = m.normal(q);
            CHECK((P * n).norm() < 1e-12);
            Vec3 t = n.cross(Vec3(g(rng), g(rng), g(rng)));
            CHECK((P * t - t).norm() < 1e-12 * (1 + t.norm()));
        }
    }
}

TEST_CASE("projection onto the manifold")
{
    const auto hs = ReferenceManifold::half_sphere();
    const auto cyl = ReferenceManifold::cylinder();
    CHECK((project_to_manifold(hs, Vec3(0, 0, 2)) - Vec3(0, 0, 1)).norm() < 1e-15);
    CHECK((project_to_manifold(cyl, Vec3(0.3, 0, 2)) - Vec3(0.3, 0, 1)).norm() < 1e-15);
    CHECK((project_to_manifold(cyl, Vec3(1.4, 1, 0)) - Vec3(1, 1, 0)).norm() < 1e-15);
    CHECK_THROWS_AS(project_to_manifold(hs, Vec3::Zero()), MeshError);
    CHECK_THROWS_AS(project_to_manifold(cyl, Vec3(0.5, 0, 0)), MeshError);

    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 x(g(rng), g(rng), g(rng));
        for (const auto& m : {hs, cyl}) {
            const Vec3 p = m.project(x);
            CHECK(m.contains(p, 1e-12));
            CHECK((m.project(p) - p).norm() < 1e-15);
        }
    }
}

TEST_CASE("stereographic disk")
{
    const auto init = stereographic_disk(build_half_sphere(3));
    const auto& mesh = init.mesh;
    const auto& y = init.ymap.points;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3& d = mesh.vertex(v);
        CHECK(d.z() == 0.0);
        if (y[v] == Vec3(1, 0, 0)) CHECK(d.norm() == 0.0);
        if (mesh.is_boundary_vertex(v)) CHECK(std::abs(d.norm() - 1.0) < 1e-15);
        else CHECK(d.norm() < 1.0);
        CHECK((inverse_stereographic(d) - y[v]).norm() < 1e-12);
    }
    CHECK(reference_map_valid(mesh, init.ymap));
    const auto h0 = stereographic_disk(build_half_sphere(0));
    for (int v = 0; v < 5; ++v)
        if (h0.ymap.points[v] == Vec3(0, 1, 0)) CHECK((h0.mesh.vertex(v) - Vec3(1, 0, 0)).norm() == 0.0);
    CHECK(std::abs(loop_signed_area(init.mesh, 0)) > 0.0);
}

TEST_CASE("annulus from cylinder")
{
    const auto init = annulus_from_cylinder(build_cylinder(2, 16), 2.25, 0.25);
    const auto& cyl = init.ymap.points;
    for (int v = 0; v < init.mesh.num_vertices(); ++v) {
        const double r = init.mesh.vertex(v).norm();
        if (cyl[v].x() == -1.0) CHECK(std::abs(r - 0.25) < 1e-15);
        if (cyl[v].x() == 1.0) CHECK(std::abs(r - 2.25) < 1e-15);
        if (cyl[v].x() == 0.0) CHECK(r == doctest::Approx(std::sqrt(2.25 * 0.25)).epsilon(1e-14));
    }
    CHECK(reference_map_valid(init.mesh, init.ymap));
    // both loops wind with the surface on their left: outer CCW, inner CW
    double outer = 0, inner = 0;
    for (int l = 0; l < 2; ++l) {
        const double a = loop_signed_area(init.mesh, l);
        if (std::abs(a) > 1.0) outer = a;
        else inner = a;
    }
    CHECK(outer > 0.0);
    CHECK(inner < 0.0);
    CHECK_THROWS_AS(annulus_from_cylinder(build_cylinder(2, 16), 0.25, 2.25), MeshError);
}
