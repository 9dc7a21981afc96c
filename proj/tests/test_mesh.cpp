#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "esfem/geometry.hpp"
#include "esfem/reference.hpp"

using namespace esfem;

TEST_CASE("build rejects bad input")
{
    CHECK_THROWS_AS(SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}}, {{0, 1, 2}}), MeshError);
    CHECK_THROWS_AS(SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}, {1, 2, 0}}), MeshError);
    CHECK_THROWS_AS(SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 1}}), MeshError);
}

TEST_CASE("orientation and manifold checks")
{
    const std::vector<Vec3> sq{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    CHECK_THROWS_AS(SurfaceMesh::build(sq, {{0, 1, 2}, {0, 3, 2}}), MeshError);
    CHECK_NOTHROW(SurfaceMesh::build(sq, {{0, 1, 2}, {0, 2, 3}}));
    // three triangles on one edge
    const std::vector<Vec3> fan{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}};
    CHECK_THROWS_AS(SurfaceMesh::build(fan, {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}}), MeshError);
    CHECK_THROWS_AS(SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), DegenerateTriangleError);
}

TEST_CASE("edge counts")
{
    const auto one = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    CHECK(one.boundary_edge_count() == 3);
    CHECK(one.interior_edge_count() == 0);
    const auto two = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
    CHECK(two.boundary_edge_count() == 4);
    CHECK(two.interior_edge_count() == 1);
    CHECK(two.boundary_loops().size() == 1);
}

TEST_CASE("triangle quality oracles")
{
    const double s3 = std::sqrt(3.0);
    const Vec3 a(0, 0, 0), b(1, 0, 0), c(0.5, s3 / 2, 0);
    // rho = area / s with area = sqrt(3)/4, s = 3/2
    const double rho_eq = (s3 / 4.0) / 1.5;
    CHECK(triangle_quality(a, b, c) == doctest::Approx(1.0 / rho_eq).epsilon(1e-14));
    CHECK(triangle_quality(a, b, c) == doctest::Approx(2.0 * s3).epsilon(1e-14));

    const double rho_ri = 0.5 / (0.5 * (2.0 + std::sqrt(2.0)));
    CHECK(triangle_quality(a, b, Vec3(0, 1, 0)) == doctest::Approx(std::sqrt(2.0) / rho_ri).epsilon(1e-14));
    CHECK(triangle_quality(a, b, Vec3(0, 1, 0)) == doctest::Approx(4.828427).epsilon(1e-6));
    CHECK_THROWS_AS(triangle_quality(a, b, Vec3(3, 0, 0)), DegenerateTriangleError);
}

TEST_CASE("sigma_max")
{
    const double s3 = std::sqrt(3.0);
    // two equilaterals sharing an edge
    const auto eq = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0.5, s3 / 2, 0}, {1.5, s3 / 2, 0}}, {{0, 1, 2}, {1, 3, 2}});
    CHECK(sigma_max(eq).sigma_max == doctest::Approx(2 * s3).epsilon(1e-14));

    const auto mixed = SurfaceMesh::build(
        {{0, 0, 0}, {1, 0, 0}, {0.5, s3 / 2, 0}, {1, -1, 0}}, {{0, 1, 2}, {0, 3, 1}});
    const auto r = sigma_max(mixed);
    CHECK(r.sigma_max == doctest::Approx(std::sqrt(2.0) / (0.5 / (0.5 * (2.0 + std::sqrt(2.0))))).epsilon(1e-13));
    CHECK(r.worst_triangle == 1);
    CHECK(r.h_min <= r.h_max);
    CHECK(r.total_area == doctest::Approx(s3 / 4 + 0.5).epsilon(1e-14));
    CHECK_THROWS_AS(sigma_max(SurfaceMesh{}), MeshError);
}

TEST_CASE("sigma_max invariant under rigid motion and scaling")
{
    auto mesh = build_half_sphere(2);
    const double before = sigma_max(mesh).sigma_max;
    const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    std::vector<Vec3> moved;
    for (const Vec3& p : mesh.vertices()) moved.push_back(3.5 * (R * p) + Vec3(1, -2, 0.5));
    mesh.set_positions(moved);
    CHECK(sigma_max(mesh).sigma_max == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("tangential projection")
{
    const auto flat = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const Mat3 P = tangential_projection(flat, 0);
    CHECK((P - Eigen::Vector3d(1, 1, 0).asDiagonal().toDenseMatrix()).norm() < 1e-15);

    // plane x1 = x3
    const auto tilted = SurfaceMesh::build({{0, 0, 0}, {1, 0, 1}, {0, 1, 0}}, {{0, 1, 2}});
    const Mat3 Q = tangential_projection(tilted, 0);
    Mat3 expect;
    expect << 0.5, 0, 0.5, 0, 1, 0, 0.5, 0, 0.5;
    CHECK((Q - expect).norm() < 1e-15);
    CHECK((Q * (tilted.vertex(1) - tilted.vertex(0)) - (tilted.vertex(1) - tilted.vertex(0))).norm() < 1e-15);
}

TEST_CASE("tangential gradient")
{
    const auto flat = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    // the build may rotate the vertex order; evaluate x1 and x2 through the stored order
    std::array<double, 3> fx, fy, fc;
    for (int k = 0; k < 3; ++k) {
        const Vec3& p = flat.vertex(flat.triangle(0)[k]);
        fx[k] = p.x();
        fy[k] = p.y();
        fc[k] = 2.5;
    }
    CHECK((tangential_gradient(flat, 0, fx) - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((tangential_gradient(flat, 0, fy) - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK(tangential_gradient(flat, 0, fc).norm() < 1e-15);
}

TEST_CASE("tangential gradient reproduces affine functions")
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng)), c(u(rng), u(rng), u(rng));
        const Vec3 grad(u(rng), u(rng), u(rng));
        const double off = u(rng);
        TriangleGeometry g;
        triangle_geometry(a, b, c, g);
        if (g.normal.isZero() || g.area < 1e-3) continue;
        const Vec3 res = (grad.dot(a) + off) * g.basis_gradients[0] + (grad.dot(b) + off) * g.basis_gradients[1] +
                         (grad.dot(c) + off) * g.basis_gradients[2];
        const Vec3 expect = (Mat3::Identity() - g.normal * g.normal.transpose()) * grad;
        CHECK((res - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
        CHECK(std::abs(res.dot(g.normal)) < 1e-10);
    }
}

TEST_CASE("vertex co-normal")
{
    // flat strip in the upper half-plane; boundary vertex 1 lies on a straight x-axis edge pair
    const auto strip = SurfaceMesh::build(
        {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 1, 0}},
        {{0, 1, 4}, {0, 4, 3}, {1, 2, 5}, {1, 5, 4}});
    CHECK((vertex_conormal(strip, 1) - Vec3(0, -1, 0)).norm() < 1e-15);

    // corner at the origin of the unit square: co-normals (-1,0,0) and (0,-1,0)
    const auto sq = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
    CHECK((vertex_conormal(sq, 0) - Vec3(-1, -1, 0) / std::sqrt(2.0)).norm() < 1e-15);

    const auto disk = stereographic_disk(build_half_sphere(1)).mesh;
    int interior = -1;
    for (int v = 0; v < disk.num_vertices(); ++v)
        if (!disk.is_boundary_vertex(v)) interior = v;
    CHECK_THROWS_AS(vertex_conormal(disk, interior), MeshError);
}

TEST_CASE("boundary tangent projection")
{
    const auto strip = SurfaceMesh::build(
        {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {0, 1, 0}, {1, 1, 0}, {2, 1, 0}},
        {{0, 1, 4}, {0, 4, 3}, {1, 2, 5}, {1, 5, 4}});
    CHECK((boundary_tangent_projection(strip, 1) - Eigen::Vector3d(1, 0, 0).asDiagonal().toDenseMatrix()).norm() < 1e-15);

    // corner with edge tangents (1,0,0) and (0,1,0): vertex 1 of the unit square
    const auto sq = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
    Mat3 expect;
    expect << 1, 1, 0, 1, 1, 0, 0, 0, 0;
    CHECK((boundary_tangent_projection(sq, 1) - 0.5 * expect).norm() < 1e-15);

    const auto disk = stereographic_disk(build_half_sphere(3)).mesh;
    for (int v = 0; v < disk.num_vertices(); ++v) {
        if (!disk.is_boundary_vertex(v)) continue;
        const Mat3 T = boundary_tangent_projection(disk, v);
        CHECK((T * T - T).norm() < 1e-12);
        CHECK((T - T.transpose()).norm() < 1e-15);
    }
}

TEST_CASE("projectors are symmetric idempotent")
{
    const auto sphere = build_half_sphere(2);
    for (int t = 0; t < sphere.num_triangles(); ++t) {
        const Mat3 P = tangential_projection(sphere, t);
        CHECK((P * P - P).norm() < 1e-12);
        CHECK((P - P.transpose()).norm() < 1e-12);
        CHECK(P.trace() == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("mesh metrics")
{
    const auto tri = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const auto m = mesh_metrics(tri);
    CHECK(m.total_area == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.h_min == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    const double s3 = std::sqrt(3.0);
    const auto pair = SurfaceMesh::build(
        {{0, 0, 0}, {1, 0, 0}, {0.5, s3 / 2, 0}, {5, 0, 0}, {6, 0, 0}, {5.5, s3 / 2, 0}}, {{0, 1, 2}, {3, 4, 5}});
    CHECK(mesh_metrics(pair).total_area == doctest::Approx(2 * s3 / 4).epsilon(1e-15));
    CHECK(pair.boundary_loops().size() == 2);

    auto scaled = pair;
    std::vector<Vec3> x;
    for (const Vec3& p : pair.vertices()) x.push_back(2.0 * p);
    scaled.set_positions(x);
    const auto ms = mesh_metrics(scaled);
    CHECK(ms.total_area == doctest::Approx(4 * mesh_metrics(pair).total_area).epsilon(1e-14));
    CHECK(ms.h_min == doctest::Approx(2 * mesh_metrics(pair).h_min).epsilon(1e-14));
}

TEST_CASE("boundary loops partition the boundary vertices")
{
    const auto annulus = annulus_from_cylinder(build_cylinder(3, 12), 2.0, 0.5).mesh;
    CHECK(annulus.boundary_loops().size() == 2);
    std::vector<int> seen(annulus.num_vertices(), 0);
    for (const auto& loop : annulus.boundary_loops())
        for (int v : loop) ++seen[v];
    for (int v = 0; v < annulus.num_vertices(); ++v) {
        CHECK(seen[v] == (annulus.is_boundary_vertex(v) ? 1 : 0));
        if (annulus.is_boundary_vertex(v)) {
            const Edge e = annulus.boundary_edges_at(v);
            CHECK(annulus.boundary_edges()[e[0]][1] == v);
            CHECK(annulus.boundary_edges()[e[1]][0] == v);
        }
    }
}

TEST_CASE("nodal field stamps")
{
    const auto a = build_half_sphere(0);
    const auto b = build_half_sphere(0);
    NodalField f(a, 3);
    CHECK(f.size() == 5);
    CHECK(f.matches(a));
    CHECK_FALSE(f.matches(b));
    CHECK_THROWS_AS(require_matching(f, b, "test"), MeshError);
}
