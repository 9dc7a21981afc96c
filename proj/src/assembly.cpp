#include "esfem/assembly.hpp"

#include <Eigen/Eigenvalues>

namespace esfem {

HHat compute_hhat(const TriangleGeometry& g, const Tri& tri, std::span<const Vec3> y, int t)
{
    HHat h;
    h.triangle = t;
    h.J = g.basis_gradients[0] * y[tri[0]].transpose() + g.basis_gradients[1] * y[tri[1]].transpose() +
          g.basis_gradients[2] * y[tri[2]].transpose();
    h.H = h.J * h.J.transpose() + g.normal * g.normal.transpose();
    h.H = 0.5 * (h.H + h.H.transpose());

    Eigen::SelfAdjointEigenSolver<Mat3> eig;
    eig.computeDirect(h.H, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > 1e12 * lo) throw DegenerateParametrizationError(t, "reference map gradient is singular");
    h.H_inv = h.H.inverse();
    return h;
}

HHat compute_hhat(const SurfaceMesh& mesh, const ReferenceMap& ymap, int t)
{
    if (static_cast<int>(ymap.points.size()) != mesh.num_vertices()) throw MeshError("reference map does not match the mesh");
    return compute_hhat(triangle_geometry(mesh, t), mesh.triangle(t), ymap.points, t);
}

std::vector<HHat> compute_hhat_all(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry, std::span<const Vec3> y)
{
    if (static_cast<int>(y.size()) != mesh.num_vertices()) throw MeshError("reference map does not match the mesh");
    std::vector<HHat> out(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) out[t] = compute_hhat(geometry[t], mesh.triangle(t), y, t);
    return out;
}

ElementSlots ElementSlots::build(const SurfaceMesh& mesh)
{
    ElementSlots s;
    s.pattern = SparsityPattern::from_mesh(mesh);
    s.stamp = mesh.generation();
    s.slots.resize(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) s.slots[t][3 * a + b] = s.pattern->find(tri[a], tri[b]);
    }
    return s;
}

std::array<double, 9> element_mass(const TriangleGeometry& g)
{
    const double off = g.area / 12.0;
    const double diag = g.area / 6.0;
    return {diag, off, off, off, diag, off, off, off, diag};
}

std::array<double, 9> element_stiffness(const TriangleGeometry& g)
{
    std::array<double, 9> k{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) k[3 * a + b] = g.area * g.basis_gradients[a].dot(g.basis_gradients[b]);
    return k;
}

Eigen::VectorXd surface_lumped_mass(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry)
{
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        for (int v : mesh.triangle(t)) m[v] += geometry[t].area / 3.0;
    }
    return m;
}

Eigen::VectorXd lumped_mass(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry)
{
    Eigen::VectorXd m = surface_lumped_mass(mesh, geometry);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_boundary_vertex(v)) m[v] = 0.0;
    }
    for (const Edge& e : mesh.boundary_edges()) {
        const double half = 0.5 * (mesh.vertex(e[1]) - mesh.vertex(e[0])).norm();
        m[e[0]] += half;
        m[e[1]] += half;
    }
    return m;
}

Eigen::VectorXd lumped_mass(const SurfaceMesh& mesh)
{
    const auto geometry = compute_geometry(mesh);
    return lumped_mass(mesh, geometry);
}

BlockSparseMatrix assemble_mass_lumped(const SurfaceMesh& mesh)
{
    const Eigen::VectorXd m = lumped_mass(mesh);
    std::vector<std::vector<int>> empty(mesh.num_vertices());
    BlockSparseMatrix M(SparsityPattern::from_adjacency(empty));
    for (int v = 0; v < mesh.num_vertices(); ++v) M.add_scalar(v, v, m[v]);
    return M;
}

SparseMatrix assemble_mass_consistent_scalar(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry, const ElementSlots& slots)
{
    SparseMatrix A(slots.pattern);
    auto vals = A.values();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto e = element_mass(geometry[t]);
        for (int k = 0; k < 9; ++k) vals[slots.slots[t][k]] += e[k];
    }
    return A;
}

SparseMatrix assemble_stiffness_scalar(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry, const ElementSlots& slots)
{
    SparseMatrix A(slots.pattern);
    auto vals = A.values();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto e = element_stiffness(geometry[t]);
        for (int k = 0; k < 9; ++k) vals[slots.slots[t][k]] += e[k];
    }
    return A;
}

std::vector<char> zeta_constraint_mask(const SurfaceMesh& mesh)
{
    std::vector<char> mask(3 * mesh.num_vertices(), 0);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_boundary_vertex(v)) mask[3 * v] = 1;
    }
    return mask;
}

BlockSparseMatrix assemble_mass_consistent_constrained(const SurfaceMesh& mesh)
{
    const auto geometry = compute_geometry(mesh);
    const ElementSlots slots = ElementSlots::build(mesh);
    const SparseMatrix m = assemble_mass_consistent_scalar(mesh, geometry, slots);
    BlockSparseMatrix A(slots.pattern);
    auto blocks = A.blocks();
    const auto vals = m.values();
    const auto rp = slots.pattern->row_ptr();
    const auto cols = slots.pattern->cols();
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        for (int k = rp[i]; k < rp[i + 1]; ++k) {
            const int j = cols[k];
            Mat3 b = vals[k] * Mat3::Identity();
            if (mesh.is_boundary_vertex(i) || mesh.is_boundary_vertex(j)) b(0, 0) = i == j ? 1.0 : 0.0;
            blocks[k] = b;
        }
    }
    A.finalize();
    return A;
}

BlockSparseMatrix assemble_stiffness(const SurfaceMesh& mesh)
{
    const auto geometry = compute_geometry(mesh);
    const ElementSlots slots = ElementSlots::build(mesh);
    const SparseMatrix s = assemble_stiffness_scalar(mesh, geometry, slots);
    BlockSparseMatrix A(slots.pattern);
    auto blocks = A.blocks();
    const auto vals = s.values();
    for (std::size_t k = 0; k < vals.size(); ++k) blocks[k] = vals[k] * Mat3::Identity();
    A.finalize();
    return A;
}

Eigen::VectorXd apply_deturck_D(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    std::span<const HHat> hhat,
    const Eigen::VectorXd& zeta_tilde)
{
    const int n = mesh.num_vertices();
    if (zeta_tilde.size() != 3 * n) throw MeshError("zeta field does not match the mesh");
    if (static_cast<int>(hhat.size()) != mesh.num_triangles()) throw MeshError("missing H for some triangles");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * n);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Mat3 A = hhat[t].H_inv * hhat[t].J;
        const double w = geometry[t].area / 3.0;
        for (int v : mesh.triangle(t)) {
            if (mesh.is_boundary_vertex(v)) continue;
            out.segment<3>(3 * v) += w * (A * zeta_tilde.segment<3>(3 * v));
        }
    }
    const auto bedges = mesh.boundary_edges();
    for (int v = 0; v < n; ++v) {
        if (!mesh.is_boundary_vertex(v)) continue;
        const Vec3 z = zeta_tilde.segment<3>(3 * v);
        Vec3 sum = Vec3::Zero();
        for (int e : mesh.boundary_edges_at(v)) {
            const Edge& be = bedges[e];
            const double w = 0.5 * (mesh.vertex(be[1]) - mesh.vertex(be[0])).norm();
            const int t = mesh.boundary_edge_triangle(e);
            sum += w * (hhat[t].H_inv * (hhat[t].J * z));
        }
        const Vec3 tan = boundary_tangent(mesh, v);
        out.segment<3>(3 * v) = tan * tan.dot(sum);
    }
    return out;
}

Eigen::VectorXd apply_deturck_D(const SurfaceMesh& mesh, const ReferenceMap& ymap, const Eigen::VectorXd& zeta_tilde)
{
    const auto geometry = compute_geometry(mesh);
    const auto hhat = compute_hhat_all(mesh, geometry, ymap.points);
    return apply_deturck_D(mesh, geometry, hhat, zeta_tilde);
}

BlockSparseMatrix assemble_deturck_D(const SurfaceMesh& mesh, const ReferenceMap& ymap)
{
    const auto geometry = compute_geometry(mesh);
    const auto hhat = compute_hhat_all(mesh, geometry, ymap.points);
    std::vector<std::vector<int>> empty(mesh.num_vertices());
    BlockSparseMatrix D(SparsityPattern::from_adjacency(empty));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Mat3 A = hhat[t].H_inv * hhat[t].J;
        for (int v : mesh.triangle(t)) {
            if (!mesh.is_boundary_vertex(v)) D.add_block(v, v, (geometry[t].area / 3.0) * A);
        }
    }
    const auto bedges = mesh.boundary_edges();
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary_vertex(v)) continue;
        const Mat3 T = boundary_tangent_projection(mesh, v);
        for (int e : mesh.boundary_edges_at(v)) {
            const Edge& be = bedges[e];
            const double w = 0.5 * (mesh.vertex(be[1]) - mesh.vertex(be[0])).norm();
            const int t = mesh.boundary_edge_triangle(e);
            D.add_block(v, v, w * (T * hhat[t].H_inv * hhat[t].J));
        }
    }
    return D;
}

CurveOperators assemble_boundary_curve_operators(const SurfaceMesh& mesh)
{
    CurveOperators c;
    c.local_of.assign(mesh.num_vertices(), -1);
    const auto& loops = mesh.boundary_loops();
    for (int l = 0; l < static_cast<int>(loops.size()); ++l) {
        for (int v : loops[l]) {
            c.local_of[v] = static_cast<int>(c.vertices.size());
            c.vertices.push_back(v);
            c.loop_of.push_back(l);
        }
    }
    const int nb = static_cast<int>(c.vertices.size());
    std::vector<std::vector<int>> adjacency(nb);
    for (const Edge& e : mesh.boundary_edges()) {
        adjacency[c.local_of[e[0]]].push_back(c.local_of[e[1]]);
        adjacency[c.local_of[e[1]]].push_back(c.local_of[e[0]]);
    }
    c.stiffness = SparseMatrix(SparsityPattern::from_adjacency(adjacency));
    c.mass = Eigen::VectorXd::Zero(nb);
    for (const Edge& e : mesh.boundary_edges()) {
        const int a = c.local_of[e[0]];
        const int b = c.local_of[e[1]];
        const double len = (mesh.vertex(e[1]) - mesh.vertex(e[0])).norm();
        c.mass[a] += 0.5 * len;
        c.mass[b] += 0.5 * len;
        c.stiffness.add(a, a, 1.0 / len);
        c.stiffness.add(b, b, 1.0 / len);
        c.stiffness.add(a, b, -1.0 / len);
        c.stiffness.add(b, a, -1.0 / len);
    }
    return c;
}

}  // namespace esfem
