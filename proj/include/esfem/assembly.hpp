#pragma once

#include <array>
#include <memory>
#include <vector>

#include "esfem/geometry.hpp"
#include "esfem/linalg.hpp"
#include "esfem/reference.hpp"

namespace esfem {

class DegenerateParametrizationError : public MeshError {
public:
    DegenerateParametrizationError(int triangle, const std::string& what)
        : MeshError(what + " (triangle " + std::to_string(triangle) + ")"), triangle_(triangle)
    {
    }
    int triangle() const noexcept { return triangle_; }

private:
    int triangle_;
};

/// Per-triangle pull-back metric  H = J J^T + I - P,  where the columns of J
/// are the tangential gradients of the three components of the reference map.
struct HHat {
    Mat3 H = Mat3::Identity();
    Mat3 H_inv = Mat3::Identity();
    Mat3 J = Mat3::Zero();
    int triangle = -1;
};

HHat compute_hhat(const SurfaceMesh& mesh, const ReferenceMap& ymap, int t);
HHat compute_hhat(const TriangleGeometry& g, const Tri& tri, std::span<const Vec3> y, int t);
std::vector<HHat> compute_hhat_all(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry, std::span<const Vec3> y);

/// Element-to-pattern slot table, reusable while the connectivity is fixed.
struct ElementSlots {
    std::shared_ptr<const SparsityPattern> pattern;
    std::vector<std::array<int, 9>> slots;  // slots[t][3 a + b] for local vertices a, b
    std::uint64_t stamp = 0;

    static ElementSlots build(const SurfaceMesh& mesh);
    bool matches(const SurfaceMesh& mesh) const noexcept { return pattern && stamp == mesh.generation(); }
};

/// Lumped mass per vertex: sum of incident areas / 3 in the interior, sum of
/// incident boundary edge lengths / 2 at boundary vertices.
Eigen::VectorXd lumped_mass(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry);
Eigen::VectorXd lumped_mass(const SurfaceMesh& mesh);
/// Surface lumped mass (area / 3 rule) at every vertex.
Eigen::VectorXd surface_lumped_mass(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry);

/// Block-diagonal form of lumped_mass().
BlockSparseMatrix assemble_mass_lumped(const SurfaceMesh& mesh);

/// Consistent scalar mass and stiffness (exact P1 integrals).
SparseMatrix assemble_mass_consistent_scalar(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry, const ElementSlots& slots);
SparseMatrix assemble_stiffness_scalar(const SurfaceMesh& mesh, std::span<const TriangleGeometry> geometry, const ElementSlots& slots);

/// Element matrices of one triangle.
std::array<double, 9> element_mass(const TriangleGeometry& g);
std::array<double, 9> element_stiffness(const TriangleGeometry& g);

/// Consistent vector mass with the first-component rows and columns of
/// boundary vertices replaced by the identity.
BlockSparseMatrix assemble_mass_consistent_constrained(const SurfaceMesh& mesh);

/// Vector stiffness with delta_{kappa sigma} blocks.
BlockSparseMatrix assemble_stiffness(const SurfaceMesh& mesh);

/// Per-dof mask of the first component at boundary vertices.
std::vector<char> zeta_constraint_mask(const SurfaceMesh& mesh);

/// Matrix-free D Z: per vertex sum of weighted H^{-1} J Z_i; boundary rows use
/// the boundary edge measure and are projected by T_h.
Eigen::VectorXd apply_deturck_D(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    std::span<const HHat> hhat,
    const Eigen::VectorXd& zeta_tilde);
Eigen::VectorXd apply_deturck_D(const SurfaceMesh& mesh, const ReferenceMap& ymap, const Eigen::VectorXd& zeta_tilde);

/// Materialised D (vertex-diagonal blocks).
BlockSparseMatrix assemble_deturck_D(const SurfaceMesh& mesh, const ReferenceMap& ymap);

/// P1 operators on the boundary polygons.  Local index k refers to
/// vertices[k]; local_of maps global vertex ids (-1 for interior vertices).
struct CurveOperators {
    std::vector<int> vertices;
    std::vector<int> local_of;
    std::vector<int> loop_of;            // per local vertex
    Eigen::VectorXd mass;                // lumped: half the incident edge lengths
    SparseMatrix stiffness;              // 1 / length per edge
};

CurveOperators assemble_boundary_curve_operators(const SurfaceMesh& mesh);

}  // namespace esfem
