#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace esfem {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Tri = std::array<int, 3>;
using Edge = std::array<int, 2>;

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateTriangleError : public MeshError {
public:
    DegenerateTriangleError(int triangle, const std::string& what)
        : MeshError(what + " (triangle " + std::to_string(triangle) + ")"), triangle_(triangle)
    {
    }
    int triangle() const noexcept { return triangle_; }

private:
    int triangle_;
};

/// Node of the bisection forest.  Vertices 0 and 1 span the refinement edge,
/// vertex 2 is the newest vertex of the element.
struct ForestNode {
    Tri vertices{};
    int parent = -1;
    std::array<int, 2> children{-1, -1};

    bool is_leaf() const noexcept { return children[0] < 0; }
};

///
/// Triangulated 2-manifold with boundary embedded in R^3.
///
/// Triangles are oriented consistently; boundary edges are stored with the
/// direction induced by their triangle, so each boundary loop is traversed
/// with the surface on its left.  Local edge k of a triangle (v0, v1, v2)
/// runs from v_k to v_{k+1}; local edge 0 is the refinement edge.
///
/// Coordinates may be changed freely through set_vertex()/set_positions();
/// any change of connectivity produces a new mesh with a new generation stamp.
///
class SurfaceMesh {
public:
    SurfaceMesh() = default;

    /// Builds a mesh whose forest has every triangle as a root.  Each root is
    /// rotated so that its longest edge becomes the refinement edge.
    static SurfaceMesh build(std::vector<Vec3> vertices, std::vector<Tri> triangles);

    /// Builds a mesh from a bisection forest; the leaves, visited depth first
    /// in root order, become the triangles.
    static SurfaceMesh from_forest(
        std::vector<Vec3> vertices,
        std::vector<ForestNode> forest,
        std::vector<int> roots);

    int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    int num_triangles() const noexcept { return static_cast<int>(triangles_.size()); }

    std::span<const Vec3> vertices() const noexcept { return vertices_; }
    const Vec3& vertex(int v) const { return vertices_[v]; }
    void set_vertex(int v, const Vec3& x) { vertices_[v] = x; }
    void set_positions(std::vector<Vec3> positions);

    std::span<const Tri> triangles() const noexcept { return triangles_; }
    const Tri& triangle(int t) const { return triangles_[t]; }

    /// Triangle across local edge k of t, or -1 on the boundary.
    int neighbor(int t, int k) const { return neighbors_[t][k]; }
    std::span<const int> vertex_triangles(int v) const;
    /// Sorted vertex neighbours of v (excluding v).
    std::span<const int> vertex_neighbors(int v) const;

    bool is_boundary_vertex(int v) const { return boundary_slot_[v] >= 0; }
    std::span<const Edge> boundary_edges() const noexcept { return boundary_edges_; }
    int boundary_edge_triangle(int e) const { return boundary_edge_triangle_[e]; }
    /// Boundary loops as vertex cycles in traversal order.
    const std::vector<std::vector<int>>& boundary_loops() const noexcept { return loops_; }
    /// Index of the loop containing boundary vertex v.
    int boundary_loop_of(int v) const;
    /// (incoming, outgoing) boundary edge indices at boundary vertex v.
    Edge boundary_edges_at(int v) const;
    int num_boundary_vertices() const noexcept { return num_boundary_vertices_; }

    int interior_edge_count() const noexcept { return interior_edges_; }
    int boundary_edge_count() const noexcept { return static_cast<int>(boundary_edges_.size()); }

    std::uint64_t generation() const noexcept { return generation_; }

    const std::vector<ForestNode>& forest() const noexcept { return forest_; }
    const std::vector<int>& forest_roots() const noexcept { return roots_; }
    int triangle_node(int t) const { return triangle_node_[t]; }

private:
    void build_topology();

    std::vector<Vec3> vertices_;
    std::vector<Tri> triangles_;
    std::vector<std::array<int, 3>> neighbors_;

    std::vector<int> vt_offsets_;
    std::vector<int> vt_data_;
    std::vector<int> vn_offsets_;
    std::vector<int> vn_data_;

    std::vector<Edge> boundary_edges_;
    std::vector<int> boundary_edge_triangle_;
    std::vector<int> boundary_slot_;  // per vertex: position within its loop, -1 interior
    std::vector<int> boundary_loop_id_;
    std::vector<Edge> boundary_edges_at_;
    std::vector<std::vector<int>> loops_;
    int num_boundary_vertices_ = 0;
    int interior_edges_ = 0;

    std::vector<ForestNode> forest_;
    std::vector<int> roots_;
    std::vector<int> triangle_node_;

    std::uint64_t generation_ = 0;
};

/// Per-vertex field with k components stored contiguously (vertex-major).
/// The stamp records the mesh generation the values belong to.
struct NodalField {
    int components = 1;
    Eigen::VectorXd values;
    std::uint64_t stamp = 0;

    NodalField() = default;
    NodalField(const SurfaceMesh& mesh, int k)
        : components(k), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k) * mesh.num_vertices())),
          stamp(mesh.generation())
    {
    }

    int size() const noexcept { return components == 0 ? 0 : static_cast<int>(values.size()) / components; }
    bool matches(const SurfaceMesh& mesh) const noexcept
    {
        return stamp == mesh.generation() && size() == mesh.num_vertices();
    }
    double& operator()(int v, int c = 0) { return values[static_cast<Eigen::Index>(v) * components + c]; }
    double operator()(int v, int c = 0) const { return values[static_cast<Eigen::Index>(v) * components + c]; }
    Eigen::Map<Vec3> vec3(int v)
    {
        return Eigen::Map<Vec3>(values.data() + static_cast<Eigen::Index>(v) * 3);
    }
    Eigen::Map<const Vec3> vec3(int v) const
    {
        return Eigen::Map<const Vec3>(values.data() + static_cast<Eigen::Index>(v) * 3);
    }
};

/// Throws MeshError when the field was produced for another mesh.
void require_matching(const NodalField& field, const SurfaceMesh& mesh, const char* what);

/// Flattens positions into the vertex-major 3-vector layout used by the solvers.
Eigen::VectorXd flatten(std::span<const Vec3> points);
std::vector<Vec3> unflatten(const Eigen::VectorXd& values);

}  // namespace esfem
