#include "esfem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_map>

namespace esfem {

namespace {

std::atomic<std::uint64_t> next_generation{1};

std::uint64_t edge_key(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

double squared_length(const Vec3& a, const Vec3& b) { return (a - b).squaredNorm(); }

// Rotates (a, b, c) so that the longest edge comes first.  Ties are broken by
// the smaller sorted vertex pair so the choice does not depend on the input
// rotation.
Tri rotate_longest_edge_first(const std::vector<Vec3>& x, const Tri& t)
{
    int best = 0;
    double best_len = -1.0;
    Edge best_pair{};
    for (int k = 0; k < 3; ++k) {
        const int a = t[k];
        const int b = t[(k + 1) % 3];
        const double len = squared_length(x[a], x[b]);
        const Edge pair{std::min(a, b), std::max(a, b)};
        if (len > best_len * (1.0 + 1e-12) || (len >= best_len * (1.0 - 1e-12) && pair < best_pair)) {
            best = k;
            best_len = len;
            best_pair = pair;
        }
    }
    return {t[best], t[(best + 1) % 3], t[(best + 2) % 3]};
}

void collect_leaves(const std::vector<ForestNode>& forest, int node, std::vector<int>& out)
{
    const ForestNode& n = forest[node];
    if (n.is_leaf()) {
        out.push_back(node);
        return;
    }
    collect_leaves(forest, n.children[0], out);
    collect_leaves(forest, n.children[1], out);
}

}  // namespace

SurfaceMesh SurfaceMesh::build(std::vector<Vec3> vertices, std::vector<Tri> triangles)
{
    SurfaceMesh mesh;
    const int nv = static_cast<int>(vertices.size());
    for (const Tri& t : triangles) {
        for (int v : t) {
            if (v < 0 || v >= nv) throw MeshError("triangle references vertex index out of range");
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw MeshError("triangle repeats a vertex");
    }
    {
        std::vector<Tri> sorted(triangles);
        for (Tri& t : sorted) std::sort(t.begin(), t.end());
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw MeshError("duplicate triangle");
    }
    mesh.forest_.reserve(triangles.size());
    for (const Tri& t : triangles) {
        ForestNode node;
        node.vertices = rotate_longest_edge_first(vertices, t);
        mesh.roots_.push_back(static_cast<int>(mesh.forest_.size()));
        mesh.forest_.push_back(node);
    }
    mesh.vertices_ = std::move(vertices);
    mesh.triangles_.reserve(mesh.forest_.size());
    for (std::size_t i = 0; i < mesh.forest_.size(); ++i) {
        mesh.triangles_.push_back(mesh.forest_[i].vertices);
        mesh.triangle_node_.push_back(static_cast<int>(i));
    }
    mesh.build_topology();
    return mesh;
}

SurfaceMesh SurfaceMesh::from_forest(
    std::vector<Vec3> vertices,
    std::vector<ForestNode> forest,
    std::vector<int> roots)
{
    SurfaceMesh mesh;
    mesh.vertices_ = std::move(vertices);
    mesh.forest_ = std::move(forest);
    mesh.roots_ = std::move(roots);
    std::vector<int> leaves;
    for (int r : mesh.roots_) collect_leaves(mesh.forest_, r, leaves);
    const int nv = mesh.num_vertices();
    for (int leaf : leaves) {
        const Tri& t = mesh.forest_[leaf].vertices;
        for (int v : t) {
            if (v < 0 || v >= nv) throw MeshError("forest references vertex index out of range");
        }
        mesh.triangles_.push_back(t);
        mesh.triangle_node_.push_back(leaf);
    }
    mesh.build_topology();
    return mesh;
}

void SurfaceMesh::set_positions(std::vector<Vec3> positions)
{
    if (positions.size() != vertices_.size()) throw MeshError("position count does not match vertex count");
    vertices_ = std::move(positions);
}

std::span<const int> SurfaceMesh::vertex_triangles(int v) const
{
    const std::size_t b = vt_offsets_[v];
    const std::size_t e = vt_offsets_[v + 1];
    return std::span<const int>(vt_data_).subspan(b, e - b);
}

std::span<const int> SurfaceMesh::vertex_neighbors(int v) const
{
    const std::size_t b = vn_offsets_[v];
    const std::size_t e = vn_offsets_[v + 1];
    return std::span<const int>(vn_data_).subspan(b, e - b);
}

int SurfaceMesh::boundary_loop_of(int v) const
{
    if (!is_boundary_vertex(v)) throw MeshError("vertex " + std::to_string(v) + " is not on the boundary");
    return boundary_loop_id_[v];
}

Edge SurfaceMesh::boundary_edges_at(int v) const
{
    if (!is_boundary_vertex(v)) throw MeshError("vertex " + std::to_string(v) + " is not on the boundary");
    return boundary_edges_at_[v];
}

void SurfaceMesh::build_topology()
{
    const int nv = num_vertices();
    const int nt = num_triangles();
    generation_ = next_generation.fetch_add(1);

    // Undirected edge multiplicity first: more than two triangles on an edge
    // is reported as non-manifold before any orientation complaint.
    std::unordered_map<std::uint64_t, int> undirected;
    undirected.reserve(3 * nt);
    for (const Tri& t : triangles_) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            if (++undirected[edge_key(std::min(a, b), std::max(a, b))] > 2)
                throw MeshError("non-manifold edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
        }
    }

    std::unordered_map<std::uint64_t, std::pair<int, int>> directed;
    directed.reserve(3 * nt);
    for (int ti = 0; ti < nt; ++ti) {
        const Tri& t = triangles_[ti];
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            if (!directed.emplace(edge_key(a, b), std::make_pair(ti, k)).second)
                throw MeshError("inconsistent orientation at edge (" + std::to_string(a) + ", " + std::to_string(b) + ")");
        }
    }

    neighbors_.assign(nt, {-1, -1, -1});
    boundary_edges_.clear();
    boundary_edge_triangle_.clear();
    interior_edges_ = 0;
    for (int ti = 0; ti < nt; ++ti) {
        const Tri& t = triangles_[ti];
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            auto it = directed.find(edge_key(b, a));
            if (it != directed.end()) {
                neighbors_[ti][k] = it->second.first;
                if (a < b) ++interior_edges_;
            } else {
                boundary_edges_.push_back({a, b});
                boundary_edge_triangle_.push_back(ti);
            }
        }
    }

    // vertex -> triangle incidence (CSR)
    vt_offsets_.assign(nv + 1, 0);
    for (const Tri& t : triangles_)
        for (int v : t) ++vt_offsets_[v + 1];
    for (int v = 0; v < nv; ++v) vt_offsets_[v + 1] += vt_offsets_[v];
    vt_data_.assign(vt_offsets_.back(), 0);
    {
        std::vector<int> fill(vt_offsets_.begin(), vt_offsets_.end() - 1);
        for (int ti = 0; ti < nt; ++ti)
            for (int v : triangles_[ti])
                vt_data_[fill[v]++] = ti;
    }
    for (int v = 0; v < nv; ++v) {
        if (vt_offsets_[v] == vt_offsets_[v + 1])
            throw MeshError("vertex " + std::to_string(v) + " belongs to no triangle");
    }

    // vertex -> vertex neighbours (sorted)
    vn_offsets_.assign(nv + 1, 0);
    vn_data_.clear();
    std::vector<int> scratch;
    for (int v = 0; v < nv; ++v) {
        scratch.clear();
        for (int ti : vertex_triangles(v))
            for (int w : triangles_[ti])
                if (w != v) scratch.push_back(w);
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        vn_data_.insert(vn_data_.end(), scratch.begin(), scratch.end());
        vn_offsets_[v + 1] = static_cast<int>(vn_data_.size());
    }

    // boundary loops: every boundary vertex needs exactly one incoming and one
    // outgoing boundary edge
    const int nb = static_cast<int>(boundary_edges_.size());
    std::vector<int> outgoing(nv, -1);
    std::vector<int> incoming(nv, -1);
    for (int e = 0; e < nb; ++e) {
        const Edge& be = boundary_edges_[e];
        if (outgoing[be[0]] >= 0 || incoming[be[1]] >= 0)
            throw MeshError("boundary is not a union of simple closed curves");
        outgoing[be[0]] = e;
        incoming[be[1]] = e;
    }
    boundary_slot_.assign(nv, -1);
    boundary_loop_id_.assign(nv, -1);
    boundary_edges_at_.assign(nv, {-1, -1});
    loops_.clear();
    num_boundary_vertices_ = 0;
    std::vector<char> used(nb, 0);
    for (int e0 = 0; e0 < nb; ++e0) {
        if (used[e0]) continue;
        std::vector<int> loop;
        int e = e0;
        while (!used[e]) {
            used[e] = 1;
            const int v = boundary_edges_[e][0];
            boundary_slot_[v] = static_cast<int>(loop.size());
            boundary_loop_id_[v] = static_cast<int>(loops_.size());
            loop.push_back(v);
            const int w = boundary_edges_[e][1];
            e = outgoing[w];
            if (e < 0) throw MeshError("open boundary curve");
        }
        if (e != e0) throw MeshError("boundary is not a union of simple closed curves");
        num_boundary_vertices_ += static_cast<int>(loop.size());
        loops_.push_back(std::move(loop));
    }
    for (int v = 0; v < nv; ++v) {
        if (outgoing[v] >= 0)
            boundary_edges_at_[v] = {incoming[v],
                                                               outgoing[v]};
    }

    // Non-degeneracy (scale-invariant threshold).
    for (int ti = 0; ti < nt; ++ti) {
        const Tri& t = triangles_[ti];
        const Vec3& a = vertices_[t[0]];
        const Vec3& b = vertices_[t[1]];
        const Vec3& c = vertices_[t[2]];
        const double area = 0.5 * (b - a).cross(c - a).norm();
        const double h2 = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
        if (!(area >= 1e-14 * h2) || h2 == 0.0) throw DegenerateTriangleError(ti, "degenerate triangle");
    }
}

void require_matching(const NodalField& field, const SurfaceMesh& mesh, const char* what)
{
    if (!field.matches(mesh)) throw MeshError(std::string("stale nodal field: ") + what);
}

Eigen::VectorXd flatten(std::span<const Vec3> points)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(3 * points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) out.segment<3>(static_cast<Eigen::Index>(3 * i)) = points[i];
    return out;
}

std::vector<Vec3> unflatten(const Eigen::VectorXd& values)
{
    std::vector<Vec3> out(values.size() / 3);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values.segment<3>(static_cast<Eigen::Index>(3 * i));
    return out;
}

}  // namespace esfem
