#include "esfem/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace esfem {

int MarkSet::count(Mark m) const { return static_cast<int>(std::count(marks.begin(), marks.end(), m)); }

MarkSet mark(const SurfaceMesh& mesh, double a_target)
{
    if (!(a_target > 0.0)) throw std::invalid_argument("target area must be positive");
    MarkSet out;
    out.stamp = mesh.generation();
    out.marks.resize(mesh.num_triangles(), Mark::Keep);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double a = triangle_area(mesh, t);
        if (a > 2.0 * a_target) out.marks[t] = Mark::Refine;
        else if (a < 0.5 * a_target) out.marks[t] = Mark::Coarsen;
    }
    return out;
}

void AdaptConfig::validate() const
{
    if (!(t_adapt > 0.0)) throw std::invalid_argument("t_adapt must be positive");
    if (initial_triangles <= 0) throw std::invalid_argument("initial triangle count must be positive");
}

bool adapt_due(double t_old, double t_new, double t_adapt)
{
    if (!(t_adapt > 0.0) || !(t_new > t_old)) return false;
    const double r = std::floor(t_old / t_adapt) + 1.0;
    return r * t_adapt <= t_new * (1.0 + 1e-12);
}

namespace {

std::uint64_t edge_key(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

/// Mutable copy of the bisection forest plus per-vertex data.
class ForestEditor {
public:
    ForestEditor(const SurfaceMesh& mesh, const ReferenceMap& ymap, std::span<NodalField* const> fields)
        : x_(mesh.vertices().begin(), mesh.vertices().end()),
          y_(ymap.points),
          manifold_(ymap.manifold),
          forest_(mesh.forest()),
          roots_(mesh.forest_roots()),
          removed_(x_.size(), 0)
    {
        for (NodalField* f : fields) {
            field_data_.push_back(f->values);
            field_components_.push_back(f->components);
        }
    }

    std::vector<ForestNode>& forest() { return forest_; }

    void remove_vertex(int v) { removed_[v] = 1; }

    void collapse(int parent) { forest_[parent].children = {-1, -1}; }

    /// Bisects every listed leaf once, refining incompatible neighbours first.
    int refine(const std::vector<int>& nodes)
    {
        index_leaves();
        for (int node : nodes) {
            if (forest_[node].is_leaf()) refine_leaf(node, 0);
        }
        return bisections_;
    }

    const std::vector<int>& created() const { return created_; }

    /// Compacts vertices and forest and rebuilds the mesh.
    void finish(SurfaceMesh& mesh, ReferenceMap& ymap, std::span<NodalField* const> fields, std::vector<int>& old_to_new)
    {
        old_to_new.assign(x_.size(), -1);
        std::vector<Vec3> x;
        std::vector<Vec3> y;
        for (std::size_t v = 0; v < x_.size(); ++v) {
            if (removed_[v]) continue;
            old_to_new[v] = static_cast<int>(x.size());
            x.push_back(x_[v]);
            y.push_back(y_[v]);
        }
        std::vector<ForestNode> forest;
        std::vector<int> roots;
        for (int r : roots_) {
            roots.push_back(copy_subtree(r, -1, forest, old_to_new));
        }
        mesh = SurfaceMesh::from_forest(std::move(x), std::move(forest), std::move(roots));
        ymap.points = std::move(y);
        for (std::size_t k = 0; k < fields.size(); ++k) {
            const int c = field_components_[k];
            NodalField out(mesh, c);
            for (std::size_t v = 0; v < x_.size(); ++v) {
                if (old_to_new[v] < 0) continue;
                for (int i = 0; i < c; ++i) out(old_to_new[v], i) = field_data_[k][static_cast<Eigen::Index>(v) * c + i];
            }
            *fields[k] = std::move(out);
        }
    }

private:
    int copy_subtree(int node, int parent, std::vector<ForestNode>& out, const std::vector<int>& old_to_new)
    {
        const int id = static_cast<int>(out.size());
        out.push_back(ForestNode{});
        ForestNode n;
        n.parent = parent;
        for (int k = 0; k < 3; ++k) {
            const int v = old_to_new[forest_[node].vertices[k]];
            if (v < 0) throw MeshError("forest references a removed vertex");
            n.vertices[k] = v;
        }
        if (!forest_[node].is_leaf()) {
            const int c0 = copy_subtree(forest_[node].children[0], id, out, old_to_new);
            const int c1 = copy_subtree(forest_[node].children[1], id, out, old_to_new);
            n.children = {c0, c1};
        }
        out[id] = n;
        return id;
    }

    void add_leaf(int node)
    {
        const Tri& v = forest_[node].vertices;
        for (int k = 0; k < 3; ++k) {
            auto& slot = leaves_by_edge_.try_emplace(edge_key(v[k], v[(k + 1) % 3]), std::array<int, 2>{-1, -1}).first->second;
            if (slot[0] < 0) slot[0] = node;
            else if (slot[1] < 0) slot[1] = node;
            else throw MeshError("forest inconsistency: edge shared by more than two leaves");
        }
    }

    void remove_leaf(int node)
    {
        const Tri& v = forest_[node].vertices;
        for (int k = 0; k < 3; ++k) {
            auto it = leaves_by_edge_.find(edge_key(v[k], v[(k + 1) % 3]));
            if (it == leaves_by_edge_.end()) throw MeshError("forest inconsistency: missing edge");
            auto& slot = it->second;
            if (slot[0] == node) slot[0] = slot[1];
            else if (slot[1] != node) throw MeshError("forest inconsistency: leaf not registered on its edge");
            slot[1] = -1;
            if (slot[0] < 0) leaves_by_edge_.erase(it);
        }
    }

    void index_leaves()
    {
        leaves_by_edge_.clear();
        std::vector<int> stack(roots_.rbegin(), roots_.rend());
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            if (forest_[n].is_leaf()) add_leaf(n);
            else {
                stack.push_back(forest_[n].children[1]);
                stack.push_back(forest_[n].children[0]);
            }
        }
    }

    int across_refinement_edge(int node) const
    {
        const Tri& v = forest_[node].vertices;
        const auto it = leaves_by_edge_.find(edge_key(v[0], v[1]));
        if (it == leaves_by_edge_.end()) throw MeshError("forest inconsistency: refinement edge not indexed");
        return it->second[0] == node ? it->second[1] : it->second[0];
    }

    int midpoint(int a, int b)
    {
        const std::uint64_t key = edge_key(a, b);
        const auto it = midpoints_.find(key);
        if (it != midpoints_.end()) return it->second;
        const int id = static_cast<int>(x_.size());
        x_.push_back(0.5 * (x_[a] + x_[b]));
        y_.push_back(manifold_.project(0.5 * (y_[a] + y_[b])));
        removed_.push_back(0);
        for (std::size_t k = 0; k < field_data_.size(); ++k) {
            const int c = field_components_[k];
            Eigen::VectorXd& d = field_data_[k];
            const Eigen::Index old = d.size();
            d.conservativeResize(old + c);
            for (int i = 0; i < c; ++i) d[old + i] = 0.5 * (d[static_cast<Eigen::Index>(a) * c + i] + d[static_cast<Eigen::Index>(b) * c + i]);
        }
        midpoints_.emplace(key, id);
        created_.push_back(id);
        return id;
    }

    void bisect(int node, int m)
    {
        remove_leaf(node);
        const Tri v = forest_[node].vertices;
        const int c0 = static_cast<int>(forest_.size());
        forest_.push_back(ForestNode{{v[2], v[0], m}, node, {-1, -1}});
        forest_.push_back(ForestNode{{v[1], v[2], m}, node, {-1, -1}});
        forest_[node].children = {c0, c0 + 1};
        add_leaf(c0);
        add_leaf(c0 + 1);
        ++bisections_;
    }

    void refine_leaf(int node, int depth)
    {
        if (depth > static_cast<int>(forest_.size())) throw MeshError("refinement closure does not terminate");
        while (true) {
            const Tri& v = forest_[node].vertices;
            const int a = v[0];
            const int b = v[1];
            const int nb = across_refinement_edge(node);
            if (nb < 0) {
                bisect(node, midpoint(a, b));
                return;
            }
            const Tri& w = forest_[nb].vertices;
            if (edge_key(w[0], w[1]) == edge_key(a, b)) {
                const int m = midpoint(a, b);
                bisect(node, m);
                bisect(nb, m);
                return;
            }
            refine_leaf(nb, depth + 1);
        }
    }

    std::vector<Vec3> x_;
    std::vector<Vec3> y_;
    ReferenceManifold manifold_;
    std::vector<ForestNode> forest_;
    std::vector<int> roots_;
    std::vector<char> removed_;
    std::vector<Eigen::VectorXd> field_data_;
    std::vector<int> field_components_;
    std::unordered_map<std::uint64_t, std::array<int, 2>> leaves_by_edge_;
    std::unordered_map<std::uint64_t, int> midpoints_;
    std::vector<int> created_;
    int bisections_ = 0;
};

}  // namespace

RefineCoarsenStats refine_and_coarsen(SurfaceMesh& mesh, ReferenceMap& ymap, const MarkSet& marks, std::span<NodalField* const> fields)
{
    if (marks.stamp != mesh.generation() || static_cast<int>(marks.marks.size()) != mesh.num_triangles())
        throw MeshError("marks do not belong to this mesh");
    if (static_cast<int>(ymap.points.size()) != mesh.num_vertices()) throw MeshError("reference map does not match the mesh");
    for (NodalField* f : fields) require_matching(*f, mesh, "adapted field");

    RefineCoarsenStats stats;
    if (marks.empty()) return stats;

    ForestEditor editor(mesh, ymap, fields);
    auto& forest = editor.forest();

    // Coarsening: vertex m goes when all its leaves are marked children whose
    // newest vertex is m and whose siblings are leaves.
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const auto tris = mesh.vertex_triangles(v);
        bool ok = !tris.empty();
        std::vector<int> parents;
        for (int t : tris) {
            const int node = mesh.triangle_node(t);
            const ForestNode& n = forest[node];
            if (marks.marks[t] != Mark::Coarsen || n.parent < 0 || n.vertices[2] != v) {
                ok = false;
                break;
            }
            const ForestNode& p = forest[n.parent];
            const int sibling = p.children[0] == node ? p.children[1] : p.children[0];
            if (!forest[sibling].is_leaf()) {
                ok = false;
                break;
            }
            if (std::find(parents.begin(), parents.end(), n.parent) == parents.end()) parents.push_back(n.parent);
        }
        const std::size_t expected = mesh.is_boundary_vertex(v) ? 1 : 2;
        if (!ok || parents.size() != expected || tris.size() != 2 * expected) continue;
        for (int p : parents) editor.collapse(p);
        editor.remove_vertex(v);
        ++stats.removed_vertices;
    }

    std::vector<int> refine_nodes;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        if (marks.marks[t] == Mark::Refine) refine_nodes.push_back(mesh.triangle_node(t));
    }
    stats.bisections = editor.refine(refine_nodes);

    std::vector<int> old_to_new;
    editor.finish(mesh, ymap, fields, old_to_new);
    for (int v : editor.created()) stats.new_vertices.push_back(old_to_new[v]);
    return stats;
}

NodalField boundary_curvature_vector(const SurfaceMesh& mesh)
{
    NodalField kappa(mesh, 3);
    const CurveOperators c = assemble_boundary_curve_operators(mesh);
    const int nb = static_cast<int>(c.vertices.size());
    for (int comp = 0; comp < 3; ++comp) {
        Eigen::VectorXd x(nb);
        for (int k = 0; k < nb; ++k) x[k] = mesh.vertex(c.vertices[k])[comp];
        const Eigen::VectorXd ax = c.stiffness * x;
        for (int k = 0; k < nb; ++k) kappa(c.vertices[k], comp) = -ax[k] / c.mass[k];
    }
    return kappa;
}

SolveReport geometric_consistency_update(SurfaceMesh& mesh, const NodalField& kappa, const std::vector<char>& loops, const SolverOptions& opts)
{
    require_matching(kappa, mesh, "curvature");
    const CurveOperators c = assemble_boundary_curve_operators(mesh);
    const int nb = static_cast<int>(c.vertices.size());
    const int nloops = static_cast<int>(mesh.boundary_loops().size());
    std::vector<Vec3> x(mesh.vertices().begin(), mesh.vertices().end());
    SolveReport total;
    total.converged = true;

    for (int l = 0; l < nloops; ++l) {
        if (!loops.empty() && !loops[l]) continue;
        // local system restricted to loop l
        std::vector<int> idx;
        for (int k = 0; k < nb; ++k)
            if (c.loop_of[k] == l) idx.push_back(k);
        const int n = static_cast<int>(idx.size());
        std::vector<int> pos(nb, -1);
        for (int i = 0; i < n; ++i) pos[idx[i]] = i;
        std::vector<std::vector<int>> adjacency(n);
        const auto rp = c.stiffness.pattern().row_ptr();
        const auto cols = c.stiffness.pattern().cols();
        for (int i = 0; i < n; ++i)
            for (int k = rp[idx[i]]; k < rp[idx[i] + 1]; ++k)
                if (cols[k] != idx[i]) adjacency[i].push_back(pos[cols[k]]);
        SparseMatrix A(SparsityPattern::from_adjacency(adjacency));
        for (int i = 0; i < n; ++i)
            for (int k = rp[idx[i]]; k < rp[idx[i] + 1]; ++k) A.add(i, pos[cols[k]], c.stiffness.values()[k]);

        Eigen::VectorXd m(n);
        for (int i = 0; i < n; ++i) m[i] = c.mass[idx[i]];
        const double mass = m.sum();
        for (int comp = 0; comp < 3; ++comp) {
            Eigen::VectorXd rhs(n), u(n), cur(n);
            for (int i = 0; i < n; ++i) {
                const int v = c.vertices[idx[i]];
                rhs[i] = -m[i] * kappa(v, comp);
                cur[i] = x[v][comp];
            }
            // project onto the range of A (orthogonal to constants)
            rhs.array() -= rhs.mean();
            u = cur;
            const SolveReport r = cg_solve(A, rhs, u, opts);
            total.iterations += r.iterations;
            total.residual = std::max(total.residual, r.residual);
            total.converged = total.converged && r.converged;
            const double shift = (m.dot(cur) - m.dot(u)) / mass;
            u.array() += shift;
            for (int i = 0; i < n; ++i) x[c.vertices[idx[i]]][comp] = u[i];
        }
    }
    require_converged(total, "boundary curve system");
    mesh.set_positions(std::move(x));
    return total;
}

AdaptReport adapt_cycle(SimState& state, const AdaptConfig& config, std::span<NodalField* const> fields)
{
    config.validate();
    AdaptReport rep;
    rep.triangles_before = state.mesh.num_triangles();
    const auto metrics = mesh_metrics(state.mesh);
    const MarkSet marks = mark(state.mesh, metrics.total_area / config.initial_triangles);
    rep.refined = marks.count(Mark::Refine);
    rep.coarsened = marks.count(Mark::Coarsen);
    if (marks.empty()) {
        rep.triangles_after = rep.triangles_before;
        return rep;
    }
    rep.fired = true;
    rep.sigma_before = sigma_max(state.mesh).sigma_max;

    NodalField kappa = boundary_curvature_vector(state.mesh);
    std::vector<NodalField*> all(fields.begin(), fields.end());
    all.push_back(&kappa);
    const RefineCoarsenStats stats = refine_and_coarsen(state.mesh, state.ymap, marks, all);

    if (config.geometric_consistency) {
        std::vector<char> loops(state.mesh.boundary_loops().size(), 0);
        bool any = false;
        for (int v : stats.new_vertices) {
            if (state.mesh.is_boundary_vertex(v)) {
                loops[state.mesh.boundary_loop_of(v)] = 1;
                any = true;
            }
        }
        if (any) geometric_consistency_update(state.mesh, kappa, loops, state.config.solver);
    }
    rep.triangles_after = state.mesh.num_triangles();
    rep.sigma_after = sigma_max(state.mesh).sigma_max;
    return rep;
}

}  // namespace esfem
