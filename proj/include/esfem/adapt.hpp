#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esfem/flow.hpp"

namespace esfem {

enum class Mark : std::uint8_t { Keep, Refine, Coarsen };

struct MarkSet {
    std::vector<Mark> marks;  // per triangle of the mesh they were computed for
    std::uint64_t stamp = 0;

    int count(Mark m) const;
    bool empty() const { return count(Mark::Refine) == 0 && count(Mark::Coarsen) == 0; }
};

/// Refine when |S| > 2 A_target, coarsen when |S| < A_target / 2.
MarkSet mark(const SurfaceMesh& mesh, double a_target);

struct AdaptConfig {
    bool enabled = true;
    double t_adapt = 1e-3;
    int initial_triangles = 0;  // N(T(Gamma_h^0)), frozen
    bool geometric_consistency = true;

    void validate() const;
};

/// True when some r >= 1 satisfies  t_old < r t_adapt <= t_new.
bool adapt_due(double t_old, double t_new, double t_adapt);

struct RefineCoarsenStats {
    int bisections = 0;
    int removed_vertices = 0;
    std::vector<int> new_vertices;  // indices in the new mesh
};

/// One round of newest-vertex bisection (with recursive closure) and
/// coarsening.  New vertices sit at edge midpoints; their reference points
/// are interpolated and projected back onto the manifold, extra fields are
/// interpolated linearly.  Coarsening runs first and removes a bisection
/// vertex only when every leaf around it is marked.
RefineCoarsenStats refine_and_coarsen(
    SurfaceMesh& mesh,
    ReferenceMap& ymap,
    const MarkSet& marks,
    std::span<NodalField* const> fields = {});

/// Discrete curvature vector of the boundary polygons,  -M_c^{-1} A_c id,
/// pointing towards the centre of curvature.  Zero at interior vertices.
NodalField boundary_curvature_vector(const SurfaceMesh& mesh);

/// Repositions the boundary vertices of the selected loops (all when empty)
/// by solving  A_c u = -M_c kappa  with the lumped-mass weighted mean of u
/// equal to that of the current positions.  kappa is the inward curvature
/// vector interpolated onto the current mesh.
SolveReport geometric_consistency_update(
    SurfaceMesh& mesh,
    const NodalField& kappa,
    const std::vector<char>& loops = {},
    const SolverOptions& opts = {});

struct AdaptReport {
    bool fired = false;
    int refined = 0;
    int coarsened = 0;
    int triangles_before = 0;
    int triangles_after = 0;
    double sigma_before = 0.0;
    double sigma_after = 0.0;
};

/// mark -> curvature -> refine/coarsen -> geometric consistency.  An empty
/// mark set leaves the state untouched.
AdaptReport adapt_cycle(SimState& state, const AdaptConfig& config, std::span<NodalField* const> fields = {});

}  // namespace esfem
