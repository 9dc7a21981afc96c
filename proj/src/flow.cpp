#include "esfem/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace esfem {

void DeTurckConfig::validate() const
{
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(c_tau > 0.0)) throw std::invalid_argument("c_tau must be positive");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
}

const ElementSlots& SimState::element_slots()
{
    if (!slots.matches(mesh)) {
        slots = ElementSlots::build(mesh);
        zeta_guess.resize(0);
    }
    return slots;
}

Eigen::VectorXd sample_velocity(const SurfaceMesh& mesh, const VelocitySampler& v, double t)
{
    Eigen::VectorXd out(3 * mesh.num_vertices());
    for (int i = 0; i < mesh.num_vertices(); ++i) out.segment<3>(3 * i) = v(mesh.vertex(i), t);
    return out;
}

double time_step(double c_tau, double h_min) { return c_tau * h_min * h_min; }

double time_step(const SimState& state) { return time_step(state.config.c_tau, mesh_metrics(state.mesh).h_min); }

namespace {

void merge(SolveReport& into, const SolveReport& r)
{
    into.iterations += r.iterations;
    into.residual = std::max(into.residual, r.residual);
    into.converged = into.converged && r.converged;
}

NodalField zeta_solve(SimState& state, std::span<const TriangleGeometry> geometry, double epsilon, SolveReport* report)
{
    const SurfaceMesh& mesh = state.mesh;
    const int n = mesh.num_vertices();
    if (static_cast<int>(state.ymap.points.size()) != n) throw MeshError("reference map does not match the mesh");
    const ElementSlots& slots = state.element_slots();

    const SparseMatrix S = assemble_stiffness_scalar(mesh, geometry, slots);
    SparseMatrix A = assemble_mass_consistent_scalar(mesh, geometry, slots);
    if (epsilon > 0.0) {
        auto a = A.values();
        const auto s = S.values();
        for (std::size_t k = 0; k < a.size(); ++k) a[k] += epsilon * s[k];
    }

    std::vector<char> mask(n, 0);
    for (int v = 0; v < n; ++v) mask[v] = mesh.is_boundary_vertex(v) ? 1 : 0;

    NodalField zeta(mesh, 3);
    const bool warm = state.zeta_guess.size() == 3 * n;
    SolveReport total;
    total.converged = true;
    SparseMatrix A0 = A;
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd y(n);
        for (int v = 0; v < n; ++v) y[v] = state.ymap.points[v][c];
        Eigen::VectorXd rhs = -(S * y);
        Eigen::VectorXd x = warm ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<3>>(state.zeta_guess.data() + c, n))
                                 : Eigen::VectorXd::Zero(n);
        SolveReport r;
        if (c == 0) {
            apply_dirichlet(A0, rhs, mask, Eigen::VectorXd::Zero(n));
            for (int v = 0; v < n; ++v)
                if (mask[v]) x[v] = 0.0;
            r = cg_solve(A0, rhs, x, state.config.solver);
            for (int v = 0; v < n; ++v)
                if (mask[v]) x[v] = 0.0;
        } else {
            r = cg_solve(A, rhs, x, state.config.solver);
        }
        merge(total, r);
        for (int v = 0; v < n; ++v) zeta(v, c) = x[v];
    }
    if (report) *report = total;
    require_converged(total, "zeta system");
    state.zeta_guess = zeta.values;
    return zeta;
}

NodalField project_tilde(const ReferenceMap& ymap, const NodalField& zeta)
{
    NodalField out = zeta;
    for (int v = 0; v < zeta.size(); ++v) out.vec3(v) = ymap.manifold.tangent_projection(ymap.points[v]) * zeta.vec3(v);
    return out;
}

void check_result(const SurfaceMesh& mesh)
{
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        const Vec3& a = mesh.vertex(tri[0]);
        const Vec3& b = mesh.vertex(tri[1]);
        const Vec3& c = mesh.vertex(tri[2]);
        const double h2 = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
        const double area = 0.5 * (b - a).cross(c - a).norm();
        if (!(area >= 1e-12 * h2)) throw DegenerateTriangleError(t, "time step produced a degenerate triangle");
    }
}

/// D Z~ for the current state (geometry of the current mesh).
Eigen::VectorXd deturck_term(SimState& state, std::span<const TriangleGeometry> geometry, SolveReport* report)
{
    const NodalField zeta = zeta_solve(state, geometry, state.config.epsilon, report);
    const NodalField zt = project_tilde(state.ymap, zeta);
    const auto hhat = compute_hhat_all(state.mesh, geometry, state.ymap.points);
    return apply_deturck_D(state.mesh, geometry, hhat, zt.values);
}

}  // namespace

NodalField solve_zeta(SimState& state, SolveReport* report)
{
    return solve_zeta_regularized(state, 0.0, report);
}

NodalField solve_zeta_regularized(SimState& state, double epsilon, SolveReport* report)
{
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
    const auto geometry = compute_geometry(state.mesh);
    return zeta_solve(state, geometry, epsilon, report);
}

NodalField project_zeta_tilde(const SimState& state, const NodalField& zeta)
{
    require_matching(zeta, state.mesh, "zeta");
    return project_tilde(state.ymap, zeta);
}

StepInfo step_update(SimState& state, const Eigen::VectorXd& velocity, double tau, bool deturck)
{
    state.config.validate();
    SurfaceMesh& mesh = state.mesh;
    const int n = mesh.num_vertices();
    if (velocity.size() != 3 * n) throw MeshError("velocity field does not match the mesh");
    StepInfo info;
    info.tau = tau > 0.0 ? tau : time_step(state);
    info.old_positions = flatten(mesh.vertices());
    info.velocity = velocity;

    Eigen::VectorXd u = info.old_positions + info.tau * velocity;
    if (deturck) {
        const auto geometry = compute_geometry(mesh);
        const Eigen::VectorXd dz = deturck_term(state, geometry, &info.zeta_report);
        const Eigen::VectorXd m = lumped_mass(mesh, geometry);
        const double f = info.tau / state.config.alpha;
        for (int v = 0; v < n; ++v) {
            if (!(m[v] > 0.0)) throw MeshError("zero lumped mass at vertex " + std::to_string(v));
            u.segment<3>(3 * v) -= (f / m[v]) * dz.segment<3>(3 * v);
        }
    }
    mesh.set_positions(unflatten(u));
    state.time += info.tau;
    ++state.step;
    check_result(mesh);
    return info;
}

StepInfo step_update(SimState& state, const VelocitySampler& v, double tau, bool deturck)
{
    return step_update(state, sample_velocity(state.mesh, v, state.time), tau, deturck);
}

Eigen::VectorXd solve_mcf_interior(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    const ElementSlots& slots,
    const Eigen::VectorXd& boundary_positions,
    const Eigen::VectorXd& rhs_extra,
    double tau,
    const SolverOptions& opts,
    SolveReport* report)
{
    const int n = mesh.num_vertices();
    SparseMatrix A = assemble_stiffness_scalar(mesh, geometry, slots);
    const Eigen::VectorXd ms = surface_lumped_mass(mesh, geometry);
    for (int v = 0; v < n; ++v) A.add(v, v, ms[v] / tau);
    std::vector<char> mask(n, 0);
    for (int v = 0; v < n; ++v) mask[v] = mesh.is_boundary_vertex(v) ? 1 : 0;

    Eigen::VectorXd out(3 * n);
    SolveReport total;
    total.converged = true;
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd rhs(n), fixed(n), x(n);
        for (int v = 0; v < n; ++v) {
            const double old = mesh.vertex(v)[c];
            rhs[v] = ms[v] / tau * old - rhs_extra[3 * v + c];
            fixed[v] = mask[v] ? boundary_positions[3 * v + c] : 0.0;
            x[v] = mask[v] ? fixed[v] : old;
        }
        SparseMatrix Ac = A;
        apply_dirichlet(Ac, rhs, mask, fixed);
        merge(total, cg_solve(Ac, rhs, x, opts));
        for (int v = 0; v < n; ++v) out[3 * v + c] = mask[v] ? fixed[v] : x[v];
    }
    if (report) *report = total;
    require_converged(total, "mean curvature system");
    return out;
}

StepInfo mcf_deturck_step(SimState& state, double tau)
{
    state.config.validate();
    SurfaceMesh& mesh = state.mesh;
    const int n = mesh.num_vertices();
    StepInfo info;
    info.tau = tau > 0.0 ? tau : time_step(state);
    info.old_positions = flatten(mesh.vertices());
    info.velocity = Eigen::VectorXd::Zero(3 * n);

    const auto geometry = compute_geometry(mesh);
    const Eigen::VectorXd dz = deturck_term(state, geometry, &info.zeta_report);
    const Eigen::VectorXd m = lumped_mass(mesh, geometry);

    Eigen::VectorXd boundary = info.old_positions;
    for (int v = 0; v < n; ++v) {
        if (!mesh.is_boundary_vertex(v)) continue;
        boundary.segment<3>(3 * v) -= (info.tau / state.config.alpha / m[v]) * dz.segment<3>(3 * v);
    }
    const Eigen::VectorXd u = solve_mcf_interior(
        mesh, geometry, state.element_slots(), boundary, dz / state.config.alpha, info.tau, state.config.solver, &info.update_report);
    mesh.set_positions(unflatten(u));
    state.time += info.tau;
    ++state.step;
    check_result(mesh);
    return info;
}

DegenerationReport detect_degeneration(const SurfaceMesh& mesh, const Eigen::VectorXd& previous_positions, double sigma_ceiling)
{
    DegenerationReport rep;
    const bool have_old = previous_positions.size() == 3 * mesh.num_vertices();
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        const Vec3& a = mesh.vertex(tri[0]);
        const Vec3& b = mesh.vertex(tri[1]);
        const Vec3& c = mesh.vertex(tri[2]);
        const Vec3 cross = (b - a).cross(c - a);
        const double lab = (b - a).norm(), lbc = (c - b).norm(), lca = (a - c).norm();
        const double h = std::max({lab, lbc, lca});
        const double area = 0.5 * cross.norm();
        if (!(area >= 1e-12 * h * h)) {
            rep.degenerate = true;
            rep.reason = "collapsed triangle";
            rep.triangle = t;
            rep.sigma = std::numeric_limits<double>::infinity();
            return rep;
        }
        if (have_old) {
            const Vec3 oa = previous_positions.segment<3>(3 * tri[0]);
            const Vec3 ob = previous_positions.segment<3>(3 * tri[1]);
            const Vec3 oc = previous_positions.segment<3>(3 * tri[2]);
            if (!((ob - oa).cross(oc - oa).dot(cross) > 0.0)) {
                rep.degenerate = true;
                rep.reason = "inverted triangle";
                rep.triangle = t;
            }
        }
        const double q = h * 0.5 * (lab + lbc + lca) / area;
        if (q > rep.sigma) {
            rep.sigma = q;
            if (!rep.degenerate && q > sigma_ceiling) rep.triangle = t;
        }
    }
    if (!rep.degenerate && rep.sigma > sigma_ceiling) {
        rep.degenerate = true;
        rep.reason = "mesh quality above ceiling";
    }
    return rep;
}

}  // namespace esfem
