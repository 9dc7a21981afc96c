#include "esfem/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace esfem {

namespace {

constexpr double two_pi = 2.0 * M_PI;

void merge(SolveReport& into, const SolveReport& r)
{
    into.iterations += r.iterations;
    into.residual = std::max(into.residual, r.residual);
    into.converged = into.converged && r.converged;
}

std::vector<char> boundary_mask(const SurfaceMesh& mesh)
{
    std::vector<char> mask(mesh.num_vertices(), 0);
    for (int v = 0; v < mesh.num_vertices(); ++v) mask[v] = mesh.is_boundary_vertex(v) ? 1 : 0;
    return mask;
}

InitialSurface map_disk(int levels, const std::function<Vec3(const Vec3&)>& f)
{
    InitialSurface d = stereographic_disk(build_half_sphere(levels));
    std::vector<Vec3> x(d.mesh.vertices().begin(), d.mesh.vertices().end());
    for (auto& p : x) p = f(p);
    d.mesh.set_positions(std::move(x));
    return d;
}

}  // namespace

Vec3 VelocityField::operator()(const Vec3& x, double t) const
{
    if (kind == VelocityKind::Analytic) return sampler(x, t);
    if (kind == VelocityKind::Zero) return Vec3::Zero();
    throw std::logic_error("velocity field is not pointwise");
}

Vec3 velocity_example21(const Vec3& x, double)
{
    const double a = 1.0 - x.x() * x.x();
    return {0.0, -x.y() * a * a + 0.2 * x.x(), 0.0};
}

Vec3 velocity_example31(const Vec3& x, double t)
{
    const double r2 = x.x() * x.x() + x.y() * x.y();
    double phi = std::atan2(x.y(), x.x());
    if (phi < 0.0) phi += two_pi;
    return {1.5 * x.x() * x.z(), 0.5 * x.y() * x.z(), r2 * std::sin(4.0 * phi) * std::cos(M_PI * t / 2.0)};
}

Vec3 StarDeformation::operator()(const Vec3& x, double t) const
{
    if (t < t_start || t >= 0.0) return Vec3::Zero();
    const double phi = std::atan2(x.y(), x.x());
    // a sin(k phi) r e_r = a sin(k phi) (x1, x2)
    return amplitude * std::sin(k * phi) * Vec3(x.x(), x.y(), 0.0);
}

Vec3 velocity_example5(const Vec3& x, double t)
{
    const double s = 7.0 * (1.0 - 16.0 / 81.0 * (x.x() * x.x() + x.y() * x.y()));
    return {-s * std::sin(two_pi * t), s * std::cos(two_pi * t), 0.0};
}

InitialSurface disk_initial(int levels) { return stereographic_disk(build_half_sphere(levels)); }

Vec3 example32_parametrization(double r, double phi)
{
    const double w = r * (1.0 + 0.25 * std::sin(4.0 * phi));
    return {w * std::cos(phi), w * std::sin(phi), 0.25 * r * r * std::sin(4.0 * phi) + 0.75 * (1.0 - r * r)};
}

InitialSurface mcf_example32_initial(int levels)
{
    return map_disk(levels, [](const Vec3& p) {
        return example32_parametrization(std::hypot(p.x(), p.y()), std::atan2(p.y(), p.x()));
    });
}

InitialSurface tent_initial(int levels, double height)
{
    return map_disk(levels, [height](const Vec3& p) {
        return Vec3(p.x(), p.y(), height * (1.0 - std::hypot(p.x(), p.y())));
    });
}

SurfaceMesh annulus_cylinder(int levels, double r_outer, double r_inner)
{
    if (levels < 0) throw std::invalid_argument("refinement level must be non-negative");
    const int angular = 1 << (levels + 1);
    const int axial = std::max(1, static_cast<int>(std::lround(angular * std::log(r_outer / r_inner) / two_pi)));
    return build_cylinder(axial, angular);
}

InitialSurface eccentric_annulus(int levels, double r_outer, double r_inner, const Vec3& hole_centre)
{
    InitialSurface a = annulus_from_cylinder(annulus_cylinder(levels, r_outer, r_inner), r_outer, r_inner);
    std::vector<Vec3> x(a.mesh.vertices().begin(), a.mesh.vertices().end());
    for (auto& p : x) {
        const double w = (r_outer - p.norm()) / (r_outer - r_inner);
        p += std::clamp(w, 0.0, 1.0) * hole_centre;
    }
    a.mesh.set_positions(std::move(x));
    return a;
}

LoopRoles identify_loops(const SurfaceMesh& mesh)
{
    const auto& loops = mesh.boundary_loops();
    if (loops.size() != 2) throw MeshError("expected exactly two boundary loops");
    const double a0 = std::abs(loop_signed_area(mesh, 0));
    const double a1 = std::abs(loop_signed_area(mesh, 1));
    return a0 >= a1 ? LoopRoles{0, 1} : LoopRoles{1, 0};
}

Eigen::VectorXd harmonic_extension(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    const ElementSlots& slots,
    const Eigen::VectorXd& boundary_values,
    const SolverOptions& opts,
    const Eigen::VectorXd* guess,
    SolveReport* report)
{
    const int n = mesh.num_vertices();
    if (boundary_values.size() != 3 * n) throw MeshError("boundary data does not match the mesh");
    const bool warm = guess && guess->size() == 3 * n;
    const SparseMatrix S = assemble_stiffness_scalar(mesh, geometry, slots);
    const std::vector<char> mask = boundary_mask(mesh);

    Eigen::VectorXd out(3 * n);
    SolveReport total;
    total.converged = true;
    for (int c = 0; c < 3; ++c) {
        Eigen::VectorXd fixed(n), rhs = Eigen::VectorXd::Zero(n), x(n);
        for (int v = 0; v < n; ++v) {
            fixed[v] = mask[v] ? boundary_values[3 * v + c] : 0.0;
            x[v] = mask[v] ? fixed[v] : (warm ? (*guess)[3 * v + c] : 0.0);
        }
        if (fixed.isZero(0.0)) {
            // homogeneous data: the extension is zero
            for (int v = 0; v < n; ++v) out[3 * v + c] = 0.0;
            continue;
        }
        SparseMatrix A = S;
        apply_dirichlet(A, rhs, mask, fixed);
        merge(total, cg_solve(A, rhs, x, opts));
        for (int v = 0; v < n; ++v) out[3 * v + c] = mask[v] ? fixed[v] : x[v];
    }
    if (report) *report = total;
    require_converged(total, "harmonic extension");
    return out;
}

Eigen::VectorXd harmonic_extension(const SurfaceMesh& mesh, const Eigen::VectorXd& boundary_values, const SolverOptions& opts)
{
    const auto geometry = compute_geometry(mesh);
    return harmonic_extension(mesh, geometry, ElementSlots::build(mesh), boundary_values, opts);
}

Vec3 example22_inner_velocity(double t) { return 4.0 * Vec3(-std::sin(two_pi * t), std::cos(two_pi * t), 0.0); }

Eigen::VectorXd example22_velocity(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    const ElementSlots& slots,
    double t,
    const SolverOptions& opts,
    const Eigen::VectorXd* guess)
{
    const LoopRoles roles = identify_loops(mesh);
    Eigen::VectorXd data = Eigen::VectorXd::Zero(3 * mesh.num_vertices());
    const Vec3 vin = example22_inner_velocity(t);
    for (int v : mesh.boundary_loops()[roles.inner]) data.segment<3>(3 * v) = vin;
    return harmonic_extension(mesh, geometry, slots, data, opts, guess);
}

StepInfo mcf_baseline_step(SimState& state, double tau)
{
    SurfaceMesh& mesh = state.mesh;
    StepInfo info;
    info.tau = tau > 0.0 ? tau : time_step(state);
    info.old_positions = flatten(mesh.vertices());
    info.velocity = Eigen::VectorXd::Zero(info.old_positions.size());
    const auto geometry = compute_geometry(mesh);
    const Eigen::VectorXd u = solve_mcf_interior(
        mesh,
        geometry,
        state.element_slots(),
        info.old_positions,
        Eigen::VectorXd::Zero(info.old_positions.size()),
        info.tau,
        state.config.solver,
        &info.update_report);
    mesh.set_positions(unflatten(u));
    state.time += info.tau;
    ++state.step;
    return info;
}

void HeleShawConfig::validate() const
{
    if (!(sigma >= 0.0)) throw std::invalid_argument("surface tension must be non-negative");
}

double green_function(const Vec3& x, const Vec3& q)
{
    const double r = (x - q).norm();
    if (!(r > 0.0)) throw MeshError("vertex coincides with the sink");
    return std::log(r) / two_pi;
}

Vec3 green_gradient(const Vec3& x, const Vec3& q)
{
    const Vec3 d = x - q;
    const double r2 = d.squaredNorm();
    if (!(r2 > 0.0)) throw MeshError("vertex coincides with the sink");
    return d / (two_pi * r2);
}

NodalField heleshaw_pressure(const SurfaceMesh& mesh, const HeleShawConfig& cfg, const SolverOptions& opts)
{
    cfg.validate();
    const int n = mesh.num_vertices();
    const CurveOperators c = assemble_boundary_curve_operators(mesh);
    const int nb = static_cast<int>(c.vertices.size());
    Eigen::MatrixXd x(nb, 3);
    for (int k = 0; k < nb; ++k) x.row(k) = mesh.vertex(c.vertices[k]).transpose();
    Eigen::MatrixXd ax(nb, 3);
    for (int comp = 0; comp < 3; ++comp) ax.col(comp) = c.stiffness * Eigen::VectorXd(x.col(comp));

    Eigen::VectorXd data = Eigen::VectorXd::Zero(3 * n);
    for (int k = 0; k < nb; ++k) {
        const int v = c.vertices[k];
        const Vec3 nu = vertex_conormal(mesh, v);
        data[3 * v] = cfg.sigma * ax.row(k).dot(nu.transpose()) / c.mass[k] - green_function(mesh.vertex(v), cfg.sink);
    }
    const Eigen::VectorXd ext = harmonic_extension(mesh, data, opts);
    NodalField p(mesh, 1);
    for (int v = 0; v < n; ++v) p(v) = ext[3 * v];
    return p;
}

Eigen::VectorXd heleshaw_velocity(
    const SurfaceMesh& mesh,
    const NodalField& pressure,
    const HeleShawConfig& cfg,
    const SolverOptions& opts,
    const Eigen::VectorXd* guess)
{
    require_matching(pressure, mesh, "pressure");
    const int n = mesh.num_vertices();
    const auto geometry = compute_geometry(mesh);
    const Eigen::VectorXd m = lumped_mass(mesh, geometry);

    // sum over the boundary edges at each vertex of (l_e / 2) grad p~(T_e)
    std::vector<Vec3> edge_grad(n, Vec3::Zero());
    const auto edges = mesh.boundary_edges();
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        const int t = mesh.boundary_edge_triangle(e);
        const Tri& tri = mesh.triangle(t);
        Vec3 g = Vec3::Zero();
        for (int a = 0; a < 3; ++a) g += pressure(tri[a]) * geometry[t].basis_gradients[a];
        const double half = 0.5 * (mesh.vertex(edges[e][1]) - mesh.vertex(edges[e][0])).norm();
        edge_grad[edges[e][0]] += half * g;
        edge_grad[edges[e][1]] += half * g;
    }

    Eigen::VectorXd data = Eigen::VectorXd::Zero(3 * n);
    for (int v = 0; v < n; ++v) {
        if (!mesh.is_boundary_vertex(v)) continue;
        const Vec3 nu = vertex_conormal(mesh, v);
        const double dnu = edge_grad[v].dot(nu) / m[v] + green_gradient(mesh.vertex(v), cfg.sink).dot(nu);
        data.segment<3>(3 * v) = -(dnu / 12.0) * nu;
    }
    return harmonic_extension(mesh, geometry, ElementSlots::build(mesh), data, opts, guess);
}

double boundary_flux(const SurfaceMesh& mesh, const Eigen::VectorXd& velocity)
{
    if (velocity.size() != 3 * mesh.num_vertices()) throw MeshError("velocity does not match the mesh");
    const Eigen::VectorXd m = lumped_mass(mesh);
    double flux = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v)
        if (mesh.is_boundary_vertex(v)) flux += m[v] * velocity.segment<3>(3 * v).dot(vertex_conormal(mesh, v));
    return flux;
}

InitialSurface heleshaw_initial(int levels)
{
    return map_disk(levels, [](const Vec3& p) { return Vec3(p.x(), p.y() - 0.5, p.z()); });
}

double ale_exact(const Vec3& x, double t) { return std::cos(two_pi * t) * std::exp(-x.squaredNorm()); }

Vec3 ale_exact_gradient(const Vec3& x, double t) { return -2.0 * ale_exact(x, t) * x; }

double ale_forcing(const Vec3& x, double t, double diffusivity)
{
    const double s = std::sin(two_pi * t);
    const double c = std::cos(two_pi * t);
    const Vec3 v0(112.0 / 81.0 * s, -112.0 / 81.0 * c, 0.0);
    const Vec3 v = velocity_example5(x, t);
    const double r2 = x.squaredNorm();
    return (c * (2.0 * v0.dot(x) - 2.0 * v.dot(x) + 4.0 * diffusivity * (1.0 - r2)) - two_pi * s) * std::exp(-r2);
}

void AleConfig::validate() const
{
    if (!(diffusivity > 0.0)) throw std::invalid_argument("diffusivity must be positive");
}

AleConfig example5_ale_config(double diffusivity, bool exact_flux)
{
    AleConfig cfg;
    cfg.diffusivity = diffusivity;
    cfg.forcing = [diffusivity](const Vec3& x, double t) { return ale_forcing(x, t, diffusivity); };
    if (exact_flux) cfg.flux_gradient = ale_exact_gradient;
    return cfg;
}

SolveReport ale_step(
    const SurfaceMesh& mesh,
    const ElementSlots& slots,
    const Eigen::VectorXd& old_positions,
    const Eigen::VectorXd& material_velocity,
    double tau,
    double t_new,
    NodalField& p,
    const AleConfig& cfg)
{
    cfg.validate();
    const int n = mesh.num_vertices();
    require_matching(p, mesh, "concentration");
    if (old_positions.size() != 3 * n || material_velocity.size() != 3 * n) throw MeshError("ALE step data does not match the mesh");
    if (!slots.matches(mesh)) throw MeshError("element slots belong to another mesh");
    if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");

    const auto geometry = compute_geometry(mesh);
    const Eigen::VectorXd m_new = surface_lumped_mass(mesh, geometry);
    Eigen::VectorXd m_old = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        const Vec3 a = old_positions.segment<3>(3 * tri[0]);
        const Vec3 b = old_positions.segment<3>(3 * tri[1]);
        const Vec3 c = old_positions.segment<3>(3 * tri[2]);
        const double third = (b - a).cross(c - a).norm() / 6.0;
        for (int k = 0; k < 3; ++k) m_old[tri[k]] += third;
    }

    // v_DeT = (u^{m+1} - u^m) / tau - I_h v^m
    const Eigen::VectorXd vdet = (flatten(mesh.vertices()) - old_positions) / tau - material_velocity;

    SparseMatrix K = assemble_stiffness_scalar(mesh, geometry, slots);
    for (double& k : K.values()) k *= cfg.diffusivity;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Tri& tri = mesh.triangle(t);
        const double w = geometry[t].area / 3.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                const double val = w * vdet.segment<3>(3 * tri[b]).dot(geometry[t].basis_gradients[a]);
                K.values()[slots.slots[t][3 * a + b]] += val;
            }
    }
    for (int v = 0; v < n; ++v) K.add(v, v, m_new[v] / tau);

    Eigen::VectorXd rhs(n);
    for (int v = 0; v < n; ++v) rhs[v] = m_old[v] / tau * p(v);
    if (cfg.forcing) {
        for (int v = 0; v < n; ++v) rhs[v] += m_new[v] * cfg.forcing(mesh.vertex(v), t_new);
    }
    if (cfg.flux_gradient) {
        const auto edges = mesh.boundary_edges();
        for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
            const Vec3 nu = edge_conormal(mesh, e);
            const double half = 0.5 * (mesh.vertex(edges[e][1]) - mesh.vertex(edges[e][0])).norm();
            for (int v : edges[e]) rhs[v] += cfg.diffusivity * half * cfg.flux_gradient(mesh.vertex(v), t_new).dot(nu);
        }
    }

    Eigen::VectorXd x = p.values;
    SolverOptions opts = cfg.solver;
    opts.jacobi = true;
    const SolveReport r = gmres_solve(K, rhs, x, opts);
    require_converged(r, "ALE system");
    p.values = x;
    return r;
}

double ale_max_error(const SurfaceMesh& mesh, const NodalField& p, double t)
{
    require_matching(p, mesh, "concentration");
    double err = 0.0;
    for (int v = 0; v < mesh.num_vertices(); ++v) err = std::max(err, std::abs(p(v) - ale_exact(mesh.vertex(v), t)));
    return err;
}

}  // namespace esfem
