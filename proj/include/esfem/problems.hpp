#pragma once

#include <functional>

#include "esfem/flow.hpp"

namespace esfem {

// ---------------------------------------------------------------------------
// Prescribed velocities

enum class VelocityKind { Analytic, HarmonicExtension, HeleShaw, Zero };

struct VelocityField {
    VelocityKind kind = VelocityKind::Zero;
    VelocitySampler sampler;  // only used for Analytic

    Vec3 operator()(const Vec3& x, double t) const;
};

/// v = (0, -x2 (1 - x1^2)^2 + 0.2 x1, 0).
Vec3 velocity_example21(const Vec3& x, double t);

/// v = (1.5 x1 x3, 0.5 x2 x3, r^2 sin(4 phi) cos(pi t / 2)).
Vec3 velocity_example31(const Vec3& x, double t);

/// Star-shaped radial modulation a sin(k phi) r e_r, active for
/// t_start <= t < 0.  Replaces a deformation that is only given as a picture.
struct StarDeformation {
    double amplitude = 8.0;
    int k = 5;
    double t_start = -0.02;

    Vec3 operator()(const Vec3& x, double t) const;
};

/// Medium velocity of the advection-diffusion example,
/// 7 (1 - 16/81 |x|^2) (-sin 2 pi t, cos 2 pi t, 0).
Vec3 velocity_example5(const Vec3& x, double t);

// ---------------------------------------------------------------------------
// Initial surfaces

/// Unit disk from the stereographic projection of the half-sphere mesh.
InitialSurface disk_initial(int levels);

/// Disk points mapped through
/// X(r, phi) = (r (1 + sin(4 phi)/4) cos phi, r (1 + sin(4 phi)/4) sin phi,
///              r^2 sin(4 phi)/4 + 3 (1 - r^2)/4).
InitialSurface mcf_example32_initial(int levels);
Vec3 example32_parametrization(double r, double phi);

/// Cone of the given height over the unit circle: z = height (1 - r).
InitialSurface tent_initial(int levels, double height);

/// Cylinder grid for refinement level n: 2^(n+1) angular segments and an
/// axial count that keeps the annulus cells close to square.
SurfaceMesh annulus_cylinder(int levels, double r_outer, double r_inner);

/// Concentric annulus with every vertex at radius rho shifted by
/// w(rho) hole_centre, w = (r_outer - rho) / (r_outer - r_inner): the hole
/// moves to hole_centre and the outer circle stays in place.
InitialSurface eccentric_annulus(int levels, double r_outer, double r_inner, const Vec3& hole_centre);

// ---------------------------------------------------------------------------
// Harmonic extensions

/// Inner and outer loop of a two-loop planar mesh, by enclosed area.
struct LoopRoles {
    int outer = -1;
    int inner = -1;
};
LoopRoles identify_loops(const SurfaceMesh& mesh);

/// Component-wise discrete harmonic extension of the boundary entries of
/// `boundary_values` (flat 3n layout).  `guess` (flat, optional) seeds CG.
Eigen::VectorXd harmonic_extension(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    const ElementSlots& slots,
    const Eigen::VectorXd& boundary_values,
    const SolverOptions& opts,
    const Eigen::VectorXd* guess = nullptr,
    SolveReport* report = nullptr);
Eigen::VectorXd harmonic_extension(const SurfaceMesh& mesh, const Eigen::VectorXd& boundary_values, const SolverOptions& opts = {});

/// Rotating-hole velocity: 4 (-sin 2 pi t, cos 2 pi t) on the inner loop,
/// zero on the outer loop, harmonic inside.
Eigen::VectorXd example22_velocity(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    const ElementSlots& slots,
    double t,
    const SolverOptions& opts,
    const Eigen::VectorXd* guess = nullptr);
Vec3 example22_inner_velocity(double t);

// ---------------------------------------------------------------------------
// Mean curvature flow without reparametrisation

/// (M/tau + S) U = (M/tau) U_old in the interior, boundary vertices fixed.
StepInfo mcf_baseline_step(SimState& state, double tau = 0.0);

// ---------------------------------------------------------------------------
// Hele-Shaw flow

struct HeleShawConfig {
    Vec3 sink = Vec3::Zero();
    double sigma = 1e-3;

    void validate() const;
};

/// G_q(x) = log|x - q| / (2 pi) and its gradient.
double green_function(const Vec3& x, const Vec3& q);
Vec3 green_gradient(const Vec3& x, const Vec3& q);

/// Regular pressure part p~: on the boundary  p~_i = sigma (A_c X)_i . nu_i / m_i - G_q(x_i),
/// harmonic inside.
NodalField heleshaw_pressure(const SurfaceMesh& mesh, const HeleShawConfig& cfg, const SolverOptions& opts = {});

/// Boundary velocity  -(1/12) (d_nu p~ + d_nu G_q) nu  with d_nu p~ taken
/// edgewise from the adjacent triangles, extended harmonically (flat layout).
Eigen::VectorXd heleshaw_velocity(
    const SurfaceMesh& mesh,
    const NodalField& pressure,
    const HeleShawConfig& cfg,
    const SolverOptions& opts = {},
    const Eigen::VectorXd* guess = nullptr);

/// Sum over boundary vertices of m_i v_i . nu_i (curve-lumped flux).
double boundary_flux(const SurfaceMesh& mesh, const Eigen::VectorXd& velocity);

/// Unit disk centred at (0, -0.5).
InitialSurface heleshaw_initial(int levels);

// ---------------------------------------------------------------------------
// ALE advection-diffusion with a manufactured solution

double ale_exact(const Vec3& x, double t);
Vec3 ale_exact_gradient(const Vec3& x, double t);
double ale_forcing(const Vec3& x, double t, double diffusivity);

using ScalarSampler = std::function<double(const Vec3&, double)>;

struct AleConfig {
    double diffusivity = 2.0;
    ScalarSampler forcing;           // f(x, t); none when empty
    VelocitySampler flux_gradient;   // adds D grad q . nu on the boundary; none when empty
    SolverOptions solver;

    void validate() const;
};

/// Forcing and diffusivity of the manufactured solution.  The exact solution
/// does not satisfy the homogeneous Neumann condition on the inner circle;
/// exact_flux adds its boundary flux to the load so the discrete problem
/// approximates that solution.
AleConfig example5_ale_config(double diffusivity, bool exact_flux);

/// One step of the ALE scheme on the mesh that has just been moved.  The
/// mesh connectivity must be that of the previous step; old_positions,
/// material_velocity (I_h v at the old positions) and tau come from the
/// mesh step.  Updates p in place and returns the solver report.
SolveReport ale_step(
    const SurfaceMesh& mesh,
    const ElementSlots& slots,
    const Eigen::VectorXd& old_positions,
    const Eigen::VectorXd& material_velocity,
    double tau,
    double t_new,
    NodalField& p,
    const AleConfig& cfg);

/// Max over vertices of |p_h - p(x, t)|.
double ale_max_error(const SurfaceMesh& mesh, const NodalField& p, double t);

}  // namespace esfem
