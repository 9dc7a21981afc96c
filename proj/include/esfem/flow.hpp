#pragma once

#include <functional>
#include <optional>
#include <string>

#include "esfem/assembly.hpp"

namespace esfem {

struct DeTurckConfig {
    double alpha = 1.0;    // inverse diffusion constant of the reparametrisation
    double c_tau = 0.005;  // tau = c_tau * h_min^2
    double epsilon = 0.0;  // optional regularisation of the zeta system
    SolverOptions solver;

    /// Throws std::invalid_argument on alpha <= 0, c_tau <= 0 or epsilon < 0.
    void validate() const;
};

/// Mesh, reference map and clock of a running simulation.
struct SimState {
    SurfaceMesh mesh;
    ReferenceMap ymap;
    double time = 0.0;
    long step = 0;
    DeTurckConfig config;

    // Solver caches; reset automatically when the connectivity changes.
    ElementSlots slots;
    Eigen::VectorXd zeta_guess;

    const ElementSlots& element_slots();
};

using VelocitySampler = std::function<Vec3(const Vec3&, double)>;

/// Nodal samples of v at the current vertices and the given time (flat layout).
Eigen::VectorXd sample_velocity(const SurfaceMesh& mesh, const VelocitySampler& v, double t);

/// tau = c_tau * h_min^2 for the current mesh.
double time_step(const SimState& state);
double time_step(double c_tau, double h_min);

/// zeta from  M~ Z = R  (first component pinned to zero at boundary vertices).
NodalField solve_zeta(SimState& state, SolveReport* report = nullptr);
/// Same with the system matrix M~ + epsilon S (constraint rows kept).
NodalField solve_zeta_regularized(SimState& state, double epsilon, SolveReport* report = nullptr);

/// zeta~_j = P_M(Y_j) zeta_j.
NodalField project_zeta_tilde(const SimState& state, const NodalField& zeta);

struct StepInfo {
    double tau = 0.0;
    Eigen::VectorXd old_positions;  // flat layout
    Eigen::VectorXd velocity;       // sampled I_h v at the old positions
    SolveReport zeta_report;
    SolveReport update_report;      // implicit MCF solves only
};

/// One explicit step:  U = U_old + tau V - (tau/alpha) M^{-1} D Z~.
/// deturck=false skips the reparametrisation (naive advection).  tau <= 0
/// means "use time_step(state)".
StepInfo step_update(SimState& state, const Eigen::VectorXd& velocity, double tau = 0.0, bool deturck = true);
StepInfo step_update(SimState& state, const VelocitySampler& v, double tau = 0.0, bool deturck = true);

/// Mean curvature flow with the DeTurck term: implicit interior rows, explicit
/// tangential boundary rows.
StepInfo mcf_deturck_step(SimState& state, double tau = 0.0);

/// Implicit mean curvature step  (M/tau + S) U = (M/tau) U_old - rhs_extra
/// with Dirichlet boundary positions (flat layout, only boundary entries read).
Eigen::VectorXd solve_mcf_interior(
    const SurfaceMesh& mesh,
    std::span<const TriangleGeometry> geometry,
    const ElementSlots& slots,
    const Eigen::VectorXd& boundary_positions,
    const Eigen::VectorXd& rhs_extra,
    double tau,
    const SolverOptions& opts,
    SolveReport* report);

struct DegenerationReport {
    bool degenerate = false;
    std::string reason;
    int triangle = -1;
    double sigma = 0.0;
};

/// Flags triangles with area < 1e-12 h^2, sigma_max above the ceiling, or a
/// normal that turned by more than 90 degrees since previous_positions.
DegenerationReport detect_degeneration(const SurfaceMesh& mesh, const Eigen::VectorXd& previous_positions, double sigma_ceiling);

}  // namespace esfem
