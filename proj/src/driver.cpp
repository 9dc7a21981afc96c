#include "esfem/driver.hpp"

#include <cmath>
#include <filesystem>

#include "esfem/geometry.hpp"

namespace esfem {

namespace {

constexpr double k_outer_radius = 2.25;
constexpr double k_inner_radius = 0.25;

enum class Mode { Prescribed, RotatingHole, HeleShaw, Mcf, Ale };

Mode mode_of(const std::string& example)
{
    if (example == "ex22") return Mode::RotatingHole;
    if (example == "ex4-heleshaw") return Mode::HeleShaw;
    if (example == "ex32-mcf") return Mode::Mcf;
    if (example == "ex5-ale") return Mode::Ale;
    return Mode::Prescribed;
}

VelocitySampler prescribed_velocity(const RunConfig& c)
{
    std::string v = c.velocity;
    if (c.example == "ex21") v = "ex21";
    if (c.example == "ex31") v = "ex31";
    if (v == "ex21") return velocity_example21;
    if (v == "ex31") return velocity_example31;
    if (v == "ex5") return velocity_example5;
    if (v == "star") {
        // the deformation field frozen in time
        const StarDeformation d{c.star_amplitude, c.star_k, -1.0};
        return [d](const Vec3& x, double) { return d(x, -0.5); };
    }
    return [](const Vec3&, double) { return Vec3::Zero().eval(); };
}

NodalField reference_field(const SimState& s)
{
    NodalField y(s.mesh, 3);
    y.values = flatten(s.ymap.points);
    return y;
}

}  // namespace

InitialSurface initial_surface(const RunConfig& config)
{
    const std::string& s = config.surface;
    if (s == "disk") return disk_initial(config.level);
    if (s == "ex32") return mcf_example32_initial(config.level);
    if (s == "tent") return tent_initial(config.level, config.tent_height);
    if (s == "heleshaw-disk") return heleshaw_initial(config.level);
    if (s == "annulus")
        return annulus_from_cylinder(annulus_cylinder(config.level, k_outer_radius, k_inner_radius), k_outer_radius, k_inner_radius);
    if (s == "eccentric-annulus")
        return eccentric_annulus(config.level, k_outer_radius, k_inner_radius, Vec3(2.0 / M_PI, 0.0, 0.0));
    throw ConfigError("surface: unknown kind '" + s + "'");
}

RunResult simulate(const RunConfig& config, const RunObserver& observer)
{
    config.validate();
    const Mode mode = mode_of(config.example);

    RunResult res;
    SimState& s = res.state;
    {
        InitialSurface init = initial_surface(config);
        s.mesh = std::move(init.mesh);
        s.ymap = std::move(init.ymap);
    }
    s.time = config.t_start;
    s.config.alpha = config.alpha;
    s.config.c_tau = config.c_tau;
    s.config.epsilon = config.epsilon;
    s.config.solver.rel_tol = config.rel_tol;

    AdaptConfig adapt;
    adapt.enabled = config.adapt;
    adapt.t_adapt = config.t_adapt;
    adapt.initial_triangles = s.mesh.num_triangles();
    adapt.geometric_consistency = config.geometric_consistency;

    const VelocitySampler prescribed = prescribed_velocity(config);
    const StarDeformation star{config.star_amplitude, config.star_k, config.t_start};
    const HeleShawConfig heleshaw{Vec3::Zero(), config.sigma};
    AleConfig ale = example5_ale_config(config.diffusivity, config.exact_flux);
    ale.solver.rel_tol = config.rel_tol;
    ale.solver.jacobi = true;

    NodalField& p = res.scalar_field;
    if (mode == Mode::Ale) {
        p = NodalField(s.mesh, 1);
        for (int v = 0; v < s.mesh.num_vertices(); ++v) p(v) = ale_exact(s.mesh.vertex(v), s.time);
        res.series.scalar_name = "p_max_error";
    } else if (mode == Mode::HeleShaw) {
        res.series.scalar_name = "boundary_flux";
    }

    Eigen::VectorXd velocity_guess;
    auto problem_scalar = [&]() -> double {
        if (mode == Mode::Ale) return ale_max_error(s.mesh, p, s.time);
        if (mode == Mode::HeleShaw) {
            const NodalField pressure = heleshaw_pressure(s.mesh, heleshaw, s.config.solver);
            return boundary_flux(s.mesh, heleshaw_velocity(s.mesh, pressure, heleshaw, s.config.solver));
        }
        return 0.0;
    };
    auto snapshot = [&]() {
        if (!res.series.rows.empty() && !(s.time > res.series.rows.back().time)) return;
        const SeriesRow row = snapshot_row(s.mesh, s.step, s.time, problem_scalar());
        res.series.rows.push_back(row);
        if (observer.on_snapshot) {
            const NodalField y = reference_field(s);
            std::vector<NamedField> fields{{"reference_point", &y}};
            if (mode == Mode::Ale) fields.push_back({"p", &p});
            observer.on_snapshot(s, row, fields);
        }
    };
    auto fail = [&](const std::string& reason) {
        res.degenerated = true;
        res.failure_time = s.time;
        res.failure_reason = reason;
    };

    const double t_end = config.t_end;
    const double snapshot_interval = t_end / config.snapshots;
    const double eps_time = 1e-12 * std::max(1.0, t_end - config.t_start);

    snapshot();
    while (s.time < t_end - eps_time) {
        const bool deformation_phase = s.time < -eps_time;
        const double target = deformation_phase ? 0.0 : t_end;
        double tau = time_step(s);
        // clip to land exactly on the phase switch / end time; absorb a
        // leftover sliver into this step
        const bool lands = s.time + tau * (1.0 + 1e-3) >= target;
        if (lands) tau = target - s.time;
        const double t_old = s.time;

        try {
            StepInfo info;
            if (deformation_phase) {
                info = step_update(s, VelocitySampler(star), tau, false);
            } else {
                switch (mode) {
                case Mode::Prescribed:
                    info = step_update(s, prescribed, tau, config.deturck);
                    break;
                case Mode::RotatingHole: {
                    const auto geometry = compute_geometry(s.mesh);
                    const Eigen::VectorXd v = example22_velocity(
                        s.mesh, geometry, s.element_slots(), s.time, s.config.solver, &velocity_guess);
                    velocity_guess = v;
                    info = step_update(s, v, tau, config.deturck);
                    break;
                }
                case Mode::HeleShaw: {
                    const NodalField pressure = heleshaw_pressure(s.mesh, heleshaw, s.config.solver);
                    const Eigen::VectorXd v = heleshaw_velocity(s.mesh, pressure, heleshaw, s.config.solver, &velocity_guess);
                    velocity_guess = v;
                    info = step_update(s, v, tau, config.deturck);
                    break;
                }
                case Mode::Mcf:
                    info = config.deturck ? mcf_deturck_step(s, tau) : mcf_baseline_step(s, tau);
                    break;
                case Mode::Ale:
                    info = step_update(s, VelocitySampler(velocity_example5), tau, config.deturck);
                    break;
                }
            }
            if (lands) s.time = target;

            const DegenerationReport deg = detect_degeneration(s.mesh, info.old_positions, config.sigma_ceiling);
            if (deg.degenerate) {
                fail(deg.reason + " (triangle " + std::to_string(deg.triangle) + ")");
                break;
            }
            if (mode == Mode::Ale && !deformation_phase)
                ale_step(s.mesh, s.element_slots(), info.old_positions, info.velocity, info.tau, s.time, p, ale);
            if (observer.on_step) observer.on_step(s, info);
        } catch (const DegenerateTriangleError& e) {
            fail(e.what());
            break;
        } catch (const DegenerateParametrizationError& e) {
            fail(e.what());
            break;
        }

        // the deformation phase only produces the bad initial mesh
        if (!deformation_phase && adapt.enabled && adapt_due(t_old, s.time, adapt.t_adapt)) {
            std::vector<NodalField*> fields;
            if (mode == Mode::Ale) fields.push_back(&p);
            AdaptEvent ev;
            ev.report = adapt_cycle(s, adapt, fields);
            ev.step = s.step;
            ev.time = s.time;
            if (ev.report.fired) {
                res.adapt_events.push_back(ev);
                if (observer.on_adapt) observer.on_adapt(s, ev);
            }
        }

        if (deformation_phase ? lands : adapt_due(t_old, s.time, snapshot_interval)) snapshot();
    }
    if (!res.degenerated) {
        res.completed = true;
        snapshot();
    }
    return res;
}

int run(const RunConfig& config, std::string* message)
{
    try {
        config.validate();
    } catch (const ConfigError& e) {
        if (message) *message = std::string("config error: ") + e.what();
        return 3;
    }
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);

    RunObserver obs;
    if (config.write_meshes) {
        obs.on_snapshot = [&dir](const SimState& s, const SeriesRow& row, const std::vector<NamedField>& fields) {
            write_mesh((dir / ("mesh_" + std::to_string(row.step) + ".vtk")).string(), s.mesh, fields);
        };
    }
    const RunResult res = simulate(config, obs);
    write_series((dir / "series.csv").string(), res.series);
    write_file_atomic((dir / "config.txt").string(), format_config(config));

    if (res.degenerated) {
        if (message)
            *message = "mesh degenerated at t = " + std::to_string(res.failure_time) + ": " + res.failure_reason;
        return config.deturck ? 2 : 0;
    }
    if (message) {
        const SeriesRow& last = res.series.rows.back();
        *message = "completed " + std::to_string(last.step) + " steps, sigma_max = " + std::to_string(last.sigma_max);
    }
    return 0;
}

}  // namespace esfem
