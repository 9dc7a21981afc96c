#pragma once

#include <functional>
#include <string>
#include <vector>

#include "esfem/adapt.hpp"
#include "esfem/config.hpp"
#include "esfem/io.hpp"
#include "esfem/problems.hpp"

namespace esfem {

struct AdaptEvent {
    long step = 0;
    double time = 0.0;
    AdaptReport report;
};

/// Callbacks invoked by simulate().  Every member is optional.
struct RunObserver {
    std::function<void(const SimState&, const StepInfo&)> on_step;
    std::function<void(const SimState&, const AdaptEvent&)> on_adapt;
    // fields: the nodal fields written alongside the mesh
    std::function<void(const SimState&, const SeriesRow&, const std::vector<NamedField>&)> on_snapshot;
};

struct RunResult {
    bool completed = false;   // reached T
    bool degenerated = false;
    double failure_time = 0.0;
    std::string failure_reason;
    OutputSeries series;
    std::vector<AdaptEvent> adapt_events;
    SimState state;           // final state
    NodalField scalar_field;  // p for the ALE example, empty otherwise
};

/// Initial mesh and reference map of a configuration.
InitialSurface initial_surface(const RunConfig& config);

/// Runs the configured experiment in memory.  Degeneration ends the run
/// early with degenerated set; other errors propagate.
RunResult simulate(const RunConfig& config, const RunObserver& observer = {});

/// simulate() plus `<output>/mesh_<step>.vtk` snapshots and
/// `<output>/series.csv`.  Returns 0 on completion (a baseline run that
/// degenerates also completes), 2 when a DeTurck run degenerates.
int run(const RunConfig& config, std::string* message = nullptr);

}  // namespace esfem
