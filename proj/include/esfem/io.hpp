#pragma once

#include <map>
#include <string>
#include <vector>

#include "esfem/mesh.hpp"

namespace esfem {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NamedField {
    std::string name;
    const NodalField* field = nullptr;
};

/// Legacy ASCII unstructured grid with triangle cells, the per-triangle
/// quality as CELL_DATA "sigma" and the given nodal fields as POINT_DATA.
/// Numbers use 17 significant digits; the file is written to a temporary
/// name and renamed into place.
void write_mesh(const std::string& path, const SurfaceMesh& mesh, const std::vector<NamedField>& fields = {});

struct VtkData {
    std::vector<Vec3> points;
    std::vector<Tri> cells;
    std::map<std::string, Eigen::VectorXd> cell_data;
    std::map<std::string, NodalField> point_data;
};

/// Reads files in the subset produced by write_mesh.
VtkData read_mesh(const std::string& path);

struct SeriesRow {
    long step = 0;
    double time = 0.0;
    double sigma_max = 0.0;
    double h_min = 0.0;
    int triangles = 0;
    int vertices = 0;
    double total_area = 0.0;
    double scalar = 0.0;
};

/// One row per snapshot.  scalar_name empty means no problem column.
struct OutputSeries {
    std::string scalar_name;
    std::vector<SeriesRow> rows;
};

SeriesRow snapshot_row(const SurfaceMesh& mesh, long step, double time, double scalar = 0.0);

/// Header plus comma separated rows, 17 significant digits, atomic write.
void write_series(const std::string& path, const OutputSeries& series);
OutputSeries read_series(const std::string& path);

/// Writes `content` to path via a temporary file and rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace esfem
