#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "esfem/config.hpp"
#include "esfem/geometry.hpp"
#include "esfem/io.hpp"
#include "esfem/problems.hpp"
#include "test_util.hpp"

using namespace esfem;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name)
{
    const fs::path d = fs::temp_directory_path() / ("esfem_test_" + std::string(name));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("config: example defaults and overrides")
{
    const RunConfig c = parse_config("example=ex5 alpha=0.1 D=2.0");
    CHECK(c.example == "ex5-ale");
    CHECK(c.alpha == 0.1);
    CHECK(c.diffusivity == 2.0);
    CHECK(c.c_tau == 0.001);
    CHECK(c.t_adapt == 1e-3);
    CHECK(c.surface == "annulus");

    const RunConfig e1 = example_defaults("ex1");
    CHECK(e1.c_tau == 0.005);
    CHECK(e1.alpha == 1.0);
    CHECK(e1.t_start == -0.02);
    CHECK(e1.t_end == 0.2);
    const RunConfig e21 = example_defaults("ex21");
    CHECK(e21.c_tau == 0.02);
    CHECK(e21.t_adapt == 0.01);
    const RunConfig e22 = example_defaults("ex22");
    CHECK(e22.c_tau == 0.001);
    CHECK(e22.alpha == 0.1);
    CHECK(example_defaults("ex31").t_end == 0.8);
    CHECK(example_defaults("ex32").c_tau == 0.01);
    const RunConfig e4 = example_defaults("ex4");
    CHECK(e4.sigma == 1e-3);
    CHECK(e4.t_adapt == 0.01);
    for (const auto& id : example_ids()) CHECK_NOTHROW(example_defaults(id).validate());
}

TEST_CASE("config: text format and errors")
{
    const RunConfig c = parse_config(
        "# comment\n"
        "level=3   c_tau=0.04 # trailing comment\n"
        "deturck=false\n"
        "example=ex21\n");
    CHECK(c.example == "ex21");
    CHECK(c.level == 3);
    CHECK(c.c_tau == 0.04);
    CHECK_FALSE(c.deturck);

    // overrides come last and may replace the example
    const RunConfig o = parse_config("example=ex21 level=3", {{"level", "2"}, {"example", "ex31"}});
    CHECK(o.example == "ex31");
    CHECK(o.level == 2);
    CHECK(o.c_tau == 0.02);

    auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const std::string missing = message("level=3");
    CHECK(missing.find("missing example") != std::string::npos);
    for (const auto& id : example_ids()) CHECK(missing.find(id) != std::string::npos);
    CHECK(message("example=ex9").find("unknown example") != std::string::npos);
    CHECK(message("example=ex21 alpha=0").find("alpha") != std::string::npos);
    CHECK(message("example=ex21 alpha=-1").find("alpha") != std::string::npos);
    CHECK(message("example=ex21 colour=red").find("unknown key") != std::string::npos);
    CHECK(message("example=ex21 level=three").find("invalid value") != std::string::npos);
    CHECK(message("example=ex21 c_tau=1e-3x").find("invalid value") != std::string::npos);
    CHECK(message("example=ex21 deturck=maybe").find("invalid value") != std::string::npos);
    CHECK(message("example=ex21 level=3 level=4").find("duplicate") != std::string::npos);
    CHECK(message("example=ex21 level").find("key=value") != std::string::npos);
    CHECK(message("example=ex22 surface=disk").find("annulus") != std::string::npos);
    CHECK(message("example=ex21 velocity=ex31").find("custom") != std::string::npos);
    CHECK(message("example=ex21 t_start=-0.1").find("t_start") != std::string::npos);
    CHECK(message("example=ex21 surface=cube").find("expected one of") != std::string::npos);
    CHECK(message("example=custom velocity=star surface=annulus") == "no error");
}

TEST_CASE("config: formatted text parses back to the same configuration")
{
    RunConfig c = parse_config("example=custom velocity=ex31 c_tau=0.0123456789012345 T=0.3 snapshots=7");
    const RunConfig back = parse_config(format_config(c));
    CHECK(format_config(back) == format_config(c));
    CHECK(back.c_tau == c.c_tau);
    CHECK(back.velocity == "ex31");

    const fs::path dir = scratch_dir("config");
    std::ofstream(dir / "run.cfg") << format_config(c);
    CHECK(parse_config_file((dir / "run.cfg").string(), {{"T", "0.5"}}).t_end == 0.5);
    CHECK_THROWS_AS(parse_config_file((dir / "absent.cfg").string()), ConfigError);
}

TEST_CASE("VTK: single triangle")
{
    const SurfaceMesh m = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const fs::path dir = scratch_dir("vtk1");
    const fs::path file = dir / "tri.vtk";
    write_mesh(file.string(), m);
    const std::string text = slurp(file);
    CHECK(text.find("POINTS 3 double") != std::string::npos);
    const Tri& t = m.triangle(0);
    CHECK(text.find("CELLS 1 4\n3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n") != std::string::npos);
    CHECK(text.find("CELL_TYPES 1\n5\n") != std::string::npos);
    CHECK(text.find("POINT_DATA") == std::string::npos);
    CHECK_FALSE(fs::exists(dir / "tri.vtk.tmp"));

    const VtkData d = read_mesh(file.string());
    REQUIRE(d.cell_data.count("sigma") == 1);
    CHECK(d.cell_data.at("sigma")[0] == triangle_quality(m, 0));
}

TEST_CASE("VTK: round trip is exact")
{
    InitialSurface s = mcf_example32_initial(3);
    // coordinates that need all 17 digits
    std::vector<Vec3> x(s.mesh.vertices().begin(), s.mesh.vertices().end());
    for (auto& p : x) p += Vec3(1.0 / 3.0, std::sqrt(2.0) * 1e-7, -1e5 / 7.0);
    s.mesh.set_positions(x);

    NodalField scalar(s.mesh, 1);
    NodalField y(s.mesh, 3);
    NodalField pair(s.mesh, 2);
    for (int v = 0; v < s.mesh.num_vertices(); ++v) {
        scalar(v) = std::exp(-0.1 * v) / 3.0;
        y.vec3(v) = s.ymap.points[v];
        pair(v, 0) = v;
        pair(v, 1) = -1e-300 * v;
    }
    const fs::path file = scratch_dir("vtk2") / "mesh.vtk";
    write_mesh(file.string(), s.mesh, {{"p", &scalar}, {"reference_point", &y}, {"pair", &pair}});
    const VtkData d = read_mesh(file.string());

    REQUIRE(d.points.size() == x.size());
    for (size_t i = 0; i < x.size(); ++i) CHECK(d.points[i] == x[i]);
    REQUIRE(static_cast<int>(d.cells.size()) == s.mesh.num_triangles());
    for (int t = 0; t < s.mesh.num_triangles(); ++t) CHECK(d.cells[t] == s.mesh.triangle(t));
    REQUIRE(d.point_data.size() == 3);
    CHECK(d.point_data.at("p").components == 1);
    CHECK(d.point_data.at("p").values == scalar.values);
    CHECK(d.point_data.at("reference_point").components == 3);
    CHECK(d.point_data.at("reference_point").values == y.values);
    CHECK(d.point_data.at("pair").components == 2);
    CHECK(d.point_data.at("pair").values == pair.values);
    const Eigen::VectorXd& sigma = d.cell_data.at("sigma");
    CHECK(sigma.size() == s.mesh.num_triangles());
    CHECK(sigma.maxCoeff() == sigma_max(s.mesh).sigma_max);

    // identical input, identical bytes
    const fs::path again = file.parent_path() / "again.vtk";
    write_mesh(again.string(), s.mesh, {{"p", &scalar}, {"reference_point", &y}, {"pair", &pair}});
    CHECK(slurp(file) == slurp(again));
}

TEST_CASE("VTK: errors")
{
    const SurfaceMesh m = SurfaceMesh::build({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
    const SurfaceMesh other = testing::grid_mesh(2, 2);
    const NodalField wrong(other, 1);
    const fs::path dir = scratch_dir("vtk3");
    CHECK_THROWS_AS(write_mesh((dir / "a.vtk").string(), m, {{"p", &wrong}}), IoError);
    const NodalField ok(m, 1);
    CHECK_THROWS_AS(write_mesh((dir / "b.vtk").string(), m, {{"two words", &ok}}), IoError);
    CHECK_THROWS_AS(read_mesh((dir / "missing.vtk").string()), IoError);
    std::ofstream(dir / "bad.vtk") << "# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\n";
    CHECK_THROWS_AS(read_mesh((dir / "bad.vtk").string()), IoError);
    // writing below a file fails cleanly
    std::ofstream(dir / "plain") << "x";
    CHECK_THROWS_AS(write_mesh((dir / "plain" / "c.vtk").string(), m), IoError);
}

TEST_CASE("series files")
{
    const fs::path dir = scratch_dir("series");
    OutputSeries empty;
    write_series((dir / "empty.csv").string(), empty);
    CHECK(slurp(dir / "empty.csv") == "step,time,sigma_max,h_min,triangles,vertices,total_area\n");
    CHECK(read_series((dir / "empty.csv").string()).rows.empty());

    const InitialSurface d = disk_initial(2);
    OutputSeries s;
    s.scalar_name = "p_max_error";
    s.rows.push_back(snapshot_row(d.mesh, 0, 0.0, 0.25));
    s.rows.push_back(snapshot_row(d.mesh, 17, 0.1, 1.0 / 3.0));
    write_series((dir / "two.csv").string(), s);
    const OutputSeries back = read_series((dir / "two.csv").string());
    CHECK(back.scalar_name == "p_max_error");
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].time < back.rows[1].time);
    CHECK(back.rows[1].step == 17);
    CHECK(back.rows[1].scalar == 1.0 / 3.0);
    CHECK(back.rows[0].sigma_max == sigma_max(d.mesh).sigma_max);
    CHECK(back.rows[0].h_min == sigma_max(d.mesh).h_min);
    CHECK(back.rows[0].triangles == d.mesh.num_triangles());
    CHECK(back.rows[0].vertices == d.mesh.num_vertices());
    CHECK(back.rows[0].total_area == mesh_metrics(d.mesh).total_area);
}
