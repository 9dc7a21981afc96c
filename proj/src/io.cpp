#include "esfem/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "esfem/geometry.hpp"

namespace esfem {

namespace {

void put(std::string& out, double x)
{
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", x);
    out.append(buf, len);
}

class Tokens {
public:
    explicit Tokens(std::string text) : in_(std::move(text)) {}

    std::string word(const char* what)
    {
        std::string w;
        if (!(in_ >> w)) throw IoError(std::string("unexpected end of file, expected ") + what);
        return w;
    }
    void expect(const char* w)
    {
        const std::string got = word(w);
        if (got != w) throw IoError("expected '" + std::string(w) + "', got '" + got + "'");
    }
    double number()
    {
        const std::string w = word("a number");
        double x = 0.0;
        const auto [end, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
        if (ec != std::errc() || end != w.data() + w.size()) throw IoError("bad number '" + w + "'");
        return x;
    }
    int integer()
    {
        const std::string w = word("an integer");
        int x = 0;
        const auto [end, ec] = std::from_chars(w.data(), w.data() + w.size(), x);
        if (ec != std::errc() || end != w.data() + w.size()) throw IoError("bad integer '" + w + "'");
        return x;
    }
    void skip_line()
    {
        std::string rest;
        std::getline(in_, rest);
    }
    bool eof()
    {
        in_ >> std::ws;
        return in_.eof();
    }

private:
    std::istringstream in_;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Reads SCALARS/VECTORS blocks until the next section keyword or EOF.
std::string read_blocks(Tokens& tok, int count, std::map<std::string, NodalField>* point, std::map<std::string, Eigen::VectorXd>* cell)
{
    while (!tok.eof()) {
        const std::string kind = tok.word("a data block");
        if (kind == "POINT_DATA" || kind == "CELL_DATA") return kind;
        const std::string name = tok.word("a field name");
        tok.word("a data type");
        int k = 3;
        if (kind == "SCALARS") {
            // the component count is optional
            const std::string next = tok.word("LOOKUP_TABLE");
            if (next != "LOOKUP_TABLE") {
                k = std::stoi(next);
                tok.expect("LOOKUP_TABLE");
            } else {
                k = 1;
            }
            tok.word("a lookup table name");
        } else if (kind != "VECTORS") {
            throw IoError("unsupported data block '" + kind + "'");
        }
        Eigen::VectorXd values(static_cast<Eigen::Index>(count) * k);
        for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = tok.number();
        if (point) {
            NodalField f;
            f.components = k;
            f.values = std::move(values);
            (*point)[name] = std::move(f);
        } else {
            (*cell)[name] = std::move(values);
        }
    }
    return {};
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

void write_mesh(const std::string& path, const SurfaceMesh& mesh, const std::vector<NamedField>& fields)
{
    const int n = mesh.num_vertices();
    const int m = mesh.num_triangles();
    for (const auto& f : fields) {
        if (!f.field || f.field->size() != n || f.field->components < 1 || f.field->components > 4)
            throw IoError("field '" + f.name + "' does not match the mesh");
        if (f.name.empty() || f.name.find_first_of(" \t\n") != std::string::npos)
            throw IoError("field name '" + f.name + "' is not a single word");
    }

    std::string out;
    out.reserve(64 * static_cast<size_t>(n + m));
    out += "# vtk DataFile Version 3.0\nsurface mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out += "POINTS " + std::to_string(n) + " double\n";
    for (const Vec3& p : mesh.vertices()) {
        put(out, p.x());
        out += ' ';
        put(out, p.y());
        out += ' ';
        put(out, p.z());
        out += '\n';
    }
    out += "CELLS " + std::to_string(m) + " " + std::to_string(4 * m) + "\n";
    for (const Tri& t : mesh.triangles())
        out += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
    out += "CELL_TYPES " + std::to_string(m) + "\n";
    for (int t = 0; t < m; ++t) out += "5\n";

    out += "CELL_DATA " + std::to_string(m) + "\nSCALARS sigma double 1\nLOOKUP_TABLE default\n";
    for (int t = 0; t < m; ++t) {
        put(out, triangle_quality(mesh, t));
        out += '\n';
    }

    if (!fields.empty()) {
        out += "POINT_DATA " + std::to_string(n) + "\n";
        for (const auto& f : fields) {
            const int k = f.field->components;
            if (k == 3)
                out += "VECTORS " + f.name + " double\n";
            else
                out += "SCALARS " + f.name + " double " + std::to_string(k) + "\nLOOKUP_TABLE default\n";
            for (int v = 0; v < n; ++v) {
                for (int c = 0; c < k; ++c) {
                    if (c) out += ' ';
                    put(out, (*f.field)(v, c));
                }
                out += '\n';
            }
        }
    }
    write_file_atomic(path, out);
}

VtkData read_mesh(const std::string& path)
{
    Tokens tok(read_file(path));
    tok.skip_line();  // version line
    tok.skip_line();  // title
    tok.expect("ASCII");
    tok.expect("DATASET");
    tok.expect("UNSTRUCTURED_GRID");

    VtkData d;
    tok.expect("POINTS");
    const int n = tok.integer();
    tok.word("a data type");
    d.points.resize(n);
    for (auto& p : d.points)
        for (int c = 0; c < 3; ++c) p[c] = tok.number();

    tok.expect("CELLS");
    const int m = tok.integer();
    tok.integer();
    d.cells.resize(m);
    for (auto& t : d.cells) {
        if (tok.integer() != 3) throw IoError("only triangle cells are supported");
        for (int& v : t) {
            v = tok.integer();
            if (v < 0 || v >= n) throw IoError("cell index out of range");
        }
    }
    tok.expect("CELL_TYPES");
    if (tok.integer() != m) throw IoError("cell type count mismatch");
    for (int t = 0; t < m; ++t)
        if (tok.integer() != 5) throw IoError("only triangle cells are supported");

    std::string section = tok.eof() ? std::string() : tok.word("a data section");
    while (!section.empty()) {
        const int count = tok.integer();
        if (section == "CELL_DATA") {
            if (count != m) throw IoError("CELL_DATA count mismatch");
            section = read_blocks(tok, count, nullptr, &d.cell_data);
        } else if (section == "POINT_DATA") {
            if (count != n) throw IoError("POINT_DATA count mismatch");
            section = read_blocks(tok, count, &d.point_data, nullptr);
        } else {
            throw IoError("unsupported section '" + section + "'");
        }
    }
    return d;
}

SeriesRow snapshot_row(const SurfaceMesh& mesh, long step, double time, double scalar)
{
    SeriesRow r;
    r.step = step;
    r.time = time;
    const QualityReport q = sigma_max(mesh);
    r.sigma_max = q.sigma_max;
    r.h_min = q.h_min;
    r.triangles = mesh.num_triangles();
    r.vertices = mesh.num_vertices();
    r.total_area = mesh_metrics(mesh).total_area;
    r.scalar = scalar;
    return r;
}

void write_series(const std::string& path, const OutputSeries& series)
{
    std::string out = "step,time,sigma_max,h_min,triangles,vertices,total_area";
    if (!series.scalar_name.empty()) out += "," + series.scalar_name;
    out += '\n';
    for (const auto& r : series.rows) {
        out += std::to_string(r.step) + ',';
        put(out, r.time);
        out += ',';
        put(out, r.sigma_max);
        out += ',';
        put(out, r.h_min);
        out += ',' + std::to_string(r.triangles) + ',' + std::to_string(r.vertices) + ',';
        put(out, r.total_area);
        if (!series.scalar_name.empty()) {
            out += ',';
            put(out, r.scalar);
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

OutputSeries read_series(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty series file '" + path + "'");
    OutputSeries s;
    int columns = 7;
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string col;
        while (std::getline(h, col, ',')) header.push_back(col);
    }
    if (header.size() == 8) {
        s.scalar_name = header[7];
        columns = 8;
    } else if (header.size() != 7) {
        throw IoError("unexpected series header");
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            double x = 0.0;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
            if (ec != std::errc() || end != cell.data() + cell.size()) throw IoError("bad series entry '" + cell + "'");
            v.push_back(x);
        }
        if (static_cast<int>(v.size()) != columns) throw IoError("series row has the wrong column count");
        SeriesRow r;
        r.step = static_cast<long>(v[0]);
        r.time = v[1];
        r.sigma_max = v[2];
        r.h_min = v[3];
        r.triangles = static_cast<int>(v[4]);
        r.vertices = static_cast<int>(v[5]);
        r.total_area = v[6];
        if (columns == 8) r.scalar = v[7];
        s.rows.push_back(r);
    }
    return s;
}

}  // namespace esfem
