#include <fstream>
#include <sstream>
#include <string>

#include "miwt/error.hpp"
#include "miwt/io.hpp"
#include "miwt/mesh.hpp"

namespace miwt {

namespace {

// Non-empty lines with '#' comments removed, split on whitespace.
class OffLines {
public:
    OffLines(std::istream& in, const std::string& source) : in_(in), source_(source) {}

    bool next(std::vector<std::string>& tokens) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream ss(line);
            tokens.clear();
            for (std::string t; ss >> t;) tokens.push_back(std::move(t));
            if (!tokens.empty()) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw InputError(source_ + ":" + std::to_string(line_no_) + ": " + message);
    }

    std::string where() const { return source_ + ":" + std::to_string(line_no_); }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

}  // namespace

TriangulatedManifold read_off(std::istream& in, const std::string& source_name) {
    OffLines lines(in, source_name);
    std::vector<std::string> tok;
    if (!lines.next(tok) || tok[0] != "OFF") lines.fail("missing OFF header");
    tok.erase(tok.begin());
    if (tok.empty() && !lines.next(tok)) lines.fail("missing vertex/face counts");
    if (tok.size() < 2) lines.fail("expected vertex and face counts");
    const std::size_t nv = parse_index(tok[0], lines.where());
    const std::size_t nf = parse_index(tok[1], lines.where());

    std::vector<Point3> positions(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        if (!lines.next(tok)) lines.fail("unexpected end of file in vertex list");
        if (tok.size() < 3) lines.fail("vertex line needs 3 coordinates");
        for (int k = 0; k < 3; ++k) positions[v][k] = parse_double(tok[k], lines.where());
    }
    std::vector<Triangle> triangles(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        if (!lines.next(tok)) lines.fail("unexpected end of file in face list");
        const std::size_t k = parse_index(tok[0], lines.where());
        if (k != 3) lines.fail("face " + std::to_string(f) + " has " + std::to_string(k) + " vertices; only triangles are supported");
        if (tok.size() < 4) lines.fail("face line needs 3 vertex indices");
        for (int c = 0; c < 3; ++c) {
            const std::size_t idx = parse_index(tok[c + 1], lines.where());
            if (idx >= nv) lines.fail("face " + std::to_string(f) + " references vertex " + std::to_string(idx) + " out of range");
            triangles[f][c] = idx;
        }
        if (triangles[f][0] == triangles[f][1] || triangles[f][1] == triangles[f][2] ||
            triangles[f][0] == triangles[f][2]) {
            lines.fail("face " + std::to_string(f) + " repeats a vertex");
        }
    }
    return TriangulatedManifold(nv, std::move(triangles), std::move(positions));
}

TriangulatedManifold load_off(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open mesh file " + path.string());
    return read_off(in, path.string());
}

void write_off(std::ostream& out, const TriangulatedManifold& mesh) {
    if (!mesh.has_positions()) throw std::invalid_argument("OFF output needs vertex positions");
    out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.triangle_count() << ' ' << mesh.edge_count() << '\n';
    for (const auto& p : mesh.positions()) {
        out << format_double(p[0]) << ' ' << format_double(p[1]) << ' ' << format_double(p[2]) << '\n';
    }
    for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void load_edge_lengths(TriangulatedManifold& mesh, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge-length file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_csv_line(line);
        if (fields.size() == 1 && fields[0].empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (fields.size() != 3) throw InputError(where + ": expected i,j,length");
        if (line_no == 1 && !fields[0].empty() && !std::isdigit(static_cast<unsigned char>(fields[0][0]))) continue;
        const std::size_t i = parse_index(fields[0], where), j = parse_index(fields[1], where);
        const double len = parse_double(fields[2], where);
        if (!mesh.find_edge(i, j)) throw InputError(where + ": (" + fields[0] + ", " + fields[1] + ") is not a mesh edge");
        if (!(len >= 0.0) || !std::isfinite(len)) throw InputError(where + ": invalid edge length");
        mesh.set_edge_length(i, j, len);
    }
}

}  // namespace miwt
