#include "afem/io.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace afem {

using nlohmann::json;

std::string read_text_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << text;
    if (!os) throw Error("write failed: " + path);
}

std::string mesh_to_json(const Mesh& mesh)
{
    json j;
    json& verts = j["vertices"] = json::array();
    for (const Point& p : mesh.vertices()) verts.push_back({p.x, p.y});
    json& elems = j["elements"] = json::array();
    json& labels = j["refinement_edges"] = json::array();
    json& gens = j["generations"] = json::array();
    json& regions = j["regions"] = json::array();
    for (const Element& e : mesh.elements()) {
        elems.push_back({e.vertices[0], e.vertices[1], e.vertices[2]});
        labels.push_back(e.refinement_edge);
        gens.push_back(e.generation);
        regions.push_back(e.region);
    }
    json& bnd = j["boundary"] = json::array();
    for (const BoundaryEdge& b : mesh.boundary()) bnd.push_back({b.vertices[0], b.vertices[1]});
    return j.dump();
}

Mesh mesh_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("mesh json: ") + e.what());
    }
    try {
        std::vector<Point> verts;
        for (const auto& v : j.at("vertices")) {
            if (v.size() != 2) throw Error("mesh json: vertices must be [x, y] pairs");
            verts.push_back({v[0].get<double>(), v[1].get<double>()});
        }
        std::vector<std::array<int, 3>> tris;
        for (const auto& t : j.at("elements")) {
            if (t.size() != 3) throw Error("mesh json: elements must be vertex triples");
            tris.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
        }
        std::vector<std::array<int, 2>> boundary;
        if (j.contains("boundary"))
            for (const auto& b : j.at("boundary")) {
                if (b.size() != 2) throw Error("mesh json: boundary entries must be vertex pairs");
                boundary.push_back({b[0].get<int>(), b[1].get<int>()});
            }
        std::vector<int> regions;
        if (j.contains("regions")) regions = j.at("regions").get<std::vector<int>>();

        if (!j.contains("refinement_edges")) return Mesh::build(verts, tris, boundary, regions);

        const auto labels = j.at("refinement_edges").get<std::vector<int>>();
        std::vector<int> gens(tris.size(), 0);
        if (j.contains("generations")) gens = j.at("generations").get<std::vector<int>>();
        if (labels.size() != tris.size() || gens.size() != tris.size() ||
            (!regions.empty() && regions.size() != tris.size()))
            throw Error("mesh json: per-element arrays differ in length");
        std::vector<Element> elements(tris.size());
        for (std::size_t t = 0; t < tris.size(); ++t) {
            if (labels[t] < 0 || labels[t] > 2) throw Error("mesh json: refinement edge must be 0, 1 or 2");
            elements[t] = {tris[t], labels[t], gens[t], regions.empty() ? 0 : regions[t]};
        }
        std::vector<BoundaryEdge> bnd;
        for (const auto& b : boundary) bnd.push_back({b, 1});
        return Mesh::from_elements(std::move(verts), std::move(elements), std::move(bnd));
    } catch (const json::exception& e) {
        throw Error(std::string("mesh json: ") + e.what());
    }
}

Mesh read_mesh(const std::string& path) { return mesh_from_json(read_text_file(path)); }

void write_mesh(const Mesh& mesh, const std::string& path) { write_text_file(path, mesh_to_json(mesh)); }

void write_vtk(const Mesh& mesh, const std::string& path, const std::map<std::string, std::vector<double>>& cell_data)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "# vtk DataFile Version 3.0\nafem mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Point& p : mesh.vertices()) os << p.x << ' ' << p.y << " 0\n";
    os << "CELLS " << mesh.num_elements() << ' ' << 4 * mesh.num_elements() << '\n';
    for (const Element& e : mesh.elements())
        os << "3 " << e.vertices[0] << ' ' << e.vertices[1] << ' ' << e.vertices[2] << '\n';
    os << "CELL_TYPES " << mesh.num_elements() << '\n';
    for (int t = 0; t < mesh.num_elements(); ++t) os << "5\n";
    if (!cell_data.empty()) {
        os << "CELL_DATA " << mesh.num_elements() << '\n';
        for (const auto& [name, values] : cell_data) {
            if (static_cast<int>(values.size()) != mesh.num_elements())
                throw Error("write_vtk: field " + name + " has the wrong length");
            os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (double v : values) os << v << '\n';
        }
    }
    write_text_file(path, os.str());
}

} // namespace afem
