#pragma once

#include "afem/mesh.hpp"

#include <map>
#include <string>
#include <vector>

namespace afem {

/// Mesh as JSON text: {"vertices": [[x, y], ...], "elements": [[i, j, k], ...],
/// "boundary": [[i, j], ...]}. The writer also stores "refinement_edges" and
/// "generations"; when present the reader keeps them instead of relabeling.
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, const std::string& path);

/// Legacy ASCII VTK unstructured grid with optional per-element fields.
void write_vtk(const Mesh& mesh, const std::string& path,
               const std::map<std::string, std::vector<double>>& cell_data = {});

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace afem
