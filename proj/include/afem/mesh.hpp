#pragma once

#include "afem/common.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace afem {

/**
 * A triangle of the mesh. Vertices are stored counter-clockwise. The
 * refinement edge is the edge opposite vertex `refinement_edge`; local edge i
 * always joins vertices (i+1)%3 and (i+2)%3.
 */
struct Element
{
    std::array<int, 3> vertices{};
    int refinement_edge = 0;
    int generation = 0;
    int region = 0;
};

struct BoundaryEdge
{
    std::array<int, 2> vertices{};
    int marker = 1;
};

/**
 * Conforming triangulation with edge topology.
 *
 * Edge ids are assigned in lexicographic order of the sorted vertex pair, so
 * two meshes with identical vertex/element lists have identical numbering.
 */
class Mesh
{
public:
    Mesh() = default;

    /// Validates the input and assigns a compatible refinement-edge labeling.
    /// An empty `boundary` means every edge with a single owner is Dirichlet.
    static Mesh build(std::vector<Point> vertices,
                      std::vector<std::array<int, 3>> triangles,
                      std::vector<std::array<int, 2>> boundary = {},
                      std::vector<int> regions = {});

    /// Trusted construction from already-labeled elements (used by refinement
    /// and deserialization). Checks topology but keeps the given labels.
    static Mesh from_elements(std::vector<Point> vertices,
                              std::vector<Element> elements,
                              std::vector<BoundaryEdge> boundary);

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Element>& elements() const { return elements_; }
    const std::vector<BoundaryEdge>& boundary() const { return boundary_; }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_elements() const { return static_cast<int>(elements_.size()); }
    int num_edges() const { return static_cast<int>(edge_vertices_.size()); }

    const Point& vertex(int i) const { return vertices_[i]; }
    const Element& element(int t) const { return elements_[t]; }
    std::array<Point, 3> corners(int t) const;

    /// Global edge id of local edge `i` (opposite local vertex i) of element t.
    int element_edge(int t, int i) const { return element_edges_[t][i]; }
    int refinement_edge_id(int t) const { return element_edges_[t][elements_[t].refinement_edge]; }
    const std::array<int, 2>& edge_vertices(int e) const { return edge_vertices_[e]; }
    /// Owners of edge e; the second entry is -1 on the boundary.
    const std::array<int, 2>& edge_elements(int e) const { return edge_elements_[e]; }
    /// 0 for interior edges.
    int edge_marker(int e) const { return edge_markers_[e]; }
    bool is_boundary_edge(int e) const { return edge_elements_[e][1] < 0; }
    /// The element across local edge i of t, or -1.
    int neighbor(int t, int i) const;

    double area(int t) const;
    /// Longest edge length.
    double diameter(int t) const;
    double edge_length(int e) const;
    double total_area() const;

    /// t followed by every element sharing an edge with t, ascending.
    std::vector<int> element_patch(int t) const;

    /// True when every interior edge has exactly two owners and every
    /// boundary edge carries a marker.
    bool is_conforming() const;

    /// True when each refinement edge is either on the boundary or the
    /// refinement edge of the neighbor as well.
    bool has_compatible_labeling() const;

private:
    void rebuild_topology();

    std::vector<Point> vertices_;
    std::vector<Element> elements_;
    std::vector<BoundaryEdge> boundary_;

    std::vector<std::array<int, 2>> edge_vertices_;
    std::vector<std::array<int, 2>> edge_elements_;
    std::vector<int> edge_markers_;
    std::vector<std::array<int, 3>> element_edges_;
};

/// Output of one refinement call. Element ids refer to the old mesh except
/// for the keys of parent_map.
struct RefineResult
{
    Mesh mesh;
    /// Old elements that no longer exist, ascending.
    std::vector<int> refined_set;
    /// parent_map[new id] = id of the old element containing it.
    std::vector<int> parent_map;
};

/// Newest-vertex bisection with minimal conforming completion. Every marked
/// element is bisected `bisections` times.
RefineResult refine(const Mesh& mesh, std::span<const int> marked, int bisections = 1);

/// Bisects one element and whatever completion requires.
Mesh bisect(const Mesh& mesh, int element_id);

/// Bisects every element twice per round (each triangle becomes four).
Mesh refine_uniform(const Mesh& mesh, int rounds = 1);

/// max over elements of diameter / (2 * inradius).
double shape_regularity(const Mesh& mesh);

/// h_T / rho_T of a single element.
double element_shape_ratio(const Mesh& mesh, int t);

} // namespace afem
