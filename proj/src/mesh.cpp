#include "afem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace afem {

namespace {

std::uint64_t edge_key(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

std::array<int, 2> local_edge(const Element& el, int i)
{
    return {el.vertices[(i + 1) % 3], el.vertices[(i + 2) % 3]};
}

double signed_area(const Point& a, const Point& b, const Point& c)
{
    return 0.5 * cross(b - a, c - a);
}

// Strictly inside segment ab (not at the endpoints).
bool on_open_segment(const Point& p, const Point& a, const Point& b)
{
    const Point ab = b - a;
    const double len2 = dot(ab, ab);
    const double t = dot(p - a, ab) / len2;
    if (t <= 1e-12 || t >= 1.0 - 1e-12) return false;
    const double dist = std::abs(cross(ab, p - a)) / std::sqrt(len2);
    return dist <= 1e-12 * std::sqrt(len2);
}

int longest_local_edge(const std::vector<Point>& verts, const Element& el)
{
    int best = 0;
    double best_len = -1.0;
    for (int i = 0; i < 3; ++i) {
        const auto [a, b] = local_edge(el, i);
        const double len = norm(verts[b] - verts[a]);
        // Equal lengths keep the lowest local index.
        if (len > best_len * (1.0 + 1e-12)) {
            best = i;
            best_len = len;
        }
    }
    return best;
}

// Pairs each element with a neighbor across a shared refinement edge, or
// with one of its boundary edges. Returns false if some element stays
// unmatched.
class LabelingRepair
{
public:
    LabelingRepair(const Mesh& mesh, std::vector<Element>& elements)
        : mesh_(mesh), elements_(elements), partner_(elements.size(), kUnmatched)
    {
    }

    bool run()
    {
        const int nt = mesh_.num_elements();
        for (int t = 0; t < nt; ++t) {
            const int e = mesh_.element_edge(t, elements_[t].refinement_edge);
            if (mesh_.is_boundary_edge(e)) {
                partner_[t] = kBoundary;
                continue;
            }
            const int n = other_owner(e, t);
            if (partner_[n] == kUnmatched && elements_[n].refinement_edge == local_index(n, e)) {
                partner_[t] = n;
                partner_[n] = t;
            }
        }
        for (int t = 0; t < nt; ++t) {
            if (partner_[t] != kUnmatched) continue;
            std::vector<char> visited(nt, 0);
            visited[t] = 1;
            if (!augment(t, 16, visited)) return false;
        }
        return true;
    }

private:
    static constexpr int kUnmatched = -1;
    static constexpr int kBoundary = -2;

    int other_owner(int e, int t) const
    {
        const auto& owners = mesh_.edge_elements(e);
        return owners[0] == t ? owners[1] : owners[0];
    }

    int local_index(int t, int e) const
    {
        for (int i = 0; i < 3; ++i)
            if (mesh_.element_edge(t, i) == e) return i;
        return -1;
    }

    void pair(int t, int n, int e)
    {
        partner_[t] = n;
        partner_[n] = t;
        elements_[t].refinement_edge = local_index(t, e);
        elements_[n].refinement_edge = local_index(n, e);
    }

    bool augment(int t, int depth, std::vector<char>& visited)
    {
        // Prefer the longest boundary edge.
        int best = -1;
        double best_len = -1.0;
        for (int i = 0; i < 3; ++i) {
            const int e = mesh_.element_edge(t, i);
            if (mesh_.is_boundary_edge(e) && mesh_.edge_length(e) > best_len) {
                best = i;
                best_len = mesh_.edge_length(e);
            }
        }
        if (best >= 0) {
            partner_[t] = kBoundary;
            elements_[t].refinement_edge = best;
            return true;
        }
        for (int i = 0; i < 3; ++i) {
            const int e = mesh_.element_edge(t, i);
            const int n = other_owner(e, t);
            if (!visited[n] && (partner_[n] == kUnmatched || partner_[n] == kBoundary)) {
                pair(t, n, e);
                return true;
            }
        }
        if (depth == 0) return false;
        for (int i = 0; i < 3; ++i) {
            const int e = mesh_.element_edge(t, i);
            const int n = other_owner(e, t);
            if (visited[n]) continue;
            visited[n] = 1;
            const int m = partner_[n];
            const int old_ref_n = elements_[n].refinement_edge;
            const int old_ref_m = elements_[m].refinement_edge;
            visited[m] = 1;
            partner_[m] = kUnmatched;
            pair(t, n, e);
            if (augment(m, depth - 1, visited)) return true;
            partner_[t] = kUnmatched;
            partner_[n] = m;
            partner_[m] = n;
            elements_[n].refinement_edge = old_ref_n;
            elements_[m].refinement_edge = old_ref_m;
        }
        return false;
    }

    const Mesh& mesh_;
    std::vector<Element>& elements_;
    std::vector<int> partner_;
};

// Splits every triangle at its centroid. Each sub-triangle refines across
// its outer edge, which is then shared with the neighbor's sub-triangle.
std::pair<std::vector<Point>, std::vector<Element>> barycentric_split(const std::vector<Point>& vertices,
                                                                      const std::vector<Element>& elements)
{
    std::vector<Point> verts = vertices;
    std::vector<Element> out;
    out.reserve(3 * elements.size());
    for (const auto& el : elements) {
        const auto& v = el.vertices;
        const Point g = (1.0 / 3.0) * (verts[v[0]] + verts[v[1]] + verts[v[2]]);
        const int c = static_cast<int>(verts.size());
        verts.push_back(g);
        for (int i = 0; i < 3; ++i) {
            out.push_back(Element{{v[i], v[(i + 1) % 3], c}, 2, el.generation, el.region});
        }
    }
    return {std::move(verts), std::move(out)};
}

} // namespace

Mesh Mesh::build(std::vector<Point> vertices,
                 std::vector<std::array<int, 3>> triangles,
                 std::vector<std::array<int, 2>> boundary,
                 std::vector<int> regions)
{
    if (vertices.empty() || triangles.empty()) throw Error("mesh: empty vertex or element list");
    if (!regions.empty() && regions.size() != triangles.size())
        throw Error("mesh: region list length does not match element count");
    for (const auto& p : vertices)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error("mesh: non-finite vertex coordinate");

    const int nv = static_cast<int>(vertices.size());
    std::vector<Element> elements;
    elements.reserve(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int v : tri)
            if (v < 0 || v >= nv) throw Error("mesh: element " + std::to_string(t) + " has out-of-range vertex index");
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
            throw Error("mesh: element " + std::to_string(t) + " repeats a vertex");
        const double a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        if (!(a > 0.0)) {
            throw Error("mesh: element " + std::to_string(t) + (a < 0.0 ? " is inverted (clockwise)" : " is degenerate"));
        }
        elements.push_back(Element{tri, 0, 0, regions.empty() ? 0 : regions[t]});
    }

    if (boundary.empty()) {
        std::map<std::uint64_t, std::pair<std::array<int, 2>, int>> count;
        for (const auto& el : elements) {
            for (int i = 0; i < 3; ++i) {
                const auto ab = local_edge(el, i);
                auto& slot = count[edge_key(ab[0], ab[1])];
                slot.first = ab;
                ++slot.second;
            }
        }
        for (const auto& [key, entry] : count)
            if (entry.second == 1) boundary.push_back(entry.first);
    }
    std::vector<BoundaryEdge> bnd;
    bnd.reserve(boundary.size());
    for (const auto& ab : boundary) {
        if (ab[0] < 0 || ab[0] >= nv || ab[1] < 0 || ab[1] >= nv || ab[0] == ab[1])
            throw Error("mesh: invalid boundary edge");
        bnd.push_back(BoundaryEdge{ab, 1});
    }

    // Longest-edge labels first; the topology is needed by the repair pass.
    for (auto& el : elements) el.refinement_edge = longest_local_edge(vertices, el);
    Mesh mesh = from_elements(vertices, elements, bnd);

    for (const auto& b : mesh.boundary_) {
        for (int v = 0; v < nv; ++v) {
            if (v == b.vertices[0] || v == b.vertices[1]) continue;
            if (on_open_segment(vertices[v], vertices[b.vertices[0]], vertices[b.vertices[1]]))
                throw Error("mesh: hanging vertex " + std::to_string(v) + " on a boundary edge");
        }
    }

    if (mesh.has_compatible_labeling()) return mesh;

    std::vector<Element> relabeled = mesh.elements_;
    LabelingRepair repair(mesh, relabeled);
    if (repair.run()) {
        Mesh repaired = from_elements(mesh.vertices_, relabeled, mesh.boundary_);
        if (repaired.has_compatible_labeling()) return repaired;
    }

    auto [split_vertices, split_elements] = barycentric_split(mesh.vertices_, mesh.elements_);
    return from_elements(std::move(split_vertices), std::move(split_elements), mesh.boundary_);
}

Mesh Mesh::from_elements(std::vector<Point> vertices, std::vector<Element> elements, std::vector<BoundaryEdge> boundary)
{
    Mesh mesh;
    mesh.vertices_ = std::move(vertices);
    mesh.elements_ = std::move(elements);
    mesh.boundary_ = std::move(boundary);
    const int nv = mesh.num_vertices();
    for (std::size_t t = 0; t < mesh.elements_.size(); ++t) {
        const auto& el = mesh.elements_[t];
        for (int v : el.vertices)
            if (v < 0 || v >= nv) throw Error("mesh: element " + std::to_string(t) + " has out-of-range vertex index");
        if (el.refinement_edge < 0 || el.refinement_edge > 2)
            throw Error("mesh: element " + std::to_string(t) + " has invalid refinement edge");
        if (!(signed_area(mesh.vertices_[el.vertices[0]], mesh.vertices_[el.vertices[1]], mesh.vertices_[el.vertices[2]]) > 0.0))
            throw Error("mesh: element " + std::to_string(t) + " is inverted or degenerate");
    }
    mesh.rebuild_topology();
    return mesh;
}

void Mesh::rebuild_topology()
{
    struct Slot
    {
        std::uint64_t key;
        int element;
        int local;
    };
    const int nt = num_elements();
    std::vector<Slot> slots;
    slots.reserve(3 * static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
        for (int i = 0; i < 3; ++i) {
            const auto ab = local_edge(elements_[t], i);
            slots.push_back({edge_key(ab[0], ab[1]), t, i});
        }
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return a.key != b.key ? a.key < b.key : a.element < b.element;
    });

    edge_vertices_.clear();
    edge_elements_.clear();
    element_edges_.assign(nt, {-1, -1, -1});
    for (std::size_t i = 0; i < slots.size();) {
        std::size_t j = i;
        while (j < slots.size() && slots[j].key == slots[i].key) ++j;
        if (j - i > 2) {
            std::ostringstream msg;
            msg << "mesh: non-conforming input, edge (" << (slots[i].key >> 32) << ", " << (slots[i].key & 0xffffffffu)
                << ") has " << (j - i) << " owners";
            throw Error(msg.str());
        }
        const int id = static_cast<int>(edge_vertices_.size());
        edge_vertices_.push_back({static_cast<int>(slots[i].key >> 32), static_cast<int>(slots[i].key & 0xffffffffu)});
        edge_elements_.push_back({slots[i].element, j - i == 2 ? slots[i + 1].element : -1});
        for (std::size_t k = i; k < j; ++k) element_edges_[slots[k].element][slots[k].local] = id;
        i = j;
    }

    edge_markers_.assign(edge_vertices_.size(), 0);
    for (const auto& b : boundary_) {
        const std::uint64_t key = edge_key(b.vertices[0], b.vertices[1]);
        const auto it = std::lower_bound(slots.begin(), slots.end(), key,
                                         [](const Slot& s, std::uint64_t k) { return s.key < k; });
        if (it == slots.end() || it->key != key) throw Error("mesh: boundary edge is not an element edge");
        const int e = element_edges_[it->element][it->local];
        if (edge_elements_[e][1] >= 0) throw Error("mesh: boundary edge is shared by two elements");
        edge_markers_[e] = b.marker;
    }
    for (int e = 0; e < num_edges(); ++e) {
        if (edge_elements_[e][1] < 0 && edge_markers_[e] == 0) {
            std::ostringstream msg;
            msg << "mesh: open boundary or hanging vertex, edge (" << edge_vertices_[e][0] << ", "
                << edge_vertices_[e][1] << ") has one owner but is not a boundary edge";
            throw Error(msg.str());
        }
    }
}

std::array<Point, 3> Mesh::corners(int t) const
{
    const auto& v = elements_[t].vertices;
    return {vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]};
}

int Mesh::neighbor(int t, int i) const
{
    const auto& owners = edge_elements_[element_edges_[t][i]];
    return owners[0] == t ? owners[1] : owners[0];
}

double Mesh::area(int t) const
{
    const auto c = corners(t);
    return signed_area(c[0], c[1], c[2]);
}

double Mesh::diameter(int t) const
{
    const auto c = corners(t);
    return std::max({norm(c[1] - c[0]), norm(c[2] - c[1]), norm(c[0] - c[2])});
}

double Mesh::edge_length(int e) const
{
    return norm(vertices_[edge_vertices_[e][1]] - vertices_[edge_vertices_[e][0]]);
}

double Mesh::total_area() const
{
    double sum = 0.0;
    for (int t = 0; t < num_elements(); ++t) sum += area(t);
    return sum;
}

std::vector<int> Mesh::element_patch(int t) const
{
    if (t < 0 || t >= num_elements()) throw Error("mesh: element id out of range");
    std::vector<int> patch{t};
    for (int i = 0; i < 3; ++i) {
        const int n = neighbor(t, i);
        if (n >= 0) patch.push_back(n);
    }
    std::sort(patch.begin(), patch.end());
    return patch;
}

bool Mesh::is_conforming() const
{
    // Independent of the cached topology: recount owners per vertex pair.
    std::unordered_map<std::uint64_t, int> owners;
    owners.reserve(3 * elements_.size());
    for (const auto& el : elements_)
        for (int i = 0; i < 3; ++i) {
            const auto ab = local_edge(el, i);
            ++owners[edge_key(ab[0], ab[1])];
        }
    std::unordered_map<std::uint64_t, int> declared;
    for (const auto& b : boundary_) ++declared[edge_key(b.vertices[0], b.vertices[1])];
    for (const auto& [key, count] : owners) {
        if (count > 2) return false;
        const bool is_declared = declared.count(key) > 0;
        if (count == 1 && !is_declared) return false;
        if (count == 2 && is_declared) return false;
    }
    for (const auto& [key, count] : declared)
        if (count != 1 || owners.count(key) == 0) return false;
    return true;
}

bool Mesh::has_compatible_labeling() const
{
    for (int t = 0; t < num_elements(); ++t) {
        const int e = refinement_edge_id(t);
        if (is_boundary_edge(e)) continue;
        const auto& owners = edge_elements_[e];
        const int n = owners[0] == t ? owners[1] : owners[0];
        if (refinement_edge_id(n) != e) return false;
    }
    return true;
}

namespace {

struct RefineOnce
{
    Mesh mesh;
    std::vector<int> parent;  // new element -> element of the input mesh
};

RefineOnce bisect_set(const Mesh& mesh, const std::vector<char>& selected)
{
    const int nt = mesh.num_elements();
    const int ne = mesh.num_edges();

    std::vector<char> marked(ne, 0);
    std::vector<int> work;
    for (int t = 0; t < nt; ++t) {
        if (!selected[t]) continue;
        const int e = mesh.refinement_edge_id(t);
        if (!marked[e]) {
            marked[e] = 1;
            work.push_back(e);
        }
    }
    // Closure: an element with any marked edge must bisect its refinement
    // edge first.
    while (!work.empty()) {
        const int e = work.back();
        work.pop_back();
        for (int t : mesh.edge_elements(e)) {
            if (t < 0) continue;
            const int r = mesh.refinement_edge_id(t);
            if (!marked[r]) {
                marked[r] = 1;
                work.push_back(r);
            }
        }
    }

    std::vector<Point> vertices = mesh.vertices();
    std::vector<int> midpoint(ne, -1);
    for (int e = 0; e < ne; ++e) {
        if (!marked[e]) continue;
        const auto& ab = mesh.edge_vertices(e);
        midpoint[e] = static_cast<int>(vertices.size());
        vertices.push_back(0.5 * (vertices[ab[0]] + vertices[ab[1]]));
    }

    std::vector<Element> elements;
    std::vector<int> parent;
    elements.reserve(nt + 4 * static_cast<std::size_t>(std::count(marked.begin(), marked.end(), 1)));
    auto emit = [&](const Element& el, int p) {
        elements.push_back(el);
        parent.push_back(p);
    };
    // Children of (a_r, a_p, a_q) split at mid: (a_r, a_p, mid) and (a_r, mid, a_q).
    auto halves = [](const Element& el, int mid) {
        const int r = el.refinement_edge;
        const int p = (r + 1) % 3;
        const int q = (r + 2) % 3;
        const auto& v = el.vertices;
        Element first{{v[r], v[p], mid}, 2, el.generation + 1, el.region};
        Element second{{v[r], mid, v[q]}, 1, el.generation + 1, el.region};
        return std::pair{first, second};
    };

    for (int t = 0; t < nt; ++t) {
        const Element& el = mesh.element(t);
        const int r = el.refinement_edge;
        const int mid = midpoint[mesh.element_edge(t, r)];
        if (mid < 0) {
            emit(el, t);
            continue;
        }
        const int p = (r + 1) % 3;
        const int q = (r + 2) % 3;
        auto [first, second] = halves(el, mid);
        // The first child's refinement edge is the parent's edge q, the
        // second child's is edge p.
        const int mid_q = midpoint[mesh.element_edge(t, q)];
        const int mid_p = midpoint[mesh.element_edge(t, p)];
        if (mid_q >= 0) {
            auto [a, b] = halves(first, mid_q);
            emit(a, t);
            emit(b, t);
        } else {
            emit(first, t);
        }
        if (mid_p >= 0) {
            auto [a, b] = halves(second, mid_p);
            emit(a, t);
            emit(b, t);
        } else {
            emit(second, t);
        }
    }

    std::vector<BoundaryEdge> boundary;
    boundary.reserve(mesh.boundary().size() * 2);
    for (int e = 0; e < ne; ++e) {
        const int marker = mesh.edge_marker(e);
        if (marker == 0) continue;
        const auto& ab = mesh.edge_vertices(e);
        if (midpoint[e] >= 0) {
            boundary.push_back({{ab[0], midpoint[e]}, marker});
            boundary.push_back({{midpoint[e], ab[1]}, marker});
        } else {
            boundary.push_back({ab, marker});
        }
    }
    return {Mesh::from_elements(std::move(vertices), std::move(elements), std::move(boundary)), std::move(parent)};
}

} // namespace

RefineResult refine(const Mesh& mesh, std::span<const int> marked, int bisections)
{
    if (bisections < 1) throw Error("refine: bisection count must be at least 1");
    const int nt = mesh.num_elements();
    std::vector<int> target(nt, -1);
    for (int t : marked) {
        if (t < 0 || t >= nt) throw Error("refine: marked element id " + std::to_string(t) + " out of range");
        target[t] = mesh.element(t).generation + bisections;
    }

    RefineResult result;
    result.parent_map.resize(nt);
    std::iota(result.parent_map.begin(), result.parent_map.end(), 0);
    if (marked.empty()) {
        result.mesh = mesh;
        return result;
    }

    Mesh current = mesh;
    while (true) {
        const int nc = current.num_elements();
        std::vector<char> selected(nc, 0);
        bool any = false;
        for (int c = 0; c < nc; ++c) {
            const int goal = target[result.parent_map[c]];
            if (goal >= 0 && current.element(c).generation < goal) {
                selected[c] = 1;
                any = true;
            }
        }
        if (!any) break;
        RefineOnce step = bisect_set(current, selected);
        std::vector<int> composed(step.parent.size());
        for (std::size_t c = 0; c < step.parent.size(); ++c) composed[c] = result.parent_map[step.parent[c]];
        result.parent_map = std::move(composed);
        current = std::move(step.mesh);
    }

    std::vector<int> children(nt, 0);
    for (int p : result.parent_map) ++children[p];
    for (int t = 0; t < nt; ++t)
        if (children[t] > 1) result.refined_set.push_back(t);
    result.mesh = std::move(current);
    return result;
}

Mesh bisect(const Mesh& mesh, int element_id)
{
    const int ids[] = {element_id};
    return refine(mesh, ids, 1).mesh;
}

Mesh refine_uniform(const Mesh& mesh, int rounds)
{
    Mesh current = mesh;
    for (int r = 0; r < rounds; ++r) {
        std::vector<int> all(current.num_elements());
        std::iota(all.begin(), all.end(), 0);
        current = refine(current, all, 2).mesh;
    }
    return current;
}

double element_shape_ratio(const Mesh& mesh, int t)
{
    const auto c = mesh.corners(t);
    const double a = norm(c[1] - c[0]);
    const double b = norm(c[2] - c[1]);
    const double d = norm(c[0] - c[2]);
    const double area = mesh.area(t);
    if (!(area > 0.0)) throw Error("shape_regularity: degenerate element " + std::to_string(t));
    // rho = 2 * inradius = 4 * area / perimeter
    const double rho = 4.0 * area / (a + b + d);
    return std::max({a, b, d}) / rho;
}

double shape_regularity(const Mesh& mesh)
{
    double worst = 0.0;
    for (int t = 0; t < mesh.num_elements(); ++t) worst = std::max(worst, element_shape_ratio(mesh, t));
    return worst;
}

} // namespace afem
