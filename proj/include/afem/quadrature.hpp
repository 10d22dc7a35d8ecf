#pragma once

#include <array>
#include <vector>

namespace afem {

/// Point in barycentric coordinates with a weight normalized to sum to 1
/// over the triangle (multiply by the element area).
struct TriangleQuadPoint
{
    std::array<double, 3> bary;
    double weight;
};

/// Symmetric rule exact for polynomials of total degree <= `degree`
/// (supported up to 8).
const std::vector<TriangleQuadPoint>& triangle_rule(int degree);

/// Gauss-Legendre point on [0, 1]; weights sum to 1.
struct LineQuadPoint
{
    double s;
    double weight;
};

/// Gauss-Legendre rule exact for degree <= `degree` (supported up to 9).
const std::vector<LineQuadPoint>& line_rule(int degree);

} // namespace afem
