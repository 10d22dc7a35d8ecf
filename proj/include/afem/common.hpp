#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace afem {

/// Raised for invalid input or a failed numerical stage.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

/// Gradients share the representation of points.
using Vec2 = Point;

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Mat2
{
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    static Mat2 scaled_identity(double s) { return {s, 0.0, s}; }

    Vec2 operator*(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }

    double min_eigenvalue() const
    {
        const double mean = 0.5 * (xx + yy);
        const double radius = std::hypot(0.5 * (xx - yy), xy);
        return mean - radius;
    }
};

/// Symmetric Hessian, same layout as Mat2.
using Hessian = Mat2;

/// trace(A H) for symmetric A and H.
inline double contract(const Mat2& a, const Hessian& h)
{
    return a.xx * h.xx + 2.0 * a.xy * h.xy + a.yy * h.yy;
}

} // namespace afem
