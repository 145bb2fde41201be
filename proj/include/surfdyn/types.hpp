#ifndef SURFDYN_TYPES_HPP
#define SURFDYN_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/LU>
#include <stdexcept>
#include <string>
#include <cmath>

namespace surfdyn {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/** A point on a surface, expressed in one of the surface's charts.
    Chart 0 is the base chart; charts 1..n are cap charts on capped surfaces. */
struct PointCoord {
    int chart = 0;
    Vec2 xy = Vec2::Zero();

    PointCoord() = default;
    PointCoord(int chart_, double a, double b) : chart(chart_), xy(a, b) {}
    PointCoord(int chart_, const Vec2& v) : chart(chart_), xy(v) {}
};

/** Thrown when a mathematical precondition fails (invalid areas, non-exact
    forms, unsupported extensions, ...). Maps to CLI exit code 2. */
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

/** Thrown on numerical non-convergence (integrator, quadrature, Newton).
    Maps to CLI exit code 3. */
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// wrap to [0, 1)
inline double wrap_unit(double t)
{
    double w = t - std::floor(t);
    if (w >= 1.0)  // guard against floor roundoff at negative epsilons
        w -= 1.0;
    return w;
}

/// shortest signed representative of t modulo 1, in (-1/2, 1/2]
inline double wrap_half(double t)
{
    double w = t - std::round(t);
    if (w <= -0.5)
        w += 1.0;
    return w;
}

/** Quintic smoothstep: 0 for x<=0, 1 for x>=1, C^2 across the junctions.
    Used for partitions of unity and boundary-flattened profiles. */
inline double smoothstep(double x)
{
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

/// derivative of smoothstep
inline double smoothstep_deriv(double x)
{
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

inline Mat2 rotation_matrix(double angle)
{
    double c = std::cos(angle), s = std::sin(angle);
    Mat2 m;
    m << c, -s, s, c;
    return m;
}

} // namespace surfdyn

#endif
