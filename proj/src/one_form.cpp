#include "surfdyn/one_form.hpp"
#include "surfdyn/quadrature.hpp"

#include <cmath>

namespace surfdyn {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

OneForm zero_one_form()
{
    return OneForm{[](const PointCoord&) { return Vec2::Zero().eval(); },
                   [](const PointCoord&) { return Mat2::Zero().eval(); }};
}

double exterior_derivative(const OneForm& lambda, const PointCoord& p, double h)
{
    if (lambda.has_derivative()) {
        Mat2 j = lambda.dcov(p);
        return j(1, 0) - j(0, 1); // d(a dx + b dy) = (b_x - a_y) dx ^ dy
    }
    auto at = [&](double dx, double dy) {
        return lambda.cov(PointCoord(p.chart, p.xy[0] + dx, p.xy[1] + dy));
    };
    double bx = (-at(2 * h, 0)[1] + 8 * at(h, 0)[1] - 8 * at(-h, 0)[1] + at(-2 * h, 0)[1]) / (12 * h);
    double ay = (-at(0, 2 * h)[0] + 8 * at(0, h)[0] - 8 * at(0, -h)[0] + at(0, -2 * h)[0]) / (12 * h);
    return bx - ay;
}

OneForm standard_primitive(const Surface& s)
{
    switch (s.kind()) {
    case SurfaceKind::Disk: {
        double k = s.total_area() / kTwoPi;
        return OneForm{[k](const PointCoord& p) { return Vec2(-k * p.xy[1], k * p.xy[0]); },
                       [k](const PointCoord&) {
                           Mat2 j;
                           j << 0, -k, k, 0;
                           return j;
                       }};
    }
    case SurfaceKind::Annulus:
        return OneForm{[](const PointCoord& p) { return Vec2(0.0, p.xy[0]); },
                       [](const PointCoord&) {
                           Mat2 j;
                           j << 0, 0, 1, 0;
                           return j;
                       }};
    default:
        throw PreconditionError("standard_primitive: closed capped surfaces admit no global primitive");
    }
}

OneForm add_exact(const OneForm& beta, const std::function<Vec2(const PointCoord&)>& grad_g,
                  const std::function<Mat2(const PointCoord&)>& hess_g)
{
    OneForm out;
    out.cov = [beta, grad_g](const PointCoord& p) { return (beta.cov(p) + grad_g(p)).eval(); };
    if (beta.has_derivative() && hess_g)
        out.dcov = [beta, hess_g](const PointCoord& p) { return (beta.dcov(p) + hess_g(p)).eval(); };
    return out;
}

double primitive_defect(const Surface& s, const OneForm& beta, int samples, unsigned seed)
{
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; i++) {
        PointCoord p = s.sample(rng);
        double d = exterior_derivative(beta, p);
        worst = std::max(worst, std::abs(d - s.chart_density(p.chart, p.xy)));
    }
    return worst;
}

double closedness_defect(const Surface& s, const OneForm& lambda, int samples, unsigned seed)
{
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; i++) {
        PointCoord p = s.sample(rng);
        worst = std::max(worst, std::abs(exterior_derivative(lambda, p)));
    }
    return worst;
}

double segment_integral(const Surface& s, const OneForm& lambda, const PointCoord& a,
                        const Vec2& delta, double abs_tol)
{
    (void)s;
    auto integrand = [&](double u) {
        PointCoord p(a.chart, a.xy + u * delta);
        return lambda.cov(p).dot(delta);
    };
    return adaptive_simpson(integrand, 0.0, 1.0, abs_tol);
}

double loop_integral(const Surface& s, const OneForm& lambda, const std::vector<PointCoord>& loop,
                     double abs_tol)
{
    if (loop.size() < 2)
        return 0.0;
    double total = 0.0;
    double leg_tol = abs_tol / static_cast<double>(loop.size());
    for (size_t i = 0; i < loop.size(); i++) {
        const PointCoord& a = loop[i];
        const PointCoord& b = loop[(i + 1) % loop.size()];
        total += segment_integral(s, lambda, a, s.chart_delta(a, b), leg_tol);
    }
    return total;
}

} // namespace surfdyn
