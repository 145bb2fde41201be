#ifndef SURFDYN_ONE_FORM_HPP
#define SURFDYN_ONE_FORM_HPP

#include "surfdyn/surface.hpp"
#include "surfdyn/types.hpp"

#include <functional>

namespace surfdyn {

/** A one-form given by chart-wise coefficient functions: at a point p with
    chart coordinates (x, y), cov(p) = (a, b) means the form is a dx + b dy
    there. `dcov`, when present, returns the coefficient Jacobian
    [[da/dx, da/dy], [db/dx, db/dy]] used for exterior derivatives and Moser
    vector-field linearizations. */
struct OneForm {
    std::function<Vec2(const PointCoord&)> cov;
    std::function<Mat2(const PointCoord&)> dcov; // optional

    Vec2 operator()(const PointCoord& p) const { return cov(p); }
    bool has_derivative() const { return static_cast<bool>(dcov); }
};

/// zero form
OneForm zero_one_form();

/** d(lambda) coefficient (the function c with d lambda = c dx ^ dy) at p,
    using the analytic coefficient Jacobian when present, else fourth-order
    finite differences. */
double exterior_derivative(const OneForm& lambda, const PointCoord& p, double h = 1e-5);

/** Standard primitive of the area form:
    disk:     (A / 2 pi) (x dy - y dx),
    annulus:  s dt.
    d(beta) = omega exactly. Only defined on single-chart surfaces. */
OneForm standard_primitive(const Surface& s);

/// beta + dg for a smooth function g with analytic gradient (and Hessian)
OneForm add_exact(const OneForm& beta, const std::function<Vec2(const PointCoord&)>& grad_g,
                  const std::function<Mat2(const PointCoord&)>& hess_g = nullptr);

/// max |d(beta) - omega| over random sample points (primitive-of-area check)
double primitive_defect(const Surface& s, const OneForm& beta, int samples, unsigned seed = 12345);

/// max |d(lambda)| over random sample points (closedness check)
double closedness_defect(const Surface& s, const OneForm& lambda, int samples,
                         unsigned seed = 12345);

/** Line integral of lambda along the straight chart segment from a to b
    (both must convert into a's chart; the annulus t-leg follows the given
    unwrapped difference). */
double segment_integral(const Surface& s, const OneForm& lambda, const PointCoord& a,
                        const Vec2& delta, double abs_tol = 1e-12);

/// integral around a closed polyline through the given chart points
double loop_integral(const Surface& s, const OneForm& lambda, const std::vector<PointCoord>& loop,
                     double abs_tol = 1e-12);

} // namespace surfdyn

#endif
