#ifndef SURFDYN_QUADRATURE_HPP
#define SURFDYN_QUADRATURE_HPP

#include <functional>
#include <vector>

namespace surfdyn {

/** Gauss-Legendre nodes and weights on [0, 1]. Results are cached per order. */
const std::vector<double>& gauss_legendre_nodes(int n);
const std::vector<double>& gauss_legendre_weights(int n);

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0; ///< difference between the last two refinement levels
    bool converged = false;
    int nodes_used = 0;
};

/** Integrate f over [0,1] with Gauss-Legendre rules of increasing order until
    two successive estimates differ by less than abs_tol, or the ladder is
    exhausted. */
QuadratureResult integrate_1d(const std::function<double(double)>& f, double abs_tol,
                              int max_order = 256);

/** Tensor-product version over [0,1]^2. */
QuadratureResult integrate_2d(const std::function<double(double, double)>& f, double abs_tol,
                              int max_order = 192);

/** Adaptive Simpson on [a, b]. */
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 28);

} // namespace surfdyn

#endif
