#include "surfdyn/quadrature.hpp"
#include "surfdyn/types.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace surfdyn {

namespace {

std::mutex g_cache_mutex;
std::map<int, std::pair<std::vector<double>, std::vector<double>>> g_gl_cache;

/* Nodes of the n-point rule on [-1,1] via Newton iteration on P_n, then
   rescaled to [0,1]. */
std::pair<std::vector<double>, std::vector<double>> compute_gl(int n)
{
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; i++) {
        // Chebyshev-based initial guess
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; it++) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; j++) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15)
                break;
        }
        x[i] = 0.5 * (1.0 - z); // map to [0,1], ascending
        w[i] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
    return {x, w};
}

const std::pair<std::vector<double>, std::vector<double>>& gl_rule(int n)
{
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    auto it = g_gl_cache.find(n);
    if (it == g_gl_cache.end())
        it = g_gl_cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

const int kRefinementLadder[] = {8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256};

} // namespace

const std::vector<double>& gauss_legendre_nodes(int n) { return gl_rule(n).first; }
const std::vector<double>& gauss_legendre_weights(int n) { return gl_rule(n).second; }

QuadratureResult integrate_1d(const std::function<double(double)>& f, double abs_tol,
                              int max_order)
{
    QuadratureResult res;
    double prev = 0.0;
    bool have_prev = false;
    for (int n : kRefinementLadder) {
        if (n > max_order)
            break;
        const auto& xs = gauss_legendre_nodes(n);
        const auto& ws = gauss_legendre_weights(n);
        double sum = 0.0;
        for (int i = 0; i < n; i++)
            sum += ws[i] * f(xs[i]);
        res.value = sum;
        res.nodes_used = n;
        if (have_prev) {
            res.error_estimate = std::abs(sum - prev);
            if (res.error_estimate < abs_tol) {
                res.converged = true;
                return res;
            }
        }
        prev = sum;
        have_prev = true;
    }
    return res;
}

QuadratureResult integrate_2d(const std::function<double(double, double)>& f, double abs_tol,
                              int max_order)
{
    QuadratureResult res;
    double prev = 0.0;
    bool have_prev = false;
    for (int n : kRefinementLadder) {
        if (n > max_order)
            break;
        const auto& xs = gauss_legendre_nodes(n);
        const auto& ws = gauss_legendre_weights(n);
        double sum = 0.0;
        for (int i = 0; i < n; i++) {
            double row = 0.0;
            for (int j = 0; j < n; j++)
                row += ws[j] * f(xs[i], xs[j]);
            sum += ws[i] * row;
        }
        res.value = sum;
        res.nodes_used = n * n;
        if (have_prev) {
            res.error_estimate = std::abs(sum - prev);
            if (res.error_estimate < abs_tol) {
                res.converged = true;
                return res;
            }
        }
        prev = sum;
        have_prev = true;
    }
    return res;
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth, int force_depth)
{
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    // force a few levels of refinement so an aliased coarse pattern cannot
    // fool the error estimate on oscillatory integrands
    if (depth <= 0 || (force_depth <= 0 && std::abs(delta) <= 15.0 * tol))
        return left + right + delta / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, force_depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, force_depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth)
{
    if (a == b)
        return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth, 3);
}

} // namespace surfdyn
