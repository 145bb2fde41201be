#ifndef SURFDYN_MOSER_HPP
#define SURFDYN_MOSER_HPP

#include "surfdyn/map.hpp"
#include "surfdyn/one_form.hpp"
#include "surfdyn/surface.hpp"

namespace surfdyn {

/** An area form written chart-wise as density(p) dx ^ dy. `grad`, when
    present, is the chart gradient of the density (used by the variational
    equation of the interpolation flow). */
struct AreaForm {
    std::function<double(const PointCoord&)> density;
    std::function<Vec2(const PointCoord&)> grad; // optional

    double operator()(const PointCoord& p) const { return density(p); }
};

/// the surface's own area form
AreaForm surface_area_form(const Surface& s);

struct MoserConfig {
    int steps = 200;          ///< RK4 steps over t in [0, 1]
    double form_check_tol = 1e-8;
    double area_check_tol = 1e-8;
    int check_samples = 200;
};

/** Moser interpolation: integrates the time-dependent field V_t solving
    Omega_t(V_t, -) = -sigma with Omega_t = (1-t) Omega0 + t Omega1, returning
    tau_1 with tau_1^* Omega1 = Omega0. Requires equal total masses,
    d sigma = Omega1 - Omega0, and sigma restricting to 0 on every boundary
    or Lagrangian circle (so the flow fixes each circle setwise). */
SurfaceMap moser_interpolate(std::shared_ptr<const Surface> s, const AreaForm& omega0,
                             const AreaForm& omega1, const OneForm& sigma,
                             const MoserConfig& cfg = MoserConfig());

/// max grid defect of |det(Dtau) * omega1(tau(p)) - omega0(p)|
double moser_pullback_defect(const SurfaceMap& tau, const AreaForm& omega0, const AreaForm& omega1,
                             int grid_density);

/// max |sigma(tangent)| sampled along every boundary/Lagrangian circle
double circle_restriction_defect(const Surface& s, const OneForm& sigma, int samples = 64);

} // namespace surfdyn

#endif
