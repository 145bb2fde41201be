#ifndef SURFDYN_HAMILTONIAN_HPP
#define SURFDYN_HAMILTONIAN_HPP

#include "surfdyn/expr.hpp"
#include "surfdyn/map.hpp"
#include "surfdyn/surface.hpp"

#include <functional>
#include <string>

namespace surfdyn {

/** A time-periodic Hamiltonian H(time, p) with chart-coordinate gradient and
    Hessian. H(time, -) must be locally constant on every boundary circle so
    the flow stays tangent to the boundary. */
struct Hamiltonian {
    std::function<double(double, const PointCoord&)> value;
    std::function<Vec2(double, const PointCoord&)> grad;
    std::function<Mat2(double, const PointCoord&)> hess;
    bool autonomous = true;
    std::string name = "H";
};

struct IntegratorConfig {
    int steps_per_unit = 256;
    double fixpoint_tol = 1e-12;
    int max_fixpoint_iters = 64;
    double certificate_tol = 1e-6; ///< second-order method: the bound scales with h^2
};

/** Hamiltonian vector field under the convention  i_{X_H} omega = dH, i.e.
    X_H = (dH/dy, -dH/dx) / rho  in a chart where omega = rho dx ^ dy.
    Flipping this sign convention negates every action and the Calabi
    invariant. */
Vec2 hamiltonian_vector_field(const Surface& s, const Hamiltonian& h, double time,
                              const PointCoord& p);
Mat2 hamiltonian_vector_field_jacobian(const Surface& s, const Hamiltonian& h, double time,
                                       const PointCoord& p);

/// max over circles and samples of |H(t, .) - H(t, circle basepoint)|
double boundary_constancy_defect(const Hamiltonian& h, const Surface& s, int samples = 32,
                                 int time_samples = 4);

/** Flow map of X_H over time [t0, t1] by the implicit midpoint rule
    (symplectic; the Cayley-transform variational update keeps the derivative
    exactly area-preserving). Throws NumericalError if the fixed-point solve
    stalls. */
SurfaceMap hamiltonian_flow(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                            const IntegratorConfig& cfg, double t0, double t1);

/** The time-one map psi^1_H. Validates the boundary local-constancy
    certificate before building. */
SurfaceMap hamiltonian_time_one(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                                const IntegratorConfig& cfg);

/// max endpoint shift when the step count is halved, over random samples
double integrator_certificate(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                              const IntegratorConfig& cfg, int samples = 16, unsigned seed = 7177);

/** Builds a Hamiltonian from an expression over r2 (disk) or s, t (annulus)
    and time, with symbolic gradient and Hessian. */
Hamiltonian expression_hamiltonian(const Surface& s, const std::string& source);

/** k * bump(s) * cos(2 pi m t) on the annulus, with the radial bump exactly
    zero within `margin` of both boundary circles; the standard
    boundary-flattened perturbation. */
Hamiltonian flattened_perturbation(const Surface& s, double k, int m, double margin);

/** Standard-map-like perturbed twist on the annulus: the closed-form shear
    (s, t + rho + c s) composed with the time-one map of a boundary-flattened
    kick Hamiltonian. */
SurfaceMap perturbed_twist_map(std::shared_ptr<const Surface> s, double rho, double c, double kick,
                               int kick_mode, const IntegratorConfig& cfg);

} // namespace surfdyn

#endif
