#ifndef SURFDYN_FLUX_HPP
#define SURFDYN_FLUX_HPP

#include "surfdyn/hamiltonian.hpp"
#include "surfdyn/surface.hpp"

#include <functional>
#include <string>
#include <vector>

namespace surfdyn {

/** A parameterized 1-cycle. Ordinary cycles are closed loops; `relative`
    cycles are boundary-to-boundary cross-cuts (their endpoints must land on
    boundary circles), which close up in the mapping torus and act as flux
    gates. */
struct CycleSpec {
    std::string id;
    std::function<PointCoord(double)> curve;  ///< v in [0,1]
    std::function<Vec2(double)> velocity;     ///< d(curve)/dv in the curve's chart
    bool relative = false;
    int smooth_segments = 1; ///< quadrature panels (polylines kink at corners)
    std::string homology_label;
};

/// |curve(1) - curve(0)| for loops; worst endpoint-to-boundary gap for gates
double cycle_closure_defect(const Surface& s, const CycleSpec& cycle);

/// the core circle {s = W/2} of the annulus
CycleSpec core_cycle(const Surface& s);
/// the cross-cut gate {t = t0}, oriented from boundary 0 to boundary 1
CycleSpec gate_cycle(const Surface& s, double t0 = 0.0);
/// the boundary circle (or Lagrangian circle) of index i
CycleSpec boundary_cycle(const Surface& s, int circle);
/// closed polyline through the given chart points
CycleSpec polyline_cycle(std::string id, std::vector<PointCoord> points, bool relative = false);

/** An area-preserving isotopy phi^u presented through its generating
    time-dependent vector field (chart coordinates); `flow`, when present,
    evaluates phi^u directly and enables the swept-area cross-check. */
struct Isotopy {
    std::string name;
    std::function<Vec2(double, const PointCoord&)> field;
    std::function<PointCoord(double, const PointCoord&)> flow; // optional
};

Isotopy identity_isotopy();
/// phi^u(s,t) = (s, t + u (rho + c s)) on the annulus
Isotopy shear_isotopy(std::shared_ptr<const Surface> s, double rho, double c);
/// the Hamiltonian isotopy psi^u_H
Isotopy hamiltonian_isotopy(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                            const IntegratorConfig& cfg);

/** Flux of the isotopy through the cycle,
        int_0^1 int_cycle Omega(-, X_u) du,
    by nested quadrature; equals the signed area swept by the cycle. */
double isotopy_flux(const Surface& s, const Isotopy& iso, const CycleSpec& cycle,
                    double abs_tol = 1e-10);

/// independent swept-area evaluation (requires iso.flow); used as an oracle
double sweep_area(const Surface& s, const Isotopy& iso, const CycleSpec& cycle, int u_panels = 64,
                  double abs_tol = 1e-9);

enum class RationalityVerdict { Rational, IrrationalWithinTolerance, Undecided };

struct RationalApproximation {
    RationalityVerdict verdict = RationalityVerdict::Undecided;
    long p = 0, q = 1;    ///< best bounded-denominator approximation, lowest terms
    double error = 0.0;   ///< |x - p/q|
    std::vector<long> continued_fraction; ///< partial quotients examined
};

/** Best rational approximation with denominator <= q_max via continued
    fraction convergents and semiconvergents; verdict Rational when the error
    is below tol. */
RationalApproximation rational_approximation(double x, long q_max, double tol);

struct FluxEntry {
    std::string cycle_id;
    double flux = 0.0;
    double ratio = 0.0; ///< flux / area
    RationalApproximation approx;
};

struct FluxReport {
    std::vector<FluxEntry> entries;
    double area = 0.0;
    long q_max = 10000;
    double tol = 1e-9;
    bool all_rational = false;
    bool all_zero = false;
};

/** Runs every flux/area ratio through bounded-denominator rational
    approximation and assembles the rationality verdicts. */
FluxReport rationality_verdict(const std::vector<std::pair<std::string, double>>& fluxes,
                               double area, long q_max = 10000, double tol = 1e-9);

/** Capping compatibility: when B/A is rational, base and capped rationality
    verdicts must agree; returns false (with a message) when they do not. */
bool rationality_compatible(const FluxReport& base_report, const FluxReport& capped_report,
                            std::string* message = nullptr);

struct HamiltonianCertificate {
    bool certified = false; ///< all basis fluxes vanish within tolerance
    std::vector<double> defects;
    double tol = 1e-8;
};

/// numerical exactness certificate: all cycle fluxes of the isotopy vanish
HamiltonianCertificate hamiltonian_certificate(const Surface& s, const Isotopy& iso,
                                               const std::vector<CycleSpec>& cycles,
                                               double tol = 1e-8);

} // namespace surfdyn

#endif
