#ifndef SURFDYN_ORBITS_HPP
#define SURFDYN_ORBITS_HPP

#include "surfdyn/map.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <vector>

namespace surfdyn {

/** A periodic orbit x_1 -> ... -> x_d -> x_1 with its linearized return map.
    Floquet eigenvalues come from the chained Jacobian product around the
    orbit; `nondegenerate` means no eigenvalue lies within the eigenvalue
    tolerance of 1. */
struct PeriodicOrbit {
    std::vector<PointCoord> points;
    int period = 0;
    double residual = 0.0;
    Mat2 monodromy = Mat2::Identity();
    std::complex<double> floquet1, floquet2;
    bool nondegenerate = false;
    bool simple = true;
    bool degenerate_continuum = false; ///< representative of an invariant continuum
    bool on_boundary = false;
    int boundary_circle = -1;
    std::optional<double> tangential_multiplier; ///< boundary orbits only
    bool reliable = true; ///< false when the monodromy is ill-conditioned
};

/** Weighted formal sum of simple periodic orbits with positive coefficients;
    |O| is the weighted total period. */
struct OrbitSet {
    std::vector<std::pair<double, PeriodicOrbit>> terms;
    bool integral_coefficients() const;
    double size() const; ///< |O| = sum a_k |S_k|
};

struct OrbitSearchConfig {
    int max_period = 1;
    int grid_major = 16; ///< radial / width seeds per chart
    int grid_minor = 16; ///< angular seeds per chart
    double tol = 1e-10;
    bool use_newton = true;
    int max_newton_iters = 50;
    double clustering_radius = 1e-6;
    int boundary_scan = 256;
    int workers = 1;
    double eigen_tol = 1e-7;
    std::vector<PointCoord> custom_seeds; ///< replaces the built-in grid when non-empty
    bool scan_boundary = true;
};

struct OrbitSearchSummary {
    int seeds = 0;
    int newton_converged = 0;
    int newton_diverged = 0;
    int direct_hits = 0;
    int orbits_found = 0;
    int boundary_orbits = 0;
};

/** Finds simple periodic orbits of period <= max_period: grid-seeded (damped)
    Newton on x -> phi^d(x) - x in chart coordinates, plus a one-dimensional
    periodic-point scan along every boundary/Lagrangian circle. Orbits are
    deduplicated under cyclic relabeling and returned sorted by a canonical
    key, independent of worker scheduling. */
std::vector<PeriodicOrbit> find_orbits(const SurfaceMap& phi, const OrbitSearchConfig& cfg,
                                       OrbitSearchSummary* summary = nullptr);

/** Recomputes the monodromy by chained derivative products and refreshes the
    Floquet data and flags; boundary orbits get the separate tangential
    multiplier along the invariant circle. */
PeriodicOrbit classify_nondegeneracy(const SurfaceMap& phi, PeriodicOrbit orbit,
                                     double eigen_tol = 1e-7);

/// O(f) = sum_k a_k sum_i f(x_i^(k))
double orbit_functional(const OrbitSet& o, const std::function<double(const PointCoord&)>& f);

/// S(f) = sum_i f(x_i)
double orbit_sum(const PeriodicOrbit& s, const std::function<double(const PointCoord&)>& f);

/// uniform-coefficient orbit set over the given orbits
OrbitSet uniform_orbit_set(const std::vector<PeriodicOrbit>& orbits, double coefficient = 1.0);

} // namespace surfdyn

#endif
