#ifndef SURFDYN_MAP_HPP
#define SURFDYN_MAP_HPP

#include "surfdyn/surface.hpp"
#include "surfdyn/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace surfdyn {

enum class MapRepresentation { ClosedForm, HamiltonianTimeOne, MoserFlow, Composition, CappedExtension };

/** An evaluable area-preserving diffeomorphism of a Surface. Evaluation
    returns points in the surface's canonical chart; `derivative` is the
    Jacobian from the input point's chart to the returned point's chart, so
    chained products assemble orbit monodromies directly. Immutable and
    reentrant. */
class SurfaceMap {
public:
    SurfaceMap() = default;
    SurfaceMap(std::shared_ptr<const Surface> surface, MapRepresentation rep, std::string name,
               std::function<PointCoord(const PointCoord&)> eval,
               std::function<Mat2(const PointCoord&)> deriv,
               std::function<std::optional<PointCoord>(const PointCoord&)> inverse = nullptr);

    const Surface& surface() const { return *surface_; }
    std::shared_ptr<const Surface> surface_ptr() const { return surface_; }
    MapRepresentation representation() const { return rep_; }
    const std::string& name() const { return name_; }

    PointCoord operator()(const PointCoord& p) const { return eval_(p); }
    Mat2 derivative(const PointCoord& p) const { return deriv_(p); }
    bool has_inverse() const { return static_cast<bool>(inverse_); }
    std::optional<PointCoord> inverse(const PointCoord& p) const;

private:
    std::shared_ptr<const Surface> surface_;
    MapRepresentation rep_ = MapRepresentation::ClosedForm;
    std::string name_ = "identity";
    std::function<PointCoord(const PointCoord&)> eval_;
    std::function<Mat2(const PointCoord&)> deriv_;
    std::function<std::optional<PointCoord>(const PointCoord&)> inverse_;
};

// --- closed-form families -------------------------------------------------

SurfaceMap identity_map(std::shared_ptr<const Surface> s);

/** Rigid rotation: disk (x,y) -> R(2 pi alpha)(x,y); annulus (s,t) -> (s, t+alpha).
    On capped surfaces the rotation acts on the base chart and each cap. */
SurfaceMap rotation_map(std::shared_ptr<const Surface> s, double alpha);

/** Radial twist of the disk, (r, theta) -> (r, theta + Theta(r)) with
    Theta(r) = sum_k coeffs[k] * r^(2k); the polynomial-in-r^2 profile keeps
    the map smooth at the origin. */
SurfaceMap radial_twist_map(std::shared_ptr<const Surface> s, std::vector<double> theta_coeffs);

/** Disk twist whose profile is constant (= theta_inner) for r <= r_lo and
    constant (= theta_outer) for r >= r_hi, interpolated by a smoothstep in
    between; rigid near the boundary, hence cappable. */
SurfaceMap flat_twist_map(std::shared_ptr<const Surface> s, double theta_inner, double theta_outer,
                          double r_lo, double r_hi);

/// annulus (s,t) -> (s, t + rho + c s)
SurfaceMap shear_map(std::shared_ptr<const Surface> s, double rho, double c);

SurfaceMap compose(const SurfaceMap& f, const SurfaceMap& g); ///< x -> f(g(x))

/** Result of certifying that a map is a rigid rotation (s,t) -> (s, t+rho_i)
    on a collar of each boundary circle, possibly permuting equal-area
    boundary circles. */
struct CollarRotationData {
    std::vector<int> permutation;  ///< circle i maps to circle permutation[i]
    std::vector<double> rotations; ///< collar translation rho_i
    double defect = 0.0;
};

/** Samples the boundary collars of phi0's surface and fits a rigid collar
    rotation; throws PreconditionError("unsupported-extension...") when the
    sampled defect exceeds tol. */
CollarRotationData certify_collar_rotation(const SurfaceMap& phi0, int samples_per_circle = 32,
                                           double tol = 1e-9);

/** Extends a collar-rotation map of Z over the caps of `capped` by the rigid
    rotation 2 pi rho_i of each cap disk; the gluing map conjugates collar
    translation to cap rotation, so the extension is smooth across L and
    leaves L invariant. */
SurfaceMap extend_boundary_rotation(const SurfaceMap& phi0, std::shared_ptr<const Surface> capped);

// --- diagnostics ----------------------------------------------------------

/** |det(Dphi) * rho_out / rho_in - 1| at p: the chart-independent
    area-preservation defect (reduces to |det - 1| in Darboux charts). */
double area_preservation_defect(const SurfaceMap& phi, const PointCoord& p);

/// max defect over random sample points
double area_preservation_defect(const SurfaceMap& phi, int samples, unsigned seed = 991);

/// central finite-difference Jacobian of the evaluation (chart-delta aware)
Mat2 derivative_fd(const SurfaceMap& phi, const PointCoord& p, double h = 1e-6);

/// max |derivative - derivative_fd| entrywise over random samples
double derivative_consistency_defect(const SurfaceMap& phi, int samples, unsigned seed = 992);

/** Checks that each boundary (or Lagrangian) circle maps onto a circle of the
    family and returns the permutation; throws if a sampled image point strays
    from every circle by more than tol. */
std::vector<int> boundary_permutation(const SurfaceMap& phi, int samples_per_circle = 32,
                                      double tol = 1e-7);

PointCoord iterate(const SurfaceMap& phi, PointCoord p, int n);

/// product of Jacobians along x, phi(x), ..., phi^(d-1)(x)
Mat2 orbit_monodromy(const SurfaceMap& phi, const PointCoord& start, int period);

} // namespace surfdyn

#endif
