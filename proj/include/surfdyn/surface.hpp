#ifndef SURFDYN_SURFACE_HPP
#define SURFDYN_SURFACE_HPP

#include "surfdyn/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace surfdyn {

enum class SurfaceKind { Disk, Annulus, Capped };

/** Metadata for one boundary circle (or, on a capped surface, the Lagrangian
    circle it turned into). The collar chart of circle i is the map
    tau_i : [0, span) x (R/Z) -> surface with tau_i(0,-) parameterizing the
    circle, s increasing into the surface, and tau_i^* omega = ds ^ dt. */
struct BoundaryCircle {
    int index = 0;
    bool lagrangian = false; ///< true on capped surfaces
    double orientation = 1.0;
};

/** Cap disk data from the capping construction: the cap chart is the open
    disk of radius r1 with area form r dr ^ dtheta; the Lagrangian circle
    sits at radius r0, and the ring r0 <= r < r1 is glued onto the collar via
    (s, t) |-> (sqrt((pi r0^2 + s)/pi), 2 pi t). */
struct CapChart {
    double r0 = 0.0;
    double r1 = 0.0;
};

/** One smooth quadrature patch: maps the unit square onto a piece of the
    surface; `factor` bundles the area-form density, the parameterization
    Jacobian, and the partition-of-unity weight, so that
    integral of f over the piece = iint f(point(a,b)) factor(a,b) da db. */
struct QuadPanel {
    std::function<PointCoord(double, double)> point;
    std::function<double(double, double)> factor;
};

/** A concrete chartable surface: unit disk (density A/pi), flat annulus
    [0,W] x (R/Z) (density 1), or a capped surface built from one of those.
    Immutable after construction; safe for concurrent reads. */
class Surface {
public:
    static Surface disk(double area, double collar_width = -1.0);
    static Surface annulus(double area, double collar_width = -1.0);

    SurfaceKind kind() const { return kind_; }
    double total_area() const { return area_; }
    /// annulus width (equals area since the angular circumference is 1)
    double width() const { return width_; }
    double collar_width() const { return collar_width_; }
    bool is_capped() const { return kind_ == SurfaceKind::Capped; }

    int boundary_count() const { return static_cast<int>(circles_.size()); }
    const std::vector<BoundaryCircle>& circles() const { return circles_; }
    const Surface& base() const;
    const CapChart& cap(int circle) const;

    // --- charts ---
    int chart_count() const;
    double chart_density(int chart, const Vec2& xy) const;
    bool chart_contains(int chart, const Vec2& xy, double tol = 1e-9) const;
    /// wrap periodic coordinates into their fundamental domain
    PointCoord normalize(const PointCoord& p) const;
    /// deterministic chart assignment (cap chart wins within half a collar of L)
    PointCoord canonical(const PointCoord& p) const;
    std::optional<PointCoord> convert(const PointCoord& p, int chart) const;
    /// d(target chart coords)/d(source chart coords), analytic
    Mat2 transition_jacobian(const PointCoord& p, int chart) const;

    // --- collar charts ---
    PointCoord collar_point(int circle, double s, double t) const;
    Mat2 collar_jacobian(int circle, double s, double t) const;
    /// (s, t) of p in the collar of circle i, if p lies within it
    std::optional<std::pair<double, double>> collar_coords(int circle, const PointCoord& p) const;
    /** signed collar depth across the Lagrangian circle of a capped surface:
        positive inside Z, negative inside the cap; nullopt if out of range */
    std::optional<double> signed_collar_depth(int circle, const PointCoord& p) const;

    // --- metric helpers ---
    /// b - a in a's chart, wrap-aware; throws if b cannot be converted
    Vec2 chart_delta(const PointCoord& a, const PointCoord& b) const;
    /// heuristic distance (exact chart metric when a common chart exists)
    double distance(const PointCoord& a, const PointCoord& b) const;

    // --- integration and sampling ---
    std::vector<QuadPanel> integration_panels() const;
    /// uniform sample with respect to the area form
    PointCoord sample(std::mt19937_64& rng) const;

    std::string describe() const;

private:
    Surface() = default;

    SurfaceKind kind_ = SurfaceKind::Disk;
    double area_ = 1.0;
    double width_ = 0.0;        // annulus only
    double collar_width_ = 0.25;
    std::vector<BoundaryCircle> circles_;

    // capped only
    std::shared_ptr<const Surface> base_;
    std::vector<CapChart> caps_;

    friend Surface cap_surface(const Surface&, double, double);
};

/** Glue an equal-area disk onto every boundary circle of `base`, producing a
    closed surface of total area `target_area` whose former boundary circles
    are Lagrangian circles at radius r0 in their cap charts. */
Surface cap_surface(const Surface& base, double target_area, double collar);

/** Maximum grid defect of the chart/collar pullback identities:
    |det(J) * density - 1| over an (grid x grid) sample of every collar chart
    and, on capped surfaces, of the collar-to-cap gluing map. Jacobians are
    taken by fourth-order finite differences of the actual chart maps. */
double verify_area_form(const Surface& s, int grid_density);

/** Grid defect of a single 2D map pulling `density_out` back to `density_in`,
    with finite-difference Jacobians; exposed so tests can probe corrupted
    gluing maps directly. */
double pullback_defect_grid(const std::function<Vec2(const Vec2&)>& map,
                            const std::function<double(const Vec2&)>& density_out,
                            const std::function<double(const Vec2&)>& density_in,
                            const Vec2& lo, const Vec2& hi, int grid_density);

/// max |roundtrip(p) - p| over chart-overlap samples
double transition_roundtrip_defect(const Surface& s, int samples);

struct AreaIntegral {
    double value = 0.0;
    double achieved_tolerance = 0.0;
    bool converged = true;
};

/** Chartwise quadrature of a scalar field against the area form, refined
    until successive estimates agree to abs_tol. */
AreaIntegral area_integrate(const Surface& s, const std::function<double(const PointCoord&)>& f,
                            double abs_tol = 1e-10);

} // namespace surfdyn

#endif
