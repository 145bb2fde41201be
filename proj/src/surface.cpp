#include "surfdyn/surface.hpp"
#include "surfdyn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace surfdyn {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

} // namespace

Surface Surface::disk(double area, double collar_width)
{
    if (area <= 0)
        throw PreconditionError("disk: area must be positive");
    Surface s;
    s.kind_ = SurfaceKind::Disk;
    s.area_ = area;
    s.collar_width_ = collar_width > 0 ? collar_width : 0.25 * area;
    if (s.collar_width_ >= area)
        throw PreconditionError("disk: collar width must be smaller than the area");
    s.circles_ = {BoundaryCircle{0, false, 1.0}};
    return s;
}

Surface Surface::annulus(double area, double collar_width)
{
    if (area <= 0)
        throw PreconditionError("annulus: area must be positive");
    Surface s;
    s.kind_ = SurfaceKind::Annulus;
    s.area_ = area;
    s.width_ = area; // angular circumference 1
    s.collar_width_ = collar_width > 0 ? collar_width : 0.25 * area;
    if (s.collar_width_ > 0.5 * s.width_)
        throw PreconditionError("annulus: collars must not overlap");
    s.circles_ = {BoundaryCircle{0, false, 1.0}, BoundaryCircle{1, false, 1.0}};
    return s;
}

Surface cap_surface(const Surface& base, double target_area, double collar)
{
    if (base.is_capped())
        throw PreconditionError("cap_surface: base is already capped");
    const double A = base.total_area();
    const double B = target_area;
    const int n = base.boundary_count();
    if (n < 1)
        throw PreconditionError("cap_surface: base has no boundary circles");
    if (B <= A)
        throw PreconditionError("cap_surface: invalid-area, target area must exceed the base area");
    if (collar <= 0 || collar >= base.collar_width())
        throw PreconditionError("cap_surface: invalid-collar, collar must fit inside the base collars");

    Surface s;
    s.kind_ = SurfaceKind::Capped;
    s.area_ = B;
    s.collar_width_ = collar;
    s.base_ = std::make_shared<Surface>(base);
    const double r0 = std::sqrt((B - A) / (n * kPi));
    const double r1 = std::sqrt((B - A + n * collar) / (n * kPi));
    for (int i = 0; i < n; i++) {
        s.caps_.push_back(CapChart{r0, r1});
        s.circles_.push_back(BoundaryCircle{i, true, 1.0});
    }
    return s;
}

const Surface& Surface::base() const
{
    if (!base_)
        throw PreconditionError("surface: not capped, no base");
    return *base_;
}

const CapChart& Surface::cap(int circle) const
{
    if (!is_capped() || circle < 0 || circle >= static_cast<int>(caps_.size()))
        throw PreconditionError("surface: no such cap");
    return caps_[static_cast<size_t>(circle)];
}

int Surface::chart_count() const
{
    return is_capped() ? 1 + static_cast<int>(caps_.size()) : 1;
}

double Surface::chart_density(int chart, const Vec2& xy) const
{
    (void)xy;
    switch (kind_) {
    case SurfaceKind::Disk:
        return area_ / kPi;
    case SurfaceKind::Annulus:
        return 1.0;
    case SurfaceKind::Capped:
        if (chart == 0)
            return base_->chart_density(0, xy);
        return 1.0; // cap charts carry r dr ^ dtheta = du ^ dv
    }
    return 1.0;
}

bool Surface::chart_contains(int chart, const Vec2& xy, double tol) const
{
    switch (kind_) {
    case SurfaceKind::Disk:
        return xy.squaredNorm() <= 1.0 + tol;
    case SurfaceKind::Annulus:
        return xy[0] >= -tol && xy[0] <= width_ + tol;
    case SurfaceKind::Capped:
        if (chart == 0)
            return base_->chart_contains(0, xy, tol);
        if (chart < 1 || chart > static_cast<int>(caps_.size()))
            return false;
        return xy.norm() <= caps_[static_cast<size_t>(chart - 1)].r1 + tol;
    }
    return false;
}

PointCoord Surface::normalize(const PointCoord& p) const
{
    PointCoord q = p;
    SurfaceKind k = kind_;
    if (is_capped() && p.chart == 0)
        k = base_->kind();
    if (k == SurfaceKind::Annulus && q.chart == 0)
        q.xy[1] = wrap_unit(q.xy[1]);
    return q;
}

PointCoord Surface::collar_point(int circle, double s, double t) const
{
    if (is_capped())
        return base_->collar_point(circle, s, t);
    switch (kind_) {
    case SurfaceKind::Disk: {
        // r(s) = sqrt(1 - s/A), theta = -2 pi t, so that tau^* omega = ds ^ dt
        double r = std::sqrt(1.0 - s / area_);
        double th = -kTwoPi * t;
        return PointCoord(0, r * std::cos(th), r * std::sin(th));
    }
    case SurfaceKind::Annulus:
        if (circle == 0)
            return PointCoord(0, s, wrap_unit(t));
        return PointCoord(0, width_ - s, wrap_unit(-t));
    default:
        throw PreconditionError("collar_point: bad circle");
    }
}

Mat2 Surface::collar_jacobian(int circle, double s, double t) const
{
    if (is_capped())
        return base_->collar_jacobian(circle, s, t);
    Mat2 j;
    switch (kind_) {
    case SurfaceKind::Disk: {
        double r = std::sqrt(1.0 - s / area_);
        double rp = -0.5 / (area_ * r);
        double c = std::cos(kTwoPi * t), sg = std::sin(kTwoPi * t);
        // x = r cos(2 pi t), y = -r sin(2 pi t)
        j << c * rp, -kTwoPi * r * sg, -sg * rp, -kTwoPi * r * c;
        return j;
    }
    case SurfaceKind::Annulus:
        if (circle == 0)
            j << 1, 0, 0, 1;
        else
            j << -1, 0, 0, -1;
        return j;
    default:
        throw PreconditionError("collar_jacobian: bad circle");
    }
}

std::optional<std::pair<double, double>> Surface::collar_coords(int circle, const PointCoord& p) const
{
    if (is_capped()) {
        // Z-side collar of the Lagrangian circle
        if (p.chart == 0)
            return base_->collar_coords(circle, p);
        if (p.chart != circle + 1)
            return std::nullopt;
        const CapChart& c = caps_[static_cast<size_t>(circle)];
        double r = p.xy.norm();
        double s = kPi * (r * r - c.r0 * c.r0);
        if (s < -1e-12)
            return std::nullopt;
        double t = wrap_unit(std::atan2(p.xy[1], p.xy[0]) / kTwoPi);
        return std::make_pair(std::max(0.0, s), t);
    }
    switch (kind_) {
    case SurfaceKind::Disk: {
        double r2 = p.xy.squaredNorm();
        double s = area_ * (1.0 - r2);
        if (s < -1e-12 || s >= collar_width_)
            return std::nullopt;
        double t = wrap_unit(-std::atan2(p.xy[1], p.xy[0]) / kTwoPi);
        return std::make_pair(std::max(0.0, s), t);
    }
    case SurfaceKind::Annulus: {
        double s = circle == 0 ? p.xy[0] : width_ - p.xy[0];
        if (s < -1e-12 || s >= collar_width_)
            return std::nullopt;
        double t = circle == 0 ? wrap_unit(p.xy[1]) : wrap_unit(-p.xy[1]);
        return std::make_pair(std::max(0.0, s), t);
    }
    default:
        return std::nullopt;
    }
}

std::optional<double> Surface::signed_collar_depth(int circle, const PointCoord& p) const
{
    if (!is_capped())
        return std::nullopt;
    auto q = convert(p, circle + 1);
    if (!q) {
        // deep inside Z: fall back to the base collar if available
        if (p.chart == 0) {
            auto cc = base_->collar_coords(circle, p);
            if (cc)
                return cc->first;
        }
        return std::nullopt;
    }
    const CapChart& c = caps_[static_cast<size_t>(circle)];
    double r = q->xy.norm();
    return kPi * (r * r - c.r0 * c.r0);
}

namespace {

// collar (s, t) -> cap chart cartesian, per the gluing symplectomorphism
Vec2 collar_to_cap(const CapChart& cap, double s, double t)
{
    double r = std::sqrt(cap.r0 * cap.r0 + s / kPi);
    double th = kTwoPi * t;
    return Vec2(r * std::cos(th), r * std::sin(th));
}

Mat2 collar_to_cap_jacobian(const CapChart& cap, double s, double t)
{
    double r = std::sqrt(cap.r0 * cap.r0 + s / kPi);
    double drds = 0.5 / (kPi * r);
    double c = std::cos(kTwoPi * t), sg = std::sin(kTwoPi * t);
    Mat2 j;
    j << c * drds, -kTwoPi * r * sg, sg * drds, kTwoPi * r * c;
    return j;
}

} // namespace

std::optional<PointCoord> Surface::convert(const PointCoord& p, int chart) const
{
    if (p.chart == chart)
        return normalize(p);
    if (!is_capped())
        return std::nullopt;

    if (p.chart == 0 && chart >= 1) {
        int circle = chart - 1;
        auto cc = base_->collar_coords(circle, p);
        if (!cc || cc->first >= collar_width_)
            return std::nullopt; // the cap chart only reaches collar depth delta
        return PointCoord(chart, collar_to_cap(caps_[static_cast<size_t>(circle)], cc->first, cc->second));
    }
    if (p.chart >= 1 && chart == 0) {
        int circle = p.chart - 1;
        const CapChart& c = caps_[static_cast<size_t>(circle)];
        double r = p.xy.norm();
        double s = kPi * (r * r - c.r0 * c.r0);
        if (s < -1e-12)
            return std::nullopt; // cap interior, not part of Z
        double t = wrap_unit(std::atan2(p.xy[1], p.xy[0]) / kTwoPi);
        return normalize(base_->collar_point(circle, std::max(0.0, s), t));
    }
    return std::nullopt;
}

Mat2 Surface::transition_jacobian(const PointCoord& p, int chart) const
{
    if (p.chart == chart)
        return Mat2::Identity();
    if (!is_capped())
        throw PreconditionError("transition_jacobian: charts do not overlap");

    if (p.chart == 0 && chart >= 1) {
        int circle = chart - 1;
        auto cc = base_->collar_coords(circle, p);
        if (!cc || cc->first >= collar_width_)
            throw PreconditionError("transition_jacobian: point outside collar");
        Mat2 j_collar = base_->collar_jacobian(circle, cc->first, cc->second);
        return collar_to_cap_jacobian(caps_[static_cast<size_t>(circle)], cc->first, cc->second) *
               j_collar.inverse();
    }
    if (p.chart >= 1 && chart == 0) {
        int circle = p.chart - 1;
        const CapChart& c = caps_[static_cast<size_t>(circle)];
        double r = p.xy.norm();
        double s = kPi * (r * r - c.r0 * c.r0);
        if (s < -1e-12)
            throw PreconditionError("transition_jacobian: cap interior point");
        double t = wrap_unit(std::atan2(p.xy[1], p.xy[0]) / kTwoPi);
        s = std::max(0.0, s);
        Mat2 j_collar = base_->collar_jacobian(circle, s, t);
        return j_collar * collar_to_cap_jacobian(c, s, t).inverse();
    }
    throw PreconditionError("transition_jacobian: charts do not overlap");
}

PointCoord Surface::canonical(const PointCoord& p) const
{
    if (!is_capped())
        return normalize(p);
    if (p.chart >= 1) {
        const CapChart& c = caps_[static_cast<size_t>(p.chart - 1)];
        double r_mid = std::sqrt(c.r0 * c.r0 + 0.5 * collar_width_ / kPi);
        if (p.xy.norm() <= r_mid)
            return p;
        return *convert(p, 0);
    }
    for (size_t i = 0; i < caps_.size(); i++) {
        auto cc = base_->collar_coords(static_cast<int>(i), p);
        if (cc && cc->first < 0.5 * collar_width_)
            return *convert(p, static_cast<int>(i) + 1);
    }
    return normalize(p);
}

Vec2 Surface::chart_delta(const PointCoord& a, const PointCoord& b) const
{
    auto bb = convert(b, a.chart);
    if (!bb)
        throw PreconditionError("chart_delta: points share no chart");
    Vec2 d = bb->xy - a.xy;
    SurfaceKind k = kind_;
    if (is_capped() && a.chart == 0)
        k = base_->kind();
    if (k == SurfaceKind::Annulus && a.chart == 0)
        d[1] = wrap_half(d[1]);
    return d;
}

double Surface::distance(const PointCoord& a, const PointCoord& b) const
{
    auto bb = convert(b, a.chart);
    if (bb) {
        Vec2 d = bb->xy - a.xy;
        SurfaceKind k = is_capped() && a.chart == 0 ? base_->kind() : kind_;
        if (k == SurfaceKind::Annulus && a.chart == 0)
            d[1] = wrap_half(d[1]);
        return d.norm();
    }
    auto ab = convert(a, b.chart);
    if (ab)
        return distance(b, a);
    if (!is_capped())
        throw PreconditionError("distance: points share no chart");
    // route through the Lagrangian circles; heuristic, only used for
    // cell-mass weighting and clustering
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < caps_.size(); i++) {
        int circle = static_cast<int>(i);
        auto da = signed_collar_depth(circle, a);
        auto db = signed_collar_depth(circle, b);
        double ra = da ? std::abs(*da) : 1.0;
        double rb = db ? std::abs(*db) : 1.0;
        best = std::min(best, ra + rb + 0.25);
    }
    return best;
}

std::vector<QuadPanel> Surface::integration_panels() const
{
    std::vector<QuadPanel> panels;
    switch (kind_) {
    case SurfaceKind::Disk: {
        double A = area_;
        panels.push_back(QuadPanel{
            [](double a, double b) {
                double th = kTwoPi * b;
                return PointCoord(0, a * std::cos(th), a * std::sin(th));
            },
            [A](double a, double) { return 2.0 * A * a; }});
        return panels;
    }
    case SurfaceKind::Annulus: {
        double W = width_;
        panels.push_back(QuadPanel{
            [W](double a, double b) { return PointCoord(0, W * a, b); },
            [W](double, double) { return W; }});
        return panels;
    }
    case SurfaceKind::Capped:
        break;
    }

    const double delta = collar_width_;
    const Surface& zb = *base_;
    if (zb.kind() == SurfaceKind::Disk) {
        const double A = zb.total_area();
        const double rc = std::sqrt(1.0 - delta / A); // collar edge radius
        panels.push_back(QuadPanel{
            [rc](double a, double b) {
                double r = a * rc, th = kTwoPi * b;
                return PointCoord(0, r * std::cos(th), r * std::sin(th));
            },
            [A, rc](double a, double) { return 2.0 * A * rc * rc * a; }});
        panels.push_back(QuadPanel{
            [rc](double a, double b) {
                double r = rc + a * (1.0 - rc), th = kTwoPi * b;
                return PointCoord(0, r * std::cos(th), r * std::sin(th));
            },
            [A, rc, delta](double a, double) {
                double r = rc + a * (1.0 - rc);
                double s = A * (1.0 - r * r);
                return 2.0 * A * (1.0 - rc) * r * smoothstep(s / delta);
            }});
    } else {
        const double W = zb.width();
        panels.push_back(QuadPanel{
            [W, delta](double a, double b) { return PointCoord(0, delta + a * (W - 2.0 * delta), b); },
            [W, delta](double, double) { return W - 2.0 * delta; }});
        panels.push_back(QuadPanel{
            [delta](double a, double b) { return PointCoord(0, a * delta, b); },
            [delta](double a, double) { return delta * smoothstep(a); }});
        panels.push_back(QuadPanel{
            [W, delta](double a, double b) { return PointCoord(0, W - a * delta, b); },
            [delta](double a, double) { return delta * smoothstep(a); }});
    }
    for (size_t i = 0; i < caps_.size(); i++) {
        const CapChart c = caps_[i];
        const int chart = static_cast<int>(i) + 1;
        panels.push_back(QuadPanel{
            [c, chart](double a, double b) {
                double r = a * c.r0, th = kTwoPi * b;
                return PointCoord(chart, r * std::cos(th), r * std::sin(th));
            },
            [c](double a, double) { return kTwoPi * c.r0 * c.r0 * a; }});
        panels.push_back(QuadPanel{
            [c, chart](double a, double b) {
                double r = c.r0 + a * (c.r1 - c.r0), th = kTwoPi * b;
                return PointCoord(chart, r * std::cos(th), r * std::sin(th));
            },
            [c, delta](double a, double) {
                double r = c.r0 + a * (c.r1 - c.r0);
                double s = kPi * (r * r - c.r0 * c.r0);
                return kTwoPi * (c.r1 - c.r0) * r * (1.0 - smoothstep(s / delta));
            }});
    }
    return panels;
}

PointCoord Surface::sample(std::mt19937_64& rng) const
{
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    switch (kind_) {
    case SurfaceKind::Disk: {
        double r = std::sqrt(u01(rng));
        double th = kTwoPi * u01(rng);
        return PointCoord(0, r * std::cos(th), r * std::sin(th));
    }
    case SurfaceKind::Annulus:
        return PointCoord(0, width_ * u01(rng), u01(rng));
    case SurfaceKind::Capped:
        break;
    }
    // partition: Z carries the base area, each cap interior carries pi r0^2
    double u = u01(rng) * area_;
    if (u < base_->total_area())
        return base_->sample(rng);
    int ci = std::min<int>(static_cast<int>((u - base_->total_area()) /
                                            (kPi * caps_[0].r0 * caps_[0].r0)),
                           static_cast<int>(caps_.size()) - 1);
    double r = caps_[static_cast<size_t>(ci)].r0 * std::sqrt(u01(rng));
    double th = kTwoPi * u01(rng);
    return PointCoord(ci + 1, r * std::cos(th), r * std::sin(th));
}

double pullback_defect_grid(const std::function<Vec2(const Vec2&)>& map,
                            const std::function<double(const Vec2&)>& density_out,
                            const std::function<double(const Vec2&)>& density_in,
                            const Vec2& lo, const Vec2& hi, int grid_density)
{
    if (grid_density < 2)
        throw PreconditionError("pullback_defect_grid: grid_density must be >= 2");
    const double scale = std::max(hi[0] - lo[0], hi[1] - lo[1]);
    const double h = 1e-4 * std::max(scale, 1e-3);
    double worst = 0.0;
    for (int i = 0; i < grid_density; i++) {
        for (int j = 0; j < grid_density; j++) {
            Vec2 p(lo[0] + (hi[0] - lo[0]) * (i + 0.5) / grid_density,
                   lo[1] + (hi[1] - lo[1]) * (j + 0.5) / grid_density);
            Mat2 jac;
            for (int k = 0; k < 2; k++) {
                Vec2 e = Vec2::Zero();
                e[k] = 1.0;
                // fourth-order central differences
                Vec2 d = (-map(p + 2.0 * h * e) + 8.0 * map(p + h * e) - 8.0 * map(p - h * e) +
                          map(p - 2.0 * h * e)) /
                         (12.0 * h);
                jac.col(k) = d;
            }
            double defect = std::abs(jac.determinant() * density_out(map(p)) - density_in(p));
            worst = std::max(worst, defect);
        }
    }
    return worst;
}

double verify_area_form(const Surface& s, int grid_density)
{
    if (grid_density < 2)
        throw PreconditionError("verify_area_form: grid_density must be >= 2");
    double worst = 0.0;
    const double span = 0.9 * s.collar_width();
    const Surface& collar_owner = s.is_capped() ? s.base() : s;
    for (const BoundaryCircle& bc : collar_owner.circles()) {
        int circle = bc.index;
        auto tau = [&](const Vec2& st) { return collar_owner.collar_point(circle, st[0], st[1]).xy; };
        auto rho = [&](const Vec2& xy) { return collar_owner.chart_density(0, xy); };
        worst = std::max(worst, pullback_defect_grid(tau, rho, [](const Vec2&) { return 1.0; },
                                                     Vec2(0.0, 0.0), Vec2(span, 1.0), grid_density));
    }
    if (s.is_capped()) {
        for (int i = 0; i < static_cast<int>(s.circles().size()); i++) {
            const CapChart c = s.cap(i);
            auto psi = [&](const Vec2& st) { return collar_to_cap(c, st[0], st[1]); };
            worst = std::max(worst,
                             pullback_defect_grid(psi, [](const Vec2&) { return 1.0; },
                                                  [](const Vec2&) { return 1.0; }, Vec2(0.0, 0.0),
                                                  Vec2(span, 1.0), grid_density));
        }
    }
    return worst;
}

double transition_roundtrip_defect(const Surface& s, int samples)
{
    if (!s.is_capped())
        return 0.0;
    double worst = 0.0;
    for (int i = 0; i < static_cast<int>(s.circles().size()); i++) {
        for (int k = 0; k < samples; k++) {
            double sc = s.collar_width() * (k + 0.5) / samples;
            double t = wrap_unit(0.37 * (k + 1));
            PointCoord p = s.collar_point(i, sc, t);
            auto incap = s.convert(p, i + 1);
            if (!incap)
                continue;
            auto back = s.convert(*incap, 0);
            if (!back)
                continue;
            worst = std::max(worst, (back->xy - p.xy).norm());
        }
    }
    return worst;
}

AreaIntegral area_integrate(const Surface& s, const std::function<double(const PointCoord&)>& f,
                            double abs_tol)
{
    auto panels = s.integration_panels();
    AreaIntegral out;
    double panel_tol = abs_tol / static_cast<double>(panels.size());
    for (const QuadPanel& panel : panels) {
        auto integrand = [&](double a, double b) {
            double w = panel.factor(a, b);
            return w == 0.0 ? 0.0 : w * f(panel.point(a, b));
        };
        QuadratureResult r = integrate_2d(integrand, panel_tol);
        out.value += r.value;
        out.achieved_tolerance += r.error_estimate;
        out.converged = out.converged && r.converged;
    }
    return out;
}

std::string Surface::describe() const
{
    std::ostringstream os;
    switch (kind_) {
    case SurfaceKind::Disk:
        os << "disk(area=" << area_ << ")";
        break;
    case SurfaceKind::Annulus:
        os << "annulus(area=" << area_ << ")";
        break;
    case SurfaceKind::Capped:
        os << "capped(" << base_->describe() << ", B=" << area_ << ", delta=" << collar_width_
           << ", r0=" << caps_[0].r0 << ", r1=" << caps_[0].r1 << ")";
        break;
    }
    return os.str();
}

} // namespace surfdyn
