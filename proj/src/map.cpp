#include "surfdyn/map.hpp"

#include <cmath>
#include <sstream>

namespace surfdyn {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

SurfaceMap::SurfaceMap(std::shared_ptr<const Surface> surface, MapRepresentation rep,
                       std::string name, std::function<PointCoord(const PointCoord&)> eval,
                       std::function<Mat2(const PointCoord&)> deriv,
                       std::function<std::optional<PointCoord>(const PointCoord&)> inverse)
    : surface_(std::move(surface)), rep_(rep), name_(std::move(name)), eval_(std::move(eval)),
      deriv_(std::move(deriv)), inverse_(std::move(inverse))
{
}

std::optional<PointCoord> SurfaceMap::inverse(const PointCoord& p) const
{
    if (!inverse_)
        return std::nullopt;
    return inverse_(p);
}

SurfaceMap identity_map(std::shared_ptr<const Surface> s)
{
    const Surface* raw = s.get();
    return SurfaceMap(
        s, MapRepresentation::ClosedForm, "identity",
        [raw](const PointCoord& p) { return raw->canonical(p); },
        [raw](const PointCoord& p) {
            PointCoord q = raw->canonical(p);
            return q.chart == p.chart ? Mat2::Identity().eval() : raw->transition_jacobian(p, q.chart);
        },
        [raw](const PointCoord& p) { return std::optional<PointCoord>(raw->canonical(p)); });
}

SurfaceMap rotation_map(std::shared_ptr<const Surface> s, double alpha)
{
    std::ostringstream name;
    name << "rotation(" << alpha << ")";
    if (s->kind() == SurfaceKind::Disk) {
        Mat2 r = rotation_matrix(kTwoPi * alpha);
        Mat2 rinv = rotation_matrix(-kTwoPi * alpha);
        return SurfaceMap(
            s, MapRepresentation::ClosedForm, name.str(),
            [r](const PointCoord& p) { return PointCoord(0, (r * p.xy).eval()); },
            [r](const PointCoord&) { return r; },
            [rinv](const PointCoord& p) {
                return std::optional<PointCoord>(PointCoord(0, (rinv * p.xy).eval()));
            });
    }
    if (s->kind() == SurfaceKind::Annulus) {
        return SurfaceMap(
            s, MapRepresentation::ClosedForm, name.str(),
            [alpha](const PointCoord& p) {
                return PointCoord(0, p.xy[0], wrap_unit(p.xy[1] + alpha));
            },
            [](const PointCoord&) { return Mat2::Identity().eval(); },
            [alpha](const PointCoord& p) {
                return std::optional<PointCoord>(PointCoord(0, p.xy[0], wrap_unit(p.xy[1] - alpha)));
            });
    }
    // capped surface: extend the base rotation over the caps
    auto base = std::make_shared<Surface>(s->base());
    return extend_boundary_rotation(rotation_map(base, alpha), s);
}

namespace {

/* Jacobian of (x,y) -> R(Theta(u)) (x,y) with u = x^2 + y^2, given Theta and
   its derivative in u. */
Mat2 twist_jacobian(const Vec2& xy, double theta, double theta_u)
{
    double c = std::cos(theta), sn = std::sin(theta);
    double x = xy[0], y = xy[1];
    Mat2 j;
    j(0, 0) = c + (-sn * x - c * y) * 2.0 * x * theta_u;
    j(0, 1) = -sn + (-sn * x - c * y) * 2.0 * y * theta_u;
    j(1, 0) = sn + (c * x - sn * y) * 2.0 * x * theta_u;
    j(1, 1) = c + (c * x - sn * y) * 2.0 * y * theta_u;
    return j;
}

} // namespace

SurfaceMap radial_twist_map(std::shared_ptr<const Surface> s, std::vector<double> theta_coeffs)
{
    if (s->kind() != SurfaceKind::Disk)
        throw PreconditionError("radial_twist_map: disk surfaces only");
    auto theta = [theta_coeffs](double u) {
        double v = 0.0;
        for (size_t k = theta_coeffs.size(); k-- > 0;)
            v = v * u + theta_coeffs[k];
        return v;
    };
    auto theta_u = [theta_coeffs](double u) {
        double v = 0.0;
        for (size_t k = theta_coeffs.size(); k-- > 1;)
            v = v * u + static_cast<double>(k) * theta_coeffs[k];
        return v;
    };
    return SurfaceMap(
        s, MapRepresentation::ClosedForm, "radial-twist",
        [theta](const PointCoord& p) {
            double u = p.xy.squaredNorm();
            return PointCoord(0, (rotation_matrix(theta(u)) * p.xy).eval());
        },
        [theta, theta_u](const PointCoord& p) {
            double u = p.xy.squaredNorm();
            return twist_jacobian(p.xy, theta(u), theta_u(u));
        },
        [theta](const PointCoord& p) {
            double u = p.xy.squaredNorm();
            return std::optional<PointCoord>(PointCoord(0, (rotation_matrix(-theta(u)) * p.xy).eval()));
        });
}

SurfaceMap flat_twist_map(std::shared_ptr<const Surface> s, double theta_inner, double theta_outer,
                          double r_lo, double r_hi)
{
    if (s->kind() != SurfaceKind::Disk)
        throw PreconditionError("flat_twist_map: disk surfaces only");
    if (!(0.0 < r_lo && r_lo < r_hi && r_hi < 1.0))
        throw PreconditionError("flat_twist_map: need 0 < r_lo < r_hi < 1");
    auto profile = [=](double u, double* dtheta_du) {
        double r = std::sqrt(u);
        double q = (r - r_lo) / (r_hi - r_lo);
        double th = theta_outer + (theta_inner - theta_outer) * (1.0 - smoothstep(q));
        if (dtheta_du) {
            double dq = r > 0 ? 1.0 / ((r_hi - r_lo) * 2.0 * r) : 0.0;
            *dtheta_du = -(theta_inner - theta_outer) * smoothstep_deriv(q) * dq;
        }
        return th;
    };
    return SurfaceMap(
        s, MapRepresentation::ClosedForm, "flat-twist",
        [profile](const PointCoord& p) {
            double th = profile(p.xy.squaredNorm(), nullptr);
            return PointCoord(0, (rotation_matrix(th) * p.xy).eval());
        },
        [profile](const PointCoord& p) {
            double du = 0;
            double th = profile(p.xy.squaredNorm(), &du);
            return twist_jacobian(p.xy, th, du);
        },
        [profile](const PointCoord& p) {
            double th = profile(p.xy.squaredNorm(), nullptr);
            return std::optional<PointCoord>(PointCoord(0, (rotation_matrix(-th) * p.xy).eval()));
        });
}

SurfaceMap shear_map(std::shared_ptr<const Surface> s, double rho, double c)
{
    if (s->kind() != SurfaceKind::Annulus)
        throw PreconditionError("shear_map: annulus surfaces only");
    std::ostringstream name;
    name << "shear(rho=" << rho << ",c=" << c << ")";
    Mat2 j;
    j << 1, 0, c, 1;
    Mat2 jinv;
    jinv << 1, 0, -c, 1;
    return SurfaceMap(
        s, MapRepresentation::ClosedForm, name.str(),
        [rho, c](const PointCoord& p) {
            return PointCoord(0, p.xy[0], wrap_unit(p.xy[1] + rho + c * p.xy[0]));
        },
        [j](const PointCoord&) { return j; },
        [rho, c](const PointCoord& p) {
            return std::optional<PointCoord>(
                PointCoord(0, p.xy[0], wrap_unit(p.xy[1] - rho - c * p.xy[0])));
        });
}

SurfaceMap compose(const SurfaceMap& f, const SurfaceMap& g)
{
    if (&f.surface() != &g.surface() && f.surface().describe() != g.surface().describe())
        throw PreconditionError("compose: maps live on different surfaces");
    SurfaceMap fc = f, gc = g;
    std::function<std::optional<PointCoord>(const PointCoord&)> inv;
    if (f.has_inverse() && g.has_inverse()) {
        inv = [fc, gc](const PointCoord& p) -> std::optional<PointCoord> {
            auto q = fc.inverse(p);
            if (!q)
                return std::nullopt;
            return gc.inverse(*q);
        };
    }
    return SurfaceMap(
        f.surface_ptr(), MapRepresentation::Composition, f.name() + " . " + g.name(),
        [fc, gc](const PointCoord& p) { return fc(gc(p)); },
        [fc, gc](const PointCoord& p) {
            PointCoord mid = gc(p);
            return (fc.derivative(mid) * gc.derivative(p)).eval();
        },
        inv);
}

double area_preservation_defect(const SurfaceMap& phi, const PointCoord& p)
{
    const Surface& s = phi.surface();
    PointCoord q = phi(p);
    Mat2 j = phi.derivative(p);
    double rho_in = s.chart_density(p.chart, p.xy);
    double rho_out = s.chart_density(q.chart, q.xy);
    return std::abs(j.determinant() * rho_out / rho_in - 1.0);
}

double area_preservation_defect(const SurfaceMap& phi, int samples, unsigned seed)
{
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; i++)
        worst = std::max(worst, area_preservation_defect(phi, phi.surface().sample(rng)));
    return worst;
}

Mat2 derivative_fd(const SurfaceMap& phi, const PointCoord& p, double h)
{
    const Surface& s = phi.surface();
    PointCoord q0 = phi(p);
    Mat2 j;
    for (int k = 0; k < 2; k++) {
        Vec2 e = Vec2::Zero();
        e[k] = 1.0;
        PointCoord qp = phi(PointCoord(p.chart, p.xy + h * e));
        PointCoord qm = phi(PointCoord(p.chart, p.xy - h * e));
        j.col(k) = (s.chart_delta(q0, qp) - s.chart_delta(q0, qm)) / (2.0 * h);
    }
    return j;
}

double derivative_consistency_defect(const SurfaceMap& phi, int samples, unsigned seed)
{
    std::mt19937_64 rng(seed);
    const Surface& s = phi.surface();
    double worst = 0.0;
    for (int i = 0; i < samples; i++) {
        PointCoord p = s.canonical(s.sample(rng));
        Mat2 analytic = phi.derivative(p);
        PointCoord q = phi(p);
        Mat2 fd = derivative_fd(phi, p);
        // derivative_fd differentiates into q's chart; align the analytic one
        (void)q;
        worst = std::max(worst, (analytic - fd).cwiseAbs().maxCoeff());
    }
    return worst;
}

std::vector<int> boundary_permutation(const SurfaceMap& phi, int samples_per_circle, double tol)
{
    const Surface& s = phi.surface();
    const int n = s.boundary_count();
    std::vector<int> sigma(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; i++) {
        int target = -1;
        for (int k = 0; k < samples_per_circle; k++) {
            double t = (k + 0.25) / samples_per_circle;
            PointCoord q = phi(s.collar_point(i, 0.0, t));
            int best = -1;
            double best_depth = tol;
            for (int j = 0; j < n; j++) {
                auto cc = s.collar_coords(j, q);
                if (cc && std::abs(cc->first) < best_depth) {
                    best_depth = std::abs(cc->first);
                    best = j;
                }
            }
            if (best < 0)
                throw PreconditionError("boundary_permutation: circle image strays off the circle family");
            if (target < 0)
                target = best;
            else if (target != best)
                throw PreconditionError("boundary_permutation: circle image is split across circles");
        }
        sigma[static_cast<size_t>(i)] = target;
    }
    std::vector<bool> seen(static_cast<size_t>(n), false);
    for (int v : sigma) {
        if (v < 0 || seen[static_cast<size_t>(v)])
            throw PreconditionError("boundary_permutation: not a permutation");
        seen[static_cast<size_t>(v)] = true;
    }
    return sigma;
}

PointCoord iterate(const SurfaceMap& phi, PointCoord p, int n)
{
    for (int i = 0; i < n; i++)
        p = phi(p);
    return p;
}

Mat2 orbit_monodromy(const SurfaceMap& phi, const PointCoord& start, int period)
{
    Mat2 m = Mat2::Identity();
    PointCoord p = start;
    for (int i = 0; i < period; i++) {
        m = (phi.derivative(p) * m).eval();
        p = phi(p);
    }
    if (p.chart != start.chart)
        m = (phi.surface().transition_jacobian(p, start.chart) * m).eval();
    return m;
}

CollarRotationData certify_collar_rotation(const SurfaceMap& phi0, int samples_per_circle,
                                           double tol)
{
    const Surface& z = phi0.surface();
    if (z.is_capped())
        throw PreconditionError("certify_collar_rotation: expected a surface with boundary");
    CollarRotationData data;
    data.permutation = boundary_permutation(phi0, samples_per_circle, 1e-6);
    const double depths[2] = {0.25 * z.collar_width(), 0.5 * z.collar_width()};
    for (int i = 0; i < z.boundary_count(); i++) {
        int j = data.permutation[static_cast<size_t>(i)];
        // estimate rho from one sample, then measure the worst deviation
        PointCoord q0 = phi0(z.collar_point(i, depths[0], 0.0));
        auto cc0 = z.collar_coords(j, q0);
        if (!cc0)
            throw PreconditionError("unsupported-extension: image leaves the target collar");
        double rho = cc0->second;
        for (double depth : depths) {
            for (int k = 0; k < samples_per_circle; k++) {
                double t = (k + 0.125) / samples_per_circle;
                PointCoord q = phi0(z.collar_point(i, depth, t));
                auto cc = z.collar_coords(j, q);
                if (!cc)
                    throw PreconditionError("unsupported-extension: image leaves the target collar");
                double ds = cc->first - depth;
                double dt = wrap_half(cc->second - t - rho);
                data.defect = std::max(data.defect, std::max(std::abs(ds), std::abs(dt)));
            }
        }
        data.rotations.push_back(rho);
    }
    if (data.defect > tol)
        throw PreconditionError("unsupported-extension: map is not a rigid rotation on the boundary collars");
    return data;
}

SurfaceMap extend_boundary_rotation(const SurfaceMap& phi0, std::shared_ptr<const Surface> capped)
{
    if (!capped->is_capped())
        throw PreconditionError("extend_boundary_rotation: target surface is not capped");
    if (capped->base().describe() != phi0.surface().describe())
        throw PreconditionError("extend_boundary_rotation: capped surface was not built over this base");
    CollarRotationData collar = certify_collar_rotation(phi0);

    const Surface* c = capped.get();
    SurfaceMap base_map = phi0;
    auto sigma = collar.permutation;
    auto rho = collar.rotations;

    auto eval = [c, base_map, sigma, rho](const PointCoord& p0) -> PointCoord {
        PointCoord p = c->canonical(p0);
        if (p.chart >= 1) {
            int i = p.chart - 1;
            double r = p.xy.norm();
            if (r < c->cap(i).r0) {
                // cap interior: rigid rotation into the image cap
                Vec2 xy = rotation_matrix(kTwoPi * rho[static_cast<size_t>(i)]) * p.xy;
                return PointCoord(sigma[static_cast<size_t>(i)] + 1, xy);
            }
            p = *c->convert(p, 0);
        }
        PointCoord q = base_map(PointCoord(0, p.xy));
        return c->canonical(PointCoord(0, q.xy));
    };
    auto deriv = [c, base_map, sigma, rho](const PointCoord& p0) -> Mat2 {
        PointCoord p = c->canonical(p0);
        Mat2 pre = p.chart == p0.chart ? Mat2::Identity() : c->transition_jacobian(p0, p.chart);
        if (p.chart >= 1) {
            int i = p.chart - 1;
            double r = p.xy.norm();
            if (r < c->cap(i).r0)
                return (rotation_matrix(kTwoPi * rho[static_cast<size_t>(i)]) * pre).eval();
            Mat2 t_in = c->transition_jacobian(p, 0);
            pre = (t_in * pre).eval();
            p = *c->convert(p, 0);
        }
        PointCoord q = base_map(PointCoord(0, p.xy));
        Mat2 j = base_map.derivative(PointCoord(0, p.xy));
        PointCoord qc = c->canonical(PointCoord(0, q.xy));
        Mat2 post = qc.chart == 0 ? Mat2::Identity() : c->transition_jacobian(PointCoord(0, q.xy), qc.chart);
        return (post * j * pre).eval();
    };
    std::function<std::optional<PointCoord>(const PointCoord&)> inv;
    if (phi0.has_inverse()) {
        std::vector<int> sigma_inv(sigma.size());
        for (size_t i = 0; i < sigma.size(); i++)
            sigma_inv[static_cast<size_t>(sigma[i])] = static_cast<int>(i);
        inv = [c, base_map, sigma_inv, rho](const PointCoord& p0) -> std::optional<PointCoord> {
            PointCoord p = c->canonical(p0);
            if (p.chart >= 1) {
                int j = p.chart - 1;
                double r = p.xy.norm();
                if (r < c->cap(j).r0) {
                    int i = sigma_inv[static_cast<size_t>(j)];
                    Vec2 xy = rotation_matrix(-kTwoPi * rho[static_cast<size_t>(i)]) * p.xy;
                    return PointCoord(i + 1, xy);
                }
                p = *c->convert(p, 0);
            }
            auto q = base_map.inverse(PointCoord(0, p.xy));
            if (!q)
                return std::nullopt;
            return c->canonical(PointCoord(0, q->xy));
        };
    }
    return SurfaceMap(capped, MapRepresentation::CappedExtension, phi0.name() + " capped", eval,
                      deriv, inv);
}

} // namespace surfdyn
