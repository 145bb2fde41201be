#include "surfdyn/moser.hpp"

#include <cmath>
#include <sstream>

namespace surfdyn {

AreaForm surface_area_form(const Surface& s)
{
    const Surface* raw = &s;
    return AreaForm{[raw](const PointCoord& p) { return raw->chart_density(p.chart, p.xy); },
                    [](const PointCoord&) { return Vec2::Zero().eval(); }};
}

double circle_restriction_defect(const Surface& s, const OneForm& sigma, int samples)
{
    const Surface& owner = s.is_capped() ? s.base() : s;
    double worst = 0.0;
    for (const BoundaryCircle& bc : owner.circles()) {
        for (int k = 0; k < samples; k++) {
            double t = static_cast<double>(k) / samples;
            PointCoord p = owner.collar_point(bc.index, 0.0, t);
            Vec2 tangent = owner.collar_jacobian(bc.index, 0.0, t) * Vec2(0.0, 1.0);
            worst = std::max(worst, std::abs(sigma.cov(p).dot(tangent)));
        }
    }
    return worst;
}

namespace {

struct MoserField {
    const Surface* surface;
    const AreaForm* omega0;
    const AreaForm* omega1;
    const OneForm* sigma;

    double density(double t, const PointCoord& p) const
    {
        return (1.0 - t) * omega0->density(p) + t * omega1->density(p);
    }

    Vec2 velocity(double t, const PointCoord& p) const
    {
        Vec2 sg = sigma->cov(p);
        double rho = density(t, p);
        return Vec2(-sg[1] / rho, sg[0] / rho);
    }

    Mat2 velocity_jacobian(double t, const PointCoord& p, double h = 1e-6) const
    {
        if (sigma->has_derivative() && omega0->grad && omega1->grad) {
            Mat2 ds = sigma->dcov(p);
            double rho = density(t, p);
            Vec2 drho = ((1.0 - t) * omega0->grad(p) + t * omega1->grad(p)).eval();
            Vec2 v = velocity(t, p);
            Mat2 j;
            j.row(0) = -ds.row(1) / rho;
            j.row(1) = ds.row(0) / rho;
            j -= v * (drho.transpose() / rho);
            return j;
        }
        Mat2 j;
        for (int k = 0; k < 2; k++) {
            Vec2 e = Vec2::Zero();
            e[k] = 1.0;
            Vec2 vp = velocity(t, PointCoord(p.chart, p.xy + h * e));
            Vec2 vm = velocity(t, PointCoord(p.chart, p.xy - h * e));
            j.col(k) = (vp - vm) / (2.0 * h);
        }
        return j;
    }
};

struct MoserState {
    PointCoord p;
    Mat2 jacobian = Mat2::Identity();
};

void rk4_step(const MoserField& field, double t, double h, MoserState& st, bool want_jacobian)
{
    const Surface& s = *field.surface;
    auto f = [&](double tt, const Vec2& xy) {
        return field.velocity(tt, PointCoord(st.p.chart, xy));
    };
    Vec2 x = st.p.xy;
    Vec2 k1 = f(t, x);
    Vec2 k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
    Vec2 k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
    Vec2 k4 = f(t + h, x + h * k3);
    if (want_jacobian) {
        auto a = [&](double tt, const Vec2& xy) {
            return field.velocity_jacobian(tt, PointCoord(st.p.chart, xy));
        };
        Mat2 m1 = a(t, x) * st.jacobian;
        Mat2 m2 = a(t + 0.5 * h, x + 0.5 * h * k1) * (st.jacobian + 0.5 * h * m1);
        Mat2 m3 = a(t + 0.5 * h, x + 0.5 * h * k2) * (st.jacobian + 0.5 * h * m2);
        Mat2 m4 = a(t + h, x + h * k3) * (st.jacobian + h * m3);
        st.jacobian += (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4);
    }
    st.p.xy = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    PointCoord canon = s.canonical(st.p);
    if (canon.chart != st.p.chart) {
        if (want_jacobian)
            st.jacobian = (s.transition_jacobian(st.p, canon.chart) * st.jacobian).eval();
        st.p = canon;
    }
}

MoserState run_moser(const MoserField& field, int steps, double t0, double t1,
                     const PointCoord& start, bool want_jacobian)
{
    const Surface& s = *field.surface;
    MoserState st;
    st.p = s.canonical(start);
    Mat2 pre = Mat2::Identity();
    if (st.p.chart != start.chart)
        pre = s.transition_jacobian(start, st.p.chart);
    double h = (t1 - t0) / steps;
    for (int i = 0; i < steps; i++)
        rk4_step(field, t0 + i * h, h, st, want_jacobian);
    if (want_jacobian)
        st.jacobian = (st.jacobian * pre).eval();
    return st;
}

} // namespace

SurfaceMap moser_interpolate(std::shared_ptr<const Surface> s, const AreaForm& omega0,
                             const AreaForm& omega1, const OneForm& sigma, const MoserConfig& cfg)
{
    // equal total mass
    auto mass = [&](const AreaForm& w) {
        return area_integrate(*s,
                              [&](const PointCoord& p) {
                                  return w.density(p) / s->chart_density(p.chart, p.xy);
                              },
                              1e-11)
            .value;
    };
    double m0 = mass(omega0), m1 = mass(omega1);
    if (std::abs(m0 - m1) > cfg.area_check_tol) {
        std::ostringstream os;
        os << "moser_interpolate: forms have unequal total areas (" << m0 << " vs " << m1 << ")";
        throw PreconditionError(os.str());
    }
    // d sigma = omega1 - omega0 at sample points
    {
        std::mt19937_64 rng(4242);
        double worst = 0.0;
        for (int i = 0; i < cfg.check_samples; i++) {
            PointCoord p = s->sample(rng);
            worst = std::max(worst, std::abs(exterior_derivative(sigma, p) -
                                             (omega1.density(p) - omega0.density(p))));
        }
        if (worst > cfg.form_check_tol) {
            std::ostringstream os;
            os << "moser_interpolate: sigma is not a primitive of omega1 - omega0 (defect " << worst
               << ")";
            throw PreconditionError(os.str());
        }
    }
    double circle_defect = circle_restriction_defect(*s, sigma);
    if (circle_defect > cfg.form_check_tol) {
        std::ostringstream os;
        os << "moser_interpolate: sigma does not vanish on the boundary circles (defect "
           << circle_defect << ")";
        throw PreconditionError(os.str());
    }

    auto holder = std::make_shared<std::tuple<AreaForm, AreaForm, OneForm>>(omega0, omega1, sigma);
    const Surface* raw = s.get();
    int steps = cfg.steps;
    auto field_of = [raw, holder]() {
        return MoserField{raw, &std::get<0>(*holder), &std::get<1>(*holder), &std::get<2>(*holder)};
    };
    return SurfaceMap(
        s, MapRepresentation::MoserFlow, "moser",
        [field_of, steps](const PointCoord& p) {
            return run_moser(field_of(), steps, 0.0, 1.0, p, false).p;
        },
        [field_of, steps](const PointCoord& p) {
            return run_moser(field_of(), steps, 0.0, 1.0, p, true).jacobian;
        },
        [field_of, steps](const PointCoord& p) {
            return std::optional<PointCoord>(run_moser(field_of(), steps, 1.0, 0.0, p, false).p);
        });
}

double moser_pullback_defect(const SurfaceMap& tau, const AreaForm& omega0, const AreaForm& omega1,
                             int grid_density)
{
    const Surface& s = tau.surface();
    double worst = 0.0;
    // sample interior points of every chart through the integration panels
    for (const QuadPanel& panel : s.integration_panels()) {
        for (int i = 0; i < grid_density; i++) {
            for (int j = 0; j < grid_density; j++) {
                double a = (i + 0.5) / grid_density, b = (j + 0.5) / grid_density;
                if (panel.factor(a, b) == 0.0)
                    continue;
                PointCoord p = panel.point(a, b);
                PointCoord q = tau(p);
                double defect =
                    std::abs(tau.derivative(p).determinant() * omega1.density(q) - omega0.density(p));
                worst = std::max(worst, defect);
            }
        }
    }
    return worst;
}

} // namespace surfdyn
