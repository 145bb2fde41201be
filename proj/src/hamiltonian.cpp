#include "surfdyn/hamiltonian.hpp"

#include <cmath>
#include <sstream>

namespace surfdyn {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
} // namespace

Vec2 hamiltonian_vector_field(const Surface& s, const Hamiltonian& h, double time,
                              const PointCoord& p)
{
    Vec2 g = h.grad(time, p);
    double rho = s.chart_density(p.chart, p.xy);
    return Vec2(g[1] / rho, -g[0] / rho);
}

Mat2 hamiltonian_vector_field_jacobian(const Surface& s, const Hamiltonian& h, double time,
                                       const PointCoord& p)
{
    Mat2 hh = h.hess(time, p);
    double rho = s.chart_density(p.chart, p.xy);
    Mat2 j;
    j << hh(1, 0), hh(1, 1), -hh(0, 0), -hh(0, 1);
    return j / rho;
}

double boundary_constancy_defect(const Hamiltonian& h, const Surface& s, int samples,
                                 int time_samples)
{
    const Surface& owner = s.is_capped() ? s.base() : s;
    int nt = h.autonomous ? 1 : time_samples;
    double worst = 0.0;
    for (const BoundaryCircle& bc : owner.circles()) {
        for (int it = 0; it < nt; it++) {
            double time = static_cast<double>(it) / nt;
            double ref = h.value(time, owner.collar_point(bc.index, 0.0, 0.0));
            for (int k = 1; k < samples; k++) {
                double t = static_cast<double>(k) / samples;
                double v = h.value(time, owner.collar_point(bc.index, 0.0, t));
                worst = std::max(worst, std::abs(v - ref));
            }
        }
    }
    return worst;
}

namespace {

struct FlowState {
    PointCoord p;
    Mat2 jacobian = Mat2::Identity();
};

/* One implicit midpoint step from time `time` with step h, advancing the
   variational matrix by the Cayley transform of the midpoint linearization. */
void midpoint_step(const Surface& s, const Hamiltonian& ham, double time, double h,
                   const IntegratorConfig& cfg, FlowState& st, bool want_jacobian)
{
    const double t_mid = time + 0.5 * h;
    const Vec2 x = st.p.xy;
    Vec2 y = x + h * hamiltonian_vector_field(s, ham, time, st.p); // Euler predictor
    bool converged = false;
    double defect = 0.0;
    for (int it = 0; it < cfg.max_fixpoint_iters; it++) {
        PointCoord mid(st.p.chart, 0.5 * (x + y));
        Vec2 y_next = x + h * hamiltonian_vector_field(s, ham, t_mid, mid);
        defect = (y_next - y).norm();
        y = y_next;
        if (defect < cfg.fixpoint_tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "implicit midpoint: step-size failure, fixed point stalled at defect " << defect;
        throw NumericalError(os.str());
    }
    if (want_jacobian) {
        PointCoord mid(st.p.chart, 0.5 * (x + y));
        Mat2 a = 0.5 * h * hamiltonian_vector_field_jacobian(s, ham, t_mid, mid);
        Mat2 update = (Mat2::Identity() - a).inverse() * (Mat2::Identity() + a);
        st.jacobian = (update * st.jacobian).eval();
    }
    st.p.xy = y;
    // re-chart if the step crossed into another chart's preferred region
    PointCoord canon = s.canonical(st.p);
    if (canon.chart != st.p.chart) {
        if (want_jacobian)
            st.jacobian = (s.transition_jacobian(st.p, canon.chart) * st.jacobian).eval();
        st.p = canon;
    }
}

FlowState run_flow(const Surface& s, const Hamiltonian& ham, const IntegratorConfig& cfg,
                   double t0, double t1, const PointCoord& start, bool want_jacobian)
{
    FlowState st;
    st.p = s.canonical(start);
    Mat2 pre = Mat2::Identity();
    if (st.p.chart != start.chart)
        pre = s.transition_jacobian(start, st.p.chart);
    int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t1 - t0) * cfg.steps_per_unit)));
    double h = (t1 - t0) / steps;
    for (int i = 0; i < steps; i++)
        midpoint_step(s, ham, t0 + i * h, h, cfg, st, want_jacobian);
    if (want_jacobian)
        st.jacobian = (st.jacobian * pre).eval();
    return st;
}

} // namespace

SurfaceMap hamiltonian_flow(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                            const IntegratorConfig& cfg, double t0, double t1)
{
    if (cfg.steps_per_unit < 8)
        throw PreconditionError("integrator: step count must be at least 8 per unit time");
    const Surface* raw = s.get();
    Hamiltonian ham = h;
    IntegratorConfig c = cfg;
    std::ostringstream name;
    name << "flow[" << h.name << "," << t0 << "->" << t1 << "]";
    return SurfaceMap(
        s, MapRepresentation::HamiltonianTimeOne, name.str(),
        [raw, ham, c, t0, t1](const PointCoord& p) {
            return run_flow(*raw, ham, c, t0, t1, p, false).p;
        },
        [raw, ham, c, t0, t1](const PointCoord& p) {
            return run_flow(*raw, ham, c, t0, t1, p, true).jacobian;
        },
        [raw, ham, c, t0, t1](const PointCoord& p) {
            return std::optional<PointCoord>(run_flow(*raw, ham, c, t1, t0, p, false).p);
        });
}

SurfaceMap hamiltonian_time_one(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                                const IntegratorConfig& cfg)
{
    double defect = boundary_constancy_defect(h, *s);
    if (defect > 1e-10) {
        std::ostringstream os;
        os << "hamiltonian_time_one: H is not locally constant on the boundary (defect " << defect
           << ")";
        throw PreconditionError(os.str());
    }
    return hamiltonian_flow(std::move(s), h, cfg, 0.0, 1.0);
}

double integrator_certificate(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                              const IntegratorConfig& cfg, int samples, unsigned seed)
{
    IntegratorConfig coarse = cfg;
    coarse.steps_per_unit = std::max(8, cfg.steps_per_unit / 2);
    SurfaceMap fine = hamiltonian_flow(s, h, cfg, 0.0, 1.0);
    SurfaceMap half = hamiltonian_flow(s, h, coarse, 0.0, 1.0);
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; i++) {
        PointCoord p = s->sample(rng);
        worst = std::max(worst, s->chart_delta(fine(p), half(p)).norm());
    }
    return worst;
}

Hamiltonian expression_hamiltonian(const Surface& s, const std::string& source)
{
    if (s.is_capped())
        throw PreconditionError("expression_hamiltonian: single-chart surfaces only");
    Expr e = Expr::parse(source);
    Hamiltonian h;
    h.name = source;
    h.autonomous = !e.uses(ExprVar::Time);

    if (s.kind() == SurfaceKind::Disk) {
        if (e.uses(ExprVar::S) || e.uses(ExprVar::T))
            throw PreconditionError("expression_hamiltonian: s and t are not defined on the disk");
        Expr d1 = e.diff(ExprVar::R2);
        Expr d2 = d1.diff(ExprVar::R2);
        h.value = [e](double time, const PointCoord& p) {
            return e.eval({p.xy.squaredNorm(), 0, 0, time});
        };
        h.grad = [d1](double time, const PointCoord& p) {
            double g = d1.eval({p.xy.squaredNorm(), 0, 0, time});
            return Vec2(2.0 * g * p.xy[0], 2.0 * g * p.xy[1]);
        };
        h.hess = [d1, d2](double time, const PointCoord& p) {
            std::array<double, 4> v{p.xy.squaredNorm(), 0, 0, time};
            double g = d1.eval(v), gg = d2.eval(v);
            double x = p.xy[0], y = p.xy[1];
            Mat2 m;
            m << 4.0 * gg * x * x + 2.0 * g, 4.0 * gg * x * y, 4.0 * gg * x * y,
                4.0 * gg * y * y + 2.0 * g;
            return m;
        };
        return h;
    }

    if (e.uses(ExprVar::R2))
        throw PreconditionError("expression_hamiltonian: r2 is not defined on the annulus");
    Expr ds = e.diff(ExprVar::S), dt = e.diff(ExprVar::T);
    Expr dss = ds.diff(ExprVar::S), dst = ds.diff(ExprVar::T), dtt = dt.diff(ExprVar::T);
    h.value = [e](double time, const PointCoord& p) { return e.eval({0, p.xy[0], p.xy[1], time}); };
    h.grad = [ds, dt](double time, const PointCoord& p) {
        std::array<double, 4> v{0, p.xy[0], p.xy[1], time};
        return Vec2(ds.eval(v), dt.eval(v));
    };
    h.hess = [dss, dst, dtt](double time, const PointCoord& p) {
        std::array<double, 4> v{0, p.xy[0], p.xy[1], time};
        Mat2 m;
        double mixed = dst.eval(v);
        m << dss.eval(v), mixed, mixed, dtt.eval(v);
        return m;
    };
    return h;
}

Hamiltonian flattened_perturbation(const Surface& s, double k, int m, double margin)
{
    if (s.kind() != SurfaceKind::Annulus)
        throw PreconditionError("flattened_perturbation: annulus surfaces only");
    const double w = s.width();
    if (!(margin > 0 && 2.5 * margin < w))
        throw PreconditionError("flattened_perturbation: margin too large for the annulus width");
    // bump(s) = smoothstep((s - margin)/margin) * smoothstep((W - margin - s)/margin)
    auto bump = [margin, w](double sc, double* d1, double* d2) {
        double qa = (sc - margin) / margin;
        double qb = (w - margin - sc) / margin;
        double a = smoothstep(qa), b = smoothstep(qb);
        double ap = smoothstep_deriv(qa) / margin, bp = -smoothstep_deriv(qb) / margin;
        if (d1)
            *d1 = ap * b + a * bp;
        if (d2) {
            // second derivative of the quintic smoothstep
            auto sdd = [](double x) {
                if (x <= 0.0 || x >= 1.0)
                    return 0.0;
                return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
            };
            double app = sdd(qa) / (margin * margin), bpp = sdd(qb) / (margin * margin);
            *d2 = app * b + 2.0 * ap * bp + a * bpp;
        }
        return a * b;
    };
    Hamiltonian h;
    std::ostringstream name;
    name << "kick(k=" << k << ",m=" << m << ")";
    h.name = name.str();
    h.autonomous = true;
    double om = kTwoPi * m;
    h.value = [k, om, bump](double, const PointCoord& p) {
        return k * bump(p.xy[0], nullptr, nullptr) * std::cos(om * p.xy[1]);
    };
    h.grad = [k, om, bump](double, const PointCoord& p) {
        double d1 = 0;
        double b = bump(p.xy[0], &d1, nullptr);
        return Vec2(k * d1 * std::cos(om * p.xy[1]), -k * b * om * std::sin(om * p.xy[1]));
    };
    h.hess = [k, om, bump](double, const PointCoord& p) {
        double d1 = 0, d2 = 0;
        double b = bump(p.xy[0], &d1, &d2);
        double c = std::cos(om * p.xy[1]), sn = std::sin(om * p.xy[1]);
        Mat2 m2;
        m2 << k * d2 * c, -k * d1 * om * sn, -k * d1 * om * sn, -k * b * om * om * c;
        return m2;
    };
    return h;
}

SurfaceMap perturbed_twist_map(std::shared_ptr<const Surface> s, double rho, double c, double kick,
                               int kick_mode, const IntegratorConfig& cfg)
{
    SurfaceMap twist = shear_map(s, rho, c);
    Hamiltonian k = flattened_perturbation(*s, kick, kick_mode, 0.15 * s->width());
    SurfaceMap kickmap = hamiltonian_time_one(s, k, cfg);
    return compose(twist, kickmap);
}

} // namespace surfdyn
