#include "surfdyn/flux.hpp"
#include "surfdyn/quadrature.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace surfdyn {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
} // namespace

double cycle_closure_defect(const Surface& s, const CycleSpec& cycle)
{
    PointCoord a = cycle.curve(0.0), b = cycle.curve(1.0);
    if (!cycle.relative)
        return s.distance(a, b);
    const Surface& owner = s.is_capped() ? s.base() : s;
    auto end_gap = [&](const PointCoord& p) {
        double best = std::numeric_limits<double>::infinity();
        for (const BoundaryCircle& bc : owner.circles()) {
            auto cc = s.is_capped() ? s.collar_coords(bc.index, p) : owner.collar_coords(bc.index, p);
            if (cc)
                best = std::min(best, std::abs(cc->first));
        }
        return best;
    };
    return std::max(end_gap(a), end_gap(b));
}

CycleSpec core_cycle(const Surface& s)
{
    if (s.kind() != SurfaceKind::Annulus)
        throw PreconditionError("core_cycle: annulus surfaces only");
    double mid = 0.5 * s.width();
    CycleSpec c;
    c.id = "core";
    c.homology_label = "core";
    c.curve = [mid](double v) { return PointCoord(0, mid, wrap_unit(v)); };
    c.velocity = [](double) { return Vec2(0.0, 1.0); };
    return c;
}

CycleSpec gate_cycle(const Surface& s, double t0)
{
    if (s.kind() != SurfaceKind::Annulus)
        throw PreconditionError("gate_cycle: annulus surfaces only");
    double w = s.width();
    CycleSpec c;
    std::ostringstream id;
    id << "gate@" << t0;
    c.id = id.str();
    c.homology_label = "gate";
    c.relative = true;
    c.curve = [w, t0](double v) { return PointCoord(0, w * v, t0); };
    c.velocity = [w](double) { return Vec2(w, 0.0); };
    return c;
}

CycleSpec boundary_cycle(const Surface& s, int circle)
{
    const Surface* owner = s.is_capped() ? &s.base() : &s;
    if (circle < 0 || circle >= owner->boundary_count())
        throw PreconditionError("boundary_cycle: no such circle");
    CycleSpec c;
    std::ostringstream id;
    id << "boundary-" << circle;
    c.id = id.str();
    c.homology_label = s.is_capped() ? "lagrangian" : "boundary";
    c.curve = [owner, circle](double v) { return owner->collar_point(circle, 0.0, v); };
    c.velocity = nullptr; // finite differences of the collar parameterization
    return c;
}

CycleSpec polyline_cycle(std::string id, std::vector<PointCoord> points, bool relative)
{
    if (points.size() < 2)
        throw PreconditionError("polyline_cycle: need at least two points");
    CycleSpec c;
    c.id = std::move(id);
    c.relative = relative;
    c.smooth_segments = relative ? static_cast<int>(points.size()) - 1
                                 : static_cast<int>(points.size());
    size_t segs = relative ? points.size() - 1 : points.size();
    auto pts = std::make_shared<std::vector<PointCoord>>(std::move(points));
    c.curve = [pts, segs](double v) {
        v = std::min(std::max(v, 0.0), 1.0);
        double x = v * static_cast<double>(segs);
        size_t i = std::min(static_cast<size_t>(x), segs - 1);
        double u = x - static_cast<double>(i);
        const PointCoord& a = (*pts)[i];
        const PointCoord& b = (*pts)[(i + 1) % pts->size()];
        if (a.chart != b.chart)
            throw PreconditionError("polyline_cycle: segment crosses charts");
        return PointCoord(a.chart, a.xy + u * (b.xy - a.xy));
    };
    c.velocity = [pts, segs](double v) {
        v = std::min(std::max(v, 0.0), 1.0);
        double x = v * static_cast<double>(segs);
        size_t i = std::min(static_cast<size_t>(x), segs - 1);
        const PointCoord& a = (*pts)[i];
        const PointCoord& b = (*pts)[(i + 1) % pts->size()];
        return ((b.xy - a.xy) * static_cast<double>(segs)).eval();
    };
    return c;
}

Isotopy identity_isotopy()
{
    return Isotopy{"identity", [](double, const PointCoord&) { return Vec2::Zero().eval(); },
                   [](double, const PointCoord& p) { return p; }};
}

Isotopy shear_isotopy(std::shared_ptr<const Surface> s, double rho, double c)
{
    if (s->kind() != SurfaceKind::Annulus)
        throw PreconditionError("shear_isotopy: annulus surfaces only");
    std::ostringstream name;
    name << "shear(rho=" << rho << ",c=" << c << ")";
    return Isotopy{name.str(),
                   [rho, c](double, const PointCoord& p) { return Vec2(0.0, rho + c * p.xy[0]); },
                   [rho, c](double u, const PointCoord& p) {
                       return PointCoord(0, p.xy[0], wrap_unit(p.xy[1] + u * (rho + c * p.xy[0])));
                   }};
}

Isotopy hamiltonian_isotopy(std::shared_ptr<const Surface> s, const Hamiltonian& h,
                            const IntegratorConfig& cfg)
{
    Hamiltonian ham = h;
    const Surface* raw = s.get();
    auto sp = s;
    IntegratorConfig c = cfg;
    return Isotopy{"hamiltonian[" + h.name + "]",
                   [raw, ham](double u, const PointCoord& p) {
                       return hamiltonian_vector_field(*raw, ham, u, p);
                   },
                   [sp, ham, c](double u, const PointCoord& p) {
                       if (u == 0.0)
                           return sp->canonical(p);
                       return hamiltonian_flow(sp, ham, c, 0.0, u)(p);
                   }};
}

namespace {

Vec2 cycle_velocity(const Surface& s, const CycleSpec& cycle, double v)
{
    if (cycle.velocity)
        return cycle.velocity(v);
    const double h = 1e-6;
    PointCoord p0 = cycle.curve(v);
    PointCoord pp = cycle.curve(v + h), pm = cycle.curve(v - h);
    return (s.chart_delta(p0, pp) - s.chart_delta(p0, pm)) / (2.0 * h);
}

} // namespace

double isotopy_flux(const Surface& s, const Isotopy& iso, const CycleSpec& cycle, double abs_tol)
{
    double closure = cycle_closure_defect(s, cycle);
    if (closure > 1e-10) {
        std::ostringstream os;
        os << "isotopy_flux: cycle '" << cycle.id << "' does not close up (defect " << closure
           << ")";
        throw PreconditionError(os.str());
    }
    auto integrand = [&](double u, double v) {
        PointCoord p = cycle.curve(v);
        Vec2 gamma_dot = cycle_velocity(s, cycle, v);
        Vec2 x = iso.field(u, p);
        double rho = s.chart_density(p.chart, p.xy);
        // Omega(gamma', X) = rho * det[gamma' X]
        return rho * (gamma_dot[0] * x[1] - gamma_dot[1] * x[0]);
    };
    // integrate per smooth piece: polylines kink at their corners
    const int segs = std::max(1, cycle.smooth_segments);
    double total = 0.0;
    for (int k = 0; k < segs; k++) {
        double a = static_cast<double>(k) / segs, len = 1.0 / segs;
        QuadratureResult r = integrate_2d(
            [&](double u, double v) { return len * integrand(u, a + len * v); }, abs_tol / segs);
        if (!r.converged && r.error_estimate > 10.0 * abs_tol) {
            std::ostringstream os;
            os << "isotopy_flux: quadrature did not converge (estimate " << r.error_estimate << ")";
            throw NumericalError(os.str());
        }
        total += r.value;
    }
    return total;
}

double sweep_area(const Surface& s, const Isotopy& iso, const CycleSpec& cycle, int u_panels,
                  double abs_tol)
{
    if (!iso.flow)
        throw PreconditionError("sweep_area: isotopy does not expose its flow");
    // integral of Omega over the swept chain Phi(u, v) = phi^u(gamma(v))
    auto integrand = [&](double u, double v) {
        PointCoord g = cycle.curve(v);
        PointCoord p = iso.flow(u, g);
        Vec2 x = iso.field(u, p);
        const double h = 1e-6;
        PointCoord pp = iso.flow(u, cycle.curve(v + h));
        PointCoord pm = iso.flow(u, cycle.curve(v - h));
        Vec2 dv = (s.chart_delta(p, pp) - s.chart_delta(p, pm)) / (2.0 * h);
        double rho = s.chart_density(p.chart, p.xy);
        return rho * (dv[0] * x[1] - dv[1] * x[0]);
    };
    (void)u_panels;
    QuadratureResult r = integrate_2d(integrand, abs_tol);
    return r.value;
}

RationalApproximation rational_approximation(double x, long q_max, double tol)
{
    RationalApproximation out;
    if (!std::isfinite(x) || q_max < 1) {
        out.verdict = RationalityVerdict::Undecided;
        return out;
    }
    double n = std::floor(x);
    double frac = x - n;
    long best_p = 0, best_q = 1;
    double best_err = std::abs(frac);
    long p0 = 1, q0 = 0, p1 = 0, q1 = 1; // p1/q1 = 0/1 is the first convergent
    double y = frac;
    for (int it = 0; it < 64; it++) {
        if (y <= 0)
            break;
        double inv = 1.0 / y;
        if (inv > 9.0e18)
            break;
        long a = static_cast<long>(std::floor(inv));
        out.continued_fraction.push_back(a);
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        if (q2 > q_max) {
            // largest semiconvergent with denominator within the bound
            long m = (q_max - q0) / q1;
            if (m > 0) {
                long ps = m * p1 + p0, qs = m * q1 + q0;
                double err = std::abs(frac - static_cast<double>(ps) / static_cast<double>(qs));
                if (err < best_err) {
                    best_err = err;
                    best_p = ps;
                    best_q = qs;
                }
            }
            break;
        }
        double err = std::abs(frac - static_cast<double>(p2) / static_cast<double>(q2));
        if (err < best_err) {
            best_err = err;
            best_p = p2;
            best_q = q2;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        y = inv - static_cast<double>(a);
        if (err == 0.0)
            break;
    }
    long g = std::gcd(std::abs(best_p), best_q);
    if (g > 1) {
        best_p /= g;
        best_q /= g;
    }
    out.p = best_p + static_cast<long>(n) * best_q;
    out.q = best_q;
    out.error = best_err;
    out.verdict = best_err < tol ? RationalityVerdict::Rational
                                 : RationalityVerdict::IrrationalWithinTolerance;
    return out;
}

FluxReport rationality_verdict(const std::vector<std::pair<std::string, double>>& fluxes,
                               double area, long q_max, double tol)
{
    if (q_max < 1 || tol <= 0)
        throw PreconditionError("rationality_verdict: need q_max >= 1 and tol > 0");
    if (area <= 0)
        throw PreconditionError("rationality_verdict: area must be positive");
    FluxReport rep;
    rep.area = area;
    rep.q_max = q_max;
    rep.tol = tol;
    rep.all_rational = true;
    rep.all_zero = true;
    for (const auto& [id, flux] : fluxes) {
        FluxEntry e;
        e.cycle_id = id;
        e.flux = flux;
        e.ratio = flux / area;
        e.approx = rational_approximation(e.ratio, q_max, tol);
        rep.all_rational = rep.all_rational && e.approx.verdict == RationalityVerdict::Rational;
        rep.all_zero = rep.all_zero && std::abs(flux) < tol;
        rep.entries.push_back(e);
    }
    return rep;
}

bool rationality_compatible(const FluxReport& base_report, const FluxReport& capped_report,
                            std::string* message)
{
    double ratio = capped_report.area / base_report.area;
    RationalApproximation ar = rational_approximation(ratio, capped_report.q_max, capped_report.tol);
    if (ar.verdict != RationalityVerdict::Rational) {
        if (message)
            *message = "B/A is not rational within tolerance; the compatibility criterion does not apply";
        return true;
    }
    if (base_report.all_rational != capped_report.all_rational) {
        if (message)
            *message = "base and capped rationality verdicts disagree with B/A rational";
        return false;
    }
    if (message)
        *message = "verdicts agree";
    return true;
}

HamiltonianCertificate hamiltonian_certificate(const Surface& s, const Isotopy& iso,
                                               const std::vector<CycleSpec>& cycles, double tol)
{
    HamiltonianCertificate cert;
    cert.tol = tol;
    cert.certified = true;
    for (const CycleSpec& c : cycles) {
        double f = isotopy_flux(s, iso, c, 0.1 * tol);
        cert.defects.push_back(std::abs(f));
        cert.certified = cert.certified && std::abs(f) < tol;
    }
    return cert;
}

} // namespace surfdyn
