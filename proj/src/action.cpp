#include "surfdyn/action.hpp"
#include "surfdyn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace surfdyn {

OneForm action_form(const SurfaceMap& phi, const OneForm& beta)
{
    SurfaceMap f = phi;
    OneForm b = beta;
    OneForm out;
    out.cov = [f, b](const PointCoord& p) {
        PointCoord q = f(p);
        Mat2 j = f.derivative(p);
        return (j.transpose() * b.cov(q) - b.cov(p)).eval();
    };
    return out;
}

namespace {

/* One-dimensional machinery along an invariant boundary circle: the circle
   map in the collar parameterization, its wrapped displacement, and the
   restriction of the action form to the circle. */
struct BoundaryLine {
    const SurfaceMap* phi;
    const Surface* owner; ///< carries the collar charts
    int circle;

    PointCoord at(double t) const { return owner->collar_point(circle, 0.0, t); }

    Vec2 tangent(double t) const
    {
        return owner->collar_jacobian(circle, 0.0, t) * Vec2(0.0, 1.0);
    }

    double map_t(double t) const
    {
        PointCoord q = (*phi)(phi->surface().canonical(at(t)));
        auto cc = phi->surface().is_capped() ? phi->surface().collar_coords(circle, q)
                                             : owner->collar_coords(circle, q);
        if (!cc)
            throw PreconditionError("build_action: gamma is not invariant under the map");
        return cc->second;
    }

    double displacement(double t) const { return wrap_half(map_t(t) - t); }
};

/* Sampled cumulative integral of a smooth 1-periodic integrand, evaluated by
   composite Gauss-Legendre on each grid cell; values at arbitrary points by
   cubic interpolation of the cumulative table plus a local correction. */
class CumulativeCircleIntegral {
public:
    CumulativeCircleIntegral(const std::function<double(double)>& density, int grid)
        : density_(density), grid_(grid), table_(static_cast<size_t>(grid) + 1, 0.0)
    {
        const auto& xs = gauss_legendre_nodes(8);
        const auto& ws = gauss_legendre_weights(8);
        for (int i = 0; i < grid; i++) {
            double a = static_cast<double>(i) / grid;
            double cell = 0.0;
            for (size_t k = 0; k < xs.size(); k++)
                cell += ws[k] * density_(a + xs[k] / grid);
            table_[static_cast<size_t>(i) + 1] = table_[static_cast<size_t>(i)] + cell / grid;
        }
    }

    /// integral over [0, t] for t in [0, 1]
    double operator()(double t) const
    {
        double x = t * grid_;
        int cell = std::min(static_cast<int>(std::floor(x)), grid_ - 1);
        double a = static_cast<double>(cell) / grid_;
        const auto& xs = gauss_legendre_nodes(8);
        const auto& ws = gauss_legendre_weights(8);
        double frac = 0.0;
        double len = t - a;
        if (len > 0) {
            for (size_t k = 0; k < xs.size(); k++)
                frac += ws[k] * density_(a + xs[k] * len);
            frac *= len;
        }
        return table_[static_cast<size_t>(cell)] + frac;
    }

    double total() const { return table_.back(); }

private:
    std::function<double(double)> density_;
    int grid_;
    std::vector<double> table_;
};

} // namespace

double ActionProfile::raw(const PointCoord& p) const
{
    const Surface& s = phi_->surface();
    PointCoord target = s.normalize(p);
    Vec2 delta = s.chart_delta(basepoint_, target);
    return segment_integral(s, form_, basepoint_, delta, path_tol_);
}

ActionProfile build_action(const SurfaceMap& phi, const OneForm& beta, int gamma,
                           const PointCoord& basepoint, const ActionConfig& cfg)
{
    const Surface& s = phi.surface();
    if (s.is_capped())
        throw PreconditionError("build_action: the action lives on a surface with boundary");
    if (gamma < 0 || gamma >= s.boundary_count())
        throw PreconditionError("build_action: no such boundary circle");

    ActionProfile prof;
    prof.phi_ = std::make_shared<SurfaceMap>(phi);
    prof.beta_ = beta;
    prof.form_ = action_form(phi, beta);
    prof.gamma_ = gamma;
    prof.basepoint_ = s.canonical(basepoint);
    prof.path_tol_ = cfg.path_tol;

    // --- exactness probe: homology basis plus random closed loops ---
    double worst_loop = 0.0;
    auto check_loop = [&](const std::vector<PointCoord>& loop, const char* label) {
        double v = std::abs(loop_integral(s, prof.form_, loop, 0.1 * cfg.exactness_tol));
        worst_loop = std::max(worst_loop, v);
        if (v > cfg.exactness_tol) {
            std::ostringstream os;
            os << "build_action: phi^* beta - beta is not exact; cycle '" << label
               << "' integrates to " << v;
            throw PreconditionError(os.str());
        }
    };
    if (s.kind() == SurfaceKind::Annulus) {
        std::vector<PointCoord> core;
        for (int k = 0; k < 16; k++)
            core.emplace_back(0, 0.5 * s.width(), static_cast<double>(k) / 16.0);
        check_loop(core, "core");
    }
    std::mt19937_64 rng(cfg.seed);
    for (int i = 0; i < cfg.exactness_loops; i++) {
        std::vector<PointCoord> tri{s.sample(rng), s.sample(rng), s.sample(rng)};
        check_loop(tri, "random-loop");
    }
    prof.exactness_defect_ = worst_loop;

    // --- boundary normalization ---
    BoundaryLine line{prof.phi_.get(), &s, gamma};
    {
        // require phi(gamma) = gamma
        auto sigma = boundary_permutation(phi);
        if (sigma[static_cast<size_t>(gamma)] != gamma)
            throw PreconditionError("build_action: phi does not fix the circle gamma");
    }

    // the action along the circle: u(t) = f_raw(gamma(0)) + int_0^t (form restricted to gamma)
    double anchor = prof.raw(line.at(0.0));
    OneForm form = prof.form_;
    CumulativeCircleIntegral u_integral(
        [&line, &form](double t) { return form.cov(line.at(t)).dot(line.tangent(t)); },
        cfg.boundary_grid);
    auto u = [&](double t) { return anchor + u_integral(wrap_unit(t)); };

    // rotation number of the circle map from accumulated wrapped displacements
    BoundaryRotationInfo info;
    {
        long n = cfg.rotation_iters;
        double t = 0.0, total = 0.0;
        for (long k = 0; k < n; k++) {
            double d = line.displacement(t);
            total += d;
            t = wrap_unit(t + d);
        }
        info.rotation_number = wrap_half(total / static_cast<double>(n));
        info.iterations = n;
    }
    // continued-fraction candidates for a rational rotation number
    auto try_rational = [&](long p, long q) -> bool {
        // scan the q-step displacement for roots (period-q boundary points)
        const int scan = 512;
        std::vector<double> h(static_cast<size_t>(scan));
        double hmax = 0.0;
        for (int k = 0; k < scan; k++) {
            double t = static_cast<double>(k) / scan;
            double acc = 0.0;
            for (long j = 0; j < q; j++) {
                double d = line.displacement(t);
                acc += d;
                t = wrap_unit(t + d);
            }
            h[static_cast<size_t>(k)] = wrap_half(acc - std::round(acc));
            hmax = std::max(hmax, std::abs(h[static_cast<size_t>(k)]));
        }
        auto accept = [&](double t_root) {
            // Birkhoff average over the exact period-q boundary orbit
            double sum = 0.0, t = t_root;
            for (long j = 0; j < q; j++) {
                sum += u(t);
                t = wrap_unit(t + line.displacement(t));
            }
            info.rational = true;
            info.p = p;
            info.q = q;
            prof.boundary_mean_ = sum / static_cast<double>(q);
        };
        if (hmax <= std::max(cfg.rotation_tol, 1e-12)) {
            accept(0.0); // rigid rational rotation: every point is periodic
            return true;
        }
        for (int k = 0; k < scan; k++) {
            double a = static_cast<double>(k) / scan, b = static_cast<double>(k + 1) / scan;
            double ha = h[static_cast<size_t>(k)], hb = h[static_cast<size_t>((k + 1) % scan)];
            if (std::abs(ha) > 0.25 || std::abs(hb) > 0.25 || ha * hb > 0.0)
                continue;
            for (int bis = 0; bis < 80 && b - a > 1e-16; bis++) {
                double mid = 0.5 * (a + b);
                double t = mid, acc = 0.0;
                for (long j = 0; j < q; j++) {
                    double d = line.displacement(t);
                    acc += d;
                    t = wrap_unit(t + d);
                }
                double hm = wrap_half(acc - std::round(acc));
                if (hm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (hm * ha > 0)
                    a = mid;
                else
                    b = mid;
            }
            accept(0.5 * (a + b));
            return true;
        }
        return false;
    };

    bool resolved = false;
    {
        // continued-fraction convergents of the estimated rotation number
        double x = wrap_unit(info.rotation_number);
        long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double y = x;
        for (int it = 0; it < 40 && !resolved; it++) {
            long a = static_cast<long>(std::floor(y));
            long p2 = a * p1 + p0, q2 = a * q1 + q0;
            if (q2 > cfg.boundary_qmax || q2 <= 0)
                break;
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
            // the lift average converges like 1/n, so candidates are gated at
            // that scale; try_rational verifies them against actual roots
            double gate = std::max({1e-6, cfg.rotation_tol,
                                    50.0 / static_cast<double>(cfg.rotation_iters)});
            if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) < gate) {
                resolved = try_rational(p1, q1);
            }
            double r = y - std::floor(y);
            if (r < 1e-14)
                break;
            y = 1.0 / r;
        }
    }
    if (!resolved) {
        // irrational (or undetected) regime: Cesaro average along the orbit
        long n = cfg.boundary_max_iters;
        double t = 0.0, sum = 0.0;
        double mean_final = 0.0;
        std::vector<double> tail;
        long tail_start = 3 * n / 4;
        for (long k = 0; k < n; k++) {
            sum += u(t);
            if (k + 1 >= tail_start && (k % 97 == 0))
                tail.push_back(sum / static_cast<double>(k + 1));
            t = wrap_unit(t + line.displacement(t));
        }
        mean_final = sum / static_cast<double>(n);
        double fluct = 0.0;
        for (double v : tail)
            fluct = std::max(fluct, std::abs(v - mean_final));
        info.fluctuation = fluct;
        info.iterations = n;
        prof.boundary_mean_ = mean_final;
    }
    prof.boundary_ = info;
    return prof;
}

BirkhoffResult birkhoff_mean(const SurfaceMap& phi,
                             const std::function<double(const PointCoord&)>& f, const PointCoord& x,
                             long n_max, bool cesaro)
{
    const Surface& s = phi.surface();
    BirkhoffResult out;
    PointCoord p = s.canonical(x);
    double sum = 0.0, cesaro_sum = 0.0;
    std::vector<double> tail;
    long tail_start = std::max<long>(1, 3 * n_max / 4);
    long k = 0;
    for (; k < n_max; k++) {
        if (!s.chart_contains(p.chart, p.xy, 1e-7)) {
            out.truncated = true;
            break;
        }
        sum += f(p);
        cesaro_sum += sum / static_cast<double>(k + 1);
        if (k + 1 >= tail_start)
            tail.push_back(sum / static_cast<double>(k + 1));
        if (k + 1 < n_max)
            p = phi(p);
    }
    out.iterations = k;
    if (k == 0)
        return out;
    double plain = sum / static_cast<double>(k);
    out.estimate = cesaro ? cesaro_sum / static_cast<double>(k) : plain;
    for (double v : tail)
        out.fluctuation = std::max(out.fluctuation, std::abs(v - plain));
    return out;
}

std::vector<MeanActionRecord> mean_actions(const ActionProfile& f,
                                           const std::vector<PeriodicOrbit>& orbits)
{
    std::vector<MeanActionRecord> records;
    auto field = [&f](const PointCoord& p) { return f(p); };
    for (size_t i = 0; i < orbits.size(); i++) {
        const PeriodicOrbit& s = orbits[i];
        MeanActionRecord r;
        r.orbit_index = static_cast<int>(i);
        r.period = s.period;
        r.mean_action = orbit_sum(s, field) / s.period;
        r.birkhoff_check = birkhoff_mean(f.map(), field, s.points[0], s.period, false).estimate;
        r.on_boundary = s.on_boundary;
        records.push_back(r);
    }
    return records;
}

CalabiReport calabi(const ActionProfile& f, double quad_tol, int mc_samples, unsigned seed)
{
    const Surface& s = f.map().surface();
    CalabiReport rep;
    rep.boundary_mean = f.boundary_mean();
    rep.exactness_defect = f.exactness_defect();
    AreaIntegral integral = area_integrate(s, [&f](const PointCoord& p) { return f(p); }, quad_tol);
    rep.calabi = integral.value / s.total_area();
    rep.quad_tolerance = integral.achieved_tolerance / s.total_area();
    rep.quad_converged = integral.converged;

    // Monte Carlo cross-estimator
    std::mt19937_64 rng(seed);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < mc_samples; i++) {
        double v = f(s.sample(rng));
        sum += v;
        sq += v * v;
    }
    rep.mc_samples = mc_samples;
    if (mc_samples > 1) {
        double mean = sum / mc_samples;
        double var = std::max(0.0, sq / mc_samples - mean * mean);
        rep.mc_estimate = mean;
        rep.mc_halfwidth = 1.96 * std::sqrt(var / mc_samples);
    }
    return rep;
}

InequalityVerdict inequality_check(double calabi_value,
                                   const std::vector<MeanActionRecord>& records, double tol)
{
    if (records.empty())
        throw PreconditionError("inequality_check: empty orbit census");
    InequalityVerdict v;
    v.calabi = calabi_value;
    v.min_mean_action = records[0].mean_action;
    v.max_mean_action = records[0].mean_action;
    for (const MeanActionRecord& r : records) {
        v.min_mean_action = std::min(v.min_mean_action, r.mean_action);
        v.max_mean_action = std::max(v.max_mean_action, r.mean_action);
    }
    v.inf_gap = v.min_mean_action - calabi_value;
    v.sup_gap = v.max_mean_action - calabi_value;
    bool inf_ok = v.inf_gap <= tol;
    bool sup_ok = v.sup_gap >= -tol;
    v.holds_on_census = inf_ok && sup_ok;
    v.side = inf_ok ? (sup_ok ? InequalitySide::Holds : InequalitySide::FailsSup)
                    : (sup_ok ? InequalitySide::FailsInf : InequalitySide::FailsBoth);
    return v;
}

CensusFractions p_epsilon_census(const ActionProfile& f, double calabi_value,
                                 const std::vector<PeriodicOrbit>& orbits,
                                 const std::vector<MeanActionRecord>& records, double epsilon,
                                 CensusWeighting weighting, int mc_samples, unsigned seed)
{
    if (epsilon <= 0)
        throw PreconditionError("p_epsilon_census: epsilon must be positive");
    if (orbits.empty() || records.size() != orbits.size())
        throw PreconditionError("p_epsilon_census: empty or mismatched census");
    const Surface& s = f.map().surface();

    struct CensusPoint {
        PointCoord p;
        double mean_action;
        double weight;
    };
    std::vector<CensusPoint> pts;
    for (size_t i = 0; i < orbits.size(); i++)
        for (const PointCoord& p : orbits[i].points)
            pts.push_back(CensusPoint{p, records[i].mean_action, 1.0});

    if (weighting == CensusWeighting::VoronoiMass) {
        // heuristic cell masses by nearest-point Monte Carlo
        for (CensusPoint& cp : pts)
            cp.weight = 0.0;
        std::mt19937_64 rng(seed);
        for (int k = 0; k < mc_samples; k++) {
            PointCoord x = s.sample(rng);
            size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < pts.size(); i++) {
                double d = s.distance(pts[i].p, x);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            pts[best].weight += 1.0;
        }
    }

    CensusFractions out;
    out.weighting = weighting;
    out.points = static_cast<int>(pts.size());
    out.negative_branch = calabi_value < 0.0;
    double lo = (1.0 - epsilon) * calabi_value;
    double hi = (1.0 + epsilon) * calabi_value;
    double total = 0.0, plus = 0.0, minus = 0.0;
    for (const CensusPoint& cp : pts) {
        total += cp.weight;
        bool in_plus = out.negative_branch ? cp.mean_action <= lo : cp.mean_action >= lo;
        bool in_minus = out.negative_branch ? cp.mean_action >= hi : cp.mean_action <= hi;
        if (in_plus)
            plus += cp.weight;
        if (in_minus)
            minus += cp.weight;
    }
    if (total <= 0)
        throw PreconditionError("p_epsilon_census: census carries no weight");
    out.p_plus = plus / total;
    out.p_minus = minus / total;
    return out;
}

} // namespace surfdyn
