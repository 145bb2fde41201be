#include "surfdyn/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace surfdyn {

bool OrbitSet::integral_coefficients() const
{
    for (const auto& [a, s] : terms)
        if (std::abs(a - std::round(a)) > 1e-12)
            return false;
    return true;
}

double OrbitSet::size() const
{
    double total = 0.0;
    for (const auto& [a, s] : terms)
        total += a * s.period;
    return total;
}

double orbit_sum(const PeriodicOrbit& s, const std::function<double(const PointCoord&)>& f)
{
    double total = 0.0;
    for (const PointCoord& p : s.points)
        total += f(p);
    return total;
}

double orbit_functional(const OrbitSet& o, const std::function<double(const PointCoord&)>& f)
{
    double total = 0.0;
    for (const auto& [a, s] : o.terms)
        total += a * orbit_sum(s, f);
    return total;
}

OrbitSet uniform_orbit_set(const std::vector<PeriodicOrbit>& orbits, double coefficient)
{
    OrbitSet o;
    for (const PeriodicOrbit& s : orbits)
        o.terms.emplace_back(coefficient, s);
    return o;
}

namespace {

std::complex<double> eig_pair(const Mat2& m, std::complex<double>* second)
{
    double tr = m.trace(), det = m.determinant();
    double disc = tr * tr - 4.0 * det;
    if (disc >= 0) {
        double rt = std::sqrt(disc);
        *second = std::complex<double>(0.5 * (tr - rt), 0.0);
        return std::complex<double>(0.5 * (tr + rt), 0.0);
    }
    double im = 0.5 * std::sqrt(-disc);
    *second = std::complex<double>(0.5 * tr, -im);
    return std::complex<double>(0.5 * tr, im);
}

/* residual of x as a period-d point, in x's chart; nullopt if the iterate
   leaves every chart reachable from x */
std::optional<double> period_residual(const SurfaceMap& phi, const PointCoord& x, int d,
                                      PointCoord* end = nullptr)
{
    PointCoord y = iterate(phi, x, d);
    if (end)
        *end = y;
    auto back = phi.surface().convert(y, x.chart);
    if (!back)
        return std::nullopt;
    Vec2 delta = phi.surface().chart_delta(x, y);
    return delta.norm();
}

struct NewtonOutcome {
    bool converged = false;
    PointCoord point;
    double residual = 0.0;
};

/* damped Newton on F(x) = phi^d(x) - x in the chart of the current iterate */
NewtonOutcome newton_orbit(const SurfaceMap& phi, const Surface& s, PointCoord x, int d,
                           const OrbitSearchConfig& cfg)
{
    NewtonOutcome out;
    double res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_newton_iters; it++) {
        PointCoord end;
        auto r = period_residual(phi, x, d, &end);
        if (!r)
            return out;
        res = *r;
        if (res <= cfg.tol) {
            out.converged = true;
            out.point = x;
            out.residual = res;
            return out;
        }
        Vec2 f = s.chart_delta(x, end);
        Mat2 m = orbit_monodromy(phi, x, d);
        Mat2 jac = m - Mat2::Identity();
        double det = jac.determinant();
        if (std::abs(det) < 1e-14)
            return out; // singular: degenerate direction, let direct hits handle it
        Vec2 step = jac.inverse() * f;
        // line search on the residual norm
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 8; ls++) {
            PointCoord trial(x.chart, x.xy - lambda * step);
            if (s.chart_contains(x.chart, trial.xy, 1e-7)) {
                auto tr = period_residual(phi, trial, d);
                if (tr && *tr < res) {
                    x = trial;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!improved)
            return out;
    }
    return out;
}

/* proper-divisor sub-periodicity: a period-d orbit whose points repeat with
   period d' | d is a multiple cover and is rejected as non-simple */
bool has_subperiod(const Surface& s, const std::vector<PointCoord>& pts, double radius)
{
    int d = static_cast<int>(pts.size());
    for (int dd = 1; dd < d; dd++) {
        if (d % dd != 0)
            continue;
        bool matches = true;
        for (int i = 0; i < d && matches; i++)
            matches = s.distance(pts[static_cast<size_t>(i)],
                                 pts[static_cast<size_t>((i + dd) % d)]) <= radius;
        if (matches)
            return true;
    }
    return false;
}

bool points_distinct(const Surface& s, const std::vector<PointCoord>& pts, double radius)
{
    for (size_t i = 0; i < pts.size(); i++)
        for (size_t j = i + 1; j < pts.size(); j++)
            if (s.distance(pts[i], pts[j]) <= radius)
                return false;
    return true;
}

bool same_orbit(const Surface& s, const PeriodicOrbit& a, const PeriodicOrbit& b, double radius)
{
    if (a.period != b.period)
        return false;
    int d = a.period;
    for (int shift = 0; shift < d; shift++) {
        bool match = true;
        for (int i = 0; i < d && match; i++)
            match = s.distance(a.points[static_cast<size_t>(i)],
                               b.points[static_cast<size_t>((i + shift) % d)]) <= radius;
        if (match)
            return true;
    }
    return false;
}

std::vector<PointCoord> orbit_points(const SurfaceMap& phi, const PointCoord& start, int d)
{
    std::vector<PointCoord> pts;
    pts.reserve(static_cast<size_t>(d));
    PointCoord p = phi.surface().canonical(start);
    for (int i = 0; i < d; i++) {
        pts.push_back(p);
        if (i + 1 < d)
            p = phi(p);
    }
    return pts;
}

std::vector<double> orbit_key(const Surface& s, const PeriodicOrbit& o)
{
    // lexicographically smallest cyclic rotation of the flattened point list
    std::vector<double> best;
    int d = o.period;
    for (int shift = 0; shift < d; shift++) {
        std::vector<double> key;
        key.reserve(static_cast<size_t>(3 * d));
        for (int i = 0; i < d; i++) {
            const PointCoord& p = o.points[static_cast<size_t>((i + shift) % d)];
            key.push_back(static_cast<double>(p.chart));
            key.push_back(p.xy[0]);
            key.push_back(p.xy[1]);
        }
        if (best.empty() || key < best)
            best = key;
    }
    (void)s;
    return best;
}

std::vector<PointCoord> chart_seed_grid(const Surface& s, int major, int minor)
{
    std::vector<PointCoord> seeds;
    SurfaceKind k = s.is_capped() ? s.base().kind() : s.kind();
    if (k == SurfaceKind::Disk) {
        for (int i = 0; i < major; i++) {
            double r = 0.97 * (i + 0.5) / major;
            for (int j = 0; j < minor; j++) {
                double th = 2.0 * M_PI * (j + 0.5 * (i % 2)) / minor;
                seeds.emplace_back(0, r * std::cos(th), r * std::sin(th));
            }
        }
    } else {
        double w = s.is_capped() ? s.base().width() : s.width();
        for (int i = 0; i < major; i++) {
            double sc = w * (i + 0.5) / major;
            for (int j = 0; j < minor; j++)
                seeds.emplace_back(0, sc, (j + 0.5 * (i % 2)) / minor);
        }
    }
    if (s.is_capped()) {
        // cap interiors get their own polar grids
        int nc = std::max(2, major / 2);
        for (int cap = 0; cap < s.boundary_count(); cap++) {
            double r0 = s.cap(cap).r0;
            for (int i = 0; i < nc; i++) {
                double r = 0.95 * r0 * (i + 0.5) / nc;
                for (int j = 0; j < minor; j++) {
                    double th = 2.0 * M_PI * (j + 0.25) / minor;
                    seeds.emplace_back(cap + 1, r * std::cos(th), r * std::sin(th));
                }
            }
        }
    }
    return seeds;
}

struct BoundaryCircleMap {
    const SurfaceMap* phi;
    const Surface* owner; ///< surface carrying the collar charts
    int circle;
    int cycle_length; ///< length of the boundary permutation cycle through `circle`

    double displacement(double t, int power) const
    {
        // wrapped t-displacement of phi^(cycle_length * power) along the circle
        PointCoord p = owner->collar_point(circle, 0.0, t);
        PointCoord q = iterate(*phi, phi->surface().canonical(p), cycle_length * power);
        auto cc = phi->surface().is_capped() ? phi->surface().collar_coords(circle, q)
                                             : owner->collar_coords(circle, q);
        if (!cc)
            throw NumericalError("boundary search: iterate left the invariant circle");
        return wrap_half(cc->second - t);
    }
};

} // namespace

PeriodicOrbit classify_nondegeneracy(const SurfaceMap& phi, PeriodicOrbit orbit, double eigen_tol)
{
    const Surface& s = phi.surface();
    orbit.monodromy = orbit_monodromy(phi, orbit.points[0], orbit.period);
    orbit.floquet1 = eig_pair(orbit.monodromy, &orbit.floquet2);
    orbit.nondegenerate = std::abs(orbit.floquet1 - 1.0) > eigen_tol &&
                          std::abs(orbit.floquet2 - 1.0) > eigen_tol;
    double norm = orbit.monodromy.norm();
    double det = std::abs(orbit.monodromy.determinant());
    orbit.reliable = det > 1e-300 && norm * orbit.monodromy.inverse().norm() < 1e12;

    const Surface& owner = s.is_capped() ? s.base() : s;
    orbit.on_boundary = true;
    orbit.boundary_circle = -1;
    int circle = -1;
    for (const PointCoord& p : orbit.points) {
        bool on = false;
        for (const BoundaryCircle& bc : owner.circles()) {
            auto cc = s.is_capped() ? s.collar_coords(bc.index, p) : owner.collar_coords(bc.index, p);
            if (cc && std::abs(cc->first) < 1e-9) {
                on = true;
                if (circle < 0)
                    circle = bc.index;
            }
        }
        if (!on) {
            orbit.on_boundary = false;
            break;
        }
    }
    if (orbit.on_boundary && circle >= 0) {
        orbit.boundary_circle = circle;
        // multiplier along the invariant circle direction
        const PointCoord& x = orbit.points[0];
        auto cc = s.is_capped() ? s.collar_coords(circle, x) : owner.collar_coords(circle, x);
        if (cc) {
            Vec2 v;
            if (s.is_capped()) {
                // tangent of the Lagrangian circle in the cap chart
                PointCoord q = *s.convert(x, circle + 1);
                v = Vec2(-q.xy[1], q.xy[0]).normalized();
                Mat2 m = orbit.monodromy;
                if (x.chart != circle + 1) {
                    Mat2 t = s.transition_jacobian(x, circle + 1);
                    m = (t * m * t.inverse()).eval();
                }
                orbit.tangential_multiplier = v.dot(m * v);
            } else {
                v = owner.collar_jacobian(circle, cc->first, cc->second) * Vec2(0.0, 1.0);
                v.normalize();
                orbit.tangential_multiplier = v.dot(orbit.monodromy * v);
            }
        }
    }
    return orbit;
}

std::vector<PeriodicOrbit> find_orbits(const SurfaceMap& phi, const OrbitSearchConfig& cfg,
                                       OrbitSearchSummary* summary)
{
    const Surface& s = phi.surface();
    if (cfg.max_period < 1)
        throw PreconditionError("find_orbits: max_period must be >= 1");
    std::vector<PointCoord> seeds =
        cfg.custom_seeds.empty() ? chart_seed_grid(s, cfg.grid_major, cfg.grid_minor)
                                 : cfg.custom_seeds;
    if (seeds.empty())
        throw PreconditionError("find_orbits: empty seed grid");

    OrbitSearchSummary stats;
    stats.seeds = static_cast<int>(seeds.size());

    auto process_seed = [&](const PointCoord& seed, OrbitSearchSummary& st) {
        std::vector<PeriodicOrbit> found;
        PointCoord x0 = s.canonical(seed);
        PointCoord walker = x0;
        for (int d = 1; d <= cfg.max_period; d++) {
            walker = phi(walker); // phi^d(x0)
            auto back = s.convert(walker, x0.chart);
            double res = back ? s.chart_delta(x0, walker).norm()
                              : std::numeric_limits<double>::infinity();
            PointCoord root = x0;
            bool accepted = false;
            if (res <= cfg.tol) {
                accepted = true;
                st.direct_hits++;
            } else if (cfg.use_newton) {
                NewtonOutcome nw = newton_orbit(phi, s, x0, d, cfg);
                if (nw.converged) {
                    accepted = true;
                    root = nw.point;
                    res = nw.residual;
                    st.newton_converged++;
                } else {
                    st.newton_diverged++;
                }
            }
            if (!accepted)
                continue;
            PeriodicOrbit orbit;
            orbit.points = orbit_points(phi, root, d);
            orbit.period = d;
            orbit.residual = res;
            double reject_radius = std::max(10.0 * cfg.tol, 0.0);
            if (has_subperiod(s, orbit.points, std::max(reject_radius, cfg.clustering_radius)))
                continue; // non-simple: multiple cover of a shorter orbit
            orbit.simple = points_distinct(s, orbit.points, cfg.clustering_radius);
            if (!orbit.simple)
                continue;
            found.push_back(orbit);
        }
        return found;
    };

    std::vector<std::vector<PeriodicOrbit>> per_seed(seeds.size());
    if (cfg.workers <= 1) {
        for (size_t i = 0; i < seeds.size(); i++)
            per_seed[i] = process_seed(seeds[i], stats);
    } else {
        std::vector<OrbitSearchSummary> partial(static_cast<size_t>(cfg.workers));
        std::vector<std::future<void>> futures;
        for (int w = 0; w < cfg.workers; w++) {
            futures.push_back(std::async(std::launch::async, [&, w]() {
                for (size_t i = static_cast<size_t>(w); i < seeds.size();
                     i += static_cast<size_t>(cfg.workers))
                    per_seed[i] = process_seed(seeds[i], partial[static_cast<size_t>(w)]);
            }));
        }
        for (auto& f : futures)
            f.get();
        for (const auto& p : partial) {
            stats.direct_hits += p.direct_hits;
            stats.newton_converged += p.newton_converged;
            stats.newton_diverged += p.newton_diverged;
        }
    }

    std::vector<PeriodicOrbit> orbits;
    double dedup_radius = 10.0 * cfg.tol;
    auto add_orbit = [&](const PeriodicOrbit& o) {
        for (const PeriodicOrbit& kept : orbits)
            if (same_orbit(s, kept, o, dedup_radius))
                return;
        orbits.push_back(o);
    };
    for (const auto& batch : per_seed)
        for (const PeriodicOrbit& o : batch)
            add_orbit(o);

    // boundary / Lagrangian circles: one-dimensional periodic-point scan
    std::vector<std::pair<int, int>> continuum_markers; // (circle, period)
    const Surface& owner = s.is_capped() ? s.base() : s;
    if (cfg.scan_boundary && owner.boundary_count() > 0) {
        std::vector<int> sigma;
        try {
            sigma = boundary_permutation(phi);
        } catch (const PreconditionError&) {
            sigma.clear(); // map does not preserve the circle family: skip
        }
        for (int i = 0; i < static_cast<int>(sigma.size()); i++) {
            // length of the permutation cycle through circle i; only the
            // smallest representative runs the scan
            int cyc = 1, j = sigma[static_cast<size_t>(i)];
            bool smallest = true;
            while (j != i) {
                smallest = smallest && j > i;
                j = sigma[static_cast<size_t>(j)];
                cyc++;
            }
            if (!smallest)
                continue;
            BoundaryCircleMap bmap{&phi, &owner, i, cyc};
            for (int power = 1; power * cyc <= cfg.max_period; power++) {
                int d = power * cyc;
                int n = cfg.boundary_scan;
                std::vector<double> h(static_cast<size_t>(n));
                double hmax = 0.0;
                for (int k = 0; k < n; k++) {
                    h[static_cast<size_t>(k)] = bmap.displacement(static_cast<double>(k) / n, power);
                    hmax = std::max(hmax, std::abs(h[static_cast<size_t>(k)]));
                }
                auto emit = [&](double t, bool continuum) {
                    PointCoord p = owner.collar_point(i, 0.0, t);
                    PointCoord root = s.canonical(p);
                    auto rr = period_residual(phi, root, d);
                    if (!rr || *rr > std::max(cfg.tol, 1e-9))
                        return;
                    PeriodicOrbit orbit;
                    orbit.points = orbit_points(phi, root, d);
                    orbit.period = d;
                    orbit.residual = *rr;
                    orbit.degenerate_continuum = continuum;
                    if (has_subperiod(s, orbit.points, std::max(10.0 * cfg.tol, cfg.clustering_radius)))
                        return;
                    orbit.simple = points_distinct(s, orbit.points, cfg.clustering_radius);
                    if (!orbit.simple)
                        return;
                    stats.boundary_orbits++;
                    add_orbit(orbit);
                };
                if (hmax <= std::max(cfg.tol, 1e-12)) {
                    continuum_markers.emplace_back(i, d);
                    emit(0.0, true); // whole circle of period-d points
                    continue;
                }
                for (int k = 0; k < n; k++) {
                    double a = static_cast<double>(k) / n, b = static_cast<double>(k + 1) / n;
                    double ha = h[static_cast<size_t>(k)], hb = h[static_cast<size_t>((k + 1) % n)];
                    if (std::abs(ha) > 0.25 || std::abs(hb) > 0.25)
                        continue; // too close to the wrap seam
                    if (ha == 0.0) {
                        emit(a, false);
                        continue;
                    }
                    if (ha * hb >= 0.0)
                        continue;
                    for (int bis = 0; bis < 64 && b - a > 1e-15; bis++) {
                        double mid = 0.5 * (a + b);
                        double hm = bmap.displacement(mid, power);
                        if (hm == 0.0) {
                            a = b = mid;
                            break;
                        }
                        if (hm * ha > 0) {
                            a = mid;
                            ha = hm;
                        } else {
                            b = mid;
                        }
                    }
                    emit(0.5 * (a + b), false);
                }
            }
        }
    }

    for (PeriodicOrbit& o : orbits) {
        o = classify_nondegeneracy(phi, std::move(o), cfg.eigen_tol);
        if (o.on_boundary)
            for (const auto& [circle, d] : continuum_markers)
                if (o.boundary_circle == circle && o.period == d) {
                    o.degenerate_continuum = true;
                    // a continuum of period-d points pins an eigenvalue at 1;
                    // the parabolic monodromy splits it by sqrt(residual)
                    o.nondegenerate = false;
                }
    }
    // keep one representative per detected boundary continuum
    if (!continuum_markers.empty()) {
        std::vector<bool> drop(orbits.size(), false);
        for (const auto& [circle, d] : continuum_markers) {
            size_t best = orbits.size();
            for (size_t i = 0; i < orbits.size(); i++) {
                const PeriodicOrbit& o = orbits[i];
                if (!(o.degenerate_continuum && o.boundary_circle == circle && o.period == d))
                    continue;
                if (best == orbits.size() || o.residual < orbits[best].residual)
                    best = i;
            }
            for (size_t i = 0; i < orbits.size(); i++) {
                const PeriodicOrbit& o = orbits[i];
                if (i != best && o.degenerate_continuum && o.boundary_circle == circle &&
                    o.period == d)
                    drop[i] = true;
            }
        }
        std::vector<PeriodicOrbit> kept;
        for (size_t i = 0; i < orbits.size(); i++)
            if (!drop[i])
                kept.push_back(std::move(orbits[i]));
        orbits = std::move(kept);
    }

    std::sort(orbits.begin(), orbits.end(), [&](const PeriodicOrbit& a, const PeriodicOrbit& b) {
        if (a.period != b.period)
            return a.period < b.period;
        return orbit_key(s, a) < orbit_key(s, b);
    });

    stats.orbits_found = static_cast<int>(orbits.size());
    if (summary)
        *summary = stats;
    return orbits;
}

} // namespace surfdyn
