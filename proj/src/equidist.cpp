#include "surfdyn/equidist.hpp"

#include <cmath>
#include <sstream>

namespace surfdyn {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

/// ninth-degree smoothstep, C^4 at the junctions; keeps quadrature accurate
double smootherstep(double x)
{
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    double x2 = x * x;
    return x2 * x2 * x * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))));
}

/// plateau profile: 0 at the ends, 1 on the middle band
double plateau(double x, double margin)
{
    return smootherstep((x - margin) / margin) * smootherstep((1.0 - margin - x) / margin);
}

/// monotone flattening of [0,1], constant near both ends
double flatten(double x, double margin)
{
    return smootherstep((x - margin) / (1.0 - 2.0 * margin));
}

} // namespace

double dictionary_locality_defect(const Surface& s, const std::vector<TestFunction>& fns,
                                  int samples)
{
    const Surface& owner = s.is_capped() ? s.base() : s;
    double worst = 0.0;
    for (const TestFunction& f : fns) {
        for (const BoundaryCircle& bc : owner.circles()) {
            double ref = f.value(owner.collar_point(bc.index, 0.0, 0.0));
            for (int k = 1; k < samples; k++) {
                double t = static_cast<double>(k) / samples;
                double v = f.value(owner.collar_point(bc.index, 0.0, t));
                worst = std::max(worst, std::abs(v - ref));
            }
        }
    }
    return worst;
}

TestDictionary make_dictionary(const Surface& s, std::vector<TestFunction> fns)
{
    if (fns.empty() || !fns.front().is_constant_one)
        throw PreconditionError("make_dictionary: the first function must be the constant 1");
    TestDictionary dict;
    dict.functions = std::move(fns);
    for (const TestFunction& f : dict.functions) {
        if (f.is_constant_one) {
            dict.averages.push_back(1.0);
            continue;
        }
        AreaIntegral ai = area_integrate(s, f.value, 1e-11);
        dict.averages.push_back(ai.value / s.total_area());
        dict.average_tolerance = std::max(dict.average_tolerance, ai.achieved_tolerance);
    }
    dict.locality_defect = dictionary_locality_defect(s, dict.functions);
    if (dict.locality_defect > 1e-10)
        throw PreconditionError("make_dictionary: functions are not locally constant on the circles");
    return dict;
}

TestDictionary boundary_flat_dictionary(const Surface& s, int size)
{
    if (size < 1)
        throw PreconditionError("boundary_flat_dictionary: size must be >= 1");
    std::vector<TestFunction> fns;
    fns.push_back(TestFunction{"one", [](const PointCoord&) { return 1.0; }, true});

    const double margin = 0.18;
    SurfaceKind base_kind = s.is_capped() ? s.base().kind() : s.kind();
    double width = base_kind == SurfaceKind::Annulus
                       ? (s.is_capped() ? s.base().width() : s.width())
                       : 1.0;
    const bool capped = s.is_capped();

    // normalized chart-0 profile coordinate in [0, 1]
    auto profile_coord = [base_kind, width](const Vec2& xy) {
        return base_kind == SurfaceKind::Annulus ? xy[0] / width : xy.squaredNorm();
    };
    // end values of the flattened radial profile continue into the caps:
    // circle i of the disk sits at coordinate 1, of the annulus at i==0 ? 0 : 1
    auto cap_end_coord = [base_kind](int circle) {
        return base_kind == SurfaceKind::Disk ? 1.0 : (circle == 0 ? 0.0 : 1.0);
    };

    int radial_k = 1, angular_m = 1;
    bool add_radial = true;
    int cap_added = 0;
    while (static_cast<int>(fns.size()) < size) {
        if (capped && cap_added < s.boundary_count() && static_cast<int>(fns.size()) + 1 == size) {
            // finish with a cap bump so capped dictionaries see the caps
            int cap = cap_added++;
            double r0 = s.cap(cap).r0;
            std::ostringstream name;
            name << "cap" << cap << "-bump";
            fns.push_back(TestFunction{name.str(), [cap, r0](const PointCoord& p) {
                              if (p.chart != cap + 1)
                                  return 0.0;
                              double q = p.xy.norm() / (0.9 * r0);
                              return q >= 1.0 ? 0.0 : smootherstep(1.0 - q);
                          }});
            continue;
        }
        if (add_radial) {
            int k = radial_k++;
            std::ostringstream name;
            name << "radial" << k;
            auto fn = [k, margin, profile_coord, cap_end_coord, capped](const PointCoord& p) {
                if (capped && p.chart >= 1) {
                    double u = flatten(cap_end_coord(p.chart - 1), margin);
                    return std::pow(u, k);
                }
                return std::pow(flatten(profile_coord(p.xy), margin), k);
            };
            fns.push_back(TestFunction{name.str(), fn});
        } else {
            int m = angular_m++;
            auto angle = [base_kind, width](const Vec2& xy) {
                return base_kind == SurfaceKind::Annulus ? kTwoPi * xy[1] / 1.0
                                                         : std::atan2(xy[1], xy[0]);
            };
            for (int phase = 0; phase < 2 && static_cast<int>(fns.size()) < size; phase++) {
                std::ostringstream name;
                name << (phase == 0 ? "cos" : "sin") << m;
                auto fn = [m, phase, margin, profile_coord, angle, capped](const PointCoord& p) {
                    if (capped && p.chart >= 1)
                        return 0.0; // envelope vanishes at L, continue by zero
                    double env = plateau(profile_coord(p.xy), margin);
                    double a = static_cast<double>(m) * angle(p.xy);
                    return env * (phase == 0 ? std::cos(a) : std::sin(a));
                };
                fns.push_back(TestFunction{name.str(), fn});
            }
        }
        add_radial = !add_radial;
    }
    return make_dictionary(s, std::move(fns));
}

DefectReport equidistribution_defect(const OrbitSet& o, const TestDictionary& dict,
                                     const Surface& s)
{
    (void)s;
    DefectReport rep;
    rep.orbit_set_size = o.size();
    rep.orbit_count = static_cast<int>(o.terms.size());
    if (rep.orbit_set_size <= 0)
        throw PreconditionError("equidistribution_defect: |O| must be positive");
    for (size_t i = 0; i < dict.functions.size(); i++) {
        DefectEntry e;
        e.function_name = dict.functions[i].name;
        e.area_average = dict.averages[i];
        if (dict.functions[i].is_constant_one) {
            e.orbit_average = 1.0; // O(1)/|O| = 1 identically
            e.defect = 0.0;
        } else {
            e.orbit_average = orbit_functional(o, dict.functions[i].value) / rep.orbit_set_size;
            e.defect = std::abs(e.orbit_average - e.area_average);
        }
        rep.max_defect = std::max(rep.max_defect, e.defect);
        rep.entries.push_back(e);
    }
    return rep;
}

bool orbit_in_base(const Surface& capped, const PeriodicOrbit& orbit, double tol)
{
    for (const PointCoord& p : orbit.points) {
        PointCoord c = capped.canonical(p);
        if (c.chart >= 1) {
            const CapChart& cap = capped.cap(c.chart - 1);
            double depth = M_PI * (c.xy.squaredNorm() - cap.r0 * cap.r0);
            if (depth < -tol)
                return false;
        }
    }
    return true;
}

OrbitSet restrict_orbit_set(const OrbitSet& o, const Surface& capped, double tol)
{
    if (!capped.is_capped())
        throw PreconditionError("restrict_orbit_set: surface is not capped");
    OrbitSet out;
    for (const auto& [a, orbit] : o.terms) {
        int inside = 0, outside = 0;
        for (const PointCoord& p : orbit.points) {
            PointCoord c = capped.canonical(p);
            if (c.chart >= 1) {
                const CapChart& cap = capped.cap(c.chart - 1);
                double depth = M_PI * (c.xy.squaredNorm() - cap.r0 * cap.r0);
                if (depth < -tol) {
                    outside++;
                    continue;
                }
            }
            inside++;
        }
        if (inside > 0 && outside > 0) {
            std::ostringstream os;
            os << "restrict_orbit_set: invariance-violation, an orbit of period " << orbit.period
               << " straddles the Lagrangian circles (" << inside << " points in Z, " << outside
               << " outside)";
            throw PreconditionError(os.str());
        }
        if (outside > 0)
            continue;
        PeriodicOrbit kept = orbit;
        for (PointCoord& p : kept.points) {
            auto base_rep = capped.convert(p, 0);
            if (base_rep)
                p = *base_rep;
        }
        out.terms.emplace_back(a, std::move(kept));
    }
    return out;
}

std::vector<DefectReport> defect_sequence_experiment(const SurfaceMap& phi,
                                                     const TestDictionary& dict,
                                                     const std::vector<int>& schedule,
                                                     const DefectSequenceConfig& cfg)
{
    if (schedule.empty())
        throw PreconditionError("defect_sequence_experiment: empty period schedule");
    OrbitSearchConfig search = cfg.search;
    search.max_period = schedule.back();
    std::vector<PeriodicOrbit> orbits = find_orbits(phi, search);
    const Surface& s = phi.surface();

    // Voronoi masses are computed once over the full census and reused
    std::vector<double> orbit_mass(orbits.size(), 1.0);
    if (cfg.weighting == OrbitWeighting::VoronoiMass && !orbits.empty()) {
        std::vector<std::pair<size_t, const PointCoord*>> pts;
        for (size_t i = 0; i < orbits.size(); i++)
            for (const PointCoord& p : orbits[i].points)
                pts.emplace_back(i, &p);
        std::fill(orbit_mass.begin(), orbit_mass.end(), 0.0);
        std::mt19937_64 rng(cfg.seed);
        for (int k = 0; k < cfg.voronoi_samples; k++) {
            PointCoord x = s.sample(rng);
            size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < pts.size(); i++) {
                double d = s.distance(*pts[i].second, x);
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            orbit_mass[pts[best].first] += 1.0;
        }
    }

    std::vector<DefectReport> reports;
    for (int level : schedule) {
        OrbitSet o;
        for (size_t i = 0; i < orbits.size(); i++) {
            if (orbits[i].period > level)
                continue;
            double a = cfg.weighting == OrbitWeighting::VoronoiMass
                           ? orbit_mass[i] / orbits[i].period
                           : 1.0;
            if (a > 0)
                o.terms.emplace_back(a, orbits[i]);
        }
        DefectReport rep;
        rep.level = level;
        if (o.terms.empty()) {
            rep.skipped = true;
            rep.note = "no orbits of period <= level";
        } else {
            rep = equidistribution_defect(o, dict, s);
            rep.level = level;
        }
        rep.orbit_set_id = "d<=" + std::to_string(level);
        reports.push_back(std::move(rep));
    }
    return reports;
}

} // namespace surfdyn
