#include <doctest.h>

#include "surfdyn/equidist.hpp"
#include "surfdyn/map.hpp"

#include <cmath>
#include <memory>

using namespace surfdyn;

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

std::shared_ptr<const Surface> ann1() { return std::make_shared<Surface>(Surface::annulus(1.0)); }

/* uniform-weight orbit set over the q*m lattice {(s_j, t0 + k/q)} of the
   rational rotation (s, t) -> (s, t + p/q) */
OrbitSet rotation_lattice_set(const SurfaceMap& rot, int q, int m)
{
    OrbitSet o;
    for (int j = 0; j < m; j++) {
        PeriodicOrbit s;
        s.period = q;
        PointCoord p(0, (j + 0.5) / m, 0.37);
        for (int k = 0; k < q; k++) {
            s.points.push_back(p);
            p = rot(p);
        }
        o.terms.emplace_back(1.0, s);
    }
    return o;
}

} // namespace

TEST_CASE("boundary-flat dictionaries")
{
    for (int size : {1, 5, 10, 20}) {
        TestDictionary dict = boundary_flat_dictionary(*ann1(), size);
        CHECK(static_cast<int>(dict.functions.size()) == size);
        CHECK(dict.functions[0].is_constant_one);
        CHECK(dict.averages[0] == 1.0);
        CHECK(dict.locality_defect < 1e-10);
    }
    TestDictionary disk_dict = boundary_flat_dictionary(Surface::disk(1.0), 10);
    CHECK(disk_dict.locality_defect < 1e-10);
    Surface capped = cap_surface(Surface::annulus(1.0), 2.0, 0.08);
    TestDictionary capped_dict = boundary_flat_dictionary(capped, 8);
    CHECK(capped_dict.locality_defect < 1e-10);
    CHECK_THROWS_AS(boundary_flat_dictionary(*ann1(), 0), PreconditionError);
}

TEST_CASE("equidistribution defects")
{
    auto a = ann1();
    SurfaceMap rot = rotation_map(a, 1.0 / 3.0);
    TestDictionary dict = boundary_flat_dictionary(*a, 8);

    SUBCASE("the constant function always has defect exactly zero")
    {
        OrbitSet o = rotation_lattice_set(rot, 3, 4);
        DefectReport rep = equidistribution_defect(o, dict, *a);
        CHECK(rep.entries[0].defect == 0.0);
        CHECK(rep.orbit_set_size == doctest::Approx(12.0));
    }
    SUBCASE("a size-1 dictionary reports all defects exactly zero")
    {
        TestDictionary one = boundary_flat_dictionary(*a, 1);
        OrbitSet o = rotation_lattice_set(rot, 3, 4);
        DefectReport rep = equidistribution_defect(o, one, *a);
        CHECK(rep.max_defect == 0.0);
    }
    SUBCASE("defects match the brute-force double sum")
    {
        OrbitSet o = rotation_lattice_set(rot, 3, 5);
        DefectReport rep = equidistribution_defect(o, dict, *a);
        for (size_t i = 1; i < dict.functions.size(); i++) {
            double direct = 0.0;
            int count = 0;
            for (const auto& [w, orbit] : o.terms)
                for (const PointCoord& p : orbit.points) {
                    direct += w * dict.functions[i].value(p);
                    count++;
                }
            CHECK(count == 15);
            double avg = direct / o.size();
            CHECK(rep.entries[i].orbit_average == doctest::Approx(avg).epsilon(1e-14));
            CHECK(rep.entries[i].defect ==
                  doctest::Approx(std::abs(avg - dict.averages[i])).epsilon(1e-12));
        }
    }
    SUBCASE("rescaling the coefficients leaves every defect unchanged")
    {
        OrbitSet o = rotation_lattice_set(rot, 3, 5);
        DefectReport rep1 = equidistribution_defect(o, dict, *a);
        for (auto& [w, orbit] : o.terms)
            w *= 7.3;
        DefectReport rep2 = equidistribution_defect(o, dict, *a);
        for (size_t i = 0; i < rep1.entries.size(); i++)
            CHECK(rep1.entries[i].defect == doctest::Approx(rep2.entries[i].defect).epsilon(1e-12));
    }
    SUBCASE("merged orbit sets average convexly")
    {
        OrbitSet o1 = rotation_lattice_set(rot, 3, 2);
        OrbitSet o2 = rotation_lattice_set(rot, 3, 7);
        auto f = dict.functions[2].value;
        double a1 = orbit_functional(o1, f) / o1.size();
        double a2 = orbit_functional(o2, f) / o2.size();
        double w = 0.3;
        OrbitSet merged;
        for (const auto& [c, s] : o1.terms)
            merged.terms.emplace_back(w * c, s);
        for (const auto& [c, s] : o2.terms)
            merged.terms.emplace_back((1.0 - w) * c, s);
        double am = orbit_functional(merged, f) / merged.size();
        double lo = std::min(a1, a2), hi = std::max(a1, a2);
        CHECK(am >= lo - 1e-12);
        CHECK(am <= hi + 1e-12);
    }
    SUBCASE("empty orbit sets are rejected")
    {
        OrbitSet empty;
        CHECK_THROWS_AS(equidistribution_defect(empty, dict, *a), PreconditionError);
    }
}

TEST_CASE("restriction of orbit sets on a capped surface")
{
    auto base = ann1();
    auto capped = std::make_shared<Surface>(cap_surface(*base, 2.0, 0.08));
    SurfaceMap ext = extend_boundary_rotation(rotation_map(base, 1.0 / 3.0), capped);

    OrbitSearchConfig cfg;
    cfg.max_period = 3;
    cfg.grid_major = 8;
    cfg.grid_minor = 9;
    std::vector<PeriodicOrbit> orbits = find_orbits(ext, cfg);
    REQUIRE(orbits.size() > 10);
    OrbitSet all = uniform_orbit_set(orbits);

    // brute-force membership oracle: a point lies in a cap interior iff its
    // cap-chart radius is below r0
    auto in_cap_interior = [&](const PointCoord& p) {
        PointCoord c = capped->canonical(p);
        return c.chart >= 1 && c.xy.norm() < capped->cap(c.chart - 1).r0 - 1e-9;
    };
    int cap_orbits = 0, z_orbits = 0;
    for (const PeriodicOrbit& o : orbits) {
        bool any_in = false, any_out = false;
        for (const PointCoord& p : o.points)
            (in_cap_interior(p) ? any_out : any_in) = true;
        CHECK(!(any_in && any_out)); // L-invariance: no straddling orbits
        (any_out ? cap_orbits : z_orbits)++;
    }
    REQUIRE(cap_orbits > 0);  // cap fixed points and cap period-3 points
    REQUIRE(z_orbits > 0);

    OrbitSet restricted = restrict_orbit_set(all, *capped);
    CHECK(static_cast<int>(restricted.terms.size()) == z_orbits);
    CHECK(restricted.size() <= all.size());
    for (const auto& [w, o] : restricted.terms) {
        for (const PointCoord& p : o.points) {
            CHECK(p.chart == 0); // rewritten in the base chart
            CHECK(!in_cap_interior(p));
        }
    }

    SUBCASE("restricted functionals equal the brute-force filtered sum")
    {
        auto f = [](const PointCoord& p) { return std::cos(kTwoPi * p.xy[1]) + p.xy[0]; };
        double direct = 0.0;
        for (const PeriodicOrbit& o : orbits) {
            bool in_z = true;
            for (const PointCoord& p : o.points)
                in_z = in_z && !in_cap_interior(p);
            if (!in_z)
                continue;
            for (const PointCoord& p : o.points)
                direct += f(*capped->convert(capped->canonical(p), 0));
        }
        CHECK(orbit_functional(restricted, f) == doctest::Approx(direct).epsilon(1e-12));
    }
    SUBCASE("boundary-circle orbits are retained")
    {
        bool found_lagrangian = false;
        for (const auto& [w, o] : restricted.terms)
            if (o.on_boundary)
                found_lagrangian = true;
        CHECK(found_lagrangian);
    }
    SUBCASE("an artificial straddling orbit trips the invariance diagnostic")
    {
        PeriodicOrbit bad;
        bad.period = 2;
        bad.points = {PointCoord(1, 0.0, 0.0), PointCoord(0, 0.5, 0.2)};
        OrbitSet o;
        o.terms.emplace_back(1.0, bad);
        CHECK_THROWS_WITH_AS(restrict_orbit_set(o, *capped),
                             doctest::Contains("invariance-violation"), PreconditionError);
    }
    SUBCASE("an all-cap orbit set restricts to the empty set, which is guarded downstream")
    {
        PeriodicOrbit cap_center;
        cap_center.period = 1;
        cap_center.points = {PointCoord(1, 0.0, 0.0)};
        OrbitSet o;
        o.terms.emplace_back(1.0, cap_center);
        OrbitSet r = restrict_orbit_set(o, *capped);
        CHECK(r.terms.empty());
        TestDictionary dict = boundary_flat_dictionary(*capped, 3);
        CHECK_THROWS_AS(equidistribution_defect(r, dict, *capped), PreconditionError);
    }
}

TEST_CASE("defect sequence experiments")
{
    auto a = ann1();
    SurfaceMap rot = rotation_map(a, 1.0 / 3.0);
    TestDictionary dict = boundary_flat_dictionary(*a, 5);
    DefectSequenceConfig cfg;
    cfg.search.grid_major = 6;
    cfg.search.grid_minor = 9;
    std::vector<DefectReport> reports = defect_sequence_experiment(rot, dict, {1, 2, 3, 6}, cfg);
    REQUIRE(reports.size() == 4);
    // no orbits below period 3 for the 1/3 rotation
    CHECK(reports[0].skipped);
    CHECK(reports[1].skipped);
    CHECK(!reports[2].skipped);
    CHECK(!reports[3].skipped);
    // rigid rotation: the census is pinned to period-3 orbits, so the
    // defect plateaus between levels 3 and 6
    CHECK(reports[2].max_defect == doctest::Approx(reports[3].max_defect).epsilon(1e-12));
    CHECK_THROWS_AS(defect_sequence_experiment(rot, dict, {}, cfg), PreconditionError);
}
