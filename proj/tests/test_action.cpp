#include <doctest.h>

#include "surfdyn/action.hpp"
#include "surfdyn/hamiltonian.hpp"
#include "surfdyn/map.hpp"

#include <cmath>
#include <memory>

using namespace surfdyn;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const Surface> disk1() { return std::make_shared<Surface>(Surface::disk(1.0)); }
std::shared_ptr<const Surface> ann1() { return std::make_shared<Surface>(Surface::annulus(1.0)); }

// the area-1 disk twist Theta(r) = pi (1 - r^2); closed form:
// f = (1 - r^4)/4, Cal = 1/6, center action 1/4, boundary action 0
ActionProfile twist_profile(std::shared_ptr<const Surface> d, const ActionConfig& cfg = ActionConfig())
{
    SurfaceMap twist = radial_twist_map(d, {kPi, -kPi});
    return build_action(twist, standard_primitive(*d), 0, PointCoord(0, 0.0, 0.0), cfg);
}

} // namespace

TEST_CASE("twist action matches the closed form f = (1 - r^4)/4")
{
    auto d = disk1();
    ActionProfile f = twist_profile(d);
    CHECK(f.exactness_defect() < 1e-7);
    CHECK(f.boundary_info().rational);
    // boundary circle is fixed pointwise: rotation number 0
    CHECK(f.boundary_info().p == 0);
    std::mt19937_64 rng(77);
    for (int i = 0; i < 40; i++) {
        PointCoord p = d->sample(rng);
        double r4 = p.xy.squaredNorm() * p.xy.squaredNorm();
        CHECK(f(p) == doctest::Approx((1.0 - r4) / 4.0).epsilon(1e-9));
    }
    CHECK(f(PointCoord(0, 0.0, 0.0)) == doctest::Approx(0.25).epsilon(1e-10));
    // normalization: the action vanishes on the boundary circle
    CHECK(std::abs(f(PointCoord(0, 1.0, 0.0))) < 1e-9);
    CHECK(std::abs(f(PointCoord(0, 0.0, -1.0))) < 1e-9);
}

TEST_CASE("d f_raw = phi^* beta - beta by finite differences")
{
    auto d = disk1();
    ActionProfile f = twist_profile(d);
    const double h = 1e-5;
    std::mt19937_64 rng(78);
    for (int i = 0; i < 10; i++) {
        PointCoord p(0, 0.0, 0.0);
        do {
            p = d->sample(rng);
        } while (p.xy.norm() > 0.9);
        Vec2 grad_fd((f.raw(PointCoord(0, p.xy[0] + h, p.xy[1])) -
                      f.raw(PointCoord(0, p.xy[0] - h, p.xy[1]))) /
                         (2 * h),
                     (f.raw(PointCoord(0, p.xy[0], p.xy[1] + h)) -
                      f.raw(PointCoord(0, p.xy[0], p.xy[1] - h))) /
                         (2 * h));
        Vec2 form = f.form()(p);
        CHECK((grad_fd - form).norm() < 1e-7);
    }
}

TEST_CASE("rigid rotation: the action vanishes identically and Cal = 0")
{
    auto d = disk1();
    SurfaceMap rot = rotation_map(d, 0.37);
    ActionProfile f =
        build_action(rot, standard_primitive(*d), 0, PointCoord(0, 0.0, 0.0), ActionConfig());
    std::mt19937_64 rng(79);
    for (int i = 0; i < 30; i++)
        CHECK(std::abs(f(d->sample(rng))) < 1e-12);
    CalabiReport rep = calabi(f, 1e-10, 100);
    CHECK(std::abs(rep.calabi) < 1e-10);
}

TEST_CASE("calabi of the twist is 1/6 with a consistent Monte Carlo band")
{
    auto d = disk1();
    ActionProfile f = twist_profile(d);
    CalabiReport rep = calabi(f, 1e-9, 400);
    CHECK(rep.calabi == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
    CHECK(rep.quad_converged);
    CHECK(std::abs(rep.mc_estimate - rep.calabi) < rep.mc_halfwidth + 1e-6);
    CHECK(std::abs(rep.boundary_mean - (-0.25)) < 1e-9);
}

TEST_CASE("calabi homogeneity: scaling omega and beta by c scales Cal by c")
{
    auto d1 = disk1();
    auto d2 = std::make_shared<Surface>(Surface::disk(2.0));
    SurfaceMap t1 = radial_twist_map(d1, {kPi, -kPi});
    SurfaceMap t2 = radial_twist_map(d2, {kPi, -kPi});
    ActionProfile f1 = build_action(t1, standard_primitive(*d1), 0, PointCoord(0, 0, 0));
    ActionProfile f2 = build_action(t2, standard_primitive(*d2), 0, PointCoord(0, 0, 0));
    double c1 = calabi(f1, 1e-9, 50).calabi;
    double c2 = calabi(f2, 1e-9, 50).calabi;
    CHECK(c2 == doctest::Approx(2.0 * c1).epsilon(1e-6));
}

TEST_CASE("non-exact pullback difference is rejected with the offending cycle")
{
    auto a = ann1();
    // (s, t) -> (1 - s, -t) swaps the boundary circles; phi^* beta - beta = -dt
    SurfaceMap swap(a, MapRepresentation::ClosedForm, "boundary-swap",
                    [](const PointCoord& p) {
                        return PointCoord(0, 1.0 - p.xy[0], wrap_unit(-p.xy[1]));
                    },
                    [](const PointCoord&) {
                        Mat2 m;
                        m << -1, 0, 0, -1;
                        return m;
                    });
    CHECK(area_preservation_defect(swap, 200) < 1e-12);
    CHECK_THROWS_WITH_AS(
        build_action(swap, standard_primitive(*a), 0, PointCoord(0, 0.5, 0.0), ActionConfig()),
        doctest::Contains("not exact"), PreconditionError);
}

TEST_CASE("mean actions over the twist census")
{
    auto d = disk1();
    SurfaceMap twist = radial_twist_map(d, {kPi, -kPi});
    ActionProfile f = twist_profile(d);

    OrbitSearchConfig ocfg;
    ocfg.max_period = 6;
    ocfg.grid_major = 10;
    ocfg.grid_minor = 12;
    std::vector<PeriodicOrbit> orbits = find_orbits(twist, ocfg);
    REQUIRE(orbits.size() >= 10);
    std::vector<MeanActionRecord> records = mean_actions(f, orbits);

    SUBCASE("closed-form check: interior orbits have mean action (1 - r^4)/4")
    {
        for (size_t i = 0; i < orbits.size(); i++) {
            double r4 = orbits[i].points[0].xy.squaredNorm() * orbits[i].points[0].xy.squaredNorm();
            if (orbits[i].on_boundary)
                continue;
            CHECK(records[i].mean_action == doctest::Approx((1.0 - r4) / 4.0).epsilon(1e-8));
        }
    }
    SUBCASE("Birkhoff cross-check equals the orbit average to 1e-10")
    {
        for (const MeanActionRecord& r : records)
            CHECK(std::abs(r.birkhoff_check - r.mean_action) < 1e-10);
    }
    SUBCASE("all points of one orbit report the same asymptotic mean action")
    {
        auto field = [&f](const PointCoord& p) { return f(p); };
        for (const PeriodicOrbit& o : orbits) {
            if (o.period < 2)
                continue;
            double ref = birkhoff_mean(twist, field, o.points[0], o.period).estimate;
            for (const PointCoord& p : o.points) {
                double v = birkhoff_mean(twist, field, p, o.period).estimate;
                CHECK(std::abs(v - ref) < 1e-10);
            }
        }
    }
    SUBCASE("the census inequality holds: min <= Cal <= max")
    {
        double cal = calabi(f, 1e-9, 50).calabi;
        InequalityVerdict v = inequality_check(cal, records);
        CHECK(v.holds_on_census);
        CHECK(v.side == InequalitySide::Holds);
        CHECK(v.min_mean_action == doctest::Approx(0.0).epsilon(1e-8));
        CHECK(v.max_mean_action == doctest::Approx(0.25).epsilon(1e-8));
    }
    SUBCASE("a census of only the center fails on the inf side")
    {
        std::vector<MeanActionRecord> center_only;
        for (size_t i = 0; i < orbits.size(); i++)
            if (orbits[i].period == 1 && !orbits[i].on_boundary)
                center_only.push_back(records[i]);
        REQUIRE(center_only.size() == 1);
        InequalityVerdict v = inequality_check(1.0 / 6.0, center_only);
        CHECK(!v.holds_on_census);
        CHECK(v.side == InequalitySide::FailsInf);
    }
    SUBCASE("p-epsilon census: both tails are populated at epsilon = 1/2")
    {
        double cal = 1.0 / 6.0;
        CensusFractions frac = p_epsilon_census(f, cal, orbits, records, 0.5,
                                                CensusWeighting::Uniform);
        CHECK(frac.p_plus > 0.0);
        CHECK(frac.p_minus > 0.0);
        CHECK(!frac.negative_branch);
        CensusFractions tiny = p_epsilon_census(f, cal, orbits, records, 1e-4,
                                                CensusWeighting::Uniform);
        // as epsilon -> 0 the tails shrink toward the level set f = Cal
        CHECK(tiny.p_plus + tiny.p_minus <= frac.p_plus + frac.p_minus);
        CHECK_THROWS_AS(p_epsilon_census(f, cal, orbits, records, 0.0), PreconditionError);
    }
}

TEST_CASE("primitive independence: beta and beta + dg give the same mean actions")
{
    auto d = disk1();
    SurfaceMap twist = radial_twist_map(d, {kPi, -kPi});
    OneForm beta = standard_primitive(*d);
    double c = 0.3;
    OneForm beta2 = add_exact(
        beta,
        [c](const PointCoord& p) { return Vec2(2.0 * c * p.xy[0] * p.xy[1], c * p.xy[0] * p.xy[0]); },
        [c](const PointCoord& p) {
            Mat2 m;
            m << 2.0 * c * p.xy[1], 2.0 * c * p.xy[0], 2.0 * c * p.xy[0], 0.0;
            return m;
        });
    ActionProfile f1 = build_action(twist, beta, 0, PointCoord(0, 0, 0));
    ActionProfile f2 = build_action(twist, beta2, 0, PointCoord(0, 0, 0));

    OrbitSearchConfig ocfg;
    ocfg.max_period = 6;
    ocfg.grid_major = 10;
    ocfg.grid_minor = 12;
    std::vector<PeriodicOrbit> orbits = find_orbits(twist, ocfg);
    REQUIRE(orbits.size() >= 10);
    std::vector<MeanActionRecord> r1 = mean_actions(f1, orbits);
    std::vector<MeanActionRecord> r2 = mean_actions(f2, orbits);
    for (size_t i = 0; i < orbits.size(); i++)
        CHECK(std::abs(r1[i].mean_action - r2[i].mean_action) < 1e-8);
}

TEST_CASE("birkhoff averages")
{
    SUBCASE("invariant functions average to themselves")
    {
        auto d = disk1();
        SurfaceMap rot = rotation_map(d, 0.123);
        auto f = [](const PointCoord& p) { return p.xy.squaredNorm(); };
        PointCoord x(0, 0.4, 0.2);
        BirkhoffResult r = birkhoff_mean(rot, f, x, 500);
        CHECK(r.estimate == doctest::Approx(f(x)).epsilon(1e-12));
        CHECK(r.fluctuation < 1e-12);
    }
    SUBCASE("irrational annulus rotation: angular modes average to zero at rate 1/n")
    {
        auto a = ann1();
        double alpha = std::sqrt(2.0) - 1.0;
        SurfaceMap rot = rotation_map(a, alpha);
        auto f = [](const PointCoord& p) { return std::sin(2.0 * kPi * p.xy[1]); };
        PointCoord x(0, 0.5, 0.1);
        for (long n : {1000L, 10000L}) {
            BirkhoffResult r = birkhoff_mean(rot, f, x, n);
            // partial sums under an irrational rotation stay uniformly bounded
            CHECK(std::abs(r.estimate) < 50.0 / static_cast<double>(n));
        }
    }
    SUBCASE("integral identity: Monte Carlo of f^infty matches the quadrature of f")
    {
        auto d = disk1();
        SurfaceMap twist = radial_twist_map(d, {kPi, -kPi});
        ActionProfile f = twist_profile(d);
        auto field = [&f](const PointCoord& p) { return f(p); };
        std::mt19937_64 rng(2024);
        const int m = 60;
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < m; i++) {
            BirkhoffResult r = birkhoff_mean(twist, field, d->sample(rng), 150);
            sum += r.estimate;
            sq += r.estimate * r.estimate;
        }
        double mean = sum / m;
        double half = 1.96 * std::sqrt(std::max(0.0, sq / m - mean * mean) / m);
        double quad = calabi(f, 1e-9, 10).calabi;
        CHECK(std::abs(mean - quad) < half + 1e-6);
    }
}

TEST_CASE("boundary normalization on an irrational-rotation annulus map")
{
    auto a = ann1();
    double alpha = (std::sqrt(5.0) - 1.0) / 2.0;
    SurfaceMap rot = rotation_map(a, alpha);
    ActionConfig cfg;
    cfg.boundary_max_iters = 200000;
    ActionProfile f = build_action(rot, standard_primitive(*a), 0, PointCoord(0, 0.5, 0.0), cfg);
    // the rotation preserves beta = s dt, so the action is constant zero
    CHECK(!f.boundary_info().rational);
    std::mt19937_64 rng(31337);
    for (int i = 0; i < 20; i++)
        CHECK(std::abs(f(a->sample(rng))) < std::max(1e-7, f.boundary_info().fluctuation));
}

TEST_CASE("p-epsilon census uses the reversed branch when Cal < 0")
{
    auto d = disk1();
    // reversed twist: Theta(r) = -pi (1 - r^2), so f = -(1 - r^4)/4, Cal = -1/6
    SurfaceMap twist = radial_twist_map(d, {-kPi, kPi});
    ActionProfile f = build_action(twist, standard_primitive(*d), 0, PointCoord(0, 0, 0));
    CalabiReport rep = calabi(f, 1e-9, 50);
    CHECK(rep.calabi == doctest::Approx(-1.0 / 6.0).epsilon(1e-6));

    OrbitSearchConfig ocfg;
    ocfg.max_period = 4;
    ocfg.grid_major = 8;
    ocfg.grid_minor = 10;
    std::vector<PeriodicOrbit> orbits = find_orbits(twist, ocfg);
    std::vector<MeanActionRecord> records = mean_actions(f, orbits);
    CensusFractions frac =
        p_epsilon_census(f, rep.calabi, orbits, records, 0.5, CensusWeighting::Uniform);
    CHECK(frac.negative_branch);
    // the center (-1/4 <= (1-eps)Cal = -1/12) sits in P+,
    // the boundary (0 >= (1+eps)Cal = -1/4) sits in P-
    CHECK(frac.p_plus > 0.0);
    CHECK(frac.p_minus > 0.0);
    InequalityVerdict v = inequality_check(rep.calabi, records);
    CHECK(v.holds_on_census);
}

TEST_CASE("birkhoff averaging reports orbit escape as truncation")
{
    auto a = ann1();
    // fixture that pushes points off the chart (not an annulus self-map)
    SurfaceMap drift(a, MapRepresentation::ClosedForm, "drift",
                     [](const PointCoord& p) {
                         return PointCoord(0, p.xy[0] + 0.1, p.xy[1]);
                     },
                     [](const PointCoord&) { return Mat2::Identity().eval(); });
    auto f = [](const PointCoord& p) { return p.xy[0]; };
    BirkhoffResult r = birkhoff_mean(drift, f, PointCoord(0, 0.5, 0.2), 100);
    CHECK(r.truncated);
    CHECK(r.iterations < 100);
    CHECK(r.iterations >= 5);
}

TEST_CASE("boundary normalization with a non-rigid boundary circle map")
{
    // H = s (1 - s) cos(2 pi t): locally constant (zero) on both circles, but
    // the induced boundary circle map t' = flow of -cos(2 pi t) has isolated
    // fixed points, exercising the periodic-point root search.
    auto a = ann1();
    Hamiltonian h;
    h.name = "s(1-s)cos";
    h.autonomous = true;
    h.value = [](double, const PointCoord& p) {
        return p.xy[0] * (1.0 - p.xy[0]) * std::cos(2.0 * kPi * p.xy[1]);
    };
    h.grad = [](double, const PointCoord& p) {
        double s = p.xy[0], t = p.xy[1];
        return Vec2((1.0 - 2.0 * s) * std::cos(2.0 * kPi * t),
                    -2.0 * kPi * s * (1.0 - s) * std::sin(2.0 * kPi * t));
    };
    h.hess = [](double, const PointCoord& p) {
        double s = p.xy[0], t = p.xy[1];
        double c = std::cos(2.0 * kPi * t), sn = std::sin(2.0 * kPi * t);
        Mat2 m;
        m << -2.0 * c, -2.0 * kPi * (1.0 - 2.0 * s) * sn,
            -2.0 * kPi * (1.0 - 2.0 * s) * sn, -4.0 * kPi * kPi * s * (1.0 - s) * c;
        return m;
    };
    CHECK(boundary_constancy_defect(h, *a) < 1e-12);
    // the checks are structural (the integrated map is area-preserving at
    // any step count), so a coarse integrator keeps the test fast
    IntegratorConfig icfg;
    icfg.steps_per_unit = 32;
    SurfaceMap phi = hamiltonian_time_one(a, h, icfg);
    ActionConfig acfg;
    acfg.exactness_loops = 20;
    acfg.boundary_grid = 512;
    acfg.rotation_iters = 1024;
    ActionProfile f = build_action(phi, standard_primitive(*a), 0, PointCoord(0, 0.5, 0.0), acfg);
    // rotation number 0 with isolated periodic points
    CHECK(f.boundary_info().rational);
    CHECK(f.boundary_info().q == 1);
    // beta = s dt vanishes on the boundary tangent, so the raw action is
    // constant along gamma and the normalized action vanishes there
    for (double t : {0.0, 0.2, 0.25, 0.6, 0.75})
        CHECK(std::abs(f(PointCoord(0, 0.0, t))) < 1e-8);
    // exactness held (the map is Hamiltonian)
    CHECK(f.exactness_defect() < 1e-7);
}
