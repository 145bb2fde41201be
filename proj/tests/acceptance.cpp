// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] must point at the surfdyn CLI binary (used by the
// determinism criterion).

#include "surfdyn/action.hpp"
#include "surfdyn/equidist.hpp"
#include "surfdyn/flux.hpp"
#include "surfdyn/hamiltonian.hpp"
#include "surfdyn/map.hpp"
#include "surfdyn/moser.hpp"
#include "surfdyn/orbits.hpp"
#include "toy_permutation.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace surfdyn;
using namespace surfdyn_tests;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string g_cli_path;

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << "FAILED: " << what;
        }
    }
    void note(const std::string& what)
    {
        detail << (detail.str().empty() ? "" : "; ") << what;
    }
};

std::shared_ptr<const Surface> disk1() { return std::make_shared<Surface>(Surface::disk(1.0)); }
std::shared_ptr<const Surface> ann1() { return std::make_shared<Surface>(Surface::annulus(1.0)); }

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. Capping exactness

void criterion_capping(Check& c)
{
    Surface capped = cap_surface(Surface::disk(1.0), 2.0, 0.1);
    double r0_err = std::abs(capped.cap(0).r0 - std::sqrt(1.0 / kPi));
    double r1_err = std::abs(capped.cap(0).r1 - std::sqrt(1.1 / kPi));
    c.require(r0_err < 1e-14, "r0 formula to 1e-14 (err " + fmt(r0_err) + ")");
    c.require(r1_err < 1e-14, "r1 formula to 1e-14 (err " + fmt(r1_err) + ")");
    double defect = verify_area_form(capped, 100);
    c.require(defect < 1e-10, "pullback defect < 1e-10 on the 100x100 grid (got " + fmt(defect) + ")");
    c.note("r0=" + fmt(capped.cap(0).r0) + " r1=" + fmt(capped.cap(0).r1) + " defect=" + fmt(defect));
}

// ---------------------------------------------------------------------------
// 2. Area preservation across every built-in family

void criterion_area_preservation(Check& c)
{
    IntegratorConfig icfg;
    auto d = disk1();
    auto a = ann1();
    auto capped_d = std::make_shared<Surface>(cap_surface(*d, 2.0, 0.1));
    auto capped_a = std::make_shared<Surface>(cap_surface(*a, 2.0, 0.08));

    std::vector<SurfaceMap> family;
    family.push_back(identity_map(d));
    family.push_back(rotation_map(d, 0.37));
    family.push_back(rotation_map(a, 0.29));
    family.push_back(radial_twist_map(d, {kPi, -kPi}));
    family.push_back(flat_twist_map(d, 1.3, 0.0, 0.3, 0.8));
    family.push_back(shear_map(a, 0.21, 0.6));
    family.push_back(perturbed_twist_map(a, 0.12, 1.0, 0.05, 1, icfg));
    family.push_back(hamiltonian_time_one(d, expression_hamiltonian(*d, "0.2*r2^2"), icfg));
    family.push_back(hamiltonian_time_one(a, flattened_perturbation(*a, 0.08, 2, 0.15), icfg));
    family.push_back(rotation_map(capped_d, 0.37));
    family.push_back(extend_boundary_rotation(rotation_map(a, 1.0 / 3.0), capped_a));
    family.push_back(compose(radial_twist_map(d, {kPi, -kPi}), rotation_map(d, 0.11)));

    for (size_t i = 0; i < family.size(); i++) {
        double defect = area_preservation_defect(family[i], 1000, 9000 + static_cast<unsigned>(i));
        c.require(defect <= 1e-8,
                  family[i].name() + ": |det Dphi - 1| <= 1e-8 at 1000 points (got " + fmt(defect) + ")");
    }
    c.note(std::to_string(family.size()) + " families x 1000 points");
}

// ---------------------------------------------------------------------------
// 3. Closed-form Calabi oracle on the radial twist

struct TwistBundle {
    std::shared_ptr<const Surface> surface;
    SurfaceMap map;
    ActionProfile profile;
    std::vector<PeriodicOrbit> orbits;
    std::vector<MeanActionRecord> records;
};

TwistBundle twist_bundle()
{
    auto d = disk1();
    SurfaceMap twist = radial_twist_map(d, {kPi, -kPi});
    ActionProfile profile =
        build_action(twist, standard_primitive(*d), 0, PointCoord(0, 0.0, 0.0), ActionConfig());
    OrbitSearchConfig ocfg;
    ocfg.max_period = 6;
    ocfg.grid_major = 10;
    ocfg.grid_minor = 12;
    std::vector<PeriodicOrbit> orbits = find_orbits(twist, ocfg);
    std::vector<MeanActionRecord> records = mean_actions(profile, orbits);
    return TwistBundle{d, std::move(twist), std::move(profile), std::move(orbits),
                       std::move(records)};
}

void criterion_calabi_oracle(Check& c)
{
    TwistBundle b = twist_bundle();
    // f = (1 - r^4)/4 pointwise
    std::mt19937_64 rng(404);
    double worst = 0.0;
    for (int i = 0; i < 25; i++) {
        PointCoord p = b.surface->sample(rng);
        double r4 = p.xy.squaredNorm() * p.xy.squaredNorm();
        worst = std::max(worst, std::abs(b.profile(p) - (1.0 - r4) / 4.0));
    }
    c.require(worst < 1e-8, "f = (1 - r^4)/4 pointwise (worst " + fmt(worst) + ")");

    CalabiReport rep = calabi(b.profile, 1e-9, 400);
    c.require(std::abs(rep.calabi - 1.0 / 6.0) <= 1e-6,
              "Cal = 1/6 +- 1e-6 (got " + fmt(rep.calabi) + ")");

    bool saw_center = false, saw_boundary = false;
    for (size_t i = 0; i < b.orbits.size(); i++) {
        if (b.orbits[i].period == 1 && !b.orbits[i].on_boundary &&
            b.orbits[i].points[0].xy.norm() < 1e-6) {
            saw_center = true;
            c.require(std::abs(b.records[i].mean_action - 0.25) <= 1e-8,
                      "center mean action 1/4 +- 1e-8 (got " + fmt(b.records[i].mean_action) + ")");
        }
        if (b.orbits[i].on_boundary) {
            saw_boundary = true;
            c.require(std::abs(b.records[i].mean_action) <= 1e-8,
                      "boundary mean action 0 +- 1e-8 (got " + fmt(b.records[i].mean_action) + ")");
        }
    }
    c.require(saw_center, "census contains the center fixed point");
    c.require(saw_boundary, "census contains a boundary orbit");

    InequalityVerdict v = inequality_check(rep.calabi, b.records, 1e-9);
    c.require(v.holds_on_census, "inequality HOLDS-on-census");
    c.note("Cal=" + fmt(rep.calabi) + " census=" + std::to_string(b.orbits.size()) +
           " min=" + fmt(v.min_mean_action) + " max=" + fmt(v.max_mean_action));
}

// ---------------------------------------------------------------------------
// 4. Mean-action property suite (two primitives / integral identity /
//    periodic-point identity)

void criterion_mean_action_suite(Check& c)
{
    TwistBundle b = twist_bundle();

    // (a) a second primitive differing by an exact form
    double k = 0.3;
    OneForm beta2 = add_exact(
        standard_primitive(*b.surface),
        [k](const PointCoord& p) { return Vec2(2.0 * k * p.xy[0] * p.xy[1], k * p.xy[0] * p.xy[0]); },
        [k](const PointCoord& p) {
            Mat2 m;
            m << 2.0 * k * p.xy[1], 2.0 * k * p.xy[0], 2.0 * k * p.xy[0], 0.0;
            return m;
        });
    ActionProfile f2 =
        build_action(b.map, beta2, 0, PointCoord(0, 0.0, 0.0), ActionConfig());
    std::vector<MeanActionRecord> records2 = mean_actions(f2, b.orbits);
    c.require(b.orbits.size() >= 10,
              ">= 10 census orbits (got " + std::to_string(b.orbits.size()) + ")");
    double worst_a = 0.0;
    for (size_t i = 0; i < b.orbits.size(); i++)
        worst_a = std::max(worst_a, std::abs(b.records[i].mean_action - records2[i].mean_action));
    c.require(worst_a < 1e-8, "(a) primitive independence to 1e-8 (worst " + fmt(worst_a) + ")");

    // (b) Monte Carlo of the ergodic average vs quadrature of f
    auto field = [&](const PointCoord& p) { return b.profile(p); };
    std::mt19937_64 rng(2024);
    const int m = 80;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < m; i++) {
        BirkhoffResult r = birkhoff_mean(b.map, field, b.surface->sample(rng), 150);
        sum += r.estimate;
        sq += r.estimate * r.estimate;
    }
    double mean = sum / m;
    double half = 1.96 * std::sqrt(std::max(0.0, sq / m - mean * mean) / m);
    CalabiReport rep = calabi(b.profile, 1e-9, 50);
    double gap = std::abs(mean - rep.calabi);
    c.require(gap < half + rep.quad_tolerance + 1e-9,
              "(b) MC ergodic integral within the combined bands (gap " + fmt(gap) + " vs " +
                  fmt(half) + ")");

    // (c) d-step Birkhoff average at a period-d point equals S(f)/|S|
    double worst_c = 0.0;
    for (const MeanActionRecord& r : b.records)
        worst_c = std::max(worst_c, std::abs(r.birkhoff_check - r.mean_action));
    c.require(worst_c < 1e-10, "(c) periodic-point identity to 1e-10 (worst " + fmt(worst_c) + ")");
}

// ---------------------------------------------------------------------------
// 5. Rigid rotation degenerate case

void criterion_rigid_rotation(Check& c)
{
    auto d = disk1();
    SurfaceMap rot = rotation_map(d, 1.0 / 3.0);
    ActionProfile f =
        build_action(rot, standard_primitive(*d), 0, PointCoord(0, 0.0, 0.0), ActionConfig());
    CalabiReport rep = calabi(f, 1e-10, 100);
    c.require(std::abs(rep.calabi) <= 1e-10, "Cal = 0 +- 1e-10 (got " + fmt(rep.calabi) + ")");

    OrbitSearchConfig ocfg;
    ocfg.max_period = 3;
    ocfg.grid_major = 6;
    ocfg.grid_minor = 8;
    std::vector<PeriodicOrbit> orbits = find_orbits(rot, ocfg);
    std::vector<MeanActionRecord> records = mean_actions(f, orbits);
    c.require(!records.empty(), "non-empty census");
    double worst = 0.0;
    for (const MeanActionRecord& r : records)
        worst = std::max(worst, std::abs(r.mean_action));
    c.require(worst <= 1e-10, "all mean actions 0 (worst " + fmt(worst) + ")");
    c.note("census=" + std::to_string(records.size()));
}

// ---------------------------------------------------------------------------
// 6. Flux and rationality verdicts

void criterion_flux(Check& c)
{
    auto a = ann1();
    std::vector<CycleSpec> cycles;
    cycles.push_back(gate_cycle(*a));
    cycles.push_back(core_cycle(*a));
    cycles.push_back(boundary_cycle(*a, 0));

    Isotopy ham = hamiltonian_isotopy(a, flattened_perturbation(*a, 0.1, 1, 0.15), IntegratorConfig());
    for (const CycleSpec& cy : cycles) {
        double f = isotopy_flux(*a, ham, cy);
        c.require(std::abs(f) < 1e-8,
                  "hamiltonian flux over " + cy.id + " < 1e-8 (got " + fmt(f) + ")");
    }

    struct Case {
        double value;
        bool rational;
        long p, q;
    };
    const Case cases[] = {{0.5, true, 1, 2}, {0.3, true, 3, 10}, {1.0 / std::sqrt(2.0), false, 29, 41}};
    for (const Case& k : cases) {
        double flux = isotopy_flux(*a, shear_isotopy(a, k.value, 0.0), gate_cycle(*a));
        c.require(std::abs(flux - k.value) <= 1e-8,
                  "shear flux " + fmt(k.value) + " +- 1e-8 (got " + fmt(flux) + ")");
        FluxReport rep = rationality_verdict({{"gate", flux}}, a->total_area(), 50, 1e-9);
        const RationalApproximation& ap = rep.entries[0].approx;
        if (k.rational) {
            c.require(ap.verdict == RationalityVerdict::Rational && ap.p == k.p && ap.q == k.q,
                      "verdict rational " + std::to_string(k.p) + "/" + std::to_string(k.q));
        } else {
            c.require(ap.verdict == RationalityVerdict::IrrationalWithinTolerance,
                      "verdict irrational-within-tolerance for 1/sqrt(2)");
        }
    }
}

// ---------------------------------------------------------------------------
// 7. Orbit-finder oracle

void criterion_orbit_oracle(Check& c)
{
    auto a = ann1();
    SurfaceMap cat = toy_cat_map(a);
    ToyCycles oracle = toy_cycle_oracle();
    OrbitSearchConfig cfg = toy_search_config(oracle);
    std::vector<PeriodicOrbit> orbits = find_orbits(cat, cfg);
    auto found = toy_found_cycles(orbits);
    c.require(found.size() == oracle.cycles.size(),
              "cycle count matches enumeration (" + std::to_string(found.size()) + " vs " +
                  std::to_string(oracle.cycles.size()) + ")");
    c.require(found == oracle.cycles, "cycles match the brute-force decomposition exactly");

    auto d = disk1();
    SurfaceMap rot = rotation_map(d, 1.0 / 3.0);
    OrbitSearchConfig rcfg;
    rcfg.max_period = 3;
    rcfg.grid_major = 6;
    rcfg.grid_minor = 8;
    std::vector<PeriodicOrbit> rorbits = find_orbits(rot, rcfg);
    int period3 = 0;
    double worst_res = 0.0, worst_mono = 0.0;
    for (const PeriodicOrbit& o : rorbits) {
        if (o.period != 3)
            continue;
        period3++;
        worst_res = std::max(worst_res, o.residual);
        worst_mono =
            std::max(worst_mono, (o.monodromy - Mat2::Identity()).cwiseAbs().maxCoeff());
    }
    c.require(period3 > 0, "period-3 orbits found for the 2 pi/3 rotation");
    c.require(worst_res < 1e-10, "period-3 residuals < 1e-10 (worst " + fmt(worst_res) + ")");
    c.require(worst_mono <= 1e-8, "Dphi^3 = Id to 1e-8 (worst " + fmt(worst_mono) + ")");
    c.note(std::to_string(found.size()) + " toy cycles, " + std::to_string(period3) +
           " rotation orbits");
}

// ---------------------------------------------------------------------------
// 8. Moser interpolation

void criterion_moser(Check& c)
{
    auto a = ann1();
    AreaForm omega0 = surface_area_form(*a);
    const double eps = 0.1;
    AreaForm omega1;
    omega1.density = [eps](const PointCoord& p) { return 1.0 + eps * std::cos(2.0 * kPi * p.xy[1]); };
    omega1.grad = [eps](const PointCoord& p) {
        return Vec2(0.0, -eps * 2.0 * kPi * std::sin(2.0 * kPi * p.xy[1]));
    };
    OneForm sigma;
    sigma.cov = [eps](const PointCoord& pt) {
        double s = pt.xy[0], t = pt.xy[1];
        return Vec2(-(eps * (1.0 - s) / kPi) * std::sin(2.0 * kPi * t),
                    eps * (s * s - s) * std::cos(2.0 * kPi * t));
    };
    sigma.dcov = [eps](const PointCoord& pt) {
        double s = pt.xy[0], t = pt.xy[1];
        Mat2 j;
        j(0, 0) = (eps / kPi) * std::sin(2.0 * kPi * t);
        j(0, 1) = -(eps * (1.0 - s)) * 2.0 * std::cos(2.0 * kPi * t);
        j(1, 0) = eps * (2.0 * s - 1.0) * std::cos(2.0 * kPi * t);
        j(1, 1) = -eps * (s * s - s) * 2.0 * kPi * std::sin(2.0 * kPi * t);
        return j;
    };
    SurfaceMap tau = moser_interpolate(a, omega0, omega1, sigma);
    double defect = moser_pullback_defect(tau, omega0, omega1, 64);
    c.require(defect < 1e-7, "tau_1^* Omega1 = Omega0 on the 64x64 grid (defect " + fmt(defect) + ")");

    SurfaceMap id_tau = moser_interpolate(a, omega0, omega0, zero_one_form());
    std::mt19937_64 rng(808);
    double worst = 0.0;
    for (int i = 0; i < 50; i++) {
        PointCoord p = a->sample(rng);
        worst = std::max(worst, a->chart_delta(id_tau(p), a->canonical(p)).norm());
    }
    c.require(worst < 1e-12, "identity recovered when Omega0 = Omega1, sigma = 0 (worst " +
                                 fmt(worst) + ")");
}

// ---------------------------------------------------------------------------
// 9. Restriction operator on a capped extension

void criterion_restriction(Check& c)
{
    auto base = ann1();
    auto capped = std::make_shared<Surface>(cap_surface(*base, 2.0, 0.08));
    SurfaceMap ext = extend_boundary_rotation(rotation_map(base, 1.0 / 3.0), capped);

    OrbitSearchConfig cfg;
    cfg.max_period = 3;
    cfg.grid_major = 8;
    cfg.grid_minor = 9;
    std::vector<PeriodicOrbit> orbits = find_orbits(ext, cfg);
    c.require(orbits.size() > 10, "census populated (" + std::to_string(orbits.size()) + " orbits)");

    auto in_cap_interior = [&](const PointCoord& p) {
        PointCoord q = capped->canonical(p);
        return q.chart >= 1 && q.xy.norm() < capped->cap(q.chart - 1).r0 - 1e-9;
    };
    int cap_orbits = 0, z_orbits = 0;
    bool straddle = false;
    for (const PeriodicOrbit& o : orbits) {
        int in = 0, out = 0;
        for (const PointCoord& p : o.points)
            (in_cap_interior(p) ? out : in)++;
        if (in > 0 && out > 0)
            straddle = true;
        (out > 0 ? cap_orbits : z_orbits)++;
    }
    c.require(!straddle, "no straddling orbits (L-invariance)");
    c.require(cap_orbits > 0 && z_orbits > 0, "census spans both sides of L");

    OrbitSet all = uniform_orbit_set(orbits);
    OrbitSet restricted = restrict_orbit_set(all, *capped);
    c.require(static_cast<int>(restricted.terms.size()) == z_orbits,
              "restriction keeps exactly the Z-orbits (" +
                  std::to_string(restricted.terms.size()) + " vs " + std::to_string(z_orbits) + ")");
    bool clean = true;
    for (const auto& [w, o] : restricted.terms)
        for (const PointCoord& p : o.points)
            clean = clean && !in_cap_interior(p);
    c.require(clean, "no cap-interior points survive the restriction");
    c.note(std::to_string(z_orbits) + " in Z, " + std::to_string(cap_orbits) + " in the caps");
}

// ---------------------------------------------------------------------------
// 10. Determinism of CLI runs

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void criterion_determinism(Check& c)
{
    if (g_cli_path.empty()) {
        c.require(false, "CLI path not supplied (argv[1])");
        return;
    }
    namespace fs = std::filesystem;
    fs::path work = fs::temp_directory_path() / "surfdyn_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    const std::string disk_cfg = R"({
        "schema_version": 1, "seed": 7, "workers": 1,
        "surface": {"kind": "disk", "area": 1.0},
        "map": {"name": "radial-twist",
                "params": {"c0": 3.141592653589793, "c1": -3.141592653589793}},
        "orbits": {"max_period": 4, "grid": [8, 10], "tol": 1e-10},
        "action": {"beta": "standard", "gamma": 0, "basepoint": [0.0, 0.0], "exactness_loops": 40},
        "output": {"dir": ".", "prefix": "det"}
    })";
    const std::string ann_cfg = R"({
        "schema_version": 1, "seed": 7, "workers": 1,
        "surface": {"kind": "annulus", "area": 1.0},
        "flux": {"isotopy": {"name": "shear", "params": {"rho": 0.3, "c": 0.0}},
                 "cycles": ["gate", "core"], "q_max": 50, "tol": 1e-9},
        "output": {"dir": ".", "prefix": "det"}
    })";
    std::ofstream(work / "disk.json") << disk_cfg;
    std::ofstream(work / "ann.json") << ann_cfg;

    auto run = [&](const std::string& sub, const std::string& cfg, const fs::path& out) {
        fs::create_directories(out);
        std::string cmd = "\"" + g_cli_path + "\" " + sub + " --config \"" +
                          (work / cfg).string() + "\" --output-dir \"" + out.string() +
                          "\" > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    for (int pass = 1; pass <= 2; pass++) {
        fs::path out = work / ("pass" + std::to_string(pass));
        c.require(run("calabi", "disk.json", out) == 0, "calabi run exits 0");
        c.require(run("orbits", "disk.json", out) == 0, "orbits run exits 0");
        c.require(run("flux", "ann.json", out) == 0, "flux run exits 0");
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(work / "pass1")) {
        std::string name = entry.path().filename().string();
        if (name.find("manifest") != std::string::npos)
            continue; // timestamps live here by design
        compared++;
        c.require(slurp(entry.path()) == slurp(work / "pass2" / name),
                  name + " is byte-identical across runs");
    }
    c.require(compared >= 5, "artifacts were produced and compared");
    c.note(std::to_string(compared) + " artifacts byte-compared");
}

} // namespace

int main(int argc, char** argv)
{
    if (argc > 1)
        g_cli_path = argv[1];

    struct Criterion {
        int id;
        const char* name;
        void (*run)(Check&);
        double time_limit;
    };
    const Criterion criteria[] = {
        {1, "capping-exactness", criterion_capping, 1.0},
        {2, "area-preservation", criterion_area_preservation, 10.0},
        {3, "calabi-oracle", criterion_calabi_oracle, 30.0},
        {4, "mean-action-suite", criterion_mean_action_suite, 60.0},
        {5, "rigid-rotation", criterion_rigid_rotation, 30.0},
        {6, "flux-rationality", criterion_flux, 5.0},
        {7, "orbit-oracle", criterion_orbit_oracle, 30.0},
        {8, "moser-interpolation", criterion_moser, 10.0},
        {9, "restriction-operator", criterion_restriction, 30.0},
        {10, "determinism", criterion_determinism, 120.0},
    };

    bool all_ok = true;
    for (const Criterion& cr : criteria) {
        Check check;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.require(false, std::string("exception: ") + e.what());
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (seconds > cr.time_limit)
            check.require(false, "runtime " + fmt(seconds) + " s exceeds " + fmt(cr.time_limit) + " s");
        all_ok = all_ok && check.ok;
        std::cout << (check.ok ? "[PASS] " : "[FAIL] ") << cr.id << " " << cr.name << " ("
                  << fmt(seconds) << " s)"
                  << (check.detail.str().empty() ? "" : ": " + check.detail.str()) << "\n";
    }
    std::cout << (all_ok ? "ACCEPTANCE: all criteria passed\n"
                         : "ACCEPTANCE: FAILURES present\n");
    return all_ok ? 0 : 1;
}
