// Experiment runner: builds surfaces and maps from a JSON config and drives
// the orbit, action, flux, and equidistribution computations, emitting JSON
// and CSV reports with deterministic formatting.

#include "surfdyn/action.hpp"
#include "surfdyn/config.hpp"
#include "surfdyn/equidist.hpp"
#include "surfdyn/flux.hpp"
#include "surfdyn/moser.hpp"
#include "surfdyn/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>

using namespace surfdyn;
using nlohmann::json;

namespace {

struct RunContext {
    ExperimentConfig cfg;
    std::string out_dir;
    RunManifest manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    std::string path(const std::string& suffix) const
    {
        return (std::filesystem::path(out_dir) / (cfg.output.prefix + "_" + suffix)).string();
    }

    void stage(const std::string& name)
    {
        auto now = std::chrono::steady_clock::now();
        manifest.stage_seconds.emplace_back(name,
                                            std::chrono::duration<double>(now - t0).count());
        t0 = now;
    }
};

std::string iso_now()
{
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

RunContext make_context(const std::string& config_path, const std::string& out_dir_flag)
{
    RunContext ctx;
    ctx.cfg = load_config(config_path);
    ctx.out_dir = ctx.cfg.output.dir;
    if (const char* env = std::getenv("SURFDYN_OUTPUT_DIR"); env && *env)
        ctx.out_dir = env;
    if (!out_dir_flag.empty())
        ctx.out_dir = out_dir_flag;
    std::filesystem::create_directories(ctx.out_dir);
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(ctx.cfg)));
    ctx.manifest.tool_version = kToolVersion;
    ctx.manifest.config_hash_hex = hex;
    ctx.manifest.started_at = iso_now();
    return ctx;
}

void finish(RunContext& ctx)
{
    ctx.manifest.finished_at = iso_now();
    write_text_file(ctx.path("manifest.json"), manifest_json(ctx.manifest) + "\n");
}

json point_json(const PointCoord& p)
{
    return json{p.chart, p.xy[0], p.xy[1]};
}

json orbit_json(const PeriodicOrbit& o, int id)
{
    json j;
    j["id"] = id;
    j["period"] = o.period;
    j["residual"] = o.residual;
    j["nondegenerate"] = o.nondegenerate;
    j["simple"] = o.simple;
    j["degenerate_continuum"] = o.degenerate_continuum;
    j["on_boundary"] = o.on_boundary;
    j["reliable"] = o.reliable;
    j["floquet"] = {{o.floquet1.real(), o.floquet1.imag()},
                    {o.floquet2.real(), o.floquet2.imag()}};
    if (o.tangential_multiplier)
        j["tangential_multiplier"] = *o.tangential_multiplier;
    json pts = json::array();
    for (const PointCoord& p : o.points)
        pts.push_back(point_json(p));
    j["points"] = pts;
    return j;
}

void write_orbit_csv(const std::string& path, const std::vector<PeriodicOrbit>& orbits)
{
    CsvWriter csv({"orbit_id", "period", "point_index", "chart", "x", "y", "eig1_re", "eig1_im",
                   "eig2_re", "eig2_im", "residual", "nondegenerate", "simple",
                   "degenerate_continuum", "on_boundary"});
    for (size_t i = 0; i < orbits.size(); i++) {
        const PeriodicOrbit& o = orbits[i];
        for (size_t k = 0; k < o.points.size(); k++) {
            csv.row({std::to_string(i), std::to_string(o.period), std::to_string(k),
                     std::to_string(o.points[k].chart), format_double(o.points[k].xy[0]),
                     format_double(o.points[k].xy[1]), format_double(o.floquet1.real()),
                     format_double(o.floquet1.imag()), format_double(o.floquet2.real()),
                     format_double(o.floquet2.imag()), format_double(o.residual),
                     o.nondegenerate ? "1" : "0", o.simple ? "1" : "0",
                     o.degenerate_continuum ? "1" : "0", o.on_boundary ? "1" : "0"});
        }
    }
    csv.write(path);
}

// --- subcommand handlers ----------------------------------------------------

int run_cap_check(RunContext& ctx)
{
    SurfaceSpec spec = ctx.cfg.surface;
    if (spec.target_area <= 0)
        throw PreconditionError("cap-check: surface.target_area must be set");
    auto capped = build_surface(spec);
    ctx.stage("build");
    double defect = verify_area_form(*capped, 100);
    double roundtrip = transition_roundtrip_defect(*capped, 100);
    AreaIntegral total = area_integrate(*capped, [](const PointCoord&) { return 1.0; }, 1e-10);
    ctx.stage("verify");

    json out;
    out["schema_version"] = 1;
    out["surface"] = capped->describe();
    out["base_area"] = spec.area;
    out["target_area"] = spec.target_area;
    out["collar"] = spec.collar;
    out["caps"] = capped->boundary_count();
    out["r0"] = capped->cap(0).r0;
    out["r1"] = capped->cap(0).r1;
    out["pullback_defect_grid100"] = defect;
    out["transition_roundtrip_defect"] = roundtrip;
    out["quadrature_area"] = total.value;
    write_text_file(ctx.path("capcheck.json"), out.dump(2) + "\n");
    std::cout << "r0 = " << format_double(capped->cap(0).r0)
              << "  r1 = " << format_double(capped->cap(0).r1)
              << "  pullback defect = " << format_double(defect) << "\n";
    ctx.manifest.convergence.emplace_back("pullback_defect", defect);
    return 0;
}

int run_orbits(RunContext& ctx)
{
    auto surface = build_surface(ctx.cfg.surface);
    SurfaceMap phi = build_map(surface, ctx.cfg.map, ctx.cfg.integrator);
    ctx.stage("build");
    OrbitSearchSummary summary;
    OrbitSearchConfig ocfg = build_orbit_config(ctx.cfg.orbits, ctx.cfg.workers);
    std::vector<PeriodicOrbit> orbits = find_orbits(phi, ocfg, &summary);
    ctx.stage("search");

    write_orbit_csv(ctx.path("orbits.csv"), orbits);
    json out;
    out["schema_version"] = 1;
    out["map"] = phi.name();
    out["surface"] = surface->describe();
    out["seeds"] = summary.seeds;
    out["newton_converged"] = summary.newton_converged;
    out["newton_diverged"] = summary.newton_diverged;
    out["direct_hits"] = summary.direct_hits;
    json arr = json::array();
    for (size_t i = 0; i < orbits.size(); i++)
        arr.push_back(orbit_json(orbits[i], static_cast<int>(i)));
    out["orbits"] = arr;
    write_text_file(ctx.path("orbits.json"), out.dump(2) + "\n");
    std::cout << "orbits: " << orbits.size() << " (seeds " << summary.seeds << ", newton "
              << summary.newton_converged << "/" << summary.newton_converged + summary.newton_diverged
              << ")\n";
    ctx.manifest.convergence.emplace_back("orbits_found", static_cast<double>(orbits.size()));
    return 0;
}

struct ActionBundle {
    std::shared_ptr<const Surface> surface;
    std::shared_ptr<SurfaceMap> map;
    std::shared_ptr<ActionProfile> profile;
};

ActionBundle build_action_bundle(RunContext& ctx)
{
    ActionBundle b;
    b.surface = build_surface(ctx.cfg.surface);
    if (b.surface->is_capped())
        throw PreconditionError("action experiments live on the base surface; drop target_area");
    if (b.surface->boundary_count() > 1 && !ctx.cfg.action.gamma_set)
        throw PreconditionError(
            "action.gamma must be chosen explicitly on surfaces with several boundary circles");
    b.map = std::make_shared<SurfaceMap>(build_map(b.surface, ctx.cfg.map, ctx.cfg.integrator));
    OneForm beta = build_beta(*b.surface, ctx.cfg.action);
    PointCoord basepoint(0, 0.0, 0.0);
    if (ctx.cfg.action.basepoint_set)
        basepoint = PointCoord(0, ctx.cfg.action.basepoint_x, ctx.cfg.action.basepoint_y);
    else if (b.surface->kind() == SurfaceKind::Annulus)
        basepoint = PointCoord(0, 0.5 * b.surface->width(), 0.0);
    ActionConfig acfg;
    acfg.exactness_loops = ctx.cfg.action.exactness_loops;
    acfg.boundary_grid = ctx.cfg.action.boundary_grid;
    acfg.rotation_iters = ctx.cfg.action.rotation_iters;
    acfg.boundary_max_iters = ctx.cfg.action.boundary_max_iters;
    acfg.seed = static_cast<unsigned>(ctx.cfg.seed);
    b.profile = std::make_shared<ActionProfile>(
        build_action(*b.map, beta, ctx.cfg.action.gamma, basepoint, acfg));
    return b;
}

json calabi_json(const CalabiReport& rep, const ActionProfile& profile)
{
    json out;
    out["schema_version"] = 1;
    out["calabi"] = rep.calabi;
    out["quad_tolerance"] = rep.quad_tolerance;
    out["quad_converged"] = rep.quad_converged;
    out["mc_estimate"] = rep.mc_estimate;
    out["mc_halfwidth"] = rep.mc_halfwidth;
    out["mc_samples"] = rep.mc_samples;
    out["boundary_mean"] = rep.boundary_mean;
    out["exactness_defect"] = rep.exactness_defect;
    const BoundaryRotationInfo& info = profile.boundary_info();
    out["boundary_rotation"] = {{"rotation_number", info.rotation_number},
                                {"rational", info.rational},
                                {"p", info.p},
                                {"q", info.q},
                                {"fluctuation", info.fluctuation},
                                {"iterations", info.iterations}};
    return out;
}

int run_calabi(RunContext& ctx)
{
    ActionBundle b = build_action_bundle(ctx);
    ctx.stage("build_action");
    CalabiReport rep = calabi(*b.profile, 1e-9, 400, static_cast<unsigned>(ctx.cfg.seed) + 17);
    ctx.stage("calabi");
    write_text_file(ctx.path("calabi.json"), calabi_json(rep, *b.profile).dump(2) + "\n");

    // level-set sampling of the action for external plotting
    CsvWriter grid({"chart", "x", "y", "f"});
    const int n = 48;
    for (const QuadPanel& panel : b.surface->integration_panels()) {
        for (int i = 0; i < n; i++)
            for (int j = 0; j < n; j++) {
                double u = (i + 0.5) / n, v = (j + 0.5) / n;
                if (panel.factor(u, v) == 0.0)
                    continue;
                PointCoord p = panel.point(u, v);
                grid.row({std::to_string(p.chart), format_double(p.xy[0]), format_double(p.xy[1]),
                          format_double((*b.profile)(p))});
            }
    }
    grid.write(ctx.path("action_grid.csv"));
    std::cout << "Cal = " << format_double(rep.calabi) << " (quad tol "
              << format_double(rep.quad_tolerance) << ", mc " << format_double(rep.mc_estimate)
              << " +- " << format_double(rep.mc_halfwidth) << ")\n";
    ctx.manifest.convergence.emplace_back("calabi_quad_tol", rep.quad_tolerance);
    return 0;
}

void write_mean_action_csv(const std::string& path, const std::vector<MeanActionRecord>& records,
                           double cal)
{
    // rows sorted by period then orbit id (records arrive in census order)
    std::vector<MeanActionRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const MeanActionRecord& a, const MeanActionRecord& b) {
                         if (a.period != b.period)
                             return a.period < b.period;
                         return a.orbit_index < b.orbit_index;
                     });
    CsvWriter csv({"orbit_id", "period", "mean_action", "cal_gap", "on_boundary"});
    for (const MeanActionRecord& r : sorted)
        csv.row({std::to_string(r.orbit_index), std::to_string(r.period),
                 format_double(r.mean_action), format_double(r.mean_action - cal),
                 r.on_boundary ? "1" : "0"});
    csv.write(path);
}

int run_inequality(RunContext& ctx, bool census_mode)
{
    ActionBundle b = build_action_bundle(ctx);
    ctx.stage("build_action");
    OrbitSearchConfig ocfg = build_orbit_config(ctx.cfg.orbits, ctx.cfg.workers);
    std::vector<PeriodicOrbit> orbits = find_orbits(*b.map, ocfg);
    if (orbits.empty())
        throw PreconditionError("inequality: empty orbit census");
    ctx.stage("search");
    std::vector<MeanActionRecord> records = mean_actions(*b.profile, orbits);
    CalabiReport rep = calabi(*b.profile, 1e-9, 400, static_cast<unsigned>(ctx.cfg.seed) + 17);
    ctx.stage("calabi");

    write_mean_action_csv(ctx.path("mean_actions.csv"), records, rep.calabi);
    if (!census_mode) {
        InequalityVerdict v = inequality_check(rep.calabi, records);
        json out = calabi_json(rep, *b.profile);
        out["census_size"] = orbits.size();
        out["min_mean_action"] = v.min_mean_action;
        out["max_mean_action"] = v.max_mean_action;
        out["inf_gap"] = v.inf_gap;
        out["sup_gap"] = v.sup_gap;
        out["verdict"] = v.holds_on_census ? "HOLDS-on-census" : "FAILS-on-census";
        out["failing_side"] = v.side == InequalitySide::Holds      ? "none"
                              : v.side == InequalitySide::FailsInf ? "inf"
                              : v.side == InequalitySide::FailsSup ? "sup"
                                                                   : "both";
        write_text_file(ctx.path("inequality.json"), out.dump(2) + "\n");
        std::cout << "inequality " << out["verdict"].get<std::string>() << ": min "
                  << format_double(v.min_mean_action) << " <= Cal " << format_double(rep.calabi)
                  << " <= max " << format_double(v.max_mean_action) << "\n";
    } else {
        CensusWeighting w = ctx.cfg.census.weighting == "uniform" ? CensusWeighting::Uniform
                                                                  : CensusWeighting::VoronoiMass;
        CensusFractions frac =
            p_epsilon_census(*b.profile, rep.calabi, orbits, records, ctx.cfg.census.epsilon, w,
                             ctx.cfg.census.samples, static_cast<unsigned>(ctx.cfg.seed) + 23);
        json out;
        out["schema_version"] = 1;
        out["calabi"] = rep.calabi;
        out["epsilon"] = ctx.cfg.census.epsilon;
        out["p_plus_fraction"] = frac.p_plus;
        out["p_minus_fraction"] = frac.p_minus;
        out["negative_branch"] = frac.negative_branch;
        out["census_points"] = frac.points;
        out["weighting"] = std::string(frac.weighting == CensusWeighting::Uniform
                                           ? "uniform"
                                           : "voronoi-mc (heuristic)");
        write_text_file(ctx.path("census.json"), out.dump(2) + "\n");
        std::cout << "P+ fraction = " << format_double(frac.p_plus)
                  << ", P- fraction = " << format_double(frac.p_minus) << "\n";
    }
    ctx.stage("report");
    return 0;
}

int run_equidist(RunContext& ctx)
{
    auto surface = build_surface(ctx.cfg.surface);
    SurfaceMap phi = build_map(surface, ctx.cfg.map, ctx.cfg.integrator);
    TestDictionary dict = boundary_flat_dictionary(*surface, ctx.cfg.dictionary.size);
    ctx.stage("build");
    DefectSequenceConfig dcfg;
    dcfg.search = build_orbit_config(ctx.cfg.orbits, ctx.cfg.workers);
    dcfg.weighting = ctx.cfg.equidist.weighting == "voronoi" ? OrbitWeighting::VoronoiMass
                                                             : OrbitWeighting::Uniform;
    dcfg.seed = static_cast<unsigned>(ctx.cfg.seed) + 29;
    std::vector<DefectReport> reports =
        defect_sequence_experiment(phi, dict, ctx.cfg.equidist.schedule, dcfg);
    ctx.stage("experiment");

    CsvWriter csv({"level", "function", "orbit_average", "area_average", "defect", "orbit_count",
                   "orbit_set_size", "skipped"});
    for (const DefectReport& rep : reports) {
        if (rep.skipped) {
            csv.row({std::to_string(rep.level), "-", "", "", "", "0", "0", "1"});
            continue;
        }
        for (const DefectEntry& e : rep.entries)
            csv.row({std::to_string(rep.level), e.function_name, format_double(e.orbit_average),
                     format_double(e.area_average), format_double(e.defect),
                     std::to_string(rep.orbit_count), format_double(rep.orbit_set_size), "0"});
    }
    csv.write(ctx.path("defects.csv"));
    json out;
    out["schema_version"] = 1;
    out["dictionary_size"] = ctx.cfg.dictionary.size;
    out["dictionary_locality_defect"] = dict.locality_defect;
    json levels = json::array();
    for (const DefectReport& rep : reports)
        levels.push_back(json{{"level", rep.level},
                              {"orbit_set", rep.orbit_set_id},
                              {"max_defect", rep.max_defect},
                              {"orbit_count", rep.orbit_count},
                              {"skipped", rep.skipped}});
    out["levels"] = levels;
    write_text_file(ctx.path("equidist.json"), out.dump(2) + "\n");
    for (const DefectReport& rep : reports)
        std::cout << "d <= " << rep.level << ": "
                  << (rep.skipped ? "skipped (no orbits)"
                                  : "max defect " + format_double(rep.max_defect))
                  << "\n";
    return 0;
}

int run_flux(RunContext& ctx)
{
    auto surface = build_surface(ctx.cfg.surface);
    Isotopy iso = build_isotopy(surface, ctx.cfg.flux.isotopy, ctx.cfg.integrator);
    std::vector<CycleSpec> cycles = build_cycles(*surface, ctx.cfg.flux.cycles);
    for (const PolylineSpec& pl : ctx.cfg.flux.polylines)
        cycles.push_back(polyline_cycle(pl.id, pl.points, pl.relative));
    if (cycles.empty())
        throw PreconditionError("flux: no cycles requested");
    ctx.stage("build");
    std::vector<std::pair<std::string, double>> fluxes;
    for (const CycleSpec& c : cycles)
        fluxes.emplace_back(c.id, isotopy_flux(*surface, iso, c));
    FluxReport rep =
        rationality_verdict(fluxes, surface->total_area(), ctx.cfg.flux.q_max, ctx.cfg.flux.tol);
    HamiltonianCertificate cert = hamiltonian_certificate(*surface, iso, cycles, 1e-8);
    ctx.stage("flux");

    json out;
    out["schema_version"] = 1;
    out["isotopy"] = iso.name;
    out["area"] = rep.area;
    out["q_max"] = rep.q_max;
    out["tol"] = rep.tol;
    out["all_rational"] = rep.all_rational;
    out["all_zero"] = rep.all_zero;
    out["hamiltonian_certificate"] = cert.certified;
    json entries = json::array();
    for (const FluxEntry& e : rep.entries) {
        const char* verdict = e.approx.verdict == RationalityVerdict::Rational
                                  ? "rational"
                                  : (e.approx.verdict == RationalityVerdict::IrrationalWithinTolerance
                                         ? "irrational-within-tolerance"
                                         : "undecided");
        json ej;
        ej["cycle"] = e.cycle_id;
        ej["flux"] = e.flux;
        ej["ratio"] = e.ratio;
        ej["verdict"] = verdict;
        ej["p"] = e.approx.p;
        ej["q"] = e.approx.q;
        ej["error"] = e.approx.error;
        ej["continued_fraction"] = e.approx.continued_fraction;
        entries.push_back(ej);
        std::cout << e.cycle_id << ": flux " << format_double(e.flux) << " -> " << verdict << " "
                  << e.approx.p << "/" << e.approx.q << "\n";
    }
    out["cycles"] = entries;
    write_text_file(ctx.path("flux.json"), out.dump(2) + "\n");
    return 0;
}

int run_extend(RunContext& ctx)
{
    SurfaceSpec spec = ctx.cfg.surface;
    if (spec.target_area <= 0)
        throw PreconditionError("extend: surface.target_area must be set");
    auto capped = build_surface(spec);
    SurfaceSpec base_spec = spec;
    base_spec.target_area = 0;
    auto base = build_surface(base_spec);
    SurfaceMap phi0 = build_map(base, ctx.cfg.map, ctx.cfg.integrator);
    CollarRotationData collar = certify_collar_rotation(phi0);
    SurfaceMap ext = extend_boundary_rotation(phi0, capped);
    ctx.stage("extend");

    double area_defect = area_preservation_defect(ext, 1000, static_cast<unsigned>(ctx.cfg.seed));
    auto sigma = boundary_permutation(ext);
    ctx.stage("verify");

    json out;
    out["schema_version"] = 1;
    out["surface"] = capped->describe();
    out["map"] = ext.name();
    out["collar_rotation_defect"] = collar.defect;
    out["collar_rotations"] = collar.rotations;
    out["base_permutation"] = collar.permutation;
    out["lagrangian_permutation"] = sigma;
    out["area_preservation_defect"] = area_defect;
    write_text_file(ctx.path("extend.json"), out.dump(2) + "\n");
    std::cout << "extension ok: collar defect " << format_double(collar.defect)
              << ", area defect " << format_double(area_defect) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"surfdyn: periodic orbits, actions, Calabi invariants, fluxes, and "
                 "equidistribution defects for area-preserving surface maps"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;

    auto add = [&](const char* name, const char* desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("-o,--output-dir", out_dir, "override the output directory");
        return sub;
    };
    CLI::App* cap = add("cap-check", "verify the capping construction of a surface");
    CLI::App* orb = add("orbits", "find and classify periodic orbits");
    CLI::App* cal = add("calabi", "action profile and Calabi invariant");
    CLI::App* ineq = add("inequality", "mean-action inequality census test");
    CLI::App* cen = add("census", "p-epsilon census fractions");
    CLI::App* equi = add("equidist", "equidistribution defect sequences");
    CLI::App* flux = add("flux", "isotopy fluxes and rationality verdicts");
    CLI::App* ext = add("extend", "extend a collar-rotation map over the caps");

    CLI11_PARSE(app, argc, argv);

    try {
        RunContext ctx = make_context(config_path, out_dir);
        int rc = 1;
        if (cap->parsed())
            rc = run_cap_check(ctx);
        else if (orb->parsed())
            rc = run_orbits(ctx);
        else if (cal->parsed())
            rc = run_calabi(ctx);
        else if (ineq->parsed())
            rc = run_inequality(ctx, false);
        else if (cen->parsed())
            rc = run_inequality(ctx, true);
        else if (equi->parsed())
            rc = run_equidist(ctx);
        else if (flux->parsed())
            rc = run_flux(ctx);
        else if (ext->parsed())
            rc = run_extend(ctx);
        finish(ctx);
        return rc;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition failure: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
