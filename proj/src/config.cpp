#include "surfdyn/config.hpp"
#include "surfdyn/report_io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace surfdyn {

const char* kToolVersion = "0.1.0";

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed)
{
    if (!obj.is_object())
        throw PreconditionError("config: '" + where + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw PreconditionError("config: unknown key '" + where + "." + it.key() + "'");
    }
}

double get_num(const json& obj, const char* key, double fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_number())
        throw PreconditionError(std::string("config: '") + key + "' must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const char* key, int fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_number_integer())
        throw PreconditionError(std::string("config: '") + key + "' must be an integer");
    return obj[key].get<int>();
}

std::string get_str(const json& obj, const char* key, const std::string& fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_string())
        throw PreconditionError(std::string("config: '") + key + "' must be a string");
    return obj[key].get<std::string>();
}

bool get_bool(const json& obj, const char* key, bool fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj[key].is_boolean())
        throw PreconditionError(std::string("config: '") + key + "' must be a boolean");
    return obj[key].get<bool>();
}

void require_positive(double v, const char* what)
{
    if (!(v > 0))
        throw PreconditionError(std::string("config: ") + what + " must be positive");
}

MapSpec parse_map_spec(const json& m, const std::string& where)
{
    require_keys(m, where, {"name", "params", "hamiltonian"});
    MapSpec spec;
    spec.name = get_str(m, "name", "identity");
    spec.hamiltonian = get_str(m, "hamiltonian", "");
    if (m.contains("params")) {
        if (!m["params"].is_object())
            throw PreconditionError("config: '" + where + ".params' must be an object");
        for (auto it = m["params"].begin(); it != m["params"].end(); ++it) {
            if (!it.value().is_number())
                throw PreconditionError("config: parameter '" + it.key() + "' must be a number");
            spec.params[it.key()] = it.value().get<double>();
        }
    }
    return spec;
}

json map_spec_json(const MapSpec& spec)
{
    json m;
    m["name"] = spec.name;
    if (!spec.hamiltonian.empty())
        m["hamiltonian"] = spec.hamiltonian;
    if (!spec.params.empty()) {
        json p;
        for (const auto& [k, v] : spec.params)
            p[k] = v;
        m["params"] = p;
    }
    return m;
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const std::exception& e) {
        throw PreconditionError(std::string("config: JSON parse error: ") + e.what());
    }
    require_keys(root, "<root>",
                 {"schema_version", "seed", "workers", "surface", "map", "integrator", "orbits",
                  "action", "dictionary", "census", "equidist", "flux", "output"});
    ExperimentConfig cfg;
    cfg.schema_version = get_int(root, "schema_version", 1);
    if (cfg.schema_version != 1)
        throw PreconditionError("config: unsupported schema_version");
    if (root.contains("seed"))
        cfg.seed = root["seed"].get<std::uint64_t>();
    cfg.workers = get_int(root, "workers", 1);
    if (cfg.workers < 1)
        throw PreconditionError("config: workers must be >= 1");

    if (root.contains("surface")) {
        const json& s = root["surface"];
        require_keys(s, "surface", {"kind", "area", "target_area", "collar", "collar_width"});
        cfg.surface.kind = get_str(s, "kind", "disk");
        cfg.surface.area = get_num(s, "area", 1.0);
        cfg.surface.target_area = get_num(s, "target_area", 0.0);
        cfg.surface.collar = get_num(s, "collar", 0.1);
        cfg.surface.collar_width = get_num(s, "collar_width", -1.0);
        require_positive(cfg.surface.area, "surface.area");
        if (cfg.surface.kind != "disk" && cfg.surface.kind != "annulus")
            throw PreconditionError("config: surface.kind must be 'disk' or 'annulus'");
    }
    if (root.contains("map"))
        cfg.map = parse_map_spec(root["map"], "map");
    if (root.contains("integrator")) {
        const json& s = root["integrator"];
        require_keys(s, "integrator", {"steps", "fixpoint_tol", "certificate_tol"});
        cfg.integrator.steps = get_int(s, "steps", 256);
        cfg.integrator.fixpoint_tol = get_num(s, "fixpoint_tol", 1e-12);
        cfg.integrator.certificate_tol = get_num(s, "certificate_tol", 1e-9);
        if (cfg.integrator.steps < 8)
            throw PreconditionError("config: integrator.steps must be >= 8");
        require_positive(cfg.integrator.fixpoint_tol, "integrator.fixpoint_tol");
        require_positive(cfg.integrator.certificate_tol, "integrator.certificate_tol");
    }
    if (root.contains("orbits")) {
        const json& s = root["orbits"];
        require_keys(s, "orbits",
                     {"max_period", "grid", "tol", "newton", "clustering_radius", "boundary_scan"});
        cfg.orbits.max_period = get_int(s, "max_period", 4);
        if (s.contains("grid")) {
            if (!s["grid"].is_array() || s["grid"].size() != 2)
                throw PreconditionError("config: orbits.grid must be [major, minor]");
            cfg.orbits.grid_major = s["grid"][0].get<int>();
            cfg.orbits.grid_minor = s["grid"][1].get<int>();
        }
        cfg.orbits.tol = get_num(s, "tol", 1e-10);
        cfg.orbits.newton = get_bool(s, "newton", true);
        cfg.orbits.clustering_radius = get_num(s, "clustering_radius", 1e-6);
        cfg.orbits.boundary_scan = get_int(s, "boundary_scan", 256);
        if (cfg.orbits.max_period < 1)
            throw PreconditionError("config: orbits.max_period must be >= 1");
        if (cfg.orbits.tol < 0)
            throw PreconditionError("config: orbits.tol must be >= 0");
        require_positive(cfg.orbits.clustering_radius, "orbits.clustering_radius");
    }
    if (root.contains("action")) {
        const json& s = root["action"];
        require_keys(s, "action",
                     {"beta", "dg", "gamma", "basepoint", "exactness_loops", "boundary_grid",
                      "rotation_iters", "boundary_max_iters"});
        cfg.action.beta = get_str(s, "beta", "standard");
        cfg.action.dg = get_str(s, "dg", "");
        if (s.contains("gamma")) {
            cfg.action.gamma = get_int(s, "gamma", 0);
            cfg.action.gamma_set = true;
        }
        cfg.action.exactness_loops = get_int(s, "exactness_loops", 100);
        cfg.action.boundary_grid = get_int(s, "boundary_grid", 4096);
        cfg.action.rotation_iters = static_cast<long>(get_num(s, "rotation_iters", 4096));
        cfg.action.boundary_max_iters = static_cast<long>(get_num(s, "boundary_max_iters", 1000000));
        if (cfg.action.boundary_grid < 16 || cfg.action.rotation_iters < 16 ||
            cfg.action.boundary_max_iters < 16)
            throw PreconditionError("config: action sampling controls must be at least 16");
        if (s.contains("basepoint")) {
            if (!s["basepoint"].is_array() || s["basepoint"].size() != 2)
                throw PreconditionError("config: action.basepoint must be [x, y]");
            cfg.action.basepoint_x = s["basepoint"][0].get<double>();
            cfg.action.basepoint_y = s["basepoint"][1].get<double>();
            cfg.action.basepoint_set = true;
        }
        if (cfg.action.exactness_loops < 0)
            throw PreconditionError("config: action.exactness_loops must be >= 0");
    }
    if (root.contains("dictionary")) {
        const json& s = root["dictionary"];
        require_keys(s, "dictionary", {"name", "size"});
        cfg.dictionary.name = get_str(s, "name", "boundary-flat");
        cfg.dictionary.size = get_int(s, "size", 5);
        if (cfg.dictionary.size < 1)
            throw PreconditionError("config: dictionary.size must be >= 1");
    }
    if (root.contains("census")) {
        const json& s = root["census"];
        require_keys(s, "census", {"epsilon", "weighting", "samples"});
        cfg.census.epsilon = get_num(s, "epsilon", 0.5);
        cfg.census.weighting = get_str(s, "weighting", "voronoi");
        cfg.census.samples = get_int(s, "samples", 4000);
        require_positive(cfg.census.epsilon, "census.epsilon");
        if (cfg.census.weighting != "voronoi" && cfg.census.weighting != "uniform")
            throw PreconditionError("config: census.weighting must be 'voronoi' or 'uniform'");
    }
    if (root.contains("equidist")) {
        const json& s = root["equidist"];
        require_keys(s, "equidist", {"schedule", "weighting"});
        if (s.contains("schedule")) {
            if (!s["schedule"].is_array() || s["schedule"].empty())
                throw PreconditionError("config: equidist.schedule must be a non-empty array");
            cfg.equidist.schedule.clear();
            int prev = 0;
            for (const auto& v : s["schedule"]) {
                int d = v.get<int>();
                if (d <= prev)
                    throw PreconditionError("config: equidist.schedule must be strictly increasing");
                cfg.equidist.schedule.push_back(d);
                prev = d;
            }
        }
        cfg.equidist.weighting = get_str(s, "weighting", "uniform");
    }
    if (root.contains("flux")) {
        const json& s = root["flux"];
        require_keys(s, "flux", {"isotopy", "cycles", "polylines", "q_max", "tol"});
        if (s.contains("isotopy"))
            cfg.flux.isotopy = parse_map_spec(s["isotopy"], "flux.isotopy");
        if (s.contains("cycles")) {
            cfg.flux.cycles.clear();
            for (const auto& v : s["cycles"])
                cfg.flux.cycles.push_back(v.get<std::string>());
        }
        if (s.contains("polylines")) {
            for (const auto& v : s["polylines"]) {
                require_keys(v, "flux.polylines[]", {"id", "points", "relative"});
                PolylineSpec pl;
                pl.id = get_str(v, "id", "polyline");
                pl.relative = get_bool(v, "relative", false);
                if (!v.contains("points") || !v["points"].is_array() || v["points"].size() < 2)
                    throw PreconditionError("config: polyline needs at least two [chart,x,y] points");
                for (const auto& pt : v["points"]) {
                    if (!pt.is_array() || pt.size() != 3)
                        throw PreconditionError("config: polyline points are [chart, x, y]");
                    pl.points.emplace_back(pt[0].get<int>(), pt[1].get<double>(),
                                           pt[2].get<double>());
                }
                cfg.flux.polylines.push_back(std::move(pl));
            }
        }
        cfg.flux.q_max = static_cast<long>(get_num(s, "q_max", 10000));
        cfg.flux.tol = get_num(s, "tol", 1e-9);
        if (cfg.flux.q_max < 1)
            throw PreconditionError("config: flux.q_max must be >= 1");
        require_positive(cfg.flux.tol, "config: flux.tol");
    }
    if (root.contains("output")) {
        const json& s = root["output"];
        require_keys(s, "output", {"dir", "prefix"});
        cfg.output.dir = get_str(s, "dir", ".");
        cfg.output.prefix = get_str(s, "prefix", "run");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw PreconditionError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg)
{
    json root;
    root["schema_version"] = cfg.schema_version;
    root["seed"] = cfg.seed;
    root["workers"] = cfg.workers;
    {
        json s;
        s["kind"] = cfg.surface.kind;
        s["area"] = cfg.surface.area;
        s["target_area"] = cfg.surface.target_area;
        s["collar"] = cfg.surface.collar;
        s["collar_width"] = cfg.surface.collar_width;
        root["surface"] = s;
    }
    root["map"] = map_spec_json(cfg.map);
    {
        json s;
        s["steps"] = cfg.integrator.steps;
        s["fixpoint_tol"] = cfg.integrator.fixpoint_tol;
        s["certificate_tol"] = cfg.integrator.certificate_tol;
        root["integrator"] = s;
    }
    {
        json s;
        s["max_period"] = cfg.orbits.max_period;
        s["grid"] = {cfg.orbits.grid_major, cfg.orbits.grid_minor};
        s["tol"] = cfg.orbits.tol;
        s["newton"] = cfg.orbits.newton;
        s["clustering_radius"] = cfg.orbits.clustering_radius;
        s["boundary_scan"] = cfg.orbits.boundary_scan;
        root["orbits"] = s;
    }
    {
        json s;
        s["beta"] = cfg.action.beta;
        if (!cfg.action.dg.empty())
            s["dg"] = cfg.action.dg;
        s["gamma"] = cfg.action.gamma;
        if (cfg.action.basepoint_set)
            s["basepoint"] = {cfg.action.basepoint_x, cfg.action.basepoint_y};
        s["exactness_loops"] = cfg.action.exactness_loops;
        s["boundary_grid"] = cfg.action.boundary_grid;
        s["rotation_iters"] = cfg.action.rotation_iters;
        s["boundary_max_iters"] = cfg.action.boundary_max_iters;
        root["action"] = s;
    }
    {
        json s;
        s["name"] = cfg.dictionary.name;
        s["size"] = cfg.dictionary.size;
        root["dictionary"] = s;
    }
    {
        json s;
        s["epsilon"] = cfg.census.epsilon;
        s["weighting"] = cfg.census.weighting;
        s["samples"] = cfg.census.samples;
        root["census"] = s;
    }
    {
        json s;
        s["schedule"] = cfg.equidist.schedule;
        s["weighting"] = cfg.equidist.weighting;
        root["equidist"] = s;
    }
    {
        json s;
        s["isotopy"] = map_spec_json(cfg.flux.isotopy);
        s["cycles"] = cfg.flux.cycles;
        if (!cfg.flux.polylines.empty()) {
            json arr = json::array();
            for (const PolylineSpec& pl : cfg.flux.polylines) {
                json pj;
                pj["id"] = pl.id;
                pj["relative"] = pl.relative;
                json pts = json::array();
                for (const PointCoord& p : pl.points)
                    pts.push_back(json{p.chart, p.xy[0], p.xy[1]});
                pj["points"] = pts;
                arr.push_back(pj);
            }
            s["polylines"] = arr;
        }
        s["q_max"] = cfg.flux.q_max;
        s["tol"] = cfg.flux.tol;
        root["flux"] = s;
    }
    {
        json s;
        s["dir"] = cfg.output.dir;
        s["prefix"] = cfg.output.prefix;
        root["output"] = s;
    }
    return root.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& cfg)
{
    std::string canonical = serialize_config(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::shared_ptr<const Surface> build_surface(const SurfaceSpec& spec)
{
    Surface base = spec.kind == "disk" ? Surface::disk(spec.area, spec.collar_width)
                                       : Surface::annulus(spec.area, spec.collar_width);
    if (spec.target_area > 0)
        return std::make_shared<Surface>(cap_surface(base, spec.target_area, spec.collar));
    return std::make_shared<Surface>(std::move(base));
}

namespace {

double param(const MapSpec& spec, const std::string& key, double fallback)
{
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : it->second;
}

SurfaceMap build_map_on(std::shared_ptr<const Surface> s, const MapSpec& spec,
                        const IntegratorSpec& integrator)
{
    if (spec.name == "identity")
        return identity_map(s);
    if (spec.name == "rotation")
        return rotation_map(s, param(spec, "alpha", 0.0));
    if (spec.name == "radial-twist") {
        std::vector<double> coeffs;
        for (int k = 0;; k++) {
            auto it = spec.params.find("c" + std::to_string(k));
            if (it == spec.params.end())
                break;
            coeffs.push_back(it->second);
        }
        if (coeffs.empty())
            throw PreconditionError("config: radial-twist needs coefficients c0, c1, ...");
        return radial_twist_map(s, coeffs);
    }
    if (spec.name == "flat-twist")
        return flat_twist_map(s, param(spec, "theta_inner", M_PI), param(spec, "theta_outer", 0.0),
                              param(spec, "r_lo", 0.3), param(spec, "r_hi", 0.8));
    if (spec.name == "shear")
        return shear_map(s, param(spec, "rho", 0.0), param(spec, "c", 0.0));
    if (spec.name == "perturbed-twist")
        return perturbed_twist_map(s, param(spec, "rho", 0.0), param(spec, "c", 1.0),
                                   param(spec, "kick", 0.05),
                                   static_cast<int>(param(spec, "mode", 1)),
                                   build_integrator_config(integrator));
    if (spec.name == "hamiltonian") {
        if (spec.hamiltonian.empty())
            throw PreconditionError("config: map.hamiltonian expression is empty");
        Hamiltonian h = expression_hamiltonian(*s, spec.hamiltonian);
        return hamiltonian_time_one(s, h, build_integrator_config(integrator));
    }
    throw PreconditionError("config: unknown map family '" + spec.name + "'");
}

} // namespace

SurfaceMap build_map(std::shared_ptr<const Surface> s, const MapSpec& spec,
                     const IntegratorSpec& integrator)
{
    if (!s->is_capped())
        return build_map_on(std::move(s), spec, integrator);
    auto base = std::make_shared<Surface>(s->base());
    SurfaceMap phi0 = build_map_on(base, spec, integrator);
    return extend_boundary_rotation(phi0, std::move(s));
}

Isotopy build_isotopy(std::shared_ptr<const Surface> s, const MapSpec& spec,
                      const IntegratorSpec& integrator)
{
    if (spec.name == "identity")
        return identity_isotopy();
    if (spec.name == "shear")
        return shear_isotopy(s, param(spec, "rho", 0.0), param(spec, "c", 0.0));
    if (spec.name == "hamiltonian") {
        if (spec.hamiltonian.empty())
            throw PreconditionError("config: flux.isotopy.hamiltonian expression is empty");
        Hamiltonian h = expression_hamiltonian(*s, spec.hamiltonian);
        return hamiltonian_isotopy(s, h, build_integrator_config(integrator));
    }
    throw PreconditionError("config: unknown isotopy '" + spec.name + "'");
}

std::vector<CycleSpec> build_cycles(const Surface& s, const std::vector<std::string>& names)
{
    std::vector<CycleSpec> cycles;
    for (const std::string& name : names) {
        if (name == "core") {
            cycles.push_back(core_cycle(s));
        } else if (name == "gate") {
            cycles.push_back(gate_cycle(s));
        } else if (name.rfind("boundary-", 0) == 0) {
            cycles.push_back(boundary_cycle(s, std::stoi(name.substr(9))));
        } else {
            throw PreconditionError("config: unknown cycle '" + name + "'");
        }
    }
    return cycles;
}

OneForm build_beta(const Surface& s, const ActionSpec& spec)
{
    if (spec.beta != "standard")
        throw PreconditionError("config: action.beta must be 'standard'");
    OneForm beta = standard_primitive(s);
    if (spec.dg.empty())
        return beta;
    // beta + d(g) for an expression g: reuse the Hamiltonian chain rule
    Hamiltonian g = expression_hamiltonian(s, spec.dg);
    if (!g.autonomous)
        throw PreconditionError("config: action.dg must not depend on time");
    return add_exact(
        beta, [g](const PointCoord& p) { return g.grad(0.0, p); },
        [g](const PointCoord& p) { return g.hess(0.0, p); });
}

OrbitSearchConfig build_orbit_config(const OrbitSpec& spec, int workers)
{
    OrbitSearchConfig cfg;
    cfg.max_period = spec.max_period;
    cfg.grid_major = spec.grid_major;
    cfg.grid_minor = spec.grid_minor;
    cfg.tol = spec.tol;
    cfg.use_newton = spec.newton;
    cfg.clustering_radius = spec.clustering_radius;
    cfg.boundary_scan = spec.boundary_scan;
    cfg.workers = workers;
    return cfg;
}

IntegratorConfig build_integrator_config(const IntegratorSpec& spec)
{
    IntegratorConfig cfg;
    cfg.steps_per_unit = spec.steps;
    cfg.fixpoint_tol = spec.fixpoint_tol;
    cfg.certificate_tol = spec.certificate_tol;
    return cfg;
}

std::string manifest_json(const RunManifest& m)
{
    json root;
    root["schema_version"] = m.schema_version;
    root["tool_version"] = m.tool_version;
    root["config_hash"] = m.config_hash_hex;
    root["started_at"] = m.started_at;
    root["finished_at"] = m.finished_at;
    json stages;
    for (const auto& [k, v] : m.stage_seconds)
        stages[k] = v;
    root["stage_seconds"] = stages;
    json conv;
    for (const auto& [k, v] : m.convergence)
        conv[k] = v;
    root["convergence"] = conv;
    return root.dump(2);
}

} // namespace surfdyn
