#ifndef SURFDYN_CONFIG_HPP
#define SURFDYN_CONFIG_HPP

#include "surfdyn/flux.hpp"
#include "surfdyn/hamiltonian.hpp"
#include "surfdyn/map.hpp"
#include "surfdyn/one_form.hpp"
#include "surfdyn/orbits.hpp"
#include "surfdyn/surface.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace surfdyn {

struct SurfaceSpec {
    std::string kind = "disk"; ///< disk | annulus
    double area = 1.0;
    double target_area = 0.0; ///< > 0 requests the capped surface
    double collar = 0.1;
    double collar_width = -1.0; ///< -1 keeps the kind default
};

struct MapSpec {
    std::string name = "identity";
    std::map<std::string, double> params;
    std::string hamiltonian; ///< expression, for name == "hamiltonian"
};

struct IntegratorSpec {
    int steps = 256;
    double fixpoint_tol = 1e-12;
    double certificate_tol = 1e-9;
};

struct OrbitSpec {
    int max_period = 4;
    int grid_major = 16;
    int grid_minor = 16;
    double tol = 1e-10;
    bool newton = true;
    double clustering_radius = 1e-6;
    int boundary_scan = 256;
};

struct ActionSpec {
    std::string beta = "standard";
    std::string dg; ///< optional exact perturbation: beta + d(expr)
    int gamma = 0;
    bool gamma_set = false; ///< multi-boundary surfaces require an explicit choice
    double basepoint_x = 0.0, basepoint_y = 0.0;
    bool basepoint_set = false;
    int exactness_loops = 100;
    int boundary_grid = 4096;
    long rotation_iters = 4096;
    long boundary_max_iters = 1000000;
};

struct DictionarySpec {
    std::string name = "boundary-flat";
    int size = 5;
};

struct CensusSpec {
    double epsilon = 0.5;
    std::string weighting = "voronoi"; ///< voronoi | uniform
    int samples = 4000;
};

struct EquidistSpec {
    std::vector<int> schedule = {2, 4};
    std::string weighting = "uniform"; ///< uniform | voronoi
};

struct PolylineSpec {
    std::string id;
    std::vector<PointCoord> points;
    bool relative = false;
};

struct FluxSpec {
    MapSpec isotopy;
    std::vector<std::string> cycles = {"gate"};
    std::vector<PolylineSpec> polylines;
    long q_max = 10000;
    double tol = 1e-9;
};

struct OutputSpec {
    std::string dir = ".";
    std::string prefix = "run";
};

struct ExperimentConfig {
    int schema_version = 1;
    std::uint64_t seed = 1;
    int workers = 1;
    SurfaceSpec surface;
    MapSpec map;
    IntegratorSpec integrator;
    OrbitSpec orbits;
    ActionSpec action;
    DictionarySpec dictionary;
    CensusSpec census;
    EquidistSpec equidist;
    FluxSpec flux;
    OutputSpec output;
};

/// parse + schema-validate (unknown keys rejected, tolerances positive)
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// canonical serialization (sorted keys, full precision)
std::string serialize_config(const ExperimentConfig& cfg);
/// FNV-1a hash of the canonical serialization
std::uint64_t config_hash(const ExperimentConfig& cfg);

// --- builders -------------------------------------------------------------

std::shared_ptr<const Surface> build_surface(const SurfaceSpec& spec);
/// builds the named family; on capped surfaces builds over the base and extends
SurfaceMap build_map(std::shared_ptr<const Surface> s, const MapSpec& spec,
                     const IntegratorSpec& integrator);
Isotopy build_isotopy(std::shared_ptr<const Surface> s, const MapSpec& spec,
                      const IntegratorSpec& integrator);
std::vector<CycleSpec> build_cycles(const Surface& s, const std::vector<std::string>& names);
OneForm build_beta(const Surface& s, const ActionSpec& spec);
OrbitSearchConfig build_orbit_config(const OrbitSpec& spec, int workers);
IntegratorConfig build_integrator_config(const IntegratorSpec& spec);

struct RunManifest {
    int schema_version = 1;
    std::string tool_version;
    std::string config_hash_hex;
    std::string started_at;
    std::string finished_at;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::pair<std::string, double>> convergence;
};

std::string manifest_json(const RunManifest& m);

extern const char* kToolVersion;

} // namespace surfdyn

#endif
