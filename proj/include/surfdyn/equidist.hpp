#ifndef SURFDYN_EQUIDIST_HPP
#define SURFDYN_EQUIDIST_HPP

#include "surfdyn/orbits.hpp"
#include "surfdyn/surface.hpp"

#include <functional>
#include <string>
#include <vector>

namespace surfdyn {

struct TestFunction {
    std::string name;
    std::function<double(const PointCoord&)> value;
    bool is_constant_one = false;
};

/** A finite test-function dictionary: f_1 = 1 plus bounded smooth functions
    locally constant on every boundary/Lagrangian circle, with precomputed
    area averages. */
struct TestDictionary {
    std::vector<TestFunction> functions;
    std::vector<double> averages;
    double average_tolerance = 0.0;
    double locality_defect = 0.0;
};

/** The default boundary-flat dictionary of the requested size: radial
    profiles flattened to constants near every circle, angular modes with
    boundary-vanishing envelopes, and cap bumps on capped surfaces. */
TestDictionary boundary_flat_dictionary(const Surface& s, int size);

/// dictionary from caller-supplied functions; computes averages and locality
TestDictionary make_dictionary(const Surface& s, std::vector<TestFunction> fns);

/// max circle-constancy defect over sampled circle points
double dictionary_locality_defect(const Surface& s, const std::vector<TestFunction>& fns,
                                  int samples = 64);

struct DefectEntry {
    std::string function_name;
    double orbit_average = 0.0;
    double area_average = 0.0;
    double defect = 0.0;
};

struct DefectReport {
    std::vector<DefectEntry> entries;
    double max_defect = 0.0;
    double orbit_set_size = 0.0; ///< |O|
    int orbit_count = 0;
    int level = 0;      ///< period bound in a defect sequence
    std::string orbit_set_id;
    bool skipped = false;
    std::string note;
};

/// per-function defects |O(f_i)/|O| - area average of f_i|
DefectReport equidistribution_defect(const OrbitSet& o, const TestDictionary& dict,
                                     const Surface& s);

/** Keeps the sub-sum of orbits lying in Z (boundary-circle orbits included),
    with points rewritten in the base chart; throws when an orbit straddles
    the Lagrangian circles, which would mean L is not invariant. */
OrbitSet restrict_orbit_set(const OrbitSet& o, const Surface& capped, double tol = 1e-9);

/// true when every orbit point lies in Z (cap interiors excluded)
bool orbit_in_base(const Surface& capped, const PeriodicOrbit& orbit, double tol = 1e-9);

enum class OrbitWeighting { Uniform, VoronoiMass };

struct DefectSequenceConfig {
    OrbitSearchConfig search;
    OrbitWeighting weighting = OrbitWeighting::Uniform;
    int voronoi_samples = 4000;
    unsigned seed = 92821;
};

/** For each period bound d_j in the schedule, forms the orbit set of all
    found orbits of period <= d_j under the chosen weighting and reports the
    dictionary defects; levels with no orbits are skipped with a note. */
std::vector<DefectReport> defect_sequence_experiment(const SurfaceMap& phi,
                                                     const TestDictionary& dict,
                                                     const std::vector<int>& schedule,
                                                     const DefectSequenceConfig& cfg);

} // namespace surfdyn

#endif
