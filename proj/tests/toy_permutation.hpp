#ifndef SURFDYN_TESTS_TOY_PERMUTATION_HPP
#define SURFDYN_TESTS_TOY_PERMUTATION_HPP

#include "surfdyn/map.hpp"
#include "surfdyn/orbits.hpp"

#include <algorithm>
#include <utility>
#include <vector>

namespace surfdyn_tests {

/* Toy permutation system: the affine cat map
       (s, t) -> (2s + t - 1/64, s + t - 1/128)  mod 1
   permutes the 64x64 offset lattice {((i+1/2)/64, (j+1/2)/64)} exactly (all
   values are dyadic, so floating-point evaluation is exact). Chart fixture
   only: it wraps both coordinates, so it is not an annulus diffeomorphism. */
constexpr int kToyGrid = 64;

inline surfdyn::SurfaceMap toy_cat_map(std::shared_ptr<const surfdyn::Surface> s)
{
    surfdyn::Mat2 m;
    m << 2, 1, 1, 1;
    return surfdyn::SurfaceMap(
        std::move(s), surfdyn::MapRepresentation::ClosedForm, "toy-cat",
        [](const surfdyn::PointCoord& p) {
            double sc = surfdyn::wrap_unit(2.0 * p.xy[0] + p.xy[1] - 1.0 / 64.0);
            double tc = surfdyn::wrap_unit(p.xy[0] + p.xy[1] - 1.0 / 128.0);
            return surfdyn::PointCoord(0, sc, tc);
        },
        [m](const surfdyn::PointCoord&) { return m; });
}

struct ToyCycles {
    std::vector<std::vector<std::pair<int, int>>> cycles; ///< canonical integer cycles
    int max_length = 0;
};

/* brute-force cycle decomposition of the integer permutation
   (i, j) -> (2i + j mod 64, i + j mod 64) */
inline ToyCycles toy_cycle_oracle()
{
    ToyCycles out;
    std::vector<bool> seen(kToyGrid * kToyGrid, false);
    for (int start = 0; start < kToyGrid * kToyGrid; start++) {
        if (seen[static_cast<size_t>(start)])
            continue;
        std::vector<std::pair<int, int>> cycle;
        int i = start / kToyGrid, j = start % kToyGrid;
        for (;;) {
            int idx = i * kToyGrid + j;
            if (seen[static_cast<size_t>(idx)])
                break;
            seen[static_cast<size_t>(idx)] = true;
            cycle.emplace_back(i, j);
            int ni = (2 * i + j) % kToyGrid, nj = (i + j) % kToyGrid;
            i = ni;
            j = nj;
        }
        out.max_length = std::max(out.max_length, static_cast<int>(cycle.size()));
        auto smallest = std::min_element(cycle.begin(), cycle.end());
        std::rotate(cycle.begin(), smallest, cycle.end());
        out.cycles.push_back(std::move(cycle));
    }
    std::sort(out.cycles.begin(), out.cycles.end());
    return out;
}

inline std::pair<int, int> toy_lattice_index(const surfdyn::PointCoord& p)
{
    int i = static_cast<int>(std::floor(p.xy[0] * kToyGrid));
    int j = static_cast<int>(std::floor(p.xy[1] * kToyGrid));
    return {i, j};
}

/// canonicalized integer cycles of the orbits found by the solver
inline std::vector<std::vector<std::pair<int, int>>>
toy_found_cycles(const std::vector<surfdyn::PeriodicOrbit>& orbits)
{
    std::vector<std::vector<std::pair<int, int>>> found;
    for (const surfdyn::PeriodicOrbit& o : orbits) {
        std::vector<std::pair<int, int>> cycle;
        for (const surfdyn::PointCoord& p : o.points)
            cycle.push_back(toy_lattice_index(p));
        auto smallest = std::min_element(cycle.begin(), cycle.end());
        std::rotate(cycle.begin(), smallest, cycle.end());
        found.push_back(std::move(cycle));
    }
    std::sort(found.begin(), found.end());
    return found;
}

inline surfdyn::OrbitSearchConfig toy_search_config(const ToyCycles& oracle)
{
    surfdyn::OrbitSearchConfig cfg;
    cfg.max_period = oracle.max_length;
    cfg.tol = 0.0;
    cfg.use_newton = false;
    cfg.scan_boundary = false;
    for (int i = 0; i < kToyGrid; i++)
        for (int j = 0; j < kToyGrid; j++)
            cfg.custom_seeds.emplace_back(0, (i + 0.5) / kToyGrid, (j + 0.5) / kToyGrid);
    return cfg;
}

} // namespace surfdyn_tests

#endif
