#pragma once

// End-to-end solve: surface + incidence -> per-region modal coefficients.
//
// All vertical grids share one global strip ladder (panel edges at every
// ground height, every inclusion edge, and the absorber entrance/top, with a
// single node-count table).  Neighboring regions therefore carry identical
// nodes on their shared span and the matching rows collocate nodal values
// directly.  The interior-node budget is split between the strips above the
// highest ground (budget.shared, where every region contributes) and those
// below it (budget.below).

#include <algorithm>
#include <map>
#include <variant>
#include <vector>

#include "stepwave/fields.hpp"
#include "stepwave/geometry.hpp"
#include "stepwave/matching.hpp"

namespace stepwave {

struct NodeBudget {
    int shared = 280;  // interior nodes over [highest ground, absorber top]
    int below = 140;   // interior nodes over the strips underneath
};

struct Problem {
    SteppedSurface surface;
    std::vector<Inclusion> inclusions;
    Incidence incidence = PlaneWave{pi / 6.0};
    double k = 2.0 * pi;
    PmlParams pml{2.5, 1.0, 20.0};
    NodeBudget budget;

    void validate() const {
        surface.validate();
        pml.validate();
        if (!(k > 0.0)) throw ConfigError("problem: wavenumber must be positive");
        for (double g : surface.ground_heights)
            if (g >= pml.entrance)
                throw ConfigError("problem: ground reaches the absorber entrance");
        for (const auto& inc : inclusions)
            if (inc.x2_hi >= pml.entrance)
                throw ConfigError("problem: inclusion reaches the absorber entrance");
        if (const auto* pw = std::get_if<PlaneWave>(&incidence)) {
            if (!(pw->theta > 0.0) || !(pw->theta < pi))
                throw ConfigError("problem: incidence angle outside (0, pi)");
        } else {
            const Point z = std::get<PointSource>(incidence).z;
            if (z.x2 <= surface.ground_at(z.x1))
                throw ConfigError("problem: point source below the surface");
            if (z.x2 >= pml.entrance)
                throw ConfigError("problem: point source inside the absorber");
        }
    }
};

struct RegionSolution {
    Region geom;
    ReferenceField wfield;
    DirectedBasis basis;        // modes pointer + edges + column offsets
    Eigen::VectorXcd coef_right;  // rightgoing block (empty on the leftmost region)
    Eigen::VectorXcd coef_left;   // leftgoing block (empty on the rightmost region)
};

struct Solution {
    Problem problem;
    std::vector<double> rungs;       // global strip edges, ascending
    std::vector<int> strip_counts;   // panel node count per strip
    std::vector<ModeSet> mode_cache; // one entry per distinct vertical profile
    std::vector<RegionSolution> regions;
    double matching_residual = 0.0;
    double condition_estimate = 1.0;
    int system_size = 0;

    int region_of(double x1) const {
        int r = 0;
        while (r + 1 < int(regions.size()) && x1 >= regions[r].geom.x1_hi) ++r;
        return r;
    }
};

namespace detail {

// Largest-remainder split of `total` proportional to `lengths`, with a small
// floor so no strip starves.
inline std::vector<int> proportional_counts(int total, const std::vector<double>& lengths) {
    const int n = int(lengths.size());
    std::vector<int> out(n, 0);
    if (n == 0) return out;
    double span = 0.0;
    for (double l : lengths) span += l;
    std::vector<std::pair<double, int>> frac;
    int used = 0;
    for (int i = 0; i < n; ++i) {
        double share = total * lengths[i] / span;
        out[i] = int(share);
        used += out[i];
        frac.push_back({share - out[i], i});
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int i = 0; i < total - used; ++i) out[frac[i % n].second] += 1;
    for (int& c : out) c = std::max(c, 4);
    return out;
}

inline std::vector<double> ladder_rungs(const std::vector<Region>& regions, const PmlParams& pml) {
    std::vector<double> rungs;
    for (const auto& r : regions) {
        rungs.push_back(r.ground);
        for (double b : r.profile_breaks()) rungs.push_back(b);
    }
    rungs.push_back(pml.entrance);
    rungs.push_back(pml.top());
    std::sort(rungs.begin(), rungs.end());
    rungs.erase(std::unique(rungs.begin(), rungs.end()), rungs.end());
    return rungs;
}

}  // namespace detail

inline Solution solve_problem(const Problem& problem) {
    problem.validate();
    Solution sol;
    sol.problem = problem;
    const double k = problem.k;

    auto regions = build_regions(problem.surface, problem.inclusions);
    if (const auto* ps = std::get_if<PointSource>(&problem.incidence)) {
        int r = 0;
        while (r + 1 < int(regions.size()) && ps->z.x1 >= regions[r].x1_hi) ++r;
        if (!regions[r].uniform())
            throw ConfigError("problem: point source sits in a column with n != 1");
    }

    // Global strip ladder and its node counts.
    sol.rungs = detail::ladder_rungs(regions, problem.pml);
    double g_max = *std::max_element(problem.surface.ground_heights.begin(),
                                     problem.surface.ground_heights.end());
    const int nstrips = int(sol.rungs.size()) - 1;
    std::vector<double> len_shared, len_below;
    for (int s = 0; s < nstrips; ++s) {
        double len = sol.rungs[s + 1] - sol.rungs[s];
        (sol.rungs[s] >= g_max ? len_shared : len_below).push_back(len);
    }
    auto shared_counts = detail::proportional_counts(problem.budget.shared, len_shared);
    auto below_counts = detail::proportional_counts(problem.budget.below, len_below);
    sol.strip_counts.resize(nstrips);
    for (int s = 0, i_sh = 0, i_be = 0; s < nstrips; ++s)
        sol.strip_counts[s] =
            2 + (sol.rungs[s] >= g_max ? shared_counts[i_sh++] : below_counts[i_be++]);

    // One eigensolve per distinct vertical profile.
    const TopCondition top = std::holds_alternative<PlaneWave>(problem.incidence)
                                 ? TopCondition::RobinOutgoing
                                 : TopCondition::Dirichlet;
    const double beta0 = std::holds_alternative<PlaneWave>(problem.incidence)
                             ? beta_of(k, std::get<PlaneWave>(problem.incidence).theta)
                             : 0.0;
    std::map<std::vector<double>, int> profile_index;
    std::vector<std::vector<double>> profiles;
    std::vector<int> region_profile(regions.size());
    for (size_t r = 0; r < regions.size(); ++r) {
        std::vector<double> key{regions[r].ground};
        for (int s = 0; s < nstrips; ++s) {
            if (sol.rungs[s] < regions[r].ground) continue;
            key.push_back(regions[r].n_at(0.5 * (sol.rungs[s] + sol.rungs[s + 1])));
        }
        auto [it, fresh] = profile_index.try_emplace(key, int(profiles.size()));
        if (fresh) profiles.push_back(key);
        region_profile[r] = it->second;
    }
    sol.mode_cache.reserve(profiles.size());
    for (const auto& key : profiles) {
        double ground = key[0];
        std::vector<double> breaks, ns;
        std::vector<int> counts;
        for (int s = 0; s < nstrips; ++s) {
            if (sol.rungs[s] < ground) continue;
            if (breaks.empty()) breaks.push_back(sol.rungs[s]);
            breaks.push_back(sol.rungs[s + 1]);
            counts.push_back(sol.strip_counts[s]);
        }
        ns.assign(key.begin() + 1, key.end());
        auto grid = cheb_grid(breaks, counts);
        auto vop = assemble_vertical_operator(grid, ns, problem.pml, k, top, beta0);
        sol.mode_cache.push_back(solve_modes(vop));
    }

    // Directed trial spaces.
    const int nreg = int(regions.size());
    int offset = 0;
    sol.regions.resize(nreg);
    for (int r = 0; r < nreg; ++r) {
        RegionSolution& rs = sol.regions[r];
        rs.geom = regions[r];
        rs.wfield = ReferenceField::make(k, problem.incidence, regions[r]);
        rs.basis.modes = &sol.mode_cache[region_profile[r]];
        rs.basis.left_edge = regions[r].x1_lo;
        rs.basis.right_edge = regions[r].x1_hi;
        rs.basis.rightgoing = r > 0;
        rs.basis.leftgoing = r + 1 < nreg;
        rs.basis.offset = offset;
        offset += rs.basis.cols();
    }
    sol.system_size = offset;
    if (nreg == 1) return sol;  // flat surface: the reference field is the answer

    // Interface data.
    std::vector<DirectedBasis> bases;
    for (const auto& rs : sol.regions) bases.push_back(rs.basis);
    std::vector<InterfaceData> interfaces;
    for (int i = 0; i + 1 < nreg; ++i) {
        const RegionSolution& A = sol.regions[i];
        const RegionSolution& B = sol.regions[i + 1];
        InterfaceData f;
        f.left = i;
        f.right = i + 1;
        f.b = A.geom.x1_hi;
        const double split = std::max(A.geom.ground, B.geom.ground);
        const auto& ga = A.basis.modes->grid;
        const auto& gb = B.basis.modes->grid;
        for (int idx : ga.interior)
            if (ga.nodes(idx) > split) f.nodes_left.push_back(idx);
        for (int idx : gb.interior)
            if (gb.nodes(idx) > split) f.nodes_right.push_back(idx);
        if (f.nodes_left.size() != f.nodes_right.size())
            throw SolverError("solve: shared-span grids are misaligned");
        for (size_t m = 0; m < f.nodes_left.size(); ++m) {
            double h = ga.nodes(f.nodes_left[m]);
            if (std::abs(h - gb.nodes(f.nodes_right[m])) > 1e-12)
                throw SolverError("solve: shared-span grids are misaligned");
            cdouble x2hat = problem.pml.stretched(h);
            JumpData j = interface_jump_data(A.wfield, B.wfield, f.b, x2hat);
            f.du.push_back(j.du);
            f.dup.push_back(j.dup);
        }
        if (A.geom.ground != B.geom.ground) {
            const RegionSolution& low = A.geom.ground < B.geom.ground ? A : B;
            f.wall_side = A.geom.ground < B.geom.ground ? i : i + 1;
            const auto& gl = low.basis.modes->grid;
            for (int idx : gl.interior) {
                double h = gl.nodes(idx);
                if (h >= split) continue;
                f.wall_nodes.push_back(idx);
                f.wall_rhs.push_back(-low.wfield.value(f.b, problem.pml.stretched(h)));
            }
        }
        interfaces.push_back(std::move(f));
    }

    auto sys = assemble_matching_system(bases, interfaces, k);
    auto coef = solve_coefficients(sys);
    sol.matching_residual = coef.residual;
    sol.condition_estimate = coef.cond_estimate;
    for (auto& rs : sol.regions) {
        const int n = rs.basis.count();
        int at = rs.basis.offset;
        if (rs.basis.rightgoing) {
            rs.coef_right = coef.x.segment(at, n);
            at += n;
        }
        if (rs.basis.leftgoing) rs.coef_left = coef.x.segment(at, n);
    }
    return sol;
}

}  // namespace stepwave
