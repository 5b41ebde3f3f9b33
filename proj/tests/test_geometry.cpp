#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "fer/geometry.hpp"

using namespace fer;

namespace {

std::set<std::set<int>> placement_sets(const BlockGeometry& g) {
    std::set<std::set<int>> out;
    for (int d = 0; d < g.n_disentanglers(); ++d) {
        auto s = g.disentangler_sites(d);
        out.insert(std::set<int>(s.begin(), s.end()));
    }
    return out;
}

}  // namespace

TEST_CASE("1D counting: 8 sites -> 4 blocks, 4 boundary placements") {
    auto g = build_geometry(1, 8, 2);
    REQUIRE(g.n_blocks() == 4);
    REQUIRE(g.n_disentanglers() == 4);
    // partition property
    std::set<int> covered;
    for (int b = 0; b < g.n_blocks(); ++b)
        for (int s : g.block_sites(b)) REQUIRE(covered.insert(s).second);
    REQUIRE(covered.size() == 8);
    // disentanglers tile the lattice too, never sharing a site
    std::set<int> dcov;
    for (int d = 0; d < g.n_disentanglers(); ++d)
        for (int s : g.disentangler_sites(d)) REQUIRE(dcov.insert(s).second);
    REQUIRE(dcov.size() == 8);
}

TEST_CASE("2D counting: 4x4 sites -> 4 blocks, 4 corner plaquettes") {
    auto g = build_geometry(2, 4, 4);
    REQUIRE(g.n_blocks() == 4);
    REQUIRE(g.n_disentanglers() == 4);
    std::set<int> covered;
    for (int b = 0; b < g.n_blocks(); ++b)
        for (int s : g.block_sites(b)) REQUIRE(covered.insert(s).second);
    REQUIRE(covered.size() == 16);
    std::set<int> dcov;
    for (int d = 0; d < g.n_disentanglers(); ++d)
        for (int s : g.disentangler_sites(d)) REQUIRE(dcov.insert(s).second);
    REQUIRE(dcov.size() == 16);
}

TEST_CASE("every disentangler touches at least two distinct blocks") {
    for (auto g : {build_geometry(1, 8, 2), build_geometry(2, 8, 4)}) {
        std::vector<int> block_of(g.n_sites(), -1);
        for (int b = 0; b < g.n_blocks(); ++b)
            for (int s : g.block_sites(b)) block_of[s] = b;
        for (int d = 0; d < g.n_disentanglers(); ++d) {
            std::set<int> blocks;
            for (int s : g.disentangler_sites(d)) blocks.insert(block_of[s]);
            REQUIRE(blocks.size() >= 2);
        }
    }
}

TEST_CASE("2D placements are invariant under 90-degree rotation about a block center") {
    auto g = build_geometry(2, 8, 1);
    const int n = g.sites_per_dim;
    auto rot = [&](int site) {
        const int x = site % n, y = site / n;
        // (x, y) -> (y, 1 - x) about the center of block (0,0)
        return g.site_id(y, 1 - x);
    };
    std::set<std::set<int>> rotated;
    for (int d = 0; d < g.n_disentanglers(); ++d) {
        std::set<int> s;
        for (int site : g.disentangler_sites(d)) s.insert(rot(site));
        rotated.insert(s);
    }
    REQUIRE(rotated == placement_sets(g));
    // blocks map to blocks as well
    std::set<std::set<int>> rblocks, blocks;
    for (int b = 0; b < g.n_blocks(); ++b) {
        std::set<int> s, r;
        for (int site : g.block_sites(b)) {
            s.insert(site);
            r.insert(rot(site));
        }
        blocks.insert(s);
        rblocks.insert(r);
    }
    REQUIRE(rblocks == blocks);
}

TEST_CASE("window sizes and canonical order") {
    // 1D, P=2: 3 blocks = 12 modes = 24 Majorana indices
    auto g1 = build_geometry(1, 16, 2);
    auto w1 = build_window(g1, 3);
    REQUIRE(w1.modes.size() == 12);
    REQUIRE(w1.majorana.size() == 24);
    REQUIRE(w1.central_modes == 4);
    REQUIRE(w1.u_slots.size() == 2);
    for (const auto& slot : w1.u_slots) REQUIRE(slot.size() == 8);
    // central block first: modes of sites 6 and 7
    REQUIRE(w1.modes[0] == 12);
    REQUIRE(w1.modes[3] == 15);

    // 2D, P=4 (p=2): 3x3 blocks = 144 modes
    auto g2 = build_geometry(2, 8, 4);
    auto w2 = build_window(g2, 0);
    REQUIRE(w2.modes.size() == 144);
    REQUIRE(w2.central_modes == 16);
    REQUIRE(w2.u_slots.size() == 4);
    for (const auto& slot : w2.u_slots) REQUIRE(slot.size() == 32);

    // two adjacent 1D windows overlap in exactly 2 blocks (8 modes)
    auto wa = build_window(g1, 3);
    auto wb = build_window(g1, 4);
    std::set<int> ma(wa.modes.begin(), wa.modes.end());
    int shared = 0;
    for (int m : wb.modes) shared += ma.count(m);
    REQUIRE(shared == 8);

    REQUIRE_THROWS_AS(build_window(g1, 99), std::invalid_argument);
}

TEST_CASE("small lattices fall back to whole-lattice windows") {
    auto g1 = build_geometry(1, 4, 2);
    auto w1 = build_window(g1, 0);
    REQUIRE(w1.modes.size() == 8);  // whole lattice
    REQUIRE(w1.u_slots.size() == 2);
    // slots stay disjoint
    std::set<int> seen;
    for (const auto& slot : w1.u_slots)
        for (int i : slot) REQUIRE(seen.insert(i).second);

    auto g2 = build_geometry(2, 4, 2);
    auto w2 = build_window(g2, 0);
    REQUIRE(w2.modes.size() == 32);
    REQUIRE(w2.u_slots.size() == 4);
    std::set<int> seen2;
    for (const auto& slot : w2.u_slots)
        for (int i : slot) REQUIRE(seen2.insert(i).second);
}

TEST_CASE("causal cone size is level independent") {
    auto influence = [](const BlockGeometry& g) {
        std::set<int> s;
        for (int site : g.block_sites(0)) s.insert(site);
        for (int d : touching_disentanglers(g, 0))
            for (int site : g.disentangler_sites(d)) s.insert(site);
        return s.size();
    };
    REQUIRE(influence(build_geometry(1, 32, 2)) == influence(build_geometry(1, 8, 2)));
    REQUIRE(influence(build_geometry(2, 16, 4)) == influence(build_geometry(2, 8, 4)));
}

TEST_CASE("geometry rejects bad inputs") {
    REQUIRE_THROWS_AS(build_geometry(1, 7, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(build_geometry(3, 8, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(build_geometry(1, 2, 2), std::invalid_argument);
}

TEST_CASE("regrouping permutation is a bijection matching the site map") {
    ModelSpec spec;
    spec.dimension = 2;
    spec.sites_per_dim = 8;
    spec.modes_per_site = 4;
    auto perm = regroup_permutation(spec);
    std::set<int> img(perm.begin(), perm.end());
    REQUIRE(img.size() == perm.size());
    // microsite (3, 2): grouped site (1, 1) = site 5, offset (1, 0) -> mode 5*4 + 1
    REQUIRE(perm[2 * 8 + 3] == 5 * 4 + 1);
    // 1D grouping is the identity
    ModelSpec s1;
    s1.sites_per_dim = 8;
    s1.modes_per_site = 4;
    auto p1 = regroup_permutation(s1);
    for (size_t i = 0; i < p1.size(); ++i) REQUIRE(p1[i] == static_cast<int>(i));
}
