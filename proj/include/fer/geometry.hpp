#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <vector>

#include "fer/linalg.hpp"
#include "fer/model.hpp"

namespace fer {

/// Layer geometry of one coarse-graining level. Sites are the grouped sites
/// of the current level (modes numbered site*P + j); blocks are 2 consecutive
/// sites in 1D and 2x2 site squares in 2D; disentanglers sit across block
/// boundaries (1D: the straddling site pair; 2D: the 2x2 site plaquette
/// around each corner shared by four blocks).
struct BlockGeometry {
    int dimension = 1;
    int sites_per_dim = 0;   // at this level
    int modes_per_site = 1;  // at this level

    int blocks_per_dim() const { return sites_per_dim / 2; }
    int n_sites() const { return dimension == 1 ? sites_per_dim : sites_per_dim * sites_per_dim; }
    int n_blocks() const {
        return dimension == 1 ? blocks_per_dim() : blocks_per_dim() * blocks_per_dim();
    }
    int n_modes() const { return n_sites() * modes_per_site; }
    int block_mode_count() const { return (dimension == 1 ? 2 : 4) * modes_per_site; }

    int site_id(int x, int y = 0) const {
        const int g = sites_per_dim;
        x = ((x % g) + g) % g;
        y = ((y % g) + g) % g;
        return dimension == 1 ? x : y * g + x;
    }

    /// Sites of a block, reading order.
    std::vector<int> block_sites(int b) const {
        if (dimension == 1) return {site_id(2 * b), site_id(2 * b + 1)};
        const int g2 = blocks_per_dim();
        const int bx = b % g2, by = b / g2;
        return {site_id(2 * bx, 2 * by), site_id(2 * bx + 1, 2 * by),
                site_id(2 * bx, 2 * by + 1), site_id(2 * bx + 1, 2 * by + 1)};
    }

    /// Sites of a disentangler placement, reading order. 1D placement b is
    /// the pair straddling the boundary after block b; 2D placement is the
    /// plaquette around the corner shared by four blocks.
    std::vector<int> disentangler_sites(int d) const {
        if (dimension == 1) return {site_id(2 * d + 1), site_id(2 * d + 2)};
        const int g2 = blocks_per_dim();
        const int ix = d % g2, iy = d / g2;
        return {site_id(2 * ix + 1, 2 * iy + 1), site_id(2 * ix + 2, 2 * iy + 1),
                site_id(2 * ix + 1, 2 * iy + 2), site_id(2 * ix + 2, 2 * iy + 2)};
    }

    int n_disentanglers() const { return n_blocks(); }

    std::vector<int> site_modes(int site) const {
        std::vector<int> ms(modes_per_site);
        for (int j = 0; j < modes_per_site; ++j) ms[j] = site * modes_per_site + j;
        return ms;
    }

    std::vector<int> sites_majorana(const std::vector<int>& sites) const {
        std::vector<int> idx;
        idx.reserve(2 * sites.size() * modes_per_site);
        for (int s : sites)
            for (int j = 0; j < modes_per_site; ++j) {
                idx.push_back(2 * (s * modes_per_site + j));
                idx.push_back(2 * (s * modes_per_site + j) + 1);
            }
        return idx;
    }
};

inline BlockGeometry build_geometry(int dimension, int sites_per_dim, int modes_per_site) {
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("dimension must be 1 or 2");
    if (sites_per_dim % 2 != 0) throw std::invalid_argument("lattice side must be even");
    if (sites_per_dim < 4) throw std::invalid_argument("lattice too small: need at least 2 blocks per axis");
    if (modes_per_site < 1) throw std::invalid_argument("modes_per_site must be positive");
    return BlockGeometry{dimension, sites_per_dim, modes_per_site};
}

inline BlockGeometry build_geometry(const ModelSpec& spec) {
    validate(spec);
    const int p = grouping_factor(spec);
    return build_geometry(spec.dimension, spec.sites_per_dim / p, spec.modes_per_site);
}

/// Optimization window around a target block: the central block's Majorana
/// indices come first, then the boundary-disentangler partner sites, then the
/// remaining window sites, all in reading order.
struct Window {
    std::vector<int> modes;                 // global mode ids, canonical order
    std::vector<int> majorana;              // global Majorana ids, canonical order
    std::vector<std::vector<int>> u_slots;  // window-local Majorana lists per disentangler
    int central_modes = 0;                  // leading mode count of the central block
};

/// Disentangler placements touching a block.
inline std::vector<int> touching_disentanglers(const BlockGeometry& g, int b) {
    if (g.dimension == 1) {
        const int nb = g.blocks_per_dim();
        return {(b - 1 + nb) % nb, b};
    }
    const int g2 = g.blocks_per_dim();
    const int bx = b % g2, by = b / g2;
    std::vector<int> out;
    for (int dy : {-1, 0})
        for (int dx : {-1, 0})
            out.push_back(((by + dy + g2) % g2) * g2 + ((bx + dx + g2) % g2));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline Window build_window(const BlockGeometry& g, int target_block) {
    if (target_block < 0 || target_block >= g.n_blocks())
        throw std::invalid_argument("target block out of range");
    const int extent = std::min(3, g.blocks_per_dim());

    // window block set: target-centered, distinct blocks only
    std::vector<int> wblocks;
    if (g.dimension == 1) {
        const int nb = g.blocks_per_dim();
        for (int o = 0; o < extent; ++o) wblocks.push_back((target_block - 1 + o + nb) % nb);
        if (extent == 2) wblocks = {target_block, (target_block + 1) % nb};
    } else {
        const int g2 = g.blocks_per_dim();
        const int bx = target_block % g2, by = target_block / g2;
        const int lo = extent == 3 ? -1 : 0;
        for (int oy = lo; oy < lo + extent; ++oy)
            for (int ox = lo; ox < lo + extent; ++ox)
                wblocks.push_back(((by + oy + g2) % g2) * g2 + ((bx + ox + g2) % g2));
    }

    const auto central_sites = g.block_sites(target_block);
    std::set<int> central_set(central_sites.begin(), central_sites.end());
    const auto placements = touching_disentanglers(g, target_block);

    std::vector<int> partner_sites;
    std::set<int> partner_set;
    for (int d : placements)
        for (int s : g.disentangler_sites(d))
            if (!central_set.count(s) && partner_set.insert(s).second) partner_sites.push_back(s);
    std::sort(partner_sites.begin(), partner_sites.end());

    std::vector<int> rest;
    std::set<int> in_window;
    for (int b : wblocks)
        for (int s : g.block_sites(b)) in_window.insert(s);
    for (int s : in_window)
        if (!central_set.count(s) && !partner_set.count(s)) rest.push_back(s);

    std::vector<int> sites = central_sites;
    sites.insert(sites.end(), partner_sites.begin(), partner_sites.end());
    sites.insert(sites.end(), rest.begin(), rest.end());

    Window w;
    w.central_modes = static_cast<int>(central_sites.size()) * g.modes_per_site;
    for (int s : sites)
        for (int m : g.site_modes(s)) w.modes.push_back(m);
    w.majorana = g.sites_majorana(sites);

    // window-local positions of each disentangler's Majorana indices
    std::vector<int> local_of_site(g.n_sites(), -1);
    for (size_t i = 0; i < sites.size(); ++i) local_of_site[sites[i]] = static_cast<int>(i);
    for (int d : placements) {
        std::vector<int> slot;
        for (int s : g.disentangler_sites(d)) {
            const int ls = local_of_site[s];
            if (ls < 0) throw std::logic_error("disentangler site outside window");
            for (int j = 0; j < g.modes_per_site; ++j) {
                slot.push_back(2 * (ls * g.modes_per_site + j));
                slot.push_back(2 * (ls * g.modes_per_site + j) + 1);
            }
        }
        w.u_slots.push_back(std::move(slot));
    }
    return w;
}

/// Spec'd operation: the fine-lattice Majorana indices of the optimization
/// window in canonical order.
inline std::vector<int> window_indices(const BlockGeometry& g, int target_block) {
    return build_window(g, target_block).majorana;
}

/// Mode permutation taking the model's microsite ordering into grouped-site
/// ordering (site-major, intra-site reading order). Identity in 1D.
inline std::vector<int> regroup_permutation(const ModelSpec& spec) {
    validate(spec);
    const int m = mode_count(spec);
    std::vector<int> new_of_old(m);
    const int p = grouping_factor(spec);
    if (spec.dimension == 1) {
        for (int x = 0; x < m; ++x) new_of_old[x] = x;
        return new_of_old;
    }
    const int n1 = spec.sites_per_dim;
    const int g = n1 / p;
    for (int y = 0; y < n1; ++y)
        for (int x = 0; x < n1; ++x) {
            const int site = (y / p) * g + (x / p);
            const int off = (y % p) * p + (x % p);
            new_of_old[y * n1 + x] = site * spec.modes_per_site + off;
        }
    return new_of_old;
}

/// Symmetric permutation of a correlation matrix by a mode relabeling.
inline Mat apply_mode_permutation(const Mat& gamma, const std::vector<int>& new_of_old) {
    const int m = static_cast<int>(new_of_old.size());
    Mat out(2 * m, 2 * m);
    std::vector<int> maj(2 * m);
    for (int r = 0; r < m; ++r) {
        maj[2 * r] = 2 * new_of_old[r];
        maj[2 * r + 1] = 2 * new_of_old[r] + 1;
    }
    for (int i = 0; i < 2 * m; ++i)
        for (int j = 0; j < 2 * m; ++j) out(maj[i], maj[j]) = gamma(i, j);
    return out;
}

}  // namespace fer
