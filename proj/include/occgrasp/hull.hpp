#pragma once

// Incremental convex hull in fixed dimension D with facet adjacency
// bookkeeping. Two drivers share the same expansion step:
//
//   origin_margin  grows the hull only near the origin: it repeatedly takes
//                  the current facet closest to the origin and either adds the
//                  support point beyond it or stops once that facet supports
//                  the whole point set. The stopping facet is then a true hull
//                  facet and its offset is the origin's distance to the hull
//                  boundary.
//
//   full           confirms every facet, yielding the complete hull.
//
// Both report the same margin; the lazy driver touches far fewer facets on
// pooled wrench sets with thousands of columns.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace occgrasp::hull {

struct HullResult {
    bool full_dimensional = false;
    bool origin_interior = false;
    double margin = 0.0;  ///< min facet offset; 0 unless origin_interior
    std::size_t facet_count = 0;
    std::size_t vertex_count = 0;
};

template <int D>
class IncrementalHull {
    static_assert(D >= 2, "hull dimension must be at least 2");

public:
    using Point = Eigen::Matrix<double, D, 1>;

    /// `interior_tol`: the origin counts as strictly interior only if every
    /// facet offset exceeds it.
    static HullResult origin_margin(std::span<const Point> points, double interior_tol = 1e-10) {
        IncrementalHull h(points);
        return h.run(/*lazy=*/true, interior_tol);
    }

    static HullResult full(std::span<const Point> points, double interior_tol = 1e-10) {
        IncrementalHull h(points);
        return h.run(/*lazy=*/false, interior_tol);
    }

private:
    struct Facet {
        std::array<int, D> vertices{};
        std::array<int, D> neighbors{};  // neighbors[i] shares all vertices but vertices[i]
        Point normal = Point::Zero();
        double offset = 0.0;             // normal . x <= offset inside
        bool alive = true;
        bool confirmed = false;
        unsigned mark = 0;
    };

    explicit IncrementalHull(std::span<const Point> points) : pts_(points) {
        double scale = 0.0;
        for (const Point& p : pts_) scale = std::max(scale, p.norm());
        scale_ = scale;
        tol_ = 1e-11 * std::max(scale, 1e-300);
    }

    double distance(const Facet& f, const Point& p) const { return f.normal.dot(p) - f.offset; }

    int support(const Point& dir) const {
        int best = 0;
        double best_val = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            const double v = dir.dot(pts_[i]);
            if (v > best_val) {
                best_val = v;
                best = static_cast<int>(i);
            }
        }
        return best;
    }

    // Greedy simplex: farthest point from the mean, then repeatedly the point
    // farthest from the affine span of those chosen. False if degenerate.
    bool build_simplex() {
        if (pts_.size() < static_cast<std::size_t>(D + 1) || scale_ <= 0.0) return false;
        Point mean = Point::Zero();
        for (const Point& p : pts_) mean += p;
        mean /= static_cast<double>(pts_.size());

        std::array<int, D + 1> simplex{};
        double best = -1.0;
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            const double d = (pts_[i] - mean).squaredNorm();
            if (d > best) {
                best = d;
                simplex[0] = static_cast<int>(i);
            }
        }
        std::vector<Point> basis;
        const Point& origin = pts_[simplex[0]];
        const double affine_tol = 1e-9 * scale_;
        for (int k = 1; k <= D; ++k) {
            double best_norm = -1.0;
            Point best_res = Point::Zero();
            for (std::size_t i = 0; i < pts_.size(); ++i) {
                Point r = pts_[i] - origin;
                for (const Point& b : basis) r -= b.dot(r) * b;
                const double n = r.norm();
                if (n > best_norm) {
                    best_norm = n;
                    best_res = r;
                    simplex[k] = static_cast<int>(i);
                }
            }
            if (best_norm <= affine_tol) return false;
            basis.push_back(best_res / best_norm);
        }

        interior_ = Point::Zero();
        for (int v : simplex) interior_ += pts_[v];
        interior_ /= static_cast<double>(D + 1);

        for (int omit = 0; omit <= D; ++omit) {
            Facet f;
            int slot = 0;
            for (int j = 0; j <= D; ++j) {
                if (j == omit) continue;
                f.vertices[slot] = simplex[j];
                f.neighbors[slot] = j;  // the facet omitting vertex j
                ++slot;
            }
            orient(f);
            facets_.push_back(f);
        }
        return true;
    }

    void orient(Facet& f) const {
        Eigen::Matrix<double, D, D - 1> edges;
        const Point& base = pts_[f.vertices[0]];
        for (int i = 1; i < D; ++i) edges.col(i - 1) = pts_[f.vertices[i]] - base;
        const Eigen::HouseholderQR<Eigen::Matrix<double, D, D - 1>> qr(edges);
        const Eigen::Matrix<double, D, D> q = qr.householderQ();
        f.normal = q.col(D - 1);
        f.offset = f.normal.dot(base);
        if (f.normal.dot(interior_) - f.offset > 0.0) {
            f.normal = -f.normal;
            f.offset = -f.offset;
        }
    }

    // Replaces the facets visible from point `apex` (starting at `seed`) by a
    // cone over the horizon. Returns the ids of the new facets.
    std::vector<int> expand(int seed, int apex) {
        const Point& p = pts_[apex];
        const unsigned visible = ++epoch_ * 2;  // marks: visible / checked-not-visible
        const unsigned hidden = visible + 1;
        ++epoch_;

        std::vector<int> vis{seed};
        facets_[seed].mark = visible;
        for (std::size_t head = 0; head < vis.size(); ++head) {
            const Facet& f = facets_[vis[head]];
            for (int nb : f.neighbors) {
                Facet& g = facets_[nb];
                if (g.mark == visible || g.mark == hidden) continue;
                if (distance(g, p) > tol_) {
                    g.mark = visible;
                    vis.push_back(nb);
                } else {
                    g.mark = hidden;
                }
            }
        }

        std::vector<int> created;
        std::map<std::array<int, D - 1>, std::pair<int, int>> open_ridges;
        for (int fid : vis) {
            for (int slot = 0; slot < D; ++slot) {
                const int nb = facets_[fid].neighbors[slot];
                if (facets_[nb].mark == visible) continue;
                Facet nf;
                nf.vertices = facets_[fid].vertices;
                nf.vertices[slot] = apex;
                nf.neighbors[slot] = nb;
                orient(nf);
                const int id = static_cast<int>(facets_.size());
                Facet& other = facets_[nb];
                for (int s = 0; s < D; ++s)
                    if (other.neighbors[s] == fid) other.neighbors[s] = id;
                facets_.push_back(nf);
                created.push_back(id);

                for (int j = 0; j < D; ++j) {
                    if (j == slot) continue;
                    std::array<int, D - 1> key{};
                    int k = 0;
                    for (int m = 0; m < D; ++m)
                        if (m != j) key[k++] = facets_[id].vertices[m];
                    std::sort(key.begin(), key.end());
                    auto [it, inserted] = open_ridges.try_emplace(key, id, j);
                    if (!inserted) {
                        facets_[id].neighbors[j] = it->second.first;
                        facets_[it->second.first].neighbors[it->second.second] = id;
                        open_ridges.erase(it);
                    }
                }
            }
        }
        for (int fid : vis) facets_[fid].alive = false;
        return created;
    }

    HullResult run(bool lazy, double interior_tol) {
        HullResult result;
        if (!build_simplex()) return result;
        result.full_dimensional = true;

        using Entry = std::pair<double, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
        std::vector<int> stack;
        auto push = [&](int id) {
            if (lazy) heap.emplace(facets_[id].offset, id);
            else stack.push_back(id);
        };
        for (int i = 0; i <= D; ++i) push(i);

        const std::size_t max_steps = 4 * pts_.size() + 16;
        std::size_t steps = 0;
        while (lazy ? !heap.empty() : !stack.empty()) {
            int fid;
            if (lazy) {
                fid = heap.top().second;
                heap.pop();
            } else {
                fid = stack.back();
                stack.pop_back();
            }
            Facet& f = facets_[fid];
            if (!f.alive || f.confirmed) continue;
            const int s = support(f.normal);
            if (distance(f, pts_[s]) <= tol_) {
                f.confirmed = true;
                if (lazy) return finish(result, f.offset, interior_tol);
                continue;
            }
            if (++steps > max_steps) throw std::runtime_error("hull expansion failed to converge");
            for (int id : expand(fid, s)) push(id);
        }
        double margin = std::numeric_limits<double>::infinity();
        for (const Facet& f : facets_)
            if (f.alive) margin = std::min(margin, f.offset);
        return finish(result, margin, interior_tol);
    }

    HullResult finish(HullResult result, double margin, double interior_tol) const {
        std::vector<char> used(pts_.size(), 0);
        for (const Facet& f : facets_) {
            if (!f.alive) continue;
            ++result.facet_count;
            for (int v : f.vertices) used[v] = 1;
        }
        result.vertex_count = static_cast<std::size_t>(std::count(used.begin(), used.end(), 1));
        result.origin_interior = margin > interior_tol;
        result.margin = result.origin_interior ? margin : 0.0;
        return result;
    }

    std::span<const Point> pts_;
    std::vector<Facet> facets_;
    Point interior_ = Point::Zero();
    double scale_ = 0.0;
    double tol_ = 0.0;
    unsigned epoch_ = 0;
};

}  // namespace occgrasp::hull
