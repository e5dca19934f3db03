#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "occgrasp/geom.hpp"

namespace occgrasp {

/// Static KD-tree over a point set. Results match a brute-force scan exactly:
/// neighbours are ordered by (squared distance, index).
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 12);

    std::size_t size() const noexcept { return points_.size(); }

    /// Throws TooFewPoints if k exceeds the number of points.
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const;

    /// Index of the closest point. Throws EmptyCloud on an empty tree.
    std::size_t nearest(const Vec3& query) const;

    /// All indices within `radius` (inclusive), ascending index order.
    std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;

private:
    struct Node {
        int axis = -1;  // -1 marks a leaf
        double split = 0.0;
        std::size_t begin = 0, end = 0;
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end, std::size_t leaf_size);

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace occgrasp
