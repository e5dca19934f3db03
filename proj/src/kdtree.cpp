#include "occgrasp/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>

#include "occgrasp/errors.hpp"

namespace occgrasp {

namespace {

// (squared distance, index); lexicographic order implements the tie rule.
using Candidate = std::pair<double, std::size_t>;

struct KnnState {
    std::size_t k;
    std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top

    bool full() const { return heap.size() >= k; }
    double worst() const {
        return full() ? heap.top().first : std::numeric_limits<double>::infinity();
    }
    void offer(double d2, std::size_t idx) {
        if (!full()) {
            heap.emplace(d2, idx);
        } else if (Candidate{d2, idx} < heap.top()) {
            heap.pop();
            heap.emplace(d2, idx);
        }
    }
};

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / std::max<std::size_t>(leaf_size, 1) + 1);
        build(0, points_.size(), std::max<std::size_t>(leaf_size, 1));
    }
}

int KdTree::build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
    if (end - begin <= leaf_size) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid, leaf_size);
    const int right = build(mid, end, leaf_size);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k) const {
    if (k > points_.size())
        throw Error(ErrorCode::TooFewPoints, "knn: k=" + std::to_string(k) + " exceeds " +
                                                 std::to_string(points_.size()) + " points");
    if (k == 0) return {};

    KnnState state{k, {}};
    // Explicit stack of (node, lower bound on squared distance).
    std::vector<std::pair<int, double>> stack{{0, 0.0}};
    while (!stack.empty()) {
        auto [id, bound] = stack.back();
        stack.pop_back();
        if (bound > state.worst()) continue;  // equal bounds may still hold lower-index ties
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                state.offer((points_[idx] - query).squaredNorm(), idx);
            }
            continue;
        }
        const double diff = query[node.axis] - node.split;
        const int near = diff < 0 ? node.left : node.right;
        const int far = diff < 0 ? node.right : node.left;
        stack.emplace_back(far, std::max(bound, diff * diff));
        stack.emplace_back(near, bound);
    }

    std::vector<std::size_t> out(state.heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = state.heap.top().second;
        state.heap.pop();
    }
    return out;
}

std::size_t KdTree::nearest(const Vec3& query) const {
    if (points_.empty()) throw Error(ErrorCode::EmptyCloud, "nearest on empty tree");
    return knn(query, 1).front();
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& query, double radius) const {
    std::vector<std::size_t> out;
    if (points_.empty()) return out;
    const double r2 = radius * radius;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (node.axis < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i)
                if ((points_[order_[i]] - query).squaredNorm() <= r2) out.push_back(order_[i]);
            continue;
        }
        const double diff = query[node.axis] - node.split;
        if (diff < 0 || diff * diff <= r2) stack.push_back(node.left);
        if (diff >= 0 || diff * diff <= r2) stack.push_back(node.right);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace occgrasp
