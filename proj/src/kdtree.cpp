#include "ddi/kdtree.hpp"

#include "ddi/phase_space.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ddi {

KdTree::KdTree(std::vector<double> coords, int dim, int leaf_size)
    : coords_(std::move(coords)), dim_(dim), leaf_size_(std::max(1, leaf_size)) {
    if (dim_ < 1 || coords_.size() % static_cast<std::size_t>(dim_) != 0) {
        throw ContractViolation("kd-tree coordinates do not match the dimension");
    }
    const int n = static_cast<int>(size());
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    if (n > 0) {
        nodes_.reserve(static_cast<std::size_t>(2 * (n / leaf_size_ + 1)));
        build(0, n);
    }
}

int KdTree::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end, -1, 0.0, -1, -1});
    if (end - begin <= leaf_size_) return id;

    int best_dim = 0;
    double best_spread = -1.0;
    for (int d = 0; d < dim_; ++d) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = begin; i < end; ++i) {
            const double v = point(static_cast<std::size_t>(order_[i]))[d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            best_dim = d;
        }
    }
    if (!(best_spread > 0.0)) return id;  // all points coincide; keep as a leaf

    const int mid = begin + (end - begin) / 2;
    auto less = [&](int a, int b) {
        const double va = point(static_cast<std::size_t>(a))[best_dim];
        const double vb = point(static_cast<std::size_t>(b))[best_dim];
        return va < vb || (va == vb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);
    const double split = point(static_cast<std::size_t>(order_[mid]))[best_dim];

    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].split_dim = best_dim;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

double KdTree::dist_sq(const double* q, std::size_t i) const {
    const double* p = point(i);
    double s = 0.0;
    for (int d = 0; d < dim_; ++d) {
        const double diff = q[d] - p[d];
        s += diff * diff;
    }
    return s;
}

void KdTree::search(int node_id, const double* q, Hit& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.split_dim < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const auto idx = static_cast<std::size_t>(order_[i]);
            const double d = dist_sq(q, idx);
            if (d < best.dist_sq || (d == best.dist_sq && idx < best.index)) best = {idx, d};
        }
        return;
    }
    // left subtree holds coordinates <= split, right subtree >= split
    const double diff = q[node.split_dim] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (diff * diff <= best.dist_sq) search(far, q, best);
}

KdTree::Hit KdTree::nearest(const double* query) const {
    if (empty()) throw ContractViolation("nearest-neighbour query on an empty point set");
    Hit best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    search(0, query, best);
    return best;
}

KdTree::Hit KdTree::nearest_scan(const double* query) const {
    if (empty()) throw ContractViolation("nearest-neighbour query on an empty point set");
    Hit best{0, dist_sq(query, 0)};
    for (std::size_t i = 1; i < size(); ++i) {
        const double d = dist_sq(query, i);
        if (d < best.dist_sq) best = {i, d};
    }
    return best;
}

}  // namespace ddi
