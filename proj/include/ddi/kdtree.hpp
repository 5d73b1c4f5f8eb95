#pragma once

#include <cstddef>
#include <vector>

namespace ddi {

/// Static kd-tree over a flat point cloud (row-major, `dim` doubles per point) under the
/// Euclidean distance. Nearest-neighbour queries return exactly what a linear scan
/// returns, including ties, which resolve to the lowest point index.
class KdTree {
public:
    struct Hit {
        std::size_t index = 0;
        double dist_sq = 0.0;
    };

    KdTree() = default;
    KdTree(std::vector<double> coords, int dim, int leaf_size = 8);

    std::size_t size() const { return dim_ > 0 ? coords_.size() / static_cast<std::size_t>(dim_) : 0; }
    int dim() const { return dim_; }
    bool empty() const { return size() == 0; }

    Hit nearest(const double* query) const;
    Hit nearest_scan(const double* query) const;

    const double* point(std::size_t i) const { return coords_.data() + i * static_cast<std::size_t>(dim_); }

private:
    struct Node {
        int begin = 0;
        int end = 0;
        int split_dim = -1;  // -1 for leaves
        double split = 0.0;
        int left = -1;
        int right = -1;
    };

    int build(int begin, int end);
    void search(int node, const double* q, Hit& best) const;
    double dist_sq(const double* q, std::size_t i) const;

    std::vector<double> coords_;
    int dim_ = 0;
    int leaf_size_ = 8;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace ddi
