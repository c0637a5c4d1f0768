#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace driftbench {

// Sparse bag-of-words counts over a fixed vocabulary of size `dimension`.
// Entries are (index, count) pairs sorted by index; counts are positive.
struct BowVector {
    int dimension = 0;
    std::vector<std::pair<int, double>> counts;

    double total() const {
        double t = 0.0;
        for (const auto& [i, c] : counts) t += c;
        return t;
    }

    bool empty() const { return counts.empty(); }

    Eigen::VectorXd to_dense() const {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension);
        for (const auto& [i, c] : counts) v(i) = c;
        return v;
    }
};

}  // namespace driftbench
