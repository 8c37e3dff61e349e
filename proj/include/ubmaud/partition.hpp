#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace ubmaud {

/// Community sizes (L_1, ..., L_G) defining the block layout of an R x R
/// uniform-block matrix. Every L_g is strictly greater than one.
class PartitionVector {
public:
    /// Throws InvalidPartition when empty or when some L_g <= 1.
    explicit PartitionVector(std::vector<int> sizes);

    int G() const noexcept { return static_cast<int>(sizes_.size()); }
    int R() const noexcept { return total_; }

    int size(int g) const { return sizes_[static_cast<std::size_t>(g)]; }
    int offset(int g) const { return offsets_[static_cast<std::size_t>(g)]; }
    const std::vector<int>& sizes() const noexcept { return sizes_; }
    const std::vector<int>& offsets() const noexcept { return offsets_; }

    /// Community index of outcome column r (0-based).
    int community_of(int r) const;

    /// Per-column community labels, length R.
    const std::vector<int>& labels() const noexcept { return labels_; }

    /// L = diag(L_1, ..., L_G), as a vector.
    Eigen::VectorXd L() const;

    /// Number of dependence parameters, G(G+1)/2.
    int n_params() const noexcept { return G() * (G() + 1) / 2; }

    friend bool operator==(const PartitionVector& a, const PartitionVector& b) {
        return a.sizes_ == b.sizes_;
    }

private:
    std::vector<int> sizes_;
    std::vector<int> offsets_;
    std::vector<int> labels_;
    int total_ = 0;
};

} // namespace ubmaud
