#include "ubmaud/partition.hpp"

#include "ubmaud/error.hpp"

#include <string>

namespace ubmaud {

PartitionVector::PartitionVector(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw InvalidPartition("partition must contain at least one community");
    offsets_.reserve(sizes_.size());
    for (std::size_t g = 0; g < sizes_.size(); ++g) {
        if (sizes_[g] <= 1) {
            throw InvalidPartition("community " + std::to_string(g + 1) + " has size " +
                                   std::to_string(sizes_[g]) + "; every L_g must exceed 1");
        }
        offsets_.push_back(total_);
        total_ += sizes_[g];
    }
    labels_.resize(static_cast<std::size_t>(total_));
    for (std::size_t g = 0; g < sizes_.size(); ++g)
        for (int k = 0; k < sizes_[g]; ++k)
            labels_[static_cast<std::size_t>(offsets_[g] + k)] = static_cast<int>(g);
}

int PartitionVector::community_of(int r) const {
    if (r < 0 || r >= total_) throw IndexOutOfRange("column " + std::to_string(r));
    return labels_[static_cast<std::size_t>(r)];
}

Eigen::VectorXd PartitionVector::L() const {
    Eigen::VectorXd l(G());
    for (int g = 0; g < G(); ++g) l(g) = sizes_[static_cast<std::size_t>(g)];
    return l;
}

} // namespace ubmaud
