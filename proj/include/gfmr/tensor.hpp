#pragma once

#include "gfmr/types.hpp"

#include <span>
#include <vector>

namespace gfmr {

// Dimensions (r_1, ..., r_m) of an outcome tensor. M is the voxel count.
class TensorShape {
public:
    TensorShape() = default;
    explicit TensorShape(std::vector<Index> dims);

    const std::vector<Index>& dims() const { return dims_; }
    Index order() const { return static_cast<Index>(dims_.size()); }
    Index size() const { return size_; }

    // Position of entry (i_1, ..., i_m) in vec(); first index varies fastest.
    // 0-based: j = sum_k i_k * prod_{k' < k} r_{k'}.
    Index linear_index(std::span<const Index> idx) const;
    std::vector<Index> multi_index(Index j) const;
    // prod_{k' < k} r_{k'}
    Index stride(Index axis) const;

    bool operator==(const TensorShape&) const = default;

private:
    std::vector<Index> dims_;
    Index size_ = 0;
};

// Dense m-dimensional array in row-major (C) order, the layout the
// outcome arrays arrive in before vectorization.
class NdArray {
public:
    NdArray() = default;
    explicit NdArray(std::vector<Index> dims, double fill = 0.0);
    NdArray(std::vector<Index> dims, std::vector<double> row_major_data);

    const std::vector<Index>& dims() const { return dims_; }
    Index size() const { return static_cast<Index>(data_.size()); }

    double& at(std::span<const Index> idx) { return data_[offset(idx)]; }
    double at(std::span<const Index> idx) const { return data_[offset(idx)]; }
    double& operator()(std::initializer_list<Index> idx) { return at({idx.begin(), idx.size()}); }
    double operator()(std::initializer_list<Index> idx) const { return at({idx.begin(), idx.size()}); }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const NdArray&) const = default;

private:
    std::size_t offset(std::span<const Index> idx) const;

    std::vector<Index> dims_;
    std::vector<double> data_;
};

Vector vectorize(const NdArray& tensor, const TensorShape& shape);
NdArray matricize(const Vector& v, const TensorShape& shape);

}  // namespace gfmr
