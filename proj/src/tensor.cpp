#include "gfmr/tensor.hpp"

#include <numeric>
#include <sstream>

namespace gfmr {

TensorShape::TensorShape(std::vector<Index> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) {
        throw ShapeError("tensor shape needs at least one dimension");
    }
    size_ = 1;
    for (Index r : dims_) {
        if (r < 1) {
            throw ShapeError("tensor dimensions must be positive");
        }
        size_ *= r;
    }
}

Index TensorShape::stride(Index axis) const {
    Index s = 1;
    for (Index k = 0; k < axis; ++k) s *= dims_[k];
    return s;
}

Index TensorShape::linear_index(std::span<const Index> idx) const {
    if (static_cast<Index>(idx.size()) != order()) {
        throw ShapeError("index arity does not match tensor order");
    }
    Index j = 0;
    Index s = 1;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 0 || idx[k] >= dims_[k]) {
            throw ShapeError("tensor index out of range");
        }
        j += idx[k] * s;
        s *= dims_[k];
    }
    return j;
}

std::vector<Index> TensorShape::multi_index(Index j) const {
    std::vector<Index> idx(dims_.size());
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        idx[k] = j % dims_[k];
        j /= dims_[k];
    }
    return idx;
}

NdArray::NdArray(std::vector<Index> dims, double fill) : dims_(std::move(dims)) {
    Index total = std::accumulate(dims_.begin(), dims_.end(), Index{1}, std::multiplies<>());
    data_.assign(static_cast<std::size_t>(total), fill);
}

NdArray::NdArray(std::vector<Index> dims, std::vector<double> row_major_data)
    : dims_(std::move(dims)), data_(std::move(row_major_data)) {
    Index total = std::accumulate(dims_.begin(), dims_.end(), Index{1}, std::multiplies<>());
    if (total != static_cast<Index>(data_.size())) {
        throw ShapeError("array data length does not match its dimensions");
    }
}

std::size_t NdArray::offset(std::span<const Index> idx) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        off = off * static_cast<std::size_t>(dims_[k]) + static_cast<std::size_t>(idx[k]);
    }
    return off;
}

Vector vectorize(const NdArray& tensor, const TensorShape& shape) {
    if (tensor.dims() != shape.dims()) {
        throw ShapeError("tensor dimensions do not match shape");
    }
    Vector v(shape.size());
    for (Index j = 0; j < shape.size(); ++j) {
        v[j] = tensor.at(shape.multi_index(j));
    }
    return v;
}

NdArray matricize(const Vector& v, const TensorShape& shape) {
    if (v.size() != shape.size()) {
        std::ostringstream os;
        os << "vector of length " << v.size() << " cannot be reshaped to " << shape.size() << " voxels";
        throw ShapeError(os.str());
    }
    NdArray out(shape.dims());
    for (Index j = 0; j < shape.size(); ++j) {
        out.at(shape.multi_index(j)) = v[j];
    }
    return out;
}

}  // namespace gfmr
