#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sramage/error.hpp"

namespace sramage {

// Dense row-major matrix of doubles. Feature matrices are small
// (rows x 56), so no linear-algebra library is pulled in for them.
class Matrix {
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(size_t rows, size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows * cols)
            throw InvalidArgumentError("Matrix: data size does not match dimensions");
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }

    double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
    double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    // New matrix holding the given subset of rows, in the given order.
    Matrix take_rows(std::span<const size_t> indices) const {
        Matrix out(indices.size(), cols_);
        for (size_t i = 0; i < indices.size(); ++i) {
            auto src = row(indices[i]);
            auto dst = out.row(i);
            for (size_t c = 0; c < cols_; ++c) dst[c] = src[c];
        }
        return out;
    }

    // New matrix holding columns [0, ncols) of every row.
    Matrix take_prefix_columns(size_t ncols) const {
        if (ncols > cols_) throw InvalidArgumentError("take_prefix_columns: ncols out of range");
        Matrix out(rows_, ncols);
        for (size_t r = 0; r < rows_; ++r)
            for (size_t c = 0; c < ncols; ++c) out.at(r, c) = at(r, c);
        return out;
    }

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<double> data_;
};

}
