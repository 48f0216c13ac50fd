/*
 * Copyright 2026 The Dropwatch Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DROPWATCH_COMMON_H_
#define DROPWATCH_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dropwatch {

// Raised when input data (cohort files, matrices, model files) is malformed
// or does not satisfy an operation's data requirements. Argument and
// configuration mistakes raise std::invalid_argument instead.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(size_t rows, size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("DenseMatrix: data size does not match shape");
    }
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> mutable_row(size_t r) {
    return {data_.data() + r * cols_, cols_};
  }

  void AppendRow(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
      throw std::invalid_argument("DenseMatrix::AppendRow: width mismatch");
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  // Rows at `indices`, in that order.
  DenseMatrix SelectRows(std::span<const size_t> indices) const {
    DenseMatrix out;
    out.cols_ = cols_;
    out.rows_ = indices.size();
    out.data_.reserve(indices.size() * cols_);
    for (size_t idx : indices) {
      auto r = row(idx);
      out.data_.insert(out.data_.end(), r.begin(), r.end());
    }
    return out;
  }

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace dropwatch

#endif  // DROPWATCH_COMMON_H_
