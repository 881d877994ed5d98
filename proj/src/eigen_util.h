/* Copyright 2026 The hatkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HATKIT_SRC_EIGEN_UTIL_H_
#define HATKIT_SRC_EIGEN_UTIL_H_

#include <Eigen/Dense>

#include "hatkit/tensor.h"

namespace hatkit::internal {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

inline MatrixMap mat(Tensor& t) { return MatrixMap(t.data(), t.rows(), t.cols()); }
inline ConstMatrixMap mat(const Tensor& t) { return ConstMatrixMap(t.data(), t.rows(), t.cols()); }

}  // namespace hatkit::internal

#endif  // HATKIT_SRC_EIGEN_UTIL_H_
