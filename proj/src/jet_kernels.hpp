#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "nsh/sinenet.hpp"

namespace nsh::detail {

/// out = W * A with each entry summed over k in ascending order, independent of the
/// number of columns, so every batch shape produces bitwise-identical values.
void ordered_product(const Eigen::MatrixXd& weight, const JetBlock& input, JetBlock& out);

/// Elementwise sine and cosine; results do not depend on n or on an element's position.
void vector_sin(const double* x, double* y, std::size_t n);
void vector_cos(const double* x, double* y, std::size_t n);

/// Activation and its first three derivatives evaluated elementwise on `z`.
/// Only the first `count` entries of `out` are written.
void activation_derivatives(const Activation& act, const Eigen::Ref<const JetBlock>& z,
                            Eigen::ArrayXXd* out, int count);

}  // namespace nsh::detail
