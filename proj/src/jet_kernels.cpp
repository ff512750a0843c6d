#include "jet_kernels.hpp"

#include <cmath>
#include <vector>

namespace nsh::detail {

void ordered_product(const Eigen::MatrixXd& weight, const JetBlock& input, JetBlock& out) {
  constexpr Eigen::Index kRows = 4;
  constexpr Eigen::Index kCols = 8;
  const Eigen::Index n_out = weight.rows();
  const Eigen::Index n_in = weight.cols();
  const Eigen::Index n_cols = input.cols();
  out.resize(n_out, n_cols);
  const double* a = input.data();  // row-major: a[k * n_cols + c]
  const double* w = weight.data();  // column-major: w[k * n_out + r]

  // Every output entry sums its n_in products in increasing k, whatever the tiling, so
  // results do not depend on batch size or column position.
  std::vector<double> panel(static_cast<std::size_t>(n_in * kCols));
  Eigen::Index c0 = 0;
  for (; c0 + kCols <= n_cols; c0 += kCols) {
    for (Eigen::Index k = 0; k < n_in; ++k)
      for (Eigen::Index c = 0; c < kCols; ++c) panel[static_cast<std::size_t>(k * kCols + c)] = a[k * n_cols + c0 + c];
    Eigen::Index r0 = 0;
    for (; r0 + kRows <= n_out; r0 += kRows) {
      double acc[kRows][kCols] = {};
      for (Eigen::Index k = 0; k < n_in; ++k) {
        const double* prow = panel.data() + k * kCols;
        const double* wk = w + k * n_out + r0;
        for (Eigen::Index r = 0; r < kRows; ++r)
          for (Eigen::Index c = 0; c < kCols; ++c) acc[r][c] += wk[r] * prow[c];
      }
      for (Eigen::Index r = 0; r < kRows; ++r)
        for (Eigen::Index c = 0; c < kCols; ++c) out(r0 + r, c0 + c) = acc[r][c];
    }
    for (; r0 < n_out; ++r0) {
      double acc[kCols] = {};
      for (Eigen::Index k = 0; k < n_in; ++k)
        for (Eigen::Index c = 0; c < kCols; ++c) acc[c] += w[k * n_out + r0] * panel[static_cast<std::size_t>(k * kCols + c)];
      for (Eigen::Index c = 0; c < kCols; ++c) out(r0, c0 + c) = acc[c];
    }
  }
  for (; c0 < n_cols; ++c0) {
    for (Eigen::Index r = 0; r < n_out; ++r) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < n_in; ++k) acc += w[k * n_out + r] * a[k * n_cols + c0];
      out(r, c0) = acc;
    }
  }
}

void activation_derivatives(const Activation& act, const Eigen::Ref<const JetBlock>& z,
                            Eigen::ArrayXXd* out, int count) {
  const Eigen::ArrayXXd za = z.array();
  if (act.kind == ActivationKind::sine) {
    const auto n = static_cast<std::size_t>(za.size());
    Eigen::ArrayXXd s(za.rows(), za.cols()), c;
    vector_sin(za.data(), s.data(), n);
    if (count > 1) {
      c.resize(za.rows(), za.cols());
      vector_cos(za.data(), c.data(), n);
    }
    if (count > 0) out[0] = s;
    if (count > 1) out[1] = c;
    if (count > 2) out[2] = -s;
    if (count > 3) out[3] = -c;
    return;
  }
  const double beta = act.param;
  const Eigen::ArrayXXd bz = beta * za;
  // sigma(bz) and log(1 + exp(bz)) in overflow-safe form.
  const Eigen::ArrayXXd e = (-bz.abs()).exp();
  const Eigen::ArrayXXd sig = (bz >= 0.0).select(1.0 / (1.0 + e), e / (1.0 + e));
  if (count > 0) out[0] = (bz.max(0.0) + e.log1p()) / beta;
  if (count > 1) out[1] = sig;
  if (count > 2) out[2] = beta * sig * (1.0 - sig);
  if (count > 3) out[3] = beta * beta * sig * (1.0 - sig) * (1.0 - 2.0 * sig);
}

}  // namespace nsh::detail
