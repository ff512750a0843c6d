#include "nsh/field.hpp"

#include <cmath>

#include "nsh/error.hpp"
#include "nsh/parallel.hpp"

namespace nsh {

std::vector<Jet> ScalarField::jets(const Points& xs, JetOrder) const {
  std::vector<Jet> out(static_cast<std::size_t>(xs.cols()));
  parallel_for(out.size(), [&](std::size_t i) { out[i] = jet(Vec(xs.col(static_cast<Eigen::Index>(i)))); });
  return out;
}

Eigen::VectorXd ScalarField::values(const Points& xs) const {
  const std::vector<Jet> js = jets(xs, JetOrder::value);
  Eigen::VectorXd v(xs.cols());
  for (Eigen::Index i = 0; i < xs.cols(); ++i) v[i] = js[static_cast<std::size_t>(i)].value;
  return v;
}

Jet sphere_jet(const Vec& x, const Vec& center, double radius) {
  const Vec r = x - center;
  const double rho = r.norm();
  const int d = static_cast<int>(x.size());
  Jet j{rho - radius, Vec::Zero(d), Mat::Zero(d, d)};
  if (rho > 0.0) {
    j.grad = r / rho;
    j.hess = (Mat::Identity(d, d) - j.grad * j.grad.transpose()) / rho;
  }
  return j;
}

Jet torus_jet(const Vec& x, double major, double minor) {
  if (x.size() != 3) throw Error(Errc::invalid_argument, "torus field is three-dimensional");
  // f = |q| - minor with q = (rho - major, z) and rho the distance to the z axis.
  const double rho = std::hypot(x[0], x[1]);
  const Eigen::Vector2d q(rho - major, x[2]);
  const double s = q.norm();
  Jet j{s - minor, Vec::Zero(3), Mat::Zero(3, 3)};
  if (s == 0.0 || rho == 0.0) return j;
  Eigen::Matrix<double, 2, 3> jq = Eigen::Matrix<double, 2, 3>::Zero();
  jq(0, 0) = x[0] / rho;
  jq(0, 1) = x[1] / rho;
  jq(1, 2) = 1.0;
  const Eigen::Vector2d qh = q / s;
  j.grad = jq.transpose() * qh;
  const Eigen::Matrix2d hs = (Eigen::Matrix2d::Identity() - qh * qh.transpose()) / s;
  Eigen::Matrix3d hrho = Eigen::Matrix3d::Zero();
  const Eigen::Vector2d rh(x[0] / rho, x[1] / rho);
  hrho.topLeftCorner<2, 2>() = (Eigen::Matrix2d::Identity() - rh * rh.transpose()) / rho;
  j.hess = jq.transpose() * hs * jq + qh[0] * hrho;
  return j;
}

namespace {

Jet quadratic_jet(const Vec& x, const Vec& signs) {
  const int d = static_cast<int>(x.size());
  Jet j{0.0, Vec::Zero(d), Mat::Zero(d, d)};
  for (int i = 0; i < d; ++i) {
    j.value += signs[i] * x[i] * x[i];
    j.grad[i] = 2.0 * signs[i] * x[i];
    j.hess(i, i) = 2.0 * signs[i];
  }
  return j;
}

}  // namespace

std::vector<std::string> builtin_field_names() { return {"circle", "sphere", "torus", "quadratic", "saddle", "sinsin"}; }

std::unique_ptr<ScalarField> make_builtin_field(const std::string& name, int dim) {
  auto need_dim = [&](int want) {
    if (dim != want)
      throw Error(Errc::invalid_argument, "builtin field '" + name + "' is " + std::to_string(want) + "D");
  };
  if (dim != 2 && dim != 3) throw Error(Errc::invalid_argument, "builtin fields are 2D or 3D");
  if (name == "circle" || name == "sphere") {
    need_dim(name == "circle" ? 2 : 3);
    return std::make_unique<FunctionField>(dim, [dim](const Vec& x) { return sphere_jet(x, Vec::Zero(dim), 0.5); });
  }
  if (name == "torus") {
    need_dim(3);
    return std::make_unique<FunctionField>(3, [](const Vec& x) { return torus_jet(x, 0.5, 0.2); });
  }
  if (name == "quadratic" || name == "saddle") {
    Vec signs = Vec::Ones(dim);
    if (name == "saddle") signs[1] = -1.0;
    return std::make_unique<FunctionField>(dim, [signs](const Vec& x) { return quadratic_jet(x, signs); });
  }
  if (name == "sinsin") {
    need_dim(2);
    return std::make_unique<FunctionField>(2, [](const Vec& x) {
      const double sx = std::sin(x[0]), cx = std::cos(x[0]), sy = std::sin(x[1]), cy = std::cos(x[1]);
      Jet j{sx * sy, Vec(2), Mat(2, 2)};
      j.grad << cx * sy, sx * cy;
      j.hess << -sx * sy, cx * cy, cx * cy, -sx * sy;
      return j;
    });
  }
  throw Error(Errc::invalid_argument, "unknown builtin field '" + name + "'");
}

}  // namespace nsh
