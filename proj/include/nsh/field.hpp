#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nsh/sinenet.hpp"

namespace nsh {

/// Twice-differentiable scalar field on R^d with exact jets.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual int dim() const = 0;
  virtual Jet jet(const Vec& x) const = 0;
  /// Jets at every column of `xs`; fields skipped by `need` may be left empty.
  virtual std::vector<Jet> jets(const Points& xs, JetOrder need) const;
  virtual Eigen::VectorXd values(const Points& xs) const;
};

/// A trained network evaluated in its normalized coordinates.
class NetworkField final : public ScalarField {
 public:
  explicit NetworkField(const SineNetwork& net) : net_(net) {}
  int dim() const override { return net_.input_dim(); }
  Jet jet(const Vec& x) const override { return forward_jet(net_, x); }
  std::vector<Jet> jets(const Points& xs, JetOrder need) const override { return forward_batch(net_, xs, need); }
  Eigen::VectorXd values(const Points& xs) const override { return forward_values(net_, xs); }

 private:
  const SineNetwork& net_;
};

/// Field defined by a jet callback; handy for closed-form references.
class FunctionField final : public ScalarField {
 public:
  FunctionField(int dim, std::function<Jet(const Vec&)> fn) : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  Jet jet(const Vec& x) const override { return fn_(x); }

 private:
  int dim_;
  std::function<Jet(const Vec&)> fn_;
};

/// Signed distance to a sphere (d = 3) or circle (d = 2).
Jet sphere_jet(const Vec& x, const Vec& center, double radius);
/// Signed distance to a torus around the z axis through the origin.
Jet torus_jet(const Vec& x, double major, double minor);

/// Named closed-form fields: "circle" (2D, r = 0.5), "sphere" (r = 0.5),
/// "torus" (R = 0.5, r = 0.2), "quadratic" (sum of signed squares), "saddle"
/// (x^2 - y^2 [+ z^2]) and "sinsin" (sin x sin y, 2D).
std::unique_ptr<ScalarField> make_builtin_field(const std::string& name, int dim);
std::vector<std::string> builtin_field_names();

}  // namespace nsh
