#include "nsh/graddiff.hpp"

#include <cmath>

#include "jet_kernels.hpp"
#include "nsh/error.hpp"
#include "nsh/parallel.hpp"

namespace nsh {

ParamGradient ParamGradient::zeros_like(const SineNetwork& net) {
  ParamGradient g;
  for (const Layer& layer : net.layers())
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  return g;
}

ParamGradient& ParamGradient::operator+=(const ParamGradient& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].weight += other.layers[l].weight;
    layers[l].bias += other.layers[l].bias;
  }
  return *this;
}

bool ParamGradient::all_finite() const {
  for (const Layer& layer : layers)
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

namespace {

Eigen::VectorXd flatten_layers(const std::vector<Layer>& layers) {
  Eigen::Index n = 0;
  for (const Layer& layer : layers) n += layer.weight.size() + layer.bias.size();
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  for (const Layer& layer : layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat[at++] = layer.weight(r, c);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat[at++] = layer.bias[r];
  }
  return flat;
}

}  // namespace

Eigen::VectorXd ParamGradient::flatten() const { return flatten_layers(layers); }

Eigen::VectorXd flatten_parameters(const SineNetwork& net) { return flatten_layers(net.layers()); }

void unflatten_parameters(SineNetwork& net, const Eigen::VectorXd& flat) {
  Eigen::Index at = 0;
  for (Layer& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[at++];
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = flat[at++];
  }
  if (at != flat.size()) throw Error(Errc::invalid_argument, "flat parameter vector has the wrong length");
}

// ---------------------------------------------------------------------------

double determinant(const Mat& h) {
  switch (h.rows()) {
    case 1: return h(0, 0);
    case 2: return h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
    case 3:
      return h(0, 0) * (h(1, 1) * h(2, 2) - h(1, 2) * h(2, 1)) -
             h(0, 1) * (h(1, 0) * h(2, 2) - h(1, 2) * h(2, 0)) +
             h(0, 2) * (h(1, 0) * h(2, 1) - h(1, 1) * h(2, 0));
    default: throw Error(Errc::invalid_argument, "determinant supports 1x1 to 3x3 matrices");
  }
}

std::pair<double, Mat> det_and_derivative(const Mat& h) {
  const Eigen::Index d = h.rows();
  Mat cof(d, d);
  switch (d) {
    case 1: cof(0, 0) = 1.0; break;
    case 2:
      cof << h(1, 1), -h(1, 0),
             -h(0, 1), h(0, 0);
      break;
    case 3:
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const int r0 = (i + 1) % 3, r1 = (i + 2) % 3;
          const int c0 = (j + 1) % 3, c1 = (j + 2) % 3;
          // Cyclic index order folds the (-1)^(i+j) sign into the minor.
          cof(i, j) = h(r0, c0) * h(r1, c1) - h(r0, c1) * h(r1, c0);
        }
      }
      break;
    default: throw Error(Errc::invalid_argument, "determinant supports 1x1 to 3x3 matrices");
  }
  return {determinant(h), cof};
}

// ---------------------------------------------------------------------------

void backpropagate(const SineNetwork& net, const JetTape& tape, const JetBlock& out_adjoint,
                   ParamGradient& grad) {
  const auto& layers = net.layers();
  const std::size_t L = layers.size() - 1;
  const Eigen::Index B = tape.batch;
  const int d = tape.dim;
  const bool has_grad = tape.order != JetOrder::value;
  const bool has_hess = tape.order == JetOrder::hessian;
  if (tape.inputs.size() != L + 1 || tape.preacts.size() != L)
    throw Error(Errc::invalid_argument, "tape was recorded without intermediates");

  grad.layers[L].weight.noalias() += out_adjoint * tape.inputs[L].transpose();
  grad.layers[L].bias[0] += out_adjoint.leftCols(B).sum();
  JetBlock a_bar = layers[L].weight.transpose() * out_adjoint;

  Eigen::ArrayXXd s[4];
  for (std::size_t l = L; l-- > 0;) {
    const JetBlock& z = tape.preacts[l];
    detail::activation_derivatives(net.arch().activation, z.leftCols(B), s, has_hess ? 4 : (has_grad ? 3 : 2));
    JetBlock z_bar(z.rows(), z.cols());
    auto zc = [&](Eigen::Index c) { return z.middleCols(c * B, B).array(); };
    auto ac = [&](Eigen::Index c) { return a_bar.middleCols(c * B, B).array(); };
    auto out = [&](Eigen::Index c) { return z_bar.middleCols(c * B, B).array(); };

    out(0) = s[1] * ac(0);
    if (has_grad) {
      for (int j = 0; j < d; ++j) {
        out(1 + j) = s[1] * ac(1 + j);
        out(0) += s[2] * zc(1 + j) * ac(1 + j);
      }
    }
    if (has_hess) {
      for (int j = 0; j < d; ++j) {
        for (int k = j; k < d; ++k) {
          const int h = hessian_channel(j, k, d);
          out(h) = s[1] * ac(h);
          out(0) += s[2] * zc(h) * ac(h) + s[3] * zc(1 + j) * zc(1 + k) * ac(h);
          out(1 + j) += s[2] * zc(1 + k) * ac(h);
          out(1 + k) += s[2] * zc(1 + j) * ac(h);
        }
      }
    }
    z_bar *= net.layer_scale(l);
    grad.layers[l].weight.noalias() += z_bar * tape.inputs[l].transpose();
    grad.layers[l].bias += z_bar.leftCols(B).rowwise().sum();
    if (l > 0) a_bar = layers[l].weight.transpose() * z_bar;
  }
}

namespace {

enum class SetKind { surface, far, near };

struct Task {
  SetKind set;
  Eigen::Index begin;
  Eigen::Index count;
};

struct TaskResult {
  ParamGradient grad;
  TermValues sums;
  bool adjoint_finite[5] = {true, true, true, true, true};
};

bool smooth_kind(Regularizer r) {
  return r == Regularizer::dirichlet || r == Regularizer::hessian_l2 || r == Regularizer::hessian_l1 ||
         r == Regularizer::laplacian;
}

JetOrder max_order(JetOrder a, JetOrder b) { return static_cast<int>(a) > static_cast<int>(b) ? a : b; }

struct Plan {
  JetOrder surface_order = JetOrder::value;
  JetOrder far_order = JetOrder::value;
  bool use_far = false;
  bool use_near = false;
  double n_surface = 0, n_far = 0, n_near = 0;
};

Plan make_plan(const SampleBatch& batch, const LossConfig& c) {
  c.validate();
  Plan p;
  const bool smooth = smooth_kind(c.regularizer);
  const JetOrder smooth_order = c.regularizer == Regularizer::dirichlet ? JetOrder::gradient : JetOrder::hessian;
  p.surface_order = JetOrder::gradient;  // every Eikonal mode uses gradients on P
  if (smooth) p.surface_order = max_order(p.surface_order, smooth_order);
  p.use_far = c.lambda_non_manifold > 0.0 || c.eikonal_mode == EikonalMode::exact_on_all || smooth;
  if (c.eikonal_mode == EikonalMode::exact_on_all) p.far_order = JetOrder::gradient;
  if (smooth) p.far_order = max_order(p.far_order, smooth_order);
  p.use_near = c.regularizer == Regularizer::singular_hessian;

  p.n_surface = static_cast<double>(batch.surface_points.cols());
  p.n_far = p.use_far ? static_cast<double>(batch.far_points.cols()) : 0.0;
  p.n_near = p.use_near ? static_cast<double>(batch.near_points.cols()) : 0.0;
  if (p.n_surface == 0) throw Error(Errc::empty_input, "batch has no surface points");
  if (p.use_far && p.n_far == 0) throw Error(Errc::empty_input, "batch has no far-field points");
  if (p.use_near && p.n_near == 0) throw Error(Errc::empty_input, "batch has no near-surface points");
  if (c.neumann && (!batch.surface_normals || batch.surface_normals->cols() != batch.surface_points.cols()))
    throw Error(Errc::invalid_argument, "Neumann term requires normals on the surface points");
  return p;
}

const char* kTermNames[5] = {"manifold", "non-manifold", "eikonal", "regularizer", "neumann"};

double& term_ref(TermValues& t, int i) {
  switch (i) {
    case 0: return t.manifold;
    case 1: return t.non_manifold;
    case 2: return t.eikonal;
    case 3: return t.regularizer;
    default: return t.neumann;
  }
}

// Runs the per-sample kernels of one set. `adj` may be null (forward-only evaluation);
// `flags` records per-term finiteness of the adjoint contributions.
void apply_kernels(SetKind set, const Jet& jet, Eigen::Index index, const SampleBatch& batch,
                   const LossConfig& c, const Plan& p, double tau_value, TermValues& sums,
                   JetAdjoint* adj, bool* flags) {
  const bool smooth = smooth_kind(c.regularizer);
  const double n_union = p.n_surface + p.n_far;
  auto run = [&](int term, double weight, auto&& kernel) {
    if (!adj) {
      term_ref(sums, term) += kernel(nullptr, 0.0);
      return;
    }
    JetAdjoint local = JetAdjoint::zero(jet.grad.size() ? static_cast<int>(jet.grad.size())
                                                        : static_cast<int>(batch.surface_points.rows()));
    term_ref(sums, term) += kernel(&local, weight);
    if (!std::isfinite(local.value) || !local.grad.allFinite() || !local.hess.allFinite()) flags[term] = false;
    adj->value += local.value;
    adj->grad += local.grad;
    adj->hess += local.hess;
  };

  switch (set) {
    case SetKind::surface: {
      run(0, c.lambda_manifold / p.n_surface, [&](JetAdjoint* a, double w) { return sample::manifold(jet, a, w); });
      const double eik_n = c.eikonal_mode == EikonalMode::exact_on_all ? n_union : p.n_surface;
      run(2, c.lambda_eikonal / eik_n,
          [&](JetAdjoint* a, double w) { return sample::eikonal(jet, c.eikonal_mode, c.sigma_min, a, w); });
      if (smooth) {
        run(3, c.lambda_regularizer * tau_value / n_union, [&](JetAdjoint* a, double w) {
          return sample::smooth_energy(jet, c.regularizer, c.laplacian_squared, a, w);
        });
      }
      if (c.neumann) {
        const Vec n = batch.surface_normals->col(index);
        run(4, c.lambda_neumann / p.n_surface, [&](JetAdjoint* a, double w) { return sample::neumann(jet, n, a, w); });
      }
      break;
    }
    case SetKind::far: {
      run(1, c.lambda_non_manifold / p.n_far,
          [&](JetAdjoint* a, double w) { return sample::non_manifold(jet, c.alpha, a, w); });
      if (c.eikonal_mode == EikonalMode::exact_on_all) {
        run(2, c.lambda_eikonal / n_union,
            [&](JetAdjoint* a, double w) { return sample::eikonal(jet, c.eikonal_mode, c.sigma_min, a, w); });
      }
      if (smooth) {
        run(3, c.lambda_regularizer * tau_value / n_union, [&](JetAdjoint* a, double w) {
          return sample::smooth_energy(jet, c.regularizer, c.laplacian_squared, a, w);
        });
      }
      break;
    }
    case SetKind::near:
      run(3, c.lambda_regularizer * tau_value / p.n_near,
          [&](JetAdjoint* a, double w) { return sample::singular_hessian(jet, a, w); });
      break;
  }
}

TermValues means_from_sums(const TermValues& sums, const LossConfig& c, const Plan& p) {
  const double n_union = p.n_surface + p.n_far;
  TermValues t;
  t.manifold = sums.manifold / p.n_surface;
  t.non_manifold = p.use_far ? sums.non_manifold / p.n_far : 0.0;
  t.eikonal = sums.eikonal / (c.eikonal_mode == EikonalMode::exact_on_all ? n_union : p.n_surface);
  if (c.regularizer == Regularizer::singular_hessian) {
    t.regularizer = sums.regularizer / p.n_near;
  } else if (smooth_kind(c.regularizer)) {
    t.regularizer = sums.regularizer / n_union;
  }
  t.neumann = c.neumann ? sums.neumann / p.n_surface : 0.0;
  return t;
}

void check_terms_finite(const TermValues& t) {
  TermValues copy = t;
  for (int i = 0; i < 5; ++i)
    if (!std::isfinite(term_ref(copy, i)))
      throw Error(Errc::non_finite, std::string("non-finite ") + kTermNames[i] + " loss");
}

}  // namespace

TermValues evaluate_terms(const SineNetwork& net, const SampleBatch& batch, const LossConfig& c) {
  const Plan p = make_plan(batch, c);
  TermValues t;
  const auto surface = forward_batch(net, batch.surface_points, p.surface_order);
  t.manifold = manifold_loss(surface);
  const bool smooth = smooth_kind(c.regularizer);
  std::vector<Jet> far;
  if (p.use_far) far = forward_batch(net, batch.far_points, p.far_order);
  if (p.use_far) t.non_manifold = non_manifold_loss(far, c.alpha);

  std::vector<Jet> both;
  if (c.eikonal_mode == EikonalMode::exact_on_all || smooth) {
    both = surface;
    both.insert(both.end(), far.begin(), far.end());
  }
  t.eikonal = c.eikonal_mode == EikonalMode::exact_on_all ? eikonal_loss(both, c.eikonal_mode, c.sigma_min)
                                                          : eikonal_loss(surface, c.eikonal_mode, c.sigma_min);
  if (c.regularizer == Regularizer::singular_hessian) {
    t.regularizer = singular_hessian_loss(forward_batch(net, batch.near_points, JetOrder::hessian));
  } else if (smooth) {
    t.regularizer = smooth_energy_loss(both, c.regularizer, c.laplacian_squared);
  }
  if (c.neumann) t.neumann = neumann_loss(surface, batch.surface_normals ? &*batch.surface_normals : nullptr);
  return t;
}

LossResult loss_and_grad(const SineNetwork& net, const SampleBatch& batch, const LossConfig& c, double tau_value) {
  if (!(tau_value > 0.0 && tau_value <= 1.0)) throw Error(Errc::invalid_argument, "tau must lie in (0, 1]");
  const Plan p = make_plan(batch, c);

  std::vector<Task> tasks;
  auto add_tasks = [&](SetKind set, Eigen::Index n) {
    for (Eigen::Index begin = 0; begin < n; begin += kChunkSize) tasks.push_back({set, begin, std::min(kChunkSize, n - begin)});
  };
  add_tasks(SetKind::surface, batch.surface_points.cols());
  if (p.use_far) add_tasks(SetKind::far, batch.far_points.cols());
  if (p.use_near) add_tasks(SetKind::near, batch.near_points.cols());

  std::vector<TaskResult> results(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t t) {
    const Task& task = tasks[t];
    const Points* pts = &batch.surface_points;
    JetOrder order = p.surface_order;
    if (task.set == SetKind::far) {
      pts = &batch.far_points;
      order = p.far_order;
    } else if (task.set == SetKind::near) {
      pts = &batch.near_points;
      order = JetOrder::hessian;
    }
    const JetTape tape = forward_tape(net, pts->middleCols(task.begin, task.count), order, true);
    const int d = tape.dim;
    const Eigen::Index B = tape.batch;
    JetBlock y_bar = JetBlock::Zero(1, tape.channels() * B);
    TaskResult& r = results[t];
    for (Eigen::Index i = 0; i < B; ++i) {
      const Jet jet = tape.jet(i);
      JetAdjoint adj = JetAdjoint::zero(d);
      apply_kernels(task.set, jet, task.begin + i, batch, c, p, tau_value, r.sums, &adj, r.adjoint_finite);
      y_bar(0, i) = adj.value;
      if (order != JetOrder::value)
        for (int j = 0; j < d; ++j) y_bar(0, (1 + j) * B + i) = adj.grad[j];
      if (order == JetOrder::hessian) {
        for (int j = 0; j < d; ++j)
          for (int k = j; k < d; ++k)
            y_bar(0, hessian_channel(j, k, d) * B + i) = j == k ? adj.hess(j, j) : adj.hess(j, k) + adj.hess(k, j);
      }
    }
    r.grad = ParamGradient::zeros_like(net);
    backpropagate(net, tape, y_bar, r.grad);
  });

  LossResult out;
  out.grad = ParamGradient::zeros_like(net);
  TermValues sums;
  bool finite[5] = {true, true, true, true, true};
  for (const TaskResult& r : results) {
    out.grad += r.grad;
    sums.manifold += r.sums.manifold;
    sums.non_manifold += r.sums.non_manifold;
    sums.eikonal += r.sums.eikonal;
    sums.regularizer += r.sums.regularizer;
    sums.neumann += r.sums.neumann;
    for (int i = 0; i < 5; ++i) finite[i] = finite[i] && r.adjoint_finite[i];
  }
  out.terms = means_from_sums(sums, c, p);
  check_terms_finite(out.terms);
  out.total = total_loss(out.terms, c, tau_value);
  if (!std::isfinite(out.total)) throw Error(Errc::non_finite, "non-finite total loss");
  if (!out.grad.all_finite()) {
    std::string culprit = "unknown term";
    for (int i = 0; i < 5; ++i)
      if (!finite[i]) {
        culprit = kTermNames[i];
        break;
      }
    throw Error(Errc::non_finite, "non-finite gradient from the " + culprit + " loss");
  }
  return out;
}

}  // namespace nsh
