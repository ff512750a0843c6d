#include "nsh/sinenet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "binary_io.hpp"
#include "jet_kernels.hpp"
#include "nsh/error.hpp"
#include "nsh/parallel.hpp"

namespace nsh {

namespace {

constexpr char kModelMagic[4] = {'N', 'S', 'H', '1'};

int sym_index(int j, int k, int dim) {
  if (j > k) std::swap(j, k);
  return j * dim - j * (j - 1) / 2 + (k - j);
}

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill order keeps the draw sequence independent of Eigen's storage.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

void check_architecture(const Architecture& arch) {
  if (arch.input_dim != 2 && arch.input_dim != 3)
    throw Error(Errc::invalid_argument, "input dimension must be 2 or 3");
  if (arch.hidden_layers < 1) throw Error(Errc::invalid_argument, "need at least one hidden layer");
  if (arch.width < 1) throw Error(Errc::invalid_argument, "layer width must be positive");
  if (!(arch.activation.param > 0.0) || !std::isfinite(arch.activation.param))
    throw Error(Errc::invalid_argument, "activation parameter (omega_0 / beta) must be positive");
}

SineNetwork::SineNetwork(Architecture arch, std::vector<Layer> layers, NormalizationTransform transform)
    : arch_(arch), layers_(std::move(layers)), transform_(std::move(transform)) {
  check_architecture(arch_);
  if (layers_.size() != static_cast<std::size_t>(arch_.hidden_layers) + 1)
    throw Error(Errc::invalid_argument, "layer count does not match architecture");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Eigen::Index in = l == 0 ? arch_.input_dim : arch_.width;
    const Eigen::Index out = l + 1 == layers_.size() ? 1 : arch_.width;
    if (layers_[l].weight.rows() != out || layers_[l].weight.cols() != in || layers_[l].bias.size() != out)
      throw Error(Errc::invalid_argument, "layer " + std::to_string(l) + " has inconsistent shape");
    if (!layers_[l].weight.allFinite() || !layers_[l].bias.allFinite())
      throw Error(Errc::non_finite, "layer " + std::to_string(l) + " has non-finite parameters");
  }
  set_transform(transform_);
}

void SineNetwork::set_transform(NormalizationTransform t) {
  if (t.dim() != arch_.input_dim || !(t.scale > 0.0))
    throw Error(Errc::invalid_argument, "normalization transform does not fit the network");
  transform_ = std::move(t);
}

double SineNetwork::layer_scale(std::size_t l) const {
  if (l + 1 == layers_.size() || arch_.activation.kind != ActivationKind::sine) return 1.0;
  return arch_.activation.param;
}

std::size_t SineNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

SineNetwork SineNetwork::init(const Architecture& arch, std::uint64_t seed) {
  check_architecture(arch);
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  const bool sine = arch.activation.kind == ActivationKind::sine;
  for (int l = 0; l <= arch.hidden_layers; ++l) {
    const Eigen::Index in = l == 0 ? arch.input_dim : arch.width;
    const Eigen::Index out = l == arch.hidden_layers ? 1 : arch.width;
    const double fan_in = static_cast<double>(in);
    double bound = std::sqrt(6.0 / fan_in);
    if (sine) bound = l == 0 ? 1.0 / fan_in : bound / arch.activation.param;
    Layer layer;
    layer.weight = uniform_matrix(out, in, bound, rng);
    layer.bias = Eigen::VectorXd::Zero(out);
    layers.push_back(std::move(layer));
  }
  return SineNetwork(arch, std::move(layers), NormalizationTransform::identity(arch.input_dim));
}

int channel_count(JetOrder order, int dim) {
  switch (order) {
    case JetOrder::value: return 1;
    case JetOrder::gradient: return 1 + dim;
    case JetOrder::hessian: return 1 + dim + dim * (dim + 1) / 2;
  }
  return 1;
}

int hessian_channel(int j, int k, int dim) { return 1 + dim + sym_index(j, k, dim); }

Jet JetTape::jet(Eigen::Index point) const {
  Jet out;
  out.value = output(0, point);
  if (order != JetOrder::value) {
    out.grad.resize(dim);
    for (int j = 0; j < dim; ++j) out.grad[j] = output(0, (1 + j) * batch + point);
  }
  if (order == JetOrder::hessian) {
    out.hess.resize(dim, dim);
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k) out.hess(j, k) = output(0, hessian_channel(j, k, dim) * batch + point);
  }
  return out;
}

JetTape forward_tape(const SineNetwork& net, const Eigen::Ref<const Points>& xs, JetOrder order,
                     bool keep_intermediates) {
  const int d = net.input_dim();
  if (xs.rows() != d) throw Error(Errc::invalid_argument, "input dimension does not match network");
  if (!xs.allFinite()) throw Error(Errc::non_finite, "network input is not finite");

  JetTape tape;
  tape.order = order;
  tape.dim = d;
  tape.batch = xs.cols();
  const Eigen::Index B = tape.batch;
  const int C = tape.channels();
  const int n_grad = order == JetOrder::value ? 0 : d;
  const bool hess = order == JetOrder::hessian;

  JetBlock a = JetBlock::Zero(d, C * B);
  a.leftCols(B) = xs;
  for (int j = 0; j < n_grad; ++j) a.row(j).segment((1 + j) * B, B).setOnes();

  const auto& layers = net.layers();
  const std::size_t L = layers.size() - 1;
  Eigen::ArrayXXd s[3];
  JetBlock z;
  for (std::size_t l = 0; l < L; ++l) {
    detail::ordered_product(layers[l].weight, a, z);
    z.leftCols(B).colwise() += layers[l].bias;
    z *= net.layer_scale(l);

    detail::activation_derivatives(net.arch().activation, z.leftCols(B), s, hess ? 3 : (n_grad ? 2 : 1));
    JetBlock next(z.rows(), z.cols());
    next.leftCols(B) = s[0].matrix();
    for (int j = 0; j < n_grad; ++j)
      next.middleCols((1 + j) * B, B) = (s[1] * z.middleCols((1 + j) * B, B).array()).matrix();
    if (hess) {
      for (int j = 0; j < d; ++j) {
        for (int k = j; k < d; ++k) {
          const Eigen::Index h = hessian_channel(j, k, d) * B;
          next.middleCols(h, B) =
              (s[1] * z.middleCols(h, B).array() +
               s[2] * z.middleCols((1 + j) * B, B).array() * z.middleCols((1 + k) * B, B).array())
                  .matrix();
        }
      }
    }
    if (keep_intermediates) {
      tape.inputs.push_back(std::move(a));
      tape.preacts.push_back(std::move(z));
    }
    a = std::move(next);
  }
  detail::ordered_product(layers[L].weight, a, tape.output);
  tape.output.leftCols(B).array() += layers[L].bias[0];
  if (keep_intermediates) tape.inputs.push_back(std::move(a));
  return tape;
}

Jet forward_jet(const SineNetwork& net, const Vec& x) {
  Points xs = Eigen::VectorXd(x);
  return forward_tape(net, xs, JetOrder::hessian, false).jet(0);
}

std::vector<Jet> forward_batch(const SineNetwork& net, const Points& xs, JetOrder need) {
  std::vector<Jet> out(static_cast<std::size_t>(xs.cols()));
  const auto n_chunks = static_cast<std::size_t>((xs.cols() + kChunkSize - 1) / kChunkSize);
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunkSize;
    const Eigen::Index count = std::min(kChunkSize, xs.cols() - begin);
    JetTape tape = forward_tape(net, xs.middleCols(begin, count), need, false);
    for (Eigen::Index i = 0; i < count; ++i) out[static_cast<std::size_t>(begin + i)] = tape.jet(i);
  });
  return out;
}

Eigen::VectorXd forward_values(const SineNetwork& net, const Points& xs) {
  Eigen::VectorXd out(xs.cols());
  const auto n_chunks = static_cast<std::size_t>((xs.cols() + kChunkSize - 1) / kChunkSize);
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunkSize;
    const Eigen::Index count = std::min(kChunkSize, xs.cols() - begin);
    JetTape tape = forward_tape(net, xs.middleCols(begin, count), JetOrder::value, false);
    out.segment(begin, count) = tape.output.row(0).transpose();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_model(const SineNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
  const Architecture& arch = net.arch();
  out.write(kModelMagic, 4);
  detail::write_le(out, kModelVersion);
  detail::write_le(out, static_cast<std::uint32_t>(arch.input_dim));
  detail::write_le(out, static_cast<std::uint32_t>(arch.hidden_layers));
  detail::write_le(out, static_cast<std::uint32_t>(arch.width));
  detail::write_le(out, static_cast<std::uint32_t>(arch.activation.kind));
  detail::write_le(out, arch.activation.param);
  for (Eigen::Index a = 0; a < net.transform().center.size(); ++a) detail::write_le(out, net.transform().center[a]);
  detail::write_le(out, net.transform().scale);
  for (const Layer& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) detail::write_le(out, layer.weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) detail::write_le(out, layer.bias[r]);
  }
  out.flush();
  if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

SineNetwork load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open model '" + path.string() + "'");
  auto truncated = [&] { return Error(Errc::truncated, "model file '" + path.string() + "' is truncated"); };
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0)
    throw Error(Errc::bad_magic, "'" + path.string() + "' is not a model checkpoint");
  std::uint32_t version = 0, dim = 0, hidden = 0, width = 0, tag = 0;
  if (!detail::read_le(in, version)) throw truncated();
  if (version != kModelVersion)
    throw Error(Errc::unsupported_version,
                "unsupported model version " + std::to_string(version) + " in '" + path.string() + "'");
  if (!detail::read_le(in, dim) || !detail::read_le(in, hidden) || !detail::read_le(in, width) ||
      !detail::read_le(in, tag))
    throw truncated();
  if (tag > 1) throw Error(Errc::parse, "unknown activation tag " + std::to_string(tag));
  if (dim > 3 || hidden > 1024 || width > 65536) throw Error(Errc::parse, "implausible model header");
  Architecture arch;
  arch.input_dim = static_cast<int>(dim);
  arch.hidden_layers = static_cast<int>(hidden);
  arch.width = static_cast<int>(width);
  arch.activation.kind = static_cast<ActivationKind>(tag);
  if (!detail::read_le(in, arch.activation.param)) throw truncated();
  check_architecture(arch);
  NormalizationTransform t;
  t.center.resize(arch.input_dim);
  for (int a = 0; a < arch.input_dim; ++a)
    if (!detail::read_le(in, t.center[a])) throw truncated();
  if (!detail::read_le(in, t.scale)) throw truncated();

  std::vector<Layer> layers;
  for (int l = 0; l <= arch.hidden_layers; ++l) {
    const Eigen::Index n_in = l == 0 ? arch.input_dim : arch.width;
    const Eigen::Index n_out = l == arch.hidden_layers ? 1 : arch.width;
    Layer layer;
    layer.weight.resize(n_out, n_in);
    layer.bias.resize(n_out);
    for (Eigen::Index r = 0; r < n_out; ++r)
      for (Eigen::Index c = 0; c < n_in; ++c)
        if (!detail::read_le(in, layer.weight(r, c))) throw truncated();
    for (Eigen::Index r = 0; r < n_out; ++r)
      if (!detail::read_le(in, layer.bias[r])) throw truncated();
    layers.push_back(std::move(layer));
  }
  return SineNetwork(arch, std::move(layers), std::move(t));
}

}  // namespace nsh
