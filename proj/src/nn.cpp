#include "ags/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>

namespace ags::nn {

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  if (shape.empty() || shape.size() > 3) throw InvalidInput("Tensor: 1 to 3 axes supported");
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw InvalidInput("Tensor: negative extent");
    n *= static_cast<std::size_t>(d);
  }
  data.assign(n, 0.0);
}

double& Tensor::at(int b, int t, int f) {
  if (shape.size() != 3) throw InvalidInput("Tensor::at expects three axes");
  return data[(static_cast<std::size_t>(b) * shape[1] + t) * shape[2] + f];
}

double Tensor::at(int b, int t, int f) const { return const_cast<Tensor*>(this)->at(b, t, f); }

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Tensor to_tensor(const Sequence& seq) {
  if (seq.empty()) throw InvalidInput("to_tensor: empty sequence");
  const int b = static_cast<int>(seq[0].rows());
  const int f = static_cast<int>(seq[0].cols());
  Tensor t({b, static_cast<int>(seq.size()), f});
  for (int s = 0; s < static_cast<int>(seq.size()); ++s) {
    if (seq[s].rows() != b || seq[s].cols() != f) throw InvalidInput("to_tensor: ragged sequence");
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < f; ++j) t.at(i, s, j) = seq[s](i, j);
  }
  return t;
}

Sequence to_sequence(const Tensor& t) {
  if (t.shape.size() != 3) throw InvalidInput("to_sequence: expected (batch, time, feature)");
  Sequence seq(t.shape[1], Matrix(t.shape[0], t.shape[2]));
  for (int s = 0; s < t.shape[1]; ++s)
    for (int i = 0; i < t.shape[0]; ++i)
      for (int j = 0; j < t.shape[2]; ++j) seq[s](i, j) = t.at(i, s, j);
  return seq;
}

void zero_grad(const ParamList& params) {
  for (Param* p : params) p->grad.setZero();
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const Param* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

Vector flatten_values(const ParamList& params) {
  Vector out(parameter_count(params));
  Eigen::Index k = 0;
  for (const Param* p : params) {
    out.segment(k, p->value.size()) = p->value.reshaped();
    k += p->value.size();
  }
  return out;
}

Vector flatten_grads(const ParamList& params) {
  Vector out(parameter_count(params));
  Eigen::Index k = 0;
  for (const Param* p : params) {
    out.segment(k, p->grad.size()) = p->grad.reshaped();
    k += p->grad.size();
  }
  return out;
}

void assign_values(const ParamList& params, const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count(params))
    throw InvalidInput("assign_values: size mismatch");
  Eigen::Index k = 0;
  for (Param* p : params) {
    p->value.reshaped() = flat.segment(k, p->value.size());
    k += p->value.size();
  }
}

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kLeakyRelu: return v > 0.0 ? v : kLeakySlope * v;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::kIdentity: break;
  }
  return v;
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: break;
  }
  return "identity";
}

Activation parse_activation(const std::string& s) {
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "identity") return Activation::kIdentity;
  throw InvalidInput("unknown activation '" + s + "'");
}

void glorot_init(Param& weight, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index i = 0; i < weight.value.size(); ++i)
    weight.value.data()[i] = rng.uniform(-limit, limit);
}

namespace {

Matrix apply(Activation a, const Matrix& pre) {
  switch (a) {
    case Activation::kLeakyRelu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    case Activation::kSigmoid:
      return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    case Activation::kIdentity: break;
  }
  return pre;
}

// d activation / d pre, given the pre-activation and the activation output
Matrix derivative(Activation a, const Matrix& pre, const Matrix& out) {
  switch (a) {
    case Activation::kLeakyRelu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
    case Activation::kSigmoid: return out.array() * (1.0 - out.array());
    case Activation::kIdentity: break;
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

Matrix sigmoid(const Matrix& m) {
  return m.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

Mlp::Mlp(std::string name, std::vector<int> sizes, Activation hidden, Activation output)
    : name_(std::move(name)), sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw InvalidInput("Mlp '" + name_ + "' needs at least two sizes");
  for (int s : sizes_)
    if (s < 1) throw InvalidInput("Mlp '" + name_ + "': layer sizes must be positive");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.emplace_back(name_ + ".W" + std::to_string(l), sizes_[l + 1], sizes_[l]);
    biases_.emplace_back(name_ + ".b" + std::to_string(l), 1, sizes_[l + 1]);
  }
}

void Mlp::initialize(Rng& rng) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    glorot_init(weights_[l], sizes_[l], sizes_[l + 1], rng);
    biases_[l].value.setZero();
  }
}

Matrix Mlp::forward(const Matrix& x, Tape* tape) const {
  if (x.cols() != sizes_.front())
    throw InvalidInput("Mlp '" + name_ + "': expected " + std::to_string(sizes_.front()) +
                       " input features, got " + std::to_string(x.cols()));
  if (tape != nullptr) {
    tape->inputs.clear();
    tape->pre.clear();
  }
  Matrix h = x;
  const std::size_t n = weights_.size();
  for (std::size_t l = 0; l < n; ++l) {
    Matrix pre = h * weights_[l].value.transpose();
    pre.rowwise() += biases_[l].value.row(0);
    Matrix out = apply(l + 1 == n ? output_ : hidden_, pre);
    if (tape != nullptr) {
      tape->inputs.push_back(std::move(h));
      tape->pre.push_back(std::move(pre));
    }
    h = std::move(out);
  }
  if (tape != nullptr) tape->output = h;
  return h;
}

Matrix Mlp::backward(const Tape& tape, const Matrix& grad_output) {
  const std::size_t n = weights_.size();
  if (tape.pre.size() != n) throw InvalidInput("Mlp '" + name_ + "': stale or foreign tape");
  if (grad_output.rows() != tape.output.rows() || grad_output.cols() != tape.output.cols())
    throw InvalidInput("Mlp '" + name_ + "': output gradient shape mismatch");
  Matrix grad = grad_output;
  for (std::size_t k = n; k-- > 0;) {
    const Activation a = k + 1 == n ? output_ : hidden_;
    const Matrix& out = k + 1 == n ? tape.output : tape.inputs[k + 1];
    const Matrix dpre = grad.cwiseProduct(derivative(a, tape.pre[k], out));
    weights_[k].grad.noalias() += dpre.transpose() * tape.inputs[k];
    biases_[k].grad.row(0) += dpre.colwise().sum();
    grad = dpre * weights_[k].value;
  }
  return grad;
}

ParamList Mlp::params() {
  ParamList out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
    n += static_cast<std::size_t>(sizes_[l] + 1) * sizes_[l + 1];
  return n;
}

Lstm::Lstm(std::string name, int input_dim, int hidden, int layers, bool bidirectional)
    : name_(std::move(name)),
      input_dim_(input_dim),
      hidden_(hidden),
      layers_(layers),
      bidirectional_(bidirectional) {
  if (input_dim < 1 || hidden < 1 || layers < 1)
    throw InvalidInput("Lstm '" + name_ + "': dimensions must be positive");
  const int dirs = bidirectional ? 2 : 1;
  for (int l = 0; l < layers; ++l) {
    const int in = l == 0 ? input_dim : hidden * dirs;
    for (int d = 0; d < dirs; ++d) {
      const std::string p = name_ + ".l" + std::to_string(l) + (d == 0 ? "f" : "b");
      cells_.push_back({Param(p + ".Wx", 4 * hidden, in), Param(p + ".Wh", 4 * hidden, hidden),
                        Param(p + ".b", 1, 4 * hidden)});
    }
  }
}

void Lstm::initialize(Rng& rng) {
  for (Cell& c : cells_) {
    glorot_init(c.wx, static_cast<int>(c.wx.value.cols()), hidden_, rng);
    glorot_init(c.wh, hidden_, hidden_, rng);
    c.b.value.setZero();
  }
}

void Lstm::run_direction(const Cell& cell, const Sequence& x, bool reverse,
                         DirectionTape& out) const {
  const int steps = static_cast<int>(x.size());
  const Eigen::Index batch = x[0].rows();
  const int h = hidden_;
  out.gates.assign(steps, Matrix());
  out.c.assign(steps, Matrix());
  out.h.assign(steps, Matrix());
  Matrix hp = Matrix::Zero(batch, h);
  Matrix cp = Matrix::Zero(batch, h);
  for (int s = 0; s < steps; ++s) {
    const int t = reverse ? steps - 1 - s : s;
    Matrix a = x[t] * cell.wx.value.transpose() + hp * cell.wh.value.transpose();
    a.rowwise() += cell.b.value.row(0);
    Matrix g(batch, 4 * h);
    g.leftCols(2 * h) = sigmoid(a.leftCols(2 * h));
    g.middleCols(2 * h, h) = a.middleCols(2 * h, h).array().tanh().matrix();
    g.rightCols(h) = sigmoid(a.rightCols(h));
    Matrix c = g.middleCols(h, h).cwiseProduct(cp) + g.leftCols(h).cwiseProduct(g.middleCols(2 * h, h));
    Matrix hn = g.rightCols(h).cwiseProduct(c.array().tanh().matrix());
    out.gates[s] = std::move(g);
    out.c[s] = c;
    out.h[s] = hn;
    hp = std::move(hn);
    cp = std::move(c);
  }
}

Sequence Lstm::forward(const Sequence& x, Tape* tape) const {
  if (x.empty()) throw InvalidInput("Lstm '" + name_ + "': empty sequence");
  for (const Matrix& m : x)
    if (m.cols() != input_dim_ || m.rows() != x[0].rows())
      throw InvalidInput("Lstm '" + name_ + "': expected " + std::to_string(input_dim_) +
                         " features per step and a constant batch");
  const int steps = static_cast<int>(x.size());
  const int dirs = bidirectional_ ? 2 : 1;
  Tape local;
  Tape& tp = tape != nullptr ? *tape : local;
  tp.inputs.clear();
  tp.forward_dir.assign(layers_, DirectionTape());
  tp.backward_dir.assign(bidirectional_ ? layers_ : 0, DirectionTape());
  Sequence in = x;
  for (int l = 0; l < layers_; ++l) {
    run_direction(cells_[index(l, 0)], in, false, tp.forward_dir[l]);
    if (bidirectional_) run_direction(cells_[index(l, 1)], in, true, tp.backward_dir[l]);
    Sequence out(steps);
    for (int t = 0; t < steps; ++t) {
      out[t].resize(in[t].rows(), hidden_ * dirs);
      out[t].leftCols(hidden_) = tp.forward_dir[l].h[t];
      if (bidirectional_) out[t].rightCols(hidden_) = tp.backward_dir[l].h[steps - 1 - t];
    }
    tp.inputs.push_back(std::move(in));
    in = std::move(out);
  }
  tp.output = in;
  return in;
}

void Lstm::backprop_direction(Cell& cell, const Sequence& x, const DirectionTape& tape,
                              bool reverse, const Sequence& dh_out, Sequence& dx) const {
  const int steps = static_cast<int>(x.size());
  const Eigen::Index batch = x[0].rows();
  const int h = hidden_;
  Matrix dh_next = Matrix::Zero(batch, h);
  Matrix dc_next = Matrix::Zero(batch, h);
  for (int s = steps - 1; s >= 0; --s) {
    const int t = reverse ? steps - 1 - s : s;
    const Matrix& g = tape.gates[s];
    const auto i = g.leftCols(h).array();
    const auto f = g.middleCols(h, h).array();
    const auto gg = g.middleCols(2 * h, h).array();
    const auto o = g.rightCols(h).array();
    const Eigen::ArrayXXd tc = tape.c[s].array().tanh();
    const Eigen::ArrayXXd dh = (dh_out[t] + dh_next).array();
    const Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
    const Matrix c_prev = s > 0 ? tape.c[s - 1] : Matrix::Zero(batch, h);
    const Matrix h_prev = s > 0 ? tape.h[s - 1] : Matrix::Zero(batch, h);
    Matrix da(batch, 4 * h);
    da.leftCols(h) = (dc * gg * i * (1.0 - i)).matrix();
    da.middleCols(h, h) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    da.middleCols(2 * h, h) = (dc * i * (1.0 - gg * gg)).matrix();
    da.rightCols(h) = (dh * tc * o * (1.0 - o)).matrix();
    cell.wx.grad.noalias() += da.transpose() * x[t];
    cell.wh.grad.noalias() += da.transpose() * h_prev;
    cell.b.grad.row(0) += da.colwise().sum();
    dx[t].noalias() += da * cell.wx.value;
    dh_next = da * cell.wh.value;
    dc_next = (dc * f).matrix();
  }
}

Sequence Lstm::backward(const Tape& tape, const Sequence& grad_output) {
  if (static_cast<int>(tape.inputs.size()) != layers_ || tape.output.empty())
    throw InvalidInput("Lstm '" + name_ + "': stale or foreign tape");
  const int steps = static_cast<int>(tape.output.size());
  if (static_cast<int>(grad_output.size()) != steps)
    throw InvalidInput("Lstm '" + name_ + "': gradient sequence length mismatch");
  Sequence grad = grad_output;
  for (int l = layers_ - 1; l >= 0; --l) {
    const Sequence& in = tape.inputs[l];
    Sequence dx(steps);
    Sequence dfwd(steps), dbwd(steps);
    for (int t = 0; t < steps; ++t) {
      if (grad[t].rows() != tape.output[t].rows() || grad[t].cols() != output_dim())
        throw InvalidInput("Lstm '" + name_ + "': output gradient shape mismatch");
      dx[t] = Matrix::Zero(in[t].rows(), in[t].cols());
      dfwd[t] = grad[t].leftCols(hidden_);
      if (bidirectional_) dbwd[t] = grad[t].rightCols(hidden_);
    }
    backprop_direction(cells_[index(l, 0)], in, tape.forward_dir[l], false, dfwd, dx);
    if (bidirectional_)
      backprop_direction(cells_[index(l, 1)], in, tape.backward_dir[l], true, dbwd, dx);
    grad = std::move(dx);
  }
  return grad;
}

ParamList Lstm::params() {
  ParamList out;
  for (Cell& c : cells_) {
    out.push_back(&c.wx);
    out.push_back(&c.wh);
    out.push_back(&c.b);
  }
  return out;
}

std::size_t Lstm::parameter_count() const {
  std::size_t n = 0;
  for (const Cell& c : cells_)
    n += static_cast<std::size_t>(c.wx.value.size() + c.wh.value.size() + c.b.value.size());
  return n;
}

void adam_step(const ParamList& params, AdamState& state, const AdamOptions& opts) {
  if (state.m.empty()) {
    for (const Param* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw InvalidInput("adam_step: state does not match params");
  ++state.step;
  const double c1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.m[k].rows() != p.value.rows() || state.m[k].cols() != p.value.cols())
      throw InvalidInput("adam_step: shape mismatch for " + p.name);
    state.m[k] = opts.beta1 * state.m[k] + (1.0 - opts.beta1) * p.grad;
    state.v[k] = opts.beta2 * state.v[k] + (1.0 - opts.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= opts.lr * (state.m[k].array() / c1) /
                       ((state.v[k].array() / c2).sqrt() + opts.eps);
  }
}

namespace {

using NumericDerivative = std::function<double(double& w, double w0)>;

GradCheckResult check_coordinates(const std::function<double(bool)>& loss, const ParamList& params,
                                  int n_coords, std::uint64_t seed, double floor,
                                  const NumericDerivative& numeric_at) {
  zero_grad(params);
  loss(true);
  const Vector analytic = flatten_grads(params);
  const Eigen::Index total = analytic.size();
  std::vector<Eigen::Index> coords(total);
  std::iota(coords.begin(), coords.end(), Eigen::Index{0});
  Rng rng(seed);
  const Eigen::Index pick = std::min<Eigen::Index>(n_coords, total);
  for (Eigen::Index k = 0; k < pick; ++k) {
    const auto j = k + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(total - k)));
    std::swap(coords[k], coords[j]);
  }
  // locate each flat coordinate inside the parameter list
  std::vector<std::pair<Param*, Eigen::Index>> where;
  for (Param* p : params)
    for (Eigen::Index i = 0; i < p->value.size(); ++i) where.emplace_back(p, i);

  GradCheckResult res;
  for (Eigen::Index k = 0; k < pick; ++k) {
    auto [p, i] = where[coords[k]];
    double& w = p->value.data()[i];
    const double w0 = w;
    const double numeric = numeric_at(w, w0);
    w = w0;
    const double a = analytic[coords[k]];
    const double err = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
    if (err >= res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_analytic = a;
      res.worst_numeric = numeric;
    }
    ++res.coordinates;
  }
  zero_grad(params);
  return res;
}

}  // namespace

GradCheckResult gradient_check(const std::function<double(bool)>& loss, const ParamList& params,
                               double eps, int n_coords, std::uint64_t seed, double floor) {
  return check_coordinates(loss, params, n_coords, seed, floor, [&](double& w, double w0) {
    w = w0 + eps;
    const double fp = loss(false);
    w = w0 - eps;
    const double fm = loss(false);
    return (fp - fm) / (2.0 * eps);
  });
}

GradCheckResult gradient_check_extrapolated(const std::function<double(bool)>& loss,
                                            const ParamList& params, double h0, int n_coords,
                                            std::uint64_t seed, double floor) {
  constexpr int kSteps = 20;
  constexpr double kShrink = 1.4;
  constexpr double kShrink2 = kShrink * kShrink;
  return check_coordinates(loss, params, n_coords, seed, floor, [&](double& w, double w0) {
    auto central = [&](double h) {
      w = w0 + h;
      const double fp = loss(false);
      w = w0 - h;
      const double fm = loss(false);
      return (fp - fm) / (2.0 * h);
    };
    w = w0;
    // rounding noise of one central difference at step h is about noise / h
    const double noise = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(loss(false));
    double table[kSteps][kSteps];
    double h = h0;
    table[0][0] = central(h);
    double best = table[0][0];
    double best_err = std::numeric_limits<double>::infinity();
    for (int i = 1; i < kSteps; ++i) {
      h /= kShrink;
      table[0][i] = central(h);
      double factor = kShrink2;
      for (int j = 1; j <= i; ++j) {
        table[j][i] = (table[j - 1][i] * factor - table[j - 1][i - 1]) / (factor - 1.0);
        factor *= kShrink2;
        const double e = std::max(std::abs(table[j][i] - table[j - 1][i]),
                                  std::abs(table[j][i] - table[j - 1][i - 1])) +
                         (j + 1) * noise / h;
        if (e <= best_err) {
          best_err = e;
          best = table[j][i];
        }
      }
    }
    return best;
  });
}

std::string encode_doubles(const std::vector<double>& v) {
  std::string out;
  out.reserve(v.size() * 16);
  char buf[17];
  for (double d : v) {
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(d)));
    out.append(buf, 16);
  }
  return out;
}

std::vector<double> decode_doubles(const std::string& s) {
  if (s.size() % 16 != 0) throw InvalidInput("decode_doubles: length is not a multiple of 16");
  std::vector<double> out(s.size() / 16);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t bits = 0;
    for (std::size_t c = 0; c < 16; ++c) {
      const char ch = s[16 * k + c];
      int nib;
      if (ch >= '0' && ch <= '9') nib = ch - '0';
      else if (ch >= 'a' && ch <= 'f') nib = ch - 'a' + 10;
      else throw InvalidInput("decode_doubles: bad hex digit");
      bits = (bits << 4) | static_cast<std::uint64_t>(nib);
    }
    out[k] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::json values_to_json(const ParamList& params) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Param* p : params) {
    std::vector<double> v(p->value.data(), p->value.data() + p->value.size());
    arr.push_back({{"name", p->name},
                   {"rows", p->value.rows()},
                   {"cols", p->value.cols()},
                   {"data", encode_doubles(v)}});
  }
  return arr;
}

void values_from_json(const ParamList& params, const nlohmann::json& j) {
  if (!j.is_array() || j.size() != params.size())
    throw InvalidInput("checkpoint: parameter count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    const auto& e = j[k];
    if (e.at("name").get<std::string>() != p.name || e.at("rows").get<Eigen::Index>() != p.value.rows() ||
        e.at("cols").get<Eigen::Index>() != p.value.cols())
      throw InvalidInput("checkpoint: parameter " + p.name + " does not match the architecture");
    const std::vector<double> v = decode_doubles(e.at("data").get<std::string>());
    if (static_cast<Eigen::Index>(v.size()) != p.value.size())
      throw InvalidInput("checkpoint: wrong data length for " + p.name);
    std::copy(v.begin(), v.end(), p.value.data());
  }
}

nlohmann::json mlp_to_json(Mlp& mlp) {
  return {{"type", "mlp"},
          {"name", mlp.name()},
          {"sizes", mlp.sizes()},
          {"hidden", to_string(mlp.hidden_activation())},
          {"output", to_string(mlp.output_activation())},
          {"params", values_to_json(mlp.params())}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  if (j.at("type") != "mlp") throw InvalidInput("checkpoint: expected an mlp block");
  Mlp m(j.at("name").get<std::string>(), j.at("sizes").get<std::vector<int>>(),
        parse_activation(j.at("hidden").get<std::string>()),
        parse_activation(j.at("output").get<std::string>()));
  values_from_json(m.params(), j.at("params"));
  return m;
}

nlohmann::json lstm_to_json(Lstm& lstm) {
  return {{"type", "lstm"},
          {"name", lstm.name()},
          {"input_dim", lstm.input_dim()},
          {"hidden", lstm.hidden()},
          {"layers", lstm.layers()},
          {"bidirectional", lstm.bidirectional()},
          {"params", values_to_json(lstm.params())}};
}

Lstm lstm_from_json(const nlohmann::json& j) {
  if (j.at("type") != "lstm") throw InvalidInput("checkpoint: expected an lstm block");
  Lstm l(j.at("name").get<std::string>(), j.at("input_dim").get<int>(), j.at("hidden").get<int>(),
         j.at("layers").get<int>(), j.at("bidirectional").get<bool>());
  values_from_json(l.params(), j.at("params"));
  return l;
}

}  // namespace ags::nn
