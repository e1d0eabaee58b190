#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/problem.hpp"

namespace ags::nn {

/// Dense row-major data with up to three axes (batch, time, feature).
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  std::size_t size() const { return data.size(); }
  double& at(int b, int t, int f);
  double at(int b, int t, int f) const;
  bool all_finite() const;
};

/// Sequence as time-major list of (batch x feature) matrices.
using Sequence = std::vector<Matrix>;

Tensor to_tensor(const Sequence& seq);
Sequence to_sequence(const Tensor& t);

/// Trainable array with its gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, int rows, int cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

using ParamList = std::vector<Param*>;

void zero_grad(const ParamList& params);
std::size_t parameter_count(const ParamList& params);

/// Flat copy of all parameter values (or gradients), in list order.
Vector flatten_values(const ParamList& params);
Vector flatten_grads(const ParamList& params);
void assign_values(const ParamList& params, const Vector& flat);

enum class Activation { kIdentity, kLeakyRelu, kSigmoid };

inline constexpr double kLeakySlope = 0.01;

double activate(Activation a, double v);
std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
void glorot_init(Param& weight, int fan_in, int fan_out, Rng& rng);

/// Fully connected layers. `sizes` = [in, h1, ..., out]; hidden layers use
/// `hidden`, the last layer uses `output`.
class Mlp {
 public:
  struct Tape {
    std::vector<Matrix> inputs;  // input of each layer
    std::vector<Matrix> pre;     // affine output of each layer
    Matrix output;
  };

  Mlp() = default;
  Mlp(std::string name, std::vector<int> sizes, Activation hidden, Activation output);

  void initialize(Rng& rng);
  /// x: batch x sizes.front(). Records intermediates when tape != nullptr.
  Matrix forward(const Matrix& x, Tape* tape = nullptr) const;
  /// Accumulates parameter gradients and returns dL/dx.
  Matrix backward(const Tape& tape, const Matrix& grad_output);

  ParamList params();
  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  std::size_t parameter_count() const;
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::vector<int> sizes_;
  Activation hidden_ = Activation::kLeakyRelu;
  Activation output_ = Activation::kIdentity;
  std::vector<Param> weights_;  // out x in
  std::vector<Param> biases_;   // 1 x out
};

/// Stacked bidirectional LSTM. Gates i, f, o = sigmoid, g = tanh;
/// c <- f*c + i*g; h <- o*tanh(c). Each layer concatenates the forward and
/// backward hidden states, so layers after the first see 2H features.
class Lstm {
 public:
  struct DirectionTape {
    std::vector<Matrix> gates;  // activated [i f g o], batch x 4H, in processing order
    std::vector<Matrix> c;      // cell state after each step
    std::vector<Matrix> h;      // hidden state after each step
  };
  struct Tape {
    std::vector<Sequence> inputs;  // input sequence of each layer
    std::vector<DirectionTape> forward_dir;
    std::vector<DirectionTape> backward_dir;
    Sequence output;
  };

  Lstm() = default;
  Lstm(std::string name, int input_dim, int hidden, int layers, bool bidirectional = true);

  void initialize(Rng& rng);
  Sequence forward(const Sequence& x, Tape* tape = nullptr) const;
  /// Backpropagation through time; returns dL/dx per step.
  Sequence backward(const Tape& tape, const Sequence& grad_output);

  ParamList params();
  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  int layers() const { return layers_; }
  bool bidirectional() const { return bidirectional_; }
  int output_dim() const { return hidden_ * (bidirectional_ ? 2 : 1); }
  std::size_t parameter_count() const;
  const std::string& name() const { return name_; }

  /// Parameters of one layer/direction: W_x (4H x in), W_h (4H x H), b (1 x 4H).
  Param& wx(int layer, int dir) { return cells_[index(layer, dir)].wx; }
  Param& wh(int layer, int dir) { return cells_[index(layer, dir)].wh; }
  Param& bias(int layer, int dir) { return cells_[index(layer, dir)].b; }

 private:
  struct Cell {
    Param wx, wh, b;
  };
  int index(int layer, int dir) const { return layer * (bidirectional_ ? 2 : 1) + dir; }
  void run_direction(const Cell& cell, const Sequence& x, bool reverse, DirectionTape& out) const;
  void backprop_direction(Cell& cell, const Sequence& x, const DirectionTape& tape, bool reverse,
                          const Sequence& dh_out, Sequence& dx) const;

  std::string name_;
  int input_dim_ = 0;
  int hidden_ = 0;
  int layers_ = 0;
  bool bidirectional_ = true;
  std::vector<Cell> cells_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
};

/// One Adam update with bias correction, in place.
void adam_step(const ParamList& params, AdamState& state, const AdamOptions& opts);

/// Largest relative error |a - n| / max(|a| + |n|, floor) between the
/// analytic gradient and central differences over `n_coords` random
/// coordinates. `loss` must fill the parameter gradients when asked.
struct GradCheckResult {
  double max_rel_error = 0.0;
  int coordinates = 0;
  double worst_analytic = 0.0;  // the coordinate with the largest error
  double worst_numeric = 0.0;
};

GradCheckResult gradient_check(const std::function<double(bool with_grad)>& loss,
                               const ParamList& params, double eps = 1e-6, int n_coords = 60,
                               std::uint64_t seed = 1, double floor = 1e-8);

/// Same comparison with each derivative taken from a Richardson-extrapolated
/// sequence of central differences (Ridders), starting at step h0 and
/// shrinking by 1.4. Accurate to near machine precision on smooth losses, so
/// coordinates with tiny gradients are checked meaningfully.
GradCheckResult gradient_check_extrapolated(const std::function<double(bool with_grad)>& loss,
                                            const ParamList& params, double h0 = 1e-2,
                                            int n_coords = 60, std::uint64_t seed = 1,
                                            double floor = 1e-8);

/// Checkpoint blocks: architecture descriptor plus flat weights. Weights are
/// written as IEEE-754 bit patterns (hex) so reloading is bit-exact.
nlohmann::json mlp_to_json(Mlp& mlp);
Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json lstm_to_json(Lstm& lstm);
Lstm lstm_from_json(const nlohmann::json& j);

nlohmann::json values_to_json(const ParamList& params);
void values_from_json(const ParamList& params, const nlohmann::json& j);

std::string encode_doubles(const std::vector<double>& v);
std::vector<double> decode_doubles(const std::string& s);

}  // namespace ags::nn
