#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/nn.hpp"

namespace ags::controlgen {

/// Encoder MLP on (normalized dt triple, normalized m_f, alpha), tiled over
/// N steps into a bidirectional LSTM, then a per-step linear map to 3.
struct Architecture {
  std::vector<int> encoder{5, 512, 512, 512};
  int lstm_hidden = 512;
  int lstm_layers = 3;
  int sequence_length = 20;

  void validate() const;
  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
};

class Model {
 public:
  struct Tape {
    nn::Mlp::Tape encoder;
    nn::Lstm::Tape lstm;
    std::vector<nn::Mlp::Tape> projection;
  };

  Model() = default;
  Model(Architecture arch, std::uint64_t init_seed);

  const Architecture& architecture() const { return arch_; }

  /// inputs: B x 5. Returns N matrices of B x 3 throttle components, unclamped.
  nn::Sequence forward(const Matrix& inputs, Tape* tape = nullptr) const;
  /// Accumulates parameter gradients from dL/d(outputs).
  void backward(const Tape& tape, const nn::Sequence& grad_output);

  /// Forward pass followed by the norm clamp, one row per sample:
  /// result[b] is N x 3.
  std::vector<Matrix> predict(const Matrix& inputs) const;

  nn::ParamList params();
  std::size_t parameter_count() const;
  nn::Mlp& encoder() { return encoder_; }
  nn::Lstm& lstm() { return lstm_; }

  nlohmann::json to_json();
  static Model from_json(const nlohmann::json& j);

 private:
  Architecture arch_;
  nn::Mlp encoder_;
  nn::Lstm lstm_;
  nn::Mlp projection_;
};

/// Mean squared error over all N x 3 entries; writes dL/dpred when grad != nullptr.
double control_loss(const nn::Sequence& pred, const nn::Sequence& target,
                    nn::Sequence* grad = nullptr);

/// Scales u to unit norm when |u| > 1, keeping its direction.
Eigen::Vector3d clamp_control(const Eigen::Vector3d& u);

}  // namespace ags::controlgen
