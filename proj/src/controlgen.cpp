#include "ags/controlgen.hpp"

namespace ags::controlgen {

void Architecture::validate() const {
  if (encoder.size() < 2 || encoder.front() != 5)
    throw InvalidInput("control model: encoder must start with 5 inputs");
  for (int s : encoder)
    if (s < 1) throw InvalidInput("control model: encoder sizes must be positive");
  if (lstm_hidden < 1 || lstm_layers < 1 || sequence_length < 1)
    throw InvalidInput("control model: LSTM sizes and sequence length must be positive");
}

nlohmann::json Architecture::to_json() const {
  return {{"encoder", encoder},
          {"lstm_hidden", lstm_hidden},
          {"lstm_layers", lstm_layers},
          {"sequence_length", sequence_length}};
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  Architecture a;
  a.encoder = j.at("encoder").get<std::vector<int>>();
  a.lstm_hidden = j.at("lstm_hidden").get<int>();
  a.lstm_layers = j.at("lstm_layers").get<int>();
  a.sequence_length = j.at("sequence_length").get<int>();
  a.validate();
  return a;
}

Model::Model(Architecture arch, std::uint64_t init_seed) : arch_(std::move(arch)) {
  arch_.validate();
  encoder_ = nn::Mlp("ctrl_encoder", arch_.encoder, nn::Activation::kLeakyRelu,
                     nn::Activation::kLeakyRelu);
  lstm_ = nn::Lstm("ctrl_lstm", arch_.encoder.back(), arch_.lstm_hidden, arch_.lstm_layers, true);
  projection_ = nn::Mlp("ctrl_projection", {2 * arch_.lstm_hidden, 3}, nn::Activation::kIdentity,
                        nn::Activation::kIdentity);
  Rng rng(init_seed);
  encoder_.initialize(rng);
  lstm_.initialize(rng);
  projection_.initialize(rng);
}

nn::Sequence Model::forward(const Matrix& inputs, Tape* tape) const {
  if (inputs.cols() != 5) throw InvalidInput("control model: expected 5 input features");
  const Matrix e = encoder_.forward(inputs, tape ? &tape->encoder : nullptr);
  const nn::Sequence tiled(arch_.sequence_length, e);
  const nn::Sequence h = lstm_.forward(tiled, tape ? &tape->lstm : nullptr);
  nn::Sequence out(h.size());
  if (tape != nullptr) tape->projection.assign(h.size(), nn::Mlp::Tape());
  for (std::size_t t = 0; t < h.size(); ++t)
    out[t] = projection_.forward(h[t], tape ? &tape->projection[t] : nullptr);
  return out;
}

void Model::backward(const Tape& tape, const nn::Sequence& grad_output) {
  if (grad_output.size() != tape.projection.size())
    throw InvalidInput("control model: gradient sequence length mismatch");
  nn::Sequence dh(grad_output.size());
  for (std::size_t t = 0; t < grad_output.size(); ++t)
    dh[t] = projection_.backward(tape.projection[t], grad_output[t]);
  const nn::Sequence dx = lstm_.backward(tape.lstm, dh);
  Matrix de = Matrix::Zero(dx[0].rows(), dx[0].cols());
  for (const Matrix& d : dx) de += d;
  encoder_.backward(tape.encoder, de);
}

std::vector<Matrix> Model::predict(const Matrix& inputs) const {
  const nn::Sequence seq = forward(inputs);
  std::vector<Matrix> out(inputs.rows(), Matrix(arch_.sequence_length, 3));
  for (int t = 0; t < arch_.sequence_length; ++t)
    for (Eigen::Index b = 0; b < inputs.rows(); ++b)
      out[b].row(t) = clamp_control(seq[t].row(b).transpose()).transpose();
  return out;
}

nn::ParamList Model::params() {
  nn::ParamList out = encoder_.params();
  for (nn::Param* p : lstm_.params()) out.push_back(p);
  for (nn::Param* p : projection_.params()) out.push_back(p);
  return out;
}

std::size_t Model::parameter_count() const {
  return encoder_.parameter_count() + lstm_.parameter_count() + projection_.parameter_count();
}

nlohmann::json Model::to_json() {
  return {{"architecture", arch_.to_json()},
          {"encoder", nn::mlp_to_json(encoder_)},
          {"lstm", nn::lstm_to_json(lstm_)},
          {"projection", nn::mlp_to_json(projection_)}};
}

Model Model::from_json(const nlohmann::json& j) {
  Model m;
  m.arch_ = Architecture::from_json(j.at("architecture"));
  m.encoder_ = nn::mlp_from_json(j.at("encoder"));
  m.lstm_ = nn::lstm_from_json(j.at("lstm"));
  m.projection_ = nn::mlp_from_json(j.at("projection"));
  if (m.encoder_.sizes() != m.arch_.encoder || m.lstm_.hidden() != m.arch_.lstm_hidden ||
      m.lstm_.layers() != m.arch_.lstm_layers)
    throw InvalidInput("control checkpoint: blocks do not match the architecture");
  return m;
}

double control_loss(const nn::Sequence& pred, const nn::Sequence& target, nn::Sequence* grad) {
  if (pred.size() != target.size() || pred.empty())
    throw InvalidInput("control_loss: sequence length mismatch");
  double count = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].rows() != target[t].rows() || pred[t].cols() != target[t].cols())
      throw InvalidInput("control_loss: shape mismatch");
    count += static_cast<double>(pred[t].size());
  }
  double sum = 0.0;
  if (grad != nullptr) grad->resize(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Matrix d = pred[t] - target[t];
    sum += d.squaredNorm();
    if (grad != nullptr) (*grad)[t] = d * (2.0 / count);
  }
  return sum / count;
}

Eigen::Vector3d clamp_control(const Eigen::Vector3d& u) {
  const double n = u.norm();
  return n > 1.0 ? Eigen::Vector3d(u / n) : u;
}

}  // namespace ags::controlgen
