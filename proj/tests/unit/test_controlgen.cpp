#include <cstring>

#include "ags/controlgen.hpp"
#include "doctest.h"

using namespace ags;
using namespace ags::controlgen;

namespace {

Architecture small_arch(int n = 20) {
  Architecture a;
  a.encoder = {5, 12, 12};
  a.lstm_hidden = 6;
  a.lstm_layers = 3;
  a.sequence_length = n;
  return a;
}

Matrix random_inputs(int b, Rng& rng) {
  Matrix m(b, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("control model: output shape and determinism") {
  Model m(small_arch(), 1);
  Rng rng(2);
  const Matrix in = random_inputs(3, rng);
  const auto p = m.predict(in);
  REQUIRE(p.size() == 3);
  CHECK(p[0].rows() == 20);
  CHECK(p[0].cols() == 3);
  const auto q = m.predict(in);
  for (int b = 0; b < 3; ++b) CHECK((p[b] - q[b]).norm() == 0.0);
  for (const auto& seq : p)
    for (int t = 0; t < 20; ++t) CHECK(seq.row(t).norm() <= 1.0 + 1e-15);
  CHECK_THROWS_AS(m.forward(Matrix::Zero(2, 4)), InvalidInput);
}

TEST_CASE("control model: full-size architecture sizes") {
  const Architecture a;
  CHECK(a.encoder == std::vector<int>{5, 512, 512, 512});
  CHECK(a.lstm_hidden == 512);
  CHECK(a.lstm_layers == 3);
}

TEST_CASE("clamp_control: projects onto the unit ball") {
  const Eigen::Vector3d u(1.2, 0.0, 0.0);
  CHECK((clamp_control(u) - Eigen::Vector3d(1, 0, 0)).norm() < 1e-15);
  const Eigen::Vector3d w(0.6, -0.96, 0.0);
  const Eigen::Vector3d cw = clamp_control(w);
  CHECK(cw.norm() == doctest::Approx(1.0));
  CHECK(cw.normalized().dot(w.normalized()) == doctest::Approx(1.0));
  const Eigen::Vector3d v(0.3, 0.4, 0.0);
  CHECK(clamp_control(v) == v);
}

TEST_CASE("control_loss: identical, offset and shape errors") {
  Rng rng(3);
  nn::Sequence a(4, Matrix::Random(2, 3));
  CHECK(control_loss(a, a) == 0.0);
  nn::Sequence b = a;
  for (auto& m : b) m.array() += 0.25;
  CHECK(control_loss(a, b) == doctest::Approx(0.0625));
  nn::Sequence c(3, Matrix::Zero(2, 3));
  CHECK_THROWS_AS(control_loss(a, c), InvalidInput);
}

TEST_CASE("control_loss: gradient through the model matches central differences") {
  Model m(small_arch(5), 4);
  Rng rng(5);
  const Matrix in = random_inputs(2, rng);
  nn::Sequence target(5, Matrix::Random(2, 3) * 0.5);
  auto loss = [&](bool g) {
    Model::Tape tape;
    const nn::Sequence out = m.forward(in, &tape);
    nn::Sequence grad;
    const double l = control_loss(out, target, g ? &grad : nullptr);
    if (g) m.backward(tape, grad);
    return l;
  };
  const auto r = nn::gradient_check(loss, m.params(), 1e-6, 120, 6);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("control model: tiled input with zero recurrence gives identical steps") {
  Model m(small_arch(6), 7);
  for (int l = 0; l < 3; ++l)
    for (int d = 0; d < 2; ++d) m.lstm().wh(l, d).value.setZero();
  Rng rng(8);
  // forget gate closed: no cell carry either
  for (int l = 0; l < 3; ++l)
    for (int d = 0; d < 2; ++d) m.lstm().bias(l, d).value.middleCols(6, 6).setConstant(-1e3);
  const nn::Sequence closed = m.forward(random_inputs(2, rng));
  for (std::size_t t = 1; t < closed.size(); ++t) CHECK((closed[t] - closed[0]).norm() < 1e-12);
}

TEST_CASE("control model: checkpoint round trip") {
  Model m(small_arch(), 9);
  const std::string s = m.to_json().dump();
  Model back = Model::from_json(nlohmann::json::parse(s));
  const Vector a = nn::flatten_values(m.params()), b = nn::flatten_values(back.params());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  CHECK(back.parameter_count() == m.parameter_count());
}
