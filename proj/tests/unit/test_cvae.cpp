#include <cmath>
#include <cstring>
#include <numbers>

#include "ags/cvae.hpp"
#include "doctest.h"

using namespace ags;
using namespace ags::cvae;

namespace {

Architecture tiny(int k, bool alpha_dependent) {
  Architecture a;
  a.embed_x = {3, 8, 8};
  a.embed_alpha = {1, 4, 4};
  a.encode = {12, 8};
  a.head = {8, 6, 2};
  a.embed_z = {2, 8, 8};
  a.decode = {12, 8, 3};
  a.components = k;
  a.alpha_dependent_prior = alpha_dependent;
  a.prior_hidden = 5;
  return a;
}

Matrix random_unit(int r, int c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

double closed_form_kl(const Vector& mt, const Vector& vt, const Vector& m, const Vector& v) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < mt.size(); ++d)
    s += 0.5 * (vt[d] / v[d] + (mt[d] - m[d]) * (mt[d] - m[d]) / v[d] - 1.0 + std::log(v[d] / vt[d]));
  return s;
}

}  // namespace

TEST_CASE("architecture: tables chain and parameter counts") {
  const Architecture dj = Architecture::dejong();
  CHECK_NOTHROW(dj.validate());
  CHECK(dj.latent_dim() == 2);
  CHECK(dj.data_dim() == 2);
  Model m(dj, 1);
  auto mlp = [](const std::vector<int>& s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) n += static_cast<std::size_t>(s[i] + 1) * s[i + 1];
    return n;
  };
  const std::size_t expected = mlp(dj.embed_x) + mlp(dj.embed_alpha) + mlp(dj.encode) +
                               2 * mlp(dj.head) + mlp(dj.embed_z) + mlp(dj.decode) +
                               dj.components * (1 + 2 * dj.latent_dim());
  CHECK(m.parameter_count() == expected);

  const Architecture full = Architecture::transfer_full();
  CHECK_NOTHROW(full.validate());
  CHECK(full.latent_dim() == 4);
  CHECK(full.data_dim() == 4);
  CHECK(full.components == 20);
  CHECK(full.encode.front() == 1280);

  const Architecture red = Architecture::transfer_reduced(16);
  CHECK(red.embed_x == std::vector<int>{4, 64, 64, 64, 64});
  CHECK(red.head.back() == 4);
  CHECK(red.decode.back() == 4);

  Architecture bad = dj;
  bad.encode.front() = 100;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("encode/decode: shapes, range and row independence") {
  Model m(Architecture::dejong(), 2);
  Rng rng(3);
  const Matrix x = random_unit(5, 2, rng);
  const Matrix a = random_unit(5, 1, rng);
  const EncoderOutput e = m.encode(x, a);
  CHECK(e.mean.rows() == 5);
  CHECK(e.mean.cols() == 2);
  CHECK(e.logvar.cols() == 2);
  const EncoderOutput e1 = m.encode(x.topRows(1), a.topRows(1));
  CHECK((e1.mean.row(0) - e.mean.row(0)).norm() < 1e-14);
  const Matrix xh = m.decode(Matrix::Random(5, 2) * 10.0, a);
  CHECK((xh.array() > 0.0).all());
  CHECK((xh.array() < 1.0).all());
  CHECK((m.decode(e.mean, a) - m.decode(e.mean, a)).norm() == 0.0);
  CHECK_THROWS_AS(m.encode(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), InvalidInput);
  CHECK_THROWS_AS(m.decode(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), InvalidInput);
}

TEST_CASE("reparameterize: limits, determinism and moments") {
  const Matrix mu = (Matrix(1, 2) << 0.3, -1.2).finished();
  const Matrix lv = Matrix::Constant(1, 2, -800.0);
  CHECK((Model::reparameterize(mu, lv, 5) - mu).norm() == 0.0);
  const Matrix lv2 = (Matrix(1, 2) << 0.0, std::log(4.0)).finished();
  CHECK((Model::reparameterize(mu, lv2, 9) - Model::reparameterize(mu, lv2, 9)).norm() == 0.0);
  const int n = 100000;
  const Matrix mus = mu.replicate(n, 1);
  const Matrix lvs = lv2.replicate(n, 1);
  const Matrix z = Model::reparameterize(mus, lvs, 17);
  const Eigen::RowVectorXd mean = z.colwise().mean();
  CHECK(std::abs(mean(0) - 0.3) < 3.0 * 1.0 / std::sqrt(n));
  CHECK(std::abs(mean(1) + 1.2) < 3.0 * 2.0 / std::sqrt(n));
}

TEST_CASE("responsibilities: normalization and separated components") {
  GmmParams p;
  p.pi = Vector::Constant(1, 1.0);
  p.mean = Matrix::Zero(1, 2);
  p.var = Matrix::Ones(1, 2);
  CHECK(responsibilities(Vector::Constant(2, 3.0), p)[0] == 1.0);

  GmmParams q;
  q.pi = (Vector(2) << 0.5, 0.5).finished();
  q.mean = (Matrix(2, 2) << -5, -5, 5, 5).finished();
  q.var = Matrix::Ones(2, 2);
  CHECK(responsibilities(Vector::Constant(2, -5.0), q)[0] > 0.999);

  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    GmmParams r;
    const int k = 1 + static_cast<int>(rng.below(6));
    Vector w(k);
    for (int c = 0; c < k; ++c) w[c] = rng.uniform(0.01, 1.0);
    r.pi = w / w.sum();
    r.mean = Matrix::Random(k, 3) * 4.0;
    r.var = (Matrix::Random(k, 3).array() + 1.5).matrix();
    const Vector z = Vector::Random(3) * 10.0;
    const Vector g = responsibilities(z, r);
    CHECK(std::abs(g.sum() - 1.0) < 1e-12);
    CHECK((g.array() >= 0.0).all());
  }
}

TEST_CASE("elbo: K = 1 mixture KL equals the closed-form Gaussian KL") {
  Model m(tiny(1, false), 5);
  auto pr = m.prior_params();  // logits, mean, raw variance
  auto params = m.params();
  // zero the last weights of both heads so their biases set the posterior
  nn::Param* mean_w = nullptr;
  nn::Param* mean_b = nullptr;
  nn::Param* lv_w = nullptr;
  nn::Param* lv_b = nullptr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->name == "head_mean.W1") mean_w = params[i], mean_b = params[i + 1];
    if (params[i]->name == "head_logvar.W1") lv_w = params[i], lv_b = params[i + 1];
  }
  REQUIRE(mean_w != nullptr);
  REQUIRE(lv_w != nullptr);
  mean_w->value.setZero();
  lv_w->value.setZero();
  Rng rng(6);
  const Matrix x = random_unit(1, 3, rng);
  const Matrix a = Matrix::Constant(1, 1, 0.4);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Vector mt(2), vt(2), mu(2), v(2);
    for (int d = 0; d < 2; ++d) {
      mt[d] = rng.uniform(-3, 3);
      vt[d] = std::exp(rng.uniform(-4, 2));
      mu[d] = rng.uniform(-3, 3);
      v[d] = std::exp(rng.uniform(-4, 2));
    }
    mean_b->value.row(0) = mt.transpose();
    lv_b->value.row(0) = vt.array().log().matrix().transpose();
    pr[1]->value.row(0) = mu.transpose();
    for (int d = 0; d < 2; ++d) pr[2]->value(0, d) = std::log(std::expm1(v[d] - 1e-8));
    const LossTerms lt = m.elbo_loss(x, a, 100 + t, false);
    const double oracle = closed_form_kl(mt, vt, mu, v);
    worst = std::max(worst, std::abs(lt.kl - oracle) / std::max(1.0, oracle));
    CHECK(lt.category == doctest::Approx(0.0));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("elbo: category term is non-negative and K = 1 reduces to the plain CVAE loss") {
  Model m(tiny(3, false), 7);
  Rng rng(8);
  const Matrix x = random_unit(16, 3, rng);
  const Matrix a = random_unit(16, 1, rng);
  const LossTerms lt = m.elbo_loss(x, a, 1, false);
  CHECK(lt.category >= -1e-12);
  CHECK(lt.total == doctest::Approx(lt.recon + lt.kl + lt.category));

  Model one(tiny(1, false), 9);
  LossOptions plain;
  plain.category_term = false;
  const LossTerms a1 = one.elbo_loss(x, a, 3, false, plain);
  const LossTerms a2 = one.elbo_loss(x, a, 3, false);
  CHECK(a1.total == doctest::Approx(a2.total).epsilon(1e-14));
  // plain conditional VAE: MSE + KL(q || N(mu_1, var_1))
  const EncoderOutput e = one.encode(x, a);
  const GmmParams p = one.prior(0.0);
  double kl = 0.0;
  for (int b = 0; b < 16; ++b)
    kl += gaussian_kl(e.mean.row(b).transpose(), e.logvar.row(b).transpose(),
                      p.mean.row(0).transpose(), p.var.row(0).transpose());
  CHECK(a1.kl == doctest::Approx(kl / 16).epsilon(1e-12));
}

TEST_CASE("elbo: full gradient matches central differences") {
  for (bool dep : {false, true}) {
    Model m(tiny(3, dep), 11);
    Rng rng(12);
    const Matrix x = random_unit(6, 3, rng);
    const Matrix a = random_unit(6, 1, rng);
    LossOptions opts;
    opts.recon_weight = 3.0;
    auto loss = [&](bool g) { return m.elbo_loss(x, a, 77, g, opts).total; };
    const auto r = nn::gradient_check(loss, m.params(), 1e-6, 150, 21);
    CHECK(r.coordinates == 150);
    CHECK(r.max_rel_error < 1e-4);
    const auto rp = nn::gradient_check(loss, m.prior_params(), 1e-6, 60, 22);
    CHECK(rp.max_rel_error < 1e-4);
  }
}

TEST_CASE("prior: simplex and positivity over an alpha sweep") {
  Model m(tiny(5, true), 13);
  for (int i = 0; i < 100; ++i) {
    const GmmParams p = m.prior(0.1 + 0.9 * i / 99.0);
    CHECK(std::abs(p.pi.sum() - 1.0) < 1e-12);
    CHECK((p.pi.array() > 0.0).all());
    CHECK((p.var.array() > 0.0).all());
  }
}

TEST_CASE("sample: determinism, units and category frequencies") {
  Model m(tiny(3, false), 14);
  m.prior_params()[0]->value << 0.0, 1.0, -1.0;
  m.normalization().lo = (Vector(3) << -50, -50, 0).finished();
  m.normalization().hi = (Vector(3) << 50, 50, 1).finished();
  const SampleSet s1 = m.sample(0.3, 10000, 99);
  const SampleSet s2 = m.sample(0.3, 10000, 99);
  CHECK((s1.x - s2.x).norm() == 0.0);
  CHECK(s1.category == s2.category);
  CHECK((s1.x.col(0).array() > -50).all());
  CHECK((s1.x.col(0).array() < 50).all());
  const GmmParams p = m.prior(0.3);
  for (int c = 0; c < 3; ++c) {
    const double expected = 10000 * p.pi[c];
    const double sd = std::sqrt(10000 * p.pi[c] * (1 - p.pi[c]));
    CHECK(std::abs(s1.category_counts[c] - expected) < 3 * sd);
  }
}

TEST_CASE("train: loss decreases and reruns are identical") {
  Rng rng(15);
  Matrix x(64, 3);
  Vector a(64);
  for (int i = 0; i < 64; ++i) {
    a[i] = rng.uniform();
    const double c = i % 2 == 0 ? 0.2 : 0.8;
    x.row(i) << c + 0.01 * rng.normal(), 1.0 - c, 0.5 + 0.1 * a[i];
  }
  TrainOptions o;
  o.epochs = 10;
  o.batch = 16;
  o.seed = 5;
  Model m1(tiny(2, false), 3), m2(tiny(2, false), 3);
  const TrainReport r1 = train(m1, x, a, o);
  const TrainReport r2 = train(m2, x, a, o);
  CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
  CHECK(r1.epoch_loss == r2.epoch_loss);
  const Vector w1 = nn::flatten_values(m1.params()), w2 = nn::flatten_values(m2.params());
  CHECK(std::memcmp(w1.data(), w2.data(), w1.size() * sizeof(double)) == 0);
}

TEST_CASE("checkpoint: model round-trips bit for bit") {
  Model m(tiny(4, true), 16);
  m.normalization().lo = Vector::Constant(3, -1.0 / 3.0);
  m.normalization().hi = Vector::Constant(3, 2.0 / 7.0);
  const std::string s = m.to_json().dump();
  Model back = Model::from_json(nlohmann::json::parse(s));
  const Vector a = nn::flatten_values(m.params()), b = nn::flatten_values(back.params());
  CHECK(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  CHECK(back.normalization().lo == m.normalization().lo);
  CHECK(back.normalization().hi == m.normalization().hi);
  CHECK(back.to_json().dump() == s);
}
