#include "ags/cvae.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace ags::cvae {

using nn::Activation;
using nn::Mlp;

namespace {

constexpr double kVarFloor = 1e-8;

double softplus(double r) { return r > 30.0 ? r : std::log1p(std::exp(r)); }
double logistic(double r) { return 1.0 / (1.0 + std::exp(-r)); }

void check_chain(const std::vector<int>& s, const char* name) {
  if (s.size() < 2) throw InvalidInput(std::string("architecture: ") + name + " needs two sizes");
  for (int v : s)
    if (v < 1) throw InvalidInput(std::string("architecture: ") + name + " has a non-positive size");
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

void Architecture::validate() const {
  check_chain(embed_x, "embed_x");
  check_chain(embed_alpha, "embed_alpha");
  check_chain(encode, "encode");
  check_chain(head, "head");
  check_chain(embed_z, "embed_z");
  check_chain(decode, "decode");
  if (embed_alpha.front() != 1) throw InvalidInput("architecture: alpha embedding takes one input");
  if (encode.front() != embed_x.back() + embed_alpha.back())
    throw InvalidInput("architecture: encode input must equal embed_x + embed_alpha outputs");
  if (head.front() != encode.back()) throw InvalidInput("architecture: head input must equal encode output");
  if (embed_z.front() != head.back()) throw InvalidInput("architecture: embed_z input must equal latent dim");
  if (decode.front() != embed_z.back() + embed_alpha.back())
    throw InvalidInput("architecture: decode input must equal embed_z + embed_alpha outputs");
  if (decode.back() != embed_x.front()) throw InvalidInput("architecture: decode output must equal data dim");
  if (components < 1) throw InvalidInput("architecture: need at least one mixture component");
  if (alpha_dependent_prior && prior_hidden < 1) throw InvalidInput("architecture: prior_hidden must be positive");
}

Architecture Architecture::dejong() {
  Architecture a;
  a.embed_x = {2, 32, 64, 64};
  a.embed_alpha = {1, 32, 64, 64};
  a.encode = {128, 64, 64};
  a.head = {64, 32, 2};
  a.embed_z = {2, 32, 64, 64};
  a.decode = {128, 64, 64, 2};
  a.components = 2;
  a.alpha_dependent_prior = false;
  return a;
}

Architecture Architecture::transfer_full() {
  Architecture a;
  a.embed_x = {4, 1024, 1024, 1024, 1024};
  a.embed_alpha = {1, 256, 256, 256, 256};
  a.encode = {1280, 512, 512, 512, 128};
  a.head = {128, 128, 128, 4};
  a.embed_z = {4, 1024, 1024, 1024, 1024};
  a.decode = {1280, 512, 512, 512, 4};
  a.components = 20;
  a.alpha_dependent_prior = true;
  return a;
}

Architecture Architecture::transfer_reduced(int shrink) {
  if (shrink < 1) throw InvalidInput("transfer_reduced: shrink must be >= 1");
  Architecture a = transfer_full();
  auto shrink_hidden = [shrink](std::vector<int>& s, bool keep_first, bool keep_last) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if ((i == 0 && keep_first) || (i + 1 == s.size() && keep_last)) continue;
      s[i] = std::max(1, s[i] / shrink);
    }
  };
  shrink_hidden(a.embed_x, true, false);
  shrink_hidden(a.embed_alpha, true, false);
  shrink_hidden(a.encode, false, false);
  shrink_hidden(a.head, false, true);
  shrink_hidden(a.embed_z, true, false);
  shrink_hidden(a.decode, false, true);
  a.encode.front() = a.embed_x.back() + a.embed_alpha.back();
  a.head.front() = a.encode.back();
  a.decode.front() = a.embed_z.back() + a.embed_alpha.back();
  a.validate();
  return a;
}

nlohmann::json Architecture::to_json() const {
  return {{"embed_x", embed_x}, {"embed_alpha", embed_alpha}, {"encode", encode},
          {"head", head},       {"embed_z", embed_z},         {"decode", decode},
          {"components", components}, {"alpha_dependent_prior", alpha_dependent_prior},
          {"prior_hidden", prior_hidden}};
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  Architecture a;
  a.embed_x = j.at("embed_x").get<std::vector<int>>();
  a.embed_alpha = j.at("embed_alpha").get<std::vector<int>>();
  a.encode = j.at("encode").get<std::vector<int>>();
  a.head = j.at("head").get<std::vector<int>>();
  a.embed_z = j.at("embed_z").get<std::vector<int>>();
  a.decode = j.at("decode").get<std::vector<int>>();
  a.components = j.at("components").get<int>();
  a.alpha_dependent_prior = j.at("alpha_dependent_prior").get<bool>();
  a.prior_hidden = j.at("prior_hidden").get<int>();
  a.validate();
  return a;
}

Vector responsibilities(const Vector& z, const GmmParams& prior) {
  const Eigen::Index k = prior.pi.size();
  Vector s(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double lp = std::log(prior.pi[c]);
    for (Eigen::Index d = 0; d < z.size(); ++d) {
      const double v = prior.var(c, d);
      const double r = z[d] - prior.mean(c, d);
      lp -= 0.5 * (std::log(2.0 * std::numbers::pi * v) + r * r / v);
    }
    s[c] = lp;
  }
  const double mx = s.maxCoeff();
  Vector g = (s.array() - mx).exp();
  return g / g.sum();
}

double gaussian_kl(const Vector& mu_t, const Vector& logvar_t, const Vector& mu, const Vector& var) {
  double kl = 0.0;
  for (Eigen::Index d = 0; d < mu_t.size(); ++d) {
    const double vt = std::exp(logvar_t[d]);
    const double r = mu_t[d] - mu[d];
    kl += 0.5 * (vt / var[d] + r * r / var[d] - 1.0 + std::log(var[d]) - logvar_t[d]);
  }
  return kl;
}

Model::Model(Architecture arch, std::uint64_t init_seed) : arch_(std::move(arch)) {
  arch_.validate();
  build();
  Rng rng(init_seed);
  for (Mlp* m : {&embed_x_, &embed_alpha_, &encode_, &head_mean_, &head_logvar_, &embed_z_, &decode_})
    m->initialize(rng);
  const int k = arch_.components;
  const int m = arch_.latent_dim();
  const double inv_softplus_one = std::log(std::exp(1.0) - 1.0);
  if (arch_.alpha_dependent_prior) {
    for (Mlp* net : {&prior_logits_net_, &prior_mean_net_, &prior_var_net_}) net->initialize(rng);
    // output biases: equal weights, spread means, unit variances
    auto mean_params = prior_mean_net_.params();
    for (Eigen::Index i = 0; i < mean_params.back()->value.size(); ++i)
      mean_params.back()->value.data()[i] = rng.uniform(-1.5, 1.5);
    prior_var_net_.params().back()->value.setConstant(inv_softplus_one);
  } else {
    prior_logits_.value.setZero();
    for (int i = 0; i < k * m; ++i) prior_mean_.value(0, i) = rng.uniform(-1.5, 1.5);
    prior_var_.value.setConstant(inv_softplus_one);
  }
  norm_.lo = Vector::Zero(arch_.data_dim());
  norm_.hi = Vector::Ones(arch_.data_dim());
}

void Model::build() {
  const Activation lr = Activation::kLeakyRelu;
  embed_x_ = Mlp("embed_x", arch_.embed_x, lr, lr);
  embed_alpha_ = Mlp("embed_alpha", arch_.embed_alpha, lr, lr);
  encode_ = Mlp("encode", arch_.encode, lr, lr);
  head_mean_ = Mlp("head_mean", arch_.head, lr, Activation::kIdentity);
  head_logvar_ = Mlp("head_logvar", arch_.head, lr, Activation::kIdentity);
  embed_z_ = Mlp("embed_z", arch_.embed_z, lr, lr);
  decode_ = Mlp("decode", arch_.decode, lr, Activation::kSigmoid);
  const int k = arch_.components;
  const int m = arch_.latent_dim();
  if (arch_.alpha_dependent_prior) {
    const int h = arch_.prior_hidden;
    prior_logits_net_ = Mlp("prior_logits", {1, h, k}, lr, Activation::kIdentity);
    prior_mean_net_ = Mlp("prior_mean", {1, h, k * m}, lr, Activation::kIdentity);
    prior_var_net_ = Mlp("prior_var", {1, h, k * m}, lr, Activation::kIdentity);
  } else {
    prior_logits_ = nn::Param("prior.logits", 1, k);
    prior_mean_ = nn::Param("prior.mean", 1, k * m);
    prior_var_ = nn::Param("prior.var", 1, k * m);
  }
}

EncoderOutput Model::encode(const Matrix& x, const Matrix& alpha) const {
  if (x.rows() != alpha.rows() || alpha.cols() != 1)
    throw InvalidInput("encode: x and alpha must have matching rows, alpha one column");
  const Matrix h = encode_.forward(hstack(embed_x_.forward(x), embed_alpha_.forward(alpha)));
  return {head_mean_.forward(h), head_logvar_.forward(h)};
}

Matrix Model::reparameterize(const Matrix& mean, const Matrix& logvar, std::uint64_t seed) {
  if (mean.rows() != logvar.rows() || mean.cols() != logvar.cols())
    throw InvalidInput("reparameterize: shape mismatch");
  Rng rng(seed);
  Matrix z(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      z(i, j) = mean(i, j) + std::exp(0.5 * logvar(i, j)) * rng.normal();
  return z;
}

Matrix Model::decode(const Matrix& z, const Matrix& alpha) const {
  if (z.cols() != arch_.latent_dim()) throw InvalidInput("decode: latent dimension mismatch");
  if (z.rows() != alpha.rows() || alpha.cols() != 1)
    throw InvalidInput("decode: z and alpha must have matching rows, alpha one column");
  return decode_.forward(hstack(embed_z_.forward(z), embed_alpha_.forward(alpha)));
}

Model::PriorRaw Model::prior_raw(const Matrix& alpha, Mlp::Tape* tp, Mlp::Tape* tm,
                                 Mlp::Tape* tv) const {
  PriorRaw r;
  if (arch_.alpha_dependent_prior) {
    r.logits = prior_logits_net_.forward(alpha, tp);
    r.means = prior_mean_net_.forward(alpha, tm);
    r.rawvar = prior_var_net_.forward(alpha, tv);
  } else {
    const Eigen::Index b = alpha.rows();
    r.logits = prior_logits_.value.replicate(b, 1);
    r.means = prior_mean_.value.replicate(b, 1);
    r.rawvar = prior_var_.value.replicate(b, 1);
  }
  return r;
}

namespace {

GmmParams row_params(const Matrix& logits, const Matrix& means, const Matrix& rawvar, Eigen::Index b,
                     int k, int m) {
  GmmParams p;
  const Vector l = logits.row(b).transpose();
  const Vector e = (l.array() - l.maxCoeff()).exp();
  p.pi = e / e.sum();
  p.mean.resize(k, m);
  p.var.resize(k, m);
  for (int c = 0; c < k; ++c)
    for (int d = 0; d < m; ++d) {
      p.mean(c, d) = means(b, c * m + d);
      p.var(c, d) = softplus(rawvar(b, c * m + d)) + kVarFloor;
    }
  return p;
}

}  // namespace

GmmParams Model::prior(double alpha) const {
  const Matrix a = Matrix::Constant(1, 1, alpha);
  const PriorRaw r = prior_raw(a, nullptr, nullptr, nullptr);
  return row_params(r.logits, r.means, r.rawvar, 0, arch_.components, arch_.latent_dim());
}

LossTerms Model::elbo_loss(const Matrix& x, const Matrix& alpha, std::uint64_t seed, bool with_grad,
                           const LossOptions& opts) {
  if (x.cols() != arch_.data_dim()) throw InvalidInput("elbo_loss: data dimension mismatch");
  if (x.rows() != alpha.rows() || alpha.cols() != 1 || x.rows() == 0)
    throw InvalidInput("elbo_loss: x and alpha must have matching nonzero rows");
  const Eigen::Index bsz = x.rows();
  const int n = arch_.data_dim();
  const int k = arch_.components;
  const int m = arch_.latent_dim();
  const double inv_b = 1.0 / static_cast<double>(bsz);

  Mlp::Tape tx, ta1, te, thm, thv, tz, ta2, td, tpl, tpm, tpv;
  const Matrix ex = embed_x_.forward(x, &tx);
  const Matrix ea1 = embed_alpha_.forward(alpha, &ta1);
  const Matrix h = encode_.forward(hstack(ex, ea1), &te);
  const Matrix mu = head_mean_.forward(h, &thm);
  const Matrix lv = head_logvar_.forward(h, &thv);

  Matrix eps(bsz, m);
  {
    Rng rng(seed);
    for (Eigen::Index i = 0; i < bsz; ++i)
      for (int j = 0; j < m; ++j) eps(i, j) = rng.normal();
  }
  const Matrix sd = (0.5 * lv.array()).exp().matrix();
  const Matrix z = mu + sd.cwiseProduct(eps);

  const Matrix ez = embed_z_.forward(z, &tz);
  const Matrix ea2 = embed_alpha_.forward(alpha, &ta2);
  const Matrix xh = decode_.forward(hstack(ez, ea2), &td);

  const Matrix diff = xh - x;
  LossTerms terms;
  terms.recon = diff.squaredNorm() / static_cast<double>(n) * inv_b;

  const PriorRaw raw = prior_raw(alpha, &tpl, &tpm, &tpv);
  Matrix d_mu = Matrix::Zero(bsz, m), d_lv = Matrix::Zero(bsz, m), d_z = Matrix::Zero(bsz, m);
  Matrix d_logits = Matrix::Zero(bsz, k), d_means = Matrix::Zero(bsz, k * m),
         d_rawvar = Matrix::Zero(bsz, k * m);

  for (Eigen::Index b = 0; b < bsz; ++b) {
    const GmmParams p = row_params(raw.logits, raw.means, raw.rawvar, b, k, m);
    const Vector zb = z.row(b).transpose();
    const Vector gamma = responsibilities(zb, p);
    const Vector mub = mu.row(b).transpose();
    const Vector lvb = lv.row(b).transpose();
    Vector kl(k), a(k);
    for (int c = 0; c < k; ++c) {
      kl[c] = gaussian_kl(mub, lvb, p.mean.row(c).transpose(), p.var.row(c).transpose());
      const double cat = gamma[c] > 0.0 ? std::log(gamma[c]) - std::log(p.pi[c]) : 0.0;
      a[c] = kl[c] + (opts.category_term ? cat : 0.0);
      terms.kl += gamma[c] * kl[c] * inv_b;
      if (opts.category_term && gamma[c] > 0.0) terms.category += gamma[c] * cat * inv_b;
    }
    if (!with_grad) continue;

    // dL/ds_c through the softmax of s_c = log pi_c + log N(z; mu_c, var_c)
    const double mean_a = gamma.dot(a);
    const Vector ds = gamma.array() * (a.array() - mean_a);
    Vector d_logpi = ds;
    if (opts.category_term) d_logpi -= gamma;
    const double sum_dlogpi = d_logpi.sum();
    for (int c = 0; c < k; ++c) d_logits(b, c) = (d_logpi[c] - p.pi[c] * sum_dlogpi) * inv_b;

    for (int c = 0; c < k; ++c) {
      for (int d = 0; d < m; ++d) {
        const double v = p.var(c, d);
        const double rz = zb[d] - p.mean(c, d);
        const double rm = mub[d] - p.mean(c, d);
        const double vt = std::exp(lvb[d]);
        d_z(b, d) += -ds[c] * rz / v * inv_b;
        d_mu(b, d) += gamma[c] * rm / v * inv_b;
        d_lv(b, d) += gamma[c] * 0.5 * (vt / v - 1.0) * inv_b;
        d_means(b, c * m + d) = (-gamma[c] * rm / v + ds[c] * rz / v) * inv_b;
        const double dv = gamma[c] * 0.5 * (1.0 / v - vt / (v * v) - rm * rm / (v * v)) -
                          ds[c] * 0.5 * (1.0 / v - rz * rz / (v * v));
        d_rawvar(b, c * m + d) = dv * logistic(raw.rawvar(b, c * m + d)) * inv_b;
      }
    }
  }
  terms.total = opts.recon_weight * terms.recon + terms.kl + terms.category;
  if (!std::isfinite(terms.total)) {
    std::ostringstream os;
    os << "elbo_loss: non-finite loss (recon " << terms.recon << ", kl " << terms.kl
       << ", category " << terms.category << ")";
    throw std::runtime_error(os.str());
  }
  if (!with_grad) return terms;

  const Matrix d_xh = diff * (2.0 * opts.recon_weight / static_cast<double>(n) * inv_b);
  const Matrix d_dec_in = decode_.backward(td, d_xh);
  const int ez_w = static_cast<int>(ez.cols());
  d_z += embed_z_.backward(tz, d_dec_in.leftCols(ez_w));
  embed_alpha_.backward(ta2, d_dec_in.rightCols(d_dec_in.cols() - ez_w));

  d_mu += d_z;
  d_lv += d_z.cwiseProduct(eps).cwiseProduct(sd) * 0.5;
  Matrix dh = head_mean_.backward(thm, d_mu);
  dh += head_logvar_.backward(thv, d_lv);
  const Matrix d_enc_in = encode_.backward(te, dh);
  const int ex_w = static_cast<int>(ex.cols());
  embed_x_.backward(tx, d_enc_in.leftCols(ex_w));
  embed_alpha_.backward(ta1, d_enc_in.rightCols(d_enc_in.cols() - ex_w));

  if (arch_.alpha_dependent_prior) {
    prior_logits_net_.backward(tpl, d_logits);
    prior_mean_net_.backward(tpm, d_means);
    prior_var_net_.backward(tpv, d_rawvar);
  } else {
    prior_logits_.grad += d_logits.colwise().sum();
    prior_mean_.grad += d_means.colwise().sum();
    prior_var_.grad += d_rawvar.colwise().sum();
  }
  return terms;
}

SampleSet Model::sample(double alpha, int n, std::uint64_t seed) const {
  if (n < 0) throw InvalidInput("sample: negative count");
  const GmmParams p = prior(alpha);
  const int k = arch_.components;
  const int m = arch_.latent_dim();
  Rng rng(seed);
  SampleSet out;
  out.category.resize(n);
  out.category_counts.assign(k, 0);
  Matrix z(n, m);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int c = 0;
    double acc = p.pi[0];
    while (c + 1 < k && u >= acc) acc += p.pi[++c];
    out.category[i] = c;
    ++out.category_counts[c];
    for (int d = 0; d < m; ++d) z(i, d) = p.mean(c, d) + std::sqrt(p.var(c, d)) * rng.normal();
  }
  if (n == 0) {
    out.x.resize(0, arch_.data_dim());
    return out;
  }
  out.x = norm_.invert_rows(decode(z, Matrix::Constant(n, 1, alpha)));
  return out;
}

nn::ParamList Model::params() {
  nn::ParamList out;
  for (Mlp* mlp : {&embed_x_, &embed_alpha_, &encode_, &head_mean_, &head_logvar_, &embed_z_, &decode_}) {
    auto p = mlp->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto pr = prior_params();
  out.insert(out.end(), pr.begin(), pr.end());
  return out;
}

nn::ParamList Model::prior_params() {
  if (!arch_.alpha_dependent_prior) return {&prior_logits_, &prior_mean_, &prior_var_};
  nn::ParamList out;
  for (Mlp* mlp : {&prior_logits_net_, &prior_mean_net_, &prior_var_net_}) {
    auto p = mlp->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::size_t Model::parameter_count() const {
  return nn::parameter_count(const_cast<Model*>(this)->params());
}

nlohmann::json Model::to_json() {
  return {{"architecture", arch_.to_json()},
          {"normalization", norm_.to_json()},
          {"params", nn::values_to_json(params())}};
}

Model Model::from_json(const nlohmann::json& j) {
  Model m;
  m.arch_ = Architecture::from_json(j.at("architecture"));
  m.build();
  m.norm_ = NormalizationSpec::from_json(j.at("normalization"));
  nn::values_from_json(m.params(), j.at("params"));
  return m;
}

TrainReport train(Model& model, const Matrix& x, const Vector& alpha, const TrainOptions& opts,
                  const ExtraLoss& extra, const nn::ParamList& extra_params) {
  if (x.rows() != alpha.size() || x.rows() == 0) throw InvalidInput("train: empty or mismatched data");
  if (opts.epochs < 0 || opts.batch < 1) throw InvalidInput("train: bad epochs or batch size");
  nn::ParamList params = model.params();
  params.insert(params.end(), extra_params.begin(), extra_params.end());
  nn::AdamState adam;
  const int rows = static_cast<int>(x.rows());
  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(derive_seed(opts.seed, 0xA11CE));
  TrainReport report;
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (int i = rows - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<int>(shuffle.below(static_cast<std::uint64_t>(i) + 1))]);
    double sum = 0.0, sum_extra = 0.0;
    for (int start = 0; start < rows; start += opts.batch) {
      const int end = std::min(rows, start + opts.batch);
      const std::vector<int> idx(order.begin() + start, order.begin() + end);
      Matrix xb(end - start, x.cols()), ab(end - start, 1);
      for (int r = 0; r < end - start; ++r) {
        xb.row(r) = x.row(idx[r]);
        ab(r, 0) = alpha[idx[r]];
      }
      nn::zero_grad(params);
      const LossTerms t = model.elbo_loss(xb, ab, derive_seed(opts.seed, ++step), true, opts.loss);
      double loss = t.total;
      if (extra) {
        const double e = extra(idx, true);
        loss += e;
        sum_extra += e * (end - start);
      }
      if (!std::isfinite(loss) || loss > opts.divergence_limit) {
        std::ostringstream os;
        os << "train: diverged at epoch " << epoch << " (loss " << loss << ", recon " << t.recon
           << ", kl " << t.kl << ", category " << t.category << ")";
        throw std::runtime_error(os.str());
      }
      sum += loss * (end - start);
      nn::adam_step(params, adam, opts.adam);
    }
    report.epoch_loss.push_back(sum / rows);
    report.epoch_extra_loss.push_back(sum_extra / rows);
  }
  return report;
}

}  // namespace ags::cvae
