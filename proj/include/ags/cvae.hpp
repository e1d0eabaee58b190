#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ags/nn.hpp"
#include "ags/normalization.hpp"

namespace ags::cvae {

/// Layer sizes of every sub-network. The alpha embedding is shared by the
/// encoder and the decoder.
struct Architecture {
  std::vector<int> embed_x;
  std::vector<int> embed_alpha;
  std::vector<int> encode;
  std::vector<int> head;  // one stack each for the mean and the log-variance
  std::vector<int> embed_z;
  std::vector<int> decode;
  int components = 2;
  bool alpha_dependent_prior = false;
  int prior_hidden = 16;  // width of the prior parameter networks

  int data_dim() const { return embed_x.front(); }
  int latent_dim() const { return head.back(); }
  void validate() const;

  /// De Jong network: K = 2, latent 2, alpha-independent prior.
  static Architecture dejong();
  /// Full-size transfer network: K = 20, latent 4, alpha-dependent prior.
  static Architecture transfer_full();
  /// Same topology as transfer_full with every hidden width divided by `shrink`.
  static Architecture transfer_reduced(int shrink);

  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
};

/// Mixture parameters for one alpha.
struct GmmParams {
  Vector pi;       // K
  Matrix mean;     // K x m
  Matrix var;      // K x m, positive
};

/// gamma_c proportional to pi_c N(z; mu_c, diag var_c), via log-sum-exp.
Vector responsibilities(const Vector& z, const GmmParams& prior);

/// KL(N(mu_t, diag exp(logvar_t)) || N(mu, diag var)).
double gaussian_kl(const Vector& mu_t, const Vector& logvar_t, const Vector& mu, const Vector& var);

struct EncoderOutput {
  Matrix mean;    // B x m
  Matrix logvar;  // B x m
};

struct LossTerms {
  double total = 0.0;
  double recon = 0.0;     // mean squared error, averaged over features and batch
  double kl = 0.0;        // sum_c gamma_c KL_c, batch mean
  double category = 0.0;  // sum_c gamma_c log(gamma_c / pi_c), batch mean
};

struct LossOptions {
  double recon_weight = 1.0;  // multiplies the mean squared error
  bool category_term = true;
};

struct SampleSet {
  Matrix x;                     // n x data_dim, denormalized
  std::vector<int> category;    // drawn component per sample
  std::vector<int> category_counts;
};

class Model {
 public:
  Model() = default;
  Model(Architecture arch, std::uint64_t init_seed);

  const Architecture& architecture() const { return arch_; }
  NormalizationSpec& normalization() { return norm_; }
  const NormalizationSpec& normalization() const { return norm_; }

  /// x normalized (B x n), alpha raw (B x 1).
  EncoderOutput encode(const Matrix& x, const Matrix& alpha) const;
  /// z = mean + exp(logvar / 2) * eps with eps from the seeded generator.
  static Matrix reparameterize(const Matrix& mean, const Matrix& logvar, std::uint64_t seed);
  /// Normalized reconstruction in (0, 1)^n.
  Matrix decode(const Matrix& z, const Matrix& alpha) const;
  GmmParams prior(double alpha) const;

  /// Batch-mean loss; accumulates parameter gradients when with_grad.
  LossTerms elbo_loss(const Matrix& x, const Matrix& alpha, std::uint64_t seed, bool with_grad,
                      const LossOptions& opts = {});

  /// c ~ Cat(pi), z ~ N(mu_c, var_c), x = decode(z); returned in data units.
  SampleSet sample(double alpha, int n, std::uint64_t seed) const;

  nn::ParamList params();
  std::size_t parameter_count() const;

  /// Prior parameters only, for tests of the mixture term.
  nn::ParamList prior_params();

  nlohmann::json to_json();
  static Model from_json(const nlohmann::json& j);

 private:
  struct PriorRaw {
    Matrix logits;   // B x K
    Matrix means;    // B x K*m
    Matrix rawvar;   // B x K*m
  };
  PriorRaw prior_raw(const Matrix& alpha, nn::Mlp::Tape* tp, nn::Mlp::Tape* tm,
                     nn::Mlp::Tape* tv) const;
  void build();

  Architecture arch_;
  NormalizationSpec norm_;
  nn::Mlp embed_x_, embed_alpha_, encode_, head_mean_, head_logvar_, embed_z_, decode_;
  // alpha-dependent prior networks
  nn::Mlp prior_logits_net_, prior_mean_net_, prior_var_net_;
  // alpha-independent prior constants (1 x K, 1 x K*m, 1 x K*m)
  nn::Param prior_logits_, prior_mean_, prior_var_;
};

struct TrainOptions {
  int epochs = 50;
  int batch = 128;
  nn::AdamOptions adam;
  std::uint64_t seed = 0;
  LossOptions loss;
  double divergence_limit = 1e6;
};

/// Extra loss evaluated on the same mini-batch (row indices into the
/// training set); it must accumulate gradients into `extra_params`.
using ExtraLoss = std::function<double(const std::vector<int>& rows, bool with_grad)>;

struct TrainReport {
  std::vector<double> epoch_loss;        // total (ELBO plus extra) per epoch
  std::vector<double> epoch_extra_loss;  // extra term per epoch
};

/// Mini-batch Adam on the ELBO (plus the optional extra term) over rows of
/// x (normalized) and alpha. Deterministic given the seed.
TrainReport train(Model& model, const Matrix& x, const Vector& alpha, const TrainOptions& opts,
                  const ExtraLoss& extra = nullptr, const nn::ParamList& extra_params = {});

}  // namespace ags::cvae
