#include "ags/normalization.hpp"

#include <cmath>

#include "ags/log.hpp"
#include "ags/nn.hpp"

namespace ags {

Vector NormalizationSpec::apply(const Vector& x) const {
  if (x.size() != lo.size()) throw InvalidInput("normalization: dimension mismatch");
  return (x - lo).cwiseQuotient(hi - lo);
}

Vector NormalizationSpec::invert(const Vector& u) const {
  if (u.size() != lo.size()) throw InvalidInput("normalization: dimension mismatch");
  return lo + u.cwiseProduct(hi - lo);
}

Matrix NormalizationSpec::apply_rows(const Matrix& x) const {
  if (x.cols() != lo.size()) throw InvalidInput("normalization: dimension mismatch");
  Matrix out = x.rowwise() - lo.transpose();
  return out.array().rowwise() / (hi - lo).transpose().array();
}

Matrix NormalizationSpec::invert_rows(const Matrix& u) const {
  if (u.cols() != lo.size()) throw InvalidInput("normalization: dimension mismatch");
  Matrix out = u.array().rowwise() * (hi - lo).transpose().array();
  return out.rowwise() + lo.transpose();
}

nlohmann::json NormalizationSpec::to_json() const {
  const std::vector<double> l(lo.data(), lo.data() + lo.size());
  const std::vector<double> h(hi.data(), hi.data() + hi.size());
  return {{"lo", nn::encode_doubles(l)}, {"hi", nn::encode_doubles(h)}};
}

NormalizationSpec NormalizationSpec::from_json(const nlohmann::json& j) {
  const auto l = nn::decode_doubles(j.at("lo").get<std::string>());
  const auto h = nn::decode_doubles(j.at("hi").get<std::string>());
  if (l.size() != h.size()) throw InvalidInput("normalization: lo/hi length mismatch");
  NormalizationSpec s;
  s.lo = Eigen::Map<const Vector>(l.data(), static_cast<Eigen::Index>(l.size()));
  s.hi = Eigen::Map<const Vector>(h.data(), static_cast<Eigen::Index>(h.size()));
  for (Eigen::Index i = 0; i < s.lo.size(); ++i)
    if (!(s.hi[i] > s.lo[i])) throw InvalidInput("normalization: hi must exceed lo");
  return s;
}

NormalizationSpec fit_normalization(const std::vector<Vector>& rows, double margin) {
  if (rows.empty()) throw InvalidInput("fit_normalization: empty dataset");
  if (!(margin >= 0.0)) throw InvalidInput("fit_normalization: negative margin");
  const Eigen::Index n = rows[0].size();
  Vector mn = rows[0], mx = rows[0];
  for (const Vector& r : rows) {
    if (r.size() != n) throw InvalidInput("fit_normalization: ragged rows");
    if (!r.allFinite()) throw InvalidInput("fit_normalization: non-finite value");
    mn = mn.cwiseMin(r);
    mx = mx.cwiseMax(r);
  }
  NormalizationSpec s;
  s.lo.resize(n);
  s.hi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double range = mx[i] - mn[i];
    if (!(range > 0.0)) {
      range = 1e-6 * std::max(1.0, std::abs(mx[i]));
      log::warn("normalization: coordinate " + std::to_string(i) +
                " is constant; range widened to " + std::to_string(range));
      s.lo[i] = mn[i] - 0.5 * range;
      s.hi[i] = mx[i] + 0.5 * range;
      continue;
    }
    s.lo[i] = mn[i] - margin * range;
    s.hi[i] = mx[i] + margin * range;
  }
  return s;
}

}  // namespace ags
