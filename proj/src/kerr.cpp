#include "qdyn/kerr.hpp"

#include <cmath>

namespace qdyn {

KerrMoments kerr_oracle(std::span<const cplx> alpha, const RMatrix& chi, double t) {
  const auto n = static_cast<Eigen::Index>(alpha.size());
  require(chi.rows() == n && chi.cols() == n, "kerr_oracle: chi must match the mode count");
  require((chi - chi.transpose()).norm() <= 1e-12 * (1.0 + chi.norm()),
          "kerr_oracle: chi must be symmetric");
  RVector occ(n);
  for (Eigen::Index i = 0; i < n; ++i) occ[i] = std::norm(alpha[i]);

  // <exp(-i sum_l phi_l N_l)> on the coherent state
  auto phase_average = [&](auto phi) {
    cplx exponent = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) exponent += occ[l] * (std::exp(-kI * phi(l)) - 1.0);
    return std::exp(exponent);
  };

  KerrMoments out;
  out.a.resize(n);
  out.adag_a.resize(n, n);
  out.number_number.resize(n, n);
  out.a_a.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.a[i] = alpha[i] * phase_average([&](Eigen::Index l) { return chi(i, l) * t; });
    for (Eigen::Index j = 0; j < n; ++j) {
      out.adag_a(i, j) = std::conj(alpha[i]) * alpha[j] *
                         phase_average([&](Eigen::Index l) { return (chi(j, l) - chi(i, l)) * t; });
      out.number_number(i, j) = occ[i] * occ[j] + (i == j ? occ[i] : 0.0);
      out.a_a(i, j) = alpha[i] * alpha[j] * std::exp(-kI * chi(j, i) * t) *
                      phase_average([&](Eigen::Index l) { return (chi(i, l) + chi(j, l)) * t; });
    }
  }
  return out;
}

cplx kerr_single_mode_mean(cplx alpha, double chi, double t) {
  return alpha * std::exp(std::norm(alpha) * (std::exp(-kI * chi * t) - 1.0));
}

}  // namespace qdyn
