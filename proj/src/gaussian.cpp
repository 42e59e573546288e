#include "qdyn/gaussian.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <numbers>

#include "qdyn/accumulator.hpp"

namespace qdyn {

namespace {

CMatrix checked_inverse(const CMatrix& m, const char* what) {
  Eigen::PartialPivLU<CMatrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond * kMaxCondition >= 1.0)) throw SingularMatrix(std::string(what) + " is singular or ill-conditioned");
  return lu.inverse();
}

void require_square(const CMatrix& m, const char* what) {
  require(m.rows() == m.cols() && m.rows() > 0, std::string(what) + " must be a non-empty square matrix");
}

}  // namespace

LogDet log_determinant(const CMatrix& m) {
  require_square(m, "determinant argument");
  Eigen::PartialPivLU<CMatrix> lu(m);
  LogDet d;
  const CMatrix& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double a = std::abs(u(i, i));
    if (a == 0.0) {
      d.log_abs = -std::numeric_limits<double>::infinity();
      d.phase = 0.0;
      return d;
    }
    d.log_abs += std::log(a);
    d.phase += std::arg(u(i, i));
  }
  if (lu.permutationP().determinant() < 0) d.phase += std::numbers::pi;
  d.phase = std::remainder(d.phase, 2.0 * std::numbers::pi);
  return d;
}

CMatrix mu_from_n(Statistics species, const CMatrix& n) {
  require_square(n, "n");
  const CMatrix id = CMatrix::Identity(n.rows(), n.cols());
  if (species == Statistics::boson) return checked_inverse(id + n, "I + n").transpose();
  return 2.0 * id - checked_inverse(id - n, "I - n").transpose();
}

CMatrix n_from_mu(Statistics species, const CMatrix& mu) {
  require_square(mu, "mu");
  const CMatrix id = CMatrix::Identity(mu.rows(), mu.cols());
  if (species == Statistics::boson) return checked_inverse(mu, "mu").transpose() - id;
  return id - checked_inverse(2.0 * id - mu, "2I - mu").transpose();
}

cplx normalization(Statistics species, const CMatrix& mu) {
  require_square(mu, "mu");
  const CMatrix id = CMatrix::Identity(mu.rows(), mu.cols());
  const LogDet d = log_determinant(species == Statistics::boson ? mu : CMatrix(2.0 * id - mu));
  if (!std::isfinite(d.log_abs)) throw SingularMatrix("normalization: singular determinant");
  if (species == Statistics::boson) return std::polar(std::exp(-d.log_abs), -d.phase);
  return d.value();
}

LogDet log_inner_product(const GaussianPoint& a, const GaussianPoint& b) {
  require(a.species == b.species, "inner product: species mismatch");
  require_square(a.n, "n");
  require(a.n.rows() == b.n.rows() && b.n.rows() == b.n.cols(), "inner product: dimension mismatch");
  const CMatrix id = CMatrix::Identity(a.n.rows(), a.n.cols());
  if (a.species == Statistics::boson) {
    LogDet d = log_determinant(id + a.n + b.n);
    require(std::isfinite(d.log_abs), "inner product: det(I + n + m) vanishes");
    d.log_abs = -d.log_abs;
    d.phase = -d.phase;
    return d;
  }
  return log_determinant((id - a.n) * (id - b.n) + a.n * b.n);
}

cplx inner_product(const GaussianPoint& a, const GaussianPoint& b) { return log_inner_product(a, b).value(); }

void check_physical(const GaussianPoint& point, double tolerance) {
  require_square(point.n, "n");
  require((point.n - point.n.adjoint()).norm() <= tolerance * std::max(1.0, point.n.norm()),
          "physical Gaussian point needs a Hermitian n");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(point.n);
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double v = eig.eigenvalues()[i];
    require(v >= -tolerance, "physical Gaussian point has a negative occupation eigenvalue");
    if (point.species == Statistics::fermion)
      require(v <= 1.0 + tolerance, "physical fermionic Gaussian point has an occupation eigenvalue above 1");
  }
}

Pairing parse_pairing(const std::string& name) {
  if (name == "disjoint") return Pairing::disjoint;
  if (name == "all_pairs") return Pairing::all_pairs;
  if (name == "exact") return Pairing::exact;
  throw InvalidInput("unknown pairing '" + name + "' (expected disjoint|all_pairs|exact)");
}

std::string to_string(Pairing pairing) {
  switch (pairing) {
    case Pairing::disjoint: return "disjoint";
    case Pairing::all_pairs: return "all_pairs";
    case Pairing::exact: return "exact";
  }
  return "?";
}

EntropyEstimate renyi_entropy(std::span<const GaussianPoint> ensemble, Pairing pairing) {
  require(ensemble.size() >= 2, "entropy: need at least 2 samples");
  const auto& first = ensemble.front();
  require_square(first.n, "n");
  for (const auto& p : ensemble) {
    require(p.species == first.species, "entropy: mixed species in one ensemble");
    require(p.n.rows() == first.n.rows() && p.n.cols() == first.n.cols(), "entropy: mixed dimensions");
    require(std::isfinite(p.weight) && p.weight >= 0.0, "entropy: weights must be finite and non-negative");
    require(p.alpha.size() == p.beta.size(), "entropy: displacement needs both alpha and beta");
    if (p.alpha.size() > 0) {
      require(p.species == Statistics::boson, "entropy: displacements are bosonic only");
      require(p.alpha.size() == p.n.rows(), "entropy: displacement length does not match n");
    }
    // a common displacement is a similarity transform and drops out of every trace
    const bool same = p.alpha.size() == first.alpha.size() &&
                      (p.alpha.size() == 0 || (p.alpha == first.alpha && p.beta == first.beta));
    require(same, "entropy: samples with different displacements are not supported");
  }

  EntropyEstimate out;
  const std::size_t n = ensemble.size();
  if (pairing == Pairing::disjoint) {
    MomentAccumulator acc;
    for (std::size_t i = 0; i + 1 < n; i += 2) {
      acc.add(inner_product(ensemble[i], ensemble[i + 1]), ensemble[i].weight * ensemble[i + 1].weight);
      ++out.pair_count;
    }
    require(acc.weight_sum() > 0.0, "entropy: all pair weights vanish");
    out.purity = acc.mean();
    out.purity_error = acc.error().real();
  } else {
    // row sums h_i = sum_{j != i} w_j f_ij, plus the diagonal for the exact policy
    std::vector<cplx> row(n, 0.0);
    std::vector<cplx> diag(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const cplx f = inner_product(ensemble[i], ensemble[j]);
        row[i] += ensemble[j].weight * f;
        row[j] += ensemble[i].weight * f;
        ++out.pair_count;
      }
      if (pairing == Pairing::exact) diag[i] = inner_product(ensemble[i], ensemble[i]);
    }
    double w = 0.0, w2 = 0.0;
    for (const auto& p : ensemble) {
      w += p.weight;
      w2 += p.weight * p.weight;
    }
    cplx total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += ensemble[i].weight * (row[i] + ensemble[i].weight * diag[i]);
    if (pairing == Pairing::exact) {
      require(w > 0.0, "entropy: all weights vanish");
      out.purity = total / (w * w);
      out.pair_count += n;
      out.purity_error = 0.0;
    } else {
      const double denom = w * w - w2;
      require(denom > 0.0, "entropy: need two samples with positive weight");
      out.purity = total / denom;
      // Hoeffding: var(U) ~ 4 var(h_1) / n_eff with h_1(i) the mean pair value of sample i
      MomentAccumulator h1;
      for (std::size_t i = 0; i < n; ++i) {
        const double others = w - ensemble[i].weight;
        if (others > 0.0 && ensemble[i].weight > 0.0) h1.add(row[i] / others, ensemble[i].weight);
      }
      out.purity_error = 2.0 * h1.error().real();
    }
  }

  out.sign_problem = !(out.purity.real() > 0.0);
  out.defined = !out.sign_problem;
  if (out.defined) {
    out.s2 = -std::log(out.purity.real());
    out.error = out.purity_error / out.purity.real();
  } else {
    out.s2 = std::numeric_limits<double>::quiet_NaN();
    out.error = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace qdyn
