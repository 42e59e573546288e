#pragma once

#include <span>

#include "qdyn/common.hpp"

namespace qdyn {

/// Closed-form moments for H = 1/2 sum_ij chi_ij a_i^dag a_j^dag a_j a_i acting on a
/// product coherent state, using a_i(t) = exp(-i sum_j chi_ij N_j t) a_i(0).
struct KerrMoments {
  CVector a;               // <a_i>
  CMatrix adag_a;          // <a_i^dag a_j>
  RMatrix number_number;   // <N_i N_j>, constant in time
  CMatrix a_a;             // <a_i a_j>
};

KerrMoments kerr_oracle(std::span<const cplx> alpha, const RMatrix& chi, double t);

/// <a(t)> for the single mode H = (chi/2) a^dag^2 a^2.
cplx kerr_single_mode_mean(cplx alpha, double chi, double t);

}  // namespace qdyn
