#pragma once

#include <optional>
#include <vector>

#include "qdyn/common.hpp"
#include "qdyn/spins.hpp"

namespace qdyn {

/// Two wells, two internal states, each mode starting in the same coherent state.
/// The wells evolve independently under the intra-well interaction, then pass through
/// a beam splitter between the wells before the spins are measured.
struct DoubleWellParams {
  std::vector<double> atoms{200.0};  // N_A; several values give an atom-number scan
  /// Mean occupation per mode; defaults to N_A / 4 (four modes sharing N_A).
  std::optional<double> alpha_squared;
  /// Scattering lengths a11, a22, a12; chi_ij is proportional to a_ij.
  double a11 = 100.4, a22 = 95.5, a12 = 80.8;
  std::vector<double> tau;  // tau = chi_11 N_A t
  std::optional<double> delta_theta;
  double mixing_angle = kPi / 4;
  double splitter_phase = 0.0;
  CriterionTheta criterion_theta = CriterionTheta::minimize_product;
  double truncation_tolerance = 1e-10;
};

struct DoubleWellRow {
  double atoms = 0.0;
  double tau = 0.0;
  LocalSqueezing local;        // one well before the beam splitter
  EntanglementCriteria after;  // both wells after the beam splitter
  double truncation_loss = 0.0;
};

std::vector<DoubleWellRow> run_double_well(const DoubleWellParams& params);

/// Heisenberg matrix of the inter-well beam splitter on (a1, a2, b1, b2).
CMatrix beam_splitter_matrix(double mixing_angle, double phase);

}  // namespace qdyn
