#include "qdyn/doublewell.hpp"

#include <cmath>
#include <memory>

#include "qdyn/fock.hpp"
#include "qdyn/moments.hpp"

namespace qdyn {

CMatrix beam_splitter_matrix(double mixing_angle, double phase) {
  const double c = std::cos(mixing_angle), s = std::sin(mixing_angle);
  CMatrix u = CMatrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i) {
    u(i, i) = c;
    u(i, 2 + i) = std::polar(s, phase);
    u(2 + i, i) = -std::polar(s, -phase);
    u(2 + i, 2 + i) = c;
  }
  return u;
}

std::vector<DoubleWellRow> run_double_well(const DoubleWellParams& params) {
  require(!params.atoms.empty(), "double well: at least one atom number required");
  require(!params.tau.empty(), "double well: tau grid is empty");
  require(params.a11 > 0.0, "double well: a11 must be positive");
  RMatrix chi(2, 2);
  chi << 1.0, params.a12 / params.a11, params.a12 / params.a11, params.a22 / params.a11;
  const CMatrix splitter = beam_splitter_matrix(params.mixing_angle, params.splitter_phase);

  std::vector<DoubleWellRow> rows;
  for (double atoms : params.atoms) {
    require(atoms > 0.0, "double well: atom number must be positive");
    const double occupancy = params.alpha_squared.value_or(atoms / 4.0);
    require(occupancy > 0.0, "double well: mean occupation must be positive");
    const int cutoff = poisson_cutoff(occupancy, params.truncation_tolerance);
    auto basis = std::make_shared<const FockBasis>(FockBasis::per_mode(2, cutoff));
    const cplx alpha(std::sqrt(occupancy), 0.0);
    const std::array<cplx, 2> amplitudes{alpha, alpha};
    const StateVector initial = coherent_state(amplitudes, basis);
    const auto hamiltonian = few_mode_hamiltonian(CMatrix::Zero(2, 2), chi, basis);
    const Propagator propagator(hamiltonian);

    for (double tau : params.tau) {
      // chi_11 = 1 in these units, so t = tau / N_A
      auto well = std::make_shared<const FockMoments>(propagator.apply(initial, tau / atoms));
      auto both = std::make_shared<const ProductMoments>(
          std::vector<std::shared_ptr<const MomentSource>>{well, well});
      const auto before = schwinger_spins(*well, {{0, 1}}, params.delta_theta);
      LinearTransformMoments mixed(both, splitter);
      const auto after = schwinger_spins(mixed, {{0, 1}, {2, 3}}, params.delta_theta);

      DoubleWellRow row;
      row.atoms = atoms;
      row.tau = tau;
      row.local = local_squeezing(before, 0);
      row.after = entanglement_criteria(after, params.criterion_theta);
      row.truncation_loss = initial.truncation_loss;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace qdyn
