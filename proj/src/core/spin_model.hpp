#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "constants.hpp"
#include "linalg.hpp"

// NV ground-state spin Hamiltonian: electron S=1 with zero-field splitting,
// Zeeman term, effective shift/splitting scalars and optional 14N/13C
// hyperfine couplings. Frequencies in MHz, fields in mT.
namespace nvkit::spin {

struct SpinOperators {
  int dimension = 0;
  ComplexMatrix sx, sy, sz;
};

// Canonical spin matrices (hbar = 1) for dimension 2 (S=1/2) or 3 (S=1).
// Basis is ordered by descending m: (+S, ..., -S).
SpinOperators spin_operators(int dimension);

enum class NuclearSpecies { N14, C13 };

struct HyperfineCoupling {
  NuclearSpecies species = NuclearSpecies::N14;
  double a_parallel = constants::kN14AParallel;  // MHz
  double a_perp = constants::kN14APerp;          // MHz

  int dimension() const { return species == NuclearSpecies::N14 ? 3 : 2; }

  static HyperfineCoupling nitrogen14() { return {}; }
  static HyperfineCoupling carbon13(double a_parallel = constants::kC13AParallel,
                                    double a_perp = 0.0) {
    return {NuclearSpecies::C13, a_parallel, a_perp};
  }
};

struct NvOrientation {
  Vec3 axis = Vec3(1.0, 1.0, 1.0).normalized();

  // The four <111> axes, pairwise at arccos(-1/3):
  // [111], [1-1-1], [-11-1], [-1-11].
  static std::array<NvOrientation, 4> all();
  static NvOrientation from_index(int index);
};

struct FieldEnvironment {
  Vec3 b_lab = Vec3::Zero();  // mT
  double shift_xi = 0.0;         // MHz
  double splitting_delta = 0.0;  // MHz
};

struct SpinSystem {
  double d_zfs = constants::kZeroFieldSplitting;
  double gamma_e = constants::kGammaElectron;  // MHz/mT
  std::vector<HyperfineCoupling> nuclei;
  NvOrientation orientation;

  int nuclear_dimension() const;
  int hilbert_dimension() const { return 3 * nuclear_dimension(); }
  void validate() const;
};

struct HamiltonianMatrix {
  ComplexMatrix entries;  // MHz
  int dimension() const { return static_cast<int>(entries.rows()); }
};

struct FieldProjection {
  double axial = 0.0;
  double transverse = 0.0;
};

// axial = b.axis, transverse = |b - (b.axis) axis|, in the order given.
std::array<FieldProjection, 4> project_field(
    const Vec3& b_lab, std::span<const NvOrientation, 4> orientations);

// Field components in the NV frame (z along the axis). The frame x axis is the
// component of lab z perpendicular to the NV axis (lab x when the axis is
// within ~25 degrees of lab z).
Vec3 field_in_nv_frame(const Vec3& b_lab, const NvOrientation& orientation);

// H = (D + xi) Sz^2 + 2*Delta (Sx^2 - Sy^2) + gamma B.S
//     + sum_k [A_par Sz Iz + A_perp (Sx Ix + Sy Iy)]_k
// Basis: electron index major (ms = +1, 0, -1), nuclei in list order.
HamiltonianMatrix build_hamiltonian(const SpinSystem& system,
                                    const FieldEnvironment& env);

HermitianEigen eigenlevels(const HamiltonianMatrix& h);

// Literal two-line approximation: (D + xi - 2 Delta, D + xi + 2 Delta).
std::pair<double, double> resonance_frequencies_approx(double d, double xi,
                                                       double delta);

// Fraction of an eigenvector's weight on electron ms = 0.
double ms0_character(const ComplexVector& state, int nuclear_dimension);

struct Transition {
  double frequency = 0.0;  // MHz
  // Population of the ms=0-like initial level times the transverse
  // matrix element |<f|Sx|i>|^2 + |<f|Sy|i>|^2. A bare two-level
  // 0 <-> +-1 transition has strength 1; nuclear lines share it.
  double strength = 0.0;
  int initial = 0;  // eigen index, ms=0-like
  int final = 0;    // eigen index, ms=+-1-like
};

// Allowed ms=0 -> ms=+-1 transitions from an exact diagonalization, sorted
// by frequency. Lines with strength below min_strength are dropped.
std::vector<Transition> transitions(const SpinSystem& system,
                                    const FieldEnvironment& env,
                                    double min_strength = 1e-6);

// Electron operator embedded in the full electron (x) nuclei space.
ComplexMatrix electron_operator(const ComplexMatrix& op, int nuclear_dimension);

}  // namespace nvkit::spin
