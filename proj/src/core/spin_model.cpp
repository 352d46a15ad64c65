#include "spin_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace nvkit::spin {

SpinOperators spin_operators(int dimension) {
  if (dimension != 2 && dimension != 3)
    throw InvalidArgument("spin_operators: unsupported dimension " +
                          std::to_string(dimension));
  const double s = 0.5 * (dimension - 1);
  SpinOperators ops;
  ops.dimension = dimension;
  ops.sz = ComplexMatrix::Zero(dimension, dimension);
  ComplexMatrix raise = ComplexMatrix::Zero(dimension, dimension);
  for (int i = 0; i < dimension; ++i) {
    const double m = s - i;
    ops.sz(i, i) = m;
    // <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    if (i > 0) raise(i - 1, i) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  const ComplexMatrix lower = raise.adjoint();
  ops.sx = 0.5 * (raise + lower);
  ops.sy = Complex(0.0, -0.5) * (raise - lower);
  return ops;
}

std::array<NvOrientation, 4> NvOrientation::all() {
  const double k = 1.0 / std::sqrt(3.0);
  return {NvOrientation{Vec3(k, k, k)}, NvOrientation{Vec3(k, -k, -k)},
          NvOrientation{Vec3(-k, k, -k)}, NvOrientation{Vec3(-k, -k, k)}};
}

NvOrientation NvOrientation::from_index(int index) {
  if (index < 0 || index > 3)
    throw InvalidArgument("NV orientation index must be 0..3, got " +
                          std::to_string(index));
  return all()[static_cast<std::size_t>(index)];
}

int SpinSystem::nuclear_dimension() const {
  int dim = 1;
  for (const auto& n : nuclei) dim *= n.dimension();
  return dim;
}

void SpinSystem::validate() const {
  require(std::isfinite(d_zfs) && d_zfs > 0.0, "d_zfs must be positive");
  require(std::isfinite(gamma_e), "gamma_e must be finite");
  require(std::fabs(orientation.axis.norm() - 1.0) <= 1e-12,
          "orientation axis must be a unit vector");
  long dim = 3;
  for (const auto& n : nuclei) {
    require(std::isfinite(n.a_parallel) && std::isfinite(n.a_perp),
            "hyperfine couplings must be finite");
    dim *= n.dimension();
    require(dim <= 18, "Hilbert dimension exceeds 18");
  }
}

std::array<FieldProjection, 4> project_field(
    const Vec3& b_lab, std::span<const NvOrientation, 4> orientations) {
  std::array<FieldProjection, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec3& axis = orientations[i].axis;
    const double axial = b_lab.dot(axis);
    out[i] = {axial, (b_lab - axial * axis).norm()};
  }
  return out;
}

Vec3 field_in_nv_frame(const Vec3& b_lab, const NvOrientation& orientation) {
  const Vec3 z = orientation.axis;
  Vec3 ref = Vec3::UnitZ();
  if (std::fabs(ref.dot(z)) > 0.9) ref = Vec3::UnitX();
  const Vec3 x = (ref - ref.dot(z) * z).normalized();
  const Vec3 y = z.cross(x);
  return {b_lab.dot(x), b_lab.dot(y), b_lab.dot(z)};
}

ComplexMatrix electron_operator(const ComplexMatrix& op, int nuclear_dimension) {
  return kron(op, ComplexMatrix::Identity(nuclear_dimension, nuclear_dimension));
}

HamiltonianMatrix build_hamiltonian(const SpinSystem& system,
                                    const FieldEnvironment& env) {
  system.validate();
  if (!env.b_lab.allFinite() || !std::isfinite(env.shift_xi) ||
      !std::isfinite(env.splitting_delta))
    throw InvalidArgument("field environment has non-finite components");

  const SpinOperators s = spin_operators(3);
  const int nuc_dim = system.nuclear_dimension();
  const Vec3 b = field_in_nv_frame(env.b_lab, system.orientation);

  const ComplexMatrix sz2 = s.sz * s.sz;
  ComplexMatrix electron = (system.d_zfs + env.shift_xi) * sz2 +
                           2.0 * env.splitting_delta * (s.sx * s.sx - s.sy * s.sy) +
                           system.gamma_e * (b.x() * s.sx + b.y() * s.sy + b.z() * s.sz);
  ComplexMatrix h = electron_operator(electron, nuc_dim);

  // Hyperfine terms: electron (x) [1 ... I_k ... 1].
  int before = 1;
  for (std::size_t k = 0; k < system.nuclei.size(); ++k) {
    const HyperfineCoupling& n = system.nuclei[k];
    const SpinOperators ik = spin_operators(n.dimension());
    const int after = nuc_dim / (before * n.dimension());
    auto embed = [&](const ComplexMatrix& e_op, const ComplexMatrix& n_op) {
      const ComplexMatrix nuclear =
          kron(kron(ComplexMatrix::Identity(before, before), n_op),
               ComplexMatrix::Identity(after, after));
      return kron(e_op, nuclear);
    };
    h += n.a_parallel * embed(s.sz, ik.sz) +
         n.a_perp * (embed(s.sx, ik.sx) + embed(s.sy, ik.sy));
    before *= n.dimension();
  }
  return {h};
}

HermitianEigen eigenlevels(const HamiltonianMatrix& h) {
  return jacobi_eigen(h.entries);
}

std::pair<double, double> resonance_frequencies_approx(double d, double xi,
                                                       double delta) {
  return {d + xi - 2.0 * delta, d + xi + 2.0 * delta};
}

double ms0_character(const ComplexVector& state, int nuclear_dimension) {
  // ms = 0 is the middle electron block.
  return state.segment(nuclear_dimension, nuclear_dimension).squaredNorm();
}

std::vector<Transition> transitions(const SpinSystem& system,
                                    const FieldEnvironment& env,
                                    double min_strength) {
  const HamiltonianMatrix h = build_hamiltonian(system, env);
  const HermitianEigen eig = eigenlevels(h);
  const int nuc_dim = system.nuclear_dimension();
  const int dim = h.dimension();

  // The nuc_dim states with the largest ms=0 weight form the ms=0 manifold.
  std::vector<int> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> character(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k)
    character[static_cast<std::size_t>(k)] = ms0_character(eig.vectors.col(k), nuc_dim);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return character[static_cast<std::size_t>(a)] > character[static_cast<std::size_t>(b)];
  });
  std::vector<bool> is_ms0(static_cast<std::size_t>(dim), false);
  for (int k = 0; k < nuc_dim; ++k) is_ms0[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

  const SpinOperators s = spin_operators(3);
  const ComplexMatrix sx = eig.vectors.adjoint() * electron_operator(s.sx, nuc_dim) * eig.vectors;
  const ComplexMatrix sy = eig.vectors.adjoint() * electron_operator(s.sy, nuc_dim) * eig.vectors;
  const double population = 1.0 / nuc_dim;

  std::vector<Transition> out;
  for (int i = 0; i < dim; ++i) {
    if (!is_ms0[static_cast<std::size_t>(i)]) continue;
    for (int f = 0; f < dim; ++f) {
      if (is_ms0[static_cast<std::size_t>(f)]) continue;
      const double strength =
          population * (std::norm(sx(f, i)) + std::norm(sy(f, i)));
      if (strength < min_strength) continue;
      out.push_back({eig.values(f) - eig.values(i), strength, i, f});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Transition& a, const Transition& b) {
    return a.frequency < b.frequency;
  });
  return out;
}

}  // namespace nvkit::spin
