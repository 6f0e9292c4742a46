#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "ecs/elliptic.hpp"
#include "ecs/errors.hpp"

namespace ecs {

/// Coordinate species. `X` is an undistinguished coordinate of the
/// mass-model Hamiltonian; x, xt, y, yt are the four groups of the
/// deformed (two-species) operators, in that flat order.
enum class Group { X, x, xt, y, yt };

inline const char* to_string(Group g) {
  switch (g) {
    case Group::X: return "X";
    case Group::x: return "x";
    case Group::xt: return "xt";
    case Group::y: return "y";
    case Group::yt: return "yt";
  }
  return "?";
}

/// Particle count, coupling lambda and masses m_J of the source
/// Hamiltonian, with the power sums |m|, |m^2|, |m^3| cached.
class MassModel {
 public:
  MassModel(complex lambda, std::vector<complex> masses)
      : lambda_(lambda), masses_(std::move(masses)) {
    if (lambda_ == 0.0) throw ConstraintError("lambda must be nonzero");
    if (masses_.empty()) throw ConstraintError("mass model needs N >= 1");
    for (std::size_t j = 0; j < masses_.size(); ++j)
      if (masses_[j] == 0.0)
        throw ConstraintError("mass m_" + std::to_string(j + 1) +
                              " is zero");
    for (complex m : masses_) {
      p1_ += m;
      p2_ += m * m;
      p3_ += m * m * m;
    }
  }

  int size() const { return static_cast<int>(masses_.size()); }
  complex lambda() const { return lambda_; }
  const std::vector<complex>& masses() const { return masses_; }
  complex mass(int j) const { return masses_.at(j); }

  complex sum_m() const { return p1_; }
  complex sum_m2() const { return p2_; }
  complex sum_m3() const { return p3_; }

  /// gamma_JK = lambda (m_J + m_K)(lambda m_J m_K - 1); symmetric in J, K.
  complex gamma(int j, int k) const {
    const complex mj = masses_.at(j), mk = masses_.at(k);
    return lambda_ * (mj + mk) * (lambda_ * mj * mk - 1.0);
  }

 private:
  complex lambda_;
  std::vector<complex> masses_;
  complex p1_{}, p2_{}, p3_{};
};

/// Group sizes (N, Ntilde | M, Mtilde) and coupling of the pair of deformed
/// operators H_{N,Ntilde}(x, xt) and H_{M,Mtilde}(y, yt).
struct DeformedModel {
  int N = 0;
  int Ntilde = 0;
  int M = 0;
  int Mtilde = 0;
  complex lambda{1.0, 0.0};

  void validate() const {
    if (N < 0 || Ntilde < 0 || M < 0 || Mtilde < 0)
      throw ConstraintError("group sizes must be non-negative");
    if (lambda == 0.0) throw ConstraintError("lambda must be nonzero");
  }

  int left_size() const { return N + Ntilde; }
  int right_size() const { return M + Mtilde; }
  int size() const { return left_size() + right_size(); }

  /// Flat layout: x (N), xt (Ntilde), y (M), yt (Mtilde).
  Group group_of(int index) const {
    if (index < N) return Group::x;
    index -= N;
    if (index < Ntilde) return Group::xt;
    index -= Ntilde;
    if (index < M) return Group::y;
    return Group::yt;
  }

  /// Mass assignment (1, -1/lambda, -1, 1/lambda) embedding the deformed
  /// pair into the source Hamiltonian.
  complex embedding_mass(Group g) const {
    switch (g) {
      case Group::x: return 1.0;
      case Group::xt: return -1.0 / lambda;
      case Group::y: return -1.0;
      case Group::yt: return 1.0 / lambda;
      case Group::X: break;
    }
    throw DomainError("embedding_mass: undistinguished coordinate");
  }

  MassModel embedding() const {
    validate();
    std::vector<complex> masses;
    masses.reserve(size());
    for (int i = 0; i < size(); ++i)
      masses.push_back(embedding_mass(group_of(i)));
    return MassModel(lambda, std::move(masses));
  }

  /// (N - M) lambda = Ntilde - Mtilde up to rounding of lambda.
  bool balanced() const {
    const complex lhs = static_cast<double>(N - M) * lambda;
    const double rhs = Ntilde - Mtilde;
    return std::abs(lhs - rhs) <= 1e-14 * (1.0 + std::abs(rhs));
  }

  /// Coefficient 2[(N - M) lambda - Ntilde + Mtilde] of d/dbeta; exactly
  /// zero for balanced parameters.
  complex beta_coefficient() const {
    if (balanced()) return 0.0;
    return 2.0 * (static_cast<double>(N - M) * lambda -
                  static_cast<double>(Ntilde - Mtilde));
  }
};

}  // namespace ecs
