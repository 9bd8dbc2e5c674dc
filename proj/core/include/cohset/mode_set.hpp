#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cohset/types.hpp"

namespace cohset {

/// Finite, negation-closed set of Fourier modes S used as the Galerkin basis.
/// Modes are stored in ModeIndex order; `index_of` is the exact inverse of
/// `mode`. Immutable after construction.
class ModeSet {
 public:
  enum class Kind { product_ball, class_union, custom };

  ModeSet() = default;

  /// {m : ||m||_inf <= K} x {n : ||n||_2 <= r}, boundary inclusive.
  static ModeSet product_ball(int K, double r);

  /// {(n1 + k, n2 + l, n1, n2) : |k|, |l| <= K, ||n||_2 <= r}: the union of the
  /// (2K+1)^2 equivalence classes m - n = (k, l), each truncated to the ball.
  static ModeSet class_union(int K, double r);

  /// Arbitrary mode list (sorted and checked for duplicates). Negation closure
  /// is not required here; `assemble` enforces it.
  static ModeSet from_modes(std::vector<ModeIndex> modes);

  std::size_t size() const { return modes_.size(); }
  std::span<const ModeIndex> modes() const { return modes_; }
  const ModeIndex& mode(std::size_t i) const { return modes_[i]; }

  /// Position of `mode`, or -1 when absent.
  std::int64_t find(const ModeIndex& mode) const;
  std::optional<std::size_t> index_of(const ModeIndex& mode) const;
  bool contains(const ModeIndex& mode) const { return find(mode) >= 0; }

  bool negation_closed() const;

  Kind kind() const { return kind_; }
  int K() const { return K_; }
  double r() const { return r_; }
  std::string kind_name() const;

  int max_driving_frequency() const { return max_m_; }
  int max_physical_frequency() const { return max_n_; }

  /// For class_union sets: the class label m - n of mode i.
  IVec2 class_of(std::size_t i) const {
    const auto& md = modes_[i];
    return {md.m[0] - md.n[0], md.m[1] - md.n[1]};
  }

 private:
  void build_lookup();

  std::vector<ModeIndex> modes_;
  // Dense lookup over the bounding box [-max_m, max_m]^2 x [-max_n, max_n]^2.
  std::vector<std::int32_t> lookup_;
  int max_m_ = 0;
  int max_n_ = 0;
  Kind kind_ = Kind::custom;
  int K_ = 0;
  double r_ = 0.0;
};

/// Lattice points n in Z^2 with ||n||_2 <= r, in lexicographic order.
std::vector<IVec2> lattice_ball(double r);

/// CSV `m1,m2,n1,n2` in set order.
void write_modes_csv(const ModeSet& modes, std::ostream& out);
ModeSet read_modes_csv(std::istream& in);

}  // namespace cohset
